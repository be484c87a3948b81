use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nrjam::antijam::{correct_report, verify_restoration};
use nrjam::channel::add_awgn;
use nrjam::config::Config;
use nrjam::detector::{disambiguate_cause, DetectionReport, ReferenceSource};
use nrjam::iq::{iq_csv, read_iq, read_reference, reference_csv, write_iq_binary};
use nrjam::jammer::{apply_frequency_shift, JammerConfig};
use nrjam::ofdm::{synthesize_with_spacing, DEFAULT_SCS_HZ};
use nrjam::sim::{
    compute_roc, compute_subcarrier_roc, emit_outputs, roc_csv, roc_streamed, run_monte_carlo_to_file, sweep, RocCurve,
    TrialRecord, TrialSummary,
};
use nrjam::ssb::{build_ssb_grid, validate_grid};
use nrjam::{Error, OfdmSymbol, Result};

#[derive(Parser)]
#[command(name = "nrjam", version, about = "OFDM jamming simulation, detection and correction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the SSB resource grid and its PBCH accounting.
    Grid {
        #[arg(long, default_value_t = 0)]
        dmrs_shift: usize,
        #[arg(long, default_value_t = 127)]
        sss_width: usize,
        /// Write `symbol,subcarrier,kind` rows here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write a (possibly attacked) symbol and its reference to disk.
    Synth(SynthArgs),
    /// Run the loss-of-orthogonality test on a received symbol.
    Detect(DetectArgs),
    /// Run the trials of a config and print detection rates.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Stream every trial record here as JSON lines.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Write `roc.csv`, `summary.csv` and `records.jsonl` for one config.
    Roc {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write `roc_subcarrier.csv`, scoring every subcarrier separately.
        #[arg(long)]
        per_subcarrier: bool,
    },
    /// One ROC per FFT size.
    Sweep {
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_SCS_HZ)]
    scs_hz: f64,
    /// Subcarrier to shift; omit for a clean symbol.
    #[arg(long)]
    target: Option<usize>,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    offset: f64,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    phase: f64,
    #[arg(long, allow_negative_numbers = true)]
    snr_db: Option<f64>,
    /// Seed of the reference content, shared with `detect --reference-seed`.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output IQ file; `.csv` writes text, anything else binary.
    #[arg(long)]
    iq: PathBuf,
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    iq: PathBuf,
    /// Reference CSV (`subcarrier,re,im`).
    #[arg(long, conflicts_with = "reference_seed", required_unless_present = "reference_seed")]
    reference: Option<PathBuf>,
    /// Regenerate the reference from the seed used by `synth`.
    #[arg(long)]
    reference_seed: Option<u64>,
    /// Report CSV; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Needed for CSV input to recover the subcarrier spacing.
    #[arg(long)]
    sample_rate: Option<f64>,
    /// Analyze the first `n` samples.
    #[arg(long)]
    n: Option<usize>,
    /// Alternative FFT sizes checked when every subcarrier looks attacked.
    #[arg(long, value_delimiter = ',')]
    candidates: Vec<usize>,
    /// Apply the configured correction and add before/after columns.
    #[arg(long)]
    correct: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    path.map_or_else(|| Ok(Config::default()), Config::load)
}

fn grid(dmrs_shift: usize, sss_width: usize, csv: Option<PathBuf>) -> Result<()> {
    let g = build_ssb_grid(dmrs_shift, sss_width)?;
    println!("{}", g.summary());
    print!("{}", g.ascii_map());
    let violations = validate_grid(&g);
    for v in &violations {
        println!("violation: {v}");
    }
    if let Some(p) = csv {
        std::fs::write(p, g.to_csv())?;
    }
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let symbols = ReferenceSource::SeededQpsk { seed: a.seed }.symbols(a.n)?;
    let clean = synthesize_with_spacing(&symbols, a.n, a.scs_hz)?;
    let mut x = match a.target {
        Some(t) => {
            let cfg = JammerConfig::frequency_shift(vec![t], a.offset, a.amplitude, a.phase);
            apply_frequency_shift(&clean, &symbols, &cfg)?.0
        }
        None => clean,
    };
    if let Some(snr) = a.snr_db {
        x = add_awgn(&x, snr, a.seed.wrapping_add(1))?;
    }
    if a.iq.extension().is_some_and(|e| e == "csv") {
        std::fs::write(&a.iq, iq_csv(x.samples()))?;
    } else {
        write_iq_binary(&a.iq, x.samples(), x.sample_rate())?;
    }
    if let Some(r) = a.reference {
        std::fs::write(r, reference_csv(&symbols))?;
    }
    Ok(())
}

fn report_csv(report: &DetectionReport, correction: Option<(usize, usize)>) -> String {
    let mut out = String::from("subcarrier,psi,s,m_hat,verdict");
    if correction.is_some() {
        out.push_str(",psi_before,psi_after");
    }
    out.push('\n');
    for i in 0..report.n {
        let _ = write!(
            out,
            "{},{},{:.6},{:.6},{}",
            i,
            report.psi.values()[i],
            report.statistic[i],
            report.m_hat[i],
            report.verdicts[i]
        );
        if let Some((before, after)) = correction {
            let _ = write!(out, ",{before},{after}");
        }
        out.push('\n');
    }
    out
}

fn detect(a: DetectArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let data = read_iq(&a.iq)?;
    let n = a.n.unwrap_or(data.samples.len());
    if n > data.samples.len() {
        return Err(Error::SizeMismatch {
            expected: n,
            found: data.samples.len(),
        });
    }
    let scs = match (data.sample_rate, a.sample_rate) {
        (_, Some(fs)) | (Some(fs), None) => fs / n as f64,
        (None, None) => cfg.signal.scs_hz,
    };
    let source = match (&a.reference, a.reference_seed) {
        (Some(path), _) => ReferenceSource::Fixed(read_reference(path)?),
        (None, Some(seed)) => ReferenceSource::SeededQpsk { seed },
        (None, None) => return Err(Error::Config("a reference is required".into())),
    };
    let analysis = if a.candidates.is_empty() {
        let symbol = OfdmSymbol::new(data.samples[..n].to_vec(), scs)?;
        let report = nrjam::detector::detect(&symbol, &source.symbols(n)?, &cfg.detector)?;
        (report.cause, report)
    } else {
        let out = disambiguate_cause(&data.samples, &source, n, scs, &a.candidates, &cfg.detector)?;
        (out.cause, out.report)
    };
    let (cause, report) = analysis;
    let correction = if a.correct {
        let symbol = OfdmSymbol::new(data.samples[..n].to_vec(), scs)?;
        let reference = source.symbols(n)?;
        let (fixed, _) = correct_report(&symbol, &reference, &report, &cfg.antijam)?;
        let outcome = verify_restoration(&symbol, &fixed, &reference, &cfg.detector)?;
        Some((outcome.psi_before, outcome.psi_after))
    } else {
        None
    };
    let csv = report_csv(&report, correction);
    match a.out {
        Some(p) => std::fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    println!("cause: {cause}");
    Ok(())
}

fn simulate(config: &Path, records: Option<PathBuf>) -> Result<()> {
    let cfg = Config::load(config)?;
    let trial = cfg.trial_config()?;
    let path = records.unwrap_or_else(|| std::env::temp_dir().join(format!("nrjam-{}.jsonl", std::process::id())));
    let summaries: Vec<TrialSummary> = run_monte_carlo_to_file(&trial, &path)?;
    let tau = cfg.detector.tau;
    let (points, auc) = compute_roc(&summaries, &[tau])?;
    let p = points[0];
    let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.4}"));
    println!("trials: {}", trial.trials);
    println!("tau: {tau}");
    println!("p_d: {}", fmt(p.p_d));
    println!("p_f: {}", fmt(p.p_f));
    println!("auc (single threshold): {}", fmt(auc));
    println!("records: {}", path.display());
    Ok(())
}

fn roc(config: &Path, out: &Path, per_subcarrier: bool) -> Result<()> {
    let cfg = Config::load(config)?;
    let trial = cfg.trial_config()?;
    std::fs::create_dir_all(out)?;
    let records_path = out.join("records.jsonl");
    let curve = roc_streamed(&trial, &records_path)?;
    if per_subcarrier {
        let records = std::fs::read_to_string(&records_path)?
            .lines()
            .map(|l| serde_json::from_str::<TrialRecord>(l).map_err(|e| Error::Parse(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let (points, auc) = compute_subcarrier_roc(&records, &trial.tau_grid)?;
        let sub = RocCurve { points, auc, ..curve.clone() };
        std::fs::write(out.join("roc_subcarrier.csv"), roc_csv(&[sub]))?;
    }
    emit_outputs(&[curve], out)
}

fn run_sweep(ns: Vec<usize>, config: Option<&Path>, trials: Option<u64>, out: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let mut base = cfg.trial_config()?;
    if config.is_none() {
        base.snr_db = Some(5.0);
        base.jammer = Some(Default::default());
    }
    if let Some(t) = trials {
        base.trials = t;
    }
    let ns = if ns.is_empty() { cfg.run.sweep_n.clone() } else { ns };
    let curves = sweep(&base, &ns)?;
    emit_outputs(&curves, out)?;
    for c in &curves {
        println!("N={} auc={}", c.n, c.auc.map_or("NA".into(), |a| format!("{a:.6}")));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Grid { dmrs_shift, sss_width, csv } => grid(dmrs_shift, sss_width, csv),
        Command::Synth(a) => synth(a),
        Command::Detect(a) => detect(a),
        Command::Simulate { config, records } => simulate(&config, records),
        Command::Roc { config, out, per_subcarrier } => roc(&config, &out, per_subcarrier),
        Command::Sweep { n, config, trials, out } => run_sweep(n, config.as_deref(), trials, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
