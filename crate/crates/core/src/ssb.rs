//! Synchronization signal block layout.
//!
//! Four OFDM symbols by 240 subcarriers. Symbol 1 carries PSS, symbols 2 and
//! 4 are PBCH across the whole block, symbol 3 carries SSS in the middle
//! with 48 PBCH subcarriers on either side. PBCH-DMRS sits on every fourth
//! PBCH subcarrier starting at `dmrs_shift`.
//!
//! Symbols are 0-based here; reports and CSV output use 1-based symbols.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use crate::error::{Error, Result};

pub const SSB_SYMBOLS: usize = 4;
pub const SSB_SUBCARRIERS: usize = 240;
/// PBCH subcarriers on each side of SSS in symbol 3.
pub const PBCH_SIDE_BAND: usize = 48;
pub const DEFAULT_SSS_WIDTH: usize = 127;

pub const PBCH_TOTAL_RES: usize = 576;
pub const PBCH_PAYLOAD_RES: usize = 432;
pub const PBCH_DMRS_RES: usize = 144;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReKind {
    Pss,
    Sss,
    PbchPayload,
    PbchDmrs,
    Unused,
}

impl ReKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReKind::Pss => "pss",
            ReKind::Sss => "sss",
            ReKind::PbchPayload => "pbch",
            ReKind::PbchDmrs => "dmrs",
            ReKind::Unused => "unused",
        }
    }

    fn glyph(self) -> char {
        match self {
            ReKind::Pss => 'P',
            ReKind::Sss => 'S',
            ReKind::PbchPayload => 'b',
            ReKind::PbchDmrs => 'D',
            ReKind::Unused => '.',
        }
    }

    pub fn is_pbch(self) -> bool {
        matches!(self, ReKind::PbchPayload | ReKind::PbchDmrs)
    }
}

impl fmt::Display for ReKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Resource element position, both 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RePosition {
    pub symbol: usize,
    pub subcarrier: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsbGrid {
    cells: Vec<Vec<ReKind>>,
    dmrs_shift: usize,
}

impl SsbGrid {
    /// Wraps arbitrary cells without validation; see [`validate_grid`].
    pub fn from_cells(cells: Vec<Vec<ReKind>>, dmrs_shift: usize) -> Self {
        Self { cells, dmrs_shift }
    }

    pub fn n_symbols(&self) -> usize {
        self.cells.len()
    }

    pub fn n_subcarriers(&self) -> usize {
        self.cells.first().map_or(0, Vec::len)
    }

    pub fn dmrs_shift(&self) -> usize {
        self.dmrs_shift
    }

    pub fn cells(&self) -> &[Vec<ReKind>] {
        &self.cells
    }

    pub fn kind(&self, symbol: usize, subcarrier: usize) -> Option<ReKind> {
        self.cells.get(symbol)?.get(subcarrier).copied()
    }

    pub fn set(&mut self, symbol: usize, subcarrier: usize, kind: ReKind) -> Result<()> {
        let cell = self
            .cells
            .get_mut(symbol)
            .and_then(|row| row.get_mut(subcarrier))
            .ok_or_else(|| Error::invalid("position", format!("({symbol}, {subcarrier}) outside grid")))?;
        *cell = kind;
        Ok(())
    }

    pub fn count(&self, kind: ReKind) -> usize {
        self.cells.iter().flatten().filter(|&&k| k == kind).count()
    }

    pub fn count_in_symbol(&self, symbol: usize, pred: impl Fn(ReKind) -> bool) -> usize {
        self.cells.get(symbol).map_or(0, |row| row.iter().filter(|&&k| pred(k)).count())
    }

    pub fn summary(&self) -> GridSummary {
        let pbch = self.count(ReKind::PbchPayload) + self.count(ReKind::PbchDmrs);
        let dmrs = self.count(ReKind::PbchDmrs);
        GridSummary {
            pss: self.count(ReKind::Pss),
            sss: self.count(ReKind::Sss),
            pbch_total: pbch,
            pbch_payload: self.count(ReKind::PbchPayload),
            pbch_dmrs: dmrs,
            dmrs_fraction: if pbch == 0 { 0.0 } else { dmrs as f64 / pbch as f64 },
            dmrs_per_symbol: (0..self.n_symbols())
                .map(|s| self.count_in_symbol(s, |k| k == ReKind::PbchDmrs))
                .collect(),
        }
    }

    /// One row per symbol, one glyph per subcarrier.
    pub fn ascii_map(&self) -> String {
        let mut out = String::new();
        for (s, row) in self.cells.iter().enumerate() {
            let _ = write!(out, "{:>2} ", s + 1);
            out.extend(row.iter().map(|k| k.glyph()));
            out.push('\n');
        }
        out
    }

    /// `symbol,subcarrier,kind` with 1-based symbols.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("symbol,subcarrier,kind\n");
        for (s, row) in self.cells.iter().enumerate() {
            for (k, kind) in row.iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", s + 1, k, kind);
            }
        }
        out
    }
}

impl Default for SsbGrid {
    fn default() -> Self {
        build_ssb_grid(0, DEFAULT_SSS_WIDTH).expect("default SSB parameters are valid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSummary {
    pub pss: usize,
    pub sss: usize,
    pub pbch_total: usize,
    pub pbch_payload: usize,
    pub pbch_dmrs: usize,
    pub dmrs_fraction: f64,
    pub dmrs_per_symbol: Vec<usize>,
}

impl fmt::Display for GridSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "PSS REs:          {}", self.pss)?;
        writeln!(f, "SSS REs:          {}", self.sss)?;
        writeln!(f, "PBCH REs:         {}", self.pbch_total)?;
        writeln!(f, "  payload:        {}", self.pbch_payload)?;
        writeln!(f, "  DMRS:           {}", self.pbch_dmrs)?;
        writeln!(f, "DMRS fraction:    {:.2}%", 100.0 * self.dmrs_fraction)?;
        let per: Vec<String> = self
            .dmrs_per_symbol
            .iter()
            .enumerate()
            .map(|(s, c)| format!("{}:{}", s + 1, c))
            .collect();
        write!(f, "DMRS per symbol:  {}", per.join(" "))
    }
}

/// First subcarrier of a centered band of `width` inside the SSB.
fn centered_start(width: usize) -> usize {
    (SSB_SUBCARRIERS - width) / 2
}

pub fn build_ssb_grid(dmrs_shift: usize, sss_width: usize) -> Result<SsbGrid> {
    if dmrs_shift > 3 {
        return Err(Error::invalid("dmrs_shift", format!("{dmrs_shift} not in [0, 3]")));
    }
    if sss_width == 0 || sss_width + 2 * PBCH_SIDE_BAND > SSB_SUBCARRIERS {
        return Err(Error::invalid(
            "sss_width",
            format!("{sss_width} must be in [1, {}]", SSB_SUBCARRIERS - 2 * PBCH_SIDE_BAND),
        ));
    }
    let mut cells = vec![vec![ReKind::Unused; SSB_SUBCARRIERS]; SSB_SYMBOLS];
    let sync_start = centered_start(sss_width);
    for k in sync_start..sync_start + sss_width {
        cells[0][k] = ReKind::Pss;
        cells[2][k] = ReKind::Sss;
    }
    let pbch = |k: usize| {
        if k % 4 == dmrs_shift {
            ReKind::PbchDmrs
        } else {
            ReKind::PbchPayload
        }
    };
    for k in 0..SSB_SUBCARRIERS {
        cells[1][k] = pbch(k);
        cells[3][k] = pbch(k);
    }
    for k in (0..PBCH_SIDE_BAND).chain(SSB_SUBCARRIERS - PBCH_SIDE_BAND..SSB_SUBCARRIERS) {
        cells[2][k] = pbch(k);
    }
    Ok(SsbGrid { cells, dmrs_shift })
}

pub fn dmrs_positions(grid: &SsbGrid) -> BTreeSet<RePosition> {
    grid.cells
        .iter()
        .enumerate()
        .flat_map(|(s, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &k)| k == ReKind::PbchDmrs)
                .map(move |(k, _)| RePosition { symbol: s, subcarrier: k })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridViolation {
    Dimensions { symbols: usize, subcarriers: usize },
    RaggedRow { symbol: usize, len: usize },
    DmrsShift(usize),
    PbchTotal(usize),
    PbchPayload(usize),
    PbchDmrs(usize),
    SymbolPbch { symbol: usize, expected: usize, found: usize },
    SideBand { symbol: usize, below: usize, above: usize },
}

impl fmt::Display for GridViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridViolation::Dimensions { symbols, subcarriers } => write!(
                f,
                "grid is {symbols}x{subcarriers}, expected {SSB_SYMBOLS}x{SSB_SUBCARRIERS}"
            ),
            GridViolation::RaggedRow { symbol, len } => {
                write!(f, "symbol {} has {len} subcarriers", symbol + 1)
            }
            GridViolation::DmrsShift(s) => write!(f, "dmrs_shift {s} not in [0, 3]"),
            GridViolation::PbchTotal(c) => write!(f, "{c} PBCH REs, expected {PBCH_TOTAL_RES}"),
            GridViolation::PbchPayload(c) => {
                write!(f, "{c} PBCH payload REs, expected {PBCH_PAYLOAD_RES}")
            }
            GridViolation::PbchDmrs(c) => write!(f, "{c} PBCH-DMRS REs, expected {PBCH_DMRS_RES}"),
            GridViolation::SymbolPbch { symbol, expected, found } => write!(
                f,
                "symbol {} has {found} PBCH REs, expected {expected}",
                symbol + 1
            ),
            GridViolation::SideBand { symbol, below, above } => write!(
                f,
                "symbol {} has {below} PBCH REs below and {above} above SSS, expected {PBCH_SIDE_BAND} each",
                symbol + 1
            ),
        }
    }
}

/// Every violated invariant; empty iff the grid is valid.
pub fn validate_grid(grid: &SsbGrid) -> Vec<GridViolation> {
    let mut out = Vec::new();
    let symbols = grid.n_symbols();
    let subcarriers = grid.n_subcarriers();
    if symbols != SSB_SYMBOLS || subcarriers != SSB_SUBCARRIERS {
        out.push(GridViolation::Dimensions { symbols, subcarriers });
    }
    for (s, row) in grid.cells.iter().enumerate() {
        if row.len() != subcarriers {
            out.push(GridViolation::RaggedRow { symbol: s, len: row.len() });
        }
    }
    if grid.dmrs_shift > 3 {
        out.push(GridViolation::DmrsShift(grid.dmrs_shift));
    }
    let payload = grid.count(ReKind::PbchPayload);
    let dmrs = grid.count(ReKind::PbchDmrs);
    if payload + dmrs != PBCH_TOTAL_RES {
        out.push(GridViolation::PbchTotal(payload + dmrs));
    }
    if payload != PBCH_PAYLOAD_RES {
        out.push(GridViolation::PbchPayload(payload));
    }
    if dmrs != PBCH_DMRS_RES {
        out.push(GridViolation::PbchDmrs(dmrs));
    }
    let expected = [0, SSB_SUBCARRIERS, 2 * PBCH_SIDE_BAND, SSB_SUBCARRIERS];
    for (s, &want) in expected.iter().enumerate().take(symbols) {
        let found = grid.count_in_symbol(s, ReKind::is_pbch);
        if found != want {
            out.push(GridViolation::SymbolPbch { symbol: s, expected: want, found });
        }
    }
    if let Some(row) = grid.cells.get(2) {
        if let (Some(first), Some(last)) = (
            row.iter().position(|&k| k == ReKind::Sss),
            row.iter().rposition(|&k| k == ReKind::Sss),
        ) {
            let below = row[..first].iter().filter(|k| k.is_pbch()).count();
            let above = row[last + 1..].iter().filter(|k| k.is_pbch()).count();
            if below != PBCH_SIDE_BAND || above != PBCH_SIDE_BAND {
                out.push(GridViolation::SideBand { symbol: 2, below, above });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_accounting() {
        let g = SsbGrid::default();
        let s = g.summary();
        assert_eq!(s.pbch_total, 576);
        assert_eq!(s.pbch_payload, 432);
        assert_eq!(s.pbch_dmrs, 144);
        assert!((s.dmrs_fraction - 0.25).abs() < 1e-15);
        assert_eq!(s.sss, 127);
        assert_eq!(s.pss, 127);
        assert!(validate_grid(&g).is_empty());
    }

    #[test]
    fn dmrs_per_symbol_counts() {
        let g = build_ssb_grid(0, DEFAULT_SSS_WIDTH).unwrap();
        assert_eq!(g.summary().dmrs_per_symbol, vec![0, 60, 24, 60]);
    }

    #[test]
    fn every_accepted_parameter_pair_is_valid() {
        for shift in 0..4 {
            for width in 1..=(SSB_SUBCARRIERS - 2 * PBCH_SIDE_BAND) {
                let g = build_ssb_grid(shift, width).unwrap();
                assert!(validate_grid(&g).is_empty(), "shift {shift} width {width}");
                let pos = dmrs_positions(&g);
                assert_eq!(pos.len(), PBCH_TOTAL_RES / 4);
                assert!(pos
                    .iter()
                    .all(|p| g.kind(p.symbol, p.subcarrier).unwrap().is_pbch()));
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_ssb_grid(4, 127).is_err());
        assert!(build_ssb_grid(0, 145).is_err());
        assert!(build_ssb_grid(0, 0).is_err());
    }

    #[test]
    fn dmrs_positions_deterministic_and_shift_disjoint() {
        let g0 = build_ssb_grid(0, 127).unwrap();
        let g1 = build_ssb_grid(1, 127).unwrap();
        let a = dmrs_positions(&g0);
        assert_eq!(a.len(), 144);
        assert_eq!(a, dmrs_positions(&g0));
        assert!(a.is_disjoint(&dmrs_positions(&g1)));
    }

    #[test]
    fn flipped_dmrs_cell_flags_both_counts() {
        let mut g = SsbGrid::default();
        let p = *dmrs_positions(&g).iter().next().unwrap();
        g.set(p.symbol, p.subcarrier, ReKind::PbchPayload).unwrap();
        let report = validate_grid(&g);
        assert!(report.contains(&GridViolation::PbchPayload(433)));
        assert!(report.contains(&GridViolation::PbchDmrs(143)));
        assert!(!report.iter().any(|v| matches!(v, GridViolation::PbchTotal(_))));
    }

    #[test]
    fn narrow_grid_flags_dimensions() {
        let mut cells = SsbGrid::default().cells().to_vec();
        for row in &mut cells {
            row.pop();
        }
        let report = validate_grid(&SsbGrid::from_cells(cells, 0));
        assert!(report
            .iter()
            .any(|v| matches!(v, GridViolation::Dimensions { subcarriers: 239, .. })));
    }

    #[test]
    fn csv_has_one_row_per_cell() {
        let csv = SsbGrid::default().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("symbol,subcarrier,kind"));
        assert_eq!(lines.count(), 960);
        assert!(csv.contains("\n2,0,dmrs\n"));
    }
}
