//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::TAU;

use num_complex::Complex64;

/// `d * n` reduced modulo `modulus` without losing the low bits of the
/// product.
pub fn exact_mod_product(d: f64, n: u64, modulus: f64) -> f64 {
    let hi = d * n as f64;
    let lo = d.mul_add(n as f64, -hi);
    (hi.rem_euclid(modulus) + lo).rem_euclid(modulus)
}

/// `sum_{t<N} e^{-j 2 pi d t / N}` by N-term summation.
pub fn geometric_sum_brute(d: f64, n: usize) -> Complex64 {
    let nf = n as f64;
    (0..n as u64)
        .map(|t| Complex64::from_polar(1.0, -TAU * exact_mod_product(d, t, nf) / nf))
        .sum()
}

/// Plain O(N^2) DFT, `Y_k = sum_n x_n e^{-j 2 pi k n / N}`.
pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, v)| v * Complex64::from_polar(1.0, -TAU * ((k * t) % n) as f64 / n as f64))
                .sum()
        })
        .collect()
}

/// Trace of the materialized outer product `e^m x e^{k,i}` with
/// `e^m[r] = e^{j r 2 pi (-m) / N}` and `e^{k,i}[c] = e^{j c 2 pi (k - i) / N}`.
pub fn trace_by_matrix(k: usize, i: usize, m: f64, n: usize) -> Complex64 {
    let w = |d: f64, t: usize| Complex64::from_polar(1.0, TAU * d * t as f64 / n as f64);
    let col: Vec<Complex64> = (0..n).map(|r| w(-m, r)).collect();
    let row: Vec<Complex64> = (0..n).map(|c| w(k as f64 - i as f64, c)).collect();
    let matrix: Vec<Vec<Complex64>> = col.iter().map(|a| row.iter().map(|b| a * b).collect()).collect();
    (0..n).map(|r| matrix[r][r]).sum()
}

/// `psi(i)` from pairwise inner products of synthesized waveforms.
pub fn psi_by_inner_products(i: usize, m: f64, n: usize, epsilon: f64) -> usize {
    let attacked: Vec<Complex64> = (0..n)
        .map(|t| Complex64::from_polar(1.0, TAU * (i as f64 + m) * t as f64 / n as f64))
        .collect();
    (0..n)
        .filter(|&k| k != i)
        .filter(|&k| {
            let o: Complex64 = attacked
                .iter()
                .enumerate()
                .map(|(t, a)| Complex64::from_polar(1.0, TAU * (k * t % n) as f64 / n as f64) * a.conj())
                .sum();
            o.norm() > epsilon * n as f64
        })
        .count()
}
