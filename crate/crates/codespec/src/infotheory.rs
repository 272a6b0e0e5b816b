//! Closed-form entropy and channel-capacity results, each paired with an
//! independent brute-force oracle.
//!
//! Everything is denominated in bits (base-2 logs throughout).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BA_MAX_ALPHABET: usize = 4096;

/// An i.i.d. sparse input: `n` features, each zeroed independently with
/// probability `S`, with elementwise entropy `H_elem` bits before
/// sparsification.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SparseSpec {
    pub n: usize,
    pub s: f64,
    pub h_elem: f64,
}

impl SparseSpec {
    pub fn new(n: usize, s: f64, h_elem: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::value("S must lie in [0, 1]"));
        }
        if !(h_elem > 0.0) {
            return Err(Error::value("H_elem must be positive"));
        }
        Ok(SparseSpec { n, s, h_elem })
    }
}

/// A bank of `m` independent neurons of per-neuron capacity `C_base` bits,
/// subject to dropout at rate `D`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub c_base: f64,
    pub m: usize,
    pub d: f64,
}

impl ChannelSpec {
    pub fn new(c_base: f64, m: usize, d: f64) -> Result<Self> {
        if !(c_base > 0.0) {
            return Err(Error::value("C_base must be positive"));
        }
        if m == 0 {
            return Err(Error::value("m must be at least 1"));
        }
        if !(0.0..1.0).contains(&d) {
            return Err(Error::value("D must lie in [0, 1)"));
        }
        Ok(ChannelSpec { c_base, m, d })
    }
}

/// Two-sided capacity bound in bits. The lower bound uses the additive form
/// from the construction `H(X) = log(2^C_base - 1)`; the multiplicative
/// `(1 - eps)` variant of the theorem statement is reported alongside.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CapacityBounds {
    pub lower: f64,
    pub upper: f64,
    /// `-log2(1 - 2^-C_base)`, the statement's epsilon.
    pub epsilon: f64,
    /// `(1 - eps) (1 - D) C_base m`, the statement's multiplicative bound.
    pub lower_multiplicative: f64,
}

/// Row-stochastic transition matrix `P(y | x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteChannel {
    transition: Vec<Vec<f64>>,
}

impl DiscreteChannel {
    pub fn new(transition: Vec<Vec<f64>>) -> Result<Self> {
        if transition.is_empty() || transition[0].is_empty() {
            return Err(Error::value("channel must have at least one input and output"));
        }
        let ny = transition[0].len();
        for (x, row) in transition.iter().enumerate() {
            if row.len() != ny {
                return Err(Error::value("ragged transition matrix"));
            }
            if row.iter().any(|p| *p < 0.0 || !p.is_finite()) {
                return Err(Error::value(format!("negative entry in row {x}")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::value(format!("row {x} sums to {sum}, not 1")));
            }
        }
        Ok(DiscreteChannel { transition })
    }

    pub fn n_inputs(&self) -> usize {
        self.transition.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.transition[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.transition
    }

    /// Read a channel from a CSV of row-stochastic rows.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let (data, _) = crate::activation_io::read_csv_raw(path)?;
        let rows = (0..data.nrows())
            .map(|i| (0..data.ncols()).map(|j| data[(i, j)]).collect())
            .collect();
        DiscreteChannel::new(rows)
    }

    pub fn to_csv(&self, path: &Path) -> Result<()> {
        let data = nalgebra::DMatrix::from_fn(self.n_inputs(), self.n_outputs(), |i, j| {
            self.transition[i][j]
        });
        crate::activation_io::write_csv_raw(&data, None, path)
    }
}

/// Binary entropy in bits; endpoints return 0 by continuity.
pub fn binary_entropy(s: f64) -> f64 {
    assert!((0.0..=1.0).contains(&s), "S must lie in [0, 1]");
    if s == 0.0 || s == 1.0 {
        return 0.0;
    }
    -s * s.log2() - (1.0 - s) * (1.0 - s).log2()
}

/// Entropy of the S-sparsified i.i.d. vector:
/// `n h2(S) + n (1 - S) H_elem` bits.
pub fn sparse_entropy(spec: &SparseSpec) -> f64 {
    let n = spec.n as f64;
    n * binary_entropy(spec.s) + n * (1.0 - spec.s) * spec.h_elem
}

/// Brute-force oracle: enumerate the full joint distribution of the
/// sparsified vector and compute its exact Shannon entropy. The alphabet
/// lists `(symbol, probability)` pairs for the nonzero symbols.
pub fn sparse_entropy_bruteforce(alphabet: &[(i64, f64)], s: f64, n: usize) -> Result<f64> {
    if n == 0 || n > 6 {
        return Err(Error::value("n must be in 1..=6 for enumeration"));
    }
    if alphabet.is_empty() || alphabet.len() > 8 {
        return Err(Error::value("alphabet must have 1..=8 symbols"));
    }
    if alphabet.iter().any(|(sym, _)| *sym == 0) {
        return Err(Error::value("alphabet must not contain 0 (reserved for sparsified entries)"));
    }
    let psum: f64 = alphabet.iter().map(|(_, p)| p).sum();
    if (psum - 1.0).abs() > 1e-9 || alphabet.iter().any(|(_, p)| *p < 0.0) {
        return Err(Error::value("alphabet probabilities must be a distribution"));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::value("S must lie in [0, 1]"));
    }

    // Elementwise distribution: 0 with prob S, symbol j with prob (1-S) p_j.
    let mut elem = vec![s];
    elem.extend(alphabet.iter().map(|(_, p)| (1.0 - s) * p));
    let k = elem.len();

    let mut entropy = 0.0;
    let outcomes = k.pow(n as u32);
    for idx in 0..outcomes {
        let mut rest = idx;
        let mut p = 1.0;
        for _ in 0..n {
            p *= elem[rest % k];
            rest /= k;
        }
        if p > 0.0 {
            entropy -= p * p.log2();
        }
    }
    Ok(entropy)
}

/// Compression rate `R = 1 - S + h2(S) / H` achievable for an S-sparse
/// input of per-element entropy `H` bits.
pub fn compression_rate(s: f64, h: f64) -> f64 {
    assert!(h > 0.0, "H must be positive");
    1.0 - s + binary_entropy(s) / h
}

/// Hidden dimensions needed per input feature under optimal coding; equal
/// to the compression rate.
pub fn dims_per_feature(s: f64, h: f64) -> f64 {
    compression_rate(s, h)
}

/// Capacity bounds for `m` neurons with dropout rate `D`.
pub fn dropout_capacity_bounds(spec: &ChannelSpec) -> CapacityBounds {
    let m = spec.m as f64;
    let log_term = (1.0 - 2f64.powf(-spec.c_base)).log2();
    let upper = (1.0 - spec.d) * spec.c_base * m;
    let lower = ((1.0 - spec.d) * (spec.c_base + log_term) * m).max(0.0);
    let epsilon = -log_term;
    CapacityBounds {
        lower,
        upper,
        epsilon,
        lower_multiplicative: ((1.0 - epsilon) * (1.0 - spec.d) * spec.c_base * m).max(0.0),
    }
}

/// Dropout channel on `alphabet` symbols: any nonzero input is forced to
/// symbol 0 with probability `D`, symbol 0 passes through.
pub fn dropout_channel_matrix(alphabet: usize, d: f64) -> Result<DiscreteChannel> {
    if alphabet < 2 {
        return Err(Error::value("alphabet must have at least 2 symbols"));
    }
    if alphabet > BA_MAX_ALPHABET {
        return Err(Error::value(format!("alphabet limited to {BA_MAX_ALPHABET}")));
    }
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::value("D must lie in [0, 1]"));
    }
    let mut rows = vec![vec![0.0; alphabet]; alphabet];
    rows[0][0] = 1.0;
    for (x, row) in rows.iter_mut().enumerate().skip(1) {
        row[0] = d;
        row[x] += 1.0 - d;
    }
    DiscreteChannel::new(rows)
}

/// n-bit erasure channel: `2^n` inputs, outputs the input with probability
/// `1 - D` or a distinguished erasure symbol (last column) with
/// probability `D`.
pub fn erasure_channel_matrix(n_bits: usize, d: f64) -> Result<DiscreteChannel> {
    if n_bits == 0 || n_bits > 10 {
        return Err(Error::value("n_bits must be in 1..=10"));
    }
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::value("D must lie in [0, 1]"));
    }
    let k = 1usize << n_bits;
    let mut rows = vec![vec![0.0; k + 1]; k];
    for (x, row) in rows.iter_mut().enumerate() {
        row[x] = 1.0 - d;
        row[k] = d;
    }
    DiscreteChannel::new(rows)
}

/// Blahut-Arimoto capacity with a guaranteed bracket: returns
/// `(lower, upper)` with `upper - lower <= tol`.
pub fn blahut_arimoto_bracket(
    channel: &DiscreteChannel,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, f64)> {
    if channel.n_inputs() > BA_MAX_ALPHABET {
        return Err(Error::value(format!("alphabet limited to {BA_MAX_ALPHABET}")));
    }
    let nx = channel.n_inputs();
    let ny = channel.n_outputs();
    let p = channel.rows();
    let mut r = vec![1.0 / nx as f64; nx];
    let mut q = vec![0.0; ny];
    let mut d = vec![0.0; nx];
    for _ in 0..max_iter {
        for (y, qy) in q.iter_mut().enumerate() {
            *qy = (0..nx).map(|x| r[x] * p[x][y]).sum();
        }
        for (x, dx) in d.iter_mut().enumerate() {
            *dx = (0..ny)
                .filter(|&y| p[x][y] > 0.0)
                .map(|y| p[x][y] * (p[x][y] / q[y]).log2())
                .sum();
        }
        let lower: f64 = (0..nx).map(|x| r[x] * d[x]).sum();
        let upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if upper - lower <= tol {
            return Ok((lower.max(0.0), upper.max(0.0)));
        }
        let mut z = 0.0;
        for (rx, dx) in r.iter_mut().zip(&d) {
            *rx *= dx.exp2();
            z += *rx;
        }
        for rx in r.iter_mut() {
            *rx /= z;
        }
    }
    Err(Error::Convergence(format!(
        "Blahut-Arimoto bracket wider than {tol} after {max_iter} iterations"
    )))
}

/// Channel capacity in bits (midpoint of the Blahut-Arimoto bracket).
pub fn blahut_arimoto(channel: &DiscreteChannel, tol: f64, max_iter: usize) -> Result<f64> {
    let (lo, hi) = blahut_arimoto_bracket(channel, tol, max_iter)?;
    Ok(0.5 * (lo + hi))
}

/// Upper bound on the entropy of `m` neurons at `n_bits` precision whose
/// variances decay as `i^alpha`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PowerLawEntropyBound {
    /// Stirling form `m n - |alpha| m log2(m/e)`.
    pub stirling_bits: f64,
    /// Pre-Stirling sum `m n - |alpha| log2(m!)`.
    pub exact_bits: f64,
}

pub fn powerlaw_entropy_bound(m: usize, n_bits: f64, alpha: f64) -> PowerLawEntropyBound {
    assert!(m >= 1 && n_bits > 0.0);
    let mf = m as f64;
    let log2_factorial: f64 = (1..=m).map(|i| (i as f64).log2()).sum();
    PowerLawEntropyBound {
        stirling_bits: mf * n_bits - alpha.abs() * mf * (mf / std::f64::consts::E).log2(),
        exact_bits: mf * n_bits - alpha.abs() * log2_factorial,
    }
}

/// Effective capacity of a power-law code, floored at zero.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EffectiveCapacity {
    pub bits: f64,
    /// Set when the power-law penalty exceeded `C` and the value was floored.
    pub floored: bool,
}

pub fn effective_capacity(c: f64, m: usize, alpha: f64) -> EffectiveCapacity {
    assert!(c > 0.0, "C must be positive");
    let mf = m as f64;
    let penalty = alpha.abs() * mf * (mf / std::f64::consts::E).log2();
    let raw = c - penalty;
    EffectiveCapacity { bits: raw.max(0.0), floored: raw < 0.0 }
}

/// Empirical mutual information of a joint count table, in bits.
pub fn plug_in_mi(joint_counts: &[Vec<u64>]) -> Result<f64> {
    if joint_counts.is_empty() || joint_counts[0].is_empty() {
        return Err(Error::value("empty count table"));
    }
    let ny = joint_counts[0].len();
    if joint_counts.iter().any(|r| r.len() != ny) {
        return Err(Error::value("ragged count table"));
    }
    let total: u64 = joint_counts.iter().flatten().sum();
    if total == 0 {
        return Err(Error::value("all counts are zero"));
    }
    let tf = total as f64;
    let row_sums: Vec<f64> = joint_counts.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let mut col_sums = vec![0.0; ny];
    for row in joint_counts {
        for (y, c) in row.iter().enumerate() {
            col_sums[y] += *c as f64;
        }
    }
    let mut mi = 0.0;
    for (x, row) in joint_counts.iter().enumerate() {
        for (y, c) in row.iter().enumerate() {
            if *c > 0 {
                let pxy = *c as f64 / tf;
                mi += pxy * (pxy * tf * tf / (row_sums[x] * col_sums[y])).log2();
            }
        }
    }
    Ok(mi.max(0.0))
}
