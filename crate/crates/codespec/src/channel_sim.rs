//! Monte Carlo simulation of information survival through cascaded
//! dropout layers under different coding schemes.
//!
//! Codes repair between layers: surviving redundancy is re-established
//! before the next round of erasures, so a repetition code loses a symbol
//! only when all copies die in a single layer, and a linear code loses a
//! block only when the surviving coded bits no longer determine the
//! payload.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infotheory::plug_in_mi;
use crate::rng::stream_rng;

/// Coding scheme carried through the cascade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Code {
    /// One symbol per neuron, no redundancy, never recovered.
    Naive,
    /// `k` copies per symbol, re-replicated after every layer.
    Repetition(usize),
    /// `k_payload` bits encoded into `m_code` GF(2) coded bits with a
    /// random generator matrix; decoded by Gaussian elimination over the
    /// surviving positions, re-encoded per layer.
    Linear { k_payload: usize, m_code: usize },
}

/// Cascade simulation parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CascadeConfig {
    pub d: f64,
    pub layers: usize,
    pub code: Code,
    /// Bits per payload symbol (for the linear code the payload width is
    /// `k_payload` instead).
    pub alphabet_bits: usize,
    pub trials: usize,
    pub seed: u64,
}

impl CascadeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.d) {
            return Err(Error::value("D must lie in [0, 1)"));
        }
        if self.layers == 0 || self.trials == 0 {
            return Err(Error::value("layers and trials must be at least 1"));
        }
        let bits = self.symbol_bits();
        if bits == 0 || bits > 12 {
            return Err(Error::value("symbol width must be in 1..=12 bits"));
        }
        match self.code {
            Code::Naive => {}
            Code::Repetition(k) if k >= 1 => {}
            Code::Repetition(_) => return Err(Error::value("repetition factor must be >= 1")),
            Code::Linear { k_payload, m_code } => {
                if k_payload == 0 || k_payload > m_code || m_code > 4096 {
                    return Err(Error::value("need 1 <= k_payload <= m_code <= 4096"));
                }
            }
        }
        Ok(())
    }

    /// Width in bits of the symbol tracked by the MI estimator.
    pub fn symbol_bits(&self) -> usize {
        match self.code {
            Code::Linear { k_payload, .. } => k_payload,
            _ => self.alphabet_bits,
        }
    }
}

/// Per-layer outcome of a cascade simulation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CascadeResult {
    /// Empirical mutual information per layer, `layers + 1` entries with
    /// layer 0 being the noiseless input.
    pub per_layer_mi: Vec<f64>,
    /// `C (1 - D)^l` reference curve for the naive code.
    pub theoretical_naive: Vec<f64>,
    /// `C (1 - D)`, the error-corrected ceiling.
    pub theoretical_ceiling: f64,
    /// Fraction of payload symbols still recoverable per layer.
    pub survival_fraction: Vec<f64>,
}

/// Run the cascade: draw uniform payload symbols, push them through
/// `layers` rounds of erasure and (code-dependent) repair, and estimate
/// per-layer mutual information with the plug-in estimator.
pub fn simulate_cascade(config: &CascadeConfig) -> Result<CascadeResult> {
    config.validate()?;
    let bits = config.symbol_bits();
    let n_symbols = 1usize << bits;
    let erased = n_symbols; // extra output column
    let layers = config.layers;

    // counts[l][x][y]: joint (input symbol, layer-l output) occurrences
    let mut counts = vec![vec![vec![0u64; n_symbols + 1]; n_symbols]; layers + 1];
    let mut alive_per_layer = vec![0u64; layers + 1];

    for trial in 0..config.trials {
        let mut rng = stream_rng(config.seed, trial as u64 + 1);
        let x = rng.random_range(0..n_symbols);
        counts[0][x][x] += 1;
        alive_per_layer[0] += 1;

        let mut alive = true;
        let generator = match config.code {
            Code::Linear { k_payload, m_code } => {
                Some(Gf2Matrix::random_full_rank(k_payload, m_code, &mut rng))
            }
            _ => None,
        };
        for layer in 1..=layers {
            if alive {
                alive = match config.code {
                    Code::Naive => rng.random::<f64>() >= config.d,
                    Code::Repetition(k) => {
                        let mut any = false;
                        for _ in 0..k {
                            if rng.random::<f64>() >= config.d {
                                any = true;
                            }
                        }
                        any
                    }
                    Code::Linear { m_code, k_payload } => {
                        let surviving: Vec<usize> = (0..m_code)
                            .filter(|_| rng.random::<f64>() >= config.d)
                            .collect();
                        generator.as_ref().unwrap().column_rank(&surviving) == k_payload
                    }
                };
            }
            if alive {
                counts[layer][x][x] += 1;
                alive_per_layer[layer] += 1;
            } else {
                counts[layer][x][erased] += 1;
            }
        }
    }

    let per_layer_mi = counts
        .iter()
        .map(|c| plug_in_mi(c))
        .collect::<Result<Vec<f64>>>()?;
    let survival_fraction = alive_per_layer
        .iter()
        .map(|a| *a as f64 / config.trials as f64)
        .collect();
    let (theoretical_naive, theoretical_ceiling) =
        theoretical_curves(config.d, layers, bits as f64);
    Ok(CascadeResult { per_layer_mi, theoretical_naive, theoretical_ceiling, survival_fraction })
}

/// Reference curves: `naive[l] = C (1 - D)^l` and the ceiling `C (1 - D)`.
pub fn theoretical_curves(d: f64, layers: usize, c: f64) -> (Vec<f64>, f64) {
    let naive = (0..=layers).map(|l| c * (1.0 - d).powi(l as i32)).collect();
    (naive, c * (1.0 - d))
}

/// One row of a linear-code rate sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateSweepPoint {
    pub k_payload: usize,
    pub rate: f64,
    pub success_prob: f64,
}

/// Empirical single-layer decode success probability for payload sizes
/// approaching (and exceeding) the `(1 - D) m_code` ceiling.
pub fn linear_code_rate_sweep(
    d: f64,
    m_code: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<RateSweepPoint>> {
    if m_code == 0 || m_code > 4096 {
        return Err(Error::value("m_code must be in 1..=4096"));
    }
    let fractions = [0.5, 0.6, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0];
    let mut ks: Vec<usize> = fractions
        .iter()
        .map(|f| ((f * m_code as f64).round() as usize).clamp(1, m_code))
        .collect();
    ks.dedup();
    ks.iter()
        .map(|&k| {
            let p = decode_success_prob(d, m_code, k, trials, seed)?;
            Ok(RateSweepPoint { k_payload: k, rate: k as f64 / m_code as f64, success_prob: p })
        })
        .collect()
}

/// Probability that a random `k x m` GF(2) generator still has full row
/// rank on the columns surviving one erasure layer.
pub fn decode_success_prob(
    d: f64,
    m_code: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if k == 0 || k > m_code || m_code > 4096 {
        return Err(Error::value("need 1 <= k <= m_code <= 4096"));
    }
    if trials == 0 {
        return Err(Error::value("trials must be at least 1"));
    }
    if !(0.0..1.0).contains(&d) {
        return Err(Error::value("D must lie in [0, 1)"));
    }
    let mut successes = 0usize;
    for trial in 0..trials {
        let mut rng = stream_rng(seed, trial as u64 + 1);
        let g = Gf2Matrix::random_full_rank(k, m_code, &mut rng);
        let surviving: Vec<usize> =
            (0..m_code).filter(|_| rng.random::<f64>() >= d).collect();
        if g.column_rank(&surviving) == k {
            successes += 1;
        }
    }
    Ok(successes as f64 / trials as f64)
}

/// Bit-packed GF(2) matrix, one `u64` word run per row.
pub struct Gf2Matrix {
    rows: Vec<Vec<u64>>,
    n_cols: usize,
}

impl Gf2Matrix {
    pub fn random<R: Rng>(n_rows: usize, n_cols: usize, rng: &mut R) -> Self {
        let words = n_cols.div_ceil(64);
        let rows = (0..n_rows)
            .map(|_| {
                let mut row: Vec<u64> = (0..words).map(|_| rng.random()).collect();
                let tail = n_cols % 64;
                if tail != 0 {
                    *row.last_mut().unwrap() &= (1u64 << tail) - 1;
                }
                row
            })
            .collect();
        Gf2Matrix { rows, n_cols }
    }

    /// Random generator conditioned on full row rank, so the code is
    /// lossless when nothing is erased. Rejection rate is at most ~29%
    /// (square case) and negligible for n_cols > n_rows.
    pub fn random_full_rank<R: Rng>(n_rows: usize, n_cols: usize, rng: &mut R) -> Self {
        assert!(n_rows <= n_cols, "cannot have full row rank with n_rows > n_cols");
        let all: Vec<usize> = (0..n_cols).collect();
        loop {
            let g = Gf2Matrix::random(n_rows, n_cols, rng);
            if g.column_rank(&all) == n_rows {
                return g;
            }
        }
    }

    pub fn from_rows(rows: Vec<Vec<u64>>, n_cols: usize) -> Self {
        Gf2Matrix { rows, n_cols }
    }

    pub fn bit(&self, r: usize, c: usize) -> bool {
        (self.rows[r][c / 64] >> (c % 64)) & 1 == 1
    }

    /// Rank of the submatrix restricted to `columns`, by Gaussian
    /// elimination over packed rows.
    pub fn column_rank(&self, columns: &[usize]) -> usize {
        debug_assert!(columns.iter().all(|&c| c < self.n_cols));
        let s = columns.len();
        let words = s.div_ceil(64).max(1);
        // Repack each row onto the surviving columns.
        let mut work: Vec<Vec<u64>> = self
            .rows
            .iter()
            .map(|row| {
                let mut packed = vec![0u64; words];
                for (j, &c) in columns.iter().enumerate() {
                    if (row[c / 64] >> (c % 64)) & 1 == 1 {
                        packed[j / 64] |= 1u64 << (j % 64);
                    }
                }
                packed
            })
            .collect();

        let mut rank = 0usize;
        for col in 0..s {
            let word = col / 64;
            let mask = 1u64 << (col % 64);
            let Some(pivot) = (rank..work.len()).find(|&r| work[r][word] & mask != 0) else {
                continue;
            };
            work.swap(rank, pivot);
            let pivot_row = work[rank].clone();
            for row in work.iter_mut().skip(rank + 1) {
                if row[word] & mask != 0 {
                    for (w, p) in row.iter_mut().zip(&pivot_row) {
                        *w ^= p;
                    }
                }
            }
            rank += 1;
            if rank == work.len() {
                break;
            }
        }
        rank
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn gf2_rank_identity() {
        let rows = vec![vec![0b001u64], vec![0b010], vec![0b100]];
        let m = Gf2Matrix::from_rows(rows, 3);
        assert_eq!(m.column_rank(&[0, 1, 2]), 3);
        assert_eq!(m.column_rank(&[0, 1]), 2);
        assert_eq!(m.column_rank(&[]), 0);
    }

    #[test]
    fn gf2_rank_dependent_rows() {
        // row2 = row0 ^ row1
        let rows = vec![vec![0b011u64], vec![0b110], vec![0b101]];
        let m = Gf2Matrix::from_rows(rows, 3);
        assert_eq!(m.column_rank(&[0, 1, 2]), 2);
    }

    #[test]
    fn gf2_rank_wide_matrix() {
        let mut rng = stream_rng(1, 0);
        let m = Gf2Matrix::random(50, 200, &mut rng);
        let all: Vec<usize> = (0..200).collect();
        assert_eq!(m.column_rank(&all), 50);
    }

    fn config(code: Code, d: f64, layers: usize, trials: usize) -> CascadeConfig {
        CascadeConfig { d, layers, code, alphabet_bits: 4, trials, seed: 42 }
    }

    #[test]
    fn naive_survival_matches_analytic() {
        let c = config(Code::Naive, 0.2, 5, 100_000);
        let r = simulate_cascade(&c).unwrap();
        let expected = 0.8f64.powi(5);
        assert!(
            (r.survival_fraction[5] - expected).abs() < 0.01,
            "survival {} vs {expected}",
            r.survival_fraction[5]
        );
    }

    #[test]
    fn repetition_survival_matches_analytic() {
        let c = config(Code::Repetition(3), 0.2, 5, 100_000);
        let r = simulate_cascade(&c).unwrap();
        let expected = (1.0 - 0.2f64.powi(3)).powi(5);
        assert!(
            (r.survival_fraction[5] - expected).abs() < 0.01,
            "survival {} vs {expected}",
            r.survival_fraction[5]
        );
    }

    #[test]
    fn no_dropout_is_lossless() {
        for code in [Code::Naive, Code::Repetition(2), Code::Linear { k_payload: 4, m_code: 8 }] {
            let c = config(code, 0.0, 4, 2000);
            let r = simulate_cascade(&c).unwrap();
            for l in 0..=4 {
                assert_eq!(r.survival_fraction[l], 1.0);
                assert!((r.per_layer_mi[l] - r.per_layer_mi[0]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mi_non_increasing() {
        for code in [Code::Naive, Code::Repetition(2), Code::Linear { k_payload: 3, m_code: 6 }] {
            let c = config(code, 0.3, 6, 5000);
            let r = simulate_cascade(&c).unwrap();
            for l in 1..r.per_layer_mi.len() {
                assert!(
                    r.per_layer_mi[l] <= r.per_layer_mi[l - 1] + 1e-12,
                    "{code:?}: MI rose at layer {l}"
                );
            }
        }
    }

    #[test]
    fn theoretical_curve_values() {
        let (naive, ceiling) = theoretical_curves(0.5, 3, 8.0);
        assert_eq!(naive, vec![8.0, 4.0, 2.0, 1.0]);
        assert_eq!(ceiling, 4.0);

        let (flat, _) = theoretical_curves(0.0, 3, 5.0);
        assert!(flat.iter().all(|v| *v == 5.0));

        let (long, _) = theoretical_curves(0.2, 10, 1.0);
        assert!((long[10] - 0.8f64.powi(10)).abs() < 1e-12);
    }

    #[test]
    fn rate_sweep_high_rate_fails() {
        let p_low = decode_success_prob(0.1, 100, 80, 20_000, 7).unwrap();
        assert!(p_low > 0.99, "p = {p_low}");
        let p_full = decode_success_prob(0.1, 100, 100, 2000, 7).unwrap();
        assert!(p_full < 1.0);
    }

    #[test]
    fn rate_sweep_monotone() {
        let p90 = decode_success_prob(0.5, 200, 90, 2000, 11).unwrap();
        let p110 = decode_success_prob(0.5, 200, 110, 2000, 11).unwrap();
        assert!(p90 > p110, "{p90} vs {p110}");
    }

    #[test]
    fn sweep_table_shape() {
        let table = linear_code_rate_sweep(0.25, 40, 500, 3).unwrap();
        assert!(!table.is_empty());
        assert!(table.windows(2).all(|w| w[0].k_payload < w[1].k_payload));
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(simulate_cascade(&config(Code::Repetition(0), 0.2, 2, 10)).is_err());
        assert!(simulate_cascade(&config(Code::Naive, 1.0, 2, 10)).is_err());
        assert!(
            simulate_cascade(&config(Code::Linear { k_payload: 9, m_code: 8 }, 0.2, 2, 10))
                .is_err()
        );
    }
}
