//! Random projections of activation trajectories and their action.
//!
//! A projection matrix has i.i.d. `N(0, 1/m)` entries, so for a trajectory
//! `z = A r` the expected action over projections has the closed form
//! `(1/2) (k/m) ||dA||_F^2`, where `dA` is the matrix of successive row
//! differences of `A`. For spectra decaying as `i^alpha` the infinite-width
//! prediction is `(1/2) zeta(-alpha)`, finite only for `alpha < -1`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::activation_io::{ActivationMatrix, LabeledSeries};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

pub const DEFAULT_K: usize = 3;
pub const DEFAULT_N_PROJ: usize = 1000;

/// An `m x k` random projection with `N(0, 1/m)` entries.
#[derive(Debug, Clone)]
pub struct ProjectionMatrix {
    r: DMatrix<f64>,
    seed: u64,
}

impl ProjectionMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn m(&self) -> usize {
        self.r.nrows()
    }

    pub fn k(&self) -> usize {
        self.r.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Projected trajectory `z = A r`, one row per frame.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub z: DMatrix<f64>,
}

/// Monte Carlo action statistics over many projections.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionStats {
    pub mean_action: f64,
    pub std_action: f64,
    pub n_projections: usize,
    /// Exact expectation `(1/2) (k/m) ||dA||_F^2` under the sampling scheme.
    pub closed_form: f64,
    /// Set when `n_projections == 1` and the std is 0 by convention.
    pub single_sample: bool,
}

/// Deterministic projection matrix for `(m, k, seed)`.
pub fn sample_projection(m: usize, k: usize, seed: u64) -> ProjectionMatrix {
    sample_projection_stream(m, k, seed, 0)
}

fn sample_projection_stream(m: usize, k: usize, seed: u64, stream: u64) -> ProjectionMatrix {
    assert!(m >= 1 && k >= 1, "projection dimensions must be positive");
    let scale = (1.0 / m as f64).sqrt();
    let mut rng = stream_rng(seed, stream);
    let r = DMatrix::from_fn(m, k, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
    ProjectionMatrix { r, seed }
}

/// `z = A r`.
pub fn project(matrix: &ActivationMatrix, r: &ProjectionMatrix) -> Result<Trajectory> {
    if matrix.m() != r.m() {
        return Err(Error::dimension(format!(
            "matrix has {} columns, projection expects {}",
            matrix.m(),
            r.m()
        )));
    }
    Ok(Trajectory { z: matrix.data() * r.matrix() })
}

/// Discrete action `(1/2) sum_t ||z_{t+1} - z_t||^2`.
pub fn action(z: &Trajectory) -> Result<f64> {
    let n = z.z.nrows();
    if n < 2 {
        return Err(Error::value("action needs at least 2 frames"));
    }
    let mut total = 0.0;
    for t in 0..n - 1 {
        let diff = z.z.row(t + 1) - z.z.row(t);
        total += diff.norm_squared();
    }
    Ok(0.5 * total)
}

/// Average action over `n_proj` independent projections, next to its exact
/// expectation.
pub fn mean_action(
    matrix: &ActivationMatrix,
    k: usize,
    n_proj: usize,
    seed: u64,
) -> Result<ActionStats> {
    if matrix.n() < 2 {
        return Err(Error::value("action needs at least 2 frames"));
    }
    if n_proj == 0 {
        return Err(Error::value("n_proj must be positive"));
    }
    let m = matrix.m();
    let mut actions = Vec::with_capacity(n_proj);
    for i in 0..n_proj {
        let r = sample_projection_stream(m, k, seed, i as u64 + 1);
        let z = project(matrix, &r)?;
        actions.push(action(&z)?);
    }
    let mean = actions.iter().sum::<f64>() / n_proj as f64;
    let std = if n_proj > 1 {
        (actions.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n_proj as f64).sqrt()
    } else {
        0.0
    };
    Ok(ActionStats {
        mean_action: mean,
        std_action: std,
        n_projections: n_proj,
        closed_form: closed_form_action(matrix, k),
        single_sample: n_proj == 1,
    })
}

/// `(1/2) (k/m) ||dA||_F^2`: the exact expected action of a random
/// projection of `matrix`.
pub fn closed_form_action(matrix: &ActivationMatrix, k: usize) -> f64 {
    let a = matrix.data();
    let mut frob = 0.0;
    for t in 0..a.nrows() - 1 {
        let diff = a.row(t + 1) - a.row(t);
        frob += diff.norm_squared();
    }
    0.5 * (k as f64 / matrix.m() as f64) * frob
}

/// Finite-width prediction `(1/2) sum_{i=1}^m i^alpha`.
pub fn predicted_action(alpha: f64, m: usize) -> f64 {
    0.5 * (1..=m).map(|i| (i as f64).powf(alpha)).sum::<f64>()
}

/// Infinite-width limit `(1/2) zeta(-alpha)`, by partial sums with an
/// integral bracket on the tail. Diverges for `alpha >= -1`.
pub fn predicted_action_limit(alpha: f64, tol: f64) -> Result<f64> {
    if alpha >= -1.0 {
        return Err(Error::Divergence(format!(
            "sum of i^({alpha}) diverges; the action grows without bound"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::value("tol must be positive"));
    }
    let mut terms = 1024usize;
    loop {
        // For decreasing f, the tail sum past M lies in
        // [int_{M+1}^inf f, int_M^inf f]; take the midpoint and bound the
        // error by the bracket half-width.
        let m = terms as f64;
        let tail_hi = m.powf(alpha + 1.0) / (-alpha - 1.0);
        let tail_lo = (m + 1.0).powf(alpha + 1.0) / (-alpha - 1.0);
        let err = 0.5 * 0.5 * (tail_hi - tail_lo);
        if err <= tol {
            let partial: f64 = (1..=terms).map(|i| (i as f64).powf(alpha)).sum();
            return Ok(0.5 * (partial + 0.5 * (tail_lo + tail_hi)));
        }
        terms = terms.checked_mul(2).ok_or_else(|| {
            Error::Convergence("tail bound not reached at any feasible term count".into())
        })?;
    }
}

/// Mean R-squared of ordinary least squares from `z` (plus intercept) to
/// each ground-truth column, clamped to `[0, 1]`. Zero-variance truth
/// columns are skipped; it is an error if all are.
pub fn explained_input_variance(z: &Trajectory, truth: &LabeledSeries) -> Result<f64> {
    let n = z.z.nrows();
    let k = z.z.ncols();
    if truth.values.nrows() != n {
        return Err(Error::dimension(format!(
            "trajectory has {n} rows, truth has {}",
            truth.values.nrows()
        )));
    }
    if n <= k + 1 {
        return Err(Error::value("need more frames than regressors"));
    }
    let design = DMatrix::from_fn(n, k + 1, |i, j| if j == 0 { 1.0 } else { z.z[(i, j - 1)] });
    let svd = design.clone().svd(true, true);

    let mut total_r2 = 0.0;
    let mut used = 0usize;
    for c in 0..truth.values.ncols() {
        let y = truth.values.column(c).clone_owned();
        let mean = y.sum() / n as f64;
        let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
        if ss_tot <= 0.0 {
            continue;
        }
        let beta = svd
            .solve(&y, 1e-12)
            .map_err(|_| Error::value("degenerate regression design"))?;
        let resid = &y - &design * beta;
        let ss_res: f64 = resid.iter().map(|v| v * v).sum();
        total_r2 += (1.0 - ss_res / ss_tot).clamp(0.0, 1.0);
        used += 1;
    }
    if used == 0 {
        return Err(Error::value("all truth columns have zero variance"));
    }
    Ok((total_r2 / used as f64).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use approx::assert_relative_eq;

    fn matrix(data: DMatrix<f64>) -> ActivationMatrix {
        ActivationMatrix::new(data, "test").unwrap()
    }

    #[test]
    fn projection_deterministic() {
        let a = sample_projection(4, 3, 7);
        let b = sample_projection(4, 3, 7);
        assert_eq!(a.matrix(), b.matrix());
        let c = sample_projection(4, 3, 8);
        assert_ne!(a.matrix(), c.matrix());
    }

    #[test]
    fn projection_entry_variance() {
        let m = 10_000;
        let p = sample_projection(m, 1, 0);
        let var = p.matrix().iter().map(|v| v * v).sum::<f64>() / m as f64;
        assert_relative_eq!(var, 1e-4, max_relative = 0.05);
    }

    #[test]
    fn projection_tiny() {
        let p = sample_projection(1, 1, 3);
        assert!(p.matrix()[(0, 0)].is_finite());
    }

    #[test]
    fn project_identity_and_zero() {
        let a = matrix(DMatrix::identity(3, 3));
        let p = sample_projection(3, 2, 1);
        let z = project(&a, &p).unwrap();
        assert_eq!(z.z, a.data() * p.matrix());

        let zero = matrix(DMatrix::zeros(3, 3));
        // zeros are not "non-finite"; construct via from_element to pass validation
        let z0 = project(&zero, &p).unwrap();
        assert!(z0.z.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn project_dim_mismatch() {
        let a = matrix(DMatrix::identity(3, 3));
        let p = sample_projection(4, 2, 1);
        assert!(matches!(project(&a, &p), Err(Error::Dimension(_))));
    }

    #[test]
    fn action_constant_zero() {
        let z = Trajectory { z: DMatrix::from_element(5, 2, 3.0) };
        assert_eq!(action(&z).unwrap(), 0.0);
    }

    #[test]
    fn action_straight_line() {
        // z_t = t v, 6 points: action = (1/2)(n-1)||v||^2
        let v = [1.0, 2.0];
        let z = Trajectory { z: DMatrix::from_fn(6, 2, |i, j| i as f64 * v[j]) };
        assert_relative_eq!(action(&z).unwrap(), 0.5 * 5.0 * 5.0, epsilon = 1e-12);
    }

    #[test]
    fn action_closed_circle() {
        // 4 equal steps around the unit circle (5 rows, last = first):
        // each chord has squared length 2, action = (1/2) * 4 * 2 = 4.
        let z = Trajectory {
            z: DMatrix::from_fn(5, 2, |i, j| {
                let theta = std::f64::consts::TAU * i as f64 / 4.0;
                if j == 0 {
                    theta.sin()
                } else {
                    theta.cos()
                }
            }),
        };
        assert_relative_eq!(action(&z).unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn action_needs_two_frames() {
        let z = Trajectory { z: DMatrix::from_element(1, 2, 1.0) };
        assert!(action(&z).is_err());
    }

    #[test]
    fn mean_action_matches_closed_form() {
        let mut rng = stream_rng(2, 0);
        let a = matrix(DMatrix::from_fn(20, 8, |_, _| rng.sample::<f64, _>(StandardNormal)));
        let stats = mean_action(&a, 3, 5000, 0).unwrap();
        assert_relative_eq!(stats.mean_action, stats.closed_form, max_relative = 0.03);
    }

    #[test]
    fn mean_action_constant_rows() {
        let a = matrix(DMatrix::from_fn(5, 4, |_, j| j as f64));
        let stats = mean_action(&a, 3, 100, 0).unwrap();
        assert_eq!(stats.mean_action, 0.0);
        assert_eq!(stats.std_action, 0.0);
    }

    #[test]
    fn mean_action_single_projection() {
        let mut rng = stream_rng(4, 0);
        let a = matrix(DMatrix::from_fn(6, 4, |_, _| rng.sample::<f64, _>(StandardNormal)));
        let stats = mean_action(&a, 3, 1, 0).unwrap();
        assert_eq!(stats.std_action, 0.0);
        assert!(stats.single_sample);
    }

    #[test]
    fn predicted_action_values() {
        assert_relative_eq!(predicted_action(0.0, 5), 2.5, epsilon = 1e-12);
        // (1/2) H_10
        let h10: f64 = (1..=10).map(|i| 1.0 / i as f64).sum();
        assert_relative_eq!(predicted_action(-1.0, 10), 0.5 * h10, epsilon = 1e-12);
        assert_relative_eq!(predicted_action(-1.0, 10), 1.4644841269841268, epsilon = 1e-12);
        // partial sum of zeta(2)/2 approaches pi^2/12 with tail < 1/(2m)
        let m = 100_000;
        let target = std::f64::consts::PI.powi(2) / 12.0;
        let got = predicted_action(-2.0, m);
        assert!((got - target).abs() < 0.5 / m as f64);
    }

    #[test]
    fn predicted_limit_zeta_values() {
        let pi = std::f64::consts::PI;
        let z2 = predicted_action_limit(-2.0, 1e-8).unwrap();
        assert_relative_eq!(z2, pi * pi / 12.0, epsilon = 1e-8);
        let z4 = predicted_action_limit(-4.0, 1e-10).unwrap();
        assert_relative_eq!(z4, pi.powi(4) / 180.0, epsilon = 1e-10);
    }

    #[test]
    fn predicted_limit_divergence() {
        assert!(matches!(predicted_action_limit(-1.0, 1e-8), Err(Error::Divergence(_))));
        assert!(matches!(predicted_action_limit(-0.5, 1e-8), Err(Error::Divergence(_))));
    }

    #[test]
    fn action_translation_invariance() {
        let mut rng = stream_rng(6, 0);
        let z = DMatrix::from_fn(10, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let a1 = action(&Trajectory { z: z.clone() }).unwrap();
        let shift = DMatrix::from_fn(10, 3, |_, j| [5.0, -2.0, 0.5][j]);
        let a2 = action(&Trajectory { z: z + shift }).unwrap();
        assert_relative_eq!(a1, a2, epsilon = 1e-9);
    }

    #[test]
    fn r2_exact_linear_truth() {
        let mut rng = stream_rng(8, 0);
        let z = Trajectory {
            z: DMatrix::from_fn(50, 3, |_, _| rng.sample::<f64, _>(StandardNormal)),
        };
        let truth_vals = DMatrix::from_fn(50, 2, |i, c| {
            let row = z.z.row(i);
            if c == 0 {
                2.0 * row[0] - row[1] + 0.3
            } else {
                row[2] * 5.0 - 1.0
            }
        });
        let truth = LabeledSeries::new(truth_vals, vec!["a".into(), "b".into()]).unwrap();
        let r2 = explained_input_variance(&z, &truth).unwrap();
        assert_relative_eq!(r2, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn r2_independent_truth_near_zero() {
        let n = 10_000;
        let mut rng = stream_rng(9, 0);
        let z = Trajectory {
            z: DMatrix::from_fn(n, 3, |_, _| rng.sample::<f64, _>(StandardNormal)),
        };
        let truth_vals = DMatrix::from_fn(n, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
        let truth = LabeledSeries::new(truth_vals, vec!["t".into()]).unwrap();
        let r2 = explained_input_variance(&z, &truth).unwrap();
        assert!(r2 < 0.01, "r2 = {r2}");
    }

    #[test]
    fn r2_constant_truth_rejected() {
        let mut rng = stream_rng(10, 0);
        let z = Trajectory {
            z: DMatrix::from_fn(20, 3, |_, _| rng.sample::<f64, _>(StandardNormal)),
        };
        let truth = LabeledSeries::new(DMatrix::from_element(20, 1, 2.0), vec!["c".into()]).unwrap();
        assert!(explained_input_variance(&z, &truth).is_err());
    }

    #[test]
    fn r2_affine_invariance() {
        let mut rng = stream_rng(12, 0);
        let z = Trajectory {
            z: DMatrix::from_fn(40, 2, |_, _| rng.sample::<f64, _>(StandardNormal)),
        };
        let base = DMatrix::from_fn(40, 1, |i, _| {
            z.z[(i, 0)] + 0.5 * rng.sample::<f64, _>(StandardNormal)
        });
        let truth1 = LabeledSeries::new(base.clone(), vec!["t".into()]).unwrap();
        let scaled = base.map(|v| -3.0 * v + 11.0);
        let truth2 = LabeledSeries::new(scaled, vec!["t".into()]).unwrap();
        let r1 = explained_input_variance(&z, &truth1).unwrap();
        let r2 = explained_input_variance(&z, &truth2).unwrap();
        assert_relative_eq!(r1, r2, epsilon = 1e-9);
    }
}
