//! Eigenspectrum of activation covariance.
//!
//! Columns are mean-centered, explained variances are squared singular
//! values of the centered matrix divided by `n - 1`. Wide inputs are column
//! subsampled first, and the SVD is randomized (with an exact dense fallback
//! whenever the sketch would cover the full rank anyway).

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::activation_io::ActivationMatrix;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

pub const DEFAULT_MAX_DIM: usize = 8000;
pub const DEFAULT_MAX_COMPONENTS: usize = 1000;

const OVERSAMPLING: usize = 10;
const POWER_ITERATIONS: usize = 4;

/// Ordered explained variances of an activation covariance matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenSpectrum {
    /// Column subsampling stride applied before the PCA.
    pub stride: usize,
    pub n_components: usize,
    /// Explained variances, non-increasing, clamped at zero.
    pub variances: Vec<f64>,
    /// Variances divided by the total variance of the centered matrix.
    pub ratios: Vec<f64>,
    /// Total column variance of the centered matrix (trace of the sample
    /// covariance), including directions beyond `n_components`.
    #[serde(default)]
    pub total_variance: f64,
}

/// Keep columns `0, s, 2s, ...` where `s` is the smallest positive integer
/// with `ceil(m/s) < max_dim`. Inputs below the threshold pass through.
pub fn subsample_columns(matrix: &ActivationMatrix, max_dim: usize) -> ActivationMatrix {
    let m = matrix.m();
    let s = subsample_stride(m, max_dim);
    if s == 1 {
        return matrix.clone();
    }
    let cols: Vec<usize> = (0..m).step_by(s).collect();
    let data = matrix.data().select_columns(&cols);
    ActivationMatrix::new(data, matrix.source()).expect("subsample of valid matrix")
}

pub fn subsample_stride(m: usize, max_dim: usize) -> usize {
    let mut s = 1usize;
    while m.div_ceil(s) >= max_dim.max(2) {
        s += 1;
    }
    s
}

/// Explained-variance spectrum of the (column-centered) matrix.
pub fn eigenspectrum(
    matrix: &ActivationMatrix,
    max_components: usize,
    seed: u64,
) -> Result<EigenSpectrum> {
    eigenspectrum_with_stride(matrix, max_components, seed, 1)
}

fn eigenspectrum_with_stride(
    matrix: &ActivationMatrix,
    max_components: usize,
    seed: u64,
    stride: usize,
) -> Result<EigenSpectrum> {
    let n = matrix.n();
    let m = matrix.m();
    if n < 2 {
        return Err(Error::value("eigenspectrum requires at least 2 rows"));
    }
    if max_components == 0 {
        return Err(Error::value("max_components must be positive"));
    }
    let centered = center_columns(matrix.data());
    let total_variance = centered.iter().map(|v| v * v).sum::<f64>() / (n as f64 - 1.0);

    let target = max_components.min(n - 1).min(m);
    let sketch = target + OVERSAMPLING;
    let mut singular = if sketch >= n.min(m) {
        exact_singular_values(&centered)
    } else {
        randomized_singular_values(&centered, sketch, seed)
    };
    singular.truncate(target);

    let variances: Vec<f64> = singular
        .iter()
        .map(|s| (s * s / (n as f64 - 1.0)).max(0.0))
        .collect();
    let ratios: Vec<f64> = if total_variance > 0.0 {
        variances.iter().map(|v| v / total_variance).collect()
    } else {
        vec![0.0; variances.len()]
    };
    Ok(EigenSpectrum {
        stride,
        n_components: variances.len(),
        variances,
        ratios,
        total_variance,
    })
}

/// Subsample columns, then compute the spectrum; the stride is recorded in
/// the result.
pub fn spectrum_pipeline(
    matrix: &ActivationMatrix,
    max_dim: usize,
    max_components: usize,
    seed: u64,
) -> Result<EigenSpectrum> {
    let stride = subsample_stride(matrix.m(), max_dim);
    let sub = subsample_columns(matrix, max_dim);
    eigenspectrum_with_stride(&sub, max_components, seed, stride)
}

pub fn center_columns(data: &DMatrix<f64>) -> DMatrix<f64> {
    let n = data.nrows();
    let mut out = data.clone();
    for j in 0..data.ncols() {
        let mean = data.column(j).sum() / n as f64;
        for i in 0..n {
            out[(i, j)] -= mean;
        }
    }
    out
}

/// Exact dense singular values, sorted non-increasing.
pub fn exact_singular_values(data: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = data.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Randomized range finder with power iterations, then an exact SVD of the
/// small projected matrix.
fn randomized_singular_values(data: &DMatrix<f64>, sketch: usize, seed: u64) -> Vec<f64> {
    let m = data.ncols();
    let mut rng = stream_rng(seed, 0);
    let omega = DMatrix::from_fn(m, sketch, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut q = thin_q(&(data * &omega));
    for _ in 0..POWER_ITERATIONS {
        let z = thin_q(&(data.transpose() * &q));
        q = thin_q(&(data * &z));
    }
    let b = q.transpose() * data;
    exact_singular_values(&b)
}

fn thin_q(y: &DMatrix<f64>) -> DMatrix<f64> {
    y.clone().qr().q()
}

/// Top principal directions (columns of V) alongside the spectrum, for
/// callers that want eigenfilters.
pub fn principal_directions(
    matrix: &ActivationMatrix,
    n_directions: usize,
) -> Result<(EigenSpectrum, DMatrix<f64>)> {
    let n = matrix.n();
    if n < 2 {
        return Err(Error::value("eigenspectrum requires at least 2 rows"));
    }
    let centered = center_columns(matrix.data());
    let svd = centered.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
    let keep: Vec<usize> = order.into_iter().take(n_directions).collect();
    let total_variance = centered.iter().map(|v| v * v).sum::<f64>() / (n as f64 - 1.0);
    let mut singular: Vec<f64> = svd.singular_values.iter().copied().collect();
    singular.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let variances: Vec<f64> = singular
        .iter()
        .take(n_directions)
        .map(|s| s * s / (n as f64 - 1.0))
        .collect();
    let ratios = variances.iter().map(|v| v / total_variance.max(f64::MIN_POSITIVE)).collect();
    let directions = DMatrix::from_fn(matrix.m(), keep.len(), |i, j| v_t[(keep[j], i)]);
    Ok((
        EigenSpectrum {
            stride: 1,
            n_components: variances.len(),
            variances,
            ratios,
            total_variance,
        },
        directions,
    ))
}
