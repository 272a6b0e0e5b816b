//! Ground-truth-known synthetic inputs: activation matrices with a
//! prescribed power-law population spectrum, and the moving-dot stimulus.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::activation_io::{ActivationMatrix, LabeledSeries};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Parameters for a power-law activation matrix.
#[derive(Debug, Clone, Copy)]
pub struct SynthSpec {
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Apply a random orthogonal mixing so the covariance is not diagonal.
    pub rotate: bool,
}

/// Parameters for the circular moving-dot stimulus.
#[derive(Debug, Clone, Copy)]
pub struct StimulusSpec {
    pub frames: usize,
    /// Image width = height in pixels.
    pub size: usize,
    /// Orbit radius in pixels.
    pub radius: f64,
    pub dot_radius: f64,
    /// Orbit center `(x, y)` in pixel coordinates.
    pub center: (f64, f64),
}

impl StimulusSpec {
    /// Centered orbit with the given frame count, canvas size and radii.
    pub fn centered(frames: usize, size: usize, radius: f64, dot_radius: f64) -> Self {
        let c = (size as f64 - 1.0) / 2.0;
        StimulusSpec { frames, size, radius, dot_radius, center: (c, c) }
    }
}

/// Rows drawn i.i.d. zero-mean normal with covariance
/// `Q diag(i^alpha) Q^T`; the population spectrum is exactly `i^alpha`.
pub fn gen_powerlaw_activations(spec: &SynthSpec) -> Result<ActivationMatrix> {
    if spec.n < 2 || spec.m < 1 {
        return Err(Error::value("need n >= 2 samples and m >= 1 units"));
    }
    let scales: Vec<f64> = (1..=spec.m).map(|i| (i as f64).powf(spec.alpha / 2.0)).collect();
    let mut rng = stream_rng(spec.seed, 0);
    let mut data = DMatrix::from_fn(spec.n, spec.m, |_, j| {
        scales[j] * rng.sample::<f64, _>(StandardNormal)
    });
    if spec.rotate {
        let q = random_orthogonal(spec.m, spec.seed.wrapping_add(1));
        data *= q.transpose();
    }
    ActivationMatrix::new(data, format!("synth(alpha={}, seed={})", spec.alpha, spec.seed))
}

/// Haar-distributed orthogonal matrix via QR of a Gaussian matrix with
/// sign-corrected diagonal.
pub fn random_orthogonal(m: usize, seed: u64) -> DMatrix<f64> {
    assert!(m >= 1);
    let mut rng = stream_rng(seed, 0);
    let g = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..m {
        if r[(j, j)] < 0.0 {
            for i in 0..m {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Rasterized moving-dot frames (rows are flattened `size x size` images)
/// plus the ground-truth dot coordinates.
pub fn gen_dot_stimulus(spec: &StimulusSpec) -> Result<(ActivationMatrix, LabeledSeries)> {
    if spec.frames < 2 {
        return Err(Error::value("need at least 2 frames"));
    }
    if spec.size == 0 {
        return Err(Error::value("canvas size must be positive"));
    }
    if !(spec.radius >= 0.0 && spec.dot_radius >= 0.0) {
        return Err(Error::value("radii must be nonnegative"));
    }

    let n = spec.frames;
    let npix = spec.size * spec.size;
    let mut frames = DMatrix::zeros(n, npix);
    let mut coords = DMatrix::zeros(n, 2);
    let limit = spec.size as f64 - 1.0;

    for t in 0..n {
        let theta = std::f64::consts::TAU * t as f64 / n as f64;
        let x = spec.center.0 + spec.radius * theta.sin();
        let y = spec.center.1 + spec.radius * theta.cos();
        if x - spec.dot_radius < 0.0
            || y - spec.dot_radius < 0.0
            || x + spec.dot_radius > limit
            || y + spec.dot_radius > limit
        {
            return Err(Error::value(format!(
                "dot leaves the canvas at frame {t} (x={x:.2}, y={y:.2})"
            )));
        }
        coords[(t, 0)] = x;
        coords[(t, 1)] = y;
        if spec.dot_radius == 0.0 {
            // Degenerate disc: single pixel at the nearest-integer position.
            let px = x.round() as usize;
            let py = y.round() as usize;
            frames[(t, py * spec.size + px)] = 1.0;
        } else {
            // A pixel is lit iff its center lies within dot_radius.
            let r2 = spec.dot_radius * spec.dot_radius;
            for py in 0..spec.size {
                for px in 0..spec.size {
                    let dx = px as f64 - x;
                    let dy = py as f64 - y;
                    if dx * dx + dy * dy <= r2 {
                        frames[(t, py * spec.size + px)] = 1.0;
                    }
                }
            }
        }
    }
    let matrix = ActivationMatrix::new(frames, "dot stimulus")?;
    let series = LabeledSeries::new(coords, vec!["x".into(), "y".into()])?;
    Ok((matrix, series))
}

/// Sum of squared successive differences; equals twice the trajectory
/// action by definition.
pub fn trajectory_energy(points: &DMatrix<f64>) -> Result<f64> {
    let n = points.nrows();
    if n < 2 {
        return Err(Error::value("energy needs at least 2 points"));
    }
    let mut total = 0.0;
    for t in 0..n - 1 {
        let diff = points.row(t + 1) - points.row(t);
        total += diff.norm_squared();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::{action, Trajectory};
    use approx::assert_relative_eq;

    #[test]
    fn powerlaw_isotropic_variances() {
        let spec = SynthSpec { n: 10_000, m: 8, alpha: 0.0, seed: 1, rotate: false };
        let a = gen_powerlaw_activations(&spec).unwrap();
        for j in 0..8 {
            let col = a.data().column(j);
            let mean = col.sum() / a.n() as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (a.n() as f64 - 1.0);
            assert_relative_eq!(var, 1.0, max_relative = 0.05);
        }
    }

    #[test]
    fn powerlaw_deterministic() {
        let spec = SynthSpec { n: 50, m: 10, alpha: -1.0, seed: 9, rotate: true };
        let a = gen_powerlaw_activations(&spec).unwrap();
        let b = gen_powerlaw_activations(&spec).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn orthogonal_properties() {
        let q1 = random_orthogonal(1, 0);
        assert!((q1[(0, 0)].abs() - 1.0).abs() < 1e-12);

        let q = random_orthogonal(16, 5);
        let qtq = q.transpose() * &q;
        let eye = DMatrix::<f64>::identity(16, 16);
        assert!((qtq - eye).amax() < 1e-10);
        for j in 0..16 {
            assert_relative_eq!(q.column(j).norm(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn rotation_preserves_sample_spectrum() {
        let plain = SynthSpec { n: 10_000, m: 6, alpha: -1.0, seed: 21, rotate: false };
        let mixed = SynthSpec { n: 10_000, m: 6, alpha: -1.0, seed: 21, rotate: true };
        let sa = crate::spectrum::eigenspectrum(&gen_powerlaw_activations(&plain).unwrap(), 6, 0)
            .unwrap();
        let sb = crate::spectrum::eigenspectrum(&gen_powerlaw_activations(&mixed).unwrap(), 6, 0)
            .unwrap();
        for (a, b) in sa.variances.iter().zip(&sb.variances) {
            assert_relative_eq!(a, b, max_relative = 0.1);
        }
    }

    #[test]
    fn dot_stimulus_static() {
        let spec = StimulusSpec::centered(4, 16, 0.0, 2.0);
        let (frames, coords) = gen_dot_stimulus(&spec).unwrap();
        for t in 1..4 {
            assert_eq!(frames.data().row(t), frames.data().row(0));
        }
        assert_eq!(trajectory_energy(&coords.values).unwrap(), 0.0);
    }

    #[test]
    fn dot_stimulus_coords_on_circle() {
        let spec = StimulusSpec::centered(12, 32, 8.0, 1.5);
        let (_, coords) = gen_dot_stimulus(&spec).unwrap();
        for t in 0..12 {
            let dx = coords.values[(t, 0)] - spec.center.0;
            let dy = coords.values[(t, 1)] - spec.center.1;
            assert_relative_eq!(dx * dx + dy * dy, 64.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn dot_stimulus_open_orbit_energy() {
        // 4 frames at 0, 90, 180, 270 degrees: 3 chords of squared length 2.
        let spec = StimulusSpec::centered(4, 16, 1.0, 1.0);
        let (_, coords) = gen_dot_stimulus(&spec).unwrap();
        assert_relative_eq!(trajectory_energy(&coords.values).unwrap(), 6.0, epsilon = 1e-12);
    }

    #[test]
    fn closed_circle_energy() {
        // Full loop with 4 steps (5 points, last = first): energy 8.
        let pts = DMatrix::from_fn(5, 2, |i, j| {
            let theta = std::f64::consts::TAU * i as f64 / 4.0;
            if j == 0 {
                theta.sin()
            } else {
                theta.cos()
            }
        });
        assert_relative_eq!(trajectory_energy(&pts).unwrap(), 8.0, epsilon = 1e-12);
    }

    #[test]
    fn dot_radius_zero_single_pixel() {
        let spec = StimulusSpec::centered(4, 17, 2.0, 0.0);
        let (frames, _) = gen_dot_stimulus(&spec).unwrap();
        for t in 0..4 {
            let lit: f64 = frames.data().row(t).iter().sum();
            assert_eq!(lit, 1.0);
        }
    }

    #[test]
    fn dot_leaving_canvas_rejected() {
        let spec = StimulusSpec::centered(4, 16, 10.0, 2.0);
        assert!(gen_dot_stimulus(&spec).is_err());
    }

    #[test]
    fn energy_is_twice_action() {
        let mut rng = crate::rng::stream_rng(33, 0);
        for _ in 0..20 {
            let n = 2 + (rng.random::<u32>() % 10) as usize;
            let d = 1 + (rng.random::<u32>() % 4) as usize;
            let pts = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let e = trajectory_energy(&pts).unwrap();
            let a = action(&Trajectory { z: pts }).unwrap();
            assert_eq!(e, 2.0 * a);
        }
    }

    #[test]
    fn energy_straight_line() {
        let v = [2.0, -1.0];
        let pts = DMatrix::from_fn(7, 2, |i, j| i as f64 * v[j]);
        assert_relative_eq!(trajectory_energy(&pts).unwrap(), 6.0 * 5.0, epsilon = 1e-12);
    }
}
