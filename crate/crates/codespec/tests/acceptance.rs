//! Acceptance gate: one test per criterion, each printing a pass/fail line.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::process::Command;

use codespec::channel_sim::{decode_success_prob, simulate_cascade, CascadeConfig, Code};
use codespec::infotheory::{
    blahut_arimoto, compression_rate, dropout_capacity_bounds, dropout_channel_matrix,
    erasure_channel_matrix, sparse_entropy, sparse_entropy_bruteforce, ChannelSpec, SparseSpec,
};
use codespec::powerlaw::{huber_fit, loglog_points, DEFAULT_DELTA};
use codespec::projection::{action, mean_action, predicted_action_limit, Trajectory};
use codespec::spectrum::spectrum_pipeline;
use codespec::synth::{gen_powerlaw_activations, trajectory_energy, SynthSpec};
use nalgebra::DMatrix;

/// Print the criterion's pass/fail line, then propagate the failure.
fn check(name: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("criterion {name}: pass"),
        Err(msg) => {
            println!("criterion {name}: FAIL ({msg})");
            panic!("criterion {name} failed: {msg}");
        }
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

#[test]
fn criterion_01_sparse_entropy_oracle() {
    check("1 sparse-entropy oracle equivalence", || {
        let alphabets: [&[(i64, f64)]; 3] = [
            &[(1, 0.5), (2, 0.5)],
            &[(1, 0.5), (2, 0.25), (3, 0.25)],
            &[(1, 0.4), (2, 0.3), (3, 0.2), (4, 0.1)],
        ];
        for alphabet in alphabets {
            let h_elem: f64 = alphabet.iter().map(|(_, p)| -p * p.log2()).sum();
            for n in 1..=3usize {
                for s10 in 1..=9u32 {
                    let s = s10 as f64 / 10.0;
                    let closed = sparse_entropy(&SparseSpec::new(n, s, h_elem).unwrap());
                    let oracle = sparse_entropy_bruteforce(alphabet, s, n).map_err(|e| e.to_string())?;
                    ensure(
                        (closed - oracle).abs() < 1e-9,
                        format!("n={n} s={s}: closed {closed} vs oracle {oracle}"),
                    )?;
                }
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_02_compression_rate_approximation() {
    check("2 compression-rate approximation", || {
        let h = 16.0;
        let mut sup: f64 = 0.0;
        for i in 0..=10_000u32 {
            let s = i as f64 / 10_000.0;
            sup = sup.max((compression_rate(s, h) - (1.0 - s)).abs());
        }
        ensure(sup <= 1.0 / 16.0 + 1e-12, format!("sup deviation {sup}"))
    });
}

#[test]
fn criterion_03_dropout_capacity_bracketing() {
    check("3 dropout capacity bracketing", || {
        for c_base in 1..=4u32 {
            for d in [0.1, 0.25, 0.5] {
                let spec = ChannelSpec::new(c_base as f64, 1, d).unwrap();
                let bounds = dropout_capacity_bounds(&spec);
                let channel = dropout_channel_matrix(1 << c_base, d).map_err(|e| e.to_string())?;
                let ba = blahut_arimoto(&channel, 1e-6, 1_000_000).map_err(|e| e.to_string())?;
                ensure(
                    bounds.lower - 5e-7 <= ba && ba <= bounds.upper + 5e-7,
                    format!("C={c_base} D={d}: BA {ba} outside [{}, {}]", bounds.lower, bounds.upper),
                )?;
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_04_erasure_closed_form() {
    check("4 erasure-channel closed form", || {
        for n in 1..=4usize {
            for d in [0.1, 0.25, 0.5] {
                let channel = erasure_channel_matrix(n, d).map_err(|e| e.to_string())?;
                let ba = blahut_arimoto(&channel, 1e-7, 1_000_000).map_err(|e| e.to_string())?;
                let exact = (1.0 - d) * n as f64;
                ensure(
                    (ba - exact).abs() < 1e-6,
                    format!("n={n} D={d}: BA {ba} vs exact {exact}"),
                )?;
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_05_exponent_recovery() {
    check("5 exponent recovery", || {
        for alpha in [-0.5, -1.0, -1.5, -2.0] {
            for seed in 0..5u64 {
                let spec = SynthSpec { n: 4096, m: 512, alpha, seed, rotate: false };
                let matrix = gen_powerlaw_activations(&spec).unwrap();
                let spectrum = spectrum_pipeline(&matrix, 8000, 100, seed).map_err(|e| e.to_string())?;
                let points = loglog_points(&spectrum, (10, 50)).map_err(|e| e.to_string())?;
                let fit = huber_fit(&points, DEFAULT_DELTA).map_err(|e| e.to_string())?;
                ensure(
                    (fit.alpha - alpha).abs() <= 0.05,
                    format!("alpha={alpha} seed={seed}: fitted {}", fit.alpha),
                )?;
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_06_action_expectation() {
    check("6 action expectation", || {
        let matrices = [
            gen_powerlaw_activations(&SynthSpec { n: 200, m: 64, alpha: -1.0, seed: 0, rotate: false })
                .unwrap(),
            gen_powerlaw_activations(&SynthSpec { n: 150, m: 48, alpha: -0.5, seed: 1, rotate: true })
                .unwrap(),
            gen_powerlaw_activations(&SynthSpec { n: 100, m: 32, alpha: -2.0, seed: 2, rotate: false })
                .unwrap(),
        ];
        for (i, matrix) in matrices.iter().enumerate() {
            let stats = mean_action(matrix, 3, 5000, 10 + i as u64).map_err(|e| e.to_string())?;
            let rel = (stats.mean_action - stats.closed_form).abs() / stats.closed_form;
            ensure(
                rel < 0.03,
                format!("matrix {i}: MC {} vs closed {} ({rel:.4} rel)", stats.mean_action, stats.closed_form),
            )?;
        }
        Ok(())
    });
}

#[test]
fn criterion_07_zeta_prediction() {
    check("7 zeta prediction", || {
        let limit = predicted_action_limit(-2.0, 1e-9).map_err(|e| e.to_string())?;
        let exact = std::f64::consts::PI.powi(2) / 12.0;
        ensure((limit - exact).abs() < 1e-8, format!("limit {limit} vs {exact}"))?;
        for alpha in [-1.0, -0.5, 0.0, 1.0] {
            ensure(
                predicted_action_limit(alpha, 1e-8).is_err(),
                format!("alpha={alpha} should diverge"),
            )?;
        }
        Ok(())
    });
}

#[test]
fn criterion_08_cascade_decay_vs_error_correction() {
    check("8 cascade decay vs error correction", || {
        let trials = 100_000;
        let base = CascadeConfig {
            d: 0.2,
            layers: 5,
            code: Code::Naive,
            alphabet_bits: 1,
            trials,
            seed: 5,
        };
        let naive = simulate_cascade(&base).map_err(|e| e.to_string())?;
        let p_naive = 0.8f64.powi(5);
        let sigma = (p_naive * (1.0 - p_naive) / trials as f64).sqrt();
        ensure(
            (naive.survival_fraction[5] - p_naive).abs() <= 3.0 * sigma,
            format!("naive survival {} vs {p_naive} (3 sigma {})", naive.survival_fraction[5], 3.0 * sigma),
        )?;

        let rep = simulate_cascade(&CascadeConfig { code: Code::Repetition(3), ..base })
            .map_err(|e| e.to_string())?;
        let p_rep = (1.0f64 - 0.008).powi(5);
        let sigma_rep = (p_rep * (1.0 - p_rep) / trials as f64).sqrt();
        ensure(
            (rep.survival_fraction[5] - p_rep).abs() <= 3.0 * sigma_rep,
            format!("repetition survival {} vs {p_rep}", rep.survival_fraction[5]),
        )?;

        let linear = simulate_cascade(&CascadeConfig {
            code: Code::Linear { k_payload: 3, m_code: 12 },
            trials: 20_000,
            ..base
        })
        .map_err(|e| e.to_string())?;
        for result in [&naive, &rep, &linear] {
            for l in 1..result.per_layer_mi.len() {
                ensure(
                    result.per_layer_mi[l] <= result.per_layer_mi[l - 1] + 1e-12,
                    format!("MI rose at layer {l}"),
                )?;
            }
        }
        Ok(())
    });
}

#[test]
fn criterion_09_linear_code_ceiling() {
    check("9 linear-code ceiling", || {
        let p80 = decode_success_prob(0.1, 100, 80, 20_000, 3).map_err(|e| e.to_string())?;
        let p95 = decode_success_prob(0.1, 100, 95, 20_000, 3).map_err(|e| e.to_string())?;
        ensure(p80 > 0.99, format!("rate 0.8 success only {p80}"))?;
        ensure(p95 <= 0.99, format!("rate 0.95 success {p95} unexpectedly high"))
    });
}

#[test]
fn criterion_10_stimulus_energy_identities() {
    check("10 stimulus/energy identities", || {
        // Closed unit circle traversed in 4 steps (5 points, last = first).
        let circle = DMatrix::from_fn(5, 2, |i, j| {
            let theta = std::f64::consts::TAU * i as f64 / 4.0;
            if j == 0 {
                theta.sin()
            } else {
                theta.cos()
            }
        });
        let energy = trajectory_energy(&circle).map_err(|e| e.to_string())?;
        ensure((energy - 8.0).abs() < 1e-12, format!("circle energy {energy}"))?;

        let mut rng = codespec::rng::stream_rng(42, 0);
        use rand::Rng;
        use rand_distr::StandardNormal;
        for i in 0..100 {
            let n = 2 + (rng.random::<u32>() % 20) as usize;
            let d = 1 + (rng.random::<u32>() % 5) as usize;
            let pts = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let e = trajectory_energy(&pts).map_err(|e| e.to_string())?;
            let a = action(&Trajectory { z: pts }).map_err(|e| e.to_string())?;
            ensure(e == 2.0 * a, format!("input {i}: energy {e} != 2 x action {a}"))?;
        }
        // Exactness also holds on a rasterized stimulus matrix.
        let spec = codespec::synth::StimulusSpec::centered(8, 16, 4.0, 1.5);
        let (frames, _) = codespec::synth::gen_dot_stimulus(&spec).map_err(|e| e.to_string())?;
        let e = trajectory_energy(frames.data()).map_err(|e| e.to_string())?;
        let a = action(&Trajectory { z: frames.data().clone() }).map_err(|e| e.to_string())?;
        ensure(e == 2.0 * a, "stimulus energy != 2 x action")?;
        Ok(())
    });
}

#[test]
fn criterion_11_cli_determinism() {
    check("11 CLI determinism", || {
        let bin = env!("CARGO_BIN_EXE_codespec");
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let path = |name: &str| dir.path().join(name).display().to_string();

        // Inputs shared by the commands under test. The `reports` subdir is
        // a frozen corpus for the `report` command, kept separate from the
        // scratch outputs the determinism loop writes.
        std::fs::create_dir(dir.path().join("reports")).map_err(|e| e.to_string())?;
        run(bin, dir.path(), &["gen", "synth", "--n", "400", "--m", "64", "--alpha", "-1", "--out", &path("a.npy"), "--json", &path("reports/gen_synth.json")], &[])?;
        run(bin, dir.path(), &["spectrum", "--input", &path("a.npy"), "--out", &path("spectrum.json")], &[])?;
        run(bin, dir.path(), &["spectrum", "--input", &path("a.npy"), "--out", &path("reports/spectrum.json")], &[])?;
        run(bin, dir.path(), &["fit", "--input", &path("spectrum.json"), "--out", &path("reports/fit.json")], &[])?;
        run(bin, dir.path(), &["gen", "dots", "--frames", "16", "--size", "16", "--radius", "4", "--out", &path("dots.npy"), "--coords", &path("coords.csv"), "--json", &path("reports/gen_dots.json")], &[])?;

        // Each command twice, under two different thread-count settings;
        // the results payload must not change.
        let cases: Vec<(&str, Vec<String>)> = vec![
            ("spectrum", vec!["spectrum".into(), "--input".into(), path("a.npy")]),
            ("fit", vec!["fit".into(), "--input".into(), path("spectrum.json"), "--bootstrap".into(), "50".into()]),
            ("project", vec!["project".into(), "--input".into(), path("dots.npy"), "--truth".into(), path("coords.csv")]),
            ("capacity sparse", vec!["capacity".into(), "sparse".into(), "--n".into(), "2".into(), "--s".into(), "0.5".into(), "--h-elem".into(), "1".into()]),
            ("capacity dropout", vec!["capacity".into(), "dropout".into(), "--c-base".into(), "2".into(), "--m".into(), "1".into(), "--d".into(), "0.5".into()]),
            ("capacity powerlaw", vec!["capacity".into(), "powerlaw".into(), "--m".into(), "4".into(), "--bits".into(), "8".into(), "--alpha".into(), "-1".into()]),
            ("capacity ba", vec!["capacity".into(), "ba".into(), "--erasure-bits".into(), "2".into(), "--d".into(), "0.25".into()]),
            ("simulate", vec!["simulate".into(), "--d".into(), "0.2".into(), "--layers".into(), "4".into(), "--trials".into(), "5000".into()]),
            ("gen synth", vec!["gen".into(), "synth".into(), "--n".into(), "50".into(), "--m".into(), "8".into(), "--alpha".into(), "-1".into(), "--out".into(), path("b.npy")]),
            ("gen dots", vec!["gen".into(), "dots".into(), "--frames".into(), "8".into(), "--size".into(), "16".into(), "--radius".into(), "4".into(), "--out".into(), path("c.npy"), "--coords".into(), path("c.csv")]),
            ("report", vec!["report".into(), "--dir".into(), path("reports")]),
        ];
        for (name, args) in cases {
            let mut payloads = Vec::new();
            for (i, threads) in ["1", "4"].iter().enumerate() {
                let out = dir.path().join(format!("det_{}.json", i));
                let mut full: Vec<String> = args.clone();
                let out_flag = if name == "report" { "--out" } else if name.starts_with("gen") || name == "simulate" { "--json" } else { "--out" };
                full.push(out_flag.into());
                full.push(out.display().to_string());
                full.push("--seed".into());
                full.push("9".into());
                let argv: Vec<&str> = full.iter().map(String::as_str).collect();
                run(bin, dir.path(), &argv, &[("RAYON_NUM_THREADS", threads)])?;
                let text = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
                let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
                payloads.push(serde_json::to_vec(&value["results"]).unwrap());
            }
            ensure(payloads[0] == payloads[1], format!("{name}: results payloads differ"))?;
        }
        Ok(())
    });
}

fn run(bin: &str, cwd: &std::path::Path, args: &[&str], env: &[(&str, &str)]) -> Result<(), String> {
    let mut cmd = Command::new(bin);
    cmd.args(args).current_dir(cwd);
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "`{}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}
