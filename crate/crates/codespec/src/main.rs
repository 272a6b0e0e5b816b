//! `codespec` command-line interface: reproducible analyses with JSON/CSV/SVG
//! outputs. Exit codes: 0 success, 1 data/runtime error, 2 usage error.

// `!(x > 0.0)` guards are deliberate: they reject NaN along with the
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use codespec::activation_io::{load_matrix, load_series, save_matrix, save_series, Format};
use codespec::channel_sim::{simulate_cascade, CascadeConfig, Code};
use codespec::infotheory::{
    blahut_arimoto, blahut_arimoto_bracket, dims_per_feature, dropout_capacity_bounds,
    dropout_channel_matrix, effective_capacity, erasure_channel_matrix, powerlaw_entropy_bound,
    sparse_entropy, ChannelSpec, DiscreteChannel, SparseSpec,
};
use codespec::powerlaw::{bootstrap_ci, huber_fit_with, loglog_points, Scale, DEFAULT_DELTA};
use codespec::projection::{
    explained_input_variance, mean_action, project, sample_projection, DEFAULT_K, DEFAULT_N_PROJ,
};
use codespec::report::RunReport;
use codespec::spectrum::{
    spectrum_pipeline, EigenSpectrum, DEFAULT_MAX_COMPONENTS, DEFAULT_MAX_DIM,
};
use codespec::svg::{LineChart, Series};
use codespec::synth::{gen_dot_stimulus, gen_powerlaw_activations, StimulusSpec, SynthSpec};

#[derive(Parser)]
#[command(name = "codespec", version, about = "Information-theoretic analysis of neural-network codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// PCA eigenspectrum of an activation matrix
    Spectrum(SpectrumArgs),
    /// Huber power-law fit on a stored spectrum
    Fit(FitArgs),
    /// Random-projection trajectory action
    Project(ProjectArgs),
    /// Closed-form capacities and the Blahut-Arimoto oracle
    #[command(subcommand)]
    Capacity(CapacityCmd),
    /// Monte Carlo dropout-cascade simulation
    Simulate(SimulateArgs),
    /// Synthetic inputs with known ground truth
    #[command(subcommand)]
    Gen(GenCmd),
    /// Aggregate prior run reports into a summary plus SVG figures
    Report(ReportArgs),
}

#[derive(Args)]
struct SpectrumArgs {
    /// Activation matrix (.npy or .csv)
    #[arg(long)]
    input: PathBuf,
    /// Run-report JSON destination
    #[arg(long)]
    out: Option<PathBuf>,
    /// Column-subsampling threshold
    #[arg(long, default_value_t = DEFAULT_MAX_DIM)]
    max_dim: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_COMPONENTS)]
    max_components: usize,
    /// Optional log-log CSV of (component, variance) for plotting
    #[arg(long)]
    loglog_csv: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FitArgs {
    /// Spectrum JSON (bare or a spectrum run report)
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Window start (1-based, inclusive)
    #[arg(long, default_value_t = 10)]
    lo: usize,
    /// Window end (1-based, inclusive)
    #[arg(long, default_value_t = 50)]
    hi: usize,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    /// Bootstrap replicates for the 95% CI (0 disables)
    #[arg(long, default_value_t = 0)]
    bootstrap: usize,
    /// Residual scale: fixed | mad
    #[arg(long, default_value = "fixed")]
    scale: String,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ProjectArgs {
    /// Activation matrix (.npy or .csv)
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_N_PROJ)]
    n_proj: usize,
    /// Emit one projected trajectory as CSV (plus an SVG sibling)
    #[arg(long)]
    traj: Option<PathBuf>,
    /// Ground-truth series CSV for explained-variance R^2
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum CapacityCmd {
    /// Entropy of an S-sparsified input and the compression rate
    Sparse(SparseArgs),
    /// Dropout-channel capacity bounds with the BA oracle
    Dropout(DropoutArgs),
    /// Power-law entropy bound and effective capacity
    Powerlaw(PowerlawArgs),
    /// Blahut-Arimoto capacity of an explicit channel
    Ba(BaArgs),
}

#[derive(Args)]
struct SparseArgs {
    /// Number of input features
    #[arg(long)]
    n: usize,
    /// Sparsification probability
    #[arg(long)]
    s: f64,
    /// Elementwise entropy in bits
    #[arg(long)]
    h_elem: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct DropoutArgs {
    /// Per-neuron capacity in bits
    #[arg(long)]
    c_base: f64,
    /// Number of neurons
    #[arg(long)]
    m: usize,
    /// Dropout rate
    #[arg(long)]
    d: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PowerlawArgs {
    /// Number of neurons
    #[arg(long)]
    m: usize,
    /// Per-neuron precision in bits
    #[arg(long)]
    bits: f64,
    /// Spectrum exponent
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct BaArgs {
    /// Row-stochastic transition matrix CSV
    #[arg(long, conflicts_with_all = ["erasure_bits", "dropout_alphabet"])]
    channel: Option<PathBuf>,
    /// Build an n-bit erasure channel instead (requires --d)
    #[arg(long)]
    erasure_bits: Option<usize>,
    /// Build a dropout channel on this alphabet instead (requires --d)
    #[arg(long, conflicts_with = "erasure_bits")]
    dropout_alphabet: Option<usize>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Dropout rate per layer
    #[arg(long)]
    d: f64,
    #[arg(long, default_value_t = 5)]
    layers: usize,
    /// naive | repetition:<k> | linear:<k>:<m>
    #[arg(long, default_value = "naive")]
    code: String,
    /// Payload symbol width in bits
    #[arg(long, default_value_t = 1)]
    bits: usize,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    /// Per-layer CSV destination
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run-report JSON destination
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum GenCmd {
    /// Circular moving-dot stimulus frames plus ground-truth coordinates
    Dots(DotsArgs),
    /// Activation matrix with a prescribed power-law spectrum
    Synth(SynthArgs),
}

#[derive(Args)]
struct DotsArgs {
    #[arg(long, default_value_t = 64)]
    frames: usize,
    /// Canvas width = height in pixels
    #[arg(long, default_value_t = 32)]
    size: usize,
    /// Orbit radius in pixels
    #[arg(long, default_value_t = 10.0)]
    radius: f64,
    #[arg(long, default_value_t = 2.0)]
    dot_radius: f64,
    /// Frames output (.npy or .csv)
    #[arg(long, default_value = "dots.npy")]
    out: PathBuf,
    /// Ground-truth coordinates CSV
    #[arg(long, default_value = "coords.csv")]
    coords: PathBuf,
    /// Run-report JSON destination
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SynthArgs {
    /// Samples (rows)
    #[arg(long, default_value_t = 2000)]
    n: usize,
    /// Units (columns)
    #[arg(long, default_value_t = 512)]
    m: usize,
    /// Population spectrum exponent
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    /// Mix with a random orthogonal rotation
    #[arg(long)]
    rotate: bool,
    #[arg(long, default_value = "synth.npy")]
    out: PathBuf,
    /// Run-report JSON destination
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory of prior run-report JSON files
    #[arg(long)]
    dir: PathBuf,
    /// Summary JSON destination (figures land beside it)
    #[arg(long, default_value = "summary.json")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

enum CliError {
    Usage(String),
    Data(codespec::Error),
}

impl From<codespec::Error> for CliError {
    fn from(e: codespec::Error) -> Self {
        CliError::Data(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

type CliResult<T> = Result<T, CliError>;

fn main() {
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            1
        }
    };
    std::process::exit(code);
}

/// `--seed`, else `CODESPEC_SEED`, else 0.
fn resolve_seed(flag: Option<u64>) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("CODESPEC_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("CODESPEC_SEED is not a valid seed: {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn emit(report: &RunReport, out: Option<&Path>) -> CliResult<()> {
    if let Some(path) = out {
        report.write_json(path)?;
    }
    Ok(())
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Project(a) => cmd_project(a),
        Command::Capacity(c) => match c {
            CapacityCmd::Sparse(a) => cmd_capacity_sparse(a),
            CapacityCmd::Dropout(a) => cmd_capacity_dropout(a),
            CapacityCmd::Powerlaw(a) => cmd_capacity_powerlaw(a),
            CapacityCmd::Ba(a) => cmd_capacity_ba(a),
        },
        Command::Simulate(a) => cmd_simulate(a),
        Command::Gen(g) => match g {
            GenCmd::Dots(a) => cmd_gen_dots(a),
            GenCmd::Synth(a) => cmd_gen_synth(a),
        },
        Command::Report(a) => cmd_report(a),
    }
}

fn cmd_spectrum(args: SpectrumArgs) -> CliResult<()> {
    if args.max_components == 0 {
        return Err(usage("--max-components must be positive"));
    }
    if args.max_dim < 2 {
        return Err(usage("--max-dim must be at least 2"));
    }
    let seed = resolve_seed(args.seed)?;
    let start = Instant::now();

    let matrix = load_matrix(&args.input, Format::from_path(&args.input))?;
    let spectrum = spectrum_pipeline(&matrix, args.max_dim, args.max_components, seed)?;

    if let Some(csv) = &args.loglog_csv {
        let mut text = String::from("component,variance\n");
        for (i, v) in spectrum.variances.iter().enumerate() {
            text.push_str(&format!("{},{}\n", i + 1, v));
        }
        std::fs::write(csv, text).map_err(codespec::Error::Io)?;
    }

    let mut params = BTreeMap::new();
    params.insert("input".into(), json!(args.input.display().to_string()));
    params.insert("max_dim".into(), json!(args.max_dim));
    params.insert("max_components".into(), json!(args.max_components));
    let results = serde_json::to_value(&spectrum).expect("spectrum serialize");
    let report = RunReport::new("spectrum", params, results, seed, ms(start));
    emit(&report, args.out.as_deref())?;

    println!(
        "spectrum: {} components of {} (stride {}), leading variance {:.6}, total {:.6}",
        spectrum.n_components,
        matrix.m(),
        spectrum.stride,
        spectrum.variances.first().copied().unwrap_or(0.0),
        spectrum.total_variance,
    );
    Ok(())
}

/// Accept either a bare `EigenSpectrum` JSON or a spectrum run report.
fn load_spectrum_json(path: &Path) -> CliResult<EigenSpectrum> {
    let text = std::fs::read_to_string(path).map_err(codespec::Error::Io)?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| codespec::Error::format(format!("{}: {e}", path.display())))?;
    let payload = if value.get("variances").is_some() {
        value
    } else if let Some(results) = value.get("results") {
        results.clone()
    } else {
        return Err(CliError::Data(codespec::Error::format(format!(
            "{}: neither a spectrum nor a run report",
            path.display()
        ))));
    };
    serde_json::from_value(payload)
        .map_err(|e| CliError::Data(codespec::Error::format(format!("{}: {e}", path.display()))))
}

fn cmd_fit(args: FitArgs) -> CliResult<()> {
    if args.lo < 1 || args.lo >= args.hi {
        return Err(usage(format!("bad window [--lo {}, --hi {}]", args.lo, args.hi)));
    }
    if !(args.delta > 0.0) {
        return Err(usage("--delta must be positive"));
    }
    let scale = match args.scale.as_str() {
        "fixed" => Scale::Fixed,
        "mad" => Scale::Mad,
        other => return Err(usage(format!("unknown --scale {other:?} (fixed|mad)"))),
    };
    let seed = resolve_seed(args.seed)?;
    let start = Instant::now();

    let spectrum = load_spectrum_json(&args.input)?;
    let points = loglog_points(&spectrum, (args.lo, args.hi))?;
    if points.clipped {
        eprintln!(
            "warning: window clipped to [{}, {}] ({} components available)",
            points.window.0, points.window.1, spectrum.variances.len()
        );
    }
    let mut fit = huber_fit_with(&points, args.delta, scale)?;
    if args.bootstrap > 0 {
        fit.ci95 = Some(bootstrap_ci(&spectrum, points.window, args.bootstrap, seed, args.delta)?);
    }

    let mut params = BTreeMap::new();
    params.insert("input".into(), json!(args.input.display().to_string()));
    params.insert("lo".into(), json!(args.lo));
    params.insert("hi".into(), json!(args.hi));
    params.insert("delta".into(), json!(args.delta));
    params.insert("bootstrap".into(), json!(args.bootstrap));
    params.insert("scale".into(), json!(args.scale));
    let results = serde_json::to_value(&fit).expect("fit serialize");
    let report = RunReport::new("fit", params, results, seed, ms(start));
    emit(&report, args.out.as_deref())?;

    match fit.ci95 {
        Some((lo, hi)) => println!(
            "fit: alpha = {:.6} (95% CI [{:.6}, {:.6}]), rmse {:.4}, {} points",
            fit.alpha, lo, hi, fit.rmse, fit.n_points
        ),
        None => println!(
            "fit: alpha = {:.6}, rmse {:.4}, {} points",
            fit.alpha, fit.rmse, fit.n_points
        ),
    }
    Ok(())
}

fn cmd_project(args: ProjectArgs) -> CliResult<()> {
    if args.k == 0 {
        return Err(usage("--k must be positive"));
    }
    if args.n_proj == 0 {
        return Err(usage("--n-proj must be positive"));
    }
    let seed = resolve_seed(args.seed)?;
    let start = Instant::now();

    let matrix = load_matrix(&args.input, Format::from_path(&args.input))?;
    let stats = mean_action(&matrix, args.k, args.n_proj, seed)?;

    let mut results = serde_json::to_value(&stats).expect("stats serialize");
    let obj = results.as_object_mut().expect("stats object");

    if let Some(traj_path) = &args.traj {
        let r = sample_projection(matrix.m(), args.k, seed);
        let z = project(&matrix, &r)?;
        write_trajectory_csv(&z.z, traj_path)?;
        let svg_path = traj_path.with_extension("svg");
        let chart = trajectory_chart(&z.z);
        std::fs::write(&svg_path, chart.render()).map_err(codespec::Error::Io)?;
        obj.insert("trajectory_csv".into(), json!(traj_path.display().to_string()));
    }
    if let Some(truth_path) = &args.truth {
        let truth = load_series(truth_path)?;
        let r = sample_projection(matrix.m(), args.k, seed);
        let z = project(&matrix, &r)?;
        let r2 = explained_input_variance(&z, &truth)?;
        obj.insert("explained_input_variance".into(), json!(r2));
        println!("explained input variance R^2 = {r2:.6}");
    }

    let mut params = BTreeMap::new();
    params.insert("input".into(), json!(args.input.display().to_string()));
    params.insert("k".into(), json!(args.k));
    params.insert("n_proj".into(), json!(args.n_proj));
    let report = RunReport::new("project", params, results, seed, ms(start));
    emit(&report, args.out.as_deref())?;

    println!(
        "project: mean action {:.6} +/- {:.6} over {} projections (closed form {:.6})",
        stats.mean_action, stats.std_action, stats.n_projections, stats.closed_form
    );
    Ok(())
}

fn write_trajectory_csv(z: &nalgebra::DMatrix<f64>, path: &Path) -> CliResult<()> {
    let mut text = String::new();
    let header: Vec<String> = (0..z.ncols()).map(|j| format!("z{}", j + 1)).collect();
    text.push_str(&header.join(","));
    text.push('\n');
    for i in 0..z.nrows() {
        let row: Vec<String> = (0..z.ncols()).map(|j| z[(i, j)].to_string()).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(codespec::Error::Io)?;
    Ok(())
}

fn trajectory_chart(z: &nalgebra::DMatrix<f64>) -> LineChart {
    let mut chart = LineChart::new("projected trajectory", "frame", "z");
    for j in 0..z.ncols() {
        let pts = (0..z.nrows()).map(|i| (i as f64, z[(i, j)])).collect();
        chart = chart.with(Series::new(format!("z{}", j + 1), pts));
    }
    chart
}

fn cmd_capacity_sparse(args: SparseArgs) -> CliResult<()> {
    let spec = SparseSpec::new(args.n, args.s, args.h_elem).map_err(|e| usage(e.to_string()))?;
    let seed = resolve_seed(args.seed)?;
    let start = Instant::now();

    let entropy = sparse_entropy(&spec);
    let rate = dims_per_feature(args.s, args.h_elem);
    let results = json!({
        "entropy_bits": entropy,
        "compression_rate": rate,
        "dims_per_feature": rate,
    });
    let mut params = BTreeMap::new();
    params.insert("n".into(), json!(args.n));
    params.insert("s".into(), json!(args.s));
    params.insert("h_elem".into(), json!(args.h_elem));
    let report = RunReport::new("capacity sparse", params, results, seed, ms(start));
    emit(&report, args.out.as_deref())?;

    println!(
        "capacity sparse: H = {entropy:.6} bits, compression rate {rate:.6} dims/feature"
    );
    Ok(())
}

fn cmd_capacity_dropout(args: DropoutArgs) -> CliResult<()> {
    let spec = ChannelSpec::new(args.c_base, args.m, args.d).map_err(|e| usage(e.to_string()))?;
    if !(args.tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    let seed = resolve_seed(args.seed)?;
    let start = Instant::now();

    let bounds = dropout_capacity_bounds(&spec);
    let mut results = serde_json::to_value(bounds).expect("bounds serialize");
    let obj = results.as_object_mut().expect("bounds object");

    // BA oracle on the single-neuron dropout channel, scaled by m, when the
    // alphabet is small enough.
    let alphabet_bits = args.c_base.round();
    let mut ba_line = String::new();
    if (args.c_base - alphabet_bits).abs() < 1e-9 && (1.0..=12.0).contains(&alphabet_bits) {
        let alphabet = 1usize << alphabet_bits as usize;
        if alphabet <= 4096 {
            let channel = dropout_channel_matrix(alphabet, args.d)?;
            let per_neuron = blahut_arimoto(&channel, args.tol, 100_000)?;
            obj.insert("ba_per_neuron".into(), json!(per_neuron));
            obj.insert("ba_total".into(), json!(per_neuron * args.m as f64));
            ba_line = format!(", BA oracle {:.6}", per_neuron * args.m as f64);
        }
    }

    let mut params = BTreeMap::new();
    params.insert("c_base".into(), json!(args.c_base));
    params.insert("m".into(), json!(args.m));
    params.insert("d".into(), json!(args.d));
    params.insert("tol".into(), json!(args.tol));
    let report = RunReport::new("capacity dropout", params, results, seed, ms(start));
    emit(&report, args.out.as_deref())?;

    println!(
        "capacity dropout: bounds [{:.6}, {:.6}] bits{ba_line}",
        bounds.lower, bounds.upper
    );
    Ok(())
}

fn cmd_capacity_powerlaw(args: PowerlawArgs) -> CliResult<()> {
    if args.m == 0 {
        return Err(usage("--m must be positive"));
    }
    if !(args.bits > 0.0) {
        return Err(usage("--bits must be positive"));
    }
    let seed = resolve_seed(args.seed)?;
    let start = Instant::now();

    let bound = powerlaw_entropy_bound(args.m, args.bits, args.alpha);
    let eff = effective_capacity(args.m as f64 * args.bits, args.m, args.alpha);
    let results = json!({
        "stirling_bits": bound.stirling_bits,
        "exact_bits": bound.exact_bits,
        "effective_capacity_bits": eff.bits,
        "floored": eff.floored,
    });
    let mut params = BTreeMap::new();
    params.insert("m".into(), json!(args.m));
    params.insert("bits".into(), json!(args.bits));
    params.insert("alpha".into(), json!(args.alpha));
    let report = RunReport::new("capacity powerlaw", params, results, seed, ms(start));
    emit(&report, args.out.as_deref())?;

    println!(
        "capacity powerlaw: entropy bound {:.4} bits (exact {:.4}), effective capacity {:.4} bits{}",
        bound.stirling_bits,
        bound.exact_bits,
        eff.bits,
        if eff.floored { " (floored at 0)" } else { "" }
    );
    Ok(())
}

fn cmd_capacity_ba(args: BaArgs) -> CliResult<()> {
    if !(args.tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    if args.max_iter == 0 {
        return Err(usage("--max-iter must be positive"));
    }
    let seed = resolve_seed(args.seed)?;
    let start = Instant::now();

    let (channel, desc) = match (&args.channel, args.erasure_bits, args.dropout_alphabet) {
        (Some(path), None, None) => (
            DiscreteChannel::from_csv(path)?,
            format!("csv {}", path.display()),
        ),
        (None, Some(bits), None) => {
            let d = args.d.ok_or_else(|| usage("--erasure-bits requires --d"))?;
            if !(0.0..=1.0).contains(&d) {
                return Err(usage("--d must lie in [0, 1]"));
            }
            (erasure_channel_matrix(bits, d)?, format!("erasure n={bits} d={d}"))
        }
        (None, None, Some(alphabet)) => {
            let d = args.d.ok_or_else(|| usage("--dropout-alphabet requires --d"))?;
            if !(0.0..=1.0).contains(&d) {
                return Err(usage("--d must lie in [0, 1]"));
            }
            (dropout_channel_matrix(alphabet, d)?, format!("dropout k={alphabet} d={d}"))
        }
        _ => {
            return Err(usage(
                "specify exactly one of --channel, --erasure-bits, --dropout-alphabet",
            ))
        }
    };
    let (lower, upper) = blahut_arimoto_bracket(&channel, args.tol, args.max_iter)?;
    let capacity = 0.5 * (lower + upper);

    let results = json!({
        "capacity_bits": capacity,
        "bracket_lower": lower,
        "bracket_upper": upper,
        "n_inputs": channel.n_inputs(),
        "n_outputs": channel.n_outputs(),
    });
    let mut params = BTreeMap::new();
    params.insert("channel".into(), json!(desc));
    params.insert("tol".into(), json!(args.tol));
    params.insert("max_iter".into(), json!(args.max_iter));
    let report = RunReport::new("capacity ba", params, results, seed, ms(start));
    emit(&report, args.out.as_deref())?;

    println!("capacity ba: {capacity:.9} bits (bracket [{lower:.9}, {upper:.9}])");
    Ok(())
}

fn parse_code(text: &str) -> CliResult<Code> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        ["naive"] => Ok(Code::Naive),
        ["repetition", k] => k
            .parse()
            .map(Code::Repetition)
            .map_err(|_| usage(format!("bad repetition factor {k:?}"))),
        ["linear", k, m] => {
            let k = k.parse().map_err(|_| usage(format!("bad payload size {k:?}")))?;
            let m = m.parse().map_err(|_| usage(format!("bad code length {m:?}")))?;
            Ok(Code::Linear { k_payload: k, m_code: m })
        }
        _ => Err(usage(format!(
            "bad --code {text:?} (naive | repetition:<k> | linear:<k>:<m>)"
        ))),
    }
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let code = parse_code(&args.code)?;
    let seed = resolve_seed(args.seed)?;
    let config = CascadeConfig {
        d: args.d,
        layers: args.layers,
        code,
        alphabet_bits: args.bits,
        trials: args.trials,
        seed,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let start = Instant::now();

    let result = simulate_cascade(&config)?;

    if let Some(csv) = &args.out {
        let mut text =
            String::from("layer,empirical_mi,theoretical_naive,theoretical_ceiling,survival_fraction\n");
        for l in 0..=args.layers {
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                l,
                result.per_layer_mi[l],
                result.theoretical_naive[l],
                result.theoretical_ceiling,
                result.survival_fraction[l]
            ));
        }
        std::fs::write(csv, text).map_err(codespec::Error::Io)?;
    }

    let mut params = BTreeMap::new();
    params.insert("d".into(), json!(args.d));
    params.insert("layers".into(), json!(args.layers));
    params.insert("code".into(), json!(args.code));
    params.insert("bits".into(), json!(args.bits));
    params.insert("trials".into(), json!(args.trials));
    let results = serde_json::to_value(&result).expect("cascade serialize");
    let report = RunReport::new("simulate", params, results, seed, ms(start));
    emit(&report, args.json.as_deref())?;

    println!(
        "simulate: survival after {} layers {:.4} (naive prediction {:.4}), final MI {:.4} bits",
        args.layers,
        result.survival_fraction[args.layers],
        (1.0 - args.d).powi(args.layers as i32),
        result.per_layer_mi[args.layers]
    );
    Ok(())
}

fn cmd_gen_dots(args: DotsArgs) -> CliResult<()> {
    if args.frames < 2 {
        return Err(usage("--frames must be at least 2"));
    }
    if args.size == 0 {
        return Err(usage("--size must be positive"));
    }
    if args.radius < 0.0 || args.dot_radius < 0.0 {
        return Err(usage("radii must be nonnegative"));
    }
    let seed = resolve_seed(args.seed)?;
    let start = Instant::now();

    let spec = StimulusSpec::centered(args.frames, args.size, args.radius, args.dot_radius);
    let (frames, coords) = gen_dot_stimulus(&spec)?;
    save_matrix(&frames, &args.out, Format::from_path(&args.out))?;
    save_series(&coords, &args.coords)?;

    let mut params = BTreeMap::new();
    params.insert("frames".into(), json!(args.frames));
    params.insert("size".into(), json!(args.size));
    params.insert("radius".into(), json!(args.radius));
    params.insert("dot_radius".into(), json!(args.dot_radius));
    let results = json!({
        "n": frames.n(),
        "m": frames.m(),
        "frames_path": args.out.display().to_string(),
        "coords_path": args.coords.display().to_string(),
    });
    let report = RunReport::new("gen dots", params, results, seed, ms(start));
    emit(&report, args.json.as_deref())?;

    println!(
        "gen dots: {}x{} frames -> {}, coords -> {}",
        frames.n(),
        frames.m(),
        args.out.display(),
        args.coords.display()
    );
    Ok(())
}

fn cmd_gen_synth(args: SynthArgs) -> CliResult<()> {
    if args.n < 2 {
        return Err(usage("--n must be at least 2"));
    }
    if args.m == 0 {
        return Err(usage("--m must be positive"));
    }
    let seed = resolve_seed(args.seed)?;
    let start = Instant::now();

    let spec = SynthSpec { n: args.n, m: args.m, alpha: args.alpha, seed, rotate: args.rotate };
    let matrix = gen_powerlaw_activations(&spec)?;
    save_matrix(&matrix, &args.out, Format::from_path(&args.out))?;

    let mut params = BTreeMap::new();
    params.insert("n".into(), json!(args.n));
    params.insert("m".into(), json!(args.m));
    params.insert("alpha".into(), json!(args.alpha));
    params.insert("rotate".into(), json!(args.rotate));
    let results = json!({
        "n": matrix.n(),
        "m": matrix.m(),
        "path": args.out.display().to_string(),
    });
    let report = RunReport::new("gen synth", params, results, seed, ms(start));
    emit(&report, args.json.as_deref())?;

    println!(
        "gen synth: {}x{} matrix with alpha {} -> {}",
        matrix.n(),
        matrix.m(),
        args.alpha,
        args.out.display()
    );
    Ok(())
}

fn cmd_report(args: ReportArgs) -> CliResult<()> {
    let seed = resolve_seed(args.seed)?;
    let start = Instant::now();

    let mut entries: Vec<(String, RunReport)> = Vec::new();
    let dir = std::fs::read_dir(&args.dir).map_err(codespec::Error::Io)?;
    let mut paths: Vec<PathBuf> = dir
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    for path in &paths {
        if let Ok(report) = RunReport::read_json(path) {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            entries.push((name, report));
        }
    }
    if entries.is_empty() {
        return Err(CliError::Data(codespec::Error::value(format!(
            "no run reports found in {}",
            args.dir.display()
        ))));
    }

    let mut by_command: BTreeMap<String, u64> = BTreeMap::new();
    for (_, r) in &entries {
        *by_command.entry(r.command.clone()).or_insert(0) += 1;
    }
    let mut fits = Vec::new();
    for (name, r) in &entries {
        if r.command == "fit" {
            fits.push(json!({
                "source": name,
                "alpha": r.results.get("alpha").cloned().unwrap_or(Value::Null),
                "ci95": r.results.get("ci95").cloned().unwrap_or(Value::Null),
            }));
        }
    }

    let out_dir = args.out.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut figures = Vec::new();

    // Log-log spectrum figure with one dashed fit line per fit report.
    let mut spectrum_chart =
        LineChart::new("eigenspectra", "component", "explained variance").log_log();
    let mut have_spectrum = false;
    for (name, r) in &entries {
        if r.command != "spectrum" {
            continue;
        }
        if let Some(vars) = r.results.get("variances").and_then(Value::as_array) {
            let pts: Vec<(f64, f64)> = vars
                .iter()
                .filter_map(Value::as_f64)
                .enumerate()
                .map(|(i, v)| ((i + 1) as f64, v))
                .collect();
            spectrum_chart = spectrum_chart.with(Series::new(name.clone(), pts));
            have_spectrum = true;
        }
    }
    for (name, r) in &entries {
        if r.command != "fit" {
            continue;
        }
        let (Some(alpha), Some(intercept)) = (
            r.results.get("alpha").and_then(Value::as_f64),
            r.results.get("intercept").and_then(Value::as_f64),
        ) else {
            continue;
        };
        let window = r
            .results
            .get("window")
            .and_then(Value::as_array)
            .and_then(|w| {
                Some((w.first()?.as_f64()?, w.get(1)?.as_f64()?))
            })
            .unwrap_or((10.0, 50.0));
        let line = |i: f64| (i, (intercept + alpha * i.ln()).exp());
        spectrum_chart = spectrum_chart.with(Series::dashed(
            format!("{name} (alpha {alpha:.2})"),
            vec![line(window.0), line(window.1)],
        ));
        have_spectrum = true;
    }
    if have_spectrum {
        let path = out_dir.join("spectrum.svg");
        std::fs::write(&path, spectrum_chart.render()).map_err(codespec::Error::Io)?;
        figures.push(path.display().to_string());
    }

    // Cascade MI curves.
    let mut cascade_chart = LineChart::new("cascade information decay", "layer", "MI (bits)");
    let mut have_cascade = false;
    for (name, r) in &entries {
        if r.command != "simulate" {
            continue;
        }
        if let Some(mi) = r.results.get("per_layer_mi").and_then(Value::as_array) {
            let pts: Vec<(f64, f64)> = mi
                .iter()
                .filter_map(Value::as_f64)
                .enumerate()
                .map(|(l, v)| (l as f64, v))
                .collect();
            cascade_chart = cascade_chart.with(Series::new(name.clone(), pts));
            have_cascade = true;
        }
        if let Some(naive) = r.results.get("theoretical_naive").and_then(Value::as_array) {
            let pts: Vec<(f64, f64)> = naive
                .iter()
                .filter_map(Value::as_f64)
                .enumerate()
                .map(|(l, v)| (l as f64, v))
                .collect();
            cascade_chart = cascade_chart.with(Series::dashed(format!("{name} naive"), pts));
        }
    }
    if have_cascade {
        let path = out_dir.join("cascade.svg");
        std::fs::write(&path, cascade_chart.render()).map_err(codespec::Error::Io)?;
        figures.push(path.display().to_string());
    }

    // Predicted action vs alpha, with measured points from project reports
    // that carry an alpha parameter.
    let mut action_chart = LineChart::new("predicted action vs alpha", "alpha", "action");
    let curve: Vec<(f64, f64)> = (0..40)
        .map(|i| -3.0 + 0.047 * i as f64)
        .filter_map(|a| {
            codespec::projection::predicted_action_limit(a, 1e-8)
                .ok()
                .map(|v| (a, v))
        })
        .collect();
    action_chart = action_chart.with(Series::dashed("zeta prediction", curve));
    let mut measured = Vec::new();
    for (_, r) in &entries {
        if r.command != "project" {
            continue;
        }
        let (Some(alpha), Some(mean)) = (
            r.parameters.get("alpha").and_then(Value::as_f64),
            r.results.get("mean_action").and_then(Value::as_f64),
        ) else {
            continue;
        };
        measured.push((alpha, mean));
    }
    if !measured.is_empty() {
        measured.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        action_chart = action_chart.with(Series::new("measured", measured));
    }
    let path = out_dir.join("action.svg");
    std::fs::write(&path, action_chart.render()).map_err(codespec::Error::Io)?;
    figures.push(path.display().to_string());

    let results = json!({
        "n_reports": entries.len(),
        "by_command": by_command,
        "fits": fits,
        "figures": figures,
    });
    let mut params = BTreeMap::new();
    params.insert("dir".into(), json!(args.dir.display().to_string()));
    let report = RunReport::new("report", params, results, seed, ms(start));
    report.write_json(&args.out)?;

    println!(
        "report: aggregated {} run reports from {} -> {}",
        entries.len(),
        args.dir.display(),
        args.out.display()
    );
    Ok(())
}

fn ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}
