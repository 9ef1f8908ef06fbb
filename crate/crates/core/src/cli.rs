//! Command-line front end: `mean2`, `wmean`, `nmean`, `verify`, `rate`.
//!
//! Exit codes: 0 on success, 1 on computational failure (an iteration cap was
//! hit or a kernel rejected its input mid-run), 2 on usage or parse errors.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::diagnostics::{
    estimate_b2_with, estimate_order, estimate_order_pooled, verify_centroid_invariance,
    verify_sandwich, verify_trace_inequality,
};
use crate::error::MeanError;
use crate::io::{
    iteration_trace_json, format_matrix, parse_matrix_file, weighted_trace_json,
};
use crate::kernels::{KernelKind, MeanKernel, PullbackMean};
use crate::multivariate::{multi_mean, MultiMeanConfig, MultiMethod};
use crate::sampling::{contract_toward_centroid, random_spd_cluster, rng_from_seed};
use crate::spd::SpdMatrix;
use crate::weighted::{weighted_mean, WeightedMeanConfig};

#[derive(Parser)]
#[command(
    name = "spdmeans",
    version,
    about = "Kubo-Ando matrix means: two-variable kernels, dyadic weighted means, \
             ALM/BMP n-variable extensions, and verification reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-variable mean of two matrix files.
    Mean2 {
        #[command(flatten)]
        kernel: KernelArg,
        /// Input matrix files (exactly two).
        #[arg(num_args = 2, value_names = ["A", "B"])]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weighted mean M_t(A, B) through the dyadic process.
    Wmean {
        #[command(flatten)]
        kernel: KernelArg,
        /// Weight in [0, 1].
        #[arg(short, long)]
        t: f64,
        /// Stopping threshold on R(A_n, B_n) - 1.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Dyadic depth cap.
        #[arg(long, default_value_t = 64)]
        max_depth: u32,
        /// Disable exact termination at dyadic weights.
        #[arg(long)]
        no_dyadic_shortcut: bool,
        #[arg(num_args = 2, value_names = ["A", "B"])]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the per-step trace as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Include full iterates in the trace.
        #[arg(long)]
        trace_full: bool,
    },
    /// n-variable mean by the ALM or BMP iteration.
    Nmean {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[command(flatten)]
        kernel: KernelArg,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_iters: u32,
        /// Cap on the number of input matrices.
        #[arg(long, default_value_t = 8)]
        max_n: usize,
        #[arg(num_args = 2.., value_name = "MATRIX")]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        trace_full: bool,
    },
    /// Sampled verification reports (JSON on stdout).
    Verify {
        #[arg(long, value_enum)]
        check: CheckArg,
        #[arg(long, default_value = "geometric")]
        kernel: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        /// Seed for the sampled inputs (reports are deterministic per seed).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Family bound parameter for trace-ineq.
        #[arg(long, default_value_t = 2.0)]
        k: f64,
        /// Weight for trace-ineq.
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        /// Engine for centroid/order checks.
        #[arg(long, value_enum, default_value_t = MethodArg::Alm)]
        method: MethodArg,
        /// Variable count for centroid/order checks.
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Pullback geometry for the centroid check
        /// (identity | square | inverse); inferred from the kernel if omitted.
        #[arg(long)]
        pullback: Option<String>,
        /// Gauge-diameter bound on sampled inputs for the order check.
        #[arg(long, default_value_t = 1.2)]
        r_diam: f64,
        /// Trailing steps used by the order fit.
        #[arg(long, default_value_t = 4)]
        window: usize,
        /// Contraction levels for the order fit. With 1 the fit uses a single
        /// trace; larger values rerun the same tuple contracted toward its
        /// centroid by 1/2 per level and pool the step pairs (needed for the
        /// cubically convergent engine, which hits arithmetic noise after one
        /// step).
        #[arg(long, default_value_t = 1)]
        sweep: usize,
        /// Stencil width for the b2 check.
        #[arg(long, default_value_t = 1e-3)]
        stencil_eps: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an n-variable iteration and fit its convergence order.
    Rate {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[command(flatten)]
        kernel: KernelArg,
        #[arg(long, default_value_t = 4)]
        window: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_iters: u32,
        #[arg(num_args = 2.., value_name = "MATRIX")]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct KernelArg {
    /// Kernel name: arithmetic, harmonic, geometric, logarithmic, square,
    /// or kfamily:<k>.
    #[arg(long)]
    kernel: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Alm,
    Bmp,
}

impl From<MethodArg> for MultiMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Alm => MultiMethod::Alm,
            MethodArg::Bmp => MultiMethod::Bmp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    Sandwich,
    TraceIneq,
    Centroid,
    Order,
    B2,
}

enum CliError {
    /// Bad flags or unreadable/invalid input files: exit 2.
    Usage(String),
    /// The computation itself failed: exit 1.
    Computation(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Computation(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Computation(m) => m,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn computation(e: impl std::fmt::Display) -> CliError {
    CliError::Computation(e.to_string())
}

fn load_inputs(paths: &[PathBuf]) -> Result<Vec<SpdMatrix>, CliError> {
    paths
        .iter()
        .map(|p| parse_matrix_file(p).map(|l| l.matrix).map_err(usage))
        .collect()
}

fn parse_kernel(name: &str) -> Result<MeanKernel, CliError> {
    MeanKernel::parse(name).map_err(usage)
}

fn emit(out: &Option<PathBuf>, payload: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, format!("{payload}\n")).map_err(usage),
        None => {
            println!("{payload}");
            Ok(())
        }
    }
}

fn write_trace(path: &Option<PathBuf>, payload: String) -> Result<(), CliError> {
    if let Some(path) = path {
        fs::write(path, payload + "\n").map_err(usage)?;
    }
    Ok(())
}

/// Parses `argv` and runs one subcommand, returning the process exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message (including --help/--version).
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Mean2 { kernel, inputs, out } => {
            let kernel = parse_kernel(&kernel.kernel)?;
            let ms = load_inputs(&inputs)?;
            let m = crate::kernels::mean2(&kernel, &ms[0], &ms[1]).map_err(computation)?;
            emit(&out, &format_matrix(&m, None))
        }
        Command::Wmean {
            kernel,
            t,
            tol,
            max_depth,
            no_dyadic_shortcut,
            inputs,
            out,
            trace,
            trace_full,
        } => {
            let kernel = parse_kernel(&kernel.kernel)?;
            if !(0.0..=1.0).contains(&t) {
                return Err(usage(format!("t must lie in [0, 1], got {t}")));
            }
            let cfg = WeightedMeanConfig {
                tol,
                max_depth,
                dyadic_shortcut: !no_dyadic_shortcut,
            };
            cfg.validate().map_err(usage)?;
            let ms = load_inputs(&inputs)?;
            let (m, steps) =
                weighted_mean(&kernel, t, &ms[0], &ms[1], &cfg).map_err(computation)?;
            write_trace(&trace, weighted_trace_json(&steps, trace_full))?;
            emit(&out, &format_matrix(&m, None))
        }
        Command::Nmean {
            method,
            kernel,
            tol,
            max_iters,
            max_n,
            inputs,
            out,
            trace,
            trace_full,
        } => {
            let kernel = parse_kernel(&kernel.kernel)?;
            let cfg = MultiMeanConfig {
                tol,
                max_iters,
                max_n,
                ..MultiMeanConfig::default()
            };
            cfg.validate().map_err(usage)?;
            let ms = load_inputs(&inputs)?;
            let (m, tr) =
                multi_mean(method.into(), &kernel, &ms, &cfg).map_err(computation)?;
            write_trace(&trace, iteration_trace_json(&tr, trace_full))?;
            emit(&out, &format_matrix(&m, None))
        }
        Command::Verify {
            check,
            kernel,
            samples,
            dim,
            seed,
            k,
            t,
            method,
            n,
            pullback,
            r_diam,
            window,
            sweep,
            stencil_eps,
            tol,
            out,
        } => {
            let kernel = parse_kernel(&kernel)?;
            let payload = match check {
                CheckArg::Sandwich => {
                    if !kernel.is_kubo_ando() {
                        return Err(usage(format!(
                            "sandwich check requires a Kubo-Ando kernel, got '{}'",
                            kernel.label()
                        )));
                    }
                    let rep =
                        verify_sandwich(&kernel, samples, dim, seed).map_err(computation)?;
                    to_json(&rep)?
                }
                CheckArg::TraceIneq => {
                    let rep = verify_trace_inequality(&kernel, k, t, samples, dim, seed)
                        .map_err(computation)?;
                    to_json(&rep)?
                }
                CheckArg::Centroid => {
                    let p = centroid_pullback(&kernel, pullback.as_deref())?;
                    let cfg = MultiMeanConfig {
                        tol,
                        ..MultiMeanConfig::default()
                    };
                    let rep = verify_centroid_invariance(
                        method.into(),
                        &kernel,
                        &p,
                        n,
                        dim,
                        seed,
                        &cfg,
                    )
                    .map_err(computation)?;
                    to_json(&rep)?
                }
                CheckArg::Order => {
                    let mut rng = rng_from_seed(seed);
                    if r_diam <= 1.0 {
                        return Err(usage("r-diam must exceed 1".to_string()));
                    }
                    if sweep < 1 {
                        return Err(usage("sweep must be at least 1".to_string()));
                    }
                    let xs = random_spd_cluster(&mut rng, dim, n, r_diam);
                    let mut cfg = MultiMeanConfig {
                        tol,
                        ..MultiMeanConfig::default()
                    };
                    // tighter inner weighted steps so the last epsilons sit
                    // above the noise floor
                    cfg.inner_cfg.tol = 1e-14;
                    let rep = if sweep == 1 {
                        let (_, tr) = multi_mean(method.into(), &kernel, &xs, &cfg)
                            .map_err(computation)?;
                        estimate_order(&tr, window).map_err(computation)?
                    } else {
                        let mut traces = Vec::with_capacity(sweep);
                        let mut s = 1.0;
                        for _ in 0..sweep {
                            let scaled = contract_toward_centroid(&xs, s);
                            let (_, tr) = multi_mean(method.into(), &kernel, &scaled, &cfg)
                                .map_err(computation)?;
                            traces.push(tr);
                            s *= 0.5;
                        }
                        estimate_order_pooled(&traces, window).map_err(computation)?
                    };
                    to_json(&rep)?
                }
                CheckArg::B2 => {
                    let rep = estimate_b2_with(
                        &kernel,
                        &WeightedMeanConfig::default(),
                        stencil_eps,
                        &crate::diagnostics::DEFAULT_T_SAMPLES,
                    )
                    .map_err(computation)?;
                    to_json(&rep)?
                }
            };
            emit(&out, &payload)
        }
        Command::Rate {
            method,
            kernel,
            window,
            tol,
            max_iters,
            inputs,
            out,
        } => {
            let kernel = parse_kernel(&kernel.kernel)?;
            let cfg = {
                let mut cfg = MultiMeanConfig {
                    tol,
                    max_iters,
                    ..MultiMeanConfig::default()
                };
                cfg.inner_cfg.tol = 1e-14;
                cfg
            };
            cfg.validate().map_err(usage)?;
            let ms = load_inputs(&inputs)?;
            let (_, tr) = multi_mean(method.into(), &kernel, &ms, &cfg).map_err(computation)?;
            let rep = estimate_order(&tr, window).map_err(computation)?;
            emit(&out, &to_json(&rep)?)
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| computation(MeanError::ParseError(e.to_string())))
}

fn centroid_pullback(
    kernel: &MeanKernel,
    requested: Option<&str>,
) -> Result<PullbackMean, CliError> {
    if let Some(name) = requested {
        return match name {
            "identity" => Ok(PullbackMean::identity()),
            "square" => Ok(PullbackMean::square()),
            "inverse" => Ok(PullbackMean::inverse()),
            _ => Err(usage(format!(
                "unknown pullback '{name}' (expected identity, square, or inverse)"
            ))),
        };
    }
    match kernel.kind() {
        KernelKind::Arithmetic => Ok(PullbackMean::identity()),
        KernelKind::Harmonic => Ok(PullbackMean::inverse()),
        KernelKind::SquareMean => Ok(PullbackMean::square()),
        _ => Err(usage(format!(
            "kernel '{}' has no canonical pullback; pass --pullback",
            kernel.label()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_weight_with_usage_code() {
        let code = run_command([
            "spdmeans", "wmean", "--kernel", "harmonic", "-t", "1.5", "a.json", "b.json",
        ]);
        assert_eq!(code, 2);
    }

    #[test]
    fn rejects_unknown_kernel() {
        let code = run_command(["spdmeans", "verify", "--check", "sandwich", "--kernel", "median"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn rejects_missing_file() {
        let code = run_command([
            "spdmeans",
            "mean2",
            "--kernel",
            "geometric",
            "/nonexistent/a.json",
            "/nonexistent/b.json",
        ]);
        assert_eq!(code, 2);
    }
}
