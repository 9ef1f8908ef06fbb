//! ALM and BMP extensions of a two-variable mean to `n` variables.
//!
//! Both engines iterate on an `n`-tuple of SPD matrices. The ALM update
//! replaces each matrix by the `(n-1)`-variable mean of the others; the BMP
//! update moves each matrix an `(n-1)/n` fraction toward that mean along the
//! weighted-mean path. The `(n-1)`-variable mean is itself a converged run of
//! the same engine, so the recursion bottoms out at the two-variable kernel.
//!
//! Each step records the Lyapunov quantities
//! `a = sum_i trace(X_i^2)` and `e = sum_{i<j} ||X_i - X_j||_F^2` together
//! with the scale-free gauge diameter `max_{i<j} R(X_i, X_j) - 1`;
//! `a` decreases by at least `(k/8) z_n e` per step, which drives `e` to zero
//! and the tuple to a common limit.

use serde::Serialize;

use crate::error::{MeanError, Result};
use crate::kernels::{mean2, pullback_centroid, MeanKernel, PullbackMean};
use crate::spd::{euclid_dist, r_gap, SpdMatrix};
use crate::weighted::{weighted_mean, WeightedMeanConfig};

/// Which symmetrization engine produced a trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MultiMethod {
    Alm,
    Bmp,
}

impl MultiMethod {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "alm" => Ok(MultiMethod::Alm),
            "bmp" => Ok(MultiMethod::Bmp),
            _ => Err(MeanError::ParseError(format!(
                "unknown method '{name}' (expected alm or bmp)"
            ))),
        }
    }
}

/// Configuration for the n-variable engines.
#[derive(Clone, Copy, Debug)]
pub struct MultiMeanConfig {
    /// Convergence tolerance: a step converges when both
    /// `e <= (tol * sum_i ||X_i^0||_F)^2` and the gauge diameter is `<= tol`.
    pub tol: f64,
    /// Outer iteration cap per recursion level.
    pub max_iters: u32,
    /// Dyadic-process configuration for the BMP weighted step.
    pub inner_cfg: WeightedMeanConfig,
    /// Cap on the variable count; the recursive cost grows factorially.
    pub max_n: usize,
}

impl Default for MultiMeanConfig {
    fn default() -> Self {
        MultiMeanConfig {
            tol: 1e-10,
            max_iters: 200,
            inner_cfg: WeightedMeanConfig::default(),
            max_n: 8,
        }
    }
}

impl MultiMeanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(MeanError::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters < 1 {
            return Err(MeanError::InvalidConfig("max_iters must be >= 1".into()));
        }
        self.inner_cfg.validate()
    }

    /// Configuration for the recursive `(n-1)`-variable runs: one decade
    /// tighter, so inner error stays below the outer tolerance.
    fn inner(&self) -> MultiMeanConfig {
        MultiMeanConfig {
            tol: self.tol / 10.0,
            ..*self
        }
    }

    /// Dyadic-process configuration for this level's weighted steps. The
    /// weighted solve must stay two decades below the level tolerance or the
    /// spread stalls at solver noise before the stopping rule fires; floored
    /// at the resolution of the gauge itself.
    fn weighted_cfg(&self) -> WeightedMeanConfig {
        WeightedMeanConfig {
            tol: self.inner_cfg.tol.min(self.tol * 1e-2).max(2e-15),
            ..self.inner_cfg
        }
    }
}

/// One recorded step of an ALM/BMP run.
#[derive(Clone, Debug)]
pub struct TraceStep {
    pub l: u32,
    pub iterates: Vec<SpdMatrix>,
    /// `sum_i trace(X_i^2)`.
    pub a: f64,
    /// `sum_{i<j} d_E(X_i, X_j)^2`.
    pub e: f64,
    /// `max_{i<j} R(X_i, X_j) - 1`.
    pub r_diam: f64,
}

/// Full record of an ALM/BMP run.
#[derive(Clone, Debug)]
pub struct IterationTrace {
    pub method: MultiMethod,
    pub n: usize,
    pub kernel: String,
    pub steps: Vec<TraceStep>,
    pub converged: bool,
    pub limit: Option<SpdMatrix>,
}

fn lyapunov_step(l: u32, iterates: &[SpdMatrix]) -> Result<TraceStep> {
    let n = iterates.len();
    let a = iterates.iter().map(|x| x.frobenius_norm_squared()).sum();
    let mut e = 0.0;
    let mut r_diam: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclid_dist(&iterates[i], &iterates[j])?.value;
            e += d * d;
            r_diam = r_diam.max(r_gap(&iterates[i], &iterates[j])?);
        }
    }
    Ok(TraceStep {
        l,
        iterates: iterates.to_vec(),
        a,
        e,
        r_diam,
    })
}

fn check_inputs(xs: &[SpdMatrix], cfg: &MultiMeanConfig) -> Result<()> {
    cfg.validate()?;
    if xs.len() < 2 {
        return Err(MeanError::InvalidConfig(format!(
            "need at least 2 matrices, got {}",
            xs.len()
        )));
    }
    if xs.len() > cfg.max_n {
        return Err(MeanError::InvalidConfig(format!(
            "n = {} exceeds the configured cap max_n = {} (recursive cost grows factorially)",
            xs.len(),
            cfg.max_n
        )));
    }
    let dim = xs[0].dim();
    for x in xs {
        if x.dim() != dim {
            return Err(MeanError::DimensionMismatch {
                left: dim,
                right: x.dim(),
            });
        }
    }
    Ok(())
}

fn two_variable_trace(
    method: MultiMethod,
    kernel: &MeanKernel,
    xs: &[SpdMatrix],
) -> Result<(SpdMatrix, IterationTrace)> {
    let m = mean2(kernel, &xs[0], &xs[1])?;
    let trace = IterationTrace {
        method,
        n: 2,
        kernel: kernel.label().to_string(),
        steps: vec![lyapunov_step(0, xs)?],
        converged: true,
        limit: Some(m.clone()),
    };
    Ok((m, trace))
}

/// The tuple of all entries except index `i`.
fn drop_index(xs: &[SpdMatrix], i: usize) -> Vec<SpdMatrix> {
    xs.iter()
        .enumerate()
        .filter_map(|(j, x)| (j != i).then(|| x.clone()))
        .collect()
}

fn run_engine(
    method: MultiMethod,
    kernel: &MeanKernel,
    xs: &[SpdMatrix],
    cfg: &MultiMeanConfig,
) -> Result<(SpdMatrix, IterationTrace)> {
    check_inputs(xs, cfg)?;
    if xs.len() == 2 {
        return two_variable_trace(method, kernel, xs);
    }
    let n = xs.len();
    let scale: f64 = xs.iter().map(|x| x.frobenius_norm()).sum();
    let e_stop = (cfg.tol * scale).powi(2);
    let inner = cfg.inner();
    let wcfg = cfg.weighted_cfg();
    let bmp_weight = (n - 1) as f64 / n as f64;

    let mut current = xs.to_vec();
    let mut steps = Vec::new();
    for l in 0..=cfg.max_iters {
        let step = lyapunov_step(l, &current)?;
        let done = step.e <= e_stop && step.r_diam <= cfg.tol;
        steps.push(step);
        if done {
            let limit = current[0].clone();
            return Ok((
                limit.clone(),
                IterationTrace {
                    method,
                    n,
                    kernel: kernel.label().to_string(),
                    steps,
                    converged: true,
                    limit: Some(limit),
                },
            ));
        }
        if l == cfg.max_iters {
            break;
        }

        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let rest = drop_index(&current, i);
            let (sub, _) = run_engine(method, kernel, &rest, &inner)?;
            let updated = match method {
                MultiMethod::Alm => sub,
                MultiMethod::Bmp => {
                    weighted_mean(kernel, bmp_weight, &current[i], &sub, &wcfg)?.0
                }
            };
            next.push(updated);
        }
        current = next;
    }
    Err(MeanError::MaxItersExceeded {
        iters: cfg.max_iters,
        trace: Box::new(IterationTrace {
            method,
            n,
            kernel: kernel.label().to_string(),
            steps,
            converged: false,
            limit: None,
        }),
    })
}

/// ALM extension: `X_i <- M(X_1, .., X_{i-1}, X_{i+1}, .., X_n)` iterated to
/// a common limit. For `n = 2` this is the kernel itself.
pub fn alm_mean(
    kernel: &MeanKernel,
    xs: &[SpdMatrix],
    cfg: &MultiMeanConfig,
) -> Result<(SpdMatrix, IterationTrace)> {
    run_engine(MultiMethod::Alm, kernel, xs, cfg)
}

/// BMP extension: `X_i <- M_{(n-1)/n}(X_i, M(rest))` iterated to a common
/// limit. The weighted step runs the dyadic process under `cfg.inner_cfg`.
pub fn bmp_mean(
    kernel: &MeanKernel,
    xs: &[SpdMatrix],
    cfg: &MultiMeanConfig,
) -> Result<(SpdMatrix, IterationTrace)> {
    run_engine(MultiMethod::Bmp, kernel, xs, cfg)
}

/// Runs the engine selected by `method`.
pub fn multi_mean(
    method: MultiMethod,
    kernel: &MeanKernel,
    xs: &[SpdMatrix],
    cfg: &MultiMeanConfig,
) -> Result<(SpdMatrix, IterationTrace)> {
    run_engine(method, kernel, xs, cfg)
}

/// Per-step Frobenius distance between the pullback centroid of the iterates
/// and the step-0 centroid.
///
/// For a kernel matching the pullback geometry (arithmetic with the identity,
/// harmonic with the inverse) the drift stays at numerical noise; mismatched
/// pairs drift freely.
pub fn centroid_drift(trace: &IterationTrace, p: &PullbackMean) -> Result<Vec<f64>> {
    let mut drifts = Vec::with_capacity(trace.steps.len());
    let mut initial: Option<SpdMatrix> = None;
    for step in &trace.steps {
        let c = pullback_centroid(p, &step.iterates)?;
        match &initial {
            None => {
                drifts.push(0.0);
                initial = Some(c);
            }
            Some(c0) => drifts.push(euclid_dist(&c, c0)?.value),
        }
    }
    Ok(drifts)
}
