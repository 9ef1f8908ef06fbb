//! Empirical verification of the quantitative claims: convergence-order
//! fitting from iteration traces, the quadratic expansion coefficient of the
//! weighted-mean generator family, and sampled inequality suites.

use serde::Serialize;

use crate::error::{MeanError, Result};
use crate::kernels::{k_family_mean, mean2, KernelKind, MeanKernel, PullbackMean};
use crate::multivariate::{centroid_drift, multi_mean, IterationTrace, MultiMeanConfig, MultiMethod};
use crate::sampling::{random_spd_default, rng_from_seed};
use crate::spd::{sym_eigen, SpdMatrix};
use crate::weighted::{f_t_eval, weighted_mean, WeightedMeanConfig};

/// Errors smaller than `NOISE_FLOOR_FACTOR * machine epsilon * scale` are
/// excluded from rate fits.
pub const NOISE_FLOOR_FACTOR: f64 = 1e3;

/// Steps within this factor of the terminal epsilon are also excluded: the
/// limit is the converged iterate, so the terminal epsilon is the accuracy
/// of the limit estimate itself, and errors near it carry no rate signal.
pub const LIMIT_CONTAMINATION_FACTOR: f64 = 50.0;

/// Default number of trailing steps used for the order fit; asymptotic rates
/// only hold near the limit.
pub const DEFAULT_RATE_WINDOW: usize = 4;

/// Fitted convergence order of an iteration trace.
#[derive(Clone, Debug, Serialize)]
pub struct RateReport {
    pub method: MultiMethod,
    pub kernel: String,
    /// Least-squares slope of `log eps_{l+1}` against `log eps_l`.
    pub fitted_order: f64,
    /// Number of epsilon values in the fit window.
    pub window: usize,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    /// `eps_l = max_i ||X_i^l - limit||_F` for every recorded step.
    pub epsilons: Vec<f64>,
    /// Set when fewer usable steps than requested were available.
    pub low_confidence: bool,
}

/// Fits the convergence order from a converged trace.
///
/// The error sequence is `eps_l = max_i ||X_i^l - limit||_F`; values at or
/// below the noise floor are dropped, and the slope is fitted over the last
/// `window` usable values. At least three usable values are required; when
/// fewer than `window` are available the fit uses all of them and flags low
/// confidence.
pub fn estimate_order(trace: &IterationTrace, window: usize) -> Result<RateReport> {
    let limit = match (&trace.limit, trace.converged) {
        (Some(limit), true) => limit,
        _ => {
            return Err(MeanError::InsufficientSteps {
                available: 0,
                needed: 3,
            })
        }
    };
    if window < 3 {
        return Err(MeanError::InvalidConfig(format!(
            "rate window must span at least 3 points, got {window}"
        )));
    }
    let scale = limit.frobenius_norm();
    let floor = NOISE_FLOOR_FACTOR * f64::EPSILON * scale;

    let epsilons: Vec<f64> = trace
        .steps
        .iter()
        .map(|s| {
            s.iterates
                .iter()
                .map(|x| (x.matrix() - limit.matrix()).norm())
                .fold(0.0, f64::max)
        })
        .collect();

    let cutoff = floor.max(LIMIT_CONTAMINATION_FACTOR * epsilons.last().copied().unwrap_or(0.0));
    let usable: Vec<f64> = epsilons
        .iter()
        .copied()
        .take_while(|&e| e > cutoff)
        .collect();
    if usable.len() < 3 {
        return Err(MeanError::InsufficientSteps {
            available: usable.len(),
            needed: 3,
        });
    }
    let low_confidence = usable.len() < window + 1;
    let fit_points = usable.len().min(window + 1);
    let tail = &usable[usable.len() - fit_points..];

    let xs: Vec<f64> = tail[..tail.len() - 1].iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = tail[1..].iter().map(|e| e.ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();

    Ok(RateReport {
        method: trace.method,
        kernel: trace.kernel.clone(),
        fitted_order: slope,
        window: tail.len(),
        residual,
        epsilons,
        low_confidence,
    })
}

/// Pooled convergence-order fit across several traces of the same engine.
///
/// A cubically convergent run collapses to arithmetic noise after one or two
/// steps, leaving too few usable pairs in any single trace for a slope. The
/// one-step error map is still observable across runs: every trace
/// contributes its usable `(log eps_l, log eps_{l+1})` pairs (at most
/// `window` trailing ones each), and one line is fitted through the pooled
/// cloud. At least two pairs overall are required.
pub fn estimate_order_pooled(traces: &[IterationTrace], window: usize) -> Result<RateReport> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut pooled_eps = Vec::new();
    let mut low_confidence = false;
    for trace in traces {
        let (limit, converged) = match (&trace.limit, trace.converged) {
            (Some(limit), true) => (limit, true),
            _ => (&trace.steps[0].iterates[0], false),
        };
        if !converged {
            continue;
        }
        let floor = NOISE_FLOOR_FACTOR * f64::EPSILON * limit.frobenius_norm();
        let all: Vec<f64> = trace
            .steps
            .iter()
            .map(|s| {
                s.iterates
                    .iter()
                    .map(|x| (x.matrix() - limit.matrix()).norm())
                    .fold(0.0, f64::max)
            })
            .collect();
        let cutoff =
            floor.max(LIMIT_CONTAMINATION_FACTOR * all.last().copied().unwrap_or(0.0));
        let usable: Vec<f64> = all.iter().copied().take_while(|&e| e > cutoff).collect();
        if usable.len() < 2 {
            continue;
        }
        low_confidence |= usable.len() < window + 1;
        let fit_points = usable.len().min(window + 1);
        let tail = &usable[usable.len() - fit_points..];
        for pair in tail.windows(2) {
            xs.push(pair[0].ln());
            ys.push(pair[1].ln());
        }
        pooled_eps.extend_from_slice(&usable);
    }
    if xs.len() < 2 {
        return Err(MeanError::InsufficientSteps {
            available: xs.len(),
            needed: 2,
        });
    }
    let (slope, intercept) = least_squares(&xs, &ys);
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / xs.len() as f64)
        .sqrt();
    let first = &traces[0];
    Ok(RateReport {
        method: first.method,
        kernel: first.kernel.clone(),
        fitted_order: slope,
        window: xs.len() + 1,
        residual,
        epsilons: pooled_eps,
        low_confidence,
    })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return (0.0, my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Estimated quadratic coefficient of the weighted-mean generator family.
#[derive(Clone, Debug, Serialize)]
pub struct ExpansionReport {
    pub kernel: String,
    /// Signed estimate of the quadratic coefficient.
    pub b2_estimate: f64,
    /// Estimate from the doubled stencil, for the stability check.
    pub b2_coarse: f64,
    pub stencil_eps: f64,
    pub t_samples: Vec<f64>,
}

pub const DEFAULT_STENCIL_EPS: f64 = 1e-3;
pub const DEFAULT_T_SAMPLES: [f64; 3] = [0.25, 0.5, 0.75];

/// Estimates the coefficient of `4 t(1-t) (x-1)^2` in the expansion of
/// `f_t(x)` around 1, with default stencil and weight samples.
pub fn estimate_b2(kernel: &MeanKernel, cfg: &WeightedMeanConfig) -> Result<ExpansionReport> {
    estimate_b2_with(kernel, cfg, DEFAULT_STENCIL_EPS, &DEFAULT_T_SAMPLES)
}

/// As [`estimate_b2`] with explicit stencil width and weight samples.
///
/// The symmetric second difference `f_t(1+h) + f_t(1-h) - 2` removes the
/// constant and linear terms; dividing by `2 h^2 * 4 t(1-t)` leaves the
/// coefficient. Estimates from stencils `h` and `2h` must agree to 1%,
/// otherwise the result is an [`MeanError::UnstableEstimate`].
pub fn estimate_b2_with(
    kernel: &MeanKernel,
    cfg: &WeightedMeanConfig,
    stencil_eps: f64,
    t_samples: &[f64],
) -> Result<ExpansionReport> {
    if !(stencil_eps > 0.0 && stencil_eps < 0.1) {
        return Err(MeanError::InvalidConfig(format!(
            "stencil width must lie in (0, 0.1), got {stencil_eps}"
        )));
    }
    if t_samples.is_empty() || t_samples.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(MeanError::InvalidConfig(
            "t samples must lie strictly inside (0, 1)".into(),
        ));
    }
    let estimate_at = |h: f64| -> Result<f64> {
        let mut acc = 0.0;
        for &t in t_samples {
            let plus = f_t_eval(kernel, t, 1.0 + h, cfg)?;
            let minus = f_t_eval(kernel, t, 1.0 - h, cfg)?;
            let c2 = (plus + minus - 2.0) / (2.0 * h * h);
            acc += c2 / (4.0 * t * (1.0 - t));
        }
        Ok(acc / t_samples.len() as f64)
    };
    let fine = estimate_at(stencil_eps)?;
    let coarse = estimate_at(2.0 * stencil_eps)?;
    let diff = (fine - coarse).abs();
    if diff > 0.01 * fine.abs().max(coarse.abs()) && diff > 1e-4 {
        return Err(MeanError::UnstableEstimate { fine, coarse });
    }
    Ok(ExpansionReport {
        kernel: kernel.label().to_string(),
        b2_estimate: fine,
        b2_coarse: coarse,
        stencil_eps,
        t_samples: t_samples.to_vec(),
    })
}

/// Result of the sampled two-sided sandwich check
/// `harmonic <= M <= arithmetic`.
#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    pub kernel: String,
    pub samples: usize,
    pub dim: usize,
    pub seed: u64,
    pub rel_tol: f64,
    pub violations: usize,
    /// Most negative normalized eigenvalue of `M - harmonic` seen.
    pub worst_lower_margin: f64,
    /// Most negative normalized eigenvalue of `arithmetic - M` seen.
    pub worst_upper_margin: f64,
}

fn min_eig_normalized(lhs: &SpdMatrix, rhs: &SpdMatrix) -> f64 {
    let diff = rhs.matrix() - lhs.matrix();
    let (values, _) = sym_eigen(&diff);
    let scale = f64::max(lhs.frobenius_norm(), rhs.frobenius_norm());
    values.min() / scale
}

/// Samples random SPD pairs and checks both Löwner inequalities of the
/// sandwich. Violations are report content, not errors.
pub fn verify_sandwich(
    kernel: &MeanKernel,
    samples: usize,
    dim: usize,
    seed: u64,
) -> Result<SandwichReport> {
    let rel_tol = crate::spd::DEFAULT_LOEWNER_REL_TOL;
    let mut rng = rng_from_seed(seed);
    let harmonic = MeanKernel::harmonic();
    let arithmetic = MeanKernel::arithmetic();
    let mut violations = 0;
    let mut worst_lower = f64::INFINITY;
    let mut worst_upper = f64::INFINITY;
    for _ in 0..samples {
        let a = random_spd_default(&mut rng, dim);
        let b = random_spd_default(&mut rng, dim);
        let m = mean2(kernel, &a, &b)?;
        let h = mean2(&harmonic, &a, &b)?;
        let ar = mean2(&arithmetic, &a, &b)?;
        let lower = min_eig_normalized(&h, &m);
        let upper = min_eig_normalized(&m, &ar);
        worst_lower = worst_lower.min(lower);
        worst_upper = worst_upper.min(upper);
        if lower < -rel_tol || upper < -rel_tol {
            violations += 1;
        }
    }
    Ok(SandwichReport {
        kernel: kernel.label().to_string(),
        samples,
        dim,
        seed,
        rel_tol,
        violations,
        worst_lower_margin: worst_lower,
        worst_upper_margin: worst_upper,
    })
}

/// Result of the sampled trace inequality check.
#[derive(Clone, Debug, Serialize)]
pub struct TraceInequalityReport {
    pub kernel: String,
    pub k: f64,
    pub t: f64,
    pub samples: usize,
    pub dim: usize,
    pub seed: u64,
    pub violations: usize,
    /// Most negative normalized slack `(rhs - lhs)/rhs` seen.
    pub worst_margin: f64,
}

/// Checks `trace(F_t(A,B)^2) <= (1-t) tr(A^2) + t tr(B^2)
/// - (k/2) t(1-t) tr((A-B)^2)` on random pairs.
///
/// The caller asserts that the kernel is bounded above by the `k`-family
/// member at this `k` and `t`; `k = 2` is valid for every Kubo-Ando kernel at
/// `t = 1/2`. For `t != 1/2` the kernel's weighted mean is evaluated through
/// the dyadic process (family kernels evaluate their displayed formula
/// directly).
pub fn verify_trace_inequality(
    kernel: &MeanKernel,
    k: f64,
    t: f64,
    samples: usize,
    dim: usize,
    seed: u64,
) -> Result<TraceInequalityReport> {
    let mut rng = rng_from_seed(seed);
    let wcfg = WeightedMeanConfig::default();
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let a = random_spd_default(&mut rng, dim);
        let b = random_spd_default(&mut rng, dim);
        let f_t = if t == 0.5 {
            mean2(kernel, &a, &b)?
        } else {
            match kernel.kind() {
                KernelKind::KFamily(kk) => k_family_mean(*kk, t, &a, &b)?,
                KernelKind::SquareMean => k_family_mean(0.0, t, &a, &b)?,
                _ => weighted_mean(kernel, t, &a, &b, &wcfg)?.0,
            }
        };
        let lhs = f_t.frobenius_norm_squared();
        let diff = a.matrix() - b.matrix();
        let rhs = (1.0 - t) * a.frobenius_norm_squared() + t * b.frobenius_norm_squared()
            - 0.5 * k * t * (1.0 - t) * diff.norm_squared();
        let margin = (rhs - lhs) / rhs.abs().max(f64::MIN_POSITIVE);
        worst = worst.min(margin);
        if margin < -1e-9 {
            violations += 1;
        }
    }
    Ok(TraceInequalityReport {
        kernel: kernel.label().to_string(),
        k,
        t,
        samples,
        dim,
        seed,
        violations,
        worst_margin: worst,
    })
}

/// Result of a centroid-invariance probe on a seeded random input tuple.
#[derive(Clone, Debug, Serialize)]
pub struct CentroidReport {
    pub method: MultiMethod,
    pub kernel: String,
    pub pullback: String,
    pub n: usize,
    pub dim: usize,
    pub seed: u64,
    pub steps: usize,
    /// Largest per-step drift of the pullback centroid, relative to the
    /// summed input norms.
    pub max_relative_drift: f64,
    /// Relative distance between the computed limit and the closed-form
    /// pullback centroid of the inputs.
    pub limit_vs_centroid: f64,
}

/// Runs the selected engine on a seeded random tuple and measures how far the
/// pullback centroid drifts along the iteration.
pub fn verify_centroid_invariance(
    method: MultiMethod,
    kernel: &MeanKernel,
    pullback: &PullbackMean,
    n: usize,
    dim: usize,
    seed: u64,
    cfg: &MultiMeanConfig,
) -> Result<CentroidReport> {
    let mut rng = rng_from_seed(seed);
    let xs: Vec<SpdMatrix> = (0..n).map(|_| random_spd_default(&mut rng, dim)).collect();
    let (limit, trace) = multi_mean(method, kernel, &xs, cfg)?;
    let drifts = centroid_drift(&trace, pullback)?;
    let scale: f64 = xs.iter().map(|x| x.frobenius_norm()).sum();
    let max_drift = drifts.iter().fold(0.0, |acc: f64, &d| acc.max(d)) / scale;
    let centroid = crate::kernels::pullback_centroid(pullback, &xs)?;
    let rel = (limit.matrix() - centroid.matrix()).norm() / centroid.frobenius_norm();
    Ok(CentroidReport {
        method,
        kernel: kernel.label().to_string(),
        pullback: pullback.label().to_string(),
        n,
        dim,
        seed,
        steps: trace.steps.len(),
        max_relative_drift: max_drift,
        limit_vs_centroid: rel,
    })
}
