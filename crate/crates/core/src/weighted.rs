//! Weighted means by dyadic binary search.
//!
//! For a symmetric kernel `M` and a weight `t` in `[0, 1]`, the process keeps
//! a dyadic interval `[a_n, b_n]` bracketing `t` together with two iterates
//! `A_n, B_n`. Starting from `a_0 = 0, b_0 = 1, A_0 = A, B_0 = B`, each step
//! either hits `t` exactly at an interval endpoint (collapsing both iterates)
//! or replaces the far iterate by `M(A_n, B_n)` while halving the interval
//! toward `t`. The gauge gap `R(A_n, B_n) - 1` halves per step, so the two
//! iterates converge to a common limit `M_t(A, B)`; `R(A_n, B_n) - 1 <= tol`
//! is the stopping rule.
//!
//! Interval endpoints are tracked as exact integer numerators at scale
//! `2^max_depth`, so branch comparisons and exact dyadic hits carry no
//! floating-point ambiguity.

use crate::error::{MeanError, Result};
use crate::kernels::{mean2, MeanKernel};
use crate::spd::{r_gap, SpdMatrix};

/// Weights within this distance of a dyadic rational `m/2^max_depth` are
/// treated as exactly that rational when `dyadic_shortcut` is enabled.
pub const DYADIC_SNAP_TOL: f64 = 1e-15;

/// Configuration of the dyadic process.
#[derive(Clone, Copy, Debug)]
pub struct WeightedMeanConfig {
    /// Stopping threshold on `R(A_n, B_n) - 1`.
    pub tol: f64,
    /// Cap on the number of dyadic steps (also the scale of the exact
    /// interval arithmetic; at most 100).
    pub max_depth: u32,
    /// Terminate exactly when `t` is a dyadic rational of depth
    /// `<= max_depth` (to within [`DYADIC_SNAP_TOL`]).
    pub dyadic_shortcut: bool,
}

impl Default for WeightedMeanConfig {
    fn default() -> Self {
        // r_gap(0)/2^64 underflows any practical tolerance, so depth 64 never
        // binds before `tol` does.
        WeightedMeanConfig {
            tol: 1e-12,
            max_depth: 64,
            dyadic_shortcut: true,
        }
    }
}

impl WeightedMeanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(MeanError::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_depth < 1 || self.max_depth > 100 {
            return Err(MeanError::InvalidConfig(format!(
                "max_depth must lie in [1, 100], got {}",
                self.max_depth
            )));
        }
        Ok(())
    }
}

/// One recorded state of the process. `a` and `b` are the weight-interval
/// endpoints (`b - a = 2^{-n}` until a terminal hit), `a_mat`/`b_mat` the
/// iterates `A_n`/`B_n`, and `r_gap = R(A_n, B_n) - 1`.
#[derive(Clone, Debug)]
pub struct WeightedStep {
    pub step: u32,
    pub a: f64,
    pub b: f64,
    pub a_mat: SpdMatrix,
    pub b_mat: SpdMatrix,
    pub r_gap: f64,
}

fn num_to_weight(num: u128, bits: u32) -> f64 {
    num as f64 / (bits as f64).exp2()
}

/// Exact comparison `num / 2^bits <= t`.
///
/// `t * 2^bits` is an exact float (power-of-two scaling), and an integer `n`
/// satisfies `n <= v` iff `n <= floor(v)`; `floor(v)` converts to `u128`
/// exactly for the scales used here.
fn scaled_le(num: u128, bits: u32, t: f64) -> bool {
    let v = t * (bits as f64).exp2();
    if v < 0.0 {
        return false;
    }
    num <= v.floor() as u128
}

/// Runs the dyadic process for `M_t(A, B)`.
///
/// Returns the common limit together with the full per-step trace. The limit
/// is the `A`-side iterate at termination (the two sides agree within `tol`,
/// and the `A` side is an actual kernel output). `M_0(A,B) = A`,
/// `M_1(A,B) = B` and `M_{1/2}(A,B) = M(A,B)` hold exactly under the default
/// configuration.
pub fn weighted_mean(
    kernel: &MeanKernel,
    t: f64,
    a: &SpdMatrix,
    b: &SpdMatrix,
    cfg: &WeightedMeanConfig,
) -> Result<(SpdMatrix, Vec<WeightedStep>)> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&t) {
        return Err(MeanError::WeightError(format!(
            "weight t must lie in [0, 1], got {t}"
        )));
    }
    if a.dim() != b.dim() {
        return Err(MeanError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }

    let bits = cfg.max_depth;
    let scale = (bits as f64).exp2();
    let scaled_t = t * scale; // exact: power-of-two scaling
    let rounded = scaled_t.round();
    let snap_err = (scaled_t - rounded).abs() / scale;
    let snapped = cfg.dyadic_shortcut && snap_err <= DYADIC_SNAP_TOL;
    let t_num = rounded as u128;

    let mut a_num: u128 = 0;
    let mut b_num: u128 = 1u128 << bits;
    let mut a_mat = a.clone();
    let mut b_mat = b.clone();
    let mut gap = r_gap(&a_mat, &b_mat)?;

    let mut trace = vec![WeightedStep {
        step: 0,
        a: 0.0,
        b: 1.0,
        a_mat: a_mat.clone(),
        b_mat: b_mat.clone(),
        r_gap: gap,
    }];

    for n in 0..bits {
        if snapped && a_num == t_num {
            let w = num_to_weight(a_num, bits);
            trace.push(WeightedStep {
                step: n + 1,
                a: w,
                b: w,
                a_mat: a_mat.clone(),
                b_mat: a_mat.clone(),
                r_gap: 0.0,
            });
            return Ok((a_mat, trace));
        }
        if snapped && b_num == t_num {
            let w = num_to_weight(b_num, bits);
            trace.push(WeightedStep {
                step: n + 1,
                a: w,
                b: w,
                a_mat: b_mat.clone(),
                b_mat: b_mat.clone(),
                r_gap: 0.0,
            });
            return Ok((b_mat, trace));
        }
        if gap <= cfg.tol {
            return Ok((a_mat, trace));
        }

        let mid = (a_num + b_num) >> 1;
        // "(a_n + b_n)/2 <= t" with <= exactly as printed: the midpoint-equal
        // case falls into the A-update branch.
        let mid_le_t = if snapped {
            mid <= t_num
        } else {
            scaled_le(mid, bits, t)
        };
        let m = mean2(kernel, &a_mat, &b_mat)?;
        if mid_le_t {
            a_num = mid;
            a_mat = m;
        } else {
            b_num = mid;
            b_mat = m;
        }
        gap = r_gap(&a_mat, &b_mat)?;
        trace.push(WeightedStep {
            step: n + 1,
            a: num_to_weight(a_num, bits),
            b: num_to_weight(b_num, bits),
            a_mat: a_mat.clone(),
            b_mat: b_mat.clone(),
            r_gap: gap,
        });
    }

    // Depth exhausted: a snapped t has reached a unit-width interval, so one
    // of the endpoints is an exact hit.
    if snapped && a_num == t_num {
        return Ok((a_mat, trace));
    }
    if snapped && b_num == t_num {
        return Ok((b_mat, trace));
    }
    if gap <= cfg.tol {
        return Ok((a_mat, trace));
    }
    Err(MeanError::MaxDepthExceeded {
        depth: bits,
        r_gap: gap,
        trace,
    })
}

/// The one-parameter generator family: `f_t(x) = M_t(1, x)` evaluated on
/// scalars. `f_0(x) = 1`, `f_1(x) = x`, `f_t(1) = 1`.
pub fn f_t_eval(kernel: &MeanKernel, t: f64, x: f64, cfg: &WeightedMeanConfig) -> Result<f64> {
    let one = SpdMatrix::scalar(1.0)?;
    let xm = SpdMatrix::scalar(x)?;
    let (m, _) = weighted_mean(kernel, t, &one, &xm, cfg)?;
    Ok(m.entry(0, 0))
}

/// Closed-form weighted means used as independent oracles for the process.
///
/// These evaluate the affine geodesics directly and never touch the dyadic
/// iteration.
pub mod closed_form {
    use super::*;
    use crate::kernels::{PullbackMean, pullback_nmean};
    use crate::spd::{apply_spectral, sqrt_and_inv_sqrt, symmetrize, SpectralFunction};

    /// `(1-t)A + tB`.
    pub fn weighted_arithmetic(t: f64, a: &SpdMatrix, b: &SpdMatrix) -> Result<SpdMatrix> {
        pullback_nmean(
            &PullbackMean::identity(),
            &[1.0 - t, t],
            &[a.clone(), b.clone()],
        )
    }

    /// `((1-t)A^{-1} + tB^{-1})^{-1}`.
    pub fn weighted_harmonic(t: f64, a: &SpdMatrix, b: &SpdMatrix) -> Result<SpdMatrix> {
        pullback_nmean(
            &PullbackMean::inverse(),
            &[1.0 - t, t],
            &[a.clone(), b.clone()],
        )
    }

    /// `A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}`.
    pub fn weighted_geometric(t: f64, a: &SpdMatrix, b: &SpdMatrix) -> Result<SpdMatrix> {
        if a.dim() != b.dim() {
            return Err(MeanError::DimensionMismatch {
                left: a.dim(),
                right: b.dim(),
            });
        }
        let (sqrt_a, inv_sqrt_a) = sqrt_and_inv_sqrt(a);
        let middle = SpdMatrix::from_symmetric_unchecked(symmetrize(
            &(&inv_sqrt_a * b.matrix() * &inv_sqrt_a),
        ));
        let powered = apply_spectral(
            &middle,
            &SpectralFunction::new(format!("pow:{t}"), move |x| x.powf(t)),
        )?;
        Ok(SpdMatrix::from_symmetric_unchecked(symmetrize(
            &(&sqrt_a * powered.matrix() * &sqrt_a),
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spd::loewner_leq;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn cfg() -> WeightedMeanConfig {
        WeightedMeanConfig::default()
    }

    fn spd3() -> (SpdMatrix, SpdMatrix) {
        (
            SpdMatrix::from_row_slice(3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]).unwrap(),
            SpdMatrix::from_row_slice(3, &[2.0, 0.3, 0.1, 0.3, 5.0, 1.0, 0.1, 1.0, 3.0]).unwrap(),
        )
    }

    fn rel_err(a: &SpdMatrix, b: &SpdMatrix) -> f64 {
        (a.matrix() - b.matrix()).norm() / b.frobenius_norm()
    }

    #[test]
    fn endpoints_are_exact() {
        let (a, b) = spd3();
        let kernel = MeanKernel::geometric();
        let (m0, _) = weighted_mean(&kernel, 0.0, &a, &b, &cfg()).unwrap();
        assert_eq!(m0.matrix(), a.matrix());
        let (m1, _) = weighted_mean(&kernel, 1.0, &a, &b, &cfg()).unwrap();
        assert_eq!(m1.matrix(), b.matrix());
    }

    #[test]
    fn midpoint_is_single_mean_evaluation() {
        let (a, b) = spd3();
        for kernel in [
            MeanKernel::arithmetic(),
            MeanKernel::geometric(),
            MeanKernel::logarithmic(),
        ] {
            let (m, trace) = weighted_mean(&kernel, 0.5, &a, &b, &cfg()).unwrap();
            let direct = mean2(&kernel, &a, &b).unwrap();
            assert_eq!(m.matrix(), direct.matrix(), "{}", kernel.label());
            // initial state, one mean step, terminal hit
            assert_eq!(trace.len(), 3);
        }
    }

    #[test]
    fn arithmetic_quarter_terminates_at_depth_two() {
        let a = SpdMatrix::identity(2);
        let b = SpdMatrix::new(DMatrix::identity(2, 2) * 5.0).unwrap();
        let (m, trace) = weighted_mean(&MeanKernel::arithmetic(), 0.25, &a, &b, &cfg()).unwrap();
        // 0.75 * 1 + 0.25 * 5 = 2
        assert!(rel_err(&m, &SpdMatrix::new(DMatrix::identity(2, 2) * 2.0).unwrap()) < 1e-14);
        // initial, two subdivision steps, terminal hit
        assert_eq!(trace.len(), 4);
        assert_eq!(trace[2].a, 0.25);
        assert_eq!(trace[2].b, 0.5);
    }

    #[test]
    fn geometric_third_scalar_oracle() {
        // closed form on scalars: 1 * (8/1)^{1/3} = 2
        let a = SpdMatrix::scalar(1.0).unwrap();
        let b = SpdMatrix::scalar(8.0).unwrap();
        let (m, _) = weighted_mean(&MeanKernel::geometric(), 1.0 / 3.0, &a, &b, &cfg()).unwrap();
        assert_relative_eq!(m.entry(0, 0), 2.0, max_relative = 1e-10);
    }

    #[test]
    fn harmonic_third_scalar_oracle() {
        // ((2/3) * 1 + (1/3) * 7)^{-1} = 1/3
        let a = SpdMatrix::scalar(1.0).unwrap();
        let b = SpdMatrix::scalar(1.0 / 7.0).unwrap();
        let (m, _) = weighted_mean(&MeanKernel::harmonic(), 1.0 / 3.0, &a, &b, &cfg()).unwrap();
        assert_relative_eq!(m.entry(0, 0), 1.0 / 3.0, max_relative = 1e-10);
    }

    #[test]
    fn closed_form_agreement_3x3() {
        let (a, b) = spd3();
        for &t in &[0.1, 1.0 / 3.0, 0.5, 0.7, 0.9] {
            let (wa, _) = weighted_mean(&MeanKernel::arithmetic(), t, &a, &b, &cfg()).unwrap();
            assert!(rel_err(&wa, &closed_form::weighted_arithmetic(t, &a, &b).unwrap()) < 1e-8);
            let (wh, _) = weighted_mean(&MeanKernel::harmonic(), t, &a, &b, &cfg()).unwrap();
            assert!(rel_err(&wh, &closed_form::weighted_harmonic(t, &a, &b).unwrap()) < 1e-8);
            let (wg, _) = weighted_mean(&MeanKernel::geometric(), t, &a, &b, &cfg()).unwrap();
            assert!(rel_err(&wg, &closed_form::weighted_geometric(t, &a, &b).unwrap()) < 1e-8);
        }
    }

    #[test]
    fn r_gap_contracts_geometrically() {
        let (a, b) = spd3();
        let (_, trace) =
            weighted_mean(&MeanKernel::logarithmic(), 0.3777, &a, &b, &cfg()).unwrap();
        let gap0 = trace[0].r_gap;
        for step in &trace {
            let bound = gap0 / (step.step as f64).exp2() * (1.0 + 1e-9);
            assert!(
                step.r_gap <= bound,
                "step {}: gap {} > bound {}",
                step.step,
                step.r_gap,
                bound
            );
        }
    }

    #[test]
    fn weighted_sandwich_fixed_pair() {
        let (a, b) = spd3();
        for kernel in [
            MeanKernel::arithmetic(),
            MeanKernel::harmonic(),
            MeanKernel::geometric(),
            MeanKernel::logarithmic(),
        ] {
            for &t in &[0.2, 0.5, 0.85] {
                let (m, _) = weighted_mean(&kernel, t, &a, &b, &cfg()).unwrap();
                let lo = closed_form::weighted_harmonic(t, &a, &b).unwrap();
                let hi = closed_form::weighted_arithmetic(t, &a, &b).unwrap();
                assert!(loewner_leq(&lo, &m, 1e-9).unwrap(), "{} t={t}", kernel.label());
                assert!(loewner_leq(&m, &hi, 1e-9).unwrap(), "{} t={t}", kernel.label());
            }
        }
    }

    #[test]
    fn kernel_order_is_preserved() {
        // (v'): N <= M pointwise implies N_t <= M_t
        let (a, b) = spd3();
        for &t in &[0.25, 0.6] {
            let (harm, _) = weighted_mean(&MeanKernel::harmonic(), t, &a, &b, &cfg()).unwrap();
            let (geom, _) = weighted_mean(&MeanKernel::geometric(), t, &a, &b, &cfg()).unwrap();
            let (arith, _) = weighted_mean(&MeanKernel::arithmetic(), t, &a, &b, &cfg()).unwrap();
            assert!(loewner_leq(&harm, &arith, 1e-9).unwrap());
            assert!(loewner_leq(&geom, &arith, 1e-9).unwrap());
        }
    }

    #[test]
    fn monotone_in_arguments() {
        // (ii'): A <= A', B <= B' implies M_t(A,B) <= M_t(A',B')
        let (a, b) = spd3();
        let bump = SpdMatrix::from_row_slice(3, &[1.0, 0.2, 0.1, 0.2, 0.5, 0.0, 0.1, 0.0, 0.8])
            .unwrap();
        let a_up = SpdMatrix::new(a.matrix() + bump.matrix()).unwrap();
        let b_up = SpdMatrix::new(b.matrix() + bump.matrix()).unwrap();
        for &t in &[0.3, 0.5, 0.9] {
            let (m, _) = weighted_mean(&MeanKernel::geometric(), t, &a, &b, &cfg()).unwrap();
            let (m_up, _) = weighted_mean(&MeanKernel::geometric(), t, &a_up, &b_up, &cfg()).unwrap();
            assert!(loewner_leq(&m, &m_up, 1e-9).unwrap(), "t = {t}");
        }
    }

    #[test]
    fn congruence_invariance() {
        let (a, b) = spd3();
        let c = DMatrix::from_row_slice(3, 3, &[1.0, 0.4, 0.0, 0.0, 1.2, 0.3, 0.2, 0.0, 0.9]);
        let t = 0.37;
        let kernel = MeanKernel::geometric();
        let (m, _) = weighted_mean(&kernel, t, &a, &b, &cfg()).unwrap();
        let ca = crate::spd::congruence(&a, &c).unwrap();
        let cb = crate::spd::congruence(&b, &c).unwrap();
        let (m_c, _) = weighted_mean(&kernel, t, &ca, &cb, &cfg()).unwrap();
        let expect = crate::spd::congruence(&m, &c).unwrap();
        assert!(rel_err(&m_c, &expect) < 1e-8);
    }

    #[test]
    fn continuity_in_t_quantitative() {
        // t1, t2 inside one dyadic cell of depth k: no dyadic of depth < k
        // separates them, and the limits differ by at most
        // 2^{2-k} (R(A,B) - 1) ||K||_F for an upper bound K.
        let (a, b) = spd3();
        let kernel = MeanKernel::geometric();
        let gap0 = crate::spd::r_gap(&a, &b).unwrap();
        let lam = |m: &SpdMatrix| {
            let (v, _) = {
                let eig = m.matrix().clone().symmetric_eigen();
                (eig.eigenvalues, ())
            };
            v.max()
        };
        let k_norm = f64::max(lam(&a), lam(&b)) * (a.dim() as f64).sqrt();
        for k in [6u32, 10] {
            let cell = 21u128.min((1 << k) - 2);
            let base = cell as f64 / (k as f64).exp2();
            let quarter = 1.0 / ((k + 2) as f64).exp2();
            let t1 = base + quarter;
            let t2 = base + 3.0 * quarter;
            let (m1, _) = weighted_mean(&kernel, t1, &a, &b, &cfg()).unwrap();
            let (m2, _) = weighted_mean(&kernel, t2, &a, &b, &cfg()).unwrap();
            let diff = (m1.matrix() - m2.matrix()).norm();
            let bound = (2.0f64).powi(2 - k as i32) * gap0 * k_norm;
            assert!(diff <= bound, "k={k}: {diff} > {bound}");
        }
    }

    #[test]
    fn f_t_examples() {
        let c = cfg();
        assert_relative_eq!(
            f_t_eval(&MeanKernel::geometric(), 0.5, 4.0, &c).unwrap(),
            2.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            f_t_eval(&MeanKernel::logarithmic(), 0.0, 7.0, &c).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            f_t_eval(&MeanKernel::arithmetic(), 0.75, 5.0, &c).unwrap(),
            4.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn max_depth_exceeded_returns_trace() {
        let (a, b) = spd3();
        let tight = WeightedMeanConfig {
            tol: 1e-30,
            max_depth: 8,
            dyadic_shortcut: false,
        };
        match weighted_mean(&MeanKernel::geometric(), 1.0 / 3.0, &a, &b, &tight) {
            Err(MeanError::MaxDepthExceeded { depth, trace, .. }) => {
                assert_eq!(depth, 8);
                assert_eq!(trace.len(), 9);
            }
            other => panic!("expected MaxDepthExceeded, got {other:?}"),
        }
    }

    #[test]
    fn shortcut_disabled_still_converges() {
        let (a, b) = spd3();
        let no_shortcut = WeightedMeanConfig {
            dyadic_shortcut: false,
            ..cfg()
        };
        let t = 0.25;
        let (m, _) = weighted_mean(&MeanKernel::arithmetic(), t, &a, &b, &no_shortcut).unwrap();
        let expect = closed_form::weighted_arithmetic(t, &a, &b).unwrap();
        assert!(rel_err(&m, &expect) < 1e-10);
    }

    #[test]
    fn rejects_out_of_range_weight() {
        let (a, b) = spd3();
        assert!(matches!(
            weighted_mean(&MeanKernel::arithmetic(), 1.5, &a, &b, &cfg()),
            Err(MeanError::WeightError(_))
        ));
    }
}
