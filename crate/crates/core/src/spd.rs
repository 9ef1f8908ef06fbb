//! Validated symmetric positive definite matrices and the calculus on them.
//!
//! Everything downstream works with [`SpdMatrix`]: a dense real symmetric
//! matrix whose spectrum has been checked against a scale-invariant positivity
//! floor at construction time. The module also provides the spectral
//! functional calculus `A ↦ Q g(Λ) Qᵀ`, congruence transforms, the Frobenius
//! and pullback distances, the multiplicative gauge
//! `R(A,B) = max{ρ(A⁻¹B), ρ(B⁻¹A)}`, and Löwner-order comparison.
//!
//! All values are immutable after construction and safe to share across
//! threads.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{MeanError, Result};

/// Scale factor of the default positivity floor: the smallest eigenvalue must
/// exceed `DEFAULT_FLOOR_SCALE * lambda_max * dim`.
pub const DEFAULT_FLOOR_SCALE: f64 = 1e-12;

/// Default relative tolerance for Löwner-order comparisons.
pub const DEFAULT_LOEWNER_REL_TOL: f64 = 1e-9;

/// A validated real symmetric positive definite matrix.
///
/// Invariants held after construction:
/// - entries are exactly symmetric (the symmetrization `(M + Mᵀ)/2` is applied
///   once, then the data is frozen),
/// - the smallest eigenvalue exceeds the dim-scaled positivity floor,
/// - `dim >= 1`.
#[derive(Clone, PartialEq)]
pub struct SpdMatrix {
    data: DMatrix<f64>,
}

impl fmt::Debug for SpdMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpdMatrix({}x{}) {}", self.dim(), self.dim(), self.data)
    }
}

impl Serialize for SpdMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("SpdMatrix", 2)?;
        s.serialize_field("dim", &self.dim())?;
        s.serialize_field("data", &self.data.transpose().as_slice())?; // row-major
        s.end()
    }
}

/// Validates a raw square array as an SPD matrix.
///
/// The input is symmetrized as `(M + Mᵀ)/2` before the eigenvalue check; the
/// smallest eigenvalue must exceed `floor_scale * lambda_max * dim`.
pub fn validate_spd(raw: &DMatrix<f64>, floor_scale: f64) -> Result<SpdMatrix> {
    if raw.nrows() != raw.ncols() || raw.nrows() == 0 {
        return Err(MeanError::NotSquare {
            rows: raw.nrows(),
            cols: raw.ncols(),
        });
    }
    let sym = symmetrize(raw);
    let eig = sym.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max();
    let floor = floor_scale * max * sym.nrows() as f64;
    if !(min.is_finite() && min > floor && min > 0.0) {
        return Err(MeanError::NotPositiveDefinite {
            min_eigenvalue: min,
            floor,
        });
    }
    Ok(SpdMatrix { data: sym })
}

impl SpdMatrix {
    /// Validates `raw` with the default positivity floor.
    pub fn new(raw: DMatrix<f64>) -> Result<Self> {
        validate_spd(&raw, DEFAULT_FLOOR_SCALE)
    }

    /// Builds an SPD matrix from a row-major slice of `dim * dim` entries.
    pub fn from_row_slice(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(MeanError::ParseError(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    /// The identity matrix of the given dimension.
    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        SpdMatrix {
            data: DMatrix::identity(dim, dim),
        }
    }

    /// Diagonal SPD matrix; all entries must be strictly positive.
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let d = DMatrix::from_diagonal(&DVector::from_row_slice(diag));
        validate_spd(&d, DEFAULT_FLOOR_SCALE)
    }

    /// A 1x1 matrix holding a positive scalar.
    pub fn scalar(value: f64) -> Result<Self> {
        Self::from_row_slice(1, &[value])
    }

    /// Internal constructor for matrices that are SPD by construction
    /// (means, congruences and spectral images of validated inputs).
    /// The caller must pass an exactly symmetric matrix.
    pub(crate) fn from_symmetric_unchecked(data: DMatrix<f64>) -> Self {
        debug_assert!(data.nrows() == data.ncols() && data.nrows() >= 1);
        SpdMatrix { data }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    /// Row-major copy of the entries, as stored in matrix files.
    pub fn to_row_major(&self) -> Vec<f64> {
        self.data.transpose().as_slice().to_vec()
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    /// `trace(A^2)`, the squared Frobenius distance from the zero matrix.
    pub fn frobenius_norm_squared(&self) -> f64 {
        self.data.norm_squared()
    }

    fn check_same_dim(&self, other: &SpdMatrix) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(MeanError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }
}

/// `(M + Mᵀ)/2`, eliminating asymmetry drift from repeated products.
pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut s = m + m.transpose();
    s *= 0.5;
    s
}

/// Eigendecomposition of a symmetric matrix: `(eigenvalues, eigenvectors)`.
pub(crate) fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvalues, eig.eigenvectors)
}

/// A scalar map on `(0, ∞)` applied to SPD matrices through the spectrum.
///
/// Carries a label for error reporting and serialized output. The evaluator
/// must return finite positive values on every positive input used during a
/// run; this is checked at each application, not at construction.
#[derive(Clone)]
pub struct SpectralFunction {
    label: String,
    evaluator: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for SpectralFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpectralFunction({})", self.label)
    }
}

impl SpectralFunction {
    pub fn new(
        label: impl Into<String>,
        evaluator: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SpectralFunction {
            label: label.into(),
            evaluator: Arc::new(evaluator),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.evaluator)(x)
    }

    /// Evaluates and rejects non-positive or non-finite results.
    pub fn eval_checked(&self, x: f64) -> Result<f64> {
        let y = self.eval(x);
        if !(y.is_finite() && y > 0.0) {
            return Err(MeanError::NonPositiveResult {
                label: self.label.clone(),
                input: x,
                output: y,
            });
        }
        Ok(y)
    }

    pub fn identity() -> Self {
        Self::new("identity", |x| x)
    }

    pub fn sqrt() -> Self {
        Self::new("sqrt", f64::sqrt)
    }

    pub fn square() -> Self {
        Self::new("square", |x| x * x)
    }

    pub fn inverse() -> Self {
        Self::new("inverse", |x| 1.0 / x)
    }

    pub fn inverse_sqrt() -> Self {
        Self::new("inverse-sqrt", |x| 1.0 / x.sqrt())
    }

    /// Generator of the logarithmic mean, `f(x) = (x - 1)/ln x`, with the
    /// removable singularity at `x = 1` handled by a short series branch.
    /// The direct branch goes through `ln_1p` to avoid cancellation near 1.
    pub fn log_mean() -> Self {
        Self::new("log-mean", |x| {
            let u = x - 1.0;
            if u.abs() < 1e-6 {
                // (x-1)/ln x = 1 + u/2 - u^2/12 + u^3/24 + O(u^4)
                1.0 + u / 2.0 - u * u / 12.0 + u * u * u / 24.0
            } else {
                u / u.ln_1p()
            }
        })
    }
}

/// Which gauge a [`MetricValue`] was measured in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Euclid,
    Pullback,
    RMultiplicative,
}

/// A nonnegative distance value tagged with the gauge that produced it.
/// `RMultiplicative` values satisfy `value >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricValue {
    pub value: f64,
    pub kind: MetricKind,
}

/// Spectral functional calculus: returns `Q diag(g(λ_i)) Qᵀ` for
/// `A = Q diag(λ_i) Qᵀ`.
///
/// The result is symmetrized, and its spectrum `g(λ_i)` is checked against the
/// positivity floor directly; a non-positive `g(λ_i)` is reported as
/// [`MeanError::NonPositiveResult`].
pub fn apply_spectral(a: &SpdMatrix, g: &SpectralFunction) -> Result<SpdMatrix> {
    let (values, vectors) = sym_eigen(a.matrix());
    let mapped = values
        .iter()
        .map(|&l| g.eval_checked(l))
        .collect::<Result<Vec<_>>>()?;
    let min = mapped.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = mapped.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let floor = DEFAULT_FLOOR_SCALE * max * a.dim() as f64;
    if min <= floor {
        return Err(MeanError::NotPositiveDefinite {
            min_eigenvalue: min,
            floor,
        });
    }
    Ok(SpdMatrix::from_symmetric_unchecked(reconstruct(
        &mapped, &vectors,
    )))
}

pub(crate) fn reconstruct(values: &[f64], vectors: &DMatrix<f64>) -> DMatrix<f64> {
    let diag = DMatrix::from_diagonal(&DVector::from_row_slice(values));
    symmetrize(&(vectors * diag * vectors.transpose()))
}

/// Simultaneous `A^{1/2}` and `A^{-1/2}` from a single eigendecomposition.
pub(crate) fn sqrt_and_inv_sqrt(a: &SpdMatrix) -> (DMatrix<f64>, DMatrix<f64>) {
    let (values, vectors) = sym_eigen(a.matrix());
    let sq: Vec<f64> = values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let inv: Vec<f64> = sq.iter().map(|&s| 1.0 / s).collect();
    (reconstruct(&sq, &vectors), reconstruct(&inv, &vectors))
}

/// Congruence transform `C A Cᵀ`; `C` must be invertible.
///
/// Invertibility is a condition check on the singular values; condition
/// numbers beyond `1e14` are rejected as [`MeanError::SingularCongruence`].
pub fn congruence(a: &SpdMatrix, c: &DMatrix<f64>) -> Result<SpdMatrix> {
    if c.nrows() != c.ncols() {
        return Err(MeanError::NotSquare {
            rows: c.nrows(),
            cols: c.ncols(),
        });
    }
    if c.nrows() != a.dim() {
        return Err(MeanError::DimensionMismatch {
            left: a.dim(),
            right: c.nrows(),
        });
    }
    let svd = c.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin.is_finite() && smin > 0.0 && smax / smin < 1e14) {
        return Err(MeanError::SingularCongruence);
    }
    Ok(SpdMatrix::from_symmetric_unchecked(symmetrize(
        &(c * a.matrix() * c.transpose()),
    )))
}

/// The multiplicative gauge `R(A,B) = max{ρ(A⁻¹B), ρ(B⁻¹A)}`.
///
/// Both spectral radii come from one symmetric eigendecomposition of
/// `A^{-1/2} B A^{-1/2}` (similar to `A⁻¹B`, so the spectra agree and stay
/// real): `ρ(A⁻¹B)` is its largest eigenvalue and `ρ(B⁻¹A)` the reciprocal of
/// its smallest. Always `>= 1`, with equality iff `A = B` up to eigenvalue
/// tolerance.
pub fn r_metric(a: &SpdMatrix, b: &SpdMatrix) -> Result<MetricValue> {
    a.check_same_dim(b)?;
    let (_, inv_sqrt) = sqrt_and_inv_sqrt(a);
    let middle = symmetrize(&(&inv_sqrt * b.matrix() * &inv_sqrt));
    let (values, _) = sym_eigen(&middle);
    let max = values.max();
    let min = values.min();
    let value = f64::max(max, 1.0 / min).max(1.0);
    Ok(MetricValue {
        value,
        kind: MetricKind::RMultiplicative,
    })
}

/// Convenience wrapper: `R(A,B) - 1`, the contraction quantity of the
/// weighted-mean process.
pub fn r_gap(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    Ok(r_metric(a, b)?.value - 1.0)
}

/// Frobenius distance `d_E(A,B)`; `d_E(0,A)` is [`SpdMatrix::frobenius_norm`].
pub fn euclid_dist(a: &SpdMatrix, b: &SpdMatrix) -> Result<MetricValue> {
    a.check_same_dim(b)?;
    Ok(MetricValue {
        value: (a.matrix() - b.matrix()).norm(),
        kind: MetricKind::Euclid,
    })
}

/// Pullback distance `d_f(A,B) = d_E(f(A), f(B))` for a positive isometry `f`.
pub fn pullback_dist(a: &SpdMatrix, b: &SpdMatrix, f: &SpectralFunction) -> Result<MetricValue> {
    a.check_same_dim(b)?;
    let fa = apply_spectral(a, f)?;
    let fb = apply_spectral(b, f)?;
    Ok(MetricValue {
        value: (fa.matrix() - fb.matrix()).norm(),
        kind: MetricKind::Pullback,
    })
}

/// Löwner comparison `A <= B` up to a relative tolerance: true iff the
/// smallest eigenvalue of `B - A` is at least
/// `-rel_tol * max(||A||_F, ||B||_F)`.
pub fn loewner_leq(a: &SpdMatrix, b: &SpdMatrix, rel_tol: f64) -> Result<bool> {
    a.check_same_dim(b)?;
    let diff = b.matrix() - a.matrix();
    let (values, _) = sym_eigen(&diff);
    let scale = f64::max(a.frobenius_norm(), b.frobenius_norm());
    Ok(values.min() >= -rel_tol * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spd(dim: usize, entries: &[f64]) -> SpdMatrix {
        SpdMatrix::from_row_slice(dim, entries).unwrap()
    }

    #[test]
    fn validate_identity() {
        let a = SpdMatrix::identity(3);
        assert_eq!(a.dim(), 3);
        assert!(validate_spd(a.matrix(), DEFAULT_FLOOR_SCALE).is_ok());
    }

    #[test]
    fn validate_rejects_indefinite() {
        // eigenvalues {3, -1}
        let raw = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match validate_spd(&raw, DEFAULT_FLOOR_SCALE) {
            Err(MeanError::NotPositiveDefinite { min_eigenvalue, .. }) => {
                assert_relative_eq!(min_eigenvalue, -1.0, max_relative = 1e-12);
            }
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn validate_accepts_positive() {
        // eigenvalues {3, 1}
        let a = spd(2, &[2.0, 1.0, 1.0, 2.0]);
        assert_eq!(a.dim(), 2);
    }

    #[test]
    fn validate_rejects_non_square() {
        let raw = DMatrix::from_row_slice(2, 3, &[1.0; 6]);
        assert!(matches!(
            validate_spd(&raw, DEFAULT_FLOOR_SCALE),
            Err(MeanError::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn validate_symmetrizes() {
        let raw = DMatrix::from_row_slice(2, 2, &[2.0, 0.4, 0.0, 2.0]);
        let a = validate_spd(&raw, DEFAULT_FLOOR_SCALE).unwrap();
        assert_eq!(a.entry(0, 1), 0.2);
        assert_eq!(a.entry(1, 0), 0.2);
    }

    #[test]
    fn spectral_sqrt_on_diagonal() {
        let a = spd(2, &[1.0, 0.0, 0.0, 4.0]);
        let s = apply_spectral(&a, &SpectralFunction::sqrt()).unwrap();
        assert_relative_eq!(s.entry(0, 0), 1.0, max_relative = 1e-12);
        assert_relative_eq!(s.entry(1, 1), 2.0, max_relative = 1e-12);
        assert_relative_eq!(s.entry(0, 1), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn spectral_identity_fixes_identity() {
        let a = SpdMatrix::identity(3);
        let g = SpectralFunction::new("one-at-one", |x| x * x * x);
        let out = apply_spectral(&a, &g).unwrap();
        assert_relative_eq!(
            (out.matrix() - a.matrix()).norm(),
            0.0,
            epsilon = 1e-13
        );
    }

    #[test]
    fn spectral_inverse_2x2_oracle() {
        // direct 2x2 inverse: [[2,1],[1,2]]^{-1} = [[2/3,-1/3],[-1/3,2/3]]
        let a = spd(2, &[2.0, 1.0, 1.0, 2.0]);
        let inv = apply_spectral(&a, &SpectralFunction::inverse()).unwrap();
        let expect = [2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0];
        for (idx, e) in expect.iter().enumerate() {
            assert_relative_eq!(inv.entry(idx / 2, idx % 2), *e, max_relative = 1e-12);
        }
    }

    #[test]
    fn spectral_commutes_with_input() {
        let a = spd(3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let s = apply_spectral(&a, &SpectralFunction::sqrt()).unwrap();
        let comm = a.matrix() * s.matrix() - s.matrix() * a.matrix();
        assert!(comm.norm() <= 1e-10 * a.frobenius_norm());
    }

    #[test]
    fn spectral_identity_function_is_identity_map() {
        let a = spd(3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let out = apply_spectral(&a, &SpectralFunction::identity()).unwrap();
        assert!((out.matrix() - a.matrix()).norm() <= 1e-12 * a.frobenius_norm());
    }

    #[test]
    fn spectral_rejects_nonpositive_image() {
        let a = spd(2, &[1.0, 0.0, 0.0, 4.0]);
        let g = SpectralFunction::new("shift-down", |x| x - 2.0);
        assert!(matches!(
            apply_spectral(&a, &g),
            Err(MeanError::NonPositiveResult { .. })
        ));
    }

    #[test]
    fn congruence_diagonal() {
        let a = SpdMatrix::identity(2);
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        let out = congruence(&a, &c).unwrap();
        assert_relative_eq!(out.entry(0, 0), 4.0, max_relative = 1e-14);
        assert_relative_eq!(out.entry(1, 1), 9.0, max_relative = 1e-14);
    }

    #[test]
    fn congruence_identity_is_noop() {
        let a = spd(2, &[2.0, 1.0, 1.0, 2.0]);
        let out = congruence(&a, &DMatrix::identity(2, 2)).unwrap();
        assert_eq!(out.matrix(), a.matrix());
    }

    #[test]
    fn congruence_shear_oracle() {
        // hand multiply: C=[[1,1],[0,1]], A=[[2,1],[1,2]] -> C A C^T = [[6,3],[3,2]]
        let a = spd(2, &[2.0, 1.0, 1.0, 2.0]);
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let out = congruence(&a, &c).unwrap();
        let expect = [6.0, 3.0, 3.0, 2.0];
        for (idx, e) in expect.iter().enumerate() {
            assert_relative_eq!(out.entry(idx / 2, idx % 2), *e, max_relative = 1e-14);
        }
    }

    #[test]
    fn congruence_rejects_singular() {
        let a = SpdMatrix::identity(2);
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            congruence(&a, &c),
            Err(MeanError::SingularCongruence)
        ));
    }

    #[test]
    fn r_metric_scaled_identity() {
        let a = SpdMatrix::identity(3);
        let b = validate_spd(&(DMatrix::identity(3, 3) * 2.0), DEFAULT_FLOOR_SCALE).unwrap();
        let r = r_metric(&a, &b).unwrap();
        assert_eq!(r.kind, MetricKind::RMultiplicative);
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn r_metric_equal_is_one() {
        let a = spd(2, &[2.0, 1.0, 1.0, 2.0]);
        assert_relative_eq!(r_metric(&a, &a).unwrap().value, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn r_metric_diagonal_oracle() {
        // eigenvalues of A^{-1}B are {2, 1/2} -> R = 2
        let a = SpdMatrix::from_diagonal(&[1.0, 4.0]).unwrap();
        let b = SpdMatrix::from_diagonal(&[2.0, 2.0]).unwrap();
        assert_relative_eq!(r_metric(&a, &b).unwrap().value, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn r_metric_dimension_mismatch() {
        let a = SpdMatrix::identity(2);
        let b = SpdMatrix::identity(3);
        assert!(matches!(
            r_metric(&a, &b),
            Err(MeanError::DimensionMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn euclid_examples() {
        let a = spd(2, &[2.0, 1.0, 1.0, 2.0]);
        assert_eq!(euclid_dist(&a, &a).unwrap().value, 0.0);
        let i3 = SpdMatrix::identity(3);
        assert_relative_eq!(i3.frobenius_norm(), 3f64.sqrt(), max_relative = 1e-15);
        let d1 = SpdMatrix::from_diagonal(&[1.0, 4.0]).unwrap();
        let d2 = SpdMatrix::from_diagonal(&[4.0, 1.0]).unwrap();
        assert_relative_eq!(
            euclid_dist(&d1, &d2).unwrap().value,
            18f64.sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn pullback_examples() {
        let a = spd(2, &[3.0, 1.0, 1.0, 2.0]);
        let b = spd(2, &[2.0, 0.5, 0.5, 3.0]);
        let id = SpectralFunction::identity();
        assert_relative_eq!(
            pullback_dist(&a, &b, &id).unwrap().value,
            euclid_dist(&a, &b).unwrap().value,
            max_relative = 1e-12
        );
        // f = square, A = I, B = sqrt(2) I (2x2): A^2 = I, B^2 = 2I, ||I||_F = sqrt(2)
        let i2 = SpdMatrix::identity(2);
        let s2 = validate_spd(
            &(DMatrix::identity(2, 2) * 2f64.sqrt()),
            DEFAULT_FLOOR_SCALE,
        )
        .unwrap();
        assert_relative_eq!(
            pullback_dist(&i2, &s2, &SpectralFunction::square()).unwrap().value,
            2f64.sqrt(),
            max_relative = 1e-12
        );
        assert_eq!(pullback_dist(&a, &a, &SpectralFunction::square()).unwrap().value, 0.0);
    }

    #[test]
    fn loewner_examples() {
        let i = SpdMatrix::identity(2);
        let two = validate_spd(&(DMatrix::identity(2, 2) * 2.0), DEFAULT_FLOOR_SCALE).unwrap();
        assert!(loewner_leq(&i, &two, DEFAULT_LOEWNER_REL_TOL).unwrap());
        assert!(!loewner_leq(&two, &i, DEFAULT_LOEWNER_REL_TOL).unwrap());
        // incomparable pair: eigenvalues of B - A are {3, -3}
        let a = SpdMatrix::from_diagonal(&[1.0, 4.0]).unwrap();
        let b = SpdMatrix::from_diagonal(&[4.0, 1.0]).unwrap();
        assert!(!loewner_leq(&a, &b, DEFAULT_LOEWNER_REL_TOL).unwrap());
        assert!(!loewner_leq(&b, &a, DEFAULT_LOEWNER_REL_TOL).unwrap());
    }

    #[test]
    fn log_mean_series_branch_is_smooth() {
        let f = SpectralFunction::log_mean();
        // series branch vs cancellation-free direct formula on either side
        // of the switch
        for &u in &[1e-7, 5e-7, 2e-6, 1e-5] {
            let direct = u / f64::ln_1p(u);
            assert_relative_eq!(f.eval(1.0 + u), direct, max_relative = 1e-12);
        }
        assert_eq!(f.eval(1.0), 1.0);
    }
}
