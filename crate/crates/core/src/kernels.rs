//! Catalog of two-variable symmetric matrix means and pullback centroids.
//!
//! Every Kubo-Ando mean has the representation
//! `M(A,B) = A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2}` for a normalized operator
//! monotone generator `f`. The catalog covers the arithmetic, harmonic,
//! geometric and logarithmic means, arbitrary generator-defined means, the
//! square mean `((A^2+B^2)/2)^{1/2}`, and the interpolating family
//! `[(A^2+B^2)/2 - (k/8)(A-B)^2]^{1/2}` for `k` in `(0, 2]`.
//!
//! Operator monotonicity of user-supplied generators is trusted, not
//! verified; the catalog kernels are operator monotone by construction.

use nalgebra::DMatrix;

use crate::error::{MeanError, Result};
use crate::spd::{
    apply_spectral, sqrt_and_inv_sqrt, sym_eigen, symmetrize, reconstruct, SpdMatrix,
    SpectralFunction,
};

/// The family of two-variable symmetric means this crate evaluates.
#[derive(Clone, Debug)]
pub enum KernelKind {
    /// `(A + B)/2`.
    Arithmetic,
    /// `((A^{-1} + B^{-1})/2)^{-1}`.
    Harmonic,
    /// `A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}`.
    Geometric,
    /// Generator `f(x) = (x-1)/ln x`.
    Logarithmic,
    /// Kubo-Ando mean from an explicit normalized generator.
    Generator(SpectralFunction),
    /// `[(A^2+B^2)/2 - (k/8)(A-B)^2]^{1/2}` with `k` in `(0, 2]`.
    KFamily(f64),
    /// `((A^2+B^2)/2)^{1/2}`, the `k = 0` boundary of the family.
    SquareMean,
}

/// A named symmetric two-variable mean.
#[derive(Clone, Debug)]
pub struct MeanKernel {
    kind: KernelKind,
    label: String,
}

impl MeanKernel {
    pub fn arithmetic() -> Self {
        MeanKernel {
            kind: KernelKind::Arithmetic,
            label: "arithmetic".into(),
        }
    }

    pub fn harmonic() -> Self {
        MeanKernel {
            kind: KernelKind::Harmonic,
            label: "harmonic".into(),
        }
    }

    pub fn geometric() -> Self {
        MeanKernel {
            kind: KernelKind::Geometric,
            label: "geometric".into(),
        }
    }

    pub fn logarithmic() -> Self {
        MeanKernel {
            kind: KernelKind::Logarithmic,
            label: "logarithmic".into(),
        }
    }

    /// Kernel from a normalized operator monotone generator; `f(1) = 1` is
    /// enforced to `1e-12`, monotonicity is the caller's responsibility.
    pub fn generator(f: SpectralFunction) -> Result<Self> {
        let at_one = f.eval(1.0);
        if (at_one - 1.0).abs() > 1e-12 {
            return Err(MeanError::InvalidConfig(format!(
                "generator '{}' is not normalized: f(1) = {at_one}",
                f.label()
            )));
        }
        let label = format!("generator:{}", f.label());
        Ok(MeanKernel {
            kind: KernelKind::Generator(f),
            label,
        })
    }

    /// Interpolating family member, `k` in `(0, 2]`.
    pub fn k_family(k: f64) -> Result<Self> {
        if !(k > 0.0 && k <= 2.0) {
            return Err(MeanError::InvalidConfig(format!(
                "kfamily parameter must lie in (0, 2], got {k}"
            )));
        }
        Ok(MeanKernel {
            kind: KernelKind::KFamily(k),
            label: format!("kfamily:{k}"),
        })
    }

    /// The square mean, included as the `k = 0` boundary for the centroid
    /// invariance checks.
    pub fn square_mean() -> Self {
        MeanKernel {
            kind: KernelKind::SquareMean,
            label: "square".into(),
        }
    }

    /// Parses a CLI kernel name: `arithmetic`, `harmonic`, `geometric`,
    /// `logarithmic`, `square`, or `kfamily:<k>`.
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "arithmetic" => Ok(Self::arithmetic()),
            "harmonic" => Ok(Self::harmonic()),
            "geometric" => Ok(Self::geometric()),
            "logarithmic" => Ok(Self::logarithmic()),
            "square" => Ok(Self::square_mean()),
            _ => {
                if let Some(k) = name.strip_prefix("kfamily:") {
                    let k: f64 = k.parse().map_err(|_| {
                        MeanError::ParseError(format!("bad kfamily parameter in '{name}'"))
                    })?;
                    Self::k_family(k)
                } else {
                    Err(MeanError::ParseError(format!(
                        "unknown kernel '{name}' (expected arithmetic, harmonic, geometric, \
                         logarithmic, square, or kfamily:<k>)"
                    )))
                }
            }
        }
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Whether the kernel is a Kubo-Ando mean, i.e. sits between the harmonic
    /// and arithmetic means. The square mean and the family members with
    /// `k < 2` exceed the arithmetic mean, so they are excluded.
    pub fn is_kubo_ando(&self) -> bool {
        match self.kind {
            KernelKind::Arithmetic
            | KernelKind::Harmonic
            | KernelKind::Geometric
            | KernelKind::Logarithmic
            | KernelKind::Generator(_) => true,
            KernelKind::KFamily(k) => k == 2.0,
            KernelKind::SquareMean => false,
        }
    }
}

/// Evaluates the two-variable mean `M(A, B)`.
pub fn mean2(kernel: &MeanKernel, a: &SpdMatrix, b: &SpdMatrix) -> Result<SpdMatrix> {
    if a.dim() != b.dim() {
        return Err(MeanError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    match kernel.kind() {
        KernelKind::Arithmetic => Ok(arithmetic_mean(a, b)),
        KernelKind::Harmonic => harmonic_mean(a, b),
        KernelKind::Geometric => geometric_mean(a, b),
        KernelKind::Logarithmic => generator_mean(&SpectralFunction::log_mean(), a, b),
        KernelKind::Generator(f) => generator_mean(f, a, b),
        KernelKind::KFamily(k) => k_family_mean(*k, 0.5, a, b),
        KernelKind::SquareMean => k_family_mean(0.0, 0.5, a, b),
    }
}

pub(crate) fn arithmetic_mean(a: &SpdMatrix, b: &SpdMatrix) -> SpdMatrix {
    SpdMatrix::from_symmetric_unchecked(symmetrize(&((a.matrix() + b.matrix()) * 0.5)))
}

pub(crate) fn harmonic_mean(a: &SpdMatrix, b: &SpdMatrix) -> Result<SpdMatrix> {
    let ai = spd_inverse(a)?;
    let bi = spd_inverse(b)?;
    let mid = symmetrize(&((ai + bi) * 0.5));
    invert_symmetric(&mid)
}

/// `A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}` with symmetric square roots.
/// This path minimizes roundoff relative to the generator route; the two must
/// agree to about `1e-9` (cross-checked in tests).
pub(crate) fn geometric_mean(a: &SpdMatrix, b: &SpdMatrix) -> Result<SpdMatrix> {
    generator_mean(&SpectralFunction::sqrt(), a, b)
}

/// The Kubo-Ando representation `A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2}`.
pub(crate) fn generator_mean(
    f: &SpectralFunction,
    a: &SpdMatrix,
    b: &SpdMatrix,
) -> Result<SpdMatrix> {
    let (sqrt_a, inv_sqrt_a) = sqrt_and_inv_sqrt(a);
    let middle = SpdMatrix::from_symmetric_unchecked(symmetrize(
        &(&inv_sqrt_a * b.matrix() * &inv_sqrt_a),
    ));
    let image = apply_spectral(&middle, f)?;
    Ok(SpdMatrix::from_symmetric_unchecked(symmetrize(
        &(&sqrt_a * image.matrix() * &sqrt_a),
    )))
}

/// Weighted family member
/// `[(1-t)A^2 + tB^2 - (k/2) t(1-t) (A-B)^2]^{1/2}`.
///
/// `k = 0` is allowed here (the square-mean boundary); for `k = 2` the value
/// collapses to the weighted arithmetic mean `(1-t)A + tB`.
pub fn k_family_mean(k: f64, t: f64, a: &SpdMatrix, b: &SpdMatrix) -> Result<SpdMatrix> {
    if !(0.0..=2.0).contains(&k) {
        return Err(MeanError::InvalidConfig(format!(
            "k must lie in [0, 2], got {k}"
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(MeanError::InvalidConfig(format!(
            "t must lie in [0, 1], got {t}"
        )));
    }
    if a.dim() != b.dim() {
        return Err(MeanError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let a2 = a.matrix() * a.matrix();
    let b2 = b.matrix() * b.matrix();
    let diff = a.matrix() - b.matrix();
    let inner = symmetrize(&(a2 * (1.0 - t) + b2 * t - (&diff * &diff) * (0.5 * k * t * (1.0 - t))));
    matrix_sqrt_checked(&inner)
}

/// Symmetric square root of a raw symmetric matrix; fails with
/// `NotPositiveDefinite` when the matrix is not positive definite.
fn matrix_sqrt_checked(m: &DMatrix<f64>) -> Result<SpdMatrix> {
    let (values, vectors) = sym_eigen(m);
    let min = values.min();
    let max = values.max();
    if !(min.is_finite() && min > 0.0) {
        return Err(MeanError::NotPositiveDefinite {
            min_eigenvalue: min,
            floor: 0.0,
        });
    }
    let _ = max;
    let roots: Vec<f64> = values.iter().map(|&l| l.sqrt()).collect();
    Ok(SpdMatrix::from_symmetric_unchecked(reconstruct(
        &roots, &vectors,
    )))
}

pub(crate) fn spd_inverse(a: &SpdMatrix) -> Result<DMatrix<f64>> {
    match a.matrix().clone().cholesky() {
        Some(chol) => Ok(symmetrize(&chol.inverse())),
        None => {
            // Cholesky can fail on nearly-degenerate inputs that still passed
            // the floor; fall back to the spectral route.
            Ok(apply_spectral(a, &SpectralFunction::inverse())?
                .matrix()
                .clone())
        }
    }
}

fn invert_symmetric(m: &DMatrix<f64>) -> Result<SpdMatrix> {
    match m.clone().cholesky() {
        Some(chol) => Ok(SpdMatrix::from_symmetric_unchecked(symmetrize(
            &chol.inverse(),
        ))),
        None => {
            let (values, vectors) = sym_eigen(m);
            let min = values.min();
            if !(min.is_finite() && min > 0.0) {
                return Err(MeanError::NotPositiveDefinite {
                    min_eigenvalue: min,
                    floor: 0.0,
                });
            }
            let inv: Vec<f64> = values.iter().map(|&l| 1.0 / l).collect();
            Ok(SpdMatrix::from_symmetric_unchecked(reconstruct(
                &inv, &vectors,
            )))
        }
    }
}

/// An isometry `f` together with its tracked inverse, pulling the flat
/// Euclidean centroid back to the cone: `(x, x)`, `(x^2, sqrt x)`,
/// `(x^{-1}, x^{-1})`.
#[derive(Clone, Debug)]
pub struct PullbackMean {
    forward: SpectralFunction,
    inverse: SpectralFunction,
}

impl PullbackMean {
    pub fn new(forward: SpectralFunction, inverse: SpectralFunction) -> Self {
        PullbackMean { forward, inverse }
    }

    /// Flat case: the weighted arithmetic mean.
    pub fn identity() -> Self {
        Self::new(SpectralFunction::identity(), SpectralFunction::identity())
    }

    /// `f(x) = x^2`: the square-mean geometry.
    pub fn square() -> Self {
        Self::new(SpectralFunction::square(), SpectralFunction::sqrt())
    }

    /// `f(x) = x^{-1}`: the harmonic geometry.
    pub fn inverse() -> Self {
        Self::new(SpectralFunction::inverse(), SpectralFunction::inverse())
    }

    pub fn forward(&self) -> &SpectralFunction {
        &self.forward
    }

    pub fn inverse_fn(&self) -> &SpectralFunction {
        &self.inverse
    }

    pub fn label(&self) -> &str {
        self.forward.label()
    }
}

/// Weighted centroid in the pulled-back flat geometry:
/// `f^{-1}(Σ w_i f(X_i))`.
///
/// With `f = identity` this is the weighted arithmetic mean, with
/// `f = x^{-1}` the weighted harmonic mean.
pub fn pullback_nmean(
    p: &PullbackMean,
    weights: &[f64],
    xs: &[SpdMatrix],
) -> Result<SpdMatrix> {
    if weights.len() != xs.len() || xs.is_empty() {
        return Err(MeanError::WeightError(format!(
            "{} weights for {} matrices",
            weights.len(),
            xs.len()
        )));
    }
    if weights.iter().any(|&w| !(w.is_finite() && w >= 0.0)) {
        return Err(MeanError::WeightError("weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(MeanError::WeightError(format!(
            "weights must sum to 1, got {total}"
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
    let mut acc = DMatrix::zeros(dim, dim);
    for (w, x) in weights.iter().zip(xs) {
        acc += apply_spectral(x, &p.forward)?.matrix() * *w;
    }
    let acc = SpdMatrix::from_symmetric_unchecked(symmetrize(&acc));
    apply_spectral(&acc, &p.inverse)
}

/// Unweighted pullback centroid of `n` matrices.
pub fn pullback_centroid(p: &PullbackMean, xs: &[SpdMatrix]) -> Result<SpdMatrix> {
    let w = vec![1.0 / xs.len() as f64; xs.len()];
    pullback_nmean(p, &w, xs)
}
