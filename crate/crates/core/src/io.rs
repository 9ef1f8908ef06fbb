//! Matrix file format and trace serialization.
//!
//! Matrices travel as UTF-8 JSON objects
//! `{"dim": r, "data": [r*r reals, row-major], "label": optional}`.
//! Reals are written with 17 significant digits, so a serialize/parse
//! round-trip reproduces every `f64` bit-exactly. Symmetry is enforced on
//! load via `(M + M^T)/2`, with a warning on stderr when the asymmetry
//! exceeds `1e-9` relative.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MeanError, Result};
use crate::multivariate::IterationTrace;
use crate::spd::SpdMatrix;
use crate::weighted::WeightedStep;

/// Raw parsed matrix file, prior to SPD validation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim: usize,
    pub data: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// A validated matrix together with its file label.
#[derive(Clone, Debug)]
pub struct LoadedMatrix {
    pub matrix: SpdMatrix,
    pub label: Option<String>,
}

impl MatrixFile {
    pub fn from_matrix(m: &SpdMatrix, label: Option<String>) -> Self {
        MatrixFile {
            dim: m.dim(),
            data: m.to_row_major(),
            label,
        }
    }

    /// Validates the payload into an [`SpdMatrix`], returning the relative
    /// asymmetry of the raw data alongside.
    pub fn validate(&self) -> Result<(SpdMatrix, f64)> {
        if self.dim == 0 {
            return Err(MeanError::ParseError("dim must be at least 1".into()));
        }
        if self.data.len() != self.dim * self.dim {
            return Err(MeanError::ParseError(format!(
                "data length {} does not match dim {} (expected {})",
                self.data.len(),
                self.dim,
                self.dim * self.dim
            )));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(MeanError::ParseError(
                "data contains non-finite values".into(),
            ));
        }
        let raw = nalgebra::DMatrix::from_row_slice(self.dim, self.dim, &self.data);
        let asym = (&raw - raw.transpose()).norm() / raw.norm().max(f64::MIN_POSITIVE);
        let matrix = SpdMatrix::new(raw)?;
        Ok((matrix, asym))
    }
}

/// Relative asymmetry above which a warning is emitted on load.
pub const ASYMMETRY_WARN_THRESHOLD: f64 = 1e-9;

/// Parses and validates a matrix file, warning on stderr when the stored
/// data is asymmetric beyond [`ASYMMETRY_WARN_THRESHOLD`].
pub fn parse_matrix_file(path: &Path) -> Result<LoadedMatrix> {
    let text = fs::read_to_string(path)
        .map_err(|e| MeanError::ParseError(format!("{}: {e}", path.display())))?;
    let file: MatrixFile = serde_json::from_str(&text)
        .map_err(|e| MeanError::ParseError(format!("{}: {e}", path.display())))?;
    let (matrix, asym) = file.validate()?;
    if asym > ASYMMETRY_WARN_THRESHOLD {
        eprintln!(
            "warning: {} is asymmetric ({:.3e} relative); symmetrized as (M + M^T)/2",
            path.display(),
            asym
        );
    }
    Ok(LoadedMatrix {
        matrix,
        label: file.label,
    })
}

/// Formats an `f64` with 17 significant digits (lossless round-trip).
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes a matrix in the file format, reals at 17 significant digits.
pub fn format_matrix(m: &SpdMatrix, label: Option<&str>) -> String {
    let mut out = String::new();
    let _ = write!(out, "{{\"dim\": {}, \"data\": [", m.dim());
    for (i, v) in m.to_row_major().iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&fmt_f64(*v));
    }
    out.push(']');
    if let Some(label) = label {
        let _ = write!(
            out,
            ", \"label\": {}",
            serde_json::to_string(label).expect("string serialization cannot fail")
        );
    }
    out.push('}');
    out
}

pub fn write_matrix_file(path: &Path, m: &SpdMatrix, label: Option<&str>) -> Result<()> {
    fs::write(path, format_matrix(m, label) + "\n")?;
    Ok(())
}

/// Serialized view of one weighted-process step.
#[derive(Serialize)]
struct WeightedStepView<'a> {
    step: u32,
    a: f64,
    b: f64,
    r_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    a_mat: Option<&'a SpdMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b_mat: Option<&'a SpdMatrix>,
}

/// Serializes a weighted-mean trace; `full` includes the iterates.
pub fn weighted_trace_json(steps: &[WeightedStep], full: bool) -> String {
    let views: Vec<WeightedStepView> = steps
        .iter()
        .map(|s| WeightedStepView {
            step: s.step,
            a: s.a,
            b: s.b,
            r_gap: s.r_gap,
            a_mat: full.then_some(&s.a_mat),
            b_mat: full.then_some(&s.b_mat),
        })
        .collect();
    serde_json::to_string_pretty(&serde_json::json!({
        "kind": "weighted",
        "steps": views,
    }))
    .expect("trace serialization cannot fail")
}

#[derive(Serialize)]
struct TraceStepView<'a> {
    l: u32,
    a: f64,
    e: f64,
    r_diam: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterates: Option<&'a [SpdMatrix]>,
}

/// Serializes an ALM/BMP trace; `full` includes the per-step iterates.
pub fn iteration_trace_json(trace: &IterationTrace, full: bool) -> String {
    let views: Vec<TraceStepView> = trace
        .steps
        .iter()
        .map(|s| TraceStepView {
            l: s.l,
            a: s.a,
            e: s.e,
            r_diam: s.r_diam,
            iterates: full.then_some(s.iterates.as_slice()),
        })
        .collect();
    serde_json::to_string_pretty(&serde_json::json!({
        "kind": "iteration",
        "method": trace.method,
        "kernel": trace.kernel,
        "n": trace.n,
        "converged": trace.converged,
        "limit": trace.limit,
        "steps": views,
    }))
    .expect("trace serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_valid_matrix() {
        let file: MatrixFile = serde_json::from_str(r#"{"dim":2,"data":[2,1,1,2]}"#).unwrap();
        let (m, asym) = file.validate().unwrap();
        assert_eq!(m.dim(), 2);
        assert_eq!(asym, 0.0);
    }

    #[test]
    fn parse_rejects_indefinite() {
        let file: MatrixFile = serde_json::from_str(r#"{"dim":2,"data":[1,2,2,1]}"#).unwrap();
        assert!(matches!(
            file.validate(),
            Err(MeanError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn parse_rejects_bad_length() {
        let file: MatrixFile = serde_json::from_str(r#"{"dim":2,"data":[1,2,3]}"#).unwrap();
        assert!(matches!(file.validate(), Err(MeanError::ParseError(_))));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = SpdMatrix::from_row_slice(
            2,
            &[2.000000000000001, 1.0 / 3.0, 1.0 / 3.0, 1.9999999999999998],
        )
        .unwrap();
        let text = format_matrix(&m, Some("fixture"));
        let file: MatrixFile = serde_json::from_str(&text).unwrap();
        let (back, _) = file.validate().unwrap();
        assert_eq!(file.label.as_deref(), Some("fixture"));
        for (x, y) in m.to_row_major().iter().zip(back.to_row_major()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
