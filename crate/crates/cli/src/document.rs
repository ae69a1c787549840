//! The scenario file: a single JSON document with `space`, `state`,
//! `evolution`, `measurements`, `params`, and `checks` sections. Complex
//! numbers are written as `[re, im]` pairs; matrices as nested arrays of
//! those pairs.

use crate::error::{CliError, CliResult};
use qtotal_core::linalg::{CMatrix, CVector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub type ComplexPair = [f64; 2];
pub type MatrixDoc = Vec<Vec<ComplexPair>>;

/// Builtin parameter values: numbers for sweepable knobs, strings for named
/// choices such as entangler variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Text(String),
}

impl ParamValue {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            ParamValue::Number(x) => Some(*x),
            ParamValue::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            ParamValue::Number(_) => None,
            ParamValue::Text(s) => Some(s),
        }
    }
}

pub type ParamMap = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolution: Option<EvolutionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurements: Option<Vec<MeasurementDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<CheckSpecDoc>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpaceDoc {
    pub factors: Vec<FactorDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FactorDoc {
    pub label: String,
    pub dim: usize,
}

/// Exactly one of `pure`/`density` unless `builtin` is present; with a
/// builtin, explicit state sections override the builtin's own state.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StateDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pure: Option<Vec<ComplexPair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<MatrixDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum EvolutionDoc {
    /// Only "identity" is recognized.
    Named(String),
    Unitary {
        unitary: MatrixDoc,
    },
    Hamiltonian {
        hamiltonian: MatrixDoc,
        dt: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MeasurementDoc {
    pub name: String,
    /// Factor label the set acts on; omitted for full-space sets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<String>,
    pub elements: ElementsDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ElementsDoc {
    /// Named qubit families: "z-projectors" or "x-projectors".
    Named(String),
    Matrices(Vec<MatrixDoc>),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum CheckSpecDoc {
    Name(String),
    Detailed(CheckSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl CheckSpec {
    pub fn named(name: impl Into<String>) -> Self {
        CheckSpec {
            name: name.into(),
            n: None,
            seed: None,
        }
    }
}

impl From<CheckSpecDoc> for CheckSpec {
    fn from(doc: CheckSpecDoc) -> Self {
        match doc {
            CheckSpecDoc::Name(name) => CheckSpec::named(name),
            CheckSpecDoc::Detailed(spec) => spec,
        }
    }
}

pub fn load_document(path: &Path) -> CliResult<ScenarioDoc> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut deserializer = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut deserializer).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        message: format!("at `{}`: {}", e.path(), e.inner()),
    })
}

pub fn document_to_string(doc: &ScenarioDoc) -> String {
    serde_json::to_string_pretty(doc).expect("scenario documents always serialize")
}

// conversions between documents and kernel types

pub fn matrix_to_doc(m: &CMatrix) -> MatrixDoc {
    (0..m.rows())
        .map(|r| {
            (0..m.cols())
                .map(|c| {
                    let z = m.get(r, c);
                    [z.re, z.im]
                })
                .collect()
        })
        .collect()
}

pub fn matrix_from_doc(doc: &MatrixDoc, what: &str) -> CliResult<CMatrix> {
    let rows = doc.len();
    if rows == 0 {
        return Err(CliError::validation(format!("{what}: empty matrix")));
    }
    let cols = doc[0].len();
    let mut m = CMatrix::zeros(rows, cols);
    for (r, row) in doc.iter().enumerate() {
        if row.len() != cols {
            return Err(CliError::validation(format!(
                "{what}: ragged matrix (row {r} has {} entries, expected {cols})",
                row.len()
            )));
        }
        for (c, pair) in row.iter().enumerate() {
            if !pair[0].is_finite() || !pair[1].is_finite() {
                return Err(CliError::validation(format!(
                    "{what}: non-finite entry at ({r}, {c})"
                )));
            }
            m.set(r, c, num_complex::Complex64::new(pair[0], pair[1]));
        }
    }
    Ok(m)
}

pub fn vector_to_doc(v: &CVector) -> Vec<ComplexPair> {
    v.data().iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_doc(doc: &[ComplexPair], what: &str) -> CliResult<CVector> {
    let mut data = Vec::with_capacity(doc.len());
    for (i, pair) in doc.iter().enumerate() {
        if !pair[0].is_finite() || !pair[1].is_finite() {
            return Err(CliError::validation(format!(
                "{what}: non-finite amplitude at index {i}"
            )));
        }
        data.push(num_complex::Complex64::new(pair[0], pair[1]));
    }
    Ok(CVector::new(data))
}
