//! JSON scheme files: parsing with field pointers and exact serialization.

use std::path::Path;

use latsub_core::lattice::point;
use latsub_core::scalar::{format_rational, parse_rational};
use latsub_core::{DilationMatrix, Error as CoreError, Rational, SchemeSpec, Selector, StencilRule};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchemeFileError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    /// Malformed JSON or a field of the wrong type.
    #[error("malformed scheme file at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },

    /// Semantically invalid content; `field` is a JSON pointer.
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: impl Into<String>, e: impl ToString) -> SchemeFileError {
    SchemeFileError::Field { field: field.into(), message: e.to_string() }
}

fn default_selector() -> String {
    "eno-min-diff".into()
}

/// On-disk form of a scheme. Weights stay as strings so they can be read
/// exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dimension: usize,
    pub dilation: Vec<Vec<i64>>,
    pub interpolatory: bool,
    #[serde(default = "default_selector")]
    pub selector: String,
    pub rules: Vec<CosetRules>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CosetRules {
    pub coset: Vec<i64>,
    pub stencils: Vec<StencilFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StencilFile {
    pub offsets: Vec<Vec<i64>>,
    pub weights: Vec<String>,
}

/// Reads `p/q` or an integer; decimals and floats are refused so that weights
/// are always exact.
fn parse_weight(s: &str) -> Result<Rational, String> {
    let t = s.trim();
    let ok = !t.is_empty()
        && t.split('/').count() <= 2
        && t.split('/').all(|part| {
            let part = part.trim();
            let digits = part.strip_prefix(['-', '+']).unwrap_or(part);
            !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit())
        });
    if !ok {
        return Err(format!("weight {s:?} is not an exact rational of the form p/q"));
    }
    parse_rational(t).map_err(|e| e.to_string())
}

impl SchemeFile {
    /// Validates and builds the scheme. `fallback_name` is used when the file
    /// has no `name`.
    pub fn to_scheme(&self, fallback_name: &str) -> Result<SchemeSpec, SchemeFileError> {
        let d = self.dimension;
        if d == 0 {
            return Err(field_err("/dimension", "dimension must be positive"));
        }
        if self.dilation.len() != d {
            return Err(field_err("/dilation", format!("expected {d} rows, got {}", self.dilation.len())));
        }
        for (i, row) in self.dilation.iter().enumerate() {
            if row.len() != d {
                return Err(field_err(format!("/dilation/{i}"), format!("expected {d} entries, got {}", row.len())));
            }
        }
        let matrix = DilationMatrix::new(self.dilation.clone()).map_err(|e| field_err("/dilation", e))?;
        let selector: Selector = self.selector.parse().map_err(|e: CoreError| field_err("/selector", e))?;

        let mut rules = Vec::with_capacity(self.rules.len());
        for (ri, entry) in self.rules.iter().enumerate() {
            let at = format!("/rules/{ri}");
            if entry.coset.len() != d {
                return Err(field_err(format!("{at}/coset"), format!("expected {d} coordinates, got {}", entry.coset.len())));
            }
            if entry.stencils.is_empty() {
                return Err(field_err(format!("{at}/stencils"), "no stencils"));
            }
            let mut family = Vec::with_capacity(entry.stencils.len());
            for (si, st) in entry.stencils.iter().enumerate() {
                let at = format!("{at}/stencils/{si}");
                if let Some(oi) = st.offsets.iter().position(|o| o.len() != d) {
                    return Err(field_err(
                        format!("{at}/offsets/{oi}"),
                        format!("expected {d} coordinates, got {}", st.offsets[oi].len()),
                    ));
                }
                let weights = st
                    .weights
                    .iter()
                    .enumerate()
                    .map(|(wi, w)| parse_weight(w).map_err(|e| field_err(format!("{at}/weights/{wi}"), e)))
                    .collect::<Result<Vec<_>, _>>()?;
                let rule = StencilRule::new(st.offsets.iter().map(|o| point(o)).collect(), weights)
                    .map_err(|e| field_err(format!("{at}/weights"), e))?;
                family.push(rule);
            }
            rules.push((point(&entry.coset), family));
        }
        let name = self.name.clone().unwrap_or_else(|| fallback_name.to_string());
        SchemeSpec::new(name, matrix, rules, self.interpolatory, selector).map_err(|e| field_err("/rules", e))
    }

    /// File form of a scheme; the `ε_0` identity rule is omitted for
    /// interpolatory schemes.
    pub fn from_scheme(scheme: &SchemeSpec) -> Self {
        let cosets = scheme.cosets();
        let rules = (0..cosets.len())
            .filter(|&i| !(scheme.interpolatory() && i == 0))
            .map(|i| CosetRules {
                coset: cosets.get(i).to_vec(),
                stencils: scheme
                    .rules(i)
                    .iter()
                    .map(|r| StencilFile {
                        offsets: r.offsets().iter().map(|o| o.to_vec()).collect(),
                        weights: r.weights().iter().map(format_rational).collect(),
                    })
                    .collect(),
            })
            .collect();
        Self {
            name: Some(scheme.name().to_string()),
            dimension: scheme.dim(),
            dilation: scheme.matrix().entries().to_vec(),
            interpolatory: scheme.interpolatory(),
            selector: scheme.selector().to_string(),
            rules,
        }
    }
}

pub fn parse_scheme_str(text: &str, fallback_name: &str) -> Result<SchemeSpec, SchemeFileError> {
    let file: SchemeFile = serde_json::from_str(text).map_err(|e| SchemeFileError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.to_scheme(fallback_name)
}

/// Reads a scheme file. A bare builtin name (`hexagonal`, `quincunx`) is
/// accepted when no such file exists.
pub fn parse_scheme(path: &Path) -> Result<SchemeSpec, SchemeFileError> {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scheme").to_string();
    match std::fs::read_to_string(path) {
        Ok(text) => parse_scheme_str(&text, &stem),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound && path.extension().is_none() => {
            SchemeSpec::builtin(&path.to_string_lossy())
                .map_err(|_| SchemeFileError::Io { path: path.display().to_string(), source: e })
        }
        Err(e) => Err(SchemeFileError::Io { path: path.display().to_string(), source: e }),
    }
}

pub fn serialize_scheme(scheme: &SchemeSpec) -> String {
    let mut s = serde_json::to_string_pretty(&SchemeFile::from_scheme(scheme)).expect("scheme file serializes");
    s.push('\n');
    s
}
