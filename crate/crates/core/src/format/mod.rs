//! JSON interchange format for models and result documents.
//!
//! Output is canonical: object keys sorted, two-space indentation, arrays of
//! scalars on one line and every real written with 17 significant digits, so
//! writing a parsed canonical document reproduces it byte for byte.
//!
//! Joint keys are written `(x,y)` with one label per agent for ground
//! DecPOMDPs and `[2,0]|[1,1]` (one count list per partition) for lifted ones.

mod model_doc;
mod results;

use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::lifting::LiftedDecPomdp;
use crate::model::{GroundDecPomdp, Mdp, Pomdp, Validate, ValidationReport};

pub use results::{
    dec_solution_document, equivalence_document, mdp_solution_document, plan_document,
    pomdp_solution_document, size_params_document, size_report_document, PlanLabels,
};

/// Any model the format can carry.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Mdp(Mdp),
    Pomdp(Pomdp),
    DecPomdp(GroundDecPomdp),
    Lifted(LiftedDecPomdp),
}

impl Model {
    /// The `kind` field of the document.
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Mdp(_) => "mdp",
            Model::Pomdp(_) => "pomdp",
            Model::DecPomdp(_) => "decpomdp",
            Model::Lifted(_) => "lifted-decpomdp",
        }
    }

    pub fn num_states(&self) -> usize {
        match self {
            Model::Mdp(m) => m.num_states(),
            Model::Pomdp(m) => m.num_states(),
            Model::DecPomdp(m) => m.num_states(),
            Model::Lifted(m) => m.num_states(),
        }
    }
}

impl Validate for Model {
    fn validate(&self) -> ValidationReport {
        match self {
            Model::Mdp(m) => m.validate(),
            Model::Pomdp(m) => m.validate(),
            Model::DecPomdp(m) => m.validate(),
            Model::Lifted(m) => m.validate(),
        }
    }
}

impl From<Mdp> for Model {
    fn from(m: Mdp) -> Self {
        Model::Mdp(m)
    }
}

impl From<Pomdp> for Model {
    fn from(m: Pomdp) -> Self {
        Model::Pomdp(m)
    }
}

impl From<GroundDecPomdp> for Model {
    fn from(m: GroundDecPomdp) -> Self {
        Model::DecPomdp(m)
    }
}

impl From<LiftedDecPomdp> for Model {
    fn from(m: LiftedDecPomdp) -> Self {
        Model::Lifted(m)
    }
}

/// Parses and validates a model document.
///
/// Malformed JSON gives [`Error::Parse`] with a line and column, unknown,
/// missing or ill-typed fields and bad keys give [`Error::Schema`], and a
/// well-formed model that breaks an invariant gives [`Error::Validation`]
/// naming the first offending field.
pub fn parse_model(text: &str) -> Result<Model> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let model = model_doc::from_value(value)?;
    let report = model.validate();
    if let Some(first) = report.violations.first() {
        return Err(Error::Validation {
            field: first.field.clone(),
            message: report.to_string(),
        });
    }
    Ok(model)
}

/// Canonical document for `model`.
pub fn write_model(model: &Model) -> String {
    to_canonical_string(&model_doc::to_value(model))
}

pub fn read_model_file(path: impl AsRef<Path>) -> Result<Model> {
    parse_model(&std::fs::read_to_string(path)?)
}

pub fn write_model_file(path: impl AsRef<Path>, model: &Model) -> Result<()> {
    std::fs::write(path, write_model(model))?;
    Ok(())
}

/// Reals in 17-significant-digit scientific notation, e.g. `9.0000000000000002e-1`.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// A JSON number for `x`; non-finite values become `null`.
pub(crate) fn real(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// Canonical rendering of any JSON value, with a trailing newline.
pub fn to_canonical_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, n: usize| out.extend(std::iter::repeat_n(' ', n));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) if !n.is_f64() => write!(out, "{u}").unwrap(),
            (_, Some(i)) if !n.is_f64() => write!(out, "{i}").unwrap(),
            _ => out.push_str(&format_real(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(is_scalar) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, item, indent);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, indent + 2);
                write_value(out, item, indent + 2);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                pad(out, indent + 2);
                out.push_str(&serde_json::to_string(k).expect("strings serialize"));
                out.push_str(": ");
                write_value(out, item, indent + 2);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}
