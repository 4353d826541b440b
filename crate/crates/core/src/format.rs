//! JSON network files.
//!
//! ```json
//! {
//!   "format-version": 1,
//!   "variables": [
//!     { "name": "x", "domain": { "range": [0, 4] } },
//!     { "name": "y", "domain": [1, 3, 5] }
//!   ],
//!   "constraints": [
//!     { "name": "c1", "scope": ["x", "y"], "expr": "lt(x,y)" },
//!     { "name": "c2", "scope": ["x", "y"],
//!       "table": { "polarity": "conflicts", "tuples": [[0, 1], [2, 3]] } }
//!   ]
//! }
//! ```
//!
//! Unknown keys are rejected. Errors carry a line and column.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::model::{Body, ConstraintNetwork, ModelError, NetworkBuilder, Polarity};

pub const FORMAT_VERSION: u32 = 1;

/// Largest domain a range may describe.
pub const MAX_RANGE: i64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorCode {
    /// Not well-formed JSON.
    Json,
    /// Missing, mistyped or unknown key.
    Schema,
    UnsupportedVersion,
    UnknownVariable,
    ArityMismatch,
    EmptyDomain,
    DuplicateName,
    InvalidDomain,
    ExprSyntax,
    InvalidConstraint,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Json => "E01",
            ErrorCode::Schema => "E02",
            ErrorCode::UnsupportedVersion => "E03",
            ErrorCode::UnknownVariable => "E04",
            ErrorCode::ArityMismatch => "E05",
            ErrorCode::EmptyDomain => "E06",
            ErrorCode::DuplicateName => "E07",
            ErrorCode::InvalidDomain => "E08",
            ErrorCode::ExprSyntax => "E09",
            ErrorCode::InvalidConstraint => "E10",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct FormatError {
    pub code: ErrorCode,
    /// 1-based.
    pub line: usize,
    /// 1-based, in characters.
    pub column: usize,
    pub message: String,
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: error[{}]: {}",
            self.line,
            self.column,
            self.code.as_str(),
            self.message
        )
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileIn<'a> {
    #[serde(rename = "format-version")]
    format_version: u32,
    #[serde(borrow)]
    variables: Vec<&'a RawValue>,
    #[serde(borrow)]
    constraints: Vec<&'a RawValue>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableDoc {
    name: String,
    domain: DomainDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DomainDoc {
    Values(Vec<i64>),
    Range(RangeDoc),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RangeDoc {
    range: [i64; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintDoc {
    name: String,
    scope: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    expr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<TableDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableDoc {
    polarity: PolarityDoc,
    tuples: Vec<Vec<i64>>,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum PolarityDoc {
    Supports,
    Conflicts,
}

fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn offset_of(line: usize, column: usize, text: &str) -> usize {
    let mut offset = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return offset
                + l.char_indices()
                    .nth(column.saturating_sub(1))
                    .map_or(l.len(), |(b, _)| b);
        }
        offset += l.len();
    }
    text.len()
}

struct Ctx<'a> {
    text: &'a str,
}

impl<'a> Ctx<'a> {
    fn error(&self, offset: usize, code: ErrorCode, message: impl Into<String>) -> FormatError {
        let (line, column) = position(self.text, offset);
        FormatError {
            code,
            line,
            column,
            message: message.into(),
        }
    }

    fn offset(&self, raw: &RawValue) -> usize {
        raw.get().as_ptr() as usize - self.text.as_ptr() as usize
    }

    fn item<T: Deserialize<'a>>(&self, raw: &'a RawValue) -> Result<T, FormatError> {
        serde_json::from_str(raw.get()).map_err(|e| {
            let inner = offset_of(e.line(), e.column(), raw.get());
            self.error(
                self.offset(raw) + inner,
                ErrorCode::Schema,
                strip_position(&e),
            )
        })
    }

    fn model(&self, raw: &RawValue, e: ModelError) -> FormatError {
        let at = self.offset(raw);
        let code = match &e {
            ModelError::EmptyDomain(_) => ErrorCode::EmptyDomain,
            ModelError::DuplicateName(_) => ErrorCode::DuplicateName,
            ModelError::DuplicateValue { .. } => ErrorCode::InvalidDomain,
            ModelError::UnknownVariable { .. } => ErrorCode::UnknownVariable,
            ModelError::ArityMismatch { .. } => ErrorCode::ArityMismatch,
            ModelError::Syntax { source, .. } => {
                // point into the expression string when it can be found verbatim
                let item = raw.get();
                let at = item
                    .find("\"expr\"")
                    .and_then(|k| item[k + 6..].find('"').map(|q| k + 6 + q + 1))
                    .map_or(at, |start| at + start + source.offset);
                return self.error(at, ErrorCode::ExprSyntax, e.to_string());
            }
            _ => ErrorCode::InvalidConstraint,
        };
        self.error(at, code, e.to_string())
    }
}

fn strip_position(e: &serde_json::Error) -> String {
    let s = e.to_string();
    match s.rfind(" at line ") {
        Some(i) => s[..i].to_string(),
        None => s,
    }
}

/// Parses a network file.
pub fn parse_network(text: &str) -> Result<ConstraintNetwork, FormatError> {
    let ctx = Ctx { text };
    let file: FileIn = serde_json::from_str(text).map_err(|e| {
        let code = if e.is_syntax() || e.is_eof() {
            ErrorCode::Json
        } else {
            ErrorCode::Schema
        };
        FormatError {
            code,
            line: e.line(),
            column: e.column(),
            message: strip_position(&e),
        }
    })?;
    if file.format_version != FORMAT_VERSION {
        return Err(ctx.error(
            text.find("format-version").unwrap_or(0),
            ErrorCode::UnsupportedVersion,
            format!(
                "unsupported format-version {} (expected {FORMAT_VERSION})",
                file.format_version
            ),
        ));
    }
    let mut b = NetworkBuilder::new();
    for raw in &file.variables {
        let doc: VariableDoc = ctx.item(raw)?;
        let values = match doc.domain {
            DomainDoc::Values(v) => v,
            DomainDoc::Range(RangeDoc { range: [lo, hi] }) => {
                if hi >= lo && (hi as i128 - lo as i128) >= MAX_RANGE as i128 {
                    return Err(ctx.error(
                        ctx.offset(raw),
                        ErrorCode::InvalidDomain,
                        format!("range of `{}` has more than {MAX_RANGE} values", doc.name),
                    ));
                }
                (lo..=hi).collect()
            }
        };
        b.variable(doc.name, values)
            .map_err(|e| ctx.model(raw, e))?;
    }
    for raw in &file.constraints {
        let doc: ConstraintDoc = ctx.item(raw)?;
        let result = match (doc.expr, doc.table) {
            (Some(text), None) => b.expr_constraint(doc.name, &doc.scope, &text),
            (None, Some(t)) => {
                let polarity = match t.polarity {
                    PolarityDoc::Supports => Polarity::Supports,
                    PolarityDoc::Conflicts => Polarity::Conflicts,
                };
                b.table(doc.name, &doc.scope, polarity, t.tuples)
            }
            _ => {
                return Err(ctx.error(
                    ctx.offset(raw),
                    ErrorCode::Schema,
                    format!(
                        "constraint `{}` needs exactly one of `expr` and `table`",
                        doc.name
                    ),
                ))
            }
        };
        result.map_err(|e| ctx.model(raw, e))?;
    }
    Ok(b.build())
}

/// Writes `net` in the file format; [`parse_network`] reads it back to an
/// equal network.
pub fn to_json(net: &ConstraintNetwork) -> String {
    let variables: Vec<VariableDoc> = net
        .variables()
        .iter()
        .map(|v| {
            let contiguous = v.domain.len() > 2 && v.max() - v.min() + 1 == v.domain.len() as i64;
            VariableDoc {
                name: v.name.clone(),
                domain: if contiguous {
                    DomainDoc::Range(RangeDoc {
                        range: [v.min(), v.max()],
                    })
                } else {
                    DomainDoc::Values(v.domain.clone())
                },
            }
        })
        .collect();
    let name_of = |x: usize| net.variable(x).name.as_str();
    let constraints: Vec<ConstraintDoc> = net
        .constraints()
        .iter()
        .map(|c| {
            let scope = c.scope.iter().map(|&x| name_of(x).to_string()).collect();
            let (expr, table) = match &c.body {
                Body::Expr(e) => (Some(e.display(name_of).to_string()), None),
                Body::Table(t) => (
                    None,
                    Some(TableDoc {
                        polarity: match t.polarity {
                            Polarity::Supports => PolarityDoc::Supports,
                            Polarity::Conflicts => PolarityDoc::Conflicts,
                        },
                        tuples: t.tuples.iter().cloned().collect(),
                    }),
                ),
            };
            ConstraintDoc {
                name: c.name.clone(),
                scope,
                expr,
                table,
            }
        })
        .collect();
    let mut out = format!("{{\n  \"format-version\": {FORMAT_VERSION},\n");
    write_items(&mut out, "variables", &variables);
    out.push_str(",\n");
    write_items(&mut out, "constraints", &constraints);
    out.push_str("\n}\n");
    out
}

/// One item per line.
fn write_items<T: Serialize>(out: &mut String, key: &str, items: &[T]) {
    out.push_str(&format!("  \"{key}\": ["));
    for (i, item) in items.iter().enumerate() {
        out.push_str(if i == 0 { "\n    " } else { ",\n    " });
        out.push_str(&serde_json::to_string(item).expect("serializable"));
    }
    out.push_str(if items.is_empty() { "]" } else { "\n  ]" });
}
