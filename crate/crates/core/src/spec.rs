//! Input-output specifications and output-distance metrics.
//!
//! A specification is a set of examples; a candidate program's error is the
//! sum of per-example distances between what it computes and what the example
//! demands. Distances are zero exactly on equality, so driving the scalar
//! error to zero is the same as satisfying the specification.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsl::{execute, Program, Value};

/// Additive penalty base for comparing against `Null`.
const NULL_PENALTY_BASE: u64 = 20;
/// Per-element penalty for length mismatches under the Manhattan metric.
const LENGTH_UNIT: u64 = 512;

/// One observed input-output pair. Both values are non-`Null` and in bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IOExample {
    pub input: Value,
    pub output: Value,
}

/// Errors from specification construction and file handling.
#[derive(Debug)]
pub enum SpecError {
    NoExamples,
    NullValue { example: usize },
    OutOfBounds { example: usize },
    BadLine { line: usize, reason: String },
    Io(std::io::Error),
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecError::NoExamples => write!(f, "specification has no examples"),
            SpecError::NullValue { example } => {
                write!(f, "example {example}: values must not be Null")
            }
            SpecError::OutOfBounds { example } => {
                write!(f, "example {example}: value outside representable range")
            }
            SpecError::BadLine { line, reason } => write!(f, "spec line {line}: {reason}"),
            SpecError::Io(e) => write!(f, "spec io: {e}"),
        }
    }
}

impl std::error::Error for SpecError {}

impl From<std::io::Error> for SpecError {
    fn from(e: std::io::Error) -> Self {
        SpecError::Io(e)
    }
}

/// A set of input-output examples a program must reproduce exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Specification {
    examples: Vec<IOExample>,
}

impl Specification {
    pub fn new(examples: Vec<IOExample>) -> Result<Self, SpecError> {
        if examples.is_empty() {
            return Err(SpecError::NoExamples);
        }
        for (i, ex) in examples.iter().enumerate() {
            if ex.input.is_null() || ex.output.is_null() {
                return Err(SpecError::NullValue { example: i });
            }
            if !ex.input.in_bounds() || !ex.output.in_bounds() {
                return Err(SpecError::OutOfBounds { example: i });
            }
        }
        Ok(Specification { examples })
    }

    pub fn examples(&self) -> &[IOExample] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Reads one JSON object per line with `input` and `output` fields.
    pub fn load_jsonl(path: &Path) -> Result<Self, SpecError> {
        let file = std::fs::File::open(path)?;
        let mut examples = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let repr: ExampleRepr =
                serde_json::from_str(&line).map_err(|e| SpecError::BadLine {
                    line: lineno + 1,
                    reason: e.to_string(),
                })?;
            examples.push(repr.into());
        }
        Specification::new(examples)
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<(), SpecError> {
        let mut out = std::fs::File::create(path)?;
        for ex in &self.examples {
            let repr = ExampleRepr::from(ex.clone());
            writeln!(
                out,
                "{}",
                serde_json::to_string(&repr).expect("example serializes")
            )?;
        }
        Ok(())
    }
}

/// Wire form of a non-`Null` value: a bare integer or an integer array.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueRepr {
    Int(i64),
    List(Vec<i64>),
}

impl From<ValueRepr> for Value {
    fn from(r: ValueRepr) -> Value {
        match r {
            ValueRepr::Int(x) => Value::Int(x),
            ValueRepr::List(xs) => Value::List(xs),
        }
    }
}

impl TryFrom<&Value> for ValueRepr {
    type Error = ();

    fn try_from(v: &Value) -> Result<ValueRepr, ()> {
        match v {
            Value::Int(x) => Ok(ValueRepr::Int(*x)),
            Value::List(xs) => Ok(ValueRepr::List(xs.clone())),
            Value::Null => Err(()),
        }
    }
}

/// Wire form of one example line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExampleRepr {
    pub input: ValueRepr,
    pub output: ValueRepr,
}

impl From<ExampleRepr> for IOExample {
    fn from(r: ExampleRepr) -> IOExample {
        IOExample {
            input: r.input.into(),
            output: r.output.into(),
        }
    }
}

impl From<IOExample> for ExampleRepr {
    fn from(ex: IOExample) -> ExampleRepr {
        ExampleRepr {
            input: ValueRepr::try_from(&ex.input).expect("spec values are non-Null"),
            output: ValueRepr::try_from(&ex.output).expect("spec values are non-Null"),
        }
    }
}

/// Output-distance metric selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Edit,
    Manhattan,
}

impl Metric {
    pub fn distance(self, a: &Value, b: &Value) -> u64 {
        match self {
            Metric::Edit => edit_distance(a, b),
            Metric::Manhattan => manhattan_distance(a, b),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "edit" => Ok(Metric::Edit),
            "manhattan" => Ok(Metric::Manhattan),
            other => Err(format!(
                "unknown metric {other:?} (expected edit or manhattan)"
            )),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Edit => write!(f, "edit"),
            Metric::Manhattan => write!(f, "manhattan"),
        }
    }
}

fn null_penalty(other: &Value) -> u64 {
    let len = other.items().map_or(0, <[i64]>::len) as u64;
    len.max(1) + NULL_PENALTY_BASE
}

fn kind_mismatch(a: &Value, b: &Value) -> bool {
    matches!(
        (a, b),
        (Value::Int(_), Value::List(_)) | (Value::List(_), Value::Int(_))
    )
}

/// Unit-cost Levenshtein distance over integer sequences. An `Int` counts as
/// a one-element sequence; distance to `Null` is a penalty strictly larger
/// than any distance between non-`Null` values of the same target. An extra
/// unit separates `Int` from its singleton list so the distance is zero only
/// on exact value equality.
pub fn edit_distance(a: &Value, b: &Value) -> u64 {
    match (a.items(), b.items()) {
        (None, None) => 0,
        (None, Some(_)) => null_penalty(b),
        (Some(_), None) => null_penalty(a),
        (Some(xs), Some(ys)) => levenshtein(xs, ys) + u64::from(kind_mismatch(a, b)),
    }
}

/// Element-wise absolute difference with a 512-per-element penalty for length
/// mismatches; `Null` and `Int`-versus-list penalties follow `edit_distance`
/// scaled by 512.
pub fn manhattan_distance(a: &Value, b: &Value) -> u64 {
    match (a.items(), b.items()) {
        (None, None) => 0,
        (None, Some(_)) => LENGTH_UNIT * null_penalty(b),
        (Some(_), None) => LENGTH_UNIT * null_penalty(a),
        (Some(xs), Some(ys)) => {
            let overlap: u64 = xs.iter().zip(ys).map(|(&x, &y)| x.abs_diff(y)).sum();
            let gap = xs.len().abs_diff(ys.len()) as u64;
            overlap + LENGTH_UNIT * gap + LENGTH_UNIT * u64::from(kind_mismatch(a, b))
        }
    }
}

fn levenshtein(a: &[i64], b: &[i64]) -> u64 {
    let mut row: Vec<u64> = (0..=b.len() as u64).collect();
    for (i, &x) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i as u64 + 1;
        for (j, &y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = (diag + u64::from(x != y)).min(up + 1).min(row[j] + 1);
            diag = up;
        }
    }
    row[b.len()]
}

/// Per-example distances and their sum for one candidate program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorVector {
    pub per_example: Vec<u64>,
    pub scalar: u64,
}

/// Scores a program against every example under the chosen metric.
pub fn error(p: &Program, spec: &Specification, metric: Metric) -> ErrorVector {
    let per_example: Vec<u64> = spec
        .examples()
        .iter()
        .map(|ex| metric.distance(&execute(p, &ex.input), &ex.output))
        .collect();
    let scalar = per_example.iter().sum();
    ErrorVector {
        per_example,
        scalar,
    }
}

/// True when the program reproduces every example exactly.
pub fn satisfies(p: &Program, spec: &Specification) -> bool {
    spec.examples()
        .iter()
        .all(|ex| execute(p, &ex.input) == ex.output)
}
