//! The list DSL: values, tokens, the interpreter, and program text.
//!
//! A program is a pipeline of tokens applied left to right to a single
//! threaded value. Integers live in a small closed range; any operation that
//! leaves the range produces `Null`, and `Null` absorbs everything downstream.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

/// Smallest representable integer.
pub const INT_MIN: i64 = -256;
/// Largest representable integer.
pub const INT_MAX: i64 = 255;
/// Longest representable list.
pub const MAX_LIST_LEN: usize = 20;

/// A runtime value threaded through a program pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Int(i64),
    List(Vec<i64>),
    Null,
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// View as an integer sequence. `Int` promotes to a one-element slice,
    /// `Null` has no sequence view.
    pub fn items(&self) -> Option<&[i64]> {
        match self {
            Value::Int(x) => Some(std::slice::from_ref(x)),
            Value::List(xs) => Some(xs),
            Value::Null => None,
        }
    }

    /// Checks the range and length bounds for an externally supplied value.
    pub fn in_bounds(&self) -> bool {
        match self.items() {
            None => true,
            Some(xs) => xs.len() <= MAX_LIST_LEN && xs.iter().all(|&x| in_range(x)),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(x) => write!(f, "{x}"),
            Value::List(xs) => {
                write!(f, "[")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, "]")
            }
            Value::Null => write!(f, "Null"),
        }
    }
}

fn in_range(x: i64) -> bool {
    (INT_MIN..=INT_MAX).contains(&x)
}

fn clamp_value(x: i64) -> Option<i64> {
    in_range(x).then_some(x)
}

/// Unary integer functions usable under `Map`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapFn {
    Add1,
    Sub1,
    Mul2,
    Mul3,
    Mul4,
    Div2,
    Div3,
    Div4,
    Neg,
    Square,
}

impl MapFn {
    pub fn apply(self, x: i64) -> i64 {
        match self {
            MapFn::Add1 => x + 1,
            MapFn::Sub1 => x - 1,
            MapFn::Mul2 => x * 2,
            MapFn::Mul3 => x * 3,
            MapFn::Mul4 => x * 4,
            MapFn::Div2 => x / 2,
            MapFn::Div3 => x / 3,
            MapFn::Div4 => x / 4,
            MapFn::Neg => -x,
            MapFn::Square => x * x,
        }
    }

    fn param(self) -> &'static str {
        match self {
            MapFn::Add1 => "+1",
            MapFn::Sub1 => "-1",
            MapFn::Mul2 => "*2",
            MapFn::Mul3 => "*3",
            MapFn::Mul4 => "*4",
            MapFn::Div2 => "/2",
            MapFn::Div3 => "/3",
            MapFn::Div4 => "/4",
            MapFn::Neg => "*(-1)",
            MapFn::Square => "^2",
        }
    }
}

/// Predicates usable under `Filter` and `Count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pred {
    Gt0,
    Lt0,
    Even,
    Odd,
}

impl Pred {
    pub fn test(self, x: i64) -> bool {
        match self {
            Pred::Gt0 => x > 0,
            Pred::Lt0 => x < 0,
            Pred::Even => x % 2 == 0,
            Pred::Odd => x % 2 != 0,
        }
    }

    fn param(self) -> &'static str {
        match self {
            Pred::Gt0 => ">0",
            Pred::Lt0 => "<0",
            Pred::Even => "even",
            Pred::Odd => "odd",
        }
    }
}

/// Binary integer operators usable under `ScanL1` and `ZipWith`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Min,
    Max,
}

impl BinOp {
    pub fn apply(self, a: i64, b: i64) -> i64 {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Min => a.min(b),
            BinOp::Max => a.max(b),
        }
    }

    fn param(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Min => "min",
            BinOp::Max => "max",
        }
    }
}

/// The operation a token performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenOp {
    Head,
    Last,
    Reverse,
    Sort,
    Sum,
    Minimum,
    Maximum,
    Take(u8),
    Drop(u8),
    Map(MapFn),
    Filter(Pred),
    Count(Pred),
    ScanL1(BinOp),
    ZipWith(BinOp),
}

/// Broad token family, as written in inventory files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    FirstOrder,
    Map,
    Filter,
    Count,
    ScanL1,
    ZipWith,
}

impl TokenKind {
    fn as_str(self) -> &'static str {
        match self {
            TokenKind::FirstOrder => "first-order",
            TokenKind::Map => "map",
            TokenKind::Filter => "filter",
            TokenKind::Count => "count",
            TokenKind::ScanL1 => "scanl1",
            TokenKind::ZipWith => "zipwith",
        }
    }
}

impl TokenOp {
    pub fn kind(self) -> TokenKind {
        match self {
            TokenOp::Map(_) => TokenKind::Map,
            TokenOp::Filter(_) => TokenKind::Filter,
            TokenOp::Count(_) => TokenKind::Count,
            TokenOp::ScanL1(_) => TokenKind::ScanL1,
            TokenOp::ZipWith(_) => TokenKind::ZipWith,
            _ => TokenKind::FirstOrder,
        }
    }

    /// Parameter column spelling for inventory files.
    pub fn param(self) -> String {
        match self {
            TokenOp::Head => "head".into(),
            TokenOp::Last => "last".into(),
            TokenOp::Reverse => "reverse".into(),
            TokenOp::Sort => "sort".into(),
            TokenOp::Sum => "sum".into(),
            TokenOp::Minimum => "minimum".into(),
            TokenOp::Maximum => "maximum".into(),
            TokenOp::Take(k) => format!("take{k}"),
            TokenOp::Drop(k) => format!("drop{k}"),
            TokenOp::Map(f) => f.param().into(),
            TokenOp::Filter(p) => p.param().into(),
            TokenOp::Count(p) => p.param().into(),
            TokenOp::ScanL1(op) => op.param().into(),
            TokenOp::ZipWith(op) => op.param().into(),
        }
    }

    /// Default display name.
    pub fn canonical_name(self) -> String {
        match self {
            TokenOp::Head => "Head".into(),
            TokenOp::Last => "Last".into(),
            TokenOp::Reverse => "Reverse".into(),
            TokenOp::Sort => "Sort".into(),
            TokenOp::Sum => "Sum".into(),
            TokenOp::Minimum => "Minimum".into(),
            TokenOp::Maximum => "Maximum".into(),
            TokenOp::Take(k) => format!("Take({k})"),
            TokenOp::Drop(k) => format!("Drop({k})"),
            TokenOp::Map(f) => format!("Map({})", f.param()),
            TokenOp::Filter(p) => format!("Filter({})", p.param()),
            TokenOp::Count(p) => format!("Count({})", p.param()),
            TokenOp::ScanL1(op) => format!("ScanL1({})", op.param()),
            TokenOp::ZipWith(op) => format!("ZipWith({})", op.param()),
        }
    }

    fn from_kind_param(kind: &str, param: &str) -> Option<TokenOp> {
        let op = match kind {
            "first-order" => match param {
                "head" => TokenOp::Head,
                "last" => TokenOp::Last,
                "reverse" => TokenOp::Reverse,
                "sort" => TokenOp::Sort,
                "sum" => TokenOp::Sum,
                "minimum" => TokenOp::Minimum,
                "maximum" => TokenOp::Maximum,
                "take2" => TokenOp::Take(2),
                "take3" => TokenOp::Take(3),
                "take4" => TokenOp::Take(4),
                "drop2" => TokenOp::Drop(2),
                "drop3" => TokenOp::Drop(3),
                "drop4" => TokenOp::Drop(4),
                _ => return None,
            },
            "map" => TokenOp::Map(match param {
                "+1" => MapFn::Add1,
                "-1" => MapFn::Sub1,
                "*2" => MapFn::Mul2,
                "*3" => MapFn::Mul3,
                "*4" => MapFn::Mul4,
                "/2" => MapFn::Div2,
                "/3" => MapFn::Div3,
                "/4" => MapFn::Div4,
                "*(-1)" => MapFn::Neg,
                "^2" => MapFn::Square,
                _ => return None,
            }),
            "filter" | "count" => {
                let p = match param {
                    ">0" => Pred::Gt0,
                    "<0" => Pred::Lt0,
                    "even" => Pred::Even,
                    "odd" => Pred::Odd,
                    _ => return None,
                };
                if kind == "filter" {
                    TokenOp::Filter(p)
                } else {
                    TokenOp::Count(p)
                }
            }
            "scanl1" | "zipwith" => {
                let op = match param {
                    "+" => BinOp::Add,
                    "-" => BinOp::Sub,
                    "*" => BinOp::Mul,
                    "min" => BinOp::Min,
                    "max" => BinOp::Max,
                    _ => return None,
                };
                if kind == "scanl1" {
                    TokenOp::ScanL1(op)
                } else {
                    TokenOp::ZipWith(op)
                }
            }
            _ => return None,
        };
        Some(op)
    }
}

/// One-based index of a token within its inventory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenId(pub u32);

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An inventory entry: identity plus operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Token {
    pub id: TokenId,
    pub op: TokenOp,
}

/// A token pipeline. Executed left to right on a single threaded value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Program(pub Vec<Token>);

impl Program {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    /// The first `k` tokens as a program.
    pub fn prefix(&self, k: usize) -> Program {
        Program(self.0[..k].to_vec())
    }

    pub fn ids(&self) -> Vec<TokenId> {
        self.0.iter().map(|t| t.id).collect()
    }
}

/// Errors from inventory and program text handling.
#[derive(Debug)]
pub enum DslError {
    EmptyProgram,
    UnknownToken(String),
    BadInventoryLine {
        line: usize,
        reason: String,
    },
    DuplicateName(String),
    NonContiguousIds {
        line: usize,
        expected: u32,
        found: u32,
    },
    EmptyInventory,
    Io(std::io::Error),
}

impl fmt::Display for DslError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DslError::EmptyProgram => write!(f, "program text contains no tokens"),
            DslError::UnknownToken(name) => write!(f, "unknown token name: {name:?}"),
            DslError::BadInventoryLine { line, reason } => {
                write!(f, "inventory line {line}: {reason}")
            }
            DslError::DuplicateName(name) => write!(f, "duplicate token name: {name:?}"),
            DslError::NonContiguousIds {
                line,
                expected,
                found,
            } => write!(
                f,
                "inventory line {line}: expected id {expected}, found {found}"
            ),
            DslError::EmptyInventory => write!(f, "inventory contains no tokens"),
            DslError::Io(e) => write!(f, "inventory io: {e}"),
        }
    }
}

impl std::error::Error for DslError {}

impl From<std::io::Error> for DslError {
    fn from(e: std::io::Error) -> Self {
        DslError::Io(e)
    }
}

/// An ordered token set with unique names and contiguous one-based ids.
#[derive(Debug, Clone)]
pub struct TokenInventory {
    tokens: Vec<Token>,
    names: Vec<String>,
    by_name: HashMap<String, usize>,
}

impl TokenInventory {
    fn from_parts(ops: Vec<TokenOp>, names: Vec<String>) -> Result<Self, DslError> {
        if ops.is_empty() {
            return Err(DslError::EmptyInventory);
        }
        let mut by_name = HashMap::new();
        for (i, name) in names.iter().enumerate() {
            if by_name.insert(name.clone(), i).is_some() {
                return Err(DslError::DuplicateName(name.clone()));
            }
        }
        let tokens = ops
            .into_iter()
            .enumerate()
            .map(|(i, op)| Token {
                id: TokenId(i as u32 + 1),
                op,
            })
            .collect();
        Ok(TokenInventory {
            tokens,
            names,
            by_name,
        })
    }

    /// Builds an inventory from operations with canonical names.
    pub fn from_ops(ops: Vec<TokenOp>) -> Result<Self, DslError> {
        let names = ops.iter().map(|op| op.canonical_name()).collect();
        Self::from_parts(ops, names)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Token at a zero-based position.
    pub fn by_index(&self, idx: usize) -> Token {
        self.tokens[idx]
    }

    pub fn by_id(&self, id: TokenId) -> Option<Token> {
        self.tokens.get(id.0 as usize - 1).copied()
    }

    pub fn by_name(&self, name: &str) -> Option<Token> {
        self.by_name.get(name).map(|&i| self.tokens[i])
    }

    pub fn name(&self, id: TokenId) -> &str {
        &self.names[id.0 as usize - 1]
    }

    /// Parses comma or newline separated token names.
    pub fn parse_program(&self, text: &str) -> Result<Program, DslError> {
        let mut tokens = Vec::new();
        for piece in text.split([',', '\n']) {
            let name = piece.trim();
            if name.is_empty() {
                continue;
            }
            let token = self
                .by_name(name)
                .ok_or_else(|| DslError::UnknownToken(name.to_string()))?;
            tokens.push(token);
        }
        if tokens.is_empty() {
            return Err(DslError::EmptyProgram);
        }
        Ok(Program(tokens))
    }

    /// Formats a program as comma separated token names.
    pub fn format_program(&self, p: &Program) -> String {
        p.tokens()
            .iter()
            .map(|t| self.name(t.id))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Serializes as tab separated `id name kind param` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for t in &self.tokens {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                t.id,
                self.name(t.id),
                t.op.kind().as_str(),
                t.op.param()
            ));
        }
        out
    }

    /// Parses the `to_tsv` format. Ids must be contiguous from 1.
    pub fn from_tsv(text: &str) -> Result<Self, DslError> {
        let mut ops = Vec::new();
        let mut names = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(DslError::BadInventoryLine {
                    line: lineno,
                    reason: format!("expected 4 tab separated fields, got {}", fields.len()),
                });
            }
            let id: u32 = fields[0].parse().map_err(|_| DslError::BadInventoryLine {
                line: lineno,
                reason: format!("bad id {:?}", fields[0]),
            })?;
            let expected = ops.len() as u32 + 1;
            if id != expected {
                return Err(DslError::NonContiguousIds {
                    line: lineno,
                    expected,
                    found: id,
                });
            }
            let op = TokenOp::from_kind_param(fields[2], fields[3]).ok_or_else(|| {
                DslError::BadInventoryLine {
                    line: lineno,
                    reason: format!("unknown kind/param {:?}/{:?}", fields[2], fields[3]),
                }
            })?;
            ops.push(op);
            names.push(fields[1].to_string());
        }
        Self::from_parts(ops, names)
    }

    pub fn load(path: &Path) -> Result<Self, DslError> {
        Self::from_tsv(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), DslError> {
        std::fs::write(path, self.to_tsv())?;
        Ok(())
    }
}

/// The standard 41-token inventory.
pub fn default_inventory() -> TokenInventory {
    use BinOp::*;
    use MapFn::*;
    use Pred::*;
    let mut ops = vec![
        TokenOp::Head,
        TokenOp::Last,
        TokenOp::Reverse,
        TokenOp::Sort,
        TokenOp::Sum,
        TokenOp::Minimum,
        TokenOp::Maximum,
    ];
    for k in 2..=4 {
        ops.push(TokenOp::Take(k));
    }
    for k in 2..=4 {
        ops.push(TokenOp::Drop(k));
    }
    for f in [Add1, Sub1, Mul2, Mul3, Mul4, Div2, Div3, Div4, Neg, Square] {
        ops.push(TokenOp::Map(f));
    }
    for p in [Gt0, Lt0, Even, Odd] {
        ops.push(TokenOp::Filter(p));
    }
    for p in [Gt0, Lt0, Even, Odd] {
        ops.push(TokenOp::Count(p));
    }
    for op in [Add, Sub, Mul, Min, Max] {
        ops.push(TokenOp::ScanL1(op));
    }
    for op in [Add, Sub, Mul, Min, Max] {
        ops.push(TokenOp::ZipWith(op));
    }
    TokenInventory::from_ops(ops).expect("default inventory is valid")
}

/// Applies one token to a value. Total: every input produces a value.
pub fn token_semantics(op: TokenOp, v: &Value) -> Value {
    let xs = match v.items() {
        Some(xs) => xs,
        None => return Value::Null,
    };
    match op {
        TokenOp::Head => xs.first().map_or(Value::Null, |&x| Value::Int(x)),
        TokenOp::Last => xs.last().map_or(Value::Null, |&x| Value::Int(x)),
        TokenOp::Reverse => Value::List(xs.iter().rev().copied().collect()),
        TokenOp::Sort => {
            let mut ys = xs.to_vec();
            ys.sort_unstable();
            Value::List(ys)
        }
        TokenOp::Sum => match clamp_value(xs.iter().sum()) {
            Some(s) => Value::Int(s),
            None => Value::Null,
        },
        TokenOp::Minimum => xs.iter().min().map_or(Value::Null, |&x| Value::Int(x)),
        TokenOp::Maximum => xs.iter().max().map_or(Value::Null, |&x| Value::Int(x)),
        TokenOp::Take(k) => Value::List(xs.iter().take(k as usize).copied().collect()),
        TokenOp::Drop(k) => Value::List(xs.iter().skip(k as usize).copied().collect()),
        TokenOp::Map(f) => {
            let mut ys = Vec::with_capacity(xs.len());
            for &x in xs {
                match clamp_value(f.apply(x)) {
                    Some(y) => ys.push(y),
                    None => return Value::Null,
                }
            }
            Value::List(ys)
        }
        TokenOp::Filter(p) => Value::List(xs.iter().copied().filter(|&x| p.test(x)).collect()),
        TokenOp::Count(p) => Value::Int(xs.iter().filter(|&&x| p.test(x)).count() as i64),
        TokenOp::ScanL1(op) => {
            let mut ys: Vec<i64> = Vec::with_capacity(xs.len());
            for &x in xs {
                let next = match ys.last() {
                    None => x,
                    Some(&acc) => op.apply(acc, x),
                };
                match clamp_value(next) {
                    Some(y) => ys.push(y),
                    None => return Value::Null,
                }
            }
            Value::List(ys)
        }
        TokenOp::ZipWith(op) => {
            let mut ys = Vec::with_capacity(xs.len());
            for &x in xs {
                match clamp_value(op.apply(x, x)) {
                    Some(y) => ys.push(y),
                    None => return Value::Null,
                }
            }
            Value::List(ys)
        }
    }
}

/// Runs a token slice as a pipeline. An empty slice is the identity.
pub fn execute_tokens(tokens: &[Token], input: &Value) -> Value {
    let mut v = input.clone();
    for t in tokens {
        if v.is_null() {
            return Value::Null;
        }
        v = token_semantics(t.op, &v);
    }
    v
}

/// Runs a program on an input value.
pub fn execute(p: &Program, input: &Value) -> Value {
    execute_tokens(p.tokens(), input)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(xs: &[i64]) -> Value {
        Value::List(xs.to_vec())
    }

    fn tok(op: TokenOp) -> Token {
        Token { id: TokenId(1), op }
    }

    fn run1(op: TokenOp, v: Value) -> Value {
        token_semantics(op, &v)
    }

    #[test]
    fn first_order_reference_cases() {
        assert_eq!(run1(TokenOp::Head, list(&[7, 2])), Value::Int(7));
        assert_eq!(run1(TokenOp::Head, list(&[])), Value::Null);
        assert_eq!(run1(TokenOp::Last, list(&[7, 2])), Value::Int(2));
        assert_eq!(run1(TokenOp::Last, list(&[])), Value::Null);
        assert_eq!(run1(TokenOp::Reverse, list(&[1, 2, 3])), list(&[3, 2, 1]));
        assert_eq!(run1(TokenOp::Reverse, list(&[])), list(&[]));
        assert_eq!(run1(TokenOp::Sort, list(&[3, -1, 2])), list(&[-1, 2, 3]));
        assert_eq!(run1(TokenOp::Sum, list(&[3, -1, 2])), Value::Int(4));
        assert_eq!(run1(TokenOp::Sum, list(&[])), Value::Int(0));
        assert_eq!(run1(TokenOp::Sum, list(&[200, 100])), Value::Null);
        assert_eq!(run1(TokenOp::Sum, list(&[-200, -100])), Value::Null);
        assert_eq!(run1(TokenOp::Minimum, list(&[3, -1, 2])), Value::Int(-1));
        assert_eq!(run1(TokenOp::Minimum, list(&[])), Value::Null);
        assert_eq!(run1(TokenOp::Maximum, list(&[3, -1, 2])), Value::Int(3));
        assert_eq!(run1(TokenOp::Maximum, list(&[])), Value::Null);
        assert_eq!(run1(TokenOp::Take(2), list(&[5, 6, 7])), list(&[5, 6]));
        assert_eq!(run1(TokenOp::Take(3), list(&[5])), list(&[5]));
        assert_eq!(
            run1(TokenOp::Take(4), list(&[1, 2, 3, 4, 5])),
            list(&[1, 2, 3, 4])
        );
        assert_eq!(run1(TokenOp::Drop(2), list(&[5, 6, 7])), list(&[7]));
        assert_eq!(run1(TokenOp::Drop(3), list(&[5])), list(&[]));
        assert_eq!(run1(TokenOp::Drop(4), list(&[1, 2, 3, 4, 5])), list(&[5]));
    }

    #[test]
    fn map_reference_cases() {
        assert_eq!(
            run1(TokenOp::Map(MapFn::Add1), list(&[1, -1])),
            list(&[2, 0])
        );
        assert_eq!(
            run1(TokenOp::Map(MapFn::Sub1), list(&[1, -1])),
            list(&[0, -2])
        );
        assert_eq!(
            run1(TokenOp::Map(MapFn::Mul2), list(&[3, -4])),
            list(&[6, -8])
        );
        assert_eq!(
            run1(TokenOp::Map(MapFn::Mul3), list(&[3, -4])),
            list(&[9, -12])
        );
        assert_eq!(
            run1(TokenOp::Map(MapFn::Mul4), list(&[3, -4])),
            list(&[12, -16])
        );
        // integer division truncates toward zero
        assert_eq!(
            run1(TokenOp::Map(MapFn::Div2), list(&[7, -7])),
            list(&[3, -3])
        );
        assert_eq!(
            run1(TokenOp::Map(MapFn::Div3), list(&[8, -8])),
            list(&[2, -2])
        );
        assert_eq!(
            run1(TokenOp::Map(MapFn::Div4), list(&[9, -9])),
            list(&[2, -2])
        );
        assert_eq!(
            run1(TokenOp::Map(MapFn::Neg), list(&[5, -6])),
            list(&[-5, 6])
        );
        assert_eq!(
            run1(TokenOp::Map(MapFn::Square), list(&[-3, 4])),
            list(&[9, 16])
        );
        assert_eq!(run1(TokenOp::Map(MapFn::Add1), list(&[255])), Value::Null);
        assert_eq!(run1(TokenOp::Map(MapFn::Sub1), list(&[-256])), Value::Null);
        assert_eq!(run1(TokenOp::Map(MapFn::Square), list(&[16])), Value::Null);
        assert_eq!(run1(TokenOp::Map(MapFn::Neg), list(&[-256])), Value::Null);
    }

    #[test]
    fn filter_count_reference_cases() {
        let v = list(&[3, -2, 0, 5, -7, 4]);
        assert_eq!(
            run1(TokenOp::Filter(Pred::Gt0), v.clone()),
            list(&[3, 5, 4])
        );
        assert_eq!(run1(TokenOp::Filter(Pred::Lt0), v.clone()), list(&[-2, -7]));
        assert_eq!(
            run1(TokenOp::Filter(Pred::Even), v.clone()),
            list(&[-2, 0, 4])
        );
        assert_eq!(
            run1(TokenOp::Filter(Pred::Odd), v.clone()),
            list(&[3, 5, -7])
        );
        assert_eq!(run1(TokenOp::Count(Pred::Gt0), v.clone()), Value::Int(3));
        assert_eq!(run1(TokenOp::Count(Pred::Lt0), v.clone()), Value::Int(2));
        assert_eq!(run1(TokenOp::Count(Pred::Even), v.clone()), Value::Int(3));
        assert_eq!(run1(TokenOp::Count(Pred::Odd), v), Value::Int(3));
    }

    #[test]
    fn scan_zip_reference_cases() {
        let v = list(&[1, 2, 3, 4]);
        assert_eq!(
            run1(TokenOp::ScanL1(BinOp::Add), v.clone()),
            list(&[1, 3, 6, 10])
        );
        assert_eq!(
            run1(TokenOp::ScanL1(BinOp::Sub), v.clone()),
            list(&[1, -1, -4, -8])
        );
        assert_eq!(
            run1(TokenOp::ScanL1(BinOp::Mul), v.clone()),
            list(&[1, 2, 6, 24])
        );
        assert_eq!(
            run1(TokenOp::ScanL1(BinOp::Min), list(&[3, 1, 2, 0])),
            list(&[3, 1, 1, 0])
        );
        assert_eq!(
            run1(TokenOp::ScanL1(BinOp::Max), list(&[3, 1, 4, 0])),
            list(&[3, 3, 4, 4])
        );
        assert_eq!(run1(TokenOp::ScanL1(BinOp::Add), list(&[])), list(&[]));
        assert_eq!(
            run1(TokenOp::ScanL1(BinOp::Mul), list(&[100, 100])),
            Value::Null
        );
        // ZipWith zips the current list with itself
        assert_eq!(
            run1(TokenOp::ZipWith(BinOp::Add), v.clone()),
            list(&[2, 4, 6, 8])
        );
        assert_eq!(
            run1(TokenOp::ZipWith(BinOp::Sub), v.clone()),
            list(&[0, 0, 0, 0])
        );
        assert_eq!(
            run1(TokenOp::ZipWith(BinOp::Mul), v.clone()),
            list(&[1, 4, 9, 16])
        );
        assert_eq!(
            run1(TokenOp::ZipWith(BinOp::Min), v.clone()),
            list(&[1, 2, 3, 4])
        );
        assert_eq!(run1(TokenOp::ZipWith(BinOp::Max), v), list(&[1, 2, 3, 4]));
        assert_eq!(run1(TokenOp::ZipWith(BinOp::Mul), list(&[16])), Value::Null);
    }

    #[test]
    fn int_promotes_to_singleton_list() {
        assert_eq!(run1(TokenOp::Head, Value::Int(5)), Value::Int(5));
        assert_eq!(run1(TokenOp::Sum, Value::Int(5)), Value::Int(5));
        assert_eq!(run1(TokenOp::Sort, Value::Int(5)), list(&[5]));
        assert_eq!(run1(TokenOp::Map(MapFn::Mul2), Value::Int(5)), list(&[10]));
        assert_eq!(
            run1(TokenOp::Count(Pred::Odd), Value::Int(5)),
            Value::Int(1)
        );
    }

    #[test]
    fn null_absorbs() {
        for t in default_inventory().tokens() {
            assert_eq!(token_semantics(t.op, &Value::Null), Value::Null);
        }
        let p = Program(vec![tok(TokenOp::Map(MapFn::Square)), tok(TokenOp::Sort)]);
        assert_eq!(execute(&p, &list(&[100])), Value::Null);
    }

    #[test]
    fn pipeline_golden_example() {
        let inv = default_inventory();
        let p = inv
            .parse_program("Map(+1),Sort,Filter(even),Reverse")
            .unwrap();
        let got = execute(&p, &list(&[5, 0, -3, 1, 4]));
        assert_eq!(got, list(&[6, 2, -2]));
    }

    #[test]
    fn empty_tokens_are_identity() {
        let v = list(&[4, 5]);
        assert_eq!(execute_tokens(&[], &v), v);
    }

    #[test]
    fn inventory_has_41_tokens_with_contiguous_ids() {
        let inv = default_inventory();
        assert_eq!(inv.len(), 41);
        for (i, t) in inv.tokens().iter().enumerate() {
            assert_eq!(t.id.0 as usize, i + 1);
        }
    }

    #[test]
    fn inventory_tsv_round_trip() {
        let inv = default_inventory();
        let text = inv.to_tsv();
        let back = TokenInventory::from_tsv(&text).unwrap();
        assert_eq!(back.len(), inv.len());
        for (a, b) in inv.tokens().iter().zip(back.tokens()) {
            assert_eq!(a, b);
        }
        assert_eq!(text, back.to_tsv());
    }

    #[test]
    fn program_text_round_trip() {
        let inv = default_inventory();
        let text = "Head";
        let p = inv.parse_program(text).unwrap();
        assert_eq!(inv.format_program(&p), "Head");
        let text = "ZipWith(max),Drop(3),Map(*(-1))";
        let p = inv.parse_program(text).unwrap();
        assert_eq!(inv.format_program(&p), text);
        assert!(matches!(
            inv.parse_program("Sort,Bogus"),
            Err(DslError::UnknownToken(_))
        ));
        assert!(matches!(
            inv.parse_program("  "),
            Err(DslError::EmptyProgram)
        ));
    }

    #[test]
    fn bounds_checks() {
        assert!(list(&[255, -256]).in_bounds());
        assert!(!list(&[256]).in_bounds());
        assert!(!Value::List(vec![0; 21]).in_bounds());
        assert!(Value::Null.in_bounds());
    }
}
