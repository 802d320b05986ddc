//! Random task generation: programs, example sets, and corpus files.
//!
//! Generated programs are screened against a fixed set of probe inputs. A
//! program is kept only when it returns a real value on some probe and no
//! single-token or adjacent-pair deletion reproduces its behavior on every
//! probe, so corpus tasks cannot be solved by a trivially shorter pipeline.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;

use crate::dsl::{
    execute, DslError, Program, Token, TokenInventory, Value, INT_MAX, INT_MIN, MAX_LIST_LEN,
};
use crate::mapping::{MappingError, TokenProbabilities};
use crate::spec::{ExampleRepr, IOExample, SpecError, Specification};

/// Generated inputs are lists of at least this many values.
pub const INPUT_MIN_LEN: usize = 3;
/// Probe inputs screened against during program generation.
pub const PROBE_COUNT: usize = 50;
/// Examples per generated specification.
pub const EXAMPLES_PER_SPEC: usize = 5;
/// Rejection-sampling ceiling before generation gives up.
pub const MAX_ATTEMPTS: u64 = 100_000;

/// Errors from task generation and corpus files.
#[derive(Debug)]
pub enum CorpusError {
    /// Rejection sampling hit the attempt ceiling.
    GenerationExhausted {
        attempts: u64,
    },
    Spec(SpecError),
    Dsl(DslError),
    Io(std::io::Error),
    BadLine {
        line: usize,
        reason: String,
    },
}

impl fmt::Display for CorpusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusError::GenerationExhausted { attempts } => {
                write!(f, "gave up after {attempts} generation attempts")
            }
            CorpusError::Spec(e) => write!(f, "spec: {e}"),
            CorpusError::Dsl(e) => write!(f, "program: {e}"),
            CorpusError::Io(e) => write!(f, "corpus io: {e}"),
            CorpusError::BadLine { line, reason } => {
                write!(f, "corpus line {line}: {reason}")
            }
        }
    }
}

impl std::error::Error for CorpusError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CorpusError::Spec(e) => Some(e),
            CorpusError::Dsl(e) => Some(e),
            CorpusError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<SpecError> for CorpusError {
    fn from(e: SpecError) -> Self {
        CorpusError::Spec(e)
    }
}

impl From<DslError> for CorpusError {
    fn from(e: DslError) -> Self {
        CorpusError::Dsl(e)
    }
}

impl From<std::io::Error> for CorpusError {
    fn from(e: std::io::Error) -> Self {
        CorpusError::Io(e)
    }
}

/// A uniform random list input: length 3 to 20, values over the full range.
pub fn random_input<R: Rng>(rng: &mut R) -> Value {
    let len = rng.gen_range(INPUT_MIN_LEN..=MAX_LIST_LEN);
    Value::List((0..len).map(|_| rng.gen_range(INT_MIN..=INT_MAX)).collect())
}

/// A random input guaranteed to hold at least one negative and one even
/// value, so sign and parity predicates always have something to act on.
pub fn biased_input<R: Rng>(rng: &mut R) -> Value {
    let len = rng.gen_range(INPUT_MIN_LEN..=MAX_LIST_LEN);
    loop {
        let xs: Vec<i64> = (0..len).map(|_| rng.gen_range(INT_MIN..=INT_MAX)).collect();
        if xs.iter().any(|&x| x < 0) && xs.iter().any(|&x| x % 2 == 0) {
            return Value::List(xs);
        }
    }
}

/// The probe set used to screen generated programs. The first probe is
/// biased, the rest are plain random inputs.
pub fn probe_inputs<R: Rng>(rng: &mut R) -> Vec<Value> {
    let mut probes = Vec::with_capacity(PROBE_COUNT);
    probes.push(biased_input(rng));
    while probes.len() < PROBE_COUNT {
        probes.push(random_input(rng));
    }
    probes
}

/// True when deleting one token or one adjacent pair leaves a program with
/// identical outputs on every probe. Deleting everything leaves the identity
/// program, which counts as a shorter equivalent too.
pub fn is_redundant(p: &Program, probes: &[Value]) -> bool {
    let want: Vec<Value> = probes.iter().map(|input| execute(p, input)).collect();
    let n = p.len();
    let matches_full = |reduced: &Program| {
        probes
            .iter()
            .zip(&want)
            .all(|(input, w)| execute(reduced, input) == *w)
    };
    for i in 0..n {
        let mut tokens = p.tokens().to_vec();
        tokens.remove(i);
        if matches_full(&Program(tokens)) {
            return true;
        }
    }
    for i in 0..n.saturating_sub(1) {
        let mut tokens = p.tokens().to_vec();
        tokens.drain(i..i + 2);
        if matches_full(&Program(tokens)) {
            return true;
        }
    }
    false
}

/// Draws uniform random token pipelines of the given length until one is
/// non-degenerate on the probes and not redundant.
pub fn generate_program<R: Rng>(
    length: usize,
    inventory: &TokenInventory,
    probes: &[Value],
    rng: &mut R,
) -> Result<Program, CorpusError> {
    for _ in 0..MAX_ATTEMPTS {
        let tokens: Vec<Token> = (0..length)
            .map(|_| inventory.by_index(rng.gen_range(0..inventory.len())))
            .collect();
        let p = Program(tokens);
        let useful = probes.iter().any(|input| execute(&p, input) != Value::Null);
        if useful && !is_redundant(&p, probes) {
            return Ok(p);
        }
    }
    Err(CorpusError::GenerationExhausted {
        attempts: MAX_ATTEMPTS,
    })
}

/// Builds an example set for a program: `s` random inputs with the program's
/// outputs. The first input is biased; every input is resampled until the
/// program returns a real value on it.
pub fn generate_spec<R: Rng>(
    p: &Program,
    s: usize,
    rng: &mut R,
) -> Result<Specification, CorpusError> {
    let mut examples = Vec::with_capacity(s);
    for k in 0..s {
        let mut example = None;
        for _ in 0..MAX_ATTEMPTS {
            let input = if k == 0 {
                biased_input(rng)
            } else {
                random_input(rng)
            };
            let output = execute(p, &input);
            if output != Value::Null {
                example = Some(IOExample { input, output });
                break;
            }
        }
        examples.push(example.ok_or(CorpusError::GenerationExhausted {
            attempts: MAX_ATTEMPTS,
        })?);
    }
    Ok(Specification::new(examples)?)
}

/// One corpus task: the generating program and its example set.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub program: Program,
    pub spec: Specification,
}

/// Generates `count` distinct tasks of one program length. Programs are
/// deduplicated by token sequence.
pub fn generate_corpus<R: Rng>(
    count: usize,
    length: usize,
    inventory: &TokenInventory,
    rng: &mut R,
) -> Result<Vec<CorpusEntry>, CorpusError> {
    let probes = probe_inputs(rng);
    let mut seen: HashSet<Program> = HashSet::new();
    let mut entries = Vec::with_capacity(count);
    let mut attempts = 0u64;
    while entries.len() < count {
        attempts += 1;
        if attempts > MAX_ATTEMPTS {
            return Err(CorpusError::GenerationExhausted {
                attempts: MAX_ATTEMPTS,
            });
        }
        let program = generate_program(length, inventory, &probes, rng)?;
        if !seen.insert(program.clone()) {
            continue;
        }
        match generate_spec(&program, EXAMPLES_PER_SPEC, rng) {
            Ok(spec) => entries.push(CorpusEntry { program, spec }),
            // A program can be fine on the probes yet starve the biased
            // resampling; skip it and draw another.
            Err(CorpusError::GenerationExhausted { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(entries)
}

/// Token frequencies across corpus programs, floored and renormalized into
/// probabilities. Unused tokens keep a small floor instead of zero.
pub fn estimate_token_probs(
    entries: &[CorpusEntry],
    inventory: &TokenInventory,
) -> Result<TokenProbabilities, MappingError> {
    let mut counts = vec![0.0f64; inventory.len()];
    for entry in entries {
        for token in entry.program.tokens() {
            counts[(token.id.0 - 1) as usize] += 1.0;
        }
    }
    TokenProbabilities::from_weights(&counts)
}

#[derive(serde::Serialize, serde::Deserialize)]
struct EntryRepr {
    program: String,
    examples: Vec<ExampleRepr>,
}

/// Writes one JSON object per line with `program` and `examples` fields.
pub fn save_corpus(
    path: &Path,
    entries: &[CorpusEntry],
    inventory: &TokenInventory,
) -> Result<(), CorpusError> {
    let mut out = File::create(path)?;
    for entry in entries {
        let repr = EntryRepr {
            program: inventory.format_program(&entry.program),
            examples: entry
                .spec
                .examples()
                .iter()
                .map(|ex| ExampleRepr::from(ex.clone()))
                .collect(),
        };
        writeln!(
            out,
            "{}",
            serde_json::to_string(&repr).expect("entry serializes")
        )?;
    }
    Ok(())
}

pub fn load_corpus(
    path: &Path,
    inventory: &TokenInventory,
) -> Result<Vec<CorpusEntry>, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut entries = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let repr: EntryRepr = serde_json::from_str(&line).map_err(|e| CorpusError::BadLine {
            line: lineno + 1,
            reason: e.to_string(),
        })?;
        let program = inventory.parse_program(&repr.program)?;
        let examples = repr.examples.into_iter().map(IOExample::from).collect();
        let spec = Specification::new(examples)?;
        entries.push(CorpusEntry { program, spec });
    }
    Ok(entries)
}
