//! Genome-to-program mappings.
//!
//! A genome is a real vector. Each scheme decodes it into one or more
//! candidate programs over a token inventory. Bin-family schemes push each
//! coordinate through the standard normal CDF and read off the token whose
//! probability bin contains the result; group-family schemes rank coordinates
//! within per-position blocks.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::OnceLock;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::dsl::{Program, TokenInventory};

/// Minimum probability any token keeps after flooring.
pub const PROBABILITY_FLOOR: f64 = 1e-4;
/// Tolerance on the probability sum.
pub const SUM_TOLERANCE: f64 = 1e-9;

fn standard_normal() -> &'static Normal {
    static CELL: OnceLock<Normal> = OnceLock::new();
    CELL.get_or_init(|| Normal::new(0.0, 1.0).expect("standard normal exists"))
}

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    standard_normal().cdf(x)
}

/// Standard normal quantile function. `p` must lie strictly inside (0, 1).
pub fn phi_inv(p: f64) -> f64 {
    standard_normal().inverse_cdf(p)
}

/// Errors from probability handling and genome decoding.
#[derive(Debug)]
pub enum MappingError {
    EmptyProbabilities,
    BadWeight { index: usize },
    NoMass,
    DegenerateProbabilities { tokens: usize },
    SizeMismatch { expected: usize, found: usize },
    DimensionMismatch { expected: usize, found: usize },
    LengthExceedsInventory { length: usize, inventory: usize },
    ZeroLength,
    BadProbabilityLine { line: usize, reason: String },
    UnknownTokenName(String),
    DuplicateTokenName(String),
    Io(std::io::Error),
}

impl fmt::Display for MappingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MappingError::EmptyProbabilities => write!(f, "no token probabilities given"),
            MappingError::BadWeight { index } => {
                write!(f, "weight {index} is negative or not finite")
            }
            MappingError::NoMass => write!(f, "weights sum to zero"),
            MappingError::DegenerateProbabilities { tokens } => write!(
                f,
                "cannot floor {tokens} probabilities at {PROBABILITY_FLOOR} and keep sum 1"
            ),
            MappingError::SizeMismatch { expected, found } => {
                write!(f, "expected {expected} probabilities, found {found}")
            }
            MappingError::DimensionMismatch { expected, found } => {
                write!(f, "genome has {found} coordinates, scheme needs {expected}")
            }
            MappingError::LengthExceedsInventory { length, inventory } => write!(
                f,
                "program length {length} exceeds inventory size {inventory} for this scheme"
            ),
            MappingError::ZeroLength => write!(f, "program length must be at least 1"),
            MappingError::BadProbabilityLine { line, reason } => {
                write!(f, "probability line {line}: {reason}")
            }
            MappingError::UnknownTokenName(name) => {
                write!(f, "probability file names unknown token {name:?}")
            }
            MappingError::DuplicateTokenName(name) => {
                write!(f, "probability file repeats token {name:?}")
            }
            MappingError::Io(e) => write!(f, "probability io: {e}"),
        }
    }
}

impl std::error::Error for MappingError {}

impl From<std::io::Error> for MappingError {
    fn from(e: std::io::Error) -> Self {
        MappingError::Io(e)
    }
}

/// A floored, normalized probability for every token in an inventory.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenProbabilities(Vec<f64>);

impl TokenProbabilities {
    /// Equal probability for each of `n` tokens.
    pub fn uniform(n: usize) -> Result<Self, MappingError> {
        Self::from_weights(&vec![1.0; n])
    }

    /// Normalizes nonnegative weights, then floors every entry at
    /// `PROBABILITY_FLOOR` and renormalizes the rest.
    pub fn from_weights(weights: &[f64]) -> Result<Self, MappingError> {
        if weights.is_empty() {
            return Err(MappingError::EmptyProbabilities);
        }
        for (index, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(MappingError::BadWeight { index });
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(MappingError::NoMass);
        }
        let n = weights.len();
        if n as f64 * PROBABILITY_FLOOR > 1.0 + SUM_TOLERANCE {
            return Err(MappingError::DegenerateProbabilities { tokens: n });
        }
        let mut p: Vec<f64> = weights.iter().map(|&w| w / total).collect();
        let mut floored = vec![false; n];
        // Flooring one entry rescales the rest, which can push new entries
        // under the floor; iterate until the floored set is stable.
        loop {
            let newly: Vec<usize> = (0..n)
                .filter(|&i| !floored[i] && p[i] < PROBABILITY_FLOOR)
                .collect();
            if newly.is_empty() {
                break;
            }
            for &i in &newly {
                floored[i] = true;
                p[i] = PROBABILITY_FLOOR;
            }
            let fixed = floored.iter().filter(|&&b| b).count();
            let free_mass = 1.0 - fixed as f64 * PROBABILITY_FLOOR;
            let free_sum: f64 = (0..n).filter(|&i| !floored[i]).map(|i| p[i]).sum();
            if free_sum <= 0.0 {
                let free = n - fixed;
                if free == 0 {
                    break;
                }
                for i in (0..n).filter(|&i| !floored[i]) {
                    p[i] = free_mass / free as f64;
                }
            } else {
                let scale = free_mass / free_sum;
                for i in (0..n).filter(|&i| !floored[i]) {
                    p[i] *= scale;
                }
            }
        }
        let sum: f64 = p.iter().sum();
        debug_assert!((sum - 1.0).abs() <= SUM_TOLERANCE, "sum drifted to {sum}");
        Ok(TokenProbabilities(p))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Index of the most probable token, ties to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate().skip(1) {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }

    /// Reads `name<TAB>probability` lines. Tokens absent from the file get
    /// zero weight before flooring; unknown names are rejected.
    pub fn load(path: &Path, inventory: &TokenInventory) -> Result<Self, MappingError> {
        let file = std::fs::File::open(path)?;
        let mut weights = vec![0.0f64; inventory.len()];
        let mut seen = vec![false; inventory.len()];
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (name, prob) =
                trimmed
                    .split_once('\t')
                    .ok_or_else(|| MappingError::BadProbabilityLine {
                        line: lineno + 1,
                        reason: "expected name<TAB>probability".into(),
                    })?;
            let token = inventory
                .by_name(name.trim())
                .ok_or_else(|| MappingError::UnknownTokenName(name.trim().to_string()))?;
            let idx = token.id.0 as usize - 1;
            if seen[idx] {
                return Err(MappingError::DuplicateTokenName(name.trim().to_string()));
            }
            seen[idx] = true;
            weights[idx] = prob
                .trim()
                .parse()
                .map_err(|e| MappingError::BadProbabilityLine {
                    line: lineno + 1,
                    reason: format!("bad probability: {e}"),
                })?;
        }
        Self::from_weights(&weights)
    }

    pub fn save(&self, path: &Path, inventory: &TokenInventory) -> Result<(), MappingError> {
        if self.len() != inventory.len() {
            return Err(MappingError::SizeMismatch {
                expected: inventory.len(),
                found: self.len(),
            });
        }
        let mut out = std::fs::File::create(path)?;
        for (t, p) in inventory.tokens().iter().zip(&self.0) {
            writeln!(out, "{}\t{:.17}", inventory.name(t.id), p)?;
        }
        Ok(())
    }
}

/// Cumulative probability boundaries over the unit interval, one bin per
/// token. Bin widths equal the token probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct BinLayout {
    bounds: Vec<f64>,
}

impl BinLayout {
    pub fn from_probs(probs: &TokenProbabilities) -> Self {
        let mut bounds = Vec::with_capacity(probs.len() + 1);
        bounds.push(0.0);
        let mut acc = 0.0;
        for &p in probs.values() {
            acc += p;
            bounds.push(acc);
        }
        *bounds.last_mut().expect("nonempty") = 1.0;
        BinLayout { bounds }
    }

    pub fn uniform(n: usize) -> Result<Self, MappingError> {
        Ok(Self::from_probs(&TokenProbabilities::uniform(n)?))
    }

    pub fn n_bins(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn width(&self, bin: usize) -> f64 {
        self.bounds[bin + 1] - self.bounds[bin]
    }

    pub fn midpoint(&self, bin: usize) -> f64 {
        0.5 * (self.bounds[bin] + self.bounds[bin + 1])
    }

    /// Zero-based bin holding `u`. Bins are `[b_j, b_{j+1})`; values at or
    /// beyond 1 land in the last bin.
    pub fn locate(&self, u: f64) -> usize {
        let n = self.n_bins();
        if u >= 1.0 {
            return n - 1;
        }
        let u = u.max(0.0);
        let interior = &self.bounds[1..n];
        interior.partition_point(|&b| b <= u)
    }
}

/// The five genome decoding schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Bin,
    DynamicBin,
    SingleGroup,
    MultiGroup,
    DynamicMultiGroup,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] = [
        SchemeKind::Bin,
        SchemeKind::DynamicBin,
        SchemeKind::SingleGroup,
        SchemeKind::MultiGroup,
        SchemeKind::DynamicMultiGroup,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::Bin => "bin",
            SchemeKind::DynamicBin => "dynamic-bin",
            SchemeKind::SingleGroup => "single-group",
            SchemeKind::MultiGroup => "multi-group",
            SchemeKind::DynamicMultiGroup => "dynamic-multi-group",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown mapping scheme {s:?}"))
    }
}

/// A scheme bound to a target program length and inventory size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MappingScheme {
    kind: SchemeKind,
    length: usize,
    inventory_size: usize,
}

/// Candidate programs decoded from one genome. Dynamic schemes may also
/// report an untrusted length hint for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub candidates: Vec<Program>,
    pub length_hint: Option<usize>,
}

impl MappingScheme {
    pub fn new(
        kind: SchemeKind,
        length: usize,
        inventory_size: usize,
    ) -> Result<Self, MappingError> {
        if length == 0 {
            return Err(MappingError::ZeroLength);
        }
        if inventory_size == 0 {
            return Err(MappingError::EmptyProbabilities);
        }
        // Rank-based schemes need enough distinct tokens to fill a program.
        if matches!(
            kind,
            SchemeKind::SingleGroup | SchemeKind::DynamicMultiGroup
        ) && length > inventory_size
        {
            return Err(MappingError::LengthExceedsInventory {
                length,
                inventory: inventory_size,
            });
        }
        Ok(MappingScheme {
            kind,
            length,
            inventory_size,
        })
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn length(&self) -> usize {
        self.length
    }

    /// Genome dimensionality required by this scheme.
    pub fn genome_dimension(&self) -> usize {
        let (l, d) = (self.length, self.inventory_size);
        match self.kind {
            SchemeKind::Bin => l,
            SchemeKind::DynamicBin => l + 1,
            SchemeKind::SingleGroup => d,
            SchemeKind::MultiGroup => l * d,
            SchemeKind::DynamicMultiGroup => 1 + l * d,
        }
    }

    /// Decodes a genome into candidate programs.
    pub fn decode(
        &self,
        genome: &[f64],
        layout: &BinLayout,
        inventory: &TokenInventory,
    ) -> Result<Decoded, MappingError> {
        let expected = self.genome_dimension();
        if genome.len() != expected {
            return Err(MappingError::DimensionMismatch {
                expected,
                found: genome.len(),
            });
        }
        debug_assert_eq!(inventory.len(), self.inventory_size);
        debug_assert_eq!(layout.n_bins(), self.inventory_size);
        let l = self.length;
        let decoded = match self.kind {
            SchemeKind::Bin => {
                let tokens = genome
                    .iter()
                    .map(|&g| inventory.by_index(layout.locate(phi(g))))
                    .collect();
                Decoded {
                    candidates: vec![Program(tokens)],
                    length_hint: None,
                }
            }
            SchemeKind::DynamicBin => {
                let full: Vec<_> = genome[..l]
                    .iter()
                    .map(|&g| inventory.by_index(layout.locate(phi(g))))
                    .collect();
                let candidates = (1..=l).map(|k| Program(full[..k].to_vec())).collect();
                let hint = decode_uniform_choice(genome[l], l) + 1;
                Decoded {
                    candidates,
                    length_hint: Some(hint),
                }
            }
            SchemeKind::SingleGroup => {
                let order = rank_descending(genome);
                let tokens = order[..l].iter().map(|&i| inventory.by_index(i)).collect();
                Decoded {
                    candidates: vec![Program(tokens)],
                    length_hint: None,
                }
            }
            SchemeKind::MultiGroup => {
                let d = self.inventory_size;
                let tokens = (0..l)
                    .map(|i| inventory.by_index(argmax(&genome[i * d..(i + 1) * d])))
                    .collect();
                Decoded {
                    candidates: vec![Program(tokens)],
                    length_hint: None,
                }
            }
            SchemeKind::DynamicMultiGroup => {
                let d = self.inventory_size;
                let divisors = divisors_of(l);
                let k = divisors[decode_uniform_choice(genome[0], divisors.len())];
                let seg = l / k;
                let mut tokens = Vec::with_capacity(l);
                for i in 0..k {
                    let group = &genome[1 + i * d..1 + (i + 1) * d];
                    let order = rank_descending(group);
                    tokens.extend(order[..seg].iter().map(|&j| inventory.by_index(j)));
                }
                Decoded {
                    candidates: vec![Program(tokens)],
                    length_hint: Some(k),
                }
            }
        };
        Ok(decoded)
    }
}

/// Picks one of `n` equal-width slots from a gene through the normal CDF.
fn decode_uniform_choice(g: f64, n: usize) -> usize {
    let u = phi(g);
    ((u * n as f64).floor() as usize).min(n - 1)
}

/// Coordinate indices ordered by descending value; ties go to the lower index.
fn rank_descending(xs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[b].total_cmp(&xs[a]).then(a.cmp(&b)));
    order
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn divisors_of(n: usize) -> Vec<usize> {
    (1..=n).filter(|k| n.is_multiple_of(*k)).collect()
}

/// Gene value that centers the initial mean on the most probable token:
/// the normal quantile of that token's bin midpoint.
pub fn learned_gene_value(layout: &BinLayout, probs: &TokenProbabilities) -> f64 {
    phi_inv(layout.midpoint(probs.argmax()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::default_inventory;
    use proptest::prelude::*;

    fn tiny_inventory(n: usize) -> TokenInventory {
        let inv = default_inventory();
        TokenInventory::from_ops(inv.tokens()[..n].iter().map(|t| t.op).collect()).unwrap()
    }

    #[test]
    fn uniform_probabilities_sum_to_one() {
        let p = TokenProbabilities::uniform(41).unwrap();
        assert_eq!(p.len(), 41);
        assert!((p.values().iter().sum::<f64>() - 1.0).abs() <= SUM_TOLERANCE);
        assert!(p.values().iter().all(|&x| (x - 1.0 / 41.0).abs() < 1e-15));
    }

    #[test]
    fn weights_normalize() {
        let p = TokenProbabilities::from_weights(&[3.0, 1.0]).unwrap();
        assert!((p.values()[0] - 0.75).abs() < 1e-15);
        assert!((p.values()[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn flooring_lifts_zero_weights() {
        let p = TokenProbabilities::from_weights(&[1.0, 0.0]).unwrap();
        assert!((p.values()[1] - PROBABILITY_FLOOR).abs() < 1e-18);
        assert!((p.values()[0] - (1.0 - PROBABILITY_FLOOR)).abs() < 1e-12);
        assert!((p.values().iter().sum::<f64>() - 1.0).abs() <= SUM_TOLERANCE);
    }

    #[test]
    fn flooring_is_stable_under_cascades() {
        // A weight barely above the floor can fall below it when other
        // entries are floored first.
        let mut weights = vec![0.000100001, 0.0, 0.0];
        weights.extend(vec![10.0; 5]);
        let p = TokenProbabilities::from_weights(&weights).unwrap();
        assert!((p.values().iter().sum::<f64>() - 1.0).abs() <= SUM_TOLERANCE);
        for &x in p.values() {
            assert!(x >= PROBABILITY_FLOOR - 1e-18, "entry below floor: {x}");
        }
    }

    #[test]
    fn degenerate_flooring_rejected() {
        let weights = vec![1.0; 10_001];
        assert!(matches!(
            TokenProbabilities::from_weights(&weights),
            Err(MappingError::DegenerateProbabilities { .. })
        ));
    }

    #[test]
    fn invalid_weights_rejected() {
        assert!(matches!(
            TokenProbabilities::from_weights(&[]),
            Err(MappingError::EmptyProbabilities)
        ));
        assert!(matches!(
            TokenProbabilities::from_weights(&[1.0, -0.5]),
            Err(MappingError::BadWeight { index: 1 })
        ));
        assert!(matches!(
            TokenProbabilities::from_weights(&[0.0, 0.0]),
            Err(MappingError::NoMass)
        ));
    }

    #[test]
    fn layout_widths_match_probabilities() {
        let p = TokenProbabilities::from_weights(&[5.0, 3.0, 1.0, 1.0]).unwrap();
        let layout = BinLayout::from_probs(&p);
        assert_eq!(layout.n_bins(), 4);
        assert_eq!(layout.bounds()[0], 0.0);
        assert_eq!(*layout.bounds().last().unwrap(), 1.0);
        for (i, &pi) in p.values().iter().enumerate() {
            assert!((layout.width(i) - pi).abs() < 1e-12);
        }
    }

    #[test]
    fn locate_handles_boundaries_and_extremes() {
        let layout = BinLayout::uniform(4).unwrap();
        assert_eq!(layout.locate(0.0), 0);
        assert_eq!(layout.locate(0.2499), 0);
        assert_eq!(layout.locate(0.25), 1);
        assert_eq!(layout.locate(0.75), 3);
        assert_eq!(layout.locate(0.999999), 3);
        assert_eq!(layout.locate(1.0), 3);
        assert_eq!(layout.locate(1.5), 3);
        assert_eq!(layout.locate(-0.1), 0);
    }

    #[test]
    fn phi_matches_known_values() {
        assert!((phi(0.0) - 0.5).abs() < 1e-12);
        assert!((phi(1.0) - 0.841344746068543).abs() < 1e-9);
        assert!((phi_inv(0.5)).abs() < 1e-9);
        assert!((phi_inv(phi(1.234)) - 1.234).abs() < 1e-9);
    }

    #[test]
    fn zero_genome_hits_middle_token_of_41() {
        let inv = default_inventory();
        let layout = BinLayout::uniform(41).unwrap();
        let scheme = MappingScheme::new(SchemeKind::Bin, 4, 41).unwrap();
        let decoded = scheme.decode(&[0.0; 4], &layout, &inv).unwrap();
        assert_eq!(decoded.candidates.len(), 1);
        for t in decoded.candidates[0].tokens() {
            assert_eq!(t.id.0, 21);
        }
    }

    #[test]
    fn bin_decode_respects_biased_widths() {
        // First bin takes nearly all mass, so a zero gene lands in it.
        let inv = tiny_inventory(3);
        let probs = TokenProbabilities::from_weights(&[0.98, 0.01, 0.01]).unwrap();
        let layout = BinLayout::from_probs(&probs);
        let scheme = MappingScheme::new(SchemeKind::Bin, 1, 3).unwrap();
        let decoded = scheme.decode(&[0.0], &layout, &inv).unwrap();
        assert_eq!(decoded.candidates[0].tokens()[0].id.0, 1);
        // A strongly positive gene still reaches the last bin.
        let decoded = scheme.decode(&[3.0], &layout, &inv).unwrap();
        assert_eq!(decoded.candidates[0].tokens()[0].id.0, 3);
    }

    #[test]
    fn dynamic_bin_emits_all_prefixes() {
        let inv = tiny_inventory(5);
        let layout = BinLayout::uniform(5).unwrap();
        let scheme = MappingScheme::new(SchemeKind::DynamicBin, 3, 5).unwrap();
        let genome = [-2.0, 0.0, 2.0, 0.1];
        let decoded = scheme.decode(&genome, &layout, &inv).unwrap();
        assert_eq!(decoded.candidates.len(), 3);
        for (k, p) in decoded.candidates.iter().enumerate() {
            assert_eq!(p.len(), k + 1);
        }
        // Prefixes nest.
        let full = &decoded.candidates[2];
        for (k, p) in decoded.candidates.iter().enumerate() {
            assert_eq!(p.tokens(), &full.tokens()[..k + 1]);
        }
        let hint = decoded.length_hint.unwrap();
        assert!((1..=3).contains(&hint));
    }

    #[test]
    fn single_group_ranks_coordinates() {
        let inv = tiny_inventory(4);
        let layout = BinLayout::uniform(4).unwrap();
        let scheme = MappingScheme::new(SchemeKind::SingleGroup, 3, 4).unwrap();
        let decoded = scheme
            .decode(&[0.5, 2.0, -1.0, 1.0], &layout, &inv)
            .unwrap();
        let ids: Vec<u32> = decoded.candidates[0]
            .tokens()
            .iter()
            .map(|t| t.id.0)
            .collect();
        assert_eq!(ids, vec![2, 4, 1]);
    }

    #[test]
    fn single_group_breaks_ties_by_lower_id() {
        let inv = tiny_inventory(4);
        let layout = BinLayout::uniform(4).unwrap();
        let scheme = MappingScheme::new(SchemeKind::SingleGroup, 3, 4).unwrap();
        let decoded = scheme.decode(&[1.0, 1.0, 1.0, 1.0], &layout, &inv).unwrap();
        let ids: Vec<u32> = decoded.candidates[0]
            .tokens()
            .iter()
            .map(|t| t.id.0)
            .collect();
        assert_eq!(ids, vec![1, 2, 3]);
    }

    #[test]
    fn multi_group_takes_argmax_per_block() {
        let inv = tiny_inventory(3);
        let layout = BinLayout::uniform(3).unwrap();
        let scheme = MappingScheme::new(SchemeKind::MultiGroup, 2, 3).unwrap();
        let genome = [0.1, 0.9, 0.2, 0.7, 0.7, 0.1];
        let decoded = scheme.decode(&genome, &layout, &inv).unwrap();
        let ids: Vec<u32> = decoded.candidates[0]
            .tokens()
            .iter()
            .map(|t| t.id.0)
            .collect();
        assert_eq!(ids, vec![2, 1]);
    }

    #[test]
    fn dynamic_multi_group_reference_case() {
        let inv = tiny_inventory(4);
        let layout = BinLayout::uniform(4).unwrap();
        let scheme = MappingScheme::new(SchemeKind::DynamicMultiGroup, 4, 4).unwrap();
        assert_eq!(scheme.genome_dimension(), 17);
        // Gene 0 decodes k: divisors of 4 are {1, 2, 4}; phi(0)=0.5 picks 2,
        // so the first two groups each contribute their top two tokens.
        let mut genome = vec![0.0];
        genome.extend([5.0, 1.0, 3.0, -2.0]);
        genome.extend([0.0, 2.0, 9.0, -1.0]);
        genome.extend([0.0; 8]);
        let decoded = scheme.decode(&genome, &layout, &inv).unwrap();
        let ids: Vec<u32> = decoded.candidates[0]
            .tokens()
            .iter()
            .map(|t| t.id.0)
            .collect();
        assert_eq!(ids, vec![1, 3, 3, 2]);
        assert_eq!(decoded.length_hint, Some(2));
    }

    #[test]
    fn genome_dimension_law() {
        let d = 41;
        let cases = [
            (SchemeKind::Bin, 6, 6),
            (SchemeKind::DynamicBin, 6, 7),
            (SchemeKind::SingleGroup, 6, 41),
            (SchemeKind::MultiGroup, 6, 246),
            (SchemeKind::DynamicMultiGroup, 6, 247),
        ];
        for (kind, l, expected) in cases {
            let scheme = MappingScheme::new(kind, l, d).unwrap();
            assert_eq!(scheme.genome_dimension(), expected, "{kind}");
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let inv = tiny_inventory(3);
        let layout = BinLayout::uniform(3).unwrap();
        let scheme = MappingScheme::new(SchemeKind::Bin, 2, 3).unwrap();
        assert!(matches!(
            scheme.decode(&[0.0; 3], &layout, &inv),
            Err(MappingError::DimensionMismatch {
                expected: 2,
                found: 3
            })
        ));
    }

    #[test]
    fn oversized_rank_schemes_rejected() {
        assert!(matches!(
            MappingScheme::new(SchemeKind::SingleGroup, 5, 3),
            Err(MappingError::LengthExceedsInventory { .. })
        ));
        assert!(matches!(
            MappingScheme::new(SchemeKind::DynamicMultiGroup, 5, 3),
            Err(MappingError::LengthExceedsInventory { .. })
        ));
        assert!(MappingScheme::new(SchemeKind::Bin, 5, 3).is_ok());
        assert!(matches!(
            MappingScheme::new(SchemeKind::Bin, 0, 3),
            Err(MappingError::ZeroLength)
        ));
    }

    #[test]
    fn learned_gene_targets_argmax_bin() {
        let probs = TokenProbabilities::from_weights(&[1.0, 6.0, 3.0]).unwrap();
        let layout = BinLayout::from_probs(&probs);
        let g = learned_gene_value(&layout, &probs);
        assert_eq!(layout.locate(phi(g)), 1);
    }

    #[test]
    fn probability_file_round_trip() {
        let inv = default_inventory();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("probs.tsv");
        let mut weights = vec![1.0; 41];
        weights[7] = 9.0;
        let probs = TokenProbabilities::from_weights(&weights).unwrap();
        probs.save(&path, &inv).unwrap();
        let back = TokenProbabilities::load(&path, &inv).unwrap();
        for (a, b) in probs.values().iter().zip(back.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn probability_file_rejects_unknown_and_duplicate_names() {
        let inv = tiny_inventory(2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("probs.tsv");
        std::fs::write(&path, "Head\t0.5\nBogus\t0.5\n").unwrap();
        assert!(matches!(
            TokenProbabilities::load(&path, &inv),
            Err(MappingError::UnknownTokenName(_))
        ));
        std::fs::write(&path, "Head\t0.5\nHead\t0.5\n").unwrap();
        assert!(matches!(
            TokenProbabilities::load(&path, &inv),
            Err(MappingError::DuplicateTokenName(_))
        ));
    }

    #[test]
    fn missing_tokens_get_floored_weight() {
        let inv = tiny_inventory(3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("probs.tsv");
        std::fs::write(&path, "Head\t0.9\nLast\t0.1\n").unwrap();
        let probs = TokenProbabilities::load(&path, &inv).unwrap();
        assert!((probs.values()[2] - PROBABILITY_FLOOR).abs() < 1e-18);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn perturbation_within_bin_is_stable(
            genes in proptest::collection::vec(-3.0f64..3.0, 4),
            nudges in proptest::collection::vec(0.01f64..0.49, 4),
        ) {
            let inv = default_inventory();
            let layout = BinLayout::uniform(41).unwrap();
            let scheme = MappingScheme::new(SchemeKind::Bin, 4, 41).unwrap();
            let base = scheme.decode(&genes, &layout, &inv).unwrap();
            let moved: Vec<f64> = genes
                .iter()
                .zip(&nudges)
                .map(|(&g, &frac)| {
                    let u = phi(g);
                    let bin = layout.locate(u);
                    let lo = layout.bounds()[bin];
                    let hi = layout.bounds()[bin + 1];
                    let near = (u - lo).min(hi - u);
                    phi_inv((u + near * frac).clamp(1e-12, 1.0 - 1e-12))
                })
                .collect();
            let shifted = scheme.decode(&moved, &layout, &inv).unwrap();
            prop_assert_eq!(base.candidates, shifted.candidates);
        }

        #[test]
        fn group_schemes_are_monotone_invariant(
            genes in proptest::collection::vec(-2.0f64..2.0, 12),
        ) {
            // Strictly increasing transforms preserve within-group ranks.
            let inv = tiny_inventory(4);
            let layout = BinLayout::uniform(4).unwrap();
            let transformed: Vec<f64> = genes.iter().map(|&g| 2.0 * g + 7.0).collect();
            for kind in [SchemeKind::SingleGroup, SchemeKind::MultiGroup] {
                let scheme = MappingScheme::new(kind, 3, 4).unwrap();
                let dim = scheme.genome_dimension();
                let a = scheme.decode(&genes[..dim], &layout, &inv).unwrap();
                let b = scheme.decode(&transformed[..dim], &layout, &inv).unwrap();
                prop_assert_eq!(a.candidates, b.candidates);
            }
            // Dynamic multi-group: transform the group coordinates only,
            // since the k gene reads an absolute value.
            let scheme = MappingScheme::new(SchemeKind::DynamicMultiGroup, 2, 4).unwrap();
            let dim = scheme.genome_dimension();
            let a = scheme.decode(&genes[..dim], &layout, &inv).unwrap();
            let mut mixed = transformed[..dim].to_vec();
            mixed[0] = genes[0];
            let b = scheme.decode(&mixed, &layout, &inv).unwrap();
            prop_assert_eq!(a.candidates, b.candidates);
        }
    }
}
