//! Semantics-preserving rewrites that turn a normalized snippet into its
//! positive (anchor) view.
//!
//! Each rewrite family implements [`Transform`] and is looked up by name in a
//! [`TransformRegistry`]. [`generate_anchor`] walks the enabled families in a
//! fixed order, flipping a per-family coin for each.

mod analysis;
mod transforms;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::{grammar, parse_text, AstError, Language, NormalizedSnippet};
use crate::edit::apply_edits;

pub use analysis::{Analysis, Effects};
pub use transforms::{
    AddDummyStatement, AddTryCatch, ArithmeticTransform, Context, PermuteDeclaration, PermuteStatement, Rewrite,
    SwapCondition, Transform, WhileForExchange,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AugmentError {
    #[error("unknown transform `{0}`")]
    UnknownTransform(String),
    #[error("probability for {0} must lie in [0, 1], got {1}")]
    BadProbability(String, f64),
    #[error(transparent)]
    Parse(#[from] AstError),
}

/// Rewrite families, in the order they are attempted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TransformKind {
    PermuteDeclaration,
    SwapCondition,
    ArithmeticTransform,
    WhileForExchange,
    AddDummyStatement,
    AddTryCatch,
    PermuteStatement,
}

impl TransformKind {
    pub const ALL: [TransformKind; 7] = [
        TransformKind::PermuteDeclaration,
        TransformKind::SwapCondition,
        TransformKind::ArithmeticTransform,
        TransformKind::WhileForExchange,
        TransformKind::AddDummyStatement,
        TransformKind::AddTryCatch,
        TransformKind::PermuteStatement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TransformKind::PermuteDeclaration => "PermuteDeclaration",
            TransformKind::SwapCondition => "SwapCondition",
            TransformKind::ArithmeticTransform => "ArithmeticTransform",
            TransformKind::WhileForExchange => "WhileForExchange",
            TransformKind::AddDummyStatement => "AddDummyStatement",
            TransformKind::AddTryCatch => "AddTryCatch",
            TransformKind::PermuteStatement => "PermuteStatement",
        }
    }

    /// Whether the family rewrites each site independently (as opposed to
    /// picking one site).
    pub fn per_site(self) -> bool {
        matches!(
            self,
            TransformKind::AddDummyStatement | TransformKind::AddTryCatch | TransformKind::PermuteStatement
        )
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TransformKind {
    type Err = AugmentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TransformKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| AugmentError::UnknownTransform(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub enabled: Vec<TransformKind>,
    /// Chance that a family is attempted at all.
    pub per_kind_probability: BTreeMap<TransformKind, f64>,
    /// Chance that each site is rewritten, for per-site families.
    pub site_probability: BTreeMap<TransformKind, f64>,
    pub rng_seed: u64,
    /// Extra rounds of coin flips before falling back to a forced rewrite.
    pub max_redraws: usize,
}

pub const DEFAULT_KIND_PROBABILITY: f64 = 0.5;
pub const DEFAULT_SITE_PROBABILITY: f64 = 0.1;

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            enabled: TransformKind::ALL.to_vec(),
            per_kind_probability: BTreeMap::new(),
            site_probability: BTreeMap::new(),
            rng_seed: 0,
            max_redraws: 8,
        }
    }
}

impl AugmentConfig {
    pub fn only(kinds: &[TransformKind]) -> Self {
        AugmentConfig {
            enabled: kinds.to_vec(),
            ..Default::default()
        }
    }

    pub fn kind_probability(&self, kind: TransformKind) -> f64 {
        *self
            .per_kind_probability
            .get(&kind)
            .unwrap_or(&DEFAULT_KIND_PROBABILITY)
    }

    pub fn site_probability(&self, kind: TransformKind) -> f64 {
        *self.site_probability.get(&kind).unwrap_or(&DEFAULT_SITE_PROBABILITY)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        for (k, p) in self.per_kind_probability.iter().chain(&self.site_probability) {
            if !(0.0..=1.0).contains(p) {
                return Err(AugmentError::BadProbability(k.to_string(), *p));
            }
        }
        Ok(())
    }
}

/// Derives the seed for one sample from the run seed and the sample id, so
/// results do not depend on processing order.
pub fn sample_seed(global: u64, id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix(global ^ splitmix(h))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppliedTransform {
    pub kind: TransformKind,
    /// Byte spans touched, relative to the text the rewrite was applied to.
    pub sites: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorSnippet {
    pub parent_id: String,
    pub language: Language,
    pub text: String,
    pub applied: Vec<AppliedTransform>,
    /// Families that were enabled but cannot apply to this language.
    pub skipped: Vec<TransformKind>,
}

/// Name-keyed collection of rewrite families.
pub struct TransformRegistry {
    entries: Vec<Box<dyn Transform>>,
}

impl TransformRegistry {
    pub fn empty() -> Self {
        TransformRegistry { entries: Vec::new() }
    }

    /// All built-in families.
    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(PermuteDeclaration));
        r.register(Box::new(SwapCondition));
        r.register(Box::new(ArithmeticTransform));
        r.register(Box::new(WhileForExchange));
        r.register(Box::new(AddDummyStatement));
        r.register(Box::new(AddTryCatch));
        r.register(Box::new(PermuteStatement));
        r
    }

    /// Adds a family, replacing any existing one with the same name.
    pub fn register(&mut self, t: Box<dyn Transform>) {
        self.entries.retain(|e| e.name() != t.name());
        self.entries.push(t);
        self.entries.sort_by_key(|e| e.kind());
    }

    pub fn get(&self, name: &str) -> Option<&dyn Transform> {
        self.entries
            .iter()
            .find(|e| e.name().eq_ignore_ascii_case(name))
            .map(|b| b.as_ref())
    }

    pub fn by_kind(&self, kind: TransformKind) -> Option<&dyn Transform> {
        self.entries.iter().find(|e| e.kind() == kind).map(|b| b.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}

impl Default for TransformRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

/// New text and the byte spans that changed.
pub type Rewritten = (String, Vec<(usize, usize)>);

/// Runs one family over `text`. Returns the rewritten text and the sites, or
/// `None` when nothing applied or the result would not parse as cleanly as
/// the input.
pub fn apply_transform(
    transform: &dyn Transform,
    language: Language,
    text: &str,
    site_probability: f64,
    force: bool,
    rng: &mut dyn rand::RngCore,
) -> Result<Option<Rewritten>, AugmentError> {
    if !transform.supports(language) {
        return Ok(None);
    }
    let tree = parse_text(language, text)?;
    let g = grammar(language);
    let mut cx = Context {
        tree: &tree,
        grammar: g,
        analysis: Analysis::new(&tree, g),
        site_probability,
        force,
    };
    let Some(rw) = transform.rewrite(&mut cx, rng) else {
        return Ok(None);
    };
    let out = apply_edits(text, &rw.edits);
    if out == text {
        return Ok(None);
    }
    let reparsed = parse_text(language, &out)?;
    if reparsed.had_errors() && !tree.had_errors() {
        log::debug!("{} produced unparsable text; discarded", transform.name());
        return Ok(None);
    }
    Ok(Some((out, rw.sites)))
}

/// Builds the positive view of `snippet`. Deterministic in
/// `(snippet, cfg.rng_seed)`.
pub fn generate_anchor(snippet: &NormalizedSnippet, cfg: &AugmentConfig) -> Result<AnchorSnippet, AugmentError> {
    generate_anchor_with(&TransformRegistry::standard(), snippet, cfg)
}

pub fn generate_anchor_with(
    registry: &TransformRegistry,
    snippet: &NormalizedSnippet,
    cfg: &AugmentConfig,
) -> Result<AnchorSnippet, AugmentError> {
    cfg.validate()?;
    let language = snippet.language;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut enabled: Vec<TransformKind> = cfg.enabled.clone();
    enabled.sort();
    enabled.dedup();
    let mut skipped = Vec::new();
    let mut usable = Vec::new();
    for kind in enabled {
        match registry.by_kind(kind) {
            Some(t) if t.supports(language) => usable.push(t),
            Some(_) => skipped.push(kind),
            None => return Err(AugmentError::UnknownTransform(kind.to_string())),
        }
    }

    let anchor = |text: String, applied: Vec<AppliedTransform>, skipped: Vec<TransformKind>| AnchorSnippet {
        parent_id: snippet.source_id.clone(),
        language,
        text,
        applied,
        skipped,
    };

    for _round in 0..=cfg.max_redraws {
        let mut text = snippet.text.clone();
        let mut applied = Vec::new();
        for t in &usable {
            let kind = t.kind();
            if !rng.gen_bool(cfg.kind_probability(kind)) {
                continue;
            }
            if let Some((out, sites)) =
                apply_transform(*t, language, &text, cfg.site_probability(kind), false, &mut rng)?
            {
                text = out;
                applied.push(AppliedTransform { kind, sites });
            }
        }
        if !applied.is_empty() && text != snippet.text {
            return Ok(anchor(text, applied, skipped));
        }
    }

    // Coin flips kept missing; take the first family that has any site.
    for t in &usable {
        if let Some((out, sites)) = apply_transform(
            *t,
            language,
            &snippet.text,
            cfg.site_probability(t.kind()),
            true,
            &mut rng,
        )? {
            let applied = vec![AppliedTransform { kind: t.kind(), sites }];
            return Ok(anchor(out, applied, skipped));
        }
    }
    Ok(anchor(snippet.text.clone(), Vec::new(), skipped))
}

#[cfg(test)]
mod tests;
