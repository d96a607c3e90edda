//! Hashed bag-of-words pair encoder.
//!
//! Stands in for a pre-trained language model: every claim-evidence pair is
//! mapped to one `d_m` vector. Tokens are hashed into `d_v` buckets per
//! segment, each segment's count vector is projected by its own embedding
//! table, the projections are mixed by learnable per-dimension weights, and a
//! `tanh` is applied:
//!
//! `h = tanh(mix_c ⊙ (x_c · E_c) + mix_e ⊙ (x_e · E_e) + mix_o ⊙ (x_o · E_o) + b)`
//!
//! Segments are the claim (`c`), the evidence (`e`) and the overlap (`o`):
//! distinct evidence tokens that also occur in the claim. The overlap segment
//! is the only place claim and evidence meet before the `tanh`; without it a
//! bag-of-words pair cannot express agreement between the two texts.
//!
//! The blank node (claim only) takes the same path with empty evidence and
//! overlap segments, whose projections are zero vectors.
//!
//! Distinct tokens that land in the same bucket are indistinguishable; see
//! [`collision_report`].

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::numerics::{seeded_rng, xavier_uniform, SeededRng, Tape, Tensor, Var};

/// Reserved token placed between a document title and its sentence.
pub const TITLE_SEPARATOR: &str = "[sep]";

/// Whole-token cap on one claim-evidence pair; the evidence tail is cut first.
pub const MAX_PAIR_TOKENS: usize = 256;

pub const DEFAULT_VOCAB_BUCKETS: usize = 4096;

/// Lowercases, splits on whitespace and strips surrounding ASCII punctuation.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| c.is_ascii_punctuation()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Evidence segment tokens: title (underscores read as spaces), separator, sentence.
pub fn evidence_tokens(title: &str, sentence: &str) -> Vec<String> {
    let mut tokens = tokenize(&title.replace('_', " "));
    tokens.push(TITLE_SEPARATOR.to_string());
    tokens.extend(tokenize(sentence));
    tokens
}

/// 64-bit FNV-1a; stable across platforms and releases.
pub fn stable_hash(token: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    token
        .bytes()
        .fold(OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

pub fn bucket(token: &str, buckets: usize) -> usize {
    (stable_hash(token) % buckets as u64) as usize
}

/// Sparse `(bucket, count)` pairs sorted by bucket.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TokenBag(pub Vec<(usize, f64)>);

impl TokenBag {
    pub fn from_tokens<S: AsRef<str>>(tokens: &[S], buckets: usize) -> Self {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in tokens {
            *counts.entry(bucket(t.as_ref(), buckets)).or_default() += 1.0;
        }
        TokenBag(counts.into_iter().collect())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Dense count vector of length `buckets`.
    pub fn dense(&self, buckets: usize) -> Vec<f64> {
        let mut v = vec![0.0; buckets];
        for &(b, c) in &self.0 {
            v[b] += c;
        }
        v
    }
}

/// Evidence-side segments of one pair: the evidence bag and the bag of
/// distinct evidence tokens also present in the claim.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairBags {
    pub evidence: TokenBag,
    pub overlap: TokenBag,
}

impl PairBags {
    /// Expects tokens already cut by [`truncate_pair`].
    pub fn new<S: AsRef<str>>(claim_tokens: &[S], evidence_tokens: &[S], buckets: usize) -> Self {
        let claim: BTreeSet<&str> = claim_tokens.iter().map(AsRef::as_ref).collect();
        let shared: BTreeSet<&str> = evidence_tokens
            .iter()
            .map(AsRef::as_ref)
            .filter(|t| claim.contains(t))
            .collect();
        let shared: Vec<&str> = shared.into_iter().collect();
        Self {
            evidence: TokenBag::from_tokens(evidence_tokens, buckets),
            overlap: TokenBag::from_tokens(&shared, buckets),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.evidence.is_empty() && self.overlap.is_empty()
    }
}

/// Applies the pair cap: the claim keeps up to [`MAX_PAIR_TOKENS`] tokens, the
/// evidence keeps whatever budget remains.
pub fn truncate_pair<'t, S>(claim: &'t [S], evidence: &'t [S]) -> (&'t [S], &'t [S]) {
    let claim = &claim[..claim.len().min(MAX_PAIR_TOKENS)];
    let budget = MAX_PAIR_TOKENS - claim.len();
    (claim, &evidence[..evidence.len().min(budget)])
}

/// Learnable parameters of the pair encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct HashEncoder {
    pub buckets: usize,
    pub claim_embedding: Tensor,
    pub evidence_embedding: Tensor,
    pub overlap_embedding: Tensor,
    pub claim_mix: Tensor,
    pub evidence_mix: Tensor,
    pub overlap_mix: Tensor,
    pub bias: Tensor,
}

impl HashEncoder {
    pub fn new(buckets: usize, d_m: usize, seed: u64) -> Self {
        Self::with_rng(buckets, d_m, &mut seeded_rng(seed))
    }

    pub fn with_rng(buckets: usize, d_m: usize, rng: &mut SeededRng) -> Self {
        Self {
            buckets,
            claim_embedding: xavier_uniform(rng, &[buckets, d_m], buckets, d_m),
            evidence_embedding: xavier_uniform(rng, &[buckets, d_m], buckets, d_m),
            overlap_embedding: xavier_uniform(rng, &[buckets, d_m], buckets, d_m),
            claim_mix: Tensor::filled(&[1, d_m], 1.0),
            evidence_mix: Tensor::filled(&[1, d_m], 1.0),
            overlap_mix: Tensor::filled(&[1, d_m], 1.0),
            bias: Tensor::zeros(&[1, d_m]),
        }
    }

    pub fn dim(&self) -> usize {
        self.bias.len()
    }

    pub(crate) fn tensors(&self) -> [(&'static str, &Tensor); 7] {
        [
            ("claim_embedding", &self.claim_embedding),
            ("evidence_embedding", &self.evidence_embedding),
            ("overlap_embedding", &self.overlap_embedding),
            ("claim_mix", &self.claim_mix),
            ("evidence_mix", &self.evidence_mix),
            ("overlap_mix", &self.overlap_mix),
            ("bias", &self.bias),
        ]
    }

    pub(crate) fn tensors_mut(&mut self) -> [&mut Tensor; 7] {
        [
            &mut self.claim_embedding,
            &mut self.evidence_embedding,
            &mut self.overlap_embedding,
            &mut self.claim_mix,
            &mut self.evidence_mix,
            &mut self.overlap_mix,
            &mut self.bias,
        ]
    }

    pub fn bind<'a>(&'a self, tape: &Tape<'a>, trainable: bool) -> BoundEncoder {
        BoundEncoder {
            claim_embedding: tape.leaf(&self.claim_embedding, trainable),
            evidence_embedding: tape.leaf(&self.evidence_embedding, trainable),
            overlap_embedding: tape.leaf(&self.overlap_embedding, trainable),
            claim_mix: tape.leaf(&self.claim_mix, trainable),
            evidence_mix: tape.leaf(&self.evidence_mix, trainable),
            overlap_mix: tape.leaf(&self.overlap_mix, trainable),
            bias: tape.leaf(&self.bias, trainable),
        }
    }
}

/// [`HashEncoder`] parameters recorded on a tape.
#[derive(Debug, Clone, Copy)]
pub struct BoundEncoder {
    pub claim_embedding: Var,
    pub evidence_embedding: Var,
    pub overlap_embedding: Var,
    pub claim_mix: Var,
    pub evidence_mix: Var,
    pub overlap_mix: Var,
    pub bias: Var,
}

impl BoundEncoder {
    /// Mixed claim projection plus bias: the pre-activation shared by every
    /// node of one graph.
    pub fn record_claim(&self, tape: &Tape<'_>, claim: &TokenBag) -> Result<Var> {
        let projected = tape.embedding_bag(self.claim_embedding, &claim.0)?;
        let mixed = tape.mul(self.claim_mix, projected)?;
        tape.add(mixed, self.bias)
    }

    /// `tanh(claim_part + mix_e ⊙ (x_e · E_e) + mix_o ⊙ (x_o · E_o))`; empty
    /// bags give the blank node.
    pub fn record_pair(&self, tape: &Tape<'_>, claim_part: Var, bags: &PairBags) -> Result<Var> {
        let projected = tape.embedding_bag(self.evidence_embedding, &bags.evidence.0)?;
        let mixed = tape.mul(self.evidence_mix, projected)?;
        let pre = tape.add(claim_part, mixed)?;
        let shared = tape.embedding_bag(self.overlap_embedding, &bags.overlap.0)?;
        let shared = tape.mul(self.overlap_mix, shared)?;
        let pre = tape.add(pre, shared)?;
        Ok(tape.tanh(pre))
    }
}

/// Encodes one tokenized pair. Tokens are expected to be already normalized.
pub fn encode_text<S: AsRef<str>>(claim_tokens: &[S], evidence_tokens: &[S], encoder: &HashEncoder) -> Result<Vec<f64>> {
    let (claim_tokens, evidence_tokens) = truncate_pair(claim_tokens, evidence_tokens);
    let claim = TokenBag::from_tokens(claim_tokens, encoder.buckets);
    let bags = PairBags::new(claim_tokens, evidence_tokens, encoder.buckets);
    let tape = Tape::new();
    let bound = encoder.bind(&tape, false);
    let claim_part = bound.record_claim(&tape, &claim)?;
    let h = bound.record_pair(&tape, claim_part, &bags)?;
    let out = tape.value(h).data().to_vec();
    Ok(out)
}

/// Node encoding `h_p` for a claim and one evidence sentence with its title.
pub fn encode_node(claim: &str, title: &str, sentence: &str, encoder: &HashEncoder) -> Result<Vec<f64>> {
    let claim_tokens = tokenize(claim);
    if claim_tokens.is_empty() {
        return Err(Error::contract("cannot encode an empty claim"));
    }
    encode_text(&claim_tokens, &evidence_tokens(title, sentence), encoder)
}

/// Blank-node encoding `h_b`: the claim with an empty evidence slot.
pub fn encode_blank_node(claim: &str, encoder: &HashEncoder) -> Result<Vec<f64>> {
    let claim_tokens = tokenize(claim);
    if claim_tokens.is_empty() {
        return Err(Error::contract("cannot encode an empty claim"));
    }
    encode_text(&claim_tokens, &[], encoder)
}

/// Bucket collisions among a set of distinct tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionReport {
    pub distinct_tokens: usize,
    pub occupied_buckets: usize,
    /// Buckets holding more than one distinct token, with those tokens.
    pub collisions: Vec<(usize, Vec<String>)>,
}

pub fn collision_report<'s>(tokens: impl IntoIterator<Item = &'s str>, buckets: usize) -> CollisionReport {
    let mut by_bucket: HashMap<usize, Vec<String>> = HashMap::new();
    let mut distinct = BTreeSet::new();
    for t in tokens {
        if distinct.insert(t.to_string()) {
            by_bucket.entry(bucket(t, buckets)).or_default().push(t.to_string());
        }
    }
    let mut collisions: Vec<(usize, Vec<String>)> = by_bucket
        .iter()
        .filter(|(_, v)| v.len() > 1)
        .map(|(b, v)| {
            let mut v = v.clone();
            v.sort();
            (*b, v)
        })
        .collect();
    collisions.sort();
    CollisionReport {
        distinct_tokens: distinct.len(),
        occupied_buckets: by_bucket.len(),
        collisions,
    }
}
