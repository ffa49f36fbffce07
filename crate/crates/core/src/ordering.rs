//! Pair frequency index and target-side pair orderings.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{unify_pairs, AttributeValuePair, Corpus};
use crate::error::{Error, Result};

/// Stable 64-bit FNV-1a, used wherever a hash must survive toolchain upgrades.
pub(crate) fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for &b in *part {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        // separator so ("ab","c") and ("a","bc") differ
        h ^= 0xff;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

type Key = (String, String);

fn key_of(pair: &AttributeValuePair) -> Key {
    (pair.attribute.clone(), pair.value.clone())
}

/// Document frequencies of positive training pairs plus one shuffled total
/// order over them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairFrequencyIndex {
    counts: HashMap<Key, usize>,
    random_rank: HashMap<Key, usize>,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct IndexRecord {
    attribute: String,
    value: String,
    count: usize,
    random_rank: usize,
}

impl PairFrequencyIndex {
    /// Builds the index over unified positive pairs of `train`. The random
    /// order collects pairs in first-seen order, deduplicates them, and
    /// shuffles with `seed`.
    pub fn build(train: &Corpus, seed: u64) -> Self {
        let mut counts: HashMap<Key, usize> = HashMap::new();
        let mut first_seen: Vec<Key> = Vec::new();
        for example in &train.examples {
            for pair in unify_pairs(&example.pairs).iter().filter(|p| !p.is_negative) {
                let key = key_of(pair);
                let count = counts.entry(key.clone()).or_insert(0);
                if *count == 0 {
                    first_seen.push(key);
                }
                *count += 1;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        first_seen.shuffle(&mut rng);
        let random_rank = first_seen.into_iter().enumerate().map(|(i, k)| (k, i)).collect();
        PairFrequencyIndex {
            counts,
            random_rank,
            seed,
        }
    }

    /// Number of distinct indexed pairs.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Training document frequency; 0 for unindexed pairs.
    pub fn count(&self, attribute: &str, value: &str) -> usize {
        self.counts
            .get(&(attribute.to_string(), value.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn rank(&self, attribute: &str, value: &str) -> Option<usize> {
        self.random_rank.get(&(attribute.to_string(), value.to_string())).copied()
    }

    /// Indexed pairs with count and rank, in random-order rank.
    pub fn entries(&self) -> Vec<(&str, &str, usize, usize)> {
        let mut out: Vec<_> = self
            .random_rank
            .iter()
            .map(|((a, v), &r)| (a.as_str(), v.as_str(), self.counts[&(a.clone(), v.clone())], r))
            .collect();
        out.sort_by_key(|e| e.3);
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (attribute, value, count, random_rank) in self.entries() {
            let rec = IndexRecord {
                attribute: attribute.to_string(),
                value: value.to_string(),
                count,
                random_rank,
            };
            writeln!(w, "{}", serde_json::to_string(&rec)?).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, seed: u64) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut index = PairFrequencyIndex {
            seed,
            ..Self::default()
        };
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: IndexRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            let key = (rec.attribute, rec.value);
            index.counts.insert(key.clone(), rec.count);
            index.random_rank.insert(key, rec.random_rank);
        }
        let ranks: HashSet<usize> = index.random_rank.values().copied().collect();
        if ranks.len() != index.len() || ranks.iter().any(|&r| r >= index.len()) {
            return Err(Error::Schema(format!(
                "{}: random ranks are not a permutation of 0..{}",
                path.display(),
                index.len()
            )));
        }
        Ok(index)
    }
}

pub fn build_frequency_index(train: &Corpus, seed: u64) -> PairFrequencyIndex {
    PairFrequencyIndex::build(train, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingKind {
    RareFirst,
    CommonFirst,
    RandomGlobal,
}

impl OrderingKind {
    pub const ALL: [OrderingKind; 3] = [OrderingKind::RareFirst, OrderingKind::CommonFirst, OrderingKind::RandomGlobal];

    pub fn as_str(&self) -> &'static str {
        match self {
            OrderingKind::RareFirst => "rare_first",
            OrderingKind::CommonFirst => "common_first",
            OrderingKind::RandomGlobal => "random_global",
        }
    }
}

impl fmt::Display for OrderingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OrderingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OrderingKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown ordering {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderingPolicy {
    pub kind: OrderingKind,
    pub tie_seed: u64,
}

impl OrderingPolicy {
    pub fn new(kind: OrderingKind, tie_seed: u64) -> Self {
        OrderingPolicy { kind, tie_seed }
    }
}

/// Orders one example's pairs.
///
/// Rare-first sorts by ascending training count, common-first by descending
/// count (unindexed pairs count 0 in both), random-global by the index's
/// shuffled rank (unindexed pairs go after all indexed ones, keyed by a
/// stable hash). Pairs with equal keys are shuffled by an RNG seeded from
/// `(tie_seed, example_id)`, applied to the pairs in sorted order so the
/// result depends only on the set and not on how it was listed.
pub fn order_pairs(
    pairs: &[AttributeValuePair],
    policy: &OrderingPolicy,
    index: &PairFrequencyIndex,
    example_id: &str,
) -> Vec<AttributeValuePair> {
    let mut out = pairs.to_vec();
    out.sort();
    let tie_seed = fnv1a(&[&policy.tie_seed.to_le_bytes(), example_id.as_bytes()]);
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(tie_seed));
    match policy.kind {
        OrderingKind::RareFirst => out.sort_by_key(|p| index.count(&p.attribute, &p.value)),
        OrderingKind::CommonFirst => {
            out.sort_by_key(|p| std::cmp::Reverse(index.count(&p.attribute, &p.value)))
        }
        OrderingKind::RandomGlobal => {
            let base = index.len() as u128;
            out.sort_by_key(|p| match index.rank(&p.attribute, &p.value) {
                Some(r) => r as u128,
                None => base + u128::from(fnv1a(&[p.attribute.as_bytes(), p.value.as_bytes()])),
            })
        }
    }
    out
}
