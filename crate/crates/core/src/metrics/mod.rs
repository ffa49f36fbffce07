//! Evaluation protocol: per-attribute outcome counts with the discard rule,
//! micro and attribute-level macro scores, and restricted evaluations.
//!
//! For every example, predictions whose attribute has no gold annotation at
//! all are discarded. For attributes with positive gold, each predicted pair
//! is a true positive (TP) or a false positive (FP_p), and each missed gold
//! pair a false negative (FN). For attributes annotated as having no value,
//! each predicted pair is an FP_n, and no prediction at all counts as NN.
//!
//! P = TP / (TP + FP_p + FP_n), R = TP / (TP + FN), F1 = 2PR / (P + R), each
//! taken as 0 when its denominator is 0.

mod quadrant;
mod render;
mod subsets;

use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::corpus::{AttributeValuePair, Corpus, PairSet};

pub use quadrant::{quadrant_split, AttributeGroup, QuadrantSplit};
pub use render::{render_bundle, render_comparison};
pub use subsets::{subset_canonicalized, subset_multiattr, subset_unseen, GoldFilter, UnseenLevel};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub tp: usize,
    pub fp_p: usize,
    pub fp_n: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub nn: usize,
}

impl Add for EvalCounts {
    type Output = EvalCounts;

    fn add(self, o: EvalCounts) -> EvalCounts {
        EvalCounts {
            tp: self.tp + o.tp,
            fp_p: self.fp_p + o.fp_p,
            fp_n: self.fp_n + o.fp_n,
            fn_: self.fn_ + o.fn_,
            nn: self.nn + o.nn,
        }
    }
}

impl AddAssign for EvalCounts {
    fn add_assign(&mut self, o: EvalCounts) {
        *self = *self + o;
    }
}

impl EvalCounts {
    pub fn le(&self, o: &EvalCounts) -> bool {
        self.tp <= o.tp && self.fp_p <= o.fp_p && self.fp_n <= o.fp_n && self.fn_ <= o.fn_ && self.nn <= o.nn
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn safe_div(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

impl Scores {
    pub fn from_counts(c: &EvalCounts) -> Scores {
        let tp = c.tp as f64;
        let precision = safe_div(tp, (c.tp + c.fp_p + c.fp_n) as f64);
        let recall = safe_div(tp, (c.tp + c.fn_) as f64);
        let f1 = safe_div(2.0 * precision * recall, precision + recall);
        Scores { precision, recall, f1 }
    }
}

/// Outcome counts of one example (or a sum of examples).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Categorized {
    pub per_attribute: BTreeMap<String, EvalCounts>,
    pub discarded: usize,
}

impl Categorized {
    pub fn totals(&self) -> EvalCounts {
        self.per_attribute.values().fold(EvalCounts::default(), |a, &b| a + b)
    }

    pub fn merge(&mut self, other: &Categorized) {
        for (attr, counts) in &other.per_attribute {
            *self.per_attribute.entry(attr.clone()).or_default() += *counts;
        }
        self.discarded += other.discarded;
    }
}

/// Categorizes predictions against one example's gold pairs (positives and
/// negatives). Predicted pairs flagged negative are abstentions and ignored.
/// An attribute with both positive and negative gold is treated as positive.
pub fn categorize<'a, I>(gold: I, predicted: &PairSet) -> Categorized
where
    I: IntoIterator<Item = &'a AttributeValuePair>,
{
    let mut positive: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut negative: BTreeSet<&str> = BTreeSet::new();
    for pair in gold {
        if pair.is_negative {
            negative.insert(&pair.attribute);
        } else {
            positive.entry(&pair.attribute).or_default().insert(&pair.value);
        }
    }
    let mut out = Categorized::default();
    for attr in positive.keys().chain(negative.iter()) {
        out.per_attribute.entry(attr.to_string()).or_default();
    }
    let mut predicted_attrs: BTreeSet<&str> = BTreeSet::new();
    for pred in predicted.iter().filter(|p| !p.is_negative) {
        if let Some(values) = positive.get(pred.attribute.as_str()) {
            let c = out.per_attribute.get_mut(&pred.attribute).unwrap();
            if values.contains(pred.value.as_str()) {
                c.tp += 1;
            } else {
                c.fp_p += 1;
            }
        } else if negative.contains(pred.attribute.as_str()) {
            out.per_attribute.get_mut(&pred.attribute).unwrap().fp_n += 1;
        } else {
            out.discarded += 1;
            continue;
        }
        predicted_attrs.insert(&pred.attribute);
    }
    for (attr, values) in &positive {
        let c = out.per_attribute.get_mut(*attr).unwrap();
        c.fn_ += values.len() - c.tp;
    }
    for attr in &negative {
        if !positive.contains_key(attr) && !predicted_attrs.contains(attr) {
            out.per_attribute.get_mut(*attr).unwrap().nn += 1;
        }
    }
    out
}

pub fn micro_scores(counts: &EvalCounts) -> Scores {
    Scores::from_counts(counts)
}

/// Unweighted mean of per-attribute scores over the given attributes.
pub fn macro_scores(per_attribute: &BTreeMap<String, EvalCounts>) -> Scores {
    if per_attribute.is_empty() {
        return Scores::default();
    }
    let n = per_attribute.len() as f64;
    let mut sum = Scores::default();
    for counts in per_attribute.values() {
        let s = Scores::from_counts(counts);
        sum.precision += s.precision;
        sum.recall += s.recall;
        sum.f1 += s.f1;
    }
    Scores {
        precision: sum.precision / n,
        recall: sum.recall / n,
        f1: sum.f1 / n,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeReport {
    pub counts: EvalCounts,
    pub scores: Scores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub micro: Scores,
    #[serde(rename = "macro")]
    pub macro_: Scores,
    pub totals: EvalCounts,
    pub per_attribute: BTreeMap<String, AttributeReport>,
    pub discarded_predictions: usize,
    pub num_examples: usize,
    pub num_gold_pairs: usize,
}

impl EvalReport {
    pub fn from_categorized(c: &Categorized, num_examples: usize, num_gold_pairs: usize) -> EvalReport {
        let totals = c.totals();
        EvalReport {
            micro: micro_scores(&totals),
            macro_: macro_scores(&c.per_attribute),
            totals,
            per_attribute: c
                .per_attribute
                .iter()
                .map(|(a, counts)| {
                    (
                        a.clone(),
                        AttributeReport {
                            counts: *counts,
                            scores: Scores::from_counts(counts),
                        },
                    )
                })
                .collect(),
            discarded_predictions: c.discarded,
            num_examples,
            num_gold_pairs,
        }
    }
}

/// Predictions keyed by example id; missing ids predict nothing.
pub type Predictions = BTreeMap<String, PairSet>;

/// Scores `predictions` against the unified gold of `gold`.
pub fn evaluate_all(gold: &Corpus, predictions: &Predictions) -> EvalReport {
    evaluate_filtered(gold, predictions, None)
}

/// Restricted evaluation. With a filter, gold keeps only the listed positive
/// pairs; predictions that exactly match an excluded gold pair of the same
/// example are removed first, and predictions for attributes left without
/// gold fall under the discard rule.
pub fn evaluate_filtered(gold: &Corpus, predictions: &Predictions, filter: Option<&GoldFilter>) -> EvalReport {
    let empty = PairSet::new();
    let mut total = Categorized::default();
    let mut num_examples = 0;
    let mut num_gold = 0;
    for example in &gold.examples {
        let unified = example.unified();
        let predicted = predictions.get(&example.id).unwrap_or(&empty);
        let (kept, predicted): (Vec<&AttributeValuePair>, PairSet) = match filter {
            None => (unified.pairs.iter().collect(), predicted.clone()),
            Some(f) => {
                let (kept, excluded): (Vec<_>, Vec<_>) =
                    unified.pairs.iter().partition(|p| !p.is_negative && f.contains(&example.id, p));
                let excluded: BTreeSet<_> = excluded.into_iter().filter(|p| !p.is_negative).cloned().collect();
                if kept.is_empty() {
                    continue;
                }
                (kept, predicted.difference(&excluded).cloned().collect())
            }
        };
        num_examples += 1;
        num_gold += kept.iter().filter(|p| !p.is_negative).count();
        total.merge(&categorize(kept, &predicted));
    }
    EvalReport::from_categorized(&total, num_examples, num_gold)
}

/// Evaluation restricted to one attribute group: gold and predictions of
/// other attributes are dropped.
pub fn evaluate_attributes(gold: &Corpus, predictions: &Predictions, attributes: &BTreeSet<String>) -> EvalReport {
    let mut total = Categorized::default();
    let mut num_examples = 0;
    let mut num_gold = 0;
    let empty = PairSet::new();
    for example in &gold.examples {
        let unified = example.unified();
        let kept: Vec<&AttributeValuePair> = unified.pairs.iter().filter(|p| attributes.contains(&p.attribute)).collect();
        if kept.is_empty() {
            continue;
        }
        let predicted: PairSet = predictions
            .get(&example.id)
            .unwrap_or(&empty)
            .iter()
            .filter(|p| attributes.contains(&p.attribute))
            .cloned()
            .collect();
        num_examples += 1;
        num_gold += kept.iter().filter(|p| !p.is_negative).count();
        total.merge(&categorize(kept, &predicted));
    }
    EvalReport::from_categorized(&total, num_examples, num_gold)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubsetFlags {
    pub unseen: bool,
    pub multi_attribute: bool,
    pub canonicalized: bool,
    pub quadrants: bool,
    pub unseen_level: UnseenLevel,
}

impl Default for SubsetFlags {
    fn default() -> Self {
        SubsetFlags {
            unseen: true,
            multi_attribute: true,
            canonicalized: true,
            quadrants: true,
            unseen_level: UnseenLevel::Value,
        }
    }
}

impl SubsetFlags {
    pub fn none() -> Self {
        SubsetFlags {
            unseen: false,
            multi_attribute: false,
            canonicalized: false,
            quadrants: false,
            unseen_level: UnseenLevel::Value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantCell {
    pub frequency: String,
    pub distinct_values: String,
    pub num_attributes: usize,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalBundle {
    pub full: EvalReport,
    pub subsets: BTreeMap<String, EvalReport>,
    pub quadrants: Option<(QuadrantSplit, Vec<QuadrantCell>)>,
}

/// Full-set report plus every requested subset. Subsets needing training
/// data (unseen values, quadrants) are skipped when `train` is absent.
pub fn evaluate(test: &Corpus, predictions: &Predictions, train: Option<&Corpus>, flags: &SubsetFlags) -> EvalBundle {
    let full = evaluate_all(test, predictions);
    let mut subsets = BTreeMap::new();
    if flags.unseen {
        if let Some(train) = train {
            let filter = subset_unseen(test, train, flags.unseen_level);
            subsets.insert("unseen".to_string(), evaluate_filtered(test, predictions, Some(&filter)));
        }
    }
    if flags.multi_attribute {
        let filter = subset_multiattr(test);
        subsets.insert("multi_attribute".to_string(), evaluate_filtered(test, predictions, Some(&filter)));
    }
    if flags.canonicalized {
        let filter = subset_canonicalized(test);
        subsets.insert("canonicalized".to_string(), evaluate_filtered(test, predictions, Some(&filter)));
    }
    let quadrants = match (flags.quadrants, train) {
        (true, Some(train)) => {
            let attributes: BTreeSet<String> = test
                .examples
                .iter()
                .flat_map(|e| e.pairs.iter().map(|p| p.attribute.clone()))
                .collect();
            let split = quadrant_split(&attributes, train);
            let cells = split
                .cells()
                .into_iter()
                .map(|(frequency, distinct_values, attrs)| QuadrantCell {
                    frequency: frequency.to_string(),
                    distinct_values: distinct_values.to_string(),
                    num_attributes: attrs.len(),
                    report: evaluate_attributes(test, predictions, &attrs),
                })
                .collect();
            Some((split, cells))
        }
        _ => None,
    };
    EvalBundle {
        full,
        subsets,
        quadrants,
    }
}

/// Gold positives of every example as predictions (the self-evaluation).
pub fn gold_predictions(corpus: &Corpus) -> Predictions {
    corpus.examples.iter().map(|e| (e.id.clone(), e.positive_set())).collect()
}
