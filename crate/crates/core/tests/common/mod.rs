//! Shared test helpers: an independent brute-force scorer and random
//! instance generators.
#![allow(dead_code)]

use std::collections::BTreeMap;

use pavi_core::metrics::EvalCounts;
use pavi_core::{AttributeValuePair, PairSet};
use proptest::prelude::*;

pub const ATTRS: [&str; 5] = ["Color", "Size", "Brand", "Material", "Fit"];
pub const VALUES: [&str; 4] = ["Red", "Large", "Acme", "Silk"];

/// Scores one instance by looping over gold and predictions directly.
pub fn brute_force(gold: &[AttributeValuePair], predicted: &[AttributeValuePair]) -> (BTreeMap<String, EvalCounts>, usize) {
    let mut per: BTreeMap<String, EvalCounts> = BTreeMap::new();
    for g in gold {
        per.entry(g.attribute.clone()).or_default();
    }
    let mut discarded = 0;
    let mut seen: Vec<&AttributeValuePair> = Vec::new();
    for p in predicted {
        if p.is_negative || seen.iter().any(|q| q.attribute == p.attribute && q.value == p.value) {
            continue;
        }
        seen.push(p);
        let has_gold = gold.iter().any(|g| g.attribute == p.attribute);
        let has_positive = gold.iter().any(|g| g.attribute == p.attribute && !g.is_negative);
        if !has_gold {
            discarded += 1;
        } else if has_positive {
            let hit = gold.iter().any(|g| !g.is_negative && g.attribute == p.attribute && g.value == p.value);
            let c = per.get_mut(&p.attribute).unwrap();
            if hit {
                c.tp += 1;
            } else {
                c.fp_p += 1;
            }
        } else {
            per.get_mut(&p.attribute).unwrap().fp_n += 1;
        }
    }
    let mut counted: Vec<(&str, &str)> = Vec::new();
    for g in gold.iter().filter(|g| !g.is_negative) {
        if counted.contains(&(g.attribute.as_str(), g.value.as_str())) {
            continue;
        }
        counted.push((&g.attribute, &g.value));
        if !seen.iter().any(|p| p.attribute == g.attribute && p.value == g.value) {
            per.get_mut(&g.attribute).unwrap().fn_ += 1;
        }
    }
    let mut negative_attrs: Vec<&str> = Vec::new();
    for g in gold.iter().filter(|g| g.is_negative) {
        if negative_attrs.contains(&g.attribute.as_str()) {
            continue;
        }
        negative_attrs.push(&g.attribute);
        let has_positive = gold.iter().any(|h| h.attribute == g.attribute && !h.is_negative);
        let predicted_any = seen.iter().any(|p| p.attribute == g.attribute);
        if !has_positive && !predicted_any {
            per.get_mut(&g.attribute).unwrap().nn += 1;
        }
    }
    (per, discarded)
}

/// P, R, F1 written out from the definitions.
pub fn brute_scores(tp: usize, fp_p: usize, fp_n: usize, fn_: usize) -> (f64, f64, f64) {
    let p = if tp + fp_p + fp_n == 0 { 0.0 } else { tp as f64 / (tp + fp_p + fp_n) as f64 };
    let r = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

fn pair_strategy() -> impl Strategy<Value = AttributeValuePair> {
    (0..ATTRS.len(), 0..VALUES.len(), prop::bool::weighted(0.15)).prop_map(|(a, v, neg)| {
        if neg {
            AttributeValuePair::negative(ATTRS[a])
        } else {
            AttributeValuePair::new(ATTRS[a], VALUES[v])
        }
    })
}

/// Gold pairs with negatives, unified so that no attribute is both negative
/// and positive.
pub fn gold_strategy() -> impl Strategy<Value = Vec<AttributeValuePair>> {
    prop::collection::vec(pair_strategy(), 0..=20).prop_map(|pairs| {
        let mut out: Vec<AttributeValuePair> = Vec::new();
        for p in pairs {
            let clash = out.iter().any(|q| q.attribute == p.attribute && q.is_negative != p.is_negative);
            if !clash && !out.contains(&p) {
                out.push(p);
            }
        }
        out
    })
}

/// Predictions over the same small alphabet, so discards and misses occur.
pub fn prediction_strategy() -> impl Strategy<Value = PairSet> {
    prop::collection::vec((0..ATTRS.len(), 0..VALUES.len()), 0..=20)
        .prop_map(|v| v.into_iter().map(|(a, b)| AttributeValuePair::new(ATTRS[a], VALUES[b])).collect())
}
