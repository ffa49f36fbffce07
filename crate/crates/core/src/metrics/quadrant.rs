use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeGroup {
    Lo,
    Hi,
}

impl AttributeGroup {
    /// `lo` is `[0, median]` (left-open `(0, median]` for seen attributes),
    /// `hi` is `(median, ∞)`.
    fn of(x: usize, median: f64) -> AttributeGroup {
        if (x as f64) <= median {
            AttributeGroup::Lo
        } else {
            AttributeGroup::Hi
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantSplit {
    pub median_examples: f64,
    pub median_values: f64,
    /// attribute → (training examples, distinct training values)
    pub attribute_stats: BTreeMap<String, (usize, usize)>,
    /// (frequency group, distinct-value group) → attributes. Stored in JSON
    /// as a list of `[[frequency, distinct_values], attributes]` entries.
    #[serde(with = "group_entries")]
    pub groups: BTreeMap<(AttributeGroup, AttributeGroup), BTreeSet<String>>,
}

mod group_entries {
    use std::collections::{BTreeMap, BTreeSet};

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::AttributeGroup;

    type Groups = BTreeMap<(AttributeGroup, AttributeGroup), BTreeSet<String>>;

    pub fn serialize<S: Serializer>(groups: &Groups, s: S) -> Result<S::Ok, S::Error> {
        groups.iter().collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Groups, D::Error> {
        Ok(Vec::<((AttributeGroup, AttributeGroup), BTreeSet<String>)>::deserialize(d)?.into_iter().collect())
    }
}

fn median(mut xs: Vec<usize>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_unstable();
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2] as f64
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) as f64 / 2.0
    }
}

/// Splits `attributes` at the medians of their training-example count and
/// distinct-value count.
pub fn quadrant_split(attributes: &BTreeSet<String>, train: &Corpus) -> QuadrantSplit {
    let mut examples: BTreeMap<&str, usize> = BTreeMap::new();
    let mut values: BTreeMap<&str, HashSet<&str>> = BTreeMap::new();
    for ex in &train.examples {
        let mut attrs = HashSet::new();
        for p in ex.positives() {
            attrs.insert(p.attribute.as_str());
            values.entry(&p.attribute).or_default().insert(&p.value);
        }
        for a in attrs {
            *examples.entry(a).or_default() += 1;
        }
    }
    let attribute_stats: BTreeMap<String, (usize, usize)> = attributes
        .iter()
        .map(|a| {
            let n = examples.get(a.as_str()).copied().unwrap_or(0);
            let v = values.get(a.as_str()).map_or(0, HashSet::len);
            (a.clone(), (n, v))
        })
        .collect();
    let median_examples = median(attribute_stats.values().map(|s| s.0).collect());
    let median_values = median(attribute_stats.values().map(|s| s.1).collect());
    let mut groups: BTreeMap<_, BTreeSet<String>> = BTreeMap::new();
    for f in [AttributeGroup::Lo, AttributeGroup::Hi] {
        for v in [AttributeGroup::Lo, AttributeGroup::Hi] {
            groups.insert((f, v), BTreeSet::new());
        }
    }
    for (a, &(n, v)) in &attribute_stats {
        let key = (AttributeGroup::of(n, median_examples), AttributeGroup::of(v, median_values));
        groups.get_mut(&key).unwrap().insert(a.clone());
    }
    QuadrantSplit {
        median_examples,
        median_values,
        attribute_stats,
        groups,
    }
}

impl QuadrantSplit {
    /// The 3×3 table of cells (hi, lo, all) × (hi, lo, all).
    pub fn cells(&self) -> Vec<(&'static str, &'static str, BTreeSet<String>)> {
        let pick = |name: &str| -> Vec<AttributeGroup> {
            match name {
                "hi" => vec![AttributeGroup::Hi],
                "lo" => vec![AttributeGroup::Lo],
                _ => vec![AttributeGroup::Hi, AttributeGroup::Lo],
            }
        };
        let mut out = Vec::new();
        for f in ["hi", "lo", "all"] {
            for v in ["hi", "lo", "all"] {
                let mut attrs = BTreeSet::new();
                for fg in pick(f) {
                    for vg in pick(v) {
                        attrs.extend(self.groups[&(fg, vg)].iter().cloned());
                    }
                }
                out.push((f, v, attrs));
            }
        }
        out
    }
}
