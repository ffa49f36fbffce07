//! Multi-label classification label space and taxonomy masks.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::synth::CategorySpec;
use crate::corpus::{AttributeValuePair, Corpus};
use crate::error::{Error, Result};

/// Distinct (attribute, value) training labels in sorted order. Negative
/// annotations are labels with the value `None`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpace {
    pub labels: Vec<(String, String)>,
    negative: BTreeSet<usize>,
}

impl LabelSpace {
    pub fn new(pairs: impl IntoIterator<Item = AttributeValuePair>) -> Self {
        let set: BTreeSet<AttributeValuePair> = pairs.into_iter().collect();
        let negative = set.iter().enumerate().filter(|(_, p)| p.is_negative).map(|(i, _)| i).collect();
        LabelSpace {
            labels: set.iter().map(|p| (p.attribute.clone(), p.value.clone())).collect(),
            negative,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index(&self, attribute: &str, value: &str) -> Option<usize> {
        self.labels
            .binary_search_by(|(a, v)| (a.as_str(), v.as_str()).cmp(&(attribute, value)))
            .ok()
    }

    pub fn is_negative(&self, label: usize) -> bool {
        self.negative.contains(&label)
    }

    pub fn pair(&self, label: usize) -> AttributeValuePair {
        let (a, v) = &self.labels[label];
        if self.is_negative(label) {
            AttributeValuePair::negative(a.clone())
        } else {
            AttributeValuePair::new(a.clone(), v.clone())
        }
    }

    /// Label ids of an example's unified gold pairs that are in the space.
    pub fn gold(&self, pairs: &[AttributeValuePair]) -> BTreeSet<usize> {
        pairs.iter().filter_map(|p| self.index(&p.attribute, &p.value)).collect()
    }
}

pub fn build_label_space(train: &Corpus) -> LabelSpace {
    LabelSpace::new(train.examples.iter().flat_map(|e| e.unified().pairs))
}

/// Category → permitted labels, and example id → category.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Taxonomy {
    pub categories: BTreeMap<String, BTreeSet<(String, String)>>,
    pub assignments: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum TaxonomyRecord {
    Category { category: String, labels: Vec<(String, String)> },
    Assignment { example_id: String, category: String },
}

impl Taxonomy {
    /// Each category permits every label whose attribute belongs to it.
    pub fn from_categories(space: &LabelSpace, categories: &[CategorySpec], assignments: &BTreeMap<String, String>) -> Self {
        let categories = categories
            .iter()
            .map(|c| {
                let attrs: BTreeSet<&str> = c.attributes.iter().map(String::as_str).collect();
                let labels = space.labels.iter().filter(|(a, _)| attrs.contains(a.as_str())).cloned().collect();
                (c.name.clone(), labels)
            })
            .collect();
        Taxonomy {
            categories,
            assignments: assignments.clone(),
        }
    }

    /// Every permitted label must exist in `space`.
    pub fn validate(&self, space: &LabelSpace) -> Result<()> {
        for (name, labels) in &self.categories {
            if let Some((a, v)) = labels.iter().find(|(a, v)| space.index(a, v).is_none()) {
                return Err(Error::Schema(format!("category {name:?} permits unknown label ({a:?}, {v:?})")));
            }
        }
        for (id, c) in &self.assignments {
            if !self.categories.contains_key(c) {
                return Err(Error::Schema(format!("example {id:?} is assigned to unknown category {c:?}")));
            }
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<taxonomy>", e);
        for (category, labels) in &self.categories {
            let rec = TaxonomyRecord::Category {
                category: category.clone(),
                labels: labels.iter().cloned().collect(),
            };
            writeln!(w, "{}", serde_json::to_string(&rec)?).map_err(io)?;
        }
        for (example_id, category) in &self.assignments {
            let rec = TaxonomyRecord::Assignment {
                example_id: example_id.clone(),
                category: category.clone(),
            };
            writeln!(w, "{}", serde_json::to_string(&rec)?).map_err(io)?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut t = Taxonomy::default();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<taxonomy>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TaxonomyRecord = serde_json::from_str(&line)
                .map_err(|e| Error::Schema(format!("taxonomy line {}: {e}", n + 1)))?;
            match rec {
                TaxonomyRecord::Category { category, labels } => {
                    t.categories.entry(category).or_default().extend(labels);
                }
                TaxonomyRecord::Assignment { example_id, category } => {
                    t.assignments.insert(example_id, category);
                }
            }
        }
        Ok(t)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Taxonomy::read(BufReader::new(file))
    }
}

/// Label ids permitted for `example_id`: the labels of its category, or the
/// whole space when there is no taxonomy or the example is unassigned.
pub fn taxonomy_mask(space: &LabelSpace, taxonomy: Option<&Taxonomy>, example_id: &str) -> Vec<usize> {
    let permitted = taxonomy
        .and_then(|t| t.assignments.get(example_id).and_then(|c| t.categories.get(c)));
    match permitted {
        None => (0..space.len()).collect(),
        Some(labels) => labels.iter().filter_map(|(a, v)| space.index(a, v)).collect(),
    }
}
