//! Extraction and classification baselines.
//!
//! The extraction baseline tags tokens with BILOU chunks over the training
//! attributes, so it can only output substrings of the input. The
//! classification baseline scores every training (attribute, value) pair as
//! a label, so it can only output pairs seen in training. An optional
//! taxonomy restricts the labels considered per example.

mod labels;
mod mlc;
mod tagger;
mod tags;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use labels::{build_label_space, taxonomy_mask, LabelSpace, Taxonomy};
pub use mlc::{predict_mlc, train_mlc, Mlc, THRESHOLD};
pub use tagger::{build_features, predict_tagger, train_tagger, FeatureMap, Tagger};
pub use tags::{
    annotate_by_matching, annotate_from_spans, build_tag_space, build_value_dictionary, decode_bilou, read_tagged,
    write_tagged, Bilou, TagSpace, TaggedExample, ValueDictionary, OUTSIDE,
};

/// Hyperparameters shared by the two stand-in learners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            epochs: 10,
            learning_rate: 0.1,
            seed: 7,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate = {} must be positive", self.learning_rate)));
        }
        Ok(())
    }
}
