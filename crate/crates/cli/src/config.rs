//! Experiment configuration: one JSON file drives every subcommand.
//!
//! Relative paths are resolved against the directory of the config file.
//! `--set key.path=value` overrides are applied to the raw JSON before it
//! is parsed, so they reach any field, including ones absent from the file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use pavi_core::baselines::LearnerConfig;
use pavi_core::codec::{Composition, LinearizationSpec, DEFAULT_SEP_AV, DEFAULT_SEP_PR};
use pavi_core::corpus::{Schema, SynthConfig};
use pavi_core::metrics::SubsetFlags;
use pavi_core::ordering::{OrderingKind, OrderingPolicy};
use pavi_core::seq2seq::{DecodeConfig, ModelConfig, TrainConfig};
use pavi_core::Split;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seed of the synthetic corpus generator.
    pub seed: u64,
    #[serde(default = "default_schema")]
    pub schema: Schema,
    #[serde(default)]
    pub paths: PathsConfig,
    #[serde(default)]
    pub synth: SynthConfig,
    #[serde(default)]
    pub linearization: LinearizationConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub decode: DecodeConfig,
    #[serde(default)]
    pub baselines: BaselinesConfig,
    #[serde(default)]
    pub evaluation: SubsetFlags,
}

fn default_schema() -> Schema {
    Schema::MaveLike
}

/// Corpus locations default to `<output_dir>/data/<split>.jsonl`, which is
/// where `gen-data` writes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub taxonomy: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            train: None,
            dev: None,
            test: None,
            output_dir: PathBuf::from("runs"),
            taxonomy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearizationConfig {
    pub composition: Composition,
    pub ordering: OrderingKind,
    /// Seed of the global random pair order. Required by `prepare`.
    pub index_seed: Option<u64>,
    /// Seed of the per-example tie shuffle. Required by `prepare`.
    pub tie_seed: Option<u64>,
    pub sep_av: String,
    pub sep_pr: String,
}

impl Default for LinearizationConfig {
    fn default() -> Self {
        LinearizationConfig {
            composition: Composition::AttributeThenValue,
            ordering: OrderingKind::RareFirst,
            index_seed: None,
            tie_seed: None,
            sep_av: DEFAULT_SEP_AV.to_string(),
            sep_pr: DEFAULT_SEP_PR.to_string(),
        }
    }
}

impl LinearizationConfig {
    pub fn spec(&self) -> LinearizationSpec {
        LinearizationSpec {
            composition: self.composition,
            sep_av: self.sep_av.clone(),
            sep_pr: self.sep_pr.clone(),
        }
    }

    pub fn index_seed(&self) -> Result<u64> {
        self.index_seed
            .ok_or_else(|| anyhow!("linearization.index_seed is not set; set it in the config or with --set linearization.index_seed=N"))
    }

    pub fn policy(&self) -> Result<OrderingPolicy> {
        let tie_seed = self
            .tie_seed
            .ok_or_else(|| anyhow!("linearization.tie_seed is not set; set it in the config or with --set linearization.tie_seed=N"))?;
        Ok(OrderingPolicy::new(self.ordering, tie_seed))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Annotation {
    /// Tag the character spans recorded in the corpus.
    #[default]
    Spans,
    /// Tag every occurrence of a training value string.
    Matching,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NerConfig {
    pub enabled: bool,
    pub annotation: Annotation,
    pub case_insensitive: bool,
    pub learner: LearnerConfig,
}

impl Default for NerConfig {
    fn default() -> Self {
        NerConfig {
            enabled: true,
            annotation: Annotation::Spans,
            case_insensitive: false,
            learner: LearnerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlcConfig {
    pub enabled: bool,
    /// Restrict labels per example with the taxonomy at `paths.taxonomy`.
    pub use_taxonomy: bool,
    pub learner: LearnerConfig,
}

impl Default for MlcConfig {
    fn default() -> Self {
        MlcConfig {
            enabled: true,
            use_taxonomy: false,
            learner: LearnerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselinesConfig {
    pub ner: NerConfig,
    pub mlc: MlcConfig,
}

/// Sets `path` (dot separated) in a JSON object tree, creating objects on
/// the way. The value is parsed as JSON when possible, else kept a string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| anyhow!("override {assignment:?} is not of the form key.path=value"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("override key {key:?} has an empty component");
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| anyhow!("override {key:?}: {part:?} is not inside an object"))?;
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| anyhow!("override {key:?}: parent is not an object"))?;
    obj.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut raw: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        for o in overrides {
            apply_override(&mut raw, o)?;
        }
        let mut config: ExperimentConfig =
            serde_json::from_value(raw).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.paths.resolve(base);
        Ok(config)
    }

    pub fn artifacts(&self) -> Artifacts {
        Artifacts {
            root: self.paths.output_dir.clone(),
        }
    }

    pub fn corpus_path(&self, split: Split) -> PathBuf {
        let explicit = match split {
            Split::Train => &self.paths.train,
            Split::Dev => &self.paths.dev,
            Split::Test => &self.paths.test,
        };
        explicit.clone().unwrap_or_else(|| self.artifacts().data_dir().join(format!("{split}.jsonl")))
    }

    pub fn taxonomy_path(&self) -> PathBuf {
        self.paths
            .taxonomy
            .clone()
            .unwrap_or_else(|| self.artifacts().data_dir().join("taxonomy.jsonl"))
    }
}

impl PathsConfig {
    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.train, &mut self.dev, &mut self.test, &mut self.taxonomy].into_iter().flatten() {
            join(p);
        }
        join(&mut self.output_dir);
    }
}

/// File layout under the output directory.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub root: PathBuf,
}

impl Artifacts {
    pub fn data_dir(&self) -> PathBuf {
        self.root.join("data")
    }

    pub fn synth_manifest(&self) -> PathBuf {
        self.data_dir().join("manifest.json")
    }

    pub fn prepared_dir(&self) -> PathBuf {
        self.root.join("prepared")
    }

    pub fn prepared(&self, name: &str) -> PathBuf {
        self.prepared_dir().join(name)
    }

    pub fn targets(&self, split: Split) -> PathBuf {
        self.prepared(&format!("targets.{split}.txt"))
    }

    pub fn target_ids(&self, split: Split) -> PathBuf {
        self.prepared(&format!("targets.{split}.ids"))
    }

    pub fn tagged(&self, split: Split) -> PathBuf {
        self.prepared(&format!("tagged.{split}.txt"))
    }

    pub fn models_dir(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn checkpoint(&self, approach: &str) -> PathBuf {
        self.models_dir().join(format!("{approach}.json"))
    }

    pub fn train_log(&self, approach: &str) -> PathBuf {
        self.models_dir().join(format!("{approach}.log.csv"))
    }

    pub fn predictions_dir(&self) -> PathBuf {
        self.root.join("predictions")
    }

    pub fn predictions(&self, approach: &str, split: Split) -> PathBuf {
        self.predictions_dir().join(format!("{approach}.{split}.jsonl"))
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_create_and_replace() {
        let mut v = json!({"seed": 1, "train": {"epochs": 3}});
        apply_override(&mut v, "train.epochs=5").unwrap();
        apply_override(&mut v, "linearization.ordering=common_first").unwrap();
        apply_override(&mut v, "paths.output_dir=out/x").unwrap();
        assert_eq!(v["train"]["epochs"], json!(5));
        assert_eq!(v["linearization"]["ordering"], json!("common_first"));
        assert_eq!(v["paths"]["output_dir"], json!("out/x"));
        assert!(apply_override(&mut v, "noequals").is_err());
        assert!(apply_override(&mut v, "seed.inner=1").is_err());
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let config: ExperimentConfig = serde_json::from_value(json!({"seed": 3})).unwrap();
        assert_eq!(config.schema, Schema::MaveLike);
        assert!(config.linearization.policy().is_err());
        assert!(config.baselines.ner.enabled);
        assert!(serde_json::from_value::<ExperimentConfig>(json!({})).is_err());
        assert!(serde_json::from_value::<ExperimentConfig>(json!({"seed": 3, "bogus": 1})).is_err());
    }
}
