//! Predictions JSONL: one `{"id", "pairs", "diagnostics"}` record per line.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use pavi_core::codec::DecodeDiagnostics;
use pavi_core::metrics::Predictions;
use pavi_core::{AttributeValuePair, Corpus, PairSet};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub id: String,
    pub pairs: Vec<(String, String)>,
    pub diagnostics: DecodeDiagnostics,
}

impl PredictionRecord {
    pub fn new(id: &str, pairs: &PairSet, diagnostics: DecodeDiagnostics) -> Self {
        PredictionRecord {
            id: id.to_string(),
            pairs: pairs.iter().map(|p| (p.attribute.clone(), p.value.clone())).collect(),
            diagnostics,
        }
    }
}

/// Writes one record per corpus example, in corpus order.
pub fn write_predictions(
    path: &Path,
    corpus: &Corpus,
    predictions: &Predictions,
    diagnostics: &BTreeMap<String, DecodeDiagnostics>,
) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    let empty = PairSet::new();
    for e in &corpus.examples {
        let pairs = predictions.get(&e.id).unwrap_or(&empty);
        let diag = diagnostics.get(&e.id).copied().unwrap_or_default();
        writeln!(w, "{}", serde_json::to_string(&PredictionRecord::new(&e.id, pairs, diag))?)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let file = fs::File::open(path).with_context(|| format!("opening predictions {}", path.display()))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord =
            serde_json::from_str(&line).with_context(|| format!("{}:{}: bad prediction record", path.display(), n + 1))?;
        out.push(rec);
    }
    Ok(out)
}

/// Checks that the records cover every gold id exactly once and nothing
/// else, and converts them to a prediction map.
pub fn to_predictions(records: &[PredictionRecord], gold: &Corpus, origin: &Path) -> Result<Predictions> {
    let known = gold.by_id();
    let mut out = Predictions::new();
    for rec in records {
        if !known.contains_key(rec.id.as_str()) {
            bail!("{}: id {:?} is not in the gold corpus", origin.display(), rec.id);
        }
        let pairs = rec.pairs.iter().map(|(a, v)| AttributeValuePair::new(a.clone(), v.clone())).collect();
        if out.insert(rec.id.clone(), pairs).is_some() {
            bail!("{}: id {:?} appears more than once", origin.display(), rec.id);
        }
    }
    if let Some(missing) = gold.examples.iter().find(|e| !out.contains_key(&e.id)) {
        bail!("{}: no prediction for id {:?}", origin.display(), missing.id);
    }
    Ok(out)
}
