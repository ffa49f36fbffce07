//! JSONL persistence for both dataset schemas.
//!
//! `mave_like` records carry character spans and negative attributes:
//!
//! ```json
//! {"id":"1","paragraphs":["title","desc"],"pairs":[{"attribute":"Type","value":"Jersey","spans":[{"paragraph":0,"begin":34,"end":40}]}],"negatives":["Special use"]}
//! ```
//!
//! `canonical_like` records carry bare pairs and no negatives.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AttributeValuePair, Corpus, ProductExample, Span, Split};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schema {
    MaveLike,
    CanonicalLike,
}

impl FromStr for Schema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mave_like" => Ok(Schema::MaveLike),
            "canonical_like" => Ok(Schema::CanonicalLike),
            other => Err(Error::Config(format!("unknown schema {other:?}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpanPair {
    attribute: String,
    value: String,
    #[serde(default)]
    spans: Vec<Span>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaveRecord {
    id: String,
    paragraphs: Vec<String>,
    pairs: Vec<SpanPair>,
    #[serde(default)]
    negatives: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BarePair {
    attribute: String,
    value: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CanonicalRecord {
    id: String,
    paragraphs: Vec<String>,
    pairs: Vec<BarePair>,
}

fn parse_record(line: &str, schema: Schema) -> serde_json::Result<ProductExample> {
    Ok(match schema {
        Schema::MaveLike => {
            let rec: MaveRecord = serde_json::from_str(line)?;
            let mut pairs: Vec<AttributeValuePair> = rec
                .pairs
                .into_iter()
                .map(|p| AttributeValuePair::new(p.attribute, p.value).with_spans(p.spans))
                .collect();
            pairs.extend(rec.negatives.into_iter().map(AttributeValuePair::negative));
            ProductExample::new(rec.id, rec.paragraphs, pairs)
        }
        Schema::CanonicalLike => {
            let rec: CanonicalRecord = serde_json::from_str(line)?;
            let pairs = rec
                .pairs
                .into_iter()
                .map(|p| AttributeValuePair::new(p.attribute, p.value))
                .collect();
            ProductExample::new(rec.id, rec.paragraphs, pairs)
        }
    })
}

fn render_record(example: &ProductExample, schema: Schema) -> Result<String> {
    Ok(match schema {
        Schema::MaveLike => serde_json::to_string(&MaveRecord {
            id: example.id.clone(),
            paragraphs: example.paragraphs.clone(),
            pairs: example
                .positives()
                .map(|p| SpanPair {
                    attribute: p.attribute.clone(),
                    value: p.value.clone(),
                    spans: p.spans.clone(),
                })
                .collect(),
            negatives: example.negatives().map(|p| p.attribute.clone()).collect(),
        })?,
        Schema::CanonicalLike => {
            if let Some(pair) = example.pairs.iter().find(|p| p.is_negative || !p.spans.is_empty()) {
                return Err(Error::Schema(format!(
                    "example {}: {pair} needs spans or a negative marker, which canonical_like cannot store",
                    example.id
                )));
            }
            serde_json::to_string(&CanonicalRecord {
                id: example.id.clone(),
                paragraphs: example.paragraphs.clone(),
                pairs: example
                    .pairs
                    .iter()
                    .map(|p| BarePair {
                        attribute: p.attribute.clone(),
                        value: p.value.clone(),
                    })
                    .collect(),
            })?
        }
    })
}

/// Parses JSONL from any reader; `origin` names the source in errors.
pub fn read_corpus<R: BufRead>(reader: R, origin: &Path, schema: Schema, split: Split) -> Result<Corpus> {
    let mut examples = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let example = parse_record(&line, schema).map_err(|e| Error::MalformedLine {
            path: origin.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        example.validate(schema == Schema::MaveLike)?;
        examples.push(example);
    }
    let corpus = Corpus::new(split, examples);
    corpus.check_unique_ids()?;
    Ok(corpus)
}

/// Loads one split. Pairs keep record order (positives, then negatives) and
/// are not unified.
pub fn load_corpus(path: impl AsRef<Path>, schema: Schema, split: Split) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file), path, schema, split)
}

pub fn write_corpus<W: Write>(corpus: &Corpus, mut writer: W, schema: Schema) -> Result<()> {
    for example in &corpus.examples {
        let line = render_record(example, schema)?;
        writeln!(writer, "{line}").map_err(|e| Error::io("<writer>", e))?;
    }
    Ok(())
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>, schema: Schema) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    write_corpus(corpus, &mut writer, schema)?;
    writer.flush().map_err(|e| Error::io(path, e))
}
