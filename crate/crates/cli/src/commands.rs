//! Subcommand implementations. Every command reads the config, writes its
//! artifacts under the output directory, and reads back what it wrote.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::ValueEnum;
use log::info;
use pavi_core::baselines::{
    annotate_by_matching, annotate_from_spans, build_label_space, build_tag_space, build_value_dictionary, predict_mlc,
    predict_tagger, read_tagged, train_mlc, train_tagger, write_tagged, LabelSpace, Mlc, TagSpace, Tagger, Taxonomy,
};
use pavi_core::codec::DecodeDiagnostics;
use pavi_core::corpus::{compute_stats, generate_synthetic_corpus, load_corpus, save_corpus, CorpusStats};
use pavi_core::metrics::{evaluate, render_bundle, render_comparison, EvalBundle, Predictions};
use pavi_core::ordering::{build_frequency_index, PairFrequencyIndex};
use pavi_core::seq2seq::{self, build_vocab, predict_corpus, target_tokens, TinySeq2Seq, TrainLog, Vocab};
use pavi_core::{Corpus, Split, Tokenizer};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{Annotation, ExperimentConfig, LinearizationConfig};
use crate::predictions::{read_predictions, to_predictions, write_predictions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Approach {
    /// Generative sequence-to-set model.
    Gen,
    /// BILOU extraction baseline.
    Ner,
    /// Multi-label classification baseline.
    Mlc,
}

impl Approach {
    pub fn as_str(&self) -> &'static str {
        match self {
            Approach::Gen => "gen",
            Approach::Ner => "ner",
            Approach::Mlc => "mlc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Dev,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Dev => Split::Dev,
            SplitArg::Test => Split::Test,
        }
    }
}

/// The requested approaches, or every enabled one when none is named.
pub fn select_approaches(config: &ExperimentConfig, requested: &[Approach]) -> Result<Vec<Approach>> {
    let enabled = |a: Approach| match a {
        Approach::Gen => true,
        Approach::Ner => config.baselines.ner.enabled,
        Approach::Mlc => config.baselines.mlc.enabled,
    };
    if requested.is_empty() {
        return Ok([Approach::Gen, Approach::Ner, Approach::Mlc].into_iter().filter(|&a| enabled(a)).collect());
    }
    let mut out = requested.to_vec();
    out.sort();
    out.dedup();
    if let Some(a) = out.iter().find(|&&a| !enabled(a)) {
        bail!("approach {} is disabled in the config (baselines.{}.enabled = false)", a.as_str(), a.as_str());
    }
    Ok(out)
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating directory {}", path.display()))
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => create_dir(p),
        _ => Ok(()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T, pretty: bool) -> Result<()> {
    let text = if pretty {
        serde_json::to_string_pretty(value)?
    } else {
        serde_json::to_string(value)?
    };
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Reads an artifact produced by an earlier command, naming that command
/// in the error when the file is missing.
fn read_artifact<T: DeserializeOwned>(path: &Path, producer: &str) -> Result<T> {
    ensure_exists(path, producer)?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn ensure_exists(path: &Path, producer: &str) -> Result<()> {
    if !path.exists() {
        bail!("{} does not exist; run `pavi {producer}` first", path.display());
    }
    Ok(())
}

fn load_split(config: &ExperimentConfig, split: Split) -> Result<Corpus> {
    let path = config.corpus_path(split);
    if !path.exists() {
        bail!(
            "{split} corpus {} does not exist; run `pavi gen-data` or set paths.{split}",
            path.display()
        );
    }
    Ok(load_corpus(&path, config.schema, split)?)
}

pub fn gen_data(config: &ExperimentConfig, seed: Option<u64>) -> Result<()> {
    let seed = seed.unwrap_or(config.seed);
    let out = generate_synthetic_corpus(&config.synth, seed)?;
    for split in Split::ALL {
        let path = config.corpus_path(split);
        create_parent(&path)?;
        save_corpus(out.split(split), &path, config.schema)?;
        let back = load_corpus(&path, config.schema, split)?;
        let ids = |c: &Corpus| c.examples.iter().map(|e| e.id.clone()).collect::<Vec<_>>();
        ensure!(ids(&back) == ids(out.split(split)), "{} did not read back intact", path.display());
        println!("{split}: {} examples -> {}", back.len(), path.display());
    }
    let manifest_path = config.artifacts().synth_manifest();
    create_parent(&manifest_path)?;
    write_json(&manifest_path, &out.manifest, true)?;
    let space = build_label_space(&out.train);
    let taxonomy = Taxonomy::from_categories(&space, &out.manifest.categories, &out.manifest.example_categories);
    taxonomy.validate(&space)?;
    let taxonomy_path = config.taxonomy_path();
    create_parent(&taxonomy_path)?;
    taxonomy.save(&taxonomy_path)?;
    println!("manifest -> {}", manifest_path.display());
    println!("taxonomy -> {}", taxonomy_path.display());
    Ok(())
}

/// Settings the prepared artifacts were built with; later commands refuse
/// to mix them with a different linearization.
#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct PreparedSettings {
    linearization: LinearizationConfig,
    annotation: Annotation,
    case_insensitive: bool,
}

fn prepared_settings(config: &ExperimentConfig) -> PreparedSettings {
    PreparedSettings {
        linearization: config.linearization.clone(),
        annotation: config.baselines.ner.annotation,
        case_insensitive: config.baselines.ner.case_insensitive,
    }
}

fn check_prepared(config: &ExperimentConfig) -> Result<()> {
    let path = config.artifacts().prepared("settings.json");
    let stored: PreparedSettings = read_artifact(&path, "prepare")?;
    if stored != prepared_settings(config) {
        bail!(
            "{} was prepared with different linearization or annotation settings; re-run `pavi prepare`",
            config.artifacts().prepared_dir().display()
        );
    }
    Ok(())
}

pub fn prepare(config: &ExperimentConfig) -> Result<()> {
    let lin = &config.linearization;
    let index_seed = lin.index_seed()?;
    let policy = lin.policy()?;
    let spec = lin.spec();
    let corpora: Vec<Corpus> = Split::ALL.iter().map(|&s| load_split(config, s)).collect::<Result<_>>()?;
    let train = &corpora[0];
    spec.validate(&corpora.iter().collect::<Vec<_>>())?;

    let art = config.artifacts();
    create_dir(&art.prepared_dir())?;

    let index = build_frequency_index(train, index_seed);
    let index_path = art.prepared("index.jsonl");
    index.save(&index_path)?;
    ensure!(PairFrequencyIndex::load(&index_path, index_seed)? == index, "{} did not read back intact", index_path.display());

    let vocab = build_vocab(train, &spec);
    write_json(&art.prepared("vocab.json"), &vocab, false)?;

    for corpus in &corpora {
        let mut targets = String::new();
        let mut ids = String::new();
        for e in &corpus.examples {
            targets.push_str(&target_tokens(e, &spec, &policy, &index)?.join(" "));
            targets.push('\n');
            ids.push_str(&e.id);
            ids.push('\n');
        }
        write_text(&art.targets(corpus.split), &targets)?;
        write_text(&art.target_ids(corpus.split), &ids)?;
    }

    let tag_space = build_tag_space(train);
    write_json(&art.prepared("tag_space.json"), &tag_space, false)?;
    let ner = &config.baselines.ner;
    let dictionary = build_value_dictionary(train);
    for corpus in &corpora {
        let tagged: Vec<_> = corpus
            .examples
            .iter()
            .map(|e| match ner.annotation {
                Annotation::Spans => annotate_from_spans(e, &tag_space, &index),
                Annotation::Matching => annotate_by_matching(e, &dictionary, &tag_space, &index, ner.case_insensitive),
            })
            .collect();
        let path = art.tagged(corpus.split);
        let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        write_tagged(&tagged, &tag_space, &mut w)?;
        w.flush()?;
    }

    let label_space = build_label_space(train);
    write_json(&art.prepared("label_space.json"), &label_space, false)?;

    let stats: BTreeMap<Split, CorpusStats> = corpora.iter().map(|c| (c.split, compute_stats(c, &Tokenizer))).collect();
    write_json(&art.prepared("stats.json"), &stats, true)?;
    write_json(&art.prepared("settings.json"), &prepared_settings(config), true)?;

    println!(
        "prepared {} -> index {} pairs, vocab {} tokens, {} tags, {} labels",
        art.prepared_dir().display(),
        index.len(),
        vocab.len(),
        tag_space.len(),
        label_space.len()
    );
    Ok(())
}

fn load_taxonomy(config: &ExperimentConfig, space: &LabelSpace) -> Result<Option<Taxonomy>> {
    if !config.baselines.mlc.use_taxonomy {
        return Ok(None);
    }
    let path = config.taxonomy_path();
    ensure_exists(&path, "gen-data")?;
    let taxonomy = Taxonomy::load(&path)?;
    taxonomy.validate(space)?;
    Ok(Some(taxonomy))
}

fn finish_training(config: &ExperimentConfig, approach: Approach, log: &TrainLog) -> Result<()> {
    let art = config.artifacts();
    log.write_csv(art.train_log(approach.as_str()))?;
    match log.best_epoch {
        Some(best) => println!(
            "{}: best epoch {best} of {} (dev micro F1 {:.4}) -> {}",
            approach.as_str(),
            log.epochs.len(),
            log.epochs[best - 1].dev_micro_f1,
            art.checkpoint(approach.as_str()).display()
        ),
        None => println!("{}: no epochs run -> {}", approach.as_str(), art.checkpoint(approach.as_str()).display()),
    }
    Ok(())
}

pub fn train(config: &ExperimentConfig, approaches: &[Approach]) -> Result<()> {
    check_prepared(config)?;
    let art = config.artifacts();
    create_dir(&art.models_dir())?;
    let train = load_split(config, Split::Train)?;
    let dev = load_split(config, Split::Dev)?;
    for &approach in approaches {
        info!("training {}", approach.as_str());
        let checkpoint = art.checkpoint(approach.as_str());
        let log = match approach {
            Approach::Gen => {
                let lin = &config.linearization;
                let index_path = art.prepared("index.jsonl");
                ensure_exists(&index_path, "prepare")?;
                let index = PairFrequencyIndex::load(&index_path, lin.index_seed()?)?;
                let vocab: Vocab = read_artifact(&art.prepared("vocab.json"), "prepare")?;
                let model = TinySeq2Seq::new(vocab, config.model);
                let (model, log) =
                    seq2seq::train(model, &train, &dev, &lin.spec(), &lin.policy()?, &index, &config.train)?;
                model.save(&checkpoint)?;
                TinySeq2Seq::load(&checkpoint)?;
                log
            }
            Approach::Ner => {
                let space: TagSpace = read_artifact(&art.prepared("tag_space.json"), "prepare")?;
                let path = art.tagged(Split::Train);
                ensure_exists(&path, "prepare")?;
                let file = fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
                let tagged = read_tagged(BufReader::new(file), &space)?;
                let (tagger, log) = train_tagger(&tagged, &dev, &space, &config.baselines.ner.learner)?;
                write_json(&checkpoint, &tagger, false)?;
                read_artifact::<Tagger>(&checkpoint, "train")?;
                log
            }
            Approach::Mlc => {
                let space: LabelSpace = read_artifact(&art.prepared("label_space.json"), "prepare")?;
                let taxonomy = load_taxonomy(config, &space)?;
                let (mlc, log) = train_mlc(&train, &dev, &space, taxonomy.as_ref(), &config.baselines.mlc.learner)?;
                write_json(&checkpoint, &mlc, false)?;
                read_artifact::<Mlc>(&checkpoint, "train")?;
                log
            }
        };
        finish_training(config, approach, &log)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct PredictionSummary {
    approach: &'static str,
    split: Split,
    num_examples: usize,
    num_pairs: usize,
    diagnostics: DecodeDiagnostics,
}

pub fn predict(config: &ExperimentConfig, approaches: &[Approach], split: Split) -> Result<()> {
    let art = config.artifacts();
    create_dir(&art.predictions_dir())?;
    let corpus = load_split(config, split)?;
    for &approach in approaches {
        let checkpoint = art.checkpoint(approach.as_str());
        let producer = format!("train --approach {}", approach.as_str());
        let (predictions, diagnostics): (Predictions, BTreeMap<String, DecodeDiagnostics>) = match approach {
            Approach::Gen => {
                check_prepared(config)?;
                config.decode.validate()?;
                ensure_exists(&checkpoint, &producer)?;
                let model = TinySeq2Seq::load(&checkpoint)?;
                let (preds, diags) = predict_corpus(&model, &corpus, &config.linearization.spec(), &config.decode);
                (preds, diags.into_iter().collect())
            }
            Approach::Ner => {
                let tagger: Tagger = read_artifact(&checkpoint, &producer)?;
                (predict_tagger(&tagger, &corpus), BTreeMap::new())
            }
            Approach::Mlc => {
                let mlc: Mlc = read_artifact(&checkpoint, &producer)?;
                let taxonomy = load_taxonomy(config, &mlc.label_space)?;
                (predict_mlc(&mlc, &corpus, taxonomy.as_ref()), BTreeMap::new())
            }
        };
        let path = art.predictions(approach.as_str(), split);
        write_predictions(&path, &corpus, &predictions, &diagnostics)?;
        let records = read_predictions(&path)?;
        to_predictions(&records, &corpus, &path)?;
        let mut total = DecodeDiagnostics::default();
        for r in &records {
            total.add(&r.diagnostics);
        }
        let summary = PredictionSummary {
            approach: approach.as_str(),
            split,
            num_examples: records.len(),
            num_pairs: records.iter().map(|r| r.pairs.len()).sum(),
            diagnostics: total,
        };
        write_json(&path.with_extension("summary.json"), &summary, true)?;
        println!(
            "{}: {} examples, {} pairs, {} malformed segments -> {}",
            approach.as_str(),
            summary.num_examples,
            summary.num_pairs,
            total.malformed_segments,
            path.display()
        );
    }
    Ok(())
}

fn report_name(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.strip_suffix(".jsonl").map(str::to_string).unwrap_or(name)
}

pub fn evaluate_files(config: &ExperimentConfig, split: Split, files: &[PathBuf]) -> Result<()> {
    let art = config.artifacts();
    let files: Vec<PathBuf> = if files.is_empty() {
        let found: Vec<PathBuf> = select_approaches(config, &[])?
            .iter()
            .map(|a| art.predictions(a.as_str(), split))
            .filter(|p| p.exists())
            .collect();
        if found.is_empty() {
            bail!("no {split} predictions under {}; run `pavi predict` first", art.predictions_dir().display());
        }
        found
    } else {
        files.to_vec()
    };
    let gold = load_split(config, split)?;
    let train_path = config.corpus_path(Split::Train);
    let train = if train_path.exists() {
        Some(load_corpus(&train_path, config.schema, Split::Train)?)
    } else {
        None
    };
    create_dir(&art.reports_dir())?;
    let mut bundles = Vec::new();
    for file in &files {
        let predictions = to_predictions(&read_predictions(file)?, &gold, file)?;
        let bundle = evaluate(&gold, &predictions, train.as_ref(), &config.evaluation);
        let name = report_name(file);
        let json_path = art.reports_dir().join(format!("{name}.json"));
        write_json(&json_path, &bundle, true)?;
        let back: EvalBundle = read_artifact(&json_path, "evaluate")?;
        ensure!(back == bundle, "{} did not read back intact", json_path.display());
        write_text(&art.reports_dir().join(format!("{name}.txt")), &render_bundle(&name, &bundle))?;
        bundles.push((name, bundle));
    }
    let table = render_comparison(&bundles);
    print!("{table}");
    Ok(())
}

/// Collects every JSON report into one comparison table and a CSV.
pub fn report(config: &ExperimentConfig) -> Result<()> {
    let dir = config.artifacts().reports_dir();
    ensure_exists(&dir, "evaluate")?;
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no reports in {}; run `pavi evaluate` first", dir.display());
    }
    let mut bundles = Vec::new();
    for p in &paths {
        let bundle: EvalBundle = read_artifact(p, "evaluate")?;
        let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        bundles.push((name, bundle));
    }
    let table = render_comparison(&bundles);
    write_text(&dir.join("comparison.txt"), &table)?;
    let mut csv = String::from("approach,subset,micro_p,micro_r,micro_f1,macro_p,macro_r,macro_f1,gold_pairs\n");
    for (name, bundle) in &bundles {
        let rows = std::iter::once(("all", &bundle.full)).chain(bundle.subsets.iter().map(|(k, v)| (k.as_str(), v)));
        for (subset, r) in rows {
            csv.push_str(&format!(
                "{name},{subset},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}\n",
                r.micro.precision, r.micro.recall, r.micro.f1, r.macro_.precision, r.macro_.recall, r.macro_.f1, r.num_gold_pairs
            ));
        }
    }
    write_text(&dir.join("comparison.csv"), &csv)?;
    print!("{table}");
    Ok(())
}
