//! Seeded synthetic product corpora with planted phenomena.
//!
//! Every pair slot of a split is assigned exactly one kind before any text is
//! written, so the requested fractions hold up to rounding:
//!
//! * **canonicalized**: the text shows a fixed alias instead of the value;
//! * **multi-attribute**: one surface string annotated with two attributes
//!   of a shared-value group (both pairs carry the same span);
//! * **unseen** (dev/test only): a value phrase never used in training;
//! * **plain**: the value appears verbatim with its span.
//!
//! Values are built from fixed-length pseudo-words drawn from disjoint pools,
//! which keeps accidental substring matches out of the text. Dev and test
//! sample non-unseen values only from values that occur in the generated
//! training split, and canonicalized test values only from values whose alias
//! was shown in training, so the alias mapping is always learnable.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{save_corpus, value_in_text, AttributeValuePair, Corpus, ProductExample, Schema, Span, Split};
use crate::error::{Error, Result};

const ATTRIBUTE_NAMES: &[&str] = &[
    "Color",
    "Material",
    "Brand",
    "Pattern",
    "Style",
    "Fit",
    "Closure",
    "Sleeve length",
    "Neckline",
    "Season",
    "Finish",
    "Shape",
    "Country of origin",
    "Country of design",
    "Heel type",
    "Toe style",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub num_attributes: usize,
    /// Values per attribute available to the training split.
    pub values_per_attribute: usize,
    /// Held-out value phrases per attribute, used only for unseen slots.
    pub unseen_values_per_attribute: usize,
    pub num_categories: usize,
    /// Attribute pairs sharing a value pool; the last `2 * groups` attributes.
    pub multi_attribute_groups: usize,
    pub shared_values_per_group: usize,
    /// Power-law exponent over attribute and value ranks.
    pub zipf_exponent: f64,
    pub canonicalized_fraction: f64,
    pub multi_attribute_fraction: f64,
    pub unseen_fraction: f64,
    /// Probability that an example also carries one negative attribute.
    pub negative_rate: f64,
    pub min_pairs: usize,
    pub max_pairs: usize,
    pub filler_vocab: usize,
    pub title_filler: usize,
    pub description_filler: usize,
    pub train_examples: usize,
    pub dev_examples: usize,
    pub test_examples: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_attributes: 10,
            values_per_attribute: 12,
            unseen_values_per_attribute: 4,
            num_categories: 4,
            multi_attribute_groups: 2,
            shared_values_per_group: 6,
            zipf_exponent: 1.0,
            canonicalized_fraction: 0.2,
            multi_attribute_fraction: 0.1,
            unseen_fraction: 0.1,
            negative_rate: 0.1,
            min_pairs: 1,
            max_pairs: 4,
            filler_vocab: 300,
            title_filler: 5,
            description_filler: 10,
            train_examples: 2000,
            dev_examples: 200,
            test_examples: 200,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for (name, f) in [
            ("canonicalized_fraction", self.canonicalized_fraction),
            ("multi_attribute_fraction", self.multi_attribute_fraction),
            ("unseen_fraction", self.unseen_fraction),
            ("negative_rate", self.negative_rate),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return bad(format!("{name} = {f} is outside [0, 1]"));
            }
        }
        let planted = self.canonicalized_fraction + self.multi_attribute_fraction + self.unseen_fraction;
        if planted > 1.0 + 1e-12 {
            return bad(format!("planted fractions sum to {planted} > 1"));
        }
        if self.num_attributes == 0 || self.num_attributes > ATTRIBUTE_NAMES.len() * 8 {
            return bad(format!("num_attributes = {} is out of range", self.num_attributes));
        }
        if 2 * self.multi_attribute_groups > self.num_attributes {
            return bad("multi_attribute_groups needs two attributes per group".into());
        }
        if self.multi_attribute_fraction > 0.0 && (self.multi_attribute_groups == 0 || self.shared_values_per_group == 0) {
            return bad("multi_attribute_fraction > 0 needs at least one group with shared values".into());
        }
        if self.unseen_fraction > 0.0 && self.unseen_values_per_attribute == 0 {
            return bad("unseen_fraction > 0 needs unseen_values_per_attribute > 0".into());
        }
        if self.values_per_attribute == 0 || self.num_categories == 0 {
            return bad("values_per_attribute and num_categories must be positive".into());
        }
        if self.min_pairs == 0 || self.min_pairs > self.max_pairs {
            return bad(format!("pair range {}..={} is empty or starts at 0", self.min_pairs, self.max_pairs));
        }
        if self.zipf_exponent < 0.0 || !self.zipf_exponent.is_finite() {
            return bad(format!("zipf_exponent = {} must be finite and non-negative", self.zipf_exponent));
        }
        Ok(())
    }
}

/// Pairs planted with a specific phenomenon, as `[id, attribute, value]`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plants {
    pub canonicalized: Vec<[String; 3]>,
    pub multi_attribute: Vec<[String; 3]>,
    pub unseen: Vec<[String; 3]>,
    pub total_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategorySpec {
    pub name: String,
    pub attributes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthManifest {
    pub seed: u64,
    pub config: SynthConfig,
    /// Canonical value → surface alias written in the text.
    pub aliases: BTreeMap<String, String>,
    pub categories: Vec<CategorySpec>,
    /// Example id → category name, all splits.
    pub example_categories: BTreeMap<String, String>,
    pub plants: BTreeMap<Split, Plants>,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub train: Corpus,
    pub dev: Corpus,
    pub test: Corpus,
    pub manifest: SynthManifest,
}

impl SynthOutput {
    pub fn split(&self, split: Split) -> &Corpus {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }

    /// Writes `{train,dev,test}.jsonl` (mave_like) and `manifest.json`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for split in Split::ALL {
            save_corpus(self.split(split), dir.join(format!("{split}.jsonl")), Schema::MaveLike)?;
        }
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
    }
}

struct WordFactory {
    used: HashSet<String>,
}

impl WordFactory {
    const CONSONANTS: &'static [u8] = b"bcdfghjklmnprstvwxz";
    const VOWELS: &'static [u8] = b"aeiou";

    fn word(&mut self, rng: &mut ChaCha8Rng) -> String {
        loop {
            let w: String = (0..5)
                .map(|i| {
                    let set = if i % 2 == 0 { Self::CONSONANTS } else { Self::VOWELS };
                    set[rng.gen_range(0..set.len())] as char
                })
                .collect();
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }

    fn words(&mut self, n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
        (0..n).map(|_| self.word(rng)).collect()
    }
}

struct AttributeVocab {
    name: String,
    seen: Vec<String>,
    held_out: Vec<String>,
}

struct World {
    attributes: Vec<AttributeVocab>,
    /// Per group: the two attribute indices and the shared value pool.
    groups: Vec<(usize, usize, Vec<String>)>,
    categories: Vec<Vec<usize>>,
    aliases: BTreeMap<String, String>,
    fillers: Vec<String>,
}

fn attribute_name(i: usize) -> String {
    let base = ATTRIBUTE_NAMES[i % ATTRIBUTE_NAMES.len()];
    match i / ATTRIBUTE_NAMES.len() {
        0 => base.to_string(),
        k => format!("{base} {}", k + 1),
    }
}

fn build_world(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> World {
    let mut words = WordFactory { used: HashSet::new() };
    let fillers = words.words(cfg.filler_vocab.max(1), rng);
    let mut attributes = Vec::with_capacity(cfg.num_attributes);
    for i in 0..cfg.num_attributes {
        let singles = words.words(cfg.values_per_attribute.div_ceil(2), rng);
        let phrases_seen = cfg.values_per_attribute - singles.len();
        let needed = phrases_seen + cfg.unseen_values_per_attribute;
        let mut pool_size = 2;
        while pool_size * (pool_size - 1) < needed {
            pool_size += 1;
        }
        let pool = words.words(pool_size, rng);
        let mut phrases: Vec<String> = pool
            .iter()
            .flat_map(|a| pool.iter().filter(move |b| *b != a).map(move |b| format!("{a} {b}")))
            .collect();
        phrases.shuffle(rng);
        let mut seen = singles;
        seen.extend(phrases.drain(..phrases_seen));
        seen.shuffle(rng);
        phrases.truncate(cfg.unseen_values_per_attribute);
        attributes.push(AttributeVocab {
            name: attribute_name(i),
            seen,
            held_out: phrases,
        });
    }
    let regular = cfg.num_attributes - 2 * cfg.multi_attribute_groups;
    let groups = (0..cfg.multi_attribute_groups)
        .map(|g| (regular + 2 * g, regular + 2 * g + 1, words.words(cfg.shared_values_per_group, rng)))
        .collect();
    let categories = (0..cfg.num_categories)
        .map(|c| {
            (0..cfg.num_attributes)
                .filter(|&i| i >= regular || cfg.num_categories == 1 || i % cfg.num_categories != c)
                .collect()
        })
        .collect();
    let mut aliases = BTreeMap::new();
    for attr in &attributes {
        for v in &attr.seen {
            aliases.insert(v.clone(), words.word(rng));
        }
    }
    World {
        attributes,
        groups,
        categories,
        aliases,
        fillers,
    }
}

fn zipf_pick<T: Clone>(items: &[T], exponent: f64, rng: &mut ChaCha8Rng) -> Option<T> {
    if items.is_empty() {
        return None;
    }
    let weights: Vec<f64> = (0..items.len()).map(|r| (r as f64 + 1.0).powf(-exponent)).collect();
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (item, w) in items.iter().zip(&weights) {
        if x < *w {
            return Some(item.clone());
        }
        x -= w;
    }
    items.last().cloned()
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Kind {
    Plain,
    Canonicalized,
    Unseen,
}

/// Values a dev/test split may draw, learned from the generated train split.
#[derive(Default)]
struct TrainMemory {
    /// attribute index → values present in train (world order)
    values: HashMap<usize, Vec<String>>,
    /// attribute index → values shown through their alias in train
    aliased: HashMap<usize, Vec<String>>,
    /// group index → shared values present in train
    shared: HashMap<usize, Vec<String>>,
}

struct SlotPair {
    attribute: usize,
    value: String,
    surface: Option<String>,
    kind: Kind,
    multi: bool,
}

struct SplitPlan<'a> {
    split: Split,
    count: usize,
    memory: Option<&'a TrainMemory>,
}

fn round_quota(fraction: f64, total: usize) -> usize {
    (fraction * total as f64).round() as usize
}

struct Generated {
    corpus: Corpus,
    plants: Plants,
    categories: Vec<(String, usize)>,
    memory: TrainMemory,
}

fn generate_split(cfg: &SynthConfig, world: &World, plan: SplitPlan<'_>, rng: &mut ChaCha8Rng) -> Result<Generated> {
    let n = plan.count;
    let cats: Vec<usize> = (0..n).map(|_| rng.gen_range(0..world.categories.len())).collect();
    let sizes: Vec<usize> = (0..n).map(|_| rng.gen_range(cfg.min_pairs..=cfg.max_pairs)).collect();
    let total: usize = sizes.iter().sum();

    let multi_quota = round_quota(cfg.multi_attribute_fraction, total);
    let canon_quota = round_quota(cfg.canonicalized_fraction, total);
    let unseen_quota = if plan.split == Split::Train {
        0
    } else {
        round_quota(cfg.unseen_fraction, total)
    };

    // One multi-attribute plant (two pairs) per eligible example.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut multi_plant = vec![false; n];
    let mut plants_left = multi_quota / 2;
    for &i in &order {
        if plants_left == 0 {
            break;
        }
        if sizes[i] >= 2 && !world.groups.is_empty() {
            multi_plant[i] = true;
            plants_left -= 1;
        }
    }
    if plants_left > 0 {
        return Err(Error::Config(format!(
            "{} split: not enough multi-pair examples for {} multi-attribute pairs",
            plan.split, multi_quota
        )));
    }

    let mut free_slots: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        let reserved = if multi_plant[i] { 2 } else { 0 };
        free_slots.extend((reserved..sizes[i]).map(|s| (i, s)));
    }
    if canon_quota + unseen_quota > free_slots.len() {
        return Err(Error::Config(format!(
            "{} split: {} canonicalized + {} unseen pairs exceed {} free slots",
            plan.split,
            canon_quota,
            unseen_quota,
            free_slots.len()
        )));
    }
    free_slots.shuffle(rng);
    let mut kinds: Vec<Vec<Kind>> = sizes.iter().map(|&k| vec![Kind::Plain; k]).collect();
    for (j, &(i, s)) in free_slots.iter().enumerate() {
        if j < canon_quota {
            kinds[i][s] = Kind::Canonicalized;
        } else if j < canon_quota + unseen_quota {
            kinds[i][s] = Kind::Unseen;
        }
    }

    let mut examples = Vec::with_capacity(n);
    let mut plants = Plants {
        total_pairs: total,
        ..Plants::default()
    };
    let mut categories = Vec::with_capacity(n);
    let mut memory = TrainMemory::default();
    for i in 0..n {
        let id = format!("{}-{:05}", plan.split, i);
        let slots = fill_example(cfg, world, &plan, cats[i], multi_plant[i], &kinds[i], rng)
            .ok_or_else(|| Error::Config(format!("example {id}: too few attributes or values to fill its slots")))?;
        let example = render_example(cfg, world, &id, &slots, cats[i], rng)?;
        for slot in &slots {
            let attr = world.attributes[slot.attribute].name.clone();
            let rec = [id.clone(), attr, slot.value.clone()];
            if slot.multi {
                plants.multi_attribute.push(rec);
            } else {
                match slot.kind {
                    Kind::Canonicalized => plants.canonicalized.push(rec),
                    Kind::Unseen => plants.unseen.push(rec),
                    Kind::Plain => {}
                }
            }
            if plan.split == Split::Train {
                remember(&mut memory, world, slot);
            }
        }
        categories.push((id, cats[i]));
        examples.push(example);
    }
    Ok(Generated {
        corpus: Corpus::new(plan.split, examples),
        plants,
        categories,
        memory,
    })
}

fn push_unique(list: &mut Vec<String>, value: &str) {
    if !list.iter().any(|v| v == value) {
        list.push(value.to_string());
    }
}

fn remember(memory: &mut TrainMemory, world: &World, slot: &SlotPair) {
    if slot.multi {
        if let Some(g) = world.groups.iter().position(|(a, b, _)| *a == slot.attribute || *b == slot.attribute) {
            push_unique(memory.shared.entry(g).or_default(), &slot.value);
        }
        return;
    }
    push_unique(memory.values.entry(slot.attribute).or_default(), &slot.value);
    if slot.kind == Kind::Canonicalized {
        push_unique(memory.aliased.entry(slot.attribute).or_default(), &slot.value);
    }
}

/// Keeps `pool` in world order, restricted to what train showed.
fn restrict(pool: &[String], allowed: Option<&Vec<String>>) -> Vec<String> {
    match allowed {
        None => pool.to_vec(),
        Some(allowed) => pool.iter().filter(|v| allowed.contains(v)).cloned().collect(),
    }
}

fn candidate_values(world: &World, plan: &SplitPlan<'_>, attribute: usize, kind: Kind) -> Vec<String> {
    let attr = &world.attributes[attribute];
    match (kind, plan.memory) {
        (Kind::Unseen, _) => attr.held_out.clone(),
        (_, None) => attr.seen.clone(),
        (Kind::Plain, Some(mem)) => restrict(&attr.seen, Some(mem.values.get(&attribute).unwrap_or(&Vec::new()))),
        (Kind::Canonicalized, Some(mem)) => {
            let aliased = restrict(&attr.seen, Some(mem.aliased.get(&attribute).unwrap_or(&Vec::new())));
            if aliased.is_empty() {
                restrict(&attr.seen, Some(mem.values.get(&attribute).unwrap_or(&Vec::new())))
            } else {
                aliased
            }
        }
    }
}

fn fill_example(
    cfg: &SynthConfig,
    world: &World,
    plan: &SplitPlan<'_>,
    category: usize,
    multi: bool,
    kinds: &[Kind],
    rng: &mut ChaCha8Rng,
) -> Option<Vec<SlotPair>> {
    let mut used_attrs: HashSet<usize> = HashSet::new();
    let mut used_values: HashSet<String> = HashSet::new();
    let mut slots = Vec::with_capacity(kinds.len());
    let mut start = 0;
    if multi {
        let g = rng.gen_range(0..world.groups.len());
        let (a, b, pool) = &world.groups[g];
        let pool = match plan.memory {
            Some(mem) => restrict(pool, Some(mem.shared.get(&g).unwrap_or(&Vec::new()))),
            None => pool.clone(),
        };
        let value = zipf_pick(&pool, cfg.zipf_exponent, rng)?;
        for &attr in [a, b] {
            used_attrs.insert(attr);
            slots.push(SlotPair {
                attribute: attr,
                value: value.clone(),
                surface: Some(value.clone()),
                kind: Kind::Plain,
                multi: true,
            });
        }
        used_values.insert(value);
        start = 2;
    }
    for &kind in &kinds[start..] {
        let options: Vec<usize> = world.categories[category]
            .iter()
            .copied()
            .filter(|a| !used_attrs.contains(a))
            .filter(|&a| {
                candidate_values(world, plan, a, kind)
                    .iter()
                    .any(|v| !used_values.contains(v))
            })
            .collect();
        let attribute = zipf_pick(&options, cfg.zipf_exponent, rng)?;
        let values: Vec<String> = candidate_values(world, plan, attribute, kind)
            .into_iter()
            .filter(|v| !used_values.contains(v))
            .collect();
        let value = if kind == Kind::Unseen {
            values.choose(rng).cloned()?
        } else {
            zipf_pick(&values, cfg.zipf_exponent, rng)?
        };
        let surface = match kind {
            Kind::Canonicalized => Some(world.aliases[&value].clone()),
            _ => Some(value.clone()),
        };
        used_attrs.insert(attribute);
        used_values.insert(value.clone());
        slots.push(SlotPair {
            attribute,
            value,
            surface,
            kind,
            multi: false,
        });
    }
    Some(slots)
}

enum Item {
    Word(String),
    /// Index of the first slot sharing this surface.
    Surface(usize),
}

fn render_example(
    cfg: &SynthConfig,
    world: &World,
    id: &str,
    slots: &[SlotPair],
    category: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ProductExample> {
    let mut paragraphs: [Vec<Item>; 2] = [
        (0..cfg.title_filler).map(|_| Item::Word(world.fillers.choose(rng).unwrap().clone())).collect(),
        (0..cfg.description_filler)
            .map(|_| Item::Word(world.fillers.choose(rng).unwrap().clone()))
            .collect(),
    ];
    let mut placed: HashMap<&str, usize> = HashMap::new();
    for (s, slot) in slots.iter().enumerate() {
        let surface = slot.surface.as_deref().unwrap_or_default();
        if placed.contains_key(surface) {
            continue;
        }
        placed.insert(surface, s);
        let p = usize::from(rng.gen_bool(0.4));
        let at = rng.gen_range(0..=paragraphs[p].len());
        paragraphs[p].insert(at, Item::Surface(s));
    }

    let mut texts = Vec::with_capacity(2);
    let mut spans: HashMap<usize, Span> = HashMap::new();
    for (p, items) in paragraphs.iter().enumerate() {
        let mut text = String::new();
        let mut chars = 0;
        for item in items {
            if !text.is_empty() {
                text.push(' ');
                chars += 1;
            }
            let piece = match item {
                Item::Word(w) => w.as_str(),
                Item::Surface(s) => slots[*s].surface.as_deref().unwrap_or_default(),
            };
            let len = piece.chars().count();
            if let Item::Surface(s) = item {
                spans.insert(*s, Span::new(p, chars, chars + len));
            }
            text.push_str(piece);
            chars += len;
        }
        if p == 1 && !text.is_empty() {
            text.push('.');
        }
        texts.push(text);
    }

    let mut pairs: Vec<AttributeValuePair> = slots
        .iter()
        .map(|slot| {
            let name = world.attributes[slot.attribute].name.clone();
            let owner = placed[slot.surface.as_deref().unwrap_or_default()];
            let spans = match slot.kind {
                Kind::Canonicalized => Vec::new(),
                _ => vec![spans[&owner]],
            };
            AttributeValuePair::new(name, slot.value.clone()).with_spans(spans)
        })
        .collect();

    if rng.gen_bool(cfg.negative_rate) {
        let used: HashSet<usize> = slots.iter().map(|s| s.attribute).collect();
        let free: Vec<usize> = world.categories[category]
            .iter()
            .copied()
            .filter(|a| !used.contains(a))
            .collect();
        if let Some(&a) = free.choose(rng) {
            pairs.push(AttributeValuePair::negative(world.attributes[a].name.clone()));
        }
    }

    let example = ProductExample::new(id, texts, pairs);
    example.validate(true)?;
    for (pair, slot) in example.pairs.iter().zip(slots) {
        let grounded = value_in_text(&pair.value, &example.paragraphs);
        if grounded != (slot.kind != Kind::Canonicalized) {
            return Err(Error::InvalidExample {
                id: id.to_string(),
                message: format!("generated {pair} has value_in_text = {grounded}, contrary to its plant"),
            });
        }
    }
    Ok(example)
}

/// Generates train/dev/test deterministically from `seed`.
pub fn generate_synthetic_corpus(config: &SynthConfig, seed: u64) -> Result<SynthOutput> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let world = build_world(config, &mut rng);

    let train = generate_split(
        config,
        &world,
        SplitPlan {
            split: Split::Train,
            count: config.train_examples,
            memory: None,
        },
        &mut rng,
    )?;
    let mut generated = vec![];
    for (split, count) in [(Split::Dev, config.dev_examples), (Split::Test, config.test_examples)] {
        let plan = SplitPlan {
            split,
            count,
            memory: Some(&train.memory),
        };
        generated.push(generate_split(config, &world, plan, &mut rng)?);
    }
    let test = generated.pop().unwrap();
    let dev = generated.pop().unwrap();

    let category_names: Vec<String> = (0..world.categories.len()).map(|c| format!("category-{c}")).collect();
    let mut example_categories = BTreeMap::new();
    let mut plants = BTreeMap::new();
    for g in [&train, &dev, &test] {
        for (id, c) in &g.categories {
            example_categories.insert(id.clone(), category_names[*c].clone());
        }
        plants.insert(g.corpus.split, g.plants.clone());
    }
    let categories = world
        .categories
        .iter()
        .zip(&category_names)
        .map(|(attrs, name)| CategorySpec {
            name: name.clone(),
            attributes: attrs.iter().map(|&a| world.attributes[a].name.clone()).collect(),
        })
        .collect();

    // Only aliases that actually appear in some split are worth persisting.
    let shown: BTreeSet<&str> = plants
        .values()
        .flat_map(|p: &Plants| p.canonicalized.iter().map(|r| r[2].as_str()))
        .collect();
    let aliases = world
        .aliases
        .iter()
        .filter(|(v, _)| shown.contains(v.as_str()))
        .map(|(v, a)| (v.clone(), a.clone()))
        .collect();

    Ok(SynthOutput {
        train: train.corpus,
        dev: dev.corpus,
        test: test.corpus,
        manifest: SynthManifest {
            seed,
            config: config.clone(),
            aliases,
            categories,
            example_categories,
            plants,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            train_examples: 300,
            dev_examples: 60,
            test_examples: 80,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn rejects_inconsistent_fractions() {
        let cfg = SynthConfig {
            canonicalized_fraction: 0.7,
            unseen_fraction: 0.5,
            ..small()
        };
        assert!(matches!(generate_synthetic_corpus(&cfg, 1), Err(Error::Config(_))));
        let cfg = SynthConfig {
            canonicalized_fraction: 1.5,
            ..small()
        };
        assert!(generate_synthetic_corpus(&cfg, 1).is_err());
    }

    #[test]
    fn zero_canonicalized_means_all_values_in_text() {
        let cfg = SynthConfig {
            canonicalized_fraction: 0.0,
            ..small()
        };
        let out = generate_synthetic_corpus(&cfg, 3).unwrap();
        for corpus in [&out.train, &out.dev, &out.test] {
            for ex in &corpus.examples {
                assert!(ex.positives().all(|p| value_in_text(&p.value, &ex.paragraphs)));
            }
        }
    }

    #[test]
    fn plants_hit_requested_fractions() {
        let cfg = small();
        let out = generate_synthetic_corpus(&cfg, 11).unwrap();
        for split in Split::ALL {
            let plants = &out.manifest.plants[&split];
            let total = plants.total_pairs as f64;
            let near = |got: usize, f: f64| (got as f64 - (f * total).round()).abs() <= 1.0;
            assert!(near(plants.canonicalized.len(), cfg.canonicalized_fraction), "{split}");
            assert!(near(plants.multi_attribute.len(), cfg.multi_attribute_fraction), "{split}");
            let unseen_f = if split == Split::Train { 0.0 } else { cfg.unseen_fraction };
            assert!(near(plants.unseen.len(), unseen_f), "{split}");
            let positives: usize = out.split(split).examples.iter().map(|e| e.positives().count()).sum();
            assert_eq!(positives, plants.total_pairs);
        }
    }

    #[test]
    fn same_seed_same_output() {
        let a = generate_synthetic_corpus(&small(), 5).unwrap();
        let b = generate_synthetic_corpus(&small(), 5).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        assert_eq!(a.manifest, b.manifest);
        let c = generate_synthetic_corpus(&small(), 6).unwrap();
        assert_ne!(a.train, c.train);
    }
}
