//! BILOU tag space, span annotation and chunk decoding.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use log::debug;
use serde::{Deserialize, Serialize};

use crate::corpus::{AttributeValuePair, Corpus, PairSet, ProductExample, Span};
use crate::error::{Error, Result};
use crate::ordering::PairFrequencyIndex;
use crate::tokenize::{detokenize, Piece, Tokenizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bilou {
    B,
    I,
    L,
    U,
}

impl Bilou {
    const ALL: [Bilou; 4] = [Bilou::B, Bilou::I, Bilou::L, Bilou::U];

    fn letter(self) -> char {
        match self {
            Bilou::B => 'B',
            Bilou::I => 'I',
            Bilou::L => 'L',
            Bilou::U => 'U',
        }
    }
}

/// Tag 0 is `O`; attribute `i` owns tags `1 + 4i ..= 4 + 4i` as B, I, L, U.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagSpace {
    pub attributes: Vec<String>,
}

pub const OUTSIDE: usize = 0;

impl TagSpace {
    pub fn new<I, S>(attributes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = attributes.into_iter().map(Into::into).collect();
        TagSpace {
            attributes: set.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.attributes.len() * 4 + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn attribute_index(&self, attribute: &str) -> Option<usize> {
        self.attributes.binary_search_by(|a| a.as_str().cmp(attribute)).ok()
    }

    pub fn tag(&self, attribute: usize, kind: Bilou) -> usize {
        1 + 4 * attribute + Bilou::ALL.iter().position(|&k| k == kind).unwrap()
    }

    /// `None` for `O`.
    pub fn split(&self, tag: usize) -> Option<(usize, Bilou)> {
        if tag == OUTSIDE || tag >= self.len() {
            None
        } else {
            Some(((tag - 1) / 4, Bilou::ALL[(tag - 1) % 4]))
        }
    }

    pub fn name(&self, tag: usize) -> String {
        match self.split(tag) {
            None => "O".to_string(),
            Some((a, k)) => format!("{}-{}", k.letter(), self.attributes[a]),
        }
    }

    pub fn parse(&self, name: &str) -> Option<usize> {
        if name == "O" {
            return Some(OUTSIDE);
        }
        let (kind, attribute) = name.split_once('-')?;
        let kind = Bilou::ALL.into_iter().find(|k| k.letter().to_string() == kind)?;
        Some(self.tag(self.attribute_index(attribute)?, kind))
    }
}

/// Tag space over the distinct positive training attributes.
pub fn build_tag_space(train: &Corpus) -> TagSpace {
    TagSpace::new(train.examples.iter().flat_map(|e| e.positives().map(|p| p.attribute.clone())))
}

/// Tokens of all paragraphs with one tag each; `paragraphs[i]` is the
/// paragraph of token `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedExample {
    pub id: String,
    pub tokens: Vec<String>,
    pub paragraphs: Vec<usize>,
    pub tags: Vec<usize>,
}

struct TokenizedText {
    tokens: Vec<String>,
    paragraphs: Vec<usize>,
    /// Per paragraph: (first global token index, pieces)
    pieces: Vec<(usize, Vec<Piece>)>,
}

fn tokenize_example(example: &ProductExample) -> TokenizedText {
    let mut out = TokenizedText {
        tokens: Vec::new(),
        paragraphs: Vec::new(),
        pieces: Vec::new(),
    };
    for (p, paragraph) in example.paragraphs.iter().enumerate() {
        let pieces = Tokenizer.pieces(paragraph);
        out.pieces.push((out.tokens.len(), pieces.clone()));
        for piece in pieces {
            out.tokens.push(piece.marked());
            out.paragraphs.push(p);
        }
    }
    out
}

impl TaggedExample {
    /// The example's tokens, all tagged `O`.
    pub fn outside(example: &ProductExample) -> Self {
        let t = tokenize_example(example);
        let n = t.tokens.len();
        TaggedExample {
            id: example.id.clone(),
            tokens: t.tokens,
            paragraphs: t.paragraphs,
            tags: vec![OUTSIDE; n],
        }
    }

    /// I and L only continue a B or I of the same attribute, and every B or
    /// I is continued, within one paragraph.
    pub fn is_consistent(&self, space: &TagSpace) -> bool {
        let mut open: Option<usize> = None;
        for (i, &tag) in self.tags.iter().enumerate() {
            if i > 0 && self.paragraphs[i] != self.paragraphs[i - 1] && open.is_some() {
                return false;
            }
            match (space.split(tag), open) {
                (None, None) => {}
                (Some((a, Bilou::B)), None) => open = Some(a),
                (Some((_, Bilou::U)), None) => {}
                (Some((a, Bilou::I)), Some(o)) if a == o => {}
                (Some((a, Bilou::L)), Some(o)) if a == o => open = None,
                _ => return false,
            }
        }
        open.is_none()
    }
}

/// A candidate chunk over global token indices `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Candidate {
    start: usize,
    end: usize,
    attribute: String,
    count: usize,
}

/// Resolves candidates: identical token ranges keep the attribute of the
/// most frequent training pair (ties to the smaller attribute), then longer
/// chunks win overlaps (ties to the earlier start).
fn resolve(candidates: Vec<Candidate>, space: &TagSpace, n: usize) -> Vec<usize> {
    let mut by_range: BTreeMap<(usize, usize), Candidate> = BTreeMap::new();
    for c in candidates {
        if space.attribute_index(&c.attribute).is_none() {
            continue;
        }
        match by_range.get(&(c.start, c.end)) {
            Some(best) if (best.count, std::cmp::Reverse(&best.attribute)) >= (c.count, std::cmp::Reverse(&c.attribute)) => {}
            _ => {
                by_range.insert((c.start, c.end), c);
            }
        }
    }
    let mut chunks: Vec<Candidate> = by_range.into_values().collect();
    chunks.sort_by_key(|c| (std::cmp::Reverse(c.end - c.start), c.start));
    let mut taken = vec![false; n];
    let mut tags = vec![OUTSIDE; n];
    for c in chunks {
        if taken[c.start..c.end].iter().any(|&t| t) {
            continue;
        }
        let a = space.attribute_index(&c.attribute).unwrap();
        for i in c.start..c.end {
            taken[i] = true;
            tags[i] = if c.end - c.start == 1 {
                space.tag(a, Bilou::U)
            } else if i == c.start {
                space.tag(a, Bilou::B)
            } else if i + 1 == c.end {
                space.tag(a, Bilou::L)
            } else {
                space.tag(a, Bilou::I)
            };
        }
    }
    tags
}

/// Minimal token range covering a character span, or `None` if the span
/// covers no token.
fn span_to_tokens(text: &TokenizedText, span: &Span) -> Option<(usize, usize, bool)> {
    let (offset, pieces) = text.pieces.get(span.paragraph_index)?;
    let covered: Vec<usize> = pieces
        .iter()
        .enumerate()
        .filter(|(_, p)| p.start < span.end && span.begin < p.end)
        .map(|(i, _)| i)
        .collect();
    let (&first, &last) = (covered.first()?, covered.last()?);
    let aligned = pieces[first].start == span.begin && pieces[last].end == span.end;
    Some((offset + first, offset + last + 1, aligned))
}

/// Projects annotated spans onto tokens and applies the overlap rules.
pub fn annotate_from_spans(example: &ProductExample, space: &TagSpace, index: &PairFrequencyIndex) -> TaggedExample {
    let text = tokenize_example(example);
    let mut candidates = Vec::new();
    for pair in example.positives() {
        for span in &pair.spans {
            match span_to_tokens(&text, span) {
                Some((start, end, aligned)) => {
                    if !aligned {
                        debug!("{}: span {:?} of {} widened to token boundaries", example.id, span, pair);
                    }
                    candidates.push(Candidate {
                        start,
                        end,
                        attribute: pair.attribute.clone(),
                        count: index.count(&pair.attribute, &pair.value),
                    });
                }
                None => debug!("{}: span {:?} of {} covers no token", example.id, span, pair),
            }
        }
    }
    let n = text.tokens.len();
    TaggedExample {
        id: example.id.clone(),
        tokens: text.tokens,
        paragraphs: text.paragraphs,
        tags: resolve(candidates, space, n),
    }
}

/// Value string → attributes it is annotated with in training.
pub type ValueDictionary = BTreeMap<String, BTreeSet<String>>;

pub fn build_value_dictionary(train: &Corpus) -> ValueDictionary {
    let mut dict = ValueDictionary::new();
    for pair in train.examples.iter().flat_map(|e| e.positives()) {
        dict.entry(pair.value.clone()).or_default().insert(pair.attribute.clone());
    }
    dict
}

fn same_piece(a: &Piece, b: &Piece, case_insensitive: bool) -> bool {
    if case_insensitive {
        a.text.to_lowercase() == b.text.to_lowercase()
    } else {
        a.text == b.text
    }
}

/// Tags every occurrence of a dictionary value that starts and ends on token
/// boundaries, then applies the overlap rules.
pub fn annotate_by_matching(
    example: &ProductExample,
    dictionary: &ValueDictionary,
    space: &TagSpace,
    index: &PairFrequencyIndex,
    case_insensitive: bool,
) -> TaggedExample {
    let text = tokenize_example(example);
    let mut candidates = Vec::new();
    for (value, attributes) in dictionary {
        let needle = Tokenizer.pieces(value);
        if needle.is_empty() {
            continue;
        }
        for (offset, pieces) in &text.pieces {
            if pieces.len() < needle.len() {
                continue;
            }
            for start in 0..=pieces.len() - needle.len() {
                let window = &pieces[start..start + needle.len()];
                let hit = window.iter().zip(&needle).enumerate().all(|(k, (p, q))| {
                    same_piece(p, q, case_insensitive) && (k == 0 || p.glued == q.glued)
                });
                if hit {
                    for attribute in attributes {
                        candidates.push(Candidate {
                            start: offset + start,
                            end: offset + start + needle.len(),
                            attribute: attribute.clone(),
                            count: index.count(attribute, value),
                        });
                    }
                }
            }
        }
    }
    let n = text.tokens.len();
    TaggedExample {
        id: example.id.clone(),
        tokens: text.tokens,
        paragraphs: text.paragraphs,
        tags: resolve(candidates, space, n),
    }
}

/// Reads maximal well-formed `B I* L` and `U` chunks as pairs; anything
/// else, including chunks crossing a paragraph boundary, is dropped.
pub fn decode_bilou(tagged: &TaggedExample, space: &TagSpace) -> PairSet {
    let mut out = PairSet::new();
    let mut open: Option<(usize, usize)> = None;
    for (i, &tag) in tagged.tags.iter().enumerate() {
        if i > 0 && tagged.paragraphs.get(i) != tagged.paragraphs.get(i - 1) {
            open = None;
        }
        let emit = |out: &mut PairSet, a: usize, s: usize| {
            out.insert(AttributeValuePair::new(space.attributes[a].clone(), detokenize(&tagged.tokens[s..=i])));
        };
        match space.split(tag) {
            None => open = None,
            Some((a, Bilou::U)) => {
                open = None;
                emit(&mut out, a, i);
            }
            Some((a, Bilou::B)) => open = Some((a, i)),
            Some((a, Bilou::I)) => {
                if open.map(|o| o.0) != Some(a) {
                    open = None;
                }
            }
            Some((a, Bilou::L)) => {
                if let Some((o, s)) = open {
                    if o == a {
                        emit(&mut out, a, s);
                    }
                }
                open = None;
            }
        }
    }
    out
}

/// Writes tagged examples as `token<TAB>tag` lines. Each example starts with
/// a `# id <id>` line, paragraphs after the first with `# paragraph`, and
/// examples are separated by blank lines.
pub fn write_tagged<W: Write>(examples: &[TaggedExample], space: &TagSpace, mut w: W) -> std::io::Result<()> {
    for (k, ex) in examples.iter().enumerate() {
        if k > 0 {
            writeln!(w)?;
        }
        writeln!(w, "# id {}", ex.id)?;
        for i in 0..ex.tokens.len() {
            if i > 0 && ex.paragraphs[i] != ex.paragraphs[i - 1] {
                for _ in ex.paragraphs[i - 1]..ex.paragraphs[i] {
                    writeln!(w, "# paragraph")?;
                }
            }
            writeln!(w, "{}\t{}", ex.tokens[i], space.name(ex.tags[i]))?;
        }
    }
    Ok(())
}

pub fn read_tagged<R: BufRead>(reader: R, space: &TagSpace) -> Result<Vec<TaggedExample>> {
    let mut out: Vec<TaggedExample> = Vec::new();
    let mut paragraph = 0;
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<tagged>", e))?;
        let bad = |m: &str| Error::Schema(format!("tagged line {}: {m}", n + 1));
        if line.is_empty() {
            continue;
        }
        if let Some(id) = line.strip_prefix("# id ") {
            out.push(TaggedExample {
                id: id.to_string(),
                tokens: vec![],
                paragraphs: vec![],
                tags: vec![],
            });
            paragraph = 0;
        } else if line == "# paragraph" {
            paragraph += 1;
        } else {
            let ex = out.last_mut().ok_or_else(|| bad("token before any id line"))?;
            let (token, tag) = line.split_once('\t').ok_or_else(|| bad("expected token<TAB>tag"))?;
            ex.tokens.push(token.to_string());
            ex.paragraphs.push(paragraph);
            ex.tags.push(space.parse(tag).ok_or_else(|| bad(&format!("unknown tag {tag:?}")))?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::jersey;
    use crate::corpus::Split;
    use crate::ordering::build_frequency_index;

    #[test]
    fn tag_space_sizes() {
        let train = Corpus::new(
            Split::Train,
            vec![ProductExample::new(
                "a",
                vec![],
                vec![AttributeValuePair::new("Color", "Red"), AttributeValuePair::new("Size", "L"), AttributeValuePair::negative("Fit")],
            )],
        );
        let space = build_tag_space(&train);
        assert_eq!(space.len(), 9);
        assert_eq!(build_tag_space(&Corpus::empty(Split::Train)).len(), 1);
        let mave = TagSpace::new((0..693).map(|i| format!("attr{i:03}")));
        assert_eq!(mave.len(), 2773);
        for t in 0..space.len() {
            assert_eq!(space.parse(&space.name(t)), Some(t));
        }
    }

    fn train_with_counts(type_count: usize, clothing_count: usize) -> Corpus {
        let mut examples = Vec::new();
        for i in 0..type_count {
            examples.push(ProductExample::new(format!("t{i}"), vec![], vec![AttributeValuePair::new("Type", "Jersey")]));
        }
        for i in 0..clothing_count {
            examples.push(ProductExample::new(format!("c{i}"), vec![], vec![AttributeValuePair::new("Clothing Type", "Jersey")]));
        }
        Corpus::new(Split::Train, examples)
    }

    #[test]
    fn jersey_takes_most_frequent_pair() {
        let ex = jersey();
        for (t, c, expected) in [(3, 1, "U-Type"), (1, 3, "U-Clothing Type"), (2, 2, "U-Clothing Type")] {
            let train = train_with_counts(t, c);
            let space = build_tag_space(&train);
            let index = build_frequency_index(&train, 0);
            let tagged = annotate_from_spans(&ex, &space, &index);
            let pos = tagged.tokens.iter().position(|t| t == "Jersey").unwrap();
            assert_eq!(pos, 5);
            assert_eq!(space.name(tagged.tags[pos]), expected);
            assert!(tagged.is_consistent(&space));
            let names: Vec<String> = tagged.tags.iter().map(|&t| space.name(t)).filter(|n| n != "O").collect();
            assert_eq!(names.len(), 3);
        }
    }

    #[test]
    fn longest_match_wins() {
        let ex = ProductExample::new(
            "g",
            vec!["case for Galaxy S8 plus phone".into()],
            vec![
                AttributeValuePair::new("Compatible model", "Galaxy S8").with_spans(vec![Span::new(0, 9, 18)]),
                AttributeValuePair::new("Compatible brand", "Galaxy S8 plus").with_spans(vec![Span::new(0, 9, 23)]),
            ],
        );
        let train = Corpus::new(Split::Train, vec![ex.clone()]);
        let space = build_tag_space(&train);
        let tagged = annotate_from_spans(&ex, &space, &build_frequency_index(&train, 0));
        let pairs = decode_bilou(&tagged, &space);
        assert_eq!(pairs, [AttributeValuePair::new("Compatible brand", "Galaxy S8 plus")].into_iter().collect());
    }

    #[test]
    fn no_spans_all_outside() {
        let ex = ProductExample::new("n", vec!["plain text here".into()], vec![AttributeValuePair::new("Color", "Red")]);
        let space = TagSpace::new(["Color"]);
        let tagged = annotate_from_spans(&ex, &space, &PairFrequencyIndex::default());
        assert!(tagged.tags.iter().all(|&t| t == OUTSIDE));
    }

    #[test]
    fn dictionary_matching_tags_every_occurrence() {
        let ex = ProductExample::new("d", vec!["Red shirt Red".into()], vec![]);
        let dict: ValueDictionary = [("Red".to_string(), ["Color".to_string()].into())].into();
        let space = TagSpace::new(["Color"]);
        let index = PairFrequencyIndex::default();
        let tagged = annotate_by_matching(&ex, &dict, &space, &index, false);
        let names: Vec<String> = tagged.tags.iter().map(|&t| space.name(t)).collect();
        assert_eq!(names, ["U-Color", "O", "U-Color"]);
        let none = annotate_by_matching(&ex, &ValueDictionary::new(), &space, &index, false);
        assert!(none.tags.iter().all(|&t| t == OUTSIDE));
        let lower = ProductExample::new("d", vec!["red shirt Reddish".into()], vec![]);
        let exact = annotate_by_matching(&lower, &dict, &space, &index, false);
        assert!(exact.tags.iter().all(|&t| t == OUTSIDE));
        let folded = annotate_by_matching(&lower, &dict, &space, &index, true);
        assert_eq!(space.name(folded.tags[0]), "U-Color");
        assert_eq!(folded.tags[2], OUTSIDE);
    }

    #[test]
    fn decode_simple_and_ill_formed() {
        let space = TagSpace::new(["Color"]);
        let b = space.tag(0, Bilou::B);
        let l = space.tag(0, Bilou::L);
        let i = space.tag(0, Bilou::I);
        let mk = |tokens: &[&str], tags: Vec<usize>, paragraphs: Vec<usize>| TaggedExample {
            id: "x".into(),
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            paragraphs,
            tags,
        };
        let ok = mk(&["dark", "red"], vec![b, l], vec![0, 0]);
        assert_eq!(decode_bilou(&ok, &space), [AttributeValuePair::new("Color", "dark red")].into_iter().collect());
        assert!(decode_bilou(&mk(&["a", "b"], vec![OUTSIDE, OUTSIDE], vec![0, 0]), &space).is_empty());
        assert!(decode_bilou(&mk(&["a", "b"], vec![i, l], vec![0, 0]), &space).is_empty());
        assert!(decode_bilou(&mk(&["a", "b"], vec![b, l], vec![0, 1]), &space).is_empty());
        let glued = mk(&["25", "##cm"], vec![b, l], vec![0, 0]);
        assert_eq!(decode_bilou(&glued, &space), [AttributeValuePair::new("Color", "25cm")].into_iter().collect());
    }

    #[test]
    fn two_column_round_trip() {
        let ex = jersey();
        let train = Corpus::new(Split::Train, vec![ex.clone()]);
        let space = build_tag_space(&train);
        let tagged = vec![annotate_from_spans(&ex, &space, &build_frequency_index(&train, 0)), TaggedExample::outside(&ex)];
        let mut buf = Vec::new();
        write_tagged(&tagged, &space, &mut buf).unwrap();
        assert_eq!(read_tagged(&buf[..], &space).unwrap(), tagged);
    }
}
