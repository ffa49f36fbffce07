use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{value_in_text, Corpus};
use crate::tokenize::Tokenizer;

/// Dataset statistics over unified pairs. Negative annotations count as
/// pairs (with value `None`) in the distinct and total counts, but never
/// as values appearing in the text.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusStats {
    pub num_examples: usize,
    /// Examples without any positive pair.
    pub num_examples_without_values: usize,
    pub num_distinct_attributes: usize,
    pub num_distinct_values: usize,
    pub num_distinct_pairs: usize,
    pub num_pairs: usize,
    pub num_pairs_value_in_text: usize,
    pub avg_attributes_per_example: f64,
    pub avg_values_per_example: f64,
    pub avg_input_tokens: f64,
    pub avg_attribute_tokens: f64,
    pub avg_value_tokens: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn compute_stats(corpus: &Corpus, tokenizer: &Tokenizer) -> CorpusStats {
    let mut attributes = HashSet::new();
    let mut values = HashSet::new();
    let mut pairs = HashSet::new();
    let mut stats = CorpusStats {
        num_examples: corpus.len(),
        ..CorpusStats::default()
    };
    let mut attribute_mentions = 0;
    let (mut input_tokens, mut attribute_tokens, mut value_tokens) = (0, 0, 0);

    for example in &corpus.examples {
        let unified = example.unified();
        if unified.positives().next().is_none() {
            stats.num_examples_without_values += 1;
        }
        let example_attributes: HashSet<&str> = unified.pairs.iter().map(|p| p.attribute.as_str()).collect();
        attribute_mentions += example_attributes.len();
        input_tokens += example.paragraphs.iter().map(|p| tokenizer.count(p)).sum::<usize>();
        for pair in &unified.pairs {
            stats.num_pairs += 1;
            attributes.insert(pair.attribute.clone());
            values.insert(pair.value.clone());
            pairs.insert((pair.attribute.clone(), pair.value.clone()));
            attribute_tokens += tokenizer.count(&pair.attribute);
            value_tokens += tokenizer.count(&pair.value);
            if !pair.is_negative && value_in_text(&pair.value, &example.paragraphs) {
                stats.num_pairs_value_in_text += 1;
            }
        }
    }

    stats.num_distinct_attributes = attributes.len();
    stats.num_distinct_values = values.len();
    stats.num_distinct_pairs = pairs.len();
    stats.avg_attributes_per_example = ratio(attribute_mentions, stats.num_examples);
    stats.avg_values_per_example = ratio(stats.num_pairs, stats.num_examples);
    stats.avg_input_tokens = ratio(input_tokens, stats.num_examples);
    stats.avg_attribute_tokens = ratio(attribute_tokens, stats.num_pairs);
    stats.avg_value_tokens = ratio(value_tokens, stats.num_pairs);
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::{jersey, sneakers};
    use crate::corpus::{AttributeValuePair, ProductExample, Split};

    #[test]
    fn table_fixture_counts() {
        let corpus = Corpus::new(Split::Test, vec![jersey(), sneakers()]);
        let stats = compute_stats(&corpus, &Tokenizer);
        assert_eq!(stats.num_examples, 2);
        assert_eq!(stats.num_distinct_attributes, 5);
        assert_eq!(stats.num_distinct_pairs, 9);
        assert_eq!(stats.num_examples_without_values, 0);
        // Jersey, jersey, None, 25.0, 26.0, 27.0, Red
        assert_eq!(stats.num_distinct_values, 7);
        assert_eq!(stats.num_pairs, 9);
        // the four jersey pairs and ⟨Color, Red⟩; sizes are canonicalized
        assert_eq!(stats.num_pairs_value_in_text, 5);
        assert!((stats.avg_attributes_per_example - 2.5).abs() < 1e-12);
    }

    #[test]
    fn empty_corpus_is_all_zero() {
        let stats = compute_stats(&Corpus::empty(Split::Train), &Tokenizer);
        assert_eq!(stats, CorpusStats::default());
    }

    #[test]
    fn verbatim_values_are_all_in_text() {
        let examples = (0..5)
            .map(|i| {
                let pairs = vec![
                    AttributeValuePair::new("Color", format!("tone{i}")),
                    AttributeValuePair::new("Brand", "Acme Co"),
                ];
                let title = format!("Acme Co shirt in tone{i}");
                ProductExample::new(format!("e{i}"), vec![title], pairs)
            })
            .collect();
        let stats = compute_stats(&Corpus::new(Split::Train, examples), &Tokenizer);
        assert_eq!(stats.num_pairs, 10);
        assert_eq!(stats.num_pairs_value_in_text, stats.num_pairs);
    }
}
