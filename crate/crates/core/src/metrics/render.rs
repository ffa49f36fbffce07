//! Aligned-column text rendering of evaluation reports.

use std::fmt::Write;

use super::{EvalBundle, EvalReport};

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.chars().count());
        }
    }
    let line = |cells: Vec<String>| -> String {
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i == 0 {
                    format!("{c:<w$}", w = widths[i])
                } else {
                    format!("{c:>w$}", w = widths[i])
                }
            })
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = String::new();
    let _ = writeln!(out, "{}", line(header.iter().map(|s| s.to_string()).collect()));
    let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    for row in rows {
        let _ = writeln!(out, "{}", line(row.clone()));
    }
    out
}

fn score_row(name: &str, r: &EvalReport) -> Vec<String> {
    vec![
        name.to_string(),
        pct(r.micro.precision),
        pct(r.micro.recall),
        pct(r.micro.f1),
        pct(r.macro_.precision),
        pct(r.macro_.recall),
        pct(r.macro_.f1),
        r.num_gold_pairs.to_string(),
    ]
}

const SCORE_HEADER: [&str; 8] = ["", "micro P", "micro R", "micro F1", "macro P", "macro R", "macro F1", "gold"];

/// Human-readable report for one approach.
pub fn render_bundle(name: &str, bundle: &EvalBundle) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "== {name} ==");
    let mut rows = vec![score_row("all", &bundle.full)];
    for (subset, report) in &bundle.subsets {
        rows.push(score_row(subset, report));
    }
    out.push_str(&table(&SCORE_HEADER, &rows));
    let t = bundle.full.totals;
    let _ = writeln!(
        out,
        "counts: TP={} FP_p={} FP_n={} FN={} NN={} discarded={}",
        t.tp, t.fp_p, t.fp_n, t.fn_, t.nn, bundle.full.discarded_predictions
    );
    if let Some((split, cells)) = &bundle.quadrants {
        let _ = writeln!(
            out,
            "\nmicro / macro F1 by attribute group (median training examples {}, median distinct values {})",
            split.median_examples, split.median_values
        );
        let rows: Vec<Vec<String>> = ["hi", "lo", "all"]
            .iter()
            .map(|f| {
                let mut row = vec![format!("examples {f}")];
                for v in ["hi", "lo", "all"] {
                    let cell = cells.iter().find(|c| c.frequency == *f && c.distinct_values == v).unwrap();
                    row.push(format!("{} / {} ({})", pct(cell.report.micro.f1), pct(cell.report.macro_.f1), cell.num_attributes));
                }
                row
            })
            .collect();
        out.push_str(&table(&["", "values hi", "values lo", "values all"], &rows));
    }
    out
}

/// Side-by-side comparison of several approaches, one block per subset.
pub fn render_comparison(bundles: &[(String, EvalBundle)]) -> String {
    let mut out = String::new();
    let mut sections: Vec<String> = vec!["all".into()];
    for (_, b) in bundles {
        for k in b.subsets.keys() {
            if !sections.contains(k) {
                sections.push(k.clone());
            }
        }
    }
    for section in sections {
        let rows: Vec<Vec<String>> = bundles
            .iter()
            .filter_map(|(name, b)| {
                let report = if section == "all" { Some(&b.full) } else { b.subsets.get(&section) };
                report.map(|r| score_row(name, r))
            })
            .collect();
        let _ = writeln!(out, "== {section} ==");
        out.push_str(&table(&SCORE_HEADER, &rows));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AttributeValuePair, Corpus, ProductExample, Split};
    use crate::metrics::{evaluate, gold_predictions, SubsetFlags};

    #[test]
    fn layout_has_micro_and_macro_columns() {
        let corpus = Corpus::new(
            Split::Test,
            vec![ProductExample::new("a", vec!["red".into()], vec![AttributeValuePair::new("Color", "red")])],
        );
        let bundle = evaluate(&corpus, &gold_predictions(&corpus), Some(&corpus), &SubsetFlags::default());
        let text = render_bundle("gold", &bundle);
        assert!(text.contains("micro F1") && text.contains("macro F1"));
        assert!(text.contains("100.00"));
        let cmp = render_comparison(&[("gold".into(), bundle)]);
        assert!(cmp.contains("== canonicalized =="));
    }
}
