//! Line-aligned clone detection.
//!
//! Each source is reduced to its token-bearing lines, every line becoming the
//! sequence of its token texts. A clone is a maximal run of consecutive
//! equal lines shared by the needle and a corpus file. With normalization on,
//! identifiers and literals are replaced by placeholder classes first, which
//! also finds renamed (type-2) clones.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::lexer::{TokenKind, TokenStream};

pub const DEFAULT_MIN_LINES: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CloneMatch {
    /// Inclusive source line range in the needle.
    pub question_range: [u32; 2],
    pub corpus_file: String,
    pub corpus_range: [u32; 2],
    /// Number of token-bearing lines in the run.
    pub length_lines: usize,
    pub normalized: bool,
}

/// Token-bearing lines as `(line number, interned key)`.
fn line_keys(s: &TokenStream, normalize: bool, intern: &mut HashMap<String, u32>) -> Vec<(u32, u32)> {
    let mut out: Vec<(u32, String)> = Vec::new();
    for t in &s.tokens {
        let text = match (normalize, t.kind) {
            (true, TokenKind::Identifier) => "$id",
            (true, TokenKind::Literal) => "$lit",
            _ => t.text.as_str(),
        };
        match out.last_mut() {
            Some((line, key)) if *line == t.line => {
                key.push('\u{1f}');
                key.push_str(text);
            }
            _ => out.push((t.line, text.to_string())),
        }
    }
    out.into_iter()
        .map(|(line, key)| {
            let next = intern.len() as u32;
            (line, *intern.entry(key).or_insert(next))
        })
        .collect()
}

/// All maximal common line runs of at least `min_lines` between `needle`
/// and each corpus stream, longest first (then corpus file, then corpus and
/// needle start line).
pub fn detect_clones(
    needle: &TokenStream,
    corpus: &[TokenStream],
    min_lines: usize,
    normalize: bool,
) -> Vec<CloneMatch> {
    let min_lines = min_lines.max(2);
    let mut intern = HashMap::new();
    let a = line_keys(needle, normalize, &mut intern);
    let mut out = Vec::new();
    for file in corpus {
        let b = line_keys(file, normalize, &mut intern);
        // run[j] = length of the common run ending at (i, j)
        let mut prev = vec![0usize; b.len() + 1];
        let mut cur = vec![0usize; b.len() + 1];
        for i in 0..a.len() {
            for j in 0..b.len() {
                cur[j + 1] = if a[i].1 == b[j].1 { prev[j] + 1 } else { 0 };
            }
            for j in 0..b.len() {
                let len = cur[j + 1];
                let extends = i + 1 < a.len() && j + 1 < b.len() && a[i + 1].1 == b[j + 1].1;
                if len >= min_lines && !extends {
                    out.push(CloneMatch {
                        question_range: [a[i + 1 - len].0, a[i].0],
                        corpus_file: file.source_id.clone(),
                        corpus_range: [b[j + 1 - len].0, b[j].0],
                        length_lines: len,
                        normalized: normalize,
                    });
                }
            }
            std::mem::swap(&mut prev, &mut cur);
        }
    }
    out.sort_by(|x, y| {
        y.length_lines
            .cmp(&x.length_lines)
            .then_with(|| x.corpus_file.cmp(&y.corpus_file))
            .then_with(|| x.corpus_range.cmp(&y.corpus_range))
            .then_with(|| x.question_range.cmp(&y.question_range))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snippets::lexer::lex_named;

    fn block(prefix: &str, n: usize) -> String {
        // each line has a distinct shape so only the aligned run matches
        (0..n)
            .map(|i| {
                let terms: String = (0..=i).map(|k| format!(" + {prefix}{k}")).collect();
                format!("int {prefix}{i} = 1{terms};\n")
            })
            .collect()
    }

    #[test]
    fn exact_ten_line_clone() {
        let body = block("v", 10);
        let needle = lex_named("q", &body);
        let file = format!("class A {{\nvoid f() {{\n{body}}}\n}}\n");
        let m = detect_clones(&needle, &[lex_named("A.java", &file)], 6, false);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].length_lines, 10);
        assert_eq!(m[0].question_range, [1, 10]);
        assert_eq!(m[0].corpus_range, [3, 12]);
    }

    #[test]
    fn disjoint_sources() {
        let m = detect_clones(&lex_named("q", &block("a", 8)), &[lex_named("f", "x();\n".repeat(8).as_str())], 6, true);
        assert!(m.is_empty());
    }

    #[test]
    fn renamed_clone_needs_normalization() {
        let needle = lex_named("q", &block("a", 8));
        let corpus = [lex_named("f", &block("zz", 8))];
        assert!(detect_clones(&needle, &corpus, 6, false).is_empty());
        let m = detect_clones(&needle, &corpus, 6, true);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].length_lines, 8);
    }

    #[test]
    fn short_runs_ignored() {
        let needle = lex_named("q", &block("a", 5));
        let m = detect_clones(&needle, &[lex_named("f", &block("a", 5))], 6, false);
        assert!(m.is_empty());
    }

    #[test]
    fn swap_symmetry() {
        let x = format!("{}foo();\n{}", block("a", 7), block("b", 6));
        let y = format!("bar();\n{}baz();\n{}", block("a", 7), block("b", 6));
        let xy = detect_clones(&lex_named("x", &x), &[lex_named("y", &y)], 6, false);
        let yx = detect_clones(&lex_named("y", &y), &[lex_named("x", &x)], 6, false);
        let mut a: Vec<_> = xy.iter().map(|m| (m.question_range, m.corpus_range)).collect();
        let mut b: Vec<_> = yx.iter().map(|m| (m.corpus_range, m.question_range)).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
    }
}
