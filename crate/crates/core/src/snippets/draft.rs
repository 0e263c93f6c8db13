//! Draft answers: the best clone match in the developer's corpus, widened to
//! the statements it depends on and the statements depending on it.

use std::collections::BTreeSet;
use std::path::Path;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::clones::{detect_clones, CloneMatch, DEFAULT_MIN_LINES};
use super::graph::build_graph_from_tokens;
use super::lexer::{lex_named, Token, TokenKind, TokenStream};
use super::SnippetError;
use crate::ingest::QuestionRecord;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFile {
    /// Relative path with `/` separators.
    pub path: String,
    pub text: String,
}

/// Source files plus their token streams, in path order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub files: Vec<CorpusFile>,
    pub streams: Vec<TokenStream>,
    pub warnings: Vec<String>,
}

impl Corpus {
    pub fn from_sources<P: Into<String>, T: Into<String>>(sources: impl IntoIterator<Item = (P, T)>) -> Self {
        let mut files: Vec<CorpusFile> = sources
            .into_iter()
            .map(|(p, t)| CorpusFile {
                path: p.into(),
                text: t.into(),
            })
            .collect();
        files.sort_by(|a, b| a.path.cmp(&b.path));
        let streams = files.par_iter().map(|f| lex_named(&f.path, &f.text)).collect();
        Corpus {
            files,
            streams,
            warnings: Vec::new(),
        }
    }

    /// Reads every file under `dir` whose extension is in `extensions`.
    /// Unreadable or non-UTF-8 files are skipped with a warning.
    pub fn load(dir: &Path, extensions: &[&str]) -> Result<Self, SnippetError> {
        if !dir.is_dir() {
            return Err(SnippetError::Io {
                path: dir.display().to_string(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
            });
        }
        let mut paths = Vec::new();
        let mut warnings = Vec::new();
        for entry in WalkDir::new(dir).sort_by_file_name() {
            match entry {
                Ok(e) if e.file_type().is_file() => {
                    let ext = e.path().extension().and_then(|x| x.to_str()).unwrap_or("");
                    if extensions.iter().any(|x| x.eq_ignore_ascii_case(ext)) {
                        paths.push(e.into_path());
                    }
                }
                Ok(_) => {}
                Err(e) => warnings.push(format!("walk: {e}")),
            }
        }
        let read: Vec<Result<(String, String), String>> = paths
            .par_iter()
            .map(|p| {
                let rel = p
                    .strip_prefix(dir)
                    .unwrap_or(p)
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy())
                    .collect::<Vec<_>>()
                    .join("/");
                std::fs::read_to_string(p)
                    .map(|t| (rel.clone(), t))
                    .map_err(|e| format!("{rel}: {e}"))
            })
            .collect();
        let mut ok = Vec::new();
        for r in read {
            match r {
                Ok(f) => ok.push(f),
                Err(w) => warnings.push(w),
            }
        }
        let mut corpus = Corpus::from_sources(ok);
        for s in &corpus.streams {
            if let Some(d) = s.diagnostics.first() {
                warnings.push(format!("{}: {d}", s.source_id));
            }
        }
        corpus.warnings = warnings;
        Ok(corpus)
    }

    fn index_of(&self, path: &str) -> Option<usize> {
        self.files.binary_search_by(|f| f.path.as_str().cmp(path)).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DraftStatus {
    Draft,
    Approved,
    Submitted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DraftProvenance {
    pub best_match: CloneMatch,
    /// Other matches, best first.
    pub alternatives: Vec<CloneMatch>,
    pub corpus_file: String,
    /// Lines of the method body the slice was taken from.
    pub body_lines: [u32; 2],
    pub seed_statements: Vec<usize>,
    pub slice_statements: Vec<usize>,
    pub rendered_lines: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DraftAnswer {
    pub question_id: u64,
    pub snippet: String,
    pub provenance: DraftProvenance,
    pub status: DraftStatus,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoRecommendation {
    /// The question has no code to match against.
    NoCode,
    NoMatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DraftOutcome {
    Draft(DraftAnswer),
    NoRecommendation { reason: NoRecommendation },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DraftOptions {
    pub min_lines: usize,
    pub normalize: bool,
}

impl Default for DraftOptions {
    fn default() -> Self {
        Self {
            min_lines: DEFAULT_MIN_LINES,
            normalize: false,
        }
    }
}

/// The question's code blocks joined into one stream, one block after the
/// other.
pub fn question_needle(q: &QuestionRecord) -> TokenStream {
    lex_named(&format!("question-{}", q.question_id), &q.code_blocks.join("\n"))
}

fn is_method_body(tokens: &[Token], open: usize) -> bool {
    let mut i = open;
    // skip `throws A, b.C`
    let mut k = i;
    while k > 0 {
        let t = &tokens[k - 1];
        if t.kind == TokenKind::Identifier || t.is_punct(".") || t.is_punct(",") {
            k -= 1;
        } else {
            break;
        }
    }
    if k > 0 && k < i && tokens[k - 1].is_keyword("throws") {
        i = k - 1;
    }
    if i == 0 || !tokens[i - 1].is_punct(")") {
        return false;
    }
    let mut depth = 0;
    let mut j = i - 1;
    loop {
        let t = &tokens[j];
        if t.is_punct(")") {
            depth += 1;
        } else if t.is_punct("(") {
            depth -= 1;
            if depth == 0 {
                break;
            }
        }
        if j == 0 {
            return false;
        }
        j -= 1;
    }
    j > 0
        && tokens[j - 1].kind == TokenKind::Identifier
        && !(j > 1 && tokens[j - 2].is_keyword("new"))
}

/// Token range strictly inside the innermost method body containing `line`.
fn enclosing_body(tokens: &[Token], line: u32) -> Option<(usize, usize)> {
    let mut best = None;
    for (i, t) in tokens.iter().enumerate() {
        if !t.is_punct("{") || t.line > line || !is_method_body(tokens, i) {
            continue;
        }
        let mut depth = 0;
        for (j, u) in tokens.iter().enumerate().skip(i) {
            if u.is_punct("{") {
                depth += 1;
            } else if u.is_punct("}") {
                depth -= 1;
                if depth == 0 {
                    if u.line >= line {
                        best = Some((i + 1, j));
                    }
                    break;
                }
            }
        }
    }
    best
}

fn dedent(lines: &[&str]) -> String {
    let margin = lines
        .iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.len() - l.trim_start_matches([' ', '\t']).len())
        .min()
        .unwrap_or(0);
    lines
        .iter()
        .map(|l| l.get(margin..).unwrap_or("").trim_end())
        .collect::<Vec<_>>()
        .join("\n")
}

fn order_matches(matches: &[CloneMatch]) -> Vec<CloneMatch> {
    let mut m = matches.to_vec();
    m.sort_by(|x, y| {
        y.length_lines
            .cmp(&x.length_lines)
            .then_with(|| x.corpus_file.cmp(&y.corpus_file))
            .then_with(|| x.corpus_range.cmp(&y.corpus_range))
            .then_with(|| x.question_range.cmp(&y.question_range))
    });
    m
}

/// Builds a draft from the longest match (ties: lowest corpus path, then
/// earliest lines). The snippet is every source line of the sliced
/// statements, in order, with the common left margin removed.
pub fn compose_draft(
    q: &QuestionRecord,
    matches: &[CloneMatch],
    corpus: &Corpus,
    now: DateTime<Utc>,
) -> Result<DraftOutcome, SnippetError> {
    if q.code_blocks.iter().all(|b| b.trim().is_empty()) {
        return Ok(DraftOutcome::NoRecommendation {
            reason: NoRecommendation::NoCode,
        });
    }
    let ordered = order_matches(matches);
    let Some(best) = ordered.first().cloned() else {
        return Ok(DraftOutcome::NoRecommendation {
            reason: NoRecommendation::NoMatch,
        });
    };
    let idx = corpus
        .index_of(&best.corpus_file)
        .ok_or_else(|| SnippetError::MissingCorpusFile(best.corpus_file.clone()))?;
    let file = &corpus.files[idx];
    let tokens = &corpus.streams[idx].tokens;
    let (start, end) = enclosing_body(tokens, best.corpus_range[0]).unwrap_or((0, tokens.len()));
    let body = &tokens[start..end];
    let graph = build_graph_from_tokens(body);
    let [lo, hi] = best.corpus_range;
    let seeds: BTreeSet<usize> = graph
        .statements
        .iter()
        .filter(|s| s.line_range[0] <= hi && s.line_range[1] >= lo)
        .map(|s| s.id)
        .collect();
    if seeds.is_empty() {
        return Ok(DraftOutcome::NoRecommendation {
            reason: NoRecommendation::NoMatch,
        });
    }
    let mut slice = graph.backward_slice(&seeds)?;
    slice.extend(graph.forward_slice(&seeds)?);
    let rendered: BTreeSet<u32> = slice
        .iter()
        .filter_map(|&id| graph.statement(id))
        .flat_map(|s| s.line_range[0]..=s.line_range[1])
        .collect();
    let source_lines: Vec<&str> = file.text.lines().collect();
    let picked: Vec<&str> = rendered
        .iter()
        .filter_map(|&l| source_lines.get(l as usize - 1).copied())
        .collect();
    let body_lines = match (body.first(), body.last()) {
        (Some(a), Some(b)) => [a.line, b.line],
        _ => [lo, hi],
    };
    Ok(DraftOutcome::Draft(DraftAnswer {
        question_id: q.question_id,
        snippet: dedent(&picked),
        provenance: DraftProvenance {
            best_match: best.clone(),
            alternatives: ordered[1..].to_vec(),
            corpus_file: file.path.clone(),
            body_lines,
            seed_statements: seeds.into_iter().collect(),
            slice_statements: slice.into_iter().collect(),
            rendered_lines: rendered.into_iter().collect(),
        },
        status: DraftStatus::Draft,
        created_at: now,
    }))
}

/// Clone detection against the corpus followed by `compose_draft`.
pub fn draft_for_question(
    q: &QuestionRecord,
    corpus: &Corpus,
    options: DraftOptions,
    now: DateTime<Utc>,
) -> Result<DraftOutcome, SnippetError> {
    if options.min_lines < 2 {
        return Err(SnippetError::InvalidConfig("min_lines must be at least 2".into()));
    }
    let matches = detect_clones(&question_needle(q), &corpus.streams, options.min_lines, options.normalize);
    compose_draft(q, &matches, corpus, now)
}
