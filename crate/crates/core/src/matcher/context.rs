//! Coding-context extraction: token shingles, referenced API types and
//! identifier-derived terms, for both the developer's sources and a
//! candidate question.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::MatchError;
use crate::ingest::{strip_html, QuestionRecord};
use crate::snippets::lexer::{lex_named, Token, TokenKind};

pub const SHINGLE_SIZE: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub name: String,
    pub text: String,
}

impl SourceFile {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            text: text.into(),
        }
    }
}

/// Multiset of shingles, keyed by the joined token texts.
pub type Shingles = BTreeMap<String, u32>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodingContext {
    pub shingle_size: usize,
    pub token_shingles: Shingles,
    pub api_types: BTreeSet<String>,
    pub terms: BTreeMap<String, u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl CodingContext {
    pub fn shingle_count(&self) -> u32 {
        self.token_shingles.values().sum()
    }
}

fn add_shingles(tokens: &[Token], k: usize, out: &mut Shingles) {
    if k == 0 {
        return;
    }
    for w in tokens.windows(k) {
        let key = w.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join("\u{1f}");
        *out.entry(key).or_insert(0) += 1;
    }
}

fn capitalized(t: &Token) -> bool {
    t.kind == TokenKind::Identifier
        && t.text.starts_with(|c: char| c.is_uppercase())
        && t.text.chars().any(|c| c.is_lowercase())
}

/// Capitalized type names in declarations (`Type name`, `Type<...>`,
/// `Type[] name`), type arguments and instantiations (`new Type`). Qualified chains such as
/// `Outer.Inner name` contribute every capitalized segment.
fn add_api_types(tokens: &[Token], out: &mut BTreeSet<String>) {
    let mut i = 0;
    while i < tokens.len() {
        let t = &tokens[i];
        let after_dot = i > 0 && tokens[i - 1].is_punct(".");
        if !capitalized(t) || after_dot {
            i += 1;
            continue;
        }
        let mut j = i;
        while j + 2 < tokens.len() && tokens[j + 1].is_punct(".") && capitalized(&tokens[j + 2]) {
            j += 2;
        }
        let instantiated = i > 0 && tokens[i - 1].is_keyword("new");
        let type_argument = (i > 0 && tokens[i - 1].is_op("<"))
            || tokens.get(j + 1).is_some_and(|n| n.is_op(">") || n.is_op(">>"));
        let declared = match tokens.get(j + 1) {
            Some(n) if n.kind == TokenKind::Identifier => true,
            Some(n) if n.is_op("<") => true,
            Some(n) if n.is_punct("[") => tokens.get(j + 2).is_some_and(|c| c.is_punct("]")),
            Some(n) if n.is_punct("...") => true,
            _ => false,
        };
        if instantiated || declared || type_argument {
            for k in (i..=j).step_by(2) {
                out.insert(tokens[k].text.clone());
            }
        }
        i = j + 1;
    }
}

/// Splits an identifier or word on `_`, digits and case changes, lowercased.
/// `parseHTTPResponse2` gives `parse`, `http`, `response`.
pub fn split_identifier(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let mut parts = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphabetic() {
            if !cur.is_empty() {
                parts.push(std::mem::take(&mut cur));
            }
            continue;
        }
        let prev = i.checked_sub(1).map(|p| chars[p]);
        let next = chars.get(i + 1).copied();
        let boundary = c.is_uppercase()
            && prev.is_some_and(|p| p.is_lowercase()
                || (p.is_uppercase() && next.is_some_and(|n| n.is_lowercase())));
        if boundary && !cur.is_empty() {
            parts.push(std::mem::take(&mut cur));
        }
        cur.extend(c.to_lowercase());
    }
    if !cur.is_empty() {
        parts.push(cur);
    }
    parts.retain(|p| p.chars().count() >= 2);
    parts
}

fn add_terms_from_tokens(tokens: &[Token], out: &mut BTreeMap<String, u32>) {
    for t in tokens.iter().filter(|t| t.kind == TokenKind::Identifier) {
        for p in split_identifier(&t.text) {
            *out.entry(p).or_insert(0) += 1;
        }
    }
}

fn add_terms_from_text(text: &str, out: &mut BTreeMap<String, u32>) {
    for word in text.split(|c: char| !c.is_alphanumeric() && c != '_') {
        for p in split_identifier(word) {
            *out.entry(p).or_insert(0) += 1;
        }
    }
}

/// Context of the developer's active sources. Files whose lexing halts are
/// skipped with a warning.
pub fn extract_context(files: &[SourceFile]) -> Result<CodingContext, MatchError> {
    if files.iter().all(|f| f.text.trim().is_empty()) {
        return Err(MatchError::EmptyContext);
    }
    let mut ctx = CodingContext {
        shingle_size: SHINGLE_SIZE,
        ..Default::default()
    };
    let mut used = 0;
    for f in files {
        let s = lex_named(&f.name, &f.text);
        if s.halted() {
            let d = s.diagnostics.iter().find(|d| d.fatal).expect("halted has a fatal diagnostic");
            ctx.warnings.push(format!("{}: skipped ({d})", f.name));
            continue;
        }
        used += 1;
        add_shingles(&s.tokens, SHINGLE_SIZE, &mut ctx.token_shingles);
        add_api_types(&s.tokens, &mut ctx.api_types);
        add_terms_from_tokens(&s.tokens, &mut ctx.terms);
    }
    if used == 0 {
        return Err(MatchError::EmptyContext);
    }
    Ok(ctx)
}

/// The same three views of a question: shingles and types from its code
/// blocks, terms from title, prose and code identifiers.
pub fn question_context(q: &QuestionRecord) -> CodingContext {
    let mut ctx = CodingContext {
        shingle_size: SHINGLE_SIZE,
        ..Default::default()
    };
    for (i, block) in q.code_blocks.iter().enumerate() {
        let s = lex_named(&format!("block-{i}"), block);
        add_shingles(&s.tokens, SHINGLE_SIZE, &mut ctx.token_shingles);
        add_api_types(&s.tokens, &mut ctx.api_types);
        add_terms_from_tokens(&s.tokens, &mut ctx.terms);
    }
    add_terms_from_text(&q.title, &mut ctx.terms);
    add_terms_from_text(&strip_html(&q.body), &mut ctx.terms);
    ctx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(src: &str) -> CodingContext {
        extract_context(&[SourceFile::new("A.java", src)]).unwrap()
    }

    #[test]
    fn shingle_window_count() {
        assert_eq!(ctx("int a = b + 1;").shingle_count(), 3);
        assert_eq!(ctx("a;").shingle_count(), 0);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(extract_context(&[]), Err(MatchError::EmptyContext)));
        assert!(matches!(
            extract_context(&[SourceFile::new("x", "  \n")]),
            Err(MatchError::EmptyContext)
        ));
    }

    #[test]
    fn unlexable_file_skipped() {
        let c = extract_context(&[
            SourceFile::new("bad.java", "String s = \"open"),
            SourceFile::new("ok.java", "int a = b + 1;"),
        ])
        .unwrap();
        assert_eq!(c.warnings.len(), 1);
        assert!(c.warnings[0].starts_with("bad.java"));
        assert_eq!(c.shingle_count(), 3);
    }

    #[test]
    fn api_types_from_verifier_fixture() {
        let c = ctx(include_str!("../../tests/fixtures/token_verifier.java"));
        for t in ["GoogleIdTokenVerifier", "HttpTransport", "NetHttpTransport", "JsonFactory", "GoogleIdToken", "Payload", "Builder", "String"] {
            assert!(c.api_types.contains(t), "{t} in {:?}", c.api_types);
        }
        // static call receivers and constants are not declarations
        assert!(!c.api_types.contains("Arrays"));
        assert!(!c.api_types.contains("ID_TOKEN"));
    }

    #[test]
    fn generic_and_array_types() {
        let c = ctx("List<Foo> xs = new ArrayList<>(); Bar[] bs; void f(Baz... zs) {}");
        let got: Vec<&str> = c.api_types.iter().map(String::as_str).collect();
        assert_eq!(got, vec!["ArrayList", "Bar", "Baz", "Foo", "List"]);
    }

    #[test]
    fn identifier_splitting() {
        assert_eq!(split_identifier("parseHTTPResponse2"), vec!["parse", "http", "response"]);
        assert_eq!(split_identifier("MAX_RETRY_count"), vec!["max", "retry", "count"]);
        assert_eq!(split_identifier("x"), Vec::<String>::new());
    }

    #[test]
    fn terms_non_empty_for_non_empty_source() {
        let c = ctx("tokenVerifier.verify(idToken);");
        assert_eq!(c.terms.get("token"), Some(&2));
        assert_eq!(c.terms.get("verifier"), Some(&1));
        assert_eq!(c.terms.get("id"), Some(&1));
    }
}
