//! Lexer for Java-like source text.
//!
//! Comments and whitespace are dropped. An unterminated string, character
//! literal or block comment stops the scan: the tokens read so far are kept
//! and a diagnostic is recorded. Stray characters are skipped with a
//! diagnostic.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Identifier,
    Keyword,
    Literal,
    Operator,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// 1-based.
    pub line: u32,
    /// 1-based, in characters.
    pub column: u32,
}

impl Token {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }

    pub fn is_punct(&self, text: &str) -> bool {
        self.is(TokenKind::Punct, text)
    }

    pub fn is_keyword(&self, text: &str) -> bool {
        self.is(TokenKind::Keyword, text)
    }

    pub fn is_op(&self, text: &str) -> bool {
        self.is(TokenKind::Operator, text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexDiagnostic {
    pub line: u32,
    pub column: u32,
    pub message: String,
    /// Scanning stopped here.
    pub fatal: bool,
}

impl fmt::Display for LexDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    pub source_id: String,
    pub tokens: Vec<Token>,
    pub diagnostics: Vec<LexDiagnostic>,
}

impl TokenStream {
    pub fn is_clean(&self) -> bool {
        self.diagnostics.is_empty()
    }

    pub fn halted(&self) -> bool {
        self.diagnostics.iter().any(|d| d.fatal)
    }
}

pub const KEYWORDS: [&str; 50] = [
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "void",
    "volatile",
    "while",
];

const LITERAL_WORDS: [&str; 3] = ["true", "false", "null"];

/// Longest first.
const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=",
    "+=", "-=", "*=", "/=", "&=", "|=", "^=", "%=", "<<", ">>", "=", ">", "<", "!", "~", "?",
    ":", "+", "-", "*", "/", "&", "|", "^", "%",
];

const PUNCT: &[&str] = &["...", "(", ")", "{", "}", "[", "]", ";", ",", "@"];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

struct Scanner<'a> {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    column: u32,
    out: &'a mut TokenStream,
}

impl Scanner<'_> {
    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek(0)?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c))
    }

    fn diag(&mut self, line: u32, column: u32, message: impl Into<String>, fatal: bool) {
        self.out.diagnostics.push(LexDiagnostic {
            line,
            column,
            message: message.into(),
            fatal,
        });
    }

    fn push(&mut self, kind: TokenKind, text: String, line: u32, column: u32) {
        self.out.tokens.push(Token {
            kind,
            text,
            line,
            column,
        });
    }

    fn run(&mut self) {
        while let Some(c) = self.peek(0) {
            let (line, column) = (self.line, self.column);
            if c.is_whitespace() {
                self.bump();
            } else if self.starts_with("//") {
                while self.peek(0).is_some_and(|c| c != '\n') {
                    self.bump();
                }
            } else if self.starts_with("/*") {
                self.bump();
                self.bump();
                loop {
                    if self.starts_with("*/") {
                        self.bump();
                        self.bump();
                        break;
                    }
                    if self.bump().is_none() {
                        self.diag(line, column, "unterminated block comment", true);
                        return;
                    }
                }
            } else if self.starts_with("\"\"\"") {
                if !self.text_block(line, column) {
                    return;
                }
            } else if c == '"' || c == '\'' {
                if !self.quoted(c, line, column) {
                    return;
                }
            } else if c.is_ascii_digit() || (c == '.' && self.peek(1).is_some_and(|d| d.is_ascii_digit())) {
                self.number(line, column);
            } else if is_ident_start(c) {
                let mut word = String::new();
                while let Some(c) = self.peek(0).filter(|&c| is_ident_continue(c)) {
                    word.push(c);
                    self.bump();
                }
                let kind = if is_keyword(&word) {
                    TokenKind::Keyword
                } else if LITERAL_WORDS.contains(&word.as_str()) {
                    TokenKind::Literal
                } else {
                    TokenKind::Identifier
                };
                self.push(kind, word, line, column);
            } else if let Some(p) = PUNCT.iter().find(|p| self.starts_with(p)) {
                p.chars().for_each(|_| {
                    self.bump();
                });
                self.push(TokenKind::Punct, p.to_string(), line, column);
            } else if c == '.' {
                self.bump();
                self.push(TokenKind::Punct, ".".into(), line, column);
            } else if let Some(op) = OPERATORS.iter().find(|o| self.starts_with(o)) {
                op.chars().for_each(|_| {
                    self.bump();
                });
                self.push(TokenKind::Operator, op.to_string(), line, column);
            } else {
                self.bump();
                self.diag(line, column, format!("unexpected character {c:?}"), false);
            }
        }
    }

    /// String or char literal. Returns false when unterminated.
    fn quoted(&mut self, quote: char, line: u32, column: u32) -> bool {
        let mut text = String::new();
        text.push(quote);
        self.bump();
        loop {
            match self.peek(0) {
                None | Some('\n') => {
                    let what = if quote == '"' { "string" } else { "character" };
                    self.diag(line, column, format!("unterminated {what} literal"), true);
                    return false;
                }
                Some('\\') => {
                    text.push('\\');
                    self.bump();
                    if let Some(c) = self.peek(0).filter(|&c| c != '\n') {
                        text.push(c);
                        self.bump();
                    }
                }
                Some(c) => {
                    text.push(c);
                    self.bump();
                    if c == quote {
                        self.push(TokenKind::Literal, text, line, column);
                        return true;
                    }
                }
            }
        }
    }

    fn text_block(&mut self, line: u32, column: u32) -> bool {
        let mut text = String::from("\"\"\"");
        for _ in 0..3 {
            self.bump();
        }
        loop {
            if self.starts_with("\"\"\"") {
                for _ in 0..3 {
                    self.bump();
                }
                text.push_str("\"\"\"");
                self.push(TokenKind::Literal, text, line, column);
                return true;
            }
            match self.bump() {
                None => {
                    self.diag(line, column, "unterminated text block", true);
                    return false;
                }
                Some('\\') => {
                    text.push('\\');
                    if let Some(c) = self.bump() {
                        text.push(c);
                    }
                }
                Some(c) => text.push(c),
            }
        }
    }

    fn number(&mut self, line: u32, column: u32) {
        let mut text = String::new();
        let radix_prefix = self.peek(0) == Some('0')
            && matches!(self.peek(1), Some('x' | 'X' | 'b' | 'B'));
        if radix_prefix {
            text.extend([self.bump().unwrap(), self.bump().unwrap()]);
            while let Some(c) = self.peek(0).filter(|c| c.is_ascii_hexdigit() || *c == '_') {
                text.push(c);
                self.bump();
            }
        } else {
            let mut seen_dot = false;
            let mut seen_exp = false;
            while let Some(c) = self.peek(0) {
                let dot_ok = c == '.'
                    && !seen_dot
                    && !seen_exp
                    && self
                        .peek(1)
                        .is_none_or(|d| d.is_ascii_digit() || (!is_ident_start(d) && d != '.'));
                let ok = c.is_ascii_digit()
                    || c == '_'
                    || dot_ok
                    || (matches!(c, 'e' | 'E') && !seen_exp)
                    || (matches!(c, '+' | '-') && matches!(text.chars().last(), Some('e' | 'E')));
                if !ok {
                    break;
                }
                seen_dot |= c == '.';
                seen_exp |= matches!(c, 'e' | 'E');
                text.push(c);
                self.bump();
            }
        }
        if let Some(c) = self.peek(0).filter(|c| matches!(c, 'l' | 'L' | 'f' | 'F' | 'd' | 'D')) {
            text.push(c);
            self.bump();
        }
        self.push(TokenKind::Literal, text, line, column);
    }
}

pub fn lex(source: &str) -> TokenStream {
    lex_named("", source)
}

pub fn lex_named(source_id: &str, source: &str) -> TokenStream {
    let mut out = TokenStream {
        source_id: source_id.to_string(),
        ..TokenStream::default()
    };
    Scanner {
        chars: source.chars().collect(),
        pos: 0,
        line: 1,
        column: 1,
        out: &mut out,
    }
    .run();
    out
}
