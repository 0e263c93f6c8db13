//! Code snippet drafting: lexing, clone detection between a question's code
//! and the developer's corpus, statement-level slicing, and composition of
//! a draft answer.

pub mod clones;
pub mod draft;
pub mod graph;
pub mod lexer;

pub use clones::{detect_clones, CloneMatch, DEFAULT_MIN_LINES};
pub use draft::{
    compose_draft, draft_for_question, question_needle, Corpus, CorpusFile, DraftAnswer, DraftOptions,
    DraftOutcome, DraftProvenance, DraftStatus, NoRecommendation,
};
pub use graph::{
    backward_slice, build_graph_from_tokens, build_statement_graph, forward_slice, Statement,
    StatementGraph, StatementKind,
};
pub use lexer::{lex, lex_named, LexDiagnostic, Token, TokenKind, TokenStream};

#[derive(Debug, thiserror::Error)]
pub enum SnippetError {
    #[error("unknown statement id {0}")]
    UnknownStatement(usize),
    #[error("corpus has no file {0:?}")]
    MissingCorpusFile(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}
