//! Statement-level data-dependence graph and slicing.
//!
//! The body is split into top-level statements. `if`, `try`, loops,
//! `switch`, `synchronized` and bare blocks are single compound units whose
//! def/use sets merge everything inside them, headers included. A statement
//! that cannot be delimited becomes opaque: it uses every identifier it
//! contains and defines nothing.
//!
//! An edge `a → b` links the reaching definitions of each variable `b` uses.
//! Simple statements are definite definitions and kill earlier ones;
//! compound statements only may define, so earlier definitions still reach
//! past them.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::lexer::{Token, TokenKind, TokenStream};
use super::SnippetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatementKind {
    Simple,
    Compound,
    Opaque,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    /// 1-based, in source order.
    pub id: usize,
    pub line_range: [u32; 2],
    /// Half-open token index range in the body.
    pub token_range: [usize; 2],
    pub kind: StatementKind,
    pub defs: BTreeSet<String>,
    pub uses: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementGraph {
    pub statements: Vec<Statement>,
    /// Sorted `(from, to)` pairs with `from < to`.
    pub edges: Vec<(usize, usize)>,
}

const ASSIGN_OPS: [&str; 12] = [
    "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>=",
];

const TYPE_KEYWORDS: [&str; 9] = [
    "int", "long", "short", "byte", "char", "boolean", "float", "double", "void",
];

const MODIFIERS: [&str; 4] = ["final", "static", "transient", "volatile"];

fn is_open(t: &Token) -> bool {
    t.kind == TokenKind::Punct && matches!(t.text.as_str(), "(" | "{" | "[")
}

fn is_close(t: &Token) -> bool {
    t.kind == TokenKind::Punct && matches!(t.text.as_str(), ")" | "}" | "]")
}

/// Index of the bracket closing the one at `open`.
fn matching(tokens: &[Token], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, t) in tokens.iter().enumerate().skip(open) {
        if is_open(t) {
            depth += 1;
        } else if is_close(t) {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

/// Splits `tokens[range]` at top-level occurrences of `sep`.
fn split_top(tokens: &[Token], range: Range<usize>, sep: &str) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = range.start;
    for i in range.clone() {
        let t = &tokens[i];
        if is_open(t) {
            depth += 1;
        } else if is_close(t) {
            depth -= 1;
        } else if depth == 0 && t.kind == TokenKind::Punct && t.text == sep {
            out.push(start..i);
            start = i + 1;
        }
    }
    out.push(start..range.end);
    out
}

/// Top-level comma split that ignores commas inside type arguments ahead of
/// the first assignment.
fn split_declarators(tokens: &[Token], range: Range<usize>) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut angles = 0i32;
    let mut typing = true;
    let mut start = range.start;
    for i in range.clone() {
        let t = &tokens[i];
        if is_open(t) {
            depth += 1;
        } else if is_close(t) {
            depth -= 1;
        } else if depth == 0 && typing && t.kind == TokenKind::Operator {
            match t.text.as_str() {
                "<" => angles += 1,
                ">" => angles -= 1,
                ">>" => angles -= 2,
                ">>>" => angles -= 3,
                op if ASSIGN_OPS.contains(&op) => typing = false,
                _ => {}
            }
        } else if depth == 0 && (angles <= 0 || !typing) && t.is_punct(",") {
            out.push(start..i);
            start = i + 1;
        }
    }
    out.push(start..range.end);
    out
}

#[derive(Default)]
struct DefUse {
    defs: BTreeSet<String>,
    uses: BTreeSet<String>,
}

impl DefUse {
    fn merge(&mut self, other: DefUse) {
        self.defs.extend(other.defs);
        self.uses.extend(other.uses);
    }
}

/// Identifiers read as variables: not member names, not called method
/// names, not instantiated type names.
fn variable_uses(tokens: &[Token], range: Range<usize>, out: &mut BTreeSet<String>) {
    for i in range.clone() {
        let t = &tokens[i];
        if t.kind != TokenKind::Identifier {
            continue;
        }
        let prev = (i > range.start).then(|| &tokens[i - 1]);
        let next = tokens.get(i + 1).filter(|_| i + 1 < range.end);
        let member = prev.is_some_and(|p| p.is_punct(".") || p.is_op("::") || p.is_keyword("new"));
        let call = next.is_some_and(|n| n.is_punct("("));
        if !member && !call {
            out.insert(t.text.clone());
        }
    }
}

fn all_identifiers(tokens: &[Token], range: Range<usize>) -> BTreeSet<String> {
    tokens[range]
        .iter()
        .filter(|t| t.kind == TokenKind::Identifier)
        .map(|t| t.text.clone())
        .collect()
}

fn is_type_end(t: &Token) -> bool {
    t.kind == TokenKind::Identifier
        || (t.kind == TokenKind::Keyword && TYPE_KEYWORDS.contains(&t.text.as_str()))
        || t.is_op(">")
        || t.is_op(">>")
        || t.is_punct("]")
}

/// `Type name` at the end of `range`: the declared name.
fn declared_name(tokens: &[Token], range: &Range<usize>) -> Option<String> {
    if range.len() < 2 {
        return None;
    }
    let last = &tokens[range.end - 1];
    let before = &tokens[range.end - 2];
    (last.kind == TokenKind::Identifier && is_type_end(before)).then(|| last.text.clone())
}

fn skip_prefix(tokens: &[Token], mut start: usize, end: usize) -> usize {
    loop {
        match tokens.get(start).filter(|_| start < end) {
            Some(t) if t.kind == TokenKind::Keyword && MODIFIERS.contains(&t.text.as_str()) => start += 1,
            Some(t) if t.is_punct("@") => {
                start += 2;
                while tokens.get(start).is_some_and(|t| t.is_punct(".")) {
                    start += 2;
                }
                if tokens.get(start).is_some_and(|t| t.is_punct("(")) {
                    match matching(tokens, start) {
                        Some(c) if c < end => start = c + 1,
                        _ => return end,
                    }
                }
            }
            Some(t) if t.is_keyword("case") || t.is_keyword("default") => {
                match (start..end).find(|&i| tokens[i].is_op(":") || tokens[i].is_op("->")) {
                    Some(c) => start = c + 1,
                    None => return start,
                }
            }
            _ => return start,
        }
    }
}

fn top_level_assign(tokens: &[Token], range: Range<usize>) -> Option<usize> {
    let mut depth = 0i32;
    range.into_iter().find(|&i| {
        let t = &tokens[i];
        if is_open(t) {
            depth += 1;
        } else if is_close(t) {
            depth -= 1;
        }
        depth == 0 && t.kind == TokenKind::Operator && ASSIGN_OPS.contains(&t.text.as_str())
    })
}

/// Def/use sets of one simple statement (without its `;`).
fn simple_def_use(tokens: &[Token], range: Range<usize>) -> DefUse {
    let mut du = DefUse::default();
    let start = skip_prefix(tokens, range.start, range.end);
    let range = start.min(range.end)..range.end;
    if range.is_empty() {
        return du;
    }
    let first = &tokens[range.start];
    if first.is_keyword("return") || first.is_keyword("throw") || first.is_keyword("assert") {
        variable_uses(tokens, range, &mut du.uses);
        return du;
    }

    // declaration: `Type a = e, b, c = f`
    let declarators = split_declarators(tokens, range.clone());
    let head = declarators[0].clone();
    let head_assign = top_level_assign(tokens, head.clone());
    if let Some(name) = declared_name(tokens, &(head.start..head_assign.unwrap_or(head.end))) {
        du.defs.insert(name);
        if let Some(k) = head_assign {
            variable_uses(tokens, k + 1..head.end, &mut du.uses);
        }
        for d in &declarators[1..] {
            let Some(t) = tokens.get(d.start).filter(|t| d.start < d.end && t.kind == TokenKind::Identifier) else {
                continue;
            };
            du.defs.insert(t.text.clone());
            if let Some(k) = top_level_assign(tokens, d.clone()) {
                variable_uses(tokens, k + 1..d.end, &mut du.uses);
            }
        }
        return du;
    }

    let toks = &tokens[range.clone()];
    match top_level_assign(tokens, range.clone()) {
        Some(k) => {
            let lhs = range.start..k;
            let plain = match &tokens[lhs.clone()] {
                [t] if t.kind == TokenKind::Identifier => Some(t.text.clone()),
                [this, dot, t] if this.is_keyword("this") && dot.is_punct(".") && t.kind == TokenKind::Identifier => {
                    Some(t.text.clone())
                }
                _ => None,
            };
            match plain {
                Some(name) => {
                    if tokens[k].text != "=" {
                        du.uses.insert(name.clone());
                    }
                    du.defs.insert(name);
                }
                None => {
                    // element or field write: a weak update of the base
                    variable_uses(tokens, lhs.clone(), &mut du.uses);
                    if let Some(base) = tokens[lhs].first().filter(|t| t.kind == TokenKind::Identifier) {
                        du.defs.insert(base.text.clone());
                        du.uses.insert(base.text.clone());
                    }
                }
            }
            variable_uses(tokens, k + 1..range.end, &mut du.uses);
        }
        None => {
            let incdec = |t: &Token| t.is_op("++") || t.is_op("--");
            match toks {
                [a, op] | [op, a] if incdec(op) && a.kind == TokenKind::Identifier => {
                    du.defs.insert(a.text.clone());
                    du.uses.insert(a.text.clone());
                }
                // `recv.method(...)` may mutate `recv`
                [recv, dot, _m, paren, ..]
                    if recv.kind == TokenKind::Identifier && dot.is_punct(".") && paren.is_punct("(") =>
                {
                    du.defs.insert(recv.text.clone());
                    variable_uses(tokens, range, &mut du.uses);
                }
                _ => variable_uses(tokens, range, &mut du.uses),
            }
        }
    }
    du
}

/// Def/use of a parenthesized header such as a `for`, `catch` or resource
/// list: each `;`-separated part as a simple statement, with `Type x : e`
/// read as a declaration of `x` using `e`.
fn header_def_use(tokens: &[Token], open: usize, close: usize) -> DefUse {
    let mut du = DefUse::default();
    for part in split_top(tokens, open + 1..close, ";") {
        if part.is_empty() {
            continue;
        }
        let colon = part.clone().find(|&i| tokens[i].is_op(":"));
        match colon {
            Some(c) => {
                if let Some(name) = declared_name(tokens, &(part.start..c)) {
                    du.defs.insert(name);
                }
                variable_uses(tokens, c + 1..part.end, &mut du.uses);
            }
            None => {
                if part.end - part.start >= 2 && declared_name(tokens, &part).is_some() {
                    // catch (IOException | Other e)
                    du.defs.insert(tokens[part.end - 1].text.clone());
                } else {
                    du.merge(simple_def_use(tokens, part));
                }
            }
        }
    }
    du
}

struct Parsed {
    end: usize,
    kind: StatementKind,
    du: DefUse,
}

struct Parser<'a> {
    tokens: &'a [Token],
    end: usize,
}

impl Parser<'_> {
    fn at(&self, i: usize) -> Option<&Token> {
        self.tokens.get(i).filter(|_| i < self.end)
    }

    fn close_of(&self, open: usize) -> Option<usize> {
        matching(&self.tokens[..self.end], open)
    }

    fn block_def_use(&self, open: usize, close: usize) -> DefUse {
        let inner = Parser {
            tokens: self.tokens,
            end: close,
        };
        let mut du = DefUse::default();
        for p in inner.statements(open + 1) {
            du.merge(p.1.du);
        }
        du
    }

    /// A `( ... )` header at `i`: (close index, def/use).
    fn header(&self, i: usize) -> Option<(usize, DefUse)> {
        if !self.at(i)?.is_punct("(") {
            return None;
        }
        let c = self.close_of(i)?;
        Some((c, header_def_use(self.tokens, i, c)))
    }

    /// A `{ ... }` block at `i`.
    fn block(&self, i: usize) -> Option<(usize, DefUse)> {
        if !self.at(i)?.is_punct("{") {
            return None;
        }
        let c = self.close_of(i)?;
        Some((c + 1, self.block_def_use(i, c)))
    }

    fn compound(&self, i: usize) -> Option<Parsed> {
        let t = self.at(i)?;
        let mut du = DefUse::default();
        let mut pos;
        if t.is_punct("{") {
            let (e, d) = self.block(i)?;
            du.merge(d);
            pos = e;
        } else if t.is_keyword("if") {
            let (c, h) = self.header(i + 1)?;
            du.merge(h);
            let body = self.one(c + 1)?;
            du.merge(body.du);
            pos = body.end;
            if self.at(pos).is_some_and(|t| t.is_keyword("else")) {
                let other = self.one(pos + 1)?;
                du.merge(other.du);
                pos = other.end;
            }
        } else if t.is_keyword("for") || t.is_keyword("while") {
            let (c, h) = self.header(i + 1)?;
            du.merge(h);
            let body = self.one(c + 1)?;
            du.merge(body.du);
            pos = body.end;
        } else if t.is_keyword("switch") || t.is_keyword("synchronized") {
            let (c, h) = self.header(i + 1)?;
            du.merge(h);
            let (e, d) = self.block(c + 1)?;
            du.merge(d);
            pos = e;
        } else if t.is_keyword("do") {
            let body = self.one(i + 1)?;
            du.merge(body.du);
            if !self.at(body.end)?.is_keyword("while") {
                return None;
            }
            let (c, h) = self.header(body.end + 1)?;
            du.merge(h);
            if !self.at(c + 1)?.is_punct(";") {
                return None;
            }
            pos = c + 2;
        } else if t.is_keyword("try") {
            pos = i + 1;
            if let Some((c, h)) = self.header(pos) {
                du.merge(h);
                pos = c + 1;
            }
            let (e, d) = self.block(pos)?;
            du.merge(d);
            pos = e;
            while self.at(pos).is_some_and(|t| t.is_keyword("catch")) {
                let (c, h) = self.header(pos + 1)?;
                du.merge(h);
                let (e, d) = self.block(c + 1)?;
                du.merge(d);
                pos = e;
            }
            if self.at(pos).is_some_and(|t| t.is_keyword("finally")) {
                let (e, d) = self.block(pos + 1)?;
                du.merge(d);
                pos = e;
            }
        } else {
            return None;
        }
        Some(Parsed {
            end: pos,
            kind: StatementKind::Compound,
            du,
        })
    }

    fn starts_compound(t: &Token) -> bool {
        t.is_punct("{")
            || (t.kind == TokenKind::Keyword
                && matches!(
                    t.text.as_str(),
                    "if" | "for" | "while" | "do" | "try" | "switch" | "synchronized"
                ))
    }

    /// Simple statement through its `;`.
    fn simple(&self, i: usize) -> Option<Parsed> {
        let mut depth = 0i32;
        for j in i..self.end {
            let t = &self.tokens[j];
            if is_open(t) {
                depth += 1;
            } else if is_close(t) {
                depth -= 1;
                if depth < 0 {
                    return None;
                }
            } else if depth == 0 && t.is_punct(";") {
                return Some(Parsed {
                    end: j + 1,
                    kind: StatementKind::Simple,
                    du: simple_def_use(self.tokens, i..j),
                });
            }
        }
        None
    }

    fn one(&self, i: usize) -> Option<Parsed> {
        let t = self.at(i)?;
        if Self::starts_compound(t) {
            self.compound(i)
        } else {
            self.simple(i)
        }
    }

    /// Top-level statements from `start`, as (token range, parse).
    fn statements(&self, start: usize) -> Vec<(Range<usize>, Parsed)> {
        let mut out = Vec::new();
        let mut i = start;
        while i < self.end {
            if self.tokens[i].is_punct(";") {
                i += 1;
                continue;
            }
            match self.one(i) {
                Some(p) if p.end > i => {
                    let end = p.end;
                    out.push((i..end, p));
                    i = end;
                }
                _ => {
                    // delimit the opaque run at the next top-level `;` if any
                    let stop = self.opaque_end(i);
                    out.push((
                        i..stop,
                        Parsed {
                            end: stop,
                            kind: StatementKind::Opaque,
                            du: DefUse {
                                defs: BTreeSet::new(),
                                uses: all_identifiers(self.tokens, i..stop),
                            },
                        },
                    ));
                    i = stop;
                }
            }
        }
        out
    }

    fn opaque_end(&self, i: usize) -> usize {
        let mut depth = 0i32;
        for j in i..self.end {
            let t = &self.tokens[j];
            if is_open(t) {
                depth += 1;
            } else if is_close(t) {
                depth -= 1;
            } else if depth <= 0 && t.is_punct(";") {
                return j + 1;
            }
        }
        self.end
    }
}

pub fn build_statement_graph(body: &TokenStream) -> StatementGraph {
    build_graph_from_tokens(&body.tokens)
}

pub fn build_graph_from_tokens(tokens: &[Token]) -> StatementGraph {
    let parser = Parser {
        tokens,
        end: tokens.len(),
    };
    let statements: Vec<Statement> = parser
        .statements(0)
        .into_iter()
        .enumerate()
        .map(|(k, (range, p))| Statement {
            id: k + 1,
            line_range: [tokens[range.start].line, tokens[range.end - 1].line],
            token_range: [range.start, range.end],
            kind: p.kind,
            defs: p.du.defs,
            uses: p.du.uses,
        })
        .collect();
    let edges = dependence_edges(&statements);
    StatementGraph { statements, edges }
}

fn dependence_edges(statements: &[Statement]) -> Vec<(usize, usize)> {
    let mut reaching: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut edges = BTreeSet::new();
    for s in statements {
        for v in &s.uses {
            for &a in reaching.get(v.as_str()).into_iter().flatten() {
                edges.insert((a, s.id));
            }
        }
        for v in &s.defs {
            let r = reaching.entry(v.as_str()).or_default();
            if s.kind == StatementKind::Simple {
                r.clear();
            }
            r.push(s.id);
        }
    }
    edges.into_iter().collect()
}

impl StatementGraph {
    pub fn statement(&self, id: usize) -> Option<&Statement> {
        id.checked_sub(1).and_then(|i| self.statements.get(i))
    }

    /// Same statements with every edge flipped.
    pub fn reversed(&self) -> StatementGraph {
        let mut edges: Vec<_> = self.edges.iter().map(|&(a, b)| (b, a)).collect();
        edges.sort_unstable();
        StatementGraph {
            statements: self.statements.clone(),
            edges,
        }
    }

    fn check_seeds(&self, seeds: &BTreeSet<usize>) -> Result<(), SnippetError> {
        match seeds.iter().find(|&&s| self.statement(s).is_none()) {
            Some(&s) => Err(SnippetError::UnknownStatement(s)),
            None => Ok(()),
        }
    }

    fn reach(&self, seeds: &BTreeSet<usize>, forward: bool) -> Result<BTreeSet<usize>, SnippetError> {
        self.check_seeds(seeds)?;
        let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(a, b) in &self.edges {
            let (from, to) = if forward { (a, b) } else { (b, a) };
            adj.entry(from).or_default().push(to);
        }
        let mut seen = seeds.clone();
        let mut queue: VecDeque<usize> = seeds.iter().copied().collect();
        while let Some(n) = queue.pop_front() {
            for &m in adj.get(&n).into_iter().flatten() {
                if seen.insert(m) {
                    queue.push_back(m);
                }
            }
        }
        Ok(seen)
    }

    /// Seeds plus every statement they transitively depend on.
    pub fn backward_slice(&self, seeds: &BTreeSet<usize>) -> Result<BTreeSet<usize>, SnippetError> {
        self.reach(seeds, false)
    }

    /// Seeds plus every statement transitively depending on them.
    pub fn forward_slice(&self, seeds: &BTreeSet<usize>) -> Result<BTreeSet<usize>, SnippetError> {
        self.reach(seeds, true)
    }
}

pub fn backward_slice(g: &StatementGraph, seeds: &BTreeSet<usize>) -> Result<BTreeSet<usize>, SnippetError> {
    g.backward_slice(seeds)
}

pub fn forward_slice(g: &StatementGraph, seeds: &BTreeSet<usize>) -> Result<BTreeSet<usize>, SnippetError> {
    g.forward_slice(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snippets::lexer::lex;
    use proptest::prelude::*;

    fn graph(src: &str) -> StatementGraph {
        build_statement_graph(&lex(src))
    }

    fn set(ids: &[usize]) -> BTreeSet<usize> {
        ids.iter().copied().collect()
    }

    fn names(s: &BTreeSet<String>) -> Vec<&str> {
        s.iter().map(String::as_str).collect()
    }

    #[test]
    fn def_use_chain() {
        let g = graph("x=1; y=x+1; print(y);");
        assert_eq!(g.statements.len(), 3);
        assert_eq!(g.edges, vec![(1, 2), (2, 3)]);
    }

    #[test]
    fn single_statement() {
        assert!(graph("int a = b + c;").edges.is_empty());
    }

    #[test]
    fn redefinition_kills() {
        let g = graph("x = 1; x = 2; y = x;");
        assert_eq!(g.edges, vec![(2, 3)]);
    }

    #[test]
    fn declarations() {
        let g = graph("final Map<String, List<Integer>> m = new HashMap<>(); int a, b = m.size(); String[] xs;");
        assert_eq!(names(&g.statements[0].defs), vec!["m"]);
        assert_eq!(names(&g.statements[1].defs), vec!["a", "b"]);
        assert_eq!(names(&g.statements[1].uses), vec!["m"]);
        assert_eq!(names(&g.statements[2].defs), vec!["xs"]);
        assert_eq!(g.edges, vec![(1, 2)]);
    }

    #[test]
    fn compound_units() {
        let src = "int s = 0;\nfor (int i = 0; i < n; i++) {\n  s += i;\n}\nif (s > 3) { t = s; } else { t = 0; }\nuse(t);";
        let g = graph(src);
        assert_eq!(g.statements.len(), 4);
        assert_eq!(g.statements[1].kind, StatementKind::Compound);
        assert_eq!(g.statements[1].line_range, [2, 4]);
        assert_eq!(names(&g.statements[1].defs), vec!["i", "s"]);
        assert!(g.statements[1].uses.contains("n"));
        assert_eq!(g.edges, vec![(1, 2), (1, 3), (2, 3), (3, 4)]);
    }

    #[test]
    fn conditional_definition_does_not_kill() {
        let g = graph("p = null; if (c) { p = f(); } g(p);");
        assert_eq!(g.edges, vec![(1, 3), (2, 3)]);
    }

    #[test]
    fn try_catch_and_do_while() {
        let g = graph("try (R r = open()) { a = r.read(); } catch (IOException | X e) { e.log(); } finally { done(); }\ndo { k++; } while (k < a);");
        assert_eq!(g.statements.len(), 2);
        assert!(g.statements[0].defs.contains("a"));
        assert!(g.statements[0].defs.contains("e"));
        assert!(g.statements[1].uses.contains("a"));
        assert_eq!(g.edges, vec![(1, 2)]);
    }

    #[test]
    fn verifier_fixture() {
        let g = graph(include_str!("../../tests/fixtures/token_verifier.java"));
        let payload_stmt = g
            .statements
            .iter()
            .find(|s| s.kind == StatementKind::Compound && s.defs.contains("payload"))
            .expect("if statement assigning payload");
        let incoming: Vec<usize> = g.edges.iter().filter(|e| e.1 == payload_stmt.id).map(|e| e.0).collect();
        assert!(incoming
            .iter()
            .any(|&a| g.statement(a).unwrap().defs.contains("idToken")));
        assert!(g.statements.iter().all(|s| s.kind != StatementKind::Opaque));
        let last = g.statements.len();
        let slice = g.backward_slice(&set(&[last])).unwrap();
        assert_eq!(slice.len(), last - 1, "all but firstName feed lastName");
    }

    #[test]
    fn unterminated_statement_is_opaque() {
        let g = graph("a = 1; b = a + c");
        assert_eq!(g.statements[1].kind, StatementKind::Opaque);
        assert!(g.statements[1].defs.is_empty());
        assert_eq!(names(&g.statements[1].uses), vec!["a", "b", "c"]);
        assert_eq!(g.edges, vec![(1, 2)]);
    }

    #[test]
    fn malformed_header_is_opaque() {
        let g = graph("if x) y = 1; z = y;");
        assert_eq!(g.statements[0].kind, StatementKind::Opaque);
        assert!(g.statements.iter().all(|s| s.token_range[0] < s.token_range[1]));
    }

    #[test]
    fn slices_on_chain() {
        let g = graph("a = 1; b = a; c = b;");
        assert_eq!(g.backward_slice(&set(&[3])).unwrap(), set(&[1, 2, 3]));
        assert_eq!(g.forward_slice(&set(&[1])).unwrap(), set(&[1, 2, 3]));
        assert_eq!(g.backward_slice(&set(&[1])).unwrap(), set(&[1]));
        assert_eq!(g.forward_slice(&set(&[3])).unwrap(), set(&[3]));
        assert!(matches!(
            g.backward_slice(&set(&[4])),
            Err(SnippetError::UnknownStatement(4))
        ));
    }

    fn random_graph(n: usize, edges: &[(usize, usize)]) -> StatementGraph {
        let statements = (1..=n)
            .map(|id| Statement {
                id,
                line_range: [id as u32, id as u32],
                token_range: [id, id + 1],
                kind: StatementKind::Simple,
                defs: BTreeSet::new(),
                uses: BTreeSet::new(),
            })
            .collect();
        let mut e: Vec<_> = edges
            .iter()
            .map(|&(a, b)| (a % n + 1, b % n + 1))
            .filter(|(a, b)| a < b)
            .collect();
        e.sort_unstable();
        e.dedup();
        StatementGraph { statements, edges: e }
    }

    /// Brute-force reachability: repeat edge relaxation to a fixed point.
    fn oracle(g: &StatementGraph, seeds: &BTreeSet<usize>, forward: bool) -> BTreeSet<usize> {
        let mut s = seeds.clone();
        loop {
            let before = s.len();
            for &(a, b) in &g.edges {
                let (from, to) = if forward { (a, b) } else { (b, a) };
                if s.contains(&from) {
                    s.insert(to);
                }
            }
            if s.len() == before {
                return s;
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn slices_match_oracle(n in 1usize..30, edges in proptest::collection::vec((0usize..30, 0usize..30), 0..80), seeds in proptest::collection::btree_set(0usize..30, 1..4), extra in 0usize..30) {
            let g = random_graph(n, &edges);
            let seeds: BTreeSet<usize> = seeds.into_iter().map(|s| s % n + 1).collect();
            let b = g.backward_slice(&seeds).unwrap();
            let f = g.forward_slice(&seeds).unwrap();
            prop_assert_eq!(&b, &oracle(&g, &seeds, false));
            prop_assert_eq!(&f, &oracle(&g, &seeds, true));
            prop_assert_eq!(&f, &g.reversed().backward_slice(&seeds).unwrap());
            // closure
            for &(a, c) in &g.edges {
                if b.contains(&c) { prop_assert!(b.contains(&a)); }
                if f.contains(&a) { prop_assert!(f.contains(&c)); }
            }
            // monotonicity
            let mut more = seeds.clone();
            more.insert(extra % n + 1);
            prop_assert!(b.is_subset(&g.backward_slice(&more).unwrap()));
            prop_assert!(f.is_subset(&g.forward_slice(&more).unwrap()));
        }

        #[test]
        fn parser_total_on_any_tokens(src in "[a-z(){};=+ ,.\\n]{0,120}") {
            let toks = lex(&src);
            let g = build_statement_graph(&toks);
            let covered: usize = g.statements.iter().map(|s| s.token_range[1] - s.token_range[0]).sum();
            let semis = toks.tokens.len() - covered;
            prop_assert!(toks.tokens.iter().filter(|t| t.is_punct(";")).count() >= semis);
            for w in g.statements.windows(2) {
                prop_assert!(w[0].token_range[1] <= w[1].token_range[0]);
            }
            for &(a, b) in &g.edges { prop_assert!(a < b); }
        }
    }
}
