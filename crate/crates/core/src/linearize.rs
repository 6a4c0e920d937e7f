//! Conversion between graphs and linear token sequences.
//!
//! [`linearize`] walks a valid graph in the same canonical depth-first
//! order as the serializer and emits typed tokens; [`delinearize`] is its
//! exact inverse, so `delinearize(linearize(g)) == g` for every valid
//! graph.

use std::fmt;

use thiserror::Error;

use crate::graph::{AmrGraph, Constant, InvalidGraph, Var};

/// One token of a linearized graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Open,
    Close,
    Slash,
    /// A variable mention: defining (after `(`) or reentrant (bare).
    Var(Var),
    Concept(String),
    Role(String),
    Constant(Constant),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Open => f.write_str("("),
            Token::Close => f.write_str(")"),
            Token::Slash => f.write_str("/"),
            Token::Var(v) => write!(f, "{v}"),
            Token::Concept(c) => f.write_str(c),
            Token::Role(r) => write!(f, ":{r}"),
            Token::Constant(c) => write!(f, "{c}"),
        }
    }
}

/// A balanced sequence of tokens produced by [`linearize`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence(Vec<Token>);

impl TokenSequence {
    pub fn new(tokens: Vec<Token>) -> Self {
        TokenSequence(tokens)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Token> {
        self.0.iter()
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("token {position}: {kind}")]
pub struct DelinearizeError {
    /// 0-based index of the first offending token (or one past the end).
    pub position: usize,
    pub kind: DelinearizeErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DelinearizeErrorKind {
    Empty,
    UnexpectedEnd,
    DuplicateVariable(String),
    UnboundVariable(String),
    Trailing,
    Unexpected { expected: &'static str, found: String },
}

impl fmt::Display for DelinearizeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DelinearizeErrorKind::Empty => f.write_str("empty token sequence"),
            DelinearizeErrorKind::UnexpectedEnd => f.write_str("sequence ends inside a node"),
            DelinearizeErrorKind::DuplicateVariable(v) => {
                write!(f, "duplicate definition of variable `{v}`")
            }
            DelinearizeErrorKind::UnboundVariable(v) => {
                write!(f, "reference to unbound variable `{v}`")
            }
            DelinearizeErrorKind::Trailing => f.write_str("trailing tokens after the root node"),
            DelinearizeErrorKind::Unexpected { expected, found } => {
                write!(f, "expected {expected}, found {found}")
            }
        }
    }
}

fn emit_node(g: &AmrGraph, var: &Var, emitted: &mut Vec<Var>, out: &mut Vec<Token>) {
    emitted.push(var.clone());
    out.push(Token::Open);
    out.push(Token::Var(var.clone()));
    out.push(Token::Slash);
    out.push(Token::Concept(g.concept(var.as_str()).expect("validated").to_owned()));
    for a in g.attributes().iter().filter(|a| a.source == *var) {
        out.push(Token::Role(a.role.clone()));
        out.push(Token::Constant(a.value.clone()));
    }
    for e in g.edges().iter().filter(|e| e.source == *var) {
        out.push(Token::Role(e.role.clone()));
        if emitted.contains(&e.target) {
            out.push(Token::Var(e.target.clone()));
        } else {
            emit_node(g, &e.target, emitted, out);
        }
    }
    out.push(Token::Close);
}

/// Linearize a valid graph into its canonical token sequence.
pub fn linearize(g: &AmrGraph) -> Result<TokenSequence, InvalidGraph> {
    let diags = g.validate();
    if !diags.is_empty() {
        return Err(InvalidGraph(diags));
    }
    let mut out = Vec::new();
    let mut emitted = Vec::new();
    emit_node(g, g.root(), &mut emitted, &mut out);
    Ok(TokenSequence(out))
}

struct Reader<'a> {
    toks: &'a [Token],
    pos: usize,
    bindings: Vec<(String, String)>,
    edges: Vec<(String, String, String)>,
    attributes: Vec<(String, String, Constant)>,
}

impl<'a> Reader<'a> {
    fn err(&self, kind: DelinearizeErrorKind) -> DelinearizeError {
        DelinearizeError { position: self.pos, kind }
    }

    fn unexpected(&self, expected: &'static str) -> DelinearizeError {
        match self.toks.get(self.pos) {
            Some(t) => self.err(DelinearizeErrorKind::Unexpected {
                expected,
                found: format!("`{t}`"),
            }),
            None => self.err(DelinearizeErrorKind::UnexpectedEnd),
        }
    }

    fn is_bound(&self, id: &str) -> bool {
        self.bindings.iter().any(|(v, _)| v == id)
    }

    fn node(&mut self) -> Result<String, DelinearizeError> {
        match self.toks.get(self.pos) {
            Some(Token::Open) => self.pos += 1,
            _ => return Err(self.unexpected("`(`")),
        }
        let var = match self.toks.get(self.pos) {
            Some(Token::Var(v)) => {
                if self.is_bound(v.as_str()) {
                    return Err(self.err(DelinearizeErrorKind::DuplicateVariable(
                        v.as_str().to_owned(),
                    )));
                }
                self.pos += 1;
                v.as_str().to_owned()
            }
            _ => return Err(self.unexpected("a variable")),
        };
        match self.toks.get(self.pos) {
            Some(Token::Slash) => self.pos += 1,
            _ => return Err(self.unexpected("`/`")),
        }
        let concept = match self.toks.get(self.pos) {
            Some(Token::Concept(c)) => {
                self.pos += 1;
                c.clone()
            }
            _ => return Err(self.unexpected("a concept")),
        };
        self.bindings.push((var.clone(), concept));
        loop {
            match self.toks.get(self.pos) {
                Some(Token::Close) => {
                    self.pos += 1;
                    return Ok(var);
                }
                Some(Token::Role(r)) => {
                    let role = r.clone();
                    self.pos += 1;
                    match self.toks.get(self.pos) {
                        Some(Token::Open) => {
                            // keep edges in role order, as the parser does
                            let slot = self.edges.len();
                            self.edges.push((var.clone(), role, String::new()));
                            let child = self.node()?;
                            self.edges[slot].2 = child;
                        }
                        Some(Token::Var(v)) => {
                            if !self.is_bound(v.as_str()) {
                                return Err(self.err(DelinearizeErrorKind::UnboundVariable(
                                    v.as_str().to_owned(),
                                )));
                            }
                            let t = v.as_str().to_owned();
                            self.pos += 1;
                            self.edges.push((var.clone(), role, t));
                        }
                        Some(Token::Constant(c)) => {
                            let value = c.clone();
                            self.pos += 1;
                            self.attributes.push((var.clone(), role, value));
                        }
                        _ => return Err(self.unexpected("a value after the role")),
                    }
                }
                Some(_) => return Err(self.unexpected("a role or `)`")),
                None => return Err(self.err(DelinearizeErrorKind::UnexpectedEnd)),
            }
        }
    }
}

/// Rebuild the graph a token sequence encodes.
pub fn delinearize(tokens: &TokenSequence) -> Result<AmrGraph, DelinearizeError> {
    if tokens.is_empty() {
        return Err(DelinearizeError {
            position: 0,
            kind: DelinearizeErrorKind::Empty,
        });
    }
    let mut r = Reader {
        toks: tokens.tokens(),
        pos: 0,
        bindings: Vec::new(),
        edges: Vec::new(),
        attributes: Vec::new(),
    };
    r.node()?;
    if r.pos < r.toks.len() {
        return Err(r.err(DelinearizeErrorKind::Trailing));
    }
    let mut bindings = r.bindings.into_iter();
    let (rv, rc) = bindings.next().expect("root binding");
    let mut g = AmrGraph::new(rv, rc);
    for (v, c) in bindings {
        g.add_node(v, c).expect("duplicates rejected while reading");
    }
    for (s, role, t) in r.edges {
        g.add_edge(s, &role, t);
    }
    for (s, role, v) in r.attributes {
        g.add_attribute(s, &role, v);
    }
    Ok(g)
}
