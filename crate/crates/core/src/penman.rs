//! PENMAN notation: parsing text into [`AmrGraph`] and serializing graphs
//! back to canonical text.
//!
//! Parsing rules:
//!
//! - roles are normalized to lowercase (`:ARG1` and `:arg1` are the same
//!   role);
//! - a bare target token is a variable reference iff it matches a variable
//!   already bound at that point in the text; otherwise it is a constant.
//!   Quoted strings and numbers are always constants. A bare token that is
//!   only bound *later* in the text is reported as a reference to an
//!   undefined variable rather than silently becoming a constant;
//! - lines whose first non-blank character is `#` (metadata and comments)
//!   are skipped.
//!
//! Serialization emits a canonical depth-first rendering: per node, first
//! its attributes, then its edges, each in stored order; a variable's
//! concept binding appears at its first mention and reentrant mentions are
//! bare variables. `parse_penman(serialize_penman(g)) == g` for every valid
//! graph.

use std::fmt;

use thiserror::Error;

use crate::graph::{normalize_role, AmrGraph, Constant, InvalidGraph, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    EmptyInput,
    UnbalancedOpen,
    UnbalancedClose,
    DuplicateVariable(String),
    UndefinedVariable(String),
    UnterminatedString,
    TrailingContent,
    Unexpected { expected: &'static str, found: String },
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::EmptyInput => f.write_str("empty input: no PENMAN expression found"),
            ParseErrorKind::UnbalancedOpen => {
                f.write_str("unbalanced parentheses: missing `)`")
            }
            ParseErrorKind::UnbalancedClose => {
                f.write_str("unbalanced parentheses: unexpected `)`")
            }
            ParseErrorKind::DuplicateVariable(v) => {
                write!(f, "duplicate definition of variable `{v}`")
            }
            ParseErrorKind::UndefinedVariable(v) => write!(
                f,
                "reference to undefined variable `{v}` (bound only later in the text)"
            ),
            ParseErrorKind::UnterminatedString => f.write_str("unterminated string literal"),
            ParseErrorKind::TrailingContent => {
                f.write_str("trailing content after the closing parenthesis")
            }
            ParseErrorKind::Unexpected { expected, found } => {
                write!(f, "expected {expected}, found {found}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Open,
    Close,
    Slash,
    Role(String),
    Str(String),
    Sym(String),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Open => "`(`".to_owned(),
            Tok::Close => "`)`".to_owned(),
            Tok::Slash => "`/`".to_owned(),
            Tok::Role(r) => format!("role `:{r}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Sym(s) => format!("`{s}`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn is_sym_end(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '/' | '"')
}

/// Decimal literals with an optional sign are always constants, never
/// variable references.
fn is_number(s: &str) -> bool {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    if body.is_empty() {
        return false;
    }
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    digits(int) && frac.is_none_or(digits)
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut toks = Vec::new();
    let mut chars = text.char_indices().peekable();
    let mut line = 1usize;
    let mut column = 1usize;
    let mut at_line_start = true;
    while let Some((idx, c)) = chars.next() {
        let (tline, tcol) = (line, column);
        let mut advance = |ch: char| {
            if ch == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
        };
        if c == '\n' {
            advance(c);
            at_line_start = true;
            continue;
        }
        if c.is_whitespace() {
            advance(c);
            continue;
        }
        if c == '#' && at_line_start {
            // metadata / comment line: skip to end of line
            advance(c);
            for (_, ch) in chars.by_ref() {
                advance(ch);
                if ch == '\n' {
                    break;
                }
            }
            at_line_start = true;
            continue;
        }
        at_line_start = false;
        match c {
            '(' => {
                toks.push(Spanned { tok: Tok::Open, line: tline, column: tcol });
                advance(c);
            }
            ')' => {
                toks.push(Spanned { tok: Tok::Close, line: tline, column: tcol });
                advance(c);
            }
            '/' => {
                toks.push(Spanned { tok: Tok::Slash, line: tline, column: tcol });
                advance(c);
            }
            '"' => {
                advance(c);
                let mut s = String::new();
                let mut closed = false;
                while let Some((_, ch)) = chars.next() {
                    advance(ch);
                    match ch {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' => {
                            if let Some((_, esc)) = chars.next() {
                                advance(esc);
                                s.push(esc);
                            }
                        }
                        _ => s.push(ch),
                    }
                }
                if !closed {
                    return Err(ParseError {
                        line: tline,
                        column: tcol,
                        kind: ParseErrorKind::UnterminatedString,
                    });
                }
                toks.push(Spanned { tok: Tok::Str(s), line: tline, column: tcol });
            }
            ':' => {
                advance(c);
                let start = idx + 1;
                let mut end = start;
                while let Some(&(j, ch)) = chars.peek() {
                    if is_sym_end(ch) || ch == ':' {
                        break;
                    }
                    end = j + ch.len_utf8();
                    chars.next();
                    advance(ch);
                }
                toks.push(Spanned {
                    tok: Tok::Role(text[start..end].to_owned()),
                    line: tline,
                    column: tcol,
                });
            }
            _ => {
                advance(c);
                let start = idx;
                let mut end = idx + c.len_utf8();
                while let Some(&(j, ch)) = chars.peek() {
                    if is_sym_end(ch) {
                        break;
                    }
                    end = j + ch.len_utf8();
                    chars.next();
                    advance(ch);
                }
                toks.push(Spanned {
                    tok: Tok::Sym(text[start..end].to_owned()),
                    line: tline,
                    column: tcol,
                });
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    bindings: Vec<(String, String)>,
    edges: Vec<(String, String, String)>,
    attributes: Vec<(String, String, Constant)>,
    // bare constants that might turn out to be forward references
    unresolved: Vec<(String, usize, usize)>,
}

impl Parser {
    fn err_here(&self, kind: ParseErrorKind) -> ParseError {
        match self.toks.get(self.pos) {
            Some(t) => ParseError { line: t.line, column: t.column, kind },
            None => {
                let (line, column) = self
                    .toks
                    .last()
                    .map(|t| (t.line, t.column))
                    .unwrap_or((1, 1));
                ParseError { line, column, kind }
            }
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn is_bound(&self, id: &str) -> bool {
        self.bindings.iter().any(|(v, _)| v == id)
    }

    /// Parse one `( var / concept relation* )` node; returns the variable.
    fn parse_node(&mut self) -> Result<String, ParseError> {
        match self.next() {
            Some(Spanned { tok: Tok::Open, .. }) => {}
            Some(s) => {
                return Err(ParseError {
                    line: s.line,
                    column: s.column,
                    kind: if s.tok == Tok::Close {
                        ParseErrorKind::UnbalancedClose
                    } else {
                        ParseErrorKind::Unexpected {
                            expected: "`(`",
                            found: s.tok.describe(),
                        }
                    },
                })
            }
            None => return Err(self.err_here(ParseErrorKind::UnbalancedOpen)),
        }
        let var = match self.next() {
            Some(Spanned { tok: Tok::Sym(v), line, column }) => {
                if self.is_bound(&v) {
                    return Err(ParseError {
                        line,
                        column,
                        kind: ParseErrorKind::DuplicateVariable(v),
                    });
                }
                v
            }
            Some(s) => {
                return Err(ParseError {
                    line: s.line,
                    column: s.column,
                    kind: ParseErrorKind::Unexpected {
                        expected: "a variable",
                        found: s.tok.describe(),
                    },
                })
            }
            None => return Err(self.err_here(ParseErrorKind::UnbalancedOpen)),
        };
        match self.next() {
            Some(Spanned { tok: Tok::Slash, .. }) => {}
            Some(s) => {
                return Err(ParseError {
                    line: s.line,
                    column: s.column,
                    kind: ParseErrorKind::Unexpected {
                        expected: "`/`",
                        found: s.tok.describe(),
                    },
                })
            }
            None => return Err(self.err_here(ParseErrorKind::UnbalancedOpen)),
        }
        let concept = match self.next() {
            Some(Spanned { tok: Tok::Sym(s), .. }) => s,
            Some(Spanned { tok: Tok::Str(s), .. }) => Constant::Text(s).to_string(),
            Some(s) => {
                return Err(ParseError {
                    line: s.line,
                    column: s.column,
                    kind: ParseErrorKind::Unexpected {
                        expected: "a concept",
                        found: s.tok.describe(),
                    },
                })
            }
            None => return Err(self.err_here(ParseErrorKind::UnbalancedOpen)),
        };
        self.bindings.push((var.clone(), concept));

        loop {
            match self.peek() {
                Some(Tok::Close) => {
                    self.pos += 1;
                    return Ok(var);
                }
                Some(Tok::Role(_)) => {
                    let role = match self.next() {
                        Some(Spanned { tok: Tok::Role(r), .. }) => normalize_role(&r),
                        _ => unreachable!(),
                    };
                    match self.peek() {
                        Some(Tok::Open) => {
                            // reserve the slot now so edges stay in
                            // source-text role order, not child-completion
                            // order
                            let slot = self.edges.len();
                            self.edges.push((var.clone(), role, String::new()));
                            let child = self.parse_node()?;
                            self.edges[slot].2 = child;
                        }
                        Some(Tok::Str(_)) => {
                            let s = match self.next() {
                                Some(Spanned { tok: Tok::Str(s), .. }) => s,
                                _ => unreachable!(),
                            };
                            self.attributes.push((var.clone(), role, Constant::Text(s)));
                        }
                        Some(Tok::Sym(_)) => {
                            let (s, line, column) = match self.next() {
                                Some(Spanned { tok: Tok::Sym(s), line, column }) => {
                                    (s, line, column)
                                }
                                _ => unreachable!(),
                            };
                            if self.is_bound(&s) {
                                self.edges.push((var.clone(), role, s));
                            } else {
                                if !is_number(&s) {
                                    self.unresolved.push((s.clone(), line, column));
                                }
                                self.attributes.push((
                                    var.clone(),
                                    role,
                                    Constant::Symbol(s),
                                ));
                            }
                        }
                        Some(_) => {
                            return Err(self.err_here(ParseErrorKind::Unexpected {
                                expected: "a value after the role",
                                found: self.peek().unwrap().describe(),
                            }))
                        }
                        None => return Err(self.err_here(ParseErrorKind::UnbalancedOpen)),
                    }
                }
                Some(_) => {
                    return Err(self.err_here(ParseErrorKind::Unexpected {
                        expected: "a role or `)`",
                        found: self.peek().unwrap().describe(),
                    }))
                }
                None => return Err(self.err_here(ParseErrorKind::UnbalancedOpen)),
            }
        }
    }
}

/// Parse a single PENMAN expression, optionally preceded by `# ::` metadata
/// lines (skipped here; see the `document` module for metadata capture).
pub fn parse_penman(text: &str) -> Result<AmrGraph, ParseError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(ParseError {
            line: 1,
            column: 1,
            kind: ParseErrorKind::EmptyInput,
        });
    }
    let mut p = Parser {
        toks,
        pos: 0,
        bindings: Vec::new(),
        edges: Vec::new(),
        attributes: Vec::new(),
        unresolved: Vec::new(),
    };
    let root = p.parse_node()?;
    if let Some(s) = p.toks.get(p.pos) {
        return Err(ParseError {
            line: s.line,
            column: s.column,
            kind: if s.tok == Tok::Close {
                ParseErrorKind::UnbalancedClose
            } else {
                ParseErrorKind::TrailingContent
            },
        });
    }
    // A bare token bound later in the text was a forward reference, not a
    // constant.
    for (name, line, column) in &p.unresolved {
        if p.is_bound(name) {
            return Err(ParseError {
                line: *line,
                column: *column,
                kind: ParseErrorKind::UndefinedVariable(name.clone()),
            });
        }
    }

    let mut bindings = p.bindings.into_iter();
    let (rv, rc) = bindings.next().expect("root binding");
    debug_assert_eq!(rv, root);
    let mut g = AmrGraph::new(rv, rc);
    for (v, c) in bindings {
        g.add_node(v, c).expect("duplicates rejected during parse");
    }
    for (s, r, t) in p.edges {
        g.add_edge(s, &r, t);
    }
    for (s, r, v) in p.attributes {
        g.add_attribute(s, &r, v);
    }
    Ok(g)
}

fn write_node(g: &AmrGraph, var: &Var, depth: usize, emitted: &mut Vec<Var>, out: &mut String) {
    emitted.push(var.clone());
    out.push('(');
    out.push_str(var.as_str());
    out.push_str(" / ");
    out.push_str(g.concept(var.as_str()).expect("validated"));
    let indent = |out: &mut String| {
        out.push('\n');
        for _ in 0..(depth + 1) * 4 {
            out.push(' ');
        }
    };
    for a in g.attributes().iter().filter(|a| a.source == *var) {
        indent(out);
        out.push(':');
        out.push_str(&a.role);
        out.push(' ');
        out.push_str(&a.value.to_string());
    }
    for e in g.edges().iter().filter(|e| e.source == *var) {
        indent(out);
        out.push(':');
        out.push_str(&e.role);
        out.push(' ');
        if emitted.contains(&e.target) {
            out.push_str(e.target.as_str());
        } else {
            write_node(g, &e.target, depth + 1, emitted, out);
        }
    }
    out.push(')');
}

/// Serialize a valid graph to canonical PENMAN text.
pub fn serialize_penman(g: &AmrGraph) -> Result<String, InvalidGraph> {
    let diags = g.validate();
    if !diags.is_empty() {
        return Err(InvalidGraph(diags));
    }
    let mut out = String::new();
    let mut emitted = Vec::new();
    write_node(g, g.root(), 0, &mut emitted, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const AMR1: &str = "(c / colonoscopy-01 :polarity -
      :arg1 (h / he)
      :arg2 (s2 / screen-01
            :arg1 h))";

    #[test]
    fn parses_a_negated_three_node_graph() {
        let g = parse_penman(AMR1).unwrap();
        assert_eq!(g.root().as_str(), "c");
        assert_eq!(g.concept("c"), Some("colonoscopy-01"));
        assert_eq!(g.concept("h"), Some("he"));
        assert_eq!(g.concept("s2"), Some("screen-01"));
        let edges: Vec<(&str, &str, &str)> = g
            .edges()
            .iter()
            .map(|e| (e.source.as_str(), e.role.as_str(), e.target.as_str()))
            .collect();
        assert_eq!(
            edges,
            vec![("c", "arg1", "h"), ("c", "arg2", "s2"), ("s2", "arg1", "h")]
        );
        assert_eq!(g.attributes().len(), 1);
        let a = &g.attributes()[0];
        assert_eq!(
            (a.source.as_str(), a.role.as_str(), a.value.content()),
            ("c", "polarity", "-")
        );
    }

    #[test]
    fn minimal_graph() {
        let g = parse_penman("(h / he)").unwrap();
        assert_eq!(g.root().as_str(), "h");
        assert_eq!(g.var_count(), 1);
        assert!(g.edges().is_empty());
        assert!(g.attributes().is_empty());
    }

    #[test]
    fn duplicate_variable_definition_is_an_error() {
        let err = parse_penman("(a / alpha :mod (a / alpha))").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DuplicateVariable("a".into()));
        assert_eq!(err.line, 1);
    }

    #[test]
    fn unbalanced_parens() {
        let err = parse_penman("(a / alpha").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnbalancedOpen);
        let err = parse_penman("(a / alpha))").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnbalancedClose);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(parse_penman("").unwrap_err().kind, ParseErrorKind::EmptyInput);
        assert_eq!(
            parse_penman("# ::id x\n# ::snt y\n").unwrap_err().kind,
            ParseErrorKind::EmptyInput
        );
    }

    #[test]
    fn forward_reference_is_an_error() {
        let err = parse_penman("(a / alpha :mod b :arg0 (b / beta))").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UndefinedVariable("b".into()));
        assert_eq!((err.line, err.column), (1, 17));
    }

    #[test]
    fn unbound_tokens_and_numbers_are_constants() {
        let g = parse_penman("(h / height :quant 167.60 :unit cm)").unwrap();
        assert_eq!(g.var_count(), 1);
        assert_eq!(g.attributes().len(), 2);
        assert_eq!(g.attributes()[0].value, Constant::symbol("167.60"));
        assert_eq!(g.attributes()[1].value, Constant::symbol("cm"));
    }

    #[test]
    fn bound_tokens_are_reentrant_references() {
        let g = parse_penman(AMR1).unwrap();
        assert_eq!(g.edges()[2].target.as_str(), "h");
        assert_eq!(g.reentrant_var_count(), 1);
    }

    #[test]
    fn metadata_lines_are_skipped() {
        let g = parse_penman("# ::id d1\n# ::snt He left.\n(l / leave-01)").unwrap();
        assert_eq!(g.root().as_str(), "l");
    }

    #[test]
    fn uppercase_roles_normalize() {
        let g = parse_penman("(d / decline-02 :ARG1 (s / shot-13 :implicit +))").unwrap();
        assert_eq!(g.edges()[0].role, "arg1");
        let a = &g.attributes()[0];
        assert_eq!((a.role.as_str(), a.value.content()), ("implicit", "+"));
    }

    #[test]
    fn quoted_strings_keep_quoting_through_round_trip() {
        let text = "(n / name :op1 \"tetanus\")";
        let g = parse_penman(text).unwrap();
        assert_eq!(g.attributes()[0].value, Constant::text("tetanus"));
        let out = serialize_penman(&g).unwrap();
        assert!(out.contains("\"tetanus\""), "{out}");
        assert_eq!(parse_penman(&out).unwrap(), g);
    }

    #[test]
    fn serialize_round_trips_the_sample_graph() {
        let g = parse_penman(AMR1).unwrap();
        let text = serialize_penman(&g).unwrap();
        assert_eq!(parse_penman(&text).unwrap(), g);
    }

    #[test]
    fn serialize_fixed_point_for_minimal_graph() {
        let g = parse_penman("(h / he)").unwrap();
        assert_eq!(serialize_penman(&g).unwrap(), "(h / he)");
    }

    #[test]
    fn reentrant_mention_serializes_as_bare_variable() {
        let g = parse_penman(AMR1).unwrap();
        let text = serialize_penman(&g).unwrap();
        assert_eq!(text.matches("(h / he)").count(), 1);
        assert!(text.contains(":arg1 h"), "{text}");
    }

    #[test]
    fn serialize_rejects_invalid_graphs() {
        let mut g = parse_penman(AMR1).unwrap();
        g.add_edge("h", "mod", "c");
        let err = serialize_penman(&g).unwrap_err();
        assert!(err.to_string().contains("cycle"), "{err}");
    }

    #[test]
    fn canonicalization_is_idempotent() {
        let once = serialize_penman(&parse_penman(AMR1).unwrap()).unwrap();
        let twice = serialize_penman(&parse_penman(&once).unwrap()).unwrap();
        assert_eq!(once, twice);
    }
}
