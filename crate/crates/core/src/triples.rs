//! Decomposition of a graph into its edge-list triple representation:
//! one `instance(var, concept)` triple per node, one `role(var, constant)`
//! triple per attribute, one `role(var, var)` triple per edge.

use std::collections::BTreeSet;
use std::fmt;

use crate::graph::{AmrGraph, InvalidGraph, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TripleKind {
    Instance,
    Attribute,
    Relation,
}

/// One fact of the edge-list representation. `target` is a concept label
/// for instance triples, a constant value (quotes trimmed) for attribute
/// triples, and a variable id for relation triples.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub kind: TripleKind,
    pub role: String,
    pub source: Var,
    pub target: String,
}

impl Triple {
    pub fn instance(source: impl Into<Var>, concept: impl Into<String>) -> Self {
        Triple {
            kind: TripleKind::Instance,
            role: "instance".to_owned(),
            source: source.into(),
            target: concept.into(),
        }
    }

    pub fn attribute(
        source: impl Into<Var>,
        role: impl Into<String>,
        value: impl Into<String>,
    ) -> Self {
        Triple {
            kind: TripleKind::Attribute,
            role: role.into(),
            source: source.into(),
            target: value.into(),
        }
    }

    pub fn relation(
        source: impl Into<Var>,
        role: impl Into<String>,
        target: impl Into<Var>,
    ) -> Self {
        Triple {
            kind: TripleKind::Relation,
            role: role.into(),
            source: source.into(),
            target: target.into().as_str().to_owned(),
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.role, self.source, self.target)
    }
}

/// The full decomposition of one graph: instance triples first (traversal
/// order), then attribute triples, then relation triples (stored order).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TripleSet {
    triples: Vec<Triple>,
    variables: BTreeSet<Var>,
}

impl TripleSet {
    /// Build a set from raw triples, collecting the variables they touch.
    pub fn from_triples(triples: Vec<Triple>) -> Self {
        let mut variables = BTreeSet::new();
        for t in &triples {
            variables.insert(t.source.clone());
            if t.kind == TripleKind::Relation {
                variables.insert(Var::new(t.target.clone()));
            }
        }
        TripleSet { triples, variables }
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn variables(&self) -> &BTreeSet<Var> {
        &self.variables
    }

    pub fn var_count(&self) -> usize {
        self.variables.len()
    }

    /// Variables of instance triples in stored (traversal) order.
    pub fn instance_order(&self) -> impl Iterator<Item = &Var> {
        self.triples
            .iter()
            .filter(|t| t.kind == TripleKind::Instance)
            .map(|t| &t.source)
    }

    /// Concept bound to `var`, when the set carries its instance triple.
    pub fn concept_of(&self, var: &str) -> Option<&str> {
        self.triples
            .iter()
            .find(|t| t.kind == TripleKind::Instance && t.source.as_str() == var)
            .map(|t| t.target.as_str())
    }
}

impl fmt::Display for TripleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.triples {
            writeln!(f, "{t}")?;
        }
        Ok(())
    }
}

/// Decompose a valid graph into its triples.
pub fn decompose(g: &AmrGraph) -> Result<TripleSet, InvalidGraph> {
    decompose_with(g, false)
}

/// Decompose, optionally appending the `top(root, root-concept)` attribute
/// triple some scorers expect.
pub fn decompose_with(g: &AmrGraph, top_triple: bool) -> Result<TripleSet, InvalidGraph> {
    let diags = g.validate();
    if !diags.is_empty() {
        return Err(InvalidGraph(diags));
    }
    let mut triples = Vec::with_capacity(
        g.var_count() + g.attributes().len() + g.edges().len() + usize::from(top_triple),
    );
    for v in g.traversal_order() {
        let concept = g.concept(v.as_str()).expect("validated").to_owned();
        triples.push(Triple::instance(v, concept));
    }
    for a in g.attributes() {
        triples.push(Triple::attribute(
            a.source.clone(),
            a.role.clone(),
            a.value.content(),
        ));
    }
    if top_triple {
        let root_concept = g.concept(g.root().as_str()).expect("validated").to_owned();
        triples.push(Triple::attribute(g.root().clone(), "top", root_concept));
    }
    for e in g.edges() {
        triples.push(Triple::relation(e.source.clone(), e.role.clone(), e.target.clone()));
    }
    Ok(TripleSet::from_triples(triples))
}
