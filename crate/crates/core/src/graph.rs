//! The AMR graph data model: variables, concepts, role edges, constant
//! attributes, and structural validation.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// A variable identifier within one graph, e.g. `c` or `s2`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(String);

impl Var {
    pub fn new(id: impl Into<String>) -> Self {
        Var(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for Var {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var(s.to_owned())
    }
}

impl From<String> for Var {
    fn from(s: String) -> Self {
        Var(s)
    }
}

/// An attribute value: a quoted string literal or a bare token. Numbers and
/// signs (`-`, `+`, `167.60`) are bare tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Constant {
    /// Quoted in PENMAN text: `"tetanus"`. Stored without the quotes.
    Text(String),
    /// Bare token: `-`, `+`, `imperative`, `167.60`.
    Symbol(String),
}

impl Constant {
    pub fn text(s: impl Into<String>) -> Self {
        Constant::Text(s.into())
    }

    pub fn symbol(s: impl Into<String>) -> Self {
        Constant::Symbol(s.into())
    }

    /// The value with surrounding quotes trimmed away; comparisons during
    /// scoring use this, so `"tetanus"` and `tetanus` compare equal.
    pub fn content(&self) -> &str {
        match self {
            Constant::Text(s) | Constant::Symbol(s) => s,
        }
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Text(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    if c == '"' || c == '\\' {
                        write!(f, "\\{c}")?;
                    } else {
                        write!(f, "{c}")?;
                    }
                }
                f.write_str("\"")
            }
            Constant::Symbol(s) => f.write_str(s),
        }
    }
}

/// A role edge between two variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub source: Var,
    pub role: String,
    pub target: Var,
}

/// A constant-valued attribute of a variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub source: Var,
    pub role: String,
    pub value: Constant,
}

/// Normalize a role label: strip a leading `:`, lowercase.
///
/// Roles are compared case-insensitively and stored lowercase throughout.
pub fn normalize_role(role: &str) -> String {
    role.trim_start_matches(':').to_ascii_lowercase()
}

/// A rooted, directed, acyclic, labeled graph: one concept per variable,
/// role edges between variables, and constant attributes on variables.
///
/// Equality compares the root, the variable→concept map, and each
/// variable's edge list and attribute list in order. The interleaving of
/// different source variables inside the flat storage vectors is not
/// significant: it cannot be observed in PENMAN text, and two graphs that
/// differ only in it serialize identically.
#[derive(Debug, Clone)]
pub struct AmrGraph {
    root: Var,
    nodes: BTreeMap<Var, String>,
    edges: Vec<Edge>,
    attributes: Vec<Attribute>,
}

/// One structural violation found by [`AmrGraph::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    /// The root variable has no concept binding.
    MissingRoot { var: Var },
    /// An edge endpoint or attribute source is not a bound variable.
    DanglingReference { var: Var, role: String },
    /// A bound variable that cannot be reached from the root.
    Unreachable { var: Var },
    /// Edges form a directed cycle through these variables.
    Cycle { vars: Vec<Var> },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::MissingRoot { var } => {
                write!(f, "root variable `{var}` has no concept binding")
            }
            Diagnostic::DanglingReference { var, role } => {
                write!(f, "role `:{role}` references unbound variable `{var}`")
            }
            Diagnostic::Unreachable { var } => {
                write!(f, "variable `{var}` is not reachable from the root")
            }
            Diagnostic::Cycle { vars } => {
                write!(f, "edges form a cycle: ")?;
                for (i, v) in vars.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" -> ")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
        }
    }
}

/// A graph failed validation; carries every diagnostic found.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct InvalidGraph(pub Vec<Diagnostic>);

impl fmt::Display for InvalidGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("invalid graph: ")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("duplicate definition of variable `{0}`")]
    DuplicateVar(Var),
    #[error("unknown variable `{0}`")]
    UnknownVar(Var),
}

impl AmrGraph {
    /// Create a graph holding only its root node.
    pub fn new(root: impl Into<Var>, concept: impl Into<String>) -> Self {
        let root = root.into();
        let mut nodes = BTreeMap::new();
        nodes.insert(root.clone(), concept.into());
        AmrGraph {
            root,
            nodes,
            edges: Vec::new(),
            attributes: Vec::new(),
        }
    }

    pub fn root(&self) -> &Var {
        &self.root
    }

    pub fn concept(&self, var: &str) -> Option<&str> {
        self.nodes.get(var).map(String::as_str)
    }

    pub fn contains_var(&self, var: &str) -> bool {
        self.nodes.contains_key(var)
    }

    /// Variable→concept bindings in variable order.
    pub fn nodes(&self) -> impl Iterator<Item = (&Var, &str)> {
        self.nodes.iter().map(|(v, c)| (v, c.as_str()))
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.nodes.keys()
    }

    pub fn var_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn add_node(
        &mut self,
        var: impl Into<Var>,
        concept: impl Into<String>,
    ) -> Result<(), GraphError> {
        let var = var.into();
        if self.nodes.contains_key(&var) {
            return Err(GraphError::DuplicateVar(var));
        }
        self.nodes.insert(var, concept.into());
        Ok(())
    }

    pub fn add_edge(&mut self, source: impl Into<Var>, role: &str, target: impl Into<Var>) {
        self.edges.push(Edge {
            source: source.into(),
            role: normalize_role(role),
            target: target.into(),
        });
    }

    pub fn add_attribute(&mut self, source: impl Into<Var>, role: &str, value: Constant) {
        self.attributes.push(Attribute {
            source: source.into(),
            role: normalize_role(role),
            value,
        });
    }

    /// Splice `fragment` into this graph under `at` via `role`.
    ///
    /// The caller is responsible for renaming fragment variables first (see
    /// `templates::NeEntry::instantiate`); any collision aborts without
    /// modifying the graph.
    pub fn graft(&mut self, at: &str, role: &str, fragment: &AmrGraph) -> Result<(), GraphError> {
        if !self.nodes.contains_key(at) {
            return Err(GraphError::UnknownVar(Var::new(at)));
        }
        if let Some(v) = fragment.vars().find(|v| self.contains_var(v.as_str())) {
            return Err(GraphError::DuplicateVar(v.clone()));
        }
        for (v, c) in fragment.nodes() {
            self.nodes.insert(v.clone(), c.to_owned());
        }
        self.edges.extend(fragment.edges.iter().cloned());
        self.attributes.extend(fragment.attributes.iter().cloned());
        self.add_edge(Var::new(at), role, fragment.root.clone());
        Ok(())
    }

    /// Depth-first first-visit order from the root, following edges in
    /// stored order. Variables unreachable from the root (invalid graphs)
    /// are appended in variable order so the result always covers every
    /// node.
    pub fn traversal_order(&self) -> Vec<Var> {
        let mut children: BTreeMap<&str, Vec<&Var>> = BTreeMap::new();
        for e in &self.edges {
            children.entry(e.source.as_str()).or_default().push(&e.target);
        }
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut seen = BTreeSet::new();
        let mut stack = vec![&self.root];
        while let Some(v) = stack.pop() {
            if !self.nodes.contains_key(v.as_str()) || !seen.insert(v.clone()) {
                continue;
            }
            order.push(v.clone());
            if let Some(kids) = children.get(v.as_str()) {
                for t in kids.iter().rev() {
                    stack.push(t);
                }
            }
        }
        for v in self.nodes.keys() {
            if !seen.contains(v) {
                order.push(v.clone());
            }
        }
        order
    }

    /// Check every structural invariant; an empty result means the graph is
    /// valid.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if !self.nodes.contains_key(self.root.as_str()) {
            out.push(Diagnostic::MissingRoot {
                var: self.root.clone(),
            });
        }
        for e in &self.edges {
            for v in [&e.source, &e.target] {
                if !self.nodes.contains_key(v.as_str()) {
                    out.push(Diagnostic::DanglingReference {
                        var: v.clone(),
                        role: e.role.clone(),
                    });
                }
            }
        }
        for a in &self.attributes {
            if !self.nodes.contains_key(a.source.as_str()) {
                out.push(Diagnostic::DanglingReference {
                    var: a.source.clone(),
                    role: a.role.clone(),
                });
            }
        }
        let reached = self.reachable_from_root();
        for v in self.nodes.keys() {
            if !reached.contains(v) {
                out.push(Diagnostic::Unreachable { var: v.clone() });
            }
        }
        if let Some(cycle) = self.find_cycle() {
            out.push(Diagnostic::Cycle { vars: cycle });
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    fn reachable_from_root(&self) -> BTreeSet<Var> {
        let mut children: BTreeMap<&str, Vec<&Var>> = BTreeMap::new();
        for e in &self.edges {
            children.entry(e.source.as_str()).or_default().push(&e.target);
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![&self.root];
        while let Some(v) = stack.pop() {
            if !self.nodes.contains_key(v.as_str()) || !seen.insert(v.clone()) {
                continue;
            }
            if let Some(kids) = children.get(v.as_str()) {
                stack.extend(kids.iter().copied());
            }
        }
        seen
    }

    /// Find one directed cycle over the edges, if any, as the sequence of
    /// variables along it (first element repeated implicitly).
    fn find_cycle(&self) -> Option<Vec<Var>> {
        let mut children: BTreeMap<&str, Vec<&Var>> = BTreeMap::new();
        for e in &self.edges {
            if self.nodes.contains_key(e.source.as_str())
                && self.nodes.contains_key(e.target.as_str())
            {
                children.entry(e.source.as_str()).or_default().push(&e.target);
            }
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut color: BTreeMap<&Var, u8> = BTreeMap::new();
        let mut path: Vec<&Var> = Vec::new();

        fn dfs<'a>(
            v: &'a Var,
            children: &BTreeMap<&str, Vec<&'a Var>>,
            color: &mut BTreeMap<&'a Var, u8>,
            path: &mut Vec<&'a Var>,
        ) -> Option<Vec<Var>> {
            color.insert(v, 1);
            path.push(v);
            if let Some(kids) = children.get(v.as_str()) {
                for &t in kids {
                    match color.get(t).copied().unwrap_or(0) {
                        0 => {
                            if let Some(c) = dfs(t, children, color, path) {
                                return Some(c);
                            }
                        }
                        1 => {
                            let start = path.iter().position(|p| *p == t).unwrap();
                            return Some(path[start..].iter().map(|p| (*p).clone()).collect());
                        }
                        _ => {}
                    }
                }
            }
            path.pop();
            color.insert(v, 2);
            None
        }

        for v in self.nodes.keys() {
            if color.get(v).copied().unwrap_or(0) == 0 {
                if let Some(c) = dfs(v, &children, &mut color, &mut path) {
                    return Some(c);
                }
            }
        }
        None
    }

    fn grouped_edges(&self) -> BTreeMap<&str, Vec<(&str, &str)>> {
        let mut m: BTreeMap<&str, Vec<(&str, &str)>> = BTreeMap::new();
        for e in &self.edges {
            m.entry(e.source.as_str())
                .or_default()
                .push((e.role.as_str(), e.target.as_str()));
        }
        m
    }

    fn grouped_attributes(&self) -> BTreeMap<&str, Vec<(&str, &Constant)>> {
        let mut m: BTreeMap<&str, Vec<(&str, &Constant)>> = BTreeMap::new();
        for a in &self.attributes {
            m.entry(a.source.as_str())
                .or_default()
                .push((a.role.as_str(), &a.value));
        }
        m
    }

    /// Number of distinct variables referenced by more than one relation
    /// edge (in-degree ≥ 2), i.e. the reentrancies.
    pub fn reentrant_var_count(&self) -> usize {
        let mut indeg: BTreeMap<&str, usize> = BTreeMap::new();
        for e in &self.edges {
            *indeg.entry(e.target.as_str()).or_insert(0) += 1;
        }
        indeg.values().filter(|&&d| d >= 2).count()
    }
}

impl PartialEq for AmrGraph {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
            && self.nodes == other.nodes
            && self.grouped_edges() == other.grouped_edges()
            && self.grouped_attributes() == other.grouped_attributes()
    }
}

impl Eq for AmrGraph {}

#[cfg(test)]
mod tests {
    use super::*;

    fn amr1() -> AmrGraph {
        let mut g = AmrGraph::new("c", "colonoscopy-01");
        g.add_node("h", "he").unwrap();
        g.add_node("s2", "screen-01").unwrap();
        g.add_attribute("c", "polarity", Constant::symbol("-"));
        g.add_edge("c", "arg1", "h");
        g.add_edge("c", "arg2", "s2");
        g.add_edge("s2", "arg1", "h");
        g
    }

    #[test]
    fn valid_graph_has_no_diagnostics() {
        assert!(amr1().validate().is_empty());
    }

    #[test]
    fn cycle_is_reported() {
        let mut g = amr1();
        g.add_edge("h", "mod", "c"); // c -> h -> c
        let diags = g.validate();
        assert!(diags.iter().any(|d| matches!(d, Diagnostic::Cycle { .. })), "{diags:?}");
    }

    #[test]
    fn unreachable_node_is_reported() {
        let mut g = AmrGraph::new("a", "alpha");
        g.add_node("b", "beta").unwrap();
        let diags = g.validate();
        assert_eq!(
            diags,
            vec![Diagnostic::Unreachable { var: Var::new("b") }]
        );
    }

    #[test]
    fn dangling_reference_is_reported() {
        let mut g = AmrGraph::new("a", "alpha");
        g.add_edge("a", "mod", "zz");
        let diags = g.validate();
        assert!(diags
            .iter()
            .any(|d| matches!(d, Diagnostic::DanglingReference { var, .. } if var.as_str() == "zz")));
    }

    #[test]
    fn duplicate_var_rejected() {
        let mut g = AmrGraph::new("a", "alpha");
        assert_eq!(
            g.add_node("a", "alpha"),
            Err(GraphError::DuplicateVar(Var::new("a")))
        );
    }

    #[test]
    fn traversal_order_is_depth_first() {
        let order: Vec<String> = amr1()
            .traversal_order()
            .into_iter()
            .map(|v| v.as_str().to_owned())
            .collect();
        assert_eq!(order, ["c", "h", "s2"]);
    }

    #[test]
    fn roles_are_normalized() {
        let mut g = AmrGraph::new("a", "alpha");
        g.add_node("b", "beta").unwrap();
        g.add_edge("a", ":ARG0", "b");
        assert_eq!(g.edges()[0].role, "arg0");
    }

    #[test]
    fn equality_ignores_cross_source_interleaving() {
        let mut g1 = AmrGraph::new("a", "alpha");
        g1.add_node("b", "beta").unwrap();
        g1.add_node("c", "gamma").unwrap();
        g1.add_edge("a", "arg0", "b");
        g1.add_edge("b", "arg1", "c");
        let mut g2 = AmrGraph::new("a", "alpha");
        g2.add_node("c", "gamma").unwrap();
        g2.add_node("b", "beta").unwrap();
        g2.add_edge("b", "arg1", "c");
        g2.add_edge("a", "arg0", "b");
        assert_eq!(g1, g2);

        // ...but per-source order matters.
        let mut g3 = AmrGraph::new("a", "alpha");
        g3.add_node("b", "beta").unwrap();
        g3.add_node("c", "gamma").unwrap();
        g3.add_edge("a", "arg0", "b");
        g3.add_edge("a", "arg0", "c");
        let mut g4 = AmrGraph::new("a", "alpha");
        g4.add_node("b", "beta").unwrap();
        g4.add_node("c", "gamma").unwrap();
        g4.add_edge("a", "arg0", "c");
        g4.add_edge("a", "arg0", "b");
        assert_ne!(g3, g4);
    }

    #[test]
    fn reentrant_count() {
        assert_eq!(amr1().reentrant_var_count(), 1); // h has in-degree 2
    }

    #[test]
    fn graft_renames_nothing_and_rejects_collisions() {
        let mut host = AmrGraph::new("d", "decline-02");
        let frag = AmrGraph::new("s", "shot-13");
        host.graft("d", ":ARG1", &frag).unwrap();
        assert!(host.contains_var("s"));
        assert_eq!(host.edges().last().unwrap().role, "arg1");
        let frag2 = AmrGraph::new("s", "shot-13");
        assert!(host.graft("d", "arg2", &frag2).is_err());
    }
}
