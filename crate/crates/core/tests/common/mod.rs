//! Deterministic random-graph construction shared by the property and
//! acceptance suites. Graphs are built constructively so every output is
//! valid: a spanning tree keeps them connected, and extra edges only run
//! from lower to higher node indices, which keeps them acyclic.

use amr_kit::graph::{AmrGraph, Constant, Var};
use amr_kit::rng::SplitMix64;

pub const CONCEPTS: [&str; 16] = [
    "see-01",
    "see-09",
    "go-02",
    "want-01",
    "colonoscopy-01",
    "screen-01",
    "decline-02",
    "he",
    "she",
    "boy",
    "dog",
    "name",
    "city",
    "thing",
    "anatomical-site",
    "disease-disorder",
];

pub const ROLES: [&str; 10] = [
    "arg0", "arg1", "arg2", "arg3", "mod", "time", "location", "name", "op1", "manner",
];

/// Build a random valid graph with 1..=max_nodes nodes.
pub fn random_graph(seed: u64, max_nodes: usize) -> AmrGraph {
    let mut rng = SplitMix64::new(seed);
    let n = 1 + rng.next_index(max_nodes);
    let var = |i: usize| format!("v{i}");
    let mut g = AmrGraph::new(var(0), CONCEPTS[rng.next_index(CONCEPTS.len())]);
    for i in 1..n {
        g.add_node(var(i), CONCEPTS[rng.next_index(CONCEPTS.len())])
            .unwrap();
        let parent = rng.next_index(i);
        g.add_edge(var(parent), ROLES[rng.next_index(ROLES.len())], var(i));
    }
    if n >= 2 {
        // extra forward edges create reentrancies without cycles
        for _ in 0..rng.next_index(n) {
            let s = rng.next_index(n - 1);
            let t = s + 1 + rng.next_index(n - 1 - s);
            g.add_edge(var(s), ROLES[rng.next_index(ROLES.len())], var(t));
        }
    }
    for _ in 0..rng.next_index(3) {
        let src = var(rng.next_index(n));
        match rng.next_index(4) {
            0 => g.add_attribute(src, "polarity", Constant::symbol("-")),
            1 => g.add_attribute(
                src,
                "quant",
                Constant::symbol(format!("{}", rng.next_below(1000))),
            ),
            2 => g.add_attribute(src, "mode", Constant::symbol("imperative")),
            _ => g.add_attribute(src, "op1", Constant::text("tetanus")),
        }
    }
    debug_assert!(g.validate().is_empty());
    g
}

/// Copy `g` with every variable renamed to `w<k>`, permuted by the seed.
pub fn rename_vars(g: &AmrGraph, seed: u64) -> AmrGraph {
    let mut rng = SplitMix64::new(seed);
    let vars: Vec<Var> = g.vars().cloned().collect();
    let mut order: Vec<usize> = (0..vars.len()).collect();
    amr_kit::rng::shuffle(&mut rng, &mut order);
    let renamed = |v: &Var| -> String {
        let idx = vars.iter().position(|x| x == v).unwrap();
        format!("w{}", order[idx])
    };
    let mut out = AmrGraph::new(
        renamed(g.root()),
        g.concept(g.root().as_str()).unwrap().to_owned(),
    );
    for (v, c) in g.nodes() {
        if v != g.root() {
            out.add_node(renamed(v), c).unwrap();
        }
    }
    for e in g.edges() {
        out.add_edge(renamed(&e.source), &e.role, renamed(&e.target));
    }
    for a in g.attributes() {
        out.add_attribute(renamed(&a.source), &a.role, a.value.clone());
    }
    out
}

/// Derive a related graph: rename every variable, then apply a few safe
/// edits (concept swaps, attribute changes, non-bridge edge drops). The
/// result is always valid.
pub fn mutate_graph(g: &AmrGraph, seed: u64) -> AmrGraph {
    let mut rng = SplitMix64::new(seed);
    rng.next_u64(); // keep the edit stream distinct from the rename stream
    let mut out = rename_vars(g, seed);
    for _ in 0..rng.next_index(3) {
        match rng.next_index(3) {
            0 => {
                // swap one concept
                let vs: Vec<Var> = out.vars().cloned().collect();
                let v = vs[rng.next_index(vs.len())].clone();
                let c = CONCEPTS[rng.next_index(CONCEPTS.len())];
                out = copy_graph(&out, |node| {
                    if *node == v {
                        Some(c.to_owned())
                    } else {
                        None
                    }
                }, usize::MAX);
            }
            1 => {
                // toggle a polarity attribute on a random node
                let vs: Vec<Var> = out.vars().cloned().collect();
                let v = vs[rng.next_index(vs.len())].clone();
                out.add_attribute(v, "polarity", Constant::symbol("-"));
            }
            _ => {
                // drop one edge when doing so keeps the graph valid
                if !out.edges().is_empty() {
                    let k = rng.next_index(out.edges().len());
                    let candidate = copy_graph(&out, |_| None, k);
                    if candidate.validate().is_empty() {
                        out = candidate;
                    }
                }
            }
        }
    }
    debug_assert!(out.validate().is_empty());
    out
}

/// Structural copy, optionally overriding concepts and skipping one edge.
fn copy_graph(
    g: &AmrGraph,
    concept_override: impl Fn(&Var) -> Option<String>,
    skip_edge: usize,
) -> AmrGraph {
    let concept_of = |v: &Var| -> String {
        concept_override(v).unwrap_or_else(|| g.concept(v.as_str()).unwrap().to_owned())
    };
    let mut out = AmrGraph::new(g.root().clone(), concept_of(g.root()));
    for (v, _) in g.nodes() {
        if v != g.root() {
            out.add_node(v.clone(), concept_of(v)).unwrap();
        }
    }
    for (i, e) in g.edges().iter().enumerate() {
        if i != skip_edge {
            out.add_edge(e.source.clone(), &e.role, e.target.clone());
        }
    }
    for a in g.attributes() {
        out.add_attribute(a.source.clone(), &a.role, a.value.clone());
    }
    out
}

/// A deterministic pair of related graphs for alignment tests.
pub fn random_pair(seed: u64, max_nodes: usize) -> (AmrGraph, AmrGraph) {
    let g = random_graph(seed, max_nodes);
    let h = mutate_graph(&g, seed ^ 0x9e37_79b9);
    (g, h)
}
