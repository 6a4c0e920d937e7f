//! Triple-overlap scoring between two graphs under a variable alignment:
//! exhaustive optimal alignment for small graphs, hill-climbing with
//! restarts beyond that, and precision/recall/F1 reporting for pairs and
//! corpora.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::document::CorpusDocument;
use crate::graph::{AmrGraph, InvalidGraph, Var};
use crate::rng::{derive_seed, SplitMix64};
use crate::triples::{decompose_with, Triple, TripleKind, TripleSet};

pub const DEFAULT_RESTARTS: usize = 4;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_EXACT_CAP: usize = 8;

/// A partial injective mapping from the variables of graph A to the
/// variables of graph B.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alignment {
    forward: std::collections::BTreeMap<Var, Var>,
    used: BTreeSet<Var>,
}

impl Alignment {
    pub fn new() -> Self {
        Alignment::default()
    }

    /// Map `a` to `b`. Returns `false` (and changes nothing) when `a` is
    /// already mapped or `b` is already used — injectivity is preserved by
    /// construction.
    pub fn insert(&mut self, a: Var, b: Var) -> bool {
        if self.forward.contains_key(&a) || self.used.contains(&b) {
            return false;
        }
        self.used.insert(b.clone());
        self.forward.insert(a, b);
        true
    }

    pub fn remove(&mut self, a: &str) -> Option<Var> {
        let b = self.forward.remove(a)?;
        self.used.remove(&b);
        Some(b)
    }

    pub fn get(&self, a: &str) -> Option<&Var> {
        self.forward.get(a)
    }

    pub fn target_used(&self, b: &str) -> bool {
        self.used.contains(b)
    }

    /// The A-variable currently mapped to `b`, if any.
    pub fn source_of(&self, b: &str) -> Option<&Var> {
        self.forward
            .iter()
            .find(|(_, t)| t.as_str() == b)
            .map(|(s, _)| s)
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// Mapped pairs sorted by A-variable.
    pub fn pairs(&self) -> impl Iterator<Item = (&Var, &Var)> {
        self.forward.iter()
    }

    fn pair_vec(&self) -> Vec<(&Var, &Var)> {
        self.forward.iter().collect()
    }
}

/// Counts plus the derived precision/recall/F1 ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Score {
    pub n_correct: u64,
    pub n_predicted: u64,
    pub n_reference: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Score {
    pub fn from_counts(n_correct: u64, n_predicted: u64, n_reference: u64) -> Self {
        debug_assert!(n_correct <= n_predicted.min(n_reference));
        let precision = if n_predicted == 0 {
            0.0
        } else {
            n_correct as f64 / n_predicted as f64
        };
        let recall = if n_reference == 0 {
            0.0
        } else {
            n_correct as f64 / n_reference as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Score {
            n_correct,
            n_predicted,
            n_reference,
            precision,
            recall,
            f1,
        }
    }

    /// The convention for two empty derived triple sets: agreeing on the
    /// absence of a phenomenon is perfect agreement.
    pub fn empty_agreement() -> Self {
        Score {
            n_correct: 0,
            n_predicted: 0,
            n_reference: 0,
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SmatchConfig {
    pub restarts: usize,
    pub seed: u64,
    /// The exact aligner engages when both graphs have at most this many
    /// variables; 0 forces hill-climbing everywhere.
    pub exact_cap: usize,
    /// Append the `top(root, concept)` triple during decomposition.
    pub top_triple: bool,
}

impl Default for SmatchConfig {
    fn default() -> Self {
        SmatchConfig {
            restarts: DEFAULT_RESTARTS,
            seed: DEFAULT_SEED,
            exact_cap: DEFAULT_EXACT_CAP,
            top_triple: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignError {
    #[error("graphs exceed the exact-alignment cap: min side has {vars} variables, cap is {cap}")]
    CapExceeded { vars: usize, cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("corpora differ in length: {predicted} predicted vs {reference} reference")]
    LengthMismatch { predicted: usize, reference: usize },
    #[error("document id mismatch at position {index}: `{predicted}` vs `{reference}`")]
    IdMismatch {
        index: usize,
        predicted: String,
        reference: String,
    },
    #[error("document `{id}`: {source}")]
    Invalid { id: String, source: InvalidGraph },
}

type Key<'a> = (TripleKind, &'a str, &'a str, &'a str);

fn key(t: &Triple) -> Key<'_> {
    (t.kind, &t.role, t.source.as_str(), &t.target)
}

/// Precomputed multiset index over the reference side, so repeated
/// evaluations during search do not rebuild it.
struct Matcher<'a> {
    a: &'a TripleSet,
    b_index: HashMap<Key<'a>, u32>,
}

impl<'a> Matcher<'a> {
    fn new(a: &'a TripleSet, b: &'a TripleSet) -> Self {
        let mut b_index: HashMap<Key<'a>, u32> = HashMap::new();
        for t in b.triples() {
            *b_index.entry(key(t)).or_insert(0) += 1;
        }
        Matcher { a, b_index }
    }

    /// Number of A-triples that, after substituting variables through `m`,
    /// appear in B (multiset semantics: each B-triple matches at most
    /// once).
    fn count(&self, m: &Alignment) -> usize {
        let mut avail = self.b_index.clone();
        let mut matched = 0usize;
        for t in self.a.triples() {
            let Some(src) = m.get(t.source.as_str()) else {
                continue;
            };
            let target: &str = match t.kind {
                TripleKind::Relation => match m.get(&t.target) {
                    Some(v) => v.as_str(),
                    None => continue,
                },
                TripleKind::Instance | TripleKind::Attribute => &t.target,
            };
            if let Some(n) = avail.get_mut(&(t.kind, t.role.as_str(), src.as_str(), target)) {
                if *n > 0 {
                    *n -= 1;
                    matched += 1;
                }
            }
        }
        matched
    }
}

/// Triples of `a` that appear in `b` after substituting variables through
/// `m`.
pub fn matched_count(a: &TripleSet, b: &TripleSet, m: &Alignment) -> usize {
    Matcher::new(a, b).count(m)
}

/// The alignment maximizing [`matched_count`], by exhaustive enumeration of
/// injective mappings from the smaller variable set into the larger. Ties
/// break to the lexicographically smallest mapping by sorted variable-pair
/// list.
pub fn align_exact(
    a: &TripleSet,
    b: &TripleSet,
    cap: usize,
) -> Result<(Alignment, usize), AlignError> {
    let small = a.var_count().min(b.var_count());
    if small > cap {
        return Err(AlignError::CapExceeded { vars: small, cap });
    }
    let a_vars: Vec<&Var> = a.variables().iter().collect();
    let b_vars: Vec<&Var> = b.variables().iter().collect();
    let a_is_small = a_vars.len() <= b_vars.len();
    let (from, to) = if a_is_small {
        (&a_vars, &b_vars)
    } else {
        (&b_vars, &a_vars)
    };
    let matcher = Matcher::new(a, b);
    let mut best: Option<(usize, Alignment)> = None;
    let mut taken = vec![false; to.len()];
    let mut assignment: Vec<usize> = Vec::with_capacity(from.len());

    fn recurse(
        from: &[&Var],
        to: &[&Var],
        a_is_small: bool,
        taken: &mut Vec<bool>,
        assignment: &mut Vec<usize>,
        matcher: &Matcher<'_>,
        best: &mut Option<(usize, Alignment)>,
    ) {
        if assignment.len() == from.len() {
            let mut m = Alignment::new();
            for (i, &j) in assignment.iter().enumerate() {
                let (av, bv) = if a_is_small {
                    (from[i], to[j])
                } else {
                    (to[j], from[i])
                };
                let ok = m.insert(av.clone(), bv.clone());
                debug_assert!(ok);
            }
            let count = matcher.count(&m);
            let better = match best {
                None => true,
                Some((bc, bm)) => count > *bc || (count == *bc && m.pair_vec() < bm.pair_vec()),
            };
            if better {
                *best = Some((count, m));
            }
            return;
        }
        for j in 0..to.len() {
            if !taken[j] {
                taken[j] = true;
                assignment.push(j);
                recurse(from, to, a_is_small, taken, assignment, matcher, best);
                assignment.pop();
                taken[j] = false;
            }
        }
    }

    recurse(
        from,
        to,
        a_is_small,
        &mut taken,
        &mut assignment,
        &matcher,
        &mut best,
    );
    let (count, alignment) = best.expect("at least the empty assignment is enumerated");
    Ok((alignment, count))
}

fn concept_seeded_start(a: &TripleSet, b: &TripleSet) -> Alignment {
    let mut m = Alignment::new();
    for av in a.instance_order() {
        let Some(ac) = a.concept_of(av.as_str()) else {
            continue;
        };
        for bv in b.instance_order() {
            if m.target_used(bv.as_str()) {
                continue;
            }
            if b.concept_of(bv.as_str()) == Some(ac) {
                m.insert(av.clone(), bv.clone());
                break;
            }
        }
    }
    m
}

fn random_start(a: &TripleSet, b: &TripleSet, rng: &mut SplitMix64) -> Alignment {
    let a_vars: Vec<&Var> = a.variables().iter().collect();
    let mut pool: Vec<&Var> = b.variables().iter().collect();
    let mut m = Alignment::new();
    for av in a_vars {
        if pool.is_empty() {
            break;
        }
        let j = rng.next_index(pool.len());
        let bv = pool.swap_remove(j);
        m.insert(av.clone(), bv.clone());
    }
    m
}

/// One hill climb: repeatedly apply the single remap/swap move that most
/// increases the matched count, until no move improves. Moves are scanned
/// in sorted variable order and ties keep the first candidate, so the
/// climb is deterministic.
fn climb(matcher: &Matcher<'_>, b: &TripleSet, mut m: Alignment) -> (Alignment, usize) {
    let a_vars: Vec<Var> = matcher.a.variables().iter().cloned().collect();
    let b_vars: Vec<Var> = b.variables().iter().cloned().collect();
    let mut current = matcher.count(&m);
    loop {
        let mut best_gain = 0isize;
        let mut best: Option<Alignment> = None;
        for av in &a_vars {
            // unmapping is a legal move; scanned before the remap targets
            if m.get(av.as_str()).is_some() {
                let mut cand = m.clone();
                cand.remove(av.as_str());
                let gain = matcher.count(&cand) as isize - current as isize;
                if gain > best_gain {
                    best_gain = gain;
                    best = Some(cand);
                }
            }
            for bv in &b_vars {
                if m.get(av.as_str()) == Some(bv) {
                    continue;
                }
                let mut cand = m.clone();
                let old = cand.remove(av.as_str());
                if let Some(owner) = cand.source_of(bv.as_str()).cloned() {
                    // swap: the current owner of bv takes av's old target
                    cand.remove(owner.as_str());
                    if let Some(old_b) = old {
                        cand.insert(owner, old_b);
                    }
                }
                cand.insert(av.clone(), bv.clone());
                let gain = matcher.count(&cand) as isize - current as isize;
                if gain > best_gain {
                    best_gain = gain;
                    best = Some(cand);
                }
            }
        }
        match best {
            Some(next) => {
                let next_count = matcher.count(&next);
                assert!(next_count >= current, "hill climb must be monotone");
                current = next_count;
                m = next;
            }
            None => return (m, current),
        }
    }
}

/// Hill-climbing alignment with restarts. Restart 0 starts from the
/// concept-matching initialization; later restarts start from seeded-random
/// mappings. Deterministic given `(a, b, restarts, seed)`.
pub fn align_greedy(
    a: &TripleSet,
    b: &TripleSet,
    restarts: usize,
    seed: u64,
) -> (Alignment, usize) {
    assert!(restarts >= 1, "restarts must be at least 1");
    let matcher = Matcher::new(a, b);
    let mut best: Option<(Alignment, usize)> = None;
    for r in 0..restarts {
        let start = if r == 0 {
            concept_seeded_start(a, b)
        } else {
            let mut rng = SplitMix64::new(derive_seed(seed, &format!("greedy-restart:{r}")));
            random_start(a, b, &mut rng)
        };
        let (m, count) = climb(&matcher, b, start);
        match &best {
            Some((_, bc)) if *bc >= count => {}
            _ => best = Some((m, count)),
        }
    }
    best.expect("restarts >= 1")
}

/// Align two triple sets per the config: exact when both sides fit under
/// the cap, hill-climbing otherwise.
pub fn align_auto(
    a: &TripleSet,
    b: &TripleSet,
    seed: u64,
    config: &SmatchConfig,
) -> (Alignment, usize) {
    if a.var_count() <= config.exact_cap && b.var_count() <= config.exact_cap {
        align_exact(a, b, config.exact_cap).expect("both sides under cap")
    } else {
        align_greedy(a, b, config.restarts.max(1), seed)
    }
}

/// Score two derived triple sets (used by the fine-grained categories as
/// well as plain pair scoring).
pub fn score_triple_sets(
    predicted: &TripleSet,
    reference: &TripleSet,
    seed: u64,
    config: &SmatchConfig,
) -> Score {
    let (_, n_correct) = align_auto(predicted, reference, seed, config);
    Score::from_counts(
        n_correct as u64,
        predicted.len() as u64,
        reference.len() as u64,
    )
}

/// Score a predicted graph against a reference graph.
pub fn score_pair(
    predicted: &AmrGraph,
    reference: &AmrGraph,
    config: &SmatchConfig,
) -> Result<Score, InvalidGraph> {
    let p = decompose_with(predicted, config.top_triple)?;
    let r = decompose_with(reference, config.top_triple)?;
    Ok(score_triple_sets(&p, &r, config.seed, config))
}

/// Per-document counts reported alongside a corpus score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocScore {
    pub id: String,
    pub score: Score,
}

/// Micro-averaged corpus score: counts are summed over aligned pairs and
/// the ratios computed once. The per-pair RNG stream is derived from the
/// master seed and the document id, so scoring order cannot change any
/// result.
pub fn score_corpus(
    predicted: &[CorpusDocument],
    reference: &[CorpusDocument],
    config: &SmatchConfig,
) -> Result<(Score, Vec<DocScore>), ScoreError> {
    if predicted.is_empty() || reference.is_empty() {
        return Err(ScoreError::EmptyCorpus);
    }
    if predicted.len() != reference.len() {
        return Err(ScoreError::LengthMismatch {
            predicted: predicted.len(),
            reference: reference.len(),
        });
    }
    for (i, (p, r)) in predicted.iter().zip(reference).enumerate() {
        if p.id != r.id {
            return Err(ScoreError::IdMismatch {
                index: i,
                predicted: p.id.clone(),
                reference: r.id.clone(),
            });
        }
    }
    let mut docs = Vec::with_capacity(predicted.len());
    let (mut correct, mut pred_total, mut ref_total) = (0u64, 0u64, 0u64);
    for (p, r) in predicted.iter().zip(reference) {
        let pair_config = SmatchConfig {
            seed: derive_seed(config.seed, &p.id),
            ..*config
        };
        let score =
            score_pair(&p.graph, &r.graph, &pair_config).map_err(|source| ScoreError::Invalid {
                id: p.id.clone(),
                source,
            })?;
        correct += score.n_correct;
        pred_total += score.n_predicted;
        ref_total += score.n_reference;
        docs.push(DocScore {
            id: p.id.clone(),
            score,
        });
    }
    Ok((Score::from_counts(correct, pred_total, ref_total), docs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::read_corpus_str;
    use crate::penman::parse_penman;
    use crate::triples::decompose;

    const AMR1: &str = "(c / colonoscopy-01 :polarity -
      :arg1 (h / he)
      :arg2 (s2 / screen-01
            :arg1 h))";

    const AMR2: &str = "(c1 / colonoscopy-01 :polarity -
      :arg1 (s / she)
      :arg2 (s2 / screen-01
            :arg1 s))";

    fn ts(text: &str) -> TripleSet {
        decompose(&parse_penman(text).unwrap()).unwrap()
    }

    fn best_hand_alignment() -> Alignment {
        let mut m = Alignment::new();
        assert!(m.insert(Var::new("c"), Var::new("c1")));
        assert!(m.insert(Var::new("h"), Var::new("s")));
        assert!(m.insert(Var::new("s2"), Var::new("s2")));
        m
    }

    #[test]
    fn matched_count_on_the_worked_pair() {
        // Hand-substituting the two decompositions under
        // {c->c1, h->s, s2->s2}: everything matches except
        // instance(h, he) vs instance(s, she).
        assert_eq!(matched_count(&ts(AMR1), &ts(AMR2), &best_hand_alignment()), 6);
    }

    #[test]
    fn matched_count_identity_and_empty() {
        let a = ts(AMR1);
        let mut ident = Alignment::new();
        for v in a.variables() {
            ident.insert(v.clone(), v.clone());
        }
        assert_eq!(matched_count(&a, &a, &ident), 7);
        assert_eq!(matched_count(&a, &ts(AMR2), &Alignment::new()), 0);
    }

    #[test]
    fn align_exact_finds_the_known_optimum() {
        let (m, count) = align_exact(&ts(AMR1), &ts(AMR2), 8).unwrap();
        assert_eq!(count, 6);
        assert_eq!(m, best_hand_alignment());
    }

    #[test]
    fn align_exact_self_is_perfect() {
        let a = ts(AMR1);
        let (m, count) = align_exact(&a, &a, 8).unwrap();
        assert_eq!(count, a.len());
        for (x, y) in m.pairs() {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn align_exact_disjoint_concepts_score_zero() {
        let (_, count) = align_exact(&ts("(a / alpha)"), &ts("(b / beta)"), 8).unwrap();
        assert_eq!(count, 0);
    }

    #[test]
    fn align_exact_respects_cap() {
        let err = align_exact(&ts(AMR1), &ts(AMR2), 2).unwrap_err();
        assert_eq!(err, AlignError::CapExceeded { vars: 3, cap: 2 });
    }

    #[test]
    fn greedy_reaches_the_exact_optimum_here() {
        let (_, count) = align_greedy(&ts(AMR1), &ts(AMR2), 4, 0);
        assert_eq!(count, 6);
    }

    #[test]
    fn greedy_self_score_from_concept_start() {
        let a = ts(AMR1);
        let (_, count) = align_greedy(&a, &a, 1, 123);
        assert_eq!(count, a.len());
    }

    #[test]
    fn greedy_is_deterministic() {
        let a = ts(AMR1);
        let b = ts(AMR2);
        let (m1, c1) = align_greedy(&a, &b, 4, 42);
        let (m2, c2) = align_greedy(&a, &b, 4, 42);
        assert_eq!((m1, c1), (m2, c2));
    }

    #[test]
    fn score_pair_counts_six_of_seven() {
        let pred = parse_penman(AMR2).unwrap();
        let reference = parse_penman(AMR1).unwrap();
        let s = score_pair(&pred, &reference, &SmatchConfig::default()).unwrap();
        assert_eq!((s.n_correct, s.n_predicted, s.n_reference), (6, 7, 7));
        assert!((s.precision - 6.0 / 7.0).abs() < 1e-12);
        assert!((s.recall - 6.0 / 7.0).abs() < 1e-12);
        assert!((s.f1 - 6.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn self_score_is_one() {
        let g = parse_penman(AMR1).unwrap();
        let s = score_pair(&g, &g, &SmatchConfig::default()).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn disjoint_graphs_score_zero() {
        let a = parse_penman("(a / alpha)").unwrap();
        let b = parse_penman("(b / beta)").unwrap();
        let s = score_pair(&a, &b, &SmatchConfig::default()).unwrap();
        assert_eq!(s.f1, 0.0);
    }

    #[test]
    fn numeric_constants_are_not_normalized() {
        // "167.60" and "167.6" are different attribute values
        let a = parse_penman("(h / height :quant 167.60)").unwrap();
        let b = parse_penman("(h / height :quant 167.6)").unwrap();
        let s = score_pair(&a, &b, &SmatchConfig::default()).unwrap();
        assert_eq!(s.n_correct, 1); // instance matches, the quant does not
        assert_eq!(s.n_predicted, 2);
    }

    #[test]
    fn score_from_counts_handles_zero_denominators() {
        let s = Score::from_counts(0, 0, 5);
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
        let s = Score::from_counts(0, 5, 0);
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn corpus_micro_average() {
        let pred = read_corpus_str(
            &format!("# ::id a\n{AMR2}\n\n# ::id b\n{AMR1}\n"),
            "pred",
        )
        .unwrap();
        let reference = read_corpus_str(
            &format!("# ::id a\n{AMR1}\n\n# ::id b\n{AMR1}\n"),
            "ref",
        )
        .unwrap();
        let (total, docs) = score_corpus(&pred, &reference, &SmatchConfig::default()).unwrap();
        assert_eq!(
            (total.n_correct, total.n_predicted, total.n_reference),
            (13, 14, 14)
        );
        assert!((total.f1 - 13.0 / 14.0).abs() < 1e-12);
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].score.n_correct, 6);
        assert_eq!(docs[1].score.n_correct, 7);
    }

    #[test]
    fn corpus_errors() {
        let docs = read_corpus_str("# ::id a\n(x / x-01)\n", "t").unwrap();
        assert_eq!(
            score_corpus(&[], &docs, &SmatchConfig::default()).unwrap_err(),
            ScoreError::EmptyCorpus
        );
        let renamed = read_corpus_str("# ::id zz\n(x / x-01)\n", "t").unwrap();
        assert!(matches!(
            score_corpus(&docs, &renamed, &SmatchConfig::default()).unwrap_err(),
            ScoreError::IdMismatch { index: 0, .. }
        ));
    }

    #[test]
    fn symmetry_under_exact_alignment() {
        let a = parse_penman(AMR1).unwrap();
        let b = parse_penman(AMR2).unwrap();
        let config = SmatchConfig::default();
        let ab = score_pair(&a, &b, &config).unwrap();
        let ba = score_pair(&b, &a, &config).unwrap();
        assert_eq!(ab.f1, ba.f1);
        assert_eq!(ab.precision, ba.recall);
        assert_eq!(ab.recall, ba.precision);
    }
}
