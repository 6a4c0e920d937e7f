//! Fine-grained evaluation: derive category-specific triple sets from a
//! graph pair and re-score them, producing an eight-row report
//! (overall score plus seven focused categories).

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;

use crate::document::CorpusDocument;
use crate::graph::{AmrGraph, InvalidGraph, Var};
use crate::rng::derive_seed;
use crate::smatch::{score_triple_sets, Score, ScoreError, SmatchConfig};
use crate::triples::{decompose, Triple, TripleKind, TripleSet};

/// Clinical named-entity type concepts whose subgraphs count as named
/// entities in addition to anything bearing a `:name` edge.
pub const CLINICAL_NE_TYPES: [&str; 6] = [
    "anatomical-site",
    "clinical-attribute",
    "devices",
    "disease-disorder",
    "medications-drugs",
    "sign-symptom",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Smatch,
    Unlabeled,
    NoWsd,
    Concepts,
    NamedEntity,
    Negation,
    Reentrancy,
    Srl,
}

impl Category {
    pub const ALL: [Category; 8] = [
        Category::Smatch,
        Category::Unlabeled,
        Category::NoWsd,
        Category::Concepts,
        Category::NamedEntity,
        Category::Negation,
        Category::Reentrancy,
        Category::Srl,
    ];

    /// Row label in report output.
    pub fn label(self) -> &'static str {
        match self {
            Category::Smatch => "SMATCH",
            Category::Unlabeled => "Unlabeled",
            Category::NoWsd => "No WSD",
            Category::Concepts => "Concepts",
            Category::NamedEntity => "Named Ent.",
            Category::Negation => "Negation",
            Category::Reentrancy => "Reentrancies",
            Category::Srl => "SRL",
        }
    }

    /// Stable machine-readable key.
    pub fn key(self) -> &'static str {
        match self {
            Category::Smatch => "smatch",
            Category::Unlabeled => "unlabeled",
            Category::NoWsd => "no_wsd",
            Category::Concepts => "concepts",
            Category::NamedEntity => "named_entity",
            Category::Negation => "negation",
            Category::Reentrancy => "reentrancy",
            Category::Srl => "srl",
        }
    }

    pub fn from_key(key: &str) -> Option<Category> {
        Category::ALL.into_iter().find(|c| c.key() == key)
    }
}

fn sense_suffix() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"-[0-9]{2,3}$").unwrap())
}

fn srl_role() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^arg[0-9]+(-of)?$").unwrap())
}

/// Strip a trailing PropBank-style sense suffix: `see-09` → `see`.
pub fn strip_sense(concept: &str) -> String {
    sense_suffix().replace(concept, "").into_owned()
}

/// Derive the category-specific triple set of one graph.
pub fn derive(g: &AmrGraph, category: Category) -> Result<TripleSet, InvalidGraph> {
    derive_with(g, category, &[])
}

/// Like [`derive`], with extra named-entity type concepts extending
/// [`CLINICAL_NE_TYPES`] for the named-entity category.
pub fn derive_with(
    g: &AmrGraph,
    category: Category,
    extra_ne_types: &[String],
) -> Result<TripleSet, InvalidGraph> {
    let full = decompose(g)?;
    let kept: Vec<Triple> = match category {
        Category::Smatch => return Ok(full),
        Category::Unlabeled => full
            .triples()
            .iter()
            .map(|t| match t.kind {
                TripleKind::Instance => t.clone(),
                TripleKind::Attribute | TripleKind::Relation => {
                    let mut t = t.clone();
                    t.role = "rel".to_owned();
                    t
                }
            })
            .collect(),
        Category::NoWsd => full
            .triples()
            .iter()
            .map(|t| {
                if t.kind == TripleKind::Instance {
                    let mut t = t.clone();
                    t.target = strip_sense(&t.target);
                    t
                } else {
                    t.clone()
                }
            })
            .collect(),
        Category::Concepts => full
            .triples()
            .iter()
            .filter(|t| t.kind == TripleKind::Instance)
            .cloned()
            .collect(),
        Category::NamedEntity => {
            let mut roots: BTreeSet<&Var> = g
                .edges()
                .iter()
                .filter(|e| e.role == "name")
                .map(|e| &e.source)
                .collect();
            for (v, c) in g.nodes() {
                if CLINICAL_NE_TYPES.contains(&c)
                    || extra_ne_types.iter().any(|t| t == c)
                {
                    roots.insert(v);
                }
            }
            let closure: BTreeSet<&str> = downward_closure(g, &roots)
                .into_iter()
                .map(Var::as_str)
                .collect();
            full.triples()
                .iter()
                .filter(|t| closure.contains(t.source.as_str()))
                .cloned()
                .collect()
        }
        Category::Negation => {
            let negated: BTreeSet<&Var> = g
                .attributes()
                .iter()
                .filter(|a| a.role == "polarity" && a.value.content() == "-")
                .map(|a| &a.source)
                .collect();
            full.triples()
                .iter()
                .filter(|t| match t.kind {
                    TripleKind::Instance => negated.contains(&t.source),
                    TripleKind::Attribute => {
                        t.role == "polarity" && t.target == "-" && negated.contains(&t.source)
                    }
                    TripleKind::Relation => false,
                })
                .cloned()
                .collect()
        }
        Category::Reentrancy => {
            let mut indeg: std::collections::BTreeMap<&str, usize> =
                std::collections::BTreeMap::new();
            for e in g.edges() {
                *indeg.entry(e.target.as_str()).or_insert(0) += 1;
            }
            let reentrant: BTreeSet<&str> = indeg
                .iter()
                .filter(|(_, &d)| d >= 2)
                .map(|(v, _)| *v)
                .collect();
            full.triples()
                .iter()
                .filter(|t| match t.kind {
                    TripleKind::Instance | TripleKind::Attribute => {
                        reentrant.contains(t.source.as_str())
                    }
                    TripleKind::Relation => {
                        reentrant.contains(t.source.as_str())
                            || reentrant.contains(t.target.as_str())
                    }
                })
                .cloned()
                .collect()
        }
        Category::Srl => {
            let relations: Vec<&Triple> = full
                .triples()
                .iter()
                .filter(|t| t.kind == TripleKind::Relation && srl_role().is_match(&t.role))
                .collect();
            let mut endpoints: BTreeSet<&str> = BTreeSet::new();
            for t in &relations {
                endpoints.insert(t.source.as_str());
                endpoints.insert(t.target.as_str());
            }
            full.triples()
                .iter()
                .filter(|t| match t.kind {
                    TripleKind::Instance => endpoints.contains(t.source.as_str()),
                    TripleKind::Attribute => false,
                    TripleKind::Relation => srl_role().is_match(&t.role),
                })
                .cloned()
                .collect()
        }
    };
    Ok(TripleSet::from_triples(kept))
}

fn downward_closure<'a>(g: &'a AmrGraph, roots: &BTreeSet<&'a Var>) -> BTreeSet<&'a Var> {
    let mut seen: BTreeSet<&Var> = BTreeSet::new();
    let mut stack: Vec<&Var> = roots.iter().copied().collect();
    while let Some(v) = stack.pop() {
        if !seen.insert(v) {
            continue;
        }
        for e in g.edges() {
            if e.source == *v && !seen.contains(&e.target) {
                stack.push(&e.target);
            }
        }
    }
    seen
}

/// Apply one category's derivation identically to both sides of a pair.
pub fn transform(
    predicted: &AmrGraph,
    reference: &AmrGraph,
    category: Category,
) -> Result<(TripleSet, TripleSet), InvalidGraph> {
    Ok((derive(predicted, category)?, derive(reference, category)?))
}

/// Score one pair under one category. Two empty derived sets score 1.0
/// (agreement on absence); empty-vs-nonempty scores 0.0 through the plain
/// count formulas.
pub fn score_category(
    predicted: &AmrGraph,
    reference: &AmrGraph,
    category: Category,
    config: &SmatchConfig,
) -> Result<Score, InvalidGraph> {
    score_category_with(predicted, reference, category, config, &[])
}

pub fn score_category_with(
    predicted: &AmrGraph,
    reference: &AmrGraph,
    category: Category,
    config: &SmatchConfig,
    extra_ne_types: &[String],
) -> Result<Score, InvalidGraph> {
    let p = derive_with(predicted, category, extra_ne_types)?;
    let r = derive_with(reference, category, extra_ne_types)?;
    if p.is_empty() && r.is_empty() {
        return Ok(Score::empty_agreement());
    }
    Ok(score_triple_sets(&p, &r, config.seed, config))
}

/// Micro-averaged per-category scores over a corpus pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryReport {
    pub model_label: String,
    rows: Vec<(Category, Score)>,
}

impl CategoryReport {
    pub fn rows(&self) -> &[(Category, Score)] {
        &self.rows
    }

    pub fn score(&self, category: Category) -> Score {
        self.rows
            .iter()
            .find(|(c, _)| *c == category)
            .map(|(_, s)| *s)
            .expect("all categories present")
    }

    fn header_note() -> String {
        format!(
            "named_entity counts :name subgraphs plus clinical NE types: {}",
            CLINICAL_NE_TYPES.join(", ")
        )
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# model: {}", self.model_label);
        let _ = writeln!(out, "# {}", Self::header_note());
        let _ = writeln!(out, "category\tprecision\trecall\tf1");
        for (c, s) in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{:.4}\t{:.4}\t{:.4}",
                c.label(),
                s.precision,
                s.recall,
                s.f1
            );
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "| Sub-category | Precision | Recall | F1 |");
        let _ = writeln!(out, "|---|---|---|---|");
        for (c, s) in &self.rows {
            let _ = writeln!(
                out,
                "| {} | {:.4} | {:.4} | {:.4} |",
                c.label(),
                s.precision,
                s.recall,
                s.f1
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Model: {}. Note: {}", self.model_label, Self::header_note());
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|(c, s)| {
                serde_json::json!({
                    "category": c.key(),
                    "label": c.label(),
                    "n_correct": s.n_correct,
                    "n_predicted": s.n_predicted,
                    "n_reference": s.n_reference,
                    "precision": s.precision,
                    "recall": s.recall,
                    "f1": s.f1,
                })
            })
            .collect();
        let doc = serde_json::json!({
            "schema_version": 1,
            "model_label": self.model_label,
            "note": Self::header_note(),
            "rows": rows,
        });
        serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
    }
}

/// Build the eight-row report for aligned corpora.
pub fn report(
    predicted: &[CorpusDocument],
    reference: &[CorpusDocument],
    config: &SmatchConfig,
    model_label: &str,
) -> Result<CategoryReport, ScoreError> {
    report_with(predicted, reference, config, model_label, &[])
}

pub fn report_with(
    predicted: &[CorpusDocument],
    reference: &[CorpusDocument],
    config: &SmatchConfig,
    model_label: &str,
    extra_ne_types: &[String],
) -> Result<CategoryReport, ScoreError> {
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
    let mut rows = Vec::with_capacity(Category::ALL.len());
    for category in Category::ALL {
        let (mut correct, mut pred_total, mut ref_total) = (0u64, 0u64, 0u64);
        for (p, r) in predicted.iter().zip(reference) {
            let pair_config = SmatchConfig {
                seed: derive_seed(config.seed, &p.id),
                ..*config
            };
            let s = score_category_with(&p.graph, &r.graph, category, &pair_config, extra_ne_types)
                .map_err(|source| ScoreError::Invalid {
                    id: p.id.clone(),
                    source,
                })?;
            correct += s.n_correct;
            pred_total += s.n_predicted;
            ref_total += s.n_reference;
        }
        let total = if pred_total == 0 && ref_total == 0 {
            Score::empty_agreement()
        } else {
            Score::from_counts(correct, pred_total, ref_total)
        };
        rows.push((category, total));
    }
    Ok(CategoryReport {
        model_label: model_label.to_owned(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::read_corpus_str;
    use crate::penman::parse_penman;

    const AMR1: &str = "(c / colonoscopy-01 :polarity -
      :arg1 (h / he)
      :arg2 (s2 / screen-01
            :arg1 h))";

    const AMR2: &str = "(c1 / colonoscopy-01 :polarity -
      :arg1 (s / she)
      :arg2 (s2 / screen-01
            :arg1 s))";

    fn g(text: &str) -> AmrGraph {
        parse_penman(text).unwrap()
    }

    #[test]
    fn smatch_category_is_the_identity_transform() {
        let a = g(AMR1);
        let (p, r) = transform(&a, &a, Category::Smatch).unwrap();
        assert_eq!(p, decompose(&a).unwrap());
        assert_eq!(r, decompose(&a).unwrap());
    }

    #[test]
    fn concepts_two_of_three_match() {
        // Only the instance triples remain; colonoscopy-01 and screen-01
        // match under the optimal mapping, he vs she does not.
        let s = score_category(&g(AMR1), &g(AMR2), Category::Concepts, &SmatchConfig::default())
            .unwrap();
        assert_eq!((s.n_correct, s.n_predicted, s.n_reference), (2, 3, 3));
        assert!((s.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn negation_matches_fully_on_the_pair() {
        let s = score_category(&g(AMR1), &g(AMR2), Category::Negation, &SmatchConfig::default())
            .unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn unlabeled_cannot_repair_a_concept_mismatch() {
        let s =
            score_category(&g(AMR2), &g(AMR1), Category::Unlabeled, &SmatchConfig::default())
                .unwrap();
        assert_eq!((s.n_correct, s.n_predicted, s.n_reference), (6, 7, 7));
    }

    #[test]
    fn no_wsd_strips_senses() {
        assert_eq!(strip_sense("see-09"), "see");
        assert_eq!(strip_sense("colonoscopy-01"), "colonoscopy");
        assert_eq!(strip_sense("want-100"), "want");
        assert_eq!(strip_sense("he"), "he");
        assert_eq!(strip_sense("x-1"), "x-1"); // one digit is not a sense
        assert_eq!(strip_sense("x-1234"), "x-1234"); // four digits is not a sense
        let ts = derive(&g("(s / see-09)"), Category::NoWsd).unwrap();
        assert_eq!(ts.triples()[0].target, "see");
    }

    #[test]
    fn no_wsd_repairs_a_sense_difference() {
        let a = g("(s / see-09 :arg0 (h / he))");
        let b = g("(s / see-01 :arg0 (h / he))");
        let config = SmatchConfig::default();
        let plain = score_category(&a, &b, Category::Smatch, &config).unwrap();
        let nowsd = score_category(&a, &b, Category::NoWsd, &config).unwrap();
        assert!(plain.f1 < 1.0);
        assert_eq!(nowsd.f1, 1.0);
    }

    #[test]
    fn named_entity_keeps_name_subgraphs_and_clinical_types() {
        let a = g("(d / disease-disorder :name (n / name :op1 \"tetanus\"))");
        let ts = derive(&a, Category::NamedEntity).unwrap();
        // d is both clinically typed and a :name bearer; everything is in
        // its subgraph.
        assert_eq!(ts.len(), 4);

        let plain = g("(s / see-09 :arg0 (h / he))");
        let ts = derive(&plain, Category::NamedEntity).unwrap();
        assert!(ts.is_empty());
    }

    #[test]
    fn reentrancy_keeps_triples_incident_to_shared_targets() {
        let ts = derive(&g(AMR1), Category::Reentrancy).unwrap();
        let rendered: Vec<String> = ts.triples().iter().map(|t| t.to_string()).collect();
        assert_eq!(
            rendered,
            vec!["instance(h, he)", "arg1(c, h)", "arg1(s2, h)"]
        );
    }

    #[test]
    fn srl_keeps_arg_relations_and_endpoint_instances() {
        let ts = derive(&g(AMR1), Category::Srl).unwrap();
        let rendered: Vec<String> = ts.triples().iter().map(|t| t.to_string()).collect();
        assert_eq!(
            rendered,
            vec![
                "instance(c, colonoscopy-01)",
                "instance(h, he)",
                "instance(s2, screen-01)",
                "arg1(c, h)",
                "arg2(c, s2)",
                "arg1(s2, h)",
            ]
        );
        // arg1-of also counts; mod does not
        let h = g("(b / boy :arg0-of (r / run-02) :mod (t / tall))");
        let ts = derive(&h, Category::Srl).unwrap();
        let roles: Vec<&str> = ts
            .triples()
            .iter()
            .filter(|t| t.kind == TripleKind::Relation)
            .map(|t| t.role.as_str())
            .collect();
        assert_eq!(roles, vec!["arg0-of"]);
    }

    #[test]
    fn negation_empty_vs_nonempty_scores_zero() {
        let without = g("(c / colonoscopy-01 :arg1 (h / he))");
        let s = score_category(&g(AMR1), &without, Category::Negation, &SmatchConfig::default())
            .unwrap();
        assert_eq!(s.f1, 0.0);
        let s = score_category(&without, &without, Category::Negation, &SmatchConfig::default())
            .unwrap();
        assert_eq!(s.f1, 1.0); // empty vs empty
    }

    #[test]
    fn every_category_scores_one_on_identical_graphs() {
        for text in [AMR1, AMR2, "(h / he)"] {
            let a = g(text);
            for c in Category::ALL {
                let s = score_category(&a, &a, c, &SmatchConfig::default()).unwrap();
                assert_eq!(s.f1, 1.0, "{c:?} on {text}");
            }
        }
    }

    #[test]
    fn transform_is_idempotent_for_relabelings() {
        // Re-deriving from an already-derived set is not expressible (the
        // derivations take graphs), so check the defining property
        // directly: applying the relabeling to an already-relabeled triple
        // list changes nothing.
        let ts = derive(&g(AMR1), Category::Unlabeled).unwrap();
        for t in ts.triples() {
            if t.kind != TripleKind::Instance {
                assert_eq!(t.role, "rel");
            }
        }
        let ts = derive(&g("(s / see-09)"), Category::NoWsd).unwrap();
        assert_eq!(strip_sense(&ts.triples()[0].target), ts.triples()[0].target);
    }

    #[test]
    fn report_has_eight_rows_and_self_scores_one() {
        let corpus = read_corpus_str(
            &format!("# ::id a\n{AMR1}\n\n# ::id b\n{AMR2}\n"),
            "t",
        )
        .unwrap();
        let rep = report(&corpus, &corpus, &SmatchConfig::default(), "self").unwrap();
        assert_eq!(rep.rows().len(), 8);
        for (c, s) in rep.rows() {
            assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0), "{c:?}");
        }
        let tsv = rep.to_tsv();
        let data_rows: Vec<&str> = tsv
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("category"))
            .collect();
        assert_eq!(data_rows.len(), 8);
        for row in data_rows {
            assert_eq!(row.split('\t').count(), 4); // label + 3 metrics
        }
    }

    #[test]
    fn single_pair_report_matches_pair_scoring() {
        let pred = read_corpus_str(&format!("# ::id a\n{AMR2}\n"), "p").unwrap();
        let refc = read_corpus_str(&format!("# ::id a\n{AMR1}\n"), "r").unwrap();
        let rep = report(&pred, &refc, &SmatchConfig::default(), "m").unwrap();
        let s = rep.score(Category::Smatch);
        assert_eq!((s.n_correct, s.n_predicted, s.n_reference), (6, 7, 7));
    }

    #[test]
    fn relaxation_dominance_on_the_worked_pair() {
        let config = SmatchConfig::default();
        let base = score_category(&g(AMR2), &g(AMR1), Category::Smatch, &config).unwrap();
        let unlabeled = score_category(&g(AMR2), &g(AMR1), Category::Unlabeled, &config).unwrap();
        let nowsd = score_category(&g(AMR2), &g(AMR1), Category::NoWsd, &config).unwrap();
        assert!(unlabeled.f1 >= base.f1);
        assert!(nowsd.f1 >= base.f1);
    }
}
