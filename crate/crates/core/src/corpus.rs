//! Corpus preparation for adaptation experiments: deterministic splits,
//! ratio-controlled mixing of two sources, learning-curve subsampling, and
//! pairwise inter-annotator agreement.
//!
//! Every operation draws from the portable generator in [`crate::rng`],
//! with a stream derived from the operation name and the caller's seed, so
//! repeated runs are byte-identical.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::document::CorpusDocument;
use crate::rng::{derive_seed, shuffle, SplitMix64};
use crate::smatch::{score_corpus, Score, ScoreError, SmatchConfig};

/// An ordered collection of documents with unique ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub name: String,
    documents: Vec<CorpusDocument>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusOpError {
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("split sizes sum to {got}, corpus holds {expected} documents")]
    SizesDontSum { expected: usize, got: usize },
    #[error("ratio parts must both be at least 1")]
    InvalidRatio,
    #[error("document id `{0}` appears in both mix sources")]
    OverlappingIds(String),
    #[error("not enough documents in the {side} source: need {need}, have {have}")]
    InsufficientDocuments {
        side: &'static str,
        need: usize,
        have: usize,
    },
    #[error("subsample sizes must be strictly ascending")]
    NonAscendingSizes,
    #[error("subsample size {size} exceeds the corpus size {len}")]
    SizeExceedsCorpus { size: usize, len: usize },
    #[error("inter-annotator agreement needs at least two annotation sets")]
    NeedTwoSets,
    #[error("annotation sets `{a}` and `{b}` cover different document ids")]
    IdSetsDiffer { a: String, b: String },
    #[error("scoring failed: {0}")]
    Score(#[from] ScoreError),
}

impl Corpus {
    pub fn new(
        name: impl Into<String>,
        documents: Vec<CorpusDocument>,
    ) -> Result<Self, CorpusOpError> {
        let mut seen = BTreeSet::new();
        for d in &documents {
            if !seen.insert(d.id.as_str()) {
                return Err(CorpusOpError::DuplicateId(d.id.clone()));
            }
        }
        Ok(Corpus {
            name: name.into(),
            documents,
        })
    }

    pub fn documents(&self) -> &[CorpusDocument] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.documents.iter().map(|d| d.id.as_str())
    }
}

/// Seeded shuffle, then contiguous partition into (train, dev, test).
pub fn split(
    corpus: &Corpus,
    sizes: (usize, usize, usize),
    seed: u64,
) -> Result<(Corpus, Corpus, Corpus), CorpusOpError> {
    let (train, dev, test) = sizes;
    let total = train + dev + test;
    if total != corpus.len() {
        return Err(CorpusOpError::SizesDontSum {
            expected: corpus.len(),
            got: total,
        });
    }
    let mut docs: Vec<CorpusDocument> = corpus.documents.clone();
    let mut rng = SplitMix64::new(derive_seed(seed, "split"));
    shuffle(&mut rng, &mut docs);
    let rest = docs.split_off(train);
    let (dev_docs, test_docs) = {
        let mut rest = rest;
        let test_docs = rest.split_off(dev);
        (rest, test_docs)
    };
    Ok((
        Corpus::new(format!("{}-train", corpus.name), docs)?,
        Corpus::new(format!("{}-dev", corpus.name), dev_docs)?,
        Corpus::new(format!("{}-test", corpus.name), test_docs)?,
    ))
}

/// Total size of a mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixTotal {
    Count(usize),
    /// Use every primary document; the secondary share is
    /// ⌈|primary| · s / p⌉.
    ExhaustPrimary,
}

/// A ratio-controlled interleaving of two sources.
#[derive(Debug, Clone)]
pub struct MixSpec<'a> {
    pub primary: &'a Corpus,
    pub secondary: &'a Corpus,
    /// (primary parts, secondary parts), both ≥ 1 — e.g. (12, 1).
    pub ratio: (usize, usize),
    pub total: MixTotal,
    pub seed: u64,
}

/// The source pattern for a mixture: `true` = primary. At every prefix
/// length n the primary count is round(n·p/(p+s)), which keeps the
/// deviation from the exact ratio below one document.
fn mix_pattern(ratio: (usize, usize), total: usize) -> Vec<bool> {
    let (p, s) = ratio;
    let mut pattern = Vec::with_capacity(total);
    let mut primaries = 0usize;
    for k in 1..=total {
        let exact = k as f64 * p as f64 / (p + s) as f64;
        let dev_primary = (primaries as f64 + 1.0 - exact).abs();
        let dev_secondary = (primaries as f64 - exact).abs();
        let take_primary = dev_primary <= dev_secondary;
        if take_primary {
            primaries += 1;
        }
        pattern.push(take_primary);
    }
    pattern
}

/// Interleave seeded samples (without replacement) of the two sources per
/// the ratio. Deterministic given the seed; source tags are preserved.
pub fn mix(spec: &MixSpec<'_>) -> Result<Corpus, CorpusOpError> {
    let (p, s) = spec.ratio;
    if p < 1 || s < 1 {
        return Err(CorpusOpError::InvalidRatio);
    }
    let primary_ids: BTreeSet<&str> = spec.primary.ids().collect();
    if let Some(dup) = spec.secondary.ids().find(|id| primary_ids.contains(id)) {
        return Err(CorpusOpError::OverlappingIds(dup.to_owned()));
    }
    let total = match spec.total {
        MixTotal::Count(n) => n,
        MixTotal::ExhaustPrimary => {
            let extra = (spec.primary.len() * s).div_ceil(p);
            spec.primary.len() + extra
        }
    };
    let pattern = mix_pattern(spec.ratio, total);
    let need_primary = pattern.iter().filter(|&&b| b).count();
    let need_secondary = total - need_primary;
    if need_primary > spec.primary.len() {
        return Err(CorpusOpError::InsufficientDocuments {
            side: "primary",
            need: need_primary,
            have: spec.primary.len(),
        });
    }
    if need_secondary > spec.secondary.len() {
        return Err(CorpusOpError::InsufficientDocuments {
            side: "secondary",
            need: need_secondary,
            have: spec.secondary.len(),
        });
    }
    let mut primary_docs = spec.primary.documents.clone();
    let mut secondary_docs = spec.secondary.documents.clone();
    shuffle(
        &mut SplitMix64::new(derive_seed(spec.seed, "mix:primary")),
        &mut primary_docs,
    );
    shuffle(
        &mut SplitMix64::new(derive_seed(spec.seed, "mix:secondary")),
        &mut secondary_docs,
    );
    let mut primary_iter = primary_docs.into_iter();
    let mut secondary_iter = secondary_docs.into_iter();
    let mut out = Vec::with_capacity(total);
    for take_primary in pattern {
        let doc = if take_primary {
            primary_iter.next().expect("counted above")
        } else {
            secondary_iter.next().expect("counted above")
        };
        out.push(doc);
    }
    Corpus::new(format!("{}+{}", spec.primary.name, spec.secondary.name), out)
}

/// Learning-curve snapshots. Nested mode shuffles once and takes prefixes,
/// so each snapshot contains the previous one; independent mode draws each
/// size from its own stream.
pub fn subsample_curve(
    corpus: &Corpus,
    sizes: &[usize],
    seed: u64,
    nested: bool,
) -> Result<Vec<Corpus>, CorpusOpError> {
    for w in sizes.windows(2) {
        if w[0] >= w[1] {
            return Err(CorpusOpError::NonAscendingSizes);
        }
    }
    if let Some(&max) = sizes.last() {
        if max > corpus.len() {
            return Err(CorpusOpError::SizeExceedsCorpus {
                size: max,
                len: corpus.len(),
            });
        }
    }
    let mut out = Vec::with_capacity(sizes.len());
    if nested {
        let mut docs = corpus.documents.clone();
        shuffle(&mut SplitMix64::new(derive_seed(seed, "curve")), &mut docs);
        for &size in sizes {
            out.push(Corpus::new(
                format!("{}-{}", corpus.name, size),
                docs[..size].to_vec(),
            )?);
        }
    } else {
        for (k, &size) in sizes.iter().enumerate() {
            let mut docs = corpus.documents.clone();
            shuffle(
                &mut SplitMix64::new(derive_seed(seed, &format!("curve:{k}"))),
                &mut docs,
            );
            docs.truncate(size);
            out.push(Corpus::new(format!("{}-{}", corpus.name, size), docs)?);
        }
    }
    Ok(out)
}

/// Pairwise corpus-level scores between annotation sets; entry `(i, j)`
/// treats set `i` as predicted and set `j` as reference.
#[derive(Debug, Clone, PartialEq)]
pub struct IaaMatrix {
    labels: Vec<String>,
    scores: Vec<Vec<Score>>,
}

impl IaaMatrix {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn score(&self, predicted: usize, reference: usize) -> Score {
        self.scores[predicted][reference]
    }

    /// One comparison row per unordered pair, in set order: the layout of
    /// an agreement table.
    pub fn to_rows(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "comparison\tprecision\trecall\tf1");
        for i in 0..self.labels.len() {
            for j in (i + 1)..self.labels.len() {
                let s = self.scores[i][j];
                let _ = writeln!(
                    out,
                    "{} vs {}\t{:.4}\t{:.4}\t{:.4}",
                    self.labels[i], self.labels[j], s.precision, s.recall, s.f1
                );
            }
        }
        out
    }
}

/// Pairwise agreement over ≥2 annotation sets covering the same ids.
/// Documents are matched by id; the first set's order fixes the pairing
/// order.
pub fn iaa(
    annotations: &[(String, Corpus)],
    config: &SmatchConfig,
) -> Result<IaaMatrix, CorpusOpError> {
    if annotations.len() < 2 {
        return Err(CorpusOpError::NeedTwoSets);
    }
    let base_ids: BTreeSet<&str> = annotations[0].1.ids().collect();
    for (label, corpus) in &annotations[1..] {
        let ids: BTreeSet<&str> = corpus.ids().collect();
        if ids != base_ids {
            return Err(CorpusOpError::IdSetsDiffer {
                a: annotations[0].0.clone(),
                b: label.clone(),
            });
        }
    }
    let order: Vec<&str> = annotations[0].1.ids().collect();
    let aligned: Vec<Vec<&CorpusDocument>> = annotations
        .iter()
        .map(|(_, corpus)| {
            let by_id: BTreeMap<&str, &CorpusDocument> =
                corpus.documents.iter().map(|d| (d.id.as_str(), d)).collect();
            order.iter().map(|id| by_id[id]).collect()
        })
        .collect();
    let n = annotations.len();
    let mut scores = vec![vec![Score::empty_agreement(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let pred: Vec<CorpusDocument> = aligned[i].iter().map(|d| (*d).clone()).collect();
            let reference: Vec<CorpusDocument> = aligned[j].iter().map(|d| (*d).clone()).collect();
            let (total, _) = score_corpus(&pred, &reference, config)?;
            scores[i][j] = total;
        }
    }
    Ok(IaaMatrix {
        labels: annotations.iter().map(|(l, _)| l.clone()).collect(),
        scores,
    })
}
