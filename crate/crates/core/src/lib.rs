//! AMR infrastructure: a data model and PENMAN parser/serializer for
//! rooted directed acyclic semantic graphs, triple decomposition, SMATCH
//! and fine-grained evaluation via variable-alignment search, deterministic
//! corpus preparation (splits, ratio mixing, learning-curve subsampling,
//! inter-annotator agreement), and template/dictionary-based generation of
//! AMRs for formulaic text.
//!
//! Graphs are immutable in practice: every operation here is a pure
//! function over `&AmrGraph`, and all values are `Send + Sync`, so they can
//! be shared across threads freely. Seeded operations use one documented
//! portable generator (see [`rng`]) so outputs reproduce bit-for-bit.

pub mod corpus;
pub mod document;
pub mod finegrained;
pub mod graph;
pub mod linearize;
pub mod penman;
pub mod rng;
pub mod smatch;
pub mod templates;
pub mod triples;

pub use document::{read_corpus_str, write_corpus, CorpusDocument};
pub use finegrained::{report, score_category, transform, Category, CategoryReport};
pub use graph::{AmrGraph, Constant, Diagnostic, InvalidGraph, Var};
pub use linearize::{delinearize, linearize, Token, TokenSequence};
pub use penman::{parse_penman, serialize_penman, ParseError};
pub use smatch::{
    align_exact, align_greedy, matched_count, score_corpus, score_pair, Alignment, Score,
    SmatchConfig,
};
pub use triples::{decompose, decompose_with, Triple, TripleKind, TripleSet};

#[cfg(test)]
mod tests {
    #[test]
    fn core_types_are_send_and_sync() {
        fn check<T: Send + Sync>() {}
        check::<crate::AmrGraph>();
        check::<crate::TripleSet>();
        check::<crate::Alignment>();
        check::<crate::Score>();
        check::<crate::CorpusDocument>();
        check::<crate::corpus::Corpus>();
        check::<crate::templates::Registry>();
        check::<crate::templates::NeDictionary>();
    }
}
