//! Corpus documents: a sentence, its metadata lines, and its gold graph.
//!
//! File format: UTF-8 text; each document is zero or more `# ::key value`
//! metadata lines followed by one PENMAN expression; documents are
//! separated by one or more blank lines. Unknown metadata keys are kept
//! verbatim. `#` lines that do not start with `# ::` are comments.

use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::AmrGraph;
use crate::penman::{parse_penman, serialize_penman, ParseError};

/// One sentence–AMR pair with its metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusDocument {
    pub id: String,
    pub snt: String,
    /// All `# ::key value` pairs in file order, including `id` and `snt`.
    pub metadata: Vec<(String, String)>,
    pub graph: AmrGraph,
    /// Which corpus the document came from; set by the loader, not stored
    /// in the file itself.
    pub source_tag: String,
}

impl CorpusDocument {
    pub fn new(id: impl Into<String>, snt: impl Into<String>, graph: AmrGraph) -> Self {
        let id = id.into();
        let snt = snt.into();
        let mut metadata = vec![("id".to_owned(), id.clone())];
        if !snt.is_empty() {
            metadata.push(("snt".to_owned(), snt.clone()));
        }
        CorpusDocument {
            id,
            snt,
            metadata,
            graph,
            source_tag: String::new(),
        }
    }

    /// First value stored under `key`, if any.
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("document {index} ({id}): {source}")]
    Parse {
        index: usize,
        id: String,
        source: ParseError,
    },
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
}

/// Parse a corpus file. Documents with no `::id` line get the synthesized
/// id `doc-<n>` (1-based position). Every document's `source_tag` is set to
/// `source_tag`.
pub fn read_corpus_str(
    text: &str,
    source_tag: &str,
) -> Result<Vec<CorpusDocument>, CorpusError> {
    let mut docs = Vec::new();
    let mut block: Vec<&str> = Vec::new();
    for line in text.lines().chain(std::iter::once("")) {
        if line.trim().is_empty() {
            if !block.is_empty() {
                docs.push(parse_block(&block, docs.len(), source_tag)?);
                block.clear();
            }
        } else {
            block.push(line);
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for d in &docs {
        if !seen.insert(d.id.as_str()) {
            return Err(CorpusError::DuplicateId(d.id.clone()));
        }
    }
    Ok(docs)
}

fn parse_block(
    lines: &[&str],
    index: usize,
    source_tag: &str,
) -> Result<CorpusDocument, CorpusError> {
    let mut metadata = Vec::new();
    let mut graph_lines = Vec::new();
    for line in lines {
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix("# ::").or_else(|| trimmed.strip_prefix("#::")) {
            let (key, value) = match rest.split_once(char::is_whitespace) {
                Some((k, v)) => (k.to_owned(), v.trim().to_owned()),
                None => (rest.trim().to_owned(), String::new()),
            };
            metadata.push((key, value));
        } else if trimmed.starts_with('#') {
            continue;
        } else {
            graph_lines.push(*line);
        }
    }
    let id = metadata
        .iter()
        .find(|(k, _)| k == "id")
        .map(|(_, v)| v.split_whitespace().next().unwrap_or("").to_owned())
        .filter(|v| !v.is_empty())
        .unwrap_or_else(|| format!("doc-{}", index + 1));
    let snt = metadata
        .iter()
        .find(|(k, _)| k == "snt")
        .map(|(_, v)| v.clone())
        .unwrap_or_default();
    let graph = parse_penman(&graph_lines.join("\n")).map_err(|source| CorpusError::Parse {
        index,
        id: id.clone(),
        source,
    })?;
    Ok(CorpusDocument {
        id,
        snt,
        metadata,
        graph,
        source_tag: source_tag.to_owned(),
    })
}

/// Render documents back to the corpus file format. An `::id` line is
/// prepended when the stored metadata lacks one, so synthesized ids
/// survive a write/read cycle.
pub fn write_corpus(docs: &[CorpusDocument]) -> String {
    let mut out = String::new();
    for (i, d) in docs.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        if !d.metadata.iter().any(|(k, _)| k == "id") {
            let _ = writeln!(out, "# ::id {}", d.id);
        }
        for (k, v) in &d.metadata {
            if v.is_empty() {
                let _ = writeln!(out, "# ::{k}");
            } else {
                let _ = writeln!(out, "# ::{k} {v}");
            }
        }
        let text = serialize_penman(&d.graph)
            .expect("corpus documents hold validated graphs");
        out.push_str(&text);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const FILE: &str = "\
# ::id d1
# ::snt He had never undergone a screening colonoscopy.
# ::save-date 2020-01-01
(c / colonoscopy-01 :polarity -
      :arg1 (h / he)
      :arg2 (s2 / screen-01
            :arg1 h))

# ::id d2
# ::snt Declines tetanus.
(d / decline-02
      :ARG1 (s / shot-13 :implicit +
            :ARG3 (d2 / disease-disorder :name (n / name :op1 \"tetanus\"))))
";

    #[test]
    fn reads_documents_split_on_blank_lines() {
        let docs = read_corpus_str(FILE, "notes").unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].id, "d1");
        assert_eq!(docs[0].snt, "He had never undergone a screening colonoscopy.");
        assert_eq!(docs[0].source_tag, "notes");
        assert_eq!(docs[0].meta("save-date"), Some("2020-01-01"));
        assert_eq!(docs[1].graph.concept("s"), Some("shot-13"));
    }

    #[test]
    fn missing_id_is_synthesized() {
        let docs = read_corpus_str("(a / alpha)\n\n(b / beta)\n", "x").unwrap();
        assert_eq!(docs[0].id, "doc-1");
        assert_eq!(docs[1].id, "doc-2");
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let text = "# ::id d1\n(a / alpha)\n\n# ::id d1\n(b / beta)\n";
        assert_eq!(
            read_corpus_str(text, "x").unwrap_err(),
            CorpusError::DuplicateId("d1".into())
        );
    }

    #[test]
    fn write_read_round_trip() {
        let docs = read_corpus_str(FILE, "notes").unwrap();
        let out = write_corpus(&docs);
        let back = read_corpus_str(&out, "notes").unwrap();
        assert_eq!(back.len(), docs.len());
        for (a, b) in docs.iter().zip(&back) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.snt, b.snt);
            assert_eq!(a.metadata, b.metadata);
            assert_eq!(a.graph, b.graph);
        }
        // writing is byte-deterministic
        assert_eq!(out, write_corpus(&back));
    }

    #[test]
    fn synthesized_id_survives_round_trip() {
        let docs = read_corpus_str("(a / alpha)\n", "x").unwrap();
        let out = write_corpus(&docs);
        let back = read_corpus_str(&out, "x").unwrap();
        assert_eq!(back[0].id, "doc-1");
    }

    #[test]
    fn parse_errors_carry_document_position() {
        let text = "# ::id ok\n(a / alpha)\n\n# ::id bad\n(b / beta\n";
        let err = read_corpus_str(text, "x").unwrap_err();
        match err {
            CorpusError::Parse { index, id, .. } => {
                assert_eq!(index, 1);
                assert_eq!(id, "bad");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
