//! Deterministic AMR generation for formulaic phrases: a pattern/skeleton
//! template registry, and a phrasal named-entity dictionary mapping
//! normalized phrases to reusable AMR fragments.
//!
//! Registry file format: records separated by blank lines; each record is a
//! name line, a pattern line, then the skeleton (one or more PENMAN lines).
//! Patterns are literal text with `{num}`, `{word}` and `{unit}`
//! placeholders. Lines starting with `#` are comments.
//!
//! Dictionary file format: one entry per line,
//! `phrase<TAB>ne-type<TAB>penman-fragment`. Phrases are normalized
//! (lowercased, whitespace collapsed) and must be unique.

use std::collections::{BTreeMap, BTreeSet};

use regex::Regex;
use thiserror::Error;

use crate::graph::{AmrGraph, Var};
use crate::penman::{parse_penman, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaceholderKind {
    /// `{num}` — a decimal literal like `167.60`.
    Num,
    /// `{word}` — a single non-space token.
    Word,
    /// `{unit}` — a token from the registry's unit list.
    Unit,
}

impl PlaceholderKind {
    fn marker(self) -> &'static str {
        match self {
            PlaceholderKind::Num => "{num}",
            PlaceholderKind::Word => "{word}",
            PlaceholderKind::Unit => "{unit}",
        }
    }
}

const PLACEHOLDERS: [PlaceholderKind; 3] = [
    PlaceholderKind::Num,
    PlaceholderKind::Word,
    PlaceholderKind::Unit,
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TemplateError {
    #[error("template `{name}`: {reason}")]
    BadTemplate { name: String, reason: String },
    #[error("template `{name}` record is incomplete (need name, pattern and skeleton lines)")]
    IncompleteRecord { name: String },
    #[error("missing capture for placeholder `{0}`")]
    MissingCapture(&'static str),
    #[error("capture `{value}` is not a valid {expected}")]
    BadCaptureType { value: String, expected: &'static str },
    #[error("substituted skeleton does not parse: {0}")]
    BadSubstitution(#[from] ParseError),
    #[error("substituted skeleton is not a valid graph: {0}")]
    InvalidFill(#[from] crate::graph::InvalidGraph),
    #[error("dictionary line {line}: {reason}")]
    BadDictionaryLine { line: usize, reason: String },
    #[error("duplicate dictionary phrase `{0}`")]
    DuplicatePhrase(String),
}

/// A sentence pattern paired with a PENMAN skeleton sharing its
/// placeholders.
#[derive(Debug, Clone)]
pub struct Template {
    pub name: String,
    pub pattern: String,
    pub skeleton: String,
    regex: Regex,
    /// Placeholders in pattern order.
    slots: Vec<PlaceholderKind>,
}

/// Placeholder values captured from a sentence (or supplied directly), in
/// pattern order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Captures {
    values: Vec<(PlaceholderKind, String)>,
}

impl Captures {
    pub fn new(values: Vec<(PlaceholderKind, String)>) -> Self {
        Captures { values }
    }

    pub fn values(&self) -> &[(PlaceholderKind, String)] {
        &self.values
    }

    /// First captured value of the given kind.
    pub fn first(&self, kind: PlaceholderKind) -> Option<&str> {
        self.values
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, v)| v.as_str())
    }
}

fn is_decimal(s: &str) -> bool {
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (s, None),
    };
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    digits(int) && frac.is_none_or(digits)
}

impl Template {
    fn compile(
        name: &str,
        pattern: &str,
        skeleton: &str,
        units: &[String],
    ) -> Result<Template, TemplateError> {
        let mut regex_src = String::from("^");
        let mut slots = Vec::new();
        let mut rest = pattern;
        'outer: while !rest.is_empty() {
            for kind in PLACEHOLDERS {
                if let Some(stripped) = rest.strip_prefix(kind.marker()) {
                    match kind {
                        PlaceholderKind::Num => regex_src.push_str(r"([0-9]+(?:\.[0-9]+)?)"),
                        PlaceholderKind::Word => regex_src.push_str(r"(\S+)"),
                        PlaceholderKind::Unit => {
                            if units.is_empty() {
                                return Err(TemplateError::BadTemplate {
                                    name: name.to_owned(),
                                    reason: "pattern uses {unit} but the unit list is empty"
                                        .to_owned(),
                                });
                            }
                            let mut sorted: Vec<&String> = units.iter().collect();
                            // longest first so e.g. `mmHg` wins over `m`
                            sorted.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
                            let alt: Vec<String> =
                                sorted.iter().map(|u| regex::escape(u)).collect();
                            regex_src.push('(');
                            regex_src.push_str(&alt.join("|"));
                            regex_src.push(')');
                        }
                    }
                    slots.push(kind);
                    rest = stripped;
                    continue 'outer;
                }
            }
            let next = PLACEHOLDERS
                .iter()
                .filter_map(|k| rest.find(k.marker()))
                .min()
                .unwrap_or(rest.len());
            let cut = next.max(1).min(rest.len());
            regex_src.push_str(&regex::escape(&rest[..cut]));
            rest = &rest[cut..];
        }
        regex_src.push('$');
        let regex = Regex::new(&regex_src).map_err(|e| TemplateError::BadTemplate {
            name: name.to_owned(),
            reason: e.to_string(),
        })?;
        // every skeleton placeholder must be coverable by pattern captures
        for kind in PLACEHOLDERS {
            let in_skeleton = skeleton.matches(kind.marker()).count();
            let in_pattern = slots.iter().filter(|k| **k == kind).count();
            if in_skeleton > in_pattern {
                return Err(TemplateError::BadTemplate {
                    name: name.to_owned(),
                    reason: format!(
                        "skeleton uses {} `{}` placeholders but the pattern captures {}",
                        in_skeleton,
                        kind.marker(),
                        in_pattern
                    ),
                });
            }
        }
        Ok(Template {
            name: name.to_owned(),
            pattern: pattern.to_owned(),
            skeleton: skeleton.to_owned(),
            regex,
            slots,
        })
    }

    fn capture(&self, sentence: &str) -> Option<Captures> {
        let caps = self.regex.captures(sentence.trim())?;
        let values = self
            .slots
            .iter()
            .enumerate()
            .map(|(i, kind)| (*kind, caps[i + 1].to_owned()))
            .collect();
        Some(Captures::new(values))
    }
}

/// An ordered template registry plus the unit vocabulary `{unit}` draws
/// from.
#[derive(Debug, Clone)]
pub struct Registry {
    templates: Vec<Template>,
    units: Vec<String>,
}

impl Registry {
    /// Parse a registry file. Every template is probe-filled with
    /// canonical values at load time; a skeleton that cannot produce a
    /// valid graph is rejected here rather than at use time.
    pub fn parse(text: &str, units: Vec<String>) -> Result<Registry, TemplateError> {
        let mut templates = Vec::new();
        let mut block: Vec<&str> = Vec::new();
        for line in text.lines().chain(std::iter::once("")) {
            if line.trim().is_empty() {
                if !block.is_empty() {
                    templates.push(Self::parse_block(&block, &units)?);
                    block.clear();
                }
            } else if !line.trim_start().starts_with('#') {
                block.push(line);
            }
        }
        let registry = Registry { templates, units };
        for t in &registry.templates {
            let probe = Captures::new(
                t.slots
                    .iter()
                    .map(|kind| {
                        let v = match kind {
                            PlaceholderKind::Num => "1".to_owned(),
                            PlaceholderKind::Word => "x".to_owned(),
                            PlaceholderKind::Unit => {
                                registry.units.first().cloned().unwrap_or_default()
                            }
                        };
                        (*kind, v)
                    })
                    .collect(),
            );
            registry.fill(t, &probe).map_err(|e| TemplateError::BadTemplate {
                name: t.name.clone(),
                reason: format!("probe substitution failed: {e}"),
            })?;
        }
        Ok(registry)
    }

    fn parse_block(lines: &[&str], units: &[String]) -> Result<Template, TemplateError> {
        if lines.len() < 3 {
            return Err(TemplateError::IncompleteRecord {
                name: lines.first().unwrap_or(&"?").trim().to_owned(),
            });
        }
        let name = lines[0].trim();
        let pattern = lines[1].trim();
        let skeleton = lines[2..].join("\n");
        Template::compile(name, pattern, &skeleton, units)
    }

    /// The example registry shipped with the toolkit (vital-signs style
    /// patterns; illustrative, not a reconstruction of any corpus).
    pub fn builtin_example() -> Registry {
        Registry::parse(
            include_str!("../assets/example_registry.txt"),
            default_units(),
        )
        .expect("builtin registry parses")
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn units(&self) -> &[String] {
        &self.units
    }

    /// First template (registry order) whose pattern matches the whole
    /// sentence.
    pub fn match_template(&self, sentence: &str) -> Option<(&Template, Captures)> {
        self.templates
            .iter()
            .find_map(|t| t.capture(sentence).map(|c| (t, c)))
    }

    /// Substitute captures into the skeleton, parse and validate. Same
    /// inputs always produce an identical graph.
    pub fn fill(&self, template: &Template, captures: &Captures) -> Result<AmrGraph, TemplateError> {
        let mut queues: BTreeMap<&'static str, Vec<&str>> = BTreeMap::new();
        for (kind, value) in captures.values() {
            match kind {
                PlaceholderKind::Num => {
                    if !is_decimal(value) {
                        return Err(TemplateError::BadCaptureType {
                            value: value.clone(),
                            expected: "decimal literal",
                        });
                    }
                }
                PlaceholderKind::Word => {
                    if value.is_empty() || value.contains(char::is_whitespace) {
                        return Err(TemplateError::BadCaptureType {
                            value: value.clone(),
                            expected: "single non-space token",
                        });
                    }
                }
                PlaceholderKind::Unit => {
                    if !self.units.iter().any(|u| u == value) {
                        return Err(TemplateError::BadCaptureType {
                            value: value.clone(),
                            expected: "unit from the configured unit list",
                        });
                    }
                }
            }
            queues.entry(kind.marker()).or_default().push(value);
        }
        // consume captures per kind in pattern order, scanning the
        // skeleton left to right
        let mut text = String::with_capacity(template.skeleton.len());
        let mut rest = template.skeleton.as_str();
        let mut next_of: BTreeMap<&'static str, usize> = BTreeMap::new();
        'outer: while !rest.is_empty() {
            for kind in PLACEHOLDERS {
                if let Some(stripped) = rest.strip_prefix(kind.marker()) {
                    let idx = next_of.entry(kind.marker()).or_insert(0);
                    let queue = queues.get(kind.marker()).map(Vec::as_slice).unwrap_or(&[]);
                    let Some(value) = queue.get(*idx) else {
                        return Err(TemplateError::MissingCapture(kind.marker()));
                    };
                    text.push_str(value);
                    *idx += 1;
                    rest = stripped;
                    continue 'outer;
                }
            }
            let next = PLACEHOLDERS
                .iter()
                .filter_map(|k| rest.find(k.marker()))
                .min()
                .unwrap_or(rest.len());
            let cut = next.max(1).min(rest.len());
            text.push_str(&rest[..cut]);
            rest = &rest[cut..];
        }
        let graph = parse_penman(&text)?;
        let diags = graph.validate();
        if !diags.is_empty() {
            return Err(TemplateError::InvalidFill(crate::graph::InvalidGraph(diags)));
        }
        Ok(graph)
    }
}

/// The default `{unit}` vocabulary.
pub fn default_units() -> Vec<String> {
    include_str!("../assets/units.txt")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

/// Normalize a dictionary phrase: lowercase, whitespace collapsed to
/// single spaces.
pub fn normalize_phrase(phrase: &str) -> String {
    phrase
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// One named-entity dictionary entry: the compositionality judgment for a
/// phrase, recorded as an AMR fragment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeEntry {
    pub phrase: String,
    pub ne_type: String,
    fragment: AmrGraph,
}

impl NeEntry {
    pub fn fragment(&self) -> &AmrGraph {
        &self.fragment
    }

    /// A copy of the fragment whose variables avoid everything in `taken`,
    /// so the result can be grafted into a host graph without collisions.
    /// Renaming keeps a variable when it is free and otherwise appends the
    /// smallest free numeric suffix to its alphabetic base.
    pub fn instantiate(&self, taken: &BTreeSet<Var>) -> AmrGraph {
        let mut mapping: BTreeMap<Var, Var> = BTreeMap::new();
        let mut chosen: BTreeSet<Var> = taken.clone();
        for v in self.fragment.traversal_order() {
            let fresh = if !chosen.contains(&v) {
                v.clone()
            } else {
                let base: String = v
                    .as_str()
                    .trim_end_matches(|c: char| c.is_ascii_digit())
                    .to_owned();
                let base = if base.is_empty() { "v".to_owned() } else { base };
                let mut n = 2usize;
                loop {
                    let candidate = Var::new(format!("{base}{n}"));
                    if !chosen.contains(&candidate) {
                        break candidate;
                    }
                    n += 1;
                }
            };
            chosen.insert(fresh.clone());
            mapping.insert(v, fresh);
        }
        let root = mapping[self.fragment.root()].clone();
        let mut g = AmrGraph::new(
            root.clone(),
            self.fragment
                .concept(self.fragment.root().as_str())
                .expect("fragment validated")
                .to_owned(),
        );
        for (v, c) in self.fragment.nodes() {
            let nv = &mapping[v];
            if *nv != root {
                g.add_node(nv.clone(), c).expect("fresh names are unique");
            }
        }
        for e in self.fragment.edges() {
            g.add_edge(mapping[&e.source].clone(), &e.role, mapping[&e.target].clone());
        }
        for a in self.fragment.attributes() {
            g.add_attribute(mapping[&a.source].clone(), &a.role, a.value.clone());
        }
        g
    }
}

/// Phrase → fragment dictionary with normalized, unique keys.
#[derive(Debug, Clone, Default)]
pub struct NeDictionary {
    entries: BTreeMap<String, NeEntry>,
}

impl NeDictionary {
    pub fn parse(text: &str) -> Result<NeDictionary, TemplateError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let (Some(phrase), Some(ne_type), Some(fragment_text)) =
                (parts.next(), parts.next(), parts.next())
            else {
                return Err(TemplateError::BadDictionaryLine {
                    line: line_no,
                    reason: "expected `phrase<TAB>ne-type<TAB>fragment`".to_owned(),
                });
            };
            let phrase = normalize_phrase(phrase);
            if phrase.is_empty() {
                return Err(TemplateError::BadDictionaryLine {
                    line: line_no,
                    reason: "empty phrase".to_owned(),
                });
            }
            let fragment =
                parse_penman(fragment_text).map_err(|e| TemplateError::BadDictionaryLine {
                    line: line_no,
                    reason: e.to_string(),
                })?;
            let diags = fragment.validate();
            if !diags.is_empty() {
                return Err(TemplateError::BadDictionaryLine {
                    line: line_no,
                    reason: crate::graph::InvalidGraph(diags).to_string(),
                });
            }
            let entry = NeEntry {
                phrase: phrase.clone(),
                ne_type: ne_type.trim().to_owned(),
                fragment,
            };
            if entries.insert(phrase.clone(), entry).is_some() {
                return Err(TemplateError::DuplicatePhrase(phrase));
            }
        }
        Ok(NeDictionary { entries })
    }

    /// The example dictionary shipped with the toolkit.
    pub fn builtin_example() -> NeDictionary {
        NeDictionary::parse(include_str!("../assets/example_ne_dict.tsv"))
            .expect("builtin dictionary parses")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &NeEntry> {
        self.entries.values()
    }

    /// Exact lookup of the normalized phrase.
    pub fn lookup(&self, phrase: &str) -> Option<&NeEntry> {
        self.entries.get(&normalize_phrase(phrase))
    }

    /// Spec-level lookup: the fragment with variables renamed away from
    /// `taken`, ready to merge into a host graph.
    pub fn lookup_fresh(&self, phrase: &str, taken: &BTreeSet<Var>) -> Option<AmrGraph> {
        self.lookup(phrase).map(|e| e.instantiate(taken))
    }
}
