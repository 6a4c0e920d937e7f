//! `amr-kit`: command-line front end for the toolkit.
//!
//! Exit codes: 0 on success, 1 on validation/diagnostic failures, 2 on
//! usage errors. Results go to stdout, diagnostics to stderr; identical
//! arguments and input files produce identical stdout bytes.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};

use amr_kit::corpus::{iaa, mix, split, subsample_curve, Corpus, MixSpec, MixTotal};
use amr_kit::document::{read_corpus_str, write_corpus, CorpusDocument};
use amr_kit::finegrained::report_with;
use amr_kit::smatch::{
    score_corpus, SmatchConfig, DEFAULT_EXACT_CAP, DEFAULT_RESTARTS, DEFAULT_SEED,
};
use amr_kit::templates::{NeDictionary, Registry};
use amr_kit::{decompose_with, linearize};

#[derive(Parser)]
#[command(
    name = "amr-kit",
    version,
    about = "AMR toolkit: validate and linearize graphs, score parses, prepare corpora, generate template AMRs",
    after_help = "Defaults: seed 42 (overridable via --seed or AMRKIT_SEED), 4 restarts, exact alignment up to 8 variables."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Tsv,
    Json,
    Md,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate every document in the given corpus files
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Print each document's triple decomposition, one triple per line
    Triples {
        file: PathBuf,
        /// Append the top(root, concept) triple
        #[arg(long)]
        top_triple: bool,
    },
    /// Print each document as one line of canonical tokens
    Linearize { file: PathBuf },
    /// Score a predicted corpus against a reference corpus (prints "P R F1")
    Score {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Hill-climbing restarts (default: 4)
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        /// Master seed (default: 42)
        #[arg(long, env = "AMRKIT_SEED")]
        seed: Option<u64>,
        /// Exact alignment engages when both graphs have at most this many
        /// variables (default: 8; 0 disables)
        #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
        exact_cap: usize,
        #[arg(long)]
        top_triple: bool,
        /// Also print a per-document TSV (id, counts, P, R, F1)
        #[arg(long)]
        per_doc: bool,
    },
    /// Fine-grained category report (8 rows: overall plus 7 categories)
    Fine {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Tsv)]
        format: ReportFormat,
        /// File of extra named-entity type concepts, one per line
        #[arg(long)]
        ne_types: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        /// Master seed (default: 42)
        #[arg(long, env = "AMRKIT_SEED")]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
        exact_cap: usize,
    },
    /// Shuffle a corpus with a seed and partition it into train/dev/test
    Split {
        file: PathBuf,
        /// Comma-separated train,dev,test sizes, e.g. 4955,1641,1731 (must
        /// sum to the corpus size)
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        /// Master seed (default: 42)
        #[arg(long, env = "AMRKIT_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Interleave two corpora at a fixed ratio (e.g. 12:1)
    Mix {
        #[arg(long)]
        primary: PathBuf,
        #[arg(long)]
        secondary: PathBuf,
        /// Ratio as P:S, e.g. 12:1
        #[arg(long, value_parser = parse_ratio)]
        ratio: (usize, usize),
        /// Output size; omit to exhaust the primary source
        #[arg(long)]
        total: Option<usize>,
        /// Master seed (default: 42)
        #[arg(long, env = "AMRKIT_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Nested (or independent) learning-curve subsamples
    Curve {
        file: PathBuf,
        /// Comma-separated ascending sizes, e.g. 500,1000,2000
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        /// Master seed (default: 42)
        #[arg(long, env = "AMRKIT_SEED")]
        seed: Option<u64>,
        /// Draw each size independently instead of nesting snapshots
        #[arg(long)]
        independent: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Pairwise inter-annotator agreement over two or more annotation files
    Iaa {
        #[arg(required = true, num_args = 2..)]
        files: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        /// Master seed (default: 42)
        #[arg(long, env = "AMRKIT_SEED")]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
        exact_cap: usize,
    },
    /// Generate AMRs for formulaic sentences via templates and the NE dictionary
    Templatize {
        /// Template registry file (omit for the builtin example registry)
        #[arg(long)]
        registry: Option<PathBuf>,
        /// NE dictionary file (omit for the builtin example dictionary)
        #[arg(long)]
        dict: Option<PathBuf>,
        /// Unit list for {unit}, one token per line (omit for the default)
        #[arg(long)]
        units: Option<PathBuf>,
        /// Input sentences, one per line
        #[arg(long)]
        input: PathBuf,
        /// Output corpus file
        #[arg(long)]
        out: PathBuf,
        /// Unmatched-sentence TSV (default: <out>.unmatched.tsv)
        #[arg(long)]
        unmatched: Option<PathBuf>,
    },
}

fn parse_ratio(s: &str) -> Result<(usize, usize), String> {
    let (p, q) = s
        .split_once(':')
        .ok_or_else(|| format!("`{s}` is not a P:S ratio like 12:1"))?;
    let p: usize = p.trim().parse().map_err(|_| format!("bad ratio part `{p}`"))?;
    let q: usize = q.trim().parse().map_err(|_| format!("bad ratio part `{q}`"))?;
    if p == 0 || q == 0 {
        return Err("ratio parts must both be at least 1".to_owned());
    }
    Ok((p, q))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn load_documents(path: &Path) -> Result<Vec<CorpusDocument>, Box<dyn std::error::Error>> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let docs =
        read_corpus_str(&text, &stem(path)).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(docs)
}

fn load_corpus(path: &Path) -> Result<Corpus, Box<dyn std::error::Error>> {
    let docs = load_documents(path)?;
    Ok(Corpus::new(stem(path), docs)?)
}

fn config_for(
    restarts: usize,
    seed: Option<u64>,
    exact_cap: usize,
    top_triple: bool,
) -> SmatchConfig {
    SmatchConfig {
        restarts,
        seed: seed.unwrap_or(DEFAULT_SEED),
        exact_cap,
        top_triple,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Box<dyn std::error::Error>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(())
}

fn manifest_json(value: serde_json::Value) -> String {
    serde_json::to_string_pretty(&value).expect("manifest serializes") + "\n"
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Validate { files } => {
            let mut failures = 0usize;
            for path in &files {
                let text = fs::read_to_string(path)
                    .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                match read_corpus_str(&text, &stem(path)) {
                    Err(e) => {
                        eprintln!("{}: {e}", path.display());
                        failures += 1;
                        println!("{}: unreadable", path.display());
                    }
                    Ok(docs) => {
                        let mut invalid = 0usize;
                        for d in &docs {
                            let diags = d.graph.validate();
                            if !diags.is_empty() {
                                invalid += 1;
                                for diag in diags {
                                    eprintln!("{}:{}: {diag}", path.display(), d.id);
                                }
                            }
                        }
                        failures += invalid;
                        println!(
                            "{}: {} documents, {} invalid",
                            path.display(),
                            docs.len(),
                            invalid
                        );
                    }
                }
            }
            Ok(if failures == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }

        Command::Triples { file, top_triple } => {
            let docs = load_documents(&file)?;
            for (i, d) in docs.iter().enumerate() {
                if i > 0 {
                    println!();
                }
                let ts =
                    decompose_with(&d.graph, top_triple).map_err(|e| format!("{}: {e}", d.id))?;
                print!("{ts}");
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Linearize { file } => {
            let docs = load_documents(&file)?;
            for d in &docs {
                let seq = linearize(&d.graph).map_err(|e| format!("{}: {e}", d.id))?;
                println!("{seq}");
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Score {
            pred,
            reference,
            restarts,
            seed,
            exact_cap,
            top_triple,
            per_doc,
        } => {
            let pred_docs = load_documents(&pred)?;
            let ref_docs = load_documents(&reference)?;
            let config = config_for(restarts, seed, exact_cap, top_triple);
            let (total, docs) = score_corpus(&pred_docs, &ref_docs, &config)?;
            println!("{:.4} {:.4} {:.4}", total.precision, total.recall, total.f1);
            if per_doc {
                println!("id\tn_correct\tn_pred\tn_ref\tp\tr\tf1");
                for d in &docs {
                    println!(
                        "{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}",
                        d.id,
                        d.score.n_correct,
                        d.score.n_predicted,
                        d.score.n_reference,
                        d.score.precision,
                        d.score.recall,
                        d.score.f1
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Fine {
            pred,
            reference,
            format,
            ne_types,
            restarts,
            seed,
            exact_cap,
        } => {
            let pred_docs = load_documents(&pred)?;
            let ref_docs = load_documents(&reference)?;
            let extra: Vec<String> = match &ne_types {
                None => Vec::new(),
                Some(path) => fs::read_to_string(path)
                    .map_err(|e| format!("cannot read {}: {e}", path.display()))?
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(str::to_owned)
                    .collect(),
            };
            let config = config_for(restarts, seed, exact_cap, false);
            let rep = report_with(&pred_docs, &ref_docs, &config, &stem(&pred), &extra)?;
            match format {
                ReportFormat::Tsv => print!("{}", rep.to_tsv()),
                ReportFormat::Json => print!("{}", rep.to_json()),
                ReportFormat::Md => print!("{}", rep.to_markdown()),
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Split {
            file,
            sizes,
            seed,
            out_dir,
        } => {
            if sizes.len() != 3 {
                Cli::command()
                    .error(
                        clap::error::ErrorKind::WrongNumberOfValues,
                        "--sizes takes exactly three comma-separated counts: train,dev,test",
                    )
                    .exit();
            }
            let corpus = load_corpus(&file)?;
            let seed = seed.unwrap_or(DEFAULT_SEED);
            let (train, dev, test) = split(&corpus, (sizes[0], sizes[1], sizes[2]), seed)?;
            let mut outputs = Vec::new();
            for (name, part) in [("train", &train), ("dev", &dev), ("test", &test)] {
                let path = out_dir.join(format!("{name}.amr"));
                write_file(&path, &write_corpus(part.documents()))?;
                println!("wrote {} ({} documents)", path.display(), part.len());
                outputs.push(serde_json::json!({
                    "file": format!("{name}.amr"),
                    "documents": part.len(),
                }));
            }
            let manifest = manifest_json(serde_json::json!({
                "schema_version": 1,
                "operation": "split",
                "input": file.display().to_string(),
                "seed": seed,
                "sizes": { "train": sizes[0], "dev": sizes[1], "test": sizes[2] },
                "outputs": outputs,
            }));
            write_file(&out_dir.join("manifest.json"), &manifest)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Mix {
            primary,
            secondary,
            ratio,
            total,
            seed,
            out,
        } => {
            let primary_corpus = load_corpus(&primary)?;
            let secondary_corpus = load_corpus(&secondary)?;
            let seed = seed.unwrap_or(DEFAULT_SEED);
            let mix_total = match total {
                Some(n) => MixTotal::Count(n),
                None => MixTotal::ExhaustPrimary,
            };
            let mixed = mix(&MixSpec {
                primary: &primary_corpus,
                secondary: &secondary_corpus,
                ratio,
                total: mix_total,
                seed,
            })?;
            write_file(&out, &write_corpus(mixed.documents()))?;
            let from_primary = mixed
                .documents()
                .iter()
                .filter(|d| d.source_tag == primary_corpus.name)
                .count();
            let source_tags: Vec<serde_json::Value> = mixed
                .documents()
                .iter()
                .map(|d| serde_json::json!({ "id": d.id, "source": d.source_tag }))
                .collect();
            let manifest = manifest_json(serde_json::json!({
                "schema_version": 1,
                "operation": "mix",
                "seed": seed,
                "ratio": { "primary": ratio.0, "secondary": ratio.1 },
                "total": mixed.len(),
                "counts": {
                    "primary": from_primary,
                    "secondary": mixed.len() - from_primary,
                },
                "sources": {
                    "primary": primary_corpus.name,
                    "secondary": secondary_corpus.name,
                },
                "source_tags": source_tags,
            }));
            let manifest_path = out.with_extension("manifest.json");
            write_file(&manifest_path, &manifest)?;
            println!(
                "wrote {} ({} documents: {} primary + {} secondary)",
                out.display(),
                mixed.len(),
                from_primary,
                mixed.len() - from_primary
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Curve {
            file,
            sizes,
            seed,
            independent,
            out_dir,
        } => {
            let corpus = load_corpus(&file)?;
            let seed = seed.unwrap_or(DEFAULT_SEED);
            let snapshots = subsample_curve(&corpus, &sizes, seed, !independent)?;
            let mut outputs = Vec::new();
            for (snap, &size) in snapshots.iter().zip(&sizes) {
                let path = out_dir.join(format!("curve-{size}.amr"));
                write_file(&path, &write_corpus(snap.documents()))?;
                println!("wrote {} ({} documents)", path.display(), snap.len());
                outputs.push(serde_json::json!({
                    "file": format!("curve-{size}.amr"),
                    "documents": snap.len(),
                }));
            }
            let manifest = manifest_json(serde_json::json!({
                "schema_version": 1,
                "operation": "curve",
                "input": file.display().to_string(),
                "seed": seed,
                "sizes": sizes,
                "nested": !independent,
                "outputs": outputs,
            }));
            write_file(&out_dir.join("manifest.json"), &manifest)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Iaa {
            files,
            restarts,
            seed,
            exact_cap,
        } => {
            let mut sets = Vec::new();
            for path in &files {
                sets.push((stem(path), load_corpus(path)?));
            }
            let config = config_for(restarts, seed, exact_cap, false);
            let matrix = iaa(&sets, &config)?;
            print!("{}", matrix.to_rows());
            Ok(ExitCode::SUCCESS)
        }

        Command::Templatize {
            registry,
            dict,
            units,
            input,
            out,
            unmatched,
        } => {
            let unit_list = match &units {
                None => amr_kit::templates::default_units(),
                Some(path) => fs::read_to_string(path)
                    .map_err(|e| format!("cannot read {}: {e}", path.display()))?
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(str::to_owned)
                    .collect(),
            };
            let registry = match &registry {
                None => Registry::builtin_example(),
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                    Registry::parse(&text, unit_list)?
                }
            };
            let dictionary = match &dict {
                None => NeDictionary::builtin_example(),
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                    NeDictionary::parse(&text)?
                }
            };
            let sentences = fs::read_to_string(&input)
                .map_err(|e| format!("cannot read {}: {e}", input.display()))?;
            let mut generated = Vec::new();
            let mut missed: Vec<(usize, String)> = Vec::new();
            for (i, line) in sentences.lines().enumerate() {
                let sentence = line.trim();
                if sentence.is_empty() {
                    continue;
                }
                let line_no = i + 1;
                let (graph, source) =
                    if let Some((template, captures)) = registry.match_template(sentence) {
                        let graph = registry
                            .fill(template, &captures)
                            .map_err(|e| format!("line {line_no}: {e}"))?;
                        (graph, format!("template:{}", template.name))
                    } else if let Some(entry) = dictionary.lookup(sentence) {
                        let graph = entry.instantiate(&BTreeSet::new());
                        (graph, format!("ne-dict:{}", entry.phrase))
                    } else {
                        missed.push((line_no, sentence.to_owned()));
                        continue;
                    };
                let mut doc =
                    CorpusDocument::new(format!("gen-{line_no:05}"), sentence.to_owned(), graph);
                doc.metadata.push(("source".to_owned(), source.clone()));
                doc.source_tag = source;
                generated.push(doc);
            }
            write_file(&out, &write_corpus(&generated))?;
            let unmatched_path = unmatched
                .unwrap_or_else(|| PathBuf::from(format!("{}.unmatched.tsv", out.display())));
            let mut tsv = String::new();
            for (line_no, sentence) in &missed {
                tsv.push_str(&format!("{line_no}\t{sentence}\n"));
            }
            write_file(&unmatched_path, &tsv)?;
            println!(
                "wrote {} ({} generated), {} ({} unmatched)",
                out.display(),
                generated.len(),
                unmatched_path.display(),
                missed.len()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::parse_ratio;

    #[test]
    fn ratio_parsing() {
        assert_eq!(parse_ratio("12:1").unwrap(), (12, 1));
        assert_eq!(parse_ratio("1:1").unwrap(), (1, 1));
        assert!(parse_ratio("12").is_err());
        assert!(parse_ratio("0:1").is_err());
        assert!(parse_ratio("a:b").is_err());
    }
}
