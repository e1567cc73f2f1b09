//! `textscale`: ingest corpora, fit topic models and trees, run wordscores,
//! evaluate score tables, and serve the HTTP API.

mod features;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use textscale_core::corpus::{
    apply_variant, build_corpus, read_documents, read_stoplist, CorpusVariant, CorpusVariantConfig,
};
use textscale_core::eval::{
    ci_overlap_stats, diff_of_means, discrepancies, pearson, range_vs_size, run_batch_grid, shared_scores, spearman,
    summary_by_year, GroupStats,
};
use textscale_core::lda::{fit_lda, infer_theta, AlphaMode, LdaConfig};
use textscale_core::lsa::{lsa_features, top_words, SvdParams};
use textscale_core::trees::{fit_ensemble, Dataset, EnsembleConfig, FeatureSubset, TreeMethod};
use textscale_core::wordscores::{run_wordscores, SpreadEstimator, TrainingSet};
use textscale_core::{BatchSpec, CorpusInputs, DocKey, ScoreTable, SparseTermMatrix, TrainSplit};

#[derive(Parser)]
#[command(name = "textscale", version, about = "Supervised text scaling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize documents into a term-document matrix.
    Ingest(IngestArgs),
    /// Fit a truncated SVD of the TF-IDF matrix.
    Lsa(LsaArgs),
    /// Fit an LDA topic model.
    Lda(LdaArgs),
    /// Fit a regression tree ensemble on document features.
    Trees(TreesArgs),
    /// Score documents with wordscores.
    Wordscores(WordscoresArgs),
    /// Compare and summarize score tables.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Directory of `<entity>_<year>.txt` files, or a JSON-lines file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "A")]
    variant: CorpusVariant,
    /// One word per line; required for variant B.
    #[arg(long)]
    stoplist: Option<PathBuf>,
    /// Variant B keeps words that occur at least this often in some document.
    #[arg(long, default_value_t = 2)]
    min_count: u64,
    /// Reject documents outside this inclusive year range, e.g. `1990:2010`.
    #[arg(long, value_parser = parse_year_range)]
    years: Option<(i32, i32)>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LsaArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Writes the factors.
    #[arg(long)]
    out: PathBuf,
    /// Also write per-document topic scores as a feature CSV.
    #[arg(long)]
    features_out: Option<PathBuf>,
    /// Print this many top words per topic.
    #[arg(long, default_value_t = 0)]
    top_words: usize,
}

#[derive(Args)]
struct LdaArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = "sym")]
    alpha: AlphaMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    passes: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write per-document topic proportions as a feature CSV.
    #[arg(long)]
    features_out: Option<PathBuf>,
}

#[derive(Args)]
struct TreesArgs {
    /// Feature CSV (`entity,year,f1,...`), e.g. from `lsa --features-out`.
    #[arg(long)]
    features: PathBuf,
    /// Training scores CSV; documents listed here are the training set.
    #[arg(long)]
    scores: PathBuf,
    #[arg(long, default_value = "rf")]
    method: TreeMethod,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value = "all")]
    c: FeatureSubset,
    /// Minimum number of samples on each side of a split.
    #[arg(long, default_value_t = 5)]
    l: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Write predictions for the documents outside the training set.
    #[arg(long)]
    predict_out: Option<PathBuf>,
}

#[derive(Args)]
struct WordscoresArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    train_scores: PathBuf,
    /// Train only on these years and score every document from other years.
    /// Without it, every document not in the training scores is scored.
    #[arg(long, value_delimiter = ',')]
    train_years: Option<Vec<i32>>,
    #[arg(long, default_value = "population", value_parser = parse_estimator)]
    estimator: SpreadEstimator,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Pearson and Spearman correlation over shared keys.
    Corr {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Per-year n, mean, standard deviation, min and max.
    Summary {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Largest differences `a - b` in each direction.
    Discrep {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 10)]
        top: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Confidence-interval overlap counts.
    Overlap {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normal test for a difference of two group means.
    Dmeans {
        #[arg(long, allow_hyphen_values = true)]
        mean1: f64,
        #[arg(long)]
        se1: f64,
        #[arg(long, allow_hyphen_values = true)]
        mean2: f64,
        #[arg(long)]
        se2: f64,
    },
    /// Interval width against document length in tokens.
    Range {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a grid of batches and correlate each with a reference table.
    Grid {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        stoplist: Option<PathBuf>,
        /// JSON array of batch specs.
        #[arg(long)]
        specs: PathBuf,
        #[arg(long)]
        train_scores: PathBuf,
        #[arg(long, value_delimiter = ',')]
        train_years: Option<Vec<i32>>,
        #[arg(long)]
        reference: PathBuf,
        /// Also write the full report as JSON.
        #[arg(long)]
        json_out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ServeArgs {
    /// Overrides TEXTSCALE_LISTEN.
    #[arg(long)]
    listen: Option<std::net::SocketAddr>,
    /// Overrides TEXTSCALE_DATA_DIR.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Overrides TEXTSCALE_WORKERS.
    #[arg(long)]
    workers: Option<usize>,
}

fn parse_year_range(s: &str) -> Result<(i32, i32), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected LO:HI")?;
    let lo: i32 = lo.trim().parse().map_err(|_| format!("bad year {lo:?}"))?;
    let hi: i32 = hi.trim().parse().map_err(|_| format!("bad year {hi:?}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn parse_estimator(s: &str) -> Result<SpreadEstimator, String> {
    match s {
        "population" => Ok(SpreadEstimator::Population),
        "sample" => Ok(SpreadEstimator::Sample),
        other => Err(format!("unknown estimator {other:?}, expected population or sample")),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

/// A file when given, stdout otherwise.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn load_matrix(path: &Path) -> Result<SparseTermMatrix> {
    SparseTermMatrix::load(path).with_context(|| format!("reading matrix {}", path.display()))
}

fn load_scores(path: &Path) -> Result<ScoreTable> {
    ScoreTable::load(path).with_context(|| format!("reading scores {}", path.display()))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Ingest(a) => ingest(a),
        Command::Lsa(a) => lsa(a),
        Command::Lda(a) => lda(a),
        Command::Trees(a) => trees(a),
        Command::Wordscores(a) => wordscores(a),
        Command::Eval(c) => eval(c),
        Command::Serve(a) => serve(a),
    }
}

fn ingest(a: IngestArgs) -> Result<()> {
    let docs = read_documents(&a.input, a.years).with_context(|| format!("reading {}", a.input.display()))?;
    let full = build_corpus(&docs)?;
    let stoplist = a
        .stoplist
        .as_deref()
        .map(read_stoplist)
        .transpose()?
        .unwrap_or_default();
    let config = CorpusVariantConfig {
        variant: a.variant,
        stoplist,
        min_max_in_doc_count: a.min_count,
    };
    let matrix = apply_variant(&full, &config)?;
    matrix.save(&a.out)?;
    eprintln!(
        "{} documents, {} words, {} nonzero counts",
        matrix.n_docs(),
        matrix.n_words(),
        matrix.nnz()
    );
    Ok(())
}

fn lsa(a: LsaArgs) -> Result<()> {
    let matrix = load_matrix(&a.matrix)?;
    let (factors, scores) = lsa_features(&matrix, SvdParams::new(a.k, a.seed))?;
    factors.save(&a.out)?;
    if let Some(p) = &a.features_out {
        features::write(create(p)?, &scores.doc_keys, &scores.doc_features())?;
    }
    let shown = if a.top_words > 0 { factors.k() } else { 0 };
    for t in 0..shown {
        let words = top_words(&factors, matrix.vocab().words(), t, a.top_words)?;
        let list: Vec<String> = words.iter().map(|(w, v)| format!("{w} ({v:+.3})")).collect();
        println!("topic {}: {}", t + 1, list.join(", "));
    }
    Ok(())
}

fn lda(a: LdaArgs) -> Result<()> {
    let matrix = load_matrix(&a.matrix)?;
    let config = LdaConfig {
        alpha_mode: a.alpha,
        passes: a.passes,
        ..LdaConfig::new(a.k, a.seed)
    };
    let model = fit_lda(&matrix, &config)?;
    model.save(&a.out)?;
    if let Some(p) = &a.features_out {
        let theta = infer_theta(&model, &matrix)?;
        features::write(create(p)?, &theta.doc_keys, &theta.theta)?;
    }
    Ok(())
}

fn trees(a: TreesArgs) -> Result<()> {
    let feats = features::read(File::open(&a.features).with_context(|| format!("opening {}", a.features.display()))?)?;
    let scores = load_scores(&a.scores)?;
    let (mut rows, mut y, mut rest_keys, mut rest_rows) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (key, row) in feats.keys.iter().zip(feats.rows) {
        match scores.get(key) {
            Some(r) => {
                rows.push(row);
                y.push(r.score);
            }
            None => {
                rest_keys.push(key.clone());
                rest_rows.push(row);
            }
        }
    }
    if rows.is_empty() {
        bail!("no feature row has a training score");
    }
    let config = EnsembleConfig {
        method: a.method,
        n_trees: a.n,
        c_mode: a.c,
        min_node_size: a.l,
        seed: a.seed,
    };
    let model = fit_ensemble(&Dataset::new(&rows, y)?, &config)?;
    model.save(&a.out)?;
    eprintln!("fitted {} on {} training documents", a.method.name(), rows.len());
    if let Some(p) = &a.predict_out {
        let preds = model.predict_rows(&rest_rows);
        ScoreTable::from_pairs(rest_keys.into_iter().zip(preds))?.save(p)?;
    }
    Ok(())
}

fn wordscores(a: WordscoresArgs) -> Result<()> {
    let matrix = load_matrix(&a.matrix)?;
    let split = TrainSplit::new(load_scores(&a.train_scores)?, a.train_years);
    let (training, virgin) = split.resolve(&matrix);
    let result = run_wordscores(&matrix, &TrainingSet::new(training)?, &virgin, a.estimator)?;
    result.write_csv(create(&a.out)?)?;
    eprintln!("scored {} documents", result.scores.len());
    if !result.unscorable.is_empty() {
        let keys: Vec<String> = result.unscorable.iter().map(DocKey::to_string).collect();
        eprintln!("unscorable (no scored words): {}", keys.join(" "));
    }
    Ok(())
}

fn eval(c: EvalCommand) -> Result<()> {
    match c {
        EvalCommand::Corr { a, b } => {
            let (a, b) = (load_scores(&a)?, load_scores(&b)?);
            println!("n_shared,pearson,spearman");
            println!(
                "{},{},{}",
                shared_scores(&a, &b).len(),
                pearson(&a, &b)?,
                spearman(&a, &b)?
            );
        }
        EvalCommand::Summary { scores, out } => {
            let mut w = csv::Writer::from_writer(output(out.as_deref())?);
            w.write_record(["year", "n", "mean", "std_dev", "min", "max"])?;
            for s in summary_by_year(&load_scores(&scores)?)? {
                let year = s.year.map_or("all".to_string(), |y| y.to_string());
                w.write_record([
                    year,
                    s.n.to_string(),
                    s.mean.to_string(),
                    s.std_dev.to_string(),
                    s.min.to_string(),
                    s.max.to_string(),
                ])?;
            }
            w.flush()?;
        }
        EvalCommand::Discrep { a, b, top, out } => {
            let d = discrepancies(&load_scores(&a)?, &load_scores(&b)?, top);
            let mut w = csv::Writer::from_writer(output(out.as_deref())?);
            w.write_record(["direction", "rank", "entity", "year", "a", "b", "delta"])?;
            for (dir, list) in [("positive", &d.positive), ("negative", &d.negative)] {
                for (i, x) in list.iter().enumerate() {
                    w.write_record([
                        dir.to_string(),
                        (i + 1).to_string(),
                        x.key.entity.clone(),
                        x.key.year.to_string(),
                        x.a.to_string(),
                        x.b.to_string(),
                        x.delta.to_string(),
                    ])?;
                }
            }
            w.flush()?;
        }
        EvalCommand::Overlap { scores, out } => {
            let stats = ci_overlap_stats(&load_scores(&scores)?)?;
            let mut w = csv::Writer::from_writer(output(out.as_deref())?);
            w.write_record(["entity", "year", "overlaps"])?;
            for (key, n) in &stats.counts {
                w.write_record([key.entity.clone(), key.year.to_string(), n.to_string()])?;
            }
            w.flush()?;
            eprintln!("mean overlap count {:.4}", stats.mean);
        }
        EvalCommand::Dmeans { mean1, se1, mean2, se2 } => {
            let g = |mean, std_error| GroupStats { mean, std_error, n: 0 };
            let d = diff_of_means(g(mean1, se1), g(mean2, se2))?;
            println!("z,p_two_sided,p_one_sided");
            println!("{},{},{}", d.z, d.p, d.p_one_sided);
        }
        EvalCommand::Range { scores, matrix, out } => {
            let matrix = load_matrix(&matrix)?;
            let sizes = matrix
                .doc_keys()
                .iter()
                .cloned()
                .zip(matrix.doc_lengths().into_iter().map(|n| n as f64))
                .collect();
            let mut w = csv::Writer::from_writer(output(out.as_deref())?);
            w.write_record(["entity", "year", "size", "range"])?;
            for r in range_vs_size(&load_scores(&scores)?, &sizes)? {
                w.write_record([
                    r.key.entity.clone(),
                    r.key.year.to_string(),
                    r.size.to_string(),
                    r.range.to_string(),
                ])?;
            }
            w.flush()?;
        }
        EvalCommand::Grid {
            matrix,
            stoplist,
            specs,
            train_scores,
            train_years,
            reference,
            json_out,
        } => {
            let stoplist = stoplist.as_deref().map(read_stoplist).transpose()?.unwrap_or_default();
            let inputs = CorpusInputs::new(load_matrix(&matrix)?, stoplist);
            let specs: Vec<BatchSpec> = serde_json::from_reader(File::open(&specs)?)
                .with_context(|| format!("parsing batch specs {}", specs.display()))?;
            let split = TrainSplit::new(load_scores(&train_scores)?, train_years);
            let report = run_batch_grid(&inputs, &specs, &split, &load_scores(&reference)?);
            print!("{}", report.render());
            for e in &report.entries {
                if let Err(msg) = &e.outcome {
                    eprintln!("{}: {msg}", e.spec.row_label());
                }
            }
            if let Some(p) = json_out {
                serde_json::to_writer_pretty(create(&p)?, &report)?;
            }
        }
    }
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    tracing_subscriber::fmt().init();
    let mut config = textscale_service::ServiceConfig::from_env().map_err(anyhow::Error::msg)?;
    if let Some(l) = a.listen {
        config.listen = l;
    }
    if let Some(d) = a.data_dir {
        config.data_dir = d;
    }
    if let Some(w) = a.workers {
        if w == 0 {
            bail!("--workers must be at least 1");
        }
        config.workers = w;
    }
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(textscale_service::serve(config))?;
    Ok(())
}
