use std::fs;
use std::path::{Path, PathBuf};

use reckon_core::clustering::{
    ipca_fit, load_embeddings, load_ids, pam, reduce_to_variance, sweep_k_distances, write_embeddings_text,
    ClusterAssignment, DistanceMatrix, EmbeddingFormat, KReport, Metric,
};
use reckon_core::corpus::{
    load_corpus_with, load_stopwords, preprocess, to_transactions, tokenize_corpus, top_frequent_words, Corpus,
    CorpusFormat, LoadReport, PreprocessConfig, TagOntology,
};
use reckon_core::langmodel::{build_pairs, fit_vocab, predict_consequence, train};
use reckon_core::rules::{export_rule_graph, fisinfis_mine, write_rules_csv};
use reckon_core::vectors::{build_term_index, tfidf_matrix, Document};
use serde::Serialize;

use crate::artifact::{load_model, save_model};
use crate::{Cli, CliError, Command, PipelineConfig, TextArgs};

type Result<T> = std::result::Result<T, CliError>;

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(data)?;
    text.push('\n');
    write_file(path, text)
}

fn write_csv<const N: usize>(path: &Path, header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(data)?;
    for row in rows {
        w.write_record(&row).map_err(data)?;
    }
    write_file(path, w.into_inner().map_err(data)?)
}

struct Context {
    config: PipelineConfig,
    out: PathBuf,
}

impl Context {
    fn output(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

pub(crate) fn execute(cli: Cli) -> Result<String> {
    let mut config = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.lm.seed = config.seed;
    if let Some(dir) = cli.output_dir {
        config.paths.output_dir = Some(dir);
    }
    let out = config.paths.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut ctx = Context { config, out };
    match cli.command {
        Command::Preprocess { text, top_k } => {
            apply_text_args(&mut ctx.config, text);
            run_preprocess(&ctx, top_k)
        }
        Command::MineRules {
            text,
            minsupp,
            mincnf,
            idf_min,
            idf_max,
            max_itemset_size,
            no_lift_filter,
        } => {
            apply_text_args(&mut ctx.config, text);
            let r = &mut ctx.config.rules;
            set(&mut r.minsupp, minsupp);
            set(&mut r.mincnf, mincnf);
            set(&mut r.idf_min, idf_min);
            if idf_max.is_some() {
                r.idf_max = idf_max;
            }
            set(&mut r.max_itemset_size, max_itemset_size);
            if no_lift_filter {
                r.require_lift_gt1 = false;
            }
            run_mine_rules(&ctx)
        }
        Command::ClusterTfidf {
            text,
            k,
            metric,
            sweep,
            k_min,
            k_max,
            max_iter,
        } => {
            apply_text_args(&mut ctx.config, text);
            let c = &mut ctx.config.clustering;
            set(&mut c.k, k);
            set(&mut c.k_min, k_min);
            set(&mut c.k_max, k_max);
            set(&mut c.max_iter, max_iter);
            let metric = parse_metric(metric, c.metric, Metric::Cosine)?;
            run_cluster_tfidf(&ctx, metric, sweep)
        }
        Command::ClusterEmbeddings {
            embeddings,
            ids,
            variance,
            k,
            k_min,
            k_max,
            metric,
            batch_size,
            max_iter,
        } => {
            let cfg = &mut ctx.config;
            set_path(&mut cfg.paths.embeddings, embeddings);
            set_path(&mut cfg.paths.ids, ids);
            let c = &mut cfg.clustering;
            set(&mut c.variance_threshold, variance);
            set(&mut c.k_min, k_min);
            set(&mut c.k_max, k_max);
            set(&mut c.batch_size, batch_size);
            set(&mut c.max_iter, max_iter);
            let metric = parse_metric(metric, c.metric, Metric::Euclidean)?;
            run_cluster_embeddings(&ctx, metric, k)
        }
        Command::TrainLm {
            text,
            epochs,
            batch_size,
            learning_rate,
            seq_len,
            vocab_size,
            embed_dim,
            recurrent_units,
            dense_units,
            dropout,
        } => {
            apply_text_args(&mut ctx.config, text);
            let lm = &mut ctx.config.lm;
            set(&mut lm.epochs, epochs);
            set(&mut lm.batch_size, batch_size);
            set(&mut lm.learning_rate, learning_rate);
            set(&mut lm.seq_len, seq_len);
            set(&mut lm.vocab_size, vocab_size);
            set(&mut lm.embed_dim, embed_dim);
            set(&mut lm.recurrent_units, recurrent_units);
            set(&mut lm.dense_units, dense_units);
            set(&mut lm.dropout_rate, dropout);
            run_train_lm(&ctx)
        }
        Command::Predict { model, text, top_k } => {
            set_path(&mut ctx.config.paths.model, model);
            run_predict(&ctx, &text, top_k)
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_path(slot: &mut Option<PathBuf>, value: Option<PathBuf>) {
    if value.is_some() {
        *slot = value;
    }
}

fn apply_text_args(config: &mut PipelineConfig, text: TextArgs) {
    set_path(&mut config.paths.corpus, text.corpus);
    set_path(&mut config.paths.stopwords, text.stopwords);
    set_path(&mut config.paths.ontology, text.ontology);
    set(&mut config.min_token_len, text.min_token_len);
    if text.use_tags {
        config.use_tags = true;
    }
}

fn parse_metric(flag: Option<String>, configured: Option<Metric>, default: Metric) -> Result<Metric> {
    match flag {
        Some(s) => s.parse().map_err(usage),
        None => Ok(configured.unwrap_or(default)),
    }
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| CliError::Usage(format!("missing --{flag} (or paths.{} in the config file)", flag.replace('-', "_"))))
}

fn prepare_output(ctx: &Context) -> Result<()> {
    fs::create_dir_all(&ctx.out)
        .map_err(|e| CliError::Data(format!("cannot create output directory {}: {e}", ctx.out.display())))
}

struct TextInput {
    corpus: Corpus,
    report: LoadReport,
    preprocess: PreprocessConfig,
    ontology: Option<TagOntology>,
}

fn load_text(config: &PipelineConfig) -> Result<TextInput> {
    let corpus_path = required(&config.paths.corpus, "corpus")?;
    let stopwords: Vec<String> = match &config.paths.stopwords {
        Some(p) => load_stopwords(p).map_err(data)?.into_iter().collect(),
        None => PreprocessConfig::default().sorted_stopwords(),
    };
    let defaults = PreprocessConfig::default();
    let preprocess = PreprocessConfig::new(stopwords, config.min_token_len, defaults.placeholders().iter().cloned())
        .map_err(usage)?;
    let ontology = match (config.use_tags, &config.paths.ontology) {
        (true, Some(p)) => Some(TagOntology::load(p).map_err(data)?),
        (true, None) => return Err(CliError::Usage("--use-tags needs --ontology".into())),
        (false, _) => None,
    };
    let (corpus, report) =
        load_corpus_with(corpus_path, CorpusFormat::from_path(corpus_path), &preprocess).map_err(data)?;
    Ok(TextInput {
        corpus,
        report,
        preprocess,
        ontology,
    })
}

#[derive(Serialize)]
struct PreprocessReport<'a> {
    loaded: usize,
    dropped: usize,
    transactions: usize,
    flagged: &'a [String],
    use_tags: bool,
}

fn run_preprocess(ctx: &Context, top_k: usize) -> Result<String> {
    let input = load_text(&ctx.config)?;
    let set = to_transactions(&input.corpus, &input.preprocess, input.ontology.as_ref()).map_err(data)?;
    let tokens = tokenize_corpus(&input.corpus, &input.preprocess, input.ontology.as_ref());
    let top = top_frequent_words(&tokens, top_k);
    prepare_output(ctx)?;
    write_csv(
        &ctx.output("transactions.csv"),
        ["id", "items"],
        set.transactions.iter().map(|t| {
            [t.id.clone(), t.items.iter().cloned().collect::<Vec<_>>().join(" ")]
        }),
    )?;
    write_csv(
        &ctx.output("top_words.csv"),
        ["word", "count"],
        top.iter().map(|(w, c)| [w.clone(), c.to_string()]),
    )?;
    write_json(
        &ctx.output("preprocess_report.json"),
        &PreprocessReport {
            loaded: input.report.loaded,
            dropped: input.report.dropped,
            transactions: set.transactions.len(),
            flagged: &set.flagged,
            use_tags: input.ontology.is_some(),
        },
    )?;
    Ok(format!(
        "preprocess: {} records loaded, {} dropped, {} transactions, {} empty -> {}",
        input.report.loaded,
        input.report.dropped,
        set.transactions.len(),
        set.flagged.len(),
        ctx.out.display()
    ))
}

fn run_mine_rules(ctx: &Context) -> Result<String> {
    ctx.config.rules.validate().map_err(usage)?;
    let input = load_text(&ctx.config)?;
    let set = to_transactions(&input.corpus, &input.preprocess, input.ontology.as_ref()).map_err(data)?;
    let rules = fisinfis_mine(&set.transactions, &ctx.config.rules).map_err(data)?;
    prepare_output(ctx)?;
    let mut csv = Vec::new();
    write_rules_csv(&rules, &mut csv).map_err(data)?;
    write_file(&ctx.output("rules.csv"), csv)?;
    write_file(&ctx.output("rules.dot"), export_rule_graph(&rules))?;
    let positive = rules.iter().filter(|r| r.is_positive()).count();
    Ok(format!(
        "mine-rules: {} rules ({} positive, {} negative) from {} transactions -> {}",
        rules.len(),
        positive,
        rules.len() - positive,
        set.transactions.len(),
        ctx.out.display()
    ))
}

#[derive(Serialize)]
struct ClusterReport<'a> {
    source: &'a str,
    metric: String,
    k: usize,
    cost: f64,
    silhouette: f64,
    medoid_ids: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_components: Option<usize>,
    per_k_table: Vec<KReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    truncated_from: Option<usize>,
    seed: u64,
}

struct Fit {
    best: ClusterAssignment,
    table: Vec<KReport>,
    truncated_from: Option<usize>,
}

fn fit_clusters(dist: &DistanceMatrix, fixed_k: Option<usize>, ctx: &Context) -> Result<Fit> {
    let c = &ctx.config.clustering;
    match fixed_k {
        Some(k) => {
            let mut best = pam(dist, k, c.max_iter).map_err(data)?;
            best.seed = ctx.config.seed;
            let table = vec![KReport {
                k,
                cost: best.cost,
                silhouette: best.silhouette,
            }];
            Ok(Fit {
                best,
                table,
                truncated_from: None,
            })
        }
        None => {
            if c.k_min > c.k_max {
                return Err(CliError::Usage(format!("k range [{}, {}] is empty", c.k_min, c.k_max)));
            }
            let r = sweep_k_distances(dist, c.k_min, c.k_max, c.max_iter, ctx.config.seed).map_err(data)?;
            Ok(Fit {
                best: r.best,
                table: r.table,
                truncated_from: r.truncated_from,
            })
        }
    }
}

fn write_clusters(ctx: &Context, ids: &[String], fit: Fit, source: &str, metric: Metric, n_components: Option<usize>) -> Result<String> {
    write_csv(
        &ctx.output("clusters.csv"),
        ["id", "cluster"],
        ids.iter().zip(&fit.best.labels).map(|(id, l)| [id.clone(), l.to_string()]),
    )?;
    let report = ClusterReport {
        source,
        metric: metric.to_string(),
        k: fit.best.k(),
        cost: fit.best.cost,
        silhouette: fit.best.silhouette,
        medoid_ids: fit.best.medoids.iter().map(|&m| ids[m].clone()).collect(),
        n_components,
        per_k_table: fit.table,
        truncated_from: fit.truncated_from,
        seed: ctx.config.seed,
    };
    write_json(&ctx.output("clusters.json"), &report)?;
    Ok(format!(
        "{source}: {} points in {} clusters, cost {:.6}, silhouette {:.4} -> {}",
        ids.len(),
        report.k,
        report.cost,
        report.silhouette,
        ctx.out.display()
    ))
}

fn run_cluster_tfidf(ctx: &Context, metric: Metric, sweep: bool) -> Result<String> {
    let input = load_text(&ctx.config)?;
    let tokens = tokenize_corpus(&input.corpus, &input.preprocess, input.ontology.as_ref());
    let docs: Vec<Document> = input
        .corpus
        .records()
        .iter()
        .zip(&tokens)
        .map(|(r, t)| Document::from_tokens(r.id.clone(), t))
        .collect();
    let index = build_term_index(&docs).map_err(data)?;
    let matrix = tfidf_matrix(&docs, &index).map_err(data)?;
    let dist = DistanceMatrix::from_tfidf(&matrix, metric);
    let fit = fit_clusters(&dist, (!sweep).then_some(ctx.config.clustering.k), ctx)?;

    prepare_output(ctx)?;
    let mut coo = Vec::new();
    matrix.write_coo(&mut coo).map_err(data)?;
    write_file(&ctx.output("tfidf.coo"), coo)?;
    let mut terms = index.terms().join("\n");
    terms.push('\n');
    write_file(&ctx.output("terms.txt"), terms)?;
    let ids: Vec<String> = docs.iter().map(|d| d.id.clone()).collect();
    write_clusters(ctx, &ids, fit, "cluster-tfidf", metric, None)
}

fn run_cluster_embeddings(ctx: &Context, metric: Metric, k: Option<usize>) -> Result<String> {
    let c = &ctx.config.clustering;
    if !(c.variance_threshold > 0.0 && c.variance_threshold <= 1.0) {
        return Err(CliError::Usage(format!("variance threshold {} not in (0, 1]", c.variance_threshold)));
    }
    if c.batch_size == 0 {
        return Err(CliError::Usage("batch size must be at least 1".into()));
    }
    let path = required(&ctx.config.paths.embeddings, "embeddings")?;
    let with_path = |e: reckon_core::clustering::ClusterError| CliError::Data(format!("{}: {e}", path.display()));
    let emb = load_embeddings(path, EmbeddingFormat::from_path(path)).map_err(with_path)?;
    let ids = match &ctx.config.paths.ids {
        Some(p) => load_ids(p).map_err(data)?,
        None => (0..emb.n_rows()).map(|i| i.to_string()).collect(),
    };
    if ids.len() != emb.n_rows() {
        return Err(CliError::Data(format!("{} ids for {} embedding rows", ids.len(), emb.n_rows())));
    }
    let model = ipca_fit(&emb.values, c.batch_size).map_err(with_path)?;
    let (reduced, m) = reduce_to_variance(&model, &emb.values, c.variance_threshold).map_err(with_path)?;
    let dist = DistanceMatrix::from_points(&reduced, metric).map_err(data)?;
    let fit = fit_clusters(&dist, k, ctx)?;

    prepare_output(ctx)?;
    let mut text = Vec::new();
    write_embeddings_text(&reduced, &mut text).map_err(data)?;
    write_file(&ctx.output("reduced.txt"), text)?;
    write_clusters(ctx, &ids, fit, "cluster-embeddings", metric, Some(m))
}

fn run_train_lm(ctx: &Context) -> Result<String> {
    let lm = ctx.config.lm.clone();
    lm.validate().map_err(usage)?;
    let input = load_text(&ctx.config)?;
    let texts: Vec<Vec<String>> = input
        .corpus
        .records()
        .iter()
        .flat_map(|r| [preprocess(&r.dynamics, &input.preprocess), preprocess(&r.consequence, &input.preprocess)])
        .collect();
    let vocab = fit_vocab(&texts, lm.vocab_size).map_err(data)?;
    let pairs = build_pairs(&input.corpus, &input.preprocess, &vocab, lm.seq_len).map_err(data)?;
    if pairs.is_empty() {
        return Err(CliError::Data("no record has an in-vocabulary consequence token".into()));
    }
    let skipped = input.corpus.len() - pairs.len();
    let (model, history) = train(&pairs, vocab, lm).map_err(data)?;

    prepare_output(ctx)?;
    let model_dir = ctx.output("model");
    save_model(&model, &input.preprocess, &model_dir).map_err(data)?;
    write_csv(
        &ctx.output("history.csv"),
        ["epoch", "loss"],
        history.iter().enumerate().map(|(e, l)| [(e + 1).to_string(), l.to_string()]),
    )?;
    let last = history.last().map_or("n/a".to_string(), |l| format!("{l:.6}"));
    Ok(format!(
        "train-lm: {} pairs ({} skipped), vocabulary {}, {} epochs, final loss {} -> {}",
        pairs.len(),
        skipped,
        model.vocab.len(),
        history.len(),
        last,
        model_dir.display()
    ))
}

#[derive(Serialize)]
struct Prediction<'a> {
    text: &'a str,
    tokens: Vec<ScoredToken>,
}

#[derive(Serialize)]
struct ScoredToken {
    token: String,
    probability: f64,
}

fn run_predict(ctx: &Context, text: &str, top_k: usize) -> Result<String> {
    if top_k == 0 {
        return Err(CliError::Usage("--top-k must be at least 1".into()));
    }
    let dir = ctx.config.paths.model.clone().unwrap_or_else(|| ctx.output("model"));
    let (model, preprocess) = load_model(&dir).map_err(data)?;
    let ranked = predict_consequence(&model, text, &preprocess, top_k).map_err(data)?;
    prepare_output(ctx)?;
    let summary = ranked
        .iter()
        .map(|(t, p)| format!("{t} ({p:.3})"))
        .collect::<Vec<_>>()
        .join(", ");
    write_json(
        &ctx.output("prediction.json"),
        &Prediction {
            text,
            tokens: ranked
                .into_iter()
                .map(|(token, probability)| ScoredToken { token, probability })
                .collect(),
        },
    )?;
    Ok(format!("predict: {summary}"))
}
