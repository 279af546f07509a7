use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use jtsmf::data::{build_documents, parse_edges, Corpus, Dataset, DocLevel, EdgeKind};
use jtsmf::embedding::{DocumentEmbeddings, EmbeddingConfig, EmbeddingMode, EmbeddingStore};
use jtsmf::factor::{self, FactorModel, Hyperparams, Problem};
use jtsmf::harness::pipeline::{embed_levels, embedding_corpora, infer_levels};
use jtsmf::harness::split::pairs_to_tsv;
use jtsmf::harness::{
    common_voting_friend_prob, evaluate_topk, mostpop_scores, pair_type_stats, run_pipeline, split, synth_generate,
    ModelKind, SplitSpec, SynthConfig, DEFAULT_KS,
};
use jtsmf::similarity::{build_matrices, SimilarityConfig, SimilarityMatrices, SparseMatrix};
use jtsmf::topic::{doc_topics_from_text, doc_topics_to_text, gibbs_train, DocTopics, LdaConfig, TopicModel};

#[derive(Parser, Debug)]
#[command(
    name = "jtsmf",
    version,
    about = "Topic-semantic-social matrix factorization for voting recommendation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Common-voting statistics by pair type and friend probability among co-participants.
    Stats(StatsArgs),
    /// Generate a synthetic dataset with planted communities.
    Synth(SynthArgs),
    /// Hold out a fraction of participations; writes the training dataset and test pairs.
    Split(SplitArgs),
    /// Train LDA on group documents.
    LdaTrain(LdaTrainArgs),
    /// Fold-in topic inference for voting, user and group documents.
    LdaInfer(LdaInferArgs),
    /// Train TEWE or skip-gram embeddings.
    Embed(EmbedArgs),
    /// TF-IDF weighted document embeddings, or topic mixtures with --theta.
    DocEmbed(DocEmbedArgs),
    /// Social, group and voting similarity matrices.
    Sims(SimsArgs),
    /// Train a factorization model.
    MfTrain(MfTrainArgs),
    /// Top-k recall, precision and micro-F1 on held-out pairs.
    Evaluate(EvaluateArgs),
    /// Run every stage from a TOML config into a run directory.
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug)]
struct DataArg {
    /// Dataset directory or manifest file.
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[command(flatten)]
    data: DataArg,
    #[arg(long, default_value_t = 1_000_000)]
    pairs: usize,
    #[arg(long, default_value_t = 10_000)]
    votings: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write pair_types.tsv and friend_probability.tsv here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// TOML file with generator settings; flags below override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    votings: Option<usize>,
    #[arg(long)]
    groups: Option<usize>,
    #[arg(long)]
    communities: Option<usize>,
    #[arg(long)]
    homophily: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SplitArgs {
    #[command(flatten)]
    data: DataArg,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    fraction: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct LdaTrainArgs {
    #[command(flatten)]
    data: DataArg,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    topics: usize,
    /// Defaults to 50 / topics.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long, default_value_t = 2000)]
    iterations: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct LdaInferArgs {
    #[command(flatten)]
    data: DataArg,
    #[arg(long)]
    model: PathBuf,
    /// Directory for doc_topics_{v,u,g}.tsv.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    iterations: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    #[command(flatten)]
    data: DataArg,
    /// Directory written by lda-infer.
    #[arg(long)]
    topics: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// `tewe` or `skipgram`.
    #[arg(long, default_value = "tewe")]
    mode: String,
    #[arg(long, default_value_t = 50)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 3)]
    negatives: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    learning_rate: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the binary format instead of text.
    #[arg(long)]
    binary: bool,
}

#[derive(Args, Debug)]
struct DocEmbedArgs {
    #[command(flatten)]
    data: DataArg,
    #[arg(long)]
    topics: PathBuf,
    /// Embedding store written by `embed`.
    #[arg(long, required_unless_present = "theta")]
    store: Option<PathBuf>,
    /// Use topic mixtures as document vectors.
    #[arg(long, conflicts_with = "store")]
    theta: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SimsArgs {
    #[command(flatten)]
    data: DataArg,
    #[arg(long)]
    doc_embeddings: PathBuf,
    /// Directory for social.txt, group.txt and voting.txt.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Voting neighbors kept per row; 0 keeps all.
    #[arg(long, default_value_t = 500)]
    cap: usize,
}

#[derive(Args, Debug)]
struct MfTrainArgs {
    #[command(flatten)]
    data: DataArg,
    /// Directory written by `sims`; omit for models without coupling.
    #[arg(long)]
    sims: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Supplies default weights.
    #[arg(long, default_value = "jts-mf")]
    model: String,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 10)]
    dim: usize,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, default_value_t = 0.01)]
    neg_weight: f64,
    #[arg(long, default_value_t = 0.001)]
    learning_rate: f64,
    #[arg(long, default_value_t = 200)]
    iterations: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Objective per iteration as TSV.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Training dataset (as written by `split`).
    #[command(flatten)]
    data: DataArg,
    #[arg(long)]
    test: PathBuf,
    #[arg(long, required_unless_present = "mostpop")]
    model: Option<PathBuf>,
    #[arg(long, conflicts_with = "model")]
    mostpop: bool,
    /// Comma-separated cutoffs.
    #[arg(long, value_delimiter = ',')]
    ks: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    /// Run directory.
    #[arg(long)]
    out: PathBuf,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => write(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn load(data: &DataArg) -> Result<Dataset> {
    Dataset::load(&data.data).with_context(|| format!("loading dataset {}", data.data.display()))
}

fn load_corpus(data: &DataArg) -> Result<(Dataset, Corpus)> {
    let dataset = load(data)?;
    let corpus = build_documents(&dataset.graph, &dataset.voting_texts)?;
    Ok((dataset, corpus))
}

fn topics_file(dir: &Path, level: DocLevel) -> PathBuf {
    dir.join(format!("doc_topics_{}.tsv", level.tag()))
}

fn load_topics(dir: &Path, corpus: &Corpus) -> Result<[Vec<DocTopics>; 3]> {
    let mut out: [Vec<DocTopics>; 3] = Default::default();
    for (slot, level) in DocLevel::ALL.into_iter().enumerate() {
        let path = topics_file(dir, level);
        let (tag, docs) = doc_topics_from_text(&read(&path)?).with_context(|| format!("parsing {}", path.display()))?;
        if tag != level.tag() {
            bail!("{} holds level `{tag}`, expected `{}`", path.display(), level.tag());
        }
        if docs.len() != corpus.n_docs(level) {
            bail!(
                "{} has {} documents, dataset has {}",
                path.display(),
                docs.len(),
                corpus.n_docs(level)
            );
        }
        out[slot] = docs;
    }
    Ok(out)
}

fn load_store(path: &Path) -> Result<EmbeddingStore> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let store = if bytes.starts_with(b"JTSMFEMB") {
        EmbeddingStore::from_bytes(&bytes)
    } else {
        EmbeddingStore::from_text(&String::from_utf8(bytes).context("embedding store is not UTF-8")?)
    };
    store.with_context(|| format!("parsing {}", path.display()))
}

fn load_sparse(path: &Path) -> Result<(Option<f64>, SparseMatrix)> {
    let (_, threshold, m) =
        SparseMatrix::from_text(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    Ok((threshold, m))
}

fn stats(args: StatsArgs) -> Result<()> {
    let dataset = load(&args.data)?;
    let pairs = pair_type_stats(&dataset.graph, args.pairs, args.seed)?.to_tsv();
    let friends = common_voting_friend_prob(&dataset.graph, args.votings, args.seed)?.to_tsv();
    match args.out {
        Some(dir) => {
            write(&dir.join("pair_types.tsv"), pairs)?;
            write(&dir.join("friend_probability.tsv"), friends)
        }
        None => {
            print!("{pairs}\n{friends}");
            Ok(())
        }
    }
}

fn synth(args: SynthArgs) -> Result<()> {
    let mut spec: SynthConfig = match &args.spec {
        Some(path) => jtsmf::harness::config::synth_from_toml(&read(path)?)?,
        None => SynthConfig::default(),
    };
    if let Some(v) = args.users {
        spec.n_users = v;
    }
    if let Some(v) = args.votings {
        spec.n_votings = v;
    }
    if let Some(v) = args.groups {
        spec.n_groups = v;
    }
    if let Some(v) = args.communities {
        spec.communities = v;
    }
    if let Some(v) = args.homophily {
        spec.homophily = v;
    }
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    let (dataset, truth) = synth_generate(&spec)?;
    dataset.write(&args.out)?;
    write(&args.out.join("ground_truth.tsv"), truth.to_tsv())
}

fn split_cmd(args: SplitArgs) -> Result<()> {
    let dataset = load(&args.data)?;
    let s = split(
        &dataset.graph,
        &SplitSpec {
            test_fraction: args.fraction,
            seed: args.seed,
        },
    )?;
    Dataset {
        graph: s.train,
        voting_texts: dataset.voting_texts,
    }
    .write(&args.out)?;
    write(&args.out.join("test.tsv"), pairs_to_tsv(&s.test))?;
    if !s.cold_users.is_empty() {
        eprintln!("{} users have no training participations", s.cold_users.len());
    }
    Ok(())
}

fn lda_train(args: LdaTrainArgs) -> Result<()> {
    let (_, corpus) = load_corpus(&args.data)?;
    let config = LdaConfig {
        topics: args.topics,
        alpha: args.alpha,
        beta: args.beta,
        iterations: args.iterations,
        seed: args.seed,
    };
    let model = gibbs_train(corpus.docs(DocLevel::Group), corpus.vocab_size(), &config)?;
    write(&args.out, model.to_text())
}

fn lda_infer(args: LdaInferArgs) -> Result<()> {
    let (_, corpus) = load_corpus(&args.data)?;
    let model = TopicModel::from_text(&read(&args.model)?)?;
    if model.vocab_size != corpus.vocab_size() {
        bail!(
            "model vocabulary has {} words, dataset has {}",
            model.vocab_size,
            corpus.vocab_size()
        );
    }
    let inferred = infer_levels(&model, &corpus, args.iterations, args.seed);
    for (slot, level) in DocLevel::ALL.into_iter().enumerate() {
        write(
            &topics_file(&args.out, level),
            doc_topics_to_text(level.tag(), model.topics, &inferred[slot]),
        )?;
    }
    Ok(())
}

fn embed(args: EmbedArgs) -> Result<()> {
    let (_, corpus) = load_corpus(&args.data)?;
    let inferred = load_topics(&args.topics, &corpus)?;
    let mode: EmbeddingMode = args.mode.parse()?;
    let config = EmbeddingConfig {
        mode,
        dim: args.dim,
        window: args.window,
        negatives: args.negatives,
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        seed: args.seed,
        ..EmbeddingConfig::default()
    };
    let pseudo = embedding_corpora(mode, &corpus, &inferred)?;
    let (store, _, _) = embed_levels(&pseudo, &corpus, &config)?;
    if args.binary {
        write(&args.out, store.to_bytes())
    } else {
        write(&args.out, store.to_text())
    }
}

fn doc_embed(args: DocEmbedArgs) -> Result<()> {
    let (_, corpus) = load_corpus(&args.data)?;
    let inferred = load_topics(&args.topics, &corpus)?;
    let embeds = match &args.store {
        Some(path) => {
            let store = load_store(path)?;
            let pseudo = embedding_corpora(store.mode(), &corpus, &inferred)?;
            let (embeds, skipped) = DocumentEmbeddings::compute(&pseudo, &corpus, &store)?;
            if skipped > 0 {
                eprintln!("{skipped} tokens had no vector in the store");
            }
            embeds
        }
        None => {
            let z = inferred.iter().flatten().map(|d| d.theta.len()).next().unwrap_or(0);
            DocumentEmbeddings::from_topics(&inferred, z)
        }
    };
    write(&args.out, embeds.to_text())
}

fn sims(args: SimsArgs) -> Result<()> {
    let dataset = load(&args.data)?;
    let embeds = DocumentEmbeddings::from_text(&read(&args.doc_embeddings)?)?;
    let config = SimilarityConfig {
        threshold: args.threshold,
        candidate_cap: (args.cap > 0).then_some(args.cap),
    };
    let m = build_matrices(&dataset.graph, &embeds, &config)?;
    write(&args.out.join("social.txt"), m.social.to_text("social", None))?;
    write(&args.out.join("group.txt"), m.group.to_text("group", None))?;
    write(
        &args.out.join("voting.txt"),
        m.voting.to_text("voting", Some(m.threshold)),
    )
}

fn mf_train(args: MfTrainArgs) -> Result<()> {
    let dataset = load(&args.data)?;
    let kind: ModelKind = args.model.parse()?;
    if !kind.is_factorization() {
        bail!("`{kind}` is not a factorization model");
    }
    let (a, b, g) = kind.default_weights();
    let hyper = Hyperparams {
        dim: args.dim,
        alpha: args.alpha.unwrap_or(a),
        beta: args.beta.unwrap_or(b),
        gamma: args.gamma.unwrap_or(g),
        lambda: args.lambda,
        neg_weight: args.neg_weight,
        learning_rate: args.learning_rate,
        iterations: args.iterations,
        seed: args.seed,
        ..Hyperparams::default()
    };
    let sims = match &args.sims {
        Some(dir) => {
            let (_, social) = load_sparse(&dir.join("social.txt"))?;
            let (_, group) = load_sparse(&dir.join("group.txt"))?;
            let (threshold, voting) = load_sparse(&dir.join("voting.txt"))?;
            SimilarityMatrices::from_parts(social, group, voting, threshold.unwrap_or(f64::NAN))?
        }
        None => {
            if hyper.alpha != 0.0 || hyper.beta != 0.0 || hyper.gamma != 0.0 {
                bail!("non-zero similarity weights need --sims");
            }
            SimilarityMatrices::empty(dataset.graph.n_users(), dataset.graph.n_votings())
        }
    };
    let problem = Problem::new(&dataset.graph, &sims)?;
    let model = factor::train(&problem, &hyper)?;
    if let Some(log) = &args.log {
        write(log, model.training_log_tsv())?;
    }
    write(&args.out, model.to_text())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let dataset = load(&args.data)?;
    let train = &dataset.graph;
    let test = parse_edges(
        &read(&args.test)?,
        EdgeKind::UserVoting,
        &train.dims(),
        &args.test.display().to_string(),
    )?;
    let ks = if args.ks.is_empty() {
        DEFAULT_KS.to_vec()
    } else {
        args.ks
    };
    let report = match &args.model {
        Some(path) => {
            let model = FactorModel::from_text(&read(path)?)?;
            if model.n_users() != train.n_users() || model.n_votings() != train.n_votings() {
                bail!("model shape does not match the dataset");
            }
            evaluate_topk(&path.display().to_string(), &model, &test, train, &ks)?
        }
        None => {
            let scores = mostpop_scores(train);
            let scorer = move |_u: usize| scores.clone();
            evaluate_topk(ModelKind::MostPop.name(), &scorer, &test, train, &ks)?
        }
    };
    emit(args.out.as_deref(), &report.to_tsv())
}

fn pipeline(args: PipelineArgs) -> Result<()> {
    let reports = run_pipeline(&args.config, &args.out)?;
    for r in &reports {
        let recall: Vec<String> = r.rows.iter().map(|m| format!("R@{}={:.4}", m.k, m.recall)).collect();
        println!("{}\t{}", r.model, recall.join(" "));
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Stats(a) => stats(a),
        Command::Synth(a) => synth(a),
        Command::Split(a) => split_cmd(a),
        Command::LdaTrain(a) => lda_train(a),
        Command::LdaInfer(a) => lda_infer(a),
        Command::Embed(a) => embed(a),
        Command::DocEmbed(a) => doc_embed(a),
        Command::Sims(a) => sims(a),
        Command::MfTrain(a) => mf_train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Pipeline(a) => pipeline(a),
    }
}
