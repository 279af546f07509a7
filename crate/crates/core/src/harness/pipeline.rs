//! End-to-end runs: ingest, split, topics, embeddings, similarities, training
//! and evaluation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::data::{build_documents, Corpus, Dataset, DocLevel, EdgeKind};
use crate::embedding::{
    build_pseudo_corpus, plain_corpus, train_embeddings, DocumentEmbeddings, EmbeddingConfig, EmbeddingMode,
    EmbeddingStore, PseudoWord,
};
use crate::error::{io_err, Error, Result};
use crate::factor::{self, FactorModel, Problem};
use crate::harness::baselines::{mostpop_scores, EmbeddingSource, ModelKind};
use crate::harness::config::PipelineConfig;
use crate::harness::metrics::{evaluate_topk, EvalReport};
use crate::harness::split::{pairs_to_tsv, split, Split};
use crate::harness::synth::{synth_generate, GroundTruth};
use crate::similarity::{build_matrices, SimilarityMatrices};
use crate::topic::{doc_topics_to_text, gibbs_train, infer_many, DocTopics, TopicModel};

/// Everything a run produced, kept in memory.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub dataset: Dataset,
    pub truth: Option<GroundTruth>,
    pub split: Split,
    pub corpus: Option<Corpus>,
    pub topics: Option<(TopicModel, [Vec<DocTopics>; 3])>,
    pub stores: BTreeMap<EmbeddingSource, EmbeddingStore>,
    pub doc_embeddings: BTreeMap<EmbeddingSource, DocumentEmbeddings>,
    pub similarities: BTreeMap<EmbeddingSource, SimilarityMatrices>,
    pub models: BTreeMap<ModelKind, FactorModel>,
    /// One report per listed model, in listing order.
    pub reports: Vec<EvalReport>,
    pub log: Vec<String>,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

fn load_dataset(config: &PipelineConfig, base_dir: &Path) -> Result<(Dataset, Option<GroundTruth>)> {
    if let Some(spec) = &config.data.synth {
        let (d, t) = synth_generate(spec)?;
        return Ok((d, Some(t)));
    }
    let path = config
        .data
        .path
        .as_ref()
        .ok_or_else(|| Error::config("no dataset configured"))?;
    Ok((Dataset::load(&base_dir.join(path))?, None))
}

fn fingerprint(dataset: &Dataset) -> String {
    let g = &dataset.graph;
    format!(
        "users={} votings={} groups={} participations={} follows={} memberships={}",
        g.n_users(),
        g.n_votings(),
        g.n_groups(),
        g.n_participations(),
        g.n_follows(),
        g.n_memberships()
    )
}

/// Runs every stage in memory. `base_dir` resolves a relative dataset path.
pub fn execute(config: &PipelineConfig, base_dir: &Path) -> Result<RunResult> {
    config.validate()?;
    let models = config.models()?;
    let mut log = Vec::new();

    let (dataset, truth) = stage("ingest", load_dataset(config, base_dir))?;
    log.push(format!("ingest: {}", fingerprint(&dataset)));

    let split = stage("split", split(&dataset.graph, &config.split_spec()))?;
    log.push(format!(
        "split: train={} test={} cold_users={}",
        split.train.n_participations(),
        split.test.len(),
        split.cold_users.len()
    ));

    let sources: Vec<EmbeddingSource> = {
        let mut s: Vec<_> = models.iter().filter_map(|m| m.embedding_source()).collect();
        s.sort();
        s.dedup();
        s
    };

    let mut result = RunResult {
        dataset,
        truth,
        split,
        corpus: None,
        topics: None,
        stores: BTreeMap::new(),
        doc_embeddings: BTreeMap::new(),
        similarities: BTreeMap::new(),
        models: BTreeMap::new(),
        reports: Vec::new(),
        log,
    };

    if !sources.is_empty() {
        let corpus = stage(
            "documents",
            build_documents(&result.split.train, &result.dataset.voting_texts),
        )?;
        result.log.push(format!(
            "documents: vocabulary={} voting_tokens={} user_tokens={} group_tokens={}",
            corpus.vocab_size(),
            corpus.docs(DocLevel::Voting).iter().map(Vec::len).sum::<usize>(),
            corpus.docs(DocLevel::User).iter().map(Vec::len).sum::<usize>(),
            corpus.docs(DocLevel::Group).iter().map(Vec::len).sum::<usize>()
        ));

        let lda_cfg = config.lda_config();
        let model = stage(
            "lda",
            gibbs_train(corpus.docs(DocLevel::Group), corpus.vocab_size(), &lda_cfg),
        )?;
        let inferred = infer_levels(&model, &corpus, config.lda.infer_iterations, config.lda.seed);
        let empty: usize = inferred.iter().flatten().filter(|d| d.empty).count();
        result.log.push(format!(
            "lda: topics={} sweeps={} empty_docs={empty}",
            model.topics, model.iterations
        ));

        for &source in &sources {
            let embeds = match source {
                EmbeddingSource::Theta => DocumentEmbeddings::from_topics(&inferred, model.topics),
                EmbeddingSource::Tewe | EmbeddingSource::SkipGram => {
                    let mode = if source == EmbeddingSource::Tewe {
                        EmbeddingMode::Tewe
                    } else {
                        EmbeddingMode::SkipGram
                    };
                    let pseudo = stage("embedding", embedding_corpora(mode, &corpus, &inferred))?;
                    let (store, embeds, skipped) = stage(
                        "embedding",
                        embed_levels(&pseudo, &corpus, &config.embedding_config(mode)),
                    )?;
                    result.log.push(format!(
                        "embedding[{mode}]: keys={} skipped_tokens={skipped}",
                        store.len()
                    ));
                    result.stores.insert(source, store);
                    embeds
                }
            };
            let sims = stage(
                "similarity",
                build_matrices(&result.split.train, &embeds, &config.similarity_config()),
            )?;
            result.log.push(format!(
                "similarity[{}]: social_nnz={} group_nnz={} voting_nnz={} empty_rows={}/{}/{}",
                source_name(source),
                sims.social.nnz(),
                sims.group.nnz(),
                sims.voting.nnz(),
                sims.social_flags.empty.len(),
                sims.group_flags.empty.len(),
                sims.voting_flags.empty.len()
            ));
            result.doc_embeddings.insert(source, embeds);
            result.similarities.insert(source, sims);
        }
        result.corpus = Some(corpus);
        result.topics = Some((model, inferred));
    }

    let n_users = result.split.train.n_users();
    let n_votings = result.split.train.n_votings();
    let no_coupling = SimilarityMatrices::empty(n_users, n_votings);
    for &kind in &models {
        let mut metadata = BTreeMap::new();
        metadata.insert("dataset".to_string(), fingerprint(&result.dataset));
        metadata.insert("split_seed".to_string(), config.split.seed.to_string());
        metadata.insert("test_fraction".to_string(), config.split.test_fraction.to_string());
        metadata.insert("cold_users".to_string(), result.split.cold_users.len().to_string());
        let mut report = if kind == ModelKind::MostPop {
            let scores = mostpop_scores(&result.split.train);
            let scorer = move |_u: usize| scores.clone();
            stage(
                "evaluate",
                evaluate_topk(
                    kind.name(),
                    &scorer,
                    &result.split.test,
                    &result.split.train,
                    &config.run.ks,
                ),
            )?
        } else {
            let hyper = config.hyperparams(kind)?;
            let sims = match kind.embedding_source() {
                Some(s) => &result.similarities[&s],
                None => &no_coupling,
            };
            if let Some(s) = kind.embedding_source() {
                metadata.insert("similarity_source".to_string(), source_name(s).to_string());
                metadata.insert("voting_threshold".to_string(), config.similarity.threshold.to_string());
            }
            let problem = stage("train", Problem::new(&result.split.train, sims))?;
            let trained = stage("train", factor::train(&problem, &hyper))?;
            for (k, v) in [
                ("dim", hyper.dim.to_string()),
                ("alpha", hyper.alpha.to_string()),
                ("beta", hyper.beta.to_string()),
                ("gamma", hyper.gamma.to_string()),
                ("lambda", hyper.lambda.to_string()),
                ("neg_weight", hyper.neg_weight.to_string()),
                ("learning_rate", hyper.learning_rate.to_string()),
                ("iterations", hyper.iterations.to_string()),
                ("mf_seed", hyper.seed.to_string()),
            ] {
                metadata.insert(k.to_string(), v);
            }
            result.log.push(format!(
                "train[{kind}]: objective {:.6e} -> {:.6e}",
                trained.objective_log[0],
                trained.objective_log.last().copied().unwrap_or(f64::NAN)
            ));
            let report = stage(
                "evaluate",
                evaluate_topk(
                    kind.name(),
                    &trained,
                    &result.split.test,
                    &result.split.train,
                    &config.run.ks,
                ),
            )?;
            result.models.insert(kind, trained);
            report
        };
        report.metadata.extend(metadata);
        result.reports.push(report);
    }
    Ok(result)
}

/// Fold-in Θ for voting, user and group documents in [`DocLevel::ALL`] order,
/// each level on its own seed.
pub fn infer_levels(model: &TopicModel, corpus: &Corpus, iterations: usize, seed: u64) -> [Vec<DocTopics>; 3] {
    DocLevel::ALL.map(|level| infer_many(model, corpus.docs(level), iterations, level_seed(seed, level)))
}

pub fn level_seed(seed: u64, level: DocLevel) -> u64 {
    seed ^ (level as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Per-level token sequences an embedding is trained on: pseudo-words for
/// TEWE, plain words for skip-gram.
pub fn embedding_corpora(
    mode: EmbeddingMode,
    corpus: &Corpus,
    inferred: &[Vec<DocTopics>; 3],
) -> Result<[Vec<Vec<PseudoWord>>; 3]> {
    let mut out: [Vec<Vec<PseudoWord>>; 3] = Default::default();
    for (slot, level) in DocLevel::ALL.into_iter().enumerate() {
        out[slot] = match mode {
            EmbeddingMode::Tewe => build_pseudo_corpus(corpus.docs(level), &inferred[slot], level)?,
            EmbeddingMode::SkipGram => plain_corpus(corpus.docs(level)),
        };
    }
    Ok(out)
}

/// Trains one store on all three levels and embeds every document with it.
pub fn embed_levels(
    pseudo: &[Vec<Vec<PseudoWord>>; 3],
    corpus: &Corpus,
    config: &EmbeddingConfig,
) -> Result<(EmbeddingStore, DocumentEmbeddings, usize)> {
    let training: Vec<Vec<PseudoWord>> = pseudo.iter().flatten().cloned().collect();
    let store = train_embeddings(&training, config)?;
    let (embeds, skipped) = DocumentEmbeddings::compute(pseudo, corpus, &store)?;
    Ok((store, embeds, skipped))
}

pub fn source_name(source: EmbeddingSource) -> &'static str {
    match source {
        EmbeddingSource::Tewe => "tewe",
        EmbeddingSource::SkipGram => "skipgram",
        EmbeddingSource::Theta => "theta",
    }
}

/// One row per model, one recall column per k.
pub fn summary_tsv(reports: &[EvalReport]) -> String {
    let mut out = String::from("model\tmetric");
    let ks: Vec<usize> = reports
        .first()
        .map(|r| r.rows.iter().map(|x| x.k).collect())
        .unwrap_or_default();
    for k in &ks {
        let _ = write!(out, "\t@{k}");
    }
    out.push('\n');
    for r in reports {
        for (metric, get) in [
            (
                "recall",
                (|m: &crate::harness::metrics::MetricRow| m.recall) as fn(&_) -> f64,
            ),
            ("precision", |m| m.precision),
            ("micro_f1", |m| m.micro_f1),
        ] {
            let _ = write!(out, "{}\t{metric}", r.model);
            for row in &r.rows {
                let _ = write!(out, "\t{:.6}", get(row));
            }
            out.push('\n');
        }
    }
    out
}

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(&path, contents).map_err(io_err(path))
}

/// Writes a run directory. Contents depend only on the config and its seeds.
pub fn write_run(result: &RunResult, config: &PipelineConfig, run_dir: &Path) -> Result<()> {
    let mut manifest = String::from("jtsmf-run 1\n");
    let _ = writeln!(manifest, "version\t{}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(manifest, "config_sha256\t{}", config.hash());
    let _ = writeln!(manifest, "split_seed\t{}", config.split.seed);
    let _ = writeln!(manifest, "lda_seed\t{}", config.lda.seed);
    let _ = writeln!(manifest, "embedding_seed\t{}", config.embedding.seed);
    let _ = writeln!(manifest, "factorization_seed\t{}", config.factorization.seed);
    if let Some(s) = &config.data.synth {
        let _ = writeln!(manifest, "synth_seed\t{}", s.seed);
    }
    let names: Vec<&str> = result.reports.iter().map(|r| r.model.as_str()).collect();
    let _ = writeln!(manifest, "models\t{}", names.join(","));
    write(run_dir, "manifest.txt", manifest)?;
    write(run_dir, "config.toml", config.to_toml())?;

    if let Some(truth) = &result.truth {
        result.dataset.write(&run_dir.join("data"))?;
        write(run_dir, "data/ground_truth.tsv", truth.to_tsv())?;
    }
    write(
        run_dir,
        "split/train.tsv",
        result.split.train.edges_to_string(EdgeKind::UserVoting),
    )?;
    write(run_dir, "split/test.tsv", pairs_to_tsv(&result.split.test))?;

    if let Some((model, inferred)) = &result.topics {
        write(run_dir, "lda/model.txt", model.to_text())?;
        for (slot, level) in DocLevel::ALL.into_iter().enumerate() {
            write(
                run_dir,
                &format!("lda/doc_topics_{}.tsv", level.tag()),
                doc_topics_to_text(level.tag(), model.topics, &inferred[slot]),
            )?;
        }
    }
    for (source, store) in &result.stores {
        write(
            run_dir,
            &format!("embedding/{}.emb", source_name(*source)),
            store.to_text(),
        )?;
    }
    for (source, e) in &result.doc_embeddings {
        write(
            run_dir,
            &format!("embedding/{}_docs.txt", source_name(*source)),
            e.to_text(),
        )?;
    }
    for (source, sims) in &result.similarities {
        let s = source_name(*source);
        write(
            run_dir,
            &format!("similarity/{s}/social.txt"),
            sims.social.to_text("social", None),
        )?;
        write(
            run_dir,
            &format!("similarity/{s}/group.txt"),
            sims.group.to_text("group", None),
        )?;
        write(
            run_dir,
            &format!("similarity/{s}/voting.txt"),
            sims.voting.to_text("voting", Some(sims.threshold)),
        )?;
    }
    for (kind, model) in &result.models {
        write(run_dir, &format!("models/{kind}.mf"), model.to_text())?;
        write(
            run_dir,
            &format!("models/{kind}.objective.tsv"),
            model.training_log_tsv(),
        )?;
    }
    for report in &result.reports {
        write(run_dir, &format!("reports/{}.tsv", report.model), report.to_tsv())?;
    }
    write(run_dir, "reports/summary.tsv", summary_tsv(&result.reports))?;
    let mut log = result.log.join("\n");
    log.push('\n');
    write(run_dir, "pipeline.log", log)
}

/// Reads a config file, runs it and writes the run directory.
pub fn run_pipeline(config_path: &Path, run_dir: &Path) -> Result<Vec<EvalReport>> {
    let text = fs::read_to_string(config_path).map_err(io_err(config_path))?;
    let config = PipelineConfig::from_toml(&text)?;
    let base: PathBuf = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let result = execute(&config, &base)?;
    write_run(&result, &config, run_dir)?;
    Ok(result.reports)
}
