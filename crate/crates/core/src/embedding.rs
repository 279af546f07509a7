//! Skip-gram with negative sampling over plain words or topic-tagged
//! pseudo-words, and TF-IDF weighted document embeddings.
//!
//! In topic-enhanced mode every token `w` of document `d` becomes the key
//! `(w, z_w, argmax Θ_d)`, so one surface word owns one vector per topic
//! context. In skip-gram mode the topic coordinates are collapsed to zero.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use rayon::prelude::*;

use crate::data::{Corpus, DocLevel};
use crate::error::{Error, Result};
use crate::rng;
use crate::topic::DocTopics;

pub const STORE_MAGIC: &str = "jtsmf-emb";
pub const STORE_BINARY_MAGIC: &[u8; 8] = b"JTSMFEMB";
pub const STORE_VERSION: u32 = 1;
pub const DOC_EMBED_MAGIC: &str = "jtsmf-docemb";

/// `⟨w, z_w, z_w^d⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PseudoWord {
    pub word: u32,
    pub word_topic: u32,
    pub doc_topic: u32,
}

impl PseudoWord {
    pub fn new(word: u32, word_topic: u32, doc_topic: u32) -> Self {
        Self {
            word,
            word_topic,
            doc_topic,
        }
    }

    pub fn plain(word: u32) -> Self {
        Self::new(word, 0, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmbeddingMode {
    Tewe,
    SkipGram,
}

impl EmbeddingMode {
    fn key(self, p: PseudoWord) -> PseudoWord {
        match self {
            EmbeddingMode::Tewe => p,
            EmbeddingMode::SkipGram => PseudoWord::plain(p.word),
        }
    }
}

impl fmt::Display for EmbeddingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmbeddingMode::Tewe => "tewe",
            EmbeddingMode::SkipGram => "skipgram",
        })
    }
}

impl FromStr for EmbeddingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tewe" => Ok(EmbeddingMode::Tewe),
            "skipgram" => Ok(EmbeddingMode::SkipGram),
            other => Err(Error::config(format!("unknown embedding mode `{other}`"))),
        }
    }
}

/// `argmax_z θ^{(z)}`; ties go to the lowest index.
pub fn doc_topic_argmax(theta: &[f64]) -> usize {
    let mut best = 0;
    for (z, &p) in theta.iter().enumerate() {
        if p > theta[best] {
            best = z;
        }
    }
    best
}

/// Turns each token into `⟨w, z_w, argmax Θ_d⟩`. Tokens without an assignment
/// (out of vocabulary at fold-in) are dropped.
pub fn build_pseudo_corpus(docs: &[Vec<u32>], topics: &[DocTopics], level: DocLevel) -> Result<Vec<Vec<PseudoWord>>> {
    docs.iter()
        .enumerate()
        .map(|(d, doc)| {
            let inferred = topics
                .get(d)
                .ok_or_else(|| Error::MissingInference(format!("no topic inference for {level} document {d}")))?;
            if inferred.assignments.len() != doc.len() {
                return Err(Error::MissingInference(format!(
                    "{level} document {d}: {} tokens but {} topic assignments",
                    doc.len(),
                    inferred.assignments.len()
                )));
            }
            let doc_topic = inferred.dominant_topic() as u32;
            Ok(doc
                .iter()
                .zip(&inferred.assignments)
                .filter_map(|(&w, z)| z.map(|z| PseudoWord::new(w, z as u32, doc_topic)))
                .collect())
        })
        .collect()
}

/// Plain-word sequences for the skip-gram baseline.
pub fn plain_corpus(docs: &[Vec<u32>]) -> Vec<Vec<PseudoWord>> {
    docs.iter()
        .map(|d| d.iter().map(|&w| PseudoWord::plain(w)).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingConfig {
    pub mode: EmbeddingMode,
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly towards zero.
    pub learning_rate: f64,
    pub seed: u64,
    /// Exponent applied to key frequencies for negative sampling.
    pub unigram_power: f64,
    /// Frequent-key subsampling threshold; `None` disables it.
    pub subsample: Option<f64>,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            mode: EmbeddingMode::Tewe,
            dim: 50,
            window: 5,
            negatives: 3,
            epochs: 5,
            learning_rate: 0.025,
            seed: 1,
            unigram_power: 0.75,
            subsample: None,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Negative log-likelihood of one (target, context, negatives) group:
/// `-(log σ(c·t) + Σ log σ(-n·t))`.
pub fn sgns_loss(target: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    let pos = sigmoid(dot(context, target)).ln();
    let neg: f64 = negatives.iter().map(|n| sigmoid(-dot(n, target)).ln()).sum();
    -(pos + neg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradients {
    pub target: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Analytic gradient of [`sgns_loss`].
pub fn sgns_gradients(target: &[f64], context: &[f64], negatives: &[&[f64]]) -> SgnsGradients {
    let dim = target.len();
    let mut g_target = vec![0.0; dim];
    let pos = sigmoid(dot(context, target)) - 1.0;
    for i in 0..dim {
        g_target[i] += pos * context[i];
    }
    let g_context = target.iter().map(|t| pos * t).collect();
    let g_negs = negatives
        .iter()
        .map(|n| {
            let s = sigmoid(dot(n, target));
            for i in 0..dim {
                g_target[i] += s * n[i];
            }
            target.iter().map(|t| s * t).collect()
        })
        .collect();
    SgnsGradients {
        target: g_target,
        context: g_context,
        negatives: g_negs,
    }
}

/// Input ("target") and output ("context") vectors for every key.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    mode: EmbeddingMode,
    dim: usize,
    keys: Vec<PseudoWord>,
    index: HashMap<PseudoWord, usize>,
    input: Vec<f64>,
    output: Vec<f64>,
    counts: Vec<u64>,
}

impl EmbeddingStore {
    fn from_keys(mode: EmbeddingMode, dim: usize, keys: Vec<PseudoWord>, counts: Vec<u64>) -> Self {
        let index = keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let n = keys.len();
        Self {
            mode,
            dim,
            keys,
            index,
            input: vec![0.0; n * dim],
            output: vec![0.0; n * dim],
            counts,
        }
    }

    pub fn mode(&self) -> EmbeddingMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[PseudoWord] {
        &self.keys
    }

    /// Index of `key`, collapsing topic coordinates in skip-gram mode.
    pub fn index_of(&self, key: PseudoWord) -> Option<usize> {
        self.index.get(&self.mode.key(key)).copied()
    }

    pub fn input(&self, idx: usize) -> &[f64] {
        &self.input[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn output(&self, idx: usize) -> &[f64] {
        &self.output[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn input_mut(&mut self, idx: usize) -> &mut [f64] {
        &mut self.input[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn output_mut(&mut self, idx: usize) -> &mut [f64] {
        &mut self.output[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn vector(&self, key: PseudoWord) -> Option<&[f64]> {
        self.index_of(key).map(|i| self.input(i))
    }

    /// One SGD step on the negative-sampling loss of `(target, context,
    /// negatives)`. All gradients are taken at the current parameters before
    /// any update is applied.
    pub fn sgd_step(&mut self, target: usize, context: usize, negatives: &[usize], lr: f64) {
        let dim = self.dim;
        let t = self.input(target).to_vec();
        let mut g_target = vec![0.0; dim];
        let mut updates: Vec<(usize, f64)> = Vec::with_capacity(negatives.len() + 1);
        let g = sigmoid(dot(self.output(context), &t)) - 1.0;
        updates.push((context, g));
        for &n in negatives {
            updates.push((n, sigmoid(dot(self.output(n), &t))));
        }
        for &(k, g) in &updates {
            let out = self.output(k);
            for i in 0..dim {
                g_target[i] += g * out[i];
            }
        }
        for &(k, g) in &updates {
            let out = self.output_mut(k);
            for i in 0..dim {
                out[i] -= lr * g * t[i];
            }
        }
        let inp = self.input_mut(target);
        for i in 0..dim {
            inp[i] -= lr * g_target[i];
        }
    }

    /// Mean per-group log-likelihood over every (target, context) pair in
    /// `corpus`, with negatives drawn from this store's unigram table.
    pub fn average_log_likelihood(&self, corpus: &[Vec<PseudoWord>], config: &EmbeddingConfig) -> f64 {
        let seqs = self.encode(corpus);
        let Some(table) = self.negative_table(config.unigram_power) else {
            return 0.0;
        };
        let mut rng = rng::seeded(config.seed ^ 0x5eed);
        let mut total = 0.0;
        let mut groups = 0usize;
        for seq in &seqs {
            for (pos, &t) in seq.iter().enumerate() {
                for c in window_range(pos, seq.len(), config.window) {
                    let ctx = seq[c];
                    let negs: Vec<usize> = (0..config.negatives).map(|_| table.sample(&mut rng)).collect();
                    let neg_refs: Vec<&[f64]> = negs.iter().map(|&n| self.output(n)).collect();
                    total -= sgns_loss(self.input(t), self.output(ctx), &neg_refs);
                    groups += 1;
                }
            }
        }
        if groups == 0 {
            0.0
        } else {
            total / groups as f64
        }
    }

    fn encode(&self, corpus: &[Vec<PseudoWord>]) -> Vec<Vec<usize>> {
        corpus
            .iter()
            .map(|doc| doc.iter().filter_map(|&p| self.index_of(p)).collect())
            .collect()
    }

    fn negative_table(&self, power: f64) -> Option<WeightedIndex<f64>> {
        let weights: Vec<f64> = self.counts.iter().map(|&c| (c as f64).powf(power)).collect();
        WeightedIndex::new(weights).ok()
    }
}

fn window_range(pos: usize, len: usize, window: usize) -> impl Iterator<Item = usize> {
    let lo = pos.saturating_sub(window);
    let hi = (pos + window + 1).min(len);
    (lo..hi).filter(move |&c| c != pos)
}

/// Trains embeddings by single-threaded SGD. Identical inputs and seed give a
/// bit-identical store.
pub fn train_embeddings(corpus: &[Vec<PseudoWord>], config: &EmbeddingConfig) -> Result<EmbeddingStore> {
    if config.dim == 0 {
        return Err(Error::config("embedding dimension must be at least 1"));
    }
    if config.window == 0 {
        return Err(Error::config("context window must be at least 1"));
    }
    if corpus.iter().all(Vec::is_empty) {
        return Err(Error::config("embedding corpus is empty"));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::config("learning rate must be positive"));
    }

    let mut freq: BTreeMap<PseudoWord, u64> = BTreeMap::new();
    for p in corpus.iter().flatten() {
        *freq.entry(config.mode.key(*p)).or_default() += 1;
    }
    let (keys, counts): (Vec<_>, Vec<_>) = freq.into_iter().unzip();
    let mut store = EmbeddingStore::from_keys(config.mode, config.dim, keys, counts);

    let mut rng = rng::seeded(config.seed);
    let half = 0.5 / config.dim as f64;
    for x in store.input.iter_mut() {
        *x = rng.random_range(-half..half);
    }

    let seqs = store.encode(corpus);
    let table = store
        .negative_table(config.unigram_power)
        .ok_or_else(|| Error::config("degenerate negative-sampling distribution"))?;
    let total_tokens: u64 = store.counts.iter().sum();
    let keep_prob: Option<Vec<f64>> = config.subsample.map(|t| {
        store
            .counts
            .iter()
            .map(|&c| {
                let f = c as f64 / total_tokens as f64;
                ((t / f).sqrt() + t / f).min(1.0)
            })
            .collect()
    });

    let budget = (config.epochs as u64 * total_tokens).max(1) as f64;
    let mut processed = 0u64;
    let mut negs = Vec::with_capacity(config.negatives);
    let mut kept = Vec::new();
    for _ in 0..config.epochs {
        for seq in &seqs {
            kept.clear();
            match &keep_prob {
                Some(keep) => kept.extend(seq.iter().copied().filter(|&k| rng.random::<f64>() < keep[k])),
                None => kept.extend_from_slice(seq),
            }
            for pos in 0..kept.len() {
                let lr = config.learning_rate * (1.0 - processed as f64 / budget).max(1e-4);
                processed += 1;
                let target = kept[pos];
                for c in window_range(pos, kept.len(), config.window) {
                    let ctx = kept[c];
                    negs.clear();
                    for _ in 0..config.negatives {
                        let n = table.sample(&mut rng);
                        if n != ctx {
                            negs.push(n);
                        }
                    }
                    store.sgd_step(target, ctx, &negs, lr);
                }
            }
            // subsampled tokens still count towards the schedule
            processed += (seq.len() - kept.len()) as u64;
        }
    }
    if store.input.iter().chain(&store.output).any(|x| !x.is_finite()) {
        return Err(Error::Training("embedding training produced non-finite values".into()));
    }
    Ok(store)
}

/// `a·b / (‖a‖‖b‖)`, or 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

/// TF-IDF weighted sum of a document's pseudo-word input vectors.
///
/// Each occurrence of word `w` contributes `idf(w) · vector`, so when all
/// occurrences share one pseudo-word the term is exactly `TF-IDF(w, d) ·
/// vector`. Pseudo-words unknown to the store are skipped and counted.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedDoc {
    pub vector: Vec<f64>,
    pub skipped: usize,
}

pub fn embed_document(
    tokens: &[PseudoWord],
    level: DocLevel,
    corpus: &Corpus,
    store: &EmbeddingStore,
) -> Result<EmbeddedDoc> {
    let mut vector = vec![0.0; store.dim()];
    let mut skipped = 0;
    for &p in tokens {
        let Some(idx) = store.index_of(p) else {
            skipped += 1;
            continue;
        };
        let weight = corpus.idf(level, p.word)?;
        for (acc, x) in vector.iter_mut().zip(store.input(idx)) {
            *acc += weight * x;
        }
    }
    Ok(EmbeddedDoc { vector, skipped })
}

/// Per-level document vectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DocumentEmbeddings {
    pub dim: usize,
    pub votings: Vec<Vec<f64>>,
    pub users: Vec<Vec<f64>>,
    pub groups: Vec<Vec<f64>>,
}

impl DocumentEmbeddings {
    pub fn level(&self, level: DocLevel) -> &[Vec<f64>] {
        match level {
            DocLevel::Voting => &self.votings,
            DocLevel::User => &self.users,
            DocLevel::Group => &self.groups,
        }
    }

    fn level_mut(&mut self, level: DocLevel) -> &mut Vec<Vec<f64>> {
        match level {
            DocLevel::Voting => &mut self.votings,
            DocLevel::User => &mut self.users,
            DocLevel::Group => &mut self.groups,
        }
    }

    /// Embeds all documents of the three levels from their pseudo-word sequences.
    pub fn compute(
        pseudo: &[Vec<Vec<PseudoWord>>; 3],
        corpus: &Corpus,
        store: &EmbeddingStore,
    ) -> Result<(Self, usize)> {
        let mut out = Self {
            dim: store.dim(),
            ..Self::default()
        };
        let mut skipped = 0;
        for (slot, level) in DocLevel::ALL.into_iter().enumerate() {
            let docs = pseudo[slot]
                .par_iter()
                .map(|toks| embed_document(toks, level, corpus, store))
                .collect::<Result<Vec<_>>>()?;
            skipped += docs.iter().map(|d| d.skipped).sum::<usize>();
            *out.level_mut(level) = docs.into_iter().map(|d| d.vector).collect();
        }
        Ok((out, skipped))
    }

    /// Uses topic mixtures directly as document vectors; empty documents map to
    /// the zero vector.
    pub fn from_topics(topics: &[Vec<DocTopics>; 3], n_topics: usize) -> Self {
        let rows = |docs: &Vec<DocTopics>| -> Vec<Vec<f64>> {
            docs.iter()
                .map(|d| if d.empty { vec![0.0; n_topics] } else { d.theta.clone() })
                .collect()
        };
        Self {
            dim: n_topics,
            votings: rows(&topics[0]),
            users: rows(&topics[1]),
            groups: rows(&topics[2]),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{DOC_EMBED_MAGIC} {STORE_VERSION} {}\n", self.dim);
        for level in DocLevel::ALL {
            for (i, v) in self.level(level).iter().enumerate() {
                let _ = write!(out, "{} {i}", level.tag());
                for x in v {
                    let _ = write!(out, " {x}");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::format("empty document embedding file"))?
            .split_whitespace()
            .collect();
        if header.len() != 3 || header[0] != DOC_EMBED_MAGIC {
            return Err(Error::format("not a document embedding file"));
        }
        if header[1] != STORE_VERSION.to_string() {
            return Err(Error::Version {
                found: header[1].to_string(),
                expected: STORE_VERSION.to_string(),
            });
        }
        let dim: usize = header[2].parse().map_err(|_| Error::format("bad dimension"))?;
        let mut out = Self { dim, ..Self::default() };
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (tag, rest) = line.split_once(' ').ok_or_else(|| Error::format("bad record"))?;
            let level = DocLevel::from_tag(tag).ok_or_else(|| Error::format(format!("bad level `{tag}`")))?;
            let (id, values) = rest.split_once(' ').unwrap_or((rest, ""));
            let id: usize = id.parse().map_err(|_| Error::format("bad document id"))?;
            let rows = out.level_mut(level);
            if id != rows.len() {
                return Err(Error::format(format!("{level} ids must be consecutive, found {id}")));
            }
            rows.push(crate::topic::floats(Some(values), dim)?);
        }
        Ok(out)
    }
}

impl EmbeddingStore {
    /// Text form: header, then one record per key with its input vector.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{STORE_MAGIC} {STORE_VERSION} {} {} {}\n",
            self.mode,
            self.dim,
            self.len()
        );
        for (i, k) in self.keys.iter().enumerate() {
            match self.mode {
                EmbeddingMode::Tewe => {
                    let _ = write!(out, "{} {} {}", k.word, k.word_topic, k.doc_topic);
                }
                EmbeddingMode::SkipGram => {
                    let _ = write!(out, "{}", k.word);
                }
            }
            for x in self.input(i) {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text form. Output vectors are not stored and load as zeros.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::format("empty embedding file"))?
            .split_whitespace()
            .collect();
        if header.len() != 5 || header[0] != STORE_MAGIC {
            return Err(Error::format("not an embedding file"));
        }
        if header[1] != STORE_VERSION.to_string() {
            return Err(Error::Version {
                found: header[1].to_string(),
                expected: STORE_VERSION.to_string(),
            });
        }
        let mode: EmbeddingMode = header[2].parse().map_err(|_| Error::format("bad mode"))?;
        let dim: usize = header[3].parse().map_err(|_| Error::format("bad dimension"))?;
        let count: usize = header[4].parse().map_err(|_| Error::format("bad key count"))?;
        let arity = match mode {
            EmbeddingMode::Tewe => 3,
            EmbeddingMode::SkipGram => 1,
        };
        let mut keys = Vec::new();
        let mut vectors = Vec::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != arity + dim {
                return Err(Error::format(format!(
                    "expected {} fields per record, found {}",
                    arity + dim,
                    fields.len()
                )));
            }
            let ids = fields[..arity]
                .iter()
                .map(|f| {
                    f.parse::<u32>()
                        .map_err(|_| Error::format(format!("bad key field `{f}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            keys.push(match mode {
                EmbeddingMode::Tewe => PseudoWord::new(ids[0], ids[1], ids[2]),
                EmbeddingMode::SkipGram => PseudoWord::plain(ids[0]),
            });
            vectors.extend(crate::topic::floats(Some(&fields[arity..].join(" ")), dim)?);
        }
        Self::assemble(mode, dim, count, keys, vectors)
    }

    fn assemble(
        mode: EmbeddingMode,
        dim: usize,
        count: usize,
        keys: Vec<PseudoWord>,
        vectors: Vec<f64>,
    ) -> Result<Self> {
        if keys.len() != count {
            return Err(Error::format(format!(
                "header declares {count} keys, found {}",
                keys.len()
            )));
        }
        let n = keys.len();
        let mut store = Self::from_keys(mode, dim, keys, vec![1; n]);
        if store.index.len() != n {
            return Err(Error::format("duplicate embedding key"));
        }
        store.input = vectors;
        Ok(store)
    }

    /// Little-endian binary form: magic, version (u32), mode (u8), dim (u32),
    /// count (u64), then per key the id fields (u32 each) and `dim` f64 values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(25 + self.len() * (12 + 8 * self.dim));
        out.extend_from_slice(STORE_BINARY_MAGIC);
        out.extend_from_slice(&STORE_VERSION.to_le_bytes());
        out.push(match self.mode {
            EmbeddingMode::Tewe => 0,
            EmbeddingMode::SkipGram => 1,
        });
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for (i, k) in self.keys.iter().enumerate() {
            out.extend_from_slice(&k.word.to_le_bytes());
            if self.mode == EmbeddingMode::Tewe {
                out.extend_from_slice(&k.word_topic.to_le_bytes());
                out.extend_from_slice(&k.doc_topic.to_le_bytes());
            }
            for x in self.input(i) {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(8)? != STORE_BINARY_MAGIC {
            return Err(Error::format("not a binary embedding file"));
        }
        let version = r.u32()?;
        if version != STORE_VERSION {
            return Err(Error::Version {
                found: version.to_string(),
                expected: STORE_VERSION.to_string(),
            });
        }
        let mode = match r.take(1)?[0] {
            0 => EmbeddingMode::Tewe,
            1 => EmbeddingMode::SkipGram,
            m => return Err(Error::format(format!("bad mode byte {m}"))),
        };
        let dim = r.u32()? as usize;
        let count = r.u64()?;
        let arity = if mode == EmbeddingMode::Tewe { 3 } else { 1 };
        let record = (arity * 4 + dim * 8) as u64;
        if record == 0 && count > 0 || count.saturating_mul(record) != (bytes.len() - r.pos) as u64 {
            return Err(Error::format("record section length does not match header"));
        }
        let count = count as usize;
        let mut keys = Vec::with_capacity(count);
        let mut vectors = Vec::with_capacity(count * dim);
        for _ in 0..count {
            let word = r.u32()?;
            let key = if arity == 3 {
                PseudoWord::new(word, r.u32()?, r.u32()?)
            } else {
                PseudoWord::plain(word)
            };
            keys.push(key);
            for _ in 0..dim {
                let x = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
                if !x.is_finite() {
                    return Err(Error::format("non-finite vector entry"));
                }
                vectors.push(x);
            }
        }
        Self::assemble(mode, dim, count, keys, vectors)
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::format("truncated binary embedding file"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
