//! Latent Dirichlet allocation by collapsed Gibbs sampling.
//!
//! The model is trained on group documents. Topic mixtures for user and voting
//! documents come from fold-in sampling against the frozen topic-word
//! distributions.

use std::fmt::Write as _;

use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

pub const FORMAT_MAGIC: &str = "jtsmf-lda";
pub const FORMAT_VERSION: &str = "1";
pub const DOC_TOPICS_MAGIC: &str = "jtsmf-doctopics";

#[derive(Debug, Clone, PartialEq)]
pub struct LdaConfig {
    pub topics: usize,
    /// Symmetric document-topic prior; `None` means `50 / topics`.
    pub alpha: Option<f64>,
    /// Symmetric topic-word prior.
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            topics: 50,
            alpha: None,
            beta: 0.1,
            iterations: 2000,
            seed: 1,
        }
    }
}

impl LdaConfig {
    pub fn alpha_value(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.topics.max(1) as f64)
    }

    fn validate(&self) -> Result<()> {
        if self.topics == 0 {
            return Err(Error::config("topic count must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(Error::config("LDA needs at least one iteration"));
        }
        let alpha = self.alpha_value();
        if !(alpha > 0.0 && alpha.is_finite()) || !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::config("Dirichlet priors must be positive and finite"));
        }
        Ok(())
    }
}

/// State of a collapsed Gibbs chain over a fixed set of documents.
pub struct GibbsSampler<'a> {
    docs: &'a [Vec<u32>],
    topics: usize,
    vocab_size: usize,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    beta_sum: f64,
    assignments: Vec<Vec<usize>>,
    doc_topic: Vec<Vec<u32>>,
    topic_word: Vec<u32>,
    topic_total: Vec<u32>,
    rng: Rng,
    sweeps: usize,
    weights: Vec<f64>,
}

impl<'a> GibbsSampler<'a> {
    /// Initializes every token with a uniformly random topic.
    pub fn new(docs: &'a [Vec<u32>], vocab_size: usize, config: &LdaConfig) -> Result<Self> {
        config.validate()?;
        if docs.iter().all(Vec::is_empty) {
            return Err(Error::Training("all training documents are empty".into()));
        }
        if let Some(&w) = docs.iter().flatten().find(|&&w| w as usize >= vocab_size) {
            return Err(Error::Training(format!(
                "token id {w} outside vocabulary of {vocab_size}"
            )));
        }
        let z = config.topics;
        let mut rng = rng::seeded(config.seed);
        let mut doc_topic = vec![vec![0u32; z]; docs.len()];
        let mut topic_word = vec![0u32; z * vocab_size];
        let mut topic_total = vec![0u32; z];
        let assignments = docs
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.iter()
                    .map(|&w| {
                        let t = rng.random_range(0..z);
                        doc_topic[d][t] += 1;
                        topic_word[t * vocab_size + w as usize] += 1;
                        topic_total[t] += 1;
                        t
                    })
                    .collect()
            })
            .collect();
        let beta = vec![config.beta; vocab_size];
        Ok(Self {
            docs,
            topics: z,
            vocab_size,
            alpha: vec![config.alpha_value(); z],
            beta_sum: beta.iter().sum(),
            beta,
            assignments,
            doc_topic,
            topic_word,
            topic_total,
            rng,
            sweeps: 0,
            weights: vec![0.0; z],
        })
    }

    /// Resamples every token once, in document order.
    pub fn sweep(&mut self) {
        let v = self.vocab_size;
        for d in 0..self.docs.len() {
            for l in 0..self.docs[d].len() {
                let w = self.docs[d][l] as usize;
                let old = self.assignments[d][l];
                self.doc_topic[d][old] -= 1;
                self.topic_word[old * v + w] -= 1;
                self.topic_total[old] -= 1;

                let mut total = 0.0;
                for t in 0..self.topics {
                    let p = (self.doc_topic[d][t] as f64 + self.alpha[t])
                        * (self.topic_word[t * v + w] as f64 + self.beta[w])
                        / (self.topic_total[t] as f64 + self.beta_sum);
                    total += p;
                    self.weights[t] = total;
                }
                let new = sample_cumulative(&self.weights, total, &mut self.rng);

                self.assignments[d][l] = new;
                self.doc_topic[d][new] += 1;
                self.topic_word[new * v + w] += 1;
                self.topic_total[new] += 1;
            }
        }
        self.sweeps += 1;
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.assignments
    }

    /// `n_d^{(z)}` for every topic.
    pub fn doc_topic_counts(&self, doc: usize) -> &[u32] {
        &self.doc_topic[doc]
    }

    /// `n_z^{(w)}`.
    pub fn topic_word_count(&self, topic: usize, word: u32) -> u32 {
        self.topic_word[topic * self.vocab_size + word as usize]
    }

    pub fn topic_total(&self, topic: usize) -> u32 {
        self.topic_total[topic]
    }

    pub fn theta(&self, doc: usize) -> Vec<f64> {
        smoothed(&self.doc_topic[doc], &self.alpha)
    }

    pub fn phi(&self, topic: usize) -> Vec<f64> {
        let v = self.vocab_size;
        smoothed(&self.topic_word[topic * v..(topic + 1) * v], &self.beta)
    }

    pub fn into_model(self, config: &LdaConfig) -> TopicModel {
        let phi = (0..self.topics).map(|z| self.phi(z)).collect();
        let theta = (0..self.docs.len()).map(|d| self.theta(d)).collect();
        TopicModel {
            topics: self.topics,
            vocab_size: self.vocab_size,
            alpha: self.alpha,
            beta: self.beta,
            phi,
            theta,
            assignments: self.assignments,
            seed: config.seed,
            iterations: self.sweeps,
        }
    }
}

/// `(n + prior) / Σ (n + prior)`.
fn smoothed(counts: &[u32], prior: &[f64]) -> Vec<f64> {
    let denom: f64 = counts.iter().zip(prior).map(|(&n, &a)| n as f64 + a).sum();
    counts
        .iter()
        .zip(prior)
        .map(|(&n, &a)| (n as f64 + a) / denom)
        .collect()
}

fn sample_cumulative(cumulative: &[f64], total: f64, rng: &mut Rng) -> usize {
    let u = rng.random::<f64>() * total;
    cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1)
}

/// Trained topic model: `Φ` (topic × word), plus `Θ` and final assignments for
/// the training documents.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub topics: usize,
    pub vocab_size: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub phi: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub assignments: Vec<Vec<usize>>,
    pub seed: u64,
    pub iterations: usize,
}

/// Runs `config.iterations` collapsed Gibbs sweeps over `docs`.
pub fn gibbs_train(docs: &[Vec<u32>], vocab_size: usize, config: &LdaConfig) -> Result<TopicModel> {
    let mut sampler = GibbsSampler::new(docs, vocab_size, config)?;
    for _ in 0..config.iterations {
        sampler.sweep();
    }
    Ok(sampler.into_model(config))
}

/// Fold-in result for one document.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTopics {
    pub theta: Vec<f64>,
    /// Per input token; `None` for out-of-vocabulary tokens.
    pub assignments: Vec<Option<usize>>,
    pub oov: usize,
    /// No in-vocabulary tokens; `theta` is uniform.
    pub empty: bool,
}

impl DocTopics {
    /// `argmax_z θ^{(z)}`, lowest index on ties.
    pub fn dominant_topic(&self) -> usize {
        crate::embedding::doc_topic_argmax(&self.theta)
    }
}

/// Fold-in Gibbs sampling of one document against the frozen `Φ`. Only the
/// document's own topic counts change.
pub fn infer_document(model: &TopicModel, doc: &[u32], iterations: usize, seed: u64) -> DocTopics {
    let z = model.topics;
    let mut rng = rng::seeded(seed);
    let mut counts = vec![0u32; z];
    let mut assignments: Vec<Option<usize>> = vec![None; doc.len()];
    let mut oov = 0;
    for (slot, &w) in assignments.iter_mut().zip(doc) {
        if (w as usize) < model.vocab_size {
            let t = rng.random_range(0..z);
            counts[t] += 1;
            *slot = Some(t);
        } else {
            oov += 1;
        }
    }
    if oov == doc.len() {
        return DocTopics {
            theta: vec![1.0 / z as f64; z],
            assignments,
            oov,
            empty: true,
        };
    }
    let mut cumulative = vec![0.0; z];
    for _ in 0..iterations {
        for (l, &w) in doc.iter().enumerate() {
            let Some(old) = assignments[l] else { continue };
            counts[old] -= 1;
            let mut total = 0.0;
            for t in 0..z {
                total += (counts[t] as f64 + model.alpha[t]) * model.phi[t][w as usize];
                cumulative[t] = total;
            }
            let new = sample_cumulative(&cumulative, total, &mut rng);
            counts[new] += 1;
            assignments[l] = Some(new);
        }
    }
    DocTopics {
        theta: smoothed(&counts, &model.alpha),
        assignments,
        oov,
        empty: false,
    }
}

/// Fold-in for many documents in parallel; document `i` uses an independent
/// random stream derived from `(seed, i)`.
pub fn infer_many(model: &TopicModel, docs: &[Vec<u32>], iterations: usize, seed: u64) -> Vec<DocTopics> {
    docs.par_iter()
        .enumerate()
        .map(|(i, doc)| infer_document(model, doc, iterations, doc_seed(seed, i as u64)))
        .collect()
}

/// Seed for document `index` under base `seed`.
pub fn doc_seed(seed: u64, index: u64) -> u64 {
    use rand::RngCore;
    rng::stream(seed, index).next_u64()
}

impl TopicModel {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{FORMAT_MAGIC} {FORMAT_VERSION}");
        let _ = writeln!(out, "topics {}", self.topics);
        let _ = writeln!(out, "vocab {}", self.vocab_size);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "iterations {}", self.iterations);
        let _ = writeln!(out, "alpha {}", join(&self.alpha));
        let _ = writeln!(out, "beta {}", join(&self.beta));
        let _ = writeln!(out, "phi {}", self.phi.len());
        for row in &self.phi {
            let _ = writeln!(out, "{}", join(row));
        }
        let _ = writeln!(out, "theta {}", self.theta.len());
        for row in &self.theta {
            let _ = writeln!(out, "{}", join(row));
        }
        out
    }

    /// Parses [`TopicModel::to_text`] output. Training assignments are not
    /// serialized and come back empty.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::format("empty model file"))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(FORMAT_MAGIC) {
            return Err(Error::format("not a topic model file"));
        }
        let version = parts.next().unwrap_or("");
        if version != FORMAT_VERSION {
            return Err(Error::Version {
                found: version.to_string(),
                expected: FORMAT_VERSION.to_string(),
            });
        }
        let topics: usize = keyed(lines.next(), "topics")?;
        let vocab_size: usize = keyed(lines.next(), "vocab")?;
        let seed: u64 = keyed(lines.next(), "seed")?;
        let iterations: usize = keyed(lines.next(), "iterations")?;
        if topics == 0 {
            return Err(Error::format("topic count must be positive"));
        }
        let alpha = keyed_floats(lines.next(), "alpha", topics)?;
        let beta = keyed_floats(lines.next(), "beta", vocab_size)?;
        let n_phi: usize = keyed(lines.next(), "phi")?;
        if n_phi != topics {
            return Err(Error::format(format!(
                "expected {topics} phi rows, header says {n_phi}"
            )));
        }
        let phi = (0..n_phi)
            .map(|_| floats(lines.next(), vocab_size))
            .collect::<Result<Vec<_>>>()?;
        let n_theta: usize = keyed(lines.next(), "theta")?;
        let mut theta = Vec::new();
        for _ in 0..n_theta {
            theta.push(floats(lines.next(), topics)?);
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(Error::format("trailing data after theta rows"));
        }
        Ok(Self {
            topics,
            vocab_size,
            alpha,
            beta,
            phi,
            theta,
            assignments: Vec::new(),
            seed,
            iterations,
        })
    }
}

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v}");
    }
    s
}

fn keyed<T: std::str::FromStr>(line: Option<&str>, key: &str) -> Result<T> {
    let line = line.ok_or_else(|| Error::format(format!("missing `{key}` line")))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(Error::format(format!("expected `{key}` line, found `{line}`")));
    }
    let value = parts
        .next()
        .ok_or_else(|| Error::format(format!("`{key}` has no value")))?;
    if parts.next().is_some() {
        return Err(Error::format(format!("`{key}` has extra fields")));
    }
    value
        .parse()
        .map_err(|_| Error::format(format!("bad `{key}` value `{value}`")))
}

fn keyed_floats(line: Option<&str>, key: &str, n: usize) -> Result<Vec<f64>> {
    let line = line.ok_or_else(|| Error::format(format!("missing `{key}` line")))?;
    let rest = line
        .strip_prefix(key)
        .ok_or_else(|| Error::format(format!("expected `{key}` line")))?;
    floats(Some(rest), n)
}

pub(crate) fn floats(line: Option<&str>, n: usize) -> Result<Vec<f64>> {
    let line = line.ok_or_else(|| Error::format("unexpected end of file"))?;
    let values = line
        .split_whitespace()
        .map(|f| {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::format(format!("bad number `{f}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != n {
        return Err(Error::format(format!("expected {n} values, found {}", values.len())));
    }
    Ok(values)
}

/// Serializes fold-in results: one document per line,
/// `doc-id<TAB>theta...<TAB>assignments...` with `-` for skipped tokens.
pub fn doc_topics_to_text(level: &str, topics: usize, docs: &[DocTopics]) -> String {
    let mut out = format!("# {DOC_TOPICS_MAGIC} {FORMAT_VERSION} level={level} topics={topics}\n");
    for (i, d) in docs.iter().enumerate() {
        let z: Vec<String> = d
            .assignments
            .iter()
            .map(|a| a.map_or_else(|| "-".to_string(), |t| t.to_string()))
            .collect();
        let _ = writeln!(out, "{i}\t{}\t{}", join(&d.theta), z.join(" "));
    }
    out
}

/// Parses [`doc_topics_to_text`] output; returns the level tag and documents.
pub fn doc_topics_from_text(text: &str) -> Result<(String, Vec<DocTopics>)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::format("empty doc-topics file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "#" || fields[1] != DOC_TOPICS_MAGIC {
        return Err(Error::format("not a doc-topics file"));
    }
    if fields[2] != FORMAT_VERSION {
        return Err(Error::Version {
            found: fields[2].to_string(),
            expected: FORMAT_VERSION.to_string(),
        });
    }
    let level = fields[3]
        .strip_prefix("level=")
        .ok_or_else(|| Error::format("missing level"))?
        .to_string();
    let topics: usize = fields[4]
        .strip_prefix("topics=")
        .and_then(|t| t.parse().ok())
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::format("bad topic count"))?;
    let mut docs = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::format(format!("expected 3 columns in `{line}`")));
        }
        let id: usize = cols[0].parse().map_err(|_| Error::format("bad doc id"))?;
        if id != docs.len() {
            return Err(Error::format(format!("doc ids must be consecutive, found {id}")));
        }
        let theta = floats(Some(cols[1]), topics)?;
        let assignments = cols[2]
            .split_whitespace()
            .map(|t| match t {
                "-" => Ok(None),
                t => t
                    .parse::<usize>()
                    .ok()
                    .filter(|&z| z < topics)
                    .map(Some)
                    .ok_or_else(|| Error::format(format!("bad topic `{t}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let oov = assignments.iter().filter(|a| a.is_none()).count();
        let empty = oov == assignments.len();
        docs.push(DocTopics {
            theta,
            assignments,
            oov,
            empty,
        });
    }
    Ok((level, docs))
}
