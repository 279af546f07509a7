//! Declarative pipeline configuration (TOML).

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embedding::{EmbeddingConfig, EmbeddingMode};
use crate::error::{Error, Result};
use crate::factor::{DataTerm, Hyperparams};
use crate::harness::baselines::ModelKind;
use crate::harness::metrics::DEFAULT_KS;
use crate::harness::split::SplitSpec;
use crate::harness::synth::SynthConfig;
use crate::similarity::SimilarityConfig;
use crate::topic::LdaConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub models: Vec<String>,
    pub ks: Vec<usize>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            models: vec!["mostpop".into(), "basic-mf".into(), "jts-mf".into()],
            ks: DEFAULT_KS.to_vec(),
        }
    }
}

/// Either a dataset on disk or a generator spec.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Dataset directory or manifest file, relative to the config file.
    pub path: Option<PathBuf>,
    pub synth: Option<SynthConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSection {
    fn default() -> Self {
        let d = SplitSpec::default();
        Self {
            test_fraction: d.test_fraction,
            seed: d.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaSection {
    pub topics: usize,
    /// Defaults to `50 / topics` when absent.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub infer_iterations: usize,
    pub seed: u64,
}

impl Default for LdaSection {
    fn default() -> Self {
        let d = LdaConfig::default();
        Self {
            topics: d.topics,
            alpha: d.alpha,
            beta: d.beta,
            iterations: d.iterations,
            infer_iterations: 50,
            seed: d.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub unigram_power: f64,
    pub subsample: Option<f64>,
    pub seed: u64,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        let d = EmbeddingConfig::default();
        Self {
            dim: d.dim,
            window: d.window,
            negatives: d.negatives,
            epochs: d.epochs,
            learning_rate: d.learning_rate,
            unigram_power: d.unigram_power,
            subsample: d.subsample,
            seed: d.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilaritySection {
    pub threshold: f64,
    /// Maximum voting neighbors per row; 0 keeps all.
    pub candidate_cap: usize,
}

impl Default for SimilaritySection {
    fn default() -> Self {
        let d = SimilarityConfig::default();
        Self {
            threshold: d.threshold,
            candidate_cap: d.candidate_cap.unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FactorSection {
    pub dim: usize,
    pub lambda: f64,
    pub neg_weight: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
    /// `gram` or `dense`.
    pub data_term: String,
}

impl Default for FactorSection {
    fn default() -> Self {
        let d = Hyperparams::default();
        Self {
            dim: d.dim,
            lambda: d.lambda,
            neg_weight: d.neg_weight,
            learning_rate: d.learning_rate,
            iterations: d.iterations,
            seed: d.seed,
            data_term: "gram".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub run: RunSection,
    pub data: DataSection,
    pub split: SplitSection,
    pub lda: LdaSection,
    pub embedding: EmbeddingSection,
    pub similarity: SimilaritySection,
    pub factorization: FactorSection,
    /// Per-model `[alpha, beta, gamma]` overrides, keyed by model name.
    pub weights: BTreeMap<String, [f64; 3]>,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Canonical serialization; parsing it back yields an equal config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("pipeline config is always representable as TOML")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.data.path, &self.data.synth) {
            (None, None) => return Err(Error::config("[data] needs either `path` or a `synth` table")),
            (Some(_), Some(_)) => return Err(Error::config("[data] takes `path` or `synth`, not both")),
            _ => {}
        }
        let models = self.models()?;
        if models.is_empty() {
            return Err(Error::config("no models listed"));
        }
        for name in self.weights.keys() {
            let kind: ModelKind = name.parse()?;
            if !kind.is_factorization() || kind == ModelKind::BasicMf {
                return Err(Error::config(format!("model `{name}` has no similarity weights")));
            }
        }
        if !self.run.ks.iter().any(|&k| k > 0) {
            return Err(Error::config("k-list needs a positive entry"));
        }
        self.data_term()?;
        Ok(())
    }

    /// Listed models, deduplicated in listing order.
    pub fn models(&self) -> Result<Vec<ModelKind>> {
        let mut out: Vec<ModelKind> = Vec::new();
        for name in &self.run.models {
            let m: ModelKind = name.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        Ok(out)
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            test_fraction: self.split.test_fraction,
            seed: self.split.seed,
        }
    }

    pub fn lda_config(&self) -> LdaConfig {
        LdaConfig {
            topics: self.lda.topics,
            alpha: self.lda.alpha,
            beta: self.lda.beta,
            iterations: self.lda.iterations,
            seed: self.lda.seed,
        }
    }

    pub fn embedding_config(&self, mode: EmbeddingMode) -> EmbeddingConfig {
        let e = &self.embedding;
        EmbeddingConfig {
            mode,
            dim: e.dim,
            window: e.window,
            negatives: e.negatives,
            epochs: e.epochs,
            learning_rate: e.learning_rate,
            seed: e.seed,
            unigram_power: e.unigram_power,
            subsample: e.subsample,
        }
    }

    pub fn similarity_config(&self) -> SimilarityConfig {
        SimilarityConfig {
            threshold: self.similarity.threshold,
            candidate_cap: (self.similarity.candidate_cap > 0).then_some(self.similarity.candidate_cap),
        }
    }

    fn data_term(&self) -> Result<DataTerm> {
        match self.factorization.data_term.as_str() {
            "gram" => Ok(DataTerm::Gram),
            "dense" => Ok(DataTerm::Dense),
            other => Err(Error::config(format!("unknown data_term `{other}`"))),
        }
    }

    /// Factorization settings for `model`, with any weight override applied.
    pub fn hyperparams(&self, model: ModelKind) -> Result<Hyperparams> {
        let f = &self.factorization;
        let base = Hyperparams {
            dim: f.dim,
            lambda: f.lambda,
            neg_weight: f.neg_weight,
            learning_rate: f.learning_rate,
            iterations: f.iterations,
            seed: f.seed,
            data_term: self.data_term()?,
            ..Hyperparams::default()
        };
        let mut hyper = model.hyperparams(&base);
        for (name, &[a, b, g]) in &self.weights {
            if name.parse::<ModelKind>()? == model {
                hyper = hyper.with_weights(a, b, g);
            }
        }
        Ok(hyper)
    }
}

/// Generator settings from a standalone TOML document with the `[data.synth]` keys.
pub fn synth_from_toml(text: &str) -> Result<SynthConfig> {
    toml::from_str(text).map_err(|e| Error::config(e.to_string()))
}
