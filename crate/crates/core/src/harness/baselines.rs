use std::fmt;
use std::str::FromStr;

use crate::data::InteractionGraph;
use crate::error::Error;
use crate::factor::Hyperparams;

/// Training participation count of every voting; identical for all users.
pub fn mostpop_scores(train: &InteractionGraph) -> Vec<f64> {
    (0..train.n_votings())
        .map(|j| train.participants(j).len() as f64)
        .collect()
}

/// Document embeddings a model's similarity matrices are built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EmbeddingSource {
    Tewe,
    SkipGram,
    /// Fold-in topic distributions used directly as document vectors.
    Theta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    MostPop,
    BasicMf,
    JtsMf,
    JtsMfS,
    JtsMfG,
    JtsMfV,
    TopicMf,
    SemanticMf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::MostPop,
        ModelKind::BasicMf,
        ModelKind::JtsMf,
        ModelKind::JtsMfS,
        ModelKind::JtsMfG,
        ModelKind::JtsMfV,
        ModelKind::TopicMf,
        ModelKind::SemanticMf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::MostPop => "mostpop",
            ModelKind::BasicMf => "basic-mf",
            ModelKind::JtsMf => "jts-mf",
            ModelKind::JtsMfS => "jts-mf-s",
            ModelKind::JtsMfG => "jts-mf-g",
            ModelKind::JtsMfV => "jts-mf-v",
            ModelKind::TopicMf => "topic-mf",
            ModelKind::SemanticMf => "semantic-mf",
        }
    }

    /// `None` for models without similarity coupling.
    pub fn embedding_source(self) -> Option<EmbeddingSource> {
        match self {
            ModelKind::MostPop | ModelKind::BasicMf => None,
            ModelKind::JtsMf | ModelKind::JtsMfS | ModelKind::JtsMfG | ModelKind::JtsMfV => Some(EmbeddingSource::Tewe),
            ModelKind::TopicMf => Some(EmbeddingSource::Theta),
            ModelKind::SemanticMf => Some(EmbeddingSource::SkipGram),
        }
    }

    pub fn is_factorization(self) -> bool {
        self != ModelKind::MostPop
    }

    /// Default `(α, β, γ)`.
    pub fn default_weights(self) -> (f64, f64, f64) {
        match self {
            ModelKind::MostPop | ModelKind::BasicMf => (0.0, 0.0, 0.0),
            ModelKind::JtsMf => (10.0, 140.0, 30.0),
            ModelKind::JtsMfS => (10.0, 0.0, 0.0),
            ModelKind::JtsMfG => (0.0, 140.0, 0.0),
            ModelKind::JtsMfV => (0.0, 0.0, 30.0),
            ModelKind::TopicMf => (2.0, 60.0, 15.0),
            ModelKind::SemanticMf => (8.0, 120.0, 20.0),
        }
    }

    /// `base` with this model's weights.
    pub fn hyperparams(self, base: &Hyperparams) -> Hyperparams {
        let (a, b, g) = self.default_weights();
        base.clone().with_weights(a, b, g)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let norm = s.trim().to_ascii_lowercase().replace(['_', '(', ')'], "-");
        let norm = norm.trim_end_matches('-');
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == norm || m.name().replace('-', "") == norm.replace('-', ""))
            .ok_or_else(|| Error::config(format!("unknown model `{s}`")))
    }
}
