//! Joint topic-semantic-social matrix factorization for recommending online
//! votings.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! 1. [`data`]: relationship graphs, voting texts, aggregated documents, TF-IDF.
//! 2. [`topic`]: collapsed Gibbs LDA trained on group documents, fold-in for
//!    users and votings.
//! 3. [`embedding`]: skip-gram with negative sampling over plain words or over
//!    `(word, word-topic, doc-topic)` pseudo-words, and TF-IDF document vectors.
//! 4. [`similarity`]: row-normalized social, group and voting similarity matrices.
//! 5. [`factor`]: the regularized factorization objective, its gradients and
//!    batch gradient descent.
//! 6. [`harness`]: splitting, baselines, top-k metrics, dataset statistics,
//!    synthetic data and the end-to-end pipeline.

pub mod data;
pub mod embedding;
pub mod error;
pub mod factor;
pub mod harness;
pub mod similarity;
pub mod topic;

mod rng;

pub use error::{Error, Result};
