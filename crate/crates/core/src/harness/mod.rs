//! Evaluation harness and pipeline driver.

pub mod baselines;
pub mod config;
pub mod metrics;
pub mod pipeline;
pub mod split;
pub mod stats;
pub mod synth;

pub use baselines::{mostpop_scores, EmbeddingSource, ModelKind};
pub use config::PipelineConfig;
pub use metrics::{evaluate_topk, EvalReport, MetricRow, Scorer, DEFAULT_KS};
pub use pipeline::{execute, run_pipeline, write_run, RunResult};
pub use split::{split, Split, SplitSpec};
pub use stats::{common_voting_friend_prob, pair_type_stats, FriendProbability, PairTypeStats};
pub use synth::{synth_generate, GroundTruth, SynthConfig};
