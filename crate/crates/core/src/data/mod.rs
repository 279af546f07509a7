//! Ingestion and validation of the relationship sets and voting texts.

pub mod corpus;
pub mod dataset;
pub mod graph;

pub use corpus::{build_documents, parse_voting_texts, Corpus, DocLevel, DocRef, Vocabulary};
pub use dataset::{Dataset, IdMap, Manifest};
pub use graph::{load_interactions, parse_edges, Dimensions, EdgeKind, GraphBuilder, InteractionGraph};
