//! Embeddings, the compressed nearest-neighbour index, and threshold retrieval.

pub mod embed;
pub mod ivfadc;
pub mod kmeans;
mod retrieve;

pub use embed::{embed, EmbeddingProvider, EmbeddingVector, HashingEmbedder, HttpEmbedder};
pub use ivfadc::{
    train_index, Encoded, IndexConfig, IvfadcIndex, ListEntry, Neighbor, RetrievalParams,
};
pub use retrieve::{build_entity_index, retrieve, BuiltIndex, ScoredEntity};
