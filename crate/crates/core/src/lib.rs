//! Chemical-disease relation extraction with knowledge-guided attention.
//!
//! The pipeline turns PubTator documents into candidate instances, learns
//! translation embeddings over chemical-disease triples, trains an attention
//! classifier that combines context words with the pair's relation vector,
//! then merges and post-processes predictions at the document level.

pub mod config;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod heatmap;
pub mod instances;
pub mod kge;
pub mod linalg;
pub mod nam;
pub mod pipeline;
pub mod postprocess;
pub mod synthetic;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    struct Overview;
    #[doc = include_str!("../../../book/src/instances.md")]
    struct Instances;
    #[doc = include_str!("../../../book/src/kge.md")]
    struct Kge;
    #[doc = include_str!("../../../book/src/classifier.md")]
    struct Classifier;
    #[doc = include_str!("../../../book/src/postprocess.md")]
    struct Postprocess;
    #[doc = include_str!("../../../book/src/evaluation.md")]
    struct Evaluation;
    #[doc = include_str!("../../../book/src/pipeline.md")]
    struct Pipeline;
}
