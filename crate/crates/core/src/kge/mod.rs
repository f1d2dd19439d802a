//! Knowledge-graph embeddings over chemical-disease triples.
//!
//! Triples come from a CTD export (relations inferred-association,
//! therapeutic and marker/mechanism) completed with an artificial `null`
//! relation for candidate pairs CTD knows nothing about. Embeddings are
//! learned with translation models (TransE, TransH, TransR) under a margin
//! ranking objective with Bernoulli negative sampling.

mod model;
mod store;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use model::{
    distance, distance_grad, margin_loss, margin_loss_grad, train_kge, transe_baseline,
    DistanceGrad, DistanceNorm, KgeConfig, KgeModel, KgeRun, KgeVariant, MarginGrad, Projection,
    ProjectionRef,
};
pub use store::{
    bern_stats, extract_triples, read_ctd, read_triples, write_triples, BernStats, IndexedTriple,
    Triple, TripleStore,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    InferredAssociation,
    Therapeutic,
    MarkerMechanism,
    Null,
}

impl Relation {
    pub const ALL: [Relation; 4] = [
        Relation::InferredAssociation,
        Relation::Therapeutic,
        Relation::MarkerMechanism,
        Relation::Null,
    ];

    /// Order in which a pair's relations are considered by
    /// [`TripleStore::assign_relation`].
    pub const PRIORITY: [Relation; 3] = [
        Relation::MarkerMechanism,
        Relation::Therapeutic,
        Relation::InferredAssociation,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::InferredAssociation => "inferred-association",
            Relation::Therapeutic => "therapeutic",
            Relation::MarkerMechanism => "marker/mechanism",
            Relation::Null => "null",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Relation::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown relation {s:?}")))
    }
}
