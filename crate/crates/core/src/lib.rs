//! Knowledge graph embedding models and data-poisoning attacks on them.
//!
//! The crate trains DistMult, ComplEx and TransE with 1-K scoring, evaluates
//! filtered link prediction, and generates adversarial training additions that
//! exploit symmetry, inversion and composition patterns.

pub mod attack;
pub mod config;
pub mod error;
pub mod eval;
pub mod graph;
pub mod model;
pub mod pipeline;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use graph::{Dataset, EntityId, FilterIndex, RelationId, Side, Triple, Vocabulary};
pub use model::{Model, ModelKind, Scorer};
pub use train::TrainConfig;
