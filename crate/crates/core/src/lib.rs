//! Geometric (n-ball) embeddings of EL++ ontologies.
//!
//! Pipeline: [`ontology`] parses the text format, [`normalizer`] rewrites
//! axioms into normal forms, [`trainer`] fits class balls and relation
//! translations by minimizing the [`losses`], [`geometry`] checks whether a
//! finished embedding is a model, and [`eval`] / [`semsim`] rank held-out
//! links.

pub mod checkpoint;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod ingest;
pub mod losses;
pub mod normalizer;
pub mod ontology;
pub mod semsim;
pub mod synth;
pub mod trainer;

pub use checkpoint::{export_2d, Checkpoint};
pub use embedding::{EmbeddingSet, GradientSet, TOP_RADIUS};
pub use error::{Error, ParseError, Result};
pub use eval::{ranking_report, EmbeddingScorer, LinkScorer, LinkSplit, RankingReport, Triple};
pub use geometry::{check_model, check_model_with, Ball, ModelReport, Nf2Criterion};
pub use losses::{batch_gradient, batch_loss, LossBatch, LossTerms};
pub use normalizer::{normalize, normalize_ontology, NormalAxiom, NormalFormTag, NormalizedTheory};
pub use ontology::{Axiom, ClassId, Concept, IndividualId, Ontology, RelationId};
pub use semsim::{Measure, SemsimScorer, TaxonomyIndex};
pub use trainer::{train, TrainConfig};

/// The family-domain knowledge base used throughout the tests and docs.
pub const FAMILY_KB: &str = include_str!("../data/family.el");
