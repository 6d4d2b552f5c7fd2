//! Deterministic analysis toolkit for 3GPP-style technical specifications.
//!
//! The crate is organized around five subsystems:
//!
//! - [`corpus`] ingests plain-text specification renditions, segments them
//!   into clauses, chunks clause bodies, and assembles text, table, and
//!   figure components into a unified component space.
//! - [`retrieval`] builds a hybrid sparse/dense index over the component
//!   space (BM25 plus TF-IDF projected through a truncated SVD) and serves
//!   top-k, citation-labeled evidence sets.
//! - [`specgraph`] extracts, validates, and renders taxonomy-based knowledge
//!   graphs per clause, and retrieves over the rendered graph blocks.
//! - [`gateway`] provides uniform access to a chat-completion model with
//!   deterministic configuration, a record/replay cache, a mock transport,
//!   and the judge protocol.
//! - [`bench`](mod@bench) loads the staged benchmark tasks, runs the
//!   configured pipeline, and computes every reported metric.
//!
//! All pipeline outputs are byte-reproducible when the gateway runs in
//! `mock` or `replay` transport mode.

pub mod bench;
pub mod corpus;
pub mod gateway;
pub mod prompts;
pub mod retrieval;
pub mod specgraph;

pub use bench::{EvalReport, Family, PipelineConfig, PredictionRecord, TaskInstance, VulnCategory};
pub use corpus::{Clause, ComponentKind, ComponentSpace, NormalizedDocument, SpecComponent};
pub use gateway::{Gateway, GatewayError, JudgeVerdict, ModelRequest, TransportMode};
pub use retrieval::{EvidenceSet, HybridIndex, RetrievalConfig, ScoreBreakdown};
pub use specgraph::{EntityType, KgBlock, RelationType, SpecGraph};
