pub mod ablate;
pub mod eval;
pub mod index;
pub mod ingest;
pub mod kg;
pub mod query;
pub mod report;
