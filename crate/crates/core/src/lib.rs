pub mod cli;
pub mod ingest;
pub mod metrics;
pub mod semantic;
pub mod synthetic;
mod text;
pub mod vmf;
