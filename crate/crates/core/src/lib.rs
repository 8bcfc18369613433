//! Turns specialization-exam question banks into a reviewable course:
//! ingestion, keyword retrieval with reranking, citation-grounded comment
//! generation, annotation agreement statistics and spaced-repetition
//! scheduling.

pub mod clock;
pub mod config;
pub mod corpus;
pub mod evalkit;
pub mod exam;
pub mod exec;
pub mod genpipe;
mod http;
pub mod rerank;
pub mod retrieval;
pub mod scheduler;

pub use exec::Execution;
pub use http::EndpointConfig;
