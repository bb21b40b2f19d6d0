//! Retrieval-style question answering built from scratch.
//!
//! Questions and answers are embedded as paragraph vectors ([`embedding`]),
//! a two-tower similarity network ([`simnet`]) scores (question, answer)
//! pairs, and [`retrieval`] picks the best candidate from a pool and decides
//! whether it is confident enough to answer or should escalate to a human.
//!
//! The remaining modules cover the surrounding machinery: text ingestion and
//! vocabularies ([`corpus`]), the SGD training loop for the network
//! ([`training`]), the bag-of-words vs. paragraph-vector classification
//! experiment ([`evaluation`]) and synthetic fixtures ([`synth`]).

pub mod cli;
pub mod corpus;
pub mod embedding;
pub mod engine;
pub mod error;
pub mod evaluation;
pub mod linalg;
mod binio;
mod rng;
pub mod retrieval;
pub mod simnet;
pub mod synth;
pub mod training;

pub use error::{Error, Result};
