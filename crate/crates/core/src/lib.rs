//! Dialogue corpus toolkit.
//!
//! - [`corpus`]: turn records, dialogues and the line-delimited file formats
//! - [`preprocess`]: translation adapters, Q/R text and cleaning
//! - [`noise`]: seeded, replayable window corruption for denoising pairs
//! - [`rouge`]: ROUGE-N / ROUGE-L
//! - [`hypergraph`]: hypertext graph of segments, summaries, themes and styles
//! - [`cli`]: the `hypersumm` command

pub mod cli;
pub mod config;
pub mod corpus;
pub mod hypergraph;
pub mod noise;
pub mod preprocess;
pub mod rouge;
pub mod sample;
