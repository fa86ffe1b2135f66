//! Batch toolkit for OCR'd historical deeds: flags racially restrictive
//! covenant language and georeferences each deed through its Public Land
//! Survey System (PLSS) description.
//!
//! The per-document stages are pure functions over immutable inputs, so
//! [`exec::Executor`] can fan them out across threads (feature `parallel`)
//! and merge results back in input order.

pub mod corpus;
pub mod detector;
pub mod error;
pub mod evaluator;
pub mod exec;
pub mod geometry;
pub mod geoner;
pub mod jsonl;
pub mod numerals;
pub mod pipeline;
pub mod plss;
pub mod subdiv;
pub mod synth;

pub use error::{Error, Result};
