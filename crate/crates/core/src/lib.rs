//! Clinical text mining: an annotation pipeline, BiLSTM-CNN-char entity
//! tagging, windowed assertion-status classification and a parallel corpus
//! runner with frequency and assertion reports.

pub mod annotation;
pub mod assertion;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod embeddings;
mod error;
pub mod eval;
pub mod ner;
pub mod nn;
pub mod pipeline;
pub mod stages;
pub mod synthetic;
pub mod tags;
pub mod text;

pub use error::{Error, Result};
