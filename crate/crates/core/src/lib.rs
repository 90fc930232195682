//! Toolkit for measuring how well code-generating language models handle
//! open-source license compliance.
//!
//! The pipeline mines licensed Python functions from a corpus, asks a model
//! to complete each function body, flags completions strikingly similar to
//! the original, asks the model which license applies, and scores the
//! answers.

pub mod artifact;
pub mod bench;
pub mod corpus;
pub mod harness;
pub mod index;
pub mod lexer;
pub mod license;
pub mod score;
pub mod similarity;
pub mod snippet;
