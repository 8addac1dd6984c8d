//! TransformCode: contrastive code embeddings learned from semantics-preserving
//! AST transformations.
//!
//! The pipeline runs `normalize -> generate_anchor -> extract_path -> tokenize
//! -> encode`, and trains a query/momentum encoder pair with InfoNCE.

pub mod ast;
pub mod augment;
pub mod checkpoint;
pub mod config;
pub mod edit;
pub mod encoder;
pub mod eval;
pub mod extract;
pub mod io;
pub mod pipeline;
pub mod tokenizer;
pub mod trainer;

#[cfg(test)]
mod testdata;
