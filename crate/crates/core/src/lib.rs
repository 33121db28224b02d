//! Dimension importance learning for groups of contextualized word vectors.
//!
//! Each sense group (all vectors annotated with one sense) trains its own
//! weight vector: every epoch a handful of dimensions is zeroed, the drop in
//! within-group pairwise cosine similarity is credited to those dimensions,
//! and the weights are moved with an l1-regularized AdaGrad step. Low-weight
//! dimensions can then be masked out and the masked vectors evaluated with
//! KNN word sense disambiguation and intrinsic group analyses.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, parallel
//! batch training and the command line live in the companion `swt` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod knn;
pub mod linalg;
pub mod masker;
pub mod swt;
pub mod synth;

pub use error::{Error, Result};
