//! Reference-based sequence classification.
//!
//! Sequences are embedded as vectors of similarities to a set of reference
//! sequences, and the vectors are classified with ordinary vector methods.
//! References are either the whole training set, cluster representatives,
//! training sequences that pass a per-class rank test, or mined patterns.

pub mod classify;
pub mod dataset;
pub mod error;
pub mod features;
pub mod patterns;
pub mod refselect;
pub mod seq;
pub mod similarity;
pub mod synth;

pub use classify::{cross_validate, Classifier, CvConfig, EvalReport, PipelineConfig};
pub use error::{Error, Result};
pub use features::{transform, FeatureMatrix};
pub use refselect::{select_references, ReferenceSet, SelectionMethod};
pub use seq::{Alphabet, ClassId, ItemId, LabeledSequence, Sequence, SequenceDataset};
pub use similarity::SimilaritySpec;
