//! Extraction of the number of enrolled subjects from randomised controlled
//! trial abstracts.
//!
//! The pipeline has two stages. Every integer of at least ten mentioned in an
//! abstract becomes a [`Candidate`](candidates::Candidate); each candidate is
//! then described by contextual, lexical and structural features and scored
//! by an RBF-kernel SVM with Platt-calibrated probabilities. Exactly one
//! candidate per abstract, the most probable one, is reported as the size.
//!
//! ```no_run
//! use trialsize::corpus::load_corpus;
//! use trialsize::pipeline::predict_size;
//! use trialsize::svm::SvmModel;
//!
//! # fn main() -> trialsize::Result<()> {
//! let model = SvmModel::load("model.json")?;
//! for abstract_ in load_corpus("abstracts.jsonl")? {
//!     let prediction = predict_size(&model, &abstract_);
//!     println!("{} -> {:?}", prediction.abstract_id, prediction.predicted_value);
//! }
//! # Ok(())
//! # }
//! ```

pub mod candidates;
pub mod corpus;
pub mod embeddings;
mod error;
pub mod features;
pub mod pipeline;
pub mod seed;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};
