//! Streaming CTC decoding primitives.
//!
//! Everything here is pure computation over emission posteriors and is
//! `no_std` (it needs `alloc`). File formats and the command-line tool live
//! in the `streamctc` crate.

#![no_std]
extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod alphabet;
pub mod beam;
pub mod ctc;
pub mod emission;
pub mod error;
pub mod lm;
pub mod logspace;
pub mod metrics;
pub mod online;
pub mod prefix;
pub mod seq2seq;
pub mod sim;

pub use alphabet::Alphabet;
pub use beam::{beam_decode, beam_init, beam_search, beam_step, Beam, BeamConfig, Hypothesis};
pub use ctc::{
    collapse, exact_transcript_probability, greedy_decode, path_log_probability, Marginalization, Path, Transcript,
};
pub use emission::EmissionMatrix;
pub use error::{Error, Result};
pub use lm::{CharLm, NgramLm, UniformLm};
pub use metrics::{cer, confusion_matrix, edit_distance, wer, ConfusionMatrix, EditAlignment, EditOp};
pub use online::{
    changes_per_frame, lm_complete_word, receptive_field, IncrementalOutput, ReceptiveField, ReceptiveFieldSpec,
    StreamDecoder,
};
pub use prefix::Prefix;
pub use seq2seq::{length_penalty, s2s_decode, AutoregressiveScorer, MockScorer, S2SConfig};
pub use sim::{simulate, SimConfig};
