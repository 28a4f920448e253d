//! Synthetic peaky CTC posteriors for a known transcript.
//!
//! Randomness comes from ChaCha8 seeded with `seed` via
//! `SeedableRng::seed_from_u64`, so output is identical on every platform.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alphabet::Alphabet;
use crate::emission::EmissionMatrix;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Mass on the intended symbol of every frame.
    pub peak_prob: f64,
    /// Mean number of frames spent on each character.
    pub frames_per_char: usize,
    pub seed: u64,
    /// Follow each character peak with blank-dominated frames.
    pub blank_fill: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { peak_prob: 0.9, frames_per_char: 3, seed: 0, blank_fill: true }
    }
}

impl SimConfig {
    pub fn validate(&self, alphabet: &Alphabet) -> Result<()> {
        let floor = 1.0 / alphabet.size_with_blank() as f64;
        if !(self.peak_prob > floor && self.peak_prob <= 1.0) {
            return Err(invalid(format!("peak_prob must lie in ({floor}, 1], got {}", self.peak_prob)));
        }
        if self.frames_per_char == 0 {
            return Err(invalid("frames_per_char must be at least 1"));
        }
        Ok(())
    }
}

fn peaked_row(width: usize, peak: usize, peak_prob: f64) -> Vec<f64> {
    let rest = (1.0 - peak_prob) / (width - 1) as f64;
    let mut row = vec![rest; width];
    row[peak] = peak_prob;
    row
}

/// Emissions whose every ground-truth character gets at least one peak
/// frame. Repeated characters are always separated by a blank-dominated frame.
pub fn simulate(ground_truth: &str, alphabet: &Alphabet, config: &SimConfig) -> Result<EmissionMatrix> {
    config.validate(alphabet)?;
    let symbols = alphabet.encode(ground_truth)?;
    let width = alphabet.size_with_blank();
    let blank = alphabet.blank_index();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let fpc = config.frames_per_char;
    let (lo, hi) = ((fpc - fpc / 2).max(1), fpc + fpc / 2);
    let mut labels: Vec<usize> = Vec::new();
    let lead = rng.random_range(0..=fpc);
    labels.extend(core::iter::repeat_n(blank, lead));
    for &s in &symbols {
        if labels.last() == Some(&s) {
            labels.push(blank);
        }
        let duration = rng.random_range(lo..=hi);
        let peaks = if config.blank_fill { duration.div_ceil(2) } else { duration };
        labels.extend(core::iter::repeat_n(s, peaks));
        labels.extend(core::iter::repeat_n(blank, duration - peaks));
    }
    let tail = rng.random_range(0..=fpc);
    labels.extend(core::iter::repeat_n(blank, tail));

    let data = labels
        .iter()
        .flat_map(|&l| peaked_row(width, l, config.peak_prob))
        .collect();
    EmissionMatrix::from_flat(alphabet.clone(), data)
}
