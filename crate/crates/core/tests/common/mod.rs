#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use streamctc_core::{Alphabet, EmissionMatrix};

pub const LETTERS: &str = "abcdefghijklmnopqrstuvwxyz' ";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// First `visible` characters of a fixed pool.
pub fn alphabet(visible: usize) -> Alphabet {
    Alphabet::new(&LETTERS[..visible]).unwrap()
}

/// Random rows; `sharpness` > 1 makes them peakier.
pub fn random_emissions(rng: &mut ChaCha8Rng, alphabet: &Alphabet, frames: usize, sharpness: f64) -> EmissionMatrix {
    let width = alphabet.size_with_blank();
    let rows = (0..frames)
        .map(|_| {
            let raw: Vec<f64> = (0..width).map(|_| rng.random_range(0.01f64..1.0).powf(sharpness)).collect();
            let sum: f64 = raw.iter().sum();
            raw.iter().map(|x| x / sum).collect()
        })
        .collect();
    EmissionMatrix::new(alphabet.clone(), rows).unwrap()
}

pub fn random_text(rng: &mut ChaCha8Rng, alphabet: &Alphabet, len: usize) -> String {
    (0..len).map(|_| alphabet.char_at(rng.random_range(0..alphabet.len())).unwrap()).collect()
}
