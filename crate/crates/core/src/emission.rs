use alloc::format;
use alloc::vec::Vec;

use crate::alphabet::Alphabet;
use crate::error::{invalid, Result};

/// Allowed deviation of a row sum from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// Frame-wise CTC posteriors: `T` rows of `|A|+1` probabilities, blank last.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionMatrix {
    alphabet: Alphabet,
    width: usize,
    data: Vec<f64>,
}

/// Checks one emission row against an alphabet. Rows are never renormalized.
pub fn validate_row(alphabet: &Alphabet, row: &[f64]) -> Result<()> {
    let width = alphabet.size_with_blank();
    if row.len() != width {
        return Err(invalid(format!(
            "emission row has {} entries, alphabet needs {}",
            row.len(),
            width
        )));
    }
    let mut sum = 0.0;
    for (i, &p) in row.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("emission entry {i} = {p} outside [0, 1]")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(invalid(format!("emission row sums to {sum}, expected 1")));
    }
    Ok(())
}

impl EmissionMatrix {
    pub fn new(alphabet: Alphabet, rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = alphabet.size_with_blank();
        let mut data = Vec::with_capacity(rows.len() * width);
        for (t, row) in rows.iter().enumerate() {
            validate_row(&alphabet, row).map_err(|e| invalid(format!("frame {t}: {e}")))?;
            data.extend_from_slice(row);
        }
        Ok(Self { alphabet, width, data })
    }

    /// Builds a matrix from a flat row-major buffer.
    pub fn from_flat(alphabet: Alphabet, data: Vec<f64>) -> Result<Self> {
        let width = alphabet.size_with_blank();
        if !data.len().is_multiple_of(width) {
            return Err(invalid(format!(
                "flat buffer of {} values is not a multiple of row width {width}",
                data.len()
            )));
        }
        for (t, row) in data.chunks_exact(width).enumerate() {
            validate_row(&alphabet, row).map_err(|e| invalid(format!("frame {t}: {e}")))?;
        }
        Ok(Self { alphabet, width, data })
    }

    pub fn empty(alphabet: Alphabet) -> Self {
        let width = alphabet.size_with_blank();
        Self { alphabet, width, data: Vec::new() }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Number of frames `T`.
    pub fn frames(&self) -> usize {
        self.data.len() / self.width
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.width..(t + 1) * self.width]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.width)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Frames `start..` as a new matrix.
    pub fn slice_from(&self, start: usize) -> Self {
        let start = start.min(self.frames()) * self.width;
        Self { alphabet: self.alphabet.clone(), width: self.width, data: self.data[start..].to_vec() }
    }
}
