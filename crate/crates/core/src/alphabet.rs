use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{invalid, Result};

/// Glyph used to render the blank when no other is requested.
pub const DEFAULT_BLANK_GLYPH: char = '-';

/// Ordered set of visible characters plus the CTC blank.
///
/// Visible characters occupy indices `0..len()`. The blank sits at index
/// `len()`, i.e. the last column of an emission row. Language models reuse the
/// same visible indices and put end-of-sentence at `len()` instead.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    symbols: Vec<char>,
    blank_glyph: char,
}

impl Alphabet {
    pub fn new(visible: &str) -> Result<Self> {
        Self::with_blank_glyph(visible, DEFAULT_BLANK_GLYPH)
    }

    pub fn with_blank_glyph(visible: &str, blank_glyph: char) -> Result<Self> {
        let symbols: Vec<char> = visible.chars().collect();
        if symbols.is_empty() {
            return Err(invalid("alphabet needs at least one visible character"));
        }
        for (i, c) in symbols.iter().enumerate() {
            if symbols[..i].contains(c) {
                return Err(invalid(alloc::format!("duplicate alphabet character {c:?}")));
            }
        }
        if symbols.contains(&blank_glyph) {
            return Err(invalid(alloc::format!(
                "blank glyph {blank_glyph:?} collides with a visible character"
            )));
        }
        Ok(Self { symbols, blank_glyph })
    }

    /// Number of visible characters (blank excluded).
    #[inline]
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Width of an emission row: visible characters plus blank.
    #[inline]
    pub fn size_with_blank(&self) -> usize {
        self.symbols.len() + 1
    }

    #[inline]
    pub fn blank_index(&self) -> usize {
        self.symbols.len()
    }

    #[inline]
    pub fn blank_glyph(&self) -> char {
        self.blank_glyph
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.symbols.iter().position(|&s| s == c)
    }

    pub fn char_at(&self, index: usize) -> Option<char> {
        self.symbols.get(index).copied()
    }

    pub fn contains(&self, c: char) -> bool {
        self.symbols.contains(&c)
    }

    /// Maps text onto visible indices, rejecting unknown characters.
    pub fn encode(&self, text: &str) -> Result<Vec<usize>> {
        text.chars()
            .map(|c| {
                self.index_of(c)
                    .ok_or_else(|| invalid(alloc::format!("character {c:?} is not in the alphabet")))
            })
            .collect()
    }

    /// Maps visible indices back to text. Panics on an out-of-range index.
    pub fn decode(&self, symbols: &[usize]) -> String {
        symbols.iter().map(|&i| self.symbols[i]).collect()
    }

    /// Visible characters as a string, without the blank glyph.
    pub fn visible_string(&self) -> String {
        self.symbols.iter().collect()
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Alphabet({:?} + blank {:?})", self.visible_string(), self.blank_glyph)
    }
}
