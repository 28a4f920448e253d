//! Levenshtein alignment, error rates and substitution confusion counts.

use alloc::vec;
use alloc::vec::Vec;

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EditOp<T> {
    Match(T),
    Substitute { from: T, to: T },
    Insert(T),
    Delete(T),
}

/// A minimal alignment turning the reference into the hypothesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditAlignment<T> {
    pub operations: Vec<EditOp<T>>,
    pub distance: usize,
}

impl<T: Clone> EditAlignment<T> {
    /// Replays the operations; yields the hypothesis.
    pub fn apply(&self) -> Vec<T> {
        self.operations
            .iter()
            .filter_map(|op| match op {
                EditOp::Match(t) | EditOp::Insert(t) | EditOp::Substitute { to: t, .. } => Some(t.clone()),
                EditOp::Delete(_) => None,
            })
            .collect()
    }
}

/// Minimal Levenshtein alignment. Among equally short alignments the
/// backtrace prefers match, then substitute, then delete, then insert.
pub fn edit_distance<T: PartialEq + Clone>(reference: &[T], hypothesis: &[T]) -> EditAlignment<T> {
    let (n, m) = (reference.len(), hypothesis.len());
    let cols = m + 1;
    let mut d = vec![0usize; (n + 1) * cols];
    for (j, cell) in d[..cols].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        d[i * cols] = i;
        for j in 1..=m {
            let diag = d[(i - 1) * cols + j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            let del = d[(i - 1) * cols + j] + 1;
            let ins = d[i * cols + j - 1] + 1;
            d[i * cols + j] = diag.min(del).min(ins);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * cols + j];
        if i > 0 && j > 0 {
            let diag = d[(i - 1) * cols + j - 1];
            if reference[i - 1] == hypothesis[j - 1] && diag == here {
                ops.push(EditOp::Match(reference[i - 1].clone()));
                i -= 1;
                j -= 1;
                continue;
            }
            if diag + 1 == here {
                ops.push(EditOp::Substitute { from: reference[i - 1].clone(), to: hypothesis[j - 1].clone() });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && d[(i - 1) * cols + j] + 1 == here {
            ops.push(EditOp::Delete(reference[i - 1].clone()));
            i -= 1;
        } else {
            ops.push(EditOp::Insert(hypothesis[j - 1].clone()));
            j -= 1;
        }
    }
    ops.reverse();
    EditAlignment { operations: ops, distance: d[n * cols + m] }
}

/// Words of a transcript: trimmed, split on ASCII spaces, empty tokens dropped.
pub fn words(text: &str) -> Vec<&str> {
    text.trim().split(' ').filter(|w| !w.is_empty()).collect()
}

/// Word error rate: word-level edit distance over reference word count.
pub fn wer(reference: &str, hypothesis: &str) -> Result<f64> {
    let r = words(reference);
    if r.is_empty() {
        return Err(Error::Empty("reference has no words".into()));
    }
    Ok(edit_distance(&r, &words(hypothesis)).distance as f64 / r.len() as f64)
}

/// Character error rate: character edit distance over reference length.
pub fn cer(reference: &str, hypothesis: &str) -> Result<f64> {
    let r: Vec<char> = reference.chars().collect();
    if r.is_empty() {
        return Err(Error::Empty("reference is empty".into()));
    }
    let h: Vec<char> = hypothesis.chars().collect();
    Ok(edit_distance(&r, &h).distance as f64 / r.len() as f64)
}

/// Substitution counts between reference and decoded characters.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    alphabet: Alphabet,
    counts: Vec<u64>,
    /// Substitutions involving a character outside the alphabet.
    pub unmapped: u64,
}

impl ConfusionMatrix {
    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn dim(&self) -> usize {
        self.alphabet.len()
    }

    pub fn count(&self, reference: char, decoded: char) -> u64 {
        match (self.alphabet.index_of(reference), self.alphabet.index_of(decoded)) {
            (Some(i), Some(j)) => self.counts[i * self.dim() + j],
            _ => 0,
        }
    }

    /// Row-normalized entry; zero for a row without substitutions.
    pub fn normalized(&self, reference: char, decoded: char) -> f64 {
        let Some(i) = self.alphabet.index_of(reference) else { return 0.0 };
        let Some(j) = self.alphabet.index_of(decoded) else { return 0.0 };
        let row = self.row_total(i);
        if row == 0 {
            0.0
        } else {
            self.counts[i * self.dim() + j] as f64 / row as f64
        }
    }

    fn row_total(&self, i: usize) -> u64 {
        let n = self.dim();
        self.counts[i * n..(i + 1) * n].iter().sum()
    }

    /// Normalized rows, indexed by alphabet position.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let total = self.row_total(i);
                self.counts[i * n..(i + 1) * n]
                    .iter()
                    .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                    .collect()
            })
            .collect()
    }

    pub fn total_substitutions(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Accumulates character substitutions from minimal alignments of each pair.
pub fn confusion_matrix<'a>(
    alphabet: &Alphabet,
    pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> ConfusionMatrix {
    let n = alphabet.len();
    let mut m = ConfusionMatrix { alphabet: alphabet.clone(), counts: vec![0; n * n], unmapped: 0 };
    for (reference, hypothesis) in pairs {
        let r: Vec<char> = reference.chars().collect();
        let h: Vec<char> = hypothesis.chars().collect();
        for op in edit_distance(&r, &h).operations {
            if let EditOp::Substitute { from, to } = op {
                match (alphabet.index_of(from), alphabet.index_of(to)) {
                    (Some(i), Some(j)) => m.counts[i * n + j] += 1,
                    _ => m.unmapped += 1,
                }
            }
        }
    }
    m
}
