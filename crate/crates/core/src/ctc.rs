//! CTC semantics: the collapse mapping, path and transcript probabilities,
//! and greedy decoding.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::alphabet::Alphabet;
use crate::emission::EmissionMatrix;
use crate::error::{invalid, Error, Result};
use crate::logspace::{exp, ln, log_add, LOG_ZERO};

/// Upper bound on `(|A|+1)^T` for the path-enumeration oracle.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

/// A frame-wise label sequence; blank is `alphabet.blank_index()`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    pub labels: Vec<usize>,
}

impl Path {
    pub fn new(labels: Vec<usize>) -> Self {
        Self { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Decoded text over the visible characters of an alphabet.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Transcript(String);

impl Transcript {
    /// Checks that every character is visible in `alphabet`.
    pub fn new(text: impl Into<String>, alphabet: &Alphabet) -> Result<Self> {
        let text = text.into();
        if let Some(c) = text.chars().find(|&c| !alphabet.contains(c)) {
            return Err(invalid(format!("character {c:?} is not in the alphabet")));
        }
        Ok(Self(text))
    }

    pub fn from_symbols(symbols: &[usize], alphabet: &Alphabet) -> Self {
        Self(alphabet.decode(symbols))
    }

    pub fn empty() -> Self {
        Self(String::new())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.chars().count()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl PartialEq<str> for Transcript {
    fn eq(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl PartialEq<&str> for Transcript {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

/// Merges adjacent repeats and drops blanks, returning visible indices.
pub fn collapse_symbols(labels: &[usize], blank: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = None;
    for &l in labels {
        if prev != Some(l) && l != blank {
            out.push(l);
        }
        prev = Some(l);
    }
    out
}

/// The CTC many-to-one mapping from a path to its transcript.
pub fn collapse(path: &Path, alphabet: &Alphabet) -> Result<Transcript> {
    let width = alphabet.size_with_blank();
    if let Some(&bad) = path.labels.iter().find(|&&l| l >= width) {
        return Err(invalid(format!("label {bad} out of range for {width} symbols")));
    }
    let symbols = collapse_symbols(&path.labels, alphabet.blank_index());
    Ok(Transcript::from_symbols(&symbols, alphabet))
}

/// `Σ_t log em[t][path_t]`; `-inf` when any factor is zero.
pub fn path_log_probability(path: &Path, em: &EmissionMatrix) -> Result<f64> {
    if path.len() != em.frames() {
        return Err(invalid(format!(
            "path has {} labels but emission matrix has {} frames",
            path.len(),
            em.frames()
        )));
    }
    let width = em.width();
    let mut total = 0.0;
    for (row, &l) in em.rows().zip(&path.labels) {
        if l >= width {
            return Err(invalid(format!("label {l} out of range for {width} symbols")));
        }
        total += ln(row[l]);
    }
    Ok(total)
}

/// How [`exact_transcript_probability`] marginalizes over alignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marginalization {
    /// Sum over every one of the `(|A|+1)^T` paths.
    Enumerate,
    /// Forward recursion over the blank-interleaved label sequence.
    Forward,
}

/// Probability that `em` emits `transcript`, summed over all alignments.
pub fn exact_transcript_probability(
    em: &EmissionMatrix,
    transcript: &Transcript,
    method: Marginalization,
) -> Result<f64> {
    let target = em.alphabet().encode(transcript.as_str())?;
    match method {
        Marginalization::Enumerate => enumerate_probability(em, &target),
        Marginalization::Forward => Ok(exp(forward_log_probability(em, &target))),
    }
}

fn check_enumeration_budget(em: &EmissionMatrix) -> Result<()> {
    let required = (em.width() as u128)
        .checked_pow(em.frames() as u32)
        .unwrap_or(u128::MAX);
    if required > ENUMERATION_LIMIT {
        return Err(Error::Capacity { required, limit: ENUMERATION_LIMIT });
    }
    Ok(())
}

/// Visits every path of `em` as (labels, linear probability).
fn for_each_path(em: &EmissionMatrix, mut visit: impl FnMut(&[usize], f64)) {
    let frames = em.frames();
    let width = em.width();
    let mut labels = vec![0usize; frames];
    loop {
        let p: f64 = labels.iter().enumerate().map(|(t, &l)| em.row(t)[l]).product();
        visit(&labels, p);
        // odometer increment, last frame fastest
        let mut t = frames;
        loop {
            if t == 0 {
                return;
            }
            t -= 1;
            labels[t] += 1;
            if labels[t] < width {
                break;
            }
            labels[t] = 0;
        }
    }
}

fn enumerate_probability(em: &EmissionMatrix, target: &[usize]) -> Result<f64> {
    check_enumeration_budget(em)?;
    let blank = em.alphabet().blank_index();
    let mut total = 0.0;
    for_each_path(em, |labels, p| {
        if collapse_symbols(labels, blank) == target {
            total += p;
        }
    });
    Ok(total)
}

/// Every transcript with nonzero probability, by exhaustive path enumeration.
/// Sorted by descending probability, ties by text.
pub fn enumerate_transcripts(em: &EmissionMatrix) -> Result<Vec<(Transcript, f64)>> {
    check_enumeration_budget(em)?;
    let blank = em.alphabet().blank_index();
    let mut mass: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for_each_path(em, |labels, p| {
        if p > 0.0 {
            *mass.entry(collapse_symbols(labels, blank)).or_insert(0.0) += p;
        }
    });
    let mut out: Vec<(Transcript, f64)> = mass
        .into_iter()
        .map(|(s, p)| (Transcript::from_symbols(&s, em.alphabet()), p))
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

/// Log-probability of `target` (visible indices) by the CTC forward recursion.
pub fn forward_log_probability(em: &EmissionMatrix, target: &[usize]) -> f64 {
    let blank = em.alphabet().blank_index();
    let frames = em.frames();
    if frames == 0 {
        return if target.is_empty() { 0.0 } else { LOG_ZERO };
    }
    // extended sequence: blank, l1, blank, l2, ..., blank
    let mut ext = Vec::with_capacity(2 * target.len() + 1);
    ext.push(blank);
    for &l in target {
        ext.push(l);
        ext.push(blank);
    }
    let n = ext.len();
    let mut alpha = vec![LOG_ZERO; n];
    let row = em.row(0);
    alpha[0] = ln(row[ext[0]]);
    if n > 1 {
        alpha[1] = ln(row[ext[1]]);
    }
    let mut next = vec![LOG_ZERO; n];
    for t in 1..frames {
        let row = em.row(t);
        for s in 0..n {
            let mut acc = alpha[s];
            if s >= 1 {
                acc = log_add(acc, alpha[s - 1]);
            }
            if s >= 2 && ext[s] != blank && ext[s] != ext[s - 2] {
                acc = log_add(acc, alpha[s - 2]);
            }
            next[s] = if acc == LOG_ZERO { LOG_ZERO } else { acc + ln(row[ext[s]]) };
        }
        core::mem::swap(&mut alpha, &mut next);
    }
    if n > 1 {
        log_add(alpha[n - 1], alpha[n - 2])
    } else {
        alpha[0]
    }
}

/// Per-frame argmax path; ties go to the lowest symbol index.
pub fn argmax_path(em: &EmissionMatrix) -> Path {
    let labels = em
        .rows()
        .map(|row| {
            let mut best = 0;
            for (i, &p) in row.iter().enumerate().skip(1) {
                if p > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect();
    Path { labels }
}

/// Collapse of the per-frame argmax path.
pub fn greedy_decode(em: &EmissionMatrix) -> Transcript {
    let path = argmax_path(em);
    Transcript::from_symbols(&collapse_symbols(&path.labels, em.alphabet().blank_index()), em.alphabet())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Alphabet {
        Alphabet::new("ab").unwrap()
    }

    fn path(a: &Alphabet, spec: &str) -> Path {
        Path::new(
            spec.split(',')
                .map(|s| if s == "-" { a.blank_index() } else { a.index_of(s.chars().next().unwrap()).unwrap() })
                .collect(),
        )
    }

    fn one_hot(a: &Alphabet, spec: &str) -> EmissionMatrix {
        let rows = path(a, spec)
            .labels
            .iter()
            .map(|&l| {
                let mut r = vec![0.0; a.size_with_blank()];
                r[l] = 1.0;
                r
            })
            .collect();
        EmissionMatrix::new(a.clone(), rows).unwrap()
    }

    #[test]
    fn collapse_examples() {
        let a = ab();
        assert_eq!(collapse(&path(&a, "a,-,a,b,-"), &a).unwrap(), "aab");
        assert_eq!(collapse(&path(&a, "-,-,-"), &a).unwrap(), "");
        assert_eq!(collapse(&path(&a, "a,a,b,b"), &a).unwrap(), "ab");
        assert!(collapse(&Path::new(vec![0, 7]), &a).is_err());
    }

    #[test]
    fn path_probability_examples() {
        let a = Alphabet::new("a").unwrap();
        let uniform = EmissionMatrix::new(a.clone(), vec![vec![0.5, 0.5]; 2]).unwrap();
        for labels in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            let lp = path_log_probability(&Path::new(labels.to_vec()), &uniform).unwrap();
            assert!((lp - ln(0.25)).abs() < 1e-15);
        }
        let hot = one_hot(&a, "a,-,a");
        assert_eq!(path_log_probability(&path(&a, "a,-,a"), &hot).unwrap(), 0.0);
        assert_eq!(path_log_probability(&path(&a, "a,a,a"), &hot).unwrap(), LOG_ZERO);

        let em = EmissionMatrix::new(a, vec![vec![0.6, 0.4], vec![0.5, 0.5], vec![0.9, 0.1]]).unwrap();
        let lp = path_log_probability(&Path::new(vec![0, 1, 0]), &em).unwrap();
        assert!((lp - ln(0.6 * 0.5 * 0.9)).abs() < 1e-15);
        assert!(path_log_probability(&Path::new(vec![0, 1]), &em).is_err());
    }

    #[test]
    fn exact_probability_examples() {
        let a = Alphabet::new("a").unwrap();
        let em = EmissionMatrix::new(a.clone(), vec![vec![0.5, 0.5]; 2]).unwrap();
        let t = |s: &str| Transcript::new(s, &a).unwrap();
        for method in [Marginalization::Enumerate, Marginalization::Forward] {
            let pa = exact_transcript_probability(&em, &t("a"), method).unwrap();
            let pe = exact_transcript_probability(&em, &t(""), method).unwrap();
            assert!((pa - 0.75).abs() < 1e-12, "{method:?}");
            assert!((pe - 0.25).abs() < 1e-12, "{method:?}");
            let one = EmissionMatrix::new(a.clone(), vec![vec![0.3, 0.7]]).unwrap();
            assert_eq!(exact_transcript_probability(&one, &t("aa"), method).unwrap(), 0.0);
        }
        let b = ab();
        let hot = one_hot(&b, "a,-,b");
        let tab = Transcript::new("ab", &b).unwrap();
        for method in [Marginalization::Enumerate, Marginalization::Forward] {
            assert_eq!(exact_transcript_probability(&hot, &tab, method).unwrap(), 1.0);
        }
    }

    #[test]
    fn enumeration_guard() {
        let a = ab();
        let em = EmissionMatrix::new(a.clone(), vec![vec![0.2, 0.3, 0.5]; 15]).unwrap();
        let t = Transcript::new("ab", &a).unwrap();
        assert!(matches!(
            exact_transcript_probability(&em, &t, Marginalization::Enumerate),
            Err(Error::Capacity { .. })
        ));
        assert!(exact_transcript_probability(&em, &t, Marginalization::Forward).unwrap() > 0.0);
    }

    #[test]
    fn enumerated_transcripts_sum_to_one() {
        let a = Alphabet::new("a").unwrap();
        let em = EmissionMatrix::new(a, vec![vec![0.5, 0.5]; 2]).unwrap();
        let all = enumerate_transcripts(&em).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].0, "a");
        assert!((all[0].1 - 0.75).abs() < 1e-15);
        assert_eq!(all[1].0, "");
    }

    #[test]
    fn greedy_examples() {
        let a = ab();
        let em = one_hot(&a, "a,a,-,b");
        assert_eq!(greedy_decode(&em), "ab");
        assert_eq!(greedy_decode(&EmissionMatrix::empty(a)), "");
        let one = Alphabet::new("a").unwrap();
        let em = EmissionMatrix::new(one, vec![vec![0.6, 0.4], vec![0.4, 0.6]]).unwrap();
        assert_eq!(greedy_decode(&em), "a");
    }

    #[test]
    fn greedy_ties_pick_lowest_index() {
        let a = ab();
        let em = EmissionMatrix::new(a, vec![vec![0.4, 0.4, 0.2]]).unwrap();
        assert_eq!(argmax_path(&em).labels, [0]);
    }
}
