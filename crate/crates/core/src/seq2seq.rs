//! Left-to-right beam search over an autoregressive character model with
//! shallow fusion and length normalization:
//!
//! `score(y) = (log p(y|x) + alpha * log p_LM(y)) / ((5 + |y|) / 6)^beta`
//!
//! `|y|` counts visible characters; both models score the final eos.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::alphabet::Alphabet;
use crate::ctc::Transcript;
use crate::error::{invalid, Result};
use crate::lm::CharLm;
use crate::logspace::{ln, powf, LOG_ZERO};
use crate::prefix::cmp_symbols_text;

/// Tolerance on the sum of a mock-scorer distribution.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

/// Next-character distribution of a conditional sequence model.
pub trait AutoregressiveScorer {
    fn alphabet(&self) -> &Alphabet;

    /// Writes `log p(token | prefix)` for every visible token and eos (last)
    /// into `out`, which holds `alphabet().len() + 1` values.
    fn next_log_probs(&self, prefix: &[usize], out: &mut [f64]);
}

/// Table-driven scorer: listed prefixes map to explicit distributions,
/// anything else is uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct MockScorer {
    alphabet: Alphabet,
    table: BTreeMap<Vec<usize>, Vec<f64>>,
}

impl MockScorer {
    pub fn new(alphabet: Alphabet) -> Self {
        Self { alphabet, table: BTreeMap::new() }
    }

    /// Sets the distribution (visible tokens then eos) after `prefix`.
    pub fn set(&mut self, prefix: Vec<usize>, probs: Vec<f64>) -> Result<()> {
        let vocab = self.alphabet.len() + 1;
        if probs.len() != vocab {
            return Err(invalid(format!("distribution has {} entries, expected {vocab}", probs.len())));
        }
        if prefix.iter().any(|&t| t >= self.alphabet.len()) {
            return Err(invalid("prefix token out of range"));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(invalid("probabilities must lie in [0, 1]"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(invalid(format!("distribution after {prefix:?} sums to {sum}")));
        }
        self.table.insert(prefix, probs);
        Ok(())
    }

    pub fn get(&self, prefix: &[usize]) -> Option<&[f64]> {
        self.table.get(prefix).map(Vec::as_slice)
    }

    /// Listed prefixes in sorted order with their distributions.
    pub fn entries(&self) -> impl Iterator<Item = (&[usize], &[f64])> + '_ {
        self.table.iter().map(|(k, v)| (k.as_slice(), v.as_slice()))
    }
}

impl AutoregressiveScorer for MockScorer {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn next_log_probs(&self, prefix: &[usize], out: &mut [f64]) {
        match self.table.get(prefix) {
            Some(probs) => {
                for (o, &p) in out.iter_mut().zip(probs) {
                    *o = ln(p);
                }
            }
            None => out.fill(-ln((self.alphabet.len() + 1) as f64)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct S2SConfig {
    pub width: usize,
    pub alpha: f64,
    pub beta: f64,
    pub max_length: usize,
}

impl S2SConfig {
    /// Tuned values for decoding without an external LM.
    pub const NO_LM: Self = Self { width: 5, alpha: 0.0, beta: 0.6, max_length: 100 };
    /// Tuned values for decoding with an external LM.
    pub const WITH_LM: Self = Self { width: 15, alpha: 0.1, beta: 0.7, max_length: 100 };

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(invalid("beam width must be at least 1"));
        }
        if self.max_length == 0 {
            return Err(invalid("max_length must be at least 1"));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0 && self.beta.is_finite() && self.beta >= 0.0) {
            return Err(invalid("alpha and beta must be finite and non-negative"));
        }
        Ok(())
    }
}

impl Default for S2SConfig {
    fn default() -> Self {
        Self::WITH_LM
    }
}

/// `((5 + len) / 6)^beta`.
pub fn length_penalty(len: usize, beta: f64) -> f64 {
    powf((5.0 + len as f64) / 6.0, beta)
}

/// Fused, length-normalized hypothesis score.
pub fn s2s_score(log_p: f64, lm_log_p: f64, len: usize, alpha: f64, beta: f64) -> f64 {
    let fused = if alpha == 0.0 { log_p } else { log_p + alpha * lm_log_p };
    fused / length_penalty(len, beta)
}

struct Hyp<S> {
    symbols: Vec<usize>,
    log_p: f64,
    lm_state: S,
    lm_log_p: f64,
}

struct Cand {
    parent: usize,
    token: usize,
    finished: bool,
    log_p: f64,
    lm_log_p: f64,
    score: f64,
}

/// Beam search until every surviving hypothesis has emitted eos. Hypotheses
/// of `max_length` characters may only emit eos. Returns the best finished
/// hypothesis and its score.
pub fn s2s_decode<M, L>(scorer: &M, lm: &L, config: &S2SConfig) -> Result<(Transcript, f64)>
where
    M: AutoregressiveScorer + ?Sized,
    L: CharLm + ?Sized,
{
    config.validate()?;
    let alphabet = scorer.alphabet();
    if alphabet.symbols() != lm.alphabet().symbols() {
        return Err(invalid("scorer and language model alphabets differ"));
    }
    let eos = alphabet.len();
    let mut model_buf = vec![0.0; eos + 1];
    let mut lm_buf = vec![0.0; eos + 1];

    let mut active = vec![Hyp { symbols: Vec::new(), log_p: 0.0, lm_state: lm.initial_state(), lm_log_p: 0.0 }];
    let mut finished: Vec<(Vec<usize>, f64)> = Vec::new();

    while !active.is_empty() {
        let mut cands = Vec::with_capacity(active.len() * (eos + 1));
        for (i, h) in active.iter().enumerate() {
            scorer.next_log_probs(&h.symbols, &mut model_buf);
            lm.fill_log_probs(&h.lm_state, &mut lm_buf);
            let last_token = if h.symbols.len() < config.max_length { eos } else { 0 };
            for token in (0..=eos).filter(|&t| t == eos || t < last_token) {
                let log_p = h.log_p + model_buf[token];
                if log_p == LOG_ZERO {
                    continue;
                }
                let lm_log_p = h.lm_log_p + lm_buf[token];
                let len = h.symbols.len() + usize::from(token != eos);
                cands.push(Cand {
                    parent: i,
                    token,
                    finished: token == eos,
                    log_p,
                    lm_log_p,
                    score: s2s_score(log_p, lm_log_p, len, config.alpha, config.beta),
                });
            }
        }
        let text = |c: &Cand| -> Vec<usize> {
            let mut s = active[c.parent].symbols.clone();
            if !c.finished {
                s.push(c.token);
            }
            s
        };
        let order = |a: &Cand, b: &Cand| -> Ordering {
            b.score
                .total_cmp(&a.score)
                .then_with(|| cmp_symbols_text(&text(a), &text(b), alphabet))
                .then_with(|| b.finished.cmp(&a.finished))
        };
        if cands.len() > config.width {
            cands.select_nth_unstable_by(config.width - 1, order);
            cands.truncate(config.width);
        }
        cands.sort_unstable_by(order);

        let mut next = Vec::with_capacity(cands.len());
        for c in cands {
            let parent = &active[c.parent];
            if c.finished {
                finished.push((parent.symbols.clone(), c.score));
            } else {
                let mut symbols = parent.symbols.clone();
                symbols.push(c.token);
                next.push(Hyp {
                    symbols,
                    log_p: c.log_p,
                    lm_state: lm.advance(&parent.lm_state, c.token),
                    lm_log_p: c.lm_log_p,
                });
            }
        }
        active = next;
    }

    finished
        .into_iter()
        .min_by(|a, b| b.1.total_cmp(&a.1).then_with(|| cmp_symbols_text(&a.0, &b.0, alphabet)))
        .map(|(symbols, score)| (Transcript::from_symbols(&symbols, alphabet), score))
        .ok_or_else(|| invalid("no hypothesis reached end of sentence"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::UniformLm;

    #[test]
    fn length_penalty_values() {
        for beta in [0.0, 0.6, 0.7] {
            assert_eq!(length_penalty(1, beta), 1.0);
        }
        assert!((length_penalty(7, 0.7) - powf(2.0, 0.7)).abs() < 1e-12);
        assert!((length_penalty(7, 0.7) - 1.6245).abs() < 1e-4);
        assert_eq!(length_penalty(40, 0.0), 1.0);
    }

    #[test]
    fn longer_wins_with_equal_log_prob() {
        let short = s2s_score(-2.0, 0.0, 1, 0.0, 0.7);
        let long = s2s_score(-2.0, 0.0, 7, 0.0, 0.7);
        assert_eq!(short, -2.0);
        assert!(long > short);
    }

    fn certain(al: &Alphabet, text: &str) -> MockScorer {
        let mut m = MockScorer::new(al.clone());
        let syms = al.encode(text).unwrap();
        let vocab = al.len() + 1;
        for i in 0..=syms.len() {
            let mut p = vec![0.0; vocab];
            p[if i < syms.len() { syms[i] } else { al.len() }] = 1.0;
            m.set(syms[..i].to_vec(), p).unwrap();
        }
        m
    }

    #[test]
    fn certain_scorer() {
        let al = Alphabet::new("hi").unwrap();
        let m = certain(&al, "hi");
        let lm = UniformLm::new(al);
        let (t, score) = s2s_decode(&m, &lm, &S2SConfig::WITH_LM).unwrap();
        assert_eq!(t, "hi");
        assert!(score < 0.0); // the uniform LM still contributes
        let (t, score) = s2s_decode(&m, &lm, &S2SConfig::NO_LM).unwrap();
        assert_eq!(t, "hi");
        assert_eq!(score, 0.0);
    }

    #[test]
    fn length_normalization_prefers_longer() {
        // "a" + eos has log p = -2, "aaaaaaa" + eos is marginally less likely
        let al = Alphabet::new("ab").unwrap();
        let mut m = MockScorer::new(al.clone());
        let e2 = libm::exp(-2.0);
        m.set(vec![], vec![1.0, 0.0, 0.0]).unwrap();
        m.set(vec![0], vec![1.0 - e2, 0.0, e2]).unwrap();
        let mut acc = 1.0 - e2;
        for len in 2..7 {
            m.set(vec![0; len], vec![1.0, 0.0, 0.0]).unwrap();
        }
        // after 7 a's, eos with slightly less than the mass for a total of e^-2
        let need = 0.999 * e2 / acc;
        m.set(vec![0; 7], vec![0.0, 1.0 - need, need]).unwrap();
        acc *= need;
        assert!(acc < e2 && acc > 0.99 * e2);
        let lm = UniformLm::new(al);
        let cfg = S2SConfig { width: 4, alpha: 0.0, beta: 0.7, max_length: 7 };
        assert_eq!(s2s_decode(&m, &lm, &cfg).unwrap().0, "aaaaaaa");
        let cfg = S2SConfig { beta: 0.0, ..cfg };
        assert_eq!(s2s_decode(&m, &lm, &cfg).unwrap().0, "a");
    }

    #[test]
    fn mock_scorer_validation() {
        let mut m = MockScorer::new(Alphabet::new("ab").unwrap());
        assert!(m.set(vec![], vec![0.5, 0.5]).is_err());
        assert!(m.set(vec![], vec![0.5, 0.4, 0.2]).is_err());
        assert!(m.set(vec![5], vec![0.5, 0.5, 0.0]).is_err());
        assert!(m.set(vec![1], vec![0.5, 0.5, 0.0]).is_ok());
        let mut out = [0.0; 3];
        m.next_log_probs(&[0, 0], &mut out);
        assert!(out.iter().all(|&x| (x + ln(3.0)).abs() < 1e-15));
    }

    #[test]
    fn config_validation() {
        let lm = UniformLm::new(Alphabet::new("a").unwrap());
        let m = MockScorer::new(Alphabet::new("a").unwrap());
        let bad = S2SConfig { max_length: 0, ..S2SConfig::NO_LM };
        assert!(s2s_decode(&m, &lm, &bad).is_err());
        let other = UniformLm::new(Alphabet::new("b").unwrap());
        assert!(s2s_decode(&m, &other, &S2SConfig::NO_LM).is_err());
    }
}
