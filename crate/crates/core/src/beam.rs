//! CTC prefix beam search with language-model shallow fusion.
//!
//! Each hypothesis tracks the probability of its prefix over paths ending in
//! blank (`log_pb`) and in a visible symbol (`log_pnb`). Extending by a new
//! character multiplies in `p_LM(c|s)^alpha`. Pruning keeps the `width`
//! prefixes with the highest `log p(s) / max(1, |s|)^beta`, ties broken by
//! prefix text.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::alphabet::Alphabet;
use crate::ctc::Transcript;
use crate::emission::{validate_row, EmissionMatrix};
use crate::error::{invalid, Result};
use crate::lm::CharLm;
use crate::logspace::{ln, log_add, powf, LOG_ZERO};
use crate::prefix::{cmp_symbols_text, Prefix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamConfig {
    pub width: usize,
    /// Language-model weight.
    pub alpha: f64,
    /// Length-normalization exponent.
    pub beta: f64,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self { width: 100, alpha: 0.5, beta: 0.1 }
    }
}

impl BeamConfig {
    pub fn new(width: usize, alpha: f64, beta: f64) -> Result<Self> {
        let config = Self { width, alpha, beta };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(invalid("beam width must be at least 1"));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(invalid(format!("alpha must be finite and non-negative, got {}", self.alpha)));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(invalid(format!("beta must be finite and non-negative, got {}", self.beta)));
        }
        Ok(())
    }

    /// `log_prob / max(1, len)^beta`.
    #[inline]
    pub fn normalized(&self, log_prob: f64, len: usize) -> f64 {
        if self.beta == 0.0 || len <= 1 {
            log_prob
        } else {
            log_prob / powf(len as f64, self.beta)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Hypothesis<S> {
    pub prefix: Prefix,
    pub log_pb: f64,
    pub log_pnb: f64,
    /// Language-model state after every character of `prefix`.
    pub lm_state: S,
    /// Unweighted `Σ log p_LM` over the characters of `prefix`.
    pub lm_logprob: f64,
    /// Pruning score at the frame this hypothesis was produced.
    pub score: f64,
}

impl<S> Hypothesis<S> {
    #[inline]
    pub fn log_prob(&self) -> f64 {
        log_add(self.log_pb, self.log_pnb)
    }

    pub fn transcript(&self, alphabet: &Alphabet) -> Transcript {
        Transcript::from_symbols(&self.prefix.symbols(), alphabet)
    }
}

/// Up to `width` hypotheses with distinct prefixes, best first.
#[derive(Debug, Clone)]
pub struct Beam<S> {
    hypotheses: Vec<Hypothesis<S>>,
    frame: usize,
}

impl<S> Beam<S> {
    pub fn hypotheses(&self) -> &[Hypothesis<S>] {
        &self.hypotheses
    }

    /// Number of frames consumed.
    pub fn frame(&self) -> usize {
        self.frame
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn best(&self) -> &Hypothesis<S> {
        &self.hypotheses[0]
    }

    pub fn find(&self, prefix: &Prefix) -> Option<&Hypothesis<S>> {
        self.hypotheses.iter().find(|h| &h.prefix == prefix)
    }
}

/// The empty prefix with `p_b = 1`, `p_nb = 0`.
pub fn beam_init<L: CharLm + ?Sized>(lm: &L) -> Beam<L::State> {
    Beam {
        hypotheses: vec![Hypothesis {
            prefix: Prefix::empty(),
            log_pb: 0.0,
            log_pnb: LOG_ZERO,
            lm_state: lm.initial_state(),
            lm_logprob: 0.0,
            score: 0.0,
        }],
        frame: 0,
    }
}

struct Candidate {
    parent: usize,
    ext: Option<usize>,
    log_pb: f64,
    log_pnb: f64,
    lm_delta: f64,
    len: usize,
    score: f64,
}

const NO_MERGE: usize = usize::MAX;

/// Advances `beam` by one emission row. The input beam is left untouched.
pub fn beam_step<L: CharLm + ?Sized>(
    beam: &Beam<L::State>,
    frame: &[f64],
    config: &BeamConfig,
    lm: &L,
) -> Result<Beam<L::State>> {
    config.validate()?;
    let alphabet = lm.alphabet();
    validate_row(alphabet, frame)?;
    Ok(step_unchecked(beam, frame, config, lm))
}

pub(crate) fn step_unchecked<L: CharLm + ?Sized>(
    beam: &Beam<L::State>,
    frame: &[f64],
    config: &BeamConfig,
    lm: &L,
) -> Beam<L::State> {
    let alphabet = lm.alphabet();
    let visible = alphabet.len();
    let blank = alphabet.blank_index();
    let log_frame: Vec<f64> = frame.iter().map(|&p| ln(p)).collect();
    let prev = &beam.hypotheses;

    let mut cands: Vec<Candidate> = Vec::with_capacity(prev.len() * (visible + 1));

    // blank and repeat transitions keep the prefix
    for (i, h) in prev.iter().enumerate() {
        let log_pb = log_frame[blank] + h.log_prob();
        let log_pnb = match h.prefix.last() {
            Some(last) => log_frame[last] + h.log_pnb,
            None => LOG_ZERO,
        };
        cands.push(Candidate {
            parent: i,
            ext: None,
            log_pb,
            log_pnb,
            lm_delta: 0.0,
            len: h.prefix.len(),
            score: 0.0,
        });
    }

    // s + c may already be a hypothesis of the beam; route its mass there
    let mut merge = vec![NO_MERGE; prev.len() * visible];
    let mut by_hash: Vec<(u64, usize)> =
        prev.iter().enumerate().map(|(i, h)| (h.prefix.content_hash(), i)).collect();
    by_hash.sort_unstable();
    for (j, h) in prev.iter().enumerate() {
        let (Some(parent), Some(last)) = (h.prefix.parent(), h.prefix.last()) else {
            continue;
        };
        let key = parent.content_hash();
        let start = by_hash.partition_point(|&(hash, _)| hash < key);
        for &(hash, i) in &by_hash[start..] {
            if hash != key {
                break;
            }
            if &prev[i].prefix == parent {
                merge[i * visible + last] = j;
                break;
            }
        }
    }

    let mut lm_buf = vec![0.0; visible + 1];
    for (i, h) in prev.iter().enumerate() {
        lm.fill_log_probs(&h.lm_state, &mut lm_buf);
        let total = h.log_prob();
        let last = h.prefix.last();
        for c in 0..visible {
            if log_frame[c] == LOG_ZERO {
                continue;
            }
            // a repeated character needs a blank in between
            let base = if last == Some(c) { h.log_pb } else { total };
            if base == LOG_ZERO {
                continue;
            }
            let fused = if config.alpha == 0.0 { 0.0 } else { config.alpha * lm_buf[c] };
            let p_c = log_frame[c] + base + fused;
            let j = merge[i * visible + c];
            if j != NO_MERGE {
                cands[j].log_pnb = log_add(cands[j].log_pnb, p_c);
            } else {
                cands.push(Candidate {
                    parent: i,
                    ext: Some(c),
                    log_pb: LOG_ZERO,
                    log_pnb: p_c,
                    lm_delta: lm_buf[c],
                    len: h.prefix.len() + 1,
                    score: 0.0,
                });
            }
        }
    }

    cands.retain(|c| log_add(c.log_pb, c.log_pnb) != LOG_ZERO);
    for c in &mut cands {
        c.score = config.normalized(log_add(c.log_pb, c.log_pnb), c.len);
    }

    let text = |c: &Candidate| -> Vec<usize> {
        let mut s = prev[c.parent].prefix.symbols();
        s.extend(c.ext);
        s
    };
    let order = |a: &Candidate, b: &Candidate| -> Ordering {
        b.score
            .total_cmp(&a.score)
            .then_with(|| cmp_symbols_text(&text(a), &text(b), alphabet))
    };
    if cands.len() > config.width {
        cands.select_nth_unstable_by(config.width - 1, order);
        cands.truncate(config.width);
    }
    cands.sort_unstable_by(order);

    let hypotheses = cands
        .into_iter()
        .map(|c| {
            let parent = &prev[c.parent];
            match c.ext {
                None => Hypothesis {
                    prefix: parent.prefix.clone(),
                    log_pb: c.log_pb,
                    log_pnb: c.log_pnb,
                    lm_state: parent.lm_state.clone(),
                    lm_logprob: parent.lm_logprob,
                    score: c.score,
                },
                Some(sym) => Hypothesis {
                    prefix: parent.prefix.push(sym),
                    log_pb: c.log_pb,
                    log_pnb: c.log_pnb,
                    lm_state: lm.advance(&parent.lm_state, sym),
                    lm_logprob: parent.lm_logprob + c.lm_delta,
                    score: c.score,
                },
            }
        })
        .collect();
    Beam { hypotheses, frame: beam.frame + 1 }
}

pub(crate) fn check_lm_alphabet<L: CharLm + ?Sized>(em_alphabet: &Alphabet, lm: &L) -> Result<()> {
    if em_alphabet.symbols() != lm.alphabet().symbols() {
        return Err(invalid(format!(
            "language model alphabet {:?} does not match emission alphabet {:?}",
            lm.alphabet().visible_string(),
            em_alphabet.visible_string()
        )));
    }
    Ok(())
}

/// Runs the search over every frame and returns the final beam.
pub fn beam_search<L: CharLm + ?Sized>(
    em: &EmissionMatrix,
    config: &BeamConfig,
    lm: &L,
) -> Result<Beam<L::State>> {
    config.validate()?;
    check_lm_alphabet(em.alphabet(), lm)?;
    let mut beam = beam_init(lm);
    for row in em.rows() {
        beam = step_unchecked(&beam, row, config, lm);
    }
    Ok(beam)
}

/// Best transcript and its normalized score. An empty matrix gives `("", 0)`.
pub fn beam_decode<L: CharLm + ?Sized>(
    em: &EmissionMatrix,
    config: &BeamConfig,
    lm: &L,
) -> Result<(Transcript, f64)> {
    let beam = beam_search(em, config, lm)?;
    let best = beam.best();
    Ok((best.transcript(em.alphabet()), best.score))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::{NgramLm, UniformLm};
    use crate::logspace::exp;

    fn one_a() -> Alphabet {
        Alphabet::new("a").unwrap()
    }

    #[test]
    fn init_is_empty_prefix() {
        let lm = UniformLm::new(one_a());
        let b = beam_init(&lm);
        assert_eq!(b.len(), 1);
        let h = b.best();
        assert!(h.prefix.is_empty());
        assert_eq!(h.log_pb, 0.0);
        assert_eq!(h.log_pnb, LOG_ZERO);
        assert_eq!(h.score, 0.0);
        assert_eq!(BeamConfig::default().normalized(h.log_prob(), 0), 0.0);
    }

    #[test]
    fn single_step_expansion() {
        let lm = UniformLm::new(one_a());
        let cfg = BeamConfig::new(2, 0.0, 0.0).unwrap();
        let b = beam_step(&beam_init(&lm), &[0.4, 0.6], &cfg, &lm).unwrap();
        assert_eq!(b.len(), 2);
        let empty = b.find(&Prefix::empty()).unwrap();
        assert!((exp(empty.log_pb) - 0.6).abs() < 1e-15);
        assert_eq!(empty.log_pnb, LOG_ZERO);
        let a = b.find(&Prefix::from_symbols(&[0])).unwrap();
        assert!((exp(a.log_pnb) - 0.4).abs() < 1e-15);
        assert_eq!(a.log_pb, LOG_ZERO);
        // best first
        assert!(b.best().prefix.is_empty());
    }

    #[test]
    fn blank_only_frame_moves_mass_to_pb() {
        let lm = UniformLm::new(Alphabet::new("ab").unwrap());
        let cfg = BeamConfig::new(10, 0.0, 0.0).unwrap();
        let b1 = beam_step(&beam_init(&lm), &[0.3, 0.5, 0.2], &cfg, &lm).unwrap();
        let b2 = beam_step(&b1, &[0.0, 0.0, 1.0], &cfg, &lm).unwrap();
        assert_eq!(b1.len(), b2.len());
        for h in b1.hypotheses() {
            let g = b2.find(&h.prefix).unwrap();
            assert_eq!(g.log_pnb, LOG_ZERO);
            assert!((g.log_pb - h.log_prob()).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_two_frames() {
        let lm = UniformLm::new(one_a());
        let em = EmissionMatrix::new(one_a(), vec![vec![0.5, 0.5]; 2]).unwrap();
        let cfg = BeamConfig::new(4, 0.0, 0.0).unwrap();
        let (t, score) = beam_decode(&em, &cfg, &lm).unwrap();
        assert_eq!(t, "a");
        assert!((exp(score) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn repeat_rule() {
        let al = Alphabet::new("hia").unwrap();
        let lm = UniformLm::new(al.clone());
        let hot = |syms: &[usize]| {
            let rows = syms
                .iter()
                .map(|&s| {
                    let mut r = vec![0.0; 4];
                    r[s] = 1.0;
                    r
                })
                .collect();
            EmissionMatrix::new(al.clone(), rows).unwrap()
        };
        let cfg = BeamConfig::new(8, 0.0, 0.0).unwrap();
        assert_eq!(beam_decode(&hot(&[0, 3, 1]), &cfg, &lm).unwrap().0, "hi");
        assert_eq!(beam_decode(&hot(&[2, 2]), &cfg, &lm).unwrap().0, "a");
        assert_eq!(beam_decode(&hot(&[2, 3, 2]), &cfg, &lm).unwrap().0, "aa");
    }

    #[test]
    fn empty_matrix() {
        let lm = UniformLm::new(one_a());
        let (t, s) = beam_decode(&EmissionMatrix::empty(one_a()), &BeamConfig::default(), &lm).unwrap();
        assert_eq!(t, "");
        assert_eq!(s, 0.0);
    }

    #[test]
    fn alpha_zero_ignores_the_lm() {
        let al = Alphabet::new("ab").unwrap();
        let em = EmissionMatrix::new(
            al.clone(),
            vec![vec![0.3, 0.3, 0.4], vec![0.5, 0.1, 0.4], vec![0.2, 0.5, 0.3]],
        )
        .unwrap();
        let cfg = BeamConfig::new(3, 0.0, 0.1).unwrap();
        let uni = beam_search(&em, &cfg, &UniformLm::new(al.clone())).unwrap();
        let ngram = NgramLm::train("bbb\naab", al, 2, 1.0).unwrap();
        let ng = beam_search(&em, &cfg, &ngram).unwrap();
        assert_eq!(uni.len(), ng.len());
        for (x, y) in uni.hypotheses().iter().zip(ng.hypotheses()) {
            assert_eq!(x.prefix, y.prefix);
            assert_eq!(x.log_pb.to_bits(), y.log_pb.to_bits());
            assert_eq!(x.log_pnb.to_bits(), y.log_pnb.to_bits());
        }
    }

    #[test]
    fn validation_errors() {
        let lm = UniformLm::new(one_a());
        let cfg = BeamConfig::default();
        assert!(beam_step(&beam_init(&lm), &[1.0], &cfg, &lm).is_err());
        assert!(BeamConfig::new(0, 0.0, 0.0).is_err());
        assert!(BeamConfig::new(1, -1.0, 0.0).is_err());
        let other = UniformLm::new(Alphabet::new("b").unwrap());
        let em = EmissionMatrix::new(one_a(), vec![vec![0.5, 0.5]]).unwrap();
        assert!(beam_decode(&em, &cfg, &other).is_err());
    }

    #[test]
    fn lm_state_tracks_prefix() {
        let al = Alphabet::new("ab").unwrap();
        let lm = NgramLm::train("abab\nba", al.clone(), 3, 1.0).unwrap();
        let em = EmissionMatrix::new(
            al.clone(),
            vec![vec![0.3, 0.3, 0.4], vec![0.5, 0.1, 0.4], vec![0.2, 0.5, 0.3], vec![0.4, 0.4, 0.2]],
        )
        .unwrap();
        let beam = beam_search(&em, &BeamConfig::new(5, 0.7, 0.0).unwrap(), &lm).unwrap();
        for h in beam.hypotheses() {
            let text = h.transcript(&al);
            let state = lm.state_for(text.as_str()).unwrap();
            assert_eq!(state, h.lm_state);
            let mut s = lm.initial_state();
            let mut total = 0.0;
            for sym in h.prefix.symbols() {
                total += lm.log_prob(&s, sym);
                s = lm.advance(&s, sym);
            }
            assert!((total - h.lm_logprob).abs() < 1e-12);
        }
    }
}
