//! Lag-committed streaming decoding with lookahead hypotheses.
//!
//! A stream with lag `r` commits frame `t` only once frame `t + r` has
//! arrived. After every push the committed beam is copied and stepped over the
//! buffered frames as if the utterance ended there, giving a live hypothesis.
//! Once all frames are committed the result is identical to offline decoding.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::alphabet::Alphabet;
use crate::beam::{beam_init, check_lm_alphabet, step_unchecked, Beam, BeamConfig};
use crate::ctc::Transcript;
use crate::emission::validate_row;
use crate::error::{invalid, Error, Result};
use crate::lm::CharLm;
use crate::metrics::edit_distance;

/// Default budget for LM word completion, in characters.
pub const DEFAULT_COMPLETION_CHARS: usize = 16;

/// Filter widths of a stack of temporal convolutions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReceptiveFieldSpec {
    pub layer_filter_widths: Vec<usize>,
}

impl ReceptiveFieldSpec {
    pub fn new(layer_filter_widths: Vec<usize>) -> Self {
        Self { layer_filter_widths }
    }

    /// `layers` identical layers of width `width`.
    pub fn uniform(layers: usize, width: usize) -> Self {
        Self { layer_filter_widths: vec![width; layers] }
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut layer_filter_widths = self.layer_filter_widths.clone();
        layer_filter_widths.extend_from_slice(&other.layer_filter_widths);
        Self { layer_filter_widths }
    }
}

/// Total span `R` and future half-span `r` of a convolution stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReceptiveField {
    pub total: usize,
    pub future: usize,
}

/// Each width-`K` layer adds `(K-1)/2` future frames; `R = 2r + 1`.
pub fn receptive_field(spec: &ReceptiveFieldSpec) -> Result<ReceptiveField> {
    let mut future = 0usize;
    for (i, &k) in spec.layer_filter_widths.iter().enumerate() {
        if k == 0 || k % 2 == 0 {
            return Err(invalid(format!("layer {i} has filter width {k}; widths must be odd and positive")));
        }
        future += (k - 1) / 2;
    }
    Ok(ReceptiveField { total: 2 * future + 1, future })
}

/// What a stream displays after one push.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementalOutput {
    /// 1-based index of the frame just pushed.
    pub frame_index: usize,
    pub committed_best: Transcript,
    /// Best hypothesis after stepping over the buffered frames.
    pub lookahead_best: Transcript,
    /// Normalized score of `lookahead_best`.
    pub score: f64,
    /// Characters an LM rollout appends to finish the current word.
    pub lm_completion: String,
}

/// Greedy argmax rollout from `prefix` until a space, eos or `max_chars`.
/// Returns only the appended characters. A prefix ending in a space is
/// already a complete word.
pub fn lm_complete_word<L: CharLm + ?Sized>(prefix: &str, lm: &L, max_chars: usize) -> Result<String> {
    if max_chars == 0 || prefix.ends_with(' ') {
        return Ok(String::new());
    }
    let state = lm.state_for(prefix)?;
    Ok(complete_from(lm, &state, max_chars))
}

fn complete_from<L: CharLm + ?Sized>(lm: &L, state: &L::State, max_chars: usize) -> String {
    let alphabet = lm.alphabet();
    let eos = lm.eos();
    let mut buf = vec![0.0; eos + 1];
    let mut state = state.clone();
    let mut out = String::new();
    for _ in 0..max_chars {
        lm.fill_log_probs(&state, &mut buf);
        let mut best = 0;
        for (i, &lp) in buf.iter().enumerate().skip(1) {
            if lp > buf[best] {
                best = i;
            }
        }
        if best == eos {
            break;
        }
        let c = alphabet.char_at(best).expect("visible token");
        out.push(c);
        if c == ' ' {
            break;
        }
        state = lm.advance(&state, best);
    }
    out
}

/// Streaming decoder state for one utterance.
#[derive(Debug, Clone)]
pub struct StreamDecoder<'lm, L: CharLm + ?Sized> {
    lm: &'lm L,
    config: BeamConfig,
    lag: usize,
    completion_chars: usize,
    committed: Beam<L::State>,
    buffer: VecDeque<Vec<f64>>,
    frames_seen: usize,
    last_push_steps: usize,
}

impl<'lm, L: CharLm + ?Sized> StreamDecoder<'lm, L> {
    pub fn new(lm: &'lm L, config: BeamConfig, lag: usize) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            lm,
            config,
            lag,
            completion_chars: DEFAULT_COMPLETION_CHARS,
            committed: beam_init(lm),
            buffer: VecDeque::with_capacity(lag + 1),
            frames_seen: 0,
            last_push_steps: 0,
        })
    }

    /// Sets the LM completion budget; 0 disables completion.
    pub fn with_completion_chars(mut self, max_chars: usize) -> Self {
        self.completion_chars = max_chars;
        self
    }

    /// Rejects an emission alphabet that differs from the LM's.
    pub fn check_alphabet(&self, alphabet: &Alphabet) -> Result<()> {
        check_lm_alphabet(alphabet, self.lm)
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn frames_seen(&self) -> usize {
        self.frames_seen
    }

    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }

    pub fn committed_beam(&self) -> &Beam<L::State> {
        &self.committed
    }

    /// Beam steps run by the most recent push.
    pub fn last_push_steps(&self) -> usize {
        self.last_push_steps
    }

    pub fn push(&mut self, frame: &[f64]) -> Result<IncrementalOutput> {
        validate_row(self.lm.alphabet(), frame)?;
        self.frames_seen += 1;
        self.buffer.push_back(frame.to_vec());
        let mut steps = 0;
        if self.buffer.len() > self.lag {
            let row = self.buffer.pop_front().expect("non-empty buffer");
            self.committed = step_unchecked(&self.committed, &row, &self.config, self.lm);
            steps += 1;
        }
        let mut lookahead = self.committed.clone();
        for row in &self.buffer {
            lookahead = step_unchecked(&lookahead, row, &self.config, self.lm);
            steps += 1;
        }
        self.last_push_steps = steps;

        let alphabet = self.lm.alphabet();
        let best = lookahead.best();
        let lookahead_best = best.transcript(alphabet);
        let lm_completion = if self.completion_chars == 0 || lookahead_best.as_str().ends_with(' ') {
            String::new()
        } else {
            complete_from(self.lm, &best.lm_state, self.completion_chars)
        };
        Ok(IncrementalOutput {
            frame_index: self.frames_seen,
            committed_best: self.committed.best().transcript(alphabet),
            score: best.score,
            lookahead_best,
            lm_completion,
        })
    }

    /// Commits every buffered frame and returns the final transcript with its
    /// normalized score.
    pub fn flush(&mut self) -> (Transcript, f64) {
        while let Some(row) = self.buffer.pop_front() {
            self.committed = step_unchecked(&self.committed, &row, &self.config, self.lm);
        }
        let best = self.committed.best();
        (best.transcript(self.lm.alphabet()), best.score)
    }
}

/// Mean edit distance between successive displayed hypotheses, starting
/// from an empty display. Completions are ignored.
pub fn changes_per_frame(outputs: &[IncrementalOutput]) -> Result<f64> {
    if outputs.is_empty() {
        return Err(Error::Empty("no streaming outputs".into()));
    }
    let mut prev: Vec<char> = Vec::new();
    let mut total = 0usize;
    for out in outputs {
        let cur: Vec<char> = out.lookahead_best.as_str().chars().collect();
        total += edit_distance(&prev, &cur).distance;
        prev = cur;
    }
    Ok(total as f64 / outputs.len() as f64)
}
