//! Character language models with incremental state.
//!
//! Token indices follow the alphabet: visible characters are `0..len()`, and
//! end-of-sentence is `len()`. There is no blank in a language model.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;

use crate::alphabet::Alphabet;
use crate::error::{invalid, Error, Result};
use crate::logspace::ln;

/// Default add-k smoothing constant.
pub const DEFAULT_SMOOTHING: f64 = 1.0;

/// A character-level language model scored one token at a time.
pub trait CharLm {
    /// Incremental context. Cloning gives an independent state with identical
    /// future scores.
    type State: Clone + Debug;

    fn alphabet(&self) -> &Alphabet;

    fn initial_state(&self) -> Self::State;

    /// Writes `log p(token | state)` for every visible token and eos into
    /// `out`, which must hold `alphabet().len() + 1` values.
    fn fill_log_probs(&self, state: &Self::State, out: &mut [f64]);

    /// State after appending a visible token. Eos leaves the state unchanged.
    fn advance(&self, state: &Self::State, token: usize) -> Self::State;

    fn eos(&self) -> usize {
        self.alphabet().len()
    }

    fn vocab_size(&self) -> usize {
        self.alphabet().len() + 1
    }

    fn log_prob(&self, state: &Self::State, token: usize) -> f64 {
        let mut buf = vec![0.0; self.vocab_size()];
        self.fill_log_probs(state, &mut buf);
        buf[token]
    }

    /// Scores `token` after `state` and returns the successor state.
    fn score_token(&self, state: &Self::State, token: usize) -> Result<(f64, Self::State)> {
        if token > self.eos() {
            return Err(invalid(format!("token {token} out of range for the language model")));
        }
        Ok((self.log_prob(state, token), self.advance(state, token)))
    }

    /// Character-level convenience over [`CharLm::score_token`]; `None` scores eos.
    fn score_and_advance(&self, state: &Self::State, c: Option<char>) -> Result<(f64, Self::State)> {
        let token = match c {
            None => self.eos(),
            Some(c) => self
                .alphabet()
                .index_of(c)
                .ok_or_else(|| invalid(format!("character {c:?} is not in the language model alphabet")))?,
        };
        self.score_token(state, token)
    }

    /// State after feeding every character of `text`.
    fn state_for(&self, text: &str) -> Result<Self::State> {
        let mut state = self.initial_state();
        for token in self.alphabet().encode(text)? {
            state = self.advance(&state, token);
        }
        Ok(state)
    }
}

/// Every token, eos included, has probability `1/(|A|+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformLm {
    alphabet: Alphabet,
}

impl UniformLm {
    pub fn new(alphabet: Alphabet) -> Self {
        Self { alphabet }
    }
}

impl CharLm for UniformLm {
    type State = ();

    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn initial_state(&self) {}

    fn fill_log_probs(&self, _state: &(), out: &mut [f64]) {
        let lp = -ln(self.vocab_size() as f64);
        out.fill(lp);
    }

    fn advance(&self, _state: &(), _token: usize) {}
}

#[derive(Debug, Clone, PartialEq)]
struct ContextStats {
    counts: Vec<u64>,
    total: u64,
    log_probs: Vec<f64>,
}

/// Add-k smoothed character n-gram model.
///
/// Counts are kept for every context shorter than `order`. Scoring uses the
/// longest context seen in training and backs off to a shorter one only when
/// the context was never observed.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramLm {
    alphabet: Alphabet,
    order: usize,
    smoothing: f64,
    contexts: BTreeMap<Vec<usize>, ContextStats>,
}

/// The last `order - 1` tokens of the prefix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NgramState {
    context: Vec<usize>,
}

impl NgramState {
    pub fn context(&self) -> &[usize] {
        &self.context
    }
}

/// Lowercases, maps whitespace to single spaces and drops characters
/// outside `alphabet`. Leading and trailing spaces are trimmed.
pub fn normalize_line(line: &str, alphabet: &Alphabet) -> String {
    let mut out = String::with_capacity(line.len());
    for c in line.chars().flat_map(char::to_lowercase) {
        let c = if c.is_whitespace() { ' ' } else { c };
        if !alphabet.contains(c) {
            continue;
        }
        if c == ' ' && (out.is_empty() || out.ends_with(' ')) {
            continue;
        }
        out.push(c);
    }
    while out.ends_with(' ') {
        out.pop();
    }
    out
}

impl NgramLm {
    /// Trains on a corpus with one sentence per line; each line ends with an
    /// implicit eos.
    pub fn train(corpus: &str, alphabet: Alphabet, order: usize, smoothing: f64) -> Result<Self> {
        check_params(order, smoothing)?;
        let eos = alphabet.len();
        let mut counts: BTreeMap<Vec<usize>, Vec<u64>> = BTreeMap::new();
        let mut lines = 0usize;
        for line in corpus.lines() {
            let norm = normalize_line(line, &alphabet);
            if norm.is_empty() {
                continue;
            }
            lines += 1;
            let mut tokens = alphabet.encode(&norm)?;
            tokens.push(eos);
            for i in 0..tokens.len() {
                for h in 0..=i.min(order - 1) {
                    let ctx = &tokens[i - h..i];
                    let row = counts.entry(ctx.to_vec()).or_insert_with(|| vec![0; eos + 1]);
                    row[tokens[i]] += 1;
                }
            }
        }
        if lines == 0 {
            return Err(Error::Empty("corpus has no usable lines after normalization".into()));
        }
        Ok(Self::build(alphabet, order, smoothing, counts))
    }

    /// Rebuilds a model from `(context, token, count)` entries, as produced
    /// by [`NgramLm::entries`].
    pub fn from_counts(
        alphabet: Alphabet,
        order: usize,
        smoothing: f64,
        entries: impl IntoIterator<Item = (Vec<usize>, usize, u64)>,
    ) -> Result<Self> {
        check_params(order, smoothing)?;
        let eos = alphabet.len();
        let mut counts: BTreeMap<Vec<usize>, Vec<u64>> = BTreeMap::new();
        for (ctx, token, count) in entries {
            if ctx.len() >= order {
                return Err(invalid(format!("context of length {} exceeds order {order}", ctx.len())));
            }
            if ctx.iter().any(|&t| t >= eos) || token > eos {
                return Err(invalid("token out of range for the alphabet"));
            }
            if count == 0 {
                return Err(invalid("n-gram counts must be positive"));
            }
            let row = counts.entry(ctx).or_insert_with(|| vec![0; eos + 1]);
            if row[token] != 0 {
                return Err(invalid("duplicate n-gram entry"));
            }
            row[token] = count;
        }
        if !counts.contains_key(&[][..]) {
            return Err(Error::Empty("model has no unigram counts".into()));
        }
        Ok(Self::build(alphabet, order, smoothing, counts))
    }

    fn build(alphabet: Alphabet, order: usize, smoothing: f64, counts: BTreeMap<Vec<usize>, Vec<u64>>) -> Self {
        let vocab = (alphabet.len() + 1) as f64;
        let contexts = counts
            .into_iter()
            .map(|(ctx, counts)| {
                let total: u64 = counts.iter().sum();
                let denom = total as f64 + smoothing * vocab;
                let log_probs = counts.iter().map(|&c| ln((c as f64 + smoothing) / denom)).collect();
                (ctx, ContextStats { counts, total, log_probs })
            })
            .collect();
        Self { alphabet, order, smoothing, contexts }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// Raw count of `token` after `context`, zero when unseen.
    pub fn count(&self, context: &[usize], token: usize) -> u64 {
        self.contexts.get(context).map_or(0, |s| s.counts[token])
    }

    /// Number of observations of `context`, zero when unseen.
    pub fn context_total(&self, context: &[usize]) -> u64 {
        self.contexts.get(context).map_or(0, |s| s.total)
    }

    /// Contexts with at least one observation, in sorted order.
    pub fn contexts(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.contexts.keys().map(Vec::as_slice)
    }

    /// Nonzero `(context, token, count)` entries, sorted by context then token.
    pub fn entries(&self) -> impl Iterator<Item = (&[usize], usize, u64)> + '_ {
        self.contexts.iter().flat_map(|(ctx, stats)| {
            stats
                .counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(move |(token, &c)| (ctx.as_slice(), token, c))
        })
    }

    fn stats_for(&self, context: &[usize]) -> &ContextStats {
        for start in 0..=context.len() {
            if let Some(stats) = self.contexts.get(&context[start..]) {
                return stats;
            }
        }
        unreachable!("unigram context is always present")
    }
}

fn check_params(order: usize, smoothing: f64) -> Result<()> {
    if order == 0 {
        return Err(invalid("n-gram order must be at least 1"));
    }
    if !(smoothing.is_finite() && smoothing > 0.0) {
        return Err(invalid(format!("smoothing constant must be positive, got {smoothing}")));
    }
    Ok(())
}

impl CharLm for NgramLm {
    type State = NgramState;

    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn initial_state(&self) -> NgramState {
        NgramState { context: Vec::new() }
    }

    fn fill_log_probs(&self, state: &NgramState, out: &mut [f64]) {
        out.copy_from_slice(&self.stats_for(&state.context).log_probs);
    }

    fn log_prob(&self, state: &NgramState, token: usize) -> f64 {
        self.stats_for(&state.context).log_probs[token]
    }

    fn advance(&self, state: &NgramState, token: usize) -> NgramState {
        if token >= self.eos() || self.order == 1 {
            return state.clone();
        }
        let keep = self.order - 1;
        let mut context = Vec::with_capacity(keep);
        let skip = (state.context.len() + 1).saturating_sub(keep);
        context.extend_from_slice(&state.context[skip.min(state.context.len())..]);
        context.push(token);
        NgramState { context }
    }
}
