//! Subcommands of the `streamctc` binary.
//!
//! Each command reads from the given input and writes to the given output so
//! it can be driven from tests without spawning a process.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use streamctc_core::ctc::{enumerate_transcripts, path_log_probability};
use streamctc_core::metrics::words;
use streamctc_core::online::DEFAULT_COMPLETION_CHARS;
use streamctc_core::{
    beam_decode, confusion_matrix, edit_distance, greedy_decode, receptive_field, s2s_decode, simulate, Alphabet,
    BeamConfig, CharLm, NgramLm, Path as CtcPath, ReceptiveFieldSpec, S2SConfig, SimConfig, StreamDecoder,
    UniformLm,
};

use crate::error::{Error, Result};
use crate::{ctcem, nglm, pairs, s2sm};

pub const DEFAULT_ALPHABET: &str = " abcdefghijklmnopqrstuvwxyz'";

/// Must list the same formats as [`crate::FORMAT_VERSIONS`].
const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (formats: CTCEM v1, NGLM v1, S2SM v1)");

#[derive(Debug, Parser)]
#[command(name = "streamctc", version = VERSION, about = "Streaming CTC beam search decoding")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decode a CTCEM file offline.
    Decode {
        /// Emission file.
        emissions: PathBuf,
        #[command(flatten)]
        beam: BeamArgs,
        /// Collapse the argmax path instead of running beam search.
        #[arg(long)]
        greedy: bool,
    },
    /// Decode emission rows from stdin as they arrive, one record per frame.
    Stream {
        #[command(flatten)]
        beam: BeamArgs,
        /// Frames of lookahead before a frame is committed.
        #[arg(long, default_value_t = 22)]
        lag: usize,
        /// First frame (1-based) to decode; earlier rows are read and skipped.
        #[arg(long, default_value_t = 1)]
        start_frame: usize,
    },
    /// Train a character n-gram model on a text corpus (one sentence per line).
    LmTrain {
        corpus: PathBuf,
        #[arg(long, default_value_t = 3)]
        order: usize,
        /// Add-k smoothing constant.
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value = DEFAULT_ALPHABET)]
        alphabet: String,
        /// Output file (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Corpus WER and CER over a `reference<TAB>hypothesis` file.
    Metrics {
        pairs: PathBuf,
        /// Also print character substitution counts.
        #[arg(long)]
        confusion: bool,
        #[arg(long, default_value = DEFAULT_ALPHABET)]
        alphabet: String,
    },
    /// Exact transcript probabilities by enumerating every path.
    Oracle {
        emissions: PathBuf,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Write a synthetic CTCEM matrix for a ground-truth sentence.
    Simulate {
        text: String,
        #[arg(long, default_value = DEFAULT_ALPHABET)]
        alphabet: String,
        #[arg(long, default_value_t = 0.9)]
        peak: f64,
        #[arg(long, default_value_t = 3)]
        frames_per_char: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Hold the character peak for the whole duration instead of
        /// switching to blank.
        #[arg(long)]
        no_blank_fill: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Receptive field of stacked odd-width convolutions.
    Rf {
        /// Filter widths: `5x11` for eleven layers of width 5, or a single width.
        #[arg(required = true)]
        layers: Vec<String>,
    },
    /// Beam search over an S2SM mock scorer.
    S2sDecode {
        scorer: PathBuf,
        #[arg(long)]
        lm: Option<PathBuf>,
        #[arg(long, default_value_t = 15)]
        beam_width: usize,
        /// LM weight; 0.1 with `--lm`, 0 without.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 0.7)]
        beta: f64,
        #[arg(long, default_value_t = 100)]
        max_length: usize,
    },
}

#[derive(Debug, Clone, Args)]
pub struct BeamArgs {
    /// NGLM language model file.
    #[arg(long)]
    pub lm: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub beam_width: usize,
    /// LM weight; 0.5 with `--lm`, 0 without.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Length normalization exponent.
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
}

fn resolve_alpha(alpha: Option<f64>, has_lm: bool, with_lm_default: f64) -> Result<f64> {
    match (alpha, has_lm) {
        (None, true) => Ok(with_lm_default),
        (None, false) => Ok(0.0),
        (Some(a), false) if a != 0.0 => Err(Error::Usage("--alpha > 0 needs a language model (--lm)".into())),
        (Some(a), _) => Ok(a),
    }
}

impl BeamArgs {
    fn config(&self) -> Result<BeamConfig> {
        let alpha = resolve_alpha(self.alpha, self.lm.is_some(), BeamConfig::default().alpha)?;
        Ok(BeamConfig::new(self.beam_width, alpha, self.beta)?)
    }

    fn load_lm(&self) -> Result<Option<NgramLm>> {
        self.lm.as_deref().map(load_lm).transpose()
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))
}

fn load_lm(path: &Path) -> Result<NgramLm> {
    log::debug!("loading language model {}", path.display());
    nglm::load(open(path)?)
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| Error::io("writing output", e))
}

/// Writes `text` to `path`, or to `out` when no path is given.
fn emit(path: Option<&Path>, out: &mut dyn Write, text: &str) -> Result<()> {
    match path {
        None => write_out(out, text),
        Some(p) => {
            let mut f = File::create(p).map_err(|e| Error::io(format!("creating {}", p.display()), e))?;
            f.write_all(text.as_bytes())
                .map_err(|e| Error::io(format!("writing {}", p.display()), e))
        }
    }
}

pub fn run(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Decode { emissions, beam, greedy } => decode(&emissions, &beam, greedy, out),
        Command::Stream { beam, lag, start_frame } => stream(&beam, lag, start_frame, input, out),
        Command::LmTrain { corpus, order, k, alphabet, out: path } => {
            let alphabet = Alphabet::new(&alphabet)?;
            let mut text = String::new();
            io::Read::read_to_string(&mut open(&corpus)?, &mut text)
                .map_err(|e| Error::io(format!("reading {}", corpus.display()), e))?;
            let lm = NgramLm::train(&text, alphabet, order, k)?;
            log::info!("trained order-{order} model with {} contexts", lm.contexts().count());
            emit(path.as_deref(), out, &nglm::to_string(&lm)?)
        }
        Command::Metrics { pairs, confusion, alphabet } => metrics(&pairs, confusion.then_some(&alphabet), out),
        Command::Oracle { emissions, top } => {
            let em = ctcem::load(open(&emissions)?)?;
            let mut s = String::new();
            for (t, p) in enumerate_transcripts(&em)?.into_iter().take(top) {
                let quoted = serde_json::to_string(t.as_str()).expect("strings serialize");
                s.push_str(&format!("{quoted}\t{p:?}\n"));
            }
            write_out(out, &s)
        }
        Command::Simulate { text, alphabet, peak, frames_per_char, seed, no_blank_fill, out: path } => {
            let alphabet = Alphabet::new(&alphabet)?;
            let config = SimConfig { peak_prob: peak, frames_per_char, seed, blank_fill: !no_blank_fill };
            let em = simulate(&text, &alphabet, &config)?;
            emit(path.as_deref(), out, &ctcem::to_string(&em))
        }
        Command::Rf { layers } => {
            let mut spec = ReceptiveFieldSpec::new(Vec::new());
            for arg in &layers {
                spec = spec.concat(&parse_layers(arg)?);
            }
            let rf = receptive_field(&spec)?;
            write_out(out, &format!("r={} R={}\n", rf.future, rf.total))
        }
        Command::S2sDecode { scorer, lm, beam_width, alpha, beta, max_length } => {
            let scorer = s2sm::load(open(&scorer)?)?;
            let alpha = resolve_alpha(alpha, lm.is_some(), S2SConfig::WITH_LM.alpha)?;
            let config = S2SConfig { width: beam_width, alpha, beta, max_length };
            let (text, score) = match lm {
                Some(p) => s2s_decode(&scorer, &load_lm(&p)?, &config)?,
                None => {
                    let uniform = UniformLm::new(streamctc_core::AutoregressiveScorer::alphabet(&scorer).clone());
                    s2s_decode(&scorer, &uniform, &config)?
                }
            };
            write_out(out, &format!("{text}\nscore {score:?}\n"))
        }
    }
}

/// `5x11` (or `5×11`) is eleven layers of width 5; a bare number is one layer.
fn parse_layers(arg: &str) -> Result<ReceptiveFieldSpec> {
    let bad = || Error::Usage(format!("bad layer spec {arg:?}; expected WIDTH or WIDTHxLAYERS"));
    let (width, layers) = match arg.split_once(['x', '×']) {
        Some((w, n)) => (w, n.parse::<usize>().map_err(|_| bad())?),
        None => (arg, 1),
    };
    let width = width.parse::<usize>().map_err(|_| bad())?;
    Ok(ReceptiveFieldSpec::uniform(layers, width))
}

fn decode(path: &Path, beam: &BeamArgs, greedy: bool, out: &mut dyn Write) -> Result<()> {
    let config = beam.config()?;
    let lm = beam.load_lm()?;
    let em = ctcem::load(open(path)?)?;
    let (text, score) = if greedy {
        let text = greedy_decode(&em);
        let labels = (0..em.frames()).map(|t| argmax(em.row(t))).collect();
        (text, path_log_probability(&CtcPath::new(labels), &em)?)
    } else {
        match &lm {
            Some(lm) => beam_decode(&em, &config, lm)?,
            None => beam_decode(&em, &config, &UniformLm::new(em.alphabet().clone()))?,
        }
    };
    write_out(out, &format!("{text}\nscore {score:?}\n"))
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[derive(Serialize)]
struct FrameRecord<'a> {
    frame: usize,
    committed: &'a str,
    hypothesis: &'a str,
    completion: &'a str,
    score: f64,
}

#[derive(Serialize)]
struct FinalRecord<'a> {
    #[serde(rename = "final")]
    text: &'a str,
    score: f64,
    frames: usize,
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: &'a str,
    line: usize,
}

fn record(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    let mut line = serde_json::to_string(value).expect("records serialize");
    line.push('\n');
    write_out(out, &line)?;
    out.flush().map_err(|e| Error::io("flushing output", e))
}

fn stream(beam: &BeamArgs, lag: usize, start_frame: usize, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<()> {
    if start_frame == 0 {
        return Err(Error::Usage("--start-frame is 1-based".into()));
    }
    let config = beam.config()?;
    let lm = beam.load_lm()?;
    let mut lines = input.lines();
    let result = (|| {
        let header = match lines.next() {
            None => return Err(Error::parse(1, "missing CTCEM header")),
            Some(line) => ctcem::parse_header(&line.map_err(|e| Error::io("reading header", e))?, 1)?,
        };
        match &lm {
            Some(lm) => {
                let decoder = StreamDecoder::new(lm, config, lag)?.with_completion_chars(DEFAULT_COMPLETION_CHARS);
                stream_rows(decoder, &header, start_frame, &mut lines, out)
            }
            // completions from a uniform model carry no information
            None => {
                let uniform = UniformLm::new(header.alphabet.clone());
                let decoder = StreamDecoder::new(&uniform, config, lag)?.with_completion_chars(0);
                stream_rows(decoder, &header, start_frame, &mut lines, out)
            }
        }
    })();
    if let Err(e) = &result {
        let line = match e {
            Error::Parse { line, .. } => *line,
            _ => 0,
        };
        record(out, &ErrorRecord { error: &e.to_string(), line })?;
    }
    result
}

fn stream_rows<L: CharLm>(
    mut decoder: StreamDecoder<'_, L>,
    header: &ctcem::Header,
    start_frame: usize,
    lines: &mut dyn Iterator<Item = io::Result<String>>,
    out: &mut dyn Write,
) -> Result<()> {
    decoder.check_alphabet(&header.alphabet)?;
    let width = header.alphabet.size_with_blank();
    let mut frame = 0usize;
    for line in lines {
        let line_no = frame + 2;
        let line = line.map_err(|e| Error::io("reading emission row", e))?;
        let row = ctcem::parse_row(&line, width, line_no)?;
        frame += 1;
        if frame < start_frame {
            continue;
        }
        let o = decoder.push(&row).map_err(|e| Error::parse(line_no, e.to_string()))?;
        log::trace!("frame {frame}: {} steps", decoder.last_push_steps());
        record(
            out,
            &FrameRecord {
                frame,
                committed: o.committed_best.as_str(),
                hypothesis: o.lookahead_best.as_str(),
                completion: &o.lm_completion,
                score: o.score,
            },
        )?;
    }
    if let Some(expected) = header.frames {
        if expected != frame {
            return Err(Error::parse(frame + 2, format!("header declares {expected} frames but the stream had {frame}")));
        }
    }
    let (text, score) = decoder.flush();
    record(out, &FinalRecord { text: text.as_str(), score, frames: frame.saturating_sub(start_frame - 1) })
}

fn metrics(path: &Path, confusion_alphabet: Option<&String>, out: &mut dyn Write) -> Result<()> {
    let all = pairs::load(open(path)?)?;
    let (kept, skipped): (Vec<_>, Vec<_>) =
        all.iter().partition(|p| !p.reference.trim().is_empty() && !p.hypothesis.trim().is_empty());
    for p in &skipped {
        log::warn!("skipping pair with empty side: {:?}", p.reference);
    }
    let mut s = format!("pairs {}\nskipped {}\n", kept.len(), skipped.len());
    if !kept.is_empty() {
        let (mut word_edits, mut word_total, mut char_edits, mut char_total) = (0usize, 0usize, 0usize, 0usize);
        for p in &kept {
            let (r, h) = (words(&p.reference), words(&p.hypothesis));
            word_edits += edit_distance(&r, &h).distance;
            word_total += r.len();
            let (r, h): (Vec<char>, Vec<char>) = (p.reference.chars().collect(), p.hypothesis.chars().collect());
            char_edits += edit_distance(&r, &h).distance;
            char_total += r.len();
        }
        s.push_str(&format!(
            "WER {:?}\nCER {:?}\n",
            word_edits as f64 / word_total as f64,
            char_edits as f64 / char_total as f64
        ));
    }
    if let Some(alphabet) = confusion_alphabet {
        let alphabet = Alphabet::new(alphabet)?;
        let m = confusion_matrix(&alphabet, kept.iter().map(|p| (p.reference.as_str(), p.hypothesis.as_str())));
        s.push_str("confusion\n");
        for &r in alphabet.symbols() {
            for &d in alphabet.symbols() {
                let n = m.count(r, d);
                if n > 0 {
                    s.push_str(&format!("{r:?}\t{d:?}\t{n}\n"));
                }
            }
        }
        s.push_str(&format!("unmapped {}\n", m.unmapped));
    }
    write_out(out, &s)
}

/// Convenience for `main`: buffered stdout that is flushed by `record`.
pub fn stdout() -> BufWriter<io::Stdout> {
    BufWriter::new(io::stdout())
}
