//! `NGLM v1` n-gram model files.
//!
//! ```text
//! NGLM v1 <order> <k> <alphabet>
//! <context>\t<char>\t<count>
//! ```
//!
//! One line per nonzero count, sorted by context then character. End of
//! sentence is written as `<eos>`; the empty context is an empty field.

use std::io::{BufRead, Write};

use streamctc_core::{Alphabet, CharLm, NgramLm};

use crate::error::{Error, Result};
use crate::text::{read_lines, split_header};

pub const MAGIC: &str = "NGLM";
pub const VERSION: &str = "v1";
pub const EOS: &str = "<eos>";

pub fn to_string(lm: &NgramLm) -> Result<String> {
    let alphabet = lm.alphabet();
    if alphabet.symbols().iter().any(|&c| c == '\t' || c == '\n' || c == '\r') {
        return Err(Error::Usage("alphabets with tabs or line breaks cannot be stored".into()));
    }
    let mut s = format!("{MAGIC} {VERSION} {} {:?} {}\n", lm.order(), lm.smoothing(), alphabet.visible_string());
    for (ctx, token, count) in lm.entries() {
        s.push_str(&alphabet.decode(ctx));
        s.push('\t');
        match alphabet.char_at(token) {
            Some(c) => s.push(c),
            None => s.push_str(EOS),
        }
        s.push('\t');
        s.push_str(&count.to_string());
        s.push('\n');
    }
    Ok(s)
}

pub fn save(lm: &NgramLm, mut sink: impl Write) -> Result<()> {
    sink.write_all(to_string(lm)?.as_bytes())
        .map_err(|e| Error::io("writing language model", e))
}

pub fn load(source: impl BufRead) -> Result<NgramLm> {
    let lines = read_lines(source, "language model file")?;
    let (fields, alpha) = split_header(&lines[0], 4)
        .ok_or_else(|| Error::parse(1, "header needs `NGLM v1 <order> <k> <alphabet>`"))?;
    if fields[0] != MAGIC || fields[1] != VERSION {
        return Err(Error::parse(1, format!("expected `{MAGIC} {VERSION}` header")));
    }
    let order: usize = fields[2].parse().map_err(|_| Error::parse(1, format!("bad order {:?}", fields[2])))?;
    let k: f64 = fields[3].parse().map_err(|_| Error::parse(1, format!("bad smoothing {:?}", fields[3])))?;
    let alphabet = Alphabet::new(alpha).map_err(|e| Error::parse(1, e.to_string()))?;
    let eos = alphabet.len();

    let mut entries = Vec::with_capacity(lines.len() - 1);
    for (i, line) in lines.iter().enumerate().skip(1) {
        let line_no = i + 1;
        let mut parts = line.split('\t');
        let (Some(ctx), Some(tok), Some(count), None) = (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(Error::parse(line_no, "expected `context<TAB>char<TAB>count`"));
        };
        let ctx = alphabet.encode(ctx).map_err(|e| Error::parse(line_no, e.to_string()))?;
        let token = if tok == EOS {
            eos
        } else {
            let mut chars = tok.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => {
                    alphabet.index_of(c).ok_or_else(|| Error::parse(line_no, format!("{c:?} not in alphabet")))?
                }
                _ => return Err(Error::parse(line_no, format!("bad character field {tok:?}"))),
            }
        };
        let count: u64 = count.parse().map_err(|_| Error::parse(line_no, format!("bad count {count:?}")))?;
        entries.push((ctx, token, count));
    }
    Ok(NgramLm::from_counts(alphabet, order, k, entries)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bigram() -> NgramLm {
        NgramLm::train("abab", Alphabet::new("ab").unwrap(), 2, 1.0).unwrap()
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let text = to_string(&bigram()).unwrap();
        assert!(text.starts_with("NGLM v1 2 1.0 ab\n"));
        let back = load(text.as_bytes()).unwrap();
        assert_eq!(to_string(&back).unwrap(), text);
        assert_eq!(back, bigram());
    }

    #[test]
    fn loaded_model_scores_identically() {
        let back = load(to_string(&bigram()).unwrap().as_bytes()).unwrap();
        let s = back.advance(&back.initial_state(), 0);
        assert!((back.log_prob(&s, 1).exp() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn truncation_is_a_parse_error() {
        let text = to_string(&bigram()).unwrap();
        for cut in [0, 5, text.len() / 2, text.len() - 1] {
            let err = load(&text.as_bytes()[..cut]).unwrap_err();
            assert!(matches!(err, Error::Parse { .. }), "cut {cut}: {err}");
        }
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let text = "NGLM v1 2 1.0 ab\n\ta\t2\na\tz\t1\n";
        match load(text.as_bytes()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
        let text = "NGLM v1 2 1.0 ab\n\ta\tmany\n";
        assert!(matches!(load(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }
}
