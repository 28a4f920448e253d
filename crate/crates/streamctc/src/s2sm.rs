//! `S2SM v1` mock autoregressive scorer files.
//!
//! ```text
//! S2SM v1 <alphabet>
//! <prefix>\t<char>\t<probability>
//! ```
//!
//! Each listed prefix carries its nonzero next-character probabilities, with
//! end of sentence written as `<eos>`. Omitted characters of a listed prefix
//! have probability zero; unlisted prefixes are uniform.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use streamctc_core::seq2seq::AutoregressiveScorer;
use streamctc_core::{Alphabet, MockScorer};

use crate::error::{Error, Result};
use crate::nglm::EOS;
use crate::text::{read_lines, split_header};

pub const MAGIC: &str = "S2SM";
pub const VERSION: &str = "v1";

pub fn to_string(scorer: &MockScorer) -> String {
    let alphabet = scorer.alphabet();
    let mut s = format!("{MAGIC} {VERSION} {}\n", alphabet.visible_string());
    for (prefix, probs) in scorer.entries() {
        let prefix = alphabet.decode(prefix);
        for (token, &p) in probs.iter().enumerate().filter(|(_, &p)| p > 0.0) {
            s.push_str(&prefix);
            s.push('\t');
            match alphabet.char_at(token) {
                Some(c) => s.push(c),
                None => s.push_str(EOS),
            }
            s.push('\t');
            s.push_str(&format!("{p:?}"));
            s.push('\n');
        }
    }
    s
}

pub fn save(scorer: &MockScorer, mut sink: impl Write) -> Result<()> {
    sink.write_all(to_string(scorer).as_bytes())
        .map_err(|e| Error::io("writing scorer", e))
}

pub fn load(source: impl BufRead) -> Result<MockScorer> {
    let lines = read_lines(source, "scorer file")?;
    let (fields, alpha) =
        split_header(&lines[0], 2).ok_or_else(|| Error::parse(1, "header needs `S2SM v1 <alphabet>`"))?;
    if fields[0] != MAGIC || fields[1] != VERSION {
        return Err(Error::parse(1, format!("expected `{MAGIC} {VERSION}` header")));
    }
    let alphabet = Alphabet::new(alpha).map_err(|e| Error::parse(1, e.to_string()))?;
    let vocab = alphabet.len() + 1;

    // prefix -> (distribution, first line it appeared on)
    let mut table: BTreeMap<Vec<usize>, (Vec<f64>, usize)> = BTreeMap::new();
    for (i, line) in lines.iter().enumerate().skip(1) {
        let line_no = i + 1;
        let mut parts = line.split('\t');
        let (Some(prefix), Some(tok), Some(prob), None) = (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(Error::parse(line_no, "expected `prefix<TAB>char<TAB>probability`"));
        };
        let prefix = alphabet.encode(prefix).map_err(|e| Error::parse(line_no, e.to_string()))?;
        let token = if tok == EOS {
            vocab - 1
        } else {
            let mut chars = tok.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => {
                    alphabet.index_of(c).ok_or_else(|| Error::parse(line_no, format!("{c:?} not in alphabet")))?
                }
                _ => return Err(Error::parse(line_no, format!("bad character field {tok:?}"))),
            }
        };
        let p: f64 = prob.parse().map_err(|_| Error::parse(line_no, format!("bad probability {prob:?}")))?;
        let entry = table.entry(prefix).or_insert_with(|| (vec![0.0; vocab], line_no));
        if entry.0[token] != 0.0 {
            return Err(Error::parse(line_no, "duplicate entry"));
        }
        entry.0[token] = p;
    }
    let mut scorer = MockScorer::new(alphabet);
    for (prefix, (probs, line_no)) in table {
        scorer.set(prefix, probs).map_err(|e| Error::parse(line_no, e.to_string()))?;
    }
    Ok(scorer)
}
