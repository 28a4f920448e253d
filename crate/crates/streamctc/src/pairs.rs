//! Transcript pair files: `reference<TAB>hypothesis` per line.

use std::io::BufRead;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pair {
    pub reference: String,
    pub hypothesis: String,
}

/// Blank lines are skipped. A line without a tab is a parse error.
pub fn load(source: impl BufRead) -> Result<Vec<Pair>> {
    let mut pairs = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line.map_err(|e| Error::io("reading pairs", e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (reference, hypothesis) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(i + 1, "expected `reference<TAB>hypothesis`"))?;
        pairs.push(Pair { reference: reference.to_owned(), hypothesis: hypothesis.to_owned() });
    }
    Ok(pairs)
}
