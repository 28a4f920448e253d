//! Line helpers shared by the text formats.

use std::io::BufRead;

use crate::error::{Error, Result};

/// Reads all lines, requiring the input to end with a newline so that a
/// truncated file is rejected rather than silently shortened.
pub(crate) fn read_lines(mut source: impl BufRead, what: &str) -> Result<Vec<String>> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| Error::io(format!("reading {what}"), e))?;
    if text.is_empty() {
        return Err(Error::parse(1, format!("empty {what}")));
    }
    if !text.ends_with('\n') {
        let line = text.lines().count();
        return Err(Error::parse(line, format!("{what} is truncated (missing final newline)")));
    }
    Ok(text.lines().map(str::to_owned).collect())
}

/// Splits `line` into `n` leading space-separated fields plus the verbatim rest.
pub(crate) fn split_header(line: &str, n: usize) -> Option<(Vec<&str>, &str)> {
    let mut parts = line.splitn(n + 1, ' ');
    let fields: Vec<&str> = parts.by_ref().take(n).collect();
    let rest = parts.next()?;
    (fields.len() == n).then_some((fields, rest))
}

pub(crate) fn strip_eol(line: &str) -> &str {
    line.trim_end_matches(['\r', '\n'])
}
