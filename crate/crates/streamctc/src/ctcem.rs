//! `CTCEM v1` emission files.
//!
//! ```text
//! CTCEM v1 <T> <|A|+1> <visible characters><blank glyph>
//! <|A|+1 space-separated probabilities>   (T lines, blank last)
//! ```
//!
//! The alphabet field runs to the end of the header line and may contain
//! spaces; its last character is the blank glyph. Values are written in
//! Rust's shortest round-trip float form, so save/load is exact.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use streamctc_core::emission::validate_row;
use streamctc_core::{Alphabet, EmissionMatrix};

use crate::error::{Error, Result};
use crate::text::{read_lines, split_header, strip_eol};

pub const MAGIC: &str = "CTCEM";
pub const VERSION: &str = "v1";

/// Parsed header line. `frames` is `None` for an open-ended stream (`-`).
#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub frames: Option<usize>,
    pub alphabet: Alphabet,
}

pub fn header_line(frames: Option<usize>, alphabet: &Alphabet) -> String {
    let t = frames.map_or_else(|| "-".to_owned(), |t| t.to_string());
    format!(
        "{MAGIC} {VERSION} {t} {} {}{}",
        alphabet.size_with_blank(),
        alphabet.visible_string(),
        alphabet.blank_glyph()
    )
}

pub fn parse_header(line: &str, line_no: usize) -> Result<Header> {
    let line = strip_eol(line);
    let (fields, alpha) =
        split_header(line, 4).ok_or_else(|| Error::parse(line_no, "header needs `CTCEM v1 <T> <width> <alphabet>`"))?;
    if fields[0] != MAGIC {
        return Err(Error::parse(line_no, format!("expected {MAGIC} header, found {:?}", fields[0])));
    }
    if fields[1] != VERSION {
        return Err(Error::parse(line_no, format!("unsupported {MAGIC} version {:?}", fields[1])));
    }
    let frames = match fields[2] {
        "-" => None,
        t => Some(t.parse().map_err(|_| Error::parse(line_no, format!("bad frame count {t:?}")))?),
    };
    let width: usize = fields[3]
        .parse()
        .map_err(|_| Error::parse(line_no, format!("bad row width {:?}", fields[3])))?;
    let chars: Vec<char> = alpha.chars().collect();
    if chars.len() != width {
        return Err(Error::parse(
            line_no,
            format!("alphabet field has {} characters, header declares {width}", chars.len()),
        ));
    }
    let Some((&blank, visible)) = chars.split_last() else {
        return Err(Error::parse(line_no, "alphabet field is empty"));
    };
    let visible: String = visible.iter().collect();
    let alphabet = Alphabet::with_blank_glyph(&visible, blank).map_err(|e| Error::parse(line_no, e.to_string()))?;
    Ok(Header { frames, alphabet })
}

/// Parses one row of floats. Values are not checked for stochasticity here.
pub fn parse_row(line: &str, width: usize, line_no: usize) -> Result<Vec<f64>> {
    let line = strip_eol(line);
    let row = line
        .split(' ')
        .enumerate()
        .map(|(i, v)| {
            v.parse::<f64>()
                .map_err(|_| Error::parse(line_no, format!("field {}: {v:?} is not a number", i + 1)))
        })
        .collect::<Result<Vec<f64>>>()?;
    if row.len() != width {
        return Err(Error::parse(line_no, format!("expected {width} values, found {}", row.len())));
    }
    Ok(row)
}

pub fn row_line(row: &[f64]) -> String {
    let mut s = String::with_capacity(row.len() * 8);
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{v:?}").expect("writing to a String");
    }
    s
}

pub fn to_string(em: &EmissionMatrix) -> String {
    let mut s = header_line(Some(em.frames()), em.alphabet());
    s.push('\n');
    for row in em.rows() {
        s.push_str(&row_line(row));
        s.push('\n');
    }
    s
}

pub fn save(em: &EmissionMatrix, mut sink: impl Write) -> Result<()> {
    sink.write_all(to_string(em).as_bytes())
        .map_err(|e| Error::io("writing emission matrix", e))
}

/// Loads and validates a matrix. A row that is not a probability vector is
/// a validation error, reported with its line number.
pub fn load(source: impl BufRead) -> Result<EmissionMatrix> {
    let lines = read_lines(source, "emission file")?;
    let header = parse_header(&lines[0], 1)?;
    let width = header.alphabet.size_with_blank();
    let body = &lines[1..];
    let expected = header.frames.ok_or_else(|| Error::parse(1, "emission files need an explicit frame count"))?;
    if body.len() != expected {
        return Err(Error::parse(
            1,
            format!("header declares {expected} frames but the file has {} rows", body.len()),
        ));
    }
    let mut data = Vec::with_capacity(expected * width);
    for (i, line) in body.iter().enumerate() {
        let row = parse_row(line, width, i + 2)?;
        validate_row(&header.alphabet, &row).map_err(|e| match e {
            streamctc_core::Error::InvalidInput(m) => {
                streamctc_core::Error::InvalidInput(format!("line {}: {m}", i + 2))
            }
            other => other,
        })?;
        data.extend(row);
    }
    Ok(EmissionMatrix::from_flat(header.alphabet, data)?)
}
