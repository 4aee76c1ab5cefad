//! Line-oriented keyed text format shared by instance, label and checkpoint files.
//!
//! Every record starts with a `<magic> <version>` line. Scalars and vectors are
//! written as `key v1 v2 ...` on one line; matrices as a `key rows cols` header
//! followed by `rows` lines of `cols` values. Blank lines and lines starting
//! with `#` are ignored. Floats use Rust's shortest round-trip representation,
//! so reading back a written value is bit-exact.

use std::fmt::Display;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Default)]
pub struct Writer {
    buf: String,
}

impl Writer {
    pub fn new(magic: &str, version: u32) -> Self {
        let mut w = Writer::default();
        w.line(magic, [version]);
        w
    }

    pub fn line<T: Display>(&mut self, key: &str, values: impl IntoIterator<Item = T>) {
        self.buf.push_str(key);
        for v in values {
            self.buf.push(' ');
            self.buf.push_str(&v.to_string());
        }
        self.buf.push('\n');
    }

    pub fn scalar<T: Display>(&mut self, key: &str, value: T) {
        self.line(key, [value]);
    }

    /// Row-major matrix with `cols` columns.
    pub fn matrix<T: Display>(&mut self, key: &str, cols: usize, values: &[T]) {
        let rows = values.len().checked_div(cols).unwrap_or(0);
        self.line(key, [rows, cols]);
        for row in values.chunks(cols.max(1)) {
            let text = row
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            self.buf.push_str(&text);
            self.buf.push('\n');
        }
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// Sequential reader: fields must appear in the order the writer emitted them.
pub struct Reader<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(text: &'a str, magic: &str, version: u32) -> Result<Self> {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        let mut r = Reader { lines, pos: 0 };
        let found: u32 = r.scalar(magic)?;
        if found != version {
            return Err(Error::Malformed {
                line: r.lines[0].0,
                message: format!("unsupported {magic} version {found}, expected {version}"),
            });
        }
        Ok(r)
    }

    fn next_line(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let entry = self.lines.get(self.pos).copied().ok_or_else(|| Error::Malformed {
            line: self.lines.last().map_or(0, |l| l.0),
            message: format!("unexpected end of input, expected `{key}`"),
        })?;
        self.pos += 1;
        Ok(entry)
    }

    /// Reads a `key v1 v2 ...` line and returns the raw value tokens.
    pub fn tokens(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (line, text) = self.next_line(key)?;
        let mut it = text.split_whitespace();
        match it.next() {
            Some(k) if k == key => Ok((line, it.collect())),
            other => Err(Error::Malformed {
                line,
                message: format!("expected key `{key}`, found `{}`", other.unwrap_or("")),
            }),
        }
    }

    pub fn scalar<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let (line, toks) = self.tokens(key)?;
        if toks.len() != 1 {
            return Err(Error::Malformed {
                line,
                message: format!("`{key}` expects exactly one value, found {}", toks.len()),
            });
        }
        parse_token(line, key, toks[0])
    }

    pub fn vector<T: FromStr>(&mut self, key: &str) -> Result<Vec<T>> {
        let (line, toks) = self.tokens(key)?;
        toks.into_iter().map(|t| parse_token(line, key, t)).collect()
    }

    /// Returns `(rows, cols, row-major values)`.
    pub fn matrix<T: FromStr>(&mut self, key: &str) -> Result<(usize, usize, Vec<T>)> {
        let (line, toks) = self.tokens(key)?;
        if toks.len() != 2 {
            return Err(Error::Malformed {
                line,
                message: format!("matrix `{key}` header needs `rows cols`"),
            });
        }
        let rows: usize = parse_token(line, key, toks[0])?;
        let cols: usize = parse_token(line, key, toks[1])?;
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let (line, text) = self.next_line(key)?;
            let row: Vec<T> = text
                .split_whitespace()
                .map(|t| parse_token(line, key, t))
                .collect::<Result<_>>()?;
            if row.len() != cols {
                return Err(Error::dim(format!("{key} row {r}"), cols, row.len()));
            }
            values.extend(row);
        }
        Ok((rows, cols, values))
    }

    pub fn expect_end(&self) -> Result<()> {
        match self.lines.get(self.pos) {
            None => Ok(()),
            Some(&(line, text)) => Err(Error::Malformed {
                line,
                message: format!("trailing content `{text}`"),
            }),
        }
    }
}

fn parse_token<T: FromStr>(line: usize, key: &str, tok: &str) -> Result<T> {
    tok.parse().map_err(|_| Error::Malformed {
        line,
        message: format!("cannot parse `{tok}` in `{key}`"),
    })
}

/// Encodes a boolean vector as 0/1 tokens.
pub fn bits(values: &[bool]) -> impl Iterator<Item = u8> + '_ {
    values.iter().map(|&b| u8::from(b))
}

pub fn parse_bits(line_hint: &str, raw: Vec<u8>) -> Result<Vec<bool>> {
    raw.into_iter()
        .map(|b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::Invariant(format!(
                "{line_hint} must be binary, found {other}"
            ))),
        })
        .collect()
}
