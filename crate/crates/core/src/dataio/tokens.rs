//! Whitespace tokenizer for the text formats, tracking byte offsets.

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) struct Tokens<'a> {
    toks: Vec<(usize, &'a str)>,
    next: usize,
    end: usize,
    path: &'a Path,
}

impl<'a> Tokens<'a> {
    pub(crate) fn new(text: &'a str, path: &'a Path) -> Self {
        let mut toks = Vec::new();
        let mut start = None;
        for (i, c) in text.char_indices() {
            if c.is_whitespace() {
                if let Some(s) = start.take() {
                    toks.push((s, &text[s..i]));
                }
            } else if start.is_none() {
                start = Some(i);
            }
        }
        if let Some(s) = start {
            toks.push((s, &text[s..]));
        }
        Tokens {
            toks,
            next: 0,
            end: text.len(),
            path,
        }
    }

    /// Byte offset of the next token (or end of text).
    pub(crate) fn offset(&self) -> usize {
        self.toks.get(self.next).map_or(self.end, |t| t.0)
    }

    pub(crate) fn error(&self, offset: usize, msg: impl Into<String>) -> Error {
        Error::parse(self.path, offset, msg)
    }

    pub(crate) fn next_raw(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let t = self
            .toks
            .get(self.next)
            .copied()
            .ok_or_else(|| self.error(self.end, format!("unexpected end of file (expected {what})")))?;
        self.next += 1;
        Ok(t)
    }

    pub(crate) fn keyword(&mut self, word: &str) -> Result<()> {
        match self.toks.get(self.next).copied() {
            Some((_, t)) if t == word => {
                self.next += 1;
                Ok(())
            }
            Some((off, t)) => Err(self.error(off, format!("expected {word:?} block, found {t:?}"))),
            None => Err(self.error(self.end, format!("missing {word:?} block"))),
        }
    }

    pub(crate) fn usize(&mut self, what: &str) -> Result<usize> {
        let (off, tok) = self.next_raw(what)?;
        tok.parse()
            .map_err(|_| self.error(off, format!("invalid {what} {tok:?}")))
    }

    pub(crate) fn f64(&mut self, what: &str) -> Result<f64> {
        let (off, tok) = self.next_raw(what)?;
        tok.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.error(off, format!("invalid {what} {tok:?}")))
    }

    pub(crate) fn finish(&self) -> Result<()> {
        match self.toks.get(self.next) {
            Some((off, tok)) => Err(self.error(*off, format!("trailing content {tok:?}"))),
            None => Ok(()),
        }
    }
}
