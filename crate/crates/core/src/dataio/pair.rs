//! `pair.txt` view-pairing tables.
//!
//! ```text
//! <view count>
//! <view id>
//! <source count> <id> <score> <id> <score> ...
//! ...
//! ```

use std::path::Path;

use super::tokens::Tokens;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceRef {
    pub view: usize,
    pub score: f64,
}

/// Per-view ordered source lists, indexed by view id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairTable {
    pub sources: Vec<Vec<SourceRef>>,
}

impl PairTable {
    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn source_ids(&self, view: usize) -> Vec<usize> {
        self.sources[view].iter().map(|s| s.view).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.sources.len();
        for (v, list) in self.sources.iter().enumerate() {
            for s in list {
                if s.view >= n {
                    return Err(Error::Config(format!("view {v} lists out-of-range source {}", s.view)));
                }
                if s.view == v {
                    return Err(Error::Config(format!("view {v} lists itself as a source")));
                }
            }
        }
        Ok(())
    }
}

pub fn format_pair(table: &PairTable) -> String {
    let mut s = format!("{}\n", table.len());
    for (v, list) in table.sources.iter().enumerate() {
        s += &format!("{v}\n{}", list.len());
        for src in list {
            s += &format!(" {} {:?}", src.view, src.score);
        }
        s.push('\n');
    }
    s
}

pub fn parse_pair(text: &str, path: &Path) -> Result<PairTable> {
    let mut toks = Tokens::new(text, path);
    let n = toks.usize("view count")?;
    let mut sources: Vec<Option<Vec<SourceRef>>> = vec![None; n];
    for _ in 0..n {
        let at = toks.offset();
        let v = toks.usize("view id")?;
        if v >= n {
            return Err(toks.error(at, format!("view id {v} out of range for {n} views")));
        }
        if sources[v].is_some() {
            return Err(toks.error(at, format!("view {v} listed twice")));
        }
        let count = toks.usize("source count")?;
        let mut list = Vec::with_capacity(count);
        for _ in 0..count {
            let at = toks.offset();
            let id = toks.usize("source id")?;
            if id >= n {
                return Err(toks.error(at, format!("source {id} out of range for {n} views")));
            }
            if id == v {
                return Err(toks.error(at, format!("view {v} lists itself as a source")));
            }
            let score = toks.f64("source score")?;
            list.push(SourceRef { view: id, score });
        }
        sources[v] = Some(list);
    }
    toks.finish()?;
    Ok(PairTable {
        sources: sources.into_iter().map(|s| s.unwrap_or_default()).collect(),
    })
}

pub fn read_pair(path: impl AsRef<Path>) -> Result<PairTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pair(&text, path)
}

pub fn write_pair(table: &PairTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_pair(table)).map_err(|e| Error::io(path, e))
}
