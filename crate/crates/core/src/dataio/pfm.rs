//! Single-channel PFM ("Pf") depth maps.
//!
//! Header: `Pf\n<width> <height>\n<scale>\n`, negative scale = little-endian.
//! Rows are stored bottom-to-top.

use std::path::Path;

use super::DepthMapBuffer;
use crate::error::{Error, Result};

pub fn encode_pfm(buffer: &DepthMapBuffer) -> Vec<u8> {
    let (w, h) = (buffer.width(), buffer.height());
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 4);
    for y in (0..h).rev() {
        for v in &buffer.values()[y * w..(y + 1) * w] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl Cursor<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.path, self.pos, msg)
    }

    /// Next whitespace-delimited header token; consumes exactly one
    /// trailing whitespace byte.
    fn token(&mut self) -> Result<&str> {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("unexpected end of header"));
        }
        let tok = std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| Error::parse(self.path, start, "non-ASCII header"))?;
        if self.pos < self.bytes.len() {
            self.pos += 1;
        }
        Ok(tok)
    }
}

pub fn decode_pfm(bytes: &[u8], path: &Path) -> Result<DepthMapBuffer> {
    let mut cur = Cursor { bytes, pos: 0, path };
    match cur.token()? {
        "Pf" => {}
        "PF" => return Err(Error::parse(path, 0, "unsupported channel count (3-channel PF)")),
        other => return Err(Error::parse(path, 0, format!("bad magic {other:?}"))),
    }
    let dim_at = cur.pos;
    let width: usize = cur
        .token()?
        .parse()
        .map_err(|_| Error::parse(path, dim_at, "invalid width"))?;
    let dim_at = cur.pos;
    let height: usize = cur
        .token()?
        .parse()
        .map_err(|_| Error::parse(path, dim_at, "invalid height"))?;
    let scale_at = cur.pos;
    let scale: f64 = cur
        .token()?
        .parse()
        .map_err(|_| Error::parse(path, scale_at, "invalid scale"))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::parse(path, scale_at, "scale must be non-zero"));
    }
    let little_endian = scale < 0.0;
    let data = &bytes[cur.pos..];
    let expected = width * height * 4;
    if data.len() != expected {
        return Err(Error::parse(
            path,
            cur.pos,
            format!("dimension mismatch: {width}x{height} needs {expected} payload bytes, found {}", data.len()),
        ));
    }
    let mut values = vec![0.0f32; width * height];
    for (i, chunk) in data.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little_endian {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        if !v.is_finite() {
            return Err(Error::parse(path, cur.pos + 4 * i, "non-finite value"));
        }
        if v < 0.0 {
            return Err(Error::parse(path, cur.pos + 4 * i, "negative depth"));
        }
        let (row, col) = (i / width, i % width);
        values[(height - 1 - row) * width + col] = v;
    }
    DepthMapBuffer::from_values(width, height, values)
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<DepthMapBuffer> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes, path)
}

pub fn write_pfm(buffer: &DepthMapBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_pfm(buffer)).map_err(|e| Error::io(path, e))
}
