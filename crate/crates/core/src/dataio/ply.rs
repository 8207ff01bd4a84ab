//! Binary little-endian PLY point clouds (float x/y/z, uchar red/green/blue).

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fusion::PointCloud;

pub fn write_ply(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let n = cloud.len();
    let header = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {n}\n\
         property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n"
    );
    let mut body = Vec::with_capacity(header.len() + 15 * n);
    body.extend_from_slice(header.as_bytes());
    for (i, p) in cloud.points.iter().enumerate() {
        for c in p {
            body.extend_from_slice(&(*c as f32).to_le_bytes());
        }
        let rgb = cloud.colors.as_ref().map_or([255, 255, 255], |c| c[i]);
        body.extend_from_slice(&rgb);
    }
    w.write_all(&body)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

#[derive(Clone, Copy)]
enum Scalar {
    F32,
    F64,
    U8,
}

impl Scalar {
    fn parse(name: &str) -> Option<Scalar> {
        match name {
            "float" | "float32" => Some(Scalar::F32),
            "double" | "float64" => Some(Scalar::F64),
            "uchar" | "uint8" => Some(Scalar::U8),
            _ => None,
        }
    }

    fn size(self) -> usize {
        match self {
            Scalar::F32 => 4,
            Scalar::F64 => 8,
            Scalar::U8 => 1,
        }
    }

    fn read(self, b: &[u8]) -> f64 {
        match self {
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
            Scalar::U8 => b[0] as f64,
        }
    }
}

/// Reads binary little-endian vertex-only PLY files with float/double
/// coordinates and optional uchar colors.
pub fn read_ply(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut offset = 0usize;
    let mut line = String::new();
    let next_line = |r: &mut BufReader<std::fs::File>, line: &mut String, offset: &mut usize| -> Result<()> {
        line.clear();
        let n = r.read_line(line).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Err(Error::parse(path, *offset, "unexpected end of PLY header"));
        }
        *offset += n;
        Ok(())
    };

    next_line(&mut r, &mut line, &mut offset)?;
    if line.trim_end() != "ply" {
        return Err(Error::parse(path, 0, "missing ply magic"));
    }
    let mut count = None;
    let mut props: Vec<(String, Scalar)> = Vec::new();
    let mut in_vertex = false;
    loop {
        let at = offset;
        next_line(&mut r, &mut line, &mut offset)?;
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["end_header"] => break,
            ["format", fmt, _] => {
                if *fmt != "binary_little_endian" {
                    return Err(Error::parse(path, at, format!("unsupported PLY format {fmt}")));
                }
            }
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", name, n] => {
                in_vertex = *name == "vertex";
                if in_vertex {
                    count = Some(n.parse::<usize>().map_err(|_| Error::parse(path, at, "invalid vertex count"))?);
                } else if *n != "0" {
                    return Err(Error::parse(path, at, format!("unsupported non-empty element {name}")));
                }
            }
            ["property", ty, name] if in_vertex => {
                let s = Scalar::parse(ty).ok_or_else(|| Error::parse(path, at, format!("unsupported property type {ty}")))?;
                props.push((name.to_string(), s));
            }
            ["property", ..] => {}
            _ => return Err(Error::parse(path, at, format!("unrecognized header line {:?}", line.trim_end()))),
        }
    }
    let count = count.ok_or_else(|| Error::parse(path, offset, "no vertex element"))?;
    let find = |n: &str| props.iter().position(|p| p.0 == n);
    let (xi, yi, zi) = match (find("x"), find("y"), find("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(Error::parse(path, offset, "vertex element lacks x/y/z")),
    };
    let color_idx = match (find("red"), find("green"), find("blue")) {
        (Some(r), Some(g), Some(b)) => Some([r, g, b]),
        _ => None,
    };
    let offsets: Vec<usize> = props
        .iter()
        .scan(0, |acc, p| {
            let o = *acc;
            *acc += p.1.size();
            Some(o)
        })
        .collect();
    let stride: usize = props.iter().map(|p| p.1.size()).sum();
    let mut data = Vec::new();
    r.read_to_end(&mut data).map_err(|e| Error::io(path, e))?;
    if data.len() != stride * count {
        return Err(Error::parse(
            path,
            offset,
            format!("expected {} vertex bytes, found {}", stride * count, data.len()),
        ));
    }
    let mut points = Vec::with_capacity(count);
    let mut colors = color_idx.map(|_| Vec::with_capacity(count));
    for (i, rec) in data.chunks_exact(stride.max(1)).take(count).enumerate() {
        let get = |k: usize| props[k].1.read(&rec[offsets[k]..]);
        let p = [get(xi), get(yi), get(zi)];
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::parse(path, offset + i * stride, "non-finite vertex"));
        }
        points.push(p);
        if let (Some(c), Some(idx)) = (colors.as_mut(), color_idx) {
            c.push([get(idx[0]) as u8, get(idx[1]) as u8, get(idx[2]) as u8]);
        }
    }
    Ok(PointCloud { points, colors })
}
