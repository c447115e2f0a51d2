//! Minimal Portable GrayMap codec.
//!
//! Reads binary (`P5`) and ASCII (`P2`) graymaps with `maxval <= 65535`
//! (16-bit binary samples are big-endian). Writes 8-bit binary `P5`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matops::Matrix;

/// A decoded graymap, samples row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

impl Pgm {
    /// `height x width` matrix with samples scaled to `[0, 1]`.
    pub fn to_matrix(&self) -> Matrix {
        let scale = 1.0 / f64::from(self.maxval);
        Matrix::from_fn(self.height, self.width, |r, c| {
            f64::from(self.samples[r * self.width + c]) * scale
        })
    }

    /// 8-bit graymap from a matrix of intensities in `[0, 1]`.
    ///
    /// Values are clamped to `[0, 1]`, scaled by 255 and rounded half away
    /// from zero.
    pub fn from_matrix(m: &Matrix) -> Self {
        let (height, width) = m.shape();
        let mut samples = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                samples.push(to_byte(m[(r, c)]) as u16);
            }
        }
        Self {
            width,
            height,
            maxval: 255,
            samples,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        let scale = 255.0 / f64::from(self.maxval.max(1));
        out.extend(self.samples.iter().map(|&s| {
            if self.maxval == 255 {
                s as u8
            } else {
                (f64::from(s) * scale).round().clamp(0.0, 255.0) as u8
            }
        }));
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        let magic = cur.token()?;
        let binary = match magic.as_slice() {
            b"P5" => true,
            b"P2" => false,
            other => {
                return Err(Error::Format(format!(
                    "not a graymap (magic {:?})",
                    String::from_utf8_lossy(other)
                )))
            }
        };
        let width = cur.number("width")?;
        let height = cur.number("height")?;
        let maxval = cur.number("maxval")?;
        if width == 0 || height == 0 {
            return Err(Error::Format(format!("empty image {width}x{height}")));
        }
        if maxval == 0 || maxval > 65535 {
            return Err(Error::Format(format!("maxval {maxval} outside 1..=65535")));
        }
        let count = width * height;
        let samples = if binary {
            // Exactly one whitespace byte separates the header from the raster.
            cur.pos += 1;
            let wide = maxval > 255;
            let need = count * if wide { 2 } else { 1 };
            let raster = bytes
                .get(cur.pos..cur.pos + need)
                .ok_or_else(|| Error::Format(format!("raster truncated: need {need} bytes")))?;
            if wide {
                raster
                    .chunks_exact(2)
                    .map(|b| u16::from_be_bytes([b[0], b[1]]))
                    .collect()
            } else {
                raster.iter().map(|&b| u16::from(b)).collect()
            }
        } else {
            (0..count)
                .map(|_| cur.number("sample").map(|v| v as u16))
                .collect::<Result<Vec<_>>>()?
        };
        if let Some(&bad) = samples.iter().find(|&&s| usize::from(s) > maxval) {
            return Err(Error::Format(format!("sample {bad} exceeds maxval {maxval}")));
        }
        Ok(Self {
            width,
            height,
            maxval: maxval as u16,
            samples,
        })
    }
}

fn to_byte(v: f64) -> u8 {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    (v * 255.0).round() as u8
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<Vec<u8>> {
        self.skip_space();
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() || b == b'#' {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Format("unexpected end of header".into()));
        }
        Ok(self.bytes[start..self.pos].to_vec())
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        std::str::from_utf8(&tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| {
                Error::Format(format!("bad {what}: {:?}", String::from_utf8_lossy(&tok)))
            })
    }
}

pub fn read_pgm(path: &Path) -> Result<Pgm> {
    Pgm::decode(&fs::read(path)?)
}

pub fn write_pgm(path: &Path, img: &Pgm) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&img.encode())?;
    Ok(())
}
