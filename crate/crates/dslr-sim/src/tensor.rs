//! Dense fixed-point tensors and their on-disk format.
//!
//! The file format is a one-line ASCII header followed by raw
//! little-endian 16-bit words:
//!
//! ```text
//! dslr-tensor dims=3,32,32 width=16 scale=0
//! <dims product * 2 bytes of LE i16>
//! ```
//!
//! Element `i` has value `2^scale * raw_i / 2^(width-1)`. Tensors wider
//! than 16 bits (accumulated outputs) are truncated toward zero to 16-bit
//! words on write; 16-bit tensors round-trip exactly.

use crate::dyadic::Dyadic;
use crate::sd::Fixed;
use rand::Rng;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape/data mismatch: {dims:?} holds {expect} elements, got {got}")]
    ShapeMismatch {
        dims: Vec<usize>,
        expect: usize,
        got: usize,
    },
    #[error("tensor width {0} unsupported (need 2..=62)")]
    BadWidth(u32),
    #[error("raw value {0} does not fit width {1}")]
    RawOutOfRange(i64, u32),
    #[error("bad tensor header: {0}")]
    BadHeader(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A dense tensor of same-width fixed-point values with a shared scale
/// exponent: element value = `2^scale_exp * raw / 2^(width-1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorFx {
    dims: Vec<usize>,
    width: u32,
    scale_exp: i32,
    raw: Vec<i64>,
}

impl TensorFx {
    pub fn zeros(dims: &[usize], width: u32) -> Self {
        let len = dims.iter().product();
        TensorFx {
            dims: dims.to_vec(),
            width,
            scale_exp: 0,
            raw: vec![0; len],
        }
    }

    pub fn from_raw(
        dims: &[usize],
        width: u32,
        scale_exp: i32,
        raw: Vec<i64>,
    ) -> Result<Self, TensorError> {
        if !(2..=62).contains(&width) {
            return Err(TensorError::BadWidth(width));
        }
        let expect: usize = dims.iter().product();
        if raw.len() != expect {
            return Err(TensorError::ShapeMismatch {
                dims: dims.to_vec(),
                expect,
                got: raw.len(),
            });
        }
        let hi = 1i64 << (width - 1);
        for &v in &raw {
            if v < -hi || v >= hi {
                return Err(TensorError::RawOutOfRange(v, width));
            }
        }
        Ok(TensorFx {
            dims: dims.to_vec(),
            width,
            scale_exp,
            raw,
        })
    }

    /// Uniform random raw words over the full two's-complement range.
    pub fn random<R: Rng>(dims: &[usize], width: u32, rng: &mut R) -> Self {
        let len: usize = dims.iter().product();
        let hi = 1i64 << (width - 1);
        let raw = (0..len).map(|_| rng.gen_range(-hi..hi)).collect();
        TensorFx {
            dims: dims.to_vec(),
            width,
            scale_exp: 0,
            raw,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn scale_exp(&self) -> i32 {
        self.scale_exp
    }

    pub fn set_scale_exp(&mut self, scale_exp: i32) {
        self.scale_exp = scale_exp;
    }

    pub fn raw(&self) -> &[i64] {
        &self.raw
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut off = 0;
        for (i, (&x, &d)) in idx.iter().zip(&self.dims).enumerate() {
            debug_assert!(x < d, "index {idx:?} out of bounds {:?} at axis {i}", self.dims);
            off = off * d + x;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> i64 {
        self.raw[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: i64) {
        let off = self.offset(idx);
        self.raw[off] = v;
    }

    pub fn fixed_at(&self, idx: &[usize]) -> Fixed {
        Fixed::new(self.get(idx), self.width).expect("tensor invariant")
    }

    pub fn value_at(&self, idx: &[usize]) -> Dyadic {
        Dyadic::from_scaled(self.get(idx) as i128, self.width - 1).mul_pow2(self.scale_exp)
    }

    /// Serialize as header + LE 16-bit payload; wider tensors are truncated
    /// toward zero to 16-bit words at the same scale.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), TensorError> {
        let dims = self
            .dims
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "dslr-tensor dims={dims} width=16 scale={}", self.scale_exp)?;
        for &v in &self.raw {
            let q: i16 = if self.width <= 16 {
                (v << (16 - self.width)) as i16
            } else {
                (v / (1i64 << (self.width - 16))) as i16
            };
            w.write_all(&q.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), TensorError> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, TensorError> {
        let mut header = Vec::new();
        let mut byte = [0u8; 1];
        loop {
            r.read_exact(&mut byte)?;
            if byte[0] == b'\n' {
                break;
            }
            header.push(byte[0]);
            if header.len() > 256 {
                return Err(TensorError::BadHeader("unterminated header line".into()));
            }
        }
        let header = String::from_utf8(header)
            .map_err(|_| TensorError::BadHeader("header is not UTF-8".into()))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("dslr-tensor") {
            return Err(TensorError::BadHeader(format!(
                "missing magic, got {header:?}"
            )));
        }
        let mut dims: Option<Vec<usize>> = None;
        let mut width: Option<u32> = None;
        let mut scale: i32 = 0;
        for field in fields {
            let (key, val) = field
                .split_once('=')
                .ok_or_else(|| TensorError::BadHeader(format!("bad field {field:?}")))?;
            match key {
                "dims" => {
                    dims = Some(
                        val.split(',')
                            .map(|d| d.parse::<usize>())
                            .collect::<Result<_, _>>()
                            .map_err(|e| TensorError::BadHeader(format!("dims: {e}")))?,
                    )
                }
                "width" => {
                    width = Some(
                        val.parse()
                            .map_err(|e| TensorError::BadHeader(format!("width: {e}")))?,
                    )
                }
                "scale" => {
                    scale = val
                        .parse()
                        .map_err(|e| TensorError::BadHeader(format!("scale: {e}")))?
                }
                other => return Err(TensorError::BadHeader(format!("unknown field {other:?}"))),
            }
        }
        let dims = dims.ok_or_else(|| TensorError::BadHeader("missing dims".into()))?;
        let width = width.ok_or_else(|| TensorError::BadHeader("missing width".into()))?;
        if width != 16 {
            return Err(TensorError::BadHeader(format!(
                "payload width {width} unsupported (16-bit words only)"
            )));
        }
        let len: usize = dims.iter().product();
        let mut buf = vec![0u8; len * 2];
        r.read_exact(&mut buf)?;
        let raw = buf
            .chunks_exact(2)
            .map(|b| i16::from_le_bytes([b[0], b[1]]) as i64)
            .collect();
        Ok(TensorFx {
            dims,
            width: 16,
            scale_exp: scale,
            raw,
        })
    }

    pub fn load(path: &Path) -> Result<Self, TensorError> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}
