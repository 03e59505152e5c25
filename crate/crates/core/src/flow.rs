//! Dense motion fields and the Middlebury `.flo` container.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Sanity constant at the start of every `.flo` file ("PIEH" as bytes).
pub const FLO_MAGIC: f32 = 202021.25;

/// Components with a larger magnitude mark unknown flow.
pub const UNKNOWN_FLOW_THRESHOLD: f64 = 1e9;

const FLO_HEADER_BYTES: usize = 12;

/// Per-pixel displacement `(u, v)` in pixels/frame, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionField {
    width: usize,
    height: usize,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl MotionField {
    pub fn new(width: usize, height: usize, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let n = width * height;
        if u.len() != n || v.len() != n {
            return Err(Error::InvalidArgument(format!(
                "motion field {width}x{height} needs {n} samples per component, got u={} v={}",
                u.len(),
                v.len()
            )));
        }
        Ok(Self {
            width,
            height,
            u,
            v,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::constant(width, height, 0.0, 0.0)
    }

    pub fn constant(width: usize, height: usize, u: f64, v: f64) -> Self {
        Self {
            width,
            height,
            u: vec![u; width * height],
            v: vec![v; width * height],
        }
    }

    /// Builds a field by evaluating `f(x, y) -> (u, v)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> (f64, f64)) -> Self {
        let mut u = Vec::with_capacity(width * height);
        let mut v = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let (a, b) = f(x, y);
                u.push(a);
                v.push(b);
            }
        }
        Self {
            width,
            height,
            u,
            v,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn get(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.u[i], self.v[i])
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|c| c.is_finite())
    }

    /// Every vector multiplied by `a`.
    pub fn scaled(&self, a: f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            u: self.u.iter().map(|c| c * a).collect(),
            v: self.v.iter().map(|c| c * a).collect(),
        }
    }

    /// Every vector shifted by the constant `(du, dv)`.
    pub fn offset(&self, du: f64, dv: f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            u: self.u.iter().map(|c| c + du).collect(),
            v: self.v.iter().map(|c| c + dv).collect(),
        }
    }

    pub(crate) fn ensure_same_dims(&self, other: &MotionField) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::mismatch(self.dims(), other.dims()));
        }
        Ok(())
    }
}

/// A decoded `.flo` stream.
#[derive(Debug, Clone, PartialEq)]
pub struct FloRead {
    pub field: MotionField,
    /// Components that were non-finite or beyond [`UNKNOWN_FLOW_THRESHOLD`]
    /// and have been replaced by zero.
    pub replaced: usize,
}

pub fn read_flo<R: Read>(mut reader: R) -> Result<FloRead> {
    let mut header = [0u8; FLO_HEADER_BYTES];
    let mut got = 0;
    while got < header.len() {
        let n = reader.read(&mut header[got..])?;
        if n == 0 {
            break;
        }
        got += n;
    }
    if got < 4 {
        return Err(Error::FloTruncated {
            expected: FLO_HEADER_BYTES,
            actual: got,
        });
    }
    let magic = f32::from_le_bytes(header[0..4].try_into().unwrap());
    if magic != FLO_MAGIC {
        return Err(Error::FloMagic(magic));
    }
    if got < FLO_HEADER_BYTES {
        return Err(Error::FloTruncated {
            expected: FLO_HEADER_BYTES,
            actual: got,
        });
    }
    let width = i32::from_le_bytes(header[4..8].try_into().unwrap());
    let height = i32::from_le_bytes(header[8..12].try_into().unwrap());
    if width <= 0 || height <= 0 {
        return Err(Error::FloDimensions {
            width: width.into(),
            height: height.into(),
        });
    }
    let (width, height) = (width as usize, height as usize);
    let n = width
        .checked_mul(height)
        .filter(|n| *n <= (isize::MAX as usize) / 8)
        .ok_or(Error::FloDimensions {
            width: width as i64,
            height: height as i64,
        })?;

    let expected = n * 8;
    let mut payload = Vec::new();
    reader.take(expected as u64).read_to_end(&mut payload)?;
    if payload.len() < expected {
        return Err(Error::FloTruncated {
            expected: FLO_HEADER_BYTES + expected,
            actual: FLO_HEADER_BYTES + payload.len(),
        });
    }

    let mut replaced = 0;
    let mut clean = |raw: f32| {
        let c = f64::from(raw);
        if c.is_finite() && c.abs() <= UNKNOWN_FLOW_THRESHOLD {
            c
        } else {
            replaced += 1;
            0.0
        }
    };
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for chunk in payload.chunks_exact(8) {
        u.push(clean(f32::from_le_bytes(chunk[0..4].try_into().unwrap())));
        v.push(clean(f32::from_le_bytes(chunk[4..8].try_into().unwrap())));
    }
    if replaced > 0 {
        log::warn!("replaced {replaced} unknown/non-finite flow components with 0");
    }
    Ok(FloRead {
        field: MotionField {
            width,
            height,
            u,
            v,
        },
        replaced,
    })
}

/// Serializes `field` as little-endian `.flo`. Components are narrowed to
/// `f32`.
pub fn write_flo<W: Write>(field: &MotionField, mut out: W) -> Result<()> {
    let mut buf = Vec::with_capacity(FLO_HEADER_BYTES + field.len() * 8);
    buf.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    let dim = |d: usize| {
        i32::try_from(d).map_err(|_| Error::FloDimensions {
            width: field.width as i64,
            height: field.height as i64,
        })
    };
    buf.extend_from_slice(&dim(field.width)?.to_le_bytes());
    buf.extend_from_slice(&dim(field.height)?.to_le_bytes());
    for (i, (&u, &v)) in field.u.iter().zip(&field.v).enumerate() {
        let (nu, nv) = (u as f32, v as f32);
        if !nu.is_finite() || !nv.is_finite() {
            return Err(Error::NonFiniteFlow {
                x: i % field.width,
                y: i / field.width,
            });
        }
        buf.extend_from_slice(&nu.to_le_bytes());
        buf.extend_from_slice(&nv.to_le_bytes());
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

pub fn read_flo_file(path: &Path) -> Result<FloRead> {
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFlow(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    read_flo(std::io::BufReader::new(file))
}

pub fn write_flo_file(field: &MotionField, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_flo(field, std::io::BufWriter::new(file))
}
