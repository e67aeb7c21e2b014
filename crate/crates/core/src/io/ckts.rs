//! CKTS: a small self-describing little-endian container for the objects of
//! this crate.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "CKTS"
//!      4     2  version (u16) = 1
//!      6     1  dtype (u8): 0 = complex f32 pairs, 1 = complex f64 pairs
//!      7     1  kind (u8): 0 image sequence, 1 k-t samples, 2 coil maps,
//!                         3 mask (u8 booleans), 4 temporal difference image
//!      8    16  dims nx, ny, nt, nc (u32 each, unused = 1)
//!     24     8  seed (u64, 0 if not applicable)
//!     32     -  payload, x fastest, then y, t, coil; real then imaginary
//! ```
//!
//! Masks store one byte per element regardless of `dtype`. For a difference
//! image the `nt` slot holds its column count.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::imaging::{CoilSensitivities, DiffImage, ImageSequence, KtData, SamplingMask};
use crate::C64;

pub const MAGIC: [u8; 4] = *b"CKTS";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    Complex32 = 0,
    Complex64 = 1,
}

impl Dtype {
    fn element_size(self) -> usize {
        match self {
            Dtype::Complex32 => 8,
            Dtype::Complex64 => 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Image = 0,
    Samples = 1,
    Sensitivities = 2,
    Mask = 3,
    Diff = 4,
}

impl Kind {
    fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => Kind::Image,
            1 => Kind::Samples,
            2 => Kind::Sensitivities,
            3 => Kind::Mask,
            4 => Kind::Diff,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CktsHeader {
    pub dtype: Dtype,
    pub kind: Kind,
    pub dims: [u32; 4],
    pub seed: u64,
}

/// Multi-coil k-t samples as stored on disk; pair with a mask through
/// [`KtSamples::into_kt_data`].
#[derive(Debug, Clone, PartialEq)]
pub struct KtSamples {
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
    pub nc: usize,
    pub samples: Vec<C64>,
}

impl KtSamples {
    pub fn into_kt_data(self, mask: SamplingMask) -> Result<KtData> {
        if (mask.nx(), mask.ny(), mask.nt()) != (self.nx, self.ny, self.nt) {
            return Err(Error::invalid(format!(
                "mask is {}x{}x{}, samples are {}x{}x{}",
                mask.nx(),
                mask.ny(),
                mask.nt(),
                self.nx,
                self.ny,
                self.nt
            )));
        }
        KtData::new(self.samples, mask, self.nc)
    }
}

impl From<&KtData> for KtSamples {
    fn from(y: &KtData) -> Self {
        Self {
            nx: y.nx(),
            ny: y.ny(),
            nt: y.nt(),
            nc: y.nc(),
            samples: y.samples().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CktsObject {
    Image(ImageSequence),
    Samples(KtSamples),
    Sensitivities(CoilSensitivities),
    Mask(SamplingMask),
    Diff(DiffImage),
}

impl CktsObject {
    pub fn kind(&self) -> Kind {
        match self {
            CktsObject::Image(_) => Kind::Image,
            CktsObject::Samples(_) => Kind::Samples,
            CktsObject::Sensitivities(_) => Kind::Sensitivities,
            CktsObject::Mask(_) => Kind::Mask,
            CktsObject::Diff(_) => Kind::Diff,
        }
    }

    fn dims(&self) -> [usize; 4] {
        match self {
            CktsObject::Image(x) => [x.nx(), x.ny(), x.nt(), 1],
            CktsObject::Samples(s) => [s.nx, s.ny, s.nt, s.nc],
            CktsObject::Sensitivities(s) => [s.nx(), s.ny(), 1, s.nc()],
            CktsObject::Mask(m) => [m.nx(), m.ny(), m.nt(), 1],
            CktsObject::Diff(d) => [d.nx(), d.ny(), d.nt() - 1, 1],
        }
    }

    fn complex_payload(&self) -> Option<&[C64]> {
        match self {
            CktsObject::Image(x) => Some(x.data().as_slice()),
            CktsObject::Samples(s) => Some(&s.samples),
            CktsObject::Sensitivities(s) => Some(s.maps()),
            CktsObject::Diff(d) => Some(d.data().as_slice()),
            CktsObject::Mask(_) => None,
        }
    }
}

impl From<ImageSequence> for CktsObject {
    fn from(x: ImageSequence) -> Self {
        CktsObject::Image(x)
    }
}

impl From<&KtData> for CktsObject {
    fn from(y: &KtData) -> Self {
        CktsObject::Samples(y.into())
    }
}

impl From<KtSamples> for CktsObject {
    fn from(s: KtSamples) -> Self {
        CktsObject::Samples(s)
    }
}

impl From<CoilSensitivities> for CktsObject {
    fn from(s: CoilSensitivities) -> Self {
        CktsObject::Sensitivities(s)
    }
}

impl From<SamplingMask> for CktsObject {
    fn from(m: SamplingMask) -> Self {
        CktsObject::Mask(m)
    }
}

impl From<DiffImage> for CktsObject {
    fn from(d: DiffImage) -> Self {
        CktsObject::Diff(d)
    }
}

/// Serializes `obj` to bytes.
pub fn encode_ckts(obj: &CktsObject, dtype: Dtype, seed: u64) -> Result<Vec<u8>> {
    let dims = obj.dims();
    let mut dims32 = [0u32; 4];
    for (d, &n) in dims32.iter_mut().zip(&dims) {
        *d = u32::try_from(n).map_err(|_| Error::invalid(format!("dimension {n} does not fit in u32")))?;
    }
    let count = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    let count = count.ok_or_else(|| Error::invalid("element count overflows"))?;
    let element = if obj.kind() == Kind::Mask {
        1
    } else {
        dtype.element_size()
    };

    let mut out = Vec::with_capacity(HEADER_LEN + count * element);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(dtype as u8);
    out.push(obj.kind() as u8);
    for d in dims32 {
        out.extend_from_slice(&d.to_le_bytes());
    }
    out.extend_from_slice(&seed.to_le_bytes());

    match (obj, obj.complex_payload()) {
        (CktsObject::Mask(m), _) => out.extend(m.keep().iter().map(|&k| k as u8)),
        (_, Some(values)) => {
            for v in values {
                match dtype {
                    Dtype::Complex64 => {
                        out.extend_from_slice(&v.re.to_le_bytes());
                        out.extend_from_slice(&v.im.to_le_bytes());
                    }
                    Dtype::Complex32 => {
                        out.extend_from_slice(&(v.re as f32).to_le_bytes());
                        out.extend_from_slice(&(v.im as f32).to_le_bytes());
                    }
                }
            }
        }
        (_, None) => unreachable!("only masks lack a complex payload"),
    }
    debug_assert_eq!(out.len(), HEADER_LEN + count * element);
    Ok(out)
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        message: message.into(),
    }
}

pub fn decode_header(bytes: &[u8]) -> Result<CktsHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(format_err(
            bytes.len(),
            format!("truncated header ({} of {HEADER_LEN} bytes)", bytes.len()),
        ));
    }
    if bytes[0..4] != MAGIC {
        return Err(format_err(0, "bad magic, expected \"CKTS\""));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(format_err(4, format!("unsupported version {version}")));
    }
    let dtype = match bytes[6] {
        0 => Dtype::Complex32,
        1 => Dtype::Complex64,
        other => return Err(format_err(6, format!("unknown dtype code {other}"))),
    };
    let kind = Kind::from_code(bytes[7]).ok_or_else(|| format_err(7, format!("unknown kind code {}", bytes[7])))?;
    let mut dims = [0u32; 4];
    for (i, d) in dims.iter_mut().enumerate() {
        let o = 8 + 4 * i;
        *d = u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        if *d == 0 {
            return Err(format_err(o, "zero dimension"));
        }
    }
    let seed = u64::from_le_bytes(bytes[24..32].try_into().expect("8 bytes"));
    Ok(CktsHeader {
        dtype,
        kind,
        dims,
        seed,
    })
}

/// Parses bytes produced by [`encode_ckts`].
pub fn decode_ckts(bytes: &[u8]) -> Result<(CktsHeader, CktsObject)> {
    let header = decode_header(bytes)?;
    let [nx, ny, nt, nc] = header.dims.map(|d| d as usize);
    let count = [nx, ny, nt, nc]
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::invalid("element count overflows"))?;
    let element = if header.kind == Kind::Mask {
        1
    } else {
        header.dtype.element_size()
    };
    let expected = count
        .checked_mul(element)
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::invalid("payload size overflows"))?;
    if bytes.len() < expected {
        return Err(format_err(
            bytes.len(),
            format!("truncated payload: file has {} bytes, expected {expected}", bytes.len()),
        ));
    }
    if bytes.len() > expected {
        return Err(format_err(
            expected,
            format!("{} trailing bytes", bytes.len() - expected),
        ));
    }
    let payload = &bytes[HEADER_LEN..];

    let complex = || -> Vec<C64> {
        match header.dtype {
            Dtype::Complex64 => payload
                .chunks_exact(16)
                .map(|c| {
                    C64::new(
                        f64::from_le_bytes(c[0..8].try_into().expect("8 bytes")),
                        f64::from_le_bytes(c[8..16].try_into().expect("8 bytes")),
                    )
                })
                .collect(),
            Dtype::Complex32 => payload
                .chunks_exact(8)
                .map(|c| {
                    C64::new(
                        f32::from_le_bytes(c[0..4].try_into().expect("4 bytes")) as f64,
                        f32::from_le_bytes(c[4..8].try_into().expect("4 bytes")) as f64,
                    )
                })
                .collect(),
        }
    };
    let single = |axis: usize, name: &str| -> Result<()> {
        if header.dims[axis] != 1 {
            return Err(format_err(8 + 4 * axis, format!("{name} must be 1 for this kind")));
        }
        Ok(())
    };

    let object = match header.kind {
        Kind::Image => {
            single(3, "nc")?;
            CktsObject::Image(ImageSequence::new(nx, ny, DMatrix::from_vec(nx * ny, nt, complex()))?)
        }
        Kind::Diff => {
            single(3, "nc")?;
            CktsObject::Diff(DiffImage::new(nx, ny, DMatrix::from_vec(nx * ny, nt, complex()))?)
        }
        Kind::Samples => CktsObject::Samples(KtSamples {
            nx,
            ny,
            nt,
            nc,
            samples: complex(),
        }),
        Kind::Sensitivities => {
            single(2, "nt")?;
            let maps = complex();
            let sens = match header.dtype {
                Dtype::Complex64 => CoilSensitivities::new(nx, ny, nc, maps)?,
                Dtype::Complex32 => CoilSensitivities::normalized(nx, ny, nc, maps)?,
            };
            CktsObject::Sensitivities(sens)
        }
        Kind::Mask => {
            single(3, "nc")?;
            let mut keep = Vec::with_capacity(count);
            for (i, &b) in payload.iter().enumerate() {
                match b {
                    0 => keep.push(false),
                    1 => keep.push(true),
                    other => return Err(format_err(HEADER_LEN + i, format!("mask byte {other} is not 0 or 1"))),
                }
            }
            CktsObject::Mask(SamplingMask::from_pattern(nx, ny, nt, keep)?)
        }
    };
    Ok((header, object))
}

/// Writes `obj` in double precision.
pub fn write_ckts(path: impl AsRef<Path>, obj: &CktsObject, seed: u64) -> Result<()> {
    write_ckts_as(path, obj, Dtype::Complex64, seed)
}

pub fn write_ckts_as(path: impl AsRef<Path>, obj: &CktsObject, dtype: Dtype, seed: u64) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_ckts(obj, dtype, seed)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_ckts(path: impl AsRef<Path>) -> Result<(CktsHeader, CktsObject)> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_ckts(&bytes)
}

fn wrong_kind(path: &Path, want: &str, got: Kind) -> Error {
    Error::Format {
        offset: 7,
        message: format!("{}: expected {want}, found kind {:?}", path.display(), got),
    }
}

pub fn read_image(path: impl AsRef<Path>) -> Result<ImageSequence> {
    let path = path.as_ref();
    match read_ckts(path)?.1 {
        CktsObject::Image(x) => Ok(x),
        other => Err(wrong_kind(path, "an image sequence", other.kind())),
    }
}

pub fn read_sensitivities(path: impl AsRef<Path>) -> Result<CoilSensitivities> {
    let path = path.as_ref();
    match read_ckts(path)?.1 {
        CktsObject::Sensitivities(s) => Ok(s),
        other => Err(wrong_kind(path, "coil sensitivities", other.kind())),
    }
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<SamplingMask> {
    let path = path.as_ref();
    match read_ckts(path)?.1 {
        CktsObject::Mask(m) => Ok(m),
        other => Err(wrong_kind(path, "a sampling mask", other.kind())),
    }
}

/// Reads k-t samples and pairs them with the mask stored next to them.
pub fn read_kt_data(samples_path: impl AsRef<Path>, mask_path: impl AsRef<Path>) -> Result<KtData> {
    let path = samples_path.as_ref();
    let samples = match read_ckts(path)?.1 {
        CktsObject::Samples(s) => s,
        other => return Err(wrong_kind(path, "k-t samples", other.kind())),
    };
    samples.into_kt_data(read_mask(mask_path)?)
}
