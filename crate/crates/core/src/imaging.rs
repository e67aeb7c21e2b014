//! Casorati-matrix image sequences, multi-coil k-t data and the linear
//! operators of the acquisition model.
//!
//! Pixel `(x, y)` of a frame is stored at row `x + nx * y` of the Casorati
//! matrix; column `t` is frame `t`. All multi-dimensional arrays in this module
//! are flat vectors in x-fastest, then y, then t, then coil order, which is
//! also the CKTS payload order.
//!
//! Spatial and temporal Fourier transforms are unitary (`1/sqrt(N)` in both
//! directions), so with unit sum-of-squares coil maps and a fully sampled mask
//! `E^H E` is the identity. Mask indices refer to unshifted FFT bins: row
//! `j` of k-space holds frequency `j` for `j < ny/2` and `j - ny` otherwise.

use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::C64;

/// Complex space-time (Casorati) matrix: `nx * ny` rows, `nt` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSequence {
    data: DMatrix<C64>,
    nx: usize,
    ny: usize,
}

impl ImageSequence {
    pub fn new(nx: usize, ny: usize, data: DMatrix<C64>) -> Result<Self> {
        if nx == 0 || ny == 0 || data.ncols() == 0 {
            return Err(Error::invalid(format!(
                "image sequence dimensions must be positive (nx={nx}, ny={ny}, nt={})",
                data.ncols()
            )));
        }
        if data.nrows() != nx * ny {
            return Err(Error::invalid(format!(
                "pixel axis: matrix has {} rows, expected nx*ny = {}",
                data.nrows(),
                nx * ny
            )));
        }
        Ok(Self { data, nx, ny })
    }

    pub fn zeros(nx: usize, ny: usize, nt: usize) -> Self {
        assert!(nx > 0 && ny > 0 && nt > 0, "dimensions must be positive");
        Self {
            data: DMatrix::zeros(nx * ny, nt),
            nx,
            ny,
        }
    }

    /// Builds a sequence from a function of `(x, y, t)`.
    pub fn from_fn(nx: usize, ny: usize, nt: usize, mut f: impl FnMut(usize, usize, usize) -> C64) -> Self {
        assert!(nx > 0 && ny > 0 && nt > 0, "dimensions must be positive");
        let data = DMatrix::from_fn(nx * ny, nt, |p, t| f(p % nx, p / nx, t));
        Self { data, nx, ny }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nt(&self) -> usize {
        self.data.ncols()
    }

    pub fn npix(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut DMatrix<C64> {
        &mut self.data
    }

    pub fn into_data(self) -> DMatrix<C64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize, t: usize) -> C64 {
        self.data[(x + self.nx * y, t)]
    }

    /// Vectorized frame `t`.
    pub fn frame(&self, t: usize) -> &[C64] {
        let n = self.npix();
        &self.data.as_slice()[t * n..(t + 1) * n]
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    /// Standard complex inner product `sum(conj(self) * other)`.
    pub fn dot(&self, other: &ImageSequence) -> C64 {
        self.data.dotc(&other.data)
    }

    pub fn same_shape(&self, other: &ImageSequence) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.nt() == other.nt()
    }

    pub(crate) fn check_same_shape(&self, other: &ImageSequence, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "{what}: shape {}x{}x{} does not match {}x{}x{}",
                other.nx,
                other.ny,
                other.nt(),
                self.nx,
                self.ny,
                self.nt()
            )))
        }
    }

    pub(crate) fn with_data(&self, data: DMatrix<C64>) -> Self {
        debug_assert_eq!(data.shape(), self.data.shape());
        Self {
            data,
            nx: self.nx,
            ny: self.ny,
        }
    }
}

/// Temporal differences `L D^T`: one column fewer than its sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffImage {
    data: DMatrix<C64>,
    nx: usize,
    ny: usize,
}

impl DiffImage {
    pub fn new(nx: usize, ny: usize, data: DMatrix<C64>) -> Result<Self> {
        if nx == 0 || ny == 0 || data.ncols() == 0 {
            return Err(Error::invalid("difference image dimensions must be positive"));
        }
        if data.nrows() != nx * ny {
            return Err(Error::invalid(format!(
                "pixel axis: matrix has {} rows, expected nx*ny = {}",
                data.nrows(),
                nx * ny
            )));
        }
        Ok(Self { data, nx, ny })
    }

    /// Zero differences for a sequence of `nt` frames.
    pub fn zeros(nx: usize, ny: usize, nt: usize) -> Result<Self> {
        if nt < 2 {
            return Err(Error::invalid(format!(
                "time axis: differences need at least 2 frames, got {nt}"
            )));
        }
        Self::new(nx, ny, DMatrix::zeros(nx * ny, nt - 1))
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Number of frames of the sequence this difference image belongs to.
    pub fn nt(&self) -> usize {
        self.data.ncols() + 1
    }

    pub fn data(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<C64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn dot(&self, other: &DiffImage) -> C64 {
        self.data.dotc(&other.data)
    }
}

/// Per-coil complex sensitivity maps, flat in x, y, coil order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoilSensitivities {
    maps: Vec<C64>,
    nx: usize,
    ny: usize,
    nc: usize,
}

impl CoilSensitivities {
    /// Tolerance on the per-pixel sum of squares.
    pub const NORMALIZATION_TOL: f64 = 1e-10;

    /// Wraps maps that already have unit sum-of-squares at every pixel.
    pub fn new(nx: usize, ny: usize, nc: usize, maps: Vec<C64>) -> Result<Self> {
        let sens = Self::unchecked(nx, ny, nc, maps)?;
        let npix = nx * ny;
        for p in 0..npix {
            let ss: f64 = (0..sens.nc).map(|c| sens.maps[p + npix * c].norm_sqr()).sum();
            if (ss - 1.0).abs() > Self::NORMALIZATION_TOL {
                return Err(Error::invalid(format!(
                    "coil axis: sum of squared sensitivities at pixel ({}, {}) is {ss}, expected 1",
                    p % nx,
                    p / nx
                )));
            }
        }
        Ok(sens)
    }

    /// Normalizes raw maps pixel-wise to unit sum-of-squares.
    pub fn normalized(nx: usize, ny: usize, nc: usize, mut maps: Vec<C64>) -> Result<Self> {
        Self::unchecked(nx, ny, nc, Vec::new())?;
        if maps.len() != nx * ny * nc {
            return Err(Error::invalid(format!(
                "coil axis: got {} map values, expected nx*ny*nc = {}",
                maps.len(),
                nx * ny * nc
            )));
        }
        let npix = nx * ny;
        for p in 0..npix {
            let ss: f64 = (0..nc).map(|c| maps[p + npix * c].norm_sqr()).sum();
            if !(ss > 0.0 && ss.is_finite()) {
                return Err(Error::invalid(format!(
                    "coil axis: sensitivities vanish at pixel ({}, {})",
                    p % nx,
                    p / nx
                )));
            }
            let inv = 1.0 / ss.sqrt();
            for c in 0..nc {
                maps[p + npix * c] *= inv;
            }
        }
        Self::new(nx, ny, nc, maps)
    }

    /// Single coil with unit sensitivity everywhere.
    pub fn uniform(nx: usize, ny: usize) -> Self {
        Self {
            maps: vec![C64::new(1.0, 0.0); nx * ny],
            nx,
            ny,
            nc: 1,
        }
    }

    fn unchecked(nx: usize, ny: usize, nc: usize, maps: Vec<C64>) -> Result<Self> {
        if nx == 0 || ny == 0 || nc == 0 {
            return Err(Error::invalid(format!(
                "sensitivity dimensions must be positive (nx={nx}, ny={ny}, nc={nc})"
            )));
        }
        if !maps.is_empty() && maps.len() != nx * ny * nc {
            return Err(Error::invalid(format!(
                "coil axis: got {} map values, expected nx*ny*nc = {}",
                maps.len(),
                nx * ny * nc
            )));
        }
        Ok(Self { maps, nx, ny, nc })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nc(&self) -> usize {
        self.nc
    }

    pub fn maps(&self) -> &[C64] {
        &self.maps
    }

    /// Map of coil `c`, flat in x-fastest order.
    pub fn coil(&self, c: usize) -> &[C64] {
        let n = self.nx * self.ny;
        &self.maps[c * n..(c + 1) * n]
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> C64 {
        self.maps[x + self.nx * y + self.nx * self.ny * c]
    }
}

/// Boolean k-t sampling pattern, flat in kx, ky, t order.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingMask {
    keep: Vec<bool>,
    nx: usize,
    ny: usize,
    nt: usize,
    acceleration: f64,
}

impl SamplingMask {
    /// Relative tolerance between nominal and realized acceleration.
    pub const ACCELERATION_TOL: f64 = 0.25;

    pub fn new(nx: usize, ny: usize, nt: usize, keep: Vec<bool>, acceleration: f64) -> Result<Self> {
        let mask = Self::from_pattern(nx, ny, nt, keep)?;
        if !(acceleration >= 1.0 && acceleration.is_finite()) {
            return Err(Error::invalid(format!(
                "acceleration must be a finite value >= 1, got {acceleration}"
            )));
        }
        let realized = mask.realized_acceleration();
        if (realized - acceleration).abs() > Self::ACCELERATION_TOL * acceleration {
            return Err(Error::invalid(format!(
                "realized acceleration {realized:.3} is not within 25% of nominal {acceleration}"
            )));
        }
        Ok(Self { acceleration, ..mask })
    }

    /// Mask whose nominal acceleration is its realized one.
    pub fn from_pattern(nx: usize, ny: usize, nt: usize, keep: Vec<bool>) -> Result<Self> {
        if nx == 0 || ny == 0 || nt == 0 {
            return Err(Error::invalid(format!(
                "mask dimensions must be positive (nx={nx}, ny={ny}, nt={nt})"
            )));
        }
        if keep.len() != nx * ny * nt {
            return Err(Error::invalid(format!(
                "mask has {} entries, expected nx*ny*nt = {}",
                keep.len(),
                nx * ny * nt
            )));
        }
        let npix = nx * ny;
        if let Some(t) = (0..nt).find(|&t| !keep[t * npix..(t + 1) * npix].iter().any(|&k| k)) {
            return Err(Error::invalid(format!("time axis: frame {t} has no sampled points")));
        }
        let mut mask = Self {
            keep,
            nx,
            ny,
            nt,
            acceleration: 1.0,
        };
        mask.acceleration = mask.realized_acceleration();
        Ok(mask)
    }

    pub fn full(nx: usize, ny: usize, nt: usize) -> Self {
        Self::from_pattern(nx, ny, nt, vec![true; nx * ny * nt]).expect("non-empty full mask")
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn keep(&self) -> &[bool] {
        &self.keep
    }

    pub fn is_sampled(&self, kx: usize, ky: usize, t: usize) -> bool {
        self.keep[kx + self.nx * (ky + self.ny * t)]
    }

    /// Nominal acceleration factor.
    pub fn acceleration(&self) -> f64 {
        self.acceleration
    }

    pub fn sample_count(&self) -> usize {
        self.keep.iter().filter(|&&k| k).count()
    }

    pub fn realized_acceleration(&self) -> f64 {
        self.keep.len() as f64 / self.sample_count() as f64
    }

    fn frame(&self, t: usize) -> &[bool] {
        let n = self.nx * self.ny;
        &self.keep[t * n..(t + 1) * n]
    }
}

/// Multi-coil k-t samples on the full Cartesian grid; zero wherever the mask
/// is false. Flat in kx, ky, t, coil order.
#[derive(Debug, Clone, PartialEq)]
pub struct KtData {
    samples: Vec<C64>,
    mask: SamplingMask,
    nc: usize,
}

impl KtData {
    pub fn new(samples: Vec<C64>, mask: SamplingMask, nc: usize) -> Result<Self> {
        if nc == 0 {
            return Err(Error::invalid("coil axis: nc must be positive"));
        }
        let per_coil = mask.keep.len();
        if samples.len() != per_coil * nc {
            return Err(Error::invalid(format!(
                "k-t data has {} samples, expected nx*ny*nt*nc = {}",
                samples.len(),
                per_coil * nc
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            if !mask.keep[i % per_coil] && *s != C64::new(0.0, 0.0) {
                return Err(Error::invalid(format!(
                    "k-t sample {i} is nonzero outside the sampling mask"
                )));
            }
        }
        Ok(Self { samples, mask, nc })
    }

    pub fn zeros(mask: SamplingMask, nc: usize) -> Self {
        let n = mask.keep.len() * nc;
        Self {
            samples: vec![C64::new(0.0, 0.0); n],
            mask,
            nc,
        }
    }

    pub fn nx(&self) -> usize {
        self.mask.nx
    }

    pub fn ny(&self) -> usize {
        self.mask.ny
    }

    pub fn nt(&self) -> usize {
        self.mask.nt
    }

    pub fn nc(&self) -> usize {
        self.nc
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }

    pub fn get(&self, kx: usize, ky: usize, t: usize, c: usize) -> C64 {
        self.samples[kx + self.nx() * (ky + self.ny() * (t + self.nt() * c))]
    }

    /// Length of the packed measurement vector (acquired samples times coils).
    pub fn packed_len(&self) -> usize {
        self.mask.sample_count() * self.nc
    }

    pub fn norm(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &KtData) -> C64 {
        self.samples.iter().zip(&other.samples).map(|(a, b)| a.conj() * b).sum()
    }

    /// Element-wise `self - other`; both must share the mask.
    pub fn sub(&self, other: &KtData) -> Result<KtData> {
        if self.mask != other.mask || self.nc != other.nc {
            return Err(Error::invalid("k-t data operands have different masks or coil counts"));
        }
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect();
        Ok(KtData {
            samples,
            mask: self.mask.clone(),
            nc: self.nc,
        })
    }

    /// Adds `noise(i)` to every acquired sample; off-mask entries stay zero.
    pub(crate) fn add_on_mask(&mut self, mut noise: impl FnMut() -> C64) {
        let per_coil = self.mask.keep.len();
        for (i, s) in self.samples.iter_mut().enumerate() {
            if self.mask.keep[i % per_coil] {
                *s += noise();
            }
        }
    }
}

/// Unitary 2-D DFT over one `nx * ny` frame stored x-fastest.
#[derive(Clone)]
struct Fft2 {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl Fft2 {
    fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
            scale: 1.0 / ((nx * ny) as f64).sqrt(),
        }
    }

    fn forward(&self, buf: &mut [C64], tmp: &mut [C64]) {
        self.apply(buf, tmp, &self.fwd_x, &self.fwd_y);
    }

    fn inverse(&self, buf: &mut [C64], tmp: &mut [C64]) {
        self.apply(buf, tmp, &self.inv_x, &self.inv_y);
    }

    fn apply(&self, buf: &mut [C64], tmp: &mut [C64], along_x: &Arc<dyn Fft<f64>>, along_y: &Arc<dyn Fft<f64>>) {
        let (nx, ny) = (self.nx, self.ny);
        along_x.process(buf);
        for y in 0..ny {
            for x in 0..nx {
                tmp[y + ny * x] = buf[x + nx * y];
            }
        }
        along_y.process(tmp);
        for x in 0..nx {
            for y in 0..ny {
                buf[x + nx * y] = tmp[y + ny * x] * self.scale;
            }
        }
    }
}

/// The encoding operator `E = F_u S_c` for fixed coil maps and mask, with
/// FFT plans built once.
#[derive(Clone)]
pub struct EncodingOperator {
    sens: CoilSensitivities,
    mask: SamplingMask,
    fft: Fft2,
}

impl std::fmt::Debug for EncodingOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EncodingOperator")
            .field("nx", &self.sens.nx)
            .field("ny", &self.sens.ny)
            .field("nt", &self.mask.nt)
            .field("nc", &self.sens.nc)
            .finish()
    }
}

impl EncodingOperator {
    pub fn new(sens: CoilSensitivities, mask: SamplingMask) -> Result<Self> {
        if sens.nx != mask.nx {
            return Err(Error::invalid(format!(
                "x axis: sensitivities have nx={}, mask has nx={}",
                sens.nx, mask.nx
            )));
        }
        if sens.ny != mask.ny {
            return Err(Error::invalid(format!(
                "y axis: sensitivities have ny={}, mask has ny={}",
                sens.ny, mask.ny
            )));
        }
        let fft = Fft2::new(sens.nx, sens.ny);
        Ok(Self { sens, mask, fft })
    }

    pub fn sensitivities(&self) -> &CoilSensitivities {
        &self.sens
    }

    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }

    fn check_image(&self, x: &ImageSequence) -> Result<()> {
        let axes = [
            ("x", x.nx, self.mask.nx),
            ("y", x.ny, self.mask.ny),
            ("time", x.nt(), self.mask.nt),
        ];
        for (axis, got, want) in axes {
            if got != want {
                return Err(Error::invalid(format!(
                    "{axis} axis: image has {got} entries, operator expects {want}"
                )));
            }
        }
        Ok(())
    }

    pub fn forward(&self, x: &ImageSequence) -> Result<KtData> {
        self.check_image(x)?;
        let npix = x.npix();
        let nt = x.nt();
        let nc = self.sens.nc;
        let mut samples = vec![C64::new(0.0, 0.0); npix * nt * nc];
        let mut buf = vec![C64::new(0.0, 0.0); npix];
        let mut tmp = vec![C64::new(0.0, 0.0); npix];
        for c in 0..nc {
            let coil = self.sens.coil(c);
            for t in 0..nt {
                for ((b, s), v) in buf.iter_mut().zip(coil).zip(x.frame(t)) {
                    *b = s * v;
                }
                self.fft.forward(&mut buf, &mut tmp);
                let out = &mut samples[npix * (t + nt * c)..npix * (t + 1 + nt * c)];
                for ((o, b), &k) in out.iter_mut().zip(&buf).zip(self.mask.frame(t)) {
                    if k {
                        *o = *b;
                    }
                }
            }
        }
        Ok(KtData {
            samples,
            mask: self.mask.clone(),
            nc,
        })
    }

    pub fn adjoint(&self, y: &KtData) -> Result<ImageSequence> {
        if y.nx() != self.mask.nx || y.ny() != self.mask.ny || y.nt() != self.mask.nt {
            return Err(Error::invalid(format!(
                "k-t data is {}x{}x{}, operator expects {}x{}x{}",
                y.nx(),
                y.ny(),
                y.nt(),
                self.mask.nx,
                self.mask.ny,
                self.mask.nt
            )));
        }
        if y.nc != self.sens.nc {
            return Err(Error::invalid(format!(
                "coil axis: k-t data has {} coils, sensitivities have {}",
                y.nc, self.sens.nc
            )));
        }
        let (nx, ny, nt, nc) = (self.mask.nx, self.mask.ny, self.mask.nt, self.sens.nc);
        let npix = nx * ny;
        let mut out = DMatrix::<C64>::zeros(npix, nt);
        let mut buf = vec![C64::new(0.0, 0.0); npix];
        let mut tmp = vec![C64::new(0.0, 0.0); npix];
        for t in 0..nt {
            let keep = self.mask.frame(t);
            let mut col = out.column_mut(t);
            // Coils are accumulated in ascending order.
            for c in 0..nc {
                let src = &y.samples[npix * (t + nt * c)..npix * (t + 1 + nt * c)];
                for ((b, s), &k) in buf.iter_mut().zip(src).zip(keep) {
                    *b = if k { *s } else { C64::new(0.0, 0.0) };
                }
                self.fft.inverse(&mut buf, &mut tmp);
                for ((o, s), b) in col.iter_mut().zip(self.sens.coil(c)).zip(&buf) {
                    *o += s.conj() * b;
                }
            }
        }
        Ok(ImageSequence { data: out, nx, ny })
    }
}

/// `E(x)`: coil weighting, unitary 2-D FFT per frame, then masking.
pub fn encode(x: &ImageSequence, sens: &CoilSensitivities, mask: &SamplingMask) -> Result<KtData> {
    EncodingOperator::new(sens.clone(), mask.clone())?.forward(x)
}

/// `E^H(y)`: inverse FFT of the masked samples, combined with conjugate coil
/// weights.
pub fn adjoint_encode(y: &KtData, sens: &CoilSensitivities) -> Result<ImageSequence> {
    EncodingOperator::new(sens.clone(), y.mask.clone())?.adjoint(y)
}

/// Unitary DFT along the time axis of every pixel.
#[derive(Clone)]
pub struct TemporalFft {
    nt: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for TemporalFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TemporalFft").field("nt", &self.nt).finish()
    }
}

impl TemporalFft {
    pub fn new(nt: usize) -> Self {
        assert!(nt > 0, "nt must be positive");
        let mut planner = FftPlanner::new();
        Self {
            nt,
            fwd: planner.plan_fft_forward(nt),
            inv: planner.plan_fft_inverse(nt),
            scale: 1.0 / (nt as f64).sqrt(),
        }
    }

    pub fn forward(&self, x: &ImageSequence) -> Result<ImageSequence> {
        self.apply(x, &self.fwd)
    }

    pub fn inverse(&self, z: &ImageSequence) -> Result<ImageSequence> {
        self.apply(z, &self.inv)
    }

    fn apply(&self, x: &ImageSequence, fft: &Arc<dyn Fft<f64>>) -> Result<ImageSequence> {
        if x.nt() != self.nt {
            return Err(Error::invalid(format!(
                "time axis: sequence has {} frames, transform expects {}",
                x.nt(),
                self.nt
            )));
        }
        // Each column of the transpose is one pixel's time series.
        let mut series = x.data.transpose();
        fft.process(series.as_mut_slice());
        series *= C64::new(self.scale, 0.0);
        Ok(x.with_data(series.transpose()))
    }
}

pub fn temporal_fft(x: &ImageSequence) -> ImageSequence {
    TemporalFft::new(x.nt())
        .forward(x)
        .expect("plan matches sequence length")
}

pub fn temporal_ifft(z: &ImageSequence) -> ImageSequence {
    TemporalFft::new(z.nt())
        .inverse(z)
        .expect("plan matches sequence length")
}

/// `L D^T`: column `t` is frame `t + 1` minus frame `t`.
pub fn diff_apply(l: &ImageSequence) -> Result<DiffImage> {
    let nt = l.nt();
    if nt < 2 {
        return Err(Error::invalid(format!(
            "time axis: temporal differences need at least 2 frames, got {nt}"
        )));
    }
    let d = l.data.columns(1, nt - 1) - l.data.columns(0, nt - 1);
    Ok(DiffImage {
        data: d,
        nx: l.nx,
        ny: l.ny,
    })
}

/// `Phi D`, the adjoint of [`diff_apply`].
pub fn diff_adjoint(phi: &DiffImage) -> ImageSequence {
    let m = phi.data.ncols();
    let nt = m + 1;
    let mut out = DMatrix::<C64>::zeros(phi.data.nrows(), nt);
    for t in 0..m {
        let col = phi.data.column(t);
        out.column_mut(t).axpy(C64::new(-1.0, 0.0), &col, C64::new(1.0, 0.0));
        out.column_mut(t + 1).axpy(C64::new(1.0, 0.0), &col, C64::new(1.0, 0.0));
    }
    ImageSequence {
        data: out,
        nx: phi.nx,
        ny: phi.ny,
    }
}

/// [`diff_adjoint`] with a check that `phi` belongs to an `nt`-frame sequence.
pub fn diff_adjoint_for(phi: &DiffImage, nt: usize) -> Result<ImageSequence> {
    if phi.nt() != nt {
        return Err(Error::invalid(format!(
            "time axis: difference image has {} columns, expected {}",
            phi.data.ncols(),
            nt.saturating_sub(1)
        )));
    }
    Ok(diff_adjoint(phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_seq(rng: &mut ChaCha8Rng, nx: usize, ny: usize, nt: usize) -> ImageSequence {
        ImageSequence::from_fn(nx, ny, nt, |_, _, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn random_sens(rng: &mut ChaCha8Rng, nx: usize, ny: usize, nc: usize) -> CoilSensitivities {
        let maps = (0..nx * ny * nc)
            .map(|_| C64::new(rng.random_range(0.1..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        CoilSensitivities::normalized(nx, ny, nc, maps).unwrap()
    }

    fn random_mask(rng: &mut ChaCha8Rng, nx: usize, ny: usize, nt: usize) -> SamplingMask {
        let mut keep: Vec<bool> = (0..nx * ny * nt).map(|_| rng.random_bool(0.4)).collect();
        for t in 0..nt {
            keep[t * nx * ny] = true;
        }
        SamplingMask::from_pattern(nx, ny, nt, keep).unwrap()
    }

    #[test]
    fn encode_of_zero_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sens = random_sens(&mut rng, 6, 5, 3);
        let mask = random_mask(&mut rng, 6, 5, 4);
        let y = encode(&ImageSequence::zeros(6, 5, 4), &sens, &mask).unwrap();
        assert!(y.samples().iter().all(|s| *s == C64::new(0.0, 0.0)));
        let x = adjoint_encode(&KtData::zeros(mask, 3), &sens).unwrap();
        assert_eq!(x.norm(), 0.0);
    }

    #[test]
    fn full_sampling_single_coil_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_seq(&mut rng, 8, 6, 3);
        let sens = CoilSensitivities::uniform(8, 6);
        let mask = SamplingMask::full(8, 6, 3);
        let y = encode(&x, &sens, &mask).unwrap();
        assert!((y.norm() - x.norm()).abs() <= 1e-12 * x.norm());
        let back = adjoint_encode(&y, &sens).unwrap();
        assert!((back.data() - x.data()).norm() <= 1e-12 * x.norm());
    }

    #[test]
    fn full_sampling_multi_coil_normal_operator_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_seq(&mut rng, 7, 9, 2);
        let sens = random_sens(&mut rng, 7, 9, 4);
        let op = EncodingOperator::new(sens, SamplingMask::full(7, 9, 2)).unwrap();
        let back = op.adjoint(&op.forward(&x).unwrap()).unwrap();
        assert!((back.data() - x.data()).norm() <= 1e-10 * x.norm());
    }

    #[test]
    fn encode_matches_direct_dft() {
        // Direct O(N^2) DFT of one coil-weighted frame.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (nx, ny, nt, nc) = (5, 4, 2, 2);
        let x = random_seq(&mut rng, nx, ny, nt);
        let sens = random_sens(&mut rng, nx, ny, nc);
        let mask = random_mask(&mut rng, nx, ny, nt);
        let y = encode(&x, &sens, &mask).unwrap();
        let scale = 1.0 / ((nx * ny) as f64).sqrt();
        for c in 0..nc {
            for t in 0..nt {
                for ky in 0..ny {
                    for kx in 0..nx {
                        let mut acc = C64::new(0.0, 0.0);
                        for yy in 0..ny {
                            for xx in 0..nx {
                                let phase = -2.0
                                    * std::f64::consts::PI
                                    * ((kx * xx) as f64 / nx as f64 + (ky * yy) as f64 / ny as f64);
                                acc += sens.get(xx, yy, c) * x.get(xx, yy, t) * C64::from_polar(1.0, phase);
                            }
                        }
                        let want = if mask.is_sampled(kx, ky, t) {
                            acc * scale
                        } else {
                            C64::new(0.0, 0.0)
                        };
                        assert!((y.get(kx, ky, t, c) - want).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn dimension_mismatch_names_axis() {
        let sens = CoilSensitivities::uniform(4, 4);
        let mask = SamplingMask::full(4, 4, 3);
        let err = encode(&ImageSequence::zeros(4, 4, 2), &sens, &mask).unwrap_err();
        assert!(err.to_string().contains("time axis"), "{err}");
        let err = encode(&ImageSequence::zeros(5, 4, 3), &sens, &mask).unwrap_err();
        assert!(err.to_string().contains("x axis"), "{err}");
        let mask5 = SamplingMask::full(4, 5, 3);
        let err = EncodingOperator::new(sens, mask5).unwrap_err();
        assert!(err.to_string().contains("y axis"), "{err}");
    }

    #[test]
    fn constant_in_time_goes_to_dc_bin() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let frame: Vec<C64> = (0..12).map(|_| C64::new(rng.random(), rng.random())).collect();
        let x = ImageSequence::from_fn(4, 3, 6, |i, j, _| frame[i + 4 * j]);
        let z = temporal_fft(&x);
        for (p, v) in frame.iter().enumerate() {
            assert!((z.data()[(p, 0)] - v * 6f64.sqrt()).norm() < 1e-12);
            for t in 1..6 {
                assert!(z.data()[(p, t)].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn temporal_fft_round_trip_and_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_seq(&mut rng, 5, 3, 7);
        let z = temporal_fft(&x);
        assert!((z.norm() - x.norm()).abs() <= 1e-12 * x.norm());
        let back = temporal_ifft(&z);
        assert!((back.data() - x.data()).norm() <= 1e-12 * x.norm());
    }

    #[test]
    fn single_frame_temporal_transform_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_seq(&mut rng, 3, 3, 1);
        assert_eq!(temporal_fft(&x), x);
        assert!(diff_apply(&x).is_err());
    }

    #[test]
    fn diff_of_identical_columns_is_zero() {
        let x = ImageSequence::from_fn(3, 2, 5, |i, j, _| C64::new(i as f64, j as f64));
        assert_eq!(diff_apply(&x).unwrap().norm(), 0.0);
    }

    #[test]
    fn two_frame_diff_and_adjoint() {
        let x = ImageSequence::from_fn(2, 1, 2, |i, _, t| C64::new((i + 3 * t) as f64, t as f64));
        let d = diff_apply(&x).unwrap();
        assert_eq!(d.data().ncols(), 1);
        assert_eq!(d.data()[(0, 0)], C64::new(3.0, 1.0));
        assert_eq!(d.data()[(1, 0)], C64::new(3.0, 1.0));

        let v = DMatrix::from_column_slice(2, 1, &[C64::new(1.0, 2.0), C64::new(-1.0, 0.5)]);
        let back = diff_adjoint(&DiffImage::new(2, 1, v.clone()).unwrap());
        assert_eq!(back.nt(), 2);
        assert_eq!(back.data().column(0), -v.column(0));
        assert_eq!(back.data().column(1), v.column(0));
    }

    #[test]
    fn diff_adjoint_of_zero_is_zero() {
        let phi = DiffImage::zeros(3, 3, 4).unwrap();
        assert_eq!(diff_adjoint(&phi).norm(), 0.0);
        assert!(diff_adjoint_for(&phi, 5).is_err());
    }

    #[test]
    fn diff_energy_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = random_seq(&mut rng, 4, 4, 6);
        let d = diff_apply(&x).unwrap();
        let mut direct = 0.0;
        for t in 1..6 {
            for j in 0..4 {
                for i in 0..4 {
                    direct += (x.get(i, j, t) - x.get(i, j, t - 1)).norm_sqr();
                }
            }
        }
        assert!((d.norm().powi(2) - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn mask_rejects_empty_frame_and_bad_acceleration() {
        let mut keep = vec![true; 8];
        keep[4..].iter_mut().for_each(|k| *k = false);
        assert!(SamplingMask::from_pattern(2, 2, 2, keep).is_err());
        let keep = vec![true, false, false, false, true, false, false, false];
        assert!(SamplingMask::new(2, 2, 2, keep.clone(), 4.0).is_ok());
        assert!(SamplingMask::new(2, 2, 2, keep, 8.0).is_err());
    }

    #[test]
    fn kt_data_rejects_off_mask_samples() {
        let keep = vec![true, false];
        let mask = SamplingMask::from_pattern(2, 1, 1, keep).unwrap();
        let samples = vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
        assert!(KtData::new(samples, mask, 1).is_err());
    }

    #[test]
    fn sensitivities_must_be_normalized() {
        let maps = vec![C64::new(0.5, 0.0); 4];
        assert!(CoilSensitivities::new(2, 2, 1, maps.clone()).is_err());
        let s = CoilSensitivities::normalized(2, 2, 1, maps).unwrap();
        assert!(s.maps().iter().all(|m| (m.norm() - 1.0).abs() < 1e-15));
    }
}
