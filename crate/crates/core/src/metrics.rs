//! Image quality metrics on magnitude sequences: SER, PSNR, SSIM and HFEN.
//!
//! A perfect reconstruction scores `(inf, inf, 1, 0)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::imaging::ImageSequence;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
pub const HFEN_KERNEL_SIZE: usize = 15;
pub const HFEN_SIGMA: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub ser_db: f64,
    pub psnr_db: f64,
    pub ssim: f64,
    pub hfen: f64,
    pub per_frame_psnr: Option<Vec<f64>>,
    pub per_frame_ssim: Option<Vec<f64>>,
}

/// Frame-wise magnitudes of `ref` and `rec` after shape and content checks.
struct Magnitudes {
    reference: DMatrix<f64>,
    recon: DMatrix<f64>,
    nx: usize,
    ny: usize,
}

impl Magnitudes {
    fn new(reference: &ImageSequence, recon: &ImageSequence) -> Result<Self> {
        reference.check_same_shape(recon, "reconstruction")?;
        let r = reference.data().map(|v| v.norm());
        if r.iter().all(|&v| v == 0.0) {
            return Err(Error::invalid("reference sequence is all zero"));
        }
        Ok(Self {
            reference: r,
            recon: recon.data().map(|v| v.norm()),
            nx: reference.nx(),
            ny: reference.ny(),
        })
    }

    fn nt(&self) -> usize {
        self.reference.ncols()
    }

    fn identical(&self) -> bool {
        self.reference == self.recon
    }

    fn peak(&self) -> f64 {
        self.reference.max()
    }

    fn frame(m: &DMatrix<f64>, t: usize) -> &[f64] {
        let n = m.nrows();
        &m.as_slice()[t * n..(t + 1) * n]
    }

    fn require_size(&self, min: usize, what: &str) -> Result<()> {
        if self.nx < min || self.ny < min {
            return Err(Error::invalid(format!(
                "{what} needs frames of at least {min}x{min}, got {}x{}",
                self.nx, self.ny
            )));
        }
        Ok(())
    }
}

/// Signal-to-error ratio `20 log10(|| |ref| || / || |ref| - |rec| ||)` in dB
/// over the whole sequence.
pub fn ser(reference: &ImageSequence, recon: &ImageSequence) -> Result<f64> {
    let m = Magnitudes::new(reference, recon)?;
    let err = (&m.reference - &m.recon).norm();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (m.reference.norm() / err).log10())
}

fn psnr_frames(m: &Magnitudes) -> Vec<f64> {
    let peak = m.peak();
    (0..m.nt())
        .map(|t| {
            let a = Magnitudes::frame(&m.reference, t);
            let b = Magnitudes::frame(&m.recon, t);
            let mse = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64;
            if mse == 0.0 {
                f64::INFINITY
            } else {
                10.0 * (peak * peak / mse).log10()
            }
        })
        .collect()
}

/// Mean of the finite entries; `inf` if every frame is exact.
fn mean_finite(values: &[f64]) -> f64 {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        f64::INFINITY
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    }
}

/// Frame-averaged PSNR in dB with the peak taken over the whole reference
/// sequence. Frames reproduced exactly are left out of the average.
pub fn psnr(reference: &ImageSequence, recon: &ImageSequence) -> Result<f64> {
    let m = Magnitudes::new(reference, recon)?;
    Ok(mean_finite(&psnr_frames(&m)))
}

fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let w: Vec<f64> = (0..size)
        .map(|i| (-(i as f64 - c).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Separable weighted sum over every fully contained window; output is
/// `(nx - size + 1) x (ny - size + 1)`, x-fastest.
fn filter_valid(img: &[f64], nx: usize, ny: usize, w: &[f64]) -> Vec<f64> {
    let k = w.len();
    let ox = nx - k + 1;
    let oy = ny - k + 1;
    let mut rows = vec![0.0; ox * ny];
    for y in 0..ny {
        for x in 0..ox {
            rows[x + ox * y] = (0..k).map(|i| w[i] * img[x + i + nx * y]).sum();
        }
    }
    let mut out = vec![0.0; ox * oy];
    for y in 0..oy {
        for x in 0..ox {
            out[x + ox * y] = (0..k).map(|j| w[j] * rows[x + ox * (y + j)]).sum();
        }
    }
    out
}

fn ssim_frame(a: &[f64], b: &[f64], nx: usize, ny: usize, w: &[f64], c1: f64, c2: f64) -> f64 {
    let sq = |v: &[f64]| v.iter().map(|x| x * x).collect::<Vec<_>>();
    let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let mu_a = filter_valid(a, nx, ny, w);
    let mu_b = filter_valid(b, nx, ny, w);
    let e_aa = filter_valid(&sq(a), nx, ny, w);
    let e_bb = filter_valid(&sq(b), nx, ny, w);
    let e_ab = filter_valid(&prod, nx, ny, w);
    let n = mu_a.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = e_aa[i] - ma * ma;
            let vb = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .sum();
    total / n as f64
}

fn ssim_frames(m: &Magnitudes) -> Vec<f64> {
    let w = gaussian_window(SSIM_WINDOW, SSIM_SIGMA);
    let range = m.peak();
    let c1 = (SSIM_K1 * range).powi(2);
    let c2 = (SSIM_K2 * range).powi(2);
    (0..m.nt())
        .map(|t| {
            let a = Magnitudes::frame(&m.reference, t);
            let b = Magnitudes::frame(&m.recon, t);
            if a == b {
                1.0
            } else {
                ssim_frame(a, b, m.nx, m.ny, &w, c1, c2)
            }
        })
        .collect()
}

/// Mean SSIM with an 11x11 Gaussian window (sigma 1.5) over fully contained
/// windows, dynamic range `max |ref|`, averaged over frames.
pub fn ssim(reference: &ImageSequence, recon: &ImageSequence) -> Result<f64> {
    let m = Magnitudes::new(reference, recon)?;
    m.require_size(SSIM_WINDOW, "SSIM")?;
    let frames = ssim_frames(&m);
    Ok(frames.iter().sum::<f64>() / frames.len() as f64)
}

/// Laplacian-of-Gaussian kernel, shifted to zero sum and scaled to unit l2
/// norm. Rows index y, columns index x.
pub fn log_kernel(size: usize, sigma: f64) -> Result<DMatrix<f64>> {
    if size < 3 || size.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "LoG kernel size must be odd and >= 3, got {size}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("LoG sigma must be > 0, got {sigma}")));
    }
    let c = (size / 2) as f64;
    let s2 = sigma * sigma;
    let mut k = DMatrix::from_fn(size, size, |i, j| {
        let r2 = (i as f64 - c).powi(2) + (j as f64 - c).powi(2);
        (r2 - 2.0 * s2) / (s2 * s2) * (-r2 / (2.0 * s2)).exp()
    });
    let mean = k.mean();
    k.add_scalar_mut(-mean);
    let norm = k.norm();
    k /= norm;
    Ok(k)
}

/// Same-size filtering with edge replication at the borders.
fn filter_replicate(img: &[f64], nx: usize, ny: usize, kernel: &DMatrix<f64>) -> Vec<f64> {
    let h = (kernel.nrows() / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut out = vec![0.0; nx * ny];
    for y in 0..ny {
        for x in 0..nx {
            let mut acc = 0.0;
            for dy in -h..=h {
                let yy = clamp(y as isize + dy, ny);
                for dx in -h..=h {
                    let xx = clamp(x as isize + dx, nx);
                    acc += kernel[((dy + h) as usize, (dx + h) as usize)] * img[xx + nx * yy];
                }
            }
            out[x + nx * y] = acc;
        }
    }
    out
}

/// High-frequency error norm `||LoG(|rec|) - LoG(|ref|)|| / ||LoG(|ref|)||`
/// over the stacked frames, 15x15 LoG with sigma 1.5.
pub fn hfen(reference: &ImageSequence, recon: &ImageSequence) -> Result<f64> {
    let m = Magnitudes::new(reference, recon)?;
    m.require_size(HFEN_KERNEL_SIZE, "HFEN")?;
    if m.identical() {
        return Ok(0.0);
    }
    let kernel = log_kernel(HFEN_KERNEL_SIZE, HFEN_SIGMA)?;
    let (mut num, mut den) = (0.0, 0.0);
    for t in 0..m.nt() {
        let fa = filter_replicate(Magnitudes::frame(&m.reference, t), m.nx, m.ny, &kernel);
        let fb = filter_replicate(Magnitudes::frame(&m.recon, t), m.nx, m.ny, &kernel);
        num += fa.iter().zip(&fb).map(|(a, b)| (b - a).powi(2)).sum::<f64>();
        den += fa.iter().map(|a| a * a).sum::<f64>();
    }
    if den == 0.0 {
        return Err(Error::invalid("reference has no high-frequency content"));
    }
    Ok((num / den).sqrt())
}

/// All four metrics with per-frame PSNR and SSIM.
pub fn evaluate(reference: &ImageSequence, recon: &ImageSequence) -> Result<MetricsReport> {
    let m = Magnitudes::new(reference, recon)?;
    m.require_size(HFEN_KERNEL_SIZE.max(SSIM_WINDOW), "metrics")?;
    let per_psnr = psnr_frames(&m);
    let per_ssim = ssim_frames(&m);
    Ok(MetricsReport {
        ser_db: ser(reference, recon)?,
        psnr_db: mean_finite(&per_psnr),
        ssim: per_ssim.iter().sum::<f64>() / per_ssim.len() as f64,
        hfen: hfen(reference, recon)?,
        per_frame_psnr: Some(per_psnr),
        per_frame_ssim: Some(per_ssim),
    })
}
