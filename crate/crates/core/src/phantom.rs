//! Seeded synthetic ground truth with a known low-rank / sparse split, coil
//! maps, Cartesian k-t masks and noisy acquisitions.
//!
//! Every generator draws from ChaCha8 (`rand_chacha` 0.9) seeded with
//! `seed_from_u64(seed)`; each generator uses its own ChaCha stream so that
//! changing, say, the mask never perturbs the phantom content.

use std::f64::consts::PI;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::imaging::{encode, CoilSensitivities, ImageSequence, KtData, SamplingMask};
use crate::C64;

const STREAM_PHANTOM: u64 = 0;
const STREAM_SENSITIVITIES: u64 = 1;
const STREAM_MASK: u64 = 2;
const STREAM_NOISE: u64 = 3;

/// Blob support radius in pixels.
const BLOB_RADIUS: f64 = 2.0;
/// Pixels covered by one blob of radius [`BLOB_RADIUS`].
const BLOB_AREA: usize = 13;
/// Largest allowed fraction of nonzero pixels in any frame of `S*`.
pub const MAX_SPARSE_FRACTION: f64 = 0.10;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
    pub nc: usize,
    /// Exact rank of the background `L*`.
    pub rank_background: usize,
    pub n_dynamic_blobs: usize,
    /// Standard deviation of the complex k-space noise, relative to a peak
    /// image magnitude of 1.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            nx: 32,
            ny: 32,
            nt: 16,
            nc: 4,
            rank_background: 3,
            n_dynamic_blobs: 5,
            noise_sigma: 0.01,
            seed: 42,
        }
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 || self.nc == 0 {
            return Err(Error::invalid("phantom nx, ny and nc must be positive"));
        }
        if self.nt < 2 {
            return Err(Error::invalid(format!("phantom needs nt >= 2, got {}", self.nt)));
        }
        if self.rank_background == 0 || self.rank_background > (self.nx * self.ny).min(self.nt) {
            return Err(Error::invalid(format!(
                "rank_background must lie in [1, min(nx*ny, nt)], got {}",
                self.rank_background
            )));
        }
        let covered = self.n_dynamic_blobs * BLOB_AREA;
        if covered as f64 > MAX_SPARSE_FRACTION * (self.nx * self.ny) as f64 {
            return Err(Error::invalid(format!(
                "{} blobs may cover {covered} of {} pixels, more than 10% per frame",
                self.n_dynamic_blobs,
                self.nx * self.ny
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::invalid(format!(
                "noise_sigma must be finite and >= 0, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomTruth {
    pub x_star: ImageSequence,
    pub l_star: ImageSequence,
    pub s_star: ImageSequence,
    pub sens: CoilSensitivities,
    pub spec: PhantomSpec,
}

/// Ellipse with a soft edge of about one pixel.
fn soft_ellipse(x: f64, y: f64, cx: f64, cy: f64, rx: f64, ry: f64) -> f64 {
    let r = (((x - cx) / rx).powi(2) + ((y - cy) / ry).powi(2)).sqrt();
    let edge = 1.0 / rx.min(ry);
    0.5 * (1.0 - ((r - 1.0) / edge).tanh())
}

fn gaussian(x: f64, y: f64, cx: f64, cy: f64, sigma: f64) -> f64 {
    (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * sigma * sigma)).exp()
}

/// Spatial map of background component `i`, in pixel coordinates.
fn tissue_map(i: usize, rng: &mut ChaCha8Rng, nx: f64, ny: f64) -> impl Fn(f64, f64) -> f64 {
    let (cx, cy) = ((nx - 1.0) / 2.0, (ny - 1.0) / 2.0);
    let jx = rng.random_range(-0.05..0.05) * nx;
    let jy = rng.random_range(-0.05..0.05) * ny;
    let size = rng.random_range(0.8..1.2);
    let params = (
        jx,
        jy,
        size,
        rng.random_range(0.1..0.9) * nx,
        rng.random_range(0.1..0.9) * ny,
    );
    move |x: f64, y: f64| {
        let (jx, jy, size, px, py) = params;
        match i {
            // Body outline.
            0 => 0.6 * soft_ellipse(x, y, cx + jx, cy + jy, 0.42 * nx, 0.36 * ny),
            // Inner organ.
            1 => soft_ellipse(x, y, cx + jx + 0.1 * nx, cy + jy, 0.16 * nx * size, 0.2 * ny * size),
            // Second organ.
            2 => soft_ellipse(
                x,
                y,
                cx + jx - 0.15 * nx,
                cy + jy - 0.08 * ny,
                0.1 * nx * size,
                0.12 * ny * size,
            ),
            // Further smooth Gaussian tissue blobs.
            _ => gaussian(x, y, px, py, 0.08 * nx.min(ny) * size),
        }
    }
}

/// Temporal modulation of background component `i`: smooth and slowly varying.
fn temporal_profile(i: usize, rng: &mut ChaCha8Rng, nt: usize) -> Vec<f64> {
    let phase = rng.random_range(0.0..2.0 * PI);
    let amp = rng.random_range(0.15..0.3);
    let span = (nt - 1).max(1) as f64;
    (0..nt)
        .map(|t| {
            let s = t as f64 / span;
            match i {
                0 => 1.0,
                1 => 1.0 + amp * (2.0 * PI * s + phase).cos(),
                2 => 1.0 + amp * (2.0 * s - 1.0),
                // Low-order polynomials in s, independent of the ones above.
                k => 1.0 + amp * (2.0 * s - 1.0).powi(k as i32 - 1),
            }
        })
        .collect()
}

/// Generates `X* = L* + S*` with coil maps. `L*` has exactly the requested rank,
/// `S*` is a set of small blobs switching on and off abruptly.
pub fn make_phantom(spec: &PhantomSpec) -> Result<PhantomTruth> {
    spec.validate()?;
    let (nx, ny, nt) = (spec.nx, spec.ny, spec.nt);
    let (fx, fy) = (nx as f64, ny as f64);
    let mut rng = rng_for(spec.seed, STREAM_PHANTOM);

    // Smooth spatial phase shared by both components.
    let (px, py) = (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
    let phase = |x: f64, y: f64| C64::from_polar(1.0, PI * (px * x / fx + py * y / fy));

    let mut l = nalgebra::DMatrix::<C64>::zeros(nx * ny, nt);
    for i in 0..spec.rank_background {
        let map = tissue_map(i, &mut rng, fx, fy);
        let profile = temporal_profile(i, &mut rng, nt);
        let u = nalgebra::DVector::from_fn(nx * ny, |p, _| {
            let (x, y) = ((p % nx) as f64, (p / nx) as f64);
            phase(x, y) * map(x, y)
        });
        let v = nalgebra::DVector::from_iterator(nt, profile.iter().map(|&a| C64::new(a, 0.0)));
        l.ger(C64::new(1.0, 0.0), &u, &v, C64::new(1.0, 0.0));
    }

    let mut s = nalgebra::DMatrix::<C64>::zeros(nx * ny, nt);
    for _ in 0..spec.n_dynamic_blobs {
        let bx = rng.random_range(0.25..0.75) * (fx - 1.0);
        let by = rng.random_range(0.25..0.75) * (fy - 1.0);
        let amp = rng.random_range(0.3..0.5);
        let len = rng.random_range((nt / 4).max(1)..=(nt / 2).max(1));
        let start = rng.random_range(0..=nt - len);
        for p in 0..nx * ny {
            let (x, y) = ((p % nx) as f64, (p / nx) as f64);
            if (x - bx).powi(2) + (y - by).powi(2) > BLOB_RADIUS * BLOB_RADIUS {
                continue;
            }
            let value = phase(x, y) * (amp * gaussian(x, y, bx, by, 1.2));
            for t in start..start + len {
                s[(p, t)] += value;
            }
        }
    }

    let peak = (&l + &s).iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak > 0.0 {
        l /= C64::new(peak, 0.0);
        s /= C64::new(peak, 0.0);
    }
    let x = &l + &s;

    Ok(PhantomTruth {
        x_star: ImageSequence::new(nx, ny, x)?,
        l_star: ImageSequence::new(nx, ny, l)?,
        s_star: ImageSequence::new(nx, ny, s)?,
        sens: make_sensitivities(nx, ny, spec.nc, spec.seed)?,
        spec: spec.clone(),
    })
}

/// Coils on one ring around the field of view: Gaussian magnitude profiles
/// centred outside the image at angle `2 pi c / nc`, each with a small linear
/// phase, normalized to unit sum-of-squares per pixel.
pub fn make_sensitivities(nx: usize, ny: usize, nc: usize, seed: u64) -> Result<CoilSensitivities> {
    if nx == 0 || ny == 0 || nc == 0 {
        return Err(Error::invalid(format!(
            "sensitivity dimensions must be positive (nx={nx}, ny={ny}, nc={nc})"
        )));
    }
    let mut rng = rng_for(seed, STREAM_SENSITIVITIES);
    let (fx, fy) = (nx as f64, ny as f64);
    let (cx, cy) = ((fx - 1.0) / 2.0, (fy - 1.0) / 2.0);
    let extent = fx.max(fy);
    let radius = 0.75 * extent;
    let width = 0.6 * extent;
    let mut maps = Vec::with_capacity(nx * ny * nc);
    for c in 0..nc {
        let angle = 2.0 * PI * c as f64 / nc as f64;
        let (ox, oy) = (cx + radius * angle.cos(), cy + radius * angle.sin());
        let kx = rng.random_range(-1.0..1.0) * PI / fx;
        let ky = rng.random_range(-1.0..1.0) * PI / fy;
        for p in 0..nx * ny {
            let (x, y) = ((p % nx) as f64, (p / nx) as f64);
            let mag = gaussian(x, y, ox, oy, width);
            maps.push(C64::from_polar(mag, kx * (x - cx) + ky * (y - cy)));
        }
    }
    CoilSensitivities::normalized(nx, ny, nc, maps)
}

/// Signed frequency of unshifted FFT bin `j` out of `n`.
fn signed_frequency(j: usize, n: usize) -> i64 {
    if j < n.div_ceil(2) {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Cartesian k-t mask: per frame, full kx readouts on a subset of ky lines.
/// The `center_lines` lowest-|ky| lines are always kept; the rest of the
/// per-frame budget `round(ny / acceleration)` is drawn without replacement
/// with density proportional to `(1 + |ky| / kmax)^-2`, independently per
/// frame.
pub fn make_mask(
    nx: usize,
    ny: usize,
    nt: usize,
    acceleration: f64,
    center_lines: usize,
    seed: u64,
) -> Result<SamplingMask> {
    if nx == 0 || ny == 0 || nt == 0 {
        return Err(Error::invalid("mask dimensions must be positive"));
    }
    if !(acceleration > 1.0 && acceleration.is_finite()) {
        return Err(Error::invalid(format!("acceleration must be > 1, got {acceleration}")));
    }
    if center_lines > ny {
        return Err(Error::invalid(format!(
            "center_lines ({center_lines}) exceeds ny ({ny})"
        )));
    }
    let budget = ((ny as f64 / acceleration).round() as usize).clamp(1, ny);
    if center_lines > budget {
        return Err(Error::invalid(format!(
            "center_lines ({center_lines}) exceeds the per-frame line budget ({budget}) at acceleration {acceleration}"
        )));
    }

    // Lines ordered by |ky|, positive before negative on ties.
    let mut by_distance: Vec<usize> = (0..ny).collect();
    by_distance.sort_by_key(|&j| {
        let k = signed_frequency(j, ny);
        (k.unsigned_abs(), k < 0)
    });
    let center = &by_distance[..center_lines];
    let outer: Vec<usize> = by_distance[center_lines..].to_vec();
    let kmax = (ny as f64 / 2.0).max(1.0);
    let weights: Vec<f64> = outer
        .iter()
        .map(|&j| (1.0 + signed_frequency(j, ny).unsigned_abs() as f64 / kmax).powi(-2))
        .collect();

    let mut rng = rng_for(seed, STREAM_MASK);
    let mut keep = vec![false; nx * ny * nt];
    for t in 0..nt {
        let mut lines: Vec<usize> = center.to_vec();
        let extra = budget - center_lines;
        if extra > 0 {
            let picked = index::sample_weighted(&mut rng, outer.len(), |i| weights[i], extra)
                .map_err(|e| Error::invalid(format!("line sampling failed: {e}")))?;
            lines.extend(picked.iter().map(|i| outer[i]));
        }
        for ky in lines {
            let row = nx * (ky + ny * t);
            keep[row..row + nx].iter_mut().for_each(|k| *k = true);
        }
    }
    SamplingMask::new(nx, ny, nt, keep, acceleration)
}

/// `y = E(X*) + n` with i.i.d. circular complex Gaussian noise of standard
/// deviation `noise_sigma` (so `E|n|^2 = sigma^2`) on acquired samples only.
pub fn simulate_acquisition(truth: &PhantomTruth, mask: &SamplingMask) -> Result<KtData> {
    let mut y = encode(&truth.x_star, &truth.sens, mask)?;
    let sigma = truth.spec.noise_sigma;
    if sigma > 0.0 {
        let mut rng = rng_for(truth.spec.seed, STREAM_NOISE);
        let scale = sigma / 2f64.sqrt();
        y.add_on_mask(|| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re * scale, im * scale)
        });
    }
    Ok(y)
}
