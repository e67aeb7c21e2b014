#![allow(dead_code)]

pub mod oracles;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use srls_core::phantom::{make_mask, make_phantom, simulate_acquisition};
use srls_core::{CoilSensitivities, DiffImage, ImageSequence, KtData, PhantomSpec, PhantomTruth, SamplingMask, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cnormal(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| cnormal(rng))
}

pub fn random_image(rng: &mut ChaCha8Rng, nx: usize, ny: usize, nt: usize) -> ImageSequence {
    ImageSequence::new(nx, ny, random_matrix(rng, nx * ny, nt)).unwrap()
}

pub fn random_diff(rng: &mut ChaCha8Rng, nx: usize, ny: usize, nt: usize) -> DiffImage {
    DiffImage::new(nx, ny, random_matrix(rng, nx * ny, nt - 1)).unwrap()
}

pub fn random_sens(rng: &mut ChaCha8Rng, nx: usize, ny: usize, nc: usize) -> CoilSensitivities {
    let maps = (0..nx * ny * nc).map(|_| cnormal(rng)).collect();
    CoilSensitivities::normalized(nx, ny, nc, maps).unwrap()
}

/// Random line pattern keeping roughly half of the samples.
pub fn random_mask(rng: &mut ChaCha8Rng, nx: usize, ny: usize, nt: usize) -> SamplingMask {
    let mut keep = vec![false; nx * ny * nt];
    for t in 0..nt {
        for ky in 0..ny {
            if ky == 0 || rng.random_bool(0.5) {
                for kx in 0..nx {
                    keep[kx + nx * (ky + ny * t)] = true;
                }
            }
        }
    }
    SamplingMask::from_pattern(nx, ny, nt, keep).unwrap()
}

pub fn random_kt(rng: &mut ChaCha8Rng, mask: &SamplingMask, nc: usize) -> KtData {
    let per_coil = mask.nx() * mask.ny() * mask.nt();
    let samples = (0..per_coil * nc)
        .map(|i| {
            if mask.keep()[i % per_coil] {
                cnormal(rng)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    KtData::new(samples, mask.clone(), nc).unwrap()
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max)
}

/// Canonical phantom: 32x32x16, 4 coils, 4x acceleration, noise 0.01, seed 42.
pub fn canonical() -> (PhantomTruth, KtData) {
    let spec = PhantomSpec::default();
    let truth = make_phantom(&spec).unwrap();
    let mask = make_mask(spec.nx, spec.ny, spec.nt, 4.0, 4, spec.seed).unwrap();
    let y = simulate_acquisition(&truth, &mask).unwrap();
    (truth, y)
}

pub fn like(shape: &ImageSequence, data: DMatrix<C64>) -> ImageSequence {
    ImageSequence::new(shape.nx(), shape.ny(), data).unwrap()
}

/// Seeded 16x16x8 instance with `nc` coils and 4x line undersampling.
pub fn small_instance(nc: usize) -> (KtData, CoilSensitivities) {
    let spec = PhantomSpec {
        nx: 16,
        ny: 16,
        nt: 8,
        nc,
        n_dynamic_blobs: 1,
        seed: 5,
        ..Default::default()
    };
    let truth = make_phantom(&spec).unwrap();
    let mask = make_mask(16, 16, 8, 4.0, 4, spec.seed).unwrap();
    let y = simulate_acquisition(&truth, &mask).unwrap();
    (y, truth.sens)
}
