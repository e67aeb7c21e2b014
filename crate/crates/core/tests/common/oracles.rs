//! Direct-summation reference implementations used as test oracles.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use srls_core::{CoilSensitivities, ImageSequence, KtData, SamplingMask, SolverConfig, C64};

pub fn dft(values: &[C64], inverse: bool) -> Vec<C64> {
    let n = values.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| {
            values
                .iter()
                .enumerate()
                .map(|(j, v)| v * C64::from_polar(scale, sign * 2.0 * PI * (j * k) as f64 / n as f64))
                .sum()
        })
        .collect()
}

/// Unitary 2-D DFT of an `nx x ny` frame, x fastest.
pub fn dft2(frame: &[C64], nx: usize, ny: usize, inverse: bool) -> Vec<C64> {
    let mut out = frame.to_vec();
    for y in 0..ny {
        let row = dft(&out[y * nx..(y + 1) * nx], inverse);
        out[y * nx..(y + 1) * nx].copy_from_slice(&row);
    }
    for x in 0..nx {
        let col: Vec<C64> = (0..ny).map(|y| out[x + nx * y]).collect();
        for (y, v) in dft(&col, inverse).into_iter().enumerate() {
            out[x + nx * y] = v;
        }
    }
    out
}

/// Direct-summation E: per coil and frame, mask(F(s_c x)). Layout x, y, t, coil.
pub fn naive_encode(x: &DMatrix<C64>, sens: &CoilSensitivities, mask: &SamplingMask) -> Vec<C64> {
    let (nx, ny, nt) = (mask.nx(), mask.ny(), mask.nt());
    let mut out = Vec::with_capacity(nx * ny * nt * sens.nc());
    for c in 0..sens.nc() {
        for t in 0..nt {
            let weighted: Vec<C64> = (0..nx * ny).map(|p| x[(p, t)] * sens.coil(c)[p]).collect();
            for (p, v) in dft2(&weighted, nx, ny, false).into_iter().enumerate() {
                out.push(if mask.keep()[p + nx * ny * t] {
                    v
                } else {
                    C64::new(0.0, 0.0)
                });
            }
        }
    }
    out
}

pub fn naive_adjoint(y: &[C64], sens: &CoilSensitivities, mask: &SamplingMask) -> DMatrix<C64> {
    let (nx, ny, nt) = (mask.nx(), mask.ny(), mask.nt());
    let npix = nx * ny;
    let mut out = DMatrix::zeros(npix, nt);
    for c in 0..sens.nc() {
        for t in 0..nt {
            let start = npix * (t + nt * c);
            let masked: Vec<C64> = (0..npix)
                .map(|p| {
                    if mask.keep()[p + npix * t] {
                        y[start + p]
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
                .collect();
            for (p, v) in dft2(&masked, nx, ny, true).into_iter().enumerate() {
                out[(p, t)] += sens.coil(c)[p].conj() * v;
            }
        }
    }
    out
}

pub fn temporal(m: &DMatrix<C64>, inverse: bool) -> DMatrix<C64> {
    let mut out = m.clone();
    for p in 0..m.nrows() {
        let row: Vec<C64> = m.row(p).iter().copied().collect();
        for (t, v) in dft(&row, inverse).into_iter().enumerate() {
            out[(p, t)] = v;
        }
    }
    out
}

pub fn soft(m: &DMatrix<C64>, tau: f64) -> DMatrix<C64> {
    m.map(|v| {
        let a = v.norm();
        if a > tau {
            v * ((a - tau) / a)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

pub fn naive_svt(m: &DMatrix<C64>, tau: f64) -> DMatrix<C64> {
    let svd = m.clone().svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let shrunk = svd.singular_values.map(|s| C64::new((s - tau).max(0.0), 0.0));
    u * DMatrix::from_diagonal(&shrunk) * vt
}

/// Plain L+S proximal gradient written out directly:
/// `L <- SVT(L - M / L_f)`, `S <- T^H soft(T(S - M / L_f))`, `M = E^H(E(L + S) - y)`.
pub fn reference_ls(
    y: &KtData,
    sens: &CoilSensitivities,
    cfg: &SolverConfig,
    iters: usize,
) -> Vec<(DMatrix<C64>, DMatrix<C64>)> {
    let mask = y.mask();
    let mut l = naive_adjoint(y.samples(), sens, mask);
    let mut s = DMatrix::zeros(l.nrows(), l.ncols());
    let mut out = Vec::new();
    for _ in 0..iters {
        let residual: Vec<C64> = naive_encode(&(&l + &s), sens, mask)
            .iter()
            .zip(y.samples())
            .map(|(a, b)| a - b)
            .collect();
        let m = naive_adjoint(&residual, sens, mask);
        let step = C64::new(1.0 / cfg.l_f, 0.0);
        let l_next = naive_svt(&(&l - &m * step), cfg.lambda_l / cfg.l_f);
        let s_next = temporal(&soft(&temporal(&(&s - &m * step), false), cfg.lambda_s / cfg.l_f), true);
        l = l_next;
        s = s_next;
        out.push((l.clone(), s.clone()));
    }
    out
}

pub fn mag(s: &ImageSequence, x: usize, y: usize, t: usize) -> f64 {
    s.get(x, y, t).norm()
}

pub fn oracle_ser(a: &ImageSequence, b: &ImageSequence) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for t in 0..a.nt() {
        for y in 0..a.ny() {
            for x in 0..a.nx() {
                num += mag(a, x, y, t).powi(2);
                den += (mag(a, x, y, t) - mag(b, x, y, t)).powi(2);
            }
        }
    }
    10.0 * (num / den).log10()
}

pub fn oracle_psnr(a: &ImageSequence, b: &ImageSequence) -> f64 {
    let mut peak: f64 = 0.0;
    for t in 0..a.nt() {
        for y in 0..a.ny() {
            for x in 0..a.nx() {
                peak = peak.max(mag(a, x, y, t));
            }
        }
    }
    let mut total = 0.0;
    for t in 0..a.nt() {
        let mut sse = 0.0;
        for y in 0..a.ny() {
            for x in 0..a.nx() {
                sse += (mag(a, x, y, t) - mag(b, x, y, t)).powi(2);
            }
        }
        let mse = sse / (a.nx() * a.ny()) as f64;
        total += 10.0 * (peak * peak / mse).log10();
    }
    total / a.nt() as f64
}

/// Windowed SSIM with explicit 2-D Gaussian weights and centered moments.
pub fn oracle_ssim(a: &ImageSequence, b: &ImageSequence) -> f64 {
    const K: usize = 11;
    let sigma: f64 = 1.5;
    let mut w = [[0.0; K]; K];
    let mut wsum = 0.0;
    for (i, row) in w.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let r2 = (i as f64 - 5.0).powi(2) + (j as f64 - 5.0).powi(2);
            *v = (-r2 / (2.0 * sigma * sigma)).exp();
            wsum += *v;
        }
    }
    let mut peak: f64 = 0.0;
    for t in 0..a.nt() {
        for y in 0..a.ny() {
            for x in 0..a.nx() {
                peak = peak.max(mag(a, x, y, t));
            }
        }
    }
    let c1 = (0.01 * peak).powi(2);
    let c2 = (0.03 * peak).powi(2);
    let mut total = 0.0;
    for t in 0..a.nt() {
        let mut frame = 0.0;
        let mut count = 0;
        for y0 in 0..=a.ny() - K {
            for x0 in 0..=a.nx() - K {
                let (mut ma, mut mb) = (0.0, 0.0);
                for j in 0..K {
                    for i in 0..K {
                        let wij = w[j][i] / wsum;
                        ma += wij * mag(a, x0 + i, y0 + j, t);
                        mb += wij * mag(b, x0 + i, y0 + j, t);
                    }
                }
                let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
                for j in 0..K {
                    for i in 0..K {
                        let wij = w[j][i] / wsum;
                        let da = mag(a, x0 + i, y0 + j, t) - ma;
                        let db = mag(b, x0 + i, y0 + j, t) - mb;
                        va += wij * da * da;
                        vb += wij * db * db;
                        cov += wij * da * db;
                    }
                }
                frame += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                count += 1;
            }
        }
        total += frame / count as f64;
    }
    total / a.nt() as f64
}

/// Direct 15x15 LoG convolution with replicated borders.
pub fn oracle_hfen(a: &ImageSequence, b: &ImageSequence) -> f64 {
    const K: usize = 15;
    let s2: f64 = 1.5 * 1.5;
    let mut k = [[0.0; K]; K];
    for (i, row) in k.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let r2 = (i as f64 - 7.0).powi(2) + (j as f64 - 7.0).powi(2);
            *v = (r2 - 2.0 * s2) / (s2 * s2) * (-r2 / (2.0 * s2)).exp();
        }
    }
    let mean = k.iter().flatten().sum::<f64>() / (K * K) as f64;
    let norm = k.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt();
    let filter = |s: &ImageSequence, x: usize, y: usize, t: usize| {
        let mut acc = 0.0;
        for (i, row) in k.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let yy = (y as isize + i as isize - 7).clamp(0, s.ny() as isize - 1) as usize;
                let xx = (x as isize + j as isize - 7).clamp(0, s.nx() as isize - 1) as usize;
                acc += (v - mean) / norm * mag(s, xx, yy, t);
            }
        }
        acc
    };
    let (mut num, mut den) = (0.0, 0.0);
    for t in 0..a.nt() {
        for y in 0..a.ny() {
            for x in 0..a.nx() {
                let (fa, fb) = (filter(a, x, y, t), filter(b, x, y, t));
                num += (fb - fa).powi(2);
                den += fa * fa;
            }
        }
    }
    (num / den).sqrt()
}
