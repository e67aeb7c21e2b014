mod common;

use common::oracles::*;
use common::*;
use rand::Rng;
use srls_core::metrics::{evaluate, hfen, psnr, ser, ssim};
use srls_core::{ImageSequence, C64};

fn noisy(reference: &ImageSequence, sigma: f64, seed: u64) -> ImageSequence {
    let mut r = rng(seed);
    let noise = random_matrix(&mut r, reference.npix(), reference.nt());
    like(reference, reference.data() + noise * C64::new(sigma, 0.0))
}

fn seeded_pair(seed: u64) -> (ImageSequence, ImageSequence) {
    let mut r = rng(1000 + seed);
    let (nx, ny, nt) = (r.random_range(16..24), r.random_range(16..22), r.random_range(1..4));
    let a = ImageSequence::from_fn(nx, ny, nt, |x, y, t| {
        C64::new(1.0 + ((x * 3 + y * 5 + t) % 7) as f64 / 7.0, 0.2 * y as f64 / ny as f64)
    });
    let b = noisy(&a, 0.05 + 0.02 * seed as f64, seed);
    (a, b)
}

#[test]
fn metrics_match_scalar_oracles() {
    for seed in 0..10 {
        let (a, b) = seeded_pair(seed);
        let checks = [
            ("ser", ser(&a, &b).unwrap(), oracle_ser(&a, &b)),
            ("psnr", psnr(&a, &b).unwrap(), oracle_psnr(&a, &b)),
            ("ssim", ssim(&a, &b).unwrap(), oracle_ssim(&a, &b)),
            ("hfen", hfen(&a, &b).unwrap(), oracle_hfen(&a, &b)),
        ];
        for (name, got, expect) in checks {
            assert!(
                (got - expect).abs() <= 1e-10 * expect.abs().max(1.0),
                "seed {seed} {name}: {got} vs {expect}"
            );
        }
    }
}

#[test]
fn identical_inputs_are_perfect() {
    let (a, _) = seeded_pair(3);
    let r = evaluate(&a, &a).unwrap();
    assert_eq!(
        (r.ser_db, r.psnr_db, r.ssim, r.hfen),
        (f64::INFINITY, f64::INFINITY, 1.0, 0.0)
    );
}

#[test]
fn zero_reconstruction_has_low_ssim() {
    let (truth, _) = canonical();
    let zero = ImageSequence::zeros(truth.x_star.nx(), truth.x_star.ny(), truth.x_star.nt());
    let s = ssim(&truth.x_star, &zero).unwrap();
    assert!(s < 0.05, "SSIM of zero reconstruction {s}");
}

#[test]
fn metrics_degrade_with_noise() {
    let (truth, _) = canonical();
    let reports: Vec<_> = [0.01, 0.02, 0.05]
        .iter()
        .map(|&sigma| evaluate(&truth.x_star, &noisy(&truth.x_star, sigma, 8)).unwrap())
        .collect();
    for w in reports.windows(2) {
        assert!(w[1].ser_db < w[0].ser_db);
        assert!(w[1].psnr_db < w[0].psnr_db);
        assert!(w[1].ssim < w[0].ssim);
        assert!(w[1].hfen > w[0].hfen);
    }
}

#[test]
fn frame_permutation_leaves_metrics_unchanged() {
    let (truth, _) = canonical();
    let rec = noisy(&truth.x_star, 0.03, 2);
    let nt = rec.nt();
    let perm = |s: &ImageSequence| ImageSequence::from_fn(s.nx(), s.ny(), nt, |x, y, t| s.get(x, y, (t * 5 + 3) % nt));
    let a = evaluate(&truth.x_star, &rec).unwrap();
    let b = evaluate(&perm(&truth.x_star), &perm(&rec)).unwrap();
    for (u, v) in [
        (a.ser_db, b.ser_db),
        (a.psnr_db, b.psnr_db),
        (a.ssim, b.ssim),
        (a.hfen, b.hfen),
    ] {
        assert!((u - v).abs() <= 1e-12 * u.abs().max(1.0), "{u} vs {v}");
    }
}
