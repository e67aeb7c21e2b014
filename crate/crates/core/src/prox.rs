//! Proximal maps: complex soft-thresholding (prox of the l1 norm) and
//! singular value thresholding (prox of the nuclear norm).

use nalgebra::{ComplexField, DMatrix, SVD};

use crate::error::{Error, Result};
use crate::C64;

/// Relative tolerance used when counting singular values as nonzero.
pub const RANK_TOL: f64 = 1e-8;

/// Singular values in non-increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    values: Vec<f64>,
}

impl SingularSpectrum {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("singular values must be finite and non-negative"));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Number of values above `RANK_TOL` times the largest one.
    pub fn rank(&self) -> usize {
        let cutoff = RANK_TOL * self.largest();
        self.values.iter().filter(|&&v| v > cutoff).count()
    }

    /// Spectrum after soft-thresholding at `tau`.
    pub fn shrink(&self, tau: f64) -> SingularSpectrum {
        SingularSpectrum {
            values: self.values.iter().map(|s| (s - tau).max(0.0)).collect(),
        }
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("threshold must be finite and >= 0, got {tau}")))
    }
}

fn check_finite(z: &DMatrix<C64>) -> Result<()> {
    if z.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid("matrix has non-finite entries"))
    }
}

/// `z / |z| * max(|z| - tau, 0)` for one entry; zero stays zero.
#[inline]
pub fn shrink(z: C64, tau: f64) -> C64 {
    let mag = z.norm();
    if mag <= tau {
        C64::new(0.0, 0.0)
    } else {
        z * ((mag - tau) / mag)
    }
}

/// Element-wise complex soft-thresholding.
pub fn soft_threshold(z: &DMatrix<C64>, tau: f64) -> Result<DMatrix<C64>> {
    check_tau(tau)?;
    Ok(z.map(|v| shrink(v, tau)))
}

pub(crate) fn soft_threshold_in_place(z: &mut DMatrix<C64>, tau: f64) {
    z.apply(|v| *v = shrink(*v, tau));
}

fn decompose(z: DMatrix<C64>) -> Result<SVD<C64, nalgebra::Dyn, nalgebra::Dyn>> {
    let eps = f64::EPSILON * 5.0;
    SVD::try_new(z, true, true, eps, 0).ok_or_else(|| Error::invalid("SVD failed to converge"))
}

/// Singular value thresholding `U max(Sigma - tau, 0) V^H`.
///
/// Returns the thresholded matrix and the spectrum of the input.
pub fn svt(z: &DMatrix<C64>, tau: f64) -> Result<(DMatrix<C64>, SingularSpectrum)> {
    check_tau(tau)?;
    check_finite(z)?;
    let (nrows, ncols) = z.shape();
    if nrows == 0 || ncols == 0 {
        return Ok((z.clone(), SingularSpectrum { values: Vec::new() }));
    }
    let svd = decompose(z.clone())?;
    let spectrum = SingularSpectrum {
        values: svd.singular_values.iter().copied().collect(),
    };
    let u = svd.u.as_ref().expect("U requested");
    let v_t = svd.v_t.as_ref().expect("V^H requested");
    let mut out = DMatrix::<C64>::zeros(nrows, ncols);
    for (i, s) in spectrum.values.iter().enumerate() {
        let w = s - tau;
        if w <= 0.0 {
            // Values are sorted, nothing further survives.
            break;
        }
        let ui = u.column(i) * C64::from_real(w);
        out.ger(C64::new(1.0, 0.0), &ui, &v_t.row(i).transpose(), C64::new(1.0, 0.0));
    }
    Ok((out, spectrum))
}

/// Singular values of `z`, non-increasing.
pub fn singular_values(z: &DMatrix<C64>) -> Result<SingularSpectrum> {
    check_finite(z)?;
    if z.is_empty() {
        return Ok(SingularSpectrum { values: Vec::new() });
    }
    let sv = z.clone().singular_values();
    SingularSpectrum::new(sv.iter().copied().collect())
}
