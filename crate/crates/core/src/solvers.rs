//! Proximal gradient reconstruction of `X = L + S` from undersampled k-t data.
//!
//! Three modes share one iteration skeleton:
//!
//! * [`SmoothnessMode::L1`]: temporal total variation on `L`, handled through
//!   an auxiliary variable `Phi ~ L D^T` whose equality constraint is relaxed
//!   by `mu`. Each iteration is one gradient step on
//!   `mu/2 ||E(L+S) - y||^2 + 1/2 ||L D^T - Phi||^2` followed by the separable
//!   proximal maps (SVT on `L`, temporal-Fourier shrinkage on `S`, shrinkage
//!   on `Phi`).
//! * [`SmoothnessMode::L2`]: the quadratic penalty `lambda_D ||L D^T||_F^2` is
//!   differentiable and is folded into the gradient step; no `Phi`.
//! * [`SmoothnessMode::None`]: plain L+S.
//!
//! The gradient residual `E^H(E(L_k + S_k) - y)` is always evaluated at the
//! current iterate, including the first iteration.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::imaging::{
    diff_adjoint, diff_apply, CoilSensitivities, DiffImage, EncodingOperator, ImageSequence, KtData, TemporalFft,
};
use crate::prox::{self, singular_values, svt};
use crate::C64;

/// Relative objective increase above which a step is reported as a descent
/// violation.
pub const DESCENT_WARN_TOL: f64 = 1e-6;

/// Temporal smoothness penalty applied to the background component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SmoothnessMode {
    L1,
    L2,
    None,
}

impl SmoothnessMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SmoothnessMode::L1 => "L1",
            SmoothnessMode::L2 => "L2",
            SmoothnessMode::None => "NONE",
        }
    }

    /// Default proximal step constant for the mode.
    pub fn default_step_constant(self) -> f64 {
        match self {
            SmoothnessMode::L2 => 5.0,
            SmoothnessMode::L1 | SmoothnessMode::None => 3.0,
        }
    }
}

impl fmt::Display for SmoothnessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SmoothnessMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L1" => Ok(SmoothnessMode::L1),
            "L2" => Ok(SmoothnessMode::L2),
            "NONE" => Ok(SmoothnessMode::None),
            other => Err(Error::invalid(format!(
                "unknown smoothness mode `{other}` (expected L1, L2 or NONE)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Nuclear-norm weight on `L`.
    pub lambda_l: f64,
    /// l1 weight on the temporal Fourier transform of `S`.
    pub lambda_s: f64,
    /// Smoothness weight.
    pub lambda_d: f64,
    /// Relaxation of `Phi = L D^T` (L1 mode only).
    pub mu: f64,
    /// Proximal step constant; the gradient step is `1 / l_f`.
    pub l_f: f64,
    pub mode: SmoothnessMode,
    pub max_iter: usize,
    pub tol: f64,
    /// Keeps the `1/2 ||L D^T - Phi||^2` coupling in L1 mode. Turning it off
    /// together with `lambda_d = 0` reduces L1 mode to plain L+S.
    pub coupling: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::for_mode(SmoothnessMode::L1)
    }
}

impl SolverConfig {
    /// Defaults for a mode: `lambda_L = 0.01`, `lambda_S = 0.001`,
    /// `lambda_D = 0.01`, `mu = 1`, `L_f = 3` (5 in L2 mode).
    pub fn for_mode(mode: SmoothnessMode) -> Self {
        Self {
            lambda_l: 0.01,
            lambda_s: 0.001,
            lambda_d: 0.01,
            mu: 1.0,
            l_f: mode.default_step_constant(),
            mode,
            max_iter: 200,
            tol: 1e-5,
            coupling: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda_L", self.lambda_l),
            ("lambda_S", self.lambda_s),
            ("mu", self.mu),
            ("L_f", self.l_f),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !(self.lambda_d.is_finite() && self.lambda_d >= 0.0) {
            return Err(Error::invalid(format!(
                "lambda_D must be finite and >= 0, got {}",
                self.lambda_d
            )));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::invalid(format!("tol must lie in (0, 1), got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be positive"));
        }
        Ok(())
    }

    /// Effective relaxation: L2 and NONE modes use the unrelaxed objective.
    fn relaxation(&self) -> f64 {
        match self.mode {
            SmoothnessMode::L1 => self.mu,
            SmoothnessMode::L2 | SmoothnessMode::None => 1.0,
        }
    }
}

/// Diagnostics of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub objective: f64,
    pub rel_change: f64,
    pub rank_l: usize,
    /// Fraction of temporal-Fourier entries of `S` below `1e-8` of the
    /// largest magnitude.
    pub sparsity_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconResult {
    pub l: ImageSequence,
    pub s: ImageSequence,
    pub x: ImageSequence,
    /// Present only in L1 mode.
    pub phi: Option<DiffImage>,
    pub history: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the initial iterate.
    pub initial_objective: f64,
}

/// Iterate `(L, S, Phi)` after `k` iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub l: ImageSequence,
    pub s: ImageSequence,
    pub phi: Option<DiffImage>,
    pub k: usize,
    pub rank_l: usize,
    pub sparsity_s: f64,
}

impl SolverState {
    pub fn x(&self) -> ImageSequence {
        self.l.with_data(self.l.data() + self.s.data())
    }
}

/// Reusable solver bound to one acquisition; FFT plans are built once.
#[derive(Debug, Clone)]
pub struct Solver<'a> {
    op: EncodingOperator,
    tfft: TemporalFft,
    y: &'a KtData,
    config: SolverConfig,
}

impl<'a> Solver<'a> {
    pub fn new(y: &'a KtData, sens: &CoilSensitivities, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        if y.nc() != sens.nc() {
            return Err(Error::invalid(format!(
                "coil axis: k-t data has {} coils, sensitivities have {}",
                y.nc(),
                sens.nc()
            )));
        }
        if config.mode != SmoothnessMode::None && y.nt() < 2 {
            return Err(Error::invalid(format!(
                "time axis: {} mode needs at least 2 frames, got {}",
                config.mode,
                y.nt()
            )));
        }
        let op = EncodingOperator::new(sens.clone(), y.mask().clone())?;
        Ok(Self {
            op,
            tfft: TemporalFft::new(y.nt()),
            y,
            config: config.clone(),
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// `L_0 = E^H y`, `S_0 = 0`, `Phi_0 = 0`.
    pub fn initial_state(&self) -> Result<SolverState> {
        let l = self.op.adjoint(self.y)?;
        let s = ImageSequence::zeros(l.nx(), l.ny(), l.nt());
        let phi = match self.config.mode {
            SmoothnessMode::L1 => Some(DiffImage::zeros(l.nx(), l.ny(), l.nt())?),
            _ => None,
        };
        let rank_l = singular_values(l.data())?.rank();
        Ok(SolverState {
            l,
            s,
            phi,
            k: 0,
            rank_l,
            sparsity_s: 1.0,
        })
    }

    fn check_state(&self, state: &SolverState) -> Result<()> {
        let m = self.op.mask();
        if state.l.nx() != m.nx() || state.l.ny() != m.ny() || state.l.nt() != m.nt() {
            return Err(Error::invalid("state L does not match the acquisition dimensions"));
        }
        state.l.check_same_shape(&state.s, "state S")?;
        match (&state.phi, self.config.mode) {
            (Some(phi), SmoothnessMode::L1) => {
                if phi.nt() != state.l.nt() || phi.nx() != state.l.nx() || phi.ny() != state.l.ny() {
                    return Err(Error::invalid("state Phi does not match L"));
                }
                Ok(())
            }
            (None, SmoothnessMode::L1) => Err(Error::invalid("L1 mode requires Phi")),
            (Some(_), _) => Err(Error::invalid(format!(
                "Phi must be absent in {} mode",
                self.config.mode
            ))),
            (None, _) => Ok(()),
        }
    }

    /// `E^H(E(L + S) - y)`.
    fn residual_image(&self, l: &ImageSequence, s: &ImageSequence) -> Result<ImageSequence> {
        let x = l.with_data(l.data() + s.data());
        let r = self.op.forward(&x)?.sub(self.y)?;
        self.op.adjoint(&r)
    }

    /// One proximal gradient iteration.
    pub fn step(&self, state: &SolverState) -> Result<SolverState> {
        self.check_state(state)?;
        let cfg = &self.config;
        let mu = cfg.relaxation();
        let inv_lf = 1.0 / cfg.l_f;
        let grad_data = self.residual_image(&state.l, &state.s)?.into_data();

        // Gradient of the smooth part with respect to L.
        let mut grad_l = grad_data.clone() * C64::new(mu, 0.0);
        match cfg.mode {
            SmoothnessMode::L1 if cfg.coupling => {
                let phi = state.phi.as_ref().expect("checked");
                let gap = diff_apply(&state.l)?.data() - phi.data();
                let gap = DiffImage::new(state.l.nx(), state.l.ny(), gap)?;
                grad_l += diff_adjoint(&gap).data();
            }
            SmoothnessMode::L2 => {
                let dtd = diff_adjoint(&diff_apply(&state.l)?);
                grad_l += dtd.data() * C64::new(2.0 * cfg.lambda_d, 0.0);
            }
            _ => {}
        }

        let g_l = state.l.data() - grad_l * C64::new(inv_lf, 0.0);
        let (l_next, spectrum) = svt(&g_l, mu * cfg.lambda_l / cfg.l_f)?;
        let rank_l = spectrum.shrink(mu * cfg.lambda_l / cfg.l_f).rank();

        let g_s = state.s.data() - grad_data * C64::new(mu / cfg.l_f, 0.0);
        let mut t_s = self.tfft.forward(&state.s.with_data(g_s))?;
        prox::soft_threshold_in_place(t_s.data_mut(), mu * cfg.lambda_s / cfg.l_f);
        let sparsity_s = sparsity(t_s.data());
        let s_next = self.tfft.inverse(&t_s)?;

        let phi_next = match (&state.phi, cfg.mode) {
            (Some(phi), SmoothnessMode::L1) => {
                let tau = mu * cfg.lambda_d / cfg.l_f;
                let mut g_phi = if cfg.coupling {
                    let ld = diff_apply(&state.l)?;
                    phi.data() - (phi.data() - ld.data()) * C64::new(inv_lf, 0.0)
                } else {
                    phi.data().clone()
                };
                prox::soft_threshold_in_place(&mut g_phi, tau);
                Some(DiffImage::new(phi.nx(), phi.ny(), g_phi)?)
            }
            _ => None,
        };

        Ok(SolverState {
            l: state.l.with_data(l_next),
            s: s_next,
            phi: phi_next,
            k: state.k + 1,
            rank_l,
            sparsity_s,
        })
    }

    pub fn objective(&self, state: &SolverState) -> Result<f64> {
        self.check_state(state)?;
        let x = state.x();
        let r = self.op.forward(&x)?.sub(self.y)?;
        let fidelity = r.norm().powi(2);
        let cfg = &self.config;
        let nuclear = singular_values(state.l.data())?.nuclear_norm();
        let sparse = l1_norm(self.tfft.forward(&state.s)?.data());
        let value = match cfg.mode {
            SmoothnessMode::L1 => {
                let phi = state.phi.as_ref().expect("checked");
                let coupling = if cfg.coupling {
                    0.5 * (diff_apply(&state.l)?.data() - phi.data()).norm_squared()
                } else {
                    0.0
                };
                0.5 * cfg.mu * fidelity
                    + coupling
                    + cfg.mu * (cfg.lambda_l * nuclear + cfg.lambda_s * sparse + cfg.lambda_d * l1_norm(phi.data()))
            }
            SmoothnessMode::L2 => {
                let smooth = diff_apply(&state.l)?.norm().powi(2);
                0.5 * fidelity + cfg.lambda_l * nuclear + cfg.lambda_s * sparse + cfg.lambda_d * smooth
            }
            SmoothnessMode::None => 0.5 * fidelity + cfg.lambda_l * nuclear + cfg.lambda_s * sparse,
        };
        Ok(value)
    }

    /// Runs from the initial state until the relative-change rule fires or
    /// `max_iter` is reached.
    pub fn run(&self) -> Result<ReconResult> {
        let mut state = self.initial_state()?;
        let initial_objective = self.objective(&state)?;
        if !initial_objective.is_finite() {
            return Err(Error::Divergence { iteration: 0 });
        }
        let mut previous = initial_objective;
        let mut history = Vec::new();
        let mut converged = false;
        let mut x_prev = state.x();

        while state.k < self.config.max_iter {
            let next = self.step(&state)?;
            let x_next = next.x();
            let change = (x_next.data() - x_prev.data()).norm();
            let base = x_prev.norm();
            let rel_change = if base > 0.0 {
                change / base
            } else if change == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            let objective = self.objective(&next)?;
            if !objective.is_finite() {
                return Err(Error::Divergence { iteration: next.k });
            }
            if objective > previous + DESCENT_WARN_TOL * previous.abs() {
                log::warn!(
                    "objective increased at iteration {} ({previous:.6e} -> {objective:.6e}); consider a larger L_f",
                    next.k
                );
            }
            history.push(IterationRecord {
                k: next.k,
                objective,
                rel_change,
                rank_l: next.rank_l,
                sparsity_s: next.sparsity_s,
            });
            previous = objective;
            state = next;
            x_prev = x_next;
            if change <= self.config.tol * base {
                converged = true;
                break;
            }
        }

        if let Some(tail) = history.len().checked_sub(10).map(|start| &history[start..]) {
            let monotone = tail.windows(2).all(|w| w[1].sparsity_s >= w[0].sparsity_s);
            log::info!(
                "sparsity of T(S) over the last 10 iterations: {} (final {:.4})",
                if monotone { "non-decreasing" } else { "not monotone" },
                tail[tail.len() - 1].sparsity_s
            );
        }

        let x = state.x();
        Ok(ReconResult {
            iterations: state.k,
            l: state.l,
            s: state.s,
            x,
            phi: state.phi,
            history,
            converged,
            initial_objective,
        })
    }
}

fn l1_norm(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|v| v.norm()).sum()
}

fn sparsity(m: &DMatrix<C64>) -> f64 {
    let max = m.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max == 0.0 || m.is_empty() {
        return 1.0;
    }
    let cutoff = 1e-8 * max;
    m.iter().filter(|v| v.norm() < cutoff).count() as f64 / m.len() as f64
}

/// Objective of the configured mode at `(L, S, Phi)`.
pub fn objective(
    l: &ImageSequence,
    s: &ImageSequence,
    phi: Option<&DiffImage>,
    y: &KtData,
    sens: &CoilSensitivities,
    config: &SolverConfig,
) -> Result<f64> {
    let solver = Solver::new(y, sens, config)?;
    let state = SolverState {
        l: l.clone(),
        s: s.clone(),
        phi: phi.cloned(),
        k: 0,
        rank_l: 0,
        sparsity_s: 0.0,
    };
    solver.objective(&state)
}

pub fn solve(y: &KtData, sens: &CoilSensitivities, config: &SolverConfig) -> Result<ReconResult> {
    Solver::new(y, sens, config)?.run()
}

/// Plain L+S: [`solve`] with the smoothness mode forced to `NONE`.
pub fn solve_baseline_ls(y: &KtData, sens: &CoilSensitivities, config: &SolverConfig) -> Result<ReconResult> {
    let config = SolverConfig {
        mode: SmoothnessMode::None,
        ..config.clone()
    };
    solve(y, sens, &config)
}

pub fn step(state: &SolverState, y: &KtData, sens: &CoilSensitivities, config: &SolverConfig) -> Result<SolverState> {
    Solver::new(y, sens, config)?.step(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::SamplingMask;

    fn zero_problem(mode: SmoothnessMode) -> (KtData, CoilSensitivities, SolverConfig) {
        let mask = SamplingMask::full(8, 8, 4);
        let y = KtData::zeros(mask, 1);
        (y, CoilSensitivities::uniform(8, 8), SolverConfig::for_mode(mode))
    }

    #[test]
    fn zero_data_is_a_fixed_point_in_every_mode() {
        for mode in [SmoothnessMode::L1, SmoothnessMode::L2, SmoothnessMode::None] {
            let (y, sens, cfg) = zero_problem(mode);
            let res = solve(&y, &sens, &cfg).unwrap();
            assert!(res.converged, "{mode}");
            assert_eq!(res.iterations, 1);
            assert_eq!(res.history.len(), 1);
            assert_eq!(res.l.norm(), 0.0);
            assert_eq!(res.s.norm(), 0.0);
            assert_eq!(res.phi.is_some(), mode == SmoothnessMode::L1);
        }
    }

    #[test]
    fn objective_of_zero_is_zero() {
        let (y, sens, cfg) = zero_problem(SmoothnessMode::L1);
        let z = ImageSequence::zeros(8, 8, 4);
        let phi = DiffImage::zeros(8, 8, 4).unwrap();
        assert_eq!(objective(&z, &z, Some(&phi), &y, &sens, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn phi_presence_must_match_mode() {
        let (y, sens, cfg) = zero_problem(SmoothnessMode::L2);
        let z = ImageSequence::zeros(8, 8, 4);
        let phi = DiffImage::zeros(8, 8, 4).unwrap();
        assert!(objective(&z, &z, Some(&phi), &y, &sens, &cfg).is_err());
        let cfg = SolverConfig::default();
        assert!(objective(&z, &z, None, &y, &sens, &cfg).is_err());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let (y, sens, _) = zero_problem(SmoothnessMode::L1);
        let bad = [
            SolverConfig {
                lambda_l: 0.0,
                ..Default::default()
            },
            SolverConfig {
                lambda_d: -1.0,
                ..Default::default()
            },
            SolverConfig {
                mu: f64::NAN,
                ..Default::default()
            },
            SolverConfig {
                tol: 1.0,
                ..Default::default()
            },
            SolverConfig {
                max_iter: 0,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(
                matches!(solve(&y, &sens, &cfg), Err(Error::InvalidArgument(_))),
                "{cfg:?}"
            );
        }
    }

    #[test]
    fn single_frame_needs_none_mode() {
        let y = KtData::zeros(SamplingMask::full(4, 4, 1), 1);
        let sens = CoilSensitivities::uniform(4, 4);
        assert!(solve(&y, &sens, &SolverConfig::default()).is_err());
        assert!(solve_baseline_ls(&y, &sens, &SolverConfig::default()).is_ok());
    }

    #[test]
    fn mode_names_round_trip() {
        for mode in [SmoothnessMode::L1, SmoothnessMode::L2, SmoothnessMode::None] {
            assert_eq!(mode.as_str().parse::<SmoothnessMode>().unwrap(), mode);
        }
        assert!("L3".parse::<SmoothnessMode>().is_err());
    }

    #[test]
    fn divergence_reports_iteration() {
        let mask = SamplingMask::full(4, 4, 2);
        let mut y = KtData::zeros(mask, 1);
        y.add_on_mask(|| C64::new(1e300, 1e300));
        let cfg = SolverConfig::for_mode(SmoothnessMode::None);
        match solve(&y, &CoilSensitivities::uniform(4, 4), &cfg) {
            Err(Error::Divergence { iteration }) => assert_eq!(iteration, 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
