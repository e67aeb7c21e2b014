//! `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, keys are case-sensitive and
//! unknown or repeated keys are rejected. Omitted keys keep their defaults,
//! which describe the canonical 32x32x16, 4-coil, 4x phantom run.

use crate::error::{Error, Result};
use crate::phantom::PhantomSpec;
use crate::solvers::{SmoothnessMode, SolverConfig};

/// Acquisition and export settings that are neither solver nor phantom
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub acceleration: f64,
    pub center_lines: usize,
    /// Frame used for figure exports; middle frame when absent.
    pub frame: Option<usize>,
    /// x column used for y-t exports; middle column when absent.
    pub slice: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            acceleration: 4.0,
            center_lines: 4,
            frame: None,
            slice: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    /// Solver settings for `smoothness_mode`.
    pub solver: SolverConfig,
    /// Explicit `L_f`; when absent each mode uses its own default.
    pub l_f: Option<f64>,
    pub phantom: PhantomSpec,
    pub run: RunOptions,
}

impl RunConfig {
    /// Solver settings for `mode`, keeping every explicitly configured value.
    pub fn solver_for(&self, mode: SmoothnessMode) -> SolverConfig {
        SolverConfig {
            mode,
            l_f: self.l_f.unwrap_or_else(|| mode.default_step_constant()),
            ..self.solver.clone()
        }
    }

    pub fn frame(&self) -> usize {
        self.run.frame.unwrap_or(self.phantom.nt / 2)
    }

    pub fn slice(&self) -> usize {
        self.run.slice.unwrap_or(self.phantom.nx / 2)
    }

    fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        self.phantom.validate()?;
        if !(self.run.acceleration > 1.0 && self.run.acceleration.is_finite()) {
            return Err(Error::invalid("acceleration must be > 1"));
        }
        if self.run.center_lines > self.phantom.ny {
            return Err(Error::invalid(format!(
                "center_lines ({}) exceeds ny ({})",
                self.run.center_lines, self.phantom.ny
            )));
        }
        if let Some(t) = self.run.frame {
            if t >= self.phantom.nt {
                return Err(Error::invalid(format!(
                    "frame {t} out of range for nt = {}",
                    self.phantom.nt
                )));
            }
        }
        if let Some(x) = self.run.slice {
            if x >= self.phantom.nx {
                return Err(Error::invalid(format!(
                    "slice {x} out of range for nx = {}",
                    self.phantom.nx
                )));
            }
        }
        Ok(())
    }
}

const KEYS: &[&str] = &[
    "lambda_L",
    "lambda_S",
    "lambda_D",
    "mu",
    "L_f",
    "smoothness_mode",
    "max_iter",
    "tol",
    "coupling",
    "nx",
    "ny",
    "nt",
    "nc",
    "rank_background",
    "n_dynamic_blobs",
    "noise_sigma",
    "seed",
    "acceleration",
    "center_lines",
    "frame",
    "slice",
];

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn real(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| parse_err(line, format!("{key}: `{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(parse_err(line, format!("{key}: value must be finite")));
    }
    Ok(x)
}

fn positive(line: usize, key: &str, v: &str) -> Result<f64> {
    let x = real(line, key, v)?;
    if x <= 0.0 {
        return Err(parse_err(line, format!("{key}: must be > 0, got {x}")));
    }
    Ok(x)
}

fn non_negative(line: usize, key: &str, v: &str) -> Result<f64> {
    let x = real(line, key, v)?;
    if x < 0.0 {
        return Err(parse_err(line, format!("{key}: must be >= 0, got {x}")));
    }
    Ok(x)
}

fn count(line: usize, key: &str, v: &str) -> Result<usize> {
    v.parse()
        .map_err(|_| parse_err(line, format!("{key}: `{v}` is not a non-negative integer")))
}

fn positive_count(line: usize, key: &str, v: &str) -> Result<usize> {
    let n = count(line, key, v)?;
    if n == 0 {
        return Err(parse_err(line, format!("{key}: must be positive")));
    }
    Ok(n)
}

fn boolean(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        _ => Err(parse_err(line, format!("{key}: expected on/off, got `{v}`"))),
    }
}

/// Parses configuration text. Range errors on a single key carry its line;
/// cross-key inconsistencies are reported on line 0.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut seen: Vec<&str> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_err(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let known = KEYS
            .iter()
            .find(|&&k| k == key)
            .ok_or_else(|| parse_err(line, format!("unknown key `{key}`")))?;
        if seen.contains(known) {
            return Err(parse_err(line, format!("duplicate key `{key}`")));
        }
        seen.push(known);

        match key {
            "lambda_L" => cfg.solver.lambda_l = positive(line, key, value)?,
            "lambda_S" => cfg.solver.lambda_s = positive(line, key, value)?,
            "lambda_D" => cfg.solver.lambda_d = non_negative(line, key, value)?,
            "mu" => cfg.solver.mu = positive(line, key, value)?,
            "L_f" => cfg.l_f = Some(positive(line, key, value)?),
            "smoothness_mode" => {
                cfg.solver.mode = value
                    .parse()
                    .map_err(|_| parse_err(line, format!("smoothness_mode: `{value}` is not one of L1, L2, NONE")))?;
            }
            "max_iter" => cfg.solver.max_iter = positive_count(line, key, value)?,
            "tol" => {
                let t = positive(line, key, value)?;
                if t >= 1.0 {
                    return Err(parse_err(line, "tol: must lie in (0, 1)"));
                }
                cfg.solver.tol = t;
            }
            "coupling" => cfg.solver.coupling = boolean(line, key, value)?,
            "nx" => cfg.phantom.nx = positive_count(line, key, value)?,
            "ny" => cfg.phantom.ny = positive_count(line, key, value)?,
            "nt" => {
                let nt = positive_count(line, key, value)?;
                if nt < 2 {
                    return Err(parse_err(line, "nt: must be at least 2"));
                }
                cfg.phantom.nt = nt;
            }
            "nc" => cfg.phantom.nc = positive_count(line, key, value)?,
            "rank_background" => cfg.phantom.rank_background = positive_count(line, key, value)?,
            "n_dynamic_blobs" => cfg.phantom.n_dynamic_blobs = count(line, key, value)?,
            "noise_sigma" => cfg.phantom.noise_sigma = non_negative(line, key, value)?,
            "seed" => {
                cfg.phantom.seed = value
                    .parse()
                    .map_err(|_| parse_err(line, format!("seed: `{value}` is not an unsigned 64-bit integer")))?
            }
            "acceleration" => {
                let a = positive(line, key, value)?;
                if a <= 1.0 {
                    return Err(parse_err(line, "acceleration: must be > 1"));
                }
                cfg.run.acceleration = a;
            }
            "center_lines" => cfg.run.center_lines = count(line, key, value)?,
            "frame" => cfg.run.frame = Some(count(line, key, value)?),
            "slice" => cfg.run.slice = Some(count(line, key, value)?),
            _ => unreachable!("key list and match arms agree"),
        }
    }

    cfg.solver.l_f = cfg.l_f.unwrap_or_else(|| cfg.solver.mode.default_step_constant());
    cfg.validate().map_err(|e| match e {
        Error::InvalidArgument(m) => parse_err(0, m),
        other => other,
    })?;
    Ok(cfg)
}

/// Renders a configuration that [`parse_config`] maps back to `cfg`.
pub fn render_config(cfg: &RunConfig) -> String {
    let s = &cfg.solver;
    let p = &cfg.phantom;
    let r = &cfg.run;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    kv("smoothness_mode", s.mode.to_string());
    kv("lambda_L", s.lambda_l.to_string());
    kv("lambda_S", s.lambda_s.to_string());
    kv("lambda_D", s.lambda_d.to_string());
    kv("mu", s.mu.to_string());
    if let Some(l_f) = cfg.l_f {
        kv("L_f", l_f.to_string());
    }
    kv("max_iter", s.max_iter.to_string());
    kv("tol", s.tol.to_string());
    kv("coupling", if s.coupling { "on" } else { "off" }.to_string());
    kv("nx", p.nx.to_string());
    kv("ny", p.ny.to_string());
    kv("nt", p.nt.to_string());
    kv("nc", p.nc.to_string());
    kv("rank_background", p.rank_background.to_string());
    kv("n_dynamic_blobs", p.n_dynamic_blobs.to_string());
    kv("noise_sigma", p.noise_sigma.to_string());
    kv("seed", p.seed.to_string());
    kv("acceleration", r.acceleration.to_string());
    kv("center_lines", r.center_lines.to_string());
    if let Some(t) = r.frame {
        kv("frame", t.to_string());
    }
    if let Some(x) = r.slice {
        kv("slice", x.to_string());
    }
    out
}
