//! Raster (binary PGM) and CSV exports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::ImageSequence;
use crate::metrics::MetricsReport;
use crate::solvers::IterationRecord;

/// Display range `(lo, hi)` mapped linearly onto gray levels 0..=255.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::invalid(format!(
                "display window ({lo}, {hi}) is empty or non-finite"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// Error-map window `[0, 0.2]`.
    pub fn error_map() -> Self {
        Self { lo: 0.0, hi: 0.2 }
    }

    /// `[0, max |seq|]`, or `[0, 1]` for an all-zero sequence.
    pub fn full_range(seq: &ImageSequence) -> Self {
        let max = seq.data().iter().map(|v| v.norm()).fold(0.0, f64::max);
        Self {
            lo: 0.0,
            hi: if max > 0.0 { max } else { 1.0 },
        }
    }

    pub fn gray(&self, v: f64) -> u8 {
        let u = ((v - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0);
        (u * 255.0).round() as u8
    }
}

pub fn write_pgm(path: impl AsRef<Path>, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    let path = path.as_ref();
    if pixels.len() != width * height || width == 0 || height == 0 {
        return Err(Error::invalid(format!(
            "raster of {} bytes does not match {width}x{height}",
            pixels.len()
        )));
    }
    let mut bytes = format!("P5\n{width} {height}\n255\n").into_bytes();
    bytes.extend_from_slice(pixels);
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Magnitude of frame `t`, x across and y down.
pub fn export_frame(path: impl AsRef<Path>, seq: &ImageSequence, t: usize, window: Window) -> Result<()> {
    if t >= seq.nt() {
        return Err(Error::invalid(format!("frame {t} out of range (nt = {})", seq.nt())));
    }
    let pixels: Vec<u8> = seq.frame(t).iter().map(|v| window.gray(v.norm())).collect();
    write_pgm(path, seq.nx(), seq.ny(), &pixels)
}

/// Magnified crop of frame `t`: region `[x0, x0 + w) x [y0, y0 + h)`, each
/// pixel replicated `zoom` times along both axes.
#[allow(clippy::too_many_arguments)]
pub fn export_region(
    path: impl AsRef<Path>,
    seq: &ImageSequence,
    t: usize,
    (x0, y0): (usize, usize),
    (w, h): (usize, usize),
    zoom: usize,
    window: Window,
) -> Result<()> {
    if t >= seq.nt() {
        return Err(Error::invalid(format!("frame {t} out of range (nt = {})", seq.nt())));
    }
    if w == 0 || h == 0 || zoom == 0 || x0 + w > seq.nx() || y0 + h > seq.ny() {
        return Err(Error::invalid("region lies outside the frame or is empty"));
    }
    let (ow, oh) = (w * zoom, h * zoom);
    let mut pixels = Vec::with_capacity(ow * oh);
    for oy in 0..oh {
        for ox in 0..ow {
            pixels.push(window.gray(seq.get(x0 + ox / zoom, y0 + oy / zoom, t).norm()));
        }
    }
    write_pgm(path, ow, oh, &pixels)
}

/// y-t image of column `x_slice`: `ny` rows, `nt` columns.
pub fn export_yt(path: impl AsRef<Path>, seq: &ImageSequence, x_slice: usize, window: Window) -> Result<()> {
    if x_slice >= seq.nx() {
        return Err(Error::invalid(format!(
            "slice {x_slice} out of range (nx = {})",
            seq.nx()
        )));
    }
    let (ny, nt) = (seq.ny(), seq.nt());
    let mut pixels = Vec::with_capacity(ny * nt);
    for y in 0..ny {
        for t in 0..nt {
            pixels.push(window.gray(seq.get(x_slice, y, t).norm()));
        }
    }
    write_pgm(path, nt, ny, &pixels)
}

/// `| |ref| - |rec| |` as a real-valued sequence.
pub fn error_map(reference: &ImageSequence, recon: &ImageSequence) -> Result<ImageSequence> {
    reference.check_same_shape(recon, "reconstruction")?;
    Ok(ImageSequence::from_fn(
        reference.nx(),
        reference.ny(),
        reference.nt(),
        |x, y, t| crate::C64::new((reference.get(x, y, t).norm() - recon.get(x, y, t).norm()).abs(), 0.0),
    ))
}

/// Formats `v` with six significant digits; infinities as `inf`/`-inf`.
pub fn format_significant(v: f64) -> String {
    const DIGITS: i32 = 6;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return format!("{:.*}", (DIGITS - 1) as usize, 0.0);
    }
    let magnitude = v.abs().log10().floor() as i32;
    if !(-5..15).contains(&magnitude) {
        return format!("{:.*e}", (DIGITS - 1) as usize, v);
    }
    let decimals = (DIGITS - 1 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // Rounding may carry into a new leading digit, e.g. 9.999996 -> 10.00000.
    let rounded: f64 = s.parse().unwrap_or(v);
    if rounded.abs().log10().floor() as i32 > magnitude && decimals > 0 {
        format!("{v:.*}", decimals - 1)
    } else {
        s
    }
}

pub const METRICS_HEADER: &str = "method,ser_db,psnr_db,ssim,hfen";

pub fn render_metrics_csv(rows: &[(String, MetricsReport)]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::invalid("metrics table needs at least one row"));
    }
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for (name, r) in rows {
        if name.contains([',', '\n']) {
            return Err(Error::invalid(format!("method name `{name}` contains a separator")));
        }
        let _ = writeln!(
            out,
            "{name},{},{},{},{}",
            format_significant(r.ser_db),
            format_significant(r.psnr_db),
            format_significant(r.ssim),
            format_significant(r.hfen)
        );
    }
    Ok(out)
}

pub fn write_metrics_csv(path: impl AsRef<Path>, rows: &[(String, MetricsReport)]) -> Result<()> {
    let path = path.as_ref();
    let text = render_metrics_csv(rows)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_history_csv(path: impl AsRef<Path>, history: &[IterationRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("k,objective,rel_change,rank_L\n");
    for r in history {
        let _ = writeln!(out, "{},{:e},{:e},{}", r.k, r.objective, r.rel_change, r.rank_l);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
