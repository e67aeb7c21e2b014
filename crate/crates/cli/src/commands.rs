use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use srls_core::io::ckts::{read_ckts, read_image, read_kt_data, read_sensitivities, write_ckts, KtSamples};
use srls_core::io::config::{parse_config, render_config, RunConfig};
use srls_core::io::export::{
    error_map, export_frame, export_region, export_yt, write_history_csv, write_metrics_csv, Window,
};
use srls_core::metrics::evaluate as compute_metrics;
use srls_core::phantom::{make_mask, make_phantom, simulate_acquisition};
use srls_core::solvers::{solve, solve_baseline_ls};
use srls_core::{adjoint_encode, ImageSequence, MetricsReport, SmoothnessMode};

use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::staging::Stage;

pub const X_STAR: &str = "x_star.ckts";
pub const L_STAR: &str = "l_star.ckts";
pub const S_STAR: &str = "s_star.ckts";
pub const SENS: &str = "sens.ckts";
pub const MASK: &str = "mask.ckts";
pub const Y: &str = "y.ckts";
pub const METRICS_CSV: &str = "metrics.csv";
pub const TABLE_CSV: &str = "table.csv";
pub const HISTORY_CSV: &str = "history.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    #[value(name = "sr-l1")]
    SrL1,
    #[value(name = "sr-l2")]
    SrL2,
    Ls,
    Zerofilled,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::SrL1 => "sr-l1",
            Method::SrL2 => "sr-l2",
            Method::Ls => "ls",
            Method::Zerofilled => "zerofilled",
        }
    }

    fn mode(self) -> Option<SmoothnessMode> {
        match self {
            Method::SrL1 => Some(SmoothnessMode::L1),
            Method::SrL2 => Some(SmoothnessMode::L2),
            Method::Ls => Some(SmoothnessMode::None),
            Method::Zerofilled => None,
        }
    }
}

/// Benchmark order, which is also the row order of its table.
pub const BENCHMARK_METHODS: [Method; 4] = [Method::Zerofilled, Method::Ls, Method::SrL2, Method::SrL1];

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Run configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct ReconstructArgs {
    /// Directory written by `simulate`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Method,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Directory holding the reference `x_star.ckts`.
    #[arg(long)]
    pub truth: PathBuf,
    /// Reconstruction directories; each row is named after its directory.
    #[arg(required = true)]
    pub recon: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Frame for figure exports.
    #[arg(long)]
    pub frame: Option<usize>,
    /// x column for y-t exports.
    #[arg(long)]
    pub slice: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub frame: Option<usize>,
    #[arg(long)]
    pub slice: Option<usize>,
}

/// Effective configuration and its rendered text.
fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<(RunConfig, String)> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            parse_config(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.phantom.seed = seed;
    }
    let text = render_config(&cfg);
    Ok((cfg, text))
}

fn seeds(manifest: &mut RunManifest, seed: u64) {
    for stream in ["phantom", "sensitivities", "mask", "noise"] {
        manifest.seeds.insert(stream.to_string(), seed);
    }
}

fn simulate_into(dir: &Path, cfg: &RunConfig, manifest: &mut RunManifest) -> Result<()> {
    let seed = cfg.phantom.seed;
    let spec = &cfg.phantom;
    let (truth, mask, y) = manifest.timed("simulate", || {
        let truth = make_phantom(spec)?;
        let mask = make_mask(
            spec.nx,
            spec.ny,
            spec.nt,
            cfg.run.acceleration,
            cfg.run.center_lines,
            seed,
        )?;
        let y = simulate_acquisition(&truth, &mask)?;
        Ok((truth, mask, y))
    })?;
    manifest.timed("write", || {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        write_ckts(dir.join(X_STAR), &truth.x_star.into(), seed)?;
        write_ckts(dir.join(L_STAR), &truth.l_star.into(), seed)?;
        write_ckts(dir.join(S_STAR), &truth.s_star.into(), seed)?;
        write_ckts(dir.join(SENS), &truth.sens.into(), seed)?;
        write_ckts(dir.join(MASK), &mask.into(), seed)?;
        write_ckts(dir.join(Y), &KtSamples::from(&y).into(), seed)?;
        Ok(())
    })?;
    seeds(manifest, seed);
    Ok(())
}

fn reconstruct_into(
    data: &Path,
    dir: &Path,
    cfg: &RunConfig,
    method: Method,
    manifest: &mut RunManifest,
) -> Result<()> {
    let name = method.name();
    let (y, sens, seed) = manifest.timed(&format!("{name}: load"), || {
        let y = read_kt_data(data.join(Y), data.join(MASK))?;
        let sens = read_sensitivities(data.join(SENS))?;
        let seed = read_ckts(data.join(Y))?.0.seed;
        Ok((y, sens, seed))
    })?;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let Some(mode) = method.mode() else {
        let x = manifest.timed(&format!("{name}: solve"), || Ok(adjoint_encode(&y, &sens)?))?;
        write_ckts(dir.join("x.ckts"), &x.into(), seed)?;
        return Ok(());
    };
    let solver_cfg = cfg.solver_for(mode);
    let result = manifest.timed(&format!("{name}: solve"), || {
        Ok(match method {
            Method::Ls => solve_baseline_ls(&y, &sens, &solver_cfg)?,
            _ => solve(&y, &sens, &solver_cfg)?,
        })
    })?;
    if !result.converged {
        log::info!(
            "{name}: stopped at max_iter = {} before the tolerance was met",
            result.iterations
        );
    }
    manifest.iterations.insert(name.to_string(), result.iterations);
    manifest.converged.insert(name.to_string(), result.converged);
    manifest.timed(&format!("{name}: write"), || {
        write_ckts(dir.join("l.ckts"), &result.l.into(), seed)?;
        write_ckts(dir.join("s.ckts"), &result.s.into(), seed)?;
        write_ckts(dir.join("x.ckts"), &result.x.into(), seed)?;
        write_history_csv(dir.join(HISTORY_CSV), &result.history)?;
        Ok(())
    })
}

fn dir_name(dir: &Path) -> String {
    let canonical = dir.canonicalize().unwrap_or_else(|_| dir.to_path_buf());
    canonical
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "recon".to_string())
}

struct FigureSettings {
    frame: usize,
    slice: usize,
}

fn export_figures(
    dir: &Path,
    name: &str,
    reference: &ImageSequence,
    rec: &ImageSequence,
    fig: &FigureSettings,
) -> Result<()> {
    let window = Window::full_range(reference);
    let err = error_map(reference, rec)?;
    let (nx, ny) = (rec.nx(), rec.ny());
    let (w, h) = ((nx / 2).max(1), (ny / 2).max(1));
    let file = |suffix: &str| dir.join(format!("{name}_{suffix}.pgm"));
    export_frame(file("frame"), rec, fig.frame, window)?;
    export_region(file("region"), rec, fig.frame, (nx / 4, ny / 4), (w, h), 4, window)?;
    export_frame(file("error"), &err, fig.frame, Window::error_map())?;
    export_yt(file("yt"), rec, fig.slice, window)?;
    export_yt(file("yt_error"), &err, fig.slice, Window::error_map())?;
    Ok(())
}

fn evaluate_into(
    truth: &Path,
    recon: &[PathBuf],
    dir: &Path,
    csv_name: &str,
    fig: &FigureSettings,
    manifest: &mut RunManifest,
) -> Result<Vec<(String, MetricsReport)>> {
    let reference = read_image(truth.join(X_STAR))?;
    if fig.frame >= reference.nt() {
        return Err(CliError::Usage(format!(
            "--frame {} out of range (nt = {})",
            fig.frame,
            reference.nt()
        )));
    }
    if fig.slice >= reference.nx() {
        return Err(CliError::Usage(format!(
            "--slice {} out of range (nx = {})",
            fig.slice,
            reference.nx()
        )));
    }
    let figures = dir.join("figures");
    fs::create_dir_all(&figures).map_err(|e| CliError::io(&figures, e))?;
    export_frame(
        figures.join("reference_frame.pgm"),
        &reference,
        fig.frame,
        Window::full_range(&reference),
    )?;
    export_yt(
        figures.join("reference_yt.pgm"),
        &reference,
        fig.slice,
        Window::full_range(&reference),
    )?;

    let mut rows: Vec<(String, MetricsReport)> = Vec::new();
    for rdir in recon {
        let path = if rdir.join("x.ckts").exists() {
            rdir.join("x.ckts")
        } else {
            rdir.join(X_STAR)
        };
        let rec = read_image(&path)?;
        if !rec.same_shape(&reference) {
            return Err(CliError::Usage(format!(
                "{}: reconstruction is {}x{}x{}, reference is {}x{}x{}",
                rdir.display(),
                rec.nx(),
                rec.ny(),
                rec.nt(),
                reference.nx(),
                reference.ny(),
                reference.nt()
            )));
        }
        let base = dir_name(rdir);
        let mut name = base.clone();
        let mut n = 2;
        while rows.iter().any(|(existing, _)| *existing == name) {
            name = format!("{base}-{n}");
            n += 1;
        }
        let report = manifest.timed(&format!("evaluate {name}"), || Ok(compute_metrics(&reference, &rec)?))?;
        export_figures(&figures, &name, &reference, &rec, fig)?;
        rows.push((name, report));
    }
    write_metrics_csv(dir.join(csv_name), &rows)?;
    Ok(rows)
}

/// Simulates the configured phantom and acquisition into `--out`.
pub fn simulate(args: &SimulateArgs, command_line: &[String]) -> Result<RunManifest> {
    let (cfg, text) = load_config(args.config.as_deref(), args.seed)?;
    let mut manifest = RunManifest::new(command_line, &text);
    let stage = Stage::new(&args.out)?;
    simulate_into(stage.path(), &cfg, &mut manifest)?;
    manifest.finish(stage.path())?;
    stage.commit()?;
    Ok(manifest)
}

pub fn reconstruct(args: &ReconstructArgs, command_line: &[String]) -> Result<RunManifest> {
    let (cfg, text) = load_config(args.config.as_deref(), None)?;
    let mut manifest = RunManifest::new(command_line, &text);
    let stage = Stage::new(&args.out)?;
    reconstruct_into(&args.data, stage.path(), &cfg, args.mode, &mut manifest)?;
    if let Ok((header, _)) = read_ckts(args.data.join(Y)) {
        manifest.seeds.insert("data".to_string(), header.seed);
    }
    manifest.finish(stage.path())?;
    stage.commit()?;
    Ok(manifest)
}

/// Scores each reconstruction against the truth and writes `metrics.csv`
/// plus figure rasters under `figures/`.
pub fn evaluate(args: &EvaluateArgs, command_line: &[String]) -> Result<RunManifest> {
    let (cfg, text) = load_config(args.config.as_deref(), None)?;
    let mut manifest = RunManifest::new(command_line, &text);
    let reference = read_image(args.truth.join(X_STAR))?;
    let fig = FigureSettings {
        frame: args.frame.or(cfg.run.frame).unwrap_or(reference.nt() / 2),
        slice: args.slice.or(cfg.run.slice).unwrap_or(reference.nx() / 2),
    };
    let stage = Stage::new(&args.out)?;
    evaluate_into(&args.truth, &args.recon, stage.path(), METRICS_CSV, &fig, &mut manifest)?;
    manifest.finish(stage.path())?;
    stage.commit()?;
    Ok(manifest)
}

/// Simulation, the four reconstructions and their evaluation in one output
/// directory: `data/`, one directory per method, `table.csv` and `figures/`.
pub fn benchmark(args: &BenchmarkArgs, command_line: &[String]) -> Result<RunManifest> {
    let (cfg, text) = load_config(args.config.as_deref(), args.seed)?;
    let mut manifest = RunManifest::new(command_line, &text);
    let stage = Stage::new(&args.out)?;
    let root = stage.path().to_path_buf();
    let data = root.join("data");
    simulate_into(&data, &cfg, &mut manifest)?;
    let mut dirs = Vec::new();
    for method in BENCHMARK_METHODS {
        let dir = root.join(method.name());
        reconstruct_into(&data, &dir, &cfg, method, &mut manifest)?;
        dirs.push(dir);
    }
    let fig = FigureSettings {
        frame: args.frame.unwrap_or(cfg.frame()),
        slice: args.slice.unwrap_or(cfg.slice()),
    };
    evaluate_into(&data, &dirs, &root, TABLE_CSV, &fig, &mut manifest)?;
    manifest.finish(&root)?;
    stage.commit()?;
    Ok(manifest)
}
