//! `rcur` — robust CUR decompositions from the command line.
//!
//! Subcommands wrap the library pipelines: `synth` generates instances,
//! `rpca` runs the alternating-projections solver, `rcur` / `hybrid` run
//! the sampled CUR pipelines, `css` runs greedy column selection,
//! `diagnose` measures theory-side quantities, `frames` converts between
//! PGM sequences and matrix files, and `bench` compares RCUR against
//! full-matrix RPCA.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 numerical failure
//! (non-convergence, rank-deficient core after retry).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use rcur_core::bench::{bench_compare, emit_table, BenchReport, TableFormat};
use rcur_core::diagnostics::{self, DiagnosticsReport};
use rcur_core::io::{self, Frame, MatrixFormat};
use rcur_core::mat::{DenseMatrix, Select};
use rcur_core::rcur::{rcur_hybrid, rcur_uniform, RcurConfig};
use rcur_core::rpca::{altproj, RpcaConfig};
use rcur_core::sampling::{greedy_css, split_seed, SampleConfig, SampleMode, SizeSpec, SizeVariant};
use rcur_core::synth::{self, SynthConfig};
use rcur_core::{Error, Result};

const EXIT_USAGE_IO: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

#[derive(Parser)]
#[command(name = "rcur", version, about = "Robust CUR decompositions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic D = L + S instance (or a synthetic video).
    Synth(SynthArgs),
    /// Split a matrix into low-rank + sparse with alternating projections.
    Rpca(RpcaArgs),
    /// Uniform-sampling robust CUR decomposition.
    Rcur(RcurArgs),
    /// Robust CUR reduced to exactly r rows and columns.
    Hybrid(RcurArgs),
    /// Greedy column subset selection on a matrix.
    Css(CssArgs),
    /// Measure incoherence, sparsity, conditioning, and rank.
    Diagnose(DiagnoseArgs),
    /// Convert between a PGM frame directory and a matrix file.
    Frames(FramesArgs),
    /// Time RCUR against full-matrix RPCA on synthetic instances.
    Bench(BenchArgs),
}

/// Sample-size argument: a plain count or `auto:<c>` for the
/// ceil(c·μ·r·ln n) heuristic with μ estimated from the input's rank-r SVD.
#[derive(Debug, Clone, Copy, Serialize)]
enum SizeArg {
    Count(usize),
    Auto(f64),
}

impl FromStr for SizeArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if let Some(c) = s.strip_prefix("auto:") {
            let c: f64 = c
                .parse()
                .map_err(|_| format!("bad heuristic constant in `auto:{c}`"))?;
            if c <= 0.0 {
                return Err("heuristic constant must be > 0".into());
            }
            Ok(SizeArg::Auto(c))
        } else {
            s.parse()
                .map(SizeArg::Count)
                .map_err(|_| format!("`{s}` is neither a count nor `auto:<c>`"))
        }
    }
}

impl SizeArg {
    fn to_spec(self) -> SizeSpec {
        match self {
            SizeArg::Count(k) => SizeSpec::Count(k),
            SizeArg::Auto(c) => SizeSpec::Heuristic {
                c,
                variant: SizeVariant::LogN,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum FormatArg {
    Csv,
    Bin,
}

impl From<FormatArg> for MatrixFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => MatrixFormat::Csv,
            FormatArg::Bin => MatrixFormat::Bin,
        }
    }
}

#[derive(Args, Serialize)]
struct OutputArgs {
    /// Output directory for matrices and frames.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Matrix file format.
    #[arg(long, value_enum, default_value = "bin")]
    format: FormatArg,
    /// JSON report path (default: <out>/report.json).
    #[arg(long)]
    report: Option<PathBuf>,
}

impl OutputArgs {
    fn report_path(&self) -> PathBuf {
        self.report
            .clone()
            .unwrap_or_else(|| self.out.join("report.json"))
    }

    fn ext(&self) -> &'static str {
        match self.format {
            FormatArg::Csv => "csv",
            FormatArg::Bin => "bin",
        }
    }

    fn save(&self, a: &DenseMatrix, stem: &str) -> Result<PathBuf> {
        let path = self.out.join(format!("{stem}.{}", self.ext()));
        io::save_matrix(a, &path, self.format.into())?;
        Ok(path)
    }
}

#[derive(Args, Serialize)]
struct SolverArgs {
    /// Target rank r.
    #[arg(long)]
    rank: usize,
    /// Relative Frobenius residual stopping tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Iteration cap for the solver.
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Threshold scale ξ.
    #[arg(long, default_value_t = 1.0)]
    xi: f64,
    /// Threshold decay ρ in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Incoherence hint for the threshold schedule (default: estimated).
    #[arg(long)]
    mu_hint: Option<f64>,
    /// Initialization threshold η (default: automatic).
    #[arg(long)]
    eta: Option<f64>,
    /// Jump straight to rank r instead of the stagewise schedule.
    #[arg(long)]
    single_shot: bool,
}

impl SolverArgs {
    fn to_config(&self) -> RpcaConfig {
        RpcaConfig {
            target_rank: self.rank,
            max_iters: self.max_iters,
            tol: self.tol,
            threshold_scale: self.xi,
            threshold_decay: self.rho,
            stagewise: !self.single_shot,
            eta_init: self.eta,
            mu_hint: self.mu_hint,
        }
    }
}

#[derive(Args, Serialize)]
struct SynthArgs {
    /// Matrix rows m (pixels for --video).
    #[arg(long, default_value_t = 200)]
    rows: usize,
    /// Matrix columns n (frame count for --video).
    #[arg(long, default_value_t = 200)]
    cols: usize,
    #[arg(long)]
    rank: usize,
    /// Outlier density per row/column.
    #[arg(long, default_value_t = 0.02)]
    alpha: f64,
    /// Condition number of the low-rank part.
    #[arg(long, default_value_t = 5.0)]
    kappa: f64,
    /// Outlier magnitude as a multiple of the mean |L| entry.
    #[arg(long, default_value_t = 10.0)]
    magnitude: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Generate a synthetic video (PGM frames) instead of a matrix triple.
    #[arg(long)]
    video: bool,
    /// Frame height for --video.
    #[arg(long, default_value_t = 64)]
    height: usize,
    /// Frame width for --video.
    #[arg(long, default_value_t = 80)]
    width: usize,
    /// Foreground blob edge length for --video.
    #[arg(long, default_value_t = 8)]
    blob: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct RpcaArgs {
    /// Input matrix file (csv or rcur-bin, by extension).
    input: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct RcurArgs {
    /// Input matrix file, or a directory of PGM frames.
    input: PathBuf,
    /// Row sample size: a count or `auto:<c>`.
    #[arg(long, default_value = "auto:5")]
    rows: SizeArg,
    /// Column sample size: a count or `auto:<c>`.
    #[arg(long, default_value = "auto:5")]
    cols: SizeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct CssArgs {
    /// Input matrix file.
    input: PathBuf,
    /// Subspace rank r (rows of the factor fed to the greedy selection).
    #[arg(long)]
    rank: usize,
    /// Number of columns to keep (default: exactly r).
    #[arg(long)]
    cols: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct DiagnoseArgs {
    /// Input matrix file (the low-rank part or the observed matrix).
    input: PathBuf,
    /// Optional sparse-part matrix file for the sparsity measurements.
    #[arg(long)]
    sparse: Option<PathBuf>,
    #[arg(long)]
    rank: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct FramesArgs {
    /// A PGM directory (packs to a matrix) or a matrix file (unpacks to
    /// frames; needs --height and --width).
    input: PathBuf,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Serialize)]
struct BenchArgs {
    #[arg(long, default_value_t = 2000)]
    rows: usize,
    #[arg(long, default_value_t = 2000)]
    cols: usize,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, default_value_t = 5.0)]
    kappa: f64,
    #[arg(long, default_value_t = 10.0)]
    magnitude: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    /// Row sample size for the RCUR side.
    #[arg(long, default_value = "auto:5")]
    sample_rows: SizeArg,
    /// Column sample size for the RCUR side.
    #[arg(long, default_value = "auto:5")]
    sample_cols: SizeArg,
    /// Run trials in parallel. Error statistics only: wall times are
    /// omitted from the table and report.
    #[arg(long)]
    parallel_trials: bool,
    /// Table format printed to stdout and written next to the report.
    #[arg(long, value_enum, default_value = "markdown")]
    table: TableArg,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum TableArg {
    Markdown,
    Csv,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successful exits; everything else
            // is a usage error.
            let code = if e.use_stderr() { EXIT_USAGE_IO } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::RankDeficientCore { .. } | Error::DegenerateSelection | Error::NonFinite { .. } => {
            EXIT_NUMERICAL
        }
        _ => EXIT_USAGE_IO,
    }
}

fn run(cmd: Cmd) -> Result<u8> {
    match cmd {
        Cmd::Synth(a) => cmd_synth(a),
        Cmd::Rpca(a) => cmd_rpca(a),
        Cmd::Rcur(a) => cmd_rcur(a),
        Cmd::Hybrid(a) => cmd_hybrid(a),
        Cmd::Css(a) => cmd_css(a),
        Cmd::Diagnose(a) => cmd_diagnose(a),
        Cmd::Frames(a) => cmd_frames(a),
        Cmd::Bench(a) => cmd_bench(a),
    }
}

fn ensure_out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.display().to_string(),
        source: e,
    })
}

fn write_report(path: &Path, report: &serde_json::Value) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::Io {
                path: parent.display().to_string(),
                source: e,
            })?;
        }
    }
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn load_input(path: &Path) -> Result<DenseMatrix> {
    io::load_matrix(path, MatrixFormat::from_path(path))
}

fn config_value<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).expect("args serialize")
}

fn cmd_synth(a: SynthArgs) -> Result<u8> {
    ensure_out_dir(&a.output.out)?;
    let t0 = Instant::now();
    if a.video {
        let gt = synth::gen_video(a.cols, a.height, a.width, a.rank, a.alpha, a.blob, a.seed)?;
        let frame_dir = a.output.out.join("video");
        io::matrix_to_frames(&gt.d, a.height, a.width, &frame_dir)?;
        let mask_path = a.output.out.join("mask.json");
        let mask = gt.foreground_mask.expect("video retains its mask");
        let mask_cols: Vec<Vec<usize>> = (0..a.cols)
            .map(|j| (0..mask.len()).filter(|&p| mask[p][j]).collect())
            .collect();
        write_report(&mask_path, &json!({ "foreground_pixels_per_frame": mask_cols }))?;
        let report = json!({
            "command": "synth",
            "config": config_value(&a),
            "timings": { "generate_seconds": t0.elapsed().as_secs_f64() },
            "artifacts": {
                "frames_dir": frame_dir,
                "mask": mask_path,
                "frame_count": a.cols,
                "height": a.height,
                "width": a.width,
            },
        });
        write_report(&a.output.report_path(), &report)?;
    } else {
        let gt = synth::generate(&SynthConfig {
            m: a.rows,
            n: a.cols,
            r: a.rank,
            kappa: a.kappa,
            alpha: a.alpha,
            outlier_magnitude: a.magnitude,
            seed: a.seed,
        })?;
        let d_path = a.output.save(&gt.d, "d")?;
        let l_path = a.output.save(&gt.l, "l")?;
        let s_path = a.output.save(&gt.s, "s")?;
        let diag = diagnostics::diagnose(&gt.l, Some(&gt.s), a.rank)?;
        let report = json!({
            "command": "synth",
            "config": config_value(&a),
            "timings": { "generate_seconds": t0.elapsed().as_secs_f64() },
            "diagnostics": diag,
            "artifacts": { "d": d_path, "l": l_path, "s": s_path },
        });
        write_report(&a.output.report_path(), &report)?;
    }
    Ok(0)
}

fn cmd_rpca(a: RpcaArgs) -> Result<u8> {
    ensure_out_dir(&a.output.out)?;
    let d = load_input(&a.input)?;
    let cfg = a.solver.to_config();
    let t0 = Instant::now();
    let res = altproj(&d, &cfg)?;
    let solve_seconds = t0.elapsed().as_secs_f64();
    let l_path = a.output.save(&res.l_hat, "l_hat")?;
    let s_path = a.output.save(&res.s_hat, "s_hat")?;
    let mut diag = diagnostics::diagnose(&res.l_hat, Some(&res.s_hat), a.solver.rank)?;
    diag.rel_spectral_error = Some(diagnostics::relative_error(&d, &res.l_hat)?);
    let report = json!({
        "command": "rpca",
        "config": config_value(&a),
        "timings": { "solve_seconds": solve_seconds },
        "convergence": {
            "iterations": res.iterations,
            "converged": res.converged,
            "residual_trace": res.residual_trace,
        },
        "diagnostics": diag,
        "artifacts": { "l_hat": l_path, "s_hat": s_path },
    });
    write_report(&a.output.report_path(), &report)?;
    Ok(if res.converged { 0 } else { EXIT_NUMERICAL })
}

fn rcur_config(a: &RcurArgs) -> RcurConfig {
    let mut cfg = RcurConfig::new(
        a.solver.to_config(),
        SampleConfig {
            mode: SampleMode::WithoutReplacement,
            seed: split_seed(a.seed, 1),
            size: a.rows.to_spec(),
        },
        SampleConfig {
            mode: SampleMode::WithoutReplacement,
            seed: split_seed(a.seed, 2),
            size: a.cols.to_spec(),
        },
    );
    cfg.hybrid = false;
    cfg
}

/// Shared report body for the rcur/hybrid pipelines.
#[allow(clippy::too_many_arguments)]
fn skeleton_report(
    command: &str,
    config: serde_json::Value,
    d: &DenseMatrix,
    model: &rcur_core::CurModel,
    col_rpca: &rcur_core::RpcaResult,
    row_rpca: &rcur_core::RpcaResult,
    solve_seconds: f64,
    artifacts: serde_json::Value,
) -> Result<(serde_json::Value, bool)> {
    let l_hat = model.reconstruct();
    let mut diag = diagnostics::diagnose(&l_hat, None, model.r)?;
    diag.rel_spectral_error = Some(diagnostics::relative_error(d, &l_hat)?);
    let f = rcur_core::svd::svd_truncated(&l_hat, model.r, 0.0)?;
    diag.beta = Some(diagnostics::beta_factor(
        &f.right_t.transpose(),
        &model.col_indices,
    )?);
    diag.beta_prime = Some(diagnostics::beta_factor(&f.left, &model.row_indices)?);
    let converged = col_rpca.converged && row_rpca.converged;
    let report = json!({
        "command": command,
        "config": config,
        "timings": { "solve_seconds": solve_seconds },
        "convergence": {
            "col_iterations": col_rpca.iterations,
            "col_converged": col_rpca.converged,
            "col_residual_trace": col_rpca.residual_trace,
            "row_iterations": row_rpca.iterations,
            "row_converged": row_rpca.converged,
            "row_residual_trace": row_rpca.residual_trace,
        },
        "selection": {
            "row_indices": model.row_indices.as_slice(),
            "col_indices": model.col_indices.as_slice(),
        },
        "diagnostics": diag,
        "artifacts": artifacts,
    });
    Ok((report, converged))
}

fn cmd_rcur(a: RcurArgs) -> Result<u8> {
    ensure_out_dir(&a.output.out)?;
    let d = load_input(&a.input)?;
    let cfg = rcur_config(&a);
    let t0 = Instant::now();
    let out = rcur_uniform(&d, a.solver.rank, &cfg)?;
    let solve_seconds = t0.elapsed().as_secs_f64();
    let l_path = a.output.save(&out.model.reconstruct(), "l_hat")?;
    let c_path = a.output.save(&out.model.c_hat, "c_hat")?;
    let r_path = a.output.save(&out.model.r_hat, "r_hat")?;
    let artifacts = json!({ "l_hat": l_path, "c_hat": c_path, "r_hat": r_path });
    let (report, converged) = skeleton_report(
        "rcur",
        config_value(&a),
        &d,
        &out.model,
        &out.col_rpca,
        &out.row_rpca,
        solve_seconds,
        artifacts,
    )?;
    write_report(&a.output.report_path(), &report)?;
    Ok(if converged { 0 } else { EXIT_NUMERICAL })
}

fn cmd_hybrid(a: RcurArgs) -> Result<u8> {
    ensure_out_dir(&a.output.out)?;
    let from_frames = a.input.is_dir();
    let (d, frame_shape) = if from_frames {
        let (m, h, w) = io::frames_to_matrix(&a.input)?;
        (m, Some((h, w)))
    } else {
        (load_input(&a.input)?, None)
    };
    let cfg = rcur_config(&a);
    let t0 = Instant::now();
    let out = rcur_hybrid(&d, a.solver.rank, &cfg)?;
    let solve_seconds = t0.elapsed().as_secs_f64();
    let l_hat = out.model.reconstruct();
    let mut artifacts = serde_json::Map::new();
    if let Some((h, w)) = frame_shape {
        // The r selected frames, reconstructed as background: the canonical
        // frames of the sequence.
        let mut canonical = Vec::new();
        for (k, j) in out.model.col_indices.iter().enumerate() {
            let pixels: Vec<u8> = (0..l_hat.rows())
                .map(|i| l_hat.get(i, j).clamp(0.0, 255.0).round() as u8)
                .collect();
            let frame = Frame {
                height: h,
                width: w,
                pixels,
            };
            let path = a.output.out.join(format!("canonical_{k:02}.pgm"));
            io::save_pgm(&frame, &path)?;
            canonical.push(path);
        }
        artifacts.insert("canonical_frames".into(), json!(canonical));
    }
    let l_path = a.output.save(&l_hat, "l_hat")?;
    artifacts.insert("l_hat".into(), json!(l_path));
    let (report, converged) = skeleton_report(
        "hybrid",
        config_value(&a),
        &d,
        &out.model,
        &out.stage1.col_rpca,
        &out.stage1.row_rpca,
        solve_seconds,
        serde_json::Value::Object(artifacts),
    )?;
    write_report(&a.output.report_path(), &report)?;
    Ok(if converged { 0 } else { EXIT_NUMERICAL })
}

fn cmd_css(a: CssArgs) -> Result<u8> {
    ensure_out_dir(&a.output.out)?;
    let d = load_input(&a.input)?;
    let k = a.cols.unwrap_or(a.rank);
    let t0 = Instant::now();
    let f = rcur_core::svd::svd_truncated(&d, a.rank, 0.0)?;
    let selected = greedy_css(&f.right_t, k)?;
    let solve_seconds = t0.elapsed().as_secs_f64();
    let c = d.submatrix(Select::All, Select::Idx(&selected))?;
    let c_path = a.output.save(&c, "c")?;
    let beta = diagnostics::beta_factor(&f.right_t.transpose(), &selected)?;
    let report = json!({
        "command": "css",
        "config": config_value(&a),
        "timings": { "solve_seconds": solve_seconds },
        "selection": { "col_indices": selected.as_slice(), "beta": beta },
        "artifacts": { "c": c_path },
    });
    write_report(&a.output.report_path(), &report)?;
    Ok(0)
}

fn cmd_diagnose(a: DiagnoseArgs) -> Result<u8> {
    ensure_out_dir(&a.output.out)?;
    let l = load_input(&a.input)?;
    let s = a.sparse.as_deref().map(load_input).transpose()?;
    let t0 = Instant::now();
    let diag: DiagnosticsReport = diagnostics::diagnose(&l, s.as_ref(), a.rank)?;
    let report = json!({
        "command": "diagnose",
        "config": config_value(&a),
        "timings": { "measure_seconds": t0.elapsed().as_secs_f64() },
        "diagnostics": diag,
    });
    write_report(&a.output.report_path(), &report)?;
    Ok(0)
}

fn cmd_frames(a: FramesArgs) -> Result<u8> {
    ensure_out_dir(&a.output.out)?;
    if a.input.is_dir() {
        let (m, h, w) = io::frames_to_matrix(&a.input)?;
        let path = a.output.save(&m, "frames")?;
        let report = json!({
            "command": "frames",
            "config": config_value(&a),
            "artifacts": {
                "matrix": path,
                "height": h,
                "width": w,
                "frame_count": m.cols(),
            },
        });
        write_report(&a.output.report_path(), &report)?;
    } else {
        let (h, w) = match (a.height, a.width) {
            (Some(h), Some(w)) => (h, w),
            _ => {
                return Err(Error::InvalidParameter(
                    "unpacking a matrix to frames needs --height and --width".into(),
                ))
            }
        };
        let m = load_input(&a.input)?;
        let frame_dir = a.output.out.join("frames");
        io::matrix_to_frames(&m, h, w, &frame_dir)?;
        let report = json!({
            "command": "frames",
            "config": config_value(&a),
            "artifacts": { "frames_dir": frame_dir, "frame_count": m.cols() },
        });
        write_report(&a.output.report_path(), &report)?;
    }
    Ok(0)
}

fn cmd_bench(a: BenchArgs) -> Result<u8> {
    ensure_out_dir(&a.output.out)?;
    let base = SynthConfig {
        m: a.rows,
        n: a.cols,
        r: a.solver.rank,
        kappa: a.kappa,
        alpha: a.alpha,
        outlier_magnitude: a.magnitude,
        seed: a.seed,
    };
    let cfg = RcurConfig::new(
        a.solver.to_config(),
        SampleConfig {
            mode: SampleMode::WithoutReplacement,
            seed: 0,
            size: a.sample_rows.to_spec(),
        },
        SampleConfig {
            mode: SampleMode::WithoutReplacement,
            seed: 0,
            size: a.sample_cols.to_spec(),
        },
    );
    let report: BenchReport = if a.parallel_trials {
        bench_parallel_errors(&base, &cfg, a.trials)?
    } else {
        bench_compare(&base, &cfg, a.trials)?
    };
    let format = match a.table {
        TableArg::Markdown => TableFormat::Markdown,
        TableArg::Csv => TableFormat::Csv,
    };
    let table = emit_table(std::slice::from_ref(&report), format);
    print!("{table}");
    let table_path = a.output.out.join(match a.table {
        TableArg::Markdown => "bench.md",
        TableArg::Csv => "bench.csv",
    });
    std::fs::write(&table_path, &table).map_err(|e| Error::Io {
        path: table_path.display().to_string(),
        source: e,
    })?;
    let json_report = json!({
        "command": "bench",
        "config": config_value(&a),
        "bench": report,
        "artifacts": { "table": table_path },
    });
    write_report(&a.output.report_path(), &json_report)?;
    Ok(0)
}

/// Parallel trial batch for error statistics: timings are meaningless under
/// contention, so the timing fields are reported as NaN (serialized null).
fn bench_parallel_errors(
    base: &SynthConfig,
    rcur_cfg: &RcurConfig,
    trials: usize,
) -> Result<BenchReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("bench needs at least one trial".into()));
    }
    let results: Vec<Result<(f64, f64)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..trials)
            .map(|t| {
                scope.spawn(move || -> Result<(f64, f64)> {
                    let seed = split_seed(base.seed, t as u64);
                    let gt = synth::generate(&SynthConfig { seed, ..*base })?;
                    let mut cfg = rcur_cfg.clone();
                    cfg.row_sampling.seed = split_seed(seed, 1);
                    cfg.col_sampling.seed = split_seed(seed, 2);
                    let cur = rcur_uniform(&gt.d, base.r, &cfg)?;
                    let full = altproj(&gt.d, &cfg.rpca)?;
                    Ok((
                        diagnostics::relative_error(&gt.l, &cur.model.reconstruct())?,
                        diagnostics::relative_error(&gt.l, &full.l_hat)?,
                    ))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("trial thread panicked"))
            .collect()
    });
    let mut rcur_errs = Vec::new();
    let mut rpca_errs = Vec::new();
    let mut failures = 0;
    for r in results {
        match r {
            Ok((a, b)) => {
                rcur_errs.push(a);
                rpca_errs.push(b);
            }
            Err(_) => failures += 1,
        }
    }
    let median = |v: &mut Vec<f64>| -> f64 {
        if v.is_empty() {
            return f64::NAN;
        }
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mid = v.len() / 2;
        if v.len() % 2 == 1 {
            v[mid]
        } else {
            0.5 * (v[mid - 1] + v[mid])
        }
    };
    Ok(BenchReport {
        m: base.m,
        n: base.n,
        r: base.r,
        alpha: base.alpha,
        kappa: base.kappa,
        seed: base.seed,
        trials,
        failures,
        rcur_seconds: f64::NAN,
        rpca_seconds: f64::NAN,
        speedup: f64::NAN,
        rcur_rel_error: median(&mut rcur_errs),
        rpca_rel_error: median(&mut rpca_errs),
    })
}
