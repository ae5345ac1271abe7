//! Command-line frontend: run the tracker over sequence directories,
//! evaluate results, materialize synthetic presets, and benchmark
//! throughput.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use jsar_core::config::{parse_config, Mode, TrackerConfig};
use jsar_core::eval::{
    evaluate_boxes, list_frame_paths, load_sequence, read_results, write_results, EvalError,
    MetricsBlock, ResultsFile,
};
use jsar_core::features::Frame;
use jsar_core::geom::{Bbox, Rect};
use jsar_core::imgio;
use jsar_core::runlog::RunLog;
use jsar_core::synth;
use jsar_core::tracker::{run_sequence_with_log, Status, TrackerOutput};

/// Exit codes: 2 = bad input layout, 3 = config error, 4 = runtime failure.
const EXIT_INPUT: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

#[derive(Parser)]
#[command(
    name = "jsar",
    about = "Joint scale/aspect-ratio correlation-filter tracker with re-detection",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Tracker configuration file (key = value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Tracking mode override.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// Output directory.
    #[arg(long, default_value = "jsar_out")]
    out: PathBuf,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::parse(s).ok_or_else(|| {
        format!("unknown mode `{s}` (expected jsar | jsar-re | translation-only | multi-scale-baseline)")
    })
}

#[derive(Subcommand)]
enum Command {
    /// Track a sequence directory (img/ + optional groundtruth.txt).
    Track {
        seq_dir: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
        /// Burn predicted (and truth, when present) boxes into output frames.
        #[arg(long)]
        overlay: bool,
        /// Initial box `x,y,w,h` (top-left); defaults to the first
        /// ground-truth line.
        #[arg(long, value_parser = parse_rect)]
        init: Option<Rect>,
    },
    /// Evaluate a results file against a sequence's ground truth.
    Eval {
        results_file: PathBuf,
        seq_dir: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Materialize a synthetic preset sequence to disk.
    Synth {
        /// One of: static, drift, zoom_in, aspect_shear, occlusion_20f, teleport.
        preset: String,
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Track + evaluate several sequences and report per-sequence fps.
    Bench {
        #[arg(required = true)]
        seq_dirs: Vec<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn parse_rect(s: &str) -> Result<Rect, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err("expected x,y,w,h".into());
    }
    let mut vals = [0.0f64; 4];
    for (dst, p) in vals.iter_mut().zip(&parts) {
        *dst = p.trim().parse().map_err(|_| format!("bad number `{p}`"))?;
    }
    if vals[2] <= 0.0 || vals[3] <= 0.0 {
        return Err("width and height must be positive".into());
    }
    Ok(Rect::new(vals[0], vals[1], vals[2], vals[3]))
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn input(msg: impl ToString) -> Self {
        Self {
            code: EXIT_INPUT,
            message: msg.to_string(),
        }
    }
    fn config(msg: impl ToString) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: msg.to_string(),
        }
    }
    fn runtime(msg: impl ToString) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: msg.to_string(),
        }
    }
}

fn load_config(common: &CommonOpts) -> Result<TrackerConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            parse_config(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
        }
        None => TrackerConfig::default(),
    };
    if let Some(mode) = common.mode {
        cfg.mode = mode;
    }
    cfg.validate().map_err(CliError::config)?;
    Ok(cfg)
}

fn load_frames(paths: &[PathBuf]) -> Result<Vec<Frame>, CliError> {
    paths
        .iter()
        .enumerate()
        .map(|(i, p)| imgio::load_frame(p, i).map_err(CliError::input))
        .collect()
}

/// Frames + optional truth + init box for a sequence directory. Ground truth
/// is optional when `--init` provides the starting box.
fn load_inputs(
    seq_dir: &Path,
    init: Option<Rect>,
) -> Result<(String, Vec<PathBuf>, Option<Vec<Option<Rect>>>, Rect), CliError> {
    match load_sequence(seq_dir) {
        Ok(seq) => {
            let first = seq.truth[0].expect("validated first-frame truth");
            Ok((
                seq.name,
                seq.frame_paths,
                Some(seq.truth),
                init.unwrap_or(first),
            ))
        }
        Err(EvalError::MissingGroundtruth { .. }) => {
            let init = init.ok_or_else(|| {
                CliError::input("no groundtruth.txt: supply --init x,y,w,h for the first frame")
            })?;
            let paths = list_frame_paths(seq_dir).map_err(CliError::input)?;
            let name = seq_dir
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "sequence".into());
            Ok((name, paths, None, init))
        }
        Err(e) => Err(CliError::input(e)),
    }
}

fn track_one(
    seq_dir: &Path,
    cfg: &TrackerConfig,
    out_dir: &Path,
    overlay: bool,
    init: Option<Rect>,
) -> Result<(String, TrackerOutput, Option<Vec<Option<Rect>>>), CliError> {
    let (name, paths, truth, init_rect) = load_inputs(seq_dir, init)?;
    let frames = load_frames(&paths)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::runtime(format!("{}: {e}", out_dir.display())))?;

    let log_path = out_dir.join(format!("{name}.run.log"));
    let log_file = std::fs::File::create(&log_path)
        .map_err(|e| CliError::runtime(format!("{}: {e}", log_path.display())))?;
    let log = RunLog::with_sink(Box::new(std::io::BufWriter::new(log_file)));

    let (output, _log) = run_sequence_with_log(&frames, Bbox::from_rect(init_rect), cfg, log)
        .map_err(CliError::runtime)?;

    let results = ResultsFile {
        seq_name: name.clone(),
        config_hash: cfg.hash(),
        fps: output.fps,
        records: output.records.clone(),
        metrics: None,
    };
    let results_path = out_dir.join(format!("{name}.results.txt"));
    write_results(&results_path, &results).map_err(CliError::runtime)?;

    if overlay {
        let overlay_dir = out_dir.join(format!("{name}.overlay"));
        std::fs::create_dir_all(&overlay_dir)
            .map_err(|e| CliError::runtime(format!("{}: {e}", overlay_dir.display())))?;
        for (i, frame) in frames.iter().enumerate() {
            let mut canvas = frame.clone();
            imgio::draw_rect(&mut canvas, output.records[i].bbox.to_rect(), [255, 40, 40]);
            if let Some(truth) = &truth {
                if let Some(t) = truth[i] {
                    imgio::draw_rect(&mut canvas, t, [40, 255, 40]);
                }
            }
            let path = overlay_dir.join(format!("{:06}.png", i + 1));
            imgio::save_frame(&canvas, &path).map_err(CliError::runtime)?;
        }
    }
    Ok((name, output, truth))
}

fn cmd_track(
    seq_dir: &Path,
    common: &CommonOpts,
    overlay: bool,
    init: Option<Rect>,
) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let (name, output, _) = track_one(seq_dir, &cfg, &common.out, overlay, init)?;
    let tracked = output
        .records
        .iter()
        .filter(|r| r.status == Status::Tracked)
        .count();
    println!(
        "{name}: {} frames, {:.1} fps, {} tracked / {} redetecting / {} reinitialized",
        output.records.len(),
        output.fps,
        tracked,
        output
            .records
            .iter()
            .filter(|r| r.status == Status::Redetecting)
            .count(),
        output
            .records
            .iter()
            .filter(|r| r.status == Status::Reinitialized)
            .count(),
    );
    println!("results: {}", common.out.join(format!("{name}.results.txt")).display());
    Ok(())
}

fn cmd_eval(results_file: &Path, seq_dir: &Path, common: &CommonOpts) -> Result<(), CliError> {
    let results = read_results(results_file).map_err(CliError::input)?;
    let seq = load_sequence(seq_dir).map_err(CliError::input)?;
    if results.records.len() != seq.truth.len() {
        return Err(CliError::input(format!(
            "results rows ({}) do not match ground-truth rows ({})",
            results.records.len(),
            seq.truth.len()
        )));
    }
    let boxes: Vec<Rect> = results.records.iter().map(|r| r.bbox.to_rect()).collect();
    let eval = evaluate_boxes(&boxes, &seq.truth, results.fps).map_err(CliError::runtime)?;
    println!(
        "{}: precision@20 = {:.3}  AUC = {:.3}  fps = {:.1}",
        results.seq_name, eval.precision_at_20, eval.auc, eval.fps
    );
    std::fs::create_dir_all(&common.out)
        .map_err(|e| CliError::runtime(format!("{}: {e}", common.out.display())))?;
    let enriched = ResultsFile {
        metrics: Some(MetricsBlock::from_eval(&eval)),
        ..results
    };
    let metrics_path = common
        .out
        .join(format!("{}.metrics.txt", enriched.seq_name));
    write_results(&metrics_path, &enriched).map_err(CliError::runtime)?;
    println!("metrics: {}", metrics_path.display());
    Ok(())
}

fn cmd_synth(preset: &str, common: &CommonOpts, seed: u64) -> Result<(), CliError> {
    let scenario = synth::preset(preset)
        .map_err(CliError::input)?
        .with_seed(seed);
    let dir = common.out.join(&scenario.name);
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))?;
    let n = synth::export(&scenario, &dir).map_err(CliError::runtime)?;
    println!("{preset}: wrote {n} frames to {}", dir.display());
    Ok(())
}

fn cmd_bench(seq_dirs: &[PathBuf], common: &CommonOpts) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let mut rows: Vec<(String, f64, Option<f64>)> = Vec::new();
    for dir in seq_dirs {
        let (name, output, truth) = track_one(dir, &cfg, &common.out, false, None)?;
        let auc = truth.and_then(|t| {
            let boxes: Vec<Rect> = output.records.iter().map(|r| r.bbox.to_rect()).collect();
            evaluate_boxes(&boxes, &t, output.fps).ok().map(|e| e.auc)
        });
        rows.push((name, output.fps, auc));
    }
    rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    println!("{:<24} {:>8} {:>8}", "sequence", "fps", "AUC");
    let mut sum = 0.0;
    for (name, fps, auc) in &rows {
        match auc {
            Some(a) => println!("{name:<24} {fps:>8.1} {a:>8.3}"),
            None => println!("{name:<24} {fps:>8.1} {:>8}", "-"),
        }
        sum += fps;
    }
    println!("mean fps: {:.1}", sum / rows.len() as f64);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Track {
            seq_dir,
            common,
            overlay,
            init,
        } => cmd_track(seq_dir, common, *overlay, *init),
        Command::Eval {
            results_file,
            seq_dir,
            common,
        } => cmd_eval(results_file, seq_dir, common),
        Command::Synth {
            preset,
            common,
            seed,
        } => cmd_synth(preset, common, *seed),
        Command::Bench { seq_dirs, common } => cmd_bench(seq_dirs, common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
