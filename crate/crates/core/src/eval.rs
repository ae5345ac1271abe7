//! One-pass evaluation: benchmark sequence ingestion, precision/success
//! curves, AUC, and line-oriented results persistence.

use std::fmt;
use std::path::{Path, PathBuf};

pub use crate::geom::{center_error, iou};
use crate::geom::Rect;
use crate::tracker::{FrameRecord, Status, TrackerOutput};

/// Number of samples on both curves.
pub const CURVE_POINTS: usize = 51;
/// Precision thresholds: 0..50 px step 1. Success thresholds: 0..1 step 0.02.
pub const PRECISION_STEP_PX: f64 = 1.0;
pub const SUCCESS_STEP: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    Io { path: String, detail: String },
    MissingImageDir { path: String },
    NoFrames { path: String },
    MissingGroundtruth { path: String },
    ParseLine { path: String, line: usize, detail: String },
    CountMismatch { frames: usize, truths: usize },
    MissingFirstTruth,
    LengthMismatch { records: usize, truths: usize },
    NoValidFrames,
    BadResultsFile { line: usize, detail: String },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Io { path, detail } => write!(f, "{path}: {detail}"),
            EvalError::MissingImageDir { path } => {
                write!(f, "{path}: missing img/ directory")
            }
            EvalError::NoFrames { path } => write!(f, "{path}: img/ has no png or bmp frames"),
            EvalError::MissingGroundtruth { path } => {
                write!(f, "{path}: missing groundtruth.txt")
            }
            EvalError::ParseLine { path, line, detail } => {
                write!(f, "{path}:{line}: {detail}")
            }
            EvalError::CountMismatch { frames, truths } => write!(
                f,
                "ground-truth line count {truths} does not match frame count {frames}"
            ),
            EvalError::MissingFirstTruth => {
                write!(f, "first-frame ground truth is absent (NaN)")
            }
            EvalError::LengthMismatch { records, truths } => write!(
                f,
                "result records ({records}) and ground truth ({truths}) differ in length"
            ),
            EvalError::NoValidFrames => {
                write!(f, "no frames with ground truth to evaluate")
            }
            EvalError::BadResultsFile { line, detail } => {
                write!(f, "results file line {line}: {detail}")
            }
        }
    }
}

impl std::error::Error for EvalError {}

/// A benchmark sequence on disk: ordered frame files plus per-frame ground
/// truth (absent entries mark out-of-view frames).
#[derive(Debug, Clone)]
pub struct SequenceRecord {
    pub name: String,
    pub frame_paths: Vec<PathBuf>,
    pub truth: Vec<Option<Rect>>,
}

/// Lexicographically ordered png/bmp files under `dir/img`.
pub fn list_frame_paths(dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let img = dir.join("img");
    if !img.is_dir() {
        return Err(EvalError::MissingImageDir {
            path: dir.display().to_string(),
        });
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&img)
        .map_err(|e| EvalError::Io {
            path: img.display().to_string(),
            detail: e.to_string(),
        })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("png") | Some("bmp")
            )
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(EvalError::NoFrames {
            path: dir.display().to_string(),
        });
    }
    Ok(paths)
}

fn parse_truth_line(path: &Path, line_no: usize, line: &str) -> Result<Option<Rect>, EvalError> {
    let fields: Vec<&str> = if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split('\t').map(str::trim).collect()
    };
    if fields.len() != 4 {
        return Err(EvalError::ParseLine {
            path: path.display().to_string(),
            line: line_no,
            detail: format!("expected 4 fields, found {}", fields.len()),
        });
    }
    let mut vals = [0.0f64; 4];
    let mut any_nan = false;
    for (dst, field) in vals.iter_mut().zip(&fields) {
        if field.eq_ignore_ascii_case("nan") {
            any_nan = true;
            continue;
        }
        *dst = field.parse().map_err(|_| EvalError::ParseLine {
            path: path.display().to_string(),
            line: line_no,
            detail: format!("cannot parse `{field}` as a number"),
        })?;
        if !dst.is_finite() {
            any_nan = true;
        }
    }
    if any_nan {
        return Ok(None);
    }
    Ok(Some(Rect::new(vals[0], vals[1], vals[2], vals[3])))
}

/// Loads and validates a sequence directory: `img/` frames plus a
/// `groundtruth.txt` with one `x,y,w,h` line per frame (comma or tab
/// separated, NaN fields mark out-of-view).
pub fn load_sequence(dir: &Path) -> Result<SequenceRecord, EvalError> {
    let frame_paths = list_frame_paths(dir)?;
    let gt_path = dir.join("groundtruth.txt");
    if !gt_path.is_file() {
        return Err(EvalError::MissingGroundtruth {
            path: dir.display().to_string(),
        });
    }
    let text = std::fs::read_to_string(&gt_path).map_err(|e| EvalError::Io {
        path: gt_path.display().to_string(),
        detail: e.to_string(),
    })?;
    let mut truth = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        truth.push(parse_truth_line(&gt_path, i + 1, line)?);
    }
    if truth.len() != frame_paths.len() {
        return Err(EvalError::CountMismatch {
            frames: frame_paths.len(),
            truths: truth.len(),
        });
    }
    if truth.first().map_or(true, |t| t.is_none()) {
        return Err(EvalError::MissingFirstTruth);
    }
    let name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sequence".to_string());
    Ok(SequenceRecord {
        name,
        frame_paths,
        truth,
    })
}

/// Full OPE metric bundle for one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    /// Per-frame center error; None where ground truth is absent.
    pub center_errors: Vec<Option<f64>>,
    /// Per-frame IoU; None where ground truth is absent.
    pub ious: Vec<Option<f64>>,
    /// Fraction of frames with center error strictly below 0,1,...,50 px.
    pub precision_curve: Vec<f64>,
    /// Fraction of frames with IoU strictly above 0.00,0.02,...,1.00.
    pub success_curve: Vec<f64>,
    pub precision_at_20: f64,
    /// Arithmetic mean of the success curve samples.
    pub auc: f64,
    pub fps: f64,
}

/// Computes curves from per-frame boxes against ground truth. Out-of-view
/// frames (absent truth) are excluded from both denominators.
pub fn evaluate_boxes(
    boxes: &[Rect],
    truth: &[Option<Rect>],
    fps: f64,
) -> Result<EvalResult, EvalError> {
    if boxes.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            records: boxes.len(),
            truths: truth.len(),
        });
    }
    let mut center_errors = Vec::with_capacity(boxes.len());
    let mut ious = Vec::with_capacity(boxes.len());
    let mut errs = Vec::new();
    let mut overlaps = Vec::new();
    for (b, t) in boxes.iter().zip(truth) {
        match t {
            Some(t) => {
                let e = center_error(*b, *t);
                let o = iou(*b, *t);
                center_errors.push(Some(e));
                ious.push(Some(o));
                errs.push(e);
                overlaps.push(o);
            }
            None => {
                center_errors.push(None);
                ious.push(None);
            }
        }
    }
    if errs.is_empty() {
        return Err(EvalError::NoValidFrames);
    }
    let n = errs.len() as f64;
    let precision_curve: Vec<f64> = (0..CURVE_POINTS)
        .map(|i| {
            let thr = i as f64 * PRECISION_STEP_PX;
            errs.iter().filter(|e| **e < thr).count() as f64 / n
        })
        .collect();
    let success_curve: Vec<f64> = (0..CURVE_POINTS)
        .map(|i| {
            let thr = i as f64 * SUCCESS_STEP;
            overlaps.iter().filter(|o| **o > thr).count() as f64 / n
        })
        .collect();
    let precision_at_20 = precision_curve[20];
    let auc = success_curve.iter().sum::<f64>() / CURVE_POINTS as f64;
    Ok(EvalResult {
        center_errors,
        ious,
        precision_curve,
        success_curve,
        precision_at_20,
        auc,
        fps,
    })
}

/// Evaluates a tracker run against a loaded sequence record.
pub fn evaluate(output: &TrackerOutput, truth: &SequenceRecord) -> Result<EvalResult, EvalError> {
    let boxes: Vec<Rect> = output.records.iter().map(|r| r.bbox.to_rect()).collect();
    evaluate_boxes(&boxes, &truth.truth, output.fps)
}

/// Persistable results: header, per-frame records, optional metric block.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultsFile {
    pub seq_name: String,
    pub config_hash: u64,
    pub fps: f64,
    pub records: Vec<FrameRecord>,
    pub metrics: Option<MetricsBlock>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsBlock {
    pub precision_curve: Vec<f64>,
    pub success_curve: Vec<f64>,
    pub precision_at_20: f64,
    pub auc: f64,
}

impl MetricsBlock {
    pub fn from_eval(result: &EvalResult) -> Self {
        Self {
            precision_curve: result.precision_curve.clone(),
            success_curve: result.success_curve.clone(),
            precision_at_20: result.precision_at_20,
            auc: result.auc,
        }
    }
}

fn fmt_curve(curve: &[f64]) -> String {
    curve
        .iter()
        .map(|v| format!("{v:.6}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Serializes the results file: header, then `idx,x,y,w,h,zeta,status`
/// per frame (top-left box convention, 6 decimal places), then labeled
/// curve vectors when metrics are present.
pub fn render_results(results: &ResultsFile) -> String {
    let mut out = String::new();
    out.push_str("# jsar results v1\n");
    out.push_str(&format!("name = {}\n", results.seq_name));
    out.push_str(&format!("config_hash = {:016x}\n", results.config_hash));
    out.push_str(&format!("fps = {:.6}\n", results.fps));
    out.push_str(&format!("frames = {}\n", results.records.len()));
    out.push_str("idx,x,y,w,h,zeta,status\n");
    for r in &results.records {
        let rect = r.bbox.to_rect();
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{}\n",
            r.index, rect.x, rect.y, rect.w, rect.h, r.zeta, r.status
        ));
    }
    if let Some(m) = &results.metrics {
        out.push_str(&format!("precision_curve = {}\n", fmt_curve(&m.precision_curve)));
        out.push_str(&format!("success_curve = {}\n", fmt_curve(&m.success_curve)));
        out.push_str(&format!("precision_at_20 = {:.6}\n", m.precision_at_20));
        out.push_str(&format!("auc = {:.6}\n", m.auc));
    }
    out
}

/// Atomic write (temp file + rename in the destination directory).
pub fn write_results(path: &Path, results: &ResultsFile) -> Result<(), EvalError> {
    let text = render_results(results);
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    let io_err = |e: std::io::Error| EvalError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    };
    std::fs::write(&tmp, text).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(io_err)?;
    Ok(())
}

pub fn parse_results(text: &str) -> Result<ResultsFile, EvalError> {
    let mut seq_name = String::new();
    let mut config_hash = 0u64;
    let mut fps = 0.0f64;
    let mut frames_declared: Option<usize> = None;
    let mut records = Vec::new();
    let mut precision_curve: Option<Vec<f64>> = None;
    let mut success_curve: Option<Vec<f64>> = None;
    let mut precision_at_20: Option<f64> = None;
    let mut auc: Option<f64> = None;

    let bad = |line: usize, detail: &str| EvalError::BadResultsFile {
        line,
        detail: detail.to_string(),
    };

    let mut in_records = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "idx,x,y,w,h,zeta,status" {
            in_records = true;
            continue;
        }
        if let Some((key, value)) = line.split_once('=') {
            let (key, value) = (key.trim(), value.trim());
            let parse_curve = |v: &str| -> Result<Vec<f64>, EvalError> {
                v.split_whitespace()
                    .map(|tok| {
                        tok.parse::<f64>()
                            .map_err(|_| bad(line_no, &format!("bad curve value `{tok}`")))
                    })
                    .collect()
            };
            match key {
                "name" => seq_name = value.to_string(),
                "config_hash" => {
                    config_hash = u64::from_str_radix(value, 16)
                        .map_err(|_| bad(line_no, "bad config hash"))?;
                }
                "fps" => fps = value.parse().map_err(|_| bad(line_no, "bad fps"))?,
                "frames" => {
                    frames_declared =
                        Some(value.parse().map_err(|_| bad(line_no, "bad frame count"))?)
                }
                "precision_curve" => precision_curve = Some(parse_curve(value)?),
                "success_curve" => success_curve = Some(parse_curve(value)?),
                "precision_at_20" => {
                    precision_at_20 =
                        Some(value.parse().map_err(|_| bad(line_no, "bad precision"))?)
                }
                "auc" => auc = Some(value.parse().map_err(|_| bad(line_no, "bad auc"))?),
                other => return Err(bad(line_no, &format!("unknown key `{other}`"))),
            }
            continue;
        }
        if !in_records {
            return Err(bad(line_no, "record row before header"));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(bad(
                line_no,
                &format!("expected 7 fields in record row, found {}", fields.len()),
            ));
        }
        let index: usize = fields[0]
            .parse()
            .map_err(|_| bad(line_no, "bad frame index"))?;
        let mut vals = [0.0f64; 5];
        for (dst, field) in vals.iter_mut().zip(&fields[1..6]) {
            *dst = field
                .parse()
                .map_err(|_| bad(line_no, &format!("bad number `{field}`")))?;
        }
        let status = Status::parse(fields[6]).ok_or_else(|| bad(line_no, "bad status"))?;
        records.push(FrameRecord {
            index,
            bbox: crate::geom::Bbox::from_rect(Rect::new(vals[0], vals[1], vals[2], vals[3])),
            zeta: vals[4],
            status,
        });
    }
    if let Some(n) = frames_declared {
        if n != records.len() {
            return Err(EvalError::BadResultsFile {
                line: 0,
                detail: format!("declared {n} frames but parsed {}", records.len()),
            });
        }
    }
    let metrics = match (precision_curve, success_curve, precision_at_20, auc) {
        (Some(p), Some(s), Some(p20), Some(a)) => Some(MetricsBlock {
            precision_curve: p,
            success_curve: s,
            precision_at_20: p20,
            auc: a,
        }),
        _ => None,
    };
    Ok(ResultsFile {
        seq_name,
        config_hash,
        fps,
        records,
        metrics,
    })
}

pub fn read_results(path: &Path) -> Result<ResultsFile, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|e| EvalError::Io {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    parse_results(&text)
}
