//! Per-frame orchestration: translation first at the old size, then size at
//! the new center, then model updates; in re-detection mode a failure
//! monitor routes lost frames through proposal generation, decision scoring,
//! and escalating re-initialization.

use std::fmt;
use std::time::Instant;

use crate::config::{Mode, TrackerConfig};
use crate::features::{CnTable, Frame};
use crate::geom::Bbox;
use crate::redetect::{
    decide_reinit, generate_proposals, monitor, score_proposals, should_update_decision,
    RedetectError, RedetectState,
};
use crate::runlog::{LogKind, RunLog};
use crate::sizefilter::{SizeError, SizeFilter};
use crate::trans::{TrackError, TranslationFilter};

#[derive(Debug)]
pub enum TrackerError {
    Track(TrackError),
    Size(SizeError),
    Redetect(RedetectError),
    EmptySequence,
}

impl fmt::Display for TrackerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrackerError::Track(e) => write!(f, "translation filter: {e}"),
            TrackerError::Size(e) => write!(f, "size filter: {e}"),
            TrackerError::Redetect(e) => write!(f, "re-detection: {e}"),
            TrackerError::EmptySequence => write!(f, "sequence has no frames"),
        }
    }
}

impl std::error::Error for TrackerError {}

impl From<TrackError> for TrackerError {
    fn from(e: TrackError) -> Self {
        TrackerError::Track(e)
    }
}

impl From<SizeError> for TrackerError {
    fn from(e: SizeError) -> Self {
        TrackerError::Size(e)
    }
}

impl From<RedetectError> for TrackerError {
    fn from(e: RedetectError) -> Self {
        TrackerError::Redetect(e)
    }
}

/// Per-frame tracking status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Tracked,
    Redetecting,
    Reinitialized,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Tracked => "tracked",
            Status::Redetecting => "redetecting",
            Status::Reinitialized => "reinitialized",
        }
    }

    pub fn parse(s: &str) -> Option<Status> {
        match s {
            "tracked" => Some(Status::Tracked),
            "redetecting" => Some(Status::Redetecting),
            "reinitialized" => Some(Status::Reinitialized),
            _ => None,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One output record per processed frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameRecord {
    pub index: usize,
    pub bbox: Bbox,
    pub zeta: f64,
    pub status: Status,
}

/// Ordered per-frame records plus wall-clock throughput.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerOutput {
    pub records: Vec<FrameRecord>,
    pub fps: f64,
}

impl TrackerOutput {
    pub fn mean_iou(&self, truth: &[crate::geom::Rect]) -> f64 {
        assert_eq!(self.records.len(), truth.len());
        let sum: f64 = self
            .records
            .iter()
            .zip(truth)
            .map(|(r, t)| crate::geom::iou(r.bbox.to_rect(), *t))
            .sum();
        sum / truth.len() as f64
    }
}

/// Single-target tracker holding the translation, size, and (in re-detection
/// mode) decision filters.
pub struct Tracker {
    cfg: TrackerConfig,
    cn: &'static CnTable,
    bbox: Bbox,
    trans: TranslationFilter,
    size: Option<SizeFilter>,
    decision: Option<TranslationFilter>,
    redetect: Option<RedetectState>,
    frame_count: usize,
    log: RunLog,
}

impl Tracker {
    /// Initializes every filter the mode requires on the first frame.
    pub fn create(frame: &Frame, init_bbox: Bbox, cfg: &TrackerConfig) -> Result<Self, TrackerError> {
        Self::create_with_log(frame, init_bbox, cfg, RunLog::new())
    }

    pub fn create_with_log(
        frame: &Frame,
        init_bbox: Bbox,
        cfg: &TrackerConfig,
        log: RunLog,
    ) -> Result<Self, TrackerError> {
        let cn = CnTable::builtin();
        let bbox = init_bbox.clamp_center(frame.width(), frame.height());
        let trans = TranslationFilter::init(frame, bbox, cfg, cn)?;
        let size = match cfg.mode {
            Mode::Jsar | Mode::JsarRe => Some(SizeFilter::init(frame, bbox, cfg)?),
            Mode::TranslationOnly | Mode::MultiScaleBaseline => None,
        };
        let (decision, redetect) = if cfg.mode == Mode::JsarRe {
            (
                Some(TranslationFilter::init(frame, bbox, cfg, cn)?),
                Some(RedetectState::new(cfg)),
            )
        } else {
            (None, None)
        };
        Ok(Self {
            cfg: cfg.clone(),
            cn,
            bbox,
            trans,
            size,
            decision,
            redetect,
            frame_count: 0,
            log,
        })
    }

    pub fn bbox(&self) -> Bbox {
        self.bbox
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn into_log(self) -> RunLog {
        self.log
    }

    /// Emits the first-frame record: the initial box with the training-frame
    /// response peak as its confidence.
    pub fn first_record(&mut self, frame: &Frame) -> Result<FrameRecord, TrackerError> {
        let zeta = self.trans.peak_at(frame, self.bbox, self.cn)?;
        self.log
            .append(self.frame_count, LogKind::Detect, &[("zeta", zeta)]);
        let record = FrameRecord {
            index: self.frame_count,
            bbox: self.bbox,
            zeta,
            status: Status::Tracked,
        };
        self.frame_count += 1;
        Ok(record)
    }

    /// Processes one frame and always emits a record.
    pub fn step(&mut self, frame: &Frame) -> Result<FrameRecord, TrackerError> {
        let idx = self.frame_count;
        self.frame_count += 1;

        let redetecting = self.redetect.as_ref().map_or(false, |r| r.active);
        let det = self
            .trans
            .detect(frame, (self.bbox.cx, self.bbox.cy), (self.bbox.w, self.bbox.h), self.cn)?;
        let zeta = det.zeta;
        self.log.append(idx, LogKind::Detect, &[("zeta", zeta)]);

        let failure_gate = self.cfg.mode == Mode::JsarRe && monitor(zeta, self.cfg.zeta_e);

        if !redetecting && !failure_gate {
            return self.tracked_step(frame, idx, det.new_center, zeta);
        }

        if self.cfg.mode != Mode::JsarRe {
            // Short-term modes treat the confidence branch as always taken.
            return self.tracked_step(frame, idx, det.new_center, zeta);
        }

        if redetecting && !monitor(zeta, self.cfg.zeta_e) {
            // The object re-emerged at the frozen box; resume normal tracking.
            self.redetect.as_mut().unwrap().reset();
            return self.tracked_step(frame, idx, det.new_center, zeta);
        }

        if !redetecting {
            // Transition into re-detection exactly when the monitor first fires.
            let state = self.redetect.as_mut().unwrap();
            state.activate(frame.width(), frame.height(), self.bbox);
            self.log
                .append(idx, LogKind::RedetectEnter, &[("zeta", zeta)]);
        }
        self.redetect_step(frame, idx, zeta)
    }

    /// Normal confident-frame flow: move, estimate size, update models.
    fn tracked_step(
        &mut self,
        frame: &Frame,
        idx: usize,
        new_center: (f64, f64),
        zeta: f64,
    ) -> Result<FrameRecord, TrackerError> {
        let mut bbox = Bbox::new(new_center.0, new_center.1, self.bbox.w, self.bbox.h);

        match self.cfg.mode {
            Mode::Jsar | Mode::JsarRe => {
                if let Some(size) = &self.size {
                    let (w, h, (ns, na), _resp) =
                        size.detect(frame, (bbox.cx, bbox.cy), bbox.w, bbox.h)?;
                    bbox.w = w;
                    bbox.h = h;
                    self.log.append(
                        idx,
                        LogKind::SizeUpdate,
                        &[("ns", ns as f64), ("na", na as f64), ("w", w), ("h", h)],
                    );
                }
            }
            Mode::MultiScaleBaseline => {
                // Brute-force 5-scale hierarchy, fixed aspect, sharing the
                // translation filter path. The translation estimate comes
                // from the best-scale response.
                let scales: Vec<f64> = (-2..=2).map(|k| 1.03f64.powi(k)).collect();
                let (outcome, s) = self.trans.detect_multiscale(
                    frame,
                    (self.bbox.cx, self.bbox.cy),
                    (self.bbox.w, self.bbox.h),
                    &scales,
                    self.cn,
                )?;
                bbox = Bbox::new(
                    outcome.new_center.0,
                    outcome.new_center.1,
                    (self.bbox.w * s).clamp(4.0, 2.0 * frame.width() as f64),
                    (self.bbox.h * s).clamp(4.0, 2.0 * frame.height() as f64),
                );
                self.log
                    .append(idx, LogKind::SizeUpdate, &[("scale", s), ("w", bbox.w), ("h", bbox.h)]);
            }
            Mode::TranslationOnly => {}
        }

        bbox = bbox.clamp_center(frame.width(), frame.height());
        self.bbox = bbox;

        self.trans
            .update(frame, bbox, self.cfg.theta_trans, self.cn)?;
        if let Some(size) = &mut self.size {
            size.update(frame, bbox, self.cfg.theta_size)?;
        }
        if let Some(decision) = &mut self.decision {
            if should_update_decision(zeta, self.cfg.zeta_s) {
                decision.update(frame, bbox, self.cfg.theta_trans, self.cn)?;
            }
        }

        Ok(FrameRecord {
            index: idx,
            bbox,
            zeta,
            status: Status::Tracked,
        })
    }

    /// Lost-frame flow: proposals, decision scoring, re-initialize or
    /// escalate. The emitted box stays at the last confident location unless
    /// re-initialization fires.
    fn redetect_step(
        &mut self,
        frame: &Frame,
        idx: usize,
        zeta: f64,
    ) -> Result<FrameRecord, TrackerError> {
        let state = self.redetect.as_mut().unwrap();
        let omega = state.omega;
        let eta_d = state.eta_d;
        let proposals =
            generate_proposals(frame, self.bbox, omega, self.cfg.proposal_count)?;
        let decision = self.decision.as_ref().expect("re mode has a decision filter");
        let (best, eta_b) = match score_proposals(decision, frame, &proposals, self.cn) {
            Ok(res) => res,
            Err(RedetectError::NoProposals) => {
                // Degenerate sweep (tiny search area); escalate and carry on.
                self.log.append(
                    idx,
                    LogKind::ProposalStats,
                    &[("count", 0.0), ("eta_b", 0.0), ("eta_d", eta_d), ("omega", omega)],
                );
                self.redetect.as_mut().unwrap().escalate();
                return Ok(FrameRecord {
                    index: idx,
                    bbox: self.bbox,
                    zeta,
                    status: Status::Redetecting,
                });
            }
            Err(e) => return Err(e.into()),
        };
        self.log.append(
            idx,
            LogKind::ProposalStats,
            &[
                ("count", proposals.len() as f64),
                ("eta_b", eta_b),
                ("eta_d", eta_d),
                ("omega", omega),
                ("best_k", best.k),
            ],
        );

        if decide_reinit(eta_b, eta_d) {
            // Re-initialization routes through the init branch: retrain all
            // filters from scratch at the selected proposal. No size
            // estimation happens on this frame.
            let bbox = best
                .bbox()
                .clamp_center(frame.width(), frame.height());
            self.trans = TranslationFilter::init(frame, bbox, &self.cfg, self.cn)?;
            if self.size.is_some() {
                self.size = Some(SizeFilter::init(frame, bbox, &self.cfg)?);
            }
            self.decision = Some(TranslationFilter::init(frame, bbox, &self.cfg, self.cn)?);
            self.redetect.as_mut().unwrap().reset();
            self.bbox = bbox;
            self.log.append(
                idx,
                LogKind::Reinit,
                &[
                    ("eta_b", eta_b),
                    ("x", bbox.cx),
                    ("y", bbox.cy),
                    ("w", bbox.w),
                    ("h", bbox.h),
                ],
            );
            return Ok(FrameRecord {
                index: idx,
                bbox,
                zeta,
                status: Status::Reinitialized,
            });
        }

        self.redetect.as_mut().unwrap().escalate();
        Ok(FrameRecord {
            index: idx,
            bbox: self.bbox,
            zeta,
            status: Status::Redetecting,
        })
    }
}

/// Runs the whole sequence: create on frame 1, step on the rest; reports
/// wall-clock fps over all frames.
pub fn run_sequence(
    frames: &[Frame],
    init_bbox: Bbox,
    cfg: &TrackerConfig,
) -> Result<(TrackerOutput, RunLog), TrackerError> {
    run_sequence_with_log(frames, init_bbox, cfg, RunLog::new())
}

pub fn run_sequence_with_log(
    frames: &[Frame],
    init_bbox: Bbox,
    cfg: &TrackerConfig,
    log: RunLog,
) -> Result<(TrackerOutput, RunLog), TrackerError> {
    let Some(first) = frames.first() else {
        return Err(TrackerError::EmptySequence);
    };
    let start = Instant::now();
    let mut tracker = Tracker::create_with_log(first, init_bbox, cfg, log)?;
    let mut records = Vec::with_capacity(frames.len());
    records.push(tracker.first_record(first)?);
    for frame in &frames[1..] {
        records.push(tracker.step(frame)?);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let fps = if elapsed > 0.0 {
        frames.len() as f64 / elapsed
    } else {
        f64::INFINITY
    };
    Ok((TrackerOutput { records, fps }, tracker.into_log()))
}
