//! Long-term tracking support: failure monitoring, edge-based object
//! proposals over an expanding search square, decision-filter scoring, and
//! escalating re-initialization thresholds.

use std::fmt;

use crate::config::TrackerConfig;
use crate::features::{CnTable, Frame};
use crate::geom::{Bbox, Rect};
use crate::trans::{TrackError, TranslationFilter};

/// Candidate box with objectness confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    /// Objectness confidence k.
    pub k: f64,
}

impl Proposal {
    pub fn rect(&self) -> Rect {
        Rect::new(self.x, self.y, self.w, self.h)
    }

    pub fn bbox(&self) -> Bbox {
        Bbox::from_rect(self.rect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RedetectError {
    DegenerateBbox { w: f64, h: f64 },
    NoProposals,
    Track(TrackError),
}

impl fmt::Display for RedetectError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RedetectError::DegenerateBbox { w, h } => {
                write!(f, "degenerate box {w}x{h} for proposal generation")
            }
            RedetectError::NoProposals => write!(f, "proposal list is empty"),
            RedetectError::Track(e) => write!(f, "decision scoring: {e}"),
        }
    }
}

impl std::error::Error for RedetectError {}

impl From<TrackError> for RedetectError {
    fn from(e: TrackError) -> Self {
        RedetectError::Track(e)
    }
}

/// True when the translation peak signals tracking failure (strict).
pub fn monitor(zeta_t: f64, zeta_e: f64) -> bool {
    zeta_t < zeta_e
}

/// True when the sample is pure enough to update the decision filter (strict).
pub fn should_update_decision(zeta_t: f64, zeta_s: f64) -> bool {
    zeta_t > zeta_s
}

/// True when the best proposal's decision response enables re-initialization
/// (strict).
pub fn decide_reinit(eta_b: f64, eta_d: f64) -> bool {
    eta_b > eta_d
}

/// Escalation state of the re-detection search.
#[derive(Debug, Clone, PartialEq)]
pub struct RedetectState {
    pub active: bool,
    pub omega: f64,
    pub eta_d: f64,
    /// Frames spent in the current re-detection episode.
    pub failed_frames: usize,
    omega_base: f64,
    eta_d_base: f64,
    omega_growth: f64,
    eta_d_decay: f64,
    eta_d_floor: f64,
    /// ω value at which the search square covers the whole frame from any
    /// center; fixed when an episode starts.
    omega_cap: f64,
}

impl RedetectState {
    pub fn new(cfg: &TrackerConfig) -> Self {
        Self {
            active: false,
            omega: cfg.omega,
            eta_d: cfg.eta_d,
            failed_frames: 0,
            omega_base: cfg.omega,
            eta_d_base: cfg.eta_d,
            omega_growth: cfg.omega_growth,
            eta_d_decay: cfg.eta_d_decay,
            eta_d_floor: cfg.eta_d_floor,
            omega_cap: f64::INFINITY,
        }
    }

    /// Enters an episode: fixes the ω cap so the square can grow to cover
    /// the frame from the last confident box.
    pub fn activate(&mut self, frame_w: usize, frame_h: usize, last: Bbox) {
        self.active = true;
        self.failed_frames = 0;
        let extent = (last.w * last.h).sqrt().max(1.0);
        self.omega_cap = 2.0 * (frame_w.max(frame_h) as f64) / extent;
    }

    /// One failed re-detection frame: grow ω, shrink η_d, both bounded.
    pub fn escalate(&mut self) {
        debug_assert!(self.active);
        self.omega = (self.omega * self.omega_growth).min(self.omega_cap.max(self.omega_base));
        self.eta_d = (self.eta_d * self.eta_d_decay).max(self.eta_d_floor);
        self.failed_frames += 1;
    }

    /// Successful re-initialization: restore base thresholds.
    pub fn reset(&mut self) {
        self.active = false;
        self.omega = self.omega_base;
        self.eta_d = self.eta_d_base;
        self.failed_frames = 0;
    }
}

/// Sobel-based edge map over a frame region with non-maximum suppression and
/// orientation-coherent greedy grouping. Orientations are gradient
/// directions folded to [0, π).
#[derive(Debug)]
pub struct EdgeMap {
    /// Region this map covers (integer pixel rect inside the frame).
    pub region: Rect,
    pub width: usize,
    pub height: usize,
    pub magnitude: Vec<f64>,
    pub orientation: Vec<f64>,
    /// 0 = no edge; otherwise 1-based group label.
    pub labels: Vec<u32>,
    pub groups: Vec<EdgeGroup>,
}

/// A connected, orientation-coherent group of edge pixels.
#[derive(Debug, Clone)]
pub struct EdgeGroup {
    /// Sum of member magnitudes.
    pub weight: f64,
    /// Bounding box in frame coordinates.
    pub bbox: Rect,
    /// Member pixels in frame coordinates.
    pub pixels: Vec<(u32, u32)>,
}

const MAG_THRESHOLD: f64 = 0.1;
const ORIENT_TOLERANCE: f64 = std::f64::consts::PI / 8.0;

fn fold_orientation(theta: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let mut t = theta % pi;
    if t < 0.0 {
        t += pi;
    }
    t
}

fn orient_diff(a: f64, b: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let d = (a - b).abs();
    d.min(pi - d)
}

/// Builds the edge map for `region` (clamped to the frame).
pub fn build_edge_map(frame: &Frame, region: Rect) -> EdgeMap {
    let x0 = region.x.floor().max(0.0) as usize;
    let y0 = region.y.floor().max(0.0) as usize;
    let x1 = ((region.x + region.w).ceil() as usize).min(frame.width());
    let y1 = ((region.y + region.h).ceil() as usize).min(frame.height());
    let (w, h) = (x1.saturating_sub(x0).max(1), y1.saturating_sub(y0).max(1));

    // Luminance plane.
    let mut luma = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let p = frame.pixel(x0 + x, y0 + y);
            luma[y * w + x] =
                (0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64) / 255.0;
        }
    }
    let at = |x: isize, y: isize| -> f64 {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        luma[yc * w + xc]
    };

    // Sobel gradients.
    let mut mag = vec![0.0f64; w * h];
    let mut orient = vec![0.0f64; w * h];
    let mut max_mag = 0.0f64;
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1)
                - at(x - 1, y - 1)
                - 2.0 * at(x - 1, y)
                - at(x - 1, y + 1);
            let gy = at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1)
                - at(x - 1, y - 1)
                - 2.0 * at(x, y - 1)
                - at(x + 1, y - 1);
            let m = (gx * gx + gy * gy).sqrt();
            let i = y as usize * w + x as usize;
            mag[i] = m;
            orient[i] = fold_orientation(gy.atan2(gx));
            max_mag = max_mag.max(m);
        }
    }

    // Non-maximum suppression along the quantized gradient direction, then
    // the relative magnitude gate.
    let threshold = MAG_THRESHOLD * max_mag;
    let mut kept = vec![0.0f64; w * h];
    if max_mag > 0.0 {
        for y in 0..h as isize {
            for x in 0..w as isize {
                let i = y as usize * w + x as usize;
                let m = mag[i];
                if m < threshold {
                    continue;
                }
                let t = orient[i];
                let pi = std::f64::consts::PI;
                // Gradient direction quantized to 4 neighbor axes.
                let (dx, dy) = if t < pi / 8.0 || t >= 7.0 * pi / 8.0 {
                    (1isize, 0isize)
                } else if t < 3.0 * pi / 8.0 {
                    (1, 1)
                } else if t < 5.0 * pi / 8.0 {
                    (0, 1)
                } else {
                    (-1, 1)
                };
                let m_at = |xx: isize, yy: isize| -> f64 {
                    if xx < 0 || yy < 0 || xx >= w as isize || yy >= h as isize {
                        0.0
                    } else {
                        mag[yy as usize * w + xx as usize]
                    }
                };
                if m >= m_at(x + dx, y + dy) && m >= m_at(x - dx, y - dy) {
                    kept[i] = m;
                }
            }
        }
    }

    // Greedy orientation-coherent flood fill over 8-neighborhoods.
    let mut labels = vec![0u32; w * h];
    let mut groups: Vec<EdgeGroup> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if kept[start] == 0.0 || labels[start] != 0 {
            continue;
        }
        let id = groups.len() as u32 + 1;
        let mut weight = 0.0;
        let mut pixels = Vec::new();
        let (mut bx0, mut by0, mut bx1, mut by1) = (usize::MAX, usize::MAX, 0usize, 0usize);
        labels[start] = id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (px, py) = (i % w, i / w);
            weight += kept[i];
            pixels.push(((x0 + px) as u32, (y0 + py) as u32));
            bx0 = bx0.min(px);
            by0 = by0.min(py);
            bx1 = bx1.max(px);
            by1 = by1.max(py);
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nx = px as isize + dx;
                    let ny = py as isize + dy;
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if kept[j] == 0.0 || labels[j] != 0 {
                        continue;
                    }
                    if orient_diff(orient[i], orient[j]) < ORIENT_TOLERANCE {
                        labels[j] = id;
                        stack.push(j);
                    }
                }
            }
        }
        groups.push(EdgeGroup {
            weight,
            bbox: Rect::new(
                (x0 + bx0) as f64,
                (y0 + by0) as f64,
                (bx1 - bx0 + 1) as f64,
                (by1 - by0 + 1) as f64,
            ),
            pixels,
        });
    }

    EdgeMap {
        region: Rect::new(x0 as f64, y0 as f64, w as f64, h as f64),
        width: w,
        height: h,
        magnitude: kept,
        orientation: orient,
        labels,
        groups,
    }
}

/// Objectness score of a candidate box: wholly enclosed group weight minus
/// straddling group weight, floored at zero, normalized by the perimeter
/// term (2(w+h))^1.5.
fn objectness(edges: &EdgeMap, rect: &Rect) -> f64 {
    let mut net = 0.0;
    for group in &edges.groups {
        if rect.contains_rect(&group.bbox) {
            net += group.weight;
        } else if group.bbox.intersection_area(rect) > 0.0 {
            // Bounding boxes overlap; check actual membership.
            let any_inside = group
                .pixels
                .iter()
                .any(|(px, py)| rect.contains_point(*px as f64, *py as f64));
            if any_inside {
                net -= group.weight;
            }
        }
    }
    net.max(0.0) / (2.0 * (rect.w + rect.h)).powf(1.5)
}

/// Deterministic candidate sweep over the search square: scale/aspect
/// perturbations of the last box on a translation grid, plus a coarse
/// whole-region sweep.
fn candidate_boxes(search: &Rect, last: Bbox) -> Vec<Rect> {
    let mut out = Vec::new();
    let mut push = |r: Rect| {
        if search.contains_rect(&r) && r.w >= 4.0 && r.h >= 4.0 {
            out.push(r);
        }
    };
    for scale in [0.8f64, 1.0, 1.25] {
        for aspect in [0.75f64, 1.0, 1.33] {
            let bw = last.w * scale * aspect.sqrt();
            let bh = last.h * scale / aspect.sqrt();
            if bw > search.w || bh > search.h {
                continue;
            }
            // Translation stride: 4 px, growing with the box size.
            let sx = (bw / 8.0).max(4.0);
            let sy = (bh / 8.0).max(4.0);
            let nx = ((search.w - bw) / sx).floor() as usize + 1;
            let ny = ((search.h - bh) / sy).floor() as usize + 1;
            for iy in 0..ny {
                for ix in 0..nx {
                    push(Rect::new(
                        search.x + ix as f64 * sx,
                        search.y + iy as f64 * sy,
                        bw,
                        bh,
                    ));
                }
            }
        }
    }
    // Coarse whole-region sweep at several box sizes.
    let minside = search.w.min(search.h);
    for frac in [0.25, 0.4, 0.6] {
        let side = minside * frac;
        if side < 4.0 {
            continue;
        }
        let stride = side / 2.0;
        let nx = ((search.w - side) / stride).floor() as usize + 1;
        let ny = ((search.h - side) / stride).floor() as usize + 1;
        for iy in 0..ny {
            for ix in 0..nx {
                push(Rect::new(
                    search.x + ix as f64 * stride,
                    search.y + iy as f64 * stride,
                    side,
                    side,
                ));
            }
        }
    }
    out
}

/// The clamped square search area of side ω·sqrt(w·h) centered on the last
/// confident box.
pub fn search_square(frame: &Frame, last: Bbox, omega: f64) -> Rect {
    let side = omega * (last.w * last.h).sqrt();
    let x0 = (last.cx - side / 2.0).max(0.0);
    let y0 = (last.cy - side / 2.0).max(0.0);
    let x1 = (last.cx + side / 2.0).min(frame.width() as f64);
    let y1 = (last.cy + side / 2.0).min(frame.height() as f64);
    Rect::new(x0, y0, (x1 - x0).max(1.0), (y1 - y0).max(1.0))
}

/// Generates at most `max_count` proposals inside the search square, sorted
/// by objectness confidence (descending; ties keep sweep order).
pub fn generate_proposals(
    frame: &Frame,
    last_bbox: Bbox,
    omega: f64,
    max_count: usize,
) -> Result<Vec<Proposal>, RedetectError> {
    if !last_bbox.is_valid() {
        return Err(RedetectError::DegenerateBbox {
            w: last_bbox.w,
            h: last_bbox.h,
        });
    }
    let search = search_square(frame, last_bbox, omega);
    let edges = build_edge_map(frame, search);
    let mut scored: Vec<Proposal> = candidate_boxes(&search, last_bbox)
        .into_iter()
        .map(|r| Proposal {
            x: r.x,
            y: r.y,
            w: r.w,
            h: r.h,
            k: objectness(&edges, &r),
        })
        .collect();
    scored.sort_by(|a, b| b.k.partial_cmp(&a.k).unwrap_or(std::cmp::Ordering::Equal));
    scored.truncate(max_count);
    Ok(scored)
}

/// Scores every proposal with the decision filter and returns the winner and
/// its peak η_b. Ties break toward higher objectness k, then list order.
pub fn score_proposals(
    decision: &TranslationFilter,
    frame: &Frame,
    proposals: &[Proposal],
    cn: &CnTable,
) -> Result<(Proposal, f64), RedetectError> {
    if proposals.is_empty() {
        return Err(RedetectError::NoProposals);
    }
    let mut best: Option<(Proposal, f64)> = None;
    for p in proposals {
        let peak = decision.peak_at(frame, p.bbox(), cn)?;
        let better = match &best {
            None => true,
            Some((bp, bs)) => peak > *bs || (peak == *bs && p.k > bp.k),
        };
        if better {
            best = Some((*p, peak));
        }
    }
    Ok(best.unwrap())
}
