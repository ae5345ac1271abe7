//! Location prediction in the space domain: a 2D correlation filter over
//! gray+HOG+CN features of a padded ROI, localized at the response-map peak.
//! The re-detection decision filter reuses this machinery unchanged.

use crate::config::TrackerConfig;
use crate::features::{translation_features, CnTable, FeatureError, Frame, RoiGeometry};
use crate::geom::Bbox;
use crate::spectral::{
    correlate_response, gaussian_label, idft2, interpolate_model, train_filter, FilterModel,
    RealPlane, SpectralError,
};

#[derive(Debug, Clone, PartialEq)]
pub enum TrackError {
    DegenerateBbox { w: f64, h: f64 },
    Feature(FeatureError),
    Spectral(SpectralError),
}

impl std::fmt::Display for TrackError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrackError::DegenerateBbox { w, h } => {
                write!(f, "degenerate bounding box {w}x{h}")
            }
            TrackError::Feature(e) => write!(f, "feature extraction: {e}"),
            TrackError::Spectral(e) => write!(f, "spectral: {e}"),
        }
    }
}

impl std::error::Error for TrackError {}

impl From<FeatureError> for TrackError {
    fn from(e: FeatureError) -> Self {
        TrackError::Feature(e)
    }
}

impl From<SpectralError> for TrackError {
    fn from(e: SpectralError) -> Self {
        TrackError::Spectral(e)
    }
}

/// Result of one translation detection.
#[derive(Debug, Clone)]
pub struct DetectionOutcome {
    pub new_center: (f64, f64),
    /// Raw (unrefined) maximum of the response plane.
    pub zeta: f64,
    pub response: RealPlane,
}

/// A trained translation-style filter with its fixed resampling geometry.
#[derive(Debug, Clone)]
pub struct TranslationFilter {
    model: FilterModel,
    label: RealPlane,
    /// Fixed model ROI size in pixels (multiples of the cell size).
    out_w: usize,
    out_h: usize,
    cell: usize,
    /// Per-side padding factor (sqrt of the ROI area factor).
    side_factor: f64,
    lambda: f64,
}

fn round_cells(px: f64, cell: usize) -> usize {
    ((px / cell as f64).round().max(4.0) as usize) * cell
}

impl TranslationFilter {
    /// Trains a fresh filter on the target at `bbox`. The model resolution is
    /// fixed here: the padded ROI, downscaled if it exceeds the configured
    /// area cap, rounded to whole cells.
    pub fn init(
        frame: &Frame,
        bbox: Bbox,
        cfg: &TrackerConfig,
        cn: &CnTable,
    ) -> Result<Self, TrackError> {
        if !bbox.is_valid() {
            return Err(TrackError::DegenerateBbox {
                w: bbox.w,
                h: bbox.h,
            });
        }
        let side_factor = cfg.roi_area_factor.sqrt();
        let src_w = bbox.w * side_factor;
        let src_h = bbox.h * side_factor;
        let rho = (cfg.trans_model_max_area / (src_w * src_h)).sqrt().min(1.0);
        let cell = cfg.cell_size;
        let out_w = round_cells(src_w * rho, cell);
        let out_h = round_cells(src_h * rho, cell);
        let (gh, gw) = (out_h / cell, out_w / cell);

        // Label bandwidth relative to the target extent in feature cells.
        let tw_cells = bbox.w * (out_w as f64 / src_w) / cell as f64;
        let th_cells = bbox.h * (out_h as f64 / src_h) / cell as f64;
        let extent = (tw_cells * th_cells).sqrt();
        let label = gaussian_label(gh, gw, cfg.trans_label_sigma_factor, extent)
            .shifted_to_origin(gh / 2, gw / 2);

        let geom = RoiGeometry {
            src_w,
            src_h,
            out_w,
            out_h,
            cell,
        };
        let stack = translation_features(frame, (bbox.cx, bbox.cy), &geom, cn)?;
        let model = train_filter(&stack.channels, &label, cfg.lambda)?;
        Ok(Self {
            model,
            label,
            out_w,
            out_h,
            cell,
            side_factor,
            lambda: cfg.lambda,
        })
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.out_h / self.cell, self.out_w / self.cell)
    }

    pub fn model(&self) -> &FilterModel {
        &self.model
    }

    pub fn label(&self) -> &RealPlane {
        &self.label
    }

    fn geometry(&self, w: f64, h: f64) -> RoiGeometry {
        RoiGeometry {
            src_w: w * self.side_factor,
            src_h: h * self.side_factor,
            out_w: self.out_w,
            out_h: self.out_h,
            cell: self.cell,
        }
    }

    fn features_at(
        &self,
        frame: &Frame,
        center: (f64, f64),
        size: (f64, f64),
        cn: &CnTable,
    ) -> Result<Vec<RealPlane>, TrackError> {
        let geom = self.geometry(size.0, size.1);
        let stack = translation_features(frame, center, &geom, cn)?;
        Ok(stack.channels)
    }

    fn train_on(
        &self,
        frame: &Frame,
        bbox: Bbox,
        cn: &CnTable,
    ) -> Result<FilterModel, TrackError> {
        let channels = self.features_at(frame, (bbox.cx, bbox.cy), (bbox.w, bbox.h), cn)?;
        Ok(train_filter(&channels, &self.label, self.lambda)?)
    }

    /// Localizes the target: ROI cropped at `prev_center` with the current
    /// size, response computed, peak mapped back to a pixel displacement with
    /// sub-cell parabolic refinement. `zeta` is the raw response maximum.
    pub fn detect(
        &self,
        frame: &Frame,
        prev_center: (f64, f64),
        current_size: (f64, f64),
        cn: &CnTable,
    ) -> Result<DetectionOutcome, TrackError> {
        let channels = self.features_at(frame, prev_center, current_size, cn)?;
        let response = correlate_response(&self.model, &channels)?;
        let (pr, pc, zeta) = response.argmax();
        let (cells_down, cells_right) = refine_peak(&response, pr, pc);

        let geom = self.geometry(current_size.0, current_size.1);
        let (px_per_cell_x, px_per_cell_y) = geom.px_per_cell();
        let new_center = (
            (prev_center.0 + cells_right * px_per_cell_x).clamp(0.0, (frame.width() - 1) as f64),
            (prev_center.1 + cells_down * px_per_cell_y).clamp(0.0, (frame.height() - 1) as f64),
        );
        Ok(DetectionOutcome {
            new_center,
            zeta,
            response,
        })
    }

    /// Response peak of the model evaluated at an arbitrary box; used to
    /// score re-detection proposals and to report the training-frame peak.
    pub fn peak_at(&self, frame: &Frame, bbox: Bbox, cn: &CnTable) -> Result<f64, TrackError> {
        let channels = self.features_at(frame, (bbox.cx, bbox.cy), (bbox.w, bbox.h), cn)?;
        let response = correlate_response(&self.model, &channels)?;
        Ok(response.max_value())
    }

    /// Trains a fresh model at `new_bbox` and blends it in with rate `theta`.
    pub fn update(
        &mut self,
        frame: &Frame,
        new_bbox: Bbox,
        theta: f64,
        cn: &CnTable,
    ) -> Result<(), TrackError> {
        let fresh = self.train_on(frame, new_bbox, cn)?;
        self.model = interpolate_model(&self.model, &fresh, theta)?;
        Ok(())
    }

    /// Brute-force multi-scale detection (fixed aspect): runs `detect` once
    /// per scale factor around the current size and keeps the best peak.
    /// Returns the winning outcome and scale.
    pub fn detect_multiscale(
        &self,
        frame: &Frame,
        prev_center: (f64, f64),
        current_size: (f64, f64),
        scales: &[f64],
        cn: &CnTable,
    ) -> Result<(DetectionOutcome, f64), TrackError> {
        assert!(!scales.is_empty());
        let mut best: Option<(DetectionOutcome, f64)> = None;
        for &s in scales {
            let size = (current_size.0 * s, current_size.1 * s);
            let outcome = self.detect(frame, prev_center, size, cn)?;
            if best.as_ref().map_or(true, |(b, _)| outcome.zeta > b.zeta) {
                best = Some((outcome, s));
            }
        }
        Ok(best.unwrap())
    }

    /// Spatial-domain reconstruction of the divided filter, one plane per
    /// channel (diagnostics and test oracles).
    pub fn spatial_filter(&self) -> Vec<RealPlane> {
        (0..self.model.channels())
            .map(|d| {
                let mut spec = self.model.filter_spectrum(d);
                for v in spec.as_mut_slice() {
                    *v = v.conj();
                }
                idft2(&spec)
            })
            .collect()
    }
}

/// Signed cyclic peak displacement with per-axis parabolic sub-cell
/// refinement (cyclic neighbors at borders).
pub fn refine_peak(response: &RealPlane, pr: usize, pc: usize) -> (f64, f64) {
    let rows = response.rows();
    let cols = response.cols();
    let refine = |prev: f64, here: f64, next: f64| -> f64 {
        let denom = prev - 2.0 * here + next;
        if denom.abs() < 1e-12 {
            return 0.0;
        }
        let delta = 0.5 * (prev - next) / denom;
        if delta.is_finite() && delta.abs() <= 1.0 {
            delta
        } else {
            0.0
        }
    };
    let dr = refine(
        response.get((pr + rows - 1) % rows, pc),
        response.get(pr, pc),
        response.get((pr + 1) % rows, pc),
    );
    let dc = refine(
        response.get(pr, (pc + cols - 1) % cols),
        response.get(pr, pc),
        response.get(pr, (pc + 1) % cols),
    );
    let signed = |p: usize, n: usize| {
        if p as f64 > n as f64 / 2.0 {
            p as f64 - n as f64
        } else {
            p as f64
        }
    };
    (signed(pr, rows) + dr, signed(pc, cols) + dc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refinement_is_zero_on_symmetric_peak() {
        let mut resp = RealPlane::zeros(5, 5);
        resp.set(2, 2, 1.0);
        resp.set(1, 2, 0.5);
        resp.set(3, 2, 0.5);
        resp.set(2, 1, 0.5);
        resp.set(2, 3, 0.5);
        let (dr, dc) = refine_peak(&resp, 2, 2);
        assert!((dr - 2.0).abs() < 1e-12 && (dc - 2.0).abs() < 1e-12);
    }

    #[test]
    fn displacement_wraps_past_half_extent() {
        let mut resp = RealPlane::zeros(8, 8);
        resp.set(7, 1, 1.0);
        let (dr, dc) = refine_peak(&resp, 7, 1);
        assert_eq!(dr, -1.0);
        assert_eq!(dc, 1.0);
    }

    #[test]
    fn refinement_leans_toward_larger_neighbor() {
        let mut resp = RealPlane::zeros(5, 5);
        resp.set(2, 2, 1.0);
        resp.set(2, 3, 0.8);
        resp.set(2, 1, 0.2);
        let (_, dc) = refine_peak(&resp, 2, 2);
        assert!(dc > 2.0 && dc < 2.5, "refined {dc} should lean right");
    }
}
