//! Joint scale and aspect-ratio estimation: a 2D correlation filter over the
//! size domain, an S×A lattice of exponentially spaced (scale, aspect)
//! perturbations of the current box.

use std::fmt;

use crate::config::TrackerConfig;
use crate::features::{size_channel_count, size_feature_vector, FeatureError, Frame};
use crate::geom::Bbox;
use crate::spectral::{
    correlate_response, gaussian_label_aniso, hann_window, interpolate_model, train_filter,
    FilterModel, RealPlane, SpectralError,
};

/// Smallest crop dimension fed to feature extraction; smaller requests clamp.
const MIN_PATCH_PX: f64 = 8.0;
/// Output size clamp for detected boxes.
const MIN_BOX_PX: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub enum SizeError {
    EvenCount { which: &'static str, value: usize },
    CountTooSmall { which: &'static str, value: usize },
    StepNotAboveOne { which: &'static str, value: f64 },
    Feature(FeatureError),
    Spectral(SpectralError),
}

impl fmt::Display for SizeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizeError::EvenCount { which, value } => {
                write!(f, "{which} must be odd so the identity size is on the grid, got {value}")
            }
            SizeError::CountTooSmall { which, value } => {
                write!(f, "{which} must be >= 3, got {value}")
            }
            SizeError::StepNotAboveOne { which, value } => {
                write!(f, "{which} must be > 1, got {value}")
            }
            SizeError::Feature(e) => write!(f, "feature extraction: {e}"),
            SizeError::Spectral(e) => write!(f, "spectral: {e}"),
        }
    }
}

impl std::error::Error for SizeError {}

impl From<FeatureError> for SizeError {
    fn from(e: FeatureError) -> Self {
        SizeError::Feature(e)
    }
}

impl From<SpectralError> for SizeError {
    fn from(e: SpectralError) -> Self {
        SizeError::Spectral(e)
    }
}

/// The S×A lattice of (scale factor, aspect factor) pairs with centered
/// integer exponents: width factor γ^Ns·φ^Na, height factor γ^Ns/φ^Na.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeGrid {
    scale_count: usize,
    aspect_count: usize,
    gamma: f64,
    phi: f64,
}

impl SizeGrid {
    pub fn build(
        scale_count: usize,
        aspect_count: usize,
        gamma: f64,
        phi: f64,
    ) -> Result<Self, SizeError> {
        for (which, value) in [("S", scale_count), ("A", aspect_count)] {
            if value < 3 {
                return Err(SizeError::CountTooSmall { which, value });
            }
            if value % 2 == 0 {
                return Err(SizeError::EvenCount { which, value });
            }
        }
        for (which, value) in [("gamma", gamma), ("phi", phi)] {
            if !(value > 1.0) {
                return Err(SizeError::StepNotAboveOne { which, value });
            }
        }
        Ok(Self {
            scale_count,
            aspect_count,
            gamma,
            phi,
        })
    }

    pub fn scale_count(&self) -> usize {
        self.scale_count
    }

    pub fn aspect_count(&self) -> usize {
        self.aspect_count
    }

    /// Centered scale exponent for 0-based grid index `s`.
    pub fn scale_exponent(&self, s: usize) -> i32 {
        s as i32 - (self.scale_count as i32 - 1) / 2
    }

    /// Centered aspect exponent for 0-based grid index `a`.
    pub fn aspect_exponent(&self, a: usize) -> i32 {
        a as i32 - (self.aspect_count as i32 - 1) / 2
    }

    /// (width factor, height factor) at grid cell (s, a).
    pub fn factors(&self, s: usize, a: usize) -> (f64, f64) {
        let g = self.gamma.powi(self.scale_exponent(s));
        let p = self.phi.powi(self.aspect_exponent(a));
        (g * p, g / p)
    }

    /// Factors for signed exponents directly.
    pub fn factors_for_exponents(&self, ns: i32, na: i32) -> (f64, f64) {
        let g = self.gamma.powi(ns);
        let p = self.phi.powi(na);
        (g * p, g / p)
    }
}

/// The size-domain sample: `channels` planes of S×A values (one plane per
/// vectorized feature component), already windowed.
pub struct SizeSample {
    pub channels: Vec<RealPlane>,
}

/// Crops the S×A lattice of patches around (w, h) at `center`, extracts each
/// patch's HOG vector at the model resolution, stacks the vectors into the
/// size-domain sample, and multiplies every channel plane by `window`.
/// Patch crops below 8×8 px are clamped.
#[allow(clippy::too_many_arguments)]
pub fn sample_size_domain(
    frame: &Frame,
    center: (f64, f64),
    w: f64,
    h: f64,
    grid: &SizeGrid,
    window: &RealPlane,
    model_w: usize,
    model_h: usize,
    cell: usize,
) -> Result<SizeSample, SizeError> {
    let (s_n, a_n) = (grid.scale_count, grid.aspect_count);
    let chans = size_channel_count(model_w, model_h, cell);
    let mut channels = vec![RealPlane::zeros(s_n, a_n); chans];
    for s in 0..s_n {
        for a in 0..a_n {
            let (fw, fh) = grid.factors(s, a);
            let pw = (w * fw).max(MIN_PATCH_PX);
            let ph = (h * fh).max(MIN_PATCH_PX);
            let v = size_feature_vector(frame, center, (pw, ph), model_w, model_h, cell)?;
            debug_assert_eq!(v.len(), chans);
            let wgt = window.get(s, a);
            for (plane, value) in channels.iter_mut().zip(v) {
                plane.set(s, a, value * wgt);
            }
        }
    }
    Ok(SizeSample { channels })
}

/// Trained size filter and its sampling geometry.
#[derive(Debug, Clone)]
pub struct SizeFilter {
    grid: SizeGrid,
    model: FilterModel,
    label: RealPlane,
    window: RealPlane,
    model_w: usize,
    model_h: usize,
    cell: usize,
    lambda: f64,
}

impl SizeFilter {
    /// Extracts the size-domain sample and trains the initial filter.
    pub fn init(frame: &Frame, bbox: Bbox, cfg: &TrackerConfig) -> Result<Self, SizeError> {
        let grid = SizeGrid::build(cfg.scale_count, cfg.aspect_count, cfg.gamma, cfg.phi)?;
        let (s_n, a_n) = (grid.scale_count, grid.aspect_count);
        let window = hann_window(s_n, a_n);
        let label = gaussian_label_aniso(
            s_n,
            a_n,
            (s_n as f64 * cfg.size_label_sigma_factor).max(1e-6),
            (a_n as f64 * cfg.size_label_sigma_factor).max(1e-6),
        )
        .shifted_to_origin(s_n / 2, a_n / 2);
        let sample = sample_size_domain(
            frame,
            (bbox.cx, bbox.cy),
            bbox.w,
            bbox.h,
            &grid,
            &window,
            cfg.model_width,
            cfg.model_height,
            cfg.cell_size,
        )?;
        let model = train_filter(&sample.channels, &label, cfg.lambda)?;
        Ok(Self {
            grid,
            model,
            label,
            window,
            model_w: cfg.model_width,
            model_h: cfg.model_height,
            cell: cfg.cell_size,
            lambda: cfg.lambda,
        })
    }

    pub fn grid(&self) -> &SizeGrid {
        &self.grid
    }

    pub fn channel_count(&self) -> usize {
        size_channel_count(self.model_w, self.model_h, self.cell)
    }

    /// The windowed size-domain sample at the given center and box size.
    pub fn sample(
        &self,
        frame: &Frame,
        center: (f64, f64),
        w: f64,
        h: f64,
    ) -> Result<SizeSample, SizeError> {
        sample_size_domain(
            frame,
            center,
            w,
            h,
            &self.grid,
            &self.window,
            self.model_w,
            self.model_h,
            self.cell,
        )
    }

    /// Response over the S×A plane at the current box.
    pub fn response(
        &self,
        frame: &Frame,
        center: (f64, f64),
        w: f64,
        h: f64,
    ) -> Result<RealPlane, SizeError> {
        let sample = self.sample(frame, center, w, h)?;
        Ok(correlate_response(&self.model, &sample.channels)?)
    }

    /// Maximizes the size-domain response: returns the re-estimated (w, h),
    /// the chosen exponents (Ns, Na), and the response plane. The estimate
    /// snaps to grid cells (no sub-cell refinement) and is clamped to
    /// [4 px, 2×frame extent].
    pub fn detect(
        &self,
        frame: &Frame,
        center: (f64, f64),
        w: f64,
        h: f64,
    ) -> Result<(f64, f64, (i32, i32), RealPlane), SizeError> {
        let response = self.response(frame, center, w, h)?;
        let (pr, pc, _) = response.argmax();
        let (s_n, a_n) = response.dims();
        let wrap = |p: usize, n: usize| -> i32 {
            if p as f64 > n as f64 / 2.0 {
                p as i32 - n as i32
            } else {
                p as i32
            }
        };
        let ns = wrap(pr, s_n);
        let na = wrap(pc, a_n);
        let (fw, fh) = self.grid.factors_for_exponents(ns, na);
        let max_w = 2.0 * frame.width() as f64;
        let max_h = 2.0 * frame.height() as f64;
        let new_w = (w * fw).clamp(MIN_BOX_PX, max_w);
        let new_h = (h * fh).clamp(MIN_BOX_PX, max_h);
        Ok((new_w, new_h, (ns, na), response))
    }

    /// Trains a fresh model on the (new) box and blends it with rate theta.
    pub fn update(
        &mut self,
        frame: &Frame,
        bbox: Bbox,
        theta: f64,
    ) -> Result<(), SizeError> {
        let sample = self.sample(frame, (bbox.cx, bbox.cy), bbox.w, bbox.h)?;
        let fresh = train_filter(&sample.channels, &self.label, self.lambda)?;
        self.model = interpolate_model(&self.model, &fresh, theta)?;
        Ok(())
    }

    /// Re-trains from scratch (re-initialization path).
    pub fn retrain(&mut self, frame: &Frame, bbox: Bbox) -> Result<(), SizeError> {
        let sample = self.sample(frame, (bbox.cx, bbox.cy), bbox.w, bbox.h)?;
        self.model = train_filter(&sample.channels, &self.label, self.lambda)?;
        Ok(())
    }

    pub fn model(&self) -> &FilterModel {
        &self.model
    }

    pub fn window(&self) -> &RealPlane {
        &self.window
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_center_is_identity_and_extremes_match() {
        let grid = SizeGrid::build(13, 13, 1.03, 1.02).unwrap();
        let (fw, fh) = grid.factors(6, 6);
        assert_eq!((fw, fh), (1.0, 1.0));
        assert_eq!(grid.scale_exponent(6), 0);
        assert_eq!(grid.aspect_exponent(6), 0);
        let (wide, _) = grid.factors(12, 6);
        assert!((wide - 1.03f64.powi(6)).abs() < 1e-12);
        assert!((wide - 1.1940523).abs() < 1e-6);
    }

    #[test]
    fn area_depends_only_on_scale_exponent() {
        let grid = SizeGrid::build(13, 13, 1.03, 1.02).unwrap();
        for s in 0..13 {
            for a in 0..13 {
                let (fw, fh) = grid.factors(s, a);
                let want = 1.03f64.powi(2 * grid.scale_exponent(s));
                assert!((fw * fh - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_reversal_gives_reciprocal_pairs() {
        let grid = SizeGrid::build(13, 13, 1.03, 1.02).unwrap();
        for s in 0..13 {
            for a in 0..13 {
                let (fw, fh) = grid.factors(s, a);
                let (rw, rh) = grid.factors(12 - s, 12 - a);
                assert!((fw * rw - 1.0).abs() <= 1e-12);
                assert!((fh * rh - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn even_counts_rejected() {
        assert!(matches!(
            SizeGrid::build(12, 13, 1.03, 1.02),
            Err(SizeError::EvenCount { which: "S", .. })
        ));
        assert!(matches!(
            SizeGrid::build(13, 4, 1.03, 1.02),
            Err(SizeError::EvenCount { which: "A", .. })
        ));
        assert!(matches!(
            SizeGrid::build(1, 13, 1.03, 1.02),
            Err(SizeError::CountTooSmall { .. })
        ));
        assert!(matches!(
            SizeGrid::build(13, 13, 1.0, 1.02),
            Err(SizeError::StepNotAboveOne { .. })
        ));
    }
}
