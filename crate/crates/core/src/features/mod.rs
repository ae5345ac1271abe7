//! Patch extraction and hand-crafted features (grayscale, 31-channel HOG,
//! color names) on a fixed cell grid.

mod cn;
mod hog;
mod patch;

pub use cn::{cn_features, CnTable, CN_CHANNELS, CN_NAMES, CN_TABLE_ROWS};
pub use hog::{hog_features, HOG_CHANNELS};
pub use patch::{extract_patch, Patch};

use std::fmt;

use crate::spectral::{hann_window, RealPlane};

/// One RGB8 video frame.
#[derive(Debug, Clone)]
pub struct Frame {
    width: usize,
    height: usize,
    /// Interleaved RGB, row-major, length = width*height*3.
    data: Vec<u8>,
    index: usize,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<u8>, index: usize) -> Self {
        assert!(width >= 1 && height >= 1, "frame dimensions must be >= 1");
        assert_eq!(data.len(), width * height * 3, "RGB byte length mismatch");
        Self {
            width,
            height,
            data,
            index,
        }
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Self::new(width, height, data, 0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn set_index(&mut self, index: usize) {
        self.index = index;
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i] = rgb[0];
        self.data[i + 1] = rgb[1];
        self.data[i + 2] = rgb[2];
    }

    /// Clamped pixel read in [0,1] units per channel.
    #[inline]
    pub fn pixel_clamped_f64(&self, x: isize, y: isize) -> [f64; 3] {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        let p = self.pixel(xc, yc);
        [
            p[0] as f64 / 255.0,
            p[1] as f64 / 255.0,
            p[2] as f64 / 255.0,
        ]
    }
}

/// Semantic tag for a feature channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Gray,
    Hog,
    Cn,
}

/// A stack of equally-sized feature planes on a cell grid.
#[derive(Debug, Clone)]
pub struct FeatureStack {
    pub channels: Vec<RealPlane>,
    pub kinds: Vec<ChannelKind>,
    pub cell_size: usize,
}

impl FeatureStack {
    pub fn grid(&self) -> (usize, usize) {
        self.channels[0].dims()
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Multiplies every channel element-wise with `window`.
    pub fn apply_window(&mut self, window: &RealPlane) {
        for ch in &mut self.channels {
            ch.hadamard(window);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureError {
    NonPositiveSize { w: f64, h: f64 },
    PatchTooSmall { need: usize, got: (usize, usize) },
    BadCellSize { cell: usize, dims: (usize, usize) },
    MissingResource { path: String, detail: String },
}

impl fmt::Display for FeatureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureError::NonPositiveSize { w, h } => {
                write!(f, "patch size must be positive, got {w}x{h}")
            }
            FeatureError::PatchTooSmall { need, got } => write!(
                f,
                "patch {}x{} too small, need at least {need}x{need}",
                got.0, got.1
            ),
            FeatureError::BadCellSize { cell, dims } => write!(
                f,
                "cell size {cell} does not divide patch dimensions {}x{}",
                dims.0, dims.1
            ),
            FeatureError::MissingResource { path, detail } => {
                write!(f, "color-name table resource {path}: {detail}")
            }
        }
    }
}

impl std::error::Error for FeatureError {}

/// Per-cell mean luminance, shifted to the zero-mean convention [-0.5, 0.5].
pub fn gray_channel(patch: &Patch, cell: usize) -> Result<FeatureStack, FeatureError> {
    let (pw, ph) = patch.dims();
    if cell == 0 || pw % cell != 0 || ph % cell != 0 {
        return Err(FeatureError::BadCellSize {
            cell,
            dims: (pw, ph),
        });
    }
    let (gw, gh) = (pw / cell, ph / cell);
    let mut plane = RealPlane::zeros(gh, gw);
    let inv = 1.0 / (cell * cell) as f64;
    for gy in 0..gh {
        for gx in 0..gw {
            let mut acc = 0.0;
            for y in gy * cell..(gy + 1) * cell {
                for x in gx * cell..(gx + 1) * cell {
                    let [r, g, b] = patch.pixel(x, y);
                    acc += 0.299 * r + 0.587 * g + 0.114 * b;
                }
            }
            plane.set(gy, gx, acc * inv - 0.5);
        }
    }
    Ok(FeatureStack {
        channels: vec![plane],
        kinds: vec![ChannelKind::Gray],
        cell_size: cell,
    })
}

/// Geometry of the translation-style feature extraction.
#[derive(Debug, Clone, Copy)]
pub struct RoiGeometry {
    /// Source window in frame pixels (padded around the target).
    pub src_w: f64,
    pub src_h: f64,
    /// Fixed resample size in pixels (multiples of the cell size).
    pub out_w: usize,
    pub out_h: usize,
    pub cell: usize,
}

impl RoiGeometry {
    pub fn grid(&self) -> (usize, usize) {
        (self.out_h / self.cell, self.out_w / self.cell)
    }

    /// Pixel displacement in the source frame per feature cell, per axis.
    pub fn px_per_cell(&self) -> (f64, f64) {
        (
            self.cell as f64 * self.src_w / self.out_w as f64,
            self.cell as f64 * self.src_h / self.out_h as f64,
        )
    }
}

/// Concatenated gray(1) + HOG(31) + CN(10) stack on the padded ROI, windowed.
///
/// CN channels are shifted by -1/10 before windowing so all channels are
/// roughly zero-mean.
pub fn translation_features(
    frame: &Frame,
    center: (f64, f64),
    geom: &RoiGeometry,
    cn: &CnTable,
) -> Result<FeatureStack, FeatureError> {
    let patch = extract_patch(
        frame,
        center,
        (geom.src_w, geom.src_h),
        (geom.out_w, geom.out_h),
    )?;
    let mut stack = gray_channel(&patch, geom.cell)?;
    let hog = hog_features(&patch, geom.cell)?;
    stack.channels.extend(hog.channels);
    stack.kinds.extend(hog.kinds);
    let mut cn_stack = cn_features(&patch, geom.cell, cn)?;
    for ch in &mut cn_stack.channels {
        for v in ch.as_mut_slice() {
            *v -= 0.1;
        }
    }
    stack.channels.extend(cn_stack.channels);
    stack.kinds.extend(cn_stack.kinds);

    let (gh, gw) = stack.grid();
    stack.apply_window(&hann_window(gh, gw));
    Ok(stack)
}

/// HOG feature vector of a patch resampled to the model size, vectorized
/// row-major over cells with channels minor: cell (0,0) ch0, cell (0,0) ch1,
/// ..., cell (0,1) ch0, ...
pub fn size_feature_vector(
    frame: &Frame,
    center: (f64, f64),
    patch_size: (f64, f64),
    model_w: usize,
    model_h: usize,
    cell: usize,
) -> Result<Vec<f64>, FeatureError> {
    let patch = extract_patch(frame, center, patch_size, (model_w, model_h))?;
    let hog = hog_features(&patch, cell)?;
    let (gh, gw) = hog.grid();
    let mut out = Vec::with_capacity(gh * gw * hog.channel_count());
    for r in 0..gh {
        for c in 0..gw {
            for ch in &hog.channels {
                out.push(ch.get(r, c));
            }
        }
    }
    Ok(out)
}

/// Channel count of the vectorized size-domain feature.
pub fn size_channel_count(model_w: usize, model_h: usize, cell: usize) -> usize {
    model_w * model_h * HOG_CHANNELS / (cell * cell)
}
