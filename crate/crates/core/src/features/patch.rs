//! ROI cropping with replication padding and bilinear resampling.

use super::{FeatureError, Frame};

/// An RGB patch resampled from a frame window, values in [0, 1].
#[derive(Debug, Clone)]
pub struct Patch {
    width: usize,
    height: usize,
    /// Interleaved RGB, row-major.
    data: Vec<f64>,
    /// Source window in frame pixels: (center x, center y, width, height).
    source: (f64, f64, f64, f64),
}

impl Patch {
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn source(&self) -> (f64, f64, f64, f64) {
        self.source
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Luminance in [0, 1].
    #[inline]
    pub fn luma(&self, x: usize, y: usize) -> f64 {
        let [r, g, b] = self.pixel(x, y);
        0.299 * r + 0.587 * g + 0.114 * b
    }
}

/// Crops the `size` window centered at `center` (frame pixels, replicating
/// edge pixels beyond borders) and resamples it to `out_size` with bilinear
/// interpolation.
pub fn extract_patch(
    frame: &Frame,
    center: (f64, f64),
    size: (f64, f64),
    out_size: (usize, usize),
) -> Result<Patch, FeatureError> {
    let (src_w, src_h) = size;
    let (out_w, out_h) = out_size;
    if !(src_w > 0.0 && src_h > 0.0) || out_w == 0 || out_h == 0 {
        return Err(FeatureError::NonPositiveSize { w: src_w, h: src_h });
    }
    let x0 = center.0 - src_w / 2.0;
    let y0 = center.1 - src_h / 2.0;
    let sx = src_w / out_w as f64;
    let sy = src_h / out_h as f64;

    let mut data = vec![0.0f64; out_w * out_h * 3];
    for oy in 0..out_h {
        // Pixel-center mapping: output (ox, oy) samples the source at the
        // center of its covered sub-window.
        let fy = y0 + (oy as f64 + 0.5) * sy - 0.5;
        let yb = fy.floor();
        let wy = fy - yb;
        let yi = yb as isize;
        for ox in 0..out_w {
            let fx = x0 + (ox as f64 + 0.5) * sx - 0.5;
            let xb = fx.floor();
            let wx = fx - xb;
            let xi = xb as isize;

            let p00 = frame.pixel_clamped_f64(xi, yi);
            let p10 = frame.pixel_clamped_f64(xi + 1, yi);
            let p01 = frame.pixel_clamped_f64(xi, yi + 1);
            let p11 = frame.pixel_clamped_f64(xi + 1, yi + 1);
            let i = (oy * out_w + ox) * 3;
            for c in 0..3 {
                let top = p00[c] * (1.0 - wx) + p10[c] * wx;
                let bot = p01[c] * (1.0 - wx) + p11[c] * wx;
                data[i + c] = top * (1.0 - wy) + bot * wy;
            }
        }
    }
    Ok(Patch {
        width: out_w,
        height: out_h,
        data,
        source: (center.0, center.1, src_w, src_h),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_crop_reproduces_frame() {
        let mut frame = Frame::filled(8, 6, [0, 0, 0]);
        for y in 0..6 {
            for x in 0..8 {
                frame.set_pixel(x, y, [(x * 31) as u8, (y * 40) as u8, ((x + y) * 17) as u8]);
            }
        }
        let patch = extract_patch(&frame, (4.0, 3.0), (8.0, 6.0), (8, 6)).unwrap();
        for y in 0..6 {
            for x in 0..8 {
                let want = frame.pixel(x, y);
                let got = patch.pixel(x, y);
                for c in 0..3 {
                    assert!((got[c] - want[c] as f64 / 255.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn center_outside_frame_replicates_border() {
        let mut frame = Frame::filled(4, 4, [10, 20, 30]);
        frame.set_pixel(3, 3, [200, 100, 50]);
        let patch = extract_patch(&frame, (100.0, 100.0), (4.0, 4.0), (4, 4)).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let got = patch.pixel(x, y);
                assert!((got[0] - 200.0 / 255.0).abs() < 1e-12);
                assert!((got[1] - 100.0 / 255.0).abs() < 1e-12);
                assert!((got[2] - 50.0 / 255.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn uniform_image_invariant_to_window_scale() {
        let frame = Frame::filled(16, 16, [99, 150, 201]);
        let a = extract_patch(&frame, (8.0, 8.0), (16.0, 16.0), (8, 8)).unwrap();
        let b = extract_patch(&frame, (8.0, 8.0), (8.0, 8.0), (8, 8)).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                let (pa, pb) = (a.pixel(x, y), b.pixel(x, y));
                for c in 0..3 {
                    assert!((pa[c] - pb[c]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn non_positive_size_rejected() {
        let frame = Frame::filled(4, 4, [0, 0, 0]);
        assert!(extract_patch(&frame, (2.0, 2.0), (0.0, 4.0), (4, 4)).is_err());
        assert!(extract_patch(&frame, (2.0, 2.0), (4.0, -1.0), (4, 4)).is_err());
    }
}
