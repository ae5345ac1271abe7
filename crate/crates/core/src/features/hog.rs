//! 31-channel HOG (Felzenszwalb formulation): 18 contrast-sensitive and
//! 9 contrast-insensitive orientation channels plus 4 normalization-energy
//! channels, computed per cell with 4-neighbor block normalization and 0.2
//! clipping.

use super::{ChannelKind, FeatureError, FeatureStack, Patch};
use crate::spectral::RealPlane;

pub const HOG_CHANNELS: usize = 31;

const ORIENT_BINS: usize = 18;
const CLIP: f64 = 0.2;
// 1/sqrt(18), the energy-channel scale of the original formulation.
const TEXTURE_SCALE: f64 = 0.235_702_260_395_515_84;
// Energy floor inside the block normalizer. Pixel values live in [0, 1], so
// this floor lets strong edges normalize as usual while near-uniform cells
// map to near-zero features instead of being amplified.
const NORM_EPS: f64 = 1.0;

/// Max-channel image gradient at (x, y) with clamped centered differences.
#[inline]
fn pixel_gradient(patch: &Patch, x: usize, y: usize) -> (f64, f64) {
    let (w, h) = patch.dims();
    let xm = x.saturating_sub(1);
    let xp = (x + 1).min(w - 1);
    let ym = y.saturating_sub(1);
    let yp = (y + 1).min(h - 1);
    let left = patch.pixel(xm, y);
    let right = patch.pixel(xp, y);
    let up = patch.pixel(x, ym);
    let down = patch.pixel(x, yp);
    let mut best = (0.0, 0.0);
    let mut best_sq = -1.0;
    for c in 0..3 {
        let dx = right[c] - left[c];
        let dy = down[c] - up[c];
        let sq = dx * dx + dy * dy;
        if sq > best_sq {
            best_sq = sq;
            best = (dx, dy);
        }
    }
    best
}

/// Accumulates the 18-bin orientation histogram per cell with soft
/// orientation binning and bilinear spatial binning.
fn cell_histograms(patch: &Patch, cell: usize, gh: usize, gw: usize) -> Vec<f64> {
    let (w, h) = patch.dims();
    let mut hist = vec![0.0f64; gh * gw * ORIENT_BINS];
    let bin_width = std::f64::consts::TAU / ORIENT_BINS as f64;
    for y in 0..h {
        let cy = (y as f64 + 0.5) / cell as f64 - 0.5;
        let cy0 = cy.floor();
        let wy = cy - cy0;
        for x in 0..w {
            let (dx, dy) = pixel_gradient(patch, x, y);
            let mag = (dx * dx + dy * dy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let mut theta = dy.atan2(dx);
            if theta < 0.0 {
                theta += std::f64::consts::TAU;
            }
            let ob = theta / bin_width;
            let b0 = (ob.floor() as usize) % ORIENT_BINS;
            let b1 = (b0 + 1) % ORIENT_BINS;
            let wb = ob - ob.floor();

            let cx = (x as f64 + 0.5) / cell as f64 - 0.5;
            let cx0 = cx.floor();
            let wx = cx - cx0;
            for (dyc, wyc) in [(0isize, 1.0 - wy), (1, wy)] {
                let r = (cy0 as isize + dyc).clamp(0, gh as isize - 1) as usize;
                for (dxc, wxc) in [(0isize, 1.0 - wx), (1, wx)] {
                    let c = (cx0 as isize + dxc).clamp(0, gw as isize - 1) as usize;
                    let wsp = wyc * wxc * mag;
                    let base = (r * gw + c) * ORIENT_BINS;
                    hist[base + b0] += wsp * (1.0 - wb);
                    hist[base + b1] += wsp * wb;
                }
            }
        }
    }
    hist
}

pub fn hog_features(patch: &Patch, cell: usize) -> Result<FeatureStack, FeatureError> {
    let (w, h) = patch.dims();
    if cell == 0 || w % cell != 0 || h % cell != 0 {
        return Err(FeatureError::BadCellSize {
            cell,
            dims: (w, h),
        });
    }
    if w < 3 * cell || h < 3 * cell {
        return Err(FeatureError::PatchTooSmall {
            need: 3 * cell,
            got: (w, h),
        });
    }
    let (gw, gh) = (w / cell, h / cell);
    let hist = cell_histograms(patch, cell, gh, gw);

    // Per-cell gradient energy over the 9 contrast-insensitive orientations.
    let mut energy = vec![0.0f64; gh * gw];
    for r in 0..gh {
        for c in 0..gw {
            let base = (r * gw + c) * ORIENT_BINS;
            let mut e = 0.0;
            for b in 0..9 {
                let v = hist[base + b] + hist[base + b + 9];
                e += v * v;
            }
            energy[r * gw + c] = e;
        }
    }
    let e_at = |r: isize, c: isize| -> f64 {
        let rc = r.clamp(0, gh as isize - 1) as usize;
        let cc = c.clamp(0, gw as isize - 1) as usize;
        energy[rc * gw + cc]
    };

    let mut channels = vec![RealPlane::zeros(gh, gw); HOG_CHANNELS];
    for r in 0..gh {
        for c in 0..gw {
            let (ri, ci) = (r as isize, c as isize);
            // One normalizer per diagonal 2x2 block containing this cell.
            let norms = [(-1isize, -1isize), (-1, 1), (1, -1), (1, 1)].map(|(dr, dc)| {
                1.0 / (e_at(ri, ci)
                    + e_at(ri + dr, ci)
                    + e_at(ri, ci + dc)
                    + e_at(ri + dr, ci + dc)
                    + NORM_EPS)
                    .sqrt()
            });
            let base = (r * gw + c) * ORIENT_BINS;
            let mut texture = [0.0f64; 4];
            for b in 0..ORIENT_BINS {
                let v = hist[base + b];
                let mut acc = 0.0;
                for (j, n) in norms.iter().enumerate() {
                    let clipped = (v * n).min(CLIP);
                    acc += clipped;
                    texture[j] += clipped;
                }
                channels[b].set(r, c, 0.5 * acc);
            }
            for b in 0..9 {
                let v = hist[base + b] + hist[base + b + 9];
                let acc: f64 = norms.iter().map(|n| (v * n).min(CLIP)).sum();
                channels[ORIENT_BINS + b].set(r, c, 0.5 * acc);
            }
            for j in 0..4 {
                channels[27 + j].set(r, c, TEXTURE_SCALE * texture[j]);
            }
        }
    }

    Ok(FeatureStack {
        channels,
        kinds: vec![ChannelKind::Hog; HOG_CHANNELS],
        cell_size: cell,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{extract_patch, Frame};

    fn patch_from_fn(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> Patch {
        let mut frame = Frame::filled(w, h, [0, 0, 0]);
        for y in 0..h {
            for x in 0..w {
                let v = (f(x, y).clamp(0.0, 1.0) * 255.0).round() as u8;
                frame.set_pixel(x, y, [v, v, v]);
            }
        }
        extract_patch(
            &frame,
            (w as f64 / 2.0, h as f64 / 2.0),
            (w as f64, h as f64),
            (w, h),
        )
        .unwrap()
    }

    #[test]
    fn uniform_patch_has_zero_orientation_energy() {
        let patch = patch_from_fn(16, 16, |_, _| 0.43);
        let hog = hog_features(&patch, 4).unwrap();
        for ch in &hog.channels {
            assert!(ch.as_slice().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn too_small_patch_rejected() {
        let patch = patch_from_fn(8, 8, |_, _| 0.5);
        assert!(matches!(
            hog_features(&patch, 4),
            Err(FeatureError::PatchTooSmall { .. })
        ));
    }

    #[test]
    fn vertical_step_edge_energy_lands_in_horizontal_gradient_bins() {
        // Step at x=16 on a 32x16 patch: gradient points along +x (bin 0).
        let patch = patch_from_fn(32, 16, |x, _| if x < 16 { 0.1 } else { 0.9 });
        let hog = hog_features(&patch, 4).unwrap();
        // Cells straddling the edge are at grid columns 3 and 4.
        for r in 1..3 {
            for c in [3usize, 4] {
                let here: Vec<f64> = (18..27).map(|b| hog.channels[b].get(r, c)).collect();
                let peak_bin = here
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap()
                    .0;
                assert_eq!(peak_bin, 0, "insensitive energy should sit in bin 0");
                assert!(here[0] > 0.05, "edge cell should carry real energy");
                // Orthogonal orientation stays quiet.
                assert!(here[4] < here[0] * 0.2 && here[5] < here[0] * 0.2);
            }
        }
    }

    #[test]
    fn intensity_offset_invariance() {
        let base = |x: usize, y: usize| 0.3 + 0.25 * (((x * 7 + y * 13) % 11) as f64 / 11.0);
        let a = hog_features(&patch_from_fn(24, 24, base), 4).unwrap();
        // 0.2 offset, same structure. Quantization to u8 keeps the deltas exact
        // because 0.2*255 = 51 shifts every pixel by the same count.
        let b = hog_features(&patch_from_fn(24, 24, |x, y| base(x, y) + 0.2), 4).unwrap();
        for (ca, cb) in a.channels.iter().zip(b.channels.iter()) {
            for (va, vb) in ca.as_slice().iter().zip(cb.as_slice()) {
                assert!((va - vb).abs() < 2e-2, "offset changed features: {va} vs {vb}");
            }
        }
    }

    #[test]
    fn rotation_by_180_shifts_sensitive_bins_by_nine() {
        let tex = |x: usize, y: usize| {
            0.5 + 0.4 * ((x as f64 * 0.7).sin() * (y as f64 * 0.45).cos())
        };
        let patch = patch_from_fn(24, 24, tex);
        let (w, h) = (24usize, 24usize);
        let rotated = patch_from_fn(w, h, |x, y| tex(w - 1 - x, h - 1 - y));
        let a = hog_features(&patch, 4).unwrap();
        let b = hog_features(&rotated, 4).unwrap();
        let (gh, gw) = a.channels[0].dims();
        for r in 1..gh - 1 {
            for c in 1..gw - 1 {
                let (rr, rc) = (gh - 1 - r, gw - 1 - c);
                for bin in 0..18 {
                    let va = a.channels[bin].get(r, c);
                    let vb = b.channels[(bin + 9) % 18].get(rr, rc);
                    assert!(
                        (va - vb).abs() < 1e-9,
                        "sensitive bin {bin} mismatch at ({r},{c}): {va} vs {vb}"
                    );
                }
                for bin in 18..27 {
                    let va = a.channels[bin].get(r, c);
                    let vb = b.channels[bin].get(rr, rc);
                    assert!((va - vb).abs() < 1e-9, "insensitive bin mismatch");
                }
            }
        }
    }

    // Independent per-pixel oracle: recompute the normalized features with
    // plain scalar loops and compare element-wise.
    fn oracle_hog(patch: &Patch, cell: usize) -> Vec<Vec<f64>> {
        let (w, h) = patch.dims();
        let (gw, gh) = (w / cell, h / cell);
        let mut hist = vec![vec![0.0f64; 18]; gh * gw];
        for y in 0..h {
            for x in 0..w {
                let (dx, dy) = super::pixel_gradient(patch, x, y);
                let mag = (dx * dx + dy * dy).sqrt();
                if mag == 0.0 {
                    continue;
                }
                let mut th = dy.atan2(dx);
                if th < 0.0 {
                    th += std::f64::consts::TAU;
                }
                let ob = th / (std::f64::consts::TAU / 18.0);
                let b0 = (ob.floor() as usize) % 18;
                let wb = ob.fract();
                let cxf = (x as f64 + 0.5) / cell as f64 - 0.5;
                let cyf = (y as f64 + 0.5) / cell as f64 - 0.5;
                for (rr, wr) in [
                    (cyf.floor() as isize, 1.0 - cyf.fract()),
                    (cyf.floor() as isize + 1, cyf.fract()),
                ] {
                    for (cc, wc) in [
                        (cxf.floor() as isize, 1.0 - cxf.fract()),
                        (cxf.floor() as isize + 1, cxf.fract()),
                    ] {
                        let r = rr.clamp(0, gh as isize - 1) as usize;
                        let c = cc.clamp(0, gw as isize - 1) as usize;
                        hist[r * gw + c][b0] += mag * wr * wc * (1.0 - wb);
                        hist[r * gw + c][(b0 + 1) % 18] += mag * wr * wc * wb;
                    }
                }
            }
        }
        let energy: Vec<f64> = hist
            .iter()
            .map(|hs| (0..9).map(|b| (hs[b] + hs[b + 9]).powi(2)).sum())
            .collect();
        let e = |r: isize, c: isize| {
            energy[(r.clamp(0, gh as isize - 1) as usize) * gw
                + c.clamp(0, gw as isize - 1) as usize]
        };
        let mut out = vec![vec![0.0f64; gh * gw]; 31];
        for r in 0..gh as isize {
            for c in 0..gw as isize {
                let idx = r as usize * gw + c as usize;
                let mut norms = Vec::new();
                for (dr, dc) in [(-1, -1), (-1, 1), (1, -1), (1, 1)] {
                    norms.push(
                        1.0 / (e(r, c) + e(r + dr, c) + e(r, c + dc) + e(r + dr, c + dc)
                            + super::NORM_EPS)
                            .sqrt(),
                    );
                }
                let mut tex = [0.0f64; 4];
                for b in 0..18 {
                    let mut acc = 0.0;
                    for (j, n) in norms.iter().enumerate() {
                        let v = (hist[idx][b] * n).min(0.2);
                        acc += v;
                        tex[j] += v;
                    }
                    out[b][idx] = 0.5 * acc;
                }
                for b in 0..9 {
                    let s = hist[idx][b] + hist[idx][b + 9];
                    out[18 + b][idx] =
                        0.5 * norms.iter().map(|n| (s * n).min(0.2)).sum::<f64>();
                }
                for j in 0..4 {
                    out[27 + j][idx] = super::TEXTURE_SCALE * tex[j];
                }
            }
        }
        out
    }

    #[test]
    fn matches_per_pixel_oracle_on_gratings_and_noise() {
        let cases: Vec<Patch> = vec![
            patch_from_fn(24, 16, |x, _| 0.5 + 0.45 * (x as f64 * 0.8).sin()),
            patch_from_fn(16, 24, |_, y| 0.5 + 0.45 * (y as f64 * 0.6).sin()),
            patch_from_fn(24, 24, |x, y| {
                0.5 + 0.4 * ((x as f64 + 2.0 * y as f64) * 0.5).sin()
            }),
            patch_from_fn(20, 20, |x, y| ((x * 2654435761 + y * 40503) % 256) as f64 / 255.0),
        ];
        for patch in &cases {
            let hog = hog_features(patch, 4).unwrap();
            let oracle = oracle_hog(patch, 4);
            let (gh, gw) = hog.channels[0].dims();
            for ch in 0..31 {
                for r in 0..gh {
                    for c in 0..gw {
                        let got = hog.channels[ch].get(r, c);
                        let want = oracle[ch][r * gw + c];
                        assert!(
                            (got - want).abs() <= 1e-9,
                            "channel {ch} cell ({r},{c}): {got} vs {want}"
                        );
                    }
                }
            }
        }
    }
}
