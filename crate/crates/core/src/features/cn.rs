//! Color-name features: a 10-attribute probabilistic color descriptor looked
//! up from a quantized RGB table and averaged per cell.
//!
//! The table resource format is 32768 rows of 10 little-endian f32 values;
//! a pixel addresses row ⌊R/16⌋·1024 + ⌊G/16⌋·32 + ⌊B/16⌋. Every row is a
//! probability vector (sums to 1). The built-in table is generated from
//! fixed RGB prototypes per color name with a Gaussian soft assignment, so
//! it is bit-stable across runs and platforms.

use std::path::Path;
use std::sync::OnceLock;

use super::{ChannelKind, FeatureError, FeatureStack, Patch};
use crate::spectral::RealPlane;

pub const CN_CHANNELS: usize = 10;
pub const CN_TABLE_ROWS: usize = 32768;

/// Channel order of the 10 color attributes.
pub const CN_NAMES: [&str; CN_CHANNELS] = [
    "black", "blue", "brown", "gray", "green", "orange", "pink", "purple", "red", "white",
];

/// RGB prototypes (in [0,1]) per color name used by the built-in generator.
const PROTOTYPES: [(usize, [f64; 3]); 26] = [
    (0, [0.00, 0.00, 0.00]),
    (0, [0.10, 0.10, 0.10]),
    (1, [0.00, 0.00, 1.00]),
    (1, [0.00, 0.15, 0.55]),
    (1, [0.25, 0.45, 0.85]),
    (2, [0.42, 0.26, 0.13]),
    (2, [0.55, 0.35, 0.12]),
    (3, [0.35, 0.35, 0.35]),
    (3, [0.50, 0.50, 0.50]),
    (3, [0.65, 0.65, 0.65]),
    (4, [0.00, 1.00, 0.00]),
    (4, [0.05, 0.50, 0.10]),
    (4, [0.35, 0.70, 0.30]),
    (5, [1.00, 0.60, 0.00]),
    (5, [0.90, 0.75, 0.10]),
    (5, [0.98, 0.92, 0.15]),
    (6, [1.00, 0.72, 0.80]),
    (6, [0.95, 0.55, 0.70]),
    (7, [0.50, 0.00, 0.50]),
    (7, [0.58, 0.25, 0.80]),
    (7, [0.30, 0.05, 0.45]),
    (8, [1.00, 0.00, 0.00]),
    (8, [0.70, 0.05, 0.05]),
    (8, [0.88, 0.15, 0.12]),
    (9, [1.00, 1.00, 1.00]),
    (9, [0.90, 0.90, 0.92]),
];

const PROTO_SIGMA: f64 = 0.22;

/// Probability table mapping quantized RGB to the 10 color attributes.
pub struct CnTable {
    /// Row-major: CN_TABLE_ROWS rows of CN_CHANNELS probabilities.
    rows: Vec<f32>,
}

fn soft_assign(r: f64, g: f64, b: f64) -> [f32; CN_CHANNELS] {
    let mut scores = [0.0f64; CN_CHANNELS];
    let inv = 1.0 / (2.0 * PROTO_SIGMA * PROTO_SIGMA);
    for (name, p) in PROTOTYPES {
        let d2 = (r - p[0]).powi(2) + (g - p[1]).powi(2) + (b - p[2]).powi(2);
        scores[name] += (-d2 * inv).exp();
    }
    let total: f64 = scores.iter().sum();
    let mut out = [0.0f32; CN_CHANNELS];
    for (dst, s) in out.iter_mut().zip(scores) {
        *dst = (s / total) as f32;
    }
    out
}

fn generate_rows() -> Vec<f32> {
    let mut rows = vec![0.0f32; CN_TABLE_ROWS * CN_CHANNELS];
    for idx in 0..CN_TABLE_ROWS {
        // Decode with the documented strides; quantization levels above 15
        // only occur in the unused top half of the index space and are
        // clamped to valid bin centers.
        let qr = (idx / 1024).min(15);
        let qg = ((idx % 1024) / 32).min(15);
        let qb = (idx % 32).min(15);
        let center = |q: usize| (q as f64 * 16.0 + 8.0) / 255.0;
        let probs = soft_assign(center(qr), center(qg), center(qb));
        rows[idx * CN_CHANNELS..(idx + 1) * CN_CHANNELS].copy_from_slice(&probs);
    }
    rows
}

static BUILTIN: OnceLock<CnTable> = OnceLock::new();

impl CnTable {
    /// The generated built-in table (computed once per process).
    pub fn builtin() -> &'static CnTable {
        BUILTIN.get_or_init(|| CnTable {
            rows: generate_rows(),
        })
    }

    /// Loads a table resource file (32768 rows × 10 LE f32).
    pub fn from_file(path: &Path) -> Result<CnTable, FeatureError> {
        let bytes = std::fs::read(path).map_err(|e| FeatureError::MissingResource {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        let expect = CN_TABLE_ROWS * CN_CHANNELS * 4;
        if bytes.len() != expect {
            return Err(FeatureError::MissingResource {
                path: path.display().to_string(),
                detail: format!("expected {expect} bytes, found {}", bytes.len()),
            });
        }
        let mut rows = Vec::with_capacity(CN_TABLE_ROWS * CN_CHANNELS);
        for chunk in bytes.chunks_exact(4) {
            rows.push(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::MissingResource {
                path: path.display().to_string(),
                detail: "table contains non-finite entries".into(),
            });
        }
        Ok(CnTable { rows })
    }

    /// Writes the table in the resource file format.
    pub fn write_file(&self, path: &Path) -> std::io::Result<()> {
        let mut bytes = Vec::with_capacity(self.rows.len() * 4);
        for v in &self.rows {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(path, bytes)
    }

    /// Probability row for an 8-bit RGB triple.
    #[inline]
    pub fn lookup(&self, r: u8, g: u8, b: u8) -> &[f32] {
        let idx = (r as usize / 16) * 1024 + (g as usize / 16) * 32 + b as usize / 16;
        &self.rows[idx * CN_CHANNELS..(idx + 1) * CN_CHANNELS]
    }
}

/// Per-cell averaged color-name probabilities (10 channels, values in [0,1],
/// no centering applied here).
pub fn cn_features(
    patch: &Patch,
    cell: usize,
    table: &CnTable,
) -> Result<FeatureStack, FeatureError> {
    let (pw, ph) = patch.dims();
    if cell == 0 || pw % cell != 0 || ph % cell != 0 {
        return Err(FeatureError::BadCellSize {
            cell,
            dims: (pw, ph),
        });
    }
    let (gw, gh) = (pw / cell, ph / cell);
    let mut channels = vec![RealPlane::zeros(gh, gw); CN_CHANNELS];
    let inv = 1.0 / (cell * cell) as f64;
    for gy in 0..gh {
        for gx in 0..gw {
            let mut acc = [0.0f64; CN_CHANNELS];
            for y in gy * cell..(gy + 1) * cell {
                for x in gx * cell..(gx + 1) * cell {
                    let [r, g, b] = patch.pixel(x, y);
                    let to8 = |v: f64| (v * 255.0).round().clamp(0.0, 255.0) as u8;
                    let probs = table.lookup(to8(r), to8(g), to8(b));
                    for (a, p) in acc.iter_mut().zip(probs) {
                        *a += *p as f64;
                    }
                }
            }
            for (ch, a) in channels.iter_mut().zip(acc) {
                ch.set(gy, gx, a * inv);
            }
        }
    }
    Ok(FeatureStack {
        channels,
        kinds: vec![ChannelKind::Cn; CN_CHANNELS],
        cell_size: cell,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{extract_patch, Frame};

    fn uniform_patch(rgb: [u8; 3]) -> Patch {
        let frame = Frame::filled(8, 8, rgb);
        extract_patch(&frame, (4.0, 4.0), (8.0, 8.0), (8, 8)).unwrap()
    }

    #[test]
    fn rows_are_probability_vectors() {
        let table = CnTable::builtin();
        for idx in (0..CN_TABLE_ROWS).step_by(97) {
            let row = &table.rows[idx * CN_CHANNELS..(idx + 1) * CN_CHANNELS];
            let sum: f64 = row.iter().map(|v| *v as f64).sum();
            assert!((sum - 1.0).abs() < 1e-6, "row {idx} sums to {sum}");
            assert!(row.iter().all(|v| *v >= 0.0 && *v <= 1.0));
        }
    }

    #[test]
    fn pure_red_maps_to_red_channel() {
        let table = CnTable::builtin();
        let row = table.lookup(255, 0, 0);
        let argmax = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(CN_NAMES[argmax], "red");

        let cells = cn_features(&uniform_patch([255, 0, 0]), 4, table).unwrap();
        let (gh, gw) = cells.grid();
        for r in 0..gh {
            for c in 0..gw {
                let vals: Vec<f64> = cells.channels.iter().map(|ch| ch.get(r, c)).collect();
                let best = vals
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap()
                    .0;
                assert_eq!(CN_NAMES[best], "red");
            }
        }
    }

    #[test]
    fn grayscale_pixels_prefer_achromatic_names() {
        let table = CnTable::builtin();
        for v in [0u8, 40, 90, 128, 180, 230, 255] {
            let row = table.lookup(v, v, v);
            let achromatic: f64 = [0usize, 3, 9].iter().map(|i| row[*i] as f64).sum();
            let chromatic: f64 = 1.0 - achromatic;
            assert!(
                achromatic > 0.6 && chromatic < 0.4,
                "gray level {v}: achromatic mass {achromatic}"
            );
        }
    }

    #[test]
    fn cell_probabilities_sum_to_one() {
        let table = CnTable::builtin();
        let mut frame = Frame::filled(16, 16, [0, 0, 0]);
        for y in 0..16 {
            for x in 0..16 {
                frame.set_pixel(x, y, [(x * 16) as u8, (y * 16) as u8, ((x ^ y) * 16) as u8]);
            }
        }
        let patch = extract_patch(&frame, (8.0, 8.0), (16.0, 16.0), (16, 16)).unwrap();
        let cells = cn_features(&patch, 4, table).unwrap();
        let (gh, gw) = cells.grid();
        for r in 0..gh {
            for c in 0..gw {
                let sum: f64 = cells.channels.iter().map(|ch| ch.get(r, c)).sum();
                assert!((sum - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn resource_file_round_trip() {
        let dir = std::env::temp_dir().join("jsar_cn_table_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cn_table.bin");
        CnTable::builtin().write_file(&path).unwrap();
        let loaded = CnTable::from_file(&path).unwrap();
        assert_eq!(loaded.rows, CnTable::builtin().rows);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn missing_resource_is_a_structured_error() {
        let err = CnTable::from_file(Path::new("/nonexistent/cn_table.bin")).unwrap_err();
        assert!(matches!(err, FeatureError::MissingResource { .. }));
    }
}
