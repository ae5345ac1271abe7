//! Tracker configuration: flat `key = value` text format, validation, and a
//! stable 64-bit hash for result provenance.

use std::fmt;

/// Tracking pipeline variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Joint scale and aspect-ratio tracking, no re-detection.
    Jsar,
    /// JSAR plus failure monitoring and proposal-based re-detection.
    JsarRe,
    /// Translation filter only; size held at the initial box.
    TranslationOnly,
    /// Brute-force 5-scale search with fixed aspect ratio (comparator).
    MultiScaleBaseline,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Jsar => "jsar",
            Mode::JsarRe => "jsar-re",
            Mode::TranslationOnly => "translation-only",
            Mode::MultiScaleBaseline => "multi-scale-baseline",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "jsar" => Some(Mode::Jsar),
            "jsar-re" => Some(Mode::JsarRe),
            "translation-only" => Some(Mode::TranslationOnly),
            "multi-scale-baseline" => Some(Mode::MultiScaleBaseline),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Every tracker hyperparameter. Defaults are the fixed evaluation settings;
/// they are the same for every sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    /// Number of scales in the size-domain grid (odd).
    pub scale_count: usize,
    /// Number of aspect ratios in the size-domain grid (odd).
    pub aspect_count: usize,
    /// Scale sampling step γ.
    pub gamma: f64,
    /// Aspect-ratio sampling step φ.
    pub phi: f64,
    /// Size-filter learning rate.
    pub theta_size: f64,
    /// Model width the size-domain patches are resampled to (px).
    pub model_width: usize,
    /// Model height the size-domain patches are resampled to (px).
    pub model_height: usize,
    /// Side length of a feature cell (px).
    pub cell_size: usize,
    /// Re-detection enablement threshold on the translation response peak.
    pub zeta_e: f64,
    /// Decision-filter update threshold on the translation response peak.
    pub zeta_s: f64,
    /// Re-initialization threshold on the best proposal's decision response.
    pub eta_d: f64,
    /// Side-length factor of the re-detection search area.
    pub omega: f64,
    /// Number of proposals kept for re-detection.
    pub proposal_count: usize,

    // Parameters the evaluation settings leave open; exposed with defaults.
    /// Ridge regularizer λ.
    pub lambda: f64,
    /// Translation/decision-filter learning rate.
    pub theta_trans: f64,
    /// Translation ROI area relative to the target box (4 = 2× per side).
    pub roi_area_factor: f64,
    /// Translation label bandwidth as a fraction of the target extent in cells.
    pub trans_label_sigma_factor: f64,
    /// Size label bandwidth per axis as a fraction of S and A.
    pub size_label_sigma_factor: f64,
    /// Multiplicative growth of ω per failed re-detection frame.
    pub omega_growth: f64,
    /// Multiplicative decay of η_d per failed re-detection frame.
    pub eta_d_decay: f64,
    /// Lower bound for the decayed η_d.
    pub eta_d_floor: f64,
    /// Cap on the translation ROI area in pixels (larger ROIs are downscaled).
    pub trans_model_max_area: f64,
    pub mode: Mode,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            scale_count: 13,
            aspect_count: 13,
            gamma: 1.03,
            phi: 1.02,
            theta_size: 0.014,
            model_width: 16,
            model_height: 32,
            cell_size: 4,
            zeta_e: 0.0105,
            zeta_s: 0.013,
            eta_d: 0.02,
            omega: 5.0,
            proposal_count: 30,
            lambda: 1e-2,
            theta_trans: 0.02,
            roi_area_factor: 4.0,
            trans_label_sigma_factor: 1.0 / 16.0,
            size_label_sigma_factor: 1.0 / 16.0,
            omega_growth: 1.1,
            eta_d_decay: 0.9,
            eta_d_floor: 1e-4,
            trans_model_max_area: 40000.0,
            mode: Mode::Jsar,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    UnknownKey { line: usize, key: String },
    BadValue { line: usize, key: String, value: String },
    MissingEquals { line: usize },
    Invalid { key: String, reason: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::UnknownKey { line, key } => {
                write!(f, "line {line}: unknown key `{key}`")
            }
            ConfigError::BadValue { line, key, value } => {
                write!(f, "line {line}: cannot parse `{value}` for key `{key}`")
            }
            ConfigError::MissingEquals { line } => {
                write!(f, "line {line}: expected `key = value`")
            }
            ConfigError::Invalid { key, reason } => write!(f, "key `{key}`: {reason}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// (key, getter) pairs in canonical order; the basis for printing and hashing.
const KEYS: &[&str] = &[
    "S",
    "A",
    "gamma",
    "phi",
    "theta_size",
    "W_model",
    "H_model",
    "C",
    "zeta_e",
    "zeta_s",
    "eta_d",
    "omega",
    "N_e",
    "lambda",
    "theta_trans",
    "roi_area_factor",
    "trans_label_sigma_factor",
    "size_label_sigma_factor",
    "omega_growth",
    "eta_d_decay",
    "eta_d_floor",
    "trans_model_max_area",
    "mode",
];

impl TrackerConfig {
    fn get(&self, key: &str) -> String {
        match key {
            "S" => self.scale_count.to_string(),
            "A" => self.aspect_count.to_string(),
            "gamma" => format_f64(self.gamma),
            "phi" => format_f64(self.phi),
            "theta_size" => format_f64(self.theta_size),
            "W_model" => self.model_width.to_string(),
            "H_model" => self.model_height.to_string(),
            "C" => self.cell_size.to_string(),
            "zeta_e" => format_f64(self.zeta_e),
            "zeta_s" => format_f64(self.zeta_s),
            "eta_d" => format_f64(self.eta_d),
            "omega" => format_f64(self.omega),
            "N_e" => self.proposal_count.to_string(),
            "lambda" => format_f64(self.lambda),
            "theta_trans" => format_f64(self.theta_trans),
            "roi_area_factor" => format_f64(self.roi_area_factor),
            "trans_label_sigma_factor" => format_f64(self.trans_label_sigma_factor),
            "size_label_sigma_factor" => format_f64(self.size_label_sigma_factor),
            "omega_growth" => format_f64(self.omega_growth),
            "eta_d_decay" => format_f64(self.eta_d_decay),
            "eta_d_floor" => format_f64(self.eta_d_floor),
            "trans_model_max_area" => format_f64(self.trans_model_max_area),
            "mode" => self.mode.as_str().to_string(),
            _ => unreachable!("unlisted key"),
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), ()> {
        fn p<T: std::str::FromStr>(v: &str) -> Result<T, ()> {
            v.parse().map_err(|_| ())
        }
        match key {
            "S" => self.scale_count = p(value)?,
            "A" => self.aspect_count = p(value)?,
            "gamma" => self.gamma = p(value)?,
            "phi" => self.phi = p(value)?,
            "theta_size" => self.theta_size = p(value)?,
            "W_model" => self.model_width = p(value)?,
            "H_model" => self.model_height = p(value)?,
            "C" => self.cell_size = p(value)?,
            "zeta_e" => self.zeta_e = p(value)?,
            "zeta_s" => self.zeta_s = p(value)?,
            "eta_d" => self.eta_d = p(value)?,
            "omega" => self.omega = p(value)?,
            "N_e" => self.proposal_count = p(value)?,
            "lambda" => self.lambda = p(value)?,
            "theta_trans" => self.theta_trans = p(value)?,
            "roi_area_factor" => self.roi_area_factor = p(value)?,
            "trans_label_sigma_factor" => self.trans_label_sigma_factor = p(value)?,
            "size_label_sigma_factor" => self.size_label_sigma_factor = p(value)?,
            "omega_growth" => self.omega_growth = p(value)?,
            "eta_d_decay" => self.eta_d_decay = p(value)?,
            "eta_d_floor" => self.eta_d_floor = p(value)?,
            "trans_model_max_area" => self.trans_model_max_area = p(value)?,
            "mode" => self.mode = Mode::parse(value).ok_or(())?,
            _ => return Err(()),
        }
        Ok(())
    }

    /// Structural validation of all invariants.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |key: &str, reason: &str| {
            Err(ConfigError::Invalid {
                key: key.into(),
                reason: reason.into(),
            })
        };
        if self.scale_count < 3 || self.scale_count % 2 == 0 {
            return err("S", "must be odd and >= 3");
        }
        if self.aspect_count < 3 || self.aspect_count % 2 == 0 {
            return err("A", "must be odd and >= 3");
        }
        if self.gamma <= 1.0 {
            return err("gamma", "must be > 1");
        }
        if self.phi <= 1.0 {
            return err("phi", "must be > 1");
        }
        if !(0.0..=1.0).contains(&self.theta_size) {
            return err("theta_size", "must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.theta_trans) {
            return err("theta_trans", "must lie in [0, 1]");
        }
        if self.cell_size == 0 {
            return err("C", "must be positive");
        }
        if self.model_width % self.cell_size != 0 || self.model_height % self.cell_size != 0 {
            return err("W_model", "model size must be a multiple of the cell size");
        }
        if self.model_width < 3 * self.cell_size || self.model_height < 3 * self.cell_size {
            return err("W_model", "model size must span at least 3 cells per axis");
        }
        for (key, v) in [
            ("zeta_e", self.zeta_e),
            ("zeta_s", self.zeta_s),
            ("eta_d", self.eta_d),
            ("omega", self.omega),
            ("eta_d_floor", self.eta_d_floor),
            ("trans_label_sigma_factor", self.trans_label_sigma_factor),
            ("size_label_sigma_factor", self.size_label_sigma_factor),
            ("trans_model_max_area", self.trans_model_max_area),
        ] {
            if !(v > 0.0) {
                return err(key, "must be positive");
            }
        }
        if self.lambda < 0.0 {
            return err("lambda", "must be non-negative");
        }
        if self.proposal_count == 0 {
            return err("N_e", "must be >= 1");
        }
        if self.roi_area_factor < 1.0 {
            return err("roi_area_factor", "must be >= 1");
        }
        if self.omega_growth <= 1.0 {
            return err("omega_growth", "must be > 1");
        }
        if !(0.0 < self.eta_d_decay && self.eta_d_decay < 1.0) {
            return err("eta_d_decay", "must lie in (0, 1)");
        }
        Ok(())
    }

    /// Canonical text form; `parse_config(print(cfg))` round-trips.
    pub fn print(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&self.get(key));
            out.push('\n');
        }
        out
    }

    /// Stable 64-bit hash over the canonical serialization at 9 decimal
    /// digits; any field change alters it.
    pub fn hash(&self) -> u64 {
        let mut canon = String::new();
        for key in KEYS {
            canon.push_str(key);
            canon.push('=');
            if *key == "mode" {
                canon.push_str(self.mode.as_str());
            } else {
                let v = self.get(key);
                match v.parse::<f64>() {
                    Ok(f) => canon.push_str(&format!("{f:.9}")),
                    Err(_) => canon.push_str(&v),
                }
            }
            canon.push(';');
        }
        fnv1a64(canon.as_bytes())
    }
}

fn format_f64(v: f64) -> String {
    // Shortest representation that round-trips.
    format!("{v}")
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Parses the flat key-value format: one `key = value` per line, `#` starts
/// a comment, unknown keys are rejected. Missing keys keep their defaults.
pub fn parse_config(text: &str) -> Result<TrackerConfig, ConfigError> {
    let mut cfg = TrackerConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or(ConfigError::MissingEquals { line: line_no })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line: line_no,
                key: key.into(),
            });
        }
        cfg.set(key, value).map_err(|_| ConfigError::BadValue {
            line: line_no,
            key: key.into(),
            value: value.into(),
        })?;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_yields_fixed_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.scale_count, 13);
        assert_eq!(cfg.aspect_count, 13);
        assert_eq!(cfg.gamma, 1.03);
        assert_eq!(cfg.phi, 1.02);
        assert_eq!(cfg.theta_size, 0.014);
        assert_eq!(cfg.model_width, 16);
        assert_eq!(cfg.model_height, 32);
        assert_eq!(cfg.cell_size, 4);
        assert_eq!(cfg.zeta_e, 0.0105);
        assert_eq!(cfg.zeta_s, 0.013);
        assert_eq!(cfg.eta_d, 0.02);
        assert_eq!(cfg.omega, 5.0);
        assert_eq!(cfg.proposal_count, 30);
        assert_eq!(cfg, TrackerConfig::default());
    }

    #[test]
    fn even_scale_count_rejected() {
        let err = parse_config("S = 12").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "S"));
    }

    #[test]
    fn override_isolation() {
        let cfg = parse_config("gamma = 1.05\n").unwrap();
        let mut expect = TrackerConfig::default();
        expect.gamma = 1.05;
        assert_eq!(cfg, expect);
    }

    #[test]
    fn unknown_key_named_in_error() {
        let err = parse_config("bogus = 3").unwrap_err();
        match err {
            ConfigError::UnknownKey { key, line } => {
                assert_eq!(key, "bogus");
                assert_eq!(line, 1);
            }
            other => panic!("wrong error {other:?}"),
        }
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let cfg = parse_config("# a comment\n\n  S = 9 # inline\n").unwrap();
        assert_eq!(cfg.scale_count, 9);
    }

    #[test]
    fn print_parse_round_trip() {
        let mut cfg = TrackerConfig::default();
        cfg.gamma = 1.07;
        cfg.mode = Mode::JsarRe;
        cfg.eta_d_floor = 3e-4;
        let back = parse_config(&cfg.print()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = TrackerConfig::default();
        let b = TrackerConfig::default();
        assert_eq!(a.hash(), b.hash());
        let mut c = TrackerConfig::default();
        c.theta_size = 0.015;
        assert_ne!(a.hash(), c.hash());
        let mut d = TrackerConfig::default();
        d.mode = Mode::TranslationOnly;
        assert_ne!(a.hash(), d.hash());
    }

    #[test]
    fn hash_independent_of_source_key_order() {
        let a = parse_config("gamma = 1.04\nS = 9").unwrap();
        let b = parse_config("S = 9\ngamma = 1.04").unwrap();
        assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn non_positive_threshold_rejected() {
        assert!(parse_config("zeta_e = 0").is_err());
        assert!(parse_config("zeta_e = -1").is_err());
    }

    #[test]
    fn mode_strings_parse() {
        for m in [
            Mode::Jsar,
            Mode::JsarRe,
            Mode::TranslationOnly,
            Mode::MultiScaleBaseline,
        ] {
            assert_eq!(Mode::parse(m.as_str()), Some(m));
        }
        assert_eq!(Mode::parse("nope"), None);
    }
}
