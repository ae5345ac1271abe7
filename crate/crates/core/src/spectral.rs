//! Frequency-domain machinery shared by the translation, size, and decision
//! filters: 2D DFTs, closed-form ridge-regression filter training, response
//! synthesis, and linear model interpolation.

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Dense M×N grid of real values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPlane {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealPlane {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "plane dimensions must be >= 1");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length must equal rows*cols");
        Self { rows, cols, data }
    }

    /// Builds a plane by evaluating `f(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Index and value of the maximum entry (first occurrence in row-major order).
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let v = self.get(r, c);
                if v > best.2 {
                    best = (r, c, v);
                }
            }
        }
        best
    }

    pub fn max_value(&self) -> f64 {
        self.argmax().2
    }

    /// Element-wise product with another plane of identical dimensions.
    pub fn hadamard(&mut self, other: &RealPlane) {
        assert_eq!(self.dims(), other.dims());
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a *= *b;
        }
    }

    /// Circularly shifts the plane so the entry at (r, c) moves to (0, 0).
    pub fn shifted_to_origin(&self, r: usize, c: usize) -> RealPlane {
        RealPlane::from_fn(self.rows, self.cols, |i, j| {
            self.get((i + r) % self.rows, (j + c) % self.cols)
        })
    }
}

/// Dense M×N grid of complex values, row-major; the Fourier dual of [`RealPlane`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    rows: usize,
    cols: usize,
    data: Vec<Complex<f64>>,
}

impl ComplexSpectrum {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1);
        Self {
            rows,
            cols,
            data: vec![Complex::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex<f64> {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex<f64>) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[Complex<f64>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex<f64>] {
        &mut self.data
    }
}

/// Errors from filter training and correlation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpectralError {
    /// Plane dimensions disagree.
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// Channel counts disagree.
    ChannelMismatch { expected: usize, got: usize },
    /// A sample with zero channels was supplied.
    EmptySample,
}

impl fmt::Display for SpectralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralError::DimensionMismatch { expected, got } => write!(
                f,
                "dimension mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            SpectralError::ChannelMismatch { expected, got } => {
                write!(f, "channel mismatch: expected {expected}, got {got}")
            }
            SpectralError::EmptySample => write!(f, "sample has no feature channels"),
        }
    }
}

impl std::error::Error for SpectralError {}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan_forward(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

fn plan_inverse(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

fn fft2_in_place(data: &mut [Complex<f64>], rows: usize, cols: usize, inverse: bool) {
    let row_fft = if inverse {
        plan_inverse(cols)
    } else {
        plan_forward(cols)
    };
    for r in 0..rows {
        row_fft.process(&mut data[r * cols..(r + 1) * cols]);
    }
    let col_fft = if inverse {
        plan_inverse(rows)
    } else {
        plan_forward(rows)
    };
    let mut col = vec![Complex::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            col[r] = data[r * cols + c];
        }
        col_fft.process(&mut col);
        for r in 0..rows {
            data[r * cols + c] = col[r];
        }
    }
}

/// Forward unnormalized 2D DFT of a real plane.
pub fn dft2(plane: &RealPlane) -> ComplexSpectrum {
    let (rows, cols) = plane.dims();
    let mut spec = ComplexSpectrum::zeros(rows, cols);
    for (dst, src) in spec.data.iter_mut().zip(plane.data.iter()) {
        *dst = Complex::new(*src, 0.0);
    }
    fft2_in_place(&mut spec.data, rows, cols, false);
    spec
}

/// Inverse 2D DFT with 1/(MN) normalization; imaginary parts are discarded.
pub fn idft2(spec: &ComplexSpectrum) -> RealPlane {
    let (rows, cols) = spec.dims();
    let mut buf = spec.data.clone();
    fft2_in_place(&mut buf, rows, cols, true);
    let scale = 1.0 / (rows * cols) as f64;
    let data = buf.iter().map(|z| z.re * scale).collect();
    RealPlane::from_vec(rows, cols, data)
}

/// 2D Gaussian label with per-axis standard deviations, peak value exactly
/// 1.0 at the center cell (rows/2, cols/2).
pub fn gaussian_label_aniso(rows: usize, cols: usize, sigma_r: f64, sigma_c: f64) -> RealPlane {
    assert!(rows >= 1 && cols >= 1);
    assert!(sigma_r > 0.0 && sigma_c > 0.0, "sigma must be positive");
    let cr = (rows / 2) as f64;
    let cc = (cols / 2) as f64;
    RealPlane::from_fn(rows, cols, |r, c| {
        let dr = (r as f64 - cr) / sigma_r;
        let dc = (c as f64 - cc) / sigma_c;
        (-0.5 * (dr * dr + dc * dc)).exp()
    })
}

/// Isotropic Gaussian label whose bandwidth is `sigma_factor` times the
/// target extent (both in the same cell units as the plane).
pub fn gaussian_label(rows: usize, cols: usize, sigma_factor: f64, target_extent: f64) -> RealPlane {
    let sigma = (sigma_factor * target_extent).max(1e-9);
    gaussian_label_aniso(rows, cols, sigma, sigma)
}

fn hann_1d(len: usize) -> Vec<f64> {
    // Degenerate single-sample window is fixed to 1.0.
    if len == 1 {
        return vec![1.0];
    }
    let denom = (len - 1) as f64;
    (0..len)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / denom).cos()))
        .collect()
}

/// Separable 2D Hann taper, zero on the border rows/cols (1×1 case yields 1.0).
pub fn hann_window(rows: usize, cols: usize) -> RealPlane {
    let wr = hann_1d(rows);
    let wc = hann_1d(cols);
    RealPlane::from_fn(rows, cols, |r, c| wr[r] * wc[c])
}

/// A learned correlation filter in numerator/denominator form.
///
/// The numerator holds one complex spectrum per feature channel
/// (label spectrum times conjugated sample spectrum) and the denominator the
/// shared per-frequency sample energy. The divided filter spectrum is only
/// reconstructed at correlation time, so linear interpolation of two models
/// operates on the parts, not the ratio.
#[derive(Debug, Clone)]
pub struct FilterModel {
    numerator: Vec<ComplexSpectrum>,
    denominator: RealPlane,
    lambda: f64,
}

impl FilterModel {
    pub fn channels(&self) -> usize {
        self.numerator.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.denominator.dims()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn numerator(&self) -> &[ComplexSpectrum] {
        &self.numerator
    }

    pub fn denominator(&self) -> &RealPlane {
        &self.denominator
    }

    /// Reconstructs the divided filter spectrum for one channel.
    pub fn filter_spectrum(&self, channel: usize) -> ComplexSpectrum {
        let (rows, cols) = self.dims();
        let mut out = ComplexSpectrum::zeros(rows, cols);
        for i in 0..rows * cols {
            out.data[i] = self.numerator[channel].data[i] / (self.denominator.data[i] + self.lambda);
        }
        out
    }
}

fn check_stack(sample: &[RealPlane], dims: (usize, usize)) -> Result<(), SpectralError> {
    if sample.is_empty() {
        return Err(SpectralError::EmptySample);
    }
    for ch in sample {
        if ch.dims() != dims {
            return Err(SpectralError::DimensionMismatch {
                expected: dims,
                got: ch.dims(),
            });
        }
    }
    Ok(())
}

/// Closed-form ridge-regression filter training.
///
/// Per channel d: numerator_d = label_spectrum ⊙ conj(sample_spectrum_d);
/// denominator = Σ_d |sample_spectrum_d|². The regularizer `lambda` is
/// applied at division time.
pub fn train_filter(
    sample: &[RealPlane],
    label: &RealPlane,
    lambda: f64,
) -> Result<FilterModel, SpectralError> {
    check_stack(sample, label.dims())?;
    assert!(lambda >= 0.0, "lambda must be non-negative");
    let (rows, cols) = label.dims();
    let label_spec = dft2(label);
    let mut denominator = RealPlane::zeros(rows, cols);
    let mut numerator = Vec::with_capacity(sample.len());
    for ch in sample {
        let xf = dft2(ch);
        let mut num = ComplexSpectrum::zeros(rows, cols);
        for i in 0..rows * cols {
            let x = xf.data[i];
            num.data[i] = label_spec.data[i] * x.conj();
            denominator.data[i] += x.norm_sqr();
        }
        numerator.push(num);
    }
    Ok(FilterModel {
        numerator,
        denominator,
        lambda,
    })
}

/// Correlation response of a trained model against a search feature stack.
///
/// The response spectrum is Σ_d numerator_d ⊙ search_spectrum_d divided by
/// (denominator + lambda); the spatial response is its inverse DFT. A peak at
/// (dr, dc) means the search content sits at that cyclic displacement from
/// the training sample (labels are origin-peaked at training time).
pub fn correlate_response(
    model: &FilterModel,
    search: &[RealPlane],
) -> Result<RealPlane, SpectralError> {
    if search.len() != model.channels() {
        return Err(SpectralError::ChannelMismatch {
            expected: model.channels(),
            got: search.len(),
        });
    }
    check_stack(search, model.dims())?;
    let (rows, cols) = model.dims();
    let mut resp = ComplexSpectrum::zeros(rows, cols);
    for (d, ch) in search.iter().enumerate() {
        let mf = dft2(ch);
        let num = &model.numerator[d];
        for i in 0..rows * cols {
            resp.data[i] += num.data[i] * mf.data[i];
        }
    }
    for i in 0..rows * cols {
        resp.data[i] /= model.denominator.data[i] + model.lambda;
    }
    Ok(idft2(&resp))
}

/// Linear interpolation of two models: each numerator plane and the
/// denominator become (1−theta)·old + theta·fresh.
pub fn interpolate_model(
    old: &FilterModel,
    fresh: &FilterModel,
    theta: f64,
) -> Result<FilterModel, SpectralError> {
    assert!((0.0..=1.0).contains(&theta), "theta must lie in [0, 1]");
    if old.channels() != fresh.channels() {
        return Err(SpectralError::ChannelMismatch {
            expected: old.channels(),
            got: fresh.channels(),
        });
    }
    if old.dims() != fresh.dims() {
        return Err(SpectralError::DimensionMismatch {
            expected: old.dims(),
            got: fresh.dims(),
        });
    }
    let (rows, cols) = old.dims();
    let a = 1.0 - theta;
    let mut numerator = Vec::with_capacity(old.channels());
    for d in 0..old.channels() {
        let mut num = ComplexSpectrum::zeros(rows, cols);
        for i in 0..rows * cols {
            num.data[i] = old.numerator[d].data[i] * a + fresh.numerator[d].data[i] * theta;
        }
        numerator.push(num);
    }
    let mut denominator = RealPlane::zeros(rows, cols);
    for i in 0..rows * cols {
        denominator.data[i] = old.denominator.data[i] * a + fresh.denominator.data[i] * theta;
    }
    Ok(FilterModel {
        numerator,
        denominator,
        lambda: old.lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_plane(rows: usize, cols: usize, seed: u64) -> RealPlane {
        // Small deterministic LCG keeps the oracle tests dependency-free.
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        RealPlane::from_fn(rows, cols, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
    }

    #[test]
    fn dft_of_zeros_is_zero() {
        let spec = dft2(&RealPlane::zeros(4, 6));
        assert!(spec.as_slice().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn dft_of_constant_is_dc_only() {
        let plane = RealPlane::from_fn(3, 5, |_, _| 2.5);
        let spec = dft2(&plane);
        assert!((spec.get(0, 0).re - 2.5 * 15.0).abs() < 1e-9);
        assert!(spec.get(0, 0).im.abs() < 1e-9);
        for r in 0..3 {
            for c in 0..5 {
                if (r, c) != (0, 0) {
                    assert!(spec.get(r, c).norm() < 1e-9, "bin ({r},{c}) not zero");
                }
            }
        }
    }

    #[test]
    fn dft_of_delta_is_all_ones() {
        let mut plane = RealPlane::zeros(4, 4);
        plane.set(0, 0, 1.0);
        let spec = dft2(&plane);
        for z in spec.as_slice() {
            assert!((z.re - 1.0).abs() < 1e-12 && z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_identity() {
        let plane = rand_plane(8, 8, 7);
        let back = idft2(&dft2(&plane));
        for (a, b) in plane.as_slice().iter().zip(back.as_slice()) {
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn idft_of_zeros_and_dc() {
        let zeros = idft2(&ComplexSpectrum::zeros(3, 3));
        assert!(zeros.as_slice().iter().all(|v| *v == 0.0));
        let mut dc = ComplexSpectrum::zeros(2, 3);
        dc.set(0, 0, Complex::new(6.0, 0.0));
        let ones = idft2(&dc);
        for v in ones.as_slice() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_label_single_cell() {
        let label = gaussian_label(1, 1, 1.0 / 16.0, 4.0);
        assert_eq!(label.as_slice(), &[1.0]);
    }

    #[test]
    fn gaussian_label_peak_and_symmetry() {
        let label = gaussian_label(5, 5, 0.5, 4.0);
        assert_eq!(label.get(2, 2), 1.0);
        for r in 0..5 {
            for c in 0..5 {
                assert!((label.get(r, c) - label.get(4 - r, c)).abs() < 1e-12);
                assert!((label.get(r, c) - label.get(r, 4 - c)).abs() < 1e-12);
                assert!(label.get(r, c) >= 0.0 && label.get(r, c) <= 1.0);
            }
        }
    }

    #[test]
    fn hann_window_conventions() {
        assert_eq!(hann_window(1, 1).as_slice(), &[1.0]);
        let w3 = hann_window(3, 3);
        assert!((w3.get(1, 1) - 1.0).abs() < 1e-12);
        let w4 = hann_window(4, 4);
        for r in 0..4 {
            for c in 0..4 {
                assert!((w4.get(r, c) - w4.get(3 - r, 3 - c)).abs() < 1e-12);
                assert!(w4.get(r, c) >= 0.0 && w4.get(r, c) <= 1.0);
            }
        }
        // Border rows/cols are exactly zero.
        for i in 0..4 {
            assert_eq!(w4.get(0, i), 0.0);
            assert_eq!(w4.get(i, 0), 0.0);
        }
    }

    #[test]
    fn delta_sample_delta_label_gives_identity_filter() {
        let mut sample = RealPlane::zeros(4, 4);
        sample.set(0, 0, 1.0);
        let label = sample.clone();
        let model = train_filter(&[sample], &label, 0.0).unwrap();
        let w = model.filter_spectrum(0);
        for z in w.as_slice() {
            assert!((z.re - 1.0).abs() < 1e-12 && z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn ridge_shrinkage_is_monotone_in_lambda() {
        let sample = rand_plane(6, 6, 3);
        let label = gaussian_label(6, 6, 1.0, 2.0);
        let mut prev_norm = f64::INFINITY;
        for lambda in [0.0, 0.1, 1.0, 10.0, 100.0] {
            let model = train_filter(std::slice::from_ref(&sample), &label, lambda).unwrap();
            let w = model.filter_spectrum(0);
            let norm: f64 = w.as_slice().iter().map(|z| z.norm_sqr()).sum();
            assert!(norm <= prev_norm + 1e-12, "norm grew at lambda={lambda}");
            prev_norm = norm;
        }
    }

    #[test]
    fn train_filter_matches_per_bin_scalar_solve() {
        let chans = [rand_plane(4, 4, 11), rand_plane(4, 4, 12)];
        let label = rand_plane(4, 4, 13);
        let lambda = 0.37;
        let model = train_filter(&chans, &label, lambda).unwrap();
        let gf = dft2(&label);
        let xf: Vec<_> = chans.iter().map(dft2).collect();
        for d in 0..2 {
            let w = model.filter_spectrum(d);
            for i in 0..16 {
                let den: f64 = xf.iter().map(|x| x.as_slice()[i].norm_sqr()).sum();
                let expect = gf.as_slice()[i] * xf[d].as_slice()[i].conj() / (den + lambda);
                let got = w.as_slice()[i];
                assert!((expect - got).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let sample = vec![RealPlane::zeros(4, 4), RealPlane::zeros(4, 5)];
        let label = RealPlane::zeros(4, 4);
        let err = train_filter(&sample, &label, 0.1).unwrap_err();
        assert!(matches!(err, SpectralError::DimensionMismatch { .. }));
    }

    #[test]
    fn response_on_training_sample_peaks_at_origin() {
        let sample = rand_plane(8, 8, 21);
        let label = gaussian_label(8, 8, 0.125, 8.0).shifted_to_origin(4, 4);
        let model = train_filter(std::slice::from_ref(&sample), &label, 1e-6).unwrap();
        let resp = correlate_response(&model, std::slice::from_ref(&sample)).unwrap();
        let (r, c, peak) = resp.argmax();
        assert_eq!((r, c), (0, 0));
        assert!(peak > 0.9, "peak {peak} should approach the label peak");
    }

    #[test]
    fn shift_equivariance_of_response() {
        let sample = rand_plane(8, 6, 33);
        let label = gaussian_label(8, 6, 0.2, 6.0).shifted_to_origin(4, 3);
        let model = train_filter(std::slice::from_ref(&sample), &label, 1e-4).unwrap();
        for (dr, dc) in [(1usize, 0usize), (0, 2), (3, 5), (7, 1)] {
            let shifted = RealPlane::from_fn(8, 6, |r, c| {
                sample.get((r + 8 - dr) % 8, (c + 6 - dc) % 6)
            });
            let resp = correlate_response(&model, std::slice::from_ref(&shifted)).unwrap();
            let (r, c, _) = resp.argmax();
            assert_eq!((r, c), (dr, dc), "peak must follow the content shift");
        }
    }

    #[test]
    fn interpolation_endpoints_and_midpoint() {
        let s1 = [rand_plane(2, 2, 41)];
        let s2 = [rand_plane(2, 2, 42)];
        let label = gaussian_label(2, 2, 1.0, 1.0);
        let old = train_filter(&s1, &label, 0.01).unwrap();
        let fresh = train_filter(&s2, &label, 0.01).unwrap();

        let at0 = interpolate_model(&old, &fresh, 0.0).unwrap();
        let at1 = interpolate_model(&old, &fresh, 1.0).unwrap();
        let mid = interpolate_model(&old, &fresh, 0.5).unwrap();
        for i in 0..4 {
            assert_eq!(at0.numerator[0].as_slice()[i], old.numerator[0].as_slice()[i]);
            assert_eq!(at1.numerator[0].as_slice()[i], fresh.numerator[0].as_slice()[i]);
            let want =
                (old.numerator[0].as_slice()[i] + fresh.numerator[0].as_slice()[i]) * 0.5;
            assert!((mid.numerator[0].as_slice()[i] - want).norm() < 1e-15);
            let want_den =
                (old.denominator.as_slice()[i] + fresh.denominator.as_slice()[i]) * 0.5;
            assert!((mid.denominator.as_slice()[i] - want_den).abs() < 1e-15);
        }
    }

    #[test]
    fn interpolation_stays_between_endpoints() {
        let s1 = [rand_plane(3, 3, 51)];
        let s2 = [rand_plane(3, 3, 52)];
        let label = gaussian_label(3, 3, 1.0, 1.0);
        let old = train_filter(&s1, &label, 0.01).unwrap();
        let fresh = train_filter(&s2, &label, 0.01).unwrap();
        let mid = interpolate_model(&old, &fresh, 0.3).unwrap();
        for i in 0..9 {
            let (a, b) = (
                old.denominator.as_slice()[i],
                fresh.denominator.as_slice()[i],
            );
            let v = mid.denominator.as_slice()[i];
            assert!(v >= a.min(b) - 1e-12 && v <= a.max(b) + 1e-12);
            let (na, nb) = (
                old.numerator[0].as_slice()[i],
                fresh.numerator[0].as_slice()[i],
            );
            let nv = mid.numerator[0].as_slice()[i];
            assert!(nv.re >= na.re.min(nb.re) - 1e-12 && nv.re <= na.re.max(nb.re) + 1e-12);
            assert!(nv.im >= na.im.min(nb.im) - 1e-12 && nv.im <= na.im.max(nb.im) + 1e-12);
        }
    }
}
