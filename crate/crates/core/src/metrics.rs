//! Image quality: mean squared error and a two-factor windowed SSIM on
//! intensity images, with per-window components kept for inspection.

use crate::error::{OsprError, Result};
use crate::field::RealField;

/// `(1 / (Nx Ny)) sum (R - T)^2` over two intensity images.
pub fn mse(target_intensity: &RealField, replay_intensity: &RealField) -> Result<f64> {
    check_dims(target_intensity, replay_intensity)?;
    let sum: f64 = target_intensity
        .data()
        .iter()
        .zip(replay_intensity.data())
        .map(|(t, r)| (r - t) * (r - t))
        .sum();
    Ok(sum / target_intensity.len() as f64)
}

fn check_dims(a: &RealField, b: &RealField) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(OsprError::DimensionMismatch {
            left: a.dims(),
            right: b.dims(),
        });
    }
    Ok(())
}

/// How the SSIM dynamic range `L` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DynamicRange {
    /// A fixed number of representable target levels, 256 for 8-bit images.
    TargetStates(f64),
    /// `max(T^2) - min(T^2)` of the target intensity; falls back to
    /// `max(T^2)` for a flat target and to 1 for an all-zero one.
    IntensitySpan,
}

impl Default for DynamicRange {
    fn default() -> Self {
        DynamicRange::TargetStates(256.0)
    }
}

impl DynamicRange {
    pub fn resolve(self, target_intensity: &RealField) -> f64 {
        match self {
            DynamicRange::TargetStates(l) => l,
            DynamicRange::IntensitySpan => {
                let (lo, hi) = target_intensity.min_max();
                if hi > lo {
                    hi - lo
                } else if hi > 0.0 {
                    hi
                } else {
                    1.0
                }
            }
        }
    }

    pub fn describe(self) -> String {
        match self {
            DynamicRange::TargetStates(l) => format!("states:{l}"),
            DynamicRange::IntensitySpan => "span".into(),
        }
    }
}

impl std::str::FromStr for DynamicRange {
    type Err = OsprError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "span" {
            return Ok(DynamicRange::IntensitySpan);
        }
        let n = s.strip_prefix("states:").unwrap_or(s);
        match n.parse::<f64>() {
            Ok(l) if l > 0.0 && l.is_finite() => Ok(DynamicRange::TargetStates(l)),
            _ => Err(OsprError::InvalidArgument(format!(
                "dynamic range must be `span` or a positive number of states, got `{s}`"
            ))),
        }
    }
}

/// SSIM constants and window geometry. `c1 = (k1 L)^2`, `c2 = (k2 L)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
    pub window: usize,
    pub stride: usize,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self::with_range(256.0)
    }
}

impl SsimParams {
    pub fn with_range(dynamic_range: f64) -> Self {
        Self {
            k1: 0.01,
            k2: 0.03,
            dynamic_range,
            window: 8,
            stride: 1,
        }
    }

    /// Defaults with `L` resolved against a target intensity image.
    pub fn for_target(target_intensity: &RealField, range: DynamicRange) -> Self {
        Self::with_range(range.resolve(target_intensity))
    }

    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    fn validate(&self) -> Result<()> {
        if self.window < 2 || self.stride == 0 {
            return Err(OsprError::InvalidArgument(format!(
                "SSIM window must be >= 2 and stride >= 1, got {} and {}",
                self.window, self.stride
            )));
        }
        if !(self.dynamic_range > 0.0 && self.dynamic_range.is_finite()) {
            return Err(OsprError::InvalidArgument(format!(
                "dynamic range must be positive, got {}",
                self.dynamic_range
            )));
        }
        Ok(())
    }
}

/// Statistics of one window pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStats {
    pub mu_t: f64,
    pub mu_r: f64,
    pub var_t: f64,
    pub var_r: f64,
    pub cov_tr: f64,
}

impl WindowStats {
    /// `(2 mu_T mu_R + c1) / (mu_T^2 + mu_R^2 + c1)`.
    pub fn s1(&self, c1: f64) -> f64 {
        (2.0 * self.mu_t * self.mu_r + c1) / (self.mu_t * self.mu_t + self.mu_r * self.mu_r + c1)
    }

    /// `(2 sigma_TR + c2) / (sigma_T^2 + sigma_R^2 + c2)`.
    pub fn s2(&self, c2: f64) -> f64 {
        (2.0 * self.cov_tr + c2) / (self.var_t + self.var_r + c2)
    }
}

/// Global SSIM plus every per-window component, windows in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SsimReport {
    pub global_ssim: f64,
    pub params: SsimParams,
    pub windows_x: usize,
    pub windows_y: usize,
    pub mu_t: Vec<f64>,
    pub mu_r: Vec<f64>,
    pub var_t: Vec<f64>,
    pub var_r: Vec<f64>,
    pub cov_tr: Vec<f64>,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
}

impl SsimReport {
    pub fn window_count(&self) -> usize {
        self.s1.len()
    }

    /// Values of one component, one per window.
    pub fn component(&self, component: SsimComponent) -> Vec<f64> {
        match component {
            SsimComponent::MuT2 => self.mu_t.iter().map(|m| m * m).collect(),
            SsimComponent::MuR2 => self.mu_r.iter().map(|m| m * m).collect(),
            SsimComponent::VarT => self.var_t.clone(),
            SsimComponent::VarR => self.var_r.clone(),
            SsimComponent::CovTR => self.cov_tr.clone(),
            SsimComponent::S1 => self.s1.clone(),
            SsimComponent::S2 => self.s2.clone(),
        }
    }
}

fn window_grid(t: &RealField, r: &RealField, params: &SsimParams) -> Result<(usize, usize)> {
    check_dims(t, r)?;
    params.validate()?;
    let (w, h) = t.dims();
    if w < params.window || h < params.window {
        return Err(OsprError::ImageSmallerThanWindow {
            image: (w, h),
            window: params.window,
        });
    }
    Ok((
        (w - params.window) / params.stride + 1,
        (h - params.window) / params.stride + 1,
    ))
}

// Visit every valid window in row-major order. Sums are formed directly
// (column band, then row) so no running-sum drift builds up on large images.
fn for_each_window(
    t: &RealField,
    r: &RealField,
    params: &SsimParams,
    mut visit: impl FnMut(WindowStats),
) -> Result<(usize, usize)> {
    let (nx, ny) = window_grid(t, r, params)?;
    let (w, _) = t.dims();
    let (win, stride) = (params.window, params.stride);
    let inv = 1.0 / (win * win) as f64;
    let (td, rd) = (t.data(), r.data());
    let mut cols = vec![[0.0f64; 5]; w];
    for wy in 0..ny {
        let y0 = wy * stride;
        cols.iter_mut().for_each(|c| *c = [0.0; 5]);
        for y in y0..y0 + win {
            let row = y * w;
            for (x, c) in cols.iter_mut().enumerate() {
                let (a, b) = (td[row + x], rd[row + x]);
                c[0] += a;
                c[1] += b;
                c[2] += a * a;
                c[3] += b * b;
                c[4] += a * b;
            }
        }
        for wx in 0..nx {
            let x0 = wx * stride;
            let mut s = [0.0f64; 5];
            for c in &cols[x0..x0 + win] {
                for k in 0..5 {
                    s[k] += c[k];
                }
            }
            let mu_t = s[0] * inv;
            let mu_r = s[1] * inv;
            visit(WindowStats {
                mu_t,
                mu_r,
                var_t: s[2] * inv - mu_t * mu_t,
                var_r: s[3] * inv - mu_r * mu_r,
                cov_tr: s[4] * inv - mu_t * mu_r,
            });
        }
    }
    Ok((nx, ny))
}

/// Windowed SSIM `mean_w s1 * s2` over all valid window positions.
pub fn ssim(
    target_intensity: &RealField,
    replay_intensity: &RealField,
    params: &SsimParams,
) -> Result<SsimReport> {
    let (c1, c2) = (params.c1(), params.c2());
    let mut report = SsimReport {
        global_ssim: 0.0,
        params: *params,
        windows_x: 0,
        windows_y: 0,
        mu_t: vec![],
        mu_r: vec![],
        var_t: vec![],
        var_r: vec![],
        cov_tr: vec![],
        s1: vec![],
        s2: vec![],
    };
    let mut total = 0.0;
    let (nx, ny) = for_each_window(target_intensity, replay_intensity, params, |s| {
        let (a, b) = (s.s1(c1), s.s2(c2));
        total += a * b;
        report.mu_t.push(s.mu_t);
        report.mu_r.push(s.mu_r);
        report.var_t.push(s.var_t);
        report.var_r.push(s.var_r);
        report.cov_tr.push(s.cov_tr);
        report.s1.push(a);
        report.s2.push(b);
    })?;
    report.windows_x = nx;
    report.windows_y = ny;
    report.global_ssim = total / (nx * ny) as f64;
    Ok(report)
}

/// Global SSIM only, without keeping the per-window arrays.
pub fn ssim_index(
    target_intensity: &RealField,
    replay_intensity: &RealField,
    params: &SsimParams,
) -> Result<f64> {
    let (c1, c2) = (params.c1(), params.c2());
    let mut total = 0.0;
    let (nx, ny) = for_each_window(target_intensity, replay_intensity, params, |s| {
        total += s.s1(c1) * s.s2(c2);
    })?;
    Ok(total / (nx * ny) as f64)
}

/// Per-window population variance of an intensity image, e.g. the target
/// window variances used by [`ssim_model_full`].
pub fn window_variances(image: &RealField, params: &SsimParams) -> Result<Vec<f64>> {
    let mut out = vec![];
    for_each_window(image, image, params, |s| out.push(s.var_t))?;
    Ok(out)
}

/// Per-window quantities that can be histogrammed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SsimComponent {
    MuT2,
    MuR2,
    VarT,
    VarR,
    CovTR,
    S1,
    S2,
}

impl SsimComponent {
    pub const ALL: [SsimComponent; 7] = [
        SsimComponent::MuT2,
        SsimComponent::MuR2,
        SsimComponent::VarT,
        SsimComponent::VarR,
        SsimComponent::CovTR,
        SsimComponent::S1,
        SsimComponent::S2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SsimComponent::MuT2 => "mu_t2",
            SsimComponent::MuR2 => "mu_r2",
            SsimComponent::VarT => "var_t",
            SsimComponent::VarR => "var_r",
            SsimComponent::CovTR => "cov_tr",
            SsimComponent::S1 => "s1",
            SsimComponent::S2 => "s2",
        }
    }
}

impl std::str::FromStr for SsimComponent {
    type Err = OsprError;

    fn from_str(s: &str) -> Result<Self> {
        SsimComponent::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| OsprError::UnknownComponent(s.to_string()))
    }
}

/// Histogram of one component over all windows of one or more reports.
/// Values outside `[lo, hi]` land in the end bins, so the total count is
/// always the number of windows seen. `mean` and `variance` are exact
/// (computed from the values, not the bins).
#[derive(Debug, Clone, PartialEq)]
pub struct SsimComponentHistogram {
    pub component: SsimComponent,
    pub n_subframes: usize,
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub mean: f64,
    pub variance: f64,
}

impl SsimComponentHistogram {
    pub fn mass(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        let width = (self.hi - self.lo) / self.counts.len() as f64;
        self.lo + (i as f64 + 0.5) * width
    }
}

/// Streaming builder for [`SsimComponentHistogram`] with a fixed range, so
/// histograms for different `N` share bins.
#[derive(Debug, Clone)]
pub struct HistogramBuilder {
    component: SsimComponent,
    n_subframes: usize,
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
    sum: f64,
    sum_sq: f64,
}

impl HistogramBuilder {
    pub fn new(component: SsimComponent, n_subframes: usize, lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(OsprError::InvalidArgument(format!(
                "histogram needs bins >= 1 and lo < hi, got {bins} bins on [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            component,
            n_subframes,
            lo,
            hi,
            counts: vec![0; bins],
            sum: 0.0,
            sum_sq: 0.0,
        })
    }

    pub fn add_values(&mut self, values: &[f64]) {
        let bins = self.counts.len();
        let scale = bins as f64 / (self.hi - self.lo);
        for &v in values {
            let i = ((v - self.lo) * scale).floor();
            let i = if i < 0.0 { 0 } else { (i as usize).min(bins - 1) };
            self.counts[i] += 1;
            self.sum += v;
            self.sum_sq += v * v;
        }
    }

    /// Add another builder's counts and sums; both must share bins.
    pub fn merge(&mut self, other: &HistogramBuilder) -> Result<()> {
        if other.component != self.component
            || other.lo != self.lo
            || other.hi != self.hi
            || other.counts.len() != self.counts.len()
        {
            return Err(OsprError::InvalidArgument(
                "cannot merge histograms with different components or bins".into(),
            ));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        Ok(())
    }

    pub fn add_report(&mut self, report: &SsimReport) {
        self.add_values(&report.component(self.component));
    }

    pub fn finish(self) -> SsimComponentHistogram {
        let n = self.counts.iter().sum::<u64>() as f64;
        let (mean, variance) = if n > 0.0 {
            let mean = self.sum / n;
            (mean, (self.sum_sq / n - mean * mean).max(0.0))
        } else {
            (f64::NAN, f64::NAN)
        };
        SsimComponentHistogram {
            component: self.component,
            n_subframes: self.n_subframes,
            lo: self.lo,
            hi: self.hi,
            counts: self.counts,
            mean,
            variance,
        }
    }
}

/// Histogram of `component` across every window of every report, with the
/// range taken from the data.
pub fn ssim_component_histograms(
    reports: &[SsimReport],
    component: SsimComponent,
    n_subframes: usize,
    bins: usize,
) -> Result<SsimComponentHistogram> {
    if reports.is_empty() {
        return Err(OsprError::InvalidArgument("no SSIM reports to histogram".into()));
    }
    let values: Vec<Vec<f64>> = reports.iter().map(|r| r.component(component)).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.iter().flatten() {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    if !(hi > lo) {
        // a single value: centre a unit-width range on it
        let c = if lo.is_finite() { lo } else { 0.0 };
        lo = c - 0.5;
        hi = c + 0.5;
    }
    let mut builder = HistogramBuilder::new(component, n_subframes, lo, hi, bins)?;
    for v in &values {
        builder.add_values(v);
    }
    Ok(builder.finish())
}

/// Approximate SSIM after `n` subframes with `s1 = 1`:
/// `c2 / (2 sigma_T^2 + sigma2 / n + c2)`.
pub fn ssim_model(var_t: f64, sigma2_eps_prime: f64, n: usize, params: &SsimParams) -> Result<f64> {
    if n == 0 {
        return Err(OsprError::InvalidArgument("n must be >= 1".into()));
    }
    let c2 = params.c2();
    Ok(c2 / (2.0 * var_t + sigma2_eps_prime / n as f64 + c2))
}

/// [`ssim_model`] averaged over the target's per-window variances.
pub fn ssim_model_full(
    window_var_t: &[f64],
    sigma2_eps_prime: f64,
    n: usize,
    params: &SsimParams,
) -> Result<f64> {
    if window_var_t.is_empty() {
        return Err(OsprError::InvalidArgument("no windows".into()));
    }
    let mut total = 0.0;
    for &v in window_var_t {
        total += ssim_model(v, sigma2_eps_prime, n, params)?;
    }
    Ok(total / window_var_t.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field(w: usize, h: usize, v: Vec<f64>) -> RealField {
        RealField::from_vec(w, h, v).unwrap()
    }

    fn random(w: usize, h: usize, seed: u64) -> RealField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        field(w, h, (0..w * h).map(|_| 3.0 * rng.random::<f64>()).collect())
    }

    #[test]
    fn mse_hand_values() {
        let t = field(2, 2, vec![0.0, 1.0, 1.0, 0.0]);
        let r = field(2, 2, vec![1.0; 4]);
        assert_eq!(mse(&t, &r).unwrap(), 0.5);
        assert_eq!(mse(&t, &t).unwrap(), 0.0);
        let shifted = t.map(|v| v + 0.25);
        assert!((mse(&t, &shifted).unwrap() - 0.0625).abs() < 1e-15);
        assert!(mse(&t, &field(4, 1, vec![0.0; 4])).is_err());
    }

    // Direct double-loop evaluation with centred variances.
    fn oracle(t: &RealField, r: &RealField, p: &SsimParams) -> (f64, Vec<f64>, Vec<f64>) {
        let (w, h) = t.dims();
        let n = (p.window * p.window) as f64;
        let (mut s1s, mut s2s) = (vec![], vec![]);
        let mut y0 = 0;
        while y0 + p.window <= h {
            let mut x0 = 0;
            while x0 + p.window <= w {
                let px = |f: &RealField| {
                    let mut v = vec![];
                    for y in y0..y0 + p.window {
                        for x in x0..x0 + p.window {
                            v.push(f.get(x, y));
                        }
                    }
                    v
                };
                let (a, b) = (px(t), px(r));
                let ma = a.iter().sum::<f64>() / n;
                let mb = b.iter().sum::<f64>() / n;
                let va = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n;
                let vb = b.iter().map(|x| (x - mb).powi(2)).sum::<f64>() / n;
                let cab = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
                s1s.push((2.0 * ma * mb + p.c1()) / (ma * ma + mb * mb + p.c1()));
                s2s.push((2.0 * cab + p.c2()) / (va + vb + p.c2()));
                x0 += p.stride;
            }
            y0 += p.stride;
        }
        let g = s1s.iter().zip(&s2s).map(|(a, b)| a * b).sum::<f64>() / s1s.len() as f64;
        (g, s1s, s2s)
    }

    #[test]
    fn matches_direct_oracle() {
        for (w, h, stride, l) in [(16, 16, 1, 3.0), (32, 32, 1, 256.0), (20, 13, 3, 1.0)] {
            let t = random(w, h, 1);
            let r = random(w, h, 2);
            let p = SsimParams {
                stride,
                ..SsimParams::with_range(l)
            };
            let rep = ssim(&t, &r, &p).unwrap();
            let (g, s1, s2) = oracle(&t, &r, &p);
            assert_eq!(rep.window_count(), s1.len());
            assert!((rep.global_ssim - g).abs() < 1e-12);
            for i in 0..s1.len() {
                assert!((rep.s1[i] - s1[i]).abs() < 1e-12);
                assert!((rep.s2[i] - s2[i]).abs() < 1e-12);
            }
            assert_eq!(ssim_index(&t, &r, &p).unwrap(), rep.global_ssim);
        }
    }

    #[test]
    fn identical_images_score_one() {
        let t = random(24, 24, 5);
        let rep = ssim(&t, &t, &SsimParams::with_range(1.0)).unwrap();
        assert_eq!(rep.global_ssim, 1.0);
        assert!(rep.s1.iter().chain(&rep.s2).all(|&v| v == 1.0));
    }

    #[test]
    fn zero_replay_of_constant_target() {
        let t = field(10, 10, vec![2.0; 100]);
        let z = field(10, 10, vec![0.0; 100]);
        let p = SsimParams::with_range(4.0);
        let rep = ssim(&t, &z, &p).unwrap();
        let expect = p.c1() / (4.0 + p.c1());
        assert!(rep.s1.iter().all(|&s| (s - expect).abs() < 1e-15));
        assert_eq!(rep.window_count(), 9);
    }

    #[test]
    fn small_image_rejected() {
        let t = random(7, 20, 1);
        assert!(matches!(
            ssim(&t, &t, &SsimParams::default()),
            Err(OsprError::ImageSmallerThanWindow { .. })
        ));
    }

    #[test]
    fn dynamic_range_conventions() {
        let t = field(2, 2, vec![0.5, 1.0, 2.0, 4.5]);
        assert_eq!(DynamicRange::IntensitySpan.resolve(&t), 4.0);
        assert_eq!(DynamicRange::default().resolve(&t), 256.0);
        assert_eq!(DynamicRange::IntensitySpan.resolve(&field(2, 2, vec![1.0; 4])), 1.0);
        assert_eq!("span".parse::<DynamicRange>().unwrap(), DynamicRange::IntensitySpan);
        assert_eq!("256".parse::<DynamicRange>().unwrap(), DynamicRange::TargetStates(256.0));
        assert!("-1".parse::<DynamicRange>().is_err());
        let p = SsimParams::with_range(256.0);
        assert!((p.c1() - 6.5536).abs() < 1e-12);
        assert!((p.c2() - 58.9824).abs() < 1e-12);
    }

    #[test]
    fn model_properties() {
        let p = SsimParams::with_range(1.0);
        assert_eq!(ssim_model(0.0, 0.0, 1, &p).unwrap(), 1.0);
        assert!(ssim_model(0.1, 0.8, 0, &p).is_err());
        let mut prev = 0.0;
        for n in 1..50 {
            let v = ssim_model(0.1, 0.8, n, &p).unwrap();
            assert!(v > prev && v < 1.0);
            prev = v;
        }
        let limit = p.c2() / (0.2 + p.c2());
        assert!((ssim_model(0.1, 0.8, 1 << 40, &p).unwrap() - limit).abs() < 1e-9);
        assert_eq!(
            ssim_model_full(&[0.0; 9], 0.8, 3, &p).unwrap(),
            ssim_model(0.0, 0.8, 3, &p).unwrap()
        );
        assert_eq!(
            ssim_model_full(&[0.3], 0.8, 3, &p).unwrap(),
            ssim_model(0.3, 0.8, 3, &p).unwrap()
        );
    }

    #[test]
    fn histogram_mass_and_unknown_component() {
        let t = random(16, 16, 3);
        let r = random(16, 16, 4);
        let rep = ssim(&t, &r, &SsimParams::with_range(3.0)).unwrap();
        for c in SsimComponent::ALL {
            let h = ssim_component_histograms(std::slice::from_ref(&rep), c, 1, 20).unwrap();
            assert_eq!(h.mass(), rep.window_count() as u64);
            assert_eq!(c.name().parse::<SsimComponent>().unwrap(), c);
        }
        assert!(matches!(
            "sigma".parse::<SsimComponent>(),
            Err(OsprError::UnknownComponent(_))
        ));
        assert!(ssim_component_histograms(&[], SsimComponent::S1, 1, 4).is_err());
    }

    #[test]
    fn builder_clamps_out_of_range() {
        let mut b = HistogramBuilder::new(SsimComponent::S1, 1, 0.0, 1.0, 4).unwrap();
        b.add_values(&[-3.0, 0.1, 0.6, 0.99, 1.0, 7.0]);
        let h = b.finish();
        assert_eq!(h.counts, vec![2, 0, 1, 3]);
        assert!((h.bin_center(0) - 0.125).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn ssim_is_symmetric_and_bounded(seed_a in 0u64..1000, seed_b in 0u64..1000, l in 0.01f64..300.0) {
            let a = random(12, 10, seed_a);
            let b = random(12, 10, seed_b);
            let p = SsimParams::with_range(l);
            let ab = ssim_index(&a, &b, &p).unwrap();
            let ba = ssim_index(&b, &a, &p).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!((-1.0..=1.0).contains(&ab));
            prop_assert_eq!(ssim_index(&a, &a, &p).unwrap(), 1.0);
        }

        #[test]
        fn mse_non_negative(seed_a in 0u64..1000, seed_b in 0u64..1000) {
            let a = random(6, 5, seed_a);
            let b = random(6, 5, seed_b);
            let m = mse(&a, &b).unwrap();
            prop_assert!(m >= 0.0);
            prop_assert_eq!(m == 0.0, a == b);
        }
    }
}
