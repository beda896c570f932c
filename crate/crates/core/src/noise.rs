//! Statistical error model for time-averaged OSPR replay intensities.
//!
//! A single subframe's replay intensity `I = T^2 + eps'` has per-pixel noise
//! of variance `sigma2_eps_prime`; averaging `N` independent subframes shrinks
//! that variance to `sigma2_eps_prime / N` but leaves a floor, because the
//! mean of `|R|^2` is not `T^2`. The model here predicts both numbers by
//! quadrature over the target amplitude distribution:
//!
//! * the replay amplitude at a pixel is a deterministic signal plus circular
//!   Gaussian noise, so its intensity follows the Rician law carried over to
//!   intensity (a non-central chi-square with two degrees of freedom);
//! * a binary-phase hologram is real, so the signal at `(u, v)` mixes the
//!   randomly phased target at `(u, v)` with the conjugate of the one at the
//!   rotated pixel. Their relative phase is uniform, which adds an outer
//!   integral over that phase;
//! * quantisation keeps a fraction `1 - f` of the energy as signal and
//!   spreads `f` as noise. For sign quantisation of a Gaussian field
//!   `f = 1 - 2/pi`.
//!
//! The floor is `E_T[(E[I | T] - T^2)^2]` and the single-subframe variance is
//! `E_T[Var(I | T)]`. The MSE after `N` subframes is `floor + sigma2 / N`.

use std::f64::consts::{FRAC_1_PI, PI};

use rayon::prelude::*;

use crate::error::{OsprError, Result};
use crate::field::{rotated_index, RealField};
use crate::montecarlo::ordered_map_fold;
use crate::ospr::{run_ospr, QuantizationScheme, RngSpec};
use crate::quadrature::{integrate, integrate_many, Tolerance};
use crate::special::bessel_i0e;
use crate::target::TargetImage;

/// Fraction of hologram energy that sign quantisation turns into
/// uncorrelated noise when the input is a circular Gaussian field.
pub const BINARY_PHASE_NOISE_FRACTION: f64 = 1.0 - 2.0 / PI;

/// Number of histogram bins used for empirical amplitude distributions.
pub const HISTOGRAM_BINS: usize = 256;

/// Intensity noise parameters for `n_subframes` averaged subframes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub mu_eps_prime: f64,
    pub sigma2_eps_prime: f64,
    pub n_subframes: usize,
}

impl NoiseModel {
    pub fn new(mu_eps_prime: f64, sigma2_eps_prime: f64, n_subframes: usize) -> Result<Self> {
        if n_subframes == 0 {
            return Err(OsprError::InvalidArgument("n_subframes must be >= 1".into()));
        }
        if !(sigma2_eps_prime >= 0.0) {
            return Err(OsprError::Domain(format!(
                "noise variance must be non-negative, got {sigma2_eps_prime}"
            )));
        }
        Ok(Self {
            mu_eps_prime,
            sigma2_eps_prime,
            n_subframes,
        })
    }

    /// `sigma2_eps = sigma2_eps_prime / N`.
    pub fn effective_variance(&self) -> f64 {
        self.sigma2_eps_prime / self.n_subframes as f64
    }

    pub fn with_subframes(self, n_subframes: usize) -> Result<Self> {
        Self::new(self.mu_eps_prime, self.sigma2_eps_prime, n_subframes)
    }
}

/// How a pixel's target amplitude relates to that of its rotated partner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pairing {
    /// Partner drawn independently from the same distribution.
    #[default]
    Independent,
    /// Partner equal to the pixel (rotationally symmetric target).
    Symmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AmplitudeKind {
    Uniform { max: f64 },
    Constant { value: f64 },
    /// Histogram with `values[i]` the representative amplitude of bin
    /// `[edges[i], edges[i + 1])`.
    Empirical {
        edges: Vec<f64>,
        values: Vec<f64>,
        probabilities: Vec<f64>,
    },
}

/// Distribution of target amplitudes `|T|`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeDistribution {
    kind: AmplitudeKind,
    pairing: Pairing,
}

// Carries the first error out of a quadrature callback, which cannot return one.
struct ErrorSlot(Option<OsprError>);

impl ErrorSlot {
    fn take<const K: usize>(&mut self, r: Result<[f64; K]>) -> [f64; K] {
        match r {
            Ok(v) => v,
            Err(e) => {
                self.0.get_or_insert(e);
                [f64::NAN; K]
            }
        }
    }

    fn finish<T>(self, r: Result<T>) -> Result<T> {
        match self.0 {
            Some(e) => Err(e),
            None => r,
        }
    }
}

const OUTER_TOL: Tolerance = Tolerance {
    abs: 1e-7,
    rel: 1e-9,
    max_intervals: 200,
};

impl AmplitudeDistribution {
    /// Uniform on `[0, sqrt(3)]`: unit mean square.
    pub fn uniform_unit() -> Self {
        Self::uniform(3f64.sqrt()).expect("positive bound")
    }

    pub fn uniform(max: f64) -> Result<Self> {
        if !(max > 0.0 && max.is_finite()) {
            return Err(OsprError::Domain(format!("uniform bound must be positive, got {max}")));
        }
        Ok(Self {
            kind: AmplitudeKind::Uniform { max },
            pairing: Pairing::Independent,
        })
    }

    /// Every amplitude equal to one.
    pub fn constant_unit() -> Self {
        Self {
            kind: AmplitudeKind::Constant { value: 1.0 },
            pairing: Pairing::Symmetric,
        }
    }

    /// Histogram from bin edges and probabilities; bin midpoints represent each bin.
    pub fn empirical(edges: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if edges.len() != probabilities.len() + 1 || probabilities.is_empty() {
            return Err(OsprError::InvalidArgument(
                "histogram needs one more edge than bins".into(),
            ));
        }
        let values = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Self::from_histogram(edges, values, probabilities)
    }

    fn from_histogram(edges: Vec<f64>, values: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if edges.first().is_some_and(|&e| e < 0.0) || edges.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(OsprError::Domain(
                "histogram edges must be non-negative and increasing".into(),
            ));
        }
        if probabilities.iter().any(|&p| !(p >= 0.0)) {
            return Err(OsprError::Domain("negative bin probability".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(OsprError::Domain(format!(
                "bin probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self {
            kind: AmplitudeKind::Empirical {
                edges,
                values,
                probabilities,
            },
            pairing: Pairing::Independent,
        })
    }

    /// 256-bin histogram of a target's amplitudes over `[0, max]`. Each bin is
    /// represented by the mean amplitude of the pixels that fall in it, which
    /// is exact for images with at most 256 distinct levels. Symmetric targets
    /// get [`Pairing::Symmetric`].
    pub fn from_target(target: &TargetImage) -> Self {
        let amps = target.amplitudes().data();
        let (_, max) = target.amplitudes().min_max();
        let max = if max > 0.0 { max } else { 1.0 };
        let mut sums = vec![0.0; HISTOGRAM_BINS];
        let mut counts = vec![0usize; HISTOGRAM_BINS];
        for &a in amps {
            let bin = ((a / max * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
            sums[bin] += a;
            counts[bin] += 1;
        }
        let edges: Vec<f64> = (0..=HISTOGRAM_BINS)
            .map(|i| max * i as f64 / HISTOGRAM_BINS as f64)
            .collect();
        let values = (0..HISTOGRAM_BINS)
            .map(|i| {
                if counts[i] > 0 {
                    sums[i] / counts[i] as f64
                } else {
                    0.5 * (edges[i] + edges[i + 1])
                }
            })
            .collect();
        let n = amps.len() as f64;
        let mut probabilities: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
        // absorb rounding so the probabilities sum to one
        let total: f64 = probabilities.iter().sum();
        probabilities.iter_mut().for_each(|p| *p /= total);
        let pairing = if target.is_symmetric() {
            Pairing::Symmetric
        } else {
            Pairing::Independent
        };
        Self::from_histogram(edges, values, probabilities)
            .expect("histogram of a valid target")
            .with_pairing(pairing)
    }

    pub fn with_pairing(mut self, pairing: Pairing) -> Self {
        self.pairing = pairing;
        self
    }

    pub fn kind(&self) -> &AmplitudeKind {
        &self.kind
    }

    pub fn pairing(&self) -> Pairing {
        self.pairing
    }

    /// `E[f(t)]` over the amplitude distribution.
    pub fn expect<const K: usize>(&self, mut f: impl FnMut(f64) -> Result<[f64; K]>) -> Result<[f64; K]> {
        match &self.kind {
            AmplitudeKind::Constant { value } => f(*value),
            AmplitudeKind::Empirical {
                values,
                probabilities,
                ..
            } => {
                let mut acc = [0.0; K];
                for (&v, &p) in values.iter().zip(probabilities) {
                    if p > 0.0 {
                        let r = f(v)?;
                        for k in 0..K {
                            acc[k] += p * r[k];
                        }
                    }
                }
                Ok(acc)
            }
            AmplitudeKind::Uniform { max } => {
                let mut slot = ErrorSlot(None);
                let r = integrate_many(|t| slot.take(f(t)), 0.0, *max, OUTER_TOL);
                let r = slot.finish(r)?;
                Ok(r.map(|e| e.value / max))
            }
        }
    }

    /// `E[f(t, t_partner)]` for a pixel and its rotated partner.
    pub fn expect_pair<const K: usize>(
        &self,
        f: impl Fn(f64, f64) -> Result<[f64; K]> + Sync,
    ) -> Result<[f64; K]> {
        match (self.pairing, &self.kind) {
            (Pairing::Symmetric, _) => self.expect(|t| f(t, t)),
            (
                Pairing::Independent,
                AmplitudeKind::Empirical {
                    values,
                    probabilities,
                    ..
                },
            ) => {
                // outer bins in parallel, summed in bin order
                let parts: Vec<[f64; K]> = values
                    .par_iter()
                    .zip(probabilities.par_iter())
                    .map(|(&t1, &p)| {
                        if p > 0.0 {
                            Ok(self.expect(|t2| f(t1, t2))?.map(|v| v * p))
                        } else {
                            Ok([0.0; K])
                        }
                    })
                    .collect::<Result<_>>()?;
                let mut acc = [0.0; K];
                for part in parts {
                    for k in 0..K {
                        acc[k] += part[k];
                    }
                }
                Ok(acc)
            }
            (Pairing::Independent, _) => self.expect(|t1| self.expect(|t2| f(t1, t2))),
        }
    }

    /// `E[t^2]`.
    pub fn mean_square(&self) -> Result<f64> {
        Ok(self.expect(|t| Ok([t * t]))?[0])
    }

    /// `E[t1^2 t2^2]` for a pixel and its partner.
    pub fn pair_power_product(&self) -> Result<f64> {
        Ok(self.expect_pair(|a, b| Ok([a * a * b * b]))?[0])
    }
}

/// Rician density with the variables as the intensity-domain model writes it:
/// `(x/s2) exp(-(x^2 + t^2) / (2 s2)) I0(x t / s2)`.
///
/// At `target = 0` this is the Rayleigh density; as `target / sqrt(sigma2)`
/// grows it approaches a Gaussian centred near `target`.
pub fn rician_pdf(observed: f64, target: f64, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(OsprError::Domain(format!("sigma2 must be positive, got {sigma2}")));
    }
    if !(observed >= 0.0) || !(target >= 0.0) {
        return Err(OsprError::Domain(format!(
            "intensities must be non-negative, got observed {observed}, target {target}"
        )));
    }
    let d = observed - target;
    Ok(observed / sigma2 * (-d * d / (2.0 * sigma2)).exp() * bessel_i0e(observed * target / sigma2))
}

/// Density of `y = |s + n|^2` for a fixed signal amplitude `|s|` and circular
/// complex Gaussian noise with `E|n|^2 = noise_power`. This is the Rician
/// amplitude density transformed to intensity.
pub fn rician_intensity_pdf(intensity: f64, signal_amplitude: f64, noise_power: f64) -> Result<f64> {
    if !(noise_power > 0.0) {
        return Err(OsprError::Domain(format!(
            "noise power must be positive, got {noise_power}"
        )));
    }
    if !(intensity >= 0.0) || !(signal_amplitude >= 0.0) {
        return Err(OsprError::Domain("intensity and amplitude must be non-negative".into()));
    }
    let r = intensity.sqrt();
    let d = r - signal_amplitude;
    Ok((-d * d / noise_power).exp() * bessel_i0e(2.0 * signal_amplitude * r / noise_power) / noise_power)
}

/// Which density the intensity-distribution integral uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RicianConvention {
    /// Replay amplitude is Rician; its square is integrated. Reproduces the
    /// measured floors and variances.
    #[default]
    AmplitudeToIntensity,
    /// [`rician_pdf`] applied directly to intensities, with the target
    /// intensity as the Rician location and `sigma2_eps_prime` as its scale.
    LiteralIntensity,
}

impl RicianConvention {
    pub fn name(self) -> &'static str {
        match self {
            RicianConvention::AmplitudeToIntensity => "amplitude-to-intensity",
            RicianConvention::LiteralIntensity => "literal-intensity",
        }
    }
}

impl std::str::FromStr for RicianConvention {
    type Err = OsprError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amplitude-to-intensity" | "amplitude" => Ok(RicianConvention::AmplitudeToIntensity),
            "literal-intensity" | "literal" => Ok(RicianConvention::LiteralIntensity),
            other => Err(OsprError::InvalidArgument(format!(
                "unknown Rician convention `{other}`"
            ))),
        }
    }
}

/// Model prediction of the error statistics of one target distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityStatistics {
    /// Asymptotic MSE `E[(E[I|T] - T^2)^2]`, i.e. the squared bias.
    pub floor: f64,
    /// Single-subframe per-pixel variance of the intensity error.
    pub sigma2_eps_prime: f64,
    /// Noise fraction `f` used (amplitude convention only; NaN otherwise).
    pub noise_fraction: f64,
    pub convention: RicianConvention,
}

impl IntensityStatistics {
    /// Root-mean-square bias, `sqrt(floor)`.
    pub fn bias(&self) -> f64 {
        self.floor.sqrt()
    }

    /// Predicted MSE after `n` subframes.
    pub fn mse(&self, n: usize) -> Result<f64> {
        mse_decomposition(self.bias(), self.sigma2_eps_prime, n)
    }
}

const INNER_TOL: Tolerance = Tolerance {
    abs: 1e-9,
    rel: 1e-10,
    max_intervals: 200,
};

const PHASE_TOL: Tolerance = Tolerance {
    abs: 1e-8,
    rel: 1e-10,
    max_intervals: 200,
};

/// `[E[y], E[y^2]]` under [`rician_intensity_pdf`], by quadrature over
/// `[lower, mean + 40 sd]`.
pub fn intensity_moments(signal_power: f64, noise_power: f64) -> Result<[f64; 2]> {
    if noise_power == 0.0 {
        return Ok([signal_power, signal_power * signal_power]);
    }
    let amp = signal_power.max(0.0).sqrt();
    let mean = signal_power + noise_power;
    let sd = (2.0 * signal_power * noise_power + noise_power * noise_power).sqrt();
    let lower = (amp - 12.0 * noise_power.sqrt()).max(0.0).powi(2);
    let upper = mean + 40.0 * sd;
    let mut slot = ErrorSlot(None);
    let r = integrate_many(
        |y| {
            slot.take(rician_intensity_pdf(y, amp, noise_power).map(|p| [y * p, y * y * p]))
        },
        lower,
        upper,
        INNER_TOL,
    );
    let [m1, m2] = slot.finish(r)?;
    Ok([m1.value, m2.value])
}

/// Conditional intensity moments at a pixel with target amplitude `t` whose
/// rotated partner has amplitude `partner`, averaged over their relative phase.
fn pair_moments(t: f64, partner: f64, noise_fraction: f64, mean_square: f64) -> Result<[f64; 2]> {
    let gain = 1.0 - noise_fraction;
    let noise_power = noise_fraction * mean_square;
    let base = gain * (t * t + partner * partner) / 2.0;
    let cross = gain * t * partner;
    if cross == 0.0 {
        return intensity_moments(base, noise_power);
    }
    let mut slot = ErrorSlot(None);
    let r = integrate_many(
        |alpha| slot.take(intensity_moments(base + cross * alpha.cos(), noise_power)),
        0.0,
        PI,
        PHASE_TOL,
    );
    let [m1, m2] = slot.finish(r)?;
    Ok([m1.value * FRAC_1_PI, m2.value * FRAC_1_PI])
}

/// Floor and single-subframe variance for a quantiser that turns a fraction
/// `noise_fraction` of the energy into noise.
pub fn replay_statistics(
    dist: &AmplitudeDistribution,
    noise_fraction: f64,
) -> Result<IntensityStatistics> {
    if !(0.0..=1.0).contains(&noise_fraction) {
        return Err(OsprError::Domain(format!(
            "noise fraction must lie in [0, 1], got {noise_fraction}"
        )));
    }
    let mean_square = dist.mean_square()?;
    let [floor, sigma2] = dist.expect_pair(|t, partner| {
        let [m1, m2] = pair_moments(t, partner, noise_fraction, mean_square)?;
        let bias = m1 - t * t;
        Ok([bias * bias, (m2 - m1 * m1).max(0.0)])
    })?;
    Ok(IntensityStatistics {
        floor,
        sigma2_eps_prime: sigma2,
        noise_fraction,
        convention: RicianConvention::AmplitudeToIntensity,
    })
}

/// Noise fraction of a quantiser driven by a circular Gaussian field:
/// `1 - 2/pi` for sign quantisation, `1 - pi/4` for phase-only, none for
/// pass-through.
pub fn scheme_noise_fraction(scheme: QuantizationScheme) -> f64 {
    match scheme {
        QuantizationScheme::BinaryPhase => BINARY_PHASE_NOISE_FRACTION,
        QuantizationScheme::PhaseOnlyContinuous => 1.0 - PI / 4.0,
        QuantizationScheme::None => 0.0,
    }
}

/// Model statistics for `scheme`. Binary phase holograms are real, so the
/// replay mixes each pixel with its rotated partner; the complex-valued
/// schemes have no twin and each pixel carries only its own signal.
pub fn scheme_statistics(
    dist: &AmplitudeDistribution,
    scheme: QuantizationScheme,
) -> Result<IntensityStatistics> {
    let f = scheme_noise_fraction(scheme);
    if scheme == QuantizationScheme::BinaryPhase {
        return replay_statistics(dist, f);
    }
    let mean_square = dist.mean_square()?;
    let [floor, sigma2] = dist.expect(|t| {
        let [m1, m2] = intensity_moments((1.0 - f) * t * t, f * mean_square)?;
        let bias = m1 - t * t;
        Ok([bias * bias, (m2 - m1 * m1).max(0.0)])
    })?;
    Ok(IntensityStatistics {
        floor,
        sigma2_eps_prime: sigma2,
        noise_fraction: f,
        convention: RicianConvention::AmplitudeToIntensity,
    })
}

/// Noise fraction at which the model's single-subframe variance equals
/// `sigma2_eps_prime`. The variance is quadratic in the fraction:
/// `a (1-f)^2 + 2 m^2 f (1-f) + m^2 f^2` with `m = E[t^2]` and
/// `a = E[t1^2 t2^2] / 2`.
pub fn noise_fraction_for_variance(dist: &AmplitudeDistribution, sigma2_eps_prime: f64) -> Result<f64> {
    let m2 = dist.mean_square()?.powi(2);
    let a = dist.pair_power_product()? / 2.0;
    // V(f) = a + (2 m2 - 2 a) f + (a - m2) f^2
    let (c0, c1, c2) = (a - sigma2_eps_prime, 2.0 * (m2 - a), a - m2);
    let variance = |f: f64| a + (2.0 * m2 - 2.0 * a) * f + (a - m2) * f * f;
    let roots: Vec<f64> = if c2.abs() < 1e-14 * m2.max(1e-300) {
        if c1 == 0.0 {
            vec![]
        } else {
            vec![-c0 / c1]
        }
    } else {
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc < 0.0 {
            vec![]
        } else {
            let s = disc.sqrt();
            vec![(-c1 - s) / (2.0 * c2), (-c1 + s) / (2.0 * c2)]
        }
    };
    roots
        .into_iter()
        .filter(|f| (-1e-12..=1.0 + 1e-12).contains(f))
        .map(|f| f.clamp(0.0, 1.0))
        .min_by(|x, y| x.total_cmp(y))
        .ok_or_else(|| {
            OsprError::Domain(format!(
                "sigma2 {sigma2_eps_prime} outside the model range [{:.6}, {:.6}]",
                variance(0.0).min(variance(1.0)),
                variance(0.0).max(variance(1.0))
            ))
        })
}

/// The intensity-distribution integral with [`rician_pdf`] taken literally:
/// `E_T[ integral p(x | T^2, sigma2) (x - T^2)^2 dx ]`. Reported as the floor;
/// `sigma2` is passed through.
pub fn literal_statistics(dist: &AmplitudeDistribution, sigma2: f64) -> Result<IntensityStatistics> {
    if !(sigma2 > 0.0) {
        return Err(OsprError::Domain(format!("sigma2 must be positive, got {sigma2}")));
    }
    let sd = sigma2.sqrt();
    let [floor] = dist.expect(|t| {
        let target = t * t;
        let upper = target + 40.0 * sd;
        let mut slot = ErrorSlot(None);
        let r = integrate_many(
            |x| slot.take(rician_pdf(x, target, sigma2).map(|p| [p * (x - target).powi(2)])),
            0.0,
            upper,
            INNER_TOL,
        );
        let [e] = slot.finish(r)?;
        Ok([e.value])
    })?;
    Ok(IntensityStatistics {
        floor,
        sigma2_eps_prime: sigma2,
        noise_fraction: f64::NAN,
        convention: RicianConvention::LiteralIntensity,
    })
}

/// Model statistics for a distribution whose measured single-subframe
/// variance is `sigma2_eps_prime`, under the chosen convention.
pub fn intensity_statistics(
    dist: &AmplitudeDistribution,
    sigma2_eps_prime: f64,
    convention: RicianConvention,
) -> Result<IntensityStatistics> {
    if !(sigma2_eps_prime > 0.0) {
        return Err(OsprError::Domain(format!(
            "sigma2 must be positive, got {sigma2_eps_prime}"
        )));
    }
    match convention {
        RicianConvention::AmplitudeToIntensity => {
            let f = noise_fraction_for_variance(dist, sigma2_eps_prime)?;
            replay_statistics(dist, f)
        }
        RicianConvention::LiteralIntensity => literal_statistics(dist, sigma2_eps_prime),
    }
}

/// Intensity-distribution bias `Bias_id` (root-mean-square, so the MSE floor
/// is its square) for a distribution with single-subframe variance
/// `sigma2_eps_prime`.
pub fn bias_id(dist: &AmplitudeDistribution, sigma2_eps_prime: f64) -> Result<f64> {
    Ok(intensity_statistics(dist, sigma2_eps_prime, RicianConvention::default())?.bias())
}

/// Conjugate-symmetry bias: the part of the target's antisymmetric intensity
/// (`T_u - T_rot(u)`) that the replay fails to carry, as
/// `sqrt(mean |(T_u - T_rot) - (R_u - R_rot)| / 2)`.
///
/// A binary-phase replay is rotation invariant, so for it this reduces to the
/// target's own asymmetry; it is zero for symmetric targets.
pub fn bias_cs(target_intensity: &RealField, replay_intensity: &RealField) -> Result<f64> {
    if target_intensity.dims() != replay_intensity.dims() {
        return Err(OsprError::DimensionMismatch {
            left: target_intensity.dims(),
            right: replay_intensity.dims(),
        });
    }
    let (w, h) = target_intensity.dims();
    let t = target_intensity.data();
    let r = replay_intensity.data();
    let mut sum = 0.0;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let j = rotated_index(x, y, w, h);
            sum += ((t[i] - t[j]) - (r[i] - r[j])).abs() / 2.0;
        }
    }
    Ok((sum / (w * h) as f64).sqrt())
}

/// Predicted MSE `bias^2 + sigma2 / n`.
pub fn mse_decomposition(bias: f64, sigma2_eps_prime: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(OsprError::InvalidArgument("n must be >= 1".into()));
    }
    Ok(bias * bias + sigma2_eps_prime / n as f64)
}

/// One point of a convergence sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceSample {
    pub n_subframes: usize,
    pub mean: f64,
    pub std_dev: f64,
}

impl ConvergenceSample {
    pub fn new(n_subframes: usize, mean: f64) -> Self {
        Self {
            n_subframes,
            mean,
            std_dev: 0.0,
        }
    }
}

/// Least-squares fit of `E(N) = a + b / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceFit {
    pub a: f64,
    pub b: f64,
    pub r_squared: f64,
    pub samples: Vec<ConvergenceSample>,
}

impl ConvergenceFit {
    pub fn predict(&self, n: usize) -> f64 {
        self.a + self.b / n as f64
    }
}

/// Unweighted linear regression of the sample means on `x = 1/N`.
pub fn fit_convergence(samples: &[ConvergenceSample]) -> Result<ConvergenceFit> {
    let mut distinct: Vec<usize> = samples.iter().map(|s| s.n_subframes).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.first() == Some(&0) {
        return Err(OsprError::InvalidArgument("N = 0 in convergence samples".into()));
    }
    if distinct.len() < 3 {
        return Err(OsprError::InsufficientSamples(format!(
            "need at least 3 distinct N values, got {}",
            distinct.len()
        )));
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| 1.0 / s.n_subframes as f64).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = samples.iter().map(|s| s.mean).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, s) in xs.iter().zip(samples) {
        let dx = x - x_mean;
        let dy = s.mean - y_mean;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let b = sxy / sxx;
    let a = y_mean - b * x_mean;
    let ss_res: f64 = xs
        .iter()
        .zip(samples)
        .map(|(x, s)| (s.mean - a - b * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(ConvergenceFit {
        a,
        b,
        r_squared,
        samples: samples.to_vec(),
    })
}

/// Measure the single-subframe error statistics of `target` from `runs`
/// independent OSPR runs: `mu` is the mean of `I - T^2` over all pixels and
/// runs, `sigma2` the per-pixel variance across runs averaged over pixels.
pub fn estimate_noise_params(
    target: &TargetImage,
    scheme: QuantizationScheme,
    runs: usize,
    rng: &RngSpec,
) -> Result<NoiseModel> {
    if runs < 2 {
        return Err(OsprError::InvalidArgument(format!(
            "need at least 2 runs to estimate a variance, got {runs}"
        )));
    }
    let target_intensity = target.intensity();
    let pixels = target_intensity.len();
    let (sum, sum_sq) = ordered_map_fold(
        runs,
        (vec![0.0; pixels], vec![0.0; pixels]),
        |run| run_ospr(target, 1, scheme, &rng.child(run as u64)),
        |(sum, sum_sq), _, acc| {
            for ((s, q), (i, t)) in sum
                .iter_mut()
                .zip(sum_sq.iter_mut())
                .zip(acc.intensity_sum().iter().zip(target_intensity.data()))
            {
                let e = i - t;
                *s += e;
                *q += e * e;
            }
        },
    )?;
    let r = runs as f64;
    let mut mu = 0.0;
    let mut var = 0.0;
    for (s, q) in sum.iter().zip(&sum_sq) {
        mu += s / r;
        var += ((q - s * s / r) / (r - 1.0)).max(0.0);
    }
    NoiseModel::new(mu / pixels as f64, var / pixels as f64, 1)
}

/// Helper for tests and diagnostics: `integral_0^inf p(x) dx` for the literal
/// Rician density, truncated far in the tail.
pub fn rician_mass(target: f64, sigma2: f64) -> Result<f64> {
    let upper = target + 40.0 * sigma2.sqrt();
    let mut slot = ErrorSlot(None);
    let r = integrate(
        |x| slot.take(rician_pdf(x, target, sigma2).map(|p| [p]))[0],
        0.0,
        upper,
        Tolerance::absolute(1e-12),
    );
    Ok(slot.finish(r)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rayleigh_limit() {
        for &s2 in &[0.1f64, 0.5, 2.0] {
            for &x in &[0.0f64, 0.1, 0.7, 1.5, 4.0] {
                let rayleigh = x / s2 * (-x * x / (2.0 * s2)).exp();
                assert!((rician_pdf(x, 0.0, s2).unwrap() - rayleigh).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rician_normalisation() {
        assert!((rician_mass(1.0, 0.5).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rician_domain_errors() {
        assert!(rician_pdf(1.0, 1.0, 0.0).is_err());
        assert!(rician_pdf(-1.0, 1.0, 1.0).is_err());
        assert!(rician_pdf(1.0, -1.0, 1.0).is_err());
        assert!(rician_intensity_pdf(1.0, 1.0, -1.0).is_err());
    }

    /// Closed forms of the non-central chi-square (2 dof):
    /// E[y] = s + P, E[y^2] = s^2 + 4 s P + 2 P^2.
    #[test]
    fn intensity_moments_match_closed_form() {
        for &(s, p) in &[(0.0, 0.36), (1.0, 0.36), (3.0, 0.1), (0.2, 1.0), (9.0, 0.01)] {
            let [m1, m2] = intensity_moments(s, p).unwrap();
            assert!((m1 - (s + p)).abs() < 1e-8, "m1 {m1} for ({s}, {p})");
            let e2 = s * s + 4.0 * s * p + 2.0 * p * p;
            assert!((m2 - e2).abs() < 1e-7, "m2 {m2} vs {e2}");
        }
    }

    #[test]
    fn mse_decomposition_values() {
        assert!((mse_decomposition(0.068, 0.884, 1).unwrap() - 0.888624).abs() < 1e-12);
        assert_eq!(mse_decomposition(0.0, 0.8, 4).unwrap(), 0.2);
        assert!((mse_decomposition(0.3, 0.8, 1_000_000_000).unwrap() - 0.09).abs() < 1e-8);
        assert!(mse_decomposition(0.1, 0.8, 0).is_err());
    }

    #[test]
    fn exact_fit_recovers_parameters() {
        let samples: Vec<_> = (1..=10)
            .map(|n| ConvergenceSample::new(n, 0.2 + 1.5 / n as f64))
            .collect();
        let fit = fit_convergence(&samples).unwrap();
        assert!((fit.a - 0.2).abs() < 1e-12);
        assert!((fit.b - 1.5).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_needs_three_distinct_n() {
        let samples = vec![
            ConvergenceSample::new(1, 1.0),
            ConvergenceSample::new(2, 0.5),
            ConvergenceSample::new(2, 0.6),
        ];
        assert!(matches!(
            fit_convergence(&samples),
            Err(OsprError::InsufficientSamples(_))
        ));
    }

    #[test]
    fn bias_cs_zero_for_symmetric_target() {
        let t = RealField::from_vec(3, 2, vec![1.0, 2.0, 2.0, 5.0, 3.0, 3.0]).unwrap();
        assert!(t.is_rotationally_symmetric());
        assert_eq!(bias_cs(&t, &t).unwrap(), 0.0);
    }

    /// Impulse at (1, 0) on a 4x4 grid against the symmetrised replay
    /// (0.5 at (1, 0) and (3, 0)), evaluated term by term.
    #[test]
    fn bias_cs_impulse_direct_sum() {
        let mut t = vec![0.0; 16];
        t[1] = 1.0;
        let mut r = vec![0.0; 16];
        r[1] = 0.5;
        r[3] = 0.5;
        let t = RealField::from_vec(4, 4, t).unwrap();
        let r = RealField::from_vec(4, 4, r).unwrap();
        let mut sum = 0.0;
        for v in 0..4 {
            for u in 0..4 {
                let (ur, vr) = ((4 - u) % 4, (4 - v) % 4);
                let dt = t.get(u, v) - t.get(ur, vr);
                let dr = r.get(u, v) - r.get(ur, vr);
                sum += (dt - dr).abs() / 2.0;
            }
        }
        let expected = (sum / 16.0f64).sqrt();
        assert!((expected - 0.25).abs() < 1e-15);
        assert!((bias_cs(&t, &r).unwrap() - expected).abs() < 1e-15);
        // a replay that carries the asymmetry removes the bias
        assert_eq!(bias_cs(&t, &t).unwrap(), 0.0);
    }

    #[test]
    fn bias_cs_dimension_mismatch() {
        let a = RealField::filled(4, 4, 1.0).unwrap();
        let b = RealField::filled(4, 2, 1.0).unwrap();
        assert!(bias_cs(&a, &b).is_err());
    }

    #[test]
    fn histogram_validation() {
        assert!(AmplitudeDistribution::empirical(vec![0.0, 1.0, 2.0], vec![0.5, 0.5]).is_ok());
        assert!(AmplitudeDistribution::empirical(vec![0.0, 1.0, 2.0], vec![0.5, 0.6]).is_err());
        assert!(AmplitudeDistribution::empirical(vec![0.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(AmplitudeDistribution::empirical(vec![-1.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn target_histogram_preserves_moments() {
        let t = TargetImage::uniform(64, 64, 3).unwrap();
        let d = AmplitudeDistribution::from_target(&t);
        let AmplitudeKind::Empirical { probabilities, .. } = d.kind() else {
            panic!("expected histogram")
        };
        assert!((probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // mean amplitude per bin keeps E[t] exact and E[t^2] within bin width
        assert!((d.mean_square().unwrap() - 1.0).abs() < 1e-4);
        assert_eq!(d.pairing(), Pairing::Independent);
    }

    #[test]
    fn uniform_moments_by_quadrature() {
        let d = AmplitudeDistribution::uniform_unit();
        assert!((d.mean_square().unwrap() - 1.0).abs() < 1e-12);
        // E[t^4] for U[0, sqrt 3] is 9/5
        assert!((d.expect(|t| Ok([t.powi(4)])).unwrap()[0] - 1.8).abs() < 1e-12);
        assert!((d.pair_power_product().unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn noise_fraction_inverts_variance() {
        let d = AmplitudeDistribution::uniform_unit();
        // independent pairing: V(f) = 1/2 + f - f^2/2
        let f = BINARY_PHASE_NOISE_FRACTION;
        let v = 0.5 + f - f * f / 2.0;
        assert!((noise_fraction_for_variance(&d, v).unwrap() - f).abs() < 1e-10);
        assert!(noise_fraction_for_variance(&d, 0.2).is_err());
        assert!(noise_fraction_for_variance(&d, 1.5).is_err());
    }

    /// The closed forms the quadrature must reproduce for an independent
    /// uniform target (E t^2 = 1, E t^4 = 9/5):
    /// floor = (9/5 - 1) [ (g/2)^2 + (1 - g/2)^2 ] with g = 1 - f,
    /// variance = 1/2 + f - f^2/2.
    #[test]
    fn replay_statistics_uniform_closed_form() {
        let d = AmplitudeDistribution::uniform_unit();
        let f = BINARY_PHASE_NOISE_FRACTION;
        let g = 1.0 - f;
        let floor = 0.8 * ((g / 2.0).powi(2) + (1.0 - g / 2.0).powi(2));
        let s = replay_statistics(&d, f).unwrap();
        assert!((s.floor - floor).abs() < 1e-6, "{} vs {floor}", s.floor);
        assert!((s.sigma2_eps_prime - (0.5 + f - f * f / 2.0)).abs() < 1e-6);
    }

    #[test]
    fn constant_distribution_has_no_floor() {
        let d = AmplitudeDistribution::constant_unit();
        let s = replay_statistics(&d, BINARY_PHASE_NOISE_FRACTION).unwrap();
        assert!(s.floor < 1e-12);
        let f = BINARY_PHASE_NOISE_FRACTION;
        let g = 1.0 - f;
        // symmetric pairing: g^2 E[t^4]/2 + 2 g f + f^2
        assert!((s.sigma2_eps_prime - (g * g / 2.0 + 2.0 * g * f + f * f)).abs() < 1e-8);
    }

    #[test]
    fn unquantised_scheme_is_exact() {
        let d = AmplitudeDistribution::uniform_unit();
        let s = scheme_statistics(&d, QuantizationScheme::None).unwrap();
        assert!(s.floor < 1e-14 && s.sigma2_eps_prime < 1e-14);
        let b = scheme_statistics(&d, QuantizationScheme::BinaryPhase).unwrap();
        assert_eq!(b, replay_statistics(&d, BINARY_PHASE_NOISE_FRACTION).unwrap());
    }

    #[test]
    fn noise_model_effective_variance() {
        let m = NoiseModel::new(0.0, 0.8, 4).unwrap();
        assert_eq!(m.effective_variance(), 0.2);
        assert!(NoiseModel::new(0.0, 0.8, 0).is_err());
        assert!(NoiseModel::new(0.0, -0.1, 1).is_err());
    }
}
