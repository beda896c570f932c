//! One-step phase retrieval: random target phase, back-propagation to the
//! hologram plane, quantisation, and time-averaged replay intensity.
//!
//! Random phases come from ChaCha8 streams. A [`RngSpec`] picks the stream and
//! each subframe jumps to its own block of the keystream, so a run produces
//! the same phases whatever thread or order it executes in.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{OsprError, Result};
use crate::field::{dft_forward, dft_inverse, ComplexField, Dft2d, RealField};
use crate::target::TargetImage;

/// How the diffraction-plane field is reduced to what the modulator can show.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuantizationScheme {
    /// Two phase levels {0, pi}: every pixel becomes `+c` or `-c`.
    #[default]
    BinaryPhase,
    /// Unit-modulus phase-only pixels scaled by `c`.
    PhaseOnlyContinuous,
    /// Pass-through; the replay then reconstructs the randomised target exactly.
    None,
}

impl QuantizationScheme {
    pub fn name(self) -> &'static str {
        match self {
            QuantizationScheme::BinaryPhase => "binary-phase",
            QuantizationScheme::PhaseOnlyContinuous => "phase-only-continuous",
            QuantizationScheme::None => "none",
        }
    }
}

impl std::str::FromStr for QuantizationScheme {
    type Err = OsprError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary-phase" | "binary" => Ok(QuantizationScheme::BinaryPhase),
            "phase-only-continuous" | "phase-only" => Ok(QuantizationScheme::PhaseOnlyContinuous),
            "none" => Ok(QuantizationScheme::None),
            other => Err(OsprError::InvalidArgument(format!(
                "unknown quantisation scheme `{other}`"
            ))),
        }
    }
}

/// Seed and stream selecting one reproducible sequence of phase draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RngSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    /// An independent stream derived from this one, e.g. one per Monte-Carlo run.
    pub fn child(&self, index: u64) -> RngSpec {
        RngSpec {
            master_seed: self.master_seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(1))),
        }
    }

    /// Generator positioned at the start of `subframe`'s block of draws. Each
    /// pixel consumes one `u64` (two keystream words).
    pub fn subframe_rng(&self, subframe: u64, pixels: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng.set_word_pos(subframe as u128 * 2 * pixels as u128);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One quantised hologram `H'_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct HologramFrame {
    pub field: ComplexField,
    pub scheme: QuantizationScheme,
    /// Stream and subframe index the frame was generated from, when known.
    pub origin: Option<(RngSpec, u64)>,
}

/// Running sum of subframe replay intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayAccumulator {
    width: usize,
    height: usize,
    intensity_sum: Vec<f64>,
    subframes: usize,
}

impl ReplayAccumulator {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            intensity_sum: vec![0.0; width * height],
            subframes: 0,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn subframes(&self) -> usize {
        self.subframes
    }

    pub fn intensity_sum(&self) -> &[f64] {
        &self.intensity_sum
    }

    /// Add the replay intensity `|F{H}|^2` of one frame.
    pub fn accumulate(&mut self, frame: &HologramFrame) -> Result<()> {
        if frame.field.dims() != self.dims() {
            return Err(OsprError::DimensionMismatch {
                left: self.dims(),
                right: frame.field.dims(),
            });
        }
        let replay = dft_forward(&frame.field)?;
        self.add_replay(replay.data());
        Ok(())
    }

    fn add_replay(&mut self, replay: &[Complex64]) {
        for (s, r) in self.intensity_sum.iter_mut().zip(replay) {
            *s += r.norm_sqr();
        }
        self.subframes += 1;
    }

    /// Combine two accumulators of the same size. Associative and commutative
    /// up to floating-point rounding.
    pub fn merge(&mut self, other: &ReplayAccumulator) -> Result<()> {
        if other.dims() != self.dims() {
            return Err(OsprError::DimensionMismatch {
                left: self.dims(),
                right: other.dims(),
            });
        }
        for (a, b) in self.intensity_sum.iter_mut().zip(&other.intensity_sum) {
            *a += b;
        }
        self.subframes += other.subframes;
        Ok(())
    }

    /// Perceived intensity `(1/N) sum_n |F{H_n}|^2`.
    pub fn mean_intensity(&self) -> Result<RealField> {
        if self.subframes == 0 {
            return Err(OsprError::InvalidArgument(
                "mean intensity of an empty accumulator".into(),
            ));
        }
        let inv = 1.0 / self.subframes as f64;
        RealField::from_vec(
            self.width,
            self.height,
            self.intensity_sum.iter().map(|s| s * inv).collect(),
        )
    }
}

fn randomize_into(amplitudes: &[f64], rng: &mut ChaCha8Rng, out: &mut [Complex64]) {
    for (o, &a) in out.iter_mut().zip(amplitudes) {
        let phase = TAU * rng.random::<f64>();
        *o = Complex64::from_polar(a, phase);
    }
}

/// Give every target pixel an independent uniform phase on `[0, 2*pi)`,
/// drawing from subframe 0 of `rng`.
pub fn randomize_phase(target: &TargetImage, rng: &RngSpec) -> ComplexField {
    let (w, h) = target.dims();
    let mut data = vec![Complex64::new(0.0, 0.0); w * h];
    let mut gen = rng.subframe_rng(0, w * h);
    randomize_into(target.amplitudes().data(), &mut gen, &mut data);
    ComplexField::from_vec(w, h, data).expect("target dimensions are valid")
}

/// Carry a replay-plane field back to the hologram plane.
pub fn backpropagate(replay: &ComplexField) -> Result<ComplexField> {
    dft_inverse(replay)
}

fn quantize_in_place(data: &mut [Complex64], scheme: QuantizationScheme) {
    if scheme == QuantizationScheme::None {
        return;
    }
    let energy: f64 = data.iter().map(|c| c.norm_sqr()).sum();
    let c = (energy / data.len() as f64).sqrt();
    match scheme {
        QuantizationScheme::BinaryPhase => {
            for p in data.iter_mut() {
                // Re == 0 (either sign of zero) goes to +c
                let v = if p.re < 0.0 { -c } else { c };
                *p = Complex64::new(v, 0.0);
            }
        }
        QuantizationScheme::PhaseOnlyContinuous => {
            for p in data.iter_mut() {
                let norm = p.norm();
                *p = if norm > 0.0 {
                    *p * (c / norm)
                } else {
                    Complex64::new(c, 0.0)
                };
            }
        }
        QuantizationScheme::None => unreachable!(),
    }
}

/// Quantise a hologram. Binary phase maps each pixel to `c * sign(Re)` with
/// `c` the RMS of the input, so total energy is preserved.
pub fn quantize(h: &ComplexField, scheme: QuantizationScheme) -> HologramFrame {
    let mut field = h.clone();
    quantize_in_place(field.data_mut(), scheme);
    HologramFrame {
        field,
        scheme,
        origin: None,
    }
}

/// Free-function form of [`ReplayAccumulator::accumulate`].
pub fn accumulate_subframe(
    mut acc: ReplayAccumulator,
    frame: &HologramFrame,
) -> Result<ReplayAccumulator> {
    acc.accumulate(frame)?;
    Ok(acc)
}

/// Reusable buffers for generating many subframes of one target size.
pub struct SubframeEngine {
    dft: Dft2d,
    buffer: Vec<Complex64>,
}

impl SubframeEngine {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        Ok(Self {
            dft: Dft2d::new(width, height)?,
            buffer: vec![Complex64::new(0.0, 0.0); width * height],
        })
    }

    /// Randomise, back-propagate and quantise one subframe; the quantised
    /// hologram is left in the internal buffer.
    fn hologram(
        &mut self,
        target: &TargetImage,
        scheme: QuantizationScheme,
        rng: &RngSpec,
        subframe: u64,
    ) -> Result<&[Complex64]> {
        if target.dims() != self.dft.dims() {
            return Err(OsprError::DimensionMismatch {
                left: self.dft.dims(),
                right: target.dims(),
            });
        }
        let mut gen = rng.subframe_rng(subframe, self.buffer.len());
        randomize_into(target.amplitudes().data(), &mut gen, &mut self.buffer);
        self.dft.inverse_in_place(&mut self.buffer);
        quantize_in_place(&mut self.buffer, scheme);
        Ok(&self.buffer)
    }

    pub fn frame(
        &mut self,
        target: &TargetImage,
        scheme: QuantizationScheme,
        rng: &RngSpec,
        subframe: u64,
    ) -> Result<HologramFrame> {
        let (w, h) = target.dims();
        let data = self.hologram(target, scheme, rng, subframe)?.to_vec();
        Ok(HologramFrame {
            field: ComplexField::from_vec(w, h, data)?,
            scheme,
            origin: Some((*rng, subframe)),
        })
    }

    /// Run subframes `0..n` and add their replay intensities to `acc`.
    pub fn run_into(
        &mut self,
        target: &TargetImage,
        n_subframes: usize,
        scheme: QuantizationScheme,
        rng: &RngSpec,
        acc: &mut ReplayAccumulator,
    ) -> Result<()> {
        self.run_range(target, 0..n_subframes as u64, scheme, rng, acc)
    }

    /// Run the subframes with indices in `subframes`. Extending an
    /// accumulator from `0..a` with `a..b` gives the same sum as `0..b`.
    pub fn run_range(
        &mut self,
        target: &TargetImage,
        subframes: std::ops::Range<u64>,
        scheme: QuantizationScheme,
        rng: &RngSpec,
        acc: &mut ReplayAccumulator,
    ) -> Result<()> {
        if acc.dims() != target.dims() {
            return Err(OsprError::DimensionMismatch {
                left: acc.dims(),
                right: target.dims(),
            });
        }
        for n in subframes {
            self.hologram(target, scheme, rng, n)?;
            self.dft.forward_in_place(&mut self.buffer);
            acc.add_replay(&self.buffer);
        }
        Ok(())
    }
}

/// Generate `n_subframes` holograms for `target` and accumulate their replay
/// intensities.
pub fn run_ospr(
    target: &TargetImage,
    n_subframes: usize,
    scheme: QuantizationScheme,
    rng: &RngSpec,
) -> Result<ReplayAccumulator> {
    if n_subframes == 0 {
        return Err(OsprError::InvalidArgument(
            "OSPR needs at least one subframe".into(),
        ));
    }
    let (w, h) = target.dims();
    let mut engine = SubframeEngine::new(w, h)?;
    let mut acc = ReplayAccumulator::new(w, h);
    engine.run_into(target, n_subframes, scheme, rng, &mut acc)?;
    Ok(acc)
}

/// The quantised holograms `H'_1..H'_N` themselves.
pub fn ospr_frames(
    target: &TargetImage,
    n_subframes: usize,
    scheme: QuantizationScheme,
    rng: &RngSpec,
) -> Result<Vec<HologramFrame>> {
    if n_subframes == 0 {
        return Err(OsprError::InvalidArgument(
            "OSPR needs at least one subframe".into(),
        ));
    }
    let (w, h) = target.dims();
    let mut engine = SubframeEngine::new(w, h)?;
    (0..n_subframes as u64)
        .map(|n| engine.frame(target, scheme, rng, n))
        .collect()
}
