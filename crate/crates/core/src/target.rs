//! Target images: loading, energy normalisation, builtin amplitude
//! distributions and induced 180 degree rotational symmetry.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{OsprError, Result};
use crate::field::{rotated_index, RealField};
use crate::image_io::{read_gray8, Gray8};

/// How loaded amplitudes are scaled after mapping pixel values onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnergyPolicy {
    /// Scale so that `sum T^2 = width * height`.
    #[default]
    UnitMeanSquare,
    /// Keep `pixel / 255`.
    Raw,
}

/// Non-negative target amplitudes `T` plus a flag recording induced symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetImage {
    amplitudes: RealField,
    symmetric: bool,
}

impl TargetImage {
    pub fn new(amplitudes: RealField) -> Result<Self> {
        if amplitudes.width() < 2 || amplitudes.height() < 2 {
            return Err(OsprError::UnsupportedSize {
                width: amplitudes.width(),
                height: amplitudes.height(),
            });
        }
        if let Some(bad) = amplitudes.data().iter().find(|a| !(**a >= 0.0) || !a.is_finite()) {
            return Err(OsprError::Domain(format!(
                "target amplitudes must be finite and non-negative, found {bad}"
            )));
        }
        Ok(Self {
            amplitudes,
            symmetric: false,
        })
    }

    /// Map 8-bit pixels to `[0, 1]` and apply `policy`.
    pub fn from_gray8(image: &Gray8, policy: EnergyPolicy) -> Result<Self> {
        if image.pixels.iter().all(|&p| p == 0) {
            return Err(OsprError::ZeroImage);
        }
        let data = image.pixels.iter().map(|&p| p as f64 / 255.0).collect();
        let t = Self::new(RealField::from_vec(image.width, image.height, data)?)?;
        Ok(t.normalized(policy))
    }

    /// Constant amplitude everywhere, unit mean square.
    pub fn constant(width: usize, height: usize) -> Result<Self> {
        Self::new(RealField::filled(width, height, 1.0)?)
    }

    /// Independent uniform amplitudes on `[0, A_max]`, scaled to unit mean
    /// square (so `A_max` is close to `sqrt(3)`).
    pub fn uniform(width: usize, height: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX);
        let data = (0..width * height).map(|_| rng.random::<f64>()).collect();
        let t = Self::new(RealField::from_vec(width, height, data)?)?;
        if t.energy() == 0.0 {
            return Err(OsprError::ZeroImage);
        }
        Ok(t.normalized(EnergyPolicy::UnitMeanSquare))
    }

    pub fn width(&self) -> usize {
        self.amplitudes.width()
    }

    pub fn height(&self) -> usize {
        self.amplitudes.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.amplitudes.dims()
    }

    pub fn amplitudes(&self) -> &RealField {
        &self.amplitudes
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `sum T^2`.
    pub fn energy(&self) -> f64 {
        self.amplitudes.data().iter().map(|a| a * a).sum()
    }

    /// Target intensity `T * conj(T) = T^2`.
    pub fn intensity(&self) -> RealField {
        self.amplitudes.map(|a| a * a)
    }

    pub fn normalized(mut self, policy: EnergyPolicy) -> Self {
        if policy == EnergyPolicy::UnitMeanSquare {
            let energy = self.energy();
            if energy > 0.0 {
                let k = (self.amplitudes.len() as f64 / energy).sqrt();
                self.amplitudes.data_mut().iter_mut().for_each(|a| *a *= k);
            }
        }
        self
    }
}

/// Load an 8-bit grayscale PGM (P5) or PNG as a target.
pub fn load_target(path: &Path, policy: EnergyPolicy) -> Result<TargetImage> {
    let image = read_gray8(path)?;
    TargetImage::from_gray8(&image, policy)
}

/// Average every pixel with its 180 degree rotated partner, then restore the
/// original energy. The result is exactly rotationally symmetric.
pub fn induce_symmetry(target: &TargetImage) -> TargetImage {
    let (w, h) = target.dims();
    let src = target.amplitudes.data();
    let mut data = Vec::with_capacity(src.len());
    for y in 0..h {
        for x in 0..w {
            data.push((src[y * w + x] + src[rotated_index(x, y, w, h)]) / 2.0);
        }
    }
    let before = target.energy();
    let after: f64 = data.iter().map(|a| a * a).sum();
    if after > 0.0 && before != after {
        let k = (before / after).sqrt();
        data.iter_mut().for_each(|a| *a *= k);
    }
    TargetImage {
        amplitudes: RealField::from_vec(w, h, data).expect("same dimensions"),
        symmetric: true,
    }
}
