//! Complex and real 2-D fields, the unitary DFT pair and energy accounting.
//!
//! Fields are stored row-major: the sample at column `x` and row `y` lives at
//! `y * width + x`. Both transforms carry the `1/sqrt(width * height)` factor,
//! so the forward and inverse DFT are each unitary and energy is conserved.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{OsprError, Result};

/// Energies below this are treated as zero when forming relative mismatches.
pub const ENERGY_FLOOR: f64 = 1e-300;

/// Index of the partner of `(x, y)` under a 180 degree rotation about the
/// origin, with indices wrapped so that row and column zero map to themselves.
#[inline]
pub fn rotated_index(x: usize, y: usize, width: usize, height: usize) -> usize {
    let xr = (width - x) % width;
    let yr = (height - y) % height;
    yr * width + xr
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width < 2 || height < 2 {
        return Err(OsprError::UnsupportedSize { width, height });
    }
    Ok(())
}

/// A 2-D array of complex amplitudes. Carries holograms and replay fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    width: usize,
    height: usize,
    data: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: vec![Complex64::new(0.0, 0.0); width * height],
        })
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<Complex64>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(OsprError::InvalidArgument(format!(
                "field of {width}x{height} needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> Complex64 {
        self.data[y * self.width + x]
    }

    /// Total energy `sum |F|^2`.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Squared modulus of every sample.
    pub fn intensity(&self) -> RealField {
        RealField {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|c| c.norm_sqr()).collect(),
        }
    }

    pub fn scale(&self, k: Complex64) -> ComplexField {
        ComplexField {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|c| c * k).collect(),
        }
    }
}

/// A 2-D array of real values: target amplitudes, intensities, sign maps.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl RealField {
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(OsprError::InvalidArgument(format!(
                "real field of {width}x{height} cannot hold {} samples",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::from_vec(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealField {
        RealField {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn to_complex(&self) -> Result<ComplexField> {
        ComplexField::from_vec(
            self.width,
            self.height,
            self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    /// True when every sample equals its 180 degree rotated partner exactly.
    pub fn is_rotationally_symmetric(&self) -> bool {
        (0..self.height).all(|y| {
            (0..self.width).all(|x| {
                self.data[y * self.width + x]
                    == self.data[rotated_index(x, y, self.width, self.height)]
            })
        })
    }
}

/// Energies of two fields and their relative mismatch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub diffraction_energy: f64,
    pub replay_energy: f64,
    pub relative_mismatch: f64,
}

impl std::fmt::Display for EnergyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "diffraction energy {:.12e}, replay energy {:.12e}, relative mismatch {:.3e}",
            self.diffraction_energy, self.replay_energy, self.relative_mismatch
        )
    }
}

/// Compare the energies of a diffraction-plane field and a replay field.
///
/// The mismatch is taken relative to the larger of the two energies, so it is
/// symmetric in its arguments and bounded by one.
pub fn check_parseval(diffraction: &ComplexField, replay: &ComplexField) -> Result<EnergyReport> {
    if diffraction.dims() != replay.dims() {
        return Err(OsprError::DimensionMismatch {
            left: diffraction.dims(),
            right: replay.dims(),
        });
    }
    let diffraction_energy = diffraction.energy();
    let replay_energy = replay.energy();
    let relative_mismatch = (diffraction_energy - replay_energy).abs()
        / diffraction_energy.max(replay_energy).max(ENERGY_FLOOR);
    Ok(EnergyReport {
        diffraction_energy,
        replay_energy,
        relative_mismatch,
    })
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// A planned unitary 2-D DFT for one field size, with reusable scratch space.
///
/// Rows are transformed in place; columns are transformed after a transpose
/// into an internal buffer.
pub struct Dft2d {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    transposed: Vec<Complex64>,
    scratch: Vec<Complex64>,
    norm: f64,
}

impl Dft2d {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        let (row_fwd, row_inv, col_fwd, col_inv) = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            (
                p.plan_fft(width, FftDirection::Forward),
                p.plan_fft(width, FftDirection::Inverse),
                p.plan_fft(height, FftDirection::Forward),
                p.plan_fft(height, FftDirection::Inverse),
            )
        });
        let scratch_len = [&row_fwd, &row_inv, &col_fwd, &col_inv]
            .iter()
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Ok(Self {
            width,
            height,
            row_fwd,
            row_inv,
            col_fwd,
            col_inv,
            transposed: vec![Complex64::new(0.0, 0.0); width * height],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            norm: 1.0 / ((width * height) as f64).sqrt(),
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn forward_in_place(&mut self, data: &mut [Complex64]) {
        self.process(data, FftDirection::Forward);
    }

    pub fn inverse_in_place(&mut self, data: &mut [Complex64]) {
        self.process(data, FftDirection::Inverse);
    }

    fn process(&mut self, data: &mut [Complex64], direction: FftDirection) {
        assert_eq!(data.len(), self.width * self.height, "buffer size");
        let (rows, cols) = match direction {
            FftDirection::Forward => (&self.row_fwd, &self.col_fwd),
            FftDirection::Inverse => (&self.row_inv, &self.col_inv),
        };
        rows.process_with_scratch(data, &mut self.scratch);
        transpose(data, &mut self.transposed, self.width, self.height);
        cols.process_with_scratch(&mut self.transposed, &mut self.scratch);
        transpose(&self.transposed, data, self.height, self.width);
        let norm = self.norm;
        for c in data.iter_mut() {
            *c *= norm;
        }
    }
}

/// Transpose a `width` x `height` row-major block into `dst` (`height` x `width`).
fn transpose(src: &[Complex64], dst: &mut [Complex64], width: usize, height: usize) {
    const BLOCK: usize = 32;
    for yb in (0..height).step_by(BLOCK) {
        for xb in (0..width).step_by(BLOCK) {
            for y in yb..(yb + BLOCK).min(height) {
                for x in xb..(xb + BLOCK).min(width) {
                    dst[x * height + y] = src[y * width + x];
                }
            }
        }
    }
}

/// Unitary forward DFT with the `1/sqrt(width * height)` factor.
pub fn dft_forward(field: &ComplexField) -> Result<ComplexField> {
    let mut out = field.clone();
    Dft2d::new(field.width, field.height)?.forward_in_place(&mut out.data);
    Ok(out)
}

/// Unitary inverse DFT; `dft_inverse(dft_forward(f)) == f` up to rounding.
pub fn dft_inverse(field: &ComplexField) -> Result<ComplexField> {
    let mut out = field.clone();
    Dft2d::new(field.width, field.height)?.inverse_in_place(&mut out.data);
    Ok(out)
}
