//! Globally adaptive Gauss-Kronrod (7/15 point) quadrature on finite intervals.

use crate::error::{OsprError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and subdivision cap for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-10,
            rel: 1e-10,
            max_intervals: 500,
        }
    }
}

impl Tolerance {
    pub fn absolute(abs: f64) -> Self {
        Self {
            abs,
            rel: 0.0,
            ..Self::default()
        }
    }
}

/// Integral estimate with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment<const K: usize> {
    a: f64,
    b: f64,
    value: [f64; K],
    error: f64,
}

fn kronrod<const K: usize>(f: &mut impl FnMut(f64) -> [f64; K], a: f64, b: f64) -> Segment<K> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc.map(|v| v * WGK[7]);
    let mut gauss = fc.map(|v| v * WG[3]);
    for j in 0..7 {
        let dx = half * XGK[j];
        let lo = f(center - dx);
        let hi = f(center + dx);
        for k in 0..K {
            let pair = lo[k] + hi[k];
            kron[k] += WGK[j] * pair;
            if j % 2 == 1 {
                gauss[k] += WG[j / 2] * pair;
            }
        }
    }
    let mut error = 0.0f64;
    for k in 0..K {
        error = error.max(((kron[k] - gauss[k]) * half).abs());
    }
    Segment {
        a,
        b,
        value: kron.map(|v| v * half),
        error,
    }
}

/// Integrate `f` over `[a, b]`, bisecting the interval with the largest error
/// until the summed error meets `max(tol.abs, tol.rel * |integral|)`.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    let [value] = integrate_many(|x| [f(x)], a, b, tol)?;
    Ok(value)
}

/// Integrate `K` functions sharing one set of nodes. The interval error is
/// the largest component error; the stopping rule is applied per component.
pub fn integrate_many<const K: usize>(
    mut f: impl FnMut(f64) -> [f64; K],
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<[Estimate; K]> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(OsprError::Domain(format!(
            "integration bounds must be finite, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok([Estimate {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        }; K]);
    }
    let mut segments = vec![kronrod(&mut f, a, b)];
    let mut evaluations = 15;
    loop {
        let mut value = [0.0; K];
        for s in &segments {
            for k in 0..K {
                value[k] += s.value[k];
            }
        }
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if value.iter().any(|v| !v.is_finite()) {
            return Err(OsprError::NonConvergence(format!(
                "integrand is not finite on [{a}, {b}]"
            )));
        }
        let smallest = value.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        if error <= tol.abs.max(tol.rel * smallest) {
            return Ok(value.map(|value| Estimate {
                value,
                error,
                evaluations,
            }));
        }
        if segments.len() >= tol.max_intervals {
            return Err(OsprError::NonConvergence(format!(
                "error {error:.3e} above tolerance after {} intervals on [{a}, {b}]",
                segments.len()
            )));
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one segment");
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        segments.push(kronrod(&mut f, s.a, mid));
        segments.push(kronrod(&mut f, mid, s.b));
        evaluations += 30;
    }
}
