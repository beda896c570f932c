//! Unitary 2-D DFT: energy is conserved and the round trip is exact.
//!
//!     cargo run --release --example dft_parseval

use num_complex::Complex64;
use ospr::{check_parseval, dft_forward, dft_inverse, ComplexField};

fn main() -> ospr::Result<()> {
    let (w, h) = (256, 192);
    let field = ComplexField::from_fn(w, h, |x, y| {
        let r = ((x as f64 - 100.0).powi(2) + (y as f64 - 80.0).powi(2)).sqrt();
        Complex64::from_polar((-r / 30.0).exp(), 0.05 * x as f64)
    })?;

    let spectrum = dft_forward(&field)?;
    println!("{}", check_parseval(&field, &spectrum)?);

    let back = dft_inverse(&spectrum)?;
    let err = field
        .data()
        .iter()
        .zip(back.data())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!("max round-trip error {err:.3e}");

    // an impulse spreads evenly over every frequency
    let mut impulse = ComplexField::zeros(w, h)?;
    impulse.data_mut()[0] = Complex64::new(1.0, 0.0);
    let flat = dft_forward(&impulse)?;
    println!(
        "impulse spectrum |F| = {:.6} (expected {:.6})",
        flat.get(17, 33).norm(),
        1.0 / ((w * h) as f64).sqrt()
    );
    Ok(())
}
