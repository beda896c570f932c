//! Error model by quadrature: floor (squared bias) and single-subframe
//! variance for a few amplitude distributions, next to a quick measurement.
//!
//!     cargo run --release --example rician_bias

use ospr::noise::{
    estimate_noise_params, replay_statistics, rician_pdf, AmplitudeDistribution,
    BINARY_PHASE_NOISE_FRACTION,
};
use ospr::ospr::{QuantizationScheme, RngSpec};
use ospr::{induce_symmetry, TargetImage};

fn main() -> ospr::Result<()> {
    println!("Rician density, location 1, scale 0.5:");
    for x in [0.25, 0.5, 1.0, 1.5, 2.5] {
        println!("  p({x}) = {:.6}", rician_pdf(x, 1.0, 0.5)?);
    }

    let sym = induce_symmetry(&TargetImage::uniform(128, 128, 3)?);
    let cases = [
        ("uniform", AmplitudeDistribution::uniform_unit(), TargetImage::uniform(128, 128, 3)?),
        ("constant", AmplitudeDistribution::constant_unit(), TargetImage::constant(128, 128)?),
        ("uniform, symmetrised", AmplitudeDistribution::from_target(&sym), sym),
    ];
    println!("\n{:<22} {:>9} {:>9} {:>12}", "distribution", "floor", "sigma2", "measured s2");
    for (name, dist, target) in cases {
        let s = replay_statistics(&dist, BINARY_PHASE_NOISE_FRACTION)?;
        let m = estimate_noise_params(&target, QuantizationScheme::BinaryPhase, 20, &RngSpec::new(5, 0))?;
        println!(
            "{name:<22} {:>9.4} {:>9.4} {:>12.4}",
            s.floor, s.sigma2_eps_prime, m.sigma2_eps_prime
        );
    }
    Ok(())
}
