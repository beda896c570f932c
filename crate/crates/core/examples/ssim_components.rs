//! How the SSIM window statistics evolve with the subframe count, and the
//! approximate SSIM model against measurement.
//!
//!     cargo run --release --example ssim_components

use ospr::metrics::{ssim, ssim_model_full, window_variances, SsimComponent, SsimParams};
use ospr::noise::estimate_noise_params;
use ospr::ospr::{run_ospr, QuantizationScheme, RngSpec};
use ospr::TargetImage;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn main() -> ospr::Result<()> {
    let target = TargetImage::uniform(128, 128, 4)?;
    let ti = target.intensity();
    let params = SsimParams::default();
    let scheme = QuantizationScheme::BinaryPhase;
    let rng = RngSpec::new(8, 0);
    let sigma2 = estimate_noise_params(&target, scheme, 10, &rng)?.sigma2_eps_prime;
    let var_t = window_variances(&ti, &params)?;

    println!("L = {}, sigma2 = {sigma2:.4}", params.dynamic_range);
    for n in [1, 2, 5, 10, 20] {
        let replay = run_ospr(&target, n, scheme, &rng.child(1))?.mean_intensity()?;
        let report = ssim(&ti, &replay, &params)?;
        let parts: Vec<String> = SsimComponent::ALL
            .iter()
            .map(|&c| format!("{}={:.4}", c.name(), mean(&report.component(c))))
            .collect();
        println!(
            "N = {n:>2}  SSIM {:.5}  model {:.5}  {}",
            report.global_ssim,
            ssim_model_full(&var_t, sigma2, n, &params)?,
            parts.join(" ")
        );
    }
    Ok(())
}
