//! Monte-Carlo MSE sweep and the `A + B / N` fit.
//!
//!     cargo run --release --example mse_convergence -- [runs]

use ospr::harness::{run_campaign, CampaignSpec};
use ospr::noise::{replay_statistics, AmplitudeDistribution, BINARY_PHASE_NOISE_FRACTION};
use ospr::ospr::{QuantizationScheme, RngSpec};
use ospr::TargetImage;

fn main() -> ospr::Result<()> {
    let runs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let target = TargetImage::uniform(256, 256, 1)?;
    let sweep = [1, 2, 3, 4, 6, 8, 12, 16];
    let spec = CampaignSpec {
        target: &target,
        scheme: QuantizationScheme::BinaryPhase,
        sweep: &sweep,
        runs,
        rng: RngSpec::new(1, 1),
        ssim: None,
        pixel_variance: false,
        histograms: vec![],
    };
    let campaign = run_campaign(&spec, |_| Ok(()))?;
    let fit = campaign.mse_fit()?;
    for row in &campaign.rows {
        println!(
            "N = {:>2}  MSE = {:.5} +/- {:.5}  fit {:.5}",
            row.n_subframes,
            row.mse_mean,
            2.0 * row.mse_std,
            fit.predict(row.n_subframes)
        );
    }
    let model = replay_statistics(&AmplitudeDistribution::uniform_unit(), BINARY_PHASE_NOISE_FRACTION)?;
    println!("fit   A = {:.4}  B = {:.4}  r^2 = {:.6}", fit.a, fit.b, fit.r_squared);
    println!("model A = {:.4}  B = {:.4}", model.floor, model.sigma2_eps_prime);
    Ok(())
}
