//! One-step phase retrieval on a builtin or file target: the mean replay
//! intensity approaches the target as subframes are added.
//!
//!     cargo run --release --example ospr_replay -- [image.pgm|png]

use ospr::metrics::{mse, ssim_index, SsimParams};
use ospr::ospr::{QuantizationScheme, ReplayAccumulator, RngSpec, SubframeEngine};
use ospr::{induce_symmetry, load_target, EnergyPolicy, TargetImage};

fn main() -> ospr::Result<()> {
    let target = match std::env::args().nth(1) {
        Some(path) => induce_symmetry(&load_target(path.as_ref(), EnergyPolicy::UnitMeanSquare)?),
        None => induce_symmetry(&TargetImage::uniform(256, 256, 7)?),
    };
    let (w, h) = target.dims();
    let ti = target.intensity();
    let rng = RngSpec::new(2024, 0);
    let params = SsimParams::default();

    let mut engine = SubframeEngine::new(w, h)?;
    let mut acc = ReplayAccumulator::new(w, h);
    let mut done = 0;
    println!("{w}x{h} target, symmetric = {}", target.is_symmetric());
    for n in [1u64, 2, 4, 8, 16, 32] {
        engine.run_range(&target, done..n, QuantizationScheme::BinaryPhase, &rng, &mut acc)?;
        done = n;
        let replay = acc.mean_intensity()?;
        println!(
            "N = {n:>2}  MSE = {:.5}  SSIM = {:.5}",
            mse(&ti, &replay)?,
            ssim_index(&ti, &replay, &params)?
        );
    }
    Ok(())
}
