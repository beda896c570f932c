//! Measured against simulated error parameters for the builtin
//! distributions, at a reduced size so it finishes quickly.
//!
//!     cargo run --release --example table1 -- [size] [runs]

use ospr::harness::{table1_row, ExperimentConfig};
use ospr::noise::AmplitudeDistribution;
use ospr::ospr::RngSpec;
use ospr::TargetImage;

fn main() -> ospr::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<usize>().ok());
    let size = args.next().flatten().unwrap_or(256);
    let runs = args.next().flatten().unwrap_or(30);
    let cfg = ExperimentConfig {
        size,
        runs,
        seed: 1,
        sweep: vec![1, 2, 4, 8, 16],
        ..ExperimentConfig::default()
    };
    let rows = [
        ("uniform", TargetImage::uniform(size, size, 1)?, AmplitudeDistribution::uniform_unit()),
        ("constant", TargetImage::constant(size, size)?, AmplitudeDistribution::constant_unit()),
    ];
    println!("{:<10} {:>10} {:>10} {:>10} {:>10}", "", "bias^2 m", "sigma2 m", "bias^2 s", "sigma2 s");
    for (i, (name, target, dist)) in rows.iter().enumerate() {
        let r = table1_row(&cfg, name, target, dist, RngSpec::new(1, i as u64 + 1))?;
        println!(
            "{name:<10} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            r.measured_floor, r.measured_sigma2, r.simulated_floor, r.simulated_sigma2
        );
    }
    Ok(())
}
