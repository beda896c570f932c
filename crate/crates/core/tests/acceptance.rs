//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! non-zero if any criterion fails.
//!
//! The image rows of criterion 2 need 8-bit grayscale Mandrill and Peppers
//! files (PGM or PNG, e.g. from the USC-SIPI image database). Point
//! `OSPR_MANDRILL` and `OSPR_PEPPERS` at them; without both the criterion
//! is skipped.

use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ospr::harness::{
    cmd_converge, run_campaign, table1_row, CampaignSpec, ExperimentConfig, HistogramPlan,
    Table1Row, TargetSource,
};
use ospr::metrics::{ssim, ssim_model_full, window_variances, SsimComponent, SsimParams};
use ospr::noise::{rician_mass, rician_pdf, AmplitudeDistribution};
use ospr::ospr::{run_ospr, QuantizationScheme, RngSpec};
use ospr::{dft_forward, dft_inverse, induce_symmetry, load_target, ComplexField, EnergyPolicy, RealField, TargetImage};

const SIZE: usize = 512;
const RUNS: usize = 100;
const SEED: u64 = 1;
const SWEEP: [usize; 5] = [1, 2, 4, 8, 16];

struct Outcome {
    pass: Option<bool>,
    detail: String,
}

fn pass_if(ok: bool, detail: String) -> Outcome {
    Outcome {
        pass: Some(ok),
        detail,
    }
}

fn within(value: f64, expected: f64, tol: f64) -> bool {
    (value - expected).abs() <= tol
}

fn config() -> ExperimentConfig {
    ExperimentConfig {
        size: SIZE,
        runs: RUNS,
        seed: SEED,
        sweep: SWEEP.to_vec(),
        ..ExperimentConfig::default()
    }
}

struct Rows {
    uniform: Table1Row,
    constant: Table1Row,
}

fn builtin_rows() -> Rows {
    let cfg = config();
    let uniform = table1_row(
        &cfg,
        "uniform",
        &TargetImage::uniform(SIZE, SIZE, SEED).unwrap(),
        &AmplitudeDistribution::uniform_unit(),
        RngSpec::new(SEED, 1),
    )
    .unwrap();
    let constant = table1_row(
        &cfg,
        "constant",
        &TargetImage::constant(SIZE, SIZE).unwrap(),
        &AmplitudeDistribution::constant_unit(),
        RngSpec::new(SEED, 2),
    )
    .unwrap();
    Rows { uniform, constant }
}

fn criterion_1(rows: &Rows) -> Outcome {
    let u = &rows.uniform;
    let c = &rows.constant;
    let ok = within(u.measured_floor, 0.452, 0.01)
        && within(u.measured_sigma2, 0.797, 0.01)
        && within(u.simulated_floor, 0.455, 0.01)
        && within(u.simulated_sigma2, 0.794, 0.01)
        && c.measured_floor <= 0.005
        && within(c.measured_sigma2, 0.799, 0.01);
    pass_if(
        ok,
        format!(
            "uniform measured ({:.4}, {:.4}) simulated ({:.4}, {:.4}); constant measured ({:.4}, {:.4})",
            u.measured_floor,
            u.measured_sigma2,
            u.simulated_floor,
            u.simulated_sigma2,
            c.measured_floor,
            c.measured_sigma2
        ),
    )
}

fn image_rows() -> Option<Vec<(Table1Row, [f64; 4])>> {
    let mandrill = PathBuf::from(std::env::var_os("OSPR_MANDRILL")?);
    let peppers = PathBuf::from(std::env::var_os("OSPR_PEPPERS")?);
    let cfg = ExperimentConfig {
        symmetrize: true,
        ..config()
    };
    let mut out = vec![];
    for (i, (name, path, expected)) in [
        ("mandrill", mandrill, [0.068, 0.884, 0.067, 0.883]),
        ("peppers", peppers, [0.069, 0.883, 0.066, 0.884]),
    ]
    .into_iter()
    .enumerate()
    {
        let t = induce_symmetry(&load_target(&path, EnergyPolicy::UnitMeanSquare).ok()?);
        let d = AmplitudeDistribution::from_target(&t);
        let row = table1_row(&cfg, name, &t, &d, RngSpec::new(SEED, i as u64 + 3)).ok()?;
        out.push((row, expected));
    }
    Some(out)
}

fn criterion_2(images: &Option<Vec<(Table1Row, [f64; 4])>>) -> Outcome {
    let Some(images) = images else {
        return Outcome {
            pass: None,
            detail: "OSPR_MANDRILL / OSPR_PEPPERS not set".into(),
        };
    };
    let mut ok = true;
    let mut detail = vec![];
    for (r, e) in images {
        ok &= within(r.measured_floor, e[0], 0.01)
            && within(r.measured_sigma2, e[1], 0.01)
            && within(r.simulated_floor, e[2], 0.01)
            && within(r.simulated_sigma2, e[3], 0.01);
        detail.push(format!(
            "{} measured ({:.4}, {:.4}) simulated ({:.4}, {:.4})",
            r.distribution, r.measured_floor, r.measured_sigma2, r.simulated_floor, r.simulated_sigma2
        ));
    }
    pass_if(ok, detail.join("; "))
}

fn criterion_3(rows: &Rows, images: &Option<Vec<(Table1Row, [f64; 4])>>) -> Outcome {
    let mut all: Vec<&Table1Row> = vec![&rows.uniform, &rows.constant];
    if let Some(images) = images {
        all.extend(images.iter().map(|(r, _)| r));
    }
    let mut ok = true;
    let mut detail = vec![];
    for r in all.into_iter().filter(|r| r.measured_floor > 0.01) {
        let eb = ((r.simulated_floor - r.measured_floor) / r.measured_floor).abs();
        let es = ((r.simulated_sigma2 - r.measured_sigma2) / r.measured_sigma2).abs();
        ok &= eb <= 0.02 && es <= 0.02;
        detail.push(format!("{} bias {:.2}% sigma2 {:.2}%", r.distribution, 100.0 * eb, 100.0 * es));
    }
    pass_if(ok, detail.join("; "))
}

fn criterion_5(rows: &Rows) -> Outcome {
    let (u, c) = (&rows.uniform.fit, &rows.constant.fit);
    let ok = u.r_squared > 0.99 && c.r_squared > 0.99 && u.a > 0.0;
    pass_if(
        ok,
        format!(
            "uniform r^2 {:.6} A {:.4}; constant r^2 {:.6} A {:.5}",
            u.r_squared, u.a, c.r_squared, c.a
        ),
    )
}

// Criteria 4 and 6 share one uniform-target campaign.
fn criteria_4_and_6(rows: &Rows) -> (Outcome, Outcome) {
    let target = TargetImage::uniform(SIZE, SIZE, SEED).unwrap();
    let ti = target.intensity();
    let params = SsimParams::default();
    let spec = CampaignSpec {
        target: &target,
        scheme: QuantizationScheme::BinaryPhase,
        sweep: &SWEEP,
        runs: RUNS,
        rng: RngSpec::new(SEED, 1),
        ssim: Some(params),
        pixel_variance: true,
        histograms: vec![],
    };
    let c = run_campaign(&spec, |_| Ok(())).unwrap();

    let v1 = c.rows[0].pixel_variance;
    let mut ok4 = true;
    let mut d4 = vec![];
    for r in &c.rows {
        let ratio = r.pixel_variance * r.n_subframes as f64 / v1;
        ok4 &= (ratio - 1.0).abs() <= 0.10;
        d4.push(format!("N={} {:.4}", r.n_subframes, ratio));
    }
    let c4 = pass_if(ok4, format!("N * var(N) / var(1): {}", d4.join(", ")));

    let se = |i: usize| c.rows[i].ssim_std / (RUNS as f64).sqrt();
    let monotone = (1..c.rows.len()).all(|i| {
        let slack = 2.0 * (se(i - 1).powi(2) + se(i).powi(2)).sqrt();
        c.rows[i].ssim_mean >= c.rows[i - 1].ssim_mean - slack
    });
    let asymptote = c.ssim_fit().unwrap().a;
    let var_t = window_variances(&ti, &params).unwrap();
    let sigma2 = rows.uniform.measured_sigma2;
    let mut worst: f64 = 0.0;
    for r in &c.rows {
        let model = ssim_model_full(&var_t, sigma2, r.n_subframes, &params).unwrap();
        worst = worst.max((model - r.ssim_mean).abs());
    }
    let c6 = pass_if(
        monotone && asymptote < 1.0 && worst <= 0.05,
        format!(
            "monotone {monotone}, fitted asymptote {asymptote:.5}, max |model_full - measured| {worst:.4} (L = {})",
            params.dynamic_range
        ),
    );
    (c4, c6)
}

fn criterion_7() -> Outcome {
    let target = TargetImage::constant(SIZE, SIZE).unwrap();
    let ti = target.intensity();
    let params = SsimParams::default();
    let rng = RngSpec::new(SEED, 5);
    // fixed ranges from run 0 at both ends of the sweep
    let mut reports = vec![];
    for n in [1, 10] {
        let r = run_ospr(&target, n, QuantizationScheme::BinaryPhase, &rng.child(0)).unwrap();
        reports.push(ssim(&ti, &r.mean_intensity().unwrap(), &params).unwrap());
    }
    let plans = SsimComponent::ALL
        .iter()
        .map(|&component| {
            let vals: Vec<f64> = reports.iter().flat_map(|r| r.component(component)).collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
            HistogramPlan {
                component,
                lo: lo - pad,
                hi: hi + pad,
                bins: 64,
            }
        })
        .collect();
    let spec = CampaignSpec {
        target: &target,
        scheme: QuantizationScheme::BinaryPhase,
        sweep: &[1, 10],
        runs: RUNS,
        rng,
        ssim: Some(params),
        pixel_variance: false,
        histograms: plans,
    };
    let c = run_campaign(&spec, |_| Ok(())).unwrap();
    let h = |point: usize, comp: SsimComponent| {
        let k = SsimComponent::ALL.iter().position(|c| *c == comp).unwrap();
        &c.histograms[point][k]
    };
    let ratio = h(0, SsimComponent::VarR).mean / h(1, SsimComponent::VarR).mean;
    let scaling = (ratio / 10.0 - 1.0).abs() <= 0.10;
    let identical = [SsimComponent::MuT2, SsimComponent::VarT].iter().all(|&comp| {
        let (a, b) = (h(0, comp), h(1, comp));
        a.counts == b.counts
            && a.mean.to_bits() == b.mean.to_bits()
            && a.variance.to_bits() == b.variance.to_bits()
    });
    let dev = |point: usize, comp: SsimComponent| (1.0 - h(point, comp).mean).abs();
    let s2_dominant = (0..2).all(|p| dev(p, SsimComponent::S2) > dev(p, SsimComponent::S1));
    pass_if(
        scaling && identical && s2_dominant,
        format!(
            "constant target: var_R(1)/var_R(10) = {ratio:.3}; target histograms identical {identical}; \
             |1-s2| > |1-s1| at N=1 ({:.2e} vs {:.2e}) and N=10 ({:.2e} vs {:.2e})",
            dev(0, SsimComponent::S2),
            dev(0, SsimComponent::S1),
            dev(1, SsimComponent::S2),
            dev(1, SsimComponent::S1)
        ),
    )
}

fn random_field(w: usize, h: usize, seed: u64) -> ComplexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ComplexField::from_vec(
        w,
        h,
        (0..w * h)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect(),
    )
    .unwrap()
}

fn naive_dft(f: &ComplexField) -> ComplexField {
    let (w, h) = f.dims();
    let norm = 1.0 / ((w * h) as f64).sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); w * h];
    for v in 0..h {
        for u in 0..w {
            let mut s = Complex64::new(0.0, 0.0);
            for y in 0..h {
                for x in 0..w {
                    let ph = -2.0 * PI * ((u * x) as f64 / w as f64 + (v * y) as f64 / h as f64);
                    s += f.get(x, y) * Complex64::from_polar(1.0, ph);
                }
            }
            out[v * w + u] = s * norm;
        }
    }
    ComplexField::from_vec(w, h, out).unwrap()
}

fn max_diff(a: &ComplexField, b: &ComplexField) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn ssim_oracle(t: &RealField, r: &RealField, p: &SsimParams) -> f64 {
    let (w, h) = t.dims();
    let n = (p.window * p.window) as f64;
    let (mut total, mut count) = (0.0, 0.0);
    for y0 in 0..=h - p.window {
        for x0 in 0..=w - p.window {
            let mut a = vec![];
            let mut b = vec![];
            for y in y0..y0 + p.window {
                for x in x0..x0 + p.window {
                    a.push(t.get(x, y));
                    b.push(r.get(x, y));
                }
            }
            let ma = a.iter().sum::<f64>() / n;
            let mb = b.iter().sum::<f64>() / n;
            let va = a.iter().map(|v| (v - ma).powi(2)).sum::<f64>() / n;
            let vb = b.iter().map(|v| (v - mb).powi(2)).sum::<f64>() / n;
            let cv = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
            let s1 = (2.0 * ma * mb + p.c1()) / (ma * ma + mb * mb + p.c1());
            let s2 = (2.0 * cv + p.c2()) / (va + vb + p.c2());
            total += s1 * s2;
            count += 1.0;
        }
    }
    total / count
}

fn criterion_8() -> Outcome {
    let mut failures = vec![];
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };

    let f = random_field(12, 10, 1);
    let g = random_field(12, 10, 2);
    let ff = dft_forward(&f).unwrap();
    check("dft vs direct sum", max_diff(&ff, &naive_dft(&f)) < 1e-10);
    check("dft unitarity", (ff.energy() - f.energy()).abs() < 1e-10 * f.energy());
    check("dft round trip", max_diff(&dft_inverse(&ff).unwrap(), &f) < 1e-10);
    let k = Complex64::new(0.3, -1.7);
    let combo = ComplexField::from_vec(
        12,
        10,
        f.data().iter().zip(g.data()).map(|(a, b)| a * k + b).collect(),
    )
    .unwrap();
    let lin = ComplexField::from_vec(
        12,
        10,
        ff.data()
            .iter()
            .zip(dft_forward(&g).unwrap().data())
            .map(|(a, b)| a * k + b)
            .collect(),
    )
    .unwrap();
    check("dft linearity", max_diff(&dft_forward(&combo).unwrap(), &lin) < 1e-10);

    for (t, s2) in [(0.0, 0.5), (1.0, 0.5), (2.0, 0.1), (0.3, 2.0)] {
        check("rician normalisation", (rician_mass(t, s2).unwrap() - 1.0).abs() < 1e-6);
    }
    for x in [0.0f64, 0.2, 1.0, 3.0] {
        let rayleigh = x / 0.7 * (-x * x / 1.4).exp();
        check("rayleigh limit", (rician_pdf(x, 0.0, 0.7).unwrap() - rayleigh).abs() < 1e-10);
    }

    let target = TargetImage::uniform(64, 48, 3).unwrap();
    let replay = run_ospr(&target, 1, QuantizationScheme::BinaryPhase, &RngSpec::new(9, 9))
        .unwrap()
        .mean_intensity()
        .unwrap();
    let (w, h) = replay.dims();
    let sym = (0..h).all(|y| {
        (0..w).all(|x| (replay.get(x, y) - replay.get((w - x) % w, (h - y) % h)).abs() < 1e-9)
    });
    check("binary replay conjugate symmetry", sym);

    for (w, h, seed) in [(32, 32, 4), (17, 29, 5), (8, 8, 6)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut img = || {
            RealField::from_vec(w, h, (0..w * h).map(|_| 2.0 * rng.random::<f64>()).collect()).unwrap()
        };
        let (a, b) = (img(), img());
        for p in [SsimParams::default(), SsimParams::with_range(2.0)] {
            let got = ssim(&a, &b, &p).unwrap().global_ssim;
            check("ssim oracle", (got - ssim_oracle(&a, &b, &p)).abs() < 1e-12);
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let cfg = ExperimentConfig {
            target: TargetSource::Uniform,
            size: 32,
            runs: 4,
            seed: 11,
            sweep: vec![1, 2, 3],
            out: dir.path().join(sub),
            ..ExperimentConfig::default()
        };
        cmd_converge(&cfg).unwrap();
        ["converge.csv", "converge_runs.csv"].map(|f| std::fs::read(cfg.out.join(f)).unwrap())
    };
    check("determinism byte equality", run("a") == run("b"));

    pass_if(
        failures.is_empty(),
        if failures.is_empty() {
            "DFT, Rician, conjugate symmetry, SSIM oracle and determinism checks".into()
        } else {
            format!("failed: {}", failures.join(", "))
        },
    )
}

fn main() {
    // `cargo test -- --list` and filters are not meaningful here
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let rows = builtin_rows();
    let images = image_rows();
    let (c4, c6) = criteria_4_and_6(&rows);
    let outcomes = [
        ("Table 1 builtin rows", criterion_1(&rows)),
        ("Table 1 image rows", criterion_2(&images)),
        ("simulated vs measured within 2%", criterion_3(&rows, &images)),
        ("variance law sigma2/N within 10%", c4),
        ("convergence fit r^2 > 0.99, A > 0", criterion_5(&rows)),
        ("SSIM monotone, asymptote < 1, model within 0.05", c6),
        ("SSIM component dynamics", criterion_7()),
        ("property suites", criterion_8()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in outcomes.iter().enumerate() {
        let tag = match o.pass {
            Some(true) => "PASS",
            Some(false) => {
                failed += 1;
                "FAIL"
            }
            None => "SKIP",
        };
        println!("criterion {} [{tag}] {name}: {}", i + 1, o.detail);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
