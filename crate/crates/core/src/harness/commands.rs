//! The experiment commands. Each writes its files under `config.out` and
//! returns the numbers it wrote.

use std::path::{Path, PathBuf};

use crate::error::{OsprError, Result};
use crate::field::{check_parseval, dft_forward, EnergyReport};
use crate::image_io::{write_pgm, Gray8};
use crate::metrics::{
    ssim, ssim_model, ssim_model_full, window_variances, SsimComponent, SsimComponentHistogram,
    SsimParams,
};
use crate::noise::{
    bias_cs, estimate_noise_params, literal_statistics, scheme_statistics, AmplitudeDistribution,
    ConvergenceFit, IntensityStatistics, NoiseModel, RicianConvention,
};
use crate::ospr::{run_ospr, ReplayAccumulator, RngSpec, SubframeEngine};
use crate::target::{induce_symmetry, load_target, EnergyPolicy, TargetImage};

use super::campaign::{run_campaign, Campaign, CampaignSpec, HistogramPlan, SweepRow};
use super::config::{ExperimentConfig, TargetSource};
use super::output::{write_metadata, Cell, CsvSink};

pub const CONVERGE_HEADER: [&str; 9] = [
    "n[subframes]",
    "mse_mean[I^2]",
    "mse_std[I^2]",
    "mse_err2sd[I^2]",
    "ssim_mean[1]",
    "ssim_std[1]",
    "ssim_err2sd[1]",
    "mse_fit[I^2]",
    "pixel_variance[I^2]",
];

pub const RUNS_HEADER: [&str; 4] = ["run[index]", "n[subframes]", "mse[I^2]", "ssim[1]"];

pub const TABLE1_HEADER: [&str; 8] = [
    "distribution[name]",
    "measured_bias_id[I^2]",
    "measured_sigma2[I^2]",
    "simulated_bias_id[I^2]",
    "simulated_sigma2[I^2]",
    "max_rel_error[1]",
    "runs[count]",
    "seed[u64]",
];

pub const COMPONENTS_HEADER: [&str; 6] = [
    "component[name]",
    "n[subframes]",
    "bin_lo[value]",
    "bin_hi[value]",
    "count[windows]",
    "runs[count]",
];

pub const COMPONENT_SUMMARY_HEADER: [&str; 5] = [
    "component[name]",
    "n[subframes]",
    "mean[value]",
    "variance[value^2]",
    "windows[count]",
];

pub const SSIM_CONVERGE_HEADER: [&str; 7] = [
    "n[subframes]",
    "ssim_mean[1]",
    "ssim_std[1]",
    "ssim_err2sd[1]",
    "ssim_model[1]",
    "ssim_model_full[1]",
    "abs_error_full[1]",
];

fn prepare_out(cfg: &ExperimentConfig) -> Result<&Path> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| OsprError::io(&cfg.out, e))?;
    Ok(&cfg.out)
}

fn common_metadata(cfg: &ExperimentConfig, command: &str) -> Vec<(&'static str, String)> {
    let sweep: Vec<String> = cfg.sweep.iter().map(|n| n.to_string()).collect();
    vec![
        ("command", command.to_string()),
        ("target", cfg.target.label()),
        ("symmetrize", cfg.symmetrize.to_string()),
        ("scheme", cfg.scheme.name().to_string()),
        ("sweep", sweep.join(",")),
        ("runs", cfg.runs.to_string()),
        ("seed", cfg.seed.to_string()),
        ("rician_convention", cfg.convention.name().to_string()),
        ("dynamic_range", cfg.dynamic_range.describe()),
    ]
}

/// The amplitude distribution the model integrates over: the exact law for
/// the builtins, a histogram of the image otherwise.
pub fn model_distribution(cfg: &ExperimentConfig, target: &TargetImage) -> AmplitudeDistribution {
    match (&cfg.target, cfg.symmetrize) {
        (TargetSource::Uniform, false) => AmplitudeDistribution::uniform_unit(),
        (TargetSource::Constant, _) => AmplitudeDistribution::constant_unit(),
        _ => AmplitudeDistribution::from_target(target),
    }
}

/// Model statistics under the configured convention. The literal
/// convention takes the measured variance as its scale.
pub fn model_statistics(
    cfg: &ExperimentConfig,
    dist: &AmplitudeDistribution,
    measured_sigma2: f64,
) -> Result<IntensityStatistics> {
    match cfg.convention {
        RicianConvention::AmplitudeToIntensity => scheme_statistics(dist, cfg.scheme),
        RicianConvention::LiteralIntensity => literal_statistics(dist, measured_sigma2),
    }
}

#[derive(Debug, Clone)]
pub struct GenerateReport {
    pub energy: EnergyReport,
    pub replay_symmetric: bool,
    pub files: Vec<PathBuf>,
}

fn sign_map(data: &[num_complex::Complex64], w: usize, h: usize) -> Gray8 {
    Gray8 {
        width: w,
        height: h,
        pixels: data.iter().map(|c| if c.re < 0.0 { 0 } else { 255 }).collect(),
    }
}

/// Scale to `[0, 255]` by the image maximum.
pub fn to_gray8(values: &[f64], w: usize, h: usize) -> Gray8 {
    let max = values.iter().cloned().fold(0.0f64, f64::max);
    let k = if max > 0.0 { 255.0 / max } else { 0.0 };
    Gray8 {
        width: w,
        height: h,
        pixels: values
            .iter()
            .map(|v| (v.max(0.0) * k).round().min(255.0) as u8)
            .collect(),
    }
}

/// Write every quantised subframe as a sign map and the mean replay
/// intensity as an 8-bit image.
pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<GenerateReport> {
    let out = prepare_out(cfg)?;
    let target = cfg.load_target()?;
    let (w, h) = target.dims();
    let rng = cfg.rng();
    let mut engine = SubframeEngine::new(w, h)?;
    let mut acc = ReplayAccumulator::new(w, h);
    let mut files = vec![];
    let mut energy = None;
    for n in 0..cfg.subframes as u64 {
        let frame = engine.frame(&target, cfg.scheme, &rng, n)?;
        if energy.is_none() {
            energy = Some(check_parseval(&frame.field, &dft_forward(&frame.field)?)?);
        }
        let path = out.join(format!("subframe_{n:04}.pgm"));
        write_pgm(&path, &sign_map(frame.field.data(), w, h))?;
        files.push(path);
        acc.accumulate(&frame)?;
    }
    let replay = acc.mean_intensity()?;
    let image = to_gray8(replay.data(), w, h);
    let path = out.join("replay.pgm");
    write_pgm(&path, &image)?;
    files.push(path);
    let replay_symmetric = gray8_rotationally_symmetric(&image, 1);
    let meta = out.join("generate_metadata.txt");
    let mut entries = common_metadata(cfg, "generate");
    entries.push(("subframes", cfg.subframes.to_string()));
    write_metadata(&meta, &entries)?;
    files.push(meta);
    Ok(GenerateReport {
        energy: energy.expect("at least one subframe"),
        replay_symmetric,
        files,
    })
}

/// 180 degree rotation symmetry of an 8-bit image within `tolerance` levels.
pub fn gray8_rotationally_symmetric(image: &Gray8, tolerance: u8) -> bool {
    let (w, h) = (image.width, image.height);
    (0..h).all(|y| {
        (0..w).all(|x| {
            let j = crate::field::rotated_index(x, y, w, h);
            image.pixels[y * w + x].abs_diff(image.pixels[j]) <= tolerance
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasReport {
    /// Conjugate-symmetry bias of the target against one replay.
    pub bias_cs: f64,
    /// Fitted asymptote `A` of `MSE = A + B / N`, i.e. the measured squared bias.
    pub floor_measured: f64,
    /// Model floor (squared bias) from quadrature.
    pub floor_model: f64,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub campaign: Campaign,
    pub fit: Option<ConvergenceFit>,
    pub bias: BiasReport,
    pub noise: Option<NoiseModel>,
    pub model: IntensityStatistics,
    pub ssim_params: SsimParams,
    pub config: String,
    pub version: &'static str,
}

fn two_sd(std: f64) -> f64 {
    2.0 * std
}

fn noise_estimate(cfg: &ExperimentConfig, target: &TargetImage, rng: &RngSpec) -> Result<Option<NoiseModel>> {
    if cfg.runs < 2 {
        return Ok(None);
    }
    estimate_noise_params(target, cfg.scheme, cfg.runs, rng).map(Some)
}

/// MSE and SSIM sweep with the `A + B / N` fit.
pub fn cmd_converge(cfg: &ExperimentConfig) -> Result<CampaignResult> {
    let out = prepare_out(cfg)?;
    let target = cfg.load_target()?;
    let target_intensity = target.intensity();
    let rng = cfg.rng();
    let params = SsimParams::for_target(&target_intensity, cfg.dynamic_range);
    let spec = CampaignSpec {
        target: &target,
        scheme: cfg.scheme,
        sweep: &cfg.sweep,
        runs: cfg.runs,
        rng,
        ssim: Some(params),
        pixel_variance: true,
        histograms: vec![],
    };
    let mut runs_csv = CsvSink::create(&out.join("converge_runs.csv"), &RUNS_HEADER)?;
    let campaign = run_campaign(&spec, |rec| {
        for (i, &n) in cfg.sweep.iter().enumerate() {
            runs_csv.row(&[
                Cell::Int(rec.run as u64),
                Cell::Int(n as u64),
                Cell::Real(rec.mse[i]),
                Cell::Real(rec.ssim[i]),
            ])?;
        }
        Ok(())
    })?;
    let fit = campaign.mse_fit().ok();

    let noise = noise_estimate(cfg, &target, &rng)?;
    let replay = run_ospr(&target, 1, cfg.scheme, &rng.child(0))?.mean_intensity()?;
    let dist = model_distribution(cfg, &target);
    let sigma2 = noise.map(|n| n.sigma2_eps_prime).unwrap_or(f64::NAN);
    let model = model_statistics(cfg, &dist, sigma2)?;
    let bias = BiasReport {
        bias_cs: bias_cs(&target_intensity, &replay)?,
        floor_measured: fit.as_ref().map(|f| f.a).unwrap_or(f64::NAN),
        floor_model: model.floor,
    };

    let mut csv = CsvSink::create(&out.join("converge.csv"), &CONVERGE_HEADER)?;
    for row in &campaign.rows {
        csv.row(&[
            Cell::Int(row.n_subframes as u64),
            Cell::Real(row.mse_mean),
            Cell::Real(row.mse_std),
            Cell::Real(two_sd(row.mse_std)),
            Cell::Real(row.ssim_mean),
            Cell::Real(row.ssim_std),
            Cell::Real(two_sd(row.ssim_std)),
            Cell::Real(fit.as_ref().map(|f| f.predict(row.n_subframes)).unwrap_or(f64::NAN)),
            Cell::Real(row.pixel_variance),
        ])?;
    }

    let mut entries = common_metadata(cfg, "converge");
    entries.extend([
        ("ssim_dynamic_range_l", params.dynamic_range.to_string()),
        ("fit_a", fit.as_ref().map(|f| f.a).unwrap_or(f64::NAN).to_string()),
        ("fit_b", fit.as_ref().map(|f| f.b).unwrap_or(f64::NAN).to_string()),
        ("fit_r_squared", fit.as_ref().map(|f| f.r_squared).unwrap_or(f64::NAN).to_string()),
        ("bias_cs", bias.bias_cs.to_string()),
        ("model_floor", model.floor.to_string()),
        ("model_sigma2", model.sigma2_eps_prime.to_string()),
        ("noise_mu", noise.map(|n| n.mu_eps_prime).unwrap_or(f64::NAN).to_string()),
        ("noise_sigma2", sigma2.to_string()),
    ]);
    write_metadata(&out.join("converge_metadata.txt"), &entries)?;

    Ok(CampaignResult {
        campaign,
        fit,
        bias,
        noise,
        model,
        ssim_params: params,
        config: cfg.to_text(),
        version: env!("CARGO_PKG_VERSION"),
    })
}

#[derive(Debug, Clone)]
pub struct Table1Row {
    pub distribution: String,
    /// Fitted asymptote `A`, the squared bias.
    pub measured_floor: f64,
    pub measured_sigma2: f64,
    pub simulated_floor: f64,
    pub simulated_sigma2: f64,
    /// Largest relative model error over the quantities whose measured value
    /// exceeds 0.01.
    pub max_relative_error: f64,
    pub fit: ConvergenceFit,
}

/// Measure and simulate one distribution row.
pub fn table1_row(
    cfg: &ExperimentConfig,
    name: &str,
    target: &TargetImage,
    dist: &AmplitudeDistribution,
    rng: RngSpec,
) -> Result<Table1Row> {
    if cfg.runs < 2 {
        return Err(OsprError::config("runs", "table1 needs at least 2 runs"));
    }
    let spec = CampaignSpec {
        target,
        scheme: cfg.scheme,
        sweep: &cfg.sweep,
        runs: cfg.runs,
        rng,
        ssim: None,
        pixel_variance: false,
        histograms: vec![],
    };
    let fit = run_campaign(&spec, |_| Ok(()))?.mse_fit()?;
    let noise = estimate_noise_params(target, cfg.scheme, cfg.runs, &rng)?;
    let sim = model_statistics(cfg, dist, noise.sigma2_eps_prime)?;
    let pairs = [
        (fit.a, sim.floor),
        (noise.sigma2_eps_prime, sim.sigma2_eps_prime),
    ];
    let max_relative_error = pairs
        .iter()
        .filter(|(m, _)| m.abs() > 0.01)
        .map(|(m, s)| ((s - m) / m).abs())
        .fold(0.0, f64::max);
    Ok(Table1Row {
        distribution: name.to_string(),
        measured_floor: fit.a,
        measured_sigma2: noise.sigma2_eps_prime,
        simulated_floor: sim.floor,
        simulated_sigma2: sim.sigma2_eps_prime,
        max_relative_error,
        fit,
    })
}

/// Builtin uniform and constant rows, then Mandrill and Peppers
/// (symmetrised) when their paths are configured.
pub fn cmd_table1(cfg: &ExperimentConfig) -> Result<Vec<Table1Row>> {
    let out = prepare_out(cfg)?;
    let mut sources: Vec<(String, TargetImage, AmplitudeDistribution)> = vec![
        (
            "uniform".into(),
            TargetImage::uniform(cfg.size, cfg.size, cfg.seed)?,
            AmplitudeDistribution::uniform_unit(),
        ),
        (
            "constant".into(),
            TargetImage::constant(cfg.size, cfg.size)?,
            AmplitudeDistribution::constant_unit(),
        ),
    ];
    for (name, path) in [("mandrill", &cfg.mandrill), ("peppers", &cfg.peppers)] {
        if let Some(path) = path {
            let t = induce_symmetry(&load_target(path, EnergyPolicy::UnitMeanSquare)?);
            let d = AmplitudeDistribution::from_target(&t);
            sources.push((name.into(), t, d));
        }
    }
    let mut csv = CsvSink::create(&out.join("table1.csv"), &TABLE1_HEADER)?;
    let mut rows = vec![];
    for (i, (name, target, dist)) in sources.iter().enumerate() {
        let row = table1_row(cfg, name, target, dist, RngSpec::new(cfg.seed, i as u64 + 1))?;
        csv.row(&[
            Cell::Text(&row.distribution),
            Cell::Real(row.measured_floor),
            Cell::Real(row.measured_sigma2),
            Cell::Real(row.simulated_floor),
            Cell::Real(row.simulated_sigma2),
            Cell::Real(row.max_relative_error),
            Cell::Int(cfg.runs as u64),
            Cell::Int(cfg.seed),
        ])?;
        rows.push(row);
    }
    write_metadata(&out.join("table1_metadata.txt"), &common_metadata(cfg, "table1"))?;
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct ComponentsResult {
    pub rows: Vec<SweepRow>,
    /// `histograms[i][k]`: sweep point `i`, component `SsimComponent::ALL[k]`.
    pub histograms: Vec<Vec<SsimComponentHistogram>>,
}

impl ComponentsResult {
    pub fn histogram(&self, point: usize, component: SsimComponent) -> &SsimComponentHistogram {
        let k = SsimComponent::ALL
            .iter()
            .position(|c| *c == component)
            .expect("every component is histogrammed");
        &self.histograms[point][k]
    }
}

/// Component ranges from run 0 at the smallest and largest `N`, padded so
/// later runs rarely fall outside.
fn pilot_plans(
    cfg: &ExperimentConfig,
    target: &TargetImage,
    params: &SsimParams,
) -> Result<Vec<HistogramPlan>> {
    let rng = cfg.rng().child(0);
    let ti = target.intensity();
    let mut reports = vec![];
    for n in [cfg.sweep[0], cfg.max_subframes()] {
        let replay = run_ospr(target, n, cfg.scheme, &rng)?.mean_intensity()?;
        reports.push(ssim(&ti, &replay, params)?);
    }
    Ok(SsimComponent::ALL
        .iter()
        .map(|&component| {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for r in &reports {
                for v in r.component(component) {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            let pad = 0.05 * (hi - lo);
            let (lo, hi) = if pad > 0.0 {
                (lo - pad, hi + pad)
            } else {
                (lo - 0.5, hi + 0.5)
            };
            HistogramPlan {
                component,
                lo,
                hi,
                bins: cfg.bins,
            }
        })
        .collect())
}

/// Histograms of every SSIM component at every sweep point.
pub fn cmd_ssim_components(cfg: &ExperimentConfig) -> Result<ComponentsResult> {
    let out = prepare_out(cfg)?;
    if cfg.sweep.len() < 2 {
        return Err(OsprError::config("sweep", "ssim-components needs at least two N values"));
    }
    let target = cfg.load_target()?;
    let params = SsimParams::for_target(&target.intensity(), cfg.dynamic_range);
    let plans = pilot_plans(cfg, &target, &params)?;
    let spec = CampaignSpec {
        target: &target,
        scheme: cfg.scheme,
        sweep: &cfg.sweep,
        runs: cfg.runs,
        rng: cfg.rng(),
        ssim: Some(params),
        pixel_variance: false,
        histograms: plans,
    };
    let campaign = run_campaign(&spec, |_| Ok(()))?;

    let mut bins = CsvSink::create(&out.join("ssim_components.csv"), &COMPONENTS_HEADER)?;
    let mut summary = CsvSink::create(
        &out.join("ssim_components_summary.csv"),
        &COMPONENT_SUMMARY_HEADER,
    )?;
    for point in &campaign.histograms {
        for h in point {
            let width = (h.hi - h.lo) / h.counts.len() as f64;
            for (i, &count) in h.counts.iter().enumerate() {
                bins.row(&[
                    Cell::Text(h.component.name()),
                    Cell::Int(h.n_subframes as u64),
                    Cell::Real(h.lo + i as f64 * width),
                    Cell::Real(h.lo + (i + 1) as f64 * width),
                    Cell::Int(count),
                    Cell::Int(cfg.runs as u64),
                ])?;
            }
            summary.row(&[
                Cell::Text(h.component.name()),
                Cell::Int(h.n_subframes as u64),
                Cell::Real(h.mean),
                Cell::Real(h.variance),
                Cell::Int(h.mass()),
            ])?;
        }
    }
    let mut entries = common_metadata(cfg, "ssim-components");
    entries.push(("ssim_dynamic_range_l", params.dynamic_range.to_string()));
    entries.push(("bins", cfg.bins.to_string()));
    write_metadata(&out.join("ssim_components_metadata.txt"), &entries)?;
    Ok(ComponentsResult {
        rows: campaign.rows,
        histograms: campaign.histograms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimConvergeRow {
    pub n_subframes: usize,
    pub ssim_mean: f64,
    pub ssim_std: f64,
    pub model: f64,
    pub model_full: f64,
}

#[derive(Debug, Clone)]
pub struct SsimConvergeResult {
    pub rows: Vec<SsimConvergeRow>,
    pub noise: NoiseModel,
    pub params: SsimParams,
    /// Asymptote of the `A + B / N` fit to the measured means, when the
    /// sweep has at least three points.
    pub fitted_asymptote: Option<f64>,
}

/// Measured SSIM against both model predictions.
pub fn cmd_ssim_converge(cfg: &ExperimentConfig) -> Result<SsimConvergeResult> {
    let out = prepare_out(cfg)?;
    if cfg.runs < 2 {
        return Err(OsprError::config("runs", "ssim-converge needs at least 2 runs"));
    }
    let target = cfg.load_target()?;
    let ti = target.intensity();
    let params = SsimParams::for_target(&ti, cfg.dynamic_range);
    let rng = cfg.rng();
    let spec = CampaignSpec {
        target: &target,
        scheme: cfg.scheme,
        sweep: &cfg.sweep,
        runs: cfg.runs,
        rng,
        ssim: Some(params),
        pixel_variance: false,
        histograms: vec![],
    };
    let campaign = run_campaign(&spec, |_| Ok(()))?;
    let noise = estimate_noise_params(&target, cfg.scheme, cfg.runs, &rng)?;
    let var_t = window_variances(&ti, &params)?;
    let mean_var_t = var_t.iter().sum::<f64>() / var_t.len() as f64;

    let mut csv = CsvSink::create(&out.join("ssim_converge.csv"), &SSIM_CONVERGE_HEADER)?;
    let mut rows = vec![];
    for r in &campaign.rows {
        let n = r.n_subframes;
        let row = SsimConvergeRow {
            n_subframes: n,
            ssim_mean: r.ssim_mean,
            ssim_std: r.ssim_std,
            model: ssim_model(mean_var_t, noise.sigma2_eps_prime, n, &params)?,
            model_full: ssim_model_full(&var_t, noise.sigma2_eps_prime, n, &params)?,
        };
        csv.row(&[
            Cell::Int(n as u64),
            Cell::Real(row.ssim_mean),
            Cell::Real(row.ssim_std),
            Cell::Real(two_sd(row.ssim_std)),
            Cell::Real(row.model),
            Cell::Real(row.model_full),
            Cell::Real((row.model_full - row.ssim_mean).abs()),
        ])?;
        rows.push(row);
    }
    let fitted_asymptote = campaign.ssim_fit().ok().map(|f| f.a);
    let mut entries = common_metadata(cfg, "ssim-converge");
    entries.extend([
        ("ssim_dynamic_range_l", params.dynamic_range.to_string()),
        ("noise_sigma2", noise.sigma2_eps_prime.to_string()),
        ("mean_window_var_t", mean_var_t.to_string()),
        ("fitted_asymptote", fitted_asymptote.unwrap_or(f64::NAN).to_string()),
    ]);
    write_metadata(&out.join("ssim_converge_metadata.txt"), &entries)?;
    Ok(SsimConvergeResult {
        rows,
        noise,
        params,
        fitted_asymptote,
    })
}
