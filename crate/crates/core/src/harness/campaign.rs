//! Monte-Carlo campaigns over a subframe sweep.
//!
//! Run `r` draws its phases from `rng.child(r)` and accumulates subframes
//! `0..N_max` once; the metrics for each `N` in the sweep are taken from the
//! first `N` subframes. Runs are independent, so every sweep point is an
//! average over `runs` independent replays.

use crate::error::{OsprError, Result};
use crate::field::RealField;
use crate::metrics::{mse, ssim, ssim_index, HistogramBuilder, SsimComponent, SsimComponentHistogram, SsimParams};
use crate::montecarlo::ordered_map_fold;
use crate::noise::{fit_convergence, ConvergenceFit, ConvergenceSample};
use crate::ospr::{QuantizationScheme, ReplayAccumulator, RngSpec, SubframeEngine};
use crate::target::TargetImage;

/// Fixed-range histogram layout for one SSIM component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramPlan {
    pub component: SsimComponent,
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

#[derive(Debug, Clone)]
pub struct CampaignSpec<'a> {
    pub target: &'a TargetImage,
    pub scheme: QuantizationScheme,
    pub sweep: &'a [usize],
    pub runs: usize,
    pub rng: RngSpec,
    /// Compute SSIM at every sweep point.
    pub ssim: Option<SsimParams>,
    /// Track the per-pixel variance of the mean intensity across runs.
    pub pixel_variance: bool,
    /// SSIM component histograms to build (requires `ssim`).
    pub histograms: Vec<HistogramPlan>,
}

/// Metrics of one run at every sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub mse: Vec<f64>,
    pub ssim: Vec<f64>,
}

/// Aggregated metrics at one sweep point. Standard deviations are sample
/// standard deviations across runs (0 for a single run).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub n_subframes: usize,
    pub mse_mean: f64,
    pub mse_std: f64,
    pub ssim_mean: f64,
    pub ssim_std: f64,
    /// Pixel-averaged variance across runs of the mean intensity, when tracked.
    pub pixel_variance: f64,
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub rows: Vec<SweepRow>,
    /// `histograms[i][k]` is plan `k` at sweep point `i`.
    pub histograms: Vec<Vec<SsimComponentHistogram>>,
}

impl Campaign {
    /// Fit `MSE(N) = A + B / N` to the sweep means.
    pub fn mse_fit(&self) -> Result<ConvergenceFit> {
        fit_convergence(&self.samples(|r| (r.mse_mean, r.mse_std)))
    }

    /// Fit `SSIM(N) = A + B / N` to the sweep means.
    pub fn ssim_fit(&self) -> Result<ConvergenceFit> {
        fit_convergence(&self.samples(|r| (r.ssim_mean, r.ssim_std)))
    }

    fn samples(&self, pick: impl Fn(&SweepRow) -> (f64, f64)) -> Vec<ConvergenceSample> {
        self.rows
            .iter()
            .map(|r| {
                let (mean, std_dev) = pick(r);
                ConvergenceSample {
                    n_subframes: r.n_subframes,
                    mean,
                    std_dev,
                }
            })
            .collect()
    }
}

struct RunOutput {
    mse: Vec<f64>,
    ssim: Vec<f64>,
    errors: Vec<Vec<f64>>,
    histograms: Vec<Vec<HistogramBuilder>>,
}

struct Totals {
    mse: Vec<Vec<f64>>,
    ssim: Vec<Vec<f64>>,
    err_sum: Vec<Vec<f64>>,
    err_sum_sq: Vec<Vec<f64>>,
    histograms: Vec<Vec<HistogramBuilder>>,
}

fn validate(spec: &CampaignSpec) -> Result<()> {
    if spec.runs == 0 {
        return Err(OsprError::InvalidArgument("runs must be >= 1".into()));
    }
    if spec.sweep.is_empty() || spec.sweep[0] == 0 || spec.sweep.windows(2).any(|w| w[1] <= w[0]) {
        return Err(OsprError::InvalidArgument(format!(
            "sweep must be non-empty, positive and strictly increasing, got {:?}",
            spec.sweep
        )));
    }
    if !spec.histograms.is_empty() && spec.ssim.is_none() {
        return Err(OsprError::InvalidArgument(
            "component histograms need SSIM parameters".into(),
        ));
    }
    Ok(())
}

fn sample_std(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn execute_run(
    spec: &CampaignSpec,
    target_intensity: &RealField,
    run: usize,
) -> Result<RunOutput> {
    let (w, h) = spec.target.dims();
    let rng = spec.rng.child(run as u64);
    let mut engine = SubframeEngine::new(w, h)?;
    let mut acc = ReplayAccumulator::new(w, h);
    let mut out = RunOutput {
        mse: Vec::with_capacity(spec.sweep.len()),
        ssim: Vec::with_capacity(spec.sweep.len()),
        errors: vec![],
        histograms: vec![],
    };
    let mut done = 0u64;
    for &n in spec.sweep {
        engine.run_range(spec.target, done..n as u64, spec.scheme, &rng, &mut acc)?;
        done = n as u64;
        let replay = acc.mean_intensity()?;
        out.mse.push(mse(target_intensity, &replay)?);
        if let Some(params) = &spec.ssim {
            if spec.histograms.is_empty() {
                out.ssim.push(ssim_index(target_intensity, &replay, params)?);
            } else {
                let report = ssim(target_intensity, &replay, params)?;
                out.ssim.push(report.global_ssim);
                let mut builders = Vec::with_capacity(spec.histograms.len());
                for plan in &spec.histograms {
                    let mut b = HistogramBuilder::new(plan.component, n, plan.lo, plan.hi, plan.bins)?;
                    b.add_report(&report);
                    builders.push(b);
                }
                out.histograms.push(builders);
            }
        }
        if spec.pixel_variance {
            out.errors.push(
                replay
                    .data()
                    .iter()
                    .zip(target_intensity.data())
                    .map(|(r, t)| r - t)
                    .collect(),
            );
        }
    }
    Ok(out)
}

/// Run a campaign. `on_run` sees every run's record in run order, as soon
/// as its chunk completes, so callers can stream per-run output.
pub fn run_campaign(
    spec: &CampaignSpec,
    mut on_run: impl FnMut(&RunRecord) -> Result<()>,
) -> Result<Campaign> {
    validate(spec)?;
    let target_intensity = spec.target.intensity();
    let points = spec.sweep.len();
    let pixels = target_intensity.len();
    let tracked = if spec.pixel_variance { points } else { 0 };
    let init = Totals {
        mse: vec![Vec::with_capacity(spec.runs); points],
        ssim: vec![Vec::with_capacity(spec.runs); points],
        err_sum: vec![vec![0.0; pixels]; tracked],
        err_sum_sq: vec![vec![0.0; pixels]; tracked],
        histograms: vec![],
    };
    let mut failure = None;
    let totals = ordered_map_fold(
        spec.runs,
        init,
        |run| execute_run(spec, &target_intensity, run),
        |tot, run, out| {
            for i in 0..points {
                tot.mse[i].push(out.mse[i]);
                if let Some(&s) = out.ssim.get(i) {
                    tot.ssim[i].push(s);
                }
            }
            for (i, errors) in out.errors.iter().enumerate() {
                for ((s, q), e) in tot.err_sum[i]
                    .iter_mut()
                    .zip(tot.err_sum_sq[i].iter_mut())
                    .zip(errors)
                {
                    *s += e;
                    *q += e * e;
                }
            }
            if tot.histograms.is_empty() {
                tot.histograms = out.histograms;
            } else {
                for (mine, theirs) in tot.histograms.iter_mut().zip(&out.histograms) {
                    for (a, b) in mine.iter_mut().zip(theirs) {
                        if let Err(e) = a.merge(b) {
                            failure.get_or_insert(e);
                        }
                    }
                }
            }
            if failure.is_none() {
                let record = RunRecord {
                    run,
                    mse: out.mse,
                    ssim: out.ssim,
                };
                if let Err(e) = on_run(&record) {
                    failure = Some(e);
                }
            }
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }

    let r = spec.runs as f64;
    let rows = (0..points)
        .map(|i| {
            let mse_mean = mean(&totals.mse[i]);
            let (ssim_mean, ssim_std) = if totals.ssim[i].is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                let m = mean(&totals.ssim[i]);
                (m, sample_std(&totals.ssim[i], m))
            };
            let pixel_variance = if spec.pixel_variance && spec.runs > 1 {
                let total: f64 = totals.err_sum[i]
                    .iter()
                    .zip(&totals.err_sum_sq[i])
                    .map(|(s, q)| ((q - s * s / r) / (r - 1.0)).max(0.0))
                    .sum();
                total / pixels as f64
            } else {
                f64::NAN
            };
            SweepRow {
                n_subframes: spec.sweep[i],
                mse_mean,
                mse_std: sample_std(&totals.mse[i], mse_mean),
                ssim_mean,
                ssim_std,
                pixel_variance,
            }
        })
        .collect();
    let histograms = totals
        .histograms
        .into_iter()
        .map(|row| row.into_iter().map(HistogramBuilder::finish).collect())
        .collect();
    Ok(Campaign { rows, histograms })
}
