//! Experiment runner behind the `ospr` command-line tool: configuration,
//! Monte-Carlo campaigns over subframe sweeps, and CSV output.

mod campaign;
mod commands;
mod config;
mod output;

pub use campaign::{run_campaign, Campaign, CampaignSpec, HistogramPlan, RunRecord, SweepRow};
pub use commands::{
    cmd_converge, cmd_generate, cmd_ssim_components, cmd_ssim_converge, cmd_table1,
    gray8_rotationally_symmetric, model_distribution, model_statistics, table1_row, to_gray8,
    BiasReport, CampaignResult, ComponentsResult, GenerateReport, SsimConvergeResult,
    SsimConvergeRow, Table1Row, COMPONENTS_HEADER, COMPONENT_SUMMARY_HEADER, CONVERGE_HEADER,
    RUNS_HEADER, SSIM_CONVERGE_HEADER, TABLE1_HEADER,
};
pub use config::{ExperimentConfig, TargetSource, DEFAULT_SWEEP};
pub use output::{format_real, write_metadata, Cell, CsvSink};
