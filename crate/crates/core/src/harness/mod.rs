//! Configuration, dataset resolution, experiment orchestration, persistence and the CLI.

pub mod cli;
pub mod config;
pub mod datasets;
pub mod report;
pub mod run;

pub use config::{load_config, load_grid, ExperimentConfig, DEFAULT_SEEDS};
pub use datasets::{data_dir, load_standardized, resolve, LoadedDataset, BUNDLED, DATA_DIR_ENV};
pub use report::{collect_results, make_report, report_rows, ReportRow};
pub use run::{persist, run_experiment, ExperimentResult, SCHEMA_VERSION};
