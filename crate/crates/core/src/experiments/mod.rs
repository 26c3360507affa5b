//! Reproducible studies: single inference runs, the coverage study, marginal
//! density tables and the posterior concentration test.

mod concentration;
mod config;
mod coverage;
mod density;
mod output;
mod run;

pub use concentration::{
    concentration_test, ConcentrationConfig, ConcentrationReport, ConcentrationRow,
};
pub use config::{
    default_proposal_scale, load_json, parse_json, Method, Resolved, RunConfig, SummaryChoice,
};
pub use coverage::{
    analytic_interval_length, coverage_study, CoverageConfig, CoverageReport, CoverageRow,
};
pub use density::{
    density_from_chain, density_table, kde_grid, silverman_bandwidth, write_density_csv,
    DensityRow,
};
pub use output::{config_hash, sha256_hex, version_string, write_json, write_manifest, Manifest};
pub use run::{
    run_inference, run_resolved, summarize_iid, AbcSummary, RunDraws, RunOutcome, RunSummary,
    ABC_STREAM, CHAIN_STREAM,
};
