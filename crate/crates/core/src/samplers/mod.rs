//! Posterior samplers: pseudo-marginal random-walk Metropolis and rejection
//! ABC with regression adjustment.

mod abc;
mod mcmc;

pub use abc::{
    apply_adjustment, regression_adjust, regression_fit, rejection_abc, summary_scales, AbcConfig,
    AbcResult, AbcSelection, RegressionFit, SCALE_SIMULATIONS,
};
pub use mcmc::{
    batch_means_mcse, read_chain_draws, rwm_sample, Chain, CoordinateSummary, RwmConfig,
    MAX_INIT_ATTEMPTS, TARGET_ACCEPTANCE,
};
