//! Comparison methods: the k-means partition baseline and a Metropolis
//! exchange chain for the k-DPP with a Gelman–Rubin stopping rule.

mod kmeans;
mod mcmc;
mod psrf;

pub use kmeans::{kmeans, kpp_baseline, KMeans};
pub use mcmc::{
    acceptance_prob, mcmc_kdpp_step, mcmc_sample_until_converged, ChainState, McmcRun,
    REFRESH_EVERY,
};
pub use psrf::psrf;
