//! Partition Π and coreset C construction by local search, and the rescaled
//! core kernel L̃ that the two-stage sampler draws from.

mod init;
mod model;
mod search;

pub use init::{kmeanspp_init, random_init, Init};
pub use model::{rescaled_core_kernel, CoreModel, Coreset, Partition};
pub use search::{
    assignment_score, construct, construct_from, core_swap_objective, nearest_cores,
    ConstructConfig, ConstructTrace, Objective, SwapEvent,
};
