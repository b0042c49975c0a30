//! Model comparison and interpretation of fitted draws.

pub mod mixture;
pub mod ranks;
pub mod stats;
pub mod waic;

pub use mixture::{bic, bic_select, vm_mixture_fit, ClusterResult, VmMixture};
pub use ranks::{midranks, spearman, unfold_ranks};
pub use waic::{waic_all, waic_period, waic_terms, write_waic, VoteColumns, WaicResult};
