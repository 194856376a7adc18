//! Log-linear capture-recapture comparison estimator.

mod ipf;
mod profile;
mod search;

pub use ipf::{
    chapman_estimate, fit_loglinear, petersen_estimate, CellTable, LoglinearModel, IPF_TOLERANCE,
};
pub use profile::{loglinear_ci, ProfileInterval};
pub use search::{search_models, Criterion, SearchOutcome, EXHAUSTIVE_LIST_LIMIT, SEARCH_LIST_LIMIT};
