//! Multi-indices, weight sequences, and the thresholded index sets used by
//! the sparse operators.

mod calibrate;
mod grid;
mod multiindex;
mod plan;
mod weights;

pub use calibrate::{calibrate_xi, plan_cost, CostKind};
pub use grid::{
    dense_coords, difference_step, for_each_tensor_point, grid_of, lower_neighbours, Coords, Grid, PointId,
    TensorPoint,
};
pub use multiindex::MultiIndex;
pub use plan::{
    build_g, build_lambda, check_downward_closed, restrict_even, vartheta, GSpec, IndexPlan, Parity,
    PlanEntry, Regime, DEFAULT_CAP,
};
pub use weights::{
    beta_affine, binomial, p_weight, sigma, sigma_factor_sq, summability_check, RhoSeq,
    SummabilityCertificate, WeightMode, WeightSpec, J_MAX,
};
