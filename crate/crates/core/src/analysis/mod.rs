//! Error norms, the discrete inf-sup constant, consistency diagnostics and
//! convergence-rate fits.

mod consistency;
mod diagnostics;
mod infsup;
mod norms;
mod rates;

pub use consistency::{
    consistency_dual_norms, consistency_functionals, verify_error_equation, ConsistencyDualNorms,
    ConsistencyValues, ErrorEquationResidual,
};
pub use diagnostics::{
    gradient_energy_ratio, projection_errors, trace_inequality_ratio, ProjectionErrors,
};
pub use infsup::{discrete_inf_sup, InfSupReport, INF_SUP_MAX_PRESSURE_DOFS};
pub use norms::{
    error_bundle, triple_bar_norm, triple_bar_parts, weak_divergence_norm, weak_gradient_direct,
    ErrorBundle,
};
pub use rates::{EXACT_THRESHOLD, MIN_LEVELS, fit_rates, fit_slope, ConvergenceRecord, LevelRecord, Rate, RateSummary};

use crate::geometry::Point;

/// An exact velocity-pressure pair with the derivatives the analysis needs.
pub trait ExactSolution: Sync {
    fn velocity(&self, p: Point) -> [f64; 2];
    /// Row `c` is the gradient of velocity component `c`.
    fn velocity_gradient(&self, p: Point) -> [[f64; 2]; 2];
    fn pressure(&self, p: Point) -> f64;
}
