//! Rotationally symmetric simulation of the expanding curvature flow
//! `∂_t h = φ h^{2−p} σ_k` for support functions on the unit sphere `Sⁿ`,
//! its normalized form, and the scalar functionals that monitor it.
//!
//! All fields depend on the latitude `θ ∈ (−π/2, π/2)` only, so the problem is
//! one-dimensional for any ambient dimension `n + 1`.

pub mod config;
pub mod error;
pub mod flow;
pub mod functionals;
pub mod grid;
pub mod profile;
pub mod radii;
pub mod scenarios;

pub use error::{Error, Result};
pub use flow::{
    eta, rescale_factor, rescale_snapshot, rhs_normalized, rhs_unnormalized, run_flow, stable_dt, step,
    Breakdown, BreakdownReason, FlowParams, FlowState, Normalization, TerminalStatus, TrajectoryRecord,
};
pub use functionals::{
    closure_integral, convexity_condition, counterexample_rate, entropy_a, firey_defect, grad_log_h_max,
    monitor, preserved_q, soliton_residual, ConvexityReport, FireyReport, MonitorRecord,
};
pub use grid::LatitudeGrid;
pub use profile::{d2_theta, d_theta, Parity, RadialProfile};
pub use radii::{linearized_l, principal_radii, sigma_k_eval, sigma_k_partials, PrincipalRadii};
pub use scenarios::{ExpectedOutcome, PhiKind, ScenarioSpec};

use std::sync::Arc;

/// Build a shared latitude grid.
pub fn build_grid(n: usize, num_points: usize) -> Result<Arc<LatitudeGrid>> {
    LatitudeGrid::new(n, num_points).map(Arc::new)
}

/// `∫_{Sⁿ} f dx` on the profile's own grid.
pub fn integrate_sphere(f: &RadialProfile) -> f64 {
    f.grid().integrate_values(f.values())
}

/// `∫_{Sⁿ} f dx`, checking that `f` lives on `grid`.
pub fn integrate_on(grid: &LatitudeGrid, f: &RadialProfile) -> Result<f64> {
    f.check_grid(grid)?;
    Ok(grid.integrate_values(f.values()))
}
