//! Time integration of the expanding flow `∂_t h = φ h^{2−p} σ_k` and of its
//! normalized form `∂_τ h = φ h^{2−p} σ_k − η h`, with
//! `η = ∫ h σ_k dx / ∫ 1/φ dx`.
//!
//! Stepping is classical RK4 under a parabolic step restriction; `η` is
//! recomputed at every stage.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::functionals::{self, MonitorRecord};
use crate::grid::LatitudeGrid;
use crate::profile::{Parity, RadialProfile};
use crate::radii::{pow_real, principal_radii, require_even, sigma_k_partials, PrincipalRadii, RadiiWork};

/// Smallest admissible value of the stability denominator.
const STABILITY_FLOOR: f64 = 1e-8;

/// Consecutive steps with `min ζ₁` below the tolerance before loss of convexity is declared.
pub const CONVEXITY_LOSS_STEPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Integrate `∂_t h = φ h^{2−p} σ_k` as is.
    Unnormalized,
    /// Integrate the normalized equation with the `−η h` term.
    NormalizedPde,
    /// Integrate the unnormalized equation and rescale onto `∫h^p/φ = ∫1/φ` after each step.
    RescaleEachStep,
}

impl Normalization {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::Unnormalized => "unnormalized",
            Normalization::NormalizedPde => "normalized_pde",
            Normalization::RescaleEachStep => "rescale_each_step",
        }
    }
}

/// Parameters of a flow run.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowParams {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub phi: RadialProfile,
    pub cfl: f64,
    pub t_max: f64,
    pub residual_tol: f64,
    pub normalization: Normalization,
    /// Rescale onto the constraint `∫h^p/φ = ∫1/φ` after every step.
    pub renorm_projection: bool,
    pub breakdown_zeta_tol: f64,
    /// Record a monitor sample every this many steps.
    pub sample_stride: usize,
    /// Test for convergence every this many steps.
    pub check_stride: usize,
}

impl FlowParams {
    /// Parameters with default step control for anisotropy `phi` on `S^n`, `n` taken from its grid.
    pub fn new(phi: RadialProfile, k: usize, p: f64) -> Result<Self> {
        let params = Self {
            n: phi.grid().n(),
            k,
            p,
            phi,
            cfl: 0.2,
            t_max: 50.0,
            residual_tol: 1e-6,
            normalization: Normalization::NormalizedPde,
            renorm_projection: false,
            breakdown_zeta_tol: -1e-8,
            sample_stride: 100,
            check_stride: 10,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn grid(&self) -> &std::sync::Arc<LatitudeGrid> {
        self.phi.grid()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n != self.phi.grid().n() {
            return Err(param(format!(
                "n = {} does not match the grid dimension {}",
                self.n,
                self.phi.grid().n()
            )));
        }
        if self.k < 1 || self.k > self.n {
            return Err(param("k must satisfy 1 ≤ k ≤ n"));
        }
        if !self.p.is_finite() {
            return Err(param("p must be finite"));
        }
        if self.phi.values().iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(param("phi must be strictly positive and finite"));
        }
        if self.phi.parity() != Parity::Even {
            return Err(param("phi must be even across the poles"));
        }
        if self.k < self.n {
            let tol = 1e-12 * self.phi.max();
            if !self.phi.is_equator_symmetric(tol) {
                return Err(param(
                    "phi must be symmetric under θ ↦ −θ when k < n",
                ));
            }
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(param("cfl must lie in (0, 1]"));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(param("t_max must be positive and finite"));
        }
        if !(self.residual_tol > 0.0) {
            return Err(param("residual_tol must be positive"));
        }
        if !self.breakdown_zeta_tol.is_finite() {
            return Err(param("breakdown_zeta_tol must be finite"));
        }
        if self.sample_stride == 0 || self.check_stride == 0 {
            return Err(param("sample_stride and check_stride must be at least 1"));
        }
        Ok(())
    }

    /// `∫ 1/φ dx`.
    pub fn inv_phi_integral(&self) -> f64 {
        let g = self.phi.grid();
        g.weights()
            .iter()
            .zip(self.phi.values())
            .map(|(w, f)| w / f)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakdownReason {
    NegativeH,
    NegativeSigmaK,
    NonFinite,
    /// `min ζ₁` stayed below the tolerance with `k < n`: the body is no longer convex.
    LossOfConvexity,
}

impl BreakdownReason {
    pub fn as_str(self) -> &'static str {
        match self {
            BreakdownReason::NegativeH => "negative_h",
            BreakdownReason::NegativeSigmaK => "negative_sigma_k",
            BreakdownReason::NonFinite => "nan",
            BreakdownReason::LossOfConvexity => "loss_of_convexity",
        }
    }
}

impl fmt::Display for BreakdownReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakdown {
    pub reason: BreakdownReason,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminalStatus {
    Converged,
    TMaxReached,
    Breakdown(Breakdown),
}

impl TerminalStatus {
    pub fn label(&self) -> String {
        match self {
            TerminalStatus::Converged => "converged".into(),
            TerminalStatus::TMaxReached => "t_max_reached".into(),
            TerminalStatus::Breakdown(b) => format!("breakdown({})", b.reason),
        }
    }

    pub fn is_breakdown(&self) -> bool {
        matches!(self, TerminalStatus::Breakdown(_))
    }
}

/// Support function at one instant together with the fields derived from it.
#[derive(Debug, Clone)]
pub struct FlowState {
    time: f64,
    h: RadialProfile,
    radii: PrincipalRadii,
    eta: f64,
    speed: RadialProfile,
    breakdown: Option<BreakdownReason>,
}

impl FlowState {
    pub fn new(h: RadialProfile, time: f64, params: &FlowParams) -> Result<Self> {
        require_even(&h)?;
        h.check_grid(params.phi.grid())?;
        let radii = principal_radii(&h, params.n, params.k)?;
        let exponent = 2.0 - params.p;
        let speed: Vec<f64> = (0..h.len())
            .map(|j| {
                params.phi.values()[j] * pow_real(h.values()[j], exponent) * radii.sigma_k.values()[j]
            })
            .collect();
        let g = h.grid();
        let mixed: f64 = (0..h.len())
            .map(|j| g.weights()[j] * h.values()[j] * radii.sigma_k.values()[j])
            .sum();
        let eta = mixed / params.inv_phi_integral();
        let breakdown = if h.values().iter().any(|v| !v.is_finite()) || speed.iter().any(|v| !v.is_finite()) {
            Some(BreakdownReason::NonFinite)
        } else if h.values().iter().any(|v| *v <= 0.0) {
            Some(BreakdownReason::NegativeH)
        } else {
            None
        };
        let speed = h.with_values(speed, Parity::Even)?;
        Ok(Self {
            time,
            h,
            radii,
            eta,
            speed,
            breakdown,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn h(&self) -> &RadialProfile {
        &self.h
    }

    pub fn radii(&self) -> &PrincipalRadii {
        &self.radii
    }

    /// `η = ∫ h σ_k / ∫ 1/φ`.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `Θ σ_k = φ h^{2−p} σ_k`, the normal speed of the unnormalized flow.
    pub fn speed(&self) -> &RadialProfile {
        &self.speed
    }

    pub fn breakdown(&self) -> Option<BreakdownReason> {
        self.breakdown
    }
}

pub fn eta(state: &FlowState) -> f64 {
    state.eta
}

fn ensure_valid(state: &FlowState) -> Result<()> {
    match state.breakdown {
        Some(reason) => Err(Error::Domain(format!(
            "state at t = {} is broken down ({reason})",
            state.time
        ))),
        None => Ok(()),
    }
}

/// `φ h^{2−p} σ_k`.
pub fn rhs_unnormalized(state: &FlowState) -> Result<RadialProfile> {
    ensure_valid(state)?;
    Ok(state.speed.clone())
}

/// `φ h^{2−p} σ_k − η h`.
pub fn rhs_normalized(state: &FlowState) -> Result<RadialProfile> {
    ensure_valid(state)?;
    let out: Vec<f64> = state
        .speed
        .values()
        .iter()
        .zip(state.h.values())
        .map(|(s, h)| s - state.eta * h)
        .collect();
    state.h.with_values(out, Parity::Even)
}

/// Scalar `λ` placing `λ h` on the constraint `∫(λh)^p/φ = ∫1/φ`, or `∫ log(λh)/φ = 0` for `p = 0`.
pub fn rescale_factor(h: &RadialProfile, params: &FlowParams) -> Result<f64> {
    h.check_grid(params.phi.grid())?;
    if h.values().iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("rescaling requires h > 0".into()));
    }
    let w = h.grid().weights();
    let phi = params.phi.values();
    let inv_phi = params.inv_phi_integral();
    if params.p == 0.0 {
        let log_mean: f64 = (0..h.len()).map(|j| w[j] * h.values()[j].ln() / phi[j]).sum::<f64>() / inv_phi;
        Ok((-log_mean).exp())
    } else {
        let moment: f64 = (0..h.len())
            .map(|j| w[j] * pow_real(h.values()[j], params.p) / phi[j])
            .sum();
        Ok((inv_phi / moment).powf(1.0 / params.p))
    }
}

/// The rescaled support function of the normalized body `M̃_t`.
pub fn rescale_snapshot(state: &FlowState, params: &FlowParams) -> Result<RadialProfile> {
    let lambda = rescale_factor(&state.h, params)?;
    Ok(state.h.map(|v| lambda * v))
}

/// Largest stable step: `cfl·Δθ² / max_j max(Θ ∂σ_k/∂ζ₁, Θ |∂σ_k/∂ζ₂| |tan θ| Δθ, floor)`,
/// capped so that `time + dt ≤ t_max`.
pub fn stable_dt(state: &FlowState, params: &FlowParams) -> f64 {
    let g = state.h.grid();
    let dtheta = g.dtheta();
    let exponent = 2.0 - params.p;
    let mut denom = STABILITY_FLOOR;
    for j in 0..state.h.len() {
        let theta_coef = params.phi.values()[j] * pow_real(state.h.values()[j], exponent);
        let (a, b) = sigma_k_partials(
            state.radii.zeta1.values()[j],
            state.radii.zeta2.values()[j],
            params.n,
            params.k,
        );
        let meridional = (theta_coef * a).abs();
        let azimuthal = (theta_coef * b).abs() * g.tan()[j].abs() * dtheta;
        denom = denom.max(meridional).max(azimuthal);
    }
    let dt = params.cfl * dtheta * dtheta / denom;
    dt.min((params.t_max - state.time).max(0.0))
}

/// Reusable RK4 buffers.
pub(crate) struct Stepper<'a> {
    params: &'a FlowParams,
    work: RadiiWork,
    inv_phi_integral: f64,
    exponent: f64,
    normalized: bool,
    stages: [Vec<f64>; 4],
    trial: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(params: &'a FlowParams) -> Self {
        let len = params.phi.len();
        Self {
            params,
            work: RadiiWork::new(len),
            inv_phi_integral: params.inv_phi_integral(),
            exponent: 2.0 - params.p,
            normalized: params.normalization == Normalization::NormalizedPde,
            stages: [vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]],
            trial: vec![0.0; len],
        }
    }

    fn rhs(&mut self, h: &[f64], stage: usize) {
        let g = self.params.phi.grid();
        let (n, k) = (self.params.n, self.params.k);
        self.work.compute(h, g.dtheta(), g.tan(), n, k);
        let phi = self.params.phi.values();
        let w = g.weights();
        let out = &mut self.stages[stage];
        let mut mixed = 0.0;
        for j in 0..h.len() {
            let sigma = self.work.sigma[j];
            out[j] = phi[j] * pow_real(h[j], self.exponent) * sigma;
            mixed += w[j] * h[j] * sigma;
        }
        if self.normalized {
            let eta = mixed / self.inv_phi_integral;
            for j in 0..h.len() {
                out[j] -= eta * h[j];
            }
        }
    }

    /// One classical RK4 step of size `dt` from `h`.
    pub fn advance(&mut self, h: &[f64], dt: f64) -> Vec<f64> {
        let len = h.len();
        self.rhs(h, 0);
        for j in 0..len {
            self.trial[j] = h[j] + 0.5 * dt * self.stages[0][j];
        }
        let trial = std::mem::take(&mut self.trial);
        self.rhs(&trial, 1);
        let mut trial = trial;
        for j in 0..len {
            trial[j] = h[j] + 0.5 * dt * self.stages[1][j];
        }
        self.rhs(&trial, 2);
        for j in 0..len {
            trial[j] = h[j] + dt * self.stages[2][j];
        }
        self.rhs(&trial, 3);
        self.trial = trial;
        let [k1, k2, k3, k4] = &self.stages;
        (0..len)
            .map(|j| h[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
            .collect()
    }

    /// Advance a state, applying projection or per-step rescaling as configured.
    pub fn step(&mut self, state: &FlowState, dt: f64) -> std::result::Result<FlowState, Breakdown> {
        let time = state.time + dt;
        let fail = |reason| Breakdown { reason, time };
        let next = self.advance(state.h.values(), dt);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(fail(BreakdownReason::NonFinite));
        }
        if next.iter().any(|v| *v <= 0.0) {
            return Err(fail(BreakdownReason::NegativeH));
        }
        let mut h = state
            .h
            .with_values(next, Parity::Even)
            .map_err(|_| fail(BreakdownReason::NonFinite))?;
        if self.params.renorm_projection || self.params.normalization == Normalization::RescaleEachStep {
            let lambda = rescale_factor(&h, self.params).map_err(|_| fail(BreakdownReason::NegativeH))?;
            h = h.map(|v| lambda * v);
        }
        let next = FlowState::new(h, time, self.params).map_err(|_| fail(BreakdownReason::NonFinite))?;
        match next.breakdown {
            Some(reason) => Err(fail(reason)),
            None => Ok(next),
        }
    }
}

/// One RK4 step. On failure the input state remains the state of record.
pub fn step(state: &FlowState, params: &FlowParams, dt: f64) -> std::result::Result<FlowState, Breakdown> {
    assert!(dt > 0.0, "step size must be positive");
    Stepper::new(params).step(state, dt)
}

/// Residuals tested by the convergence criterion: the soliton residual and
/// `max|rhs_normalized| / max h`, both on the rescaled snapshot.
pub fn convergence_residuals(state: &FlowState, params: &FlowParams) -> Result<(f64, f64)> {
    let rescaled;
    let probe = if params.normalization == Normalization::NormalizedPde {
        state
    } else {
        rescaled = FlowState::new(rescale_snapshot(state, params)?, state.time, params)?;
        &rescaled
    };
    let residual = functionals::soliton_residual_of(probe, params)?;
    let drift = rhs_normalized(probe)?;
    let drift = drift.values().iter().fold(0.0f64, |m, v| m.max(v.abs())) / probe.h.max();
    Ok((residual, drift))
}

/// Result of [`run_flow`].
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub samples: Vec<MonitorRecord>,
    pub status: TerminalStatus,
    pub final_state: FlowState,
    pub steps: usize,
}

impl TrajectoryRecord {
    /// Converged soliton constant: mean of `φ h^{1−p} σ_k` on the rescaled final state.
    pub fn soliton_constant(&self, params: &FlowParams) -> Result<f64> {
        let h = rescale_snapshot(&self.final_state, params)?;
        let state = FlowState::new(h, self.final_state.time, params)?;
        functionals::soliton_mean(&state, params)
    }
}

/// Integrate from `initial` until the convergence criterion holds, `t_max` is
/// reached, or the flow breaks down.
///
/// In the normalized modes the initial data are first rescaled onto the
/// constraint `∫h^p/φ = ∫1/φ`.
pub fn run_flow(initial: &RadialProfile, params: &FlowParams) -> Result<TrajectoryRecord> {
    params.validate()?;
    require_even(initial)?;
    initial.check_grid(params.phi.grid())?;
    if initial.values().iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(param("initial support function must be positive and finite"));
    }
    let h0 = match params.normalization {
        Normalization::Unnormalized => initial.clone(),
        _ => {
            let lambda = rescale_factor(initial, params)?;
            initial.map(|v| lambda * v)
        }
    };
    let mut state = FlowState::new(h0, 0.0, params)?;
    let mut samples = vec![functionals::monitor(&state, params)];
    let mut stepper = Stepper::new(params);
    let mut steps = 0usize;
    let mut below = 0usize;

    let status = loop {
        if let Some(reason) = sigma_breakdown(&state, params) {
            break TerminalStatus::Breakdown(Breakdown { reason, time: state.time });
        }
        if params.k < params.n {
            if state.radii.min_zeta1 < params.breakdown_zeta_tol {
                below += 1;
                if below >= CONVEXITY_LOSS_STEPS {
                    break TerminalStatus::Breakdown(Breakdown {
                        reason: BreakdownReason::LossOfConvexity,
                        time: state.time,
                    });
                }
            } else {
                below = 0;
            }
        }
        if steps % params.check_stride == 0 && below == 0 {
            let (residual, drift) = convergence_residuals(&state, params)?;
            if residual <= params.residual_tol && drift <= params.residual_tol {
                break TerminalStatus::Converged;
            }
        }
        if state.time >= params.t_max {
            break TerminalStatus::TMaxReached;
        }
        let dt = stable_dt(&state, params);
        if !(dt > 0.0) {
            break TerminalStatus::TMaxReached;
        }
        match stepper.step(&state, dt) {
            Ok(next) => state = next,
            Err(b) => break TerminalStatus::Breakdown(b),
        }
        steps += 1;
        if steps % params.sample_stride == 0 {
            samples.push(functionals::monitor(&state, params));
        }
    };
    if samples.last().map(|s| s.time < state.time).unwrap_or(true) {
        samples.push(functionals::monitor(&state, params));
    }
    Ok(TrajectoryRecord {
        samples,
        status,
        final_state: state,
        steps,
    })
}

fn sigma_breakdown(state: &FlowState, params: &FlowParams) -> Option<BreakdownReason> {
    if params.k == params.n && state.radii.sigma_k.min() < 0.0 {
        Some(BreakdownReason::NegativeSigmaK)
    } else {
        None
    }
}
