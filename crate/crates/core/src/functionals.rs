//! Scalar functionals, monitors and identity checks evaluated on latitude profiles.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::flow::{FlowParams, FlowState};
use crate::grid::LatitudeGrid;
use crate::profile::{d2_theta, d_theta, Parity, RadialProfile};
use crate::radii::{pow_real, principal_radii, require_even};

/// One sampled snapshot of every tracked quantity. Field order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorRecord {
    pub time: f64,
    pub entropy_a: f64,
    pub eta: f64,
    /// `∫ h^p/φ`, or `∫ log h/φ` when `p = 0`.
    pub conservation: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub sigma_k_min: f64,
    pub sigma_k_max: f64,
    pub zeta1_min: f64,
    pub zeta2_min: f64,
    /// `max |h_θ| / h`.
    pub grad_log_h_max: f64,
    pub soliton_residual: f64,
    /// Range of `φ h^{1−p} σ_k`.
    pub speed_min: f64,
    pub speed_max: f64,
}

impl MonitorRecord {
    pub const COLUMNS: [&'static str; 14] = [
        "time",
        "entropy_a",
        "eta",
        "conservation",
        "h_min",
        "h_max",
        "sigma_k_min",
        "sigma_k_max",
        "zeta1_min",
        "zeta2_min",
        "grad_log_h_max",
        "soliton_residual",
        "speed_min",
        "speed_max",
    ];

    pub fn values(&self) -> [f64; 14] {
        [
            self.time,
            self.entropy_a,
            self.eta,
            self.conservation,
            self.h_min,
            self.h_max,
            self.sigma_k_min,
            self.sigma_k_max,
            self.zeta1_min,
            self.zeta2_min,
            self.grad_log_h_max,
            self.soliton_residual,
            self.speed_min,
            self.speed_max,
        ]
    }
}

fn require_positive(h: &RadialProfile) -> Result<()> {
    if h.values().iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("h must be strictly positive".into()));
    }
    Ok(())
}

/// `∫ h^p/φ` for `p ≠ 0`, `∫ log h/φ` for `p = 0`.
pub fn conservation(h: &RadialProfile, params: &FlowParams) -> Result<f64> {
    h.check_grid(params.phi.grid())?;
    let w = h.grid().weights();
    let phi = params.phi.values();
    let hv = h.values();
    if params.p == 0.0 {
        require_positive(h)?;
        Ok((0..hv.len()).map(|j| w[j] * hv[j].ln() / phi[j]).sum())
    } else {
        Ok((0..hv.len()).map(|j| w[j] * pow_real(hv[j], params.p) / phi[j]).sum())
    }
}

fn entropy_from(h: &RadialProfile, sigma: &[f64], params: &FlowParams) -> Result<f64> {
    let g = h.grid();
    let mixed: f64 = (0..h.len()).map(|j| g.weights()[j] * h.values()[j] * sigma[j]).sum();
    let kp1 = params.k as f64 + 1.0;
    let cons = conservation(h, params)?;
    if params.p == 0.0 {
        Ok((-kp1 / params.inv_phi_integral() * cons).exp() * mixed)
    } else {
        Ok(mixed * cons.powf(-kp1 / params.p))
    }
}

/// `A[h] = ∫ h σ_k · (∫ h^p/φ)^{−(k+1)/p}`, with the exponential log-mean form for `p = 0`.
pub fn entropy_a(h: &RadialProfile, params: &FlowParams) -> Result<f64> {
    h.check_grid(params.phi.grid())?;
    require_positive(h)?;
    let radii = principal_radii(h, params.n, params.k)?;
    entropy_from(h, radii.sigma_k.values(), params)
}

/// Measure-weighted mean of `s` and `max |s − mean| / mean`.
fn relative_spread(grid: &LatitudeGrid, s: &[f64]) -> Result<(f64, f64)> {
    let mean = grid.integrate_values(s) / grid.total_measure();
    if !(mean > 0.0) {
        return Err(Error::Domain(format!(
            "soliton constant must be positive, mean of φh^(1−p)σ_k is {mean}"
        )));
    }
    let spread = s.iter().fold(0.0f64, |m, v| m.max((v - mean).abs())) / mean;
    Ok((mean, spread))
}

fn soliton_field(h: &[f64], sigma: &[f64], phi: &[f64], p: f64) -> Vec<f64> {
    (0..h.len())
        .map(|j| phi[j] * pow_real(h[j], 1.0 - p) * sigma[j])
        .collect()
}

/// Relative deviation of `φ h^{1−p} σ_k` from its mean.
pub fn soliton_residual(h: &RadialProfile, params: &FlowParams) -> Result<f64> {
    h.check_grid(params.phi.grid())?;
    require_positive(h)?;
    let radii = principal_radii(h, params.n, params.k)?;
    let s = soliton_field(h.values(), radii.sigma_k.values(), params.phi.values(), params.p);
    Ok(relative_spread(h.grid(), &s)?.1)
}

pub(crate) fn soliton_residual_of(state: &FlowState, params: &FlowParams) -> Result<f64> {
    let s = soliton_field(
        state.h().values(),
        state.radii().sigma_k.values(),
        params.phi.values(),
        params.p,
    );
    Ok(relative_spread(state.h().grid(), &s)?.1)
}

pub(crate) fn soliton_mean(state: &FlowState, params: &FlowParams) -> Result<f64> {
    let s = soliton_field(
        state.h().values(),
        state.radii().sigma_k.values(),
        params.phi.values(),
        params.p,
    );
    Ok(relative_spread(state.h().grid(), &s)?.0)
}

/// `max |h_θ| / h`.
pub fn grad_log_h_max(h: &RadialProfile) -> Result<f64> {
    require_positive(h)?;
    let dh = d_theta(h)?;
    Ok(dh
        .values()
        .iter()
        .zip(h.values())
        .fold(0.0f64, |m, (d, v)| m.max((d / v).abs())))
}

/// `G(θ) − (n−k)·cos^{−n}θ·∫_θ^{π/2} cosⁿ⁻¹α sin α G(α) dα` and the tails it used.
fn tail_defect(grid: &LatitudeGrid, lead: &[f64], n: usize, k: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let (tails, full) = grid.polar_tails(lead);
    let nk = (n - k) as f64;
    let defect = (0..lead.len())
        .map(|j| lead[j] - nk * tails[j] / grid.cos()[j].powi(n as i32))
        .collect();
    (defect, tails, full)
}

/// Pointwise Firey defect of `1/φ` together with its tail integrals.
#[derive(Debug, Clone)]
pub struct FireyReport {
    /// `1/φ(θ) − (n−k)/cosⁿθ · ∫_θ^{π/2} cosⁿ⁻¹α sin α /φ(α) dα`.
    pub defect: RadialProfile,
    /// `∫_θ^{π/2} cosⁿ⁻¹α sin α /φ(α) dα` at each node.
    pub tail: Vec<f64>,
    /// Whether each tail is strictly positive.
    pub tail_positive: Vec<bool>,
    /// Tail at `θ = −π/2`: the full polar moment, zero when `1/φ` closes.
    pub closure: f64,
}

impl FireyReport {
    pub fn min_defect(&self) -> f64 {
        self.defect.min()
    }

    pub fn all_tails_positive(&self) -> bool {
        self.tail_positive.iter().all(|b| *b)
    }
}

/// Firey's pointwise conditions for `1/φ` to be the `σ_k` of a body of revolution.
pub fn firey_defect(phi: &RadialProfile, n: usize, k: usize) -> Result<FireyReport> {
    if phi.grid().n() != n {
        return Err(param("phi grid dimension does not match n"));
    }
    if k < 1 || k >= n {
        return Err(param("the Firey defect requires 1 ≤ k < n"));
    }
    if phi.values().iter().any(|v| !(*v > 0.0)) {
        return Err(param("phi must be positive"));
    }
    let lead: Vec<f64> = phi.values().iter().map(|v| 1.0 / v).collect();
    let (defect, tail, closure) = tail_defect(phi.grid(), &lead, n, k);
    let tail_positive = tail.iter().map(|t| *t > 0.0).collect();
    Ok(FireyReport {
        defect: phi.with_values(defect, Parity::Even)?,
        tail,
        tail_positive,
        closure,
    })
}

/// Polar component of `∫ x/φ(x) dx`; the others vanish by rotational symmetry.
pub fn closure_integral(phi: &RadialProfile, n: usize) -> Result<f64> {
    if phi.grid().n() != n {
        return Err(param("phi grid dimension does not match n"));
    }
    let g = phi.grid();
    Ok((0..phi.len())
        .map(|j| g.weights()[j] * g.sin()[j] / phi.values()[j])
        .sum())
}

/// `h^{p−1}/φ − (n−k)cos^{−n}θ ∫_θ^{π/2} cosⁿ⁻¹α sin α h^{p−1}/φ dα`; positive data stay
/// positive along the unnormalized flow when `p > 1`.
pub fn preserved_q(h: &RadialProfile, phi: &RadialProfile, params: &FlowParams) -> Result<RadialProfile> {
    h.check_grid(phi.grid())?;
    require_positive(h)?;
    if params.k >= params.n {
        return Err(param("the preserved quantity requires k < n"));
    }
    let lead: Vec<f64> = h
        .values()
        .iter()
        .zip(phi.values())
        .map(|(hv, f)| pow_real(*hv, params.p - 1.0) / f)
        .collect();
    let (q, _, _) = tail_defect(h.grid(), &lead, params.n, params.k);
    h.with_values(q, Parity::Even)
}

/// Smallest eigenvalue of `∇̄∇̄ f + ḡ f` with `f = φ^{1/m}` over the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityReport {
    pub min_eig: f64,
    pub ok: bool,
    /// Latitude at which the minimum occurs.
    pub theta_at_min: f64,
}

/// `m`-convexity of `φ`: positive definiteness of `∇̄∇̄ φ^{1/m} + ḡ φ^{1/m}`.
pub fn convexity_condition(phi: &RadialProfile, m: f64) -> Result<ConvexityReport> {
    if m == 0.0 || !m.is_finite() {
        return Err(param("convexity exponent m must be finite and nonzero"));
    }
    if phi.values().iter().any(|v| !(*v > 0.0)) {
        return Err(param("phi must be positive"));
    }
    let f = phi.map(|v| v.powf(1.0 / m));
    let f_t = d_theta(&f)?;
    let f_tt = d2_theta(&f)?;
    let g = phi.grid();
    let mut best = (f64::INFINITY, 0.0);
    for j in 0..f.len() {
        let meridional = f_tt.values()[j] + f.values()[j];
        let azimuthal = f.values()[j] - g.tan()[j] * f_t.values()[j];
        let e = meridional.min(azimuthal);
        if e < best.0 {
            best = (e, g.theta()[j]);
        }
    }
    Ok(ConvexityReport {
        min_eig: best.0,
        ok: best.0 > 0.0,
        theta_at_min: best.1,
    })
}

/// Bound on `|ζ₁|, |ζ₁'|, |ζ₁''|` near the equator for the rate formula to apply.
/// Each bound is widened by the rounding floor of its stencil, `64 ε max|h| / Δθ^{2+j}`.
pub const FLAT_CAP_TOL: f64 = 1e-8;

/// `∂_t ζ₁` at the equator when `ζ₁` vanishes to second order there:
/// `σ_k h^{2−p} (φ_θθ + (p+k−1) φ)` at `θ = 0`.
pub fn counterexample_rate(h: &RadialProfile, phi: &RadialProfile, params: &FlowParams) -> Result<f64> {
    h.check_grid(phi.grid())?;
    require_even(h)?;
    let radii = principal_radii(h, params.n, params.k)?;
    let z1 = &radii.zeta1;
    let z1_t = d_theta(z1)?;
    let z1_tt = d2_theta(z1)?;
    let np = h.len();
    let centre = [np / 2 - 1, np / 2];
    let dtheta = h.grid().dtheta();
    let floor = 64.0 * f64::EPSILON * h.max().abs();
    let tol = |order: i32| FLAT_CAP_TOL + floor / dtheta.powi(2 + order);
    let worst = centre
        .iter()
        .map(|&j| {
            (z1.values()[j].abs() / tol(0))
                .max(z1_t.values()[j].abs() / tol(1))
                .max(z1_tt.values()[j].abs() / tol(2))
        })
        .fold(0.0, f64::max);
    if worst > 1.0 {
        return Err(Error::Domain(format!(
            "ζ₁ does not vanish to second order at the equator ({worst:.2} times the tolerance)"
        )));
    }
    let m = params.p + params.k as f64 - 1.0;
    let phi_tt = d2_theta(phi)?;
    let sigma0 = radii.sigma_k.at_equator();
    let h0 = h.at_equator();
    let phi0 = phi.at_equator();
    let phi_tt0 = phi_tt.at_equator();
    Ok(sigma0 * pow_real(h0, 2.0 - params.p) * (phi_tt0 + m * phi0))
}

/// Snapshot of every monitor at `state`.
pub fn monitor(state: &FlowState, params: &FlowParams) -> MonitorRecord {
    let h = state.h();
    let radii = state.radii();
    let nan = f64::NAN;
    let entropy = entropy_from(h, radii.sigma_k.values(), params).unwrap_or(nan);
    let cons = conservation(h, params).unwrap_or(nan);
    let speed: Vec<f64> = state
        .speed()
        .values()
        .iter()
        .zip(h.values())
        .map(|(s, hv)| s / hv)
        .collect();
    let residual = relative_spread(h.grid(), &speed).map(|r| r.1).unwrap_or(nan);
    MonitorRecord {
        time: state.time(),
        entropy_a: entropy,
        eta: state.eta(),
        conservation: cons,
        h_min: h.min(),
        h_max: h.max(),
        sigma_k_min: radii.sigma_k.min(),
        sigma_k_max: radii.sigma_k.max(),
        zeta1_min: radii.min_zeta1,
        zeta2_min: radii.min_zeta2,
        grad_log_h_max: grad_log_h_max(h).unwrap_or(nan),
        soliton_residual: residual,
        speed_min: speed.iter().copied().fold(f64::INFINITY, f64::min),
        speed_max: speed.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}
