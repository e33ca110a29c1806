//! Anisotropies, initial bodies and the named scenarios built from them.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::flow::{FlowParams, Normalization};
use crate::functionals::convexity_condition;
use crate::grid::LatitudeGrid;
use crate::profile::{Parity, RadialProfile};

/// Panels of the composite Simpson rule used for the counterexample's initial profile.
pub const SIMPSON_PANELS: usize = 10_000;

/// Even bump vanishing on `[−π/4, π/4]`, positive on the rest of `[−π/2, π/2]`
/// and flat to all orders at `|θ| = π/4`: `exp(−1/(θ² − (π/4)²))`.
pub fn bump_r(theta: f64) -> f64 {
    let gap = theta * theta - FRAC_PI_4 * FRAC_PI_4;
    if gap <= 0.0 {
        0.0
    } else {
        (-1.0 / gap).exp()
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = panels + panels % 2;
    let step = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let x = a + i as f64 * step;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    acc * step / 3.0
}

/// `h(θ) = sin θ ∫_0^θ r cos + cos θ ∫_θ^{π/2} r sin` evaluated at `|θ|`; it satisfies
/// `h'' + h = r`, so `ζ₁` vanishes on the flat cap `[−π/4, π/4]`.
pub fn counterexample_h0_at(theta: f64) -> f64 {
    let t = theta.abs();
    let lower = t.max(FRAC_PI_4);
    let first = simpson(|a| bump_r(a) * a.cos(), FRAC_PI_4, t, SIMPSON_PANELS);
    let second = simpson(|a| bump_r(a) * a.sin(), lower, FRAC_PI_2, SIMPSON_PANELS);
    t.sin() * first + t.cos() * second
}

pub fn counterexample_h0(grid: &Arc<LatitudeGrid>) -> RadialProfile {
    RadialProfile::from_fn(grid, Parity::Even, counterexample_h0_at)
}

/// `φ = (cos²θ + ½)^m`, whose `m`-th root fails to be spherically convex at the equator.
pub fn counterexample_phi(grid: &Arc<LatitudeGrid>, m: f64) -> Result<RadialProfile> {
    if !(m > 0.0) {
        return Err(param(format!("counterexample exponent m = p + k − 1 must be positive, got {m}")));
    }
    Ok(RadialProfile::from_fn(grid, Parity::Even, |t| {
        (t.cos().powi(2) + 0.5).powf(m)
    }))
}

/// Support function of the spheroid with equatorial semi-axis `a` and polar semi-axis `c`.
pub fn spheroid_profile(grid: &Arc<LatitudeGrid>, a: f64, c: f64) -> Result<RadialProfile> {
    if !(a > 0.0 && c > 0.0) {
        return Err(param("spheroid semi-axes must be positive"));
    }
    Ok(RadialProfile::from_fn(grid, Parity::Even, |t| {
        (a * a * t.cos().powi(2) + c * c * t.sin().powi(2)).sqrt()
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiKind {
    Constant,
    /// `(1 + ε sin²θ)^m`.
    Sin2Power { eps: f64, m: f64 },
    /// `1 + δ sin θ`; not symmetric under `θ ↦ −θ`.
    Tilted { delta: f64 },
    /// `(cos²θ + ½)^m`.
    Counterexample { m: f64 },
}

impl PhiKind {
    pub fn name(&self) -> &'static str {
        match self {
            PhiKind::Constant => "constant",
            PhiKind::Sin2Power { .. } => "sin2_power",
            PhiKind::Tilted { .. } => "tilted",
            PhiKind::Counterexample { .. } => "counterexample",
        }
    }
}

pub fn phi_family(grid: &Arc<LatitudeGrid>, kind: PhiKind) -> Result<RadialProfile> {
    match kind {
        PhiKind::Constant => Ok(RadialProfile::constant(grid, 1.0)),
        PhiKind::Sin2Power { eps, m } => {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(param(format!("sin2_power needs ε in (0, 1), got {eps}")));
            }
            if !(m > 0.0) {
                return Err(param(format!("sin2_power needs m > 0, got {m}")));
            }
            Ok(RadialProfile::from_fn(grid, Parity::Even, |t| {
                (1.0 + eps * t.sin().powi(2)).powf(m)
            }))
        }
        PhiKind::Tilted { delta } => {
            if !(delta > -1.0 && delta < 1.0) {
                return Err(param(format!("tilted needs δ in (−1, 1), got {delta}")));
            }
            Ok(RadialProfile::from_fn(grid, Parity::Even, |t| 1.0 + delta * t.sin()))
        }
        PhiKind::Counterexample { m } => counterexample_phi(grid, m),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialKind {
    Sphere { radius: f64 },
    Spheroid { a: f64, c: f64 },
    Counterexample,
}

impl InitialKind {
    pub fn name(&self) -> &'static str {
        match self {
            InitialKind::Sphere { .. } => "sphere",
            InitialKind::Spheroid { .. } => "spheroid",
            InitialKind::Counterexample => "counterexample",
        }
    }

    pub fn build(&self, grid: &Arc<LatitudeGrid>) -> Result<RadialProfile> {
        match *self {
            InitialKind::Sphere { radius } => {
                if !(radius > 0.0) {
                    return Err(param("sphere radius must be positive"));
                }
                Ok(RadialProfile::constant(grid, radius))
            }
            InitialKind::Spheroid { a, c } => spheroid_profile(grid, a, c),
            InitialKind::Counterexample => Ok(counterexample_h0(grid)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedOutcome {
    Converge,
    Breakdown,
}

impl ExpectedOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            ExpectedOutcome::Converge => "converge",
            ExpectedOutcome::Breakdown => "breakdown",
        }
    }
}

/// Flow-independent description of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDef {
    pub name: String,
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub phi: PhiKind,
    pub initial: InitialKind,
    pub normalization: Normalization,
    pub t_max: f64,
    pub expected: ExpectedOutcome,
    pub notes: String,
}

/// A fully built scenario: flow parameters plus initial data.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub name: String,
    pub params: FlowParams,
    pub initial: RadialProfile,
    pub expected_outcome: ExpectedOutcome,
    pub notes: String,
}

impl ScenarioDef {
    /// `p + k − 1`, the exponent of the convexity condition on `φ`.
    pub fn convexity_exponent(&self) -> f64 {
        self.p + self.k as f64 - 1.0
    }

    /// Parameter checks that need no grid.
    pub fn check(&self) -> Result<()> {
        if self.n < 2 {
            return Err(param("n must be at least 2"));
        }
        if self.k < 1 || self.k > self.n {
            return Err(param("k must satisfy 1 ≤ k ≤ n"));
        }
        let uses_counterexample =
            matches!(self.phi, PhiKind::Counterexample { .. }) || self.initial == InitialKind::Counterexample;
        if uses_counterexample && self.k >= self.n {
            return Err(param(
                "the counterexample construction requires k < n (it fails for k = n because σ_n vanishes on the flat cap)",
            ));
        }
        if matches!(self.phi, PhiKind::Tilted { .. }) && self.k < self.n {
            return Err(param("tilted phi is not symmetric under θ ↦ −θ and is only supported for k = n"));
        }
        Ok(())
    }

    pub fn build(&self, num_points: usize) -> Result<ScenarioSpec> {
        self.check()?;
        let grid = Arc::new(LatitudeGrid::new(self.n, num_points)?);
        let phi = phi_family(&grid, self.phi)?;
        let mut params = FlowParams::new(phi, self.k, self.p)?;
        params.normalization = self.normalization;
        params.t_max = self.t_max;
        let initial = self.initial.build(&grid)?;
        let spec = ScenarioSpec {
            name: self.name.clone(),
            params,
            initial,
            expected_outcome: self.expected,
            notes: self.notes.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl ScenarioSpec {
    /// Preconditions of a flow run: positivity, parity, and for converging runs with
    /// `k < n` the `(p+k−1)`-convexity of `φ`.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.initial.check_grid(self.params.phi.grid())?;
        if self.initial.parity() != Parity::Even {
            return Err(param("initial data must be even across the poles"));
        }
        if self.initial.values().iter().any(|v| !(*v > 0.0)) {
            return Err(param("initial support function must be positive"));
        }
        if self.expected_outcome == ExpectedOutcome::Converge && self.params.k < self.params.n {
            let m = self.params.p + self.params.k as f64 - 1.0;
            let rep = convexity_condition(&self.params.phi, m)?;
            if !rep.ok {
                return Err(Error::Parameter(format!(
                    "phi is not ({m})-convex (min eigenvalue {:.6} at θ = {:.4}); convergence is not expected",
                    rep.min_eig, rep.theta_at_min
                )));
            }
        }
        Ok(())
    }
}

pub const SCENARIO_NAMES: [&str; 6] = [
    "round_sphere",
    "theorem2",
    "theorem1",
    "theorem1_oblate",
    "theorem1a",
    "counterexample",
];

/// Named scenario presets.
pub fn preset(name: &str) -> Option<ScenarioDef> {
    let def = |n, k, p, phi, initial, t_max, expected, notes: &str| ScenarioDef {
        name: name.to_string(),
        n,
        k,
        p,
        phi,
        initial,
        normalization: Normalization::NormalizedPde,
        t_max,
        expected,
        notes: notes.to_string(),
    };
    let spheroid = |c| InitialKind::Spheroid { a: 1.0, c };
    use ExpectedOutcome::*;
    Some(match name {
        "round_sphere" => def(
            2,
            1,
            3.0,
            PhiKind::Constant,
            InitialKind::Sphere { radius: 1.0 },
            1.0,
            Converge,
            "unit sphere: fixed point of the normalized flow",
        ),
        "theorem2" => def(
            2,
            1,
            3.0,
            PhiKind::Constant,
            spheroid(1.3),
            50.0,
            Converge,
            "phi = 1, p > 2: converges to the round sphere",
        ),
        "theorem1" => def(
            3,
            2,
            4.0,
            PhiKind::Sin2Power { eps: 0.2, m: 5.0 },
            spheroid(1.3),
            50.0,
            Converge,
            "k < n, p >= k + 1, (p+k-1)-convex phi: converges to a soliton",
        ),
        "theorem1_oblate" => def(
            3,
            2,
            4.0,
            PhiKind::Sin2Power { eps: 0.2, m: 5.0 },
            spheroid(0.8),
            50.0,
            Converge,
            "same as theorem1 from an oblate body; the limit must agree",
        ),
        "theorem1a" => def(
            2,
            2,
            4.0,
            PhiKind::Tilted { delta: 0.3 },
            spheroid(1.3),
            50.0,
            Converge,
            "k = n, p >= n + 1, phi not origin-symmetric: converges to a soliton",
        ),
        "counterexample" => def(
            2,
            1,
            3.0,
            PhiKind::Counterexample { m: 3.0 },
            InitialKind::Counterexample,
            1.0,
            Breakdown,
            "phi^(1/(p+k-1)) not spherically convex at the equator: zeta1 turns negative",
        ),
        _ => return None,
    })
}
