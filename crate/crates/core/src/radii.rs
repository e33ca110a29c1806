//! Pointwise curvature algebra for rotationally symmetric support functions.
//!
//! For `h = h(θ)` the matrix `∇̄∇̄h + ḡh` has the meridional eigenvalue
//! `ζ₁ = h_θθ + h` and the azimuthal eigenvalue `ζ₂ = h − tan θ · h_θ` with
//! multiplicity `n − 1`. The normalized elementary symmetric function of that
//! multiset collapses to
//!
//! ```text
//! σ_k = (k/n)·ζ₁·ζ₂^{k−1} + ((n−k)/n)·ζ₂^k,     σ_k(1, …, 1) = 1.
//! ```

use crate::error::{param, Result};
use crate::flow::FlowParams;
use crate::profile::{d1_into, d2_into, d2_theta, d_theta, Parity, RadialProfile};

/// Normalized `σ_k` of `{ζ₁, ζ₂ (×(n−1))}`.
#[inline]
pub fn sigma_k_eval(zeta1: f64, zeta2: f64, n: usize, k: usize) -> f64 {
    debug_assert!(1 <= k && k <= n);
    let nf = n as f64;
    let kf = k as f64;
    let z2_km1 = zeta2.powi(k as i32 - 1);
    (kf / nf) * zeta1 * z2_km1 + ((nf - kf) / nf) * z2_km1 * zeta2
}

/// `(∂σ_k/∂ζ₁, ∂σ_k/∂ζ₂)` where the second entry sums over all `n − 1` azimuthal directions.
#[inline]
pub fn sigma_k_partials(zeta1: f64, zeta2: f64, n: usize, k: usize) -> (f64, f64) {
    debug_assert!(1 <= k && k <= n);
    let nf = n as f64;
    let kf = k as f64;
    let z2_km1 = zeta2.powi(k as i32 - 1);
    let d1 = (kf / nf) * z2_km1;
    let mixed = if k >= 2 {
        (kf - 1.0) * zeta1 * zeta2.powi(k as i32 - 2)
    } else {
        0.0
    };
    let d2 = (kf / nf) * (mixed + (nf - kf) * z2_km1);
    (d1, d2)
}

fn check_order(n: usize, k: usize) -> Result<()> {
    if k < 1 || k > n {
        return Err(param("k must satisfy 1 ≤ k ≤ n"));
    }
    Ok(())
}

/// Principal radii and `σ_k` of a support-function profile.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalRadii {
    pub zeta1: RadialProfile,
    pub zeta2: RadialProfile,
    pub sigma_k: RadialProfile,
    pub min_zeta1: f64,
    pub min_zeta2: f64,
}

/// Evaluate `ζ₁`, `ζ₂` and `σ_k` for `h`. Negative radii are returned as-is.
pub fn principal_radii(h: &RadialProfile, n: usize, k: usize) -> Result<PrincipalRadii> {
    check_order(n, k)?;
    if h.grid().n() != n {
        return Err(param(format!(
            "profile lives on S^{} but n = {n} was requested",
            h.grid().n()
        )));
    }
    let h_t = d_theta(h)?;
    let h_tt = d2_theta(h)?;
    let tan = h.grid().tan();
    let hv = h.values();
    let z1: Vec<f64> = hv.iter().zip(h_tt.values()).map(|(h, d2)| d2 + h).collect();
    let z2: Vec<f64> = hv
        .iter()
        .zip(h_t.values())
        .zip(tan)
        .map(|((h, d1), t)| h - t * d1)
        .collect();
    let sigma: Vec<f64> = z1
        .iter()
        .zip(&z2)
        .map(|(&a, &b)| sigma_k_eval(a, b, n, k))
        .collect();
    let min_zeta1 = z1.iter().copied().fold(f64::INFINITY, f64::min);
    let min_zeta2 = z2.iter().copied().fold(f64::INFINITY, f64::min);
    let parity = h.parity();
    Ok(PrincipalRadii {
        zeta1: h.with_values(z1, parity)?,
        zeta2: h.with_values(z2, parity)?,
        sigma_k: h.with_values(sigma, parity)?,
        min_zeta1,
        min_zeta2,
    })
}

/// Linearized operator `L F = Θ σ_k^{ab} ∇̄_a∇̄_b F` with `Θ = φh^{2−p}`, evaluated at `h`.
pub fn linearized_l(f: &RadialProfile, h: &RadialProfile, params: &FlowParams) -> Result<RadialProfile> {
    f.check_grid(h.grid())?;
    h.check_grid(params.phi.grid())?;
    let (n, k) = (params.n, params.k);
    let radii = principal_radii(h, n, k)?;
    let f_t = d_theta(f)?;
    let f_tt = d2_theta(f)?;
    let tan = h.grid().tan();
    let out: Vec<f64> = (0..h.len())
        .map(|j| {
            let theta_coef = params.phi.values()[j] * pow_real(h.values()[j], 2.0 - params.p);
            let (a, b) = sigma_k_partials(radii.zeta1.values()[j], radii.zeta2.values()[j], n, k);
            theta_coef * (a * f_tt.values()[j] - b * tan[j] * f_t.values()[j])
        })
        .collect();
    f.with_values(out, f.parity())
}

/// `x^e`, using repeated multiplication for small integral exponents.
#[inline]
pub(crate) fn pow_real(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e.fract() == 0.0 && e.abs() <= 32.0 {
        x.powi(e as i32)
    } else {
        x.powf(e)
    }
}

/// Scratch buffers for evaluating radii on raw slices inside the time stepper.
#[derive(Debug, Clone)]
pub(crate) struct RadiiWork {
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub zeta1: Vec<f64>,
    pub zeta2: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl RadiiWork {
    pub fn new(len: usize) -> Self {
        Self {
            d1: vec![0.0; len],
            d2: vec![0.0; len],
            zeta1: vec![0.0; len],
            zeta2: vec![0.0; len],
            sigma: vec![0.0; len],
        }
    }

    /// Fill every buffer from an even support profile `h`.
    pub fn compute(&mut self, h: &[f64], dtheta: f64, tan: &[f64], n: usize, k: usize) {
        d1_into(h, 1.0, dtheta, &mut self.d1);
        d2_into(h, 1.0, dtheta, &mut self.d2);
        for j in 0..h.len() {
            let z1 = self.d2[j] + h[j];
            let z2 = h[j] - tan[j] * self.d1[j];
            self.zeta1[j] = z1;
            self.zeta2[j] = z2;
            self.sigma[j] = sigma_k_eval(z1, z2, n, k);
        }
    }
}

/// Even pole parity for support-function-like inputs.
pub(crate) fn require_even(f: &RadialProfile) -> Result<()> {
    if f.parity() != Parity::Even {
        return Err(param("support-function profiles must be even across the poles"));
    }
    Ok(())
}
