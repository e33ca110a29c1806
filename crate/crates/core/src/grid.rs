//! Cell-centred latitude grid on the unit sphere `Sⁿ` and its surface quadrature.
//!
//! Nodes sit at `θ_j = −π/2 + (j + ½)·Δθ`, so neither pole is a node and `tan θ`
//! stays finite everywhere. Quadrature weights carry the full measure: for a
//! rotationally symmetric `f`,
//!
//! ```text
//! ∫_{Sⁿ} f dx = ω_{n−1} ∫ f(θ) cosⁿ⁻¹θ dθ ≈ Σ_j weights[j] · f(θ_j)
//! ```
//!
//! The weights are the Fejér-type rule for the weight function `cosⁿ⁻¹θ` on
//! these nodes: they integrate every cosine mode `cos(m(θ + π/2))`, `m < N`,
//! exactly. Smooth rotationally symmetric functions on the sphere are even
//! about both poles and therefore expand in exactly these modes, so the rule
//! is spectrally accurate for them.

use std::f64::consts::PI;

use crate::error::{param, Result};

pub const MIN_POINTS: usize = 16;

/// Surface area of the unit sphere `Sᵐ ⊂ ℝᵐ⁺¹`.
pub fn sphere_area(m: usize) -> f64 {
    // ω₀ = 2 (two points), ω₁ = 2π, ω_m = 2π/(m−1) · ω_{m−2}
    let mut a = if m % 2 == 0 { 2.0 } else { 2.0 * PI };
    let mut d = if m % 2 == 0 { 0 } else { 1 };
    while d < m {
        d += 2;
        a *= 2.0 * PI / (d as f64 - 1.0);
    }
    a
}

/// `∫_0^π cos(mψ) sin^q ψ dψ` for `m = 0..count`.
fn cosine_moments(q: usize, count: usize) -> Vec<f64> {
    let mut out = vec![0.0; count];
    if count == 0 {
        return out;
    }
    // Wallis integral for m = 0
    let mut wallis = if q % 2 == 0 { PI } else { 2.0 };
    let mut d = q % 2;
    while d < q {
        d += 2;
        wallis *= (d as f64 - 1.0) / d as f64;
    }
    out[0] = wallis;
    // odd m vanish by symmetry about ψ = π/2
    let qf = q as f64;
    let mut m = 0;
    while m + 2 < count {
        let mf = m as f64;
        out[m + 2] = out[m] * (mf - qf) / (mf + qf + 2.0);
        m += 2;
    }
    out
}

#[derive(Debug, Clone)]
pub struct LatitudeGrid {
    n: usize,
    num_points: usize,
    dtheta: f64,
    theta: Vec<f64>,
    sin: Vec<f64>,
    cos: Vec<f64>,
    tan: Vec<f64>,
    weights: Vec<f64>,
    omega_azimuth: f64,
}

impl PartialEq for LatitudeGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.num_points == other.num_points
    }
}

impl LatitudeGrid {
    /// Build the grid for `Sⁿ` with `num_points` latitude cells.
    pub fn new(n: usize, num_points: usize) -> Result<Self> {
        if n < 2 {
            return Err(param(format!("sphere dimension n must be at least 2, got {n}")));
        }
        if num_points < MIN_POINTS {
            return Err(param(format!(
                "num_points must be at least {MIN_POINTS}, got {num_points}"
            )));
        }
        let dtheta = PI / num_points as f64;
        let theta: Vec<f64> = (0..num_points)
            .map(|j| -PI / 2.0 + (j as f64 + 0.5) * dtheta)
            .collect();
        // enforce exact mirror symmetry of the nodes
        let mut theta = theta;
        for j in 0..num_points / 2 {
            let mirror = num_points - 1 - j;
            theta[mirror] = -theta[j];
        }
        if num_points % 2 == 1 {
            theta[num_points / 2] = 0.0;
        }
        let sin: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
        let cos: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
        let tan: Vec<f64> = theta.iter().map(|t| t.tan()).collect();

        let omega_azimuth = sphere_area(n - 1);
        let moments = cosine_moments(n - 1, num_points);
        let nf = num_points as f64;
        let mut weights: Vec<f64> = (0..num_points)
            .map(|j| {
                let psi = (j as f64 + 0.5) * dtheta;
                let mut acc = 0.5 * moments[0];
                for (m, mom) in moments.iter().enumerate().skip(2).step_by(2) {
                    if *mom != 0.0 {
                        acc += mom * (m as f64 * psi).cos();
                    }
                }
                omega_azimuth * 2.0 / nf * acc
            })
            .collect();
        // near the poles the exact weights fall below the rounding noise of the sum;
        // use the midpoint value there so every weight stays positive
        let noise = 64.0 * f64::EPSILON * omega_azimuth * moments[0] * 2.0 / nf;
        for (w, c) in weights.iter_mut().zip(&cos) {
            if *w < noise {
                *w = omega_azimuth * dtheta * c.powi(n as i32 - 1);
            }
        }
        for j in 0..num_points / 2 {
            let mirror = num_points - 1 - j;
            let avg = 0.5 * (weights[j] + weights[mirror]);
            weights[j] = avg;
            weights[mirror] = avg;
        }

        Ok(Self {
            n,
            num_points,
            dtheta,
            theta,
            sin,
            cos,
            tan,
            weights,
            omega_azimuth,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn sin(&self) -> &[f64] {
        &self.sin
    }

    pub fn cos(&self) -> &[f64] {
        &self.cos
    }

    pub fn tan(&self) -> &[f64] {
        &self.tan
    }

    /// Full-measure quadrature weights; they sum to `ω_n`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `ω_{n−1}`, the area of the azimuthal sphere `Sⁿ⁻¹`.
    pub fn omega_azimuth(&self) -> f64 {
        self.omega_azimuth
    }

    /// `ω_n`, the area of `Sⁿ`.
    pub fn total_measure(&self) -> f64 {
        sphere_area(self.n)
    }

    /// Index of the node reflected through the equator.
    pub fn mirror(&self, j: usize) -> usize {
        self.num_points - 1 - j
    }

    /// `Σ_j weights[j] · f_j` on raw node values.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.num_points);
        self.weights.iter().zip(values).map(|(w, f)| w * f).sum()
    }

    /// Tail integrals `∫_θ^{π/2} G(α) cosⁿ⁻¹α sin α dα` at every node, together with
    /// the full integral over `(−π/2, π/2)`.
    ///
    /// Each cell contributes `G_i` times the exact integral of `cosⁿ⁻¹α sin α` over the
    /// cell (the node's own cell only up to `θ_j`), so constant `G` is integrated exactly.
    /// The northern half is accumulated from the north pole and the southern half from
    /// the south pole, with `tail = full − ∫_{−π/2}^θ` there; this keeps the relative
    /// error small near both poles where the tails vanish like `cosⁿθ`. The tail at
    /// `θ = −π/2` is `full` itself.
    pub fn polar_tails(&self, g: &[f64]) -> (Vec<f64>, f64) {
        debug_assert_eq!(g.len(), self.num_points);
        let np = self.num_points;
        let nf = self.n as f64;
        let pow_n = |c: f64| c.powi(self.n as i32) / nf;
        // cosⁿ/n at the cell boundaries −π/2 + iΔθ
        let mut bound: Vec<f64> = (0..=np).map(|i| pow_n((i as f64 * self.dtheta).sin())).collect();
        bound[0] = 0.0;
        bound[np] = 0.0;
        for i in 0..=np / 2 {
            bound[np - i] = bound[i];
        }
        let half = np / 2;
        let mut tails = vec![0.0; np];
        let mut north = 0.0;
        for j in (half..np).rev() {
            tails[j] = north + g[j] * (pow_n(self.cos[j]) - bound[j + 1]);
            north += g[j] * (bound[j] - bound[j + 1]);
        }
        let mut south = 0.0;
        let mut from_south = vec![0.0; half];
        for j in 0..half {
            from_south[j] = south + g[j] * (bound[j] - pow_n(self.cos[j]));
            south += g[j] * (bound[j] - bound[j + 1]);
        }
        let full = north + south;
        for j in 0..half {
            tails[j] = full - from_south[j];
        }
        (tails, full)
    }

    /// Interpolate an equator-symmetric field to `θ = 0` from the four nodes nearest
    /// the equator (fourth order). With an odd node count the middle value is used.
    pub fn value_at_equator(&self, values: &[f64]) -> f64 {
        let n = self.num_points;
        if n % 2 == 1 {
            return values[n / 2];
        }
        let (a, b) = (n / 2 - 1, n / 2);
        let inner = values[a] + values[b];
        let outer = values[a - 1] + values[b + 1];
        (9.0 * inner - outer) / 16.0
    }
}
