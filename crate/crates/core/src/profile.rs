//! Latitude profiles and fourth-order θ-differentiation with pole ghost points.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::LatitudeGrid;

/// Reflection symmetry of a profile through the poles.
///
/// Every smooth rotationally symmetric function on the sphere is `Even` across
/// both poles; its meridional derivative is `Odd`. `None` marks data whose pole
/// behaviour is unknown; such a profile cannot be differentiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    fn sign(self) -> Result<f64> {
        match self {
            Parity::Even => Ok(1.0),
            Parity::Odd => Ok(-1.0),
            Parity::None => Err(Error::UndefinedParity),
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
            Parity::None => Parity::None,
        }
    }
}

/// Values of a rotationally symmetric field on a [`LatitudeGrid`].
#[derive(Debug, Clone)]
pub struct RadialProfile {
    grid: Arc<LatitudeGrid>,
    values: Vec<f64>,
    parity: Parity,
}

impl PartialEq for RadialProfile {
    fn eq(&self, other: &Self) -> bool {
        *self.grid == *other.grid && self.parity == other.parity && self.values == other.values
    }
}

impl RadialProfile {
    pub fn new(grid: Arc<LatitudeGrid>, values: Vec<f64>, parity: Parity) -> Result<Self> {
        if values.len() != grid.num_points() {
            return Err(Error::Length {
                expected: grid.num_points(),
                found: values.len(),
            });
        }
        Ok(Self {
            grid,
            values,
            parity,
        })
    }

    /// Sample `f(θ)` at every node.
    pub fn from_fn(grid: &Arc<LatitudeGrid>, parity: Parity, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.theta().iter().map(|&t| f(t)).collect();
        Self {
            grid: Arc::clone(grid),
            values,
            parity,
        }
    }

    pub fn constant(grid: &Arc<LatitudeGrid>, c: f64) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: vec![c; grid.num_points()],
            parity: Parity::Even,
        }
    }

    pub fn grid(&self) -> &Arc<LatitudeGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// A profile on the same grid with new values.
    pub fn with_values(&self, values: Vec<f64>, parity: Parity) -> Result<Self> {
        Self::new(Arc::clone(&self.grid), values, parity)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
            parity: self.parity,
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest violation of `f(−θ) = f(θ)`.
    pub fn equator_asymmetry(&self) -> f64 {
        (0..self.values.len())
            .map(|j| (self.values[j] - self.values[self.grid.mirror(j)]).abs())
            .fold(0.0, f64::max)
    }

    /// Largest violation of `f(−θ) = −f(θ)`.
    pub fn equator_antisymmetry(&self) -> f64 {
        (0..self.values.len())
            .map(|j| (self.values[j] + self.values[self.grid.mirror(j)]).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_equator_symmetric(&self, tol: f64) -> bool {
        self.equator_asymmetry() <= tol
    }

    pub(crate) fn check_grid(&self, grid: &LatitudeGrid) -> Result<()> {
        if *self.grid != *grid {
            return Err(Error::GridMismatch {
                expected_n: grid.n(),
                expected_points: grid.num_points(),
                found_n: self.grid.n(),
                found_points: self.grid.num_points(),
            });
        }
        Ok(())
    }

    /// Value interpolated to the equator (fourth order for symmetric fields).
    pub fn at_equator(&self) -> f64 {
        self.grid.value_at_equator(&self.values)
    }
}

/// Fourth-order first θ-derivative. Output parity is flipped.
pub fn d_theta(f: &RadialProfile) -> Result<RadialProfile> {
    let sign = f.parity.sign()?;
    let mut out = vec![0.0; f.len()];
    d1_into(&f.values, sign, f.grid.dtheta(), &mut out);
    f.with_values(out, f.parity.flip())
}

/// Fourth-order second θ-derivative. Output parity is preserved.
pub fn d2_theta(f: &RadialProfile) -> Result<RadialProfile> {
    let sign = f.parity.sign()?;
    let mut out = vec![0.0; f.len()];
    d2_into(&f.values, sign, f.grid.dtheta(), &mut out);
    f.with_values(out, f.parity)
}

#[inline]
fn ghost(v: &[f64], i: isize, sign: f64) -> f64 {
    let n = v.len() as isize;
    if i < 0 {
        sign * v[(-1 - i) as usize]
    } else if i >= n {
        sign * v[(2 * n - 1 - i) as usize]
    } else {
        v[i as usize]
    }
}

/// `(f₋₂ − 8f₋₁ + 8f₊₁ − f₊₂) / 12Δ`, reflecting through the poles with `sign`.
pub(crate) fn d1_into(v: &[f64], sign: f64, dtheta: f64, out: &mut [f64]) {
    let n = v.len();
    let scale = 1.0 / (12.0 * dtheta);
    let edge = |j: usize| {
        let i = j as isize;
        (ghost(v, i - 2, sign) - 8.0 * ghost(v, i - 1, sign) + 8.0 * ghost(v, i + 1, sign)
            - ghost(v, i + 2, sign))
            * scale
    };
    for j in [0, 1, n - 2, n - 1] {
        out[j] = edge(j);
    }
    for j in 2..n - 2 {
        out[j] = (v[j - 2] - 8.0 * v[j - 1] + 8.0 * v[j + 1] - v[j + 2]) * scale;
    }
}

/// `(−f₋₂ + 16f₋₁ − 30f₀ + 16f₊₁ − f₊₂) / 12Δ²`, reflecting through the poles with `sign`.
pub(crate) fn d2_into(v: &[f64], sign: f64, dtheta: f64, out: &mut [f64]) {
    let n = v.len();
    let scale = 1.0 / (12.0 * dtheta * dtheta);
    let edge = |j: usize| {
        let i = j as isize;
        (-ghost(v, i - 2, sign) + 16.0 * ghost(v, i - 1, sign) - 30.0 * v[j]
            + 16.0 * ghost(v, i + 1, sign)
            - ghost(v, i + 2, sign))
            * scale
    };
    for j in [0, 1, n - 2, n - 1] {
        out[j] = edge(j);
    }
    for j in 2..n - 2 {
        out[j] = (-v[j - 2] + 16.0 * v[j - 1] - 30.0 * v[j] + 16.0 * v[j + 1] - v[j + 2]) * scale;
    }
}
