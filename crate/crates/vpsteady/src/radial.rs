//! Radial grid, quadrature, norms, and projection onto the admissible set D.
//!
//! D is the set of nonnegative, radially non-increasing densities on the unit
//! ball with total mass 1. Discretely a density lives on the node set of a
//! [`RadialGrid`] and integrals over the ball are `4π ∫₀¹ r² g(r) dr`
//! evaluated with the grid's quadrature weights.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Uniform node grid on [0,1] with composite-trapezoid quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialGrid {
    /// `n + 1` equally spaced nodes on [0,1] with trapezoid weights
    /// `(h/2, h, ..., h, h/2)`. Requires `n >= 2`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 cells, got {n}"
            )));
        }
        let h = 1.0 / n as f64;
        let nodes: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let mut weights = vec![h; n + 1];
        weights[0] = 0.5 * h;
        weights[n] = 0.5 * h;
        Ok(RadialGrid { nodes, weights })
    }

    /// Number of cells (nodes.len() - 1).
    pub fn n(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Node spacing h = 1/n.
    pub fn spacing(&self) -> f64 {
        1.0 / self.n() as f64
    }

    /// The discretization-error tolerance `10 h²` used by the certificate
    /// checks; matches the trapezoid error order so refinement never turns a
    /// true statement into a failing one.
    pub fn h2_tol(&self) -> f64 {
        let h = self.spacing();
        10.0 * h * h
    }

    /// `∫₀¹ g(r) dr` by the grid weights (Kahan-compensated).
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        assert_eq!(samples.len(), self.nodes.len());
        kahan_sum(self.weights.iter().zip(samples).map(|(w, g)| w * g))
    }

    /// `4π ∫₀¹ r² g(r) dr`, the integral of a radial profile over the ball.
    pub fn integrate_ball(&self, samples: &[f64]) -> f64 {
        assert_eq!(samples.len(), self.nodes.len());
        let sum = kahan_sum(
            self.weights
                .iter()
                .zip(&self.nodes)
                .zip(samples)
                .map(|((w, r), g)| w * r * r * g),
        );
        4.0 * PI * sum
    }

    /// Structural equality of discretizations.
    pub fn same_as(&self, other: &RadialGrid) -> bool {
        self.nodes == other.nodes
    }
}

fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// An Lp norm over the unit ball together with the exponent it was taken at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpNorm {
    pub p: f64,
    pub value: f64,
}

/// Nonnegative, radially non-increasing density samples with a cached total
/// mass. The shape constraints are validated at construction; membership in D
/// additionally requires mass 1, which [`RadialDensity::project`] enforces.
#[derive(Debug, Clone)]
pub struct RadialDensity {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    mass: f64,
}

impl RadialDensity {
    /// Wrap samples that are already nonnegative and non-increasing.
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nodes().len() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.nodes().len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "density samples must be finite".into(),
            ));
        }
        if values.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument(
                "density samples must be nonnegative".into(),
            ));
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(
                "density samples must be non-increasing in r".into(),
            ));
        }
        let mass = grid.integrate_ball(&values);
        Ok(RadialDensity { grid, values, mass })
    }

    /// Project arbitrary finite samples onto D: clamp negatives, run the
    /// weighted pool-adjacent-violators regression (least squares in the
    /// mass-weighted sense, weights `rᵢ² wᵢ`), then rescale to unit mass.
    ///
    /// All-zero input after clamping has no admissible rescaling and is an
    /// error rather than a silent renormalization.
    pub fn project(grid: Arc<RadialGrid>, raw: &[f64]) -> Result<Self> {
        if raw.len() != grid.nodes().len() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.nodes().len(),
                raw.len()
            )));
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "density samples must be finite".into(),
            ));
        }
        let clamped: Vec<f64> = raw.iter().map(|&v| v.max(0.0)).collect();
        let ls_weights: Vec<f64> = grid
            .nodes()
            .iter()
            .zip(grid.weights())
            .map(|(r, w)| r * r * w)
            .collect();
        let mut fitted = pava_non_increasing(&clamped, &ls_weights);
        let mass = grid.integrate_ball(&fitted);
        if !(mass > 0.0) || !(1.0 / mass).is_finite() {
            return Err(Error::DegenerateDensity);
        }
        let scale = 1.0 / mass;
        for v in &mut fitted {
            *v *= scale;
        }
        let mass = grid.integrate_ball(&fitted);
        Ok(RadialDensity {
            grid,
            values: fitted,
            mass,
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cached `4π ∫₀¹ r² ρ dr`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Central value ρ(0).
    pub fn central(&self) -> f64 {
        self.values[0]
    }

    /// `( 4π ∫₀¹ r² ρ(r)ᵖ dr )^{1/p}`. Requires p > 3/2.
    pub fn lp_norm(&self, p: f64) -> Result<LpNorm> {
        if !(p > 1.5) {
            return Err(Error::ExponentOutOfRange(format!(
                "Lp norms need p > 3/2, got {p}"
            )));
        }
        let powered: Vec<f64> = self.values.iter().map(|v| v.powf(p)).collect();
        let value = self.grid.integrate_ball(&powered).powf(1.0 / p);
        Ok(LpNorm { p, value })
    }
}

/// Weighted least-squares regression onto non-increasing vectors by pooling
/// adjacent violators. A block whose total weight is zero (the r = 0 node;
/// it never contributes to the objective) adopts the value of the block it
/// pools with, so the output stays non-increasing and untouched inputs pass
/// through unchanged.
pub fn pava_non_increasing(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len());
    // (value, weight, node count) per pooled block
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (cv, cw, cc) = blocks[blocks.len() - 1];
            let (pv, pw, pc) = blocks[blocks.len() - 2];
            if pv >= cv {
                break;
            }
            let w_sum = pw + cw;
            let pooled = if w_sum > 0.0 {
                (pv * pw + cv * cw) / w_sum
            } else {
                pv.max(cv)
            };
            blocks.truncate(blocks.len() - 2);
            blocks.push((pooled, w_sum, pc + cc));
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (v, _, c) in blocks {
        out.extend(std::iter::repeat_n(v, c));
    }
    out
}
