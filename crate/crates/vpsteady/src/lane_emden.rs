//! Independent Lane-Emden shooting solver used to cross-validate fixed
//! points of the mass-preserving map.
//!
//! At a fixed point the quantity y = -1 - U solves the radial Poisson
//! equation with source A c_k y₊ⁿ, n = k + 3/2, together with y(1) = 0 and
//! y'(1) = -1 (unit mass). Writing y(r) = y_c θ(ξ), ξ = ξ₁ r turns this into
//! the classical Lane-Emden problem
//!
//! ```text
//! θ'' + (2/ξ) θ' + θⁿ = 0,   θ(0) = 1, θ'(0) = 0,
//! ```
//!
//! whose first zero ξ₁ and slope θ'(ξ₁) determine the rescaling:
//! y_c = 1/(ξ₁ |θ'(ξ₁)|) and the amplitude A* = ξ₁²/(4π c_k y_c^{n-1}).

use std::f64::consts::PI;
use std::sync::Arc;

use crate::ansatz::{compute_ck, PolytropeParams};
use crate::error::{Error, Result};
use crate::radial::{RadialDensity, RadialGrid};

/// Default integrator step; chosen so that the first zero is resolved far
/// below every grid tolerance in play.
pub const DEFAULT_STEP: f64 = 1e-5;

const XI_CUTOFF: f64 = 100.0;

/// Integrate the Lane-Emden equation and locate the first zero of θ.
/// Returns `(ξ₁, θ'(ξ₁))`. Requires `0 <= n_poly < 5` (the radius is
/// infinite at n = 5) and a positive step.
pub fn lane_emden_shoot(n_poly: f64, step: f64) -> Result<(f64, f64)> {
    let traj = shoot(n_poly, step)?;
    Ok((traj.xi1, traj.theta_prime_xi1))
}

/// Dense Lane-Emden trajectory: uniform RK4 samples of (θ, θ') plus the
/// refined first zero.
pub(crate) struct Trajectory {
    n_poly: f64,
    xi_start: f64,
    step: f64,
    thetas: Vec<f64>,
    phis: Vec<f64>,
    pub xi1: f64,
    pub theta_prime_xi1: f64,
}

/// Clamped source term θ₊ⁿ; keeps the bracketing overshoot past the first
/// zero real-valued for fractional n.
fn source(theta: f64, n_poly: f64) -> f64 {
    theta.max(0.0).powf(n_poly)
}

fn derivs(xi: f64, theta: f64, phi: f64, n_poly: f64) -> (f64, f64) {
    (phi, -2.0 * phi / xi - source(theta, n_poly))
}

/// Series launch θ = 1 - ξ²/6 + n ξ⁴/120 (+O(ξ⁶)) used to leave the
/// removable singularity at ξ = 0.
fn series_theta(xi: f64, n_poly: f64) -> f64 {
    1.0 - xi * xi / 6.0 + n_poly * xi.powi(4) / 120.0
}

fn series_phi(xi: f64, n_poly: f64) -> f64 {
    -xi / 3.0 + n_poly * xi.powi(3) / 30.0
}

fn cubic_hermite(t: f64, h: f64, y0: f64, d0: f64, y1: f64, d1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

fn shoot(n_poly: f64, step: f64) -> Result<Trajectory> {
    if !(0.0..5.0).contains(&n_poly) {
        return Err(Error::InvalidArgument(format!(
            "Lane-Emden index must lie in [0, 5), got {n_poly}"
        )));
    }
    if !(step > 0.0 && step <= 0.1) {
        return Err(Error::InvalidArgument(format!(
            "step must lie in (0, 0.1], got {step}"
        )));
    }

    let xi_start = 10.0 * step;
    let mut xi = xi_start;
    let mut theta = series_theta(xi, n_poly);
    let mut phi = series_phi(xi, n_poly);
    let mut thetas = vec![theta];
    let mut phis = vec![phi];

    let mut crossing: Option<usize> = None;
    while xi < XI_CUTOFF {
        let h = step;
        let (k1t, k1p) = derivs(xi, theta, phi, n_poly);
        let (k2t, k2p) = derivs(xi + 0.5 * h, theta + 0.5 * h * k1t, phi + 0.5 * h * k1p, n_poly);
        let (k3t, k3p) = derivs(xi + 0.5 * h, theta + 0.5 * h * k2t, phi + 0.5 * h * k2p, n_poly);
        let (k4t, k4p) = derivs(xi + h, theta + h * k3t, phi + h * k3p, n_poly);
        theta += h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
        phi += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        xi += h;
        thetas.push(theta);
        phis.push(phi);
        if theta <= 0.0 {
            crossing = Some(thetas.len() - 2);
            break;
        }
    }
    let idx = crossing.ok_or(Error::NoZeroFound(XI_CUTOFF))?;

    // refine the zero by bisection on the cubic Hermite dense output
    let xi_a = xi_start + idx as f64 * step;
    let (t0, p0) = (thetas[idx], phis[idx]);
    let (t1, p1) = (thetas[idx + 1], phis[idx + 1]);
    let theta_at = |t: f64| cubic_hermite(t, step, t0, p0, t1, p1);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while (hi - lo) * step > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if theta_at(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_root = 0.5 * (lo + hi);
    let xi1 = xi_a + t_root * step;
    // slope from the Hermite interpolant of θ' (its derivative is the
    // Lane-Emden right-hand side, known at both ends)
    let dp0 = derivs(xi_a, t0, p0, n_poly).1;
    let dp1 = derivs(xi_a + step, t1, p1, n_poly).1;
    let theta_prime_xi1 = cubic_hermite(t_root, step, p0, dp0, p1, dp1);

    Ok(Trajectory {
        n_poly,
        xi_start,
        step,
        thetas,
        phis,
        xi1,
        theta_prime_xi1,
    })
}

impl Trajectory {
    /// θ(ξ) from the dense output, clamped to 0 at and beyond the first zero.
    pub fn theta_at(&self, xi: f64) -> f64 {
        if xi >= self.xi1 {
            return 0.0;
        }
        if xi <= self.xi_start {
            return series_theta(xi, self.n_poly);
        }
        let pos = (xi - self.xi_start) / self.step;
        let idx = (pos.floor() as usize).min(self.thetas.len() - 2);
        let t = pos - idx as f64;
        cubic_hermite(
            t,
            self.step,
            self.thetas[idx],
            self.phis[idx],
            self.thetas[idx + 1],
            self.phis[idx + 1],
        )
        .max(0.0)
    }
}

/// The rescaled Lane-Emden steady state on a radial grid.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub n_poly: f64,
    pub xi1: f64,
    pub theta_prime_at_xi1: f64,
    /// Central value of y = -1 - U: `1/(ξ₁ |θ'(ξ₁)|)`.
    pub y_center: f64,
    /// `A* = ξ₁² / (4π c_k y_center^{n-1})`.
    pub amplitude: f64,
    pub density_profile: Vec<f64>,
    pub potential_profile: Vec<f64>,
    grid: Arc<RadialGrid>,
}

impl OracleSolution {
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// Mass of the density profile under the grid quadrature; 1 up to
    /// quadrature and shooting error.
    pub fn mass(&self) -> f64 {
        self.grid.integrate_ball(&self.density_profile)
    }
}

/// Solve the steady-state profile for exponent k by shooting at the default
/// step and rescaling onto the grid. Requires k ∈ (-1, 3/2) so that the
/// Lane-Emden index stays inside [0, 5).
pub fn oracle_steady_state(k: f64, grid: Arc<RadialGrid>) -> Result<OracleSolution> {
    let params = PolytropeParams::extended(k)?;
    let c_k = compute_ck(k)?;
    let n_poly = params.n_poly();
    let traj = shoot(n_poly, DEFAULT_STEP)?;
    let xi1 = traj.xi1;
    let slope = traj.theta_prime_xi1;
    let y_center = 1.0 / (xi1 * slope.abs());
    let amplitude = xi1 * xi1 / (4.0 * PI * c_k * y_center.powf(n_poly - 1.0));

    let mut density = Vec::with_capacity(grid.nodes().len());
    let mut potential = Vec::with_capacity(grid.nodes().len());
    for &r in grid.nodes() {
        let theta = if r == 0.0 { 1.0 } else { traj.theta_at(xi1 * r) };
        let y = y_center * theta;
        density.push(amplitude * c_k * y.powf(n_poly));
        potential.push(-1.0 - y);
    }

    Ok(OracleSolution {
        n_poly,
        xi1,
        theta_prime_at_xi1: slope,
        y_center,
        amplitude,
        density_profile: density,
        potential_profile: potential,
        grid,
    })
}

/// Compare a computed fixed point against the oracle on the same grid.
/// Returns `(sup_rel_error, l2_error)`, the sup taken over nodes where the
/// oracle density exceeds 1e-3 of its central value (avoids 0/0 at the
/// support edge), and the L² norm of the difference over the ball.
pub fn compare(fixed_point: &RadialDensity, oracle: &OracleSolution) -> Result<(f64, f64)> {
    if !fixed_point.grid().same_as(&oracle.grid) {
        return Err(Error::GridMismatch(
            "fixed point and oracle live on different grids".into(),
        ));
    }
    let threshold = 1e-3 * oracle.density_profile[0];
    let mut sup_rel: f64 = 0.0;
    let mut diff_sq = Vec::with_capacity(fixed_point.values().len());
    for (&got, &want) in fixed_point.values().iter().zip(&oracle.density_profile) {
        let d = got - want;
        diff_sq.push(d * d);
        if want > threshold {
            sup_rel = sup_rel.max(d.abs() / want);
        }
    }
    let l2 = oracle.grid.integrate_ball(&diff_sq).sqrt();
    Ok((sup_rel, l2))
}
