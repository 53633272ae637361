//! The polytropic ansatz map, its normalization amplitude, and the composite
//! mass-preserving operator T.
//!
//! With the cut-off energy fixed at -1 and unit mass/radius, a potential U
//! induces the raw profile
//!
//! ```text
//! ρ̃(r) = c_k (-1 - U(r))₊^{k+3/2},   c_k = 4π√2 ∫₀¹ ηᵏ √(1-η) dη,
//! ```
//!
//! and T(ρ) = A(ρ̃)·ρ̃ with the amplitude A(ρ̃) = 1/∫ρ̃ restoring unit mass.
//! The amplitude is certified to lie in an explicit window [C₁, C₂] assembled
//! from the pointwise bound U >= -1/r and the center-bound certificate.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::gravity::{self, RadialPotential};
use crate::radial::{RadialDensity, RadialGrid};

/// Cut-off crossings of the argument y = -1 - U below this threshold are
/// treated as exactly at the cut-off. The threshold sits one order above the
/// 1e-12 mass-certification tolerance, so for sources in D the support edge
/// at r = 1 (where U(1) = -(mass)) lands exactly on zero instead of on
/// renormalization noise raised to a fractional power.
pub const CUTOFF_Y_EPS: f64 = 1e-11;

/// Exponent parameters for the polytropic ansatz.
#[derive(Debug, Clone, Copy)]
pub struct PolytropeParams {
    k: f64,
    c_k: f64,
    strict: bool,
}

impl PolytropeParams {
    /// The window where the map is guaranteed to have a fixed point:
    /// k ∈ (-1, 1/2).
    pub fn strict(k: f64) -> Result<Self> {
        if !(k > -1.0 && k < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "strict mode requires -1 < k < 1/2, got {k}"
            )));
        }
        Ok(PolytropeParams {
            k,
            c_k: compute_ck(k)?,
            strict: true,
        })
    }

    /// The full window where the ansatz profile stays integrable:
    /// k ∈ (-1, 3/2). The range certificate is unavailable for k >= 1/2.
    pub fn extended(k: f64) -> Result<Self> {
        if !(k > -1.0 && k < 1.5) {
            return Err(Error::InvalidArgument(format!(
                "the ansatz requires -1 < k < 3/2, got {k}"
            )));
        }
        Ok(PolytropeParams {
            k,
            c_k: compute_ck(k)?,
            strict: false,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Lane-Emden index n = k + 3/2.
    pub fn n_poly(&self) -> f64 {
        self.k + 1.5
    }

    pub fn c_k(&self) -> f64 {
        self.c_k
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }
}

/// `c_k = 4π√2 ∫₀¹ ηᵏ √(1-η) dη = 4π√2 B(k+1, 3/2)` via log-gamma.
/// The integral diverges for k <= -1.
pub fn compute_ck(k: f64) -> Result<f64> {
    if !(k > -1.0) {
        return Err(Error::InvalidArgument(format!(
            "c_k diverges for k <= -1, got {k}"
        )));
    }
    let log_beta = libm::lgamma(k + 1.0) + libm::lgamma(1.5) - libm::lgamma(k + 2.5);
    Ok(4.0 * PI * SQRT_2 * log_beta.exp())
}

/// Evaluate the unnormalized ansatz profile `c_k (-1 - U)₊^{k+3/2}` on the
/// potential's grid. Nonnegative, zero wherever U >= -1, and non-increasing
/// whenever U is non-decreasing.
pub fn ansatz_density(u: &RadialPotential, params: &PolytropeParams) -> Vec<f64> {
    let exponent = params.n_poly();
    u.values()
        .iter()
        .map(|&ui| {
            let y = -1.0 - ui;
            if y <= CUTOFF_Y_EPS {
                0.0
            } else {
                params.c_k * y.powf(exponent)
            }
        })
        .collect()
}

/// Normalization amplitude `A(ρ̃) = 1 / ∫ ρ̃`. A zero-mass profile means the
/// iteration state is inadmissible.
pub fn amplitude(grid: &RadialGrid, rho_tilde: &[f64]) -> Result<f64> {
    let mass = grid.integrate_ball(rho_tilde);
    if !(mass > 0.0) || !(1.0 / mass).is_finite() {
        return Err(Error::DegenerateDensity);
    }
    Ok(1.0 / mass)
}

/// The certified amplitude window together with an observed value.
#[derive(Debug, Clone, Copy)]
pub struct AmplitudeBounds {
    pub c1: f64,
    pub c2: f64,
    pub observed: f64,
}

impl AmplitudeBounds {
    /// `c1 <= observed <= c2` with a relative slack (typically the grid's
    /// 10h² tolerance).
    pub fn holds(&self, rel_slack: f64) -> bool {
        self.observed >= self.c1 * (1.0 - rel_slack) && self.observed <= self.c2 * (1.0 + rel_slack)
    }
}

/// Assemble the amplitude window for the given exponent:
/// `C₁ = (c_k · 4π/(3/2 - k))⁻¹` from the pointwise bound U >= -1/r, and
/// `C₂ = (c_k · (4π/3) r₀³ δ^{k+3/2})⁻¹` from the center-bound certificate at
/// the canonical (r₀, δ).
pub fn amplitude_window(params: &PolytropeParams) -> (f64, f64) {
    let c1 = 1.0 / (params.c_k * 4.0 * PI / (1.5 - params.k));
    let r0 = gravity::CANONICAL_R0;
    let delta = gravity::canonical_delta();
    let c2 = 1.0 / (params.c_k * (4.0 * PI / 3.0) * r0.powi(3) * delta.powf(params.n_poly()));
    (c1, c2)
}

pub(crate) struct MapStep {
    pub density: RadialDensity,
    pub potential: RadialPotential,
    pub bounds: AmplitudeBounds,
}

pub(crate) fn apply_t_full(rho: &RadialDensity, params: &PolytropeParams) -> Result<MapStep> {
    if (rho.mass() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "T is defined on unit-mass densities, got mass {}",
            rho.mass()
        )));
    }
    let u = gravity::potential(rho);
    let raw = ansatz_density(&u, params);
    let a = amplitude(rho.grid(), &raw)?;
    let scaled: Vec<f64> = raw.iter().map(|v| v * a).collect();
    let density = RadialDensity::project(rho.grid().clone(), &scaled)?;
    let (c1, c2) = amplitude_window(params);
    Ok(MapStep {
        density,
        potential: u,
        bounds: AmplitudeBounds {
            c1,
            c2,
            observed: a,
        },
    })
}

/// One application of the mass-preserving operator:
/// potential -> ansatz profile -> amplitude -> rescale -> project to D.
/// Returns the new density and the observed amplitude with its certified
/// window.
pub fn apply_t(
    rho: &RadialDensity,
    params: &PolytropeParams,
) -> Result<(RadialDensity, AmplitudeBounds)> {
    let step = apply_t_full(rho, params)?;
    Ok((step.density, step.bounds))
}

/// Admissible exponent window (3/2, 3/(k+3/2)) for the range certificate;
/// empty for k >= 1/2.
pub fn range_exponent_window(k: f64) -> Option<(f64, f64)> {
    let upper = 3.0 / (k + 1.5);
    (upper > 1.5).then_some((1.5, upper))
}

/// Default exponent for reported norms: `min(2, 0.99 · 3/(k+3/2))`, pushed to
/// the window midpoint when that lands at or below 3/2 (k close to 1/2), and
/// unavailable when the window is empty (k >= 1/2).
pub fn report_exponent(k: f64) -> Option<f64> {
    let (lo, hi) = range_exponent_window(k)?;
    let p = (0.99 * hi).min(2.0);
    if p > lo {
        Some(p)
    } else {
        Some(0.5 * (lo + hi))
    }
}

/// Range certificate: the image T(ρ) satisfies
/// `‖T(ρ)‖_p <= C₂ · c_k · (4π/(3 - p(k+3/2)))^{1/p}`
/// for p inside the admissible window.
pub fn check_range_bound(
    rho_out: &RadialDensity,
    params: &PolytropeParams,
    p: f64,
) -> Result<bool> {
    let (lo, hi) = range_exponent_window(params.k).ok_or_else(|| {
        Error::ExponentOutOfRange(format!(
            "no admissible exponent for k = {} (window empty)",
            params.k
        ))
    })?;
    if !(p > lo && p < hi) {
        return Err(Error::ExponentOutOfRange(format!(
            "range bound requires p in ({lo}, {hi}), got {p}"
        )));
    }
    let (_, c2) = amplitude_window(params);
    let bound = c2 * params.c_k * (4.0 * PI / (3.0 - p * params.n_poly())).powf(1.0 / p);
    Ok(rho_out.lp_norm(p)?.value <= bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn grid(n: usize) -> Arc<RadialGrid> {
        Arc::new(RadialGrid::uniform(n).unwrap())
    }

    fn uniform_member(g: &Arc<RadialGrid>) -> RadialDensity {
        RadialDensity::project(g.clone(), &vec![1.0; g.nodes().len()]).unwrap()
    }

    /// U(r) = (r² - 3)/2, the uniform-sphere potential.
    fn uniform_sphere_potential(g: &Arc<RadialGrid>) -> RadialPotential {
        let values: Vec<f64> = g.nodes().iter().map(|r| (r * r - 3.0) / 2.0).collect();
        RadialPotential::from_samples(g.clone(), values).unwrap()
    }

    #[test]
    fn ck_closed_forms() {
        // ∫₀¹ √(1-η) dη = 2/3  and  B(1/2, 3/2) = π/2
        let c0 = compute_ck(0.0).unwrap();
        let exact0 = 8.0 * SQRT_2 * PI / 3.0;
        assert!((c0 - exact0).abs() <= 1e-12 * exact0);

        let c_half = compute_ck(-0.5).unwrap();
        let exact_half = 2.0 * SQRT_2 * PI * PI;
        assert!((c_half - exact_half).abs() <= 1e-12 * exact_half);

        assert!(matches!(compute_ck(-1.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(compute_ck(-1.5), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            compute_ck(f64::NAN),
            Err(Error::InvalidArgument(_))
        ));
    }

    /// Tanh-sinh (double-exponential) quadrature on (a, b). The endpoints are
    /// never evaluated, so integrable endpoint singularities are handled;
    /// this is the independent route to c_k.
    fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
        let s = 0.5 * (b - a);
        let node = |t: f64| -> f64 {
            let u = std::f64::consts::FRAC_PI_2 * t.sinh();
            // distance from the nearer endpoint, computed without cancellation
            let x = if t <= 0.0 {
                a + 2.0 * s / (1.0 + (-2.0 * u).exp())
            } else {
                b - 2.0 * s / (1.0 + (2.0 * u).exp())
            };
            if x <= a || x >= b {
                return 0.0;
            }
            let w = s * std::f64::consts::FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
            if !w.is_finite() || w == 0.0 {
                return 0.0;
            }
            w * f(x)
        };
        // trapezoid in the transformed variable; halve the step until settled
        let mut h = 0.5;
        let mut sum = node(0.0);
        let mut j = 1;
        loop {
            let t = j as f64 * h;
            let term = node(t) + node(-t);
            sum += term;
            if t > 4.0 && term.abs() <= 1e-18 * sum.abs() {
                break;
            }
            j += 1;
            if j > 10_000 {
                break;
            }
        }
        let mut estimate = h * sum;
        for _ in 0..12 {
            let h2 = 0.5 * h;
            let mut odd = 0.0;
            let mut j = 0u64;
            loop {
                let t = h2 * (2 * j + 1) as f64;
                let term = node(t) + node(-t);
                odd += term;
                if t > 4.0 && term.abs() <= 1e-18 * (sum + odd).abs() {
                    break;
                }
                j += 1;
                if j > 4_000_000 {
                    break;
                }
            }
            sum += odd;
            h = h2;
            let refined = h * sum;
            let settled = (refined - estimate).abs() <= tol * refined.abs();
            estimate = refined;
            if settled {
                break;
            }
        }
        estimate
    }

    #[test]
    fn ck_beta_identity_agrees_with_quadrature() {
        // independent route: substitute η = sin²φ and integrate
        // 2 sin^{2k+1}(φ) cos²(φ) over (0, π/2)
        for &k in &[-0.9, -0.5, 0.0, 0.25, 0.49, 1.0, 1.4] {
            let integral = tanh_sinh(
                |phi: f64| 2.0 * phi.sin().powf(2.0 * k + 1.0) * phi.cos().powi(2),
                0.0,
                std::f64::consts::FRAC_PI_2,
                1e-13,
            );
            let via_quadrature = 4.0 * PI * SQRT_2 * integral;
            let via_beta = compute_ck(k).unwrap();
            assert!(
                (via_beta - via_quadrature).abs() <= 1e-10 * via_beta,
                "k={k}: beta {via_beta}, quadrature {via_quadrature}"
            );
        }
    }

    #[test]
    fn ansatz_profile_on_the_uniform_sphere() {
        let g = grid(800);
        let params = PolytropeParams::strict(0.0).unwrap();
        let profile = ansatz_density(&uniform_sphere_potential(&g), &params);
        // c₀ ((1-r²)/2)^{3/2} = (4π/3)(1-r²)^{3/2}
        for (r, got) in g.nodes().iter().zip(&profile) {
            let expect = 4.0 * PI / 3.0 * (1.0 - r * r).powf(1.5);
            assert!((got - expect).abs() <= 1e-12 * expect.max(1.0), "r={r}");
        }
        assert!((profile[0] - 4.0 * PI / 3.0).abs() <= 1e-12);
        assert_eq!(*profile.last().unwrap(), 0.0);
    }

    #[test]
    fn ansatz_vanishes_without_bound_states() {
        let g = grid(50);
        let params = PolytropeParams::strict(0.0).unwrap();
        let u = RadialPotential::from_samples(g.clone(), vec![0.0; g.nodes().len()]).unwrap();
        assert!(ansatz_density(&u, &params).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ansatz_linear_case_on_the_sine_potential() {
        // k = -1/2 makes the profile linear in y: ρ̃ = c_{-1/2} sin(πr)/(πr)
        let g = grid(400);
        let params = PolytropeParams::strict(-0.5).unwrap();
        let values: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&r| {
                let y = if r == 0.0 {
                    1.0
                } else {
                    (PI * r).sin() / (PI * r)
                };
                -1.0 - y
            })
            .collect();
        let u = RadialPotential::from_samples(g.clone(), values).unwrap();
        let profile = ansatz_density(&u, &params);
        let c = params.c_k();
        assert!((profile[0] - c).abs() <= 1e-12 * c);
        for (&r, got) in g.nodes().iter().zip(&profile).skip(1) {
            let expect = c * ((PI * r).sin() / (PI * r)).max(0.0);
            assert!((got - expect).abs() <= 1e-10 * c, "r={r}: {got} vs {expect}");
        }
    }

    #[test]
    fn amplitude_of_the_uniform_start() {
        // mass of (4π/3)(1-r²)^{3/2} over the ball is π³/6, so A = 6/π³
        let g = grid(4000);
        let params = PolytropeParams::strict(0.0).unwrap();
        let profile = ansatz_density(&uniform_sphere_potential(&g), &params);
        let a = amplitude(&g, &profile).unwrap();
        let exact = 6.0 / PI.powi(3);
        assert!((a - exact).abs() <= 1e-6, "A = {a}, exact {exact}");
    }

    #[test]
    fn amplitude_of_a_unit_mass_profile_is_one() {
        let g = grid(200);
        let member = uniform_member(&g);
        let a = amplitude(&g, member.values()).unwrap();
        assert!((a - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn amplitude_rejects_zero_profiles() {
        let g = grid(20);
        assert!(matches!(
            amplitude(&g, &vec![0.0; g.nodes().len()]),
            Err(Error::DegenerateDensity)
        ));
    }

    #[test]
    fn one_step_from_uniform_matches_the_closed_form() {
        let g = grid(1000);
        let params = PolytropeParams::strict(0.0).unwrap();
        let (out, bounds) = apply_t(&uniform_member(&g), &params).unwrap();
        let max_err = g
            .nodes()
            .iter()
            .zip(out.values())
            .map(|(r, v)| {
                let expect = 8.0 / (PI * PI) * (1.0 - r * r).powf(1.5);
                (v - expect).abs()
            })
            .fold(0.0f64, f64::max);
        assert!(max_err <= g.h2_tol(), "max err {max_err} vs {}", g.h2_tol());
        assert!((out.central() - 8.0 / (PI * PI)).abs() <= g.h2_tol());
        // observed amplitude inside the certified window
        assert!((bounds.observed - 6.0 / PI.powi(3)).abs() <= 1e-5);
        assert!(bounds.c1 <= bounds.observed && bounds.observed <= bounds.c2);
        // window endpoints against their defining formulas
        let expect_c1 = (1.5 - 0.0) / (params.c_k() * 4.0 * PI);
        assert!((bounds.c1 - expect_c1).abs() <= 1e-14);
        assert!((bounds.c2 - 2656.0).abs() <= 1.0, "c2 = {}", bounds.c2);
    }

    #[test]
    fn sine_profile_is_a_fixed_point_at_k_minus_half() {
        let g = grid(1000);
        let params = PolytropeParams::strict(-0.5).unwrap();
        let raw: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&r| {
                if r == 0.0 {
                    PI / 4.0
                } else {
                    (PI * r).sin() / (4.0 * r)
                }
            })
            .collect();
        let rho = RadialDensity::project(g.clone(), &raw).unwrap();
        let (out, _) = apply_t(&rho, &params).unwrap();
        let max_dev = rho
            .values()
            .iter()
            .zip(out.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_dev <= g.h2_tol(), "max dev {max_dev}");
    }

    #[test]
    fn image_vanishes_at_the_boundary_and_not_at_the_center() {
        let g = grid(300);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &k in &[-0.9, -0.5, 0.0, 0.3] {
            let params = PolytropeParams::strict(k).unwrap();
            for _ in 0..10 {
                let rho = crate::sampling::sample_density(&g, &mut rng);
                let (out, _) = apply_t(&rho, &params).unwrap();
                assert_eq!(*out.values().last().unwrap(), 0.0, "k={k}");
                assert!(out.central() > 0.0, "k={k}");
            }
        }
    }

    #[test]
    fn map_sends_d_into_d_with_certified_amplitudes() {
        let g = grid(250);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ks = [-0.9, -0.6, -0.3, 0.0, 0.2, 0.4, 0.49];
        for &k in &ks {
            let params = PolytropeParams::strict(k).unwrap();
            for _ in 0..30 {
                let rho = crate::sampling::sample_density(&g, &mut rng);
                let (out, bounds) = apply_t(&rho, &params).unwrap();
                assert!(out.values().iter().all(|&v| v >= 0.0));
                assert!(out.values().windows(2).all(|w| w[0] >= w[1]));
                assert!((out.mass() - 1.0).abs() <= 1e-12);
                assert!(
                    bounds.holds(g.h2_tol()),
                    "k={k}: A={} outside [{}, {}]",
                    bounds.observed,
                    bounds.c1,
                    bounds.c2
                );
            }
        }
    }

    #[test]
    fn range_bound_certificate() {
        let g = grid(1000);
        let params = PolytropeParams::strict(-0.5).unwrap();
        let raw: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&r| {
                if r == 0.0 {
                    PI / 4.0
                } else {
                    (PI * r).sin() / (4.0 * r)
                }
            })
            .collect();
        let rho = RadialDensity::project(g.clone(), &raw).unwrap();
        let (out, _) = apply_t(&rho, &params).unwrap();
        assert!(check_range_bound(&out, &params, 2.0).unwrap());
        // ‖ρ*‖₂² = (π/4) ∫ sin²(πr) dr = π/8
        let norm = out.lp_norm(2.0).unwrap().value;
        assert!((norm - (PI / 8.0).sqrt()).abs() <= 1e-3, "‖ρ*‖₂ = {norm}");

        let params0 = PolytropeParams::strict(0.0).unwrap();
        let member = uniform_member(&g);
        let (out0, _) = apply_t(&member, &params0).unwrap();
        assert!(check_range_bound(&out0, &params0, 1.9).unwrap());
        assert!(matches!(
            check_range_bound(&out0, &params0, 2.5),
            Err(Error::ExponentOutOfRange(_))
        ));
    }

    #[test]
    fn exponent_windows() {
        assert_eq!(range_exponent_window(-0.5), Some((1.5, 3.0)));
        assert!(range_exponent_window(0.5).is_none());
        assert!(range_exponent_window(1.0).is_none());

        assert_eq!(report_exponent(-0.5), Some(2.0));
        assert_eq!(report_exponent(0.0), Some(0.99 * 2.0));
        // near the top of the strict window the default rule would fall out
        // of the window; the midpoint fallback keeps it inside
        let p = report_exponent(0.49).unwrap();
        let (lo, hi) = range_exponent_window(0.49).unwrap();
        assert!(p > lo && p < hi, "p = {p} outside ({lo}, {hi})");
        assert!(report_exponent(0.5).is_none());
    }

    #[test]
    fn param_windows() {
        assert!(PolytropeParams::strict(0.7).is_err());
        assert!(PolytropeParams::extended(0.7).is_ok());
        assert!(PolytropeParams::extended(1.5).is_err());
        assert!(PolytropeParams::strict(-1.0).is_err());
        let p = PolytropeParams::strict(0.25).unwrap();
        assert_eq!(p.n_poly(), 1.75);
        assert!(p.is_strict());
    }
}
