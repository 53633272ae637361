//! Damped Picard iteration driving a density to a fixed point of the
//! mass-preserving map, with per-iteration certificates.
//!
//! The update is `ρ_{m+1} = P((1-ω) ρ_m + ω T(ρ_m))` where P is the
//! projection onto D. Fixed points of the damped map coincide with fixed
//! points of T: the convex combination of two members of D is already in D,
//! so P only pins renormalization drift.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ansatz::{self, PolytropeParams};
use crate::error::{Error, Result};
use crate::gravity::{self, RadialPotential};
use crate::radial::{RadialDensity, RadialGrid};

/// Smallest damping factor the adaptive rule will fall back to.
pub const OMEGA_FLOOR: f64 = 1.0 / 64.0;

/// Configuration of a single fixed-point run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Polytropic exponent.
    pub k: f64,
    /// Number of grid cells.
    pub grid_n: usize,
    /// Sup-norm residual target.
    pub tol: f64,
    pub max_iter: usize,
    /// Picard damping factor ω ∈ (0, 1].
    pub damping: f64,
    /// Halve ω when the residual would increase, restore on success.
    pub adaptive_damping: bool,
    /// Exponent for the reported Lp residual; defaults to the admissible
    /// window rule for k when absent.
    pub report_p: Option<f64>,
    /// Permit k ∈ [1/2, 3/2), beyond the window where a fixed point is
    /// guaranteed to exist.
    pub allow_extended_k: bool,
}

impl SolverConfig {
    pub fn new(k: f64) -> Self {
        SolverConfig {
            k,
            grid_n: 2000,
            tol: 1e-9,
            max_iter: 500,
            damping: 0.5,
            adaptive_damping: true,
            report_p: None,
            allow_extended_k: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }

    pub(crate) fn params(&self) -> Result<PolytropeParams> {
        if self.allow_extended_k {
            PolytropeParams::extended(self.k)
        } else {
            PolytropeParams::strict(self.k)
        }
    }
}

/// Per-iteration certificate checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Potential non-decreasing with boundary value -1.
    MonotoneBoundary,
    /// Pointwise bound U >= -1/r.
    LowerBound,
    /// Center-bound certificate at the canonical r₀.
    Lemma41,
    /// Observed amplitude inside [C₁, C₂].
    Amplitude,
    /// Lp bound on the image of the map.
    RangeBound,
    /// Iterate mass within 1e-12 of 1.
    Mass,
}

impl CheckKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckKind::MonotoneBoundary => "monotone_boundary",
            CheckKind::LowerBound => "lower_bound",
            CheckKind::Lemma41 => "lemma41",
            CheckKind::Amplitude => "amplitude",
            CheckKind::RangeBound => "range_bound",
            CheckKind::Mass => "mass",
        }
    }
}

/// Full record of a fixed-point run. History index m holds the diagnostics
/// of iterate m (index 0 is the initial guess), so every history is
/// `iterations + 1` long.
#[derive(Debug, Clone)]
pub struct IterationReport {
    pub iterations: usize,
    /// Sup-norm fixed-point defect ‖T(ρ_m) - ρ_m‖_∞ per iterate.
    pub residual_history: Vec<f64>,
    /// Lp-norm of the defect at `report_p`, when an admissible p exists.
    pub lp_residual_history: Vec<f64>,
    /// Observed amplitude A(ρ̃_m) per iterate.
    pub amplitude_history: Vec<f64>,
    /// Iterate mass per iterate.
    pub mass_history: Vec<f64>,
    /// (iterate index, failed check) pairs; empty on a fully certified run.
    pub bound_violations: Vec<(usize, CheckKind)>,
    pub converged: bool,
    pub final_density: RadialDensity,
    pub final_potential: RadialPotential,
    /// Certified amplitude window [C₁, C₂] for this exponent.
    pub amplitude_window: (f64, f64),
    /// The Lp exponent actually used for reported norms, if any.
    pub report_p: Option<f64>,
}

impl IterationReport {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap()
    }

    pub fn final_amplitude(&self) -> f64 {
        *self.amplitude_history.last().unwrap()
    }

    pub fn check_passed(&self, kind: CheckKind) -> bool {
        !self.bound_violations.iter().any(|(_, k)| *k == kind)
    }
}

/// The uniform unit-mass density, the canonical starting point. The constant
/// is normalized so the discrete mass is exactly 1 (the raw value 3/(4π) has
/// trapezoid mass 1 + h²/2, which would already violate the mass invariant).
pub fn initial_guess(grid: Arc<RadialGrid>) -> RadialDensity {
    let raw = vec![1.0; grid.nodes().len()];
    RadialDensity::project(grid, &raw).expect("constant profiles have positive mass")
}

/// Fixed-point defect ‖T(ρ) - ρ‖_∞.
pub fn residual(rho: &RadialDensity, params: &PolytropeParams) -> Result<f64> {
    let (image, _) = ansatz::apply_t(rho, params)?;
    Ok(sup_diff(rho.values(), image.values()))
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn lp_defect(grid: &RadialGrid, a: &[f64], b: &[f64], p: f64) -> f64 {
    let powered: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs().powf(p))
        .collect();
    grid.integrate_ball(&powered).powf(1.0 / p)
}

struct IterationState {
    rho: RadialDensity,
    step: ansatz::MapStep,
    residual: f64,
}

/// Run the damped Picard iteration until the sup-norm residual drops below
/// `tol` or `max_iter` steps have been taken. Non-convergence is a reported
/// outcome, not an error; a degenerate iterate is.
pub fn solve(config: &SolverConfig) -> Result<IterationReport> {
    config.validate()?;
    let params = config.params()?;
    let grid = Arc::new(RadialGrid::uniform(config.grid_n)?);
    let report_p = match config.report_p {
        Some(p) => {
            let window = ansatz::range_exponent_window(config.k);
            match window {
                Some((lo, hi)) if p > lo && p < hi => Some(p),
                _ => {
                    return Err(Error::ExponentOutOfRange(format!(
                        "report_p = {p} outside the admissible window for k = {}",
                        config.k
                    )))
                }
            }
        }
        None => ansatz::report_exponent(config.k),
    };

    let collapsed = |iteration: usize, e: Error| match e {
        Error::DegenerateDensity => Error::IterationCollapsed {
            iteration,
            source: Box::new(Error::DegenerateDensity),
        },
        other => other,
    };

    let mut report = IterationReport {
        iterations: 0,
        residual_history: Vec::new(),
        lp_residual_history: Vec::new(),
        amplitude_history: Vec::new(),
        mass_history: Vec::new(),
        bound_violations: Vec::new(),
        converged: false,
        final_density: initial_guess(grid.clone()),
        final_potential: RadialPotential::from_samples(
            grid.clone(),
            vec![0.0; grid.nodes().len()],
        )?,
        amplitude_window: ansatz::amplitude_window(&params),
        report_p,
    };

    let rho = report.final_density.clone();
    let step = ansatz::apply_t_full(&rho, &params).map_err(|e| collapsed(0, e))?;
    let res = sup_diff(rho.values(), step.density.values());
    let mut state = IterationState {
        rho,
        step,
        residual: res,
    };
    record(&mut report, 0, &state, &params, report_p);
    let mut converged = state.residual <= config.tol;

    let mut omega = config.damping;
    let mut it = 0usize;
    while !converged && it < config.max_iter {
        it += 1;
        loop {
            let mixed: Vec<f64> = state
                .rho
                .values()
                .iter()
                .zip(state.step.density.values())
                .map(|(old, new)| (1.0 - omega) * old + omega * new)
                .collect();
            let candidate =
                RadialDensity::project(grid.clone(), &mixed).map_err(|e| collapsed(it, e))?;
            let cand_step =
                ansatz::apply_t_full(&candidate, &params).map_err(|e| collapsed(it, e))?;
            let cand_res = sup_diff(candidate.values(), cand_step.density.values());
            let accept =
                !config.adaptive_damping || cand_res <= state.residual || omega <= OMEGA_FLOOR;
            if accept {
                state = IterationState {
                    rho: candidate,
                    step: cand_step,
                    residual: cand_res,
                };
                if config.adaptive_damping {
                    omega = (2.0 * omega).min(config.damping);
                }
                break;
            }
            omega = (0.5 * omega).max(OMEGA_FLOOR);
        }
        record(&mut report, it, &state, &params, report_p);
        converged = state.residual <= config.tol;
    }

    report.iterations = it;
    report.converged = converged;
    report.final_density = state.rho;
    report.final_potential = state.step.potential;
    Ok(report)
}

/// Push iterate m's diagnostics and certificate results onto the report.
fn record(
    report: &mut IterationReport,
    m: usize,
    state: &IterationState,
    params: &PolytropeParams,
    report_p: Option<f64>,
) {
    report.residual_history.push(state.residual);
    report.amplitude_history.push(state.step.bounds.observed);
    report.mass_history.push(state.rho.mass());
    if let Some(p) = report_p {
        report.lp_residual_history.push(lp_defect(
            state.rho.grid(),
            state.rho.values(),
            state.step.density.values(),
            p,
        ));
    }

    let tol = state.rho.grid().h2_tol();
    let u = &state.step.potential;
    if !gravity::check_monotone_and_boundary(u, true) {
        report
            .bound_violations
            .push((m, CheckKind::MonotoneBoundary));
    }
    if !gravity::check_pointwise_lower_bound(u) {
        report.bound_violations.push((m, CheckKind::LowerBound));
    }
    match gravity::center_bound(u, gravity::CANONICAL_R0) {
        Ok(cert) if cert.satisfied => {}
        _ => report.bound_violations.push((m, CheckKind::Lemma41)),
    }
    if !state.step.bounds.holds(tol) {
        report.bound_violations.push((m, CheckKind::Amplitude));
    }
    if let Some(p) = report_p {
        match ansatz::check_range_bound(&state.step.density, params, p) {
            Ok(true) => {}
            _ => report.bound_violations.push((m, CheckKind::RangeBound)),
        }
    }
    if (state.rho.mass() - 1.0).abs() > 1e-12 {
        report.bound_violations.push((m, CheckKind::Mass));
    }
}
