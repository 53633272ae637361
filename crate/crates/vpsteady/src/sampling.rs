//! Seeded random members of the admissible set D for property checks.

use std::sync::Arc;

use rand::Rng;

use crate::radial::{RadialDensity, RadialGrid};

/// Draw a random member of D: a uniform profile, a decreasing step function,
/// or a truncated power law `min(r, r_c)^{-a}` with a < 3, all normalized by
/// projection. Deterministic for a fixed RNG state.
pub fn sample_density<R: Rng>(grid: &Arc<RadialGrid>, rng: &mut R) -> RadialDensity {
    let raw: Vec<f64> = match rng.gen_range(0..3u8) {
        0 => vec![1.0; grid.nodes().len()],
        1 => decreasing_steps(grid, rng),
        _ => truncated_power_law(grid, rng),
    };
    RadialDensity::project(grid.clone(), &raw).expect("sampled profiles have positive mass")
}

fn decreasing_steps<R: Rng>(grid: &Arc<RadialGrid>, rng: &mut R) -> Vec<f64> {
    let steps = rng.gen_range(1..=6usize);
    let mut breaks: Vec<f64> = (0..steps).map(|_| rng.gen_range(0.0..1.0)).collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.push(1.0);
    // accumulate positive increments from the outside in
    let mut levels = vec![0.0; breaks.len()];
    let mut acc = 0.0;
    for i in (0..breaks.len()).rev() {
        acc += rng.gen_range(0.05..1.0);
        levels[i] = acc;
    }
    grid.nodes()
        .iter()
        .map(|&r| {
            let idx = breaks.iter().position(|&b| r <= b).unwrap_or(breaks.len() - 1);
            levels[idx]
        })
        .collect()
}

fn truncated_power_law<R: Rng>(grid: &Arc<RadialGrid>, rng: &mut R) -> Vec<f64> {
    let a = rng.gen_range(0.2..2.9);
    let cutoff = rng.gen_range(0.01..0.3);
    grid.nodes()
        .iter()
        .map(|&r| r.max(cutoff).powf(-a))
        .collect()
}
