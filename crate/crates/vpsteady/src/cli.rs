//! The `vpsteady` command line: solve, verify, oracle, sweep.
//!
//! Exit codes are a contract: 0 on success, 1 on usage or configuration
//! errors, 2 when a run completed but did not meet its target (solver not
//! converged, a verification check failed, an oracle comparison above
//! tolerance).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::ansatz::{self, PolytropeParams};
use crate::error::Error;
use crate::gravity;
use crate::io::{self, Profile, RunManifest, SolveReport, SweepRow};
use crate::lane_emden;
use crate::radial::{RadialDensity, RadialGrid};
use crate::sampling;
use crate::solver::{self, SolverConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "vpsteady",
    version,
    about = "Self-gravitating polytropic steady states via a mass-preserving fixed-point map"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the fixed-point iteration and write profile/report files.
    Solve(SolveArgs),
    /// Check the certified bounds on randomized admissible densities.
    Verify(VerifyArgs),
    /// Evaluate the Lane-Emden oracle, optionally comparing a solve profile.
    Oracle(OracleArgs),
    /// Solve across a range of exponents k, one worker per k.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Polytropic exponent k (strict window: -1 < k < 1/2).
    #[arg(long, allow_negative_numbers = true)]
    k: Option<f64>,
    /// Grid cells.
    #[arg(long)]
    n: Option<usize>,
    /// Sup-norm residual target.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Picard damping factor in (0, 1].
    #[arg(long)]
    damping: Option<f64>,
    /// Halve the damping when the residual would grow (true/false).
    #[arg(long)]
    adaptive_damping: Option<bool>,
    /// Exponent for reported Lp norms.
    #[arg(long)]
    report_p: Option<f64>,
    /// Allow k in [1/2, 3/2), beyond the guaranteed fixed-point window.
    #[arg(long)]
    allow_extended_k: bool,
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Profile CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report output path.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    k: f64,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Number of randomized admissible densities to test.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    allow_extended_k: bool,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long, allow_negative_numbers = true)]
    k: f64,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    /// Oracle profile CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solve profile to compare against (grid comes from the file).
    #[arg(long)]
    compare: Option<PathBuf>,
    /// Acceptable sup relative error for the comparison.
    #[arg(long, default_value_t = 5e-4)]
    rtol: f64,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, allow_negative_numbers = true)]
    k_min: f64,
    #[arg(long, allow_negative_numbers = true)]
    k_max: f64,
    #[arg(long)]
    k_step: f64,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    adaptive_damping: Option<bool>,
    #[arg(long)]
    allow_extended_k: bool,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Summary CSV output path.
    #[arg(long, default_value = "sweep_summary.csv")]
    out: PathBuf,
}

/// Optional TOML configuration; every key mirrors a flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    k: Option<f64>,
    n: Option<usize>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    damping: Option<f64>,
    adaptive_damping: Option<bool>,
    report_p: Option<f64>,
    allow_extended_k: Option<bool>,
}

pub fn run() -> u8 {
    let args: Vec<String> = std::env::args().collect();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_from(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Entry point with injectable streams; returns the process exit code.
pub fn run_from<O: Write, E: Write>(args: Vec<String>, out: &mut O, err: &mut E) -> u8 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) =>
        {
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let _ = write!(err, "{e}");
            return EXIT_USAGE;
        }
    };
    match cli.command {
        Command::Solve(args) => cmd_solve(args, out, err),
        Command::Verify(args) => cmd_verify(args, out, err),
        Command::Oracle(args) => cmd_oracle(args, out, err),
        Command::Sweep(args) => cmd_sweep(args, out, err),
    }
}

fn usage_error<E: Write>(err: &mut E, message: impl std::fmt::Display) -> u8 {
    let _ = writeln!(err, "error: {message}");
    EXIT_USAGE
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, String> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
}

fn resolve_solver_config(args: &SolveArgs, file: &FileConfig) -> Result<SolverConfig, String> {
    let k = args
        .k
        .or(file.k)
        .ok_or_else(|| "missing required --k (or `k` in --config)".to_string())?;
    let mut config = SolverConfig::new(k);
    config.grid_n = args.n.or(file.n).unwrap_or(config.grid_n);
    config.tol = args.tol.or(file.tol).unwrap_or(config.tol);
    config.max_iter = args.max_iter.or(file.max_iter).unwrap_or(config.max_iter);
    config.damping = args.damping.or(file.damping).unwrap_or(config.damping);
    config.adaptive_damping = args
        .adaptive_damping
        .or(file.adaptive_damping)
        .unwrap_or(config.adaptive_damping);
    config.report_p = args.report_p.or(file.report_p);
    config.allow_extended_k =
        args.allow_extended_k || file.allow_extended_k.unwrap_or(false);
    Ok(config)
}

fn config_json(config: &SolverConfig) -> serde_json::Value {
    serde_json::to_value(config).expect("config serializes")
}

fn cmd_solve<O: Write, E: Write>(args: SolveArgs, out: &mut O, err: &mut E) -> u8 {
    let file = match load_file_config(args.config.as_deref()) {
        Ok(f) => f,
        Err(e) => return usage_error(err, e),
    };
    let config = match resolve_solver_config(&args, &file) {
        Ok(c) => c,
        Err(e) => return usage_error(err, e),
    };

    let start = Instant::now();
    let report = match solver::solve(&config) {
        Ok(r) => r,
        Err(e @ Error::IterationCollapsed { .. }) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_NOT_CONVERGED;
        }
        Err(e) => return usage_error(err, e),
    };
    let wall_time_ms = start.elapsed().as_millis() as u64;

    let mut manifest = RunManifest::new("solve", config_json(&config));
    if let Some(path) = &args.out {
        let grid = report.final_density.grid();
        let profile = Profile {
            r: grid.nodes().to_vec(),
            rho: report.final_density.values().to_vec(),
            u: report.final_potential.values().to_vec(),
        };
        if let Err(e) = io::write_profile_csv(path, &profile) {
            return usage_error(err, format!("writing {}: {e}", path.display()));
        }
        manifest.artifact_paths.push(path.display().to_string());
    }
    if let Some(path) = &args.report {
        let solve_report = SolveReport::new(&config, &report, wall_time_ms);
        if let Err(e) = io::write_json_report(path, &solve_report) {
            return usage_error(err, format!("writing {}: {e}", path.display()));
        }
        manifest.artifact_paths.push(path.display().to_string());
    }
    manifest.wall_time_ms = wall_time_ms;
    let _ = writeln!(out, "{}", manifest.to_json_line());

    if report.converged {
        EXIT_OK
    } else {
        let _ = writeln!(
            err,
            "not converged after {} iterations (residual {:.3e})",
            report.iterations,
            report.final_residual()
        );
        EXIT_NOT_CONVERGED
    }
}

fn cmd_verify<O: Write, E: Write>(args: VerifyArgs, out: &mut O, err: &mut E) -> u8 {
    if args.samples == 0 {
        return usage_error(err, "nothing to verify: --samples must be positive");
    }
    let params = match if args.allow_extended_k {
        PolytropeParams::extended(args.k)
    } else {
        PolytropeParams::strict(args.k)
    } {
        Ok(p) => p,
        Err(e) => return usage_error(err, e),
    };
    let grid = match RadialGrid::uniform(args.n) {
        Ok(g) => Arc::new(g),
        Err(e) => return usage_error(err, e),
    };
    let report_p = ansatz::report_exponent(args.k);

    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let names = [
        "monotone_boundary",
        "lower_bound",
        "lemma41",
        "amplitude_bounds",
        "range_bound",
        "mass_normalization",
    ];
    let mut violations = [0usize; 6];
    for _ in 0..args.samples {
        let rho = sampling::sample_density(&grid, &mut rng);
        let u = gravity::potential(&rho);
        if !gravity::check_monotone_and_boundary(&u, true) {
            violations[0] += 1;
        }
        if !gravity::check_pointwise_lower_bound(&u) {
            violations[1] += 1;
        }
        match gravity::center_bound(&u, gravity::CANONICAL_R0) {
            Ok(cert) if cert.satisfied => {}
            _ => violations[2] += 1,
        }
        match ansatz::apply_t(&rho, &params) {
            Ok((image, bounds)) => {
                if !bounds.holds(grid.h2_tol()) {
                    violations[3] += 1;
                }
                if let Some(p) = report_p {
                    match ansatz::check_range_bound(&image, &params, p) {
                        Ok(true) => {}
                        _ => violations[4] += 1,
                    }
                }
            }
            Err(_) => {
                violations[3] += 1;
            }
        }
        if (rho.mass() - 1.0).abs() > 1e-12 {
            violations[5] += 1;
        }
    }

    let mut table = String::new();
    table.push_str(&format!(
        "{:<20} {:>8} {:>11}  result\n",
        "check", "samples", "violations"
    ));
    let mut all_pass = true;
    for (i, name) in names.iter().enumerate() {
        if i == 4 && report_p.is_none() {
            table.push_str(&format!("{name:<20} {:>8} {:>11}  SKIP\n", 0, "-"));
            continue;
        }
        let pass = violations[i] == 0;
        all_pass &= pass;
        table.push_str(&format!(
            "{name:<20} {:>8} {:>11}  {}\n",
            args.samples,
            violations[i],
            if pass { "PASS" } else { "FAIL" }
        ));
    }
    let _ = write!(out, "{table}");

    let mut manifest = RunManifest::new(
        "verify",
        serde_json::json!({
            "k": args.k,
            "n": args.n,
            "samples": args.samples,
            "seed": args.seed,
            "allow_extended_k": args.allow_extended_k,
        }),
    );
    manifest.wall_time_ms = start.elapsed().as_millis() as u64;
    let _ = writeln!(out, "{}", manifest.to_json_line());

    if all_pass {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}

fn cmd_oracle<O: Write, E: Write>(args: OracleArgs, out: &mut O, err: &mut E) -> u8 {
    let start = Instant::now();
    let mut manifest = RunManifest::new(
        "oracle",
        serde_json::json!({
            "k": args.k,
            "n": args.n,
            "rtol": args.rtol,
            "compare": args.compare.as_ref().map(|p| p.display().to_string()),
        }),
    );

    // grid and reference profile come from the compared file when given
    let (grid, compared) = match &args.compare {
        Some(path) => {
            let profile = match io::read_profile_csv(path) {
                Ok(p) => p,
                Err(e) => return usage_error(err, format!("{}: {e}", path.display())),
            };
            let grid = match io::grid_of_profile(&profile) {
                Ok(g) => Arc::new(g),
                Err(e) => return usage_error(err, format!("{}: {e}", path.display())),
            };
            let density = match RadialDensity::new(grid.clone(), profile.rho.clone()) {
                Ok(d) => d,
                Err(e) => {
                    return usage_error(err, format!("{}: not a density profile: {e}", path.display()))
                }
            };
            (grid, Some(density))
        }
        None => match RadialGrid::uniform(args.n) {
            Ok(g) => (Arc::new(g), None),
            Err(e) => return usage_error(err, e),
        },
    };

    let oracle = match lane_emden::oracle_steady_state(args.k, grid) {
        Ok(o) => o,
        Err(e) => return usage_error(err, e),
    };

    if let Some(path) = &args.out {
        let profile = Profile {
            r: oracle.grid().nodes().to_vec(),
            rho: oracle.density_profile.clone(),
            u: oracle.potential_profile.clone(),
        };
        if let Err(e) = io::write_profile_csv(path, &profile) {
            return usage_error(err, format!("writing {}: {e}", path.display()));
        }
        manifest.artifact_paths.push(path.display().to_string());
    }

    let mut code = EXIT_OK;
    if let Some(density) = compared {
        let (sup_rel, l2) = match lane_emden::compare(&density, &oracle) {
            Ok(v) => v,
            Err(e) => return usage_error(err, e),
        };
        let _ = writeln!(out, "sup_rel_error = {sup_rel:.6e}");
        let _ = writeln!(out, "l2_error = {l2:.6e}");
        if sup_rel > args.rtol {
            let _ = writeln!(err, "comparison above tolerance {:.3e}", args.rtol);
            code = EXIT_NOT_CONVERGED;
        }
    }

    manifest.wall_time_ms = start.elapsed().as_millis() as u64;
    let _ = writeln!(out, "{}", manifest.to_json_line());
    code
}

fn cmd_sweep<O: Write, E: Write>(args: SweepArgs, out: &mut O, err: &mut E) -> u8 {
    if !(args.k_step > 0.0) {
        return usage_error(err, format!("--k-step must be positive, got {}", args.k_step));
    }
    if !(args.k_min < args.k_max) {
        return usage_error(
            err,
            format!("empty range: --k-min {} >= --k-max {}", args.k_min, args.k_max),
        );
    }
    let file = match load_file_config(args.config.as_deref()) {
        Ok(f) => f,
        Err(e) => return usage_error(err, e),
    };

    let mut ks = Vec::new();
    let mut i = 0usize;
    loop {
        let k = args.k_min + i as f64 * args.k_step;
        if k > args.k_max + 1e-9 * args.k_step {
            break;
        }
        ks.push(k);
        i += 1;
    }
    if ks.is_empty() {
        return usage_error(err, "empty sweep range");
    }

    let base = {
        let mut c = SolverConfig::new(0.0);
        c.grid_n = args.n.or(file.n).unwrap_or(c.grid_n);
        c.tol = args.tol.or(file.tol).unwrap_or(c.tol);
        c.max_iter = args.max_iter.or(file.max_iter).unwrap_or(c.max_iter);
        c.damping = args.damping.or(file.damping).unwrap_or(c.damping);
        c.adaptive_damping = args
            .adaptive_damping
            .or(file.adaptive_damping)
            .unwrap_or(c.adaptive_damping);
        c.allow_extended_k = args.allow_extended_k || file.allow_extended_k.unwrap_or(false);
        c
    };
    // validate every exponent up front so window errors are usage errors
    for &k in &ks {
        let mut config = base.clone();
        config.k = k;
        if let Err(e) = config.params() {
            return usage_error(err, e);
        }
    }

    let start = Instant::now();
    let results: Result<Vec<SweepRow>, Error> = ks
        .par_iter()
        .map(|&k| {
            let mut config = base.clone();
            config.k = k;
            let report = solver::solve(&config)?;
            let oracle =
                lane_emden::oracle_steady_state(k, report.final_density.grid().clone())?;
            let (sup_rel, _) = lane_emden::compare(&report.final_density, &oracle)?;
            Ok(SweepRow {
                k,
                converged: report.converged,
                iterations: report.iterations,
                final_residual: report.final_residual(),
                amplitude: report.final_amplitude(),
                central_density: report.final_density.central(),
                oracle_sup_rel_error: sup_rel,
            })
        })
        .collect();
    let rows = match results {
        Ok(rows) => rows,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_NOT_CONVERGED;
        }
    };

    if let Err(e) = io::write_sweep_csv(&args.out, &rows) {
        return usage_error(err, format!("writing {}: {e}", args.out.display()));
    }

    let mut manifest = RunManifest::new(
        "sweep",
        serde_json::json!({
            "k_min": args.k_min,
            "k_max": args.k_max,
            "k_step": args.k_step,
            "n": base.grid_n,
            "tol": base.tol,
            "max_iter": base.max_iter,
            "damping": base.damping,
            "adaptive_damping": base.adaptive_damping,
            "allow_extended_k": base.allow_extended_k,
        }),
    );
    manifest.artifact_paths.push(args.out.display().to_string());
    manifest.wall_time_ms = start.elapsed().as_millis() as u64;
    let _ = writeln!(out, "{}", manifest.to_json_line());
    EXIT_OK
}
