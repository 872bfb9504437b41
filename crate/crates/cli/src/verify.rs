//! Oracle battery: production propagator, critical points and dispersion
//! against their independent reference implementations.

use arrayscat::bands::{CriticalKind, TwoExcitationBand};
use arrayscat::lattice::{EwaldSum, Momentum2};
use arrayscat::oracle::{critical_points_grid, dispersion_direct_sum, propagator_grid_sum};
use arrayscat::propagator::LocalPropagator;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{render_record, Artifact};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct PropagatorSample {
    pub total: Momentum2,
    pub energy: f64,
    pub production: [f64; 2],
    pub oracle: [f64; 2],
    pub oracle_flagged: bool,
    pub rel_diff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalMatch {
    pub kind: CriticalKind,
    pub q: Momentum2,
    pub energy: f64,
    /// Distance to the nearest grid critical point of the same kind.
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DispersionSample {
    pub p: Momentum2,
    pub ewald: [f64; 2],
    pub direct: [f64; 2],
    pub diff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check<T> {
    pub passed: bool,
    pub worst: f64,
    pub tolerance: f64,
    pub samples: Vec<T>,
}

impl<T> Check<T> {
    fn new(samples: Vec<T>, value: impl Fn(&T) -> f64, tolerance: f64) -> Check<T> {
        let worst = samples.iter().map(&value).fold(0.0, f64::max);
        let passed = !samples.is_empty() && samples.iter().all(|s| value(s) <= tolerance);
        Check { passed, worst, tolerance, samples }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub propagator: Check<PropagatorSample>,
    /// Draws discarded because the oracle flagged its own extrapolation.
    pub propagator_flagged_rejected: usize,
    pub critical_points: Check<CriticalMatch>,
    /// Grid critical points with no production counterpart within one cell.
    pub unmatched_grid_points: usize,
    pub dispersion: Check<DispersionSample>,
}

/// Production L against the grid-sum oracle at random off-critical (P, E).
/// Draws the oracle flags as unconverged are redrawn and counted.
pub fn propagator_check(
    cfg: &RunConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Check<PropagatorSample>, usize), CliError> {
    let v = &cfg.verify;
    let b = cfg.lattice.reciprocal_constant();
    let mut samples = Vec::new();
    let mut rejected = 0;
    let mut attempts = 0;
    while samples.len() < v.propagator_samples {
        attempts += 1;
        if attempts > 50 * v.propagator_samples.max(1) {
            return Err(CliError::Verification("could not draw off-critical (P, E) samples".into()));
        }
        let total = Momentum2::new(rng.gen_range(-0.5 * b..0.5 * b), rng.gen_range(-0.5 * b..0.5 * b));
        let energy = rng.gen_range(0.3..2.0);
        let prop = LocalPropagator::new(&cfg.lattice, total, cfg.tolerances.propagator)?;
        let report = prop.band().find_critical_points(&cfg.tolerances.critical_points)?;
        if report.points.iter().any(|c| (c.energy - energy).abs() < v.critical_margin) {
            continue;
        }
        let Ok(pair) = prop.evaluate(energy) else { continue };
        let oracle = propagator_grid_sum(prop.band(), energy, &cfg.tolerances.oracle)?;
        if oracle.flagged {
            rejected += 1;
            if rejected > v.propagator_samples {
                return Err(CliError::Verification("oracle flagged more draws than it certified".into()));
            }
            continue;
        }
        let l = pair.plus.l;
        samples.push(PropagatorSample {
            total,
            energy,
            production: [l.re, l.im],
            oracle: [oracle.l.re, oracle.l.im],
            oracle_flagged: oracle.flagged,
            rel_diff: (l - oracle.l).norm() / oracle.l.norm(),
        });
    }
    Ok((Check::new(samples, |s| s.rel_diff, v.propagator_rel_tol), rejected))
}

/// Every production orbit member against the discrete grid search.
pub fn critical_point_check(cfg: &RunConfig) -> Result<(Check<CriticalMatch>, usize), CliError> {
    let band = TwoExcitationBand::new(&cfg.lattice, cfg.total_momentum)?;
    let report = band.find_critical_points(&cfg.tolerances.critical_points)?;
    let grid = critical_points_grid(&band, cfg.verify.critical_grid);
    let cell = cfg.lattice.reciprocal_constant() / cfg.verify.critical_grid as f64;
    let one_cell = std::f64::consts::SQRT_2 * cell;
    let mut matches = Vec::new();
    for cp in &report.points {
        for &q in &cp.symmetry_orbit {
            let distance = grid
                .iter()
                .filter(|g| g.kind == cp.kind)
                .map(|g| band.periodic_distance(g.q, q))
                .fold(f64::INFINITY, f64::min);
            matches.push(CriticalMatch { kind: cp.kind, q, energy: cp.energy, distance });
        }
    }
    let unmatched = grid
        .iter()
        .filter(|g| {
            !report
                .points
                .iter()
                .filter(|c| c.kind == g.kind)
                .flat_map(|c| c.symmetry_orbit.iter())
                .any(|q| band.periodic_distance(*q, g.q) <= one_cell)
        })
        .count();
    let mut check = Check::new(matches, |m| m.distance, one_cell);
    check.passed &= unmatched == 0;
    Ok((check, unmatched))
}

/// Ewald summation against the damped direct sum at random p away from the
/// light-cone circle.
pub fn dispersion_check(cfg: &RunConfig, rng: &mut ChaCha8Rng) -> Result<Check<DispersionSample>, CliError> {
    let v = &cfg.verify;
    let ewald = EwaldSum::new(&cfg.lattice)?;
    let b = cfg.lattice.reciprocal_constant();
    let mut samples = Vec::new();
    while samples.len() < v.dispersion_samples {
        let p = Momentum2::new(rng.gen_range(-0.5 * b..0.5 * b), rng.gen_range(-0.5 * b..0.5 * b));
        if (p.norm() - 1.0).abs() < v.light_cone_gap {
            continue;
        }
        let e = ewald.dispersion(p)?;
        let d = dispersion_direct_sum(&cfg.lattice, p, cfg.tolerances.oracle.realspace_cutoff, &v.dispersion_damping)?;
        samples.push(DispersionSample {
            p,
            ewald: [e.re, e.im],
            direct: [d.value.re, d.value.im],
            diff: (e.as_complex() - d.value.as_complex()).norm(),
        });
    }
    Ok(Check::new(samples, |s| s.diff, v.dispersion_tol))
}

pub fn run(cfg: &RunConfig) -> Result<VerifyReport, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (propagator, propagator_flagged_rejected) = propagator_check(cfg, &mut rng)?;
    let (critical_points, unmatched_grid_points) = critical_point_check(cfg)?;
    let dispersion = dispersion_check(cfg, &mut rng)?;
    Ok(VerifyReport {
        passed: propagator.passed && critical_points.passed && dispersion.passed,
        propagator,
        propagator_flagged_rejected,
        critical_points,
        unmatched_grid_points,
        dispersion,
    })
}

/// Runs the battery; the report is written even when a check fails.
pub fn verify(cfg: &RunConfig) -> Result<(VerifyReport, Vec<Artifact>), CliError> {
    let report = run(cfg)?;
    let artifact = render_record("verify", &report, "verify", cfg);
    Ok((report, vec![artifact]))
}
