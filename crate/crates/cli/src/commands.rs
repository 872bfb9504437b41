use arrayscat::bands::{CriticalKind, Domain, TwoExcitationBand};
use arrayscat::lattice::Momentum2;
use arrayscat::propagator::PropagatorPair;
use arrayscat::scattering::{
    log_spaced, CriticalEnergy, CriticalSweep, IncomingState, SMatrixPoint, Scattering, SweepFits, SweepOptions,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{render_record, render_table, Artifact, Cell, Table};
use crate::CliError;

fn scattering(cfg: &RunConfig) -> Result<Scattering, CliError> {
    let mut sc = Scattering::new(&cfg.lattice, cfg.total_momentum, cfg.tolerances.propagator)?;
    sc.omega_ratio = cfg.omega_ratio;
    Ok(sc)
}

/// Cell centres of an n×n grid over the full zone, row-major in (qx, qy).
fn zone_grid(cfg: &RunConfig) -> Vec<Momentum2> {
    let n = cfg.q_grid;
    let b = cfg.lattice.reciprocal_constant();
    let h = b / n as f64;
    (0..n * n)
        .map(|k| Momentum2::new(-0.5 * b + ((k / n) as f64 + 0.5) * h, -0.5 * b + ((k % n) as f64 + 0.5) * h))
        .collect()
}

fn pairs(sc: &Scattering, energies: &[f64]) -> Result<Vec<PropagatorPair>, CliError> {
    let out: Vec<_> = energies.par_iter().map(|&e| sc.propagator().evaluate(e)).collect();
    Ok(out.into_iter().collect::<Result<Vec<_>, _>>()?)
}

/// Δ⁽²⁾ map over the zone and the critical-point orbits.
pub fn bands(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let band = TwoExcitationBand::new(&cfg.lattice, cfg.total_momentum)?;
    let rows: Vec<Vec<Cell>> = zone_grid(cfg)
        .par_iter()
        .map(|&q| vec![q.kx.into(), q.ky.into(), band.delta2(q).into(), (band.domain(q).index() as i64).into()])
        .collect();
    let mut table = Table::new("bands", &["qx", "qy", "delta2", "domain"]);
    rows.into_iter().for_each(|r| table.push(r));
    let report = band.find_critical_points(&cfg.tolerances.critical_points)?;
    Ok(vec![render_table(&table, "bands", cfg), render_record("critical_points", &report, "bands", cfg)])
}

fn propagator_row(pair: &PropagatorPair) -> Vec<Cell> {
    let p = &pair.plus;
    let mut row = vec![pair.energy.into(), p.l.re.into(), p.l.im.into()];
    for z in p.by_domain {
        row.push(z.re.into());
        row.push(z.im.into());
    }
    row.push(p.error_estimate.into());
    row
}

/// s(E) and L(E + i0) over the energy window.
pub fn smatrix(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let sc = scattering(cfg)?;
    let pairs = pairs(&sc, &cfg.energy_window.energies())?;
    let mut s_table = Table::new("smatrix", &["E", "ReS", "ImS", "mag2", "phase", "in_band"]);
    let mut l_table =
        Table::new("propagator", &["E", "ReL", "ImL", "ReL0", "ImL0", "ReL1", "ImL1", "ReL2", "ImL2", "err"]);
    for pair in &pairs {
        let s = SMatrixPoint::from_pair(sc.total_momentum(), pair);
        s_table.push(vec![
            s.energy.into(),
            s.s.re.into(),
            s.s.im.into(),
            s.magnitude2.into(),
            s.phase.into(),
            (s.in_band as i64).into(),
        ]);
        l_table.push(propagator_row(pair));
    }
    Ok(vec![render_table(&s_table, "smatrix", cfg), render_table(&l_table, "smatrix", cfg)])
}

const SIGMA_COLUMNS: [&str; 5] = ["sigma0", "sigma1", "sigma2", "sigma_tot", "branch2"];

fn sigma_cells(sigma: [f64; 3], branching: [f64; 3]) -> Vec<Cell> {
    let mut v: Vec<Cell> = sigma.iter().map(|s| (*s).into()).collect();
    v.push(sigma.iter().sum::<f64>().into());
    v.push(branching[2].into());
    v
}

/// Photon-pair cross sections over the energy window, and the dark-pair
/// q-map with E = Δ⁽²⁾(q) (L interpolated linearly between window points).
pub fn xsection(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let sc = scattering(cfg)?;
    let energies = cfg.energy_window.energies();
    let pairs = pairs(&sc, &energies)?;
    let total = sc.total_momentum();
    let table_ref = sc.band().table();

    let mut cols = vec!["E"];
    cols.extend(SIGMA_COLUMNS);
    let mut photons = Table::new("xsection_photons", &cols);
    for pair in &pairs {
        let state = IncomingState::counter_propagating_pair(total, pair.energy, sc.omega_ratio)?;
        let kin = state.kinematics(table_ref, sc.omega_ratio)?;
        let kin = arrayscat::scattering::IncomingKinematics { energy: pair.energy, ..kin };
        let rec = sc.cross_section_with(&state, kin, pair, None)?;
        let mut row = vec![pair.energy.into()];
        row.extend(sigma_cells(rec.sigma, rec.branching));
        photons.push(row);
    }

    let band = sc.band();
    let (lo, hi) = (energies[0], energies[energies.len() - 1]);
    let rows: Vec<Result<Vec<Cell>, CliError>> = zone_grid(cfg)
        .par_iter()
        .map(|&q| {
            let e = band.delta2(q);
            let mut row: Vec<Cell> = vec![q.kx.into(), q.ky.into(), e.into()];
            if band.domain(q) != Domain::D0 || !(e >= lo && e <= hi) || energies.len() < 2 {
                row.extend([f64::NAN; 5].map(Cell::from));
                return Ok(row);
            }
            let k = energies.partition_point(|x| *x <= e).clamp(1, energies.len() - 1);
            let state = IncomingState::dark_pair(total, q);
            let kin = state.kinematics(table_ref, sc.omega_ratio)?;
            let pair = pairs[k - 1].interpolate(&pairs[k], kin.energy);
            let rec = sc.cross_section_with(&state, kin, &pair, None)?;
            row.extend(sigma_cells(rec.sigma, rec.branching));
            Ok(row)
        })
        .collect();
    let mut cols = vec!["qx", "qy", "E"];
    cols.extend(SIGMA_COLUMNS);
    let mut map = Table::new("xsection_map", &cols);
    for r in rows {
        map.push(r?);
    }
    Ok(vec![render_table(&photons, "xsection", cfg), render_table(&map, "xsection", cfg)])
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalFits {
    pub critical: CriticalEnergy,
    pub e_crit: f64,
    pub q_crit: Momentum2,
    pub side: f64,
    pub fits: SweepFits,
    /// Every off-critical cell has the expected inverse-log power.
    pub matches_table: bool,
}

/// ΔE sweeps into every distinct maximum and saddle, with class fits.
pub fn scaling(cfg: &RunConfig) -> Result<Vec<Artifact>, CliError> {
    let sc = scattering(cfg)?;
    let report = sc.band().find_critical_points(&cfg.tolerances.critical_points)?;
    let s = &cfg.scaling;
    let des = log_spaced(s.delta_min, s.delta_max, s.per_decade);
    let opts = SweepOptions { side: s.side, line_offset: s.line_offset, contour_grid: s.contour_grid };

    let mut seen: Vec<f64> = Vec::new();
    let mut sweeps = Vec::new();
    for cp in &report.points {
        let usable = match cp.kind {
            CriticalKind::Maximum => s.side < 0.0,
            CriticalKind::Saddle => true,
            _ => false,
        };
        if !usable || seen.iter().any(|e| (e - cp.energy).abs() < 1e-6) {
            continue;
        }
        seen.push(cp.energy);
        sweeps.push(CriticalSweep::run(&sc, cp, &des, &opts)?);
    }

    let mut table = Table::new(
        "scaling",
        &[
            "critical", "e_crit", "dE", "E", "ReL", "ImL", "mag2", "phase", "photon_sigma0", "photon_sigma1", "photon_sigma2",
            "crit_sigma0", "crit_sigma1", "crit_sigma2", "line_sigma0", "line_sigma1", "line_sigma2", "line_overlap",
        ],
    );
    let mut fits = Vec::new();
    for sw in &sweeps {
        let label = match sw.critical {
            CriticalEnergy::Max => "max",
            CriticalEnergy::Saddle => "saddle",
        };
        for p in &sw.points {
            let mut row: Vec<Cell> =
                vec![label.into(), sw.e_crit.into(), p.delta_e.into(), p.energy.into(), p.l.re.into(), p.l.im.into()];
            row.extend([p.s.magnitude2.into(), p.s.phase.into()]);
            row.extend(p.photons.sigma.map(Cell::from));
            row.extend(p.dark_at_critical.sigma.map(Cell::from));
            match &p.dark_on_line {
                Some(r) => {
                    row.extend(r.sigma.map(Cell::from));
                    row.push(r.eigenstate_overlap.unwrap_or(f64::NAN).into());
                }
                None => row.extend([f64::NAN; 4].map(Cell::from)),
            }
            table.push(row);
        }
        let f = sw.fits()?;
        let matches_table = f.photons.iter().chain(&f.dark_on_line).all(|x| x.matches_expected());
        fits.push(CriticalFits { critical: sw.critical, e_crit: sw.e_crit, q_crit: sw.q_crit, side: sw.side, fits: f, matches_table });
    }
    Ok(vec![render_table(&table, "scaling", cfg), render_record("fits", &fits, "scaling", cfg)])
}
