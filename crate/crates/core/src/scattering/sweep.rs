//! Energy sweeps towards a critical point of the two-excitation band.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    prefactor_power, scaling_fit, CriticalEnergy, CrossSectionRecord, IncomingState, SMatrixPoint, ScalingFit,
    Scattering,
};
use crate::bands::{sym_eigenvalues, sym_eigenvector, CriticalKind, CriticalPoint, TwoExcitationBand};
use crate::error::{Error, Result};
use crate::lattice::Momentum2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// +1 sweeps above E_crit, −1 below.
    pub side: f64,
    /// Distance (k0) from the saddle at which the saddle-line probe starts.
    pub line_offset: f64,
    /// Marching-squares resolution for the eigenvector normalisation.
    pub contour_grid: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { side: -1.0, line_offset: 1.0, contour_grid: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub delta_e: f64,
    pub energy: f64,
    /// L(P, E + i0)
    pub l: Complex64,
    pub s: SMatrixPoint,
    /// Counter-propagating photon pair (α = 2).
    pub photons: CrossSectionRecord,
    /// Dark pair on a ray into the critical q (α = 0).
    pub dark_at_critical: CrossSectionRecord,
    /// Dark pair on a saddle line away from the saddle (α = 0, saddles only).
    pub dark_on_line: Option<CrossSectionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSweep {
    pub critical: CriticalEnergy,
    pub e_crit: f64,
    pub q_crit: Momentum2,
    pub side: f64,
    pub points: Vec<SweepPoint>,
}

/// Fits for every populated (α, β) cell of one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFits {
    pub photons: Vec<ScalingFit>,
    pub dark_on_line: Vec<ScalingFit>,
    pub dark_at_critical: Vec<ScalingFit>,
    /// ΔE power of σ_{0,β} at the critical q relative to σ_{2,β}, with its R².
    pub prefactor_power: Vec<(usize, f64, f64)>,
}

fn critical_energy(kind: CriticalKind) -> Result<CriticalEnergy> {
    match kind {
        CriticalKind::Maximum => Ok(CriticalEnergy::Max),
        CriticalKind::Saddle => Ok(CriticalEnergy::Saddle),
        other => Err(Error::InvalidInput(format!("no scaling sweep for a {other:?} point"))),
    }
}

impl CriticalSweep {
    pub fn run(sc: &Scattering, cp: &CriticalPoint, delta_es: &[f64], opts: &SweepOptions) -> Result<CriticalSweep> {
        let critical = critical_energy(cp.kind)?;
        if critical == CriticalEnergy::Max && opts.side > 0.0 {
            return Err(Error::InvalidInput("nothing is on shell above a band maximum".into()));
        }
        let band = sc.band();
        let total = sc.total_momentum();
        let h = cp.hessian;
        let eigs = sym_eigenvalues(&h);
        // Approach direction: the Hessian eigenvector whose curvature moves Δ towards the sweep side.
        let lambda = if opts.side < 0.0 { eigs[0] } else { eigs[1] };
        if lambda * opts.side <= 0.0 {
            return Err(Error::InvalidInput("no descent direction towards the requested side".into()));
        }
        let ray = sym_eigenvector(&h, lambda);
        let line_start = if critical == CriticalEnergy::Saddle {
            // Saddle-line direction: vᵀHv = 0 with v = cos θ e₁ + sin θ e₂.
            let e1 = sym_eigenvector(&h, eigs[0]);
            let e2 = sym_eigenvector(&h, eigs[1]);
            let t = (-eigs[0] / eigs[1]).sqrt().atan();
            let dir = e1 * t.cos() + e2 * t.sin();
            Some(project_onto(band, cp.q_crit + dir * opts.line_offset, cp.energy)?)
        } else {
            None
        };
        let points: Vec<Result<SweepPoint>> = delta_es
            .par_iter()
            .map(|&de| {
                let energy = cp.energy + opts.side * de;
                let pair = sc.propagator().evaluate(energy)?;
                let s = SMatrixPoint::from_pair(total, &pair);
                let photon_state = IncomingState::counter_propagating_pair(total, energy, sc.omega_ratio)?;
                let kin = photon_state.kinematics(band.table(), sc.omega_ratio)?;
                let kin = super::IncomingKinematics { energy, ..kin };
                let photons = sc.cross_section_with(&photon_state, kin, &pair, None)?;

                let q = solve_on_ray(sc, cp.q_crit, ray, lambda, energy)?;
                let dark = IncomingState::dark_pair(total, q);
                let kin = dark.kinematics(band.table(), sc.omega_ratio)?;
                let kin = super::IncomingKinematics { energy, ..kin };
                let dark_at_critical = sc.cross_section_with(&dark, kin, &pair, None)?;

                let dark_on_line = match line_start {
                    Some(q0) => {
                        let q = project_onto(band, q0, energy)?;
                        let state = IncomingState::dark_pair(total, q);
                        let kin = state.kinematics(band.table(), sc.omega_ratio)?;
                        let kin = super::IncomingKinematics { energy, ..kin };
                        let norm = 2.0 * band.contour_dos(energy, opts.contour_grid);
                        Some(sc.cross_section_with(&state, kin, &pair, Some(norm))?)
                    }
                    None => None,
                };
                Ok(SweepPoint { delta_e: de, energy, l: pair.plus.l, s, photons, dark_at_critical, dark_on_line })
            })
            .collect();
        Ok(CriticalSweep {
            critical,
            e_crit: cp.energy,
            q_crit: cp.q_crit,
            side: opts.side,
            points: points.into_iter().collect::<Result<Vec<_>>>()?,
        })
    }

    pub fn delta_es(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.delta_e).collect()
    }

    /// Class fits for each channel with a nonzero density.
    pub fn fits(&self) -> Result<SweepFits> {
        let de = self.delta_es();
        let column = |f: &dyn Fn(&SweepPoint) -> Option<f64>| -> Option<Vec<f64>> {
            self.points.iter().map(f).collect::<Option<Vec<f64>>>()
        };
        let populated = |v: &[f64]| v.iter().all(|s| *s > 0.0 && s.is_finite());
        let mut out = SweepFits { photons: vec![], dark_on_line: vec![], dark_at_critical: vec![], prefactor_power: vec![] };
        for beta in 0..3 {
            let photon = column(&|p| Some(p.photons.sigma[beta])).unwrap();
            let crit = column(&|p| Some(p.dark_at_critical.sigma[beta])).unwrap();
            if populated(&photon) {
                out.photons.push(scaling_fit((2, beta), self.critical, false, &de, &photon)?);
            }
            if populated(&crit) {
                out.dark_at_critical.push(scaling_fit((0, beta), self.critical, true, &de, &crit)?);
                if populated(&photon) {
                    let (p, r2) = prefactor_power(&de, &crit, &photon)?;
                    out.prefactor_power.push((beta, p, r2));
                }
            }
            if let Some(line) = column(&|p| p.dark_on_line.as_ref().map(|r| r.sigma[beta])) {
                if populated(&line) {
                    out.dark_on_line.push(scaling_fit((0, beta), self.critical, false, &de, &line)?);
                }
            }
        }
        Ok(out)
    }
}

/// Damped Newton steps along the gradient onto Δ⁽²⁾ = E.
fn project_onto(band: &TwoExcitationBand, q: Momentum2, energy: f64) -> Result<Momentum2> {
    let cap = 0.05 * band.spec().bz_half_width();
    let mut q = q;
    for _ in 0..200 {
        let r = band.delta2(q) - energy;
        if r.abs() < 1e-12 {
            return Ok(q);
        }
        let g = band.gradient(q);
        let n2 = g[0] * g[0] + g[1] * g[1];
        if n2 < 1e-20 {
            break;
        }
        let step = Momentum2::new(-r * g[0] / n2, -r * g[1] / n2);
        let len = step.norm();
        q = q + if len > cap { step * (cap / len) } else { step };
    }
    Err(Error::Domain(format!("could not place a probe on the contour at E = {energy}")))
}

/// q = q_c + t·d with Δ⁽²⁾(q) = E, starting from the quadratic estimate.
fn solve_on_ray(sc: &Scattering, qc: Momentum2, d: Momentum2, lambda: f64, energy: f64) -> Result<Momentum2> {
    let band = sc.band();
    let e0 = band.delta2(qc);
    let f = |t: f64| band.delta2(qc + d * t) - energy;
    let mut t = (2.0 * (energy - e0) / lambda).max(0.0).sqrt();
    for _ in 0..50 {
        let r = f(t);
        if r.abs() < 1e-13 {
            return Ok(qc + d * t);
        }
        let h = 1e-6 * t.max(1e-4);
        let slope = (f(t + h) - f(t - h)) / (2.0 * h);
        if slope == 0.0 {
            break;
        }
        t -= r / slope;
    }
    if f(t).abs() < 1e-11 {
        return Ok(qc + d * t);
    }
    Err(Error::Domain(format!("no on-shell point on the ray at E = {energy}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;

    #[test]
    fn probe_lands_on_the_contour() {
        let band = TwoExcitationBand::new(&LatticeSpec::square(0.2), Momentum2::ZERO).unwrap();
        let e = band.delta2(Momentum2::new(0.0, 0.5 * band.spec().reciprocal_constant()));
        let q = project_onto(&band, Momentum2::new(1.0, 2.0), e - 1e-3).unwrap();
        assert!((band.delta2(q) - (e - 1e-3)).abs() < 1e-12);
    }

    #[test]
    fn sweeps_need_a_max_or_saddle() {
        assert_eq!(critical_energy(CriticalKind::Maximum).unwrap(), CriticalEnergy::Max);
        assert_eq!(critical_energy(CriticalKind::Saddle).unwrap(), CriticalEnergy::Saddle);
        assert!(critical_energy(CriticalKind::Minimum).is_err());
    }
}
