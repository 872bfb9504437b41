//! Two-excitation scattering observables built from the local propagator:
//! the dark-channel S-matrix eigenvalue s = L(E − i0)/L(E + i0), the atomic
//! T-matrix −1/L(E + i0), partial cross sections and their scaling.

mod fit;
mod incoming;
mod sweep;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bands::TwoExcitationBand;
use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, Momentum2};
use crate::propagator::{LocalPropagator, PropagatorOptions, PropagatorPair};

pub use fit::{
    candidates, class_r_squared, expected_log_power, linear_fit, log_spaced, prefactor_power, r_squared, scaling_fit, select_class,
    ClassScore, CriticalEnergy, ScalingClass, ScalingFit, AMBIGUITY_MARGIN,
};
pub use incoming::{Incidence, IncomingKinematics, IncomingState, Photon};
pub use sweep::{CriticalSweep, SweepFits, SweepOptions, SweepPoint};

/// |L| below which T is treated as singular.
pub const SINGULAR_L: f64 = 1e-10;

/// Default ω_eg/Γ0 (optical transition).
pub const DEFAULT_OMEGA_RATIO: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SMatrixPoint {
    pub total: Momentum2,
    pub energy: f64,
    pub s: Complex64,
    pub magnitude2: f64,
    /// arg s in (−π, π].
    pub phase: f64,
    /// False when no dark pair is on shell at E; then s = 1 identically.
    pub in_band: bool,
}

impl SMatrixPoint {
    pub fn from_pair(total: Momentum2, pair: &PropagatorPair) -> SMatrixPoint {
        let s = pair.minus.l / pair.plus.l;
        let in_band = pair.plus.by_domain[0].im < 0.0;
        let s = if in_band { s } else { Complex64::new(1.0, 0.0) };
        let mut phase = s.arg();
        if phase <= -PI {
            phase += 2.0 * PI;
        }
        SMatrixPoint { total, energy: pair.energy, s, magnitude2: s.norm_sqr(), phase, in_band }
    }

    /// Probability 1 − |s|² of leaving the dark channel.
    pub fn loss(&self) -> f64 {
        1.0 - self.magnitude2
    }
}

/// 1 − |s|² from the densities alone: 4π² ρ₀ (ρ₁ + ρ₂) / |L(E + i0)|².
pub fn photon_loss_from_densities(pair: &PropagatorPair) -> f64 {
    let rho = pair.plus.densities();
    4.0 * PI * PI * rho[0] * (rho[1] + rho[2]) / pair.plus.l.norm_sqr()
}

/// T̄ = −1/L(E + i0).
pub fn t_matrix_from(l_plus: Complex64) -> Result<Complex64> {
    if l_plus.norm() < SINGULAR_L {
        return Err(Error::SingularTMatrix(l_plus.norm()));
    }
    Ok(-1.0 / l_plus)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourWeight {
    pub q: Momentum2,
    /// N / √v_g
    pub weight: f64,
    /// Arc length attributed to this vertex.
    pub dl: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossSectionStatus {
    Finite,
    /// v_g = 0: the incoming pair sits exactly on a critical point.
    Divergent { class: ScalingClass },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSectionRecord {
    pub incoming: IncomingState,
    pub kinematics: IncomingKinematics,
    /// (σ_{α,0}, σ_{α,1}, σ_{α,2}), with a_α = `a_alpha`.
    pub sigma: [f64; 3],
    pub sigma_tot: f64,
    /// ρ_β / ρ, independent of v_g and |T̄|².
    pub branching: [f64; 3],
    pub t_abs2: f64,
    pub densities: [f64; 3],
    pub status: CrossSectionStatus,
    /// Norm density |w(q)|² of the S-matrix eigenvector at the incoming q
    /// (α = 0 only).
    pub eigenstate_overlap: Option<f64>,
}

/// σ_{α,β} = (4π a_α / v_g) |T̄|² ρ_β with ρ_β = −Im L_β(E + i0)/π.
pub fn partial_cross_sections(pair: &PropagatorPair, v_g: f64, a_alpha: f64) -> Result<([f64; 3], f64, [f64; 3])> {
    let t = t_matrix_from(pair.plus.l)?;
    let rho = pair.plus.densities();
    let t2 = t.norm_sqr();
    let sigma = rho.map(|r| 4.0 * PI * a_alpha / v_g * t2 * r);
    Ok((sigma, t2, rho))
}

/// ρ_β / Σρ; zeros when nothing is on shell.
pub fn branching_ratios(rho: [f64; 3]) -> [f64; 3] {
    let total: f64 = rho.iter().sum();
    if total > 0.0 {
        rho.map(|r| r / total)
    } else {
        [0.0; 3]
    }
}

/// Scattering at one total momentum.
#[derive(Debug, Clone)]
pub struct Scattering {
    propagator: LocalPropagator,
    pub omega_ratio: f64,
    pub a_alpha: f64,
}

impl Scattering {
    pub fn new(spec: &LatticeSpec, total: Momentum2, opts: PropagatorOptions) -> Result<Self> {
        Ok(Scattering { propagator: LocalPropagator::new(spec, total, opts)?, omega_ratio: DEFAULT_OMEGA_RATIO, a_alpha: 1.0 })
    }

    pub fn from_propagator(propagator: LocalPropagator) -> Self {
        Scattering { propagator, omega_ratio: DEFAULT_OMEGA_RATIO, a_alpha: 1.0 }
    }

    pub fn propagator(&self) -> &LocalPropagator {
        &self.propagator
    }

    pub fn band(&self) -> &TwoExcitationBand {
        self.propagator.band()
    }

    pub fn total_momentum(&self) -> Momentum2 {
        self.band().total_momentum()
    }

    pub fn t_matrix(&self, energy: f64) -> Result<Complex64> {
        t_matrix_from(self.propagator.evaluate(energy)?.plus.l)
    }

    pub fn s_eigenvalue(&self, energy: f64) -> Result<SMatrixPoint> {
        Ok(SMatrixPoint::from_pair(self.total_momentum(), &self.propagator.evaluate(energy)?))
    }

    /// Eigenvector weights N/√v_g on the dark on-shell contour, normalised
    /// so Σ w² dl = 1. The contour covers the full zone (q and −q).
    pub fn eigenvector_weights(&self, energy: f64, grid_n: usize) -> Result<Vec<ContourWeight>> {
        eigenvector_weights(self.band(), energy, grid_n)
    }

    /// Cross sections for an incoming state whose total momentum matches this P.
    pub fn cross_section(&self, incoming: &IncomingState) -> Result<CrossSectionRecord> {
        let kin = incoming.kinematics(self.band().table(), self.omega_ratio)?;
        if self.band().periodic_distance(kin.total, self.total_momentum()) > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "incoming total momentum ({:.4}, {:.4}) differs from P = ({:.4}, {:.4})",
                kin.total.kx,
                kin.total.ky,
                self.total_momentum().kx,
                self.total_momentum().ky
            )));
        }
        let pair = self.propagator.evaluate(kin.energy)?;
        self.cross_section_with(incoming, kin, &pair, None)
    }

    /// Same as [`Self::cross_section`] with a precomputed propagator at
    /// `kin.energy`, and optionally the eigenvector normalisation ∫dl/v_g
    /// over the full zone.
    pub fn cross_section_with(
        &self,
        incoming: &IncomingState,
        kin: IncomingKinematics,
        pair: &PropagatorPair,
        contour_norm: Option<f64>,
    ) -> Result<CrossSectionRecord> {
        if (pair.energy - kin.energy).abs() > 1e-9 * kin.energy.abs().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "propagator energy {} does not match the incoming energy {}",
                pair.energy, kin.energy
            )));
        }
        let (status, v_g) = if kin.v_g > 1e-12 {
            (CrossSectionStatus::Finite, kin.v_g)
        } else {
            (CrossSectionStatus::Divergent { class: self.divergent_class(&kin) }, 0.0)
        };
        let (sigma, t2, rho) = if v_g > 0.0 {
            partial_cross_sections(pair, v_g, self.a_alpha)?
        } else {
            let t2 = t_matrix_from(pair.plus.l)?.norm_sqr();
            let rho = pair.plus.densities();
            (rho.map(|r| if r > 0.0 { f64::INFINITY } else { 0.0 }), t2, rho)
        };
        let eigenstate_overlap = match (kin.relative, contour_norm) {
            (Some(_), Some(norm)) if v_g > 0.0 && norm > 0.0 => Some(1.0 / (v_g * norm)),
            _ => None,
        };
        Ok(CrossSectionRecord {
            incoming: *incoming,
            kinematics: kin,
            sigma,
            sigma_tot: sigma.iter().sum(),
            branching: branching_ratios(rho),
            t_abs2: t2,
            densities: rho,
            status,
            eigenstate_overlap,
        })
    }

    /// Scaling class reported when v_g vanishes, from the Hessian at q.
    fn divergent_class(&self, kin: &IncomingKinematics) -> ScalingClass {
        let Some(q) = kin.relative else { return ScalingClass::Log2 };
        let h = self.band().hessian(q);
        let det = h[0][0] * h[1][1] - h[0][1] * h[0][1];
        if det < 0.0 {
            ScalingClass::InvSqrtDeltaLog1
        } else {
            ScalingClass::InvSqrtDeltaLog2
        }
    }
}

pub fn eigenvector_weights(band: &TwoExcitationBand, energy: f64, grid_n: usize) -> Result<Vec<ContourWeight>> {
    let mut out = Vec::new();
    for line in band.contours(energy, grid_n) {
        let n = line.points.len();
        let mut dl = vec![0.0; n];
        for k in 0..line.segment_count() {
            let (a, b) = line.segment(k);
            let len = band.periodic_distance(line.points[a], line.points[b]);
            dl[a] += 0.5 * len;
            dl[b] += 0.5 * len;
        }
        for (q, dl) in line.points.iter().zip(dl) {
            let g = band.gradient(*q);
            let v = g[0].hypot(g[1]);
            if v > 0.0 && dl > 0.0 {
                out.push(ContourWeight { q: *q, weight: 1.0 / v.sqrt(), dl });
            }
        }
    }
    let norm: f64 = out.iter().map(|w| w.weight * w.weight * w.dl).sum();
    if out.is_empty() || !(norm > 0.0) {
        return Err(Error::EmptyContour(energy));
    }
    let scale = 1.0 / norm.sqrt();
    for w in &mut out {
        w.weight *= scale;
    }
    Ok(out)
}

/// Fraction of the eigenvector norm within `radius` of any of `centres`.
pub fn norm_fraction_near(band: &TwoExcitationBand, weights: &[ContourWeight], centres: &[Momentum2], radius: f64) -> f64 {
    weights
        .iter()
        .filter(|w| centres.iter().any(|c| band.periodic_distance(*c, w.q) < radius))
        .map(|w| w.weight * w.weight * w.dl)
        .sum()
}

pub fn t_matrix(spec: &LatticeSpec, total: Momentum2, energy: f64) -> Result<Complex64> {
    Scattering::new(spec, total, PropagatorOptions::default())?.t_matrix(energy)
}

pub fn s_eigenvalue(spec: &LatticeSpec, total: Momentum2, energy: f64) -> Result<SMatrixPoint> {
    Scattering::new(spec, total, PropagatorOptions::default())?.s_eigenvalue(energy)
}

/// Cross sections for `incoming` at its own total momentum.
pub fn cross_section(spec: &LatticeSpec, incoming: &IncomingState, omega_ratio: f64) -> Result<CrossSectionRecord> {
    let table = crate::lattice::DispersionTable::shared(spec)?;
    let kin = incoming.kinematics(&table, omega_ratio)?;
    let mut sc = Scattering::new(spec, kin.total, PropagatorOptions::default())?;
    sc.omega_ratio = omega_ratio;
    sc.cross_section(incoming)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scattering() -> Scattering {
        Scattering::new(&LatticeSpec::square(0.2), Momentum2::ZERO, PropagatorOptions::default()).unwrap()
    }

    #[test]
    fn s_is_inside_the_unit_disk_and_matches_the_density_identity() {
        let sc = scattering();
        for e in [0.5, 1.5, 2.0] {
            let pair = sc.propagator().evaluate(e).unwrap();
            let s = SMatrixPoint::from_pair(Momentum2::ZERO, &pair);
            assert!(s.in_band);
            assert!(s.magnitude2 <= 1.0 + 1e-6, "{s:?}");
            assert!((s.loss() - photon_loss_from_densities(&pair)).abs() < 1e-9, "{s:?}");
        }
    }

    #[test]
    fn above_the_band_s_is_one() {
        let s = scattering().s_eigenvalue(3.0).unwrap();
        assert!(!s.in_band);
        assert_eq!(s.s, Complex64::new(1.0, 0.0));
        assert_eq!(s.phase, 0.0);
    }

    #[test]
    fn t_matrix_large_energy_limit() {
        let t = scattering().t_matrix(100.0).unwrap();
        assert!((t.re / (-100.0 / 12.5) - 1.0).abs() < 1e-2, "{t}");
    }

    #[test]
    fn singular_t_is_an_error() {
        assert!(matches!(t_matrix_from(Complex64::new(0.0, 1e-12)), Err(Error::SingularTMatrix(_))));
    }

    #[test]
    fn photon_pair_cross_sections() {
        let sc = scattering();
        let rec = sc.cross_section(&IncomingState::normal_photon_pair(1.5, DEFAULT_OMEGA_RATIO)).unwrap();
        assert_eq!(rec.status, CrossSectionStatus::Finite);
        assert!((rec.kinematics.v_g - 2.0).abs() < 1e-12);
        assert!(rec.sigma.iter().all(|s| *s >= 0.0));
        assert!((rec.sigma_tot - rec.sigma.iter().sum::<f64>()).abs() < 1e-15);
        assert!((rec.branching.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // dark output dominates
        assert!(rec.sigma[0] > rec.sigma[1] && rec.sigma[0] > rec.sigma[2]);
        for b in 0..3 {
            let ratio = if rec.sigma_tot > 0.0 { rec.sigma[b] / rec.sigma_tot } else { 0.0 };
            assert!((ratio - rec.branching[b]).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_total_momentum_is_rejected() {
        let sc = scattering();
        let inc = IncomingState::dark_pair(Momentum2::new(0.3, 0.0), Momentum2::new(1.8, 0.4));
        assert!(matches!(sc.cross_section(&inc), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn eigenvector_is_normalised() {
        let sc = scattering();
        let w = sc.eigenvector_weights(1.5, 256).unwrap();
        let norm: f64 = w.iter().map(|c| c.weight * c.weight * c.dl).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(matches!(sc.eigenvector_weights(3.0, 128), Err(Error::EmptyContour(_))));
    }

    #[test]
    fn branching_of_nothing_is_zero() {
        assert_eq!(branching_ratios([0.0; 3]), [0.0; 3]);
    }
}
