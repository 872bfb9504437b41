//! Incoming two-particle states and their kinematics.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bands::TwoExcitationBand;
use crate::error::{Error, Result};
use crate::lattice::{DispersionTable, Momentum2};

/// Which side of the array a photon arrives from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Incidence {
    /// Travelling towards −z.
    FromAbove,
    /// Travelling towards +z.
    FromBelow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Photon {
    pub in_plane: Momentum2,
    /// Out-of-plane wavevector magnitude, > 0.
    pub chi: f64,
    pub incidence: Incidence,
}

impl Photon {
    /// Normally incident photon detuned by `detuning` (Γ0) from resonance.
    pub fn normal(detuning: f64, incidence: Incidence, omega_ratio: f64) -> Photon {
        Photon { in_plane: Momentum2::ZERO, chi: 1.0 + detuning / omega_ratio, incidence }
    }

    pub fn wavenumber(&self) -> f64 {
        self.in_plane.norm().hypot(self.chi)
    }

    /// Rotating-frame energy (|k| − k0)·ω_eg/Γ0, in Γ0.
    pub fn energy(&self, omega_ratio: f64) -> f64 {
        (self.wavenumber() - 1.0) * omega_ratio
    }

    /// Unit propagation direction.
    fn direction(&self) -> [f64; 3] {
        let k = self.wavenumber();
        let z = match self.incidence {
            Incidence::FromAbove => -self.chi,
            Incidence::FromBelow => self.chi,
        };
        [self.in_plane.kx / k, self.in_plane.ky / k, z / k]
    }

    fn validate(&self) -> Result<()> {
        if !(self.chi > 0.0) || !self.chi.is_finite() {
            return Err(Error::InvalidInput(format!("photon needs chi > 0 (got {})", self.chi)));
        }
        if !(self.in_plane.norm() < 1.0) {
            return Err(Error::InvalidInput(format!(
                "photon in-plane momentum {:.4} must lie inside the light cone",
                self.in_plane.norm()
            )));
        }
        Ok(())
    }
}

/// Channel α = number of photons in the incoming pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "channel", rename_all = "snake_case")]
pub enum IncomingState {
    /// α = 0: two dark spin waves.
    Dark { p1: Momentum2, p2: Momentum2 },
    /// α = 1: one photon and one dark spin wave.
    Mixed { photon: Photon, dark: Momentum2 },
    /// α = 2: two photons.
    Photons { photons: [Photon; 2] },
}

/// Derived quantities of an incoming state.
///
/// `v_g` is in units of Γ0/k0 for α = 0 and of c for α = 1, 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncomingKinematics {
    pub alpha: usize,
    /// Zone-reduced total in-plane momentum.
    pub total: Momentum2,
    pub energy: f64,
    pub v_g: f64,
    /// Relative momentum q with constituents P/2 ± q (α = 0 only).
    pub relative: Option<Momentum2>,
}

impl IncomingState {
    /// Counter-propagating, normally incident photons sharing `energy`.
    pub fn normal_photon_pair(energy: f64, omega_ratio: f64) -> IncomingState {
        IncomingState::Photons {
            photons: [
                Photon::normal(0.5 * energy, Incidence::FromAbove, omega_ratio),
                Photon::normal(0.5 * energy, Incidence::FromBelow, omega_ratio),
            ],
        }
    }

    /// Counter-propagating photons, each with in-plane momentum P/2 and
    /// half the energy.
    pub fn counter_propagating_pair(total: Momentum2, energy: f64, omega_ratio: f64) -> Result<IncomingState> {
        let half = total * 0.5;
        let k = 1.0 + 0.5 * energy / omega_ratio;
        let chi2 = k * k - half.norm_sqr();
        if !(chi2 > 0.0) {
            return Err(Error::InvalidInput(format!("no propagating photon with in-plane momentum {:.4}", half.norm())));
        }
        let photon = |incidence| Photon { in_plane: half, chi: chi2.sqrt(), incidence };
        Ok(IncomingState::Photons { photons: [photon(Incidence::FromAbove), photon(Incidence::FromBelow)] })
    }

    /// Dark pair with constituents P/2 ± q.
    pub fn dark_pair(total: Momentum2, relative: Momentum2) -> IncomingState {
        IncomingState::Dark { p1: total * 0.5 + relative, p2: total * 0.5 - relative }
    }

    pub fn alpha(&self) -> usize {
        match self {
            IncomingState::Dark { .. } => 0,
            IncomingState::Mixed { .. } => 1,
            IncomingState::Photons { .. } => 2,
        }
    }

    /// `omega_ratio` is ω_eg/Γ0, converting photon wavenumbers to energies.
    pub fn kinematics(&self, table: &Arc<DispersionTable>, omega_ratio: f64) -> Result<IncomingKinematics> {
        if !(omega_ratio > 0.0) {
            return Err(Error::InvalidInput(format!("omega_ratio must be positive (got {omega_ratio})")));
        }
        let spec = table.spec();
        let dark_check = |p: Momentum2| -> Result<()> {
            if p.reduce_to_bz(spec).norm() <= 1.0 {
                return Err(Error::InvalidInput(format!(
                    "dark constituent ({:.4}, {:.4}) lies inside the light cone",
                    p.kx, p.ky
                )));
            }
            Ok(())
        };
        match *self {
            IncomingState::Dark { p1, p2 } => {
                dark_check(p1)?;
                dark_check(p2)?;
                let total = (p1 + p2).reduce_to_bz(spec);
                let q = p1 - total * 0.5;
                let band = TwoExcitationBand::with_table(table.clone(), total);
                let g = band.gradient(q);
                Ok(IncomingKinematics {
                    alpha: 0,
                    total,
                    energy: table.shift(p1) + table.shift(p2),
                    v_g: g[0].hypot(g[1]),
                    relative: Some(q),
                })
            }
            IncomingState::Mixed { photon, dark } => {
                photon.validate()?;
                dark_check(dark)?;
                let h = 1e-4;
                let dx = (table.shift(dark + Momentum2::new(h, 0.0)) - table.shift(dark - Momentum2::new(h, 0.0))) / (2.0 * h);
                let dy = (table.shift(dark + Momentum2::new(0.0, h)) - table.shift(dark - Momentum2::new(0.0, h))) / (2.0 * h);
                let u = photon.direction();
                let rel = [u[0] - dx / omega_ratio, u[1] - dy / omega_ratio, u[2]];
                Ok(IncomingKinematics {
                    alpha: 1,
                    total: (photon.in_plane + dark).reduce_to_bz(spec),
                    energy: photon.energy(omega_ratio) + table.shift(dark),
                    v_g: norm3(rel),
                    relative: None,
                })
            }
            IncomingState::Photons { photons } => {
                photons[0].validate()?;
                photons[1].validate()?;
                let (u, w) = (photons[0].direction(), photons[1].direction());
                Ok(IncomingKinematics {
                    alpha: 2,
                    total: (photons[0].in_plane + photons[1].in_plane).reduce_to_bz(spec),
                    energy: photons[0].energy(omega_ratio) + photons[1].energy(omega_ratio),
                    v_g: norm3([u[0] - w[0], u[1] - w[1], u[2] - w[2]]),
                    relative: None,
                })
            }
        }
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;

    fn table() -> Arc<DispersionTable> {
        DispersionTable::shared(&LatticeSpec::square(0.2)).unwrap()
    }

    #[test]
    fn counter_propagating_normal_photons() {
        let t = table();
        let k = IncomingState::normal_photon_pair(1.3, 1e8).kinematics(&t, 1e8).unwrap();
        assert_eq!(k.alpha, 2);
        assert!((k.energy - 1.3).abs() < 1e-6);
        assert!((k.v_g - 2.0).abs() < 1e-12);
        assert_eq!(k.total, Momentum2::ZERO);
    }

    #[test]
    fn co_propagating_photons_have_no_relative_speed() {
        let p = Photon::normal(0.5, Incidence::FromAbove, 1e8);
        let k = IncomingState::Photons { photons: [p, p] }.kinematics(&table(), 1e8).unwrap();
        assert_eq!(k.v_g, 0.0);
    }

    #[test]
    fn dark_pair_energy_and_relative_momentum() {
        let t = table();
        let total = Momentum2::new(0.2, 0.0);
        let q = Momentum2::new(1.7, 0.9);
        let k = IncomingState::dark_pair(total, q).kinematics(&t, 1e8).unwrap();
        let band = TwoExcitationBand::with_table(t.clone(), total);
        assert!((k.energy - band.delta2(q)).abs() < 1e-12);
        assert!((k.v_g - band.group_velocity(q).unwrap()).abs() < 1e-9);
        assert!((k.relative.unwrap() - q).norm() < 1e-12);
    }

    #[test]
    fn wrapped_total_momentum_keeps_constituents() {
        let t = table();
        // p1 + p2 leaves the zone; P is reduced and q shifted so P/2 ± q ≡ p1, p2
        let (p1, p2) = (Momentum2::new(2.3, 0.4), Momentum2::new(1.9, -1.6));
        let k = IncomingState::Dark { p1, p2 }.kinematics(&t, 1e8).unwrap();
        let band = TwoExcitationBand::with_table(t.clone(), k.total);
        assert!((band.delta2(k.relative.unwrap()) - k.energy).abs() < 1e-10);
    }

    #[test]
    fn invalid_states_are_rejected() {
        let t = table();
        let inside = IncomingState::Dark { p1: Momentum2::new(0.5, 0.0), p2: Momentum2::new(2.0, 0.0) };
        assert!(matches!(inside.kinematics(&t, 1e8), Err(Error::InvalidInput(_))));
        let outside = Photon { in_plane: Momentum2::new(1.2, 0.0), chi: 0.3, incidence: Incidence::FromAbove };
        let mixed = IncomingState::Mixed { photon: outside, dark: Momentum2::new(2.0, 0.0) };
        assert!(mixed.kinematics(&t, 1e8).is_err());
        assert!(IncomingState::normal_photon_pair(0.0, 1e8).kinematics(&t, -1.0).is_err());
    }

    #[test]
    fn mixed_channel_speed_is_close_to_c() {
        let t = table();
        let photon = Photon::normal(0.2, Incidence::FromAbove, 1e8);
        let k = IncomingState::Mixed { photon, dark: Momentum2::new(2.0, 1.0) }.kinematics(&t, 1e8).unwrap();
        assert_eq!(k.alpha, 1);
        assert!((k.v_g - 1.0).abs() < 1e-6);
        assert_eq!(k.total, Momentum2::new(2.0, 1.0));
    }
}
