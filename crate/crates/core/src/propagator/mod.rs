//! Local two-excitation propagator
//! L(P, E ± i0) = ∫_{BZ⁽²⁾} dq / (E ± i0 − ε⁽²⁾(P, q)) and its domain pieces.
//!
//! The zone is covered by a smooth partition of unity. Disks of radius
//! 1 + w around the two light-cone centres are integrated in polar
//! coordinates (see `polar`); the remainder lies in the dark domain, where
//! ε⁽²⁾ is real and the pole is handled by linear-triangle integration
//! (see `triangles`). The width w is chosen per energy so the disks contain no
//! on-shell dark pairs.

mod polar;
mod quad;
mod triangles;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bands::TwoExcitationBand;
use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, Momentum2};

use polar::{bump, Disks};
use triangles::{integrate_rectangle, Vertex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    PlusI0,
    MinusI0,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagatorResult {
    pub l: Complex64,
    /// (L₀, L₁, L₂)
    pub by_domain: [Complex64; 3],
    pub side: Side,
    /// Broadenings used when the value comes from η extrapolation; empty otherwise.
    pub eta_used: Vec<f64>,
    pub error_estimate: f64,
}

impl PropagatorResult {
    /// ρ_β = −Im L_β(E + i0) / π, a density of states (≥ 0). On the −i0
    /// side only the dark part changes sign.
    pub fn densities(&self) -> [f64; 3] {
        let dark_sign = match self.side {
            Side::PlusI0 => -1.0,
            Side::MinusI0 => 1.0,
        };
        [dark_sign * self.by_domain[0].im / PI, -self.by_domain[1].im / PI, -self.by_domain[2].im / PI]
    }
}

/// Both boundary values from a single evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagatorPair {
    pub energy: f64,
    pub plus: PropagatorResult,
    pub minus: PropagatorResult,
    /// Width of the polar annulus around each light-cone circle.
    pub annulus_width: f64,
    pub triangles: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorOptions {
    /// Tolerance on the summed Richardson corrections of the dark-domain
    /// triangle mesh. The sum is a loose bound; the actual error is typically
    /// 10 to 100 times smaller.
    pub abs_tol: f64,
    /// Absolute tolerance of the polar disk integrals.
    pub polar_tol: f64,
    pub max_triangles: usize,
    /// Initial squares per axis over the zone.
    pub initial_grid: usize,
    /// Required gap E − Δ⁽²⁾ inside the polar disks, in Γ0.
    pub energy_margin: f64,
    pub max_width: f64,
    pub min_width: f64,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        PropagatorOptions {
            abs_tol: 1e-2,
            polar_tol: 1e-8,
            max_triangles: 1_500_000,
            initial_grid: 32,
            energy_margin: 0.5,
            max_width: 0.3,
            min_width: 1e-5,
        }
    }
}

impl PropagatorPair {
    /// Componentwise linear interpolation to `energy` between two evaluations.
    pub fn interpolate(&self, other: &PropagatorPair, energy: f64) -> PropagatorPair {
        let t = if other.energy != self.energy { (energy - self.energy) / (other.energy - self.energy) } else { 0.0 };
        let mix = |a: &PropagatorResult, b: &PropagatorResult| PropagatorResult {
            l: a.l + (b.l - a.l) * t,
            by_domain: std::array::from_fn(|k| a.by_domain[k] + (b.by_domain[k] - a.by_domain[k]) * t),
            side: a.side,
            eta_used: Vec::new(),
            error_estimate: a.error_estimate.max(b.error_estimate),
        };
        PropagatorPair {
            energy,
            plus: mix(&self.plus, &other.plus),
            minus: mix(&self.minus, &other.minus),
            annulus_width: self.annulus_width.min(other.annulus_width),
            triangles: self.triangles.max(other.triangles),
        }
    }
}

/// L(P, ·) for one lattice and total momentum.
#[derive(Debug, Clone)]
pub struct LocalPropagator {
    band: TwoExcitationBand,
    opts: PropagatorOptions,
}

impl LocalPropagator {
    pub fn new(spec: &LatticeSpec, total: Momentum2, opts: PropagatorOptions) -> Result<Self> {
        if spec.spacing_d >= 0.5 {
            return Err(Error::Unsupported(format!(
                "propagator needs spacing_d < 0.5 so only the zeroth diffraction order propagates (got {})",
                spec.spacing_d
            )));
        }
        Ok(LocalPropagator { band: TwoExcitationBand::new(spec, total)?, opts })
    }

    pub fn from_band(band: TwoExcitationBand, opts: PropagatorOptions) -> Result<Self> {
        let spec = *band.spec();
        if spec.spacing_d >= 0.5 {
            return Err(Error::Unsupported("propagator needs spacing_d < 0.5".into()));
        }
        Ok(LocalPropagator { band, opts })
    }

    pub fn band(&self) -> &TwoExcitationBand {
        &self.band
    }

    pub fn options(&self) -> &PropagatorOptions {
        &self.opts
    }

    /// Annulus width for energy E: every dark pair within 1 + w of a light
    /// cone lies at least `energy_margin` below E.
    pub fn annulus_width(&self, energy: f64) -> Result<f64> {
        let table = self.band.table();
        let spec = self.band.spec();
        let limit = (0.5 * spec.reciprocal_constant() - 1.0) * 0.9;
        let dark_max = table.dark_maximum() + 1e-3;
        let mut w = self.opts.max_width.min(limit);
        while w >= self.opts.min_width {
            let mut ring: f64 = f64::NEG_INFINITY;
            for k in 0..96 {
                let theta = 2.0 * PI * (k as f64 + 0.5) / 96.0;
                for s in [0.25, 0.5, 0.75, 1.0] {
                    ring = ring.max(table.shift(Momentum2::from_polar(1.0 + s * w, theta)));
                }
            }
            if ring + dark_max <= energy - self.opts.energy_margin {
                return Ok(w);
            }
            w *= 0.7;
        }
        Err(Error::Domain(format!(
            "E = {energy} lies too far below the band edge near the light cone for the annulus construction"
        )))
    }

    /// L(P, E + i0) and L(P, E − i0).
    pub fn evaluate(&self, energy: f64) -> Result<PropagatorPair> {
        if !energy.is_finite() {
            return Err(Error::InvalidInput(format!("energy must be finite (got {energy})")));
        }
        let w = self.annulus_width(energy)?;
        let (r_in, r_out) = (1.0 + 0.5 * w, 1.0 + w);
        let (c1, c2) = self.band.light_cone_centres();
        let disks = Disks {
            band: &self.band,
            energy,
            r_in,
            r_out,
            c1,
            abs_tol: self.opts.polar_tol,
        };
        let first = disks.integrate(c1, c2, false);
        let mut polar = first.value;
        let mut polar_err = first.error;
        let distinct = self.band.periodic_distance(c1, c2) > 1e-12;
        if distinct {
            let second = disks.integrate(c2, c1, true);
            polar = polar + second.value;
            polar_err += second.error;
        }
        // Both disks were integrated in full; the two-excitation zone is half.
        let polar = polar.0.map(|z| 0.5 * z);
        polar_err *= 0.5;

        let b = self.band.spec().reciprocal_constant();
        let vertex = |q: Momentum2| {
            let w1 = bump(self.band.periodic_distance(q, c1), r_in, r_out);
            let w2 = if distinct { bump(self.band.periodic_distance(q, c2), r_in, r_out) } else { 0.0 };
            Vertex { q, u: energy - self.band.delta2(q), w: (1.0 - w1) * (1.0 - w2) }
        };
        let n = self.opts.initial_grid.max(4);
        let mesh = integrate_rectangle(
            vertex,
            Momentum2::new(-0.5 * b, 0.0),
            Momentum2::new(0.5 * b, 0.5 * b),
            n,
            n / 2,
            self.opts.abs_tol,
            self.opts.max_triangles,
        );
        let error = mesh.error + polar_err;
        let l0 = mesh.value + polar[0];
        let by_plus = [l0, polar[1], polar[2]];
        let l_plus: Complex64 = by_plus.iter().sum();
        if !(l_plus.re.is_finite() && l_plus.im.is_finite()) {
            return Err(Error::Quadrature { error: f64::INFINITY, tolerance: self.opts.abs_tol, detail: format!("non-finite propagator at E = {energy}") });
        }
        if error > self.opts.abs_tol + self.opts.polar_tol {
            let (q, e) = mesh.worst;
            return Err(Error::Quadrature {
                error,
                tolerance: self.opts.abs_tol,
                detail: format!(
                    "E = {energy}: {} triangles, mesh error {:.3e}, polar error {:.3e}, worst triangle near ({:.5}, {:.5}) with {:.3e}",
                    mesh.triangles, mesh.error, polar_err, q.kx, q.ky, e
                ),
            });
        }
        let by_minus = [l0.conj(), polar[1], polar[2]];
        let plus = PropagatorResult { l: l_plus, by_domain: by_plus, side: Side::PlusI0, eta_used: Vec::new(), error_estimate: error };
        let minus = PropagatorResult {
            l: by_minus.iter().sum(),
            by_domain: by_minus,
            side: Side::MinusI0,
            eta_used: Vec::new(),
            error_estimate: error,
        };
        Ok(PropagatorPair { energy, plus, minus, annulus_width: w, triangles: mesh.triangles })
    }

    pub fn at(&self, energy: f64, side: Side) -> Result<PropagatorResult> {
        let pair = self.evaluate(energy)?;
        Ok(match side {
            Side::PlusI0 => pair.plus,
            Side::MinusI0 => pair.minus,
        })
    }

    /// ∫ dl / v_g over the dark on-shell contour, i.e. −Im L₀(E + i0)/π.
    pub fn dark_dos(&self, energy: f64) -> Result<f64> {
        Ok(self.evaluate(energy)?.plus.densities()[0])
    }
}

pub fn local_propagator(spec: &LatticeSpec, total: Momentum2, energy: f64, side: Side) -> Result<PropagatorResult> {
    LocalPropagator::new(spec, total, PropagatorOptions::default())?.at(energy, side)
}

pub fn dark_dos(spec: &LatticeSpec, total: Momentum2, energy: f64) -> Result<f64> {
    LocalPropagator::new(spec, total, PropagatorOptions::default())?.dark_dos(energy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn propagator(px: f64, py: f64) -> LocalPropagator {
        LocalPropagator::new(&LatticeSpec::square(0.2), Momentum2::new(px, py), PropagatorOptions::default()).unwrap()
    }

    #[test]
    fn large_energy_tail_is_area_over_energy() {
        let lp = propagator(0.0, 0.0);
        let e = 100.0;
        let r = lp.evaluate(e).unwrap().plus;
        // half the zone: 25 / 2
        assert!((r.l.re * e / 12.5 - 1.0).abs() < 5e-3, "{}", r.l);
        assert!(r.l.im.abs() < 2e-3);
    }

    #[test]
    fn sides_share_bright_parts_and_conjugate_dark_part() {
        let lp = propagator(0.2, 0.0);
        let pair = lp.evaluate(0.7).unwrap();
        assert_eq!(pair.minus.by_domain[0], pair.plus.by_domain[0].conj());
        assert_eq!(pair.minus.by_domain[1], pair.plus.by_domain[1]);
        assert_eq!(pair.minus.by_domain[2], pair.plus.by_domain[2]);
        for r in [&pair.plus, &pair.minus] {
            let sum: Complex64 = r.by_domain.iter().sum();
            assert!((sum - r.l).norm() <= r.error_estimate);
        }
    }

    #[test]
    fn densities_are_non_negative() {
        let lp = propagator(1.0, 0.7);
        for e in [-3.0, 0.3, 1.6, 4.0] {
            let r = lp.evaluate(e).unwrap();
            for rho in r.plus.densities() {
                assert!(rho >= -1e-12, "E = {e}: {:?}", r.plus.densities());
            }
            assert_eq!(r.plus.densities(), r.minus.densities());
        }
    }

    #[test]
    fn dark_density_matches_the_contour_integral() {
        let lp = propagator(0.0, 0.0);
        for e in [0.5, 1.5, 2.1] {
            let dos = lp.dark_dos(e).unwrap();
            let contour = lp.band().contour_dos(e, 512);
            assert!((dos / contour - 1.0).abs() < 2e-3, "E = {e}: {dos} vs {contour}");
        }
        assert_eq!(lp.dark_dos(2.5).unwrap(), 0.0);
    }

    #[test]
    fn annulus_keeps_dark_pairs_off_shell() {
        let lp = propagator(0.0, 0.0);
        assert!((lp.annulus_width(0.5).unwrap() - 0.3).abs() < 1e-12);
        // far below the band the light-cone neighbourhood cannot be excluded
        assert!(matches!(lp.annulus_width(-1e3), Err(Error::Domain(_))));
    }

    #[test]
    fn wide_spacing_is_rejected() {
        let spec = LatticeSpec::square(0.6);
        assert!(matches!(
            LocalPropagator::new(&spec, Momentum2::ZERO, PropagatorOptions::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn non_finite_energy_is_rejected() {
        assert!(matches!(propagator(0.0, 0.0).evaluate(f64::NAN), Err(Error::InvalidInput(_))));
    }
}
