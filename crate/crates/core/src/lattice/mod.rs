//! Square atomic array: geometry, units and the single-excitation dispersion.
//!
//! Internal units: lengths in 1/k0 (k0 = ω_eg / c), momenta in k0, energies in
//! the single-atom decay rate Γ0. The rotating-frame zero of energy is ω_eg.

mod ewald;
mod green;
mod table;

pub use ewald::{dispersion, EwaldSum};
pub use green::{dyadic_green, dyadic_green_spherical, Mat3};
pub use table::DispersionTable;

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice geometry tag. Only the square lattice is implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    #[default]
    Square,
}

/// Atomic transition dipole orientation, stored as a unit complex 3-vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Polarization {
    /// Cartesian components (x, y, z).
    pub components: [Complex64; 3],
}

impl Polarization {
    /// ê+ = −(x̂ + iŷ)/√2, circular with respect to the out-of-plane axis.
    pub fn sigma_plus() -> Self {
        let c = -FRAC_1_SQRT_2;
        Polarization {
            components: [
                Complex64::new(c, 0.0),
                Complex64::new(0.0, c),
                Complex64::new(0.0, 0.0),
            ],
        }
    }

    pub fn sigma_minus() -> Self {
        let c = FRAC_1_SQRT_2;
        Polarization {
            components: [
                Complex64::new(c, 0.0),
                Complex64::new(0.0, -c),
                Complex64::new(0.0, 0.0),
            ],
        }
    }

    pub fn z() -> Self {
        Polarization {
            components: [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.components.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Real weights (|ex|², |ey|², 2 Re(ex* ey), |ez|²) that fully determine
    /// ê*·G·ê for displacements in the array plane.
    pub(crate) fn weights(&self) -> PolarizationWeights {
        let [ex, ey, ez] = self.components;
        PolarizationWeights {
            xx: ex.norm_sqr(),
            yy: ey.norm_sqr(),
            xy: 2.0 * (ex.conj() * ey).re,
            zz: ez.norm_sqr(),
        }
    }
}

impl Default for Polarization {
    fn default() -> Self {
        Polarization::sigma_plus()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PolarizationWeights {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
    pub zz: f64,
}

impl PolarizationWeights {
    /// Angular factor ê*·(𝟙 − kk/k0²)·ê of an in-plane plane-wave component
    /// with wavevector `k` (z components folded in through the Helmholtz
    /// identity).
    pub fn transverse_factor(&self, kx: f64, ky: f64) -> f64 {
        self.xx * (1.0 - kx * kx) + self.yy * (1.0 - ky * ky) - self.xy * kx * ky
            + self.zz * (kx * kx + ky * ky)
    }
}

/// Symmetry operations of the square lattice that leave the dispersion invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointGroup {
    /// Full square group: four rotations and four mirrors.
    D4,
    /// Rotation by π plus the two axis mirrors.
    D2Axes,
    /// Rotation by π plus the two diagonal mirrors.
    D2Diagonals,
    /// Inversion only.
    C2,
}

impl PointGroup {
    /// Integer 2×2 matrices of the group, acting on (kx, ky).
    pub fn elements(self) -> Vec<[[i32; 2]; 2]> {
        const ID: [[i32; 2]; 2] = [[1, 0], [0, 1]];
        const INV: [[i32; 2]; 2] = [[-1, 0], [0, -1]];
        const MX: [[i32; 2]; 2] = [[-1, 0], [0, 1]];
        const MY: [[i32; 2]; 2] = [[1, 0], [0, -1]];
        const MD: [[i32; 2]; 2] = [[0, 1], [1, 0]];
        const MA: [[i32; 2]; 2] = [[0, -1], [-1, 0]];
        const R90: [[i32; 2]; 2] = [[0, -1], [1, 0]];
        const R270: [[i32; 2]; 2] = [[0, 1], [-1, 0]];
        match self {
            PointGroup::D4 => vec![ID, R90, INV, R270, MX, MY, MD, MA],
            PointGroup::D2Axes => vec![ID, INV, MX, MY],
            PointGroup::D2Diagonals => vec![ID, INV, MD, MA],
            PointGroup::C2 => vec![ID, INV],
        }
    }
}

/// Geometry, polarization and atomic constants of the array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    /// Lattice spacing in units of the resonant wavelength λ0.
    pub spacing_d: f64,
    #[serde(default)]
    pub polarization: Polarization,
    /// Single-atom decay rate; every energy is reported in these units.
    #[serde(default = "default_gamma0")]
    pub gamma0: f64,
    #[serde(default)]
    pub geometry: Geometry,
}

fn default_gamma0() -> f64 {
    1.0
}

impl Default for LatticeSpec {
    fn default() -> Self {
        LatticeSpec::square(0.2)
    }
}

impl LatticeSpec {
    /// Square array with σ+ polarization and Γ0 = 1.
    pub fn square(spacing_d: f64) -> Self {
        LatticeSpec {
            spacing_d,
            polarization: Polarization::sigma_plus(),
            gamma0: 1.0,
            geometry: Geometry::Square,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spacing_d > 0.0 && self.spacing_d < FRAC_1_SQRT_2) {
            return Err(Error::InvalidLattice(format!(
                "spacing_d = {} must lie in (0, 1/√2) wavelengths",
                self.spacing_d
            )));
        }
        let n = self.polarization.norm_sqr();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidLattice(format!(
                "polarization must have unit norm (|ê|² = {n})"
            )));
        }
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return Err(Error::InvalidLattice(format!("gamma0 = {} must be positive", self.gamma0)));
        }
        Ok(())
    }

    /// Lattice constant in units of 1/k0.
    pub fn lattice_constant(&self) -> f64 {
        2.0 * PI * self.spacing_d
    }

    /// Reciprocal lattice constant 2π/a in units of k0.
    pub fn reciprocal_constant(&self) -> f64 {
        1.0 / self.spacing_d
    }

    /// Half width π/a of the first Brillouin zone.
    pub fn bz_half_width(&self) -> f64 {
        0.5 / self.spacing_d
    }

    pub fn bz_area(&self) -> f64 {
        let b = self.reciprocal_constant();
        b * b
    }

    /// Area of the two-excitation zone (half the single-excitation zone).
    pub fn bz2_area(&self) -> f64 {
        0.5 * self.bz_area()
    }

    pub fn unit_cell_area(&self) -> f64 {
        let a = self.lattice_constant();
        a * a
    }

    pub fn point_group(&self) -> PointGroup {
        let w = self.polarization.weights();
        let iso = (w.xx - w.yy).abs() < 1e-12;
        let no_xy = w.xy.abs() < 1e-12;
        match (iso, no_xy) {
            (true, true) => PointGroup::D4,
            (false, true) => PointGroup::D2Axes,
            (true, false) => PointGroup::D2Diagonals,
            (false, false) => PointGroup::C2,
        }
    }

    /// Stable key used to share cached tables between callers.
    pub(crate) fn cache_key(&self) -> Vec<u64> {
        let mut key = vec![self.spacing_d.to_bits(), self.gamma0.to_bits()];
        for c in self.polarization.components {
            key.push(c.re.to_bits());
            key.push(c.im.to_bits());
        }
        key
    }
}

/// In-plane lattice momentum in units of k0.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Momentum2 {
    pub kx: f64,
    pub ky: f64,
}

impl Momentum2 {
    pub const ZERO: Momentum2 = Momentum2 { kx: 0.0, ky: 0.0 };

    pub fn new(kx: f64, ky: f64) -> Self {
        Momentum2 { kx, ky }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Momentum2::new(r * theta.cos(), r * theta.sin())
    }

    pub fn norm(&self) -> f64 {
        self.kx.hypot(self.ky)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.kx * self.kx + self.ky * self.ky
    }

    pub fn dot(&self, other: &Momentum2) -> f64 {
        self.kx * other.kx + self.ky * other.ky
    }

    /// Maps the momentum into the first Brillouin zone [−π/a, π/a)².
    pub fn reduce_to_bz(&self, spec: &LatticeSpec) -> Momentum2 {
        let b = spec.reciprocal_constant();
        Momentum2::new(wrap(self.kx, b), wrap(self.ky, b))
    }

    /// Applies an integer point-group matrix.
    pub fn transform(&self, m: &[[i32; 2]; 2]) -> Momentum2 {
        Momentum2::new(
            m[0][0] as f64 * self.kx + m[0][1] as f64 * self.ky,
            m[1][0] as f64 * self.kx + m[1][1] as f64 * self.ky,
        )
    }
}

/// Wraps `x` into [−b/2, b/2).
pub(crate) fn wrap(x: f64, b: f64) -> f64 {
    let y = x - b * ((x + 0.5 * b) / b).floor();
    if y >= 0.5 * b {
        y - b
    } else {
        y
    }
}

impl Add for Momentum2 {
    type Output = Momentum2;
    fn add(self, o: Momentum2) -> Momentum2 {
        Momentum2::new(self.kx + o.kx, self.ky + o.ky)
    }
}

impl Sub for Momentum2 {
    type Output = Momentum2;
    fn sub(self, o: Momentum2) -> Momentum2 {
        Momentum2::new(self.kx - o.kx, self.ky - o.ky)
    }
}

impl Neg for Momentum2 {
    type Output = Momentum2;
    fn neg(self) -> Momentum2 {
        Momentum2::new(-self.kx, -self.ky)
    }
}

impl Mul<f64> for Momentum2 {
    type Output = Momentum2;
    fn mul(self, s: f64) -> Momentum2 {
        Momentum2::new(self.kx * s, self.ky * s)
    }
}

/// Complex single-excitation energy ε = Δ − iΓ/2 (rotating frame).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComplexEnergy {
    /// Collective shift Δ.
    pub re: f64,
    /// −Γ/2; never positive.
    pub im: f64,
}

impl ComplexEnergy {
    pub fn new(re: f64, im: f64) -> Self {
        ComplexEnergy { re, im }
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    /// Decay rate Γ = −2 Im ε.
    pub fn decay_rate(&self) -> f64 {
        -2.0 * self.im
    }
}

impl From<Complex64> for ComplexEnergy {
    fn from(z: Complex64) -> Self {
        ComplexEnergy::new(z.re, z.im)
    }
}

/// True iff the momentum lies strictly outside the light cone (‖p‖ > k0).
/// The circle itself is assigned to the bright side.
pub fn is_dark(p: Momentum2) -> bool {
    p.norm() > 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn light_cone_classification() {
        assert!(!is_dark(Momentum2::ZERO));
        assert!(is_dark(Momentum2::new(1.2, 0.0)));
        assert!(is_dark(Momentum2::from_polar(1.2, 0.7)));
        assert!(!is_dark(Momentum2::new(1.0, 0.0)));
        assert!(!is_dark(Momentum2::new(0.6, 0.8)));
    }

    #[test]
    fn reduction_lands_in_zone() {
        let spec = LatticeSpec::square(0.2);
        let h = spec.bz_half_width();
        for &(x, y) in &[(0.0, 0.0), (2.5, -2.5), (7.3, -11.1), (-2.5, 2.4999), (100.0, 3.0)] {
            let r = Momentum2::new(x, y).reduce_to_bz(&spec);
            assert!(r.kx >= -h && r.kx < h, "{r:?}");
            assert!(r.ky >= -h && r.ky < h, "{r:?}");
            let b = spec.reciprocal_constant();
            let nx = (x - r.kx) / b;
            let ny = (y - r.ky) / b;
            assert!((nx - nx.round()).abs() < 1e-9 && (ny - ny.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(LatticeSpec::square(0.2).validate().is_ok());
        assert!(LatticeSpec::square(0.0).validate().is_err());
        assert!(LatticeSpec::square(0.71).validate().is_err());
        let mut s = LatticeSpec::square(0.2);
        s.polarization.components[2] = Complex64::new(0.3, 0.0);
        assert!(s.validate().is_err());
    }

    #[test]
    fn point_groups() {
        assert_eq!(LatticeSpec::square(0.2).point_group(), PointGroup::D4);
        let mut s = LatticeSpec::square(0.2);
        s.polarization = Polarization::z();
        assert_eq!(s.point_group(), PointGroup::D4);
        s.polarization.components = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
        assert_eq!(s.point_group(), PointGroup::D2Axes);
    }
}
