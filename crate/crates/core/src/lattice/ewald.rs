//! Ewald evaluation of the lattice sum Σ_{R≠0} e^{−ip·R} ê*·G(R)·ê.
//!
//! The scalar kernel e^{ir}/(4πr) is split at the Ewald parameter E into a
//! spectral part (sum over reciprocal vectors, erfc(γ/2E)/γ weights) and a
//! spatial part (sum over lattice vectors, erfc(rE ± i/2E) weights). Second
//! derivatives needed by the dyadic are applied term by term; the R = 0 image
//! is removed analytically through the small-r expansion of the spatial kernel.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use errorfunctions::{ComplexErrorFunctions, RealErrorFunctions};
use num_complex::Complex64;

use super::{ComplexEnergy, LatticeSpec, Momentum2, PolarizationWeights};
use crate::error::{Error, Result};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const MAX_SHELLS: i32 = 40;

/// Default absolute accuracy target of the dispersion, in units of Γ0.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone)]
struct RealTerm {
    rx: f64,
    ry: f64,
    coupling: f64,
}

/// Precomputed Ewald representation of one lattice.
#[derive(Debug, Clone)]
pub struct EwaldSum {
    spec: LatticeSpec,
    weights: PolarizationWeights,
    recip: f64,
    area: f64,
    split: f64,
    real_terms: Vec<RealTerm>,
    real_tail: f64,
    spectral_shells: i32,
    self_term: Complex64,
    tolerance: f64,
}

impl EwaldSum {
    pub fn new(spec: &LatticeSpec) -> Result<Self> {
        Self::with_tolerance(spec, DEFAULT_TOLERANCE)
    }

    pub fn with_tolerance(spec: &LatticeSpec, tolerance: f64) -> Result<Self> {
        spec.validate()?;
        let a = spec.lattice_constant();
        let area = a * a;
        let split = (PI / area).sqrt();
        let b = 1.0 / (2.0 * split);
        let c = FRAC_2_SQRT_PI * (b * b).exp();
        let weights = spec.polarization.weights();
        let erfi_b = RealErrorFunctions::erfi(b);

        // Small-r limit of (spatial kernel − free kernel) and its r² coefficient.
        let inv4pi = 1.0 / (4.0 * PI);
        let f0 = -inv4pi * Complex64::new(c * split - erfi_b, 1.0);
        let f2 = -inv4pi
            * Complex64::new(
                -(2.0 * b * b + 1.0) * c * split.powi(3) / 3.0 + erfi_b / 6.0,
                -1.0 / 6.0,
            );
        let w = weights;
        let self_term = (1.0 - w.zz) * f0 + (w.xx + w.yy - 2.0 * w.zz) * 2.0 * f2;

        let mut real_terms = Vec::new();
        let mut real_tail = f64::INFINITY;
        for shell in 1..=MAX_SHELLS {
            let mut shell_max: f64 = 0.0;
            for (m, n) in shell_indices(shell) {
                let rx = m as f64 * a;
                let ry = n as f64 * a;
                let coupling = spatial_coupling(rx, ry, split, b, c, &weights);
                shell_max = shell_max.max(coupling.abs());
                real_terms.push(RealTerm { rx, ry, coupling });
            }
            real_tail = shell_max * (8 * shell) as f64;
            if shell_max < 1e-18 {
                break;
            }
        }
        if real_tail > tolerance * 1e-3 {
            return Err(Error::LatticeSumConvergence {
                residual: real_tail,
                shells: MAX_SHELLS as usize,
            });
        }

        // Spectral shells: the farthest vector of shell s has |k| ≥ (s − 1/2)·b_recip.
        let recip = spec.reciprocal_constant();
        let mut spectral_shells = MAX_SHELLS;
        for s in 1..=MAX_SHELLS {
            let k = (s as f64 - 0.5) * recip;
            let bound = RealErrorFunctions::erfc(k / (2.0 * split)) * (1.0 + k * k) / k.max(1e-3)
                * (8 * s) as f64
                / (2.0 * area);
            if bound < 1e-18 {
                spectral_shells = s;
                break;
            }
        }

        Ok(EwaldSum {
            spec: *spec,
            weights,
            recip,
            area,
            split,
            real_terms,
            real_tail,
            spectral_shells,
            self_term,
            tolerance,
        })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    /// Bound on the neglected tail of both sums, in units of Γ0.
    pub fn error_estimate(&self) -> f64 {
        3.0 * PI * self.real_tail * self.spec.gamma0 + 1e-15
    }

    /// ε(p) = −3π Σ_{R≠0} e^{−ip·R} ê*·G(R)·ê − i/2, scaled by Γ0.
    pub fn dispersion(&self, p: Momentum2) -> Result<ComplexEnergy> {
        let gamma2 = p.norm_sqr() - 1.0;
        if gamma2.abs() < 1e-14 {
            return Err(Error::Domain(format!(
                "dispersion diverges on the light cone (|p| = {})",
                p.norm()
            )));
        }
        let phi = self.singular_sum(p) + self.regular_sum(p);
        let eps = (-3.0 * PI * phi - Complex64::new(0.0, 0.5)) * self.spec.gamma0;
        Ok(ComplexEnergy::from(eps))
    }

    /// The part of ε(p) that is analytic across the light cone. It is real:
    /// all radiative loss sits in [`EwaldSum::singular_part`].
    pub fn regular_part(&self, p: Momentum2) -> f64 {
        let eps = (-3.0 * PI * self.regular_sum(p) - Complex64::new(0.0, 0.5)) * self.spec.gamma0;
        eps.re
    }

    /// Bare g = 0 plane-wave term −3π F(p) / (2Aγ), γ = √(p² − 1), which
    /// carries the light-cone divergence and the full radiative width.
    pub fn singular_part(&self, p: Momentum2) -> Complex64 {
        singular_term(&self.weights, self.area, p) * self.spec.gamma0
    }

    fn singular_sum(&self, p: Momentum2) -> Complex64 {
        let f = self.weights.transverse_factor(p.kx, p.ky);
        let gamma2 = p.norm_sqr() - 1.0;
        inv_gamma(gamma2) * (f / (2.0 * self.area))
    }

    /// Everything except the bare g = 0 plane-wave term.
    fn regular_sum(&self, p: Momentum2) -> Complex64 {
        let mut spectral = Complex64::new(0.0, 0.0);
        let s = self.spectral_shells;
        for m in -s..=s {
            for n in -s..=s {
                let kx = p.kx + m as f64 * self.recip;
                let ky = p.ky + n as f64 * self.recip;
                let f = self.weights.transverse_factor(kx, ky);
                let gamma2 = kx * kx + ky * ky - 1.0;
                let weight = if m == 0 && n == 0 {
                    Complex64::new(-erf_over_x(gamma2 / (4.0 * self.split * self.split)) / (2.0 * self.split), 0.0)
                } else {
                    erfc_over_gamma(gamma2, self.split)
                };
                spectral += weight * f;
            }
        }
        spectral /= 2.0 * self.area;

        let mut spatial = 0.0;
        for t in &self.real_terms {
            spatial += (p.kx * t.rx + p.ky * t.ry).cos() * t.coupling;
        }
        spectral + spatial + self.self_term
    }

    /// Tolerance this sum was built for.
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }
}

pub(crate) fn singular_term(w: &PolarizationWeights, area: f64, p: Momentum2) -> Complex64 {
    let f = w.transverse_factor(p.kx, p.ky);
    -3.0 * PI * inv_gamma(p.norm_sqr() - 1.0) * (f / (2.0 * area))
}

/// 1/γ with γ = √(p² − 1) on the branch Re γ ≥ 0, Im γ ≤ 0.
fn inv_gamma(gamma2: f64) -> Complex64 {
    if gamma2 > 0.0 {
        Complex64::new(1.0 / gamma2.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, 1.0 / (-gamma2).sqrt())
    }
}

/// erfc(γ/2E)/γ on the same branch.
fn erfc_over_gamma(gamma2: f64, split: f64) -> Complex64 {
    if gamma2 > 0.0 {
        let g = gamma2.sqrt();
        Complex64::new(RealErrorFunctions::erfc(g / (2.0 * split)) / g, 0.0)
    } else {
        let s = (-gamma2).sqrt();
        let erfi = RealErrorFunctions::erfi(s / (2.0 * split));
        Complex64::new(-erfi / s, 1.0 / s)
    }
}

/// erf(x)/x as a function of u = x² (u may be negative, x imaginary).
fn erf_over_x(u: f64) -> f64 {
    if u.abs() < 0.5 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 1..40 {
            term *= -u / n as f64;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        FRAC_2_SQRT_PI * sum
    } else if u > 0.0 {
        let x = u.sqrt();
        RealErrorFunctions::erf(x) / x
    } else {
        let x = (-u).sqrt();
        RealErrorFunctions::erfi(x) / x
    }
}

fn shell_indices(shell: i32) -> impl Iterator<Item = (i32, i32)> {
    (-shell..=shell).flat_map(move |m| {
        (-shell..=shell).filter_map(move |n| {
            if m.abs().max(n.abs()) == shell {
                Some((m, n))
            } else {
                None
            }
        })
    })
}

/// ê*·[h 𝟙 + ∂∂h]·ê for the spatial Ewald kernel h(r) = Re[e^{ir} erfc(rE + ib)]/(4πr),
/// with z components folded in via ∂z² = −1 − ∇∥² (exact for the summed kernel).
fn spatial_coupling(rx: f64, ry: f64, split: f64, b: f64, c: f64, w: &PolarizationWeights) -> f64 {
    let r = rx.hypot(ry);
    let psi = Complex64::from_polar(1.0, r) * Complex64::new(r * split, b).erfc();
    let gexp = (-r * r * split * split).exp();
    let pr = psi.re;
    let pr1 = -psi.im - c * split * gexp;
    let pr2 = -pr + 2.0 * c * split.powi(3) * r * gexp;
    let inv4pi = 1.0 / (4.0 * PI);
    let h = inv4pi * pr / r;
    let h1 = inv4pi * (pr1 / r - pr / (r * r));
    let h2 = inv4pi * (pr2 / r - 2.0 * pr1 / (r * r) + 2.0 * pr / (r * r * r));
    let (ux, uy) = (rx / r, ry / r);
    let radial = h2 - h1 / r;
    let dxx = radial * ux * ux + h1 / r;
    let dyy = radial * uy * uy + h1 / r;
    let dxy = radial * ux * uy;
    (1.0 - w.zz) * h + (w.xx - w.zz) * dxx + (w.yy - w.zz) * dyy + w.xy * dxy
}

fn cache() -> &'static Mutex<HashMap<Vec<u64>, Arc<EwaldSum>>> {
    static CACHE: OnceLock<Mutex<HashMap<Vec<u64>, Arc<EwaldSum>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl EwaldSum {
    /// Shared, lazily built instance for `spec` at the default tolerance.
    pub fn shared(spec: &LatticeSpec) -> Result<Arc<EwaldSum>> {
        let key = spec.cache_key();
        if let Some(e) = cache().lock().unwrap().get(&key) {
            return Ok(e.clone());
        }
        let e = Arc::new(EwaldSum::new(spec)?);
        cache().lock().unwrap().insert(key, e.clone());
        Ok(e)
    }
}

/// Single-excitation dispersion ε(p) of the array.
pub fn dispersion(spec: &LatticeSpec, p: Momentum2) -> Result<ComplexEnergy> {
    let ewald = EwaldSum::shared(spec)?;
    if ewald.error_estimate() > ewald.tolerance() {
        return Err(Error::LatticeSumConvergence {
            residual: ewald.error_estimate(),
            shells: MAX_SHELLS as usize,
        });
    }
    let e = ewald.dispersion(p)?;
    // Outside the light cone the loss must vanish identically.
    if p.norm() > 1.0 {
        debug_assert!(e.im.abs() < 1e-9 * spec.gamma0);
        return Ok(ComplexEnergy::new(e.re, 0.0));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_rate_at_zone_centre() {
        let spec = LatticeSpec::square(0.2);
        let e = dispersion(&spec, Momentum2::ZERO).unwrap();
        // Γ(0) = 3π/a² exactly for σ+.
        let a = spec.lattice_constant();
        assert!((e.decay_rate() - 3.0 * PI / (a * a)).abs() < 1e-9, "{e:?}");
        assert!((e.decay_rate() - 6.0).abs() < 0.1);
    }

    #[test]
    fn regular_plus_singular_reassembles() {
        let spec = LatticeSpec::square(0.2);
        let ew = EwaldSum::new(&spec).unwrap();
        for p in [Momentum2::new(0.3, 0.2), Momentum2::new(1.7, -0.4), Momentum2::new(2.4, 2.4)] {
            let full = ew.dispersion(p).unwrap().as_complex();
            let split = ew.singular_part(p) + ew.regular_part(p);
            assert!((full - split).norm() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn ewald_parameter_independence() {
        // Changing the split must not change the result.
        let spec = LatticeSpec::square(0.2);
        let mut ew = EwaldSum::new(&spec).unwrap();
        let p = Momentum2::new(1.5, 0.3);
        let base = ew.dispersion(p).unwrap();
        let a = spec.lattice_constant();
        for factor in [0.7, 1.4] {
            let split = factor * (PI / (a * a)).sqrt();
            let b = 1.0 / (2.0 * split);
            let c = FRAC_2_SQRT_PI * (b * b).exp();
            let erfi_b = RealErrorFunctions::erfi(b);
            let inv4pi = 1.0 / (4.0 * PI);
            let f0 = -inv4pi * Complex64::new(c * split - erfi_b, 1.0);
            let f2 = -inv4pi
                * Complex64::new(-(2.0 * b * b + 1.0) * c * split.powi(3) / 3.0 + erfi_b / 6.0, -1.0 / 6.0);
            let w = ew.weights;
            ew.self_term = (1.0 - w.zz) * f0 + (w.xx + w.yy - 2.0 * w.zz) * 2.0 * f2;
            ew.split = split;
            for t in ew.real_terms.iter_mut() {
                t.coupling = spatial_coupling(t.rx, t.ry, split, b, c, &w);
            }
            ew.spectral_shells = 12;
            let other = ew.dispersion(p).unwrap();
            assert!((other.re - base.re).abs() < 1e-10, "{factor}: {other:?} vs {base:?}");
        }
    }
}
