//! Brute-force reference calculations.
//!
//! These are deliberately simple (no adaptivity, fixed summation order) and
//! slow. Production code never calls into this module; tests and the
//! `verify` command compare against it.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bands::{CriticalKind, TwoExcitationBand};
use crate::error::{Error, Result};
use crate::lattice::{dyadic_green, ComplexEnergy, LatticeSpec, Momentum2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Momentum grid points per axis.
    pub grid_n: usize,
    /// Broadenings for the η → 0 extrapolation, in Γ0, strictly decreasing.
    pub eta_sequence: Vec<f64>,
    /// Maximum number of lattice shells in the direct sum.
    pub realspace_cutoff: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            grid_n: 2048,
            eta_sequence: vec![1e-1, 10f64.powf(-1.5), 1e-2],
            realspace_cutoff: 4000,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 64 {
            return Err(Error::InvalidInput(format!("oracle grid_n = {} must be at least 64", self.grid_n)));
        }
        if self.eta_sequence.is_empty()
            || self.eta_sequence.iter().any(|e| !(*e > 0.0))
            || self.eta_sequence.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(Error::InvalidInput("eta_sequence must be positive and strictly decreasing".into()));
        }
        Ok(())
    }
}

/// A value extrapolated to zero broadening, with the change contributed by
/// the last extrapolation order as its residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extrapolated<T> {
    pub value: T,
    pub residual: f64,
    /// Set when successive extrapolation orders do not shrink.
    pub flagged: bool,
}

/// Neville extrapolation of samples (x_i, y_i) to x = 0. Returns the
/// diagonal of the tableau (orders 0, 1, …).
fn neville_to_zero(xs: &[f64], ys: &[Complex64]) -> Vec<Complex64> {
    let n = xs.len();
    let mut p = ys.to_vec();
    let mut diag = vec![p[n - 1]];
    for k in 1..n {
        for i in 0..(n - k) {
            let (xi, xk) = (xs[i], xs[i + k]);
            p[i] = (xk * p[i] - xi * p[i + 1]) / (xk - xi);
        }
        diag.push(p[0]);
    }
    diag
}

fn extrapolate(xs: &[f64], ys: &[Complex64]) -> Extrapolated<Complex64> {
    let diag = neville_to_zero(xs, ys);
    let n = diag.len();
    let value = diag[n - 1];
    let residual = if n >= 2 { (diag[n - 1] - diag[n - 2]).norm() } else { f64::INFINITY };
    let flagged = n >= 3 && residual > (diag[n - 2] - diag[n - 3]).norm();
    Extrapolated { value, residual, flagged }
}

/// ε(p) from the damped real-space sum Σ_R e^{−ηR} e^{−ip·R} (−3π ê*·G(R)·ê) − i/2,
/// extrapolated over the damping constants `damping` (units of k0).
pub fn dispersion_direct_sum(
    spec: &LatticeSpec,
    p: Momentum2,
    cutoff_shells: usize,
    damping: &[f64],
) -> Result<Extrapolated<ComplexEnergy>> {
    spec.validate()?;
    if damping.is_empty() || damping.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidInput("damping constants must be positive".into()));
    }
    let a = spec.lattice_constant();
    let e = spec.polarization.components;
    let coupling = |rx: f64, ry: f64| -> Complex64 {
        let g = dyadic_green([rx, ry, 0.0]).expect("nonzero lattice vector");
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                s += e[i].conj() * g[i][j] * e[j];
            }
        }
        s
    };
    let mut samples = Vec::with_capacity(damping.len());
    for &eta in damping {
        let shells = ((18.0 / (eta * a)).ceil() as usize).min(cutoff_shells) as i64;
        let rows: Vec<Complex64> = (-shells..=shells)
            .into_par_iter()
            .map(|m| {
                let mut row = Complex64::new(0.0, 0.0);
                for n in -shells..=shells {
                    if m == 0 && n == 0 {
                        continue;
                    }
                    let (rx, ry) = (m as f64 * a, n as f64 * a);
                    let r = rx.hypot(ry);
                    row += coupling(rx, ry) * ((-eta * r).exp() * (p.kx * rx + p.ky * ry).cos());
                }
                row
            })
            .collect();
        let sum: Complex64 = rows.iter().sum();
        samples.push((-3.0 * std::f64::consts::PI * sum - Complex64::new(0.0, 0.5)) * spec.gamma0);
    }
    let ex = extrapolate(damping, &samples);
    let mut value = ComplexEnergy::from(ex.value);
    if p.norm() > 1.0 && value.im.abs() < 1e-4 * spec.gamma0 {
        value.im = 0.0;
    }
    Ok(Extrapolated { value, residual: ex.residual, flagged: ex.flagged })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSum {
    pub l: Complex64,
    pub by_domain: [Complex64; 3],
    pub residual: f64,
    pub flagged: bool,
}

/// L(P, E + i0) as a midpoint Riemann sum of 1/(E + iη − ε⁽²⁾) over a cell-centred
/// grid, extrapolated η → 0.
pub fn propagator_grid_sum(band: &TwoExcitationBand, energy: f64, config: &OracleConfig) -> Result<GridSum> {
    config.validate()?;
    let n = config.grid_n + config.grid_n % 2;
    let b = band.spec().reciprocal_constant();
    let h = b / n as f64;
    let etas = &config.eta_sequence;
    // Cell centres are symmetric under q → −q, so the upper half of the grid
    // is exactly the two-excitation zone.
    let rows: Vec<Vec<[Complex64; 3]>> = (n / 2..n)
        .into_par_iter()
        .map(|j| {
            let mut acc = vec![[Complex64::new(0.0, 0.0); 3]; etas.len()];
            let qy = -0.5 * b + (j as f64 + 0.5) * h;
            for i in 0..n {
                let q = Momentum2::new(-0.5 * b + (i as f64 + 0.5) * h, qy);
                let Ok(e2) = band.eps2(q) else { continue };
                let beta = band.domain(q).index();
                let z = Complex64::new(energy, 0.0) - e2.as_complex();
                for (k, &eta) in etas.iter().enumerate() {
                    acc[k][beta] += 1.0 / (z + Complex64::new(0.0, eta));
                }
            }
            acc
        })
        .collect();
    let mut sums = vec![[Complex64::new(0.0, 0.0); 3]; etas.len()];
    for row in &rows {
        for (k, r) in row.iter().enumerate() {
            for beta in 0..3 {
                sums[k][beta] += r[beta];
            }
        }
    }
    let cell = h * h;
    let mut by_domain = [Complex64::new(0.0, 0.0); 3];
    let mut residual = 0.0;
    let mut flagged = false;
    for beta in 0..3 {
        let ys: Vec<Complex64> = sums.iter().map(|s| s[beta] * cell).collect();
        let ex = extrapolate(etas, &ys);
        by_domain[beta] = ex.value;
        residual += ex.residual;
        flagged |= ex.flagged;
    }
    Ok(GridSum { l: by_domain.iter().sum(), by_domain, residual, flagged })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCriticalPoint {
    pub q: Momentum2,
    pub energy: f64,
    pub kind: CriticalKind,
}

/// Discrete critical points of Δ⁽²⁾ on an n×n node grid over the zone:
/// strict local extrema over the 8 neighbours, and saddles where the discrete
/// gradient is locally smallest and the discrete Hessian is indefinite.
pub fn critical_points_grid(band: &TwoExcitationBand, grid_n: usize) -> Vec<GridCriticalPoint> {
    let n = grid_n;
    let b = band.spec().reciprocal_constant();
    let h = b / n as f64;
    let margin = 2.0 * h + 1e-2 * band.spec().bz_half_width();
    let node = |i: usize, j: usize| Momentum2::new(-0.5 * b + i as f64 * h, -0.5 * b + j as f64 * h);
    let vals: Vec<Option<f64>> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let q = node(k / n, k % n);
            (band.light_cone_distance(q) > margin).then(|| band.delta2(q))
        })
        .collect();
    let at = |i: i64, j: i64| vals[(i.rem_euclid(n as i64) as usize) * n + j.rem_euclid(n as i64) as usize];
    let grad2 = |i: i64, j: i64| -> Option<f64> {
        let gx = (at(i + 1, j)? - at(i - 1, j)?) / (2.0 * h);
        let gy = (at(i, j + 1)? - at(i, j - 1)?) / (2.0 * h);
        Some(gx * gx + gy * gy)
    };
    let mut out = Vec::new();
    for i in 0..n as i64 {
        for j in 0..n as i64 {
            let Some(c) = at(i, j) else { continue };
            let mut neighbours = Vec::with_capacity(8);
            for di in -1..=1 {
                for dj in -1..=1 {
                    if di != 0 || dj != 0 {
                        neighbours.push(at(i + di, j + dj));
                    }
                }
            }
            let Some(nb) = neighbours.into_iter().collect::<Option<Vec<f64>>>() else { continue };
            let q = node(i as usize, j as usize);
            if nb.iter().all(|v| c > *v) {
                out.push(GridCriticalPoint { q, energy: c, kind: CriticalKind::Maximum });
                continue;
            }
            if nb.iter().all(|v| c < *v) {
                out.push(GridCriticalPoint { q, energy: c, kind: CriticalKind::Minimum });
                continue;
            }
            let Some(g0) = grad2(i, j) else { continue };
            let mut smallest = true;
            for di in -1..=1 {
                for dj in -1..=1 {
                    if (di != 0 || dj != 0) && grad2(i + di, j + dj).map_or(false, |g| g < g0) {
                        smallest = false;
                    }
                }
            }
            if !smallest {
                continue;
            }
            let hxx = nb_val(&at, i, j, 1, 0) - 2.0 * c + nb_val(&at, i, j, -1, 0);
            let hyy = nb_val(&at, i, j, 0, 1) - 2.0 * c + nb_val(&at, i, j, 0, -1);
            let hxy = 0.25 * (nb_val(&at, i, j, 1, 1) - nb_val(&at, i, j, 1, -1) - nb_val(&at, i, j, -1, 1) + nb_val(&at, i, j, -1, -1));
            if hxx * hyy - hxy * hxy < 0.0 {
                out.push(GridCriticalPoint { q, energy: c, kind: CriticalKind::Saddle });
            }
        }
    }
    out
}

fn nb_val<F: Fn(i64, i64) -> Option<f64>>(at: &F, i: i64, j: i64, di: i64, dj: i64) -> f64 {
    at(i + di, j + dj).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neville_recovers_polynomials() {
        let xs = [0.4, 0.2, 0.1];
        let ys: Vec<Complex64> = xs.iter().map(|x| Complex64::new(1.0 + 2.0 * x - x * x, 3.0 * x)).collect();
        let ex = extrapolate(&xs, &ys);
        assert!((ex.value - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(OracleConfig::default().validate().is_ok());
        let bad = OracleConfig { eta_sequence: vec![0.01, 0.1], ..Default::default() };
        assert!(bad.validate().is_err());
        let small = OracleConfig { grid_n: 16, ..Default::default() };
        assert!(small.validate().is_err());
    }

    #[test]
    fn direct_sum_reproduces_zone_centre_width() {
        let spec = LatticeSpec::square(0.2);
        let r = dispersion_direct_sum(&spec, Momentum2::ZERO, 4000, &[0.16, 0.08, 0.04, 0.02]).unwrap();
        assert!((r.value.decay_rate() - 5.968).abs() < 1e-2, "{:?}", r);
    }
}
