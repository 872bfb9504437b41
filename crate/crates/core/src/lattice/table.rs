//! Tabulated dispersion for fast repeated evaluation.
//!
//! ε(p) = S(p) + R(p) where S is the bare plane-wave term with the light-cone
//! singularity and R is smooth over the zone (but not periodic: the roles of
//! neighbouring diffraction orders swap at the zone edge). R is stored on an
//! N×N grid padded by three nodes on every side and interpolated with a 6×6
//! Lagrange stencil; S is evaluated in closed form.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;

use super::ewald::{singular_term, EwaldSum};
use super::{ComplexEnergy, LatticeSpec, Momentum2, PolarizationWeights};
use crate::error::{Error, Result};

const DEFAULT_NODES: usize = 256;
const STENCIL: usize = 6;
const PAD: usize = 3;

/// Largest spacing (in λ0) for which the regular part stays smooth enough
/// to be tabulated: the nearest diffraction-order light cone must stay away
/// from the zone.
pub const MAX_TABLE_SPACING: f64 = 0.45;

#[derive(Debug)]
pub struct DispersionTable {
    spec: LatticeSpec,
    weights: PolarizationWeights,
    area: f64,
    recip: f64,
    /// Nodes per side including padding.
    side: usize,
    step: f64,
    regular: Vec<f64>,
    accuracy: f64,
    dark_max: f64,
}

impl DispersionTable {
    /// Builds (or fetches from the process-wide cache) the table for `spec`.
    pub fn shared(spec: &LatticeSpec) -> Result<Arc<DispersionTable>> {
        static CACHE: OnceLock<Mutex<HashMap<Vec<u64>, Arc<DispersionTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = spec.cache_key();
        if let Some(t) = cache.lock().unwrap().get(&key) {
            return Ok(t.clone());
        }
        let t = Arc::new(DispersionTable::build(spec, DEFAULT_NODES)?);
        cache.lock().unwrap().insert(key, t.clone());
        Ok(t)
    }

    pub fn build(spec: &LatticeSpec, nodes: usize) -> Result<DispersionTable> {
        spec.validate()?;
        if spec.spacing_d >= MAX_TABLE_SPACING {
            return Err(Error::Unsupported(format!(
                "tabulated dispersion needs spacing_d < {MAX_TABLE_SPACING} (got {})",
                spec.spacing_d
            )));
        }
        if nodes < 2 * STENCIL {
            return Err(Error::InvalidInput(format!("table needs at least {} nodes", 2 * STENCIL)));
        }
        let ewald = EwaldSum::shared(spec)?;
        let recip = spec.reciprocal_constant();
        let nodes = nodes + nodes % 2;
        let step = recip / nodes as f64;
        let n = nodes + 2 * PAD + 1;
        let centre = (nodes / 2 + PAD) as i64;
        let group = spec.point_group().elements();

        // Node i sits at (i − centre)·h; the grid is symmetric about the origin,
        // so point-group matrices permute nodes.
        let image = |i: usize, j: usize, m: &[[i32; 2]; 2]| -> (usize, usize) {
            let (x, y) = (i as i64 - centre, j as i64 - centre);
            let xi = m[0][0] as i64 * x + m[0][1] as i64 * y + centre;
            let yi = m[1][0] as i64 * x + m[1][1] as i64 * y + centre;
            (xi as usize, yi as usize)
        };
        let mut canonical = Vec::new();
        let mut seen = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                if seen[i * n + j] {
                    continue;
                }
                for m in &group {
                    let (a, b) = image(i, j, m);
                    seen[a * n + b] = true;
                }
                canonical.push((i, j));
            }
        }
        let values: Vec<f64> = canonical
            .par_iter()
            .map(|&(i, j)| {
                let p = Momentum2::new((i as i64 - centre) as f64 * step, (j as i64 - centre) as f64 * step);
                ewald.regular_part(p)
            })
            .collect();
        let mut regular = vec![0.0; n * n];
        for (&(i, j), &v) in canonical.iter().zip(&values) {
            for m in &group {
                let (a, b) = image(i, j, m);
                regular[a * n + b] = v;
            }
        }

        let mut table = DispersionTable {
            spec: *spec,
            weights: spec.polarization.weights(),
            area: spec.unit_cell_area(),
            recip,
            side: n,
            step,
            regular,
            accuracy: 0.0,
            dark_max: f64::NEG_INFINITY,
        };
        table.accuracy = table.self_check(&ewald);
        for i in PAD..=(PAD + nodes) {
            for j in PAD..=(PAD + nodes) {
                let p = Momentum2::new((i as i64 - centre) as f64 * step, (j as i64 - centre) as f64 * step);
                if p.norm() > 1.0 {
                    table.dark_max = table.dark_max.max(table.eval_reduced(p).re);
                }
            }
        }
        Ok(table)
    }

    /// Interpolation error measured against direct Ewald evaluation at
    /// off-grid probe points, in units of Γ0.
    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    /// Largest Δ over the dark part of the zone, sampled on the table nodes.
    pub fn dark_maximum(&self) -> f64 {
        self.dark_max
    }

    fn self_check(&self, ewald: &EwaldSum) -> f64 {
        let h = 0.5 * self.recip;
        let mut worst: f64 = 0.0;
        for k in 0..32 {
            // deterministic quasi-random probes
            let u = (k as f64 * 0.618_033_988_75).fract();
            let v = (k as f64 * 0.754_877_666_25 + 0.1).fract();
            let p = Momentum2::new(-h + 2.0 * h * u, -h + 2.0 * h * v);
            worst = worst.max((self.regular(p) - ewald.regular_part(p)).abs());
        }
        worst
    }

    /// Smooth part R(p), real; `p` must lie in the first zone.
    pub fn regular(&self, p: Momentum2) -> f64 {
        let n = self.side as i64;
        let offset = PAD as f64;
        let tx = ((p.kx + 0.5 * self.recip) / self.step + offset).clamp(2.0, (n - 4) as f64);
        let ty = ((p.ky + 0.5 * self.recip) / self.step + offset).clamp(2.0, (n - 4) as f64);
        let (ix, fx) = (tx.floor(), tx - tx.floor());
        let (iy, fy) = (ty.floor(), ty - ty.floor());
        let wx = lagrange_weights(fx);
        let wy = lagrange_weights(fy);
        let ix = ix as i64 - 2;
        let iy = iy as i64 - 2;
        let mut sum = 0.0;
        for (a, wa) in wx.iter().enumerate() {
            let row = (ix + a as i64) as usize * self.side;
            let mut acc = 0.0;
            for (b, wb) in wy.iter().enumerate() {
                let col = (iy + b as i64) as usize;
                acc += wb * self.regular[row + col];
            }
            sum += wa * acc;
        }
        sum
    }

    /// Singular plane-wave part at the zone-reduced momentum.
    pub fn singular(&self, p: Momentum2) -> Complex64 {
        let q = p.reduce_to_bz(&self.spec);
        singular_term(&self.weights, self.area, q) * self.spec.gamma0
    }

    /// ε(p); p may lie anywhere in momentum space.
    pub fn eval(&self, p: Momentum2) -> Result<ComplexEnergy> {
        let q = p.reduce_to_bz(&self.spec);
        if (q.norm_sqr() - 1.0).abs() < 1e-14 {
            return Err(Error::Domain(format!("dispersion diverges on the light cone (|p| = {})", q.norm())));
        }
        Ok(self.eval_reduced(q))
    }

    /// ε(p) for a momentum already reduced to the zone and off the light cone.
    pub fn eval_reduced(&self, q: Momentum2) -> ComplexEnergy {
        let s = singular_term(&self.weights, self.area, q) * self.spec.gamma0;
        ComplexEnergy::new(s.re + self.regular(q), s.im)
    }

    /// Real part Δ(p) for a dark momentum, reduced internally.
    pub fn shift(&self, p: Momentum2) -> f64 {
        let q = p.reduce_to_bz(&self.spec);
        self.eval_reduced(q).re
    }
}

/// Six-point Lagrange weights for nodes −2..=3 at fractional offset x ∈ [0, 1).
fn lagrange_weights(x: f64) -> [f64; STENCIL] {
    let mut w = [0.0; STENCIL];
    for (j, wj) in w.iter_mut().enumerate() {
        let xj = j as f64 - 2.0;
        let mut prod = 1.0;
        for m in 0..STENCIL {
            if m != j {
                let xm = m as f64 - 2.0;
                prod *= (x - xm) / (xj - xm);
            }
        }
        *wj = prod;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lagrange_weights_reproduce_quintics() {
        let x = 0.37;
        let w = lagrange_weights(x);
        for k in 0..6 {
            let s: f64 = w.iter().enumerate().map(|(j, wj)| wj * (j as f64 - 2.0).powi(k)).sum();
            assert!((s - x.powi(k)).abs() < 1e-12);
        }
    }

    #[test]
    fn table_agrees_with_ewald() {
        let spec = LatticeSpec::square(0.2);
        let table = DispersionTable::shared(&spec).unwrap();
        assert!(table.accuracy() < 1e-9, "accuracy {}", table.accuracy());
        let ewald = EwaldSum::new(&spec).unwrap();
        for p in [
            Momentum2::new(0.0, 0.0),
            Momentum2::new(0.999, 0.0),
            Momentum2::new(1.001, 0.02),
            Momentum2::new(2.5, 2.5),
            Momentum2::new(2.475, 2.475),
            Momentum2::new(2.4999, 0.3),
            Momentum2::new(-2.5, -0.3),
            Momentum2::new(-1.3, 2.2),
        ] {
            let a = table.eval(p).unwrap();
            let b = ewald.dispersion(p).unwrap();
            assert!((a.re - b.re).abs() < 1e-9 && (a.im - b.im).abs() < 1e-12, "{p:?}: {a:?} vs {b:?}");
        }
    }

    #[test]
    fn periodic_images_agree() {
        let spec = LatticeSpec::square(0.2);
        let table = DispersionTable::shared(&spec).unwrap();
        let b = spec.reciprocal_constant();
        let p = Momentum2::new(1.4, -0.8);
        let e1 = table.eval(p).unwrap();
        let e2 = table.eval(p + Momentum2::new(b, -2.0 * b)).unwrap();
        assert!((e1.re - e2.re).abs() < 1e-10);
    }

    #[test]
    fn large_spacing_is_rejected() {
        assert!(matches!(
            DispersionTable::build(&LatticeSpec::square(0.6), 64),
            Err(Error::Unsupported(_))
        ));
    }
}
