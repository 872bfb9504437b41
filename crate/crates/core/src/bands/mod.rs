//! Two-excitation band ε⁽²⁾(P, q) = ε(P/2 + q) + ε(P/2 − q), its critical
//! points and saddle-line contours.

mod contour;

pub use contour::{iso_contours, Polyline};

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{wrap, ComplexEnergy, DispersionTable, LatticeSpec, Momentum2};

/// Partition of the relative-momentum zone by the number of bright constituents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Domain {
    /// Both constituents dark.
    D0,
    /// Exactly one bright constituent.
    D1,
    /// Both bright.
    D2,
}

impl Domain {
    pub fn index(self) -> usize {
        match self {
            Domain::D0 => 0,
            Domain::D1 => 1,
            Domain::D2 => 2,
        }
    }

    pub fn from_bright_count(n: usize) -> Domain {
        match n {
            0 => Domain::D0,
            1 => Domain::D1,
            _ => Domain::D2,
        }
    }
}

/// Pair state (P, q), identified with (P, −q).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoExcKinematics {
    pub total: Momentum2,
    pub relative: Momentum2,
    pub energy: f64,
}

impl TwoExcKinematics {
    /// Representative with q in the upper half-plane (qy > 0, or qy = 0 and qx ≥ 0).
    pub fn canonical(self) -> Self {
        let q = self.relative;
        let flip = q.ky < 0.0 || (q.ky == 0.0 && q.kx < 0.0);
        TwoExcKinematics { relative: if flip { -q } else { q }, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalKind {
    Maximum,
    Saddle,
    Minimum,
    Unclassified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub q_crit: Momentum2,
    pub energy: f64,
    pub kind: CriticalKind,
    pub hessian: [[f64; 2]; 2],
    pub hessian_eigs: [f64; 2],
    pub gradient_norm: f64,
    pub symmetry_orbit: Vec<Momentum2>,
}

/// A seed whose Newton refinement did not settle on a critical point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateFailure {
    pub seed: Momentum2,
    pub last: Momentum2,
    pub gradient_norm: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointReport {
    /// Distinct orbits, sorted by energy (descending).
    pub points: Vec<CriticalPoint>,
    pub failures: Vec<CandidateFailure>,
}

impl CriticalPointReport {
    pub fn of_kind(&self, kind: CriticalKind) -> impl Iterator<Item = &CriticalPoint> {
        self.points.iter().filter(move |c| c.kind == kind)
    }

    /// Highest band maximum.
    pub fn maximum(&self) -> Option<&CriticalPoint> {
        self.of_kind(CriticalKind::Maximum).next()
    }

    /// Highest saddle.
    pub fn saddle(&self) -> Option<&CriticalPoint> {
        self.of_kind(CriticalKind::Saddle).next()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointOptions {
    /// Seed grid points per axis over the full zone.
    pub grid_n: usize,
    /// Excluded distance from either light-cone circle, in units of π/a.
    pub light_cone_margin: f64,
    pub gradient_tolerance: f64,
    /// Orbit deduplication distance, in units of π/a.
    pub dedup_tolerance: f64,
    /// |det H| below this is reported as unclassified.
    pub degenerate_hessian: f64,
    pub max_newton_steps: usize,
}

impl Default for CriticalPointOptions {
    fn default() -> Self {
        CriticalPointOptions {
            grid_n: 256,
            light_cone_margin: 1e-2,
            gradient_tolerance: 1e-6,
            dedup_tolerance: 1e-4,
            degenerate_hessian: 1e-10,
            max_newton_steps: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleLine {
    pub polyline: Vec<Momentum2>,
}

/// ε⁽²⁾ at fixed total momentum P.
#[derive(Debug, Clone)]
pub struct TwoExcitationBand {
    table: Arc<DispersionTable>,
    spec: LatticeSpec,
    total: Momentum2,
    half: Momentum2,
    step: f64,
}

impl TwoExcitationBand {
    pub fn new(spec: &LatticeSpec, total: Momentum2) -> Result<Self> {
        Ok(Self::with_table(DispersionTable::shared(spec)?, total))
    }

    pub fn with_table(table: Arc<DispersionTable>, total: Momentum2) -> Self {
        let spec = *table.spec();
        let total = total.reduce_to_bz(&spec);
        TwoExcitationBand {
            table,
            spec,
            total,
            half: total * 0.5,
            step: 1e-3 * spec.bz_half_width(),
        }
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn table(&self) -> &Arc<DispersionTable> {
        &self.table
    }

    pub fn total_momentum(&self) -> Momentum2 {
        self.total
    }

    /// Zone-reduced constituent momenta P/2 + q and P/2 − q.
    pub fn constituents(&self, q: Momentum2) -> (Momentum2, Momentum2) {
        (
            (self.half + q).reduce_to_bz(&self.spec),
            (self.half - q).reduce_to_bz(&self.spec),
        )
    }

    /// Centres of the two light-cone disks in q-space, wrapped into the zone.
    pub fn light_cone_centres(&self) -> (Momentum2, Momentum2) {
        let b = self.spec.reciprocal_constant();
        let c = Momentum2::new(wrap(-self.half.kx, b), wrap(-self.half.ky, b));
        let d = Momentum2::new(wrap(self.half.kx, b), wrap(self.half.ky, b));
        (c, d)
    }

    pub fn domain(&self, q: Momentum2) -> Domain {
        let (p1, p2) = self.constituents(q);
        let bright = (p1.norm() <= 1.0) as usize + (p2.norm() <= 1.0) as usize;
        Domain::from_bright_count(bright)
    }

    /// Signed distance of the nearer constituent from the light cone (positive when dark).
    pub fn light_cone_distance(&self, q: Momentum2) -> f64 {
        let (p1, p2) = self.constituents(q);
        (p1.norm() - 1.0).min(p2.norm() - 1.0)
    }

    pub fn eps2(&self, q: Momentum2) -> Result<ComplexEnergy> {
        let a = self.table.eval(self.half + q)?;
        let b = self.table.eval(self.half - q)?;
        Ok(ComplexEnergy::new(a.re + b.re, a.im + b.im))
    }

    /// Real part Δ⁽²⁾(P, q).
    pub fn delta2(&self, q: Momentum2) -> f64 {
        self.table.shift(self.half + q) + self.table.shift(self.half - q)
    }

    pub fn gradient(&self, q: Momentum2) -> [f64; 2] {
        let h = self.step;
        let d = |h: f64, dir: Momentum2| {
            (self.delta2(q + dir * h) - self.delta2(q - dir * h)) / (2.0 * h)
        };
        let ex = Momentum2::new(1.0, 0.0);
        let ey = Momentum2::new(0.0, 1.0);
        let gx = (4.0 * d(0.5 * h, ex) - d(h, ex)) / 3.0;
        let gy = (4.0 * d(0.5 * h, ey) - d(h, ey)) / 3.0;
        [gx, gy]
    }

    pub fn hessian(&self, q: Momentum2) -> [[f64; 2]; 2] {
        self.hessian_with_step(q, self.step)
    }

    fn hessian_with_step(&self, q: Momentum2, step: f64) -> [[f64; 2]; 2] {
        let f0 = self.delta2(q);
        let second = |h: f64, dir: Momentum2| {
            (self.delta2(q + dir * h) - 2.0 * f0 + self.delta2(q - dir * h)) / (h * h)
        };
        let mixed = |h: f64| {
            let f = |sx: f64, sy: f64| self.delta2(q + Momentum2::new(sx * h, sy * h));
            (f(1.0, 1.0) - f(1.0, -1.0) - f(-1.0, 1.0) + f(-1.0, -1.0)) / (4.0 * h * h)
        };
        let ex = Momentum2::new(1.0, 0.0);
        let ey = Momentum2::new(0.0, 1.0);
        let rich = |a: f64, b: f64| (4.0 * b - a) / 3.0;
        let hxx = rich(second(step, ex), second(0.5 * step, ex));
        let hyy = rich(second(step, ey), second(0.5 * step, ey));
        let hxy = rich(mixed(step), mixed(0.5 * step));
        [[hxx, hxy], [hxy, hyy]]
    }

    /// |∇_q Δ⁽²⁾|. Fails when q is too close to a light-cone circle for the
    /// finite differences to be trusted.
    pub fn group_velocity(&self, q: Momentum2) -> Result<f64> {
        let margin = 1e-2 * self.spec.bz_half_width();
        let dist = self.light_cone_distance(q);
        if dist < margin {
            return Err(Error::Domain(format!(
                "group velocity unreliable at q = ({}, {}): {dist:.3e} from the light cone",
                q.kx, q.ky
            )));
        }
        let g = self.gradient(q);
        Ok(g[0].hypot(g[1]))
    }

    /// Point-group operations mapping the band at this P onto itself, as
    /// affine maps q → g·q + t.
    pub fn symmetry_ops(&self) -> Vec<([[i32; 2]; 2], Momentum2)> {
        let b = self.spec.reciprocal_constant();
        let mut ops = Vec::new();
        for g in self.spec.point_group().elements() {
            let gp = self.total.transform(&g);
            let d = gp - self.total;
            let on_lattice = |x: f64| ((x / b) - (x / b).round()).abs() < 1e-9;
            if on_lattice(d.kx) && on_lattice(d.ky) {
                ops.push((g, d * 0.5));
            }
        }
        ops
    }

    /// All images of q under the stabilizer of P and q ≡ −q, reduced to the zone.
    pub fn symmetry_orbit(&self, q: Momentum2) -> Vec<Momentum2> {
        let tol = 1e-9 * self.spec.bz_half_width();
        let mut orbit: Vec<Momentum2> = Vec::new();
        for (g, t) in self.symmetry_ops() {
            let img = q.transform(&g) + t;
            for cand in [img, -img] {
                let c = cand.reduce_to_bz(&self.spec);
                if !orbit.iter().any(|o| self.periodic_distance(*o, c) < tol) {
                    orbit.push(c);
                }
            }
        }
        orbit.sort_by(|a, b| a.kx.total_cmp(&b.kx).then(a.ky.total_cmp(&b.ky)));
        orbit
    }

    pub fn periodic_distance(&self, a: Momentum2, b: Momentum2) -> f64 {
        let r = self.spec.reciprocal_constant();
        wrap(a.kx - b.kx, r).hypot(wrap(a.ky - b.ky, r))
    }

    /// Newton search for the critical points of Δ⁽²⁾ over the dark-pair region.
    pub fn find_critical_points(&self, opts: &CriticalPointOptions) -> Result<CriticalPointReport> {
        if opts.grid_n < 8 {
            return Err(Error::InvalidInput("critical-point grid needs at least 8 points per axis".into()));
        }
        let n = opts.grid_n;
        let b = self.spec.reciprocal_constant();
        let h = b / n as f64;
        let unit = self.spec.bz_half_width();
        let margin = opts.light_cone_margin * unit;
        let node = |i: usize, j: usize| Momentum2::new(-0.5 * b + i as f64 * h, -0.5 * b + j as f64 * h);

        let values: Vec<Option<f64>> = (0..n * n)
            .into_par_iter()
            .map(|k| {
                let q = node(k / n, k % n);
                (self.light_cone_distance(q) > margin).then(|| self.delta2(q))
            })
            .collect();
        let at = |i: usize, j: usize| values[(i % n) * n + (j % n)];
        let grad = |i: usize, j: usize| -> Option<[f64; 2]> {
            let (ip, im) = ((i + 1) % n, (i + n - 1) % n);
            let (jp, jm) = ((j + 1) % n, (j + n - 1) % n);
            Some([at(ip, j)? - at(im, j)?, at(i, jp)? - at(i, jm)?])
        };

        let mut seeds = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
                let gs: Option<Vec<[f64; 2]>> = corners.iter().map(|&(a, c)| grad(a % n, c % n)).collect();
                let Some(gs) = gs else { continue };
                let changes = |k: usize| {
                    let lo = gs.iter().map(|g| g[k]).fold(f64::INFINITY, f64::min);
                    let hi = gs.iter().map(|g| g[k]).fold(f64::NEG_INFINITY, f64::max);
                    lo <= 0.0 && hi >= 0.0
                };
                if changes(0) && changes(1) {
                    seeds.push(node(i, j) + Momentum2::new(0.5 * h, 0.5 * h));
                }
            }
        }

        let refined: Vec<std::result::Result<Momentum2, CandidateFailure>> =
            seeds.par_iter().map(|&s| self.newton(s, opts, margin, h)).collect();

        let dedup = opts.dedup_tolerance * unit;
        let mut points: Vec<CriticalPoint> = Vec::new();
        let mut failures = Vec::new();
        for r in refined {
            match r {
                Ok(q) => {
                    let known = points
                        .iter()
                        .any(|p| p.symmetry_orbit.iter().any(|o| self.periodic_distance(*o, q) < dedup));
                    if !known {
                        points.push(self.classify(q, opts));
                    }
                }
                Err(f) => failures.push(f),
            }
        }
        points.sort_by(|a, b| {
            b.energy
                .total_cmp(&a.energy)
                .then(a.q_crit.kx.total_cmp(&b.q_crit.kx))
                .then(a.q_crit.ky.total_cmp(&b.q_crit.ky))
        });
        Ok(CriticalPointReport { points, failures })
    }

    fn newton(
        &self,
        seed: Momentum2,
        opts: &CriticalPointOptions,
        margin: f64,
        cell: f64,
    ) -> std::result::Result<Momentum2, CandidateFailure> {
        let mut q = seed;
        let mut gnorm = f64::INFINITY;
        let fail = |q: Momentum2, g: f64, reason: &str| CandidateFailure {
            seed,
            last: q,
            gradient_norm: g,
            reason: reason.to_string(),
        };
        for _ in 0..opts.max_newton_steps {
            let g = self.gradient(q);
            gnorm = g[0].hypot(g[1]);
            let hm = self.hessian(q);
            let det = hm[0][0] * hm[1][1] - hm[0][1] * hm[1][0];
            if det.abs() < 1e-14 {
                return Err(fail(q, gnorm, "singular Hessian during Newton iteration"));
            }
            let dx = (hm[1][1] * g[0] - hm[0][1] * g[1]) / det;
            let dy = (-hm[1][0] * g[0] + hm[0][0] * g[1]) / det;
            let mut step = Momentum2::new(-dx, -dy);
            // Keep steps local: a seed belongs to one cell.
            let len = step.norm();
            if len > 2.0 * cell {
                step = step * (2.0 * cell / len);
            }
            q = (q + step).reduce_to_bz(&self.spec);
            if self.light_cone_distance(q) <= margin {
                return Err(fail(q, gnorm, "left the dark-pair region"));
            }
            if step.norm() < 1e-12 * self.spec.bz_half_width() {
                break;
            }
        }
        let g = self.gradient(q);
        gnorm = gnorm.min(g[0].hypot(g[1]));
        if gnorm < opts.gradient_tolerance {
            Ok(q)
        } else {
            Err(fail(q, gnorm, "Newton iteration did not reach the gradient tolerance"))
        }
    }

    fn classify(&self, q: Momentum2, opts: &CriticalPointOptions) -> CriticalPoint {
        let hm = self.hessian(q);
        let eigs = sym_eigenvalues(&hm);
        let det = eigs[0] * eigs[1];
        let kind = if det.abs() < opts.degenerate_hessian {
            CriticalKind::Unclassified
        } else if eigs[0] < 0.0 && eigs[1] < 0.0 {
            CriticalKind::Maximum
        } else if eigs[0] > 0.0 && eigs[1] > 0.0 {
            CriticalKind::Minimum
        } else {
            CriticalKind::Saddle
        };
        let g = self.gradient(q);
        CriticalPoint {
            q_crit: q,
            energy: self.delta2(q),
            kind,
            hessian: hm,
            hessian_eigs: eigs,
            gradient_norm: g[0].hypot(g[1]),
            symmetry_orbit: self.symmetry_orbit(q),
        }
    }

    /// Hessian at a coarser step; used to check that a classification is stable.
    pub fn hessian_coarse(&self, q: Momentum2) -> [[f64; 2]; 2] {
        self.hessian_with_step(q, 4.0 * self.step)
    }

    /// Iso-energy contours of Δ⁽²⁾ = `energy` restricted to dark pairs, with
    /// vertices projected onto the contour.
    pub fn contours(&self, energy: f64, grid_n: usize) -> Vec<Polyline> {
        let margin = 1e-2 * self.spec.bz_half_width();
        let lines = iso_contours(
            |q| (self.light_cone_distance(q) > margin).then(|| self.delta2(q) - energy),
            self.spec.reciprocal_constant(),
            grid_n,
        );
        lines
            .into_iter()
            .map(|l| Polyline {
                points: l.points.into_iter().map(|q| self.project(q, energy)).collect(),
                closed: l.closed,
            })
            .collect()
    }

    /// Moves q along the gradient onto Δ⁽²⁾ = energy.
    pub fn project(&self, q: Momentum2, energy: f64) -> Momentum2 {
        let mut q = q;
        for _ in 0..8 {
            let r = self.delta2(q) - energy;
            if r.abs() < 1e-12 {
                break;
            }
            let g = self.gradient(q);
            let n2 = g[0] * g[0] + g[1] * g[1];
            if n2 < 1e-20 {
                break;
            }
            let step = Momentum2::new(-r * g[0] / n2, -r * g[1] / n2);
            if step.norm() > 1e-2 * self.spec.bz_half_width() {
                break;
            }
            q = q + step;
        }
        q
    }

    /// Contour Δ⁽²⁾ = E_sadd with the neighbourhoods (radius `exclusion`, in
    /// units of π/a) of the given saddle orbits removed.
    pub fn saddle_lines(&self, e_sadd: f64, saddles: &[CriticalPoint], grid_n: usize, exclusion: f64) -> Vec<SaddleLine> {
        let radius = exclusion * self.spec.bz_half_width();
        let centres: Vec<Momentum2> = saddles.iter().flat_map(|s| s.symmetry_orbit.iter().copied()).collect();
        let near = |q: Momentum2| centres.iter().any(|c| self.periodic_distance(*c, q) < radius);
        let mut out = Vec::new();
        for line in self.contours(e_sadd, grid_n) {
            let mut current = Vec::new();
            for q in line.points {
                if near(q) {
                    if current.len() >= 2 {
                        out.push(SaddleLine { polyline: std::mem::take(&mut current) });
                    }
                    current.clear();
                } else {
                    current.push(q);
                }
            }
            if current.len() >= 2 {
                out.push(SaddleLine { polyline: current });
            }
        }
        out
    }

    /// ∫ dl / v_g over the dark part of the contour Δ⁽²⁾ = E, over the
    /// two-excitation zone (half the full-zone contour).
    pub fn contour_dos(&self, energy: f64, grid_n: usize) -> f64 {
        let mut total = 0.0;
        for line in self.contours(energy, grid_n) {
            let inv_v: Vec<f64> = line
                .points
                .iter()
                .map(|q| {
                    let g = self.gradient(*q);
                    1.0 / g[0].hypot(g[1])
                })
                .collect();
            for k in 0..line.segment_count() {
                let (a, b) = line.segment(k);
                let len = self.periodic_distance(line.points[a], line.points[b]);
                total += 0.5 * (inv_v[a] + inv_v[b]) * len;
            }
        }
        0.5 * total
    }
}

/// ε⁽²⁾(P, q) for a lattice, using the shared dispersion table.
pub fn eps2(spec: &LatticeSpec, total: Momentum2, q: Momentum2) -> Result<ComplexEnergy> {
    TwoExcitationBand::new(spec, total)?.eps2(q)
}

pub fn group_velocity(spec: &LatticeSpec, total: Momentum2, q: Momentum2) -> Result<f64> {
    TwoExcitationBand::new(spec, total)?.group_velocity(q)
}

pub fn find_critical_points(spec: &LatticeSpec, total: Momentum2) -> Result<CriticalPointReport> {
    TwoExcitationBand::new(spec, total)?.find_critical_points(&CriticalPointOptions::default())
}

/// Eigenvalues of a real symmetric 2×2 matrix, ascending.
pub fn sym_eigenvalues(m: &[[f64; 2]; 2]) -> [f64; 2] {
    let tr = m[0][0] + m[1][1];
    let diff = m[0][0] - m[1][1];
    let disc = (0.25 * diff * diff + m[0][1] * m[1][0]).max(0.0).sqrt();
    [0.5 * tr - disc, 0.5 * tr + disc]
}

/// Unit eigenvector of a real symmetric 2×2 matrix for eigenvalue `lambda`.
pub fn sym_eigenvector(m: &[[f64; 2]; 2], lambda: f64) -> Momentum2 {
    let (a, b) = (m[0][0] - lambda, m[0][1]);
    let (c, d) = (m[1][0], m[1][1] - lambda);
    let v = if a.abs() + b.abs() > c.abs() + d.abs() {
        Momentum2::new(-b, a)
    } else {
        Momentum2::new(-d, c)
    };
    let n = v.norm();
    if n == 0.0 {
        Momentum2::new(1.0, 0.0)
    } else {
        v * (1.0 / n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band() -> TwoExcitationBand {
        TwoExcitationBand::new(&LatticeSpec::square(0.2), Momentum2::ZERO).unwrap()
    }

    #[test]
    fn pair_energy_is_symmetric_in_q() {
        let b = TwoExcitationBand::new(&LatticeSpec::square(0.2), Momentum2::new(0.4, -0.3)).unwrap();
        for q in [Momentum2::new(1.3, 0.2), Momentum2::new(0.1, 0.2), Momentum2::new(-2.2, 1.9)] {
            let a = b.eps2(q).unwrap();
            let c = b.eps2(-q).unwrap();
            assert!((a.re - c.re).abs() < 1e-12 && (a.im - c.im).abs() < 1e-12);
            assert_eq!(b.domain(q), b.domain(-q));
        }
    }

    #[test]
    fn zero_total_momentum_doubles_the_dispersion() {
        let b = band();
        let q = Momentum2::new(1.7, 0.6);
        let e = b.eps2(q).unwrap();
        let single = b.table().eval(q).unwrap();
        assert!((e.re - 2.0 * single.re).abs() < 1e-12);
        assert_eq!(e.im, 0.0);
        let centre = b.eps2(Momentum2::ZERO).unwrap();
        assert!((centre.decay_rate() - 2.0 * 3.0 / (0.16 * std::f64::consts::PI)).abs() < 1e-6);
    }

    #[test]
    fn domains_at_zero_total_momentum() {
        let b = band();
        assert_eq!(b.domain(Momentum2::new(0.3, 0.0)), Domain::D2);
        assert_eq!(b.domain(Momentum2::new(1.3, 0.0)), Domain::D0);
        let shifted = TwoExcitationBand::new(&LatticeSpec::square(0.2), Momentum2::new(0.6, 0.0)).unwrap();
        // q = (0.8, 0): P/2 + q = 1.1 dark, P/2 − q = −0.5 bright
        assert_eq!(shifted.domain(Momentum2::new(0.8, 0.0)), Domain::D1);
    }

    #[test]
    fn critical_points_at_zone_centre() {
        let b = band();
        let report = b.find_critical_points(&CriticalPointOptions { grid_n: 128, ..Default::default() }).unwrap();
        let max = report.maximum().expect("maximum");
        let sad = report.saddle().expect("saddle");
        assert!(max.energy > sad.energy);
        assert!(report.of_kind(CriticalKind::Minimum).next().is_none());
        let h = b.spec().bz_half_width();
        // maximum at the zone corner, saddles at the edge centres
        assert!(b.periodic_distance(max.q_crit, Momentum2::new(h, h)) < 1e-6);
        assert!(sad.symmetry_orbit.iter().any(|q| b.periodic_distance(*q, Momentum2::new(h, 0.0)) < 1e-6));
        for c in &report.points {
            assert!(c.gradient_norm < 1e-6);
            // orbit closure under C4
            for o in &c.symmetry_orbit {
                let r = Momentum2::new(-o.ky, o.kx);
                assert!(c.symmetry_orbit.iter().any(|x| b.periodic_distance(*x, r) < 1e-6));
            }
            // a coarser Hessian does not flip the class
            let e2 = sym_eigenvalues(&b.hessian_coarse(c.q_crit));
            assert_eq!(e2[0].signum(), c.hessian_eigs[0].signum());
            assert_eq!(e2[1].signum(), c.hessian_eigs[1].signum());
        }
    }

    #[test]
    fn group_velocity_grows_as_root_of_detuning() {
        let b = band();
        let h = b.spec().bz_half_width();
        let m = Momentum2::new(h, h);
        let e0 = b.delta2(m);
        let dir = Momentum2::new(-0.6, -0.8);
        let mut prev = None;
        for t in [1e-2, 4e-2] {
            let q = m + dir * t;
            let v = b.group_velocity(q).unwrap();
            let de = e0 - b.delta2(q);
            if let Some((v0, d0)) = prev {
                let ratio: f64 = v / v0;
                let pred = (de / d0 as f64).sqrt();
                assert!((ratio / pred - 1.0).abs() < 0.02, "{ratio} vs {pred}");
            }
            prev = Some((v, de));
        }
        assert!(b.group_velocity(Momentum2::new(1.0005, 0.0)).is_err());
    }

    #[test]
    fn saddle_lines_sit_on_the_contour() {
        let b = band();
        let report = b.find_critical_points(&CriticalPointOptions { grid_n: 64, ..Default::default() }).unwrap();
        let sad = report.saddle().unwrap();
        let saddles: Vec<CriticalPoint> = report.of_kind(CriticalKind::Saddle).cloned().collect();
        let lines = b.saddle_lines(sad.energy, &saddles, 128, 0.05);
        assert!(!lines.is_empty());
        for l in &lines {
            for q in &l.polyline {
                assert!((b.delta2(*q) - sad.energy).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn eigen_helpers() {
        let m = [[2.0, 1.0], [1.0, 2.0]];
        assert_eq!(sym_eigenvalues(&m), [1.0, 3.0]);
        let v = sym_eigenvector(&m, 3.0);
        assert!((v.kx.abs() - v.ky.abs()).abs() < 1e-12 && (v.kx * v.ky) > 0.0);
    }

    #[test]
    fn canonical_representative() {
        let k = TwoExcKinematics { total: Momentum2::ZERO, relative: Momentum2::new(0.3, -0.2), energy: 0.0 };
        assert_eq!(k.canonical().relative, Momentum2::new(-0.3, 0.2));
        let k = TwoExcKinematics { relative: Momentum2::new(-0.3, 0.0), ..k };
        assert_eq!(k.canonical().relative, Momentum2::new(0.3, 0.0));
    }
}
