//! Polar integration around the light-cone disks.
//!
//! Inside a disk of radius r_out around a light-cone centre, the integrand is
//! split along every circle where a constituent crosses the light cone; on
//! each radial segment the cosine substitution absorbs the square-root
//! behaviour of ε there. No on-shell points lie in these disks by construction.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::quad::{integrate_clustered, QuadOutcome, Triple};
use crate::bands::TwoExcitationBand;
use crate::lattice::Momentum2;

/// C∞ step: 1 for r ≤ r_in, 0 for r ≥ r_out.
pub(crate) fn bump(r: f64, r_in: f64, r_out: f64) -> f64 {
    if r <= r_in {
        return 1.0;
    }
    if r >= r_out {
        return 0.0;
    }
    let s = (r - r_in) / (r_out - r_in);
    let psi = |x: f64| if x <= 0.0 { 0.0 } else { (-1.0 / x).exp() };
    let a = psi(1.0 - s);
    a / (a + psi(s))
}

pub(crate) struct Disks<'a> {
    pub band: &'a TwoExcitationBand,
    pub energy: f64,
    pub r_in: f64,
    pub r_out: f64,
    pub c1: Momentum2,
    pub abs_tol: f64,
}

impl Disks<'_> {
    /// 1/(E − ε⁽²⁾(q)) sorted into its domain slot.
    fn resolvent(&self, q: Momentum2) -> Triple {
        let (p1, p2) = self.band.constituents(q);
        let table = self.band.table();
        let e = table.eval_reduced(p1).as_complex() + table.eval_reduced(p2).as_complex();
        let mut out = Triple([Complex64::new(0.0, 0.0); 3]);
        let v = 1.0 / (Complex64::new(self.energy, 0.0) - e);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return out;
        }
        let bright = (p1.norm() <= 1.0) as usize + (p2.norm() <= 1.0) as usize;
        out.0[bright.min(2)] = v;
        out
    }

    fn images(&self, other: Momentum2) -> Vec<Momentum2> {
        let b = self.band.spec().reciprocal_constant();
        let mut v = Vec::with_capacity(9);
        for i in -1..=1 {
            for j in -1..=1 {
                v.push(other + Momentum2::new(i as f64 * b, j as f64 * b));
            }
        }
        v
    }

    /// ∫ over the disk around `centre` of weight·resolvent. For the second
    /// disk the weight also carries (1 − χ) of the first one.
    pub fn integrate(&self, centre: Momentum2, other: Momentum2, second: bool) -> QuadOutcome<Triple> {
        let images: Vec<Momentum2> = self
            .images(other)
            .into_iter()
            .filter(|c| (*c - centre).norm() < self.r_out + 1.0)
            .collect();

        let mut angles = vec![0.0, 2.0 * PI];
        for c in &images {
            let d = *c - centre;
            let dist = d.norm();
            if dist < 1e-12 {
                continue;
            }
            let phi = d.ky.atan2(d.kx);
            if dist > 1.0 {
                let delta = (1.0 / dist).asin();
                angles.push(phi + delta);
                angles.push(phi - delta);
            }
            if dist < 2.0 {
                let delta = (0.5 * dist).acos();
                angles.push(phi + delta);
                angles.push(phi - delta);
            }
        }
        let mut angles: Vec<f64> = angles.into_iter().map(|a| a.rem_euclid(2.0 * PI)).collect();
        angles.push(2.0 * PI);
        sort_dedup(&mut angles);

        let radial = |theta: f64| -> Triple {
            let e = Momentum2::new(theta.cos(), theta.sin());
            let mut bps = vec![0.0, 1.0, self.r_in, self.r_out];
            for c in &images {
                let d = centre - *c;
                let de = d.dot(&e);
                let disc = de * de - d.norm_sqr() + 1.0;
                if disc >= 0.0 {
                    let s = disc.sqrt();
                    for r in [-de - s, -de + s] {
                        if r > 0.0 && r < self.r_out {
                            bps.push(r);
                        }
                    }
                }
            }
            sort_dedup(&mut bps);
            let f = |r: f64| {
                let q = centre + e * r;
                let mut w = bump(r, self.r_in, self.r_out);
                if second {
                    w *= 1.0 - bump(self.band.periodic_distance(q, self.c1), self.r_in, self.r_out);
                }
                if w == 0.0 {
                    return Triple([Complex64::new(0.0, 0.0); 3]);
                }
                self.resolvent(q) * (w * r)
            };
            integrate_clustered(f, &bps, 0.1 * self.abs_tol / (2.0 * PI), 1e-11, 200).value
        };
        integrate_clustered(radial, &angles, self.abs_tol, 1e-10, 400)
    }
}

fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_a_smooth_step() {
        assert_eq!(bump(0.5, 1.0, 2.0), 1.0);
        assert_eq!(bump(2.5, 1.0, 2.0), 0.0);
        assert!((bump(1.5, 1.0, 2.0) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for k in 1..100 {
            let v = bump(1.0 + k as f64 / 100.0, 1.0, 2.0);
            assert!(v <= prev);
            prev = v;
        }
        // symmetric about the middle
        assert!((bump(1.2, 1.0, 2.0) + bump(1.8, 1.0, 2.0) - 1.0).abs() < 1e-15);
    }
}
