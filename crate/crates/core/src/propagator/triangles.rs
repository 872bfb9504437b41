//! Linear-triangle resolvent integration over the dark region.
//!
//! On a triangle with Δ⁽²⁾ and the partition weight both interpolated
//! linearly, ∫ w / (E + i0 − Δ⁽²⁾) has a closed form in terms of divided
//! differences of ½u² ln u at the vertex values u = E − Δ⁽²⁾. The +i0 branch
//! of the logarithm supplies the on-shell (delta-function) part exactly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::lattice::Momentum2;

/// Vertex values closer to the shell than this are moved onto it from above;
/// the induced change is O(floor · area).
const SHELL_FLOOR: f64 = 1e-14;
const TAYLOR_TERMS: usize = 12;

/// G(u) = ½u² ln(u + i0) split as (Re, Im) = (½u² ln|u|, ½πu² θ(−u)).
fn g3(u: f64) -> (f64, f64) {
    let re = 0.5 * u * u * u.abs().ln();
    let im = if u < 0.0 { 0.5 * PI * u * u } else { 0.0 };
    (re, im)
}

/// k-th derivative of G at a point off the shell.
fn g3_derivative(k: usize, u: f64) -> (f64, f64) {
    let neg = u < 0.0;
    match k {
        0 => g3(u),
        1 => (u * u.abs().ln() + 0.5 * u, if neg { PI * u } else { 0.0 }),
        2 => (u.abs().ln() + 1.5, if neg { PI } else { 0.0 }),
        _ => {
            // (−1)^(k−1) (k−3)! / u^(k−2)
            let mut v = 1.0 / u;
            for j in 1..(k - 2) {
                v *= -(j as f64) / u;
            }
            (v, 0.0)
        }
    }
}

/// Divided difference of G over up to four (possibly repeated) nodes.
fn divided_difference(x: &[f64], g: &[(f64, f64)]) -> (f64, f64) {
    let n = x.len();
    if n == 1 {
        return g[0];
    }
    let mut lo = x[0];
    let mut hi = x[0];
    let (mut ilo, mut ihi) = (0, 0);
    let mut scale = x[0].abs();
    for (k, &v) in x.iter().enumerate().skip(1) {
        if v < lo {
            lo = v;
            ilo = k;
        }
        if v > hi {
            hi = v;
            ihi = k;
        }
        scale = scale.min(v.abs());
    }
    if hi - lo <= 0.1 * scale {
        return taylor(x, x.iter().sum::<f64>() / n as f64);
    }
    let drop = |k: usize| -> ([f64; 4], [(f64, f64); 4]) {
        let mut xs = [0.0; 4];
        let mut gs = [(0.0, 0.0); 4];
        let mut m = 0;
        for l in 0..n {
            if l != k {
                xs[m] = x[l];
                gs[m] = g[l];
                m += 1;
            }
        }
        (xs, gs)
    };
    let (xa, ga) = drop(ilo);
    let (xb, gb) = drop(ihi);
    let a = divided_difference(&xa[..n - 1], &ga[..n - 1]);
    let b = divided_difference(&xb[..n - 1], &gb[..n - 1]);
    ((a.0 - b.0) / (hi - lo), (a.1 - b.1) / (hi - lo))
}

/// [x0..xn] G = Σ_t G^(n+t)(c)/(n+t)! · h_t(x − c), h_t complete homogeneous.
fn taylor(x: &[f64], c: f64) -> (f64, f64) {
    let order = x.len() - 1;
    let mut h = [0.0; TAYLOR_TERMS];
    h[0] = 1.0;
    for xi in x {
        let d = xi - c;
        for t in 1..TAYLOR_TERMS {
            h[t] += d * h[t - 1];
        }
    }
    let mut fact = (1..=order).map(|j| j as f64).product::<f64>();
    let (mut re, mut im) = (0.0, 0.0);
    // Derivatives above the third are (−1)^(k−1)(k−3)!/c^(k−2); step them
    // by recurrence rather than recomputing.
    let mut high = 0.0;
    for (t, ht) in h.iter().enumerate() {
        let k = order + t;
        if t > 0 {
            fact *= k as f64;
        }
        let d = if k < 3 {
            g3_derivative(k, c)
        } else {
            high = if k == 3 { 1.0 / c } else { -high * (k - 3) as f64 / c };
            (high, 0.0)
        };
        re += d.0 * ht / fact;
        im += d.1 * ht / fact;
    }
    (re, im)
}

/// ∫_T w(q) / (E + i0 − Δ(q)) over a triangle of area `area`, with `u` the
/// vertex values of E − Δ and `w` the vertex weights.
pub(crate) fn triangle_integral(area: f64, u: [f64; 3], w: [f64; 3]) -> Complex64 {
    if w == [0.0; 3] {
        return Complex64::new(0.0, 0.0);
    }
    let x = u.map(|v| if v.abs() < SHELL_FLOOR { SHELL_FLOOR } else { v });
    let g = x.map(g3);
    let (mut re, mut im) = (0.0, 0.0);
    for k in 0..3 {
        if w[k] == 0.0 {
            continue;
        }
        let d = divided_difference(&[x[0], x[1], x[2], x[k]], &[g[0], g[1], g[2], g[k]]);
        re += w[k] * d.0;
        im += w[k] * d.1;
    }
    Complex64::new(2.0 * area * re, 2.0 * area * im)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Vertex {
    pub q: Momentum2,
    /// E − Δ⁽²⁾(q)
    pub u: f64,
    pub w: f64,
}

struct Tri {
    v: [Vertex; 3],
    mid: [Vertex; 3],
    /// Linear-interpolation integrals over the four children.
    parts: [Complex64; 4],
    fine: Complex64,
    error: f64,
}

impl Tri {
    /// `coarse` is the one-triangle integral when the parent already has it.
    fn new<F: Fn(Momentum2) -> Vertex>(v: [Vertex; 3], coarse: Option<Complex64>, eval: &F) -> Tri {
        let half = |a: Vertex, b: Vertex| eval((a.q + b.q) * 0.5);
        let mid = [half(v[0], v[1]), half(v[1], v[2]), half(v[2], v[0])];
        let e1 = v[1].q - v[0].q;
        let e2 = v[2].q - v[0].q;
        let area = 0.5 * (e1.kx * e2.ky - e1.ky * e2.kx).abs();
        let integral = |t: &[Vertex; 3], a: f64| triangle_integral(a, [t[0].u, t[1].u, t[2].u], [t[0].w, t[1].w, t[2].w]);
        let coarse = coarse.unwrap_or_else(|| integral(&v, area));
        let parts = Tri::children(&v, &mid).map(|c| integral(&c, 0.25 * area));
        let fine: Complex64 = parts.iter().sum();
        // The interpolation error is O(h²); one Richardson step removes it,
        // and the size of that step is the refinement indicator.
        let correction = (fine - coarse) / 3.0;
        Tri { v, mid, parts, fine: fine + correction, error: correction.norm() }
    }

    fn children(v: &[Vertex; 3], m: &[Vertex; 3]) -> [[Vertex; 3]; 4] {
        [
            [v[0], m[0], m[2]],
            [m[0], v[1], m[1]],
            [m[2], m[1], v[2]],
            [m[0], m[1], m[2]],
        ]
    }
}

impl PartialEq for Tri {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Tri {}
impl PartialOrd for Tri {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Tri {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct MeshOutcome {
    pub value: Complex64,
    pub error: f64,
    pub triangles: usize,
    /// Centroid and indicator of the triangle with the largest indicator.
    pub worst: (Momentum2, f64),
}

/// Adaptive integration over the rectangle [x0, x1] × [y0, y1], starting from
/// an nx × ny grid of squares split into two triangles each.
pub(crate) fn integrate_rectangle<F>(
    eval: F,
    lo: Momentum2,
    hi: Momentum2,
    nx: usize,
    ny: usize,
    abs_tol: f64,
    max_triangles: usize,
) -> MeshOutcome
where
    F: Fn(Momentum2) -> Vertex,
{
    let hx = (hi.kx - lo.kx) / nx as f64;
    let hy = (hi.ky - lo.ky) / ny as f64;
    let grid: Vec<Vertex> = (0..=nx)
        .flat_map(|i| (0..=ny).map(move |j| (i, j)))
        .map(|(i, j)| eval(Momentum2::new(lo.kx + i as f64 * hx, lo.ky + j as f64 * hy)))
        .collect();
    let at = |i: usize, j: usize| grid[i * (ny + 1) + j];
    let mut heap = BinaryHeap::new();
    for i in 0..nx {
        for j in 0..ny {
            // Alternate the diagonal so the mesh has no preferred direction.
            let (a, b, c, d) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
            if (i + j) % 2 == 0 {
                heap.push(Tri::new([a, b, c], None, &eval));
                heap.push(Tri::new([a, c, d], None, &eval));
            } else {
                heap.push(Tri::new([a, b, d], None, &eval));
                heap.push(Tri::new([b, c, d], None, &eval));
            }
        }
    }
    let mut total_err: f64 = heap.iter().map(|t| t.error).sum();
    let mut steps = 0usize;
    while total_err > abs_tol && heap.len() + 3 <= max_triangles {
        let Some(t) = heap.pop() else { break };
        total_err -= t.error;
        for (c, part) in Tri::children(&t.v, &t.mid).into_iter().zip(t.parts) {
            let child = Tri::new(c, Some(part), &eval);
            total_err += child.error;
            heap.push(child);
        }
        steps += 1;
        if steps % 4096 == 0 {
            total_err = heap.iter().map(|t| t.error).sum();
        }
    }
    let value = heap.iter().map(|t| t.fine).sum();
    let error = heap.iter().map(|t| t.error).sum();
    let worst = heap.peek().map_or((lo, 0.0), |t| ((t.v[0].q + t.v[1].q + t.v[2].q) * (1.0 / 3.0), t.error));
    MeshOutcome { value, error, triangles: heap.len(), worst }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(area: f64, u: [f64; 3], w: [f64; 3], eta: f64) -> Complex64 {
        // barycentric midpoint rule on a fine sub-grid
        let n = 600;
        let mut s = Complex64::new(0.0, 0.0);
        let mut count = 0;
        for i in 0..n {
            for j in 0..(n - i) {
                for (a, b) in [(i as f64 + 1.0 / 3.0, j as f64 + 1.0 / 3.0), (i as f64 + 2.0 / 3.0, j as f64 + 2.0 / 3.0)] {
                    if a + b > n as f64 {
                        continue;
                    }
                    let l1 = a / n as f64;
                    let l2 = b / n as f64;
                    let l0 = 1.0 - l1 - l2;
                    let uu = l0 * u[0] + l1 * u[1] + l2 * u[2];
                    let ww = l0 * w[0] + l1 * w[1] + l2 * w[2];
                    s += ww / Complex64::new(uu, eta);
                    count += 1;
                }
            }
        }
        s * (area / count as f64)
    }

    #[test]
    fn off_shell_triangle_matches_direct_quadrature() {
        let u = [1.0, 2.5, 1.7];
        let w = [1.0, 0.3, 0.0];
        let exact = triangle_integral(0.5, u, w);
        let approx = brute(0.5, u, w, 0.0);
        assert!((exact - approx).norm() < 1e-5, "{exact} vs {approx}");
    }

    #[test]
    fn on_shell_imaginary_part_is_the_delta_contribution() {
        // u = 1 − 2x on the triangle (0,0),(1,0),(0,1): the delta line x = ½
        // has length ½ inside, |∇u| = 2, so Im = −π·(½)/2 with unit weight.
        let v = triangle_integral(0.5, [1.0, -1.0, 1.0], [1.0; 3]);
        assert!((v.im + std::f64::consts::PI / 4.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn weights_sum_to_unweighted_value() {
        let u = [0.3, -0.2, 0.9];
        let total = triangle_integral(1.0, u, [1.0; 3]);
        let parts: Complex64 = (0..3)
            .map(|k| {
                let mut w = [0.0; 3];
                w[k] = 1.0;
                triangle_integral(1.0, u, w)
            })
            .sum();
        assert!((total - parts).norm() < 1e-12);
    }

    #[test]
    fn nearly_degenerate_vertices_are_stable() {
        let base = triangle_integral(1.0, [2.0, 2.0, 2.0], [1.0; 3]);
        assert!((base - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        for eps in [1e-3, 1e-7, 1e-11] {
            let v = triangle_integral(1.0, [2.0, 2.0 + eps, 2.0 - 0.5 * eps], [1.0; 3]);
            // mean of 1/u to first order: ½ − ⟨δu⟩/4 with ⟨δu⟩ = ε/6
            let expected = 0.5 - eps / 24.0;
            assert!((v.re - expected).abs() < eps * eps + 1e-12 && v.im == 0.0, "{eps}: {v}");
        }
        // vertex exactly on shell
        let v = triangle_integral(1.0, [0.0, 1.0, -1.0], [1.0; 3]);
        assert!(v.re.is_finite() && v.im < 0.0);
    }

    #[test]
    fn adaptive_rectangle_integrates_a_linear_band() {
        // u = E − x over [0,1]²: ∫ dx dy/(E − x + i0) with E = 0.5
        let out = integrate_rectangle(
            |q| Vertex { q, u: 0.5 - q.kx, w: 1.0 },
            Momentum2::new(0.0, 0.0),
            Momentum2::new(1.0, 1.0),
            4,
            4,
            1e-10,
            10_000,
        );
        // PV ∫_0^1 dx/(0.5 − x) = 0, delta part −iπ
        assert!(out.value.re.abs() < 1e-9, "{:?}", out.value);
        assert!((out.value.im + std::f64::consts::PI).abs() < 1e-9);
    }
}
