//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

/// Values that can be integrated: a vector space with a norm.
pub(crate) trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn norm(&self) -> f64;
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
}

/// One complex value per domain β = 0, 1, 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Triple(pub [Complex64; 3]);

impl Add for Triple {
    type Output = Triple;
    fn add(self, o: Triple) -> Triple {
        Triple([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Triple {
    type Output = Triple;
    fn sub(self, o: Triple) -> Triple {
        Triple([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Mul<f64> for Triple {
    type Output = Triple;
    fn mul(self, s: f64) -> Triple {
        Triple([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl QuadValue for Triple {
    fn zero() -> Self {
        Triple([Complex64::new(0.0, 0.0); 3])
    }
    fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).sum()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub(crate) struct QuadOutcome<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

fn gk15<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron = kron + s * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + s * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    let err = (kron - gauss).norm();
    (kron, err)
}

struct Interval<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Interval<T> {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl<T> Eq for Interval<T> {}
impl<T> PartialOrd for Interval<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<T> Ord for Interval<T> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Globally adaptive integration of `f` over the union of `[bps[k], bps[k+1]]`.
pub(crate) fn integrate<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    bps: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> QuadOutcome<T> {
    let mut heap = BinaryHeap::new();
    let mut total = T::zero();
    let mut err = 0.0;
    let mut evals = 0;
    for w in bps.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e) = gk15(&mut f, w[0], w[1]);
        evals += 15;
        total = total + v;
        err += e;
        heap.push(Interval { a: w[0], b: w[1], value: v, error: e });
    }
    while err > abs_tol.max(rel_tol * total.norm()) && heap.len() < max_intervals {
        let Some(worst) = heap.pop() else { break };
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&mut f, worst.a, m);
        let (v2, e2) = gk15(&mut f, m, worst.b);
        evals += 30;
        total = total - worst.value + v1 + v2;
        err += e1 + e2 - worst.error;
        heap.push(Interval { a: worst.a, b: m, value: v1, error: e1 });
        heap.push(Interval { a: m, b: worst.b, value: v2, error: e2 });
    }
    // Re-sum to shed accumulated rounding in the running totals.
    let mut value = T::zero();
    let mut error = 0.0;
    for iv in heap.iter() {
        value = value + iv.value;
        error += iv.error;
    }
    QuadOutcome { value, error, evaluations: evals }
}

/// Same as [`integrate`] after the substitution x = a + (b − a)(1 − cos t)/2 on
/// every sub-interval, which smooths square-root endpoint behaviour.
pub(crate) fn integrate_clustered<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    bps: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> QuadOutcome<T> {
    let mut total = QuadOutcome { value: T::zero(), error: 0.0, evaluations: 0 };
    let n = bps.windows(2).filter(|w| w[1] > w[0]).count().max(1);
    for w in bps.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let half = 0.5 * (b - a);
        let g = |t: f64| {
            let (s, c) = t.sin_cos();
            f(a + half * (1.0 - c)) * (half * s)
        };
        let part = integrate(g, &[0.0, std::f64::consts::PI], abs_tol / n as f64, rel_tol, max_intervals);
        total.value = total.value + part.value;
        total.error += part.error;
        total.evaluations += part.evaluations;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(|x: f64| Complex64::new(x.powi(5) - 3.0 * x * x, 0.0), &[-1.0, 2.0], 1e-14, 0.0, 10);
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((r.value.re - exact).abs() < 1e-12);
    }

    #[test]
    fn square_root_endpoints() {
        // ∫_0^1 √x √(1−x) dx = π/8
        let f = |x: f64| Complex64::new((x * (1.0 - x)).max(0.0).sqrt(), 0.0);
        let plain = integrate(f, &[0.0, 1.0], 1e-13, 0.0, 1000);
        let clustered = integrate_clustered(f, &[0.0, 1.0], 1e-13, 0.0, 1000);
        let exact = std::f64::consts::PI / 8.0;
        assert!((clustered.value.re - exact).abs() < 1e-12);
        assert!(clustered.evaluations < plain.evaluations);
    }

    #[test]
    fn triple_integrand() {
        let r = integrate(
            |x: f64| Triple([Complex64::new(x, 0.0), Complex64::new(0.0, 1.0), Complex64::new(x.exp(), 0.0)]),
            &[0.0, 1.0],
            1e-13,
            0.0,
            100,
        );
        assert!((r.value.0[0].re - 0.5).abs() < 1e-14);
        assert!((r.value.0[1].im - 1.0).abs() < 1e-14);
        assert!((r.value.0[2].re - (1f64.exp() - 1.0)).abs() < 1e-13);
    }
}
