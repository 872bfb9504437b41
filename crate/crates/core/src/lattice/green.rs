//! Free-space electromagnetic dyadic Green's function (k0 = 1).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Mat3 = [[Complex64; 3]; 3];

/// G(r) = e^{ir}/(4πr) [ (1 + i/r − 1/r²) 𝟙 + (−1 − 3i/r + 3/r²) r̂⊗r̂ ].
pub fn dyadic_green(r: [f64; 3]) -> Result<Mat3> {
    let (dist, rhat) = split(r)?;
    let inv = 1.0 / dist;
    let i = Complex64::i();
    let pref = Complex64::from_polar(inv / (4.0 * PI), dist);
    let diag = pref * (1.0 + i * inv - inv * inv);
    let outer = pref * (-1.0 - 3.0 * i * inv + 3.0 * inv * inv);
    Ok(assemble(diag, outer, rhat))
}

/// Same tensor assembled from spherical Hankel functions of the first kind,
/// G = (i/4π) [ (h0(r) − h1(r)/r) 𝟙 + h2(r) r̂⊗r̂ ], with the spherical Bessel
/// parts taken from their power series for r < 1.
pub fn dyadic_green_spherical(r: [f64; 3]) -> Result<Mat3> {
    let (dist, rhat) = split(r)?;
    let h = spherical_hankel(dist);
    let pref = Complex64::new(0.0, 1.0 / (4.0 * PI));
    let diag = pref * (h[0] - h[1] / dist);
    let outer = pref * h[2];
    Ok(assemble(diag, outer, rhat))
}

fn split(r: [f64; 3]) -> Result<(f64, [f64; 3])> {
    let dist = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    if !(dist > 0.0) || !dist.is_finite() {
        return Err(Error::Domain(
            "dyadic Green's function is singular at zero displacement".into(),
        ));
    }
    Ok((dist, [r[0] / dist, r[1] / dist, r[2] / dist]))
}

fn assemble(diag: Complex64, outer: Complex64, rhat: [f64; 3]) -> Mat3 {
    let mut g = [[Complex64::new(0.0, 0.0); 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            g[a][b] = outer * (rhat[a] * rhat[b]);
        }
        g[a][a] += diag;
    }
    g
}

/// h_n^(1)(x) = j_n(x) + i y_n(x) for n = 0, 1, 2.
fn spherical_hankel(x: f64) -> [Complex64; 3] {
    let (s, c) = x.sin_cos();
    // y_n by upward recurrence (stable).
    let y0 = -c / x;
    let y1 = -c / (x * x) - s / x;
    let y2 = 3.0 / x * y1 - y0;
    let j = if x < 1.0 {
        [0, 1, 2].map(|n| spherical_j_series(n, x))
    } else {
        let j0 = s / x;
        let j1 = s / (x * x) - c / x;
        let j2 = 3.0 / x * j1 - j0;
        [j0, j1, j2]
    };
    [
        Complex64::new(j[0], y0),
        Complex64::new(j[1], y1),
        Complex64::new(j[2], y2),
    ]
}

/// j_n(x) = x^n Σ_k (−x²/2)^k / (k! (2n+2k+1)!!).
fn spherical_j_series(n: u32, x: f64) -> f64 {
    let mut dfact = 1.0;
    for m in 1..=n {
        dfact *= (2 * m + 1) as f64;
    }
    let mut term = x.powi(n as i32) / dfact;
    let mut sum = term;
    let z = -0.5 * x * x;
    for k in 1..60 {
        term *= z / (k as f64 * (2 * n + 2 * k + 1) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}
