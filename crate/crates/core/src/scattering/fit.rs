//! Model selection among the universal scaling classes
//! σ ∝ ΔE^p / |log ΔE|^k.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingClass {
    InvDeltaLog1,
    InvDeltaLog2,
    InvSqrtDeltaLog1,
    InvSqrtDeltaLog2,
    Log1,
    Log2,
}

impl ScalingClass {
    pub const ALL: [ScalingClass; 6] = [
        ScalingClass::InvDeltaLog1,
        ScalingClass::InvDeltaLog2,
        ScalingClass::InvSqrtDeltaLog1,
        ScalingClass::InvSqrtDeltaLog2,
        ScalingClass::Log1,
        ScalingClass::Log2,
    ];

    /// Power p of the ΔE prefactor.
    pub fn delta_power(self) -> f64 {
        match self {
            ScalingClass::InvDeltaLog1 | ScalingClass::InvDeltaLog2 => -1.0,
            ScalingClass::InvSqrtDeltaLog1 | ScalingClass::InvSqrtDeltaLog2 => -0.5,
            ScalingClass::Log1 | ScalingClass::Log2 => 0.0,
        }
    }

    /// Power k of the inverse logarithm.
    pub fn log_power(self) -> u32 {
        match self {
            ScalingClass::InvDeltaLog1 | ScalingClass::InvSqrtDeltaLog1 | ScalingClass::Log1 => 1,
            _ => 2,
        }
    }

    pub fn from_powers(p: f64, k: u32) -> Option<ScalingClass> {
        ScalingClass::ALL
            .into_iter()
            .find(|c| (c.delta_power() - p).abs() < 1e-12 && c.log_power() == k)
    }

    pub fn label(self) -> &'static str {
        match self {
            ScalingClass::InvDeltaLog1 => "dE^-1 log^-1",
            ScalingClass::InvDeltaLog2 => "dE^-1 log^-2",
            ScalingClass::InvSqrtDeltaLog1 => "dE^-1/2 log^-1",
            ScalingClass::InvSqrtDeltaLog2 => "dE^-1/2 log^-2",
            ScalingClass::Log1 => "log^-1",
            ScalingClass::Log2 => "log^-2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalEnergy {
    Max,
    Saddle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class: ScalingClass,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// (α, β)
    pub channel: (usize, usize),
    pub critical: CriticalEnergy,
    /// Incoming relative momentum at the critical point (α = 0 only).
    pub at_critical_q: bool,
    pub fitted_class: ScalingClass,
    pub fit_quality: f64,
    /// Other classes within the ambiguity margin of the best R².
    pub ambiguous_with: Vec<ScalingClass>,
    pub scores: Vec<ClassScore>,
    pub window: (f64, f64),
}

impl ScalingFit {
    /// Whether the fitted inverse-log power agrees with [`expected_log_power`].
    pub fn matches_expected(&self) -> bool {
        self.fitted_class.log_power() == expected_log_power(self.critical, self.channel.1)
    }
}

/// Inverse-log power of σ_{α,β}: log⁻² everywhere near E_max; near E_sadd
/// log⁻¹ into the dark channel and log⁻² into the bright ones.
pub fn expected_log_power(critical: CriticalEnergy, beta: usize) -> u32 {
    match critical {
        CriticalEnergy::Max => 2,
        CriticalEnergy::Saddle if beta == 0 => 1,
        CriticalEnergy::Saddle => 2,
    }
}

/// R² margin below which two classes are reported as ambiguous.
pub const AMBIGUITY_MARGIN: f64 = 0.005;

/// Least squares y = a + b x; returns (a, b).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}

/// Coefficient of determination of `model` against `y`.
pub fn r_squared(y: &[f64], model: &[f64]) -> f64 {
    let n = y.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let ss_tot: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let ss_res: f64 = y.iter().zip(model).map(|(v, m)| (v - m) * (v - m)).sum();
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { 1.0 } else { 0.0 };
    }
    1.0 - ss_res / ss_tot
}

/// R² (in log σ) of the model σ = ΔE^p / (A + B log ΔE)^k, with A, B from
/// the linear fit of (σ ΔE^−p)^(−1/k) against log ΔE.
pub fn class_r_squared(delta_e: &[f64], sigma: &[f64], p: f64, k: u32) -> f64 {
    let x: Vec<f64> = delta_e.iter().map(|d| d.ln()).collect();
    let y: Vec<f64> = delta_e
        .iter()
        .zip(sigma)
        .map(|(d, s)| (s * d.powf(-p)).powf(-1.0 / k as f64))
        .collect();
    let (a, b) = linear_fit(&x, &y);
    let log_sigma: Vec<f64> = sigma.iter().map(|s| s.ln()).collect();
    let model: Vec<f64> = delta_e
        .iter()
        .zip(&x)
        .map(|(d, xi)| {
            let base = a + b * xi;
            if base <= 0.0 {
                f64::NAN
            } else {
                p * d.ln() - k as f64 * base.ln()
            }
        })
        .collect();
    if model.iter().any(|m| !m.is_finite()) {
        return f64::NEG_INFINITY;
    }
    r_squared(&log_sigma, &model)
}

fn check_sweep(delta_e: &[f64], sigma: &[f64]) -> Result<(f64, f64)> {
    if delta_e.len() != sigma.len() || delta_e.len() < 4 {
        return Err(Error::InvalidInput("a scaling fit needs at least 4 (ΔE, σ) samples".into()));
    }
    if delta_e.iter().chain(sigma).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput("ΔE and σ must be positive and finite".into()));
    }
    let lo = delta_e.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = delta_e.iter().copied().fold(0.0, f64::max);
    if lo < 1e-5 * (1.0 - 1e-9) || hi > 1e-1 * (1.0 + 1e-9) {
        return Err(Error::InvalidInput(format!("fit window [{lo:.1e}, {hi:.1e}] leaves [1e-5, 1e-1]")));
    }
    if hi / lo < 100.0 * (1.0 - 1e-9) {
        return Err(Error::InvalidInput("fit window must span at least two decades".into()));
    }
    Ok((lo, hi))
}

/// Selects the best class among `candidates` for σ(ΔE).
pub fn select_class(
    delta_e: &[f64],
    sigma: &[f64],
    candidates: &[ScalingClass],
    channel: (usize, usize),
    critical: CriticalEnergy,
    at_critical_q: bool,
) -> Result<ScalingFit> {
    let window = check_sweep(delta_e, sigma)?;
    if candidates.is_empty() {
        return Err(Error::InvalidInput("no candidate classes".into()));
    }
    let mut scores: Vec<ClassScore> = candidates
        .iter()
        .map(|&c| ClassScore { class: c, r_squared: class_r_squared(delta_e, sigma, c.delta_power(), c.log_power()) })
        .collect();
    scores.sort_by(|a, b| b.r_squared.total_cmp(&a.r_squared));
    let best = scores[0].clone();
    let ambiguous_with = scores[1..]
        .iter()
        .filter(|s| best.r_squared - s.r_squared < AMBIGUITY_MARGIN)
        .map(|s| s.class)
        .collect();
    Ok(ScalingFit {
        channel,
        critical,
        at_critical_q,
        fitted_class: best.class,
        fit_quality: best.r_squared,
        ambiguous_with,
        scores,
        window,
    })
}

/// Candidate classes for a cell: photon-containing incoming states and dark
/// pairs away from the critical q have a finite group velocity (no ΔE
/// prefactor); dark pairs at the critical q admit every class.
pub fn candidates(at_critical_q: bool) -> Vec<ScalingClass> {
    if at_critical_q {
        ScalingClass::ALL.to_vec()
    } else {
        vec![ScalingClass::Log1, ScalingClass::Log2]
    }
}

pub fn scaling_fit(
    channel: (usize, usize),
    critical: CriticalEnergy,
    at_critical_q: bool,
    delta_e: &[f64],
    sigma: &[f64],
) -> Result<ScalingFit> {
    select_class(delta_e, sigma, &candidates(at_critical_q), channel, critical, at_critical_q)
}

/// Fitted exponent p of σ ∝ ΔE^p after removing a common logarithmic factor:
/// the slope of log(σ_num/σ_ref) against log ΔE.
pub fn prefactor_power(delta_e: &[f64], sigma_num: &[f64], sigma_ref: &[f64]) -> Result<(f64, f64)> {
    check_sweep(delta_e, sigma_num)?;
    check_sweep(delta_e, sigma_ref)?;
    let x: Vec<f64> = delta_e.iter().map(|d| d.ln()).collect();
    let y: Vec<f64> = sigma_num.iter().zip(sigma_ref).map(|(a, b)| (a / b).ln()).collect();
    let (a, b) = linear_fit(&x, &y);
    let model: Vec<f64> = x.iter().map(|xi| a + b * xi).collect();
    Ok((b, r_squared(&y, &model)))
}

/// ΔE values log-spaced over [lo, hi], `per_decade` points per decade.
pub fn log_spaced(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round() as usize;
    (0..=n).map(|i| lo * 10f64.powf(decades * i as f64 / n as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_pure_log_squared() {
        let de = log_spaced(1e-5, 1e-2, 4);
        let sigma: Vec<f64> = de.iter().map(|d| 1.0 / d.ln().powi(2)).collect();
        let fit = scaling_fit((2, 0), CriticalEnergy::Max, false, &de, &sigma).unwrap();
        assert_eq!(fit.fitted_class, ScalingClass::Log2);
        assert!(fit.fit_quality > 0.999);
    }

    #[test]
    fn synthetic_classes_with_offsets_are_recovered() {
        let de = log_spaced(1e-5, 1e-2, 4);
        for class in ScalingClass::ALL {
            let sigma: Vec<f64> = de
                .iter()
                .map(|d| 3.0 * d.powf(class.delta_power()) / (2.0 - 0.7 * d.ln()).powi(class.log_power() as i32))
                .collect();
            let fit = scaling_fit((0, 0), CriticalEnergy::Saddle, true, &de, &sigma).unwrap();
            assert_eq!(fit.fitted_class, class, "{:?}", fit.scores);
            assert!(fit.fit_quality > 0.9999);
        }
    }

    #[test]
    fn prefactor_power_of_a_ratio() {
        let de = log_spaced(1e-5, 1e-2, 3);
        let num: Vec<f64> = de.iter().map(|d| d.powf(-0.5) / d.ln().abs()).collect();
        let den: Vec<f64> = de.iter().map(|d| 1.0 / d.ln().abs()).collect();
        let (p, r2) = prefactor_power(&de, &num, &den).unwrap();
        assert!((p + 0.5).abs() < 1e-12 && r2 > 0.999999);
    }

    #[test]
    fn window_rules() {
        let narrow = log_spaced(1e-4, 1e-3, 4);
        let s = vec![1.0; narrow.len()];
        assert!(scaling_fit((2, 0), CriticalEnergy::Max, false, &narrow, &s).is_err());
        let wide = log_spaced(1e-6, 1e-3, 4);
        let s = vec![1.0; wide.len()];
        assert!(scaling_fit((2, 0), CriticalEnergy::Max, false, &wide, &s).is_err());
    }

    #[test]
    fn class_lookup() {
        for c in ScalingClass::ALL {
            assert_eq!(ScalingClass::from_powers(c.delta_power(), c.log_power()), Some(c));
        }
        assert_eq!(ScalingClass::from_powers(0.3, 1), None);
    }

    #[test]
    fn expected_table() {
        assert_eq!(expected_log_power(CriticalEnergy::Max, 0), 2);
        assert_eq!(expected_log_power(CriticalEnergy::Max, 2), 2);
        assert_eq!(expected_log_power(CriticalEnergy::Saddle, 0), 1);
        assert_eq!(expected_log_power(CriticalEnergy::Saddle, 1), 2);
        assert_eq!(expected_log_power(CriticalEnergy::Saddle, 2), 2);
    }
}
