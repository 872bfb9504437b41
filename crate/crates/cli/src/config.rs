//! Run configuration: defaults, JSON file, then `--set` dot-path overrides.

use std::path::{Path, PathBuf};

use arrayscat::bands::CriticalPointOptions;
use arrayscat::lattice::{LatticeSpec, Momentum2};
use arrayscat::oracle::OracleConfig;
use arrayscat::propagator::PropagatorOptions;
use arrayscat::scattering::DEFAULT_OMEGA_RATIO;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyWindow {
    pub lo: f64,
    pub hi: f64,
    pub n_points: usize,
}

impl EnergyWindow {
    pub fn energies(&self) -> Vec<f64> {
        match self.n_points {
            0 => vec![],
            1 => vec![self.lo],
            n => (0..n).map(|k| self.lo + (self.hi - self.lo) * k as f64 / (n - 1) as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub propagator: PropagatorOptions,
    pub critical_points: CriticalPointOptions,
    pub oracle: OracleConfig,
}

/// ΔE sweeps towards each critical energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub delta_min: f64,
    pub delta_max: f64,
    pub per_decade: usize,
    /// −1 approaches from below, +1 from above (saddles only).
    pub side: f64,
    /// Distance of the off-critical α = 0 probe from the saddle (k0).
    pub line_offset: f64,
    pub contour_grid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    /// Random (P, E) pairs compared against the grid-sum oracle.
    pub propagator_samples: usize,
    /// Relative agreement required between production and oracle L.
    pub propagator_rel_tol: f64,
    /// Minimum distance of sampled energies from any critical energy.
    pub critical_margin: f64,
    pub critical_grid: usize,
    pub dispersion_samples: usize,
    pub dispersion_tol: f64,
    /// Damping constants of the direct real-space sum.
    pub dispersion_damping: Vec<f64>,
    /// Sampled p keep this distance from the light-cone circle.
    pub light_cone_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub lattice: LatticeSpec,
    #[serde(rename = "P")]
    pub total_momentum: Momentum2,
    pub energy_window: EnergyWindow,
    /// Points per axis of q-space maps.
    pub q_grid: usize,
    pub tolerances: Tolerances,
    pub scaling: ScalingConfig,
    pub verify: VerifyConfig,
    /// ω_eg / Γ0.
    pub omega_ratio: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub format: Format,
    /// Worker threads; `null` uses every core. Not part of the provenance hash.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lattice: LatticeSpec::square(0.2),
            total_momentum: Momentum2::ZERO,
            energy_window: EnergyWindow { lo: 0.5, hi: 2.5, n_points: 101 },
            q_grid: 128,
            tolerances: Tolerances {
                propagator: PropagatorOptions::default(),
                critical_points: CriticalPointOptions::default(),
                oracle: OracleConfig::default(),
            },
            scaling: ScalingConfig {
                delta_min: 1e-5,
                delta_max: 1e-2,
                per_decade: 2,
                side: -1.0,
                line_offset: 1.0,
                contour_grid: 256,
            },
            verify: VerifyConfig {
                propagator_samples: 20,
                propagator_rel_tol: 1e-3,
                critical_margin: 0.05,
                critical_grid: 1024,
                dispersion_samples: 20,
                dispersion_tol: 1e-4,
                dispersion_damping: vec![0.04, 0.02, 0.01, 0.005],
                light_cone_gap: 0.2,
            },
            omega_ratio: DEFAULT_OMEGA_RATIO,
            seed: 20240601,
            output_dir: PathBuf::from("out"),
            format: Format::Csv,
            threads: None,
        }
    }
}

impl RunConfig {
    /// Defaults, overlaid with `file` (if any), then with `key=value` overrides.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
        let mut value = serde_json::to_value(RunConfig::default()).expect("default config serialises");
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let user: Value = serde_json::from_str(&text).map_err(|e| {
                CliError::Config(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column()))
            })?;
            merge(&mut value, user, "")?;
        }
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects key=value, got `{item}`")))?;
            let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut value, key, parsed)?;
        }
        let config: RunConfig = serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("{field}: {msg}")));
        if let Err(e) = self.lattice.validate() {
            return bad("lattice", e.to_string());
        }
        let w = &self.energy_window;
        if w.n_points == 0 || !(w.lo <= w.hi) || !w.lo.is_finite() || !w.hi.is_finite() {
            return bad("energy_window", format!("empty window [{}, {}] with {} points", w.lo, w.hi, w.n_points));
        }
        if self.q_grid < 8 {
            return bad("q_grid", format!("needs at least 8 points per axis (got {})", self.q_grid));
        }
        if let Err(e) = self.tolerances.oracle.validate() {
            return bad("tolerances.oracle", e.to_string());
        }
        let s = &self.scaling;
        if !(s.delta_min >= 1e-5 && s.delta_max <= 1e-1 && s.delta_max / s.delta_min >= 100.0 * (1.0 - 1e-9)) {
            return bad("scaling", format!("window [{}, {}] must lie in [1e-5, 1e-1] and span two decades", s.delta_min, s.delta_max));
        }
        if s.side.abs() != 1.0 {
            return bad("scaling.side", format!("must be -1 or 1 (got {})", s.side));
        }
        if s.per_decade == 0 {
            return bad("scaling.per_decade", "must be positive".into());
        }
        if !(self.omega_ratio > 0.0) {
            return bad("omega_ratio", format!("must be positive (got {})", self.omega_ratio));
        }
        if self.threads == Some(0) {
            return bad("threads", "must be positive".into());
        }
        Ok(())
    }

    /// Config as echoed into outputs: everything except thread count and
    /// output location, so results are comparable across machines.
    pub fn provenance(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("config serialises");
        if let Value::Object(map) = &mut v {
            map.remove("threads");
            map.remove("output_dir");
        }
        v
    }

    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.provenance()).expect("config serialises");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn merge(base: &mut Value, user: Value, path: &str) -> Result<(), CliError> {
    match (base, user) {
        (Value::Object(b), Value::Object(u)) => {
            for (k, v) in u {
                let here = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v, &here)?,
                    None => return Err(CliError::Config(format!("unknown field `{here}`"))),
                }
            }
            Ok(())
        }
        (slot, v) => {
            *slot = v;
            Ok(())
        }
    }
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), CliError> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let map: &mut Map<String, Value> = match node {
            Value::Object(m) => m,
            _ => return Err(CliError::Config(format!("`{}` is not an object", parts[..i].join(".")))),
        };
        let slot = map.get_mut(*part).ok_or_else(|| CliError::Config(format!("unknown field `{key}`")))?;
        if i + 1 == parts.len() {
            return merge(slot, value, key);
        }
        node = slot;
    }
    unreachable!("split yields at least one part")
}
