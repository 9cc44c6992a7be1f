//! Experiment configuration, stored as TOML.
//!
//! ```toml
//! kind = "sweep-gamma"
//! seed = 7
//!
//! [model]
//! beta1 = 3.0
//! beta2 = 3.0
//! gamma = 0.0
//! range = 1.0
//! dim = 2
//! side = 100
//!
//! [initial]
//! p1 = 0.25
//! p2 = 0.25
//!
//! [run]
//! horizon = 200.0
//! replicates = 20
//!
//! [sweep]
//! beta1 = [3.0]
//! ladder = [0.25, 1.0]
//! ```
//!
//! Every section except `[model]` is optional; see the field docs for defaults.

use std::path::{Path, PathBuf};

use allelo_core::coupling::CouplingAxis;
use allelo_core::ModelParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{config, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    Meanfield,
    Basin,
    /// The `(beta1, gamma)` plane at fixed `beta2`.
    SweepGamma,
    /// The `(beta1, beta2)` plane at fixed `gamma`.
    SweepBeta,
    GbtCouple,
    MonoCouple,
    DualityCheck,
    AncestorCheck,
    Percolation,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Meanfield => "meanfield",
            ExperimentKind::Basin => "basin",
            ExperimentKind::SweepGamma => "sweep-gamma",
            ExperimentKind::SweepBeta => "sweep-beta",
            ExperimentKind::GbtCouple => "gbt-couple",
            ExperimentKind::MonoCouple => "mono-couple",
            ExperimentKind::DualityCheck => "duality-check",
            ExperimentKind::AncestorCheck => "ancestor-check",
            ExperimentKind::Percolation => "percolation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDensities {
    pub p1: f64,
    pub p2: f64,
}

impl Default for InitialDensities {
    fn default() -> Self {
        Self { p1: 0.25, p2: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub horizon: f64,
    pub replicates: u32,
    /// Number of equally spaced sample intervals on `[0, horizon]`.
    pub samples: usize,
    /// Snapshot times, written as pixmaps with `--format ppm`.
    pub snapshots: Vec<f64>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { horizon: 20.0, replicates: 1, samples: 20, snapshots: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Values of the uncoupled axis; empty means `[model.beta1]`.
    pub beta1: Vec<f64>,
    /// Increasing values along the coupled axis (gamma or beta2).
    pub ladder: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { beta1: Vec::new(), ladder: vec![0.0, 0.5, 1.0, 2.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanfieldSection {
    pub starts: Vec<[f64; 2]>,
    pub t_max: f64,
}

impl Default for MeanfieldSection {
    fn default() -> Self {
        Self { starts: vec![[0.4, 0.05], [0.05, 0.4]], t_max: 500.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasinSection {
    pub resolution: usize,
    pub t_max: f64,
}

impl Default for BasinSection {
    fn default() -> Self {
        Self { resolution: 100, t_max: 2000.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoupleAxis {
    Gamma,
    Beta1,
    Beta2,
}

impl From<CoupleAxis> for CouplingAxis {
    fn from(a: CoupleAxis) -> Self {
        match a {
            CoupleAxis::Gamma => CouplingAxis::Gamma,
            CoupleAxis::Beta1 => CouplingAxis::Beta1,
            CoupleAxis::Beta2 => CouplingAxis::Beta2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoupleSection {
    /// Axis of a monotone coupling (ignored by the grass-bush-tree coupling).
    pub axis: CoupleAxis,
    pub levels: Vec<f64>,
}

impl Default for CoupleSection {
    fn default() -> Self {
        Self { axis: CoupleAxis::Gamma, levels: vec![0.5, 2.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DualSection {
    pub realizations: u32,
    /// Time of the root points; defaults to the run horizon when absent.
    pub time: Option<f64>,
    /// Survival window used to flag renewal points.
    pub lookahead: f64,
}

impl Default for DualSection {
    fn default() -> Self {
        Self { realizations: 100, time: None, lookahead: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PercolationSection {
    pub p: Vec<f64>,
    pub dim: usize,
    pub n_max: usize,
    pub reps: usize,
    /// Samples used for the closed-cluster statistics.
    pub cluster_samples: usize,
}

impl Default for PercolationSection {
    fn default() -> Self {
        Self { p: vec![0.6, 0.7, 0.8], dim: 1, n_max: 200, reps: 500, cluster_samples: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub model: ModelParams,
    #[serde(default)]
    pub initial: InitialDensities,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub meanfield: MeanfieldSection,
    #[serde(default)]
    pub basin: BasinSection,
    #[serde(default)]
    pub couple: CoupleSection,
    #[serde(default)]
    pub dual: DualSection,
    #[serde(default)]
    pub percolation: PercolationSection,
}

fn increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    /// Defaults for `kind`, small enough to run in seconds.
    pub fn example(kind: ExperimentKind) -> Self {
        let model = match kind {
            ExperimentKind::Meanfield | ExperimentKind::Basin => ModelParams::new(2.0, 2.5, 4.0, 1.0, 1, 10),
            ExperimentKind::DualityCheck | ExperimentKind::AncestorCheck => ModelParams::new(4.0, 4.0, 0.0, 1.0, 1, 20),
            ExperimentKind::GbtCouple => ModelParams::new(2.0, 3.0, 1.0, 1.0, 1, 50),
            _ => ModelParams::new(3.0, 3.0, 1.0, 1.0, 2, 50),
        };
        Self {
            kind,
            seed: 1,
            out: None,
            model,
            initial: InitialDensities::default(),
            run: RunSection::default(),
            sweep: SweepSection::default(),
            meanfield: MeanfieldSection::default(),
            basin: BasinSection::default(),
            couple: CoupleSection::default(),
            dual: DualSection::default(),
            percolation: PercolationSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text)?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// SHA-256 of the canonical TOML form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn dual_time(&self) -> f64 {
        self.dual.time.unwrap_or(self.run.horizon)
    }

    pub fn sweep_beta1(&self) -> Vec<f64> {
        if self.sweep.beta1.is_empty() {
            vec![self.model.beta1]
        } else {
            self.sweep.beta1.clone()
        }
    }

    /// Check every precondition the selected experiment relies on.
    pub fn validate(&self) -> Result<()> {
        use ExperimentKind as K;
        let m = &self.model;
        let spatial = !matches!(self.kind, K::Meanfield | K::Basin | K::Percolation);
        if spatial {
            m.validate().map_err(CliError::from)?;
            let InitialDensities { p1, p2 } = self.initial;
            if !(p1 >= 0.0 && p2 >= 0.0 && p1 + p2 <= 1.0) {
                return Err(config(format!("initial densities need p1, p2 >= 0 and p1 + p2 <= 1, got {p1}, {p2}")));
            }
            if !(self.run.horizon > 0.0 && self.run.horizon.is_finite()) {
                return Err(config(format!("run.horizon must be positive, got {}", self.run.horizon)));
            }
            if self.run.replicates == 0 {
                return Err(config("run.replicates must be at least 1"));
            }
            if self.run.samples == 0 {
                return Err(config("run.samples must be at least 1"));
            }
            if let Some(t) = self.run.snapshots.iter().find(|t| !(0.0..=self.run.horizon).contains(*t)) {
                return Err(config(format!("snapshot time {t} outside [0, {}]", self.run.horizon)));
            }
        }
        match self.kind {
            K::Simulate => {}
            K::Meanfield | K::Basin => {
                for (name, v) in [("beta1", m.beta1), ("beta2", m.beta2), ("gamma", m.gamma)] {
                    if !(v.is_finite() && v >= 0.0) {
                        return Err(config(format!("model.{name} must be finite and >= 0, got {v}")));
                    }
                }
                if self.kind == K::Meanfield {
                    if !(self.meanfield.t_max > 0.0) {
                        return Err(config("meanfield.t_max must be positive"));
                    }
                    for s in &self.meanfield.starts {
                        if !(s[0] >= 0.0 && s[1] >= 0.0 && s[0] + s[1] <= 1.0) {
                            return Err(config(format!("meanfield start {s:?} outside the simplex")));
                        }
                    }
                } else {
                    if self.basin.resolution == 0 {
                        return Err(config("basin.resolution must be positive"));
                    }
                    if !(self.basin.t_max > 0.0) {
                        return Err(config("basin.t_max must be positive"));
                    }
                }
            }
            K::SweepGamma | K::SweepBeta => {
                if self.sweep.ladder.is_empty() || self.sweep.ladder.len() > 255 {
                    return Err(config("sweep.ladder needs between 1 and 255 values"));
                }
                if !increasing(&self.sweep.ladder) || self.sweep.ladder.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(config("sweep.ladder must be finite, >= 0 and strictly increasing"));
                }
                if self.sweep_beta1().iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(config("sweep.beta1 values must be finite and >= 0"));
                }
                if self.sweep_beta1().len() > (1 << 24) {
                    return Err(config("too many sweep cells"));
                }
            }
            K::GbtCouple => {
                if m.gamma > m.beta1 {
                    return Err(config(format!(
                        "the grass-bush-tree coupling needs gamma <= beta1, got gamma = {} > beta1 = {}",
                        m.gamma, m.beta1
                    )));
                }
            }
            K::MonoCouple => {
                let l = &self.couple.levels;
                if l.is_empty() || l.len() > 255 || !increasing(l) || l.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(config("couple.levels must hold 1..=255 finite, >= 0, strictly increasing values"));
                }
            }
            K::DualityCheck | K::AncestorCheck => {
                if m.gamma != 0.0 {
                    return Err(config("the dual process needs gamma = 0"));
                }
                if m.beta1 != m.beta2 {
                    return Err(config("the dual process needs the symmetric model beta1 = beta2"));
                }
                if self.dual.realizations == 0 {
                    return Err(config("dual.realizations must be at least 1"));
                }
                let t = self.dual_time();
                if !(t > 0.0 && t <= self.run.horizon) {
                    return Err(config(format!("dual.time must lie in (0, {}], got {t}", self.run.horizon)));
                }
                if !(self.dual.lookahead >= 0.0) {
                    return Err(config("dual.lookahead must be >= 0"));
                }
            }
            K::Percolation => {
                let s = &self.percolation;
                if s.p.is_empty() || s.p.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    return Err(config("percolation.p must be a nonempty list of values in [0, 1]"));
                }
                if s.dim == 0 {
                    return Err(config("percolation.dim must be at least 1"));
                }
                if s.reps == 0 {
                    return Err(config("percolation.reps must be at least 1"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [ExperimentKind; 10] = [
        ExperimentKind::Simulate,
        ExperimentKind::Meanfield,
        ExperimentKind::Basin,
        ExperimentKind::SweepGamma,
        ExperimentKind::SweepBeta,
        ExperimentKind::GbtCouple,
        ExperimentKind::MonoCouple,
        ExperimentKind::DualityCheck,
        ExperimentKind::AncestorCheck,
        ExperimentKind::Percolation,
    ];

    #[test]
    fn examples_are_valid_and_round_trip() {
        for k in ALL {
            let c = ExperimentConfig::example(k);
            c.validate().unwrap();
            let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
            assert_eq!(back, c);
            assert_eq!(back.digest(), c.digest());
        }
    }

    #[test]
    fn awkward_floats_round_trip() {
        let mut c = ExperimentConfig::example(ExperimentKind::SweepGamma);
        c.model.beta1 = 0.1 + 0.2;
        c.sweep.ladder = vec![1e-300, 1.0 / 3.0, 7.000000000000001];
        c.out = Some("some/dir".into());
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let c = ExperimentConfig::from_toml(
            "kind = \"simulate\"\nseed = 3\n[model]\nbeta1 = 2.0\nbeta2 = 2.0\ngamma = 0.5\nrange = 1.0\ndim = 1\nside = 30\n",
        )
        .unwrap();
        assert_eq!(c.initial, InitialDensities::default());
        assert_eq!(c.run, RunSection::default());
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = ExperimentConfig::example(ExperimentKind::Simulate).to_toml() + "\n[extra]\nx = 1\n";
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn preconditions_named() {
        let mut c = ExperimentConfig::example(ExperimentKind::GbtCouple);
        c.model.gamma = 5.0;
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("gamma <= beta1"), "{msg}");

        let mut c = ExperimentConfig::example(ExperimentKind::Simulate);
        c.model.side = 2;
        assert!(matches!(c.validate(), Err(CliError::Config(_))));

        let mut c = ExperimentConfig::example(ExperimentKind::DualityCheck);
        c.model.gamma = 1.0;
        assert!(c.validate().unwrap_err().to_string().contains("gamma = 0"));

        let mut c = ExperimentConfig::example(ExperimentKind::SweepBeta);
        c.sweep.ladder = vec![2.0, 1.0];
        assert!(c.validate().is_err());

        let mut c = ExperimentConfig::example(ExperimentKind::Simulate);
        c.initial = InitialDensities { p1: 0.7, p2: 0.7 };
        assert!(c.validate().is_err());
    }
}
