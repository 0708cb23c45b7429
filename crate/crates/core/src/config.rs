//! TOML experiment configuration: shared settings at the top level, a
//! `[topology]` table for the base fabric, and one optional table per
//! experiment.
//!
//! ```toml
//! seed = 7
//! routing = "kdisjoint:4"
//!
//! [topology]
//! kind = "fattree"
//! k = 8
//! oversub = 4
//!
//! [cs_heatmap]
//! c_values = [32, 64]
//! s_values = [32, 64]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resilience::FailureKind;
use crate::routing::Scheme;
use crate::topology::TopologySpec;
use crate::traffic::{BurstPreset, TRACE_START_WINDOW};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Scheme used on the random graph; the base fabric always uses ECMP.
    #[serde(default = "default_routing")]
    pub routing: String,
    /// Independent random graphs (and placements) averaged per data point.
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub topology: TopologyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cs_heatmap: Option<CsHeatmapConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<ScaleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burst: Option<BurstConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_sweep: Option<TraceSweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_loss: Option<FailureLossConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expressibility: Option<ExpressibilityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_routing() -> String {
    "ecmp".into()
}

fn default_trials() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TopologyConfig {
    #[serde(rename = "fattree")]
    FatTree { k: usize, oversub: usize },
    #[serde(rename = "leafspine")]
    LeafSpine { x: usize, y: usize },
}

impl TopologyConfig {
    pub fn spec(self) -> TopologySpec {
        match self {
            TopologyConfig::FatTree { k, oversub } => TopologySpec::FatTree { k, oversub },
            TopologyConfig::LeafSpine { x, y } => TopologySpec::LeafSpine { x, y },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsHeatmapConfig {
    /// Client counts in servers.
    pub c_values: Vec<usize>,
    /// Server-host counts in servers.
    pub s_values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleConfig {
    /// Spine counts `y`; each size is a leaf-spine with `x = 3 y`.
    pub sizes: Vec<usize>,
    /// `[c, s]` in racks of the leaf-spine (multiples of `x` servers).
    pub cs_points: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurstConfig {
    pub presets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSweepConfig {
    pub matrix_path: PathBuf,
    /// Busiest racks kept from the matrix; defaults to every rack.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_racks: Option<usize>,
    pub norm_values: Vec<f64>,
    #[serde(default = "default_window")]
    pub start_window: f64,
}

fn default_window() -> f64 {
    TRACE_START_WINDOW
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureLossConfig {
    pub kind: String,
    pub lambda: f64,
    /// Schemes evaluated on the random graph; defaults to the top-level
    /// routing.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schemes: Vec<String>,
    /// Evaluate a seeded sample of this many elements instead of all.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_elements: Option<usize>,
    /// `exhaustive`, `auto` or `sampled`.
    #[serde(default = "default_loss_mode")]
    pub mode: String,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_loss_mode() -> String {
    "auto".into()
}

fn default_samples() -> usize {
    crate::resilience::DEFAULT_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpressibilityConfig {
    pub k_values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    pub k_values: Vec<usize>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

fn default_restarts() -> usize {
    1
}

/// Experiments the runner knows, in the order `run all` executes them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExperimentName {
    Topology,
    CsHeatmap,
    Scale,
    Burst,
    TraceSweep,
    FailureLoss,
    Expressibility,
    Partition,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 8] = [
        ExperimentName::Topology,
        ExperimentName::CsHeatmap,
        ExperimentName::Scale,
        ExperimentName::Burst,
        ExperimentName::TraceSweep,
        ExperimentName::FailureLoss,
        ExperimentName::Expressibility,
        ExperimentName::Partition,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Topology => "topology",
            ExperimentName::CsHeatmap => "cs_heatmap",
            ExperimentName::Scale => "scale",
            ExperimentName::Burst => "burst",
            ExperimentName::TraceSweep => "trace_sweep",
            ExperimentName::FailureLoss => "failure_loss",
            ExperimentName::Expressibility => "expressibility",
            ExperimentName::Partition => "partition",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentName::ALL
            .into_iter()
            .find(|e| e.as_str() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

fn nonempty<T>(v: &[T], what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("{what} must not be empty")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file. A relative `matrix_path` is resolved against
    /// the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let (Some(t), Some(dir)) = (cfg.trace_sweep.as_mut(), path.parent()) {
            if t.matrix_path.is_relative() {
                t.matrix_path = dir.join(&t.matrix_path);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn scheme(&self) -> Result<Scheme> {
        self.routing.parse()
    }

    pub fn validate(&self) -> Result<()> {
        self.topology.spec().validate()?;
        self.scheme()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if let Some(h) = &self.cs_heatmap {
            nonempty(&h.c_values, "cs_heatmap.c_values")?;
            nonempty(&h.s_values, "cs_heatmap.s_values")?;
        }
        if let Some(s) = &self.scale {
            nonempty(&s.sizes, "scale.sizes")?;
            nonempty(&s.cs_points, "scale.cs_points")?;
            if s.sizes.contains(&0) {
                return Err(Error::Config("scale.sizes must be >= 1".into()));
            }
        }
        if let Some(b) = &self.burst {
            nonempty(&b.presets, "burst.presets")?;
            for p in &b.presets {
                p.parse::<BurstPreset>()?;
            }
        }
        if let Some(t) = &self.trace_sweep {
            nonempty(&t.norm_values, "trace_sweep.norm_values")?;
            if !t.matrix_path.is_file() {
                return Err(Error::Config(format!(
                    "trace_sweep.matrix_path {} does not exist",
                    t.matrix_path.display()
                )));
            }
            if t.norm_values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::Config("trace_sweep.norm_values must be finite and >= 0".into()));
            }
        }
        if let Some(f) = &self.failure_loss {
            f.kind.parse::<FailureKind>()?;
            if !(0.0..=1.0).contains(&f.lambda) {
                return Err(Error::Config("failure_loss.lambda must be in [0, 1]".into()));
            }
            for s in &f.schemes {
                s.parse::<Scheme>()?;
            }
            if !matches!(f.mode.as_str(), "exhaustive" | "auto" | "sampled") {
                return Err(Error::Config(format!("unknown failure_loss.mode `{}`", f.mode)));
            }
        }
        if let Some(e) = &self.expressibility {
            nonempty(&e.k_values, "expressibility.k_values")?;
            if e.k_values.contains(&0) {
                return Err(Error::Config("expressibility.k_values must be >= 1".into()));
            }
        }
        if let Some(p) = &self.partition {
            nonempty(&p.k_values, "partition.k_values")?;
        }
        Ok(())
    }

    /// Experiments that have a table in this config, plus `topology`.
    pub fn configured(&self) -> Vec<ExperimentName> {
        ExperimentName::ALL
            .into_iter()
            .filter(|e| match e {
                ExperimentName::Topology => true,
                ExperimentName::CsHeatmap => self.cs_heatmap.is_some(),
                ExperimentName::Scale => self.scale.is_some(),
                ExperimentName::Burst => self.burst.is_some(),
                ExperimentName::TraceSweep => self.trace_sweep.is_some(),
                ExperimentName::FailureLoss => self.failure_loss.is_some(),
                ExperimentName::Expressibility => self.expressibility.is_some(),
                ExperimentName::Partition => self.partition.is_some(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 7
routing = "kdisjoint:4"

[topology]
kind = "fattree"
k = 8
oversub = 4

[cs_heatmap]
c_values = [32, 64]
s_values = [16]

[partition]
k_values = [2, 5]
"#;

    #[test]
    fn parse_and_round_trip() {
        let cfg = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.scheme().unwrap(), Scheme::KDisjoint(4));
        assert_eq!(cfg.topology.spec(), TopologySpec::FatTree { k: 8, oversub: 4 });
        assert_eq!(
            cfg.configured(),
            vec![ExperimentName::Topology, ExperimentName::CsHeatmap, ExperimentName::Partition]
        );
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            SAMPLE.replace("s_values = [16]", "s_values = []"),
            SAMPLE.replace("kdisjoint:4", "widest"),
            SAMPLE.replace("k = 8", "k = 7"),
            SAMPLE.replace("seed = 7", "seed = 7\nbogus = 1"),
            SAMPLE.replace("[partition]", "[trace_sweep]\nmatrix_path = \"/nonexistent\"\nnorm_values = [1.0]\n[partition]"),
        ];
        for text in bad {
            assert!(ExperimentConfig::from_toml_str(&text).is_err(), "{text}");
        }
    }

    #[test]
    fn experiment_names() {
        for e in ExperimentName::ALL {
            assert_eq!(e.as_str().parse::<ExperimentName>().unwrap(), e);
        }
        assert!("heatmap".parse::<ExperimentName>().is_err());
    }
}
