//! Experiment configuration, loadable from JSON.
//!
//! ```json
//! {
//!   "figure": "fig3",
//!   "seed": 7,
//!   "overrides": { "magnitudes": [1e-8, 1e-6] },
//!   "output_dir": "out"
//! }
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use leverage::GenSpec;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FigureId {
    #[serde(rename = "fig1")]
    Fig1,
    #[serde(rename = "fig2")]
    Fig2,
    #[serde(rename = "fig3")]
    Fig3,
    #[serde(rename = "fig4")]
    Fig4,
    #[serde(rename = "fig5")]
    Fig5,
}

impl FigureId {
    pub const ALL: [FigureId; 5] = [
        FigureId::Fig1,
        FigureId::Fig2,
        FigureId::Fig3,
        FigureId::Fig4,
        FigureId::Fig5,
    ];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn tag(self) -> &'static str {
        match self {
            FigureId::Fig1 => "fig1",
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
        }
    }

    /// Default perturbation magnitudes, one per perturbed panel.
    pub fn default_magnitudes(self) -> Vec<f64> {
        match self {
            FigureId::Fig1 => vec![1e-8, 1e-6, 1e-4],
            FigureId::Fig2 => vec![1e-8, 6e-14],
            FigureId::Fig3 => vec![1e-8, 1e-5],
            FigureId::Fig4 => vec![1e-8],
            FigureId::Fig5 => vec![1e-8],
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for FigureId {
    type Err = LabError;

    /// Accepts `3` or `fig3`.
    fn from_str(s: &str) -> Result<Self> {
        let digits = s.strip_prefix("fig").unwrap_or(s);
        match digits {
            "1" => Ok(FigureId::Fig1),
            "2" => Ok(FigureId::Fig2),
            "3" => Ok(FigureId::Fig3),
            "4" => Ok(FigureId::Fig4),
            "5" => Ok(FigureId::Fig5),
            _ => Err(LabError::Config(format!(
                "unknown figure '{s}', expected 1..5"
            ))),
        }
    }
}

/// Optional replacements for the built-in recipes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Recipe for the well-conditioned matrix `A`.
    #[serde(default)]
    pub gen: Option<GenSpec>,
    /// Recipe for the ill-conditioned matrix `B`.
    #[serde(default)]
    pub gen_b: Option<GenSpec>,
    /// Perturbation magnitudes, in the order of
    /// [`FigureId::default_magnitudes`].
    #[serde(default)]
    pub magnitudes: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub figure: FigureId,
    pub seed: u64,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from(".")
}

impl ExperimentConfig {
    pub fn new(figure: FigureId, seed: u64) -> Self {
        Self {
            figure,
            seed,
            overrides: Overrides::default(),
            output_dir: default_output_dir(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(g) = &self.overrides.gen {
            g.validate()?;
        }
        if let Some(g) = &self.overrides.gen_b {
            g.validate()?;
        }
        if let Some(m) = &self.overrides.magnitudes {
            let want = self.figure.default_magnitudes().len();
            if m.len() != want {
                return Err(LabError::Config(format!(
                    "{} takes {want} magnitudes, got {}",
                    self.figure,
                    m.len()
                )));
            }
            if let Some(bad) = m.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(LabError::Config(format!(
                    "magnitudes must lie in [0, 1], got {bad}"
                )));
            }
        }
        Ok(())
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.overrides
            .magnitudes
            .clone()
            .unwrap_or_else(|| self.figure.default_magnitudes())
    }

    pub fn gen_a(&self) -> GenSpec {
        self.overrides.gen.clone().unwrap_or_else(GenSpec::stepped)
    }

    pub fn gen_b(&self) -> GenSpec {
        self.overrides
            .gen_b
            .clone()
            .unwrap_or_else(GenSpec::ill_conditioned)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_ids_parse() {
        assert_eq!("3".parse::<FigureId>().unwrap(), FigureId::Fig3);
        assert_eq!("fig5".parse::<FigureId>().unwrap(), FigureId::Fig5);
        assert!("6".parse::<FigureId>().is_err());
        for f in FigureId::ALL {
            assert_eq!(f.to_string().parse::<FigureId>().unwrap(), f);
        }
    }

    #[test]
    fn json_minimal_and_full() {
        let cfg = ExperimentConfig::from_json(r#"{"figure":"fig1","seed":42}"#).unwrap();
        assert_eq!(cfg, ExperimentConfig::new(FigureId::Fig1, 42));
        assert_eq!(cfg.magnitudes(), vec![1e-8, 1e-6, 1e-4]);

        let cfg = ExperimentConfig::from_json(
            r#"{"figure":"fig3","seed":1,"overrides":{"magnitudes":[1e-9,1e-6]},"output_dir":"x"}"#,
        )
        .unwrap();
        assert_eq!(cfg.magnitudes(), vec![1e-9, 1e-6]);
        assert_eq!(cfg.output_dir, PathBuf::from("x"));
    }

    #[test]
    fn json_rejects_bad_input() {
        assert!(ExperimentConfig::from_json(r#"{"figure":"fig1"}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"figure":"fig9","seed":1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"figure":"fig1","seed":1,"extra":0}"#).is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"figure":"fig4","seed":1,"overrides":{"magnitudes":[1e-8,1e-6]}}"#
        )
        .is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"figure":"fig4","seed":1,"overrides":{"magnitudes":[2.0]}}"#
        )
        .is_err());
    }
}
