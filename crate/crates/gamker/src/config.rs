//! Experiment configuration, read from TOML.
//!
//! ```toml
//! experiment = "clt_density"
//! seed = 42
//! replications = 1000
//! sizes = [5000]
//! target_points = [1.0]
//!
//! [process]
//! kind = "iid_exponential"
//! rate = 1.0
//!
//! [bandwidth]          # or: h = 0.05
//! c = 1.0
//! alpha = 0.45
//! ```
//!
//! Optional keys: `boundary_bandwidth` (used at target point 0), `grid`
//! (`a`, `b`, `count`; required by consistency experiments), `variance_scale`
//! (multiplies the theoretical CLT variance, default 1) and a `[checks]` table
//! overriding the pass thresholds.

use std::path::Path;

use gamker_core::{Bandwidth, EvaluationGrid, ProcessSpec};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ConsistencyDensity,
    ConsistencyRegression,
    CltDensity,
    CltRegression,
    BiasDensity,
    BiasRegression,
}

impl ExperimentKind {
    pub fn is_regression(self) -> bool {
        matches!(
            self,
            ExperimentKind::ConsistencyRegression
                | ExperimentKind::CltRegression
                | ExperimentKind::BiasRegression
        )
    }
}

/// Linearly spaced grid with inclusive endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub a: f64,
    pub b: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<EvaluationGrid> {
        if self.count < 2 {
            return Err(Error::Config(format!(
                "grid count must be at least 2, got {}",
                self.count
            )));
        }
        if !(self.a >= 0.0 && self.a < self.b && self.b.is_finite()) {
            return Err(Error::Config(format!(
                "grid needs 0 <= a < b, got a={} b={}",
                self.a, self.b
            )));
        }
        Ok(EvaluationGrid::linspace(self.a, self.b, self.count)?)
    }
}

/// Pass thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Checks {
    pub ks_max: f64,
    pub ks_max_boundary: f64,
    pub mean_abs_max: f64,
    pub variance_band: [f64; 2],
    pub bias_se_multiple: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_median_max: Option<f64>,
}

impl Default for Checks {
    fn default() -> Self {
        Self {
            ks_max: 0.07,
            ks_max_boundary: 0.08,
            mean_abs_max: 0.1,
            variance_band: [0.85, 1.15],
            bias_se_multiple: 3.0,
            final_median_max: None,
        }
    }
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub replications: usize,
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub target_points: Vec<f64>,
    pub process: ProcessSpec,
    pub bandwidth: Bandwidth,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_bandwidth: Option<Bandwidth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default = "unit")]
    pub variance_scale: f64,
    #[serde(default)]
    pub checks: Checks,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        self.process.validate()?;
        if self.replications < 2 {
            return fail(format!(
                "replications must be at least 2, got {}",
                self.replications
            ));
        }
        if self.sizes.is_empty() || self.sizes[0] == 0 {
            return fail("sizes must be non-empty and positive".into());
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return fail(format!(
                "sizes must be strictly increasing, got {:?}",
                self.sizes
            ));
        }
        if self.experiment.is_regression() != self.process.has_responses() {
            return fail(format!(
                "experiment {:?} does not match the process (regression experiments need kind = \"regression_over\")",
                self.experiment
            ));
        }
        let n_max = *self.sizes.last().expect("non-empty") as u64;
        self.bandwidth.at(n_max)?;
        if let Some(b) = &self.boundary_bandwidth {
            b.at(n_max)?;
        }
        if !(self.variance_scale > 0.0 && self.variance_scale.is_finite()) {
            return fail(format!(
                "variance_scale must be positive, got {}",
                self.variance_scale
            ));
        }
        let [lo, hi] = self.checks.variance_band;
        if !(lo <= hi) {
            return fail(format!(
                "variance_band must satisfy lower <= upper, got [{lo}, {hi}]"
            ));
        }
        match self.experiment {
            ExperimentKind::ConsistencyDensity | ExperimentKind::ConsistencyRegression => {
                self.grid
                    .ok_or_else(|| {
                        Error::Config("consistency experiments need a [grid] table".into())
                    })?
                    .build()?;
            }
            _ => {
                if self.target_points.is_empty() {
                    return fail("target_points must be non-empty".into());
                }
                if let Some(x) = self
                    .target_points
                    .iter()
                    .find(|x| !(**x >= 0.0 && x.is_finite()))
                {
                    return fail(format!("target point {x} outside the support [0, inf)"));
                }
            }
        }
        Ok(())
    }

    /// Bandwidth at sample size `n` for target point `x`.
    pub fn bandwidth_for(&self, x: f64, n: usize) -> Result<f64> {
        let rule = match (&self.boundary_bandwidth, x == 0.0) {
            (Some(b), true) => b,
            _ => &self.bandwidth,
        };
        Ok(rule.at(n as u64)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CLT: &str = r#"
        experiment = "clt_density"
        seed = 42
        replications = 10
        sizes = [100]
        target_points = [0.0, 1.0]
        [process]
        kind = "iid_exponential"
        rate = 1.0
        [bandwidth]
        c = 1.0
        alpha = 0.45
        [boundary_bandwidth]
        c = 1.0
        alpha = 0.4
    "#;

    #[test]
    fn parses_and_picks_boundary_rule() {
        let c = ExperimentConfig::from_toml(CLT).unwrap();
        assert_eq!(c.checks, Checks::default());
        assert_eq!(c.variance_scale, 1.0);
        assert!((c.bandwidth_for(1.0, 100).unwrap() - 100f64.powf(-0.45)).abs() < 1e-15);
        assert!((c.bandwidth_for(0.0, 100).unwrap() - 100f64.powf(-0.4)).abs() < 1e-15);
    }

    #[test]
    fn nested_regression_process() {
        let text = r#"
            experiment = "consistency_regression"
            seed = 1
            replications = 2
            sizes = [100, 200]
            process = { kind = "regression_over", regfn = { constant = 0.5 }, noise_var = 0.0, base = { kind = "ear1", rho = 0.5, rate = 1.0 } }
            bandwidth = { h = 0.1 }
            grid = { a = 0.2, b = 3.0, count = 8 }
        "#;
        let c = ExperimentConfig::from_toml(text).unwrap();
        match c.process {
            ProcessSpec::RegressionOver { base, .. } => {
                assert_eq!(
                    *base,
                    ProcessSpec::Ear1 {
                        rho: 0.5,
                        rate: 1.0,
                        burn_in: 1000
                    }
                )
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(c.bandwidth, Bandwidth::Fixed { h: 0.1 });
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            CLT.replace("replications = 10", "replications = 1"),
            CLT.replace("sizes = [100]", "sizes = [200, 100]"),
            CLT.replace("rate = 1.0", "rate = -1.0"),
            CLT.replace("alpha = 0.45", "alpha = 1.5"),
            CLT.replace("target_points = [0.0, 1.0]", "target_points = [-1.0]"),
            CLT.replace("clt_density", "clt_regression"),
            CLT.replace("clt_density", "consistency_density"),
            CLT.replace("seed = 42", "seed = 42\nunknown = 3"),
            "experiment = ".to_string(),
        ];
        for text in bad {
            assert!(ExperimentConfig::from_toml(&text).is_err(), "{text}");
        }
    }

    #[test]
    fn round_trips_through_toml() {
        let c = ExperimentConfig::from_toml(CLT).unwrap();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), c);
    }
}
