//! The JSON run configuration.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use nearspace::eigensolve::{RegionSpec, SolverParams};
use nearspace::pipeline::{PostProcess, SearchMode, SearchSpec};
use nearspace::problems::RandomProjector;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
}

fn grid_default() -> usize {
    nearspace::problems::DEFAULT_GRID
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "builtin", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// `L = diag(1, 2, 3)`, `Q = diag(1, 1, 0)`.
    DiagDemo,
    SquareWell {
        #[serde(default = "grid_default")]
        n: usize,
    },
    C5Symmetry {
        #[serde(default = "grid_default")]
        n: usize,
    },
    HexAnnulus {
        #[serde(default = "grid_default")]
        n: usize,
    },
    /// Edges inline or from an edge-list file (`u v w` per line); a relative
    /// path is resolved against the config file's directory.
    Graph {
        #[serde(default)]
        edges: Option<Vec<(usize, usize, f64)>>,
        #[serde(default)]
        edges_file: Option<PathBuf>,
        #[serde(default)]
        vertices: Option<usize>,
        #[serde(default)]
        potential: Option<Vec<f64>>,
        subset: Vec<usize>,
    },
    Barbell {
        bell: usize,
        path: usize,
    },
    Random {
        n: usize,
        projector: RandomProjector,
        #[serde(default = "yes")]
        real: bool,
        #[serde(default)]
        seed: u64,
    },
}

/// Overrides of the problem's default search; every field is optional when
/// the problem supplies defaults.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub s: Option<f64>,
    pub delta_star: Option<f64>,
    pub tau2_threshold: Option<f64>,
    pub mode: Option<SearchMode>,
    pub post_process: Option<PostProcess>,
    pub rescale_real: Option<bool>,
    pub search_delta: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: Option<PathBuf>,
    /// Dump `mode_<k>_{re,im,current}.csv` for accepted modes of grid problems.
    #[serde(default = "yes")]
    pub fields: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: None,
            fields: true,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    /// Values of `s` for the encoding bounds; defaults to the search `s`.
    pub s_values: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        // serde_json errors carry "line L column C"
        let config: RunConfig = serde_json::from_str(text)?;
        config.search.check()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }
}

impl SearchConfig {
    fn check(&self) -> anyhow::Result<()> {
        if self.delta_star.is_some() && self.tau2_threshold.is_some() {
            bail!("search: give exactly one of delta_star and tau2_threshold");
        }
        if let Some(t) = self.tau2_threshold {
            if !(0.0..1.0).contains(&t) {
                bail!("search: tau2_threshold must lie in [0, 1), got {t}");
            }
        }
        Ok(())
    }

    /// Applies the overrides to `base`, or builds a spec from scratch when
    /// the problem has no default.
    pub fn resolve(&self, base: Option<SearchSpec>) -> anyhow::Result<SearchSpec> {
        let delta_star = self.delta_star.or(self.tau2_threshold.map(|t| (1.0 - t).sqrt()));
        let mut spec = match base {
            Some(spec) => spec,
            None => {
                let (Some(a), Some(b), Some(s), Some(d)) = (self.a, self.b, self.s, delta_star) else {
                    bail!("search: this problem has no defaults; give a, b, s and delta_star or tau2_threshold");
                };
                SearchSpec::new(RegionSpec::new(a, b, s, d)?)
            }
        };
        let r = &mut spec.region;
        r.a = self.a.unwrap_or(r.a);
        r.b = self.b.unwrap_or(r.b);
        r.s = self.s.unwrap_or(r.s);
        r.delta_star = delta_star.unwrap_or(r.delta_star);
        r.validate()?;
        if let Some(m) = self.mode {
            spec.mode = m;
        }
        if let Some(p) = self.post_process {
            spec.post_process = p;
        }
        if let Some(x) = self.rescale_real {
            spec.rescale_real = x;
        }
        if self.search_delta.is_some() {
            spec.search_delta = self.search_delta;
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_located() {
        let err = RunConfig::parse("{\n  \"problem\": {\"builtin\": \"diag_demo\"},\n  \"serch\": {}\n}").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("serch") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn one_threshold_only() {
        let text = r#"{"problem": {"builtin": "diag_demo"}, "search": {"delta_star": 0.3, "tau2_threshold": 0.91}}"#;
        assert!(RunConfig::parse(text).is_err());
    }

    #[test]
    fn threshold_forms_agree() {
        let a: RunConfig = RunConfig::parse(r#"{"problem": {"builtin": "diag_demo"}, "search": {"tau2_threshold": 0.91}}"#).unwrap();
        let spec = a.search.resolve(Some(SearchSpec::new(RegionSpec::new(0.0, 1.0, 0.1, 0.5).unwrap()))).unwrap();
        assert!((spec.region.delta_star - 0.3).abs() < 1e-12);
    }

    #[test]
    fn missing_search_without_defaults() {
        let c = RunConfig::parse(r#"{"problem": {"builtin": "random", "n": 20, "projector": "span"}}"#).unwrap();
        assert!(c.search.resolve(None).is_err());
    }

    #[test]
    fn empty_interval_is_rejected() {
        let c = RunConfig::parse(r#"{"problem": {"builtin": "diag_demo"}, "search": {"a": 2, "b": 1}}"#).unwrap();
        assert!(c.search.resolve(Some(SearchSpec::new(RegionSpec::new(0.0, 1.0, 0.1, 0.5).unwrap()))).is_err());
    }
}
