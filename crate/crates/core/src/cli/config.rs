//! Run configuration (TOML). Every table is closed: unknown keys are errors.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::alpha0::Alpha0Settings;
use crate::domain::{DiscreteDomain, Stencil};
use crate::error::{LabError, Result};
use crate::functionals::Params;
use crate::minimize::{MinimizeConfig, Start, StepRule};

fn default_seed() -> u64 {
    1
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub domain: DomainConfig,
    pub params: ParamsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldConfig>,
    #[serde(default)]
    pub minimize: MinimizeSettings,
    #[serde(default)]
    pub alpha0: Alpha0Config,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Box {
        dimension: usize,
        sides: Vec<f64>,
        points_per_axis: usize,
        #[serde(default, skip_serializing_if = "is_default")]
        stencil: Stencil,
    },
    RadialBall {
        dimension: usize,
        radius: f64,
        n_points: usize,
        #[serde(default, skip_serializing_if = "is_default")]
        stencil: Stencil,
    },
}

impl DomainConfig {
    pub fn build(&self) -> Result<DiscreteDomain> {
        match self {
            DomainConfig::Box {
                dimension,
                sides,
                points_per_axis,
                stencil,
            } => DiscreteDomain::build_box_grid_with(*dimension, sides, *points_per_axis, *stencil),
            DomainConfig::RadialBall {
                dimension,
                radius,
                n_points,
                stencil,
            } => DiscreteDomain::build_radial_ball_grid_with(
                *dimension, *radius, *n_points, *stencil,
            ),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            DomainConfig::Box { dimension, .. } | DomainConfig::RadialBall { dimension, .. } => {
                *dimension
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub a: f64,
    #[serde(default)]
    pub alpha: f64,
}

impl ParamsConfig {
    pub fn build(&self, dimension: usize) -> Result<Params> {
        Params::new(dimension, self.a, self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedCenter {
    Interior,
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CenterConfig {
    Named(NamedCenter),
    Point(Vec<f64>),
}

impl Default for CenterConfig {
    fn default() -> Self {
        CenterConfig::Named(NamedCenter::Interior)
    }
}

fn one() -> f64 {
    1.0
}

/// The field `report` evaluates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldConfig {
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    Instanton {
        epsilon: f64,
        #[serde(default)]
        center: CenterConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cutoff_radius: Option<f64>,
    },
    /// Seeded random cosine field; without `seed` the run seed is used.
    Random {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StartConfig {
    Constant,
    BoundaryInstanton {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
    InteriorInstanton {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
    Random {
        seed: u64,
    },
}

impl From<&StartConfig> for Start {
    fn from(s: &StartConfig) -> Self {
        match s {
            StartConfig::Constant => Start::Constant,
            StartConfig::BoundaryInstanton { epsilon } => Start::BoundaryInstanton(*epsilon),
            StartConfig::InteriorInstanton { epsilon } => Start::InteriorInstanton(*epsilon),
            StartConfig::Random { seed } => Start::Random(*seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRuleConfig {
    #[default]
    ArmijoBacktracking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimizeSettings {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step_rule: StepRuleConfig,
    pub armijo_c: f64,
    pub initial_step: f64,
    pub max_backtracks: usize,
    pub normalize_every: usize,
    /// Empty means the default start set.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub starts: Vec<StartConfig>,
}

impl Default for MinimizeSettings {
    fn default() -> Self {
        let d = MinimizeConfig::default();
        Self {
            max_iters: d.max_iters,
            grad_tol: d.grad_tol,
            step_rule: StepRuleConfig::ArmijoBacktracking,
            armijo_c: d.armijo_c,
            initial_step: d.initial_step,
            max_backtracks: d.max_backtracks,
            normalize_every: d.normalize_every,
            starts: Vec::new(),
        }
    }
}

impl MinimizeSettings {
    pub fn build(&self) -> Result<MinimizeConfig> {
        let starts = if self.starts.is_empty() {
            Start::default_set()
        } else {
            self.starts.iter().map(Start::from).collect()
        };
        let cfg = MinimizeConfig {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            step_rule: match self.step_rule {
                StepRuleConfig::ArmijoBacktracking => StepRule::ArmijoBacktracking,
            },
            armijo_c: self.armijo_c,
            initial_step: self.initial_step,
            max_backtracks: self.max_backtracks,
            starts,
            normalize_every: self.normalize_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Alpha0Config {
    pub bisect_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

impl Default for Alpha0Config {
    fn default() -> Self {
        let d = Alpha0Settings::default();
        Self {
            bisect_tol: d.bisect_tol,
            margin: d.margin,
        }
    }
}

impl Alpha0Config {
    pub fn build(&self) -> Alpha0Settings {
        Alpha0Settings {
            bisect_tol: self.bisect_tol,
            margin: self.margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub samples: usize,
    /// Value used in place of `alpha_0`; when absent, `verify` runs the
    /// bracketing first and uses the upper end of the bracket.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha0_proxy: Option<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            samples: 200,
            alpha0_proxy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub report: String,
    pub trace: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            report: "report.txt".into(),
            trace: "trace.csv".into(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LabError::InvalidParameter(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn params(&self) -> Result<Params> {
        self.params.build(self.domain.dimension())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
seed = 42

[domain]
kind = "box"
dimension = 5
sides = [1.0, 1.0, 1.0, 1.0, 2.0]
points_per_axis = 5
stencil = "central_one_sided"

[params]
a = 1.5
alpha = 0.25

[field]
kind = "instanton"
epsilon = 0.2
center = "boundary"
cutoff_radius = 0.9

[minimize]
max_iters = 12
starts = [
  { kind = "constant" },
  { kind = "boundary_instanton", epsilon = 0.3 },
  { kind = "random", seed = 9 },
]

[alpha0]
bisect_tol = 0.25
margin = 0.5

[verify]
samples = 3
alpha0_proxy = 20.0
"#;

    #[test]
    fn full_config_round_trips() {
        let c = RunConfig::parse(FULL).unwrap();
        assert_eq!(c.seed, 42);
        assert!(matches!(
            c.field,
            Some(FieldConfig::Instanton {
                center: CenterConfig::Named(NamedCenter::Boundary),
                ..
            })
        ));
        let again = RunConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::parse(
            "[domain]\nkind = \"radial_ball\"\ndimension = 6\nradius = 1.0\nn_points = 64\n[params]\na = 1.0\n",
        )
        .unwrap();
        assert_eq!(c.seed, 1);
        assert_eq!(c.verify.samples, 200);
        assert_eq!(c.minimize.build().unwrap().starts, Start::default_set());
        assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c);
        assert_eq!(c.domain.build().unwrap().dimension(), 6);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let base = "[domain]\nkind = \"box\"\ndimension = 5\nsides = [1.0,1.0,1.0,1.0,1.0]\npoints_per_axis = 5\n[params]\na = 1.0\n";
        assert!(RunConfig::parse(base).is_ok());
        assert!(RunConfig::parse(&format!("{base}typo = 1\n")).is_err());
        assert!(RunConfig::parse(&format!("{base}[minimize]\nmax_iter = 3\n")).is_err());
        let bad_domain = base.replace("points_per_axis", "points");
        assert!(RunConfig::parse(&bad_domain).is_err());
        assert!(
            RunConfig::parse(&format!("{base}[field]\nkind = \"constant\"\nvalu = 2.0\n")).is_err()
        );
    }
}
