use std::fmt;
use std::path::{Path, PathBuf};

use hug_core::constraint::{ConstraintMap, Quadric, SineQuadric};
use hug_core::{Matrix, Vector};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Table1,
    Convergence,
    PhasePortrait,
    Foldback,
    Ellipsoid,
    Ecdf,
    SphereTail,
    Chain,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Table1 => "table1",
            Experiment::Convergence => "convergence",
            Experiment::PhasePortrait => "phase-portrait",
            Experiment::Foldback => "foldback",
            Experiment::Ellipsoid => "ellipsoid",
            Experiment::Ecdf => "ecdf",
            Experiment::SphereTail => "sphere-tail",
            Experiment::Chain => "chain",
        }
    }

    /// Optional keys each experiment understands, beyond `experiment`, `out`
    /// and `seed`.
    fn allowed_keys(self) -> &'static [&'static str] {
        match self {
            Experiment::Table1 => &["substeps"],
            Experiment::Convergence => &["constraint", "x0", "v0", "t_end", "deltas", "substeps"],
            Experiment::PhasePortrait => &["a", "b", "c", "phi_points", "p_points", "t_end", "K"],
            Experiment::Foldback => &["delta", "K", "substeps"],
            Experiment::Ellipsoid => &["dim", "constraint", "x0", "delta", "K", "replicates", "full_scale"],
            Experiment::Ecdf => &["dims", "delta", "K", "replicates", "full_scale"],
            Experiment::SphereTail => &["h", "n"],
            Experiment::Chain => &[
                "constraint",
                "x0",
                "delta",
                "K",
                "sigma",
                "random_walk",
                "iterations",
                "seeds",
                "reversibility_check",
            ],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    Quadric,
    Sphere,
    /// `f(x) = sum_j c_j sin(x_j) + x^T A x`.
    CustomTest,
}

/// Scalar constraint built from config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    pub kind: ConstraintKind,
    /// Diagonal of `A`.
    pub diagonal: Option<Vec<f64>>,
    /// Full symmetric `A`, row by row.
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Sphere dimension.
    pub dim: Option<usize>,
    /// Sine coefficients of the custom test map.
    pub coeffs: Option<Vec<f64>>,
    /// Use `-f` instead of `f`.
    #[serde(default)]
    pub negate: bool,
}

impl ConstraintSpec {
    fn matrix_a(&self) -> Result<Matrix, CliError> {
        match (&self.diagonal, &self.matrix) {
            (Some(d), None) => Ok(Matrix::from_diagonal(&Vector::from_column_slice(d))),
            (None, Some(rows)) => {
                let n = rows.len();
                if n == 0 || rows.iter().any(|r| r.len() != n) {
                    return Err(CliError::Config("constraint.matrix must be square".into()));
                }
                Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
            }
            _ => Err(CliError::Config(format!(
                "constraint of kind {:?} needs exactly one of `diagonal` or `matrix`",
                self.kind
            ))),
        }
    }

    pub fn build(&self) -> Result<Box<dyn ConstraintMap>, CliError> {
        let sign = if self.negate { -1.0 } else { 1.0 };
        let bad = |what: &str| CliError::Config(format!("constraint kind {:?} does not take `{what}`", self.kind));
        match self.kind {
            ConstraintKind::Quadric => {
                if self.dim.is_some() {
                    return Err(bad("dim"));
                }
                if self.coeffs.is_some() {
                    return Err(bad("coeffs"));
                }
                let map = Quadric::new(vec![self.matrix_a()? * sign]).map_err(config_err)?;
                Ok(Box::new(map))
            }
            ConstraintKind::Sphere => {
                if self.diagonal.is_some() || self.matrix.is_some() {
                    return Err(bad("diagonal/matrix"));
                }
                if self.coeffs.is_some() {
                    return Err(bad("coeffs"));
                }
                let n = self.dim.ok_or_else(|| CliError::Config("sphere constraint needs `dim`".into()))?;
                let map = Quadric::new(vec![Matrix::identity(n, n) * sign]).map_err(config_err)?;
                Ok(Box::new(map))
            }
            ConstraintKind::CustomTest => {
                if self.dim.is_some() {
                    return Err(bad("dim"));
                }
                let a = self.matrix_a()?;
                let c = self
                    .coeffs
                    .as_ref()
                    .ok_or_else(|| CliError::Config("custom-test constraint needs `coeffs`".into()))?;
                let c = Vector::from_column_slice(c) * sign;
                let map = SineQuadric::new(vec![c], vec![a * sign]).map_err(config_err)?;
                Ok(Box::new(map))
            }
        }
    }
}

fn config_err(e: hug_core::HugError) -> CliError {
    CliError::Config(e.to_string())
}

/// Experiment configuration as read from TOML. Keys that an experiment does
/// not use are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub replicates: Option<usize>,
    pub full_scale: Option<bool>,
    pub constraint: Option<ConstraintSpec>,
    pub x0: Option<Vec<f64>>,
    pub v0: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub deltas: Option<Vec<f64>>,
    #[serde(rename = "K")]
    pub steps: Option<usize>,
    pub t_end: Option<f64>,
    pub substeps: Option<usize>,
    pub dim: Option<usize>,
    pub dims: Option<Vec<usize>>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub phi_points: Option<usize>,
    pub p_points: Option<usize>,
    pub h: Option<Vec<f64>>,
    pub n: Option<Vec<usize>>,
    pub sigma: Option<f64>,
    pub random_walk: Option<f64>,
    pub iterations: Option<usize>,
    pub reversibility_check: Option<bool>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    fn set_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        macro_rules! probe {
            ($($field:ident => $name:literal),* $(,)?) => {
                $(if self.$field.is_some() { keys.push($name); })*
            };
        }
        probe!(
            seeds => "seeds", replicates => "replicates", full_scale => "full_scale",
            constraint => "constraint", x0 => "x0", v0 => "v0", delta => "delta",
            deltas => "deltas", steps => "K", t_end => "t_end", substeps => "substeps",
            dim => "dim", dims => "dims", a => "a", b => "b", c => "c",
            phi_points => "phi_points", p_points => "p_points", h => "h", n => "n",
            sigma => "sigma", random_walk => "random_walk", iterations => "iterations",
            reversibility_check => "reversibility_check",
        );
        keys
    }

    /// Checks the `experiment` key against the subcommand and rejects keys
    /// the experiment does not use.
    pub fn validate_for(&self, exp: Experiment) -> Result<(), CliError> {
        if let Some(e) = self.experiment {
            if e != exp {
                return Err(CliError::Config(format!(
                    "config is for experiment `{e}` but `{exp}` was requested"
                )));
            }
        }
        let allowed = exp.allowed_keys();
        let stray: Vec<_> = self.set_keys().into_iter().filter(|k| !allowed.contains(k)).collect();
        if !stray.is_empty() {
            return Err(CliError::Config(format!(
                "experiment `{exp}` does not use key(s): {}",
                stray.join(", ")
            )));
        }
        Ok(())
    }
}
