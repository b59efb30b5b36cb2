//! JSON run configuration and its translation into solver inputs.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fracwave::fvp_core::{Scenario, ScenarioSpec, Source, TimeGrid, TimeSeries, Tolerances};
use fracwave::operator_models::{
    functional_coefficients, CoefficientVector, Eigensystem, FunctionalKind, FunctionalSpec,
    OperatorKind, Preset,
};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub ip1: Option<Ip1Config>,
    #[serde(default)]
    pub ip2: Option<Ip2Config>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// worker threads for the per-mode solves; all cores when absent
    #[serde(default)]
    pub threads: Option<usize>,
    /// run the residual and terminal checks after each solve
    #[serde(default = "yes")]
    pub verification: bool,
    /// noise-study seed; FRACWAVE_SEED takes precedence
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub t_final: f64,
    pub operator: OperatorConfig,
    pub n_modes: usize,
    #[serde(default)]
    pub grid: GridConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub kind: OperatorKind,
    #[serde(default = "one")]
    pub length: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_intervals")]
    pub intervals: usize,
    /// nodes T(i/M)^r; 1 gives a uniform grid
    #[serde(default = "one")]
    pub grading: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            intervals: default_intervals(),
            grading: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default = "zero_preset")]
    pub phi: Preset,
    #[serde(default = "zero_preset")]
    pub psi: Preset,
    /// spatial source profile
    #[serde(default)]
    pub f: Option<Preset>,
    /// time profile; with `f` it gives the source p(t)f
    #[serde(default)]
    pub p: Option<Profile>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            phi: Preset::Zero,
            psi: Preset::Zero,
            f: None,
            p: None,
        }
    }
}

/// Time profile p(t) on [0, T], written in s = t/T.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// base + amplitude·sin(frequency·π·s)
    Sine {
        #[serde(default = "one")]
        base: f64,
        #[serde(default = "half")]
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
    },
    /// Σ cₖ sᵏ
    Polynomial {
        coefficients: Vec<f64>,
    },
    /// Values at the grid nodes.
    Values {
        values: Vec<f64>,
    },
}

impl Profile {
    /// Evaluates the profile at t, or `None` for tabulated values.
    pub fn eval(&self, t: f64, t_final: f64) -> Option<f64> {
        let s = t / t_final;
        match self {
            Profile::Constant { value } => Some(*value),
            Profile::Sine {
                base,
                amplitude,
                frequency,
            } => Some(base + amplitude * (frequency * PI * s).sin()),
            Profile::Polynomial { coefficients } => {
                Some(coefficients.iter().rev().fold(0.0, |acc, c| acc * s + c))
            }
            Profile::Values { .. } => None,
        }
    }

    pub fn sample(&self, grid: &TimeGrid) -> Result<TimeSeries, CliError> {
        let tf = grid.t_final();
        match self {
            Profile::Values { values } => {
                if values.len() != grid.len() {
                    return Err(CliError::Config(format!(
                        "profile has {} values but the grid has {} nodes",
                        values.len(),
                        grid.len()
                    )));
                }
                Ok(TimeSeries::new(grid.nodes().to_vec(), values.clone())?)
            }
            _ => Ok(TimeSeries::sample(grid, |t| self.eval(t, tf).unwrap_or(0.0))?),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ip1Config {
    pub xi: f64,
    pub h: HSource,
    #[serde(default)]
    pub noise: Option<NoiseConfig>,
}

/// Where the snapshot u(ξ) = h comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum HSource {
    /// hₙ given directly
    Coefficients { values: Vec<f64> },
    /// a physical-space profile, projected onto the eigenfunctions
    Preset { data: Preset },
    /// u(ξ) of a forward solve with the source `data.f`, on a finer grid
    Forward {
        #[serde(default = "two")]
        refine: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub levels: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ip2Config {
    pub functional: FunctionalConfig,
    pub data: Ip2DataConfig,
    /// also run the stability sweep over the built-in profile family
    #[serde(default)]
    pub sweep: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalConfig {
    /// mean over the domain
    Mean,
    /// ∫ x(1 − x) u dx on the unit-scaled domain
    WeightX1mx,
    Coefficients { values: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum Ip2DataConfig {
    /// ∂ₜᵅh from a forward solve with `data.p`, on a finer grid
    Forward {
        #[serde(default = "two")]
        refine: usize,
    },
    /// ∂ₜᵅh at the grid nodes
    CaputoValues { values: Vec<f64> },
    /// h at the grid nodes; differentiated numerically
    HValues { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// overridden by --out
    #[serde(default)]
    pub directory: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    /// write an SVG line plot of u(t, x) at the probe points
    #[serde(default)]
    pub plot: bool,
    #[serde(default)]
    pub probe_points: Vec<f64>,
    /// store wall-clock timings in summary.json (breaks byte-identical reruns)
    #[serde(default)]
    pub record_timings: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: None,
            formats: default_formats(),
            plot: false,
            probe_points: Vec::new(),
            record_timings: false,
        }
    }
}

impl OutputConfig {
    pub fn csv(&self) -> bool {
        self.formats.contains(&Format::Csv)
    }

    pub fn json(&self) -> bool {
        self.formats.contains(&Format::Json)
    }
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn two() -> usize {
    2
}
fn yes() -> bool {
    true
}
fn default_intervals() -> usize {
    400
}
fn default_trials() -> usize {
    100
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}
fn zero_preset() -> Preset {
    Preset::Zero
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let p = &self.problem;
        if p.n_modes == 0 {
            return Err(CliError::Config("n_modes must be positive".into()));
        }
        if !(p.alpha > 1.0 && p.alpha < 2.0) {
            return Err(CliError::Config(format!("alpha must lie in (1, 2), got {}", p.alpha)));
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be positive".into()));
        }
        Ok(())
    }

    /// FRACWAVE_SEED when set, otherwise the configured seed.
    pub fn effective_seed(&self) -> Result<u64, CliError> {
        match std::env::var("FRACWAVE_SEED") {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("FRACWAVE_SEED is not an integer: {s:?}"))),
            Err(_) => Ok(self.seed),
        }
    }

    pub fn eigensystem(&self) -> Result<Eigensystem, CliError> {
        let op = &self.problem.operator;
        Ok(Eigensystem::new(op.kind, op.length, self.problem.n_modes)?)
    }

    pub fn grid(&self) -> Result<TimeGrid, CliError> {
        let g = &self.problem.grid;
        Ok(TimeGrid::graded(self.problem.t_final, g.intervals, g.grading)?)
    }

    pub fn f(&self, es: &Eigensystem) -> Result<Option<CoefficientVector>, CliError> {
        Ok(match &self.data.f {
            Some(p) => Some(p.coefficients(es)?),
            None => None,
        })
    }

    /// The source described by `data.f` and `data.p` on the given grid.
    pub fn source(&self, es: &Eigensystem, grid: &TimeGrid) -> Result<Source, CliError> {
        Ok(match (self.f(es)?, &self.data.p) {
            (None, None) => Source::Zero,
            (Some(f), None) => Source::Constant(f),
            (Some(f), Some(p)) => Source::Separable { f, p: p.sample(grid)? },
            (None, Some(_)) => {
                return Err(CliError::Config("data.p needs a spatial profile data.f".into()))
            }
        })
    }

    /// Scenario on the configured grid with the given source.
    pub fn scenario(&self, with_source: bool) -> Result<Scenario, CliError> {
        let es = self.eigensystem()?;
        let grid = self.grid()?;
        let source = if with_source {
            self.source(&es, &grid)?
        } else {
            Source::Zero
        };
        let spec = ScenarioSpec {
            alpha: self.problem.alpha,
            gamma: self.problem.gamma,
            phi: self.data.phi.coefficients(&es)?,
            psi: self.data.psi.coefficients(&es)?,
            eigensystem: es,
            grid,
            source,
            tolerances: self.tolerances,
        };
        Ok(Scenario::new(spec)?)
    }

    pub fn functional(&self, es: &Eigensystem) -> Result<FunctionalSpec, CliError> {
        let ip2 = self
            .ip2
            .as_ref()
            .ok_or_else(|| CliError::Config("the ip2 command needs an ip2 block".into()))?;
        let n = es.n_modes();
        Ok(match &ip2.functional {
            FunctionalConfig::Mean => functional_coefficients(&FunctionalKind::Mean, es, n)?,
            FunctionalConfig::WeightX1mx => functional_coefficients(&FunctionalKind::WeightX1mx, es, n)?,
            FunctionalConfig::Coefficients { values } => {
                FunctionalSpec::new("coefficients", values.clone())?
            }
        })
    }

    pub fn probe_points(&self) -> Vec<f64> {
        if self.output.probe_points.is_empty() {
            vec![0.5 * self.problem.operator.length]
        } else {
            self.output.probe_points.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"problem": {"alpha": 1.5, "gamma": 1, "t_final": 1,
            "operator": {"kind": "dirichlet"}, "n_modes": 4, "extra": 1}}"#;
        assert!(serde_json::from_str::<RunConfig>(text).is_err());
    }

    #[test]
    fn defaults_are_filled_in() {
        let text = r#"{"problem": {"alpha": 1.5, "gamma": 1, "t_final": 1,
            "operator": {"kind": "neumann_shifted"}, "n_modes": 4}}"#;
        let cfg: RunConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.problem.grid.intervals, 400);
        assert!(cfg.verification);
        assert_eq!(cfg.tolerances, Tolerances::default());
        assert!(cfg.output.csv() && cfg.output.json());
    }

    #[test]
    fn profiles_evaluate_in_scaled_time() {
        let p = Profile::Polynomial {
            coefficients: vec![1.0, 2.0, 3.0],
        };
        assert_eq!(p.eval(1.0, 2.0), Some(1.0 + 1.0 + 0.75));
        let s = Profile::Sine {
            base: 1.0,
            amplitude: 0.5,
            frequency: 1.0,
        };
        assert!((s.eval(1.0, 2.0).unwrap() - 1.5).abs() < 1e-15);
    }
}
