//! Run configuration. One TOML file per run; every section has defaults, so
//! a config only needs `experiment` (and `seed` for randomized runs).

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

pub const SCHEMA: &str = include_str!("../schema.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    FlowCheck,
    LambdaDesign,
    EtaSweep,
    Heating,
    ChernDiagram,
    Quench,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::FlowCheck,
        Experiment::LambdaDesign,
        Experiment::EtaSweep,
        Experiment::Heating,
        Experiment::ChernDiagram,
        Experiment::Quench,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::FlowCheck => "flow-check",
            Experiment::LambdaDesign => "lambda-design",
            Experiment::EtaSweep => "eta-sweep",
            Experiment::Heating => "heating",
            Experiment::ChernDiagram => "chern-diagram",
            Experiment::Quench => "quench",
        }
    }

    pub fn randomized(self) -> bool {
        matches!(self, Experiment::FlowCheck | Experiment::EtaSweep | Experiment::Heating)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: Option<u64>,
    /// Relative paths resolve against the output root.
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default = "one")]
    pub threads: usize,
    #[serde(default)]
    pub flow_check: FlowCheckConfig,
    #[serde(default)]
    pub lambda_design: LambdaDesignConfig,
    #[serde(default)]
    pub eta_sweep: SweepConfig,
    #[serde(default)]
    pub heating: HeatingConfig,
    #[serde(default)]
    pub chern: ChernConfig,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowCheckConfig {
    pub instances: usize,
    pub dim: usize,
    pub gamma: f64,
    /// Drawn per instance away from low-order rationals when absent.
    pub eta: Option<f64>,
    pub omega1: f64,
    pub s_max: f64,
    pub rtol: f64,
}

impl Default for FlowCheckConfig {
    fn default() -> Self {
        FlowCheckConfig { instances: 1, dim: 3, gamma: 0.02, eta: None, omega1: 1.0, s_max: 400.0, rtol: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LambdaDesignConfig {
    pub eta: f64,
    pub omega1: f64,
    pub p_max: i32,
    pub amplitude: f64,
    pub width_fraction: f64,
    pub samples: usize,
    pub max_iterations: usize,
    pub rel_tol: f64,
}

impl Default for LambdaDesignConfig {
    fn default() -> Self {
        LambdaDesignConfig {
            eta: 1.0 / 7f64.sqrt(),
            omega1: 100.0,
            p_max: 3,
            amplitude: 1.0,
            width_fraction: 0.125,
            samples: 256,
            max_iterations: 500,
            rel_tol: 1e-14,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    SpinChain,
    FermiHubbard,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub kind: ModelName,
    pub l: usize,
    pub n_up: usize,
    pub n_down: usize,
    pub m1: i32,
    pub m2: i32,
    pub omega1: f64,
    pub propagation_tol: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: ModelName::SpinChain,
            l: 8,
            n_up: 2,
            n_down: 3,
            m1: 3,
            m2: 2,
            omega1: 1.0,
            propagation_tol: 1e-7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub model: ModelConfig,
    pub gammas: Vec<f64>,
    /// Explicit grid; when empty, `eta_points` cell midpoints of
    /// `[eta_min, eta_max]`.
    pub etas: Vec<f64>,
    pub eta_min: f64,
    pub eta_max: f64,
    pub eta_points: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            model: ModelConfig::default(),
            gammas: vec![0.02],
            etas: Vec::new(),
            eta_min: 0.05,
            eta_max: 1.1,
            eta_points: 60,
        }
    }
}

impl SweepConfig {
    pub fn eta_grid(&self) -> Vec<f64> {
        if !self.etas.is_empty() {
            return self.etas.clone();
        }
        let n = self.eta_points as f64;
        (0..self.eta_points)
            .map(|k| self.eta_min + (self.eta_max - self.eta_min) * (k as f64 + 0.5) / n)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatingConfig {
    pub model: ModelConfig,
    pub gamma: f64,
    pub eta: f64,
    pub periods: usize,
}

impl Default for HeatingConfig {
    fn default() -> Self {
        HeatingConfig {
            model: ModelConfig { m2: 1, ..ModelConfig::default() },
            gamma: 0.06,
            eta: 1.0 / 7f64.sqrt(),
            periods: 19,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChernConfig {
    pub omega1: f64,
    pub q: Vec<f64>,
    pub delta: Vec<f64>,
    pub delta_prime: Vec<f64>,
    /// Sublattice onsite energy.
    pub onsite: f64,
    /// Decay rate of the tunnelling quench.
    pub quench_rate: f64,
    /// Solve for equal effective nearest-neighbour tunnelling first.
    pub fine_tune: bool,
    pub fine_tune_tol: f64,
    pub n_cut: i32,
    pub grid_points: usize,
    /// Largest `J0^2 / (w1 onsite)` on the diagram grid.
    pub coupling_max: f64,
    /// Quench start; defaults to three times the phase-boundary scale.
    pub j0: Option<f64>,
    pub time_step: f64,
    pub time_points: usize,
}

impl Default for ChernConfig {
    fn default() -> Self {
        ChernConfig {
            omega1: 10.0,
            q: vec![1.2, 0.7, 0.2],
            delta: vec![0.0, 2.0, 1.0],
            delta_prime: vec![PI / 2.0, 0.2, 2.5],
            onsite: 0.5,
            quench_rate: 0.2,
            fine_tune: true,
            fine_tune_tol: 1e-10,
            n_cut: 12,
            grid_points: 50,
            coupling_max: 1.5,
            j0: None,
            time_step: 0.2,
            time_points: 100,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn validate(&self) -> Result<(), String> {
        let mut errs = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                errs.push(msg.to_string());
            }
        };
        let pos = |x: f64| x > 0.0 && x.is_finite();
        need(self.threads >= 1, "threads must be at least 1");
        if self.experiment.randomized() {
            need(self.seed.is_some(), "seed is required for randomized experiments");
        }
        match self.experiment {
            Experiment::FlowCheck => {
                let c = &self.flow_check;
                need(c.instances >= 1, "flow_check.instances must be at least 1");
                need(c.dim >= 1, "flow_check.dim must be at least 1");
                need(pos(c.gamma), "flow_check.gamma must be positive");
                need(c.eta.is_none_or(|e| pos(e)), "flow_check.eta must be positive");
                need(pos(c.omega1), "flow_check.omega1 must be positive");
                need(pos(c.s_max), "flow_check.s_max must be positive");
                need(pos(c.rtol), "flow_check.rtol must be positive");
            }
            Experiment::LambdaDesign => {
                let c = &self.lambda_design;
                need(pos(c.eta), "lambda_design.eta must be positive");
                need(pos(c.omega1), "lambda_design.omega1 must be positive");
                need(c.p_max >= 0, "lambda_design.p_max must be nonnegative");
                need(pos(c.amplitude), "lambda_design.amplitude must be positive");
                need(pos(c.width_fraction), "lambda_design.width_fraction must be positive");
                need(c.samples >= 2 * c.p_max.max(0) as usize + 2, "lambda_design.samples too small for p_max");
                need(c.max_iterations >= 1, "lambda_design.max_iterations must be at least 1");
                need(pos(c.rel_tol), "lambda_design.rel_tol must be positive");
            }
            Experiment::EtaSweep => {
                let c = &self.eta_sweep;
                validate_model(&c.model, "eta_sweep", &mut need);
                need(!c.gammas.is_empty() && c.gammas.iter().all(|g| *g >= 0.0 && g.is_finite()), "eta_sweep.gammas must be nonnegative");
                if c.etas.is_empty() {
                    need(c.eta_points >= 1, "eta_sweep.eta_points must be at least 1");
                    need(c.eta_min >= 0.0 && c.eta_max > c.eta_min, "eta_sweep needs 0 <= eta_min < eta_max");
                } else {
                    need(c.etas.iter().all(|e| *e >= 0.0 && e.is_finite()), "eta_sweep.etas must be nonnegative");
                }
            }
            Experiment::Heating => {
                let c = &self.heating;
                validate_model(&c.model, "heating", &mut need);
                need(c.gamma >= 0.0 && c.gamma.is_finite(), "heating.gamma must be nonnegative");
                need(c.eta >= 0.0 && c.eta.is_finite(), "heating.eta must be nonnegative");
                need(c.periods >= 1, "heating.periods must be at least 1");
            }
            Experiment::ChernDiagram | Experiment::Quench => {
                let c = &self.chern;
                need(pos(c.omega1), "chern.omega1 must be positive");
                need(
                    c.q.len() == c.delta.len() && c.q.len() == c.delta_prime.len(),
                    "chern.q, chern.delta and chern.delta_prime need equal lengths",
                );
                need(!c.q.is_empty(), "chern needs at least one shaking tone");
                need(!c.fine_tune || c.q.len() == 3, "chern.fine_tune needs exactly three tones");
                need(c.onsite != 0.0 && c.onsite.is_finite(), "chern.onsite must be nonzero");
                need(c.quench_rate >= 0.0 && c.quench_rate.is_finite(), "chern.quench_rate must be nonnegative");
                need(pos(c.fine_tune_tol), "chern.fine_tune_tol must be positive");
                need(c.n_cut >= 1, "chern.n_cut must be at least 1");
                need(c.grid_points >= 1, "chern.grid_points must be at least 1");
                need(pos(c.coupling_max), "chern.coupling_max must be positive");
                need(c.j0.is_none_or(pos), "chern.j0 must be positive");
                need(pos(c.time_step), "chern.time_step must be positive");
                need(c.time_points >= 1, "chern.time_points must be at least 1");
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs.join("; "))
        }
    }

    pub fn output_dir(&self) -> String {
        self.output_dir.clone().unwrap_or_else(|| self.experiment.name().to_string())
    }
}

fn validate_model(m: &ModelConfig, section: &str, need: &mut impl FnMut(bool, &str)) {
    need(m.l >= 2, &format!("{section}.l must be at least 2"));
    need(m.m1 >= 0 && m.m2 >= 0, &format!("{section}.m1 and m2 must be nonnegative"));
    need(m.omega1 > 0.0 && m.omega1.is_finite(), &format!("{section}.omega1 must be positive"));
    need(m.propagation_tol > 0.0, &format!("{section}.propagation_tol must be positive"));
    if m.kind == ModelName::FermiHubbard {
        need(m.n_up <= m.l && m.n_down <= m.l, &format!("{section}: more fermions than sites"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_parses_and_validates_for_every_experiment() {
        let base = RunConfig::parse(SCHEMA).unwrap();
        for e in Experiment::ALL {
            let c = RunConfig { experiment: e, ..base.clone() };
            c.validate().unwrap();
        }
    }

    #[test]
    fn schema_lists_the_defaults() {
        let parsed = RunConfig::parse(SCHEMA).unwrap();
        assert_eq!(parsed.flow_check, FlowCheckConfig { eta: parsed.flow_check.eta, ..Default::default() });
        assert_eq!(parsed.lambda_design.omega1, LambdaDesignConfig::default().omega1);
        assert_eq!(parsed.eta_sweep, SweepConfig::default());
        assert_eq!(parsed.heating, HeatingConfig::default());
        assert_eq!(parsed.chern, ChernConfig::default());
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::parse("experiment = \"quench\"").unwrap();
        assert_eq!(c.chern, ChernConfig::default());
        assert_eq!(c.threads, 1);
        assert_eq!(c.output_dir(), "quench");
        c.validate().unwrap();
    }

    #[test]
    fn randomized_runs_need_a_seed() {
        let c = RunConfig::parse("experiment = \"eta-sweep\"").unwrap();
        assert!(c.validate().unwrap_err().contains("seed"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("experiment = \"heating\"\nseed = 1\n[heating]\ngama = 0.1").is_err());
        assert!(RunConfig::parse("experiment = \"nope\"").is_err());
    }

    #[test]
    fn eta_grid_uses_cell_midpoints() {
        let s = SweepConfig { eta_min: 0.0, eta_max: 1.0, eta_points: 4, ..SweepConfig::default() };
        assert_eq!(s.eta_grid(), vec![0.125, 0.375, 0.625, 0.875]);
        let e = SweepConfig { etas: vec![0.3], ..SweepConfig::default() };
        assert_eq!(e.eta_grid(), vec![0.3]);
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
    }
}
