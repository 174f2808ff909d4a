use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scheme::{Bootstrap, SchemeName};
use crate::stochastics::PerturbationMode;
use crate::verification::NormKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    ConvergeSpace,
    ConvergeTime,
    StepChannel,
    CavityScm,
    GridDump,
    TimingCompare,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::ConvergeSpace,
        Experiment::ConvergeTime,
        Experiment::StepChannel,
        Experiment::CavityScm,
        Experiment::GridDump,
        Experiment::TimingCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::ConvergeSpace => "converge_space",
            Experiment::ConvergeTime => "converge_time",
            Experiment::StepChannel => "step_channel",
            Experiment::CavityScm => "cavity_scm",
            Experiment::GridDump => "grid_dump",
            Experiment::TimingCompare => "timing_compare",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == norm)
            .ok_or_else(|| Error::config("experiment", format!("unknown experiment '{s}'")))
    }
}

/// Parsed flat `key = value` file. Lines starting with `#` are comments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    pub entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}", i + 1), format!("expected key = value, got '{line}'")))?;
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(KeyValues { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(assignment, "override must have the form key=value"))?;
        self.entries.insert(k.trim().to_string(), v.trim().to_string());
        Ok(())
    }
}

/// All parameters of one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub scheme: SchemeName,
    pub expected_nu: f64,
    pub nu_spread: f64,
    pub expected_re: f64,
    pub correlation_length: f64,
    pub epsilon: f64,
    pub perturbation: PerturbationMode,
    pub gamma: f64,
    /// Grad-div sweep; empty means a single run with `gamma`.
    pub gammas: Vec<f64>,
    pub mu: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Cells per side (unit square, cavity) or per unit length (channel).
    pub mesh_level: usize,
    /// Cells per side for each spatial refinement.
    pub levels: Vec<usize>,
    /// Step counts `T/Δt` for each temporal refinement.
    pub steps: Vec<usize>,
    pub ensemble_size: usize,
    pub seed: u64,
    pub norm: NormKind,
    pub bootstrap: Bootstrap,
    pub negate_inflow: bool,
    pub grid_dimension: usize,
    pub grid_level: usize,
    pub vtk_times: Vec<f64>,
    pub output_dir: PathBuf,
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_value(key, s.trim())).collect()
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::config(key, format!("cannot parse '{v}'")))
}

fn fmt_list<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn norm_name(n: NormKind) -> &'static str {
    match n {
        NormKind::Full => "full",
        NormKind::Seminorm => "seminorm",
    }
}

fn bootstrap_name(b: Bootstrap) -> &'static str {
    match b {
        Bootstrap::Exact => "exact",
        Bootstrap::BackwardEuler => "backward_euler",
    }
}

fn perturbation_name(p: PerturbationMode) -> &'static str {
    match p {
        PerturbationMode::Deterministic => "deterministic",
        PerturbationMode::Uniform => "uniform",
    }
}

impl ExperimentConfig {
    /// Desk-scale defaults of an experiment.
    pub fn defaults(experiment: Experiment) -> Self {
        let base = ExperimentConfig {
            experiment,
            scheme: SchemeName::BeEev,
            expected_nu: 1e-3,
            nu_spread: 0.1,
            expected_re: 2e6,
            correlation_length: 0.01,
            epsilon: 1e-3,
            perturbation: PerturbationMode::Deterministic,
            gamma: 0.0,
            gammas: Vec::new(),
            mu: 1.0,
            dt: 0.001 / 8.0,
            t_end: 0.001,
            mesh_level: 2,
            levels: Vec::new(),
            steps: Vec::new(),
            ensemble_size: 20,
            seed: 2024,
            norm: NormKind::Full,
            bootstrap: Bootstrap::Exact,
            negate_inflow: false,
            grid_dimension: 5,
            grid_level: 1,
            vtk_times: Vec::new(),
            output_dir: PathBuf::from("output"),
        };
        match experiment {
            Experiment::ConvergeSpace => ExperimentConfig { gamma: 2.99e7, levels: vec![2, 4, 8, 16], ..base },
            Experiment::ConvergeTime => ExperimentConfig {
                gamma: 1e5,
                t_end: 1.0,
                dt: 0.25,
                mesh_level: 32,
                steps: vec![4, 8, 16, 32, 64],
                ..base
            },
            Experiment::StepChannel => ExperimentConfig {
                scheme: SchemeName::Bdf2Eev,
                expected_nu: 1e-4,
                perturbation: PerturbationMode::Uniform,
                gamma: 10.0,
                dt: 1.0,
                t_end: 100.0,
                mesh_level: 2,
                bootstrap: Bootstrap::BackwardEuler,
                ..base
            },
            Experiment::CavityScm => ExperimentConfig {
                scheme: SchemeName::Bdf2Eev,
                epsilon: 0.01,
                perturbation: PerturbationMode::Uniform,
                gamma: 1000.0,
                dt: 0.5,
                t_end: 50.0,
                mesh_level: 16,
                ensemble_size: 11,
                bootstrap: Bootstrap::BackwardEuler,
                ..base
            },
            Experiment::GridDump => base,
            Experiment::TimingCompare => ExperimentConfig {
                expected_nu: 1e-4,
                perturbation: PerturbationMode::Uniform,
                gamma: 10.0,
                dt: 0.08,
                t_end: 0.16,
                mesh_level: 2,
                bootstrap: Bootstrap::BackwardEuler,
                ..base
            },
        }
    }

    /// Builds a config from parsed key/values; every key must be known.
    pub fn from_key_values(kv: &KeyValues, fallback: Option<Experiment>) -> Result<Self> {
        let experiment = match (kv.entries.get("experiment"), fallback) {
            (Some(v), Some(cmd)) => {
                let named: Experiment = v.parse()?;
                if named != cmd {
                    return Err(Error::config("experiment", format!("config is for {named}, command runs {cmd}")));
                }
                named
            }
            (Some(v), None) => v.parse()?,
            (None, Some(cmd)) => cmd,
            (None, None) => return Err(Error::config("experiment", "missing")),
        };
        let mut c = Self::defaults(experiment);
        for (k, v) in &kv.entries {
            c.apply(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    fn apply(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "experiment" => self.experiment = v.parse()?,
            "scheme" => self.scheme = v.parse().map_err(|_| Error::config(key, format!("unknown scheme '{v}'")))?,
            "expected_nu" => self.expected_nu = parse_value(key, v)?,
            "nu_spread" => self.nu_spread = parse_value(key, v)?,
            "expected_re" => self.expected_re = parse_value(key, v)?,
            "correlation_length" => self.correlation_length = parse_value(key, v)?,
            "epsilon" => self.epsilon = parse_value(key, v)?,
            "perturbation" => {
                self.perturbation = v.parse().map_err(|_| Error::config(key, format!("unknown mode '{v}'")))?
            }
            "gamma" => self.gamma = parse_value(key, v)?,
            "gammas" => self.gammas = list(key, v)?,
            "mu" => self.mu = parse_value(key, v)?,
            "dt" => self.dt = parse_value(key, v)?,
            "t_end" => self.t_end = parse_value(key, v)?,
            "mesh_level" => self.mesh_level = parse_value(key, v)?,
            "levels" => self.levels = list(key, v)?,
            "steps" => self.steps = list(key, v)?,
            "ensemble_size" => self.ensemble_size = parse_value(key, v)?,
            "seed" => self.seed = parse_value(key, v)?,
            "norm" => {
                self.norm = match v {
                    "full" => NormKind::Full,
                    "seminorm" => NormKind::Seminorm,
                    _ => return Err(Error::config(key, format!("unknown norm '{v}'"))),
                }
            }
            "bootstrap" => {
                self.bootstrap = match v {
                    "exact" => Bootstrap::Exact,
                    "backward_euler" | "be" => Bootstrap::BackwardEuler,
                    _ => return Err(Error::config(key, format!("unknown bootstrap '{v}'"))),
                }
            }
            "negate_inflow" => self.negate_inflow = parse_value(key, v)?,
            "grid_dimension" => self.grid_dimension = parse_value(key, v)?,
            "grid_level" => self.grid_level = parse_value(key, v)?,
            "vtk_times" => self.vtk_times = list(key, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            _ => return Err(Error::config(key, "unknown configuration key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("expected_nu", self.expected_nu),
            ("expected_re", self.expected_re),
            ("correlation_length", self.correlation_length),
            ("dt", self.dt),
            ("t_end", self.t_end),
        ];
        for (k, v) in positive {
            if !(v > 0.0) {
                return Err(Error::config(k, "must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.nu_spread) {
            return Err(Error::config("nu_spread", "must lie in [0, 1)"));
        }
        if self.ensemble_size == 0 {
            return Err(Error::config("ensemble_size", "must be at least 1"));
        }
        if self.mesh_level == 0 {
            return Err(Error::config("mesh_level", "must be at least 1"));
        }
        if self.gamma < 0.0 || self.gammas.iter().any(|&g| g < 0.0) {
            return Err(Error::config("gamma", "must be non-negative"));
        }
        Ok(())
    }

    /// Every field as `key = value` lines; parsing the result reproduces
    /// this config.
    pub fn to_key_values(&self) -> String {
        let rows: Vec<(&str, String)> = vec![
            ("experiment", self.experiment.to_string()),
            ("scheme", self.scheme.to_string()),
            ("expected_nu", self.expected_nu.to_string()),
            ("nu_spread", self.nu_spread.to_string()),
            ("expected_re", self.expected_re.to_string()),
            ("correlation_length", self.correlation_length.to_string()),
            ("epsilon", self.epsilon.to_string()),
            ("perturbation", perturbation_name(self.perturbation).to_string()),
            ("gamma", self.gamma.to_string()),
            ("gammas", fmt_list(&self.gammas)),
            ("mu", self.mu.to_string()),
            ("dt", self.dt.to_string()),
            ("t_end", self.t_end.to_string()),
            ("mesh_level", self.mesh_level.to_string()),
            ("levels", fmt_list(&self.levels)),
            ("steps", fmt_list(&self.steps)),
            ("ensemble_size", self.ensemble_size.to_string()),
            ("seed", self.seed.to_string()),
            ("norm", norm_name(self.norm).to_string()),
            ("bootstrap", bootstrap_name(self.bootstrap).to_string()),
            ("negate_inflow", self.negate_inflow.to_string()),
            ("grid_dimension", self.grid_dimension.to_string()),
            ("grid_level", self.grid_level.to_string()),
            ("vtk_times", fmt_list(&self.vtk_times)),
            ("output_dir", self.output_dir.display().to_string()),
        ];
        rows.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_with_comments_and_overrides() {
        let mut kv = KeyValues::parse("# run\nexperiment = converge_space\n gamma = 1e3 # inline\n\nlevels = 2,4\n").unwrap();
        kv.set("seed=7").unwrap();
        let c = ExperimentConfig::from_key_values(&kv, None).unwrap();
        assert_eq!(c.gamma, 1e3);
        assert_eq!(c.levels, vec![2, 4]);
        assert_eq!(c.seed, 7);
    }

    #[test]
    fn unknown_key_is_named() {
        let kv = KeyValues::parse("experiment = step_channel\ngama = 3\n").unwrap();
        match ExperimentConfig::from_key_values(&kv, None) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "gama"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(KeyValues::parse("no equals sign").is_err());
    }

    #[test]
    fn metadata_round_trip() {
        for e in Experiment::ALL {
            let mut c = ExperimentConfig::defaults(e);
            c.gammas = vec![1.0, 10.0];
            c.vtk_times = vec![0.5];
            let back = ExperimentConfig::from_key_values(&KeyValues::parse(&c.to_key_values()).unwrap(), None).unwrap();
            assert_eq!(back, c);
        }
    }
}
