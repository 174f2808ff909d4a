use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeName {
    BeEev,
    Bdf2Eev,
}

impl SchemeName {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemeName::BeEev => "be-eev",
            SchemeName::Bdf2Eev => "bdf2-eev",
        }
    }
}

impl fmt::Display for SchemeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "be-eev" | "be" | "bdf1-eev" => Ok(SchemeName::BeEev),
            "bdf2-eev" | "bdf2" | "bdf-2-eev" => Ok(SchemeName::Bdf2Eev),
            other => Err(Error::invalid(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Coefficients selecting one member of the linearized IMEX BDF family.
///
/// All coefficient arrays are indexed by history level: entry 0 multiplies
/// `u^n`, entry 1 multiplies `u^{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeDescriptor {
    pub name: SchemeName,
    /// Leading coefficient multiplying `u^{n+1}/Δt`.
    pub beta: f64,
    /// Extrapolation `U^n = Σ c_k u^{n-k}`.
    pub extrap_coeffs: Vec<f64>,
    /// Fluctuation before mean subtraction.
    pub fluct_coeffs: Vec<f64>,
    /// Lagged time-derivative terms of the right-hand side, in units of `1/Δt`.
    pub lag_rhs_coeffs: Vec<f64>,
    pub history_depth: usize,
}

impl SchemeDescriptor {
    pub fn be_eev() -> Self {
        SchemeDescriptor {
            name: SchemeName::BeEev,
            beta: 1.0,
            extrap_coeffs: vec![1.0],
            fluct_coeffs: vec![1.0],
            lag_rhs_coeffs: vec![1.0],
            history_depth: 1,
        }
    }

    pub fn bdf2_eev() -> Self {
        SchemeDescriptor {
            name: SchemeName::Bdf2Eev,
            beta: 1.5,
            extrap_coeffs: vec![2.0, -1.0],
            fluct_coeffs: vec![2.0, -1.0],
            lag_rhs_coeffs: vec![2.0, -0.5],
            history_depth: 2,
        }
    }

    pub fn from_name(name: SchemeName) -> Self {
        match name {
            SchemeName::BeEev => Self::be_eev(),
            SchemeName::Bdf2Eev => Self::bdf2_eev(),
        }
    }

    /// Smallest EEV calibration constant covered by the stability theorem.
    pub fn min_stable_mu(&self) -> f64 {
        match self.name {
            SchemeName::BeEev => 0.5,
            SchemeName::Bdf2Eev => 1.0,
        }
    }
}

/// Time-stepping parameters of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub dt: f64,
    /// Grad-div stabilization parameter.
    pub gamma: f64,
    /// EEV calibration constant.
    pub mu: f64,
    pub t_end: f64,
}

impl StepParams {
    pub fn new(dt: f64, gamma: f64, mu: f64, t_end: f64) -> Result<Self> {
        if !(dt > 0.0 && t_end > 0.0) {
            return Err(Error::invalid("dt and T must be positive"));
        }
        if !(gamma >= 0.0 && mu >= 0.0) {
            return Err(Error::invalid("gamma and mu must be non-negative"));
        }
        Ok(StepParams { dt, gamma, mu, t_end })
    }

    /// Number of steps `M = round(T/Δt)`.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Logs a warning when `mu` is below the stability hypothesis.
    pub fn check_hypotheses(&self, descriptor: &SchemeDescriptor) -> bool {
        let ok = self.mu >= descriptor.min_stable_mu();
        if !ok {
            log::warn!(
                "mu = {} is below {} required by the {} stability bound",
                self.mu,
                descriptor.min_stable_mu(),
                descriptor.name
            );
        }
        ok
    }
}
