//! Perturbation coefficients, Karhunen-Loève viscosity, and Clenshaw-Curtis
//! sparse grids for stochastic collocation.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationMode {
    /// `k_j = (−1)^{j+1} 4⌈j/2⌉/J`.
    Deterministic,
    /// `k_j ~ U(−1, 1)`, seeded.
    Uniform,
}

impl FromStr for PerturbationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deterministic" | "deterministic_kj" => Ok(PerturbationMode::Deterministic),
            "uniform" | "uniform_kj" => Ok(PerturbationMode::Uniform),
            _ => Err(Error::invalid(format!("unknown perturbation mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    pub epsilon: f64,
    pub mode: PerturbationMode,
    pub n: usize,
    pub seed: u64,
}

/// Coefficients `k_1..k_J` of the perturbed data `(1 + k_j ε)`.
pub fn perturbation_coeffs(spec: &PerturbationSpec) -> Result<Vec<f64>> {
    if spec.n == 0 {
        return Err(Error::invalid("ensemble size must be at least 1"));
    }
    let n = spec.n as f64;
    Ok(match spec.mode {
        PerturbationMode::Deterministic => (1..=spec.n)
            .map(|j| {
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                sign * 4.0 * j.div_ceil(2) as f64 / n
            })
            .collect(),
        PerturbationMode::Uniform => {
            let dist = Uniform::new(-1.0, 1.0).expect("valid range");
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            (0..spec.n).map(|_| dist.sample(&mut rng)).collect()
        }
    })
}

/// Truncated Karhunen-Loève expansion of a random viscosity on `(−1,1)²`
/// with five uniform parameters on `[−√3, √3]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlViscosity {
    pub expected_re: f64,
    pub correlation_length: f64,
}

pub const KL_DIMENSION: usize = 5;

impl KlViscosity {
    pub fn new(expected_re: f64, correlation_length: f64) -> Result<Self> {
        if !(expected_re > 0.0 && correlation_length > 0.0) {
            return Err(Error::invalid("E[Re] and correlation length must be positive"));
        }
        Ok(KlViscosity { expected_re, correlation_length })
    }

    pub fn mean(&self) -> f64 {
        2.0 / self.expected_re
    }

    /// `sqrt(ξ_i) = (√π l)^{1/2} exp(−(iπl)²/8)`.
    pub fn eigen_root(&self, i: usize) -> f64 {
        let l = self.correlation_length;
        (PI.sqrt() * l).sqrt() * (-(i as f64 * PI * l).powi(2) / 8.0).exp()
    }

    pub fn eval(&self, x: [f64; 2], y: &[f64]) -> Result<f64> {
        if y.len() != KL_DIMENSION {
            return Err(Error::DimensionMismatch { expected: KL_DIMENSION, found: y.len() });
        }
        let bound = 3f64.sqrt() * (1.0 + 1e-12);
        if y.iter().any(|v| !(v.abs() <= bound)) {
            return Err(Error::invalid(format!("parameter {y:?} outside [-sqrt(3), sqrt(3)]^5")));
        }
        let l = self.correlation_length;
        let mut s = 1.0 + (PI.sqrt() * l / 2.0).sqrt() * y[0];
        for i in 1..=2 {
            let a = i as f64 * PI / 2.0;
            s += self.eigen_root(i)
                * ((a * x[0]).sin() * (a * x[1]).sin() * y[2 * i - 1] + (a * x[0]).cos() * (a * x[1]).cos() * y[2 * i]);
        }
        Ok(self.mean() * s)
    }
}

/// Nested Clenshaw-Curtis rule on `[−1,1]` normalized to the uniform
/// probability density. Level `ℓ` has 1, 3, 5, 9 points for ℓ = 0..3.
pub fn clenshaw_curtis_1d(level: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if level > MAX_CC_LEVEL {
        return Err(Error::invalid(format!("Clenshaw-Curtis level {level} not supported (max {MAX_CC_LEVEL})")));
    }
    let m = cc_points(level);
    if m == 1 {
        return Ok((vec![0.0], vec![1.0]));
    }
    let n = m - 1;
    let stride = (cc_points(MAX_CC_LEVEL) - 1) / n;
    let nodes = (0..m).map(|i| cc_node(i * stride)).collect();
    let weights = (0..m)
        .map(|i| {
            let theta = PI * i as f64 / n as f64;
            let c = if i == 0 || i == n { 1.0 } else { 2.0 };
            let s: f64 = (1..=n / 2)
                .map(|k| {
                    let b = if 2 * k == n { 1.0 } else { 2.0 };
                    b / (4.0 * (k * k) as f64 - 1.0) * (2.0 * k as f64 * theta).cos()
                })
                .sum();
            0.5 * c / n as f64 * (1.0 - s)
        })
        .collect();
    Ok((nodes, weights))
}

const MAX_CC_LEVEL: usize = 3;

fn cc_points(level: usize) -> usize {
    if level == 0 {
        1
    } else {
        (1 << level) + 1
    }
}

/// Coordinate of index `k` on the finest nested grid, exact at −1, 0, 1.
fn cc_node(k: usize) -> f64 {
    let n = cc_points(MAX_CC_LEVEL) - 1;
    match 2 * k {
        0 => -1.0,
        v if v == n => 0.0,
        v if v == 2 * n => 1.0,
        _ => -(PI * k as f64 / n as f64).cos(),
    }
}

/// Sparse-grid quadrature for the uniform density on `[−√3, √3]^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGrid {
    pub dimension: usize,
    pub level: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn multi_indices(dim: usize, sum: usize) -> Vec<Vec<usize>> {
    if dim == 1 {
        return vec![vec![sum]];
    }
    (0..=sum)
        .flat_map(|first| {
            multi_indices(dim - 1, sum - first).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// Smolyak combination of nested Clenshaw-Curtis rules, with duplicate
/// nodes merged.
pub fn smolyak_grid(dimension: usize, level: usize) -> Result<SparseGrid> {
    if dimension == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if level > 2 {
        return Err(Error::invalid(format!("sparse grid level {level} not supported (max 2)")));
    }
    let fine = cc_points(MAX_CC_LEVEL) - 1;
    let rules: Vec<(Vec<usize>, Vec<f64>)> = (0..=level)
        .map(|l| {
            let (_, w) = clenshaw_curtis_1d(l)?;
            let m = cc_points(l);
            let keys = if m == 1 { vec![fine / 2] } else { (0..m).map(|i| i * fine / (m - 1)).collect() };
            Ok((keys, w))
        })
        .collect::<Result<_>>()?;
    let mut merged: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let lo = (level + 1).saturating_sub(dimension);
    for total in lo..=level {
        let coeff = binomial(dimension - 1, level - total) * if (level - total) % 2 == 0 { 1.0 } else { -1.0 };
        for idx in multi_indices(dimension, total) {
            let mut stack: Vec<(Vec<usize>, f64)> = vec![(Vec::new(), coeff)];
            for &l in &idx {
                let (keys, w) = &rules[l];
                stack = stack
                    .into_iter()
                    .flat_map(|(key, wt)| {
                        keys.iter().zip(w).map(move |(k, wk)| {
                            let mut key = key.clone();
                            key.push(*k);
                            (key, wt * wk)
                        })
                    })
                    .collect();
            }
            for (key, w) in stack {
                *merged.entry(key).or_insert(0.0) += w;
            }
        }
    }
    let scale = 3f64.sqrt();
    let (nodes, weights) = merged
        .into_iter()
        .map(|(key, w)| (key.iter().map(|&k| scale * cc_node(k)).collect::<Vec<_>>(), w))
        .unzip();
    Ok(SparseGrid { dimension, level, nodes, weights })
}

impl SparseGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ_j w_j f(y_j)`.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(y, w)| w * f(y)).sum()
    }

    /// One row per node: coordinates then weight.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let cols: Vec<String> = (1..=self.dimension).map(|i| format!("y{i}")).collect();
        let _ = writeln!(s, "{},weight", cols.join(","));
        for (y, w) in self.nodes.iter().zip(&self.weights) {
            let row: Vec<String> = y.iter().map(|v| format!("{v:.17e}")).collect();
            let _ = writeln!(s, "{},{w:.17e}", row.join(","));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// `Σ_j w_j ψ_j` for scalar quantities.
pub fn weighted_expectation(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::invalid(format!("{} values but {} weights", values.len(), weights.len())));
    }
    Ok(values.iter().zip(weights).map(|(v, w)| v * w).sum())
}

/// Per-realization time series of a quantity of interest with the weights
/// used to average them.
#[derive(Debug, Clone, PartialEq)]
pub struct QoiSeries {
    /// `values[j][n]`.
    pub values: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl QoiSeries {
    /// Equal weights `1/J`.
    pub fn uniform(values: Vec<Vec<f64>>) -> Self {
        let w = 1.0 / values.len() as f64;
        let n = values.len();
        QoiSeries { values, weights: vec![w; n] }
    }

    /// Weighted mean at every time sample.
    pub fn expectation(&self) -> Result<Vec<f64>> {
        if self.values.len() != self.weights.len() {
            return Err(Error::invalid(format!(
                "{} series but {} weights",
                self.values.len(),
                self.weights.len()
            )));
        }
        let len = self.values.first().map_or(0, Vec::len);
        if self.values.iter().any(|v| v.len() != len) {
            return Err(Error::invalid("series lengths differ"));
        }
        Ok((0..len)
            .map(|n| self.values.iter().zip(&self.weights).map(|(v, w)| w * v[n]).sum())
            .collect())
    }
}
