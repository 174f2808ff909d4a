//! Realization state and the ensemble statistics feeding the scheme.

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fem::{FieldCoefficients, TaylorHoodSpace};
use crate::scheme::SchemeDescriptor;

/// Velocity histories and pressures of all realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    /// `levels[k][j]` is the velocity of realization `j` at time level `n - k`.
    pub levels: Vec<Vec<FieldCoefficients>>,
    pub pressures: Vec<FieldCoefficients>,
    pub time: f64,
    pub step: usize,
}

impl EnsembleState {
    /// State with a single history level.
    pub fn new(velocities: Vec<FieldCoefficients>, pressures: Vec<FieldCoefficients>, time: f64) -> Result<Self> {
        if velocities.is_empty() {
            return Err(Error::InvalidState("empty ensemble".into()));
        }
        if pressures.len() != velocities.len() {
            return Err(Error::DimensionMismatch { expected: velocities.len(), found: pressures.len() });
        }
        Ok(EnsembleState { levels: vec![velocities], pressures, time, step: 0 })
    }

    pub fn n_realizations(&self) -> usize {
        self.levels.first().map_or(0, Vec::len)
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn current(&self, j: usize) -> &FieldCoefficients {
        &self.levels[0][j]
    }

    /// Pushes a new time level, keeping at most `depth` levels.
    pub fn push_level(&mut self, velocities: Vec<FieldCoefficients>, pressures: Vec<FieldCoefficients>, time: f64, depth: usize) {
        self.levels.insert(0, velocities);
        self.levels.truncate(depth.max(1));
        self.pressures = pressures;
        self.time = time;
        self.step += 1;
    }

    fn require(&self, depth: usize) -> Result<()> {
        if self.n_realizations() == 0 {
            return Err(Error::InvalidState("empty ensemble".into()));
        }
        if self.depth() < depth {
            return Err(Error::InvalidState(format!(
                "scheme needs {depth} history levels, state has {}",
                self.depth()
            )));
        }
        Ok(())
    }

    fn combination(&self, j: usize, coeffs: &[f64]) -> FieldCoefficients {
        let terms: Vec<(f64, &FieldCoefficients)> =
            coeffs.iter().enumerate().map(|(k, &c)| (c, &self.levels[k][j])).collect();
        FieldCoefficients::combine(&terms)
    }

    /// Extrapolated velocity `U_j^n`.
    pub fn extrapolation(&self, j: usize, descriptor: &SchemeDescriptor) -> Result<FieldCoefficients> {
        self.require(descriptor.history_depth)?;
        Ok(self.combination(j, &descriptor.extrap_coeffs))
    }

    /// `(1/J) Σ_j U_j^n`.
    pub fn ensemble_mean(&self, descriptor: &SchemeDescriptor) -> Result<FieldCoefficients> {
        self.require(descriptor.history_depth)?;
        let extrap: Vec<FieldCoefficients> =
            (0..self.n_realizations()).map(|j| self.combination(j, &descriptor.extrap_coeffs)).collect();
        Ok(mean_of(&extrap))
    }

    /// `u'_j = Σ c_k u_j^{n-k} − <U>^n`.
    pub fn fluctuation(&self, j: usize, descriptor: &SchemeDescriptor) -> Result<FieldCoefficients> {
        let mean = self.ensemble_mean(descriptor)?;
        let raw = self.combination(j, &descriptor.fluct_coeffs);
        Ok(FieldCoefficients::combine(&[(1.0, &raw), (-1.0, &mean)]))
    }

    /// All fluctuations, sharing one mean computation.
    pub fn fluctuations(&self, descriptor: &SchemeDescriptor) -> Result<Vec<FieldCoefficients>> {
        let mean = self.ensemble_mean(descriptor)?;
        Ok((0..self.n_realizations())
            .map(|j| {
                let raw = self.combination(j, &descriptor.fluct_coeffs);
                FieldCoefficients::combine(&[(1.0, &raw), (-1.0, &mean)])
            })
            .collect())
    }

    /// Coefficientwise mean of the current level.
    pub fn current_mean(&self) -> FieldCoefficients {
        mean_of(&self.levels[0])
    }
}

/// Coefficientwise arithmetic mean.
pub fn mean_of(fields: &[FieldCoefficients]) -> FieldCoefficients {
    let w = 1.0 / fields.len() as f64;
    let terms: Vec<(f64, &FieldCoefficients)> = fields.iter().map(|f| (w, f)).collect();
    FieldCoefficients::combine(&terms)
}

/// Per-realization viscosities and the statistics entering the scheme.
///
/// Samples are stored at the quadrature points of the space's standard
/// rule (cache order); a sample of length one is constant in space.
#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityEnsemble {
    samples: Vec<Vec<f64>>,
    nu_bar: Vec<f64>,
    nu_bar_min: f64,
    sup_prime: Vec<f64>,
}

impl ViscosityEnsemble {
    /// Spatially constant viscosities.
    pub fn from_constants(values: Vec<f64>) -> Result<Self> {
        Self::from_point_values(values.into_iter().map(|v| vec![v]).collect())
    }

    /// Viscosities sampled at the standard quadrature points of `space`.
    pub fn from_fn(space: &TaylorHoodSpace, n: usize, nu: impl Fn(usize, [f64; 2]) -> f64) -> Result<Self> {
        let samples = (0..n)
            .map(|j| space.quadrature().points().map(|q| nu(j, q.x)).collect())
            .collect();
        Self::from_point_values(samples)
    }

    pub fn from_point_values(samples: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(Error::InvalidState("empty ensemble".into()));
        };
        let n_pts = first.len();
        if let Some(bad) = samples.iter().find(|s| s.len() != n_pts) {
            return Err(Error::DimensionMismatch { expected: n_pts, found: bad.len() });
        }
        if samples.iter().flatten().any(|&v| !(v > 0.0)) {
            return Err(Error::invalid("viscosity samples must be positive"));
        }
        let w = 1.0 / samples.len() as f64;
        let nu_bar: Vec<f64> = (0..n_pts).map(|q| samples.iter().map(|s| s[q]).sum::<f64>() * w).collect();
        let nu_bar_min = nu_bar.iter().copied().fold(f64::INFINITY, f64::min);
        let sup_prime = samples
            .iter()
            .map(|s| s.iter().zip(&nu_bar).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .collect();
        Ok(ViscosityEnsemble { samples, nu_bar, nu_bar_min, sup_prime })
    }

    pub fn n_realizations(&self) -> usize {
        self.samples.len()
    }

    /// Number of sample points per realization (1 if constant in space).
    pub fn n_points(&self) -> usize {
        self.nu_bar.len()
    }

    pub fn is_constant(&self) -> bool {
        self.nu_bar.len() == 1
    }

    /// Constant values, if the viscosities do not vary in space.
    pub fn constants(&self) -> Option<Vec<f64>> {
        self.is_constant().then(|| self.samples.iter().map(|s| s[0]).collect())
    }

    #[inline]
    fn slot(&self, q: usize) -> usize {
        if self.is_constant() {
            0
        } else {
            q
        }
    }

    /// `ν_j` at quadrature point `q`.
    #[inline]
    pub fn nu(&self, j: usize, q: usize) -> f64 {
        self.samples[j][self.slot(q)]
    }

    #[inline]
    pub fn nu_bar(&self, q: usize) -> f64 {
        self.nu_bar[self.slot(q)]
    }

    #[inline]
    pub fn nu_prime(&self, j: usize, q: usize) -> f64 {
        self.nu(j, q) - self.nu_bar(q)
    }

    pub fn nu_bar_min(&self) -> f64 {
        self.nu_bar_min
    }

    /// `‖ν'_j‖_∞` over the sample points.
    pub fn sup_prime(&self, j: usize) -> f64 {
        self.sup_prime[j]
    }

    /// `ν̄_min − ‖ν'_j‖_∞`.
    pub fn alpha(&self, j: usize) -> f64 {
        self.nu_bar_min - self.sup_prime[j]
    }

    /// `ν̄_min − 3‖ν'_j‖_∞`.
    pub fn alpha_tilde(&self, j: usize) -> f64 {
        self.nu_bar_min - 3.0 * self.sup_prime[j]
    }

    /// Per-realization positivity of the stability constant of `descriptor`.
    pub fn stability_margins(&self, descriptor: &SchemeDescriptor) -> Vec<f64> {
        (0..self.n_realizations())
            .map(|j| match descriptor.history_depth {
                1 => self.alpha(j),
                _ => self.alpha_tilde(j),
            })
            .collect()
    }

    /// Copy with realizations reordered so that entry `i` is old entry `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        Self::from_point_values(perm.iter().map(|&j| self.samples[j].clone()).collect())
    }
}

/// Draws `n` constant viscosities from `U(ν(1−s), ν(1+s))`.
pub fn sample_uniform_viscosity(expected: f64, spread: f64, n: usize, seed: u64) -> Result<ViscosityEnsemble> {
    if !(expected > 0.0) {
        return Err(Error::invalid("expected viscosity must be positive"));
    }
    if !(0.0..1.0).contains(&spread) {
        return Err(Error::invalid(format!("relative spread {spread} must lie in [0, 1)")));
    }
    if spread == 0.0 {
        return ViscosityEnsemble::from_constants(vec![expected; n]);
    }
    let dist = Uniform::new(expected * (1.0 - spread), expected * (1.0 + spread))
        .map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ViscosityEnsemble::from_constants((0..n).map(|_| dist.sample(&mut rng)).collect())
}

/// Mixing length and eddy viscosity at every standard quadrature point.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingLengthField {
    /// `l_h = sqrt(Σ_j |u'_j|²)`.
    pub length: Vec<f64>,
    /// `ν_T = μ Δt l_h²`.
    pub nu_t: Vec<f64>,
}

impl MixingLengthField {
    pub fn zeros(n_points: usize) -> Self {
        MixingLengthField { length: vec![0.0; n_points], nu_t: vec![0.0; n_points] }
    }

    pub fn max_length(&self) -> f64 {
        self.length.iter().copied().fold(0.0, f64::max)
    }
}

/// Evaluates the mixing length from the fluctuations `u'_j`.
pub fn mixing_length(space: &TaylorHoodSpace, fluctuations: &[FieldCoefficients], mu: f64, dt: f64) -> MixingLengthField {
    let cache = space.quadrature();
    let mut length = Vec::with_capacity(cache.n_points());
    for c in 0..space.mesh.n_cells() {
        for q in cache.cell(c) {
            let sq: f64 = fluctuations
                .iter()
                .map(|f| {
                    let (v, _) = space.eval_velocity(&f.values, c, q);
                    v[0] * v[0] + v[1] * v[1]
                })
                .sum();
            length.push(sq.sqrt());
        }
    }
    let nu_t = length.iter().map(|l| mu * dt * l * l).collect();
    MixingLengthField { length, nu_t }
}
