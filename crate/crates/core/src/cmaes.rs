//! (μ/μ_w, λ)-CMA-ES over the unit box.
//!
//! Cumulative step-size adaptation, rank-one plus rank-μ covariance update
//! and the usual default learning rates. Candidates leaving `[0, 1]^n` are
//! clamped for evaluation and ranked with a quadratic distance penalty.
//!
//! [`CmaEs`] exposes an ask/tell interface so callers can evaluate a
//! generation however they like; [`minimize`] is the plain loop over it.
//! Randomness comes from a ChaCha8 stream seeded by [`CmaConfig::seed`];
//! normal variates use the ziggurat transform of `rand_distr`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest accepted covariance condition number before eigenvalue repair.
const MAX_CONDITION: f64 = 1e14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmaConfig {
    pub dimension: usize,
    /// Offspring per generation (λ).
    pub population: usize,
    /// Initial step size in unit-box coordinates.
    pub sigma0: f64,
    pub max_evals: usize,
    /// Stop as soon as the best value is at or below this.
    pub target_f: Option<f64>,
    pub seed: u64,
    /// Independent restarts from random points once a run stalls.
    pub restarts: usize,
    /// Initial mean; the box centre when `None`.
    pub initial_mean: Option<Vec<f64>>,
    /// Weight of the squared distance to the box added to clamped candidates.
    pub boundary_penalty: f64,
}

impl CmaConfig {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            population: default_population(dimension),
            sigma0: 0.3,
            max_evals: 1000 * dimension.max(1),
            target_f: None,
            seed: 1,
            restarts: 0,
            initial_mean: None,
            boundary_penalty: 1e3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension < 1 {
            return Err(Error::Usage("dimension must be at least 1".into()));
        }
        if self.population < 4 {
            return Err(Error::Usage("population must be at least 4".into()));
        }
        if !(self.sigma0 > 0.0) {
            return Err(Error::Usage("sigma0 must be positive".into()));
        }
        if let Some(m) = &self.initial_mean {
            if m.len() != self.dimension {
                return Err(Error::Usage(format!(
                    "initial mean has {} coordinates, expected {}",
                    m.len(),
                    self.dimension
                )));
            }
        }
        Ok(())
    }
}

/// 4 + ⌊3 ln n⌋.
pub fn default_population(n: usize) -> usize {
    4 + (3.0 * (n.max(1) as f64).ln()).floor() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    pub evals_used: usize,
    /// Target reached or search distribution collapsed.
    pub converged: bool,
    /// Best-so-far value after each generation.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RunStop {
    Running,
    /// Step size collapsed; counts as converged.
    TolX,
    Stagnation,
}

/// Strategy parameters that depend only on n and λ.
#[derive(Debug, Clone)]
struct Strategy {
    mu: usize,
    weights: Vec<f64>,
    mu_eff: f64,
    c_sigma: f64,
    d_sigma: f64,
    c_c: f64,
    c_1: f64,
    c_mu: f64,
    chi_n: f64,
}

impl Strategy {
    fn new(n: usize, lambda: usize) -> Self {
        let nf = n as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (0..mu)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - ((i + 1) as f64).ln())
            .collect();
        let sum: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Self {
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
        }
    }
}

/// State of one CMA-ES run (including restarts).
#[derive(Debug, Clone)]
pub struct CmaEs {
    cfg: CmaConfig,
    strategy: Strategy,
    rng: ChaCha8Rng,
    mean: DVector<f64>,
    sigma: f64,
    cov: DMatrix<f64>,
    /// Eigenvectors of the covariance.
    basis: DMatrix<f64>,
    /// Square roots of the covariance eigenvalues.
    scales: DVector<f64>,
    p_sigma: DVector<f64>,
    p_c: DVector<f64>,
    run_generation: usize,
    restarts_done: usize,
    /// Raw (unclamped) candidates of the outstanding generation.
    pending: Option<Vec<DVector<f64>>>,
    evals: usize,
    best_x: Vec<f64>,
    best_f: f64,
    history: Vec<f64>,
    last_improvement: usize,
    converged: bool,
    finished: bool,
}

impl CmaEs {
    pub fn new(cfg: CmaConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.dimension;
        let mean = match &cfg.initial_mean {
            Some(m) => DVector::from_iterator(n, m.iter().map(|x| x.clamp(0.0, 1.0))),
            None => DVector::from_element(n, 0.5),
        };
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let best_x = mean.iter().copied().collect();
        Ok(Self {
            strategy: Strategy::new(n, cfg.population),
            rng,
            sigma: cfg.sigma0,
            cov: DMatrix::identity(n, n),
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
            p_sigma: DVector::zeros(n),
            p_c: DVector::zeros(n),
            mean,
            run_generation: 0,
            restarts_done: 0,
            pending: None,
            evals: 0,
            best_x,
            best_f: f64::INFINITY,
            history: Vec::new(),
            last_improvement: 0,
            converged: false,
            finished: false,
            cfg,
        })
    }

    pub fn config(&self) -> &CmaConfig {
        &self.cfg
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn evals(&self) -> usize {
        self.evals
    }

    /// True once a stopping criterion has fired.
    pub fn is_done(&self) -> bool {
        self.finished
    }

    /// Samples one generation. Returns the clamped points to evaluate.
    pub fn ask(&mut self) -> Result<Vec<Vec<f64>>> {
        if self.pending.is_some() {
            return Err(Error::Usage("ask called twice without tell".into()));
        }
        if self.finished {
            return Err(Error::Usage("optimizer already finished".into()));
        }
        let n = self.cfg.dimension;
        let mut raw = Vec::with_capacity(self.cfg.population);
        for _ in 0..self.cfg.population {
            let z = DVector::from_iterator(n, (0..n).map(|_| self.rng.sample::<f64, _>(StandardNormal)));
            let y = &self.basis * z.component_mul(&self.scales);
            raw.push(&self.mean + y * self.sigma);
        }
        let points = raw.iter().map(clamp_unit).collect();
        self.pending = Some(raw);
        Ok(points)
    }

    /// Feeds back objective values for the last [`ask`](Self::ask), in the
    /// same order, and advances one generation.
    pub fn tell(&mut self, values: &[f64]) -> Result<()> {
        let raw = self
            .pending
            .take()
            .ok_or_else(|| Error::Usage("tell called without a pending ask".into()))?;
        if values.len() != raw.len() {
            let err = Error::Usage(format!("expected {} values, got {}", raw.len(), values.len()));
            self.pending = Some(raw);
            return Err(err);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteObjective {
                index,
                point: clamp_unit(&raw[index]),
                value,
            });
        }
        self.evals += values.len();

        let mut penalized = Vec::with_capacity(raw.len());
        for (x, &f) in raw.iter().zip(values) {
            let clamped = clamp_unit(x);
            let dist2: f64 = x.iter().zip(&clamped).map(|(a, b)| (a - b) * (a - b)).sum();
            if f < self.best_f {
                self.best_f = f;
                self.best_x = clamped;
                self.last_improvement = self.history.len();
            }
            penalized.push(f + self.cfg.boundary_penalty * dist2);
        }
        self.history.push(self.best_f);

        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by(|&a, &b| penalized[a].total_cmp(&penalized[b]).then(a.cmp(&b)));
        self.update(&raw, &order);

        let stop = self.run_stop();
        if self.cfg.target_f.is_some_and(|t| self.best_f <= t) {
            self.converged = true;
            self.finished = true;
        } else if self.evals + self.cfg.population > self.cfg.max_evals {
            self.finished = true;
        } else if stop != RunStop::Running {
            if stop == RunStop::TolX {
                self.converged = true;
            }
            if self.restarts_done < self.cfg.restarts {
                self.restart();
            } else {
                self.finished = true;
            }
        }
        Ok(())
    }

    pub fn result(&self) -> OptResult {
        OptResult {
            x_best: self.best_x.clone(),
            f_best: self.best_f,
            evals_used: self.evals,
            converged: self.converged,
            history: self.history.clone(),
        }
    }

    fn update(&mut self, raw: &[DVector<f64>], order: &[usize]) {
        let s = &self.strategy;
        let n = self.cfg.dimension;
        let old_mean = self.mean.clone();
        let steps: Vec<DVector<f64>> = order[..s.mu]
            .iter()
            .map(|&i| (&raw[i] - &old_mean) / self.sigma)
            .collect();
        let mut y_w = DVector::zeros(n);
        for (w, y) in s.weights.iter().zip(&steps) {
            y_w += y * *w;
        }
        self.mean = &old_mean + &y_w * self.sigma;

        // C^{-1/2} y_w = B D^{-1} Bᵀ y_w
        let whitened = &self.basis * (self.basis.tr_mul(&y_w)).component_div(&self.scales);
        self.p_sigma = &self.p_sigma * (1.0 - s.c_sigma) + whitened * (s.c_sigma * (2.0 - s.c_sigma) * s.mu_eff).sqrt();
        let gen = (self.run_generation + 1) as f64;
        let ps_norm = self.p_sigma.norm();
        let h_sigma =
            ps_norm / (1.0 - (1.0 - s.c_sigma).powf(2.0 * gen)).sqrt() < (1.4 + 2.0 / (n as f64 + 1.0)) * s.chi_n;
        let h_sigma = if h_sigma { 1.0 } else { 0.0 };
        self.p_c = &self.p_c * (1.0 - s.c_c) + &y_w * (h_sigma * (s.c_c * (2.0 - s.c_c) * s.mu_eff).sqrt());

        let decay = 1.0 - s.c_1 - s.c_mu + (1.0 - h_sigma) * s.c_1 * s.c_c * (2.0 - s.c_c);
        let mut cov = &self.cov * decay + &self.p_c * self.p_c.transpose() * s.c_1;
        for (w, y) in s.weights.iter().zip(&steps) {
            cov += y * y.transpose() * (s.c_mu * w);
        }
        self.cov = (&cov + cov.transpose()) * 0.5;

        self.sigma *= ((s.c_sigma / s.d_sigma) * (ps_norm / s.chi_n - 1.0)).exp();
        self.sigma = self.sigma.min(1e3);
        self.decompose();
        self.run_generation += 1;
    }

    fn decompose(&mut self) {
        let eig = SymmetricEigen::new(self.cov.clone());
        let mut values = eig.eigenvalues;
        let max = values.max();
        let min = values.min();
        if min <= 0.0 || max > MAX_CONDITION * min {
            let shift = max / MAX_CONDITION - min;
            for i in 0..self.cov.nrows() {
                self.cov[(i, i)] += shift;
            }
            values.add_scalar_mut(shift);
        }
        self.basis = eig.eigenvectors;
        self.scales = values.map(|v| v.max(f64::MIN_POSITIVE).sqrt());
    }

    fn run_stop(&self) -> RunStop {
        let max_std = self.sigma * self.cov.diagonal().max().sqrt();
        if max_std < 1e-12 {
            return RunStop::TolX;
        }
        let window = 30 * self.cfg.dimension;
        if self.history.len() - self.last_improvement > window && self.run_generation > window {
            return RunStop::Stagnation;
        }
        RunStop::Running
    }

    fn restart(&mut self) {
        self.restarts_done += 1;
        let n = self.cfg.dimension;
        let seed = self.cfg.seed ^ (self.restarts_done as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.mean = DVector::from_iterator(n, (0..n).map(|_| self.rng.random::<f64>()));
        self.sigma = self.cfg.sigma0;
        self.cov = DMatrix::identity(n, n);
        self.basis = DMatrix::identity(n, n);
        self.scales = DVector::from_element(n, 1.0);
        self.p_sigma = DVector::zeros(n);
        self.p_c = DVector::zeros(n);
        self.run_generation = 0;
        self.last_improvement = self.history.len();
    }
}

fn clamp_unit(x: &DVector<f64>) -> Vec<f64> {
    x.iter().map(|v| v.clamp(0.0, 1.0)).collect()
}

/// Minimizes `objective` over `[0, 1]^n`.
pub fn minimize<F>(mut objective: F, cfg: CmaConfig) -> Result<OptResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut es = CmaEs::new(cfg)?;
    while !es.is_done() {
        let xs = es.ask()?;
        let fs: Vec<f64> = xs.iter().map(|x| objective(x)).collect();
        es.tell(&fs)?;
    }
    Ok(es.result())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(c: f64) -> impl Fn(&[f64]) -> f64 {
        move |x: &[f64]| x.iter().map(|v| (v - c) * (v - c)).sum()
    }

    fn cfg(seed: u64) -> CmaConfig {
        CmaConfig {
            sigma0: 0.3,
            max_evals: 5000,
            seed,
            initial_mean: Some(vec![0.15, 0.8, 0.3, 0.9, 0.05]),
            ..CmaConfig::new(5)
        }
    }

    #[test]
    fn default_population_size() {
        assert_eq!(default_population(5), 8);
        assert_eq!(default_population(1), 4);
        assert_eq!(default_population(10), 10);
    }

    #[test]
    fn sphere_converges() {
        let r = minimize(sphere(0.5), cfg(3)).unwrap();
        assert!(r.f_best < 1e-10, "{}", r.f_best);
        assert!(r.evals_used <= 5000);
    }

    #[test]
    fn shifted_sphere_converges() {
        let r = minimize(sphere(0.3), cfg(11)).unwrap();
        assert!(r.f_best < 1e-10, "{}", r.f_best);
    }

    #[test]
    fn ask_returns_population() {
        let mut es = CmaEs::new(cfg(1)).unwrap();
        let xs = es.ask().unwrap();
        assert_eq!(xs.len(), 8);
        assert!(xs.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn protocol_violations() {
        let mut es = CmaEs::new(cfg(1)).unwrap();
        assert!(matches!(es.tell(&[1.0; 8]), Err(Error::Usage(_))));
        es.ask().unwrap();
        assert!(matches!(es.ask(), Err(Error::Usage(_))));
        assert!(matches!(es.tell(&[1.0; 3]), Err(Error::Usage(_))));
        // The generation is still pending after a length mismatch.
        es.tell(&[1.0; 8]).unwrap();
    }

    #[test]
    fn non_finite_objective() {
        let mut es = CmaEs::new(cfg(1)).unwrap();
        es.ask().unwrap();
        let mut values = vec![1.0; 8];
        values[5] = f64::NAN;
        match es.tell(&values) {
            Err(Error::NonFiniteObjective { index, point, .. }) => {
                assert_eq!(index, 5);
                assert_eq!(point.len(), 5);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn minimize_matches_manual_loop() {
        let f = sphere(0.42);
        let a = minimize(&f, cfg(9)).unwrap();
        let mut es = CmaEs::new(cfg(9)).unwrap();
        while !es.is_done() {
            let xs = es.ask().unwrap();
            let fs: Vec<f64> = xs.iter().map(|x| f(x)).collect();
            es.tell(&fs).unwrap();
        }
        let b = es.result();
        assert_eq!(a, b);
    }

    #[test]
    fn history_monotone_and_consistent() {
        let r = minimize(sphere(0.7), cfg(5)).unwrap();
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        let min = r.history.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(min, r.f_best);
        assert!(r.x_best.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn boundary_optimum_is_reached_from_inside() {
        // Optimum outside the box: best feasible point is the corner.
        let r = minimize(sphere(1.5), cfg(2)).unwrap();
        assert!(r.x_best.iter().all(|&v| v > 1.0 - 1e-6), "{:?}", r.x_best);
    }

    #[test]
    fn target_stops_early() {
        let c = CmaConfig {
            target_f: Some(1e-3),
            ..cfg(4)
        };
        let r = minimize(sphere(0.5), c).unwrap();
        assert!(r.converged);
        assert!(r.f_best <= 1e-3);
        assert!(r.evals_used < 1000);
    }

    #[test]
    fn covariance_stays_positive_definite() {
        // Strongly ill-conditioned ellipsoid.
        let f = |x: &[f64]| {
            x.iter()
                .enumerate()
                .map(|(i, v)| 1e6f64.powf(i as f64 / 4.0) * (v - 0.5).powi(2))
                .sum()
        };
        let mut es = CmaEs::new(cfg(8)).unwrap();
        while !es.is_done() {
            let xs = es.ask().unwrap();
            let fs: Vec<f64> = xs.iter().map(|x| f(x)).collect();
            es.tell(&fs).unwrap();
            let eig = SymmetricEigen::new(es.cov.clone());
            assert!(eig.eigenvalues.min() > 0.0);
            assert!((&es.cov - es.cov.transpose()).abs().max() == 0.0);
        }
    }
}
