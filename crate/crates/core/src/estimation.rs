//! Parameter fitting: the whole-trajectory offline fit and the online
//! predictor with weighted, regularized objective, λ cross-validation and
//! fallback to the default parameters.
//!
//! The optimizer works in the unit box. [`normalize`] / [`denormalize`] map
//! between it and the physical [`ParamBounds`]. The online regularization
//! penalty is also measured in unit-box coordinates so that λ does not depend
//! on the units of the parameters.

use serde::{Deserialize, Serialize};

use crate::cmaes::{self, CmaConfig};
use crate::dynamics::{DynamicsConfig, State, TuningParams};
use crate::error::{Error, Result};
use crate::evaluation::top_of_climb;
use crate::integrator::{self, resample, Termination, Trajectory};
use crate::performance::AircraftPerfModel;
use crate::units::{fl_to_m, m_to_fl, FL};

/// Largest integration step used when predicting an observed track, s.
pub const SIM_DT: f64 = 1.0;

/// Objective value returned when a candidate cannot be simulated.
pub const OBJECTIVE_SENTINEL: f64 = 1e9;

/// Doublings of λ tried after the initial value.
pub const MAX_LAMBDA_DOUBLINGS: usize = 12;

/// Distance (unit-box sup norm) under which a fit counts as the default.
const DEFAULT_MATCH_TOL: f64 = 1e-3;

/// Aircraft model and hybrid-system settings shared by every simulation of
/// a fit.
#[derive(Debug, Clone, Copy)]
pub struct ClimbContext<'a> {
    pub model: &'a AircraftPerfModel,
    pub dynamics: &'a DynamicsConfig,
}

impl<'a> ClimbContext<'a> {
    pub fn new(model: &'a AircraftPerfModel, dynamics: &'a DynamicsConfig) -> Self {
        Self { model, dynamics }
    }

    /// Default parameter vector of the aircraft model.
    pub fn default_theta(&self) -> TuningParams {
        TuningParams::nominal(self.model)
    }
}

/// Search box for the five tuned parameters, each as (low, high).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    /// kg
    pub mass: (f64, f64),
    /// K
    pub delta_t: (f64, f64),
    /// kt CAS
    pub v1: (f64, f64),
    /// kt CAS
    pub v2: (f64, f64),
    pub mach: (f64, f64),
}

impl ParamBounds {
    /// Default box for a model: its full mass range, ±15 K, 210–250 kt,
    /// 240–340 kt and Mach 0.70–0.82.
    pub fn for_model(model: &AircraftPerfModel) -> Self {
        Self {
            mass: (model.mass_min, model.mass_max),
            delta_t: (-15.0, 15.0),
            v1: (210.0, 250.0),
            v2: (240.0, 340.0),
            mach: (0.70, 0.82),
        }
    }

    pub fn pairs(&self) -> [(f64, f64); 5] {
        [self.mass, self.delta_t, self.v1, self.v2, self.mach]
    }

    pub fn from_pairs(p: [(f64, f64); 5]) -> Self {
        Self {
            mass: p[0],
            delta_t: p[1],
            v1: p[2],
            v2: p[3],
            mach: p[4],
        }
    }

    pub fn validate(&self, model: &AircraftPerfModel) -> Result<()> {
        for (name, (lo, hi)) in TuningParams::NAMES.iter().zip(self.pairs()) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::config(*name, format!("need low < high, got {lo} / {hi}")));
            }
        }
        if self.mass.0 < model.mass_min || self.mass.1 > model.mass_max {
            return Err(Error::config(
                "mass",
                format!(
                    "bounds {} / {} leave the model range {} / {}",
                    self.mass.0, self.mass.1, model.mass_min, model.mass_max
                ),
            ));
        }
        if !(self.v1.0 > 0.0 && self.v2.0 > 0.0 && self.mach.0 > 0.0) {
            return Err(Error::config("speed", "speed bounds must be positive"));
        }
        if self.v1.1 > self.v2.1 {
            return Err(Error::config(
                "v2",
                "upper v2 bound must not be below the upper v1 bound",
            ));
        }
        Ok(())
    }

    pub fn contains(&self, theta: &TuningParams) -> bool {
        theta
            .to_array()
            .iter()
            .zip(self.pairs())
            .all(|(&x, (lo, hi))| (lo..=hi).contains(&x))
    }
}

/// Maps parameters inside `bounds` to the unit box.
pub fn normalize(theta: &TuningParams, bounds: &ParamBounds) -> Result<[f64; 5]> {
    let mut x = [0.0; 5];
    for (k, (&v, (lo, hi))) in theta.to_array().iter().zip(bounds.pairs()).enumerate() {
        if !(lo..=hi).contains(&v) {
            return Err(Error::domain(format!(
                "{} = {v} outside [{lo}, {hi}]",
                TuningParams::NAMES[k]
            )));
        }
        x[k] = (v - lo) / (hi - lo);
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Denormalized {
    pub theta: TuningParams,
    /// v2 was raised to v1.
    pub repaired: bool,
}

/// Maps a unit-box point to parameters, raising v2 to v1 if needed.
pub fn denormalize(x: &[f64], bounds: &ParamBounds) -> Result<Denormalized> {
    if x.len() != 5 {
        return Err(Error::domain(format!("expected 5 coordinates, got {}", x.len())));
    }
    if let Some(v) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::domain(format!("coordinate {v} outside [0, 1]")));
    }
    let mut a = [0.0; 5];
    for (k, (lo, hi)) in bounds.pairs().into_iter().enumerate() {
        a[k] = lo + x[k] * (hi - lo);
    }
    let mut theta = TuningParams::from_array(a);
    let repaired = theta.v2 < theta.v1;
    if repaired {
        theta.v2 = theta.v1;
    }
    Ok(Denormalized { theta, repaired })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta: TuningParams,
    /// Objective at `theta`, FL (plus the penalty for online fits).
    pub objective: f64,
    pub evals: usize,
    /// Regularization weight of the selected online fit.
    pub lambda_used: Option<f64>,
    pub fell_back_to_default: bool,
    /// Mean absolute validation error of the selected online fit, FL.
    pub validation_error_fl: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightScheme {
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineConfig {
    /// Samples at the end of the prefix held out for validation.
    pub validation_points: usize,
    pub lambda0: f64,
    pub lambda_growth: f64,
    /// Validation error above which the default parameters are used, FL.
    pub fallback_threshold: f64,
    pub weight_scheme: WeightScheme,
    /// Objective evaluations per fit (one fit per λ).
    pub evals_budget: usize,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        Self {
            validation_points: 36,
            lambda0: 100.0,
            lambda_growth: 2.0,
            fallback_threshold: 5.0,
            weight_scheme: WeightScheme::Linear,
            evals_budget: 400,
        }
    }
}

impl OnlineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.validation_points < 1 {
            return Err(Error::config("validation_points", "must be at least 1"));
        }
        if !(self.lambda0 > 0.0) {
            return Err(Error::config("lambda0", "must be positive"));
        }
        if !(self.lambda_growth > 1.0) {
            return Err(Error::config("lambda_growth", "must exceed 1"));
        }
        if !(self.fallback_threshold > 0.0) {
            return Err(Error::config("fallback_threshold", "must be positive"));
        }
        if self.evals_budget < 1 {
            return Err(Error::config("evals_budget", "must be at least 1"));
        }
        Ok(())
    }

    pub fn weights(&self, t: usize) -> Result<Vec<f64>> {
        match self.weight_scheme {
            WeightScheme::Linear => linear_weights(t),
        }
    }
}

/// Integration step dividing `dt_out` and no larger than [`SIM_DT`].
fn sim_step(dt_out: f64) -> f64 {
    dt_out / (dt_out / SIM_DT).ceil()
}

/// Simulates `theta` from `s0` and samples it every `dt_out` seconds.
pub fn predict(
    theta: &TuningParams,
    s0: &State,
    level_fl: Option<f64>,
    horizon: f64,
    dt_out: f64,
    ctx: ClimbContext<'_>,
) -> Result<Trajectory> {
    Ok(predict_with_termination(theta, s0, level_fl, horizon, dt_out, ctx)?.0)
}

fn predict_with_termination(
    theta: &TuningParams,
    s0: &State,
    level_fl: Option<f64>,
    horizon: f64,
    dt_out: f64,
    ctx: ClimbContext<'_>,
) -> Result<(Trajectory, Termination)> {
    let out = integrator::simulate(theta, s0, level_fl, horizon, sim_step(dt_out), ctx.dynamics, ctx.model)?;
    Ok((resample(&out.trajectory, dt_out)?, out.termination))
}

/// Cruise level implied by an observed climb: its top altitude rounded to
/// the nearest 10 FL.
pub fn cruise_level_fl(obs: &Trajectory) -> f64 {
    let top = obs.samples()[top_of_climb(obs)].h;
    (m_to_fl(top) / 10.0).round() * 10.0
}

/// Sum of absolute altitude errors over samples `i..=j`, FL.
///
/// The prediction is stopped at `level_fl` and both sequences are padded
/// with the level altitude to a common length. A candidate that fails to
/// simulate scores [`OBJECTIVE_SENTINEL`].
pub fn offline_objective(
    theta: &TuningParams,
    obs: &Trajectory,
    s0: &State,
    i: usize,
    j: usize,
    level_fl: f64,
    ctx: ClimbContext<'_>,
) -> Result<f64> {
    if i > j {
        return Err(Error::domain(format!("empty index range {i}..={j}")));
    }
    let pred = match predict(theta, s0, Some(level_fl), obs.span().max(obs.dt()), obs.dt(), ctx) {
        Ok(p) => p,
        Err(Error::Domain(msg)) => return Err(Error::Domain(msg)),
        Err(_) => return Ok(OBJECTIVE_SENTINEL),
    };
    padded_abs_error(&pred, obs, i, j, level_fl)
}

/// Sum of absolute altitude differences over samples `i..=j` in FL, after
/// padding the shorter trajectory at `level_fl`.
pub fn padded_abs_error(pred: &Trajectory, obs: &Trajectory, i: usize, j: usize, level_fl: f64) -> Result<f64> {
    if i > j {
        return Err(Error::domain(format!("empty index range {i}..={j}")));
    }
    let (p, o) = integrator::align_and_pad(pred, obs, level_fl)?;
    if j >= p.len() {
        return Err(Error::domain(format!("index {j} beyond padded length {}", p.len())));
    }
    Ok(abs_error_sum(&p[i..=j], &o[i..=j]))
}

fn abs_error_sum(p: &[f64], o: &[f64]) -> f64 {
    p.iter().zip(o).map(|(a, b)| (a - b).abs()).sum::<f64>() / FL
}

/// Offspring per generation for offline fits. The offline objective has
/// shallow valleys along the mass / temperature trade-off, which the default
/// population of 8 tends to stall in.
pub const OFFLINE_POPULATION: usize = 48;
/// Evaluation budget for offline fits.
pub const OFFLINE_MAX_EVALS: usize = 6000;

/// CMA-ES settings for [`fit_offline`].
pub fn offline_cma_config(seed: u64) -> CmaConfig {
    CmaConfig {
        population: OFFLINE_POPULATION,
        max_evals: OFFLINE_MAX_EVALS,
        seed,
        ..CmaConfig::new(5)
    }
}

/// CMA-ES settings for each λ step of [`predict_online`]; the evaluation
/// budget comes from [`OnlineConfig::evals_budget`].
pub fn online_cma_config(seed: u64) -> CmaConfig {
    CmaConfig {
        seed,
        ..CmaConfig::new(5)
    }
}

/// Fits all five parameters to the climb part (take-off to top of climb) of
/// an observed trajectory, starting from the default parameters.
pub fn fit_offline(
    obs: &Trajectory,
    s0: &State,
    bounds: &ParamBounds,
    cma_cfg: &CmaConfig,
    ctx: ClimbContext<'_>,
) -> Result<FitResult> {
    bounds.validate(ctx.model)?;
    let level = cruise_level_fl(obs);
    let j = top_of_climb(obs);
    let theta_d = ctx.default_theta();
    let x_d = normalize(&theta_d, bounds)?;

    let objective = |theta: &TuningParams| offline_objective(theta, obs, s0, 0, j, level, ctx);
    let f_d = objective(&theta_d)?;
    let mut cfg = cma_cfg.clone();
    cfg.dimension = 5;
    cfg.initial_mean = Some(x_d.to_vec());
    let (theta, f, evals) = minimize_with_incumbent(&objective, bounds, cfg, theta_d, f_d)?;
    Ok(FitResult {
        theta,
        objective: f,
        evals,
        lambda_used: None,
        fell_back_to_default: false,
        validation_error_fl: None,
    })
}

/// Runs CMA-ES and keeps the incumbent unless the search found something
/// strictly better. Returns (θ, f, evaluations including the incumbent's).
fn minimize_with_incumbent<F>(
    objective: &F,
    bounds: &ParamBounds,
    cfg: CmaConfig,
    incumbent: TuningParams,
    f_incumbent: f64,
) -> Result<(TuningParams, f64, usize)>
where
    F: Fn(&TuningParams) -> Result<f64>,
{
    let mut failure = None;
    let res = cmaes::minimize(
        |x| match denormalize(x, bounds).and_then(|d| objective(&d.theta)) {
            Ok(f) => f,
            Err(e) => {
                failure.get_or_insert(e);
                OBJECTIVE_SENTINEL
            }
        },
        cfg,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let evals = res.evals_used + 1;
    if res.f_best < f_incumbent {
        let theta = denormalize(&res.x_best, bounds)?.theta;
        Ok((theta, res.f_best, evals))
    } else {
        Ok((incumbent, f_incumbent, evals))
    }
}

/// α_i = i / (t − 1) for i = 0..t.
pub fn linear_weights(t: usize) -> Result<Vec<f64>> {
    if t < 2 {
        return Err(Error::domain(format!("need at least 2 weights, got {t}")));
    }
    let last = (t - 1) as f64;
    Ok((0..t).map(|i| i as f64 / last).collect())
}

/// Weighted absolute error over the observed prefix (FL) plus λ times the
/// unit-box L1 distance to the default parameters.
///
/// The prediction runs over the prefix span without level termination; if it
/// stops early at the ceiling it is extended with its last altitude.
#[allow(clippy::too_many_arguments)]
pub fn online_objective(
    theta: &TuningParams,
    obs_prefix: &Trajectory,
    s0: &State,
    alpha: &[f64],
    lambda: f64,
    theta_default: &TuningParams,
    bounds: &ParamBounds,
    ctx: ClimbContext<'_>,
) -> Result<f64> {
    if alpha.len() != obs_prefix.len() {
        return Err(Error::domain(format!(
            "{} weights for {} observations",
            alpha.len(),
            obs_prefix.len()
        )));
    }
    let x = normalize(theta, bounds)?;
    let x_d = normalize(theta_default, bounds)?;
    let penalty: f64 = x.iter().zip(&x_d).map(|(a, b)| (a - b).abs()).sum();
    let p = match prefix_prediction(theta, obs_prefix, s0, ctx) {
        Ok(p) => p,
        Err(Error::Domain(msg)) => return Err(Error::Domain(msg)),
        Err(_) => return Ok(OBJECTIVE_SENTINEL),
    };
    let err: f64 = obs_prefix
        .samples()
        .iter()
        .zip(&p)
        .zip(alpha)
        .map(|((o, p), a)| a * (p - o.h).abs())
        .sum::<f64>()
        / FL;
    Ok(err + lambda * penalty)
}

/// Predicted altitudes at the prefix sample times, extended with the last
/// predicted altitude if the simulation stopped early.
fn prefix_prediction(theta: &TuningParams, obs: &Trajectory, s0: &State, ctx: ClimbContext<'_>) -> Result<Vec<f64>> {
    let pred = predict(theta, s0, None, obs.span().max(obs.dt()), obs.dt(), ctx)?;
    integrator::check_aligned(&pred, obs)?;
    let mut p = pred.altitudes();
    let last = pred.last().h;
    p.resize(obs.len(), last);
    p.truncate(obs.len());
    Ok(p)
}

/// Online prediction from an observed prefix.
///
/// The last `cfg.validation_points` samples are held out. For growing λ the
/// parameters are fitted on the remaining samples and scored on the held-out
/// ones; the best-scoring fit is kept unless its validation error exceeds the
/// fallback threshold, in which case the defaults are used. The result is
/// then simulated from `s0` over `horizon` seconds, stopping at `level_fl`
/// when one is known (the prediction is then held at the level).
#[allow(clippy::too_many_arguments)]
pub fn predict_online(
    obs_prefix: &Trajectory,
    s0: &State,
    level_fl: Option<f64>,
    bounds: &ParamBounds,
    cfg: &OnlineConfig,
    cma_cfg: &CmaConfig,
    horizon: f64,
    ctx: ClimbContext<'_>,
) -> Result<(FitResult, Trajectory)> {
    cfg.validate()?;
    bounds.validate(ctx.model)?;
    let vp = cfg.validation_points;
    let needed = vp + 10;
    if obs_prefix.len() <= needed {
        return Err(Error::PrefixTooShort {
            len: obs_prefix.len(),
            needed,
        });
    }
    let learn = obs_prefix.truncated(obs_prefix.len() - vp);
    let alpha = cfg.weights(learn.len())?;
    let theta_d = ctx.default_theta();
    let x_d = normalize(&theta_d, bounds)?;

    let validation_error = |theta: &TuningParams| -> Result<f64> {
        let p = match prefix_prediction(theta, obs_prefix, s0, ctx) {
            Ok(p) => p,
            Err(Error::Domain(msg)) => return Err(Error::Domain(msg)),
            Err(_) => return Ok(f64::INFINITY),
        };
        let start = obs_prefix.len() - vp;
        let o = &obs_prefix.samples()[start..];
        Ok(abs_error_sum(&p[start..], &o.iter().map(|s| s.h).collect::<Vec<_>>()) / vp as f64)
    };

    let mut evals = 0;
    let mut best: Option<(TuningParams, f64, f64, f64)> = None;
    for k in 0..=MAX_LAMBDA_DOUBLINGS {
        let lambda = cfg.lambda0 * cfg.lambda_growth.powi(k as i32);
        let objective =
            |theta: &TuningParams| online_objective(theta, &learn, s0, &alpha, lambda, &theta_d, bounds, ctx);
        let f_d = objective(&theta_d)?;
        let mut cma = cma_cfg.clone();
        cma.dimension = 5;
        cma.initial_mean = Some(x_d.to_vec());
        cma.max_evals = cfg.evals_budget;
        cma.seed = cma_cfg.seed.wrapping_add(k as u64);
        let (theta, f, used) = minimize_with_incumbent(&objective, bounds, cma, theta_d, f_d)?;
        evals += used;
        let err = validation_error(&theta)?;
        log::debug!("lambda {lambda}: validation error {err:.3} FL");
        if best.as_ref().is_none_or(|b| err < b.3) {
            best = Some((theta, f, lambda, err));
        }
        let x = normalize(&theta, bounds)?;
        let dist = x.iter().zip(&x_d).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if dist < DEFAULT_MATCH_TOL {
            break;
        }
    }
    let (theta, objective, lambda, err) = best.expect("at least one λ is tried");
    let fit = if err > cfg.fallback_threshold {
        FitResult {
            theta: theta_d,
            objective: online_objective(&theta_d, &learn, s0, &alpha, 0.0, &theta_d, bounds, ctx)?,
            evals,
            lambda_used: None,
            fell_back_to_default: true,
            validation_error_fl: Some(err),
        }
    } else {
        FitResult {
            theta,
            objective,
            evals,
            lambda_used: Some(lambda),
            fell_back_to_default: false,
            validation_error_fl: Some(err),
        }
    };
    let prediction = forecast(&fit.theta, s0, level_fl, horizon, obs_prefix.dt(), ctx)?;
    Ok((fit, prediction))
}

/// Prediction over `horizon` seconds from `s0`, held at `level_fl` once it
/// is reached so that it always covers the horizon.
pub fn forecast(
    theta: &TuningParams,
    s0: &State,
    level_fl: Option<f64>,
    horizon: f64,
    dt_out: f64,
    ctx: ClimbContext<'_>,
) -> Result<Trajectory> {
    let (pred, termination) = predict_with_termination(theta, s0, level_fl, horizon, dt_out, ctx)?;
    let len = (horizon / dt_out - 1e-9).ceil() as usize + 1;
    match level_fl {
        Some(fl) if termination == Termination::ReachedLevel => Ok(pred.padded(len, fl_to_m(fl))),
        _ => Ok(pred),
    }
}
