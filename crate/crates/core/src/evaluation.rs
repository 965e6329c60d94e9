//! Experimental protocol: dataset filters, top of climb, metering-point
//! errors, summary statistics, the Wilcoxon signed-rank test and the
//! offline / online experiment drivers.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::cmaes::CmaConfig;
use crate::dynamics::{Layer, Mode, SpeedRegime, SpeedTrend, State};
use crate::error::{Error, Result};
use crate::estimation::{self, ClimbContext, FitResult, OnlineConfig, ParamBounds};
use crate::integrator::Trajectory;
use crate::units::{fl_to_m, m_to_fl, FL};

/// Largest number of non-zero differences for which the Wilcoxon p-value is
/// computed exactly.
pub const WILCOXON_EXACT_MAX_N: usize = 20;

/// An observed flight.
#[derive(Debug, Clone, PartialEq)]
pub struct Flight {
    pub id: String,
    pub trajectory: Trajectory,
}

/// Index of the first sample at the maximum altitude.
pub fn top_of_climb(traj: &Trajectory) -> usize {
    let mut best = 0;
    for (k, s) in traj.samples().iter().enumerate() {
        if s.h > traj.samples()[best].h {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterCriteria {
    /// Longest tolerated run of zero rate of climb before the top of climb, s.
    pub max_level_off_s: f64,
    /// Lowest accepted cruise level, FL.
    pub min_cruise_fl: f64,
    /// Shortest accepted track, s.
    pub min_duration_s: f64,
}

impl Default for FilterCriteria {
    fn default() -> Self {
        Self {
            max_level_off_s: 30.0,
            min_cruise_fl: 300.0,
            min_duration_s: 1100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RejectReason {
    /// Zero rate of climb for `duration_s` starting at `t`.
    LevelOff {
        t: f64,
        duration_s: f64,
    },
    Cruise {
        max_fl: f64,
    },
    Duration {
        span_s: f64,
    },
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::LevelOff { t, duration_s } => {
                write!(f, "level-off of {duration_s} s at t={t} s before top of climb")
            }
            RejectReason::Cruise { max_fl } => write!(f, "cruise level FL{max_fl:.0} too low"),
            RejectReason::Duration { span_s } => write!(f, "duration {span_s} s too short"),
        }
    }
}

/// First reason to reject a trajectory, if any.
pub fn check_flight(traj: &Trajectory, criteria: &FilterCriteria) -> Option<RejectReason> {
    let toc = top_of_climb(traj);
    let samples = traj.samples();
    let mut run_start: Option<usize> = None;
    for k in 0..=toc {
        if samples[k].roc == 0.0 {
            let start = *run_start.get_or_insert(k);
            let duration_s = (k - start) as f64 * traj.dt();
            if duration_s > criteria.max_level_off_s {
                return Some(RejectReason::LevelOff {
                    t: samples[start].t,
                    duration_s,
                });
            }
        } else {
            run_start = None;
        }
    }
    let max_fl = m_to_fl(samples[toc].h);
    if max_fl < criteria.min_cruise_fl - 1e-9 {
        return Some(RejectReason::Cruise { max_fl });
    }
    if traj.span() < criteria.min_duration_s {
        return Some(RejectReason::Duration { span_s: traj.span() });
    }
    None
}

/// Splits a dataset into accepted flights and rejected flights with reasons.
pub fn filter_dataset(flights: Vec<Flight>, criteria: &FilterCriteria) -> (Vec<Flight>, Vec<(Flight, RejectReason)>) {
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for f in flights {
        match check_flight(&f.trajectory, criteria) {
            None => kept.push(f),
            Some(r) => rejected.push((f, r)),
        }
    }
    (kept, rejected)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeteringReference {
    Takeoff,
    CurrentTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeteringSpec {
    pub reference: MeteringReference,
    /// Minutes after the reference time.
    pub offsets_min: Vec<f64>,
}

impl MeteringSpec {
    pub fn new(reference: MeteringReference, offsets_min: Vec<f64>) -> Result<Self> {
        let spec = Self { reference, offsets_min };
        spec.validate()?;
        Ok(spec)
    }

    /// Take-off referenced offsets 2, 5, 10, 15 and 20 min.
    pub fn offline_default() -> Self {
        Self {
            reference: MeteringReference::Takeoff,
            offsets_min: vec![2.0, 5.0, 10.0, 15.0, 20.0],
        }
    }

    /// Offsets 2, 5 and 10 min after the present time.
    pub fn online_default() -> Self {
        Self {
            reference: MeteringReference::CurrentTime,
            offsets_min: vec![2.0, 5.0, 10.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.offsets_min.is_empty() {
            return Err(Error::config("offsets", "at least one offset is required"));
        }
        if self.offsets_min.iter().any(|&o| !(o > 0.0)) {
            return Err(Error::config("offsets", "offsets must be positive"));
        }
        if self.offsets_min.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("offsets", "offsets must be strictly increasing"));
        }
        Ok(())
    }

    /// Largest offset, s.
    pub fn max_offset_s(&self) -> f64 {
        self.offsets_min.last().copied().unwrap_or(0.0) * 60.0
    }
}

/// |h_pred − h_obs| in FL at `t_ref` plus each offset.
///
/// With `level_fl` set, a trajectory that ends at that level is taken to
/// stay there, so it covers any later metering time.
pub fn metering_errors(
    pred: &Trajectory,
    obs: &Trajectory,
    spec: &MeteringSpec,
    t_ref: f64,
    level_fl: Option<f64>,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let level = level_fl.map(fl_to_m);
    let at = |traj: &Trajectory, t: f64| -> Result<f64> {
        let k = traj
            .index_at(t)
            .ok_or_else(|| Error::domain(format!("t={t} s is not on the {} s grid", traj.dt())))?;
        if let Some(s) = traj.samples().get(k) {
            return Ok(s.h);
        }
        match level {
            Some(l) if (traj.last().h - l).abs() < 1e-6 => Ok(l),
            _ => Err(Error::domain(format!(
                "trajectory ends at t={} s before metering time {t} s",
                traj.last().t
            ))),
        }
    };
    spec.offsets_min
        .iter()
        .map(|&o| {
            let t = t_ref + o * 60.0;
            Ok((at(pred, t)? - at(obs, t)?).abs() / FL)
        })
        .collect()
}

/// Arithmetic mean and sample standard deviation (0 for a single value).
pub fn summarize(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Non-zero differences ranked by magnitude with average ranks for ties.
/// Returns doubled ranks (integers) and the signs.
fn signed_ranks(d: &[f64]) -> (Vec<u64>, Vec<bool>, Vec<usize>) {
    let mut nz: Vec<f64> = d.iter().copied().filter(|x| *x != 0.0).collect();
    nz.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut ranks2 = vec![0u64; nz.len()];
    let mut ties = Vec::new();
    let mut k = 0;
    while k < nz.len() {
        let mut e = k;
        while e + 1 < nz.len() && nz[e + 1].abs() == nz[k].abs() {
            e += 1;
        }
        // ranks k+1..=e+1, doubled average = (k+1) + (e+1)
        let r2 = (k + e + 2) as u64;
        ranks2[k..=e].iter_mut().for_each(|r| *r = r2);
        ties.push(e - k + 1);
        k = e + 1;
    }
    let positive = nz.iter().map(|x| *x > 0.0).collect();
    (ranks2, positive, ties)
}

fn paired_differences(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::domain(format!(
            "paired samples differ in size: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x - y).collect())
}

/// Exact two-sided p-value of the signed-rank statistic of `d`, by counting
/// the sign assignments with min(W+, W−) at most the observed one.
pub fn wilcoxon_exact_p(d: &[f64]) -> f64 {
    let (ranks2, positive, _) = signed_ranks(d);
    if ranks2.is_empty() {
        return 1.0;
    }
    let total: u64 = ranks2.iter().sum();
    let w_plus: u64 = ranks2.iter().zip(&positive).filter(|(_, p)| **p).map(|(r, _)| r).sum();
    let w = w_plus.min(total - w_plus);
    if 2 * w >= total {
        return 1.0;
    }
    // counts[s] = number of sign patterns with doubled W+ equal to s
    let mut counts = vec![0.0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in &ranks2 {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let w = w as usize;
    let tail: f64 = counts[..=w].iter().sum::<f64>() + counts[total as usize - w..].iter().sum::<f64>();
    (tail / 2f64.powi(ranks2.len() as i32)).min(1.0)
}

/// Normal approximation of the two-sided p-value with tie and continuity
/// corrections.
pub fn wilcoxon_normal_p(d: &[f64]) -> f64 {
    let (ranks2, positive, ties) = signed_ranks(d);
    let n = ranks2.len() as f64;
    if ranks2.is_empty() {
        return 1.0;
    }
    let w_plus: f64 = ranks2
        .iter()
        .zip(&positive)
        .filter(|(_, p)| **p)
        .map(|(r, _)| *r as f64 / 2.0)
        .sum();
    let total = n * (n + 1.0) / 2.0;
    let w = w_plus.min(total - w_plus);
    let mean = total / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum::<f64>() / 48.0;
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term;
    if !(var > 0.0) {
        return 1.0;
    }
    let z = ((w - mean + 0.5) / var.sqrt()).min(0.0);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * normal.cdf(z)).min(1.0)
}

/// Two-sided Wilcoxon signed-rank test on the paired differences `a − b`.
/// Zero differences are dropped; exact for up to
/// [`WILCOXON_EXACT_MAX_N`] non-zero differences, normal approximation
/// beyond.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<f64> {
    let d = paired_differences(a, b)?;
    let n = d.iter().filter(|x| **x != 0.0).count();
    Ok(if n <= WILCOXON_EXACT_MAX_N {
        wilcoxon_exact_p(&d)
    } else {
        wilcoxon_normal_p(&d)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub offset_min: f64,
    pub mean_nominal: f64,
    pub std_nominal: f64,
    pub mean_tuned: f64,
    pub std_tuned: f64,
    pub p_value: f64,
}

/// Per-flight metering errors (FL), one entry per offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightRecord {
    pub id: String,
    pub fit: FitResult,
    pub nominal_errors: Vec<f64>,
    pub tuned_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Observed prefix length for online runs; `None` offline.
    pub slice_s: Option<f64>,
    pub rows: Vec<ReportRow>,
    /// Fraction of flights predicted with the default parameters.
    pub default_ratio: f64,
    pub n_trajectories: usize,
    pub flights: Vec<FlightRecord>,
}

fn aggregate(slice_s: Option<f64>, spec: &MeteringSpec, flights: Vec<FlightRecord>) -> Result<EvaluationReport> {
    if flights.is_empty() {
        return Err(Error::domain("no flights to evaluate"));
    }
    let mut rows = Vec::with_capacity(spec.offsets_min.len());
    for (k, &offset_min) in spec.offsets_min.iter().enumerate() {
        let nominal: Vec<f64> = flights.iter().map(|f| f.nominal_errors[k]).collect();
        let tuned: Vec<f64> = flights.iter().map(|f| f.tuned_errors[k]).collect();
        let (mean_nominal, std_nominal) = summarize(&nominal);
        let (mean_tuned, std_tuned) = summarize(&tuned);
        rows.push(ReportRow {
            offset_min,
            mean_nominal,
            std_nominal,
            mean_tuned,
            std_tuned,
            p_value: wilcoxon_signed_rank(&tuned, &nominal)?,
        });
    }
    let fallbacks = flights.iter().filter(|f| f.fit.fell_back_to_default).count();
    Ok(EvaluationReport {
        slice_s,
        rows,
        default_ratio: fallbacks as f64 / flights.len() as f64,
        n_trajectories: flights.len(),
        flights,
    })
}

/// Initial state taken from the first observed sample.
pub fn initial_state(obs: &Trajectory) -> State {
    let s = obs.samples()[0];
    State {
        t: s.t,
        // recomputed by the simulator from (h, v)
        q: Mode {
            regime: SpeedRegime::Cas,
            layer: Layer::Low,
            trend: SpeedTrend::Cst,
        },
        h: s.h,
        v: s.v,
    }
}

/// Optimizer seed for the `index`-th work item.
pub fn item_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Whole-trajectory fits compared with the default parameters, metered from
/// take-off.
pub fn run_offline_experiment(
    dataset: &[Flight],
    bounds: &ParamBounds,
    cma_cfg: &CmaConfig,
    spec: &MeteringSpec,
    ctx: ClimbContext<'_>,
) -> Result<EvaluationReport> {
    spec.validate()?;
    let theta_d = ctx.default_theta();
    let records = dataset
        .par_iter()
        .enumerate()
        .map(|(k, flight)| {
            let obs = &flight.trajectory;
            let s0 = initial_state(obs);
            let level = estimation::cruise_level_fl(obs);
            let horizon = spec.max_offset_s().max(obs.span());
            let mut cma = cma_cfg.clone();
            cma.seed = item_seed(cma_cfg.seed, k);
            let fit = estimation::fit_offline(obs, &s0, bounds, &cma, ctx)?;
            let nominal = estimation::forecast(&theta_d, &s0, Some(level), horizon, obs.dt(), ctx)?;
            let tuned = estimation::forecast(&fit.theta, &s0, Some(level), horizon, obs.dt(), ctx)?;
            Ok(FlightRecord {
                id: flight.id.clone(),
                nominal_errors: metering_errors(&nominal, obs, spec, obs.t0(), Some(level))?,
                tuned_errors: metering_errors(&tuned, obs, spec, obs.t0(), Some(level))?,
                fit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    aggregate(None, spec, records)
}

/// Online predictions at each observed-prefix length in `slices_s`, compared
/// with the default parameters at offsets after the present time. One
/// report per slice.
pub fn run_online_experiment(
    dataset: &[Flight],
    slices_s: &[f64],
    online_cfg: &OnlineConfig,
    bounds: &ParamBounds,
    cma_cfg: &CmaConfig,
    spec: &MeteringSpec,
    ctx: ClimbContext<'_>,
) -> Result<Vec<EvaluationReport>> {
    spec.validate()?;
    online_cfg.validate()?;
    let theta_d = ctx.default_theta();
    let items: Vec<(usize, usize)> = (0..slices_s.len())
        .flat_map(|s| (0..dataset.len()).map(move |f| (s, f)))
        .collect();
    let records = items
        .par_iter()
        .enumerate()
        .map(|(k, &(si, fi))| {
            let flight = &dataset[fi];
            let obs = &flight.trajectory;
            let present = obs.t0() + slices_s[si];
            let idx = obs
                .index_at(present)
                .filter(|&i| i < obs.len())
                .ok_or_else(|| Error::domain(format!("flight {} does not cover t={present} s", flight.id)))?;
            let prefix = obs.truncated(idx + 1);
            let s0 = initial_state(obs);
            let level = estimation::cruise_level_fl(obs);
            let horizon = slices_s[si] + spec.max_offset_s();
            let mut cma = cma_cfg.clone();
            cma.seed = item_seed(cma_cfg.seed, k);
            let (fit, tuned) =
                estimation::predict_online(&prefix, &s0, Some(level), bounds, online_cfg, &cma, horizon, ctx)?;
            let nominal = estimation::forecast(&theta_d, &s0, Some(level), horizon, obs.dt(), ctx)?;
            Ok(FlightRecord {
                id: flight.id.clone(),
                nominal_errors: metering_errors(&nominal, obs, spec, present, Some(level))?,
                tuned_errors: metering_errors(&tuned, obs, spec, present, Some(level))?,
                fit,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut records = records.into_iter();
    slices_s
        .iter()
        .map(|&p| aggregate(Some(p), spec, records.by_ref().take(dataset.len()).collect()))
        .collect()
}

/// Aligned plain-text tables, one block per report.
pub fn render_table(reports: &[EvaluationReport]) -> String {
    let mut out = String::new();
    for r in reports {
        match r.slice_s {
            Some(p) => writeln!(
                out,
                "P = {p} s (n = {}, default ratio {:.3})",
                r.n_trajectories, r.default_ratio
            ),
            None => writeln!(out, "time after takeoff (n = {})", r.n_trajectories),
        }
        .expect("writing to a String");
        writeln!(
            out,
            "{:>8}  {:>12}  {:>11}  {:>10}  {:>9}  {:>10}",
            "offset", "nominal mean", "nominal std", "tuned mean", "tuned std", "p-value"
        )
        .expect("writing to a String");
        for row in &r.rows {
            writeln!(
                out,
                "{:>8}  {:>12.2}  {:>11.2}  {:>10.2}  {:>9.2}  {:>10.3e}",
                format!("{} min", row.offset_min),
                row.mean_nominal,
                row.std_nominal,
                row.mean_tuned,
                row.std_tuned,
                row.p_value
            )
            .expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

pub const REPORT_CSV_HEADER: [&str; 9] = [
    "slice_s",
    "offset_min",
    "mean_nominal_fl",
    "std_nominal_fl",
    "mean_tuned_fl",
    "std_tuned_fl",
    "p_value",
    "default_ratio",
    "n",
];

/// Machine-readable report. Offline reports carry `slice_s = 0`.
pub fn write_report_csv<W: Write>(reports: &[EvaluationReport], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(REPORT_CSV_HEADER)?;
    for r in reports {
        for row in &r.rows {
            w.write_record([
                r.slice_s.unwrap_or(0.0).to_string(),
                row.offset_min.to_string(),
                row.mean_nominal.to_string(),
                row.std_nominal.to_string(),
                row.mean_tuned.to_string(),
                row.std_tuned.to_string(),
                row.p_value.to_string(),
                r.default_ratio.to_string(),
                r.n_trajectories.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::TrajectorySample;

    fn track(alts_fl: &[f64], rocs: Option<&[f64]>) -> Trajectory {
        let samples = alts_fl
            .iter()
            .enumerate()
            .map(|(k, &fl)| TrajectorySample {
                t: 5.0 * k as f64,
                h: fl_to_m(fl),
                v: 120.0,
                roc: rocs.map_or(1.0, |r| r[k]),
            })
            .collect();
        Trajectory::new(5.0, samples).unwrap()
    }

    #[test]
    fn toc_is_first_argmax() {
        assert_eq!(top_of_climb(&track(&[0.0, 10.0, 20.0, 20.0, 19.0], None)), 2);
        assert_eq!(top_of_climb(&track(&[1.0, 2.0, 3.0], None)), 2);
        assert_eq!(top_of_climb(&track(&[7.0, 7.0, 7.0], None)), 0);
    }

    fn climb(top_fl: f64, duration_s: f64) -> Vec<f64> {
        let n = (duration_s / 5.0) as usize + 1;
        (0..n).map(|k| (k as f64 * 2.5).min(top_fl)).collect()
    }

    #[test]
    fn filters() {
        let c = FilterCriteria::default();
        let low = track(&climb(290.0, 1200.0), None);
        assert!(matches!(check_flight(&low, &c), Some(RejectReason::Cruise { .. })));
        let short = track(&climb(350.0, 1000.0), None);
        assert!(matches!(check_flight(&short, &c), Some(RejectReason::Duration { .. })));
        let ok = track(&climb(350.0, 1200.0), None);
        assert_eq!(check_flight(&ok, &c), None);

        // 35 s plateau (8 samples) at FL150
        let mut alts = Vec::new();
        let mut rocs = Vec::new();
        for k in 0..300 {
            let (fl, roc) = match k {
                0..60 => (k as f64 * 2.5, 1.0),
                60..68 => (150.0, 0.0),
                _ => ((150.0 + (k - 67) as f64 * 2.5).min(350.0), 1.0),
            };
            alts.push(fl);
            rocs.push(roc);
        }
        let plateau = track(&alts, Some(&rocs));
        match check_flight(&plateau, &c) {
            Some(RejectReason::LevelOff { t, duration_s }) => {
                assert_eq!(t, 300.0);
                assert_eq!(duration_s, 35.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn filter_is_idempotent() {
        let c = FilterCriteria::default();
        let flights = vec![
            Flight {
                id: "a".into(),
                trajectory: track(&climb(350.0, 1200.0), None),
            },
            Flight {
                id: "b".into(),
                trajectory: track(&climb(250.0, 1200.0), None),
            },
        ];
        let (kept, rejected) = filter_dataset(flights, &c);
        assert_eq!((kept.len(), rejected.len()), (1, 1));
        let (again, none) = filter_dataset(kept.clone(), &c);
        assert_eq!(again, kept);
        assert!(none.is_empty());
    }

    #[test]
    fn metering() {
        let spec = MeteringSpec::new(MeteringReference::Takeoff, vec![0.5, 1.0]).unwrap();
        let obs = track(&[0.0; 13], None);
        let pred = track(&[3.0; 13], None);
        assert_eq!(metering_errors(&obs, &obs, &spec, 0.0, None).unwrap(), vec![0.0, 0.0]);
        let e = metering_errors(&pred, &obs, &spec, 0.0, None).unwrap();
        assert!(e.iter().all(|x| (x - 3.0).abs() < 1e-12));
        let gaps: Vec<f64> = (0..13).map(|k| k as f64 * 0.25).collect();
        let e = metering_errors(&track(&gaps, None), &obs, &spec, 0.0, None).unwrap();
        assert!((e[0] - 1.5).abs() < 1e-12 && (e[1] - 3.0).abs() < 1e-12);
        // not covered
        let short = track(&[0.0; 5], None);
        assert!(metering_errors(&short, &obs, &spec, 0.0, None).is_err());
        // covered by the level
        let lvl = track(&[10.0; 5], None);
        let e = metering_errors(&lvl, &obs, &spec, 0.0, Some(10.0)).unwrap();
        assert!((e[1] - 10.0).abs() < 1e-9);
        assert!(MeteringSpec::new(MeteringReference::Takeoff, vec![5.0, 2.0]).is_err());
    }

    #[test]
    fn summary() {
        assert_eq!(summarize(&[2.0, 2.0, 2.0]), (2.0, 0.0));
        let (m, s) = summarize(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn wilcoxon_basics() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(wilcoxon_signed_rank(&a, &a).unwrap(), 1.0);
        let zero = [0.0; 6];
        assert_eq!(wilcoxon_signed_rank(&a, &zero).unwrap(), 0.03125);
        assert_eq!(wilcoxon_signed_rank(&zero, &a).unwrap(), 0.03125);
        assert!(wilcoxon_signed_rank(&a, &a[..5]).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let report = EvaluationReport {
            slice_s: Some(400.0),
            rows: vec![ReportRow {
                offset_min: 2.0,
                mean_nominal: 1.0,
                std_nominal: 0.5,
                mean_tuned: 0.25,
                std_tuned: 0.125,
                p_value: 0.5,
            }],
            default_ratio: 0.2,
            n_trajectories: 5,
            flights: Vec::new(),
        };
        let mut buf = Vec::new();
        write_report_csv(std::slice::from_ref(&report), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "slice_s,offset_min,mean_nominal_fl,std_nominal_fl,mean_tuned_fl,std_tuned_fl,p_value,default_ratio,n\n\
             400,2,1,0.5,0.25,0.125,0.5,0.2,5\n"
        );
        let table = render_table(&[report]);
        assert!(table.contains("P = 400 s"));
        assert!(table.contains("2 min"));
    }
}
