//! Seeded synthetic departures standing in for recorded radar tracks.
//!
//! Each flight draws its parameters uniformly from the spec ranges, climbs
//! from a fixed initial state to a sampled cruise level, holds it until the
//! track duration is reached, and optionally gets Gaussian altitude noise.
//! Flight `k` uses stream `k` of a ChaCha8 generator keyed by the seed, so a
//! smaller dataset is a prefix of a larger one with the same seed.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::atmosphere::cas_to_tas;
use crate::dynamics::{DynamicsConfig, HybridSystem, State, TuningParams};
use crate::error::{Error, Result};
use crate::estimation::{ParamBounds, SIM_DT};
use crate::integrator::{self, resample, Termination, Trajectory};
use crate::performance::AircraftPerfModel;
use crate::units::{fl_to_m, ft_to_m, kt_to_ms, FL};

use super::config::KeyValues;

/// Sample interval of generated tracks, s.
pub const SYNTH_DT: f64 = 5.0;

/// Draws per flight before giving up on reaching the cruise level.
const MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_trajectories: usize,
    pub seed: u64,
    /// kg
    pub mass_range: (f64, f64),
    /// K
    pub dt_range: (f64, f64),
    /// kt CAS
    pub v1_range: (f64, f64),
    /// kt CAS
    pub v2_range: (f64, f64),
    pub mach_range: (f64, f64),
    /// Cruise levels are drawn among the multiples of 10 in this range.
    pub cruise_fl_range: (f64, f64),
    /// Standard deviation of the altitude noise, FL.
    pub altitude_noise_sigma: f64,
    /// ft
    pub initial_altitude: f64,
    /// kt
    pub initial_cas: f64,
    /// Length of each track, s.
    pub duration_s: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_trajectories: 262,
            seed: 42,
            mass_range: (50_000.0, 75_000.0),
            dt_range: (-10.0, 10.0),
            v1_range: (220.0, 250.0),
            v2_range: (270.0, 330.0),
            mach_range: (0.74, 0.80),
            cruise_fl_range: (300.0, 370.0),
            altitude_noise_sigma: 0.5,
            initial_altitude: 1500.0,
            initial_cas: 160.0,
            duration_s: 2400.0,
        }
    }
}

impl SynthSpec {
    fn ranges(&self) -> [(&'static str, (f64, f64)); 5] {
        [
            ("mass", self.mass_range),
            ("dT", self.dt_range),
            ("v1", self.v1_range),
            ("v2", self.v2_range),
            ("mach", self.mach_range),
        ]
    }

    pub fn validate(&self, bounds: &ParamBounds) -> Result<()> {
        if self.n_trajectories < 1 {
            return Err(Error::config("n_trajectories", "must be at least 1"));
        }
        for ((name, (lo, hi)), (blo, bhi)) in self.ranges().into_iter().zip(bounds.pairs()) {
            if !(lo <= hi) {
                return Err(Error::config(name, format!("empty range {lo} / {hi}")));
            }
            if lo < blo || hi > bhi {
                return Err(Error::config(
                    name,
                    format!("range {lo} / {hi} leaves the bounds {blo} / {bhi}"),
                ));
            }
        }
        if self.v2_range.1 < self.v1_range.0 {
            return Err(Error::config("v2", "no v2 in range can reach the v1 range"));
        }
        let (lo, hi) = self.cruise_fl_range;
        if !(lo > 0.0 && (lo / 10.0).ceil() <= (hi / 10.0).floor()) {
            return Err(Error::config("cruise_fl", "range holds no multiple of 10"));
        }
        if !(self.altitude_noise_sigma >= 0.0) {
            return Err(Error::config("altitude_noise_sigma_fl", "must be non-negative"));
        }
        if !(self.initial_cas > 0.0) {
            return Err(Error::config("initial_cas_kt", "must be positive"));
        }
        if !(self.duration_s >= SYNTH_DT) {
            return Err(Error::config("duration_s", format!("must be at least {SYNTH_DT}")));
        }
        Ok(())
    }

    /// Spec file: defaults overridden by any `key = value` present.
    pub fn parse(text: &str) -> Result<(Self, Vec<String>)> {
        let kv = KeyValues::parse(text)?;
        let mut s = Self::default();
        if let Some(v) = kv.usize("n_trajectories")? {
            s.n_trajectories = v;
        }
        if let Some(v) = kv.u64("seed")? {
            s.seed = v;
        }
        let ranges: [(&str, &mut (f64, f64)); 6] = [
            ("mass", &mut s.mass_range),
            ("dT", &mut s.dt_range),
            ("v1", &mut s.v1_range),
            ("v2", &mut s.v2_range),
            ("mach", &mut s.mach_range),
            ("cruise_fl", &mut s.cruise_fl_range),
        ];
        for (name, range) in ranges {
            if let Some(v) = kv.f64(&format!("{name}_min"))? {
                range.0 = v;
            }
            if let Some(v) = kv.f64(&format!("{name}_max"))? {
                range.1 = v;
            }
        }
        let scalars: [(&str, &mut f64); 4] = [
            ("altitude_noise_sigma_fl", &mut s.altitude_noise_sigma),
            ("initial_altitude_ft", &mut s.initial_altitude),
            ("initial_cas_kt", &mut s.initial_cas),
            ("duration_s", &mut s.duration_s),
        ];
        for (key, slot) in scalars {
            if let Some(v) = kv.f64(key)? {
                *slot = v;
            }
        }
        let known = [
            "n_trajectories",
            "seed",
            "mass_min",
            "mass_max",
            "dT_min",
            "dT_max",
            "v1_min",
            "v1_max",
            "v2_min",
            "v2_max",
            "mach_min",
            "mach_max",
            "cruise_fl_min",
            "cruise_fl_max",
            "altitude_noise_sigma_fl",
            "initial_altitude_ft",
            "initial_cas_kt",
            "duration_s",
        ];
        Ok((s, kv.unknown_keys(&known)))
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<String>)> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFlight {
    /// File name, `flight_NNNN.csv`.
    pub id: String,
    pub trajectory: Trajectory,
    pub truth: TuningParams,
    pub cruise_fl: f64,
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Initial state of every generated flight for parameters `theta`.
pub fn initial_state(
    spec: &SynthSpec,
    theta: &TuningParams,
    model: &AircraftPerfModel,
    cfg: &DynamicsConfig,
) -> Result<State> {
    let h = ft_to_m(spec.initial_altitude);
    let v = cas_to_tas(kt_to_ms(spec.initial_cas), h, theta.delta_t)?;
    let sys = HybridSystem::new(*theta, cfg, model)?;
    Ok(State {
        t: 0.0,
        q: sys.mode_of(v, h),
        h,
        v,
    })
}

/// Generates `spec.n_trajectories` flights with their generating parameters.
pub fn generate_synthetic(
    spec: &SynthSpec,
    bounds: &ParamBounds,
    model: &AircraftPerfModel,
    cfg: &DynamicsConfig,
) -> Result<Vec<SyntheticFlight>> {
    spec.validate(bounds)?;
    (0..spec.n_trajectories)
        .map(|k| generate_one(spec, k, model, cfg))
        .collect()
}

fn generate_one(
    spec: &SynthSpec,
    k: usize,
    model: &AircraftPerfModel,
    cfg: &DynamicsConfig,
) -> Result<SyntheticFlight> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(k as u64);
    let n_samples = (spec.duration_s / SYNTH_DT).floor() as usize + 1;
    let horizon = (n_samples - 1) as f64 * SYNTH_DT;
    let fl_lo = (spec.cruise_fl_range.0 / 10.0).ceil() as i64;
    let fl_hi = (spec.cruise_fl_range.1 / 10.0).floor() as i64;
    for _ in 0..MAX_ATTEMPTS {
        let theta = TuningParams {
            mass: uniform(&mut rng, spec.mass_range),
            delta_t: uniform(&mut rng, spec.dt_range),
            v1: uniform(&mut rng, spec.v1_range),
            v2: uniform(&mut rng, spec.v2_range),
            mach: uniform(&mut rng, spec.mach_range),
        };
        let cruise_fl = rng.random_range(fl_lo..=fl_hi) as f64 * 10.0;
        if theta.v2 < theta.v1 {
            continue;
        }
        let s0 = initial_state(spec, &theta, model, cfg)?;
        let out = integrator::simulate(&theta, &s0, Some(cruise_fl), horizon, SIM_DT, cfg, model)?;
        if out.termination != Termination::ReachedLevel {
            continue;
        }
        let climb = resample(&out.trajectory, SYNTH_DT)?;
        let mut trajectory = climb.padded(n_samples, fl_to_m(cruise_fl));
        if spec.altitude_noise_sigma > 0.0 {
            trajectory = add_noise(&trajectory, spec.altitude_noise_sigma, &mut rng)?;
        }
        return Ok(SyntheticFlight {
            id: format!("flight_{:04}.csv", k + 1),
            trajectory,
            truth: theta,
            cruise_fl,
        });
    }
    Err(Error::config(
        "cruise_fl",
        format!(
            "flight {}: no draw reached its cruise level within {} s",
            k + 1,
            spec.duration_s
        ),
    ))
}

/// Adds N(0, sigma FL) to each altitude and recomputes the rate of climb by
/// finite differences (central inside, one-sided at the ends).
fn add_noise(traj: &Trajectory, sigma_fl: f64, rng: &mut ChaCha8Rng) -> Result<Trajectory> {
    let normal =
        Normal::new(0.0, sigma_fl * FL).map_err(|e| Error::config("altitude_noise_sigma_fl", e.to_string()))?;
    let mut samples = traj.samples().to_vec();
    for s in &mut samples {
        s.h += normal.sample(rng);
    }
    let h: Vec<f64> = samples.iter().map(|s| s.h).collect();
    let dt = traj.dt();
    let n = h.len();
    for (k, s) in samples.iter_mut().enumerate() {
        s.roc = if n < 2 {
            0.0
        } else if k == 0 {
            (h[1] - h[0]) / dt
        } else if k == n - 1 {
            (h[n - 1] - h[n - 2]) / dt
        } else {
            (h[k + 1] - h[k - 1]) / (2.0 * dt)
        };
    }
    Trajectory::new(dt, samples)
}

pub const TRUTH_HEADER: [&str; 6] = ["file", "mass_kg", "dT_K", "v1_kt", "v2_kt", "mach"];

pub fn write_truth<W: Write>(flights: &[SyntheticFlight], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(TRUTH_HEADER)?;
    for f in flights {
        let t = &f.truth;
        w.write_record([
            f.id.clone(),
            t.mass.to_string(),
            t.delta_t.to_string(),
            t.v1.to_string(),
            t.v2.to_string(),
            t.mach.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a truth manifest as (file, parameters) pairs.
pub fn read_truth<R: std::io::Read>(source: R) -> Result<Vec<(String, TuningParams)>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    if r.headers()?.iter().ne(TRUTH_HEADER) {
        return Err(Error::Parse {
            row: 0,
            msg: format!("header must be {}", TRUTH_HEADER.join(",")),
        });
    }
    r.records()
        .enumerate()
        .map(|(k, rec)| {
            let row = k + 1;
            let rec = rec.map_err(|e| Error::Parse {
                row,
                msg: e.to_string(),
            })?;
            let mut a = [0.0; 5];
            for (i, slot) in a.iter_mut().enumerate() {
                let field = rec.get(i + 1).unwrap_or("");
                *slot = field.parse().map_err(|_| Error::Parse {
                    row,
                    msg: format!("{}: not a number: {field:?}", TRUTH_HEADER[i + 1]),
                })?;
            }
            Ok((rec.get(0).unwrap_or("").to_string(), TuningParams::from_array(a)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize, sigma: f64) -> SynthSpec {
        SynthSpec {
            n_trajectories: n,
            altitude_noise_sigma: sigma,
            ..SynthSpec::default()
        }
    }

    fn gen(spec: &SynthSpec) -> Vec<SyntheticFlight> {
        let model = AircraftPerfModel::a320_like();
        let bounds = ParamBounds::for_model(&model);
        generate_synthetic(spec, &bounds, &model, &DynamicsConfig::default()).unwrap()
    }

    #[test]
    fn deterministic_and_prefix_stable() {
        let a = gen(&small(4, 0.5));
        let b = gen(&small(4, 0.5));
        assert_eq!(a, b);
        let c = gen(&small(2, 0.5));
        assert_eq!(&a[..2], &c[..]);
    }

    #[test]
    fn noise_free_is_the_simulation() {
        let model = AircraftPerfModel::a320_like();
        let cfg = DynamicsConfig::default();
        let spec = small(2, 0.0);
        for f in gen(&spec) {
            assert!(f.truth.v2 >= f.truth.v1);
            let s0 = initial_state(&spec, &f.truth, &model, &cfg).unwrap();
            let out =
                integrator::simulate(&f.truth, &s0, Some(f.cruise_fl), spec.duration_s, SIM_DT, &cfg, &model).unwrap();
            let sim = resample(&out.trajectory, SYNTH_DT).unwrap();
            assert_eq!(&f.trajectory.samples()[..sim.len()], sim.samples());
            assert_eq!(f.trajectory.last().h, fl_to_m(f.cruise_fl));
            assert_eq!(f.trajectory.span(), spec.duration_s);
        }
    }

    #[test]
    fn spec_validation() {
        let model = AircraftPerfModel::a320_like();
        let bounds = ParamBounds::for_model(&model);
        let s = SynthSpec {
            mass_range: (30_000.0, 60_000.0),
            ..SynthSpec::default()
        };
        assert!(s.validate(&bounds).is_err());
        let s = SynthSpec {
            altitude_noise_sigma: -1.0,
            ..SynthSpec::default()
        };
        assert!(s.validate(&bounds).is_err());
        let s = SynthSpec {
            cruise_fl_range: (301.0, 309.0),
            ..SynthSpec::default()
        };
        assert!(s.validate(&bounds).is_err());
        assert!(SynthSpec::default().validate(&bounds).is_ok());
    }

    #[test]
    fn spec_file() {
        let (s, w) = SynthSpec::parse("n_trajectories = 5\nseed = 9\nmass_min = 55000\ncolour = red\n").unwrap();
        assert_eq!((s.n_trajectories, s.seed, s.mass_range.0), (5, 9, 55_000.0));
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn truth_round_trip() {
        let flights = gen(&small(3, 0.5));
        let mut buf = Vec::new();
        write_truth(&flights, &mut buf).unwrap();
        let back = read_truth(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 3);
        for (f, (name, t)) in flights.iter().zip(back) {
            assert_eq!(f.id, name);
            assert_eq!(f.truth, t);
        }
    }
}
