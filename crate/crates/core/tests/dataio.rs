use climb_core::dataio::synth::{generate_synthetic, read_truth, write_truth, SynthSpec};
use climb_core::dataio::{load_dataset, parse_trajectory_csv, write_dataset, write_trajectory_csv};
use climb_core::estimation::{cruise_level_fl, offline_objective};
use climb_core::evaluation::{
    filter_dataset, initial_state, metering_errors, top_of_climb, FilterCriteria, MeteringSpec,
};
use climb_core::units::{ft_to_m, kt_to_ms, FPM};
use climb_core::{AircraftPerfModel, ClimbContext, DynamicsConfig, Flight, ParamBounds, Trajectory, TrajectorySample};
use proptest::prelude::*;

fn small_spec(n: usize, sigma: f64) -> SynthSpec {
    SynthSpec {
        n_trajectories: n,
        altitude_noise_sigma: sigma,
        ..SynthSpec::default()
    }
}

#[test]
fn generated_flights_pass_the_filters() {
    let model = AircraftPerfModel::a320_like();
    let dynamics = DynamicsConfig::default();
    let flights = generate_synthetic(&small_spec(12, 0.5), &ParamBounds::for_model(&model), &model, &dynamics).unwrap();
    let flights: Vec<Flight> = flights
        .into_iter()
        .map(|f| Flight {
            id: f.id,
            trajectory: f.trajectory,
        })
        .collect();
    let (kept, rejected) = filter_dataset(flights, &FilterCriteria::default());
    assert!(rejected.is_empty(), "{rejected:?}");
    assert_eq!(kept.len(), 12);
}

#[test]
fn noise_free_flight_scores_zero_at_truth() {
    let model = AircraftPerfModel::a320_like();
    let dynamics = DynamicsConfig::default();
    let ctx = ClimbContext::new(&model, &dynamics);
    let flights = generate_synthetic(&small_spec(4, 0.0), &ParamBounds::for_model(&model), &model, &dynamics).unwrap();
    for f in &flights {
        let obs = &f.trajectory;
        assert_eq!(cruise_level_fl(obs), f.cruise_fl);
        let j = top_of_climb(obs);
        let e = offline_objective(&f.truth, obs, &initial_state(obs), 0, j, f.cruise_fl, ctx).unwrap();
        assert!(e < 1e-6, "{}: {e}", f.id);
    }
}

#[test]
fn dataset_and_truth_round_trip_through_files() {
    let model = AircraftPerfModel::a320_like();
    let dynamics = DynamicsConfig::default();
    let flights = generate_synthetic(&small_spec(3, 0.5), &ParamBounds::for_model(&model), &model, &dynamics).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let as_flights: Vec<Flight> = flights
        .iter()
        .map(|f| Flight {
            id: f.id.clone(),
            trajectory: f.trajectory.clone(),
        })
        .collect();
    write_dataset(dir.path(), &as_flights).unwrap();
    let mut truth = Vec::new();
    write_truth(&flights, &mut truth).unwrap();
    std::fs::write(dir.path().join("truth.csv"), &truth).unwrap();

    let loaded = load_dataset(dir.path()).unwrap();
    assert_eq!(loaded.len(), 3);
    for (a, b) in loaded.iter().zip(&as_flights) {
        assert_eq!(a.id, b.id);
        assert_eq!(a.trajectory.len(), b.trajectory.len());
        for (x, y) in a.trajectory.samples().iter().zip(b.trajectory.samples()) {
            assert!((x.h - y.h).abs() < 1e-9 && (x.v - y.v).abs() < 1e-9);
        }
    }
    let back = read_truth(truth.as_slice()).unwrap();
    for ((id, theta), f) in back.iter().zip(&flights) {
        assert_eq!(id, &f.id);
        assert_eq!(theta, &f.truth);
    }
}

fn trajectory(dt: f64, alts_ft: &[f64], tas_kt: f64) -> Trajectory {
    let samples = alts_ft
        .iter()
        .enumerate()
        .map(|(k, a)| TrajectorySample {
            t: 10.0 + k as f64 * dt,
            h: ft_to_m(*a),
            v: kt_to_ms(tas_kt),
            roc: 1000.0 * FPM,
        })
        .collect();
    Trajectory::new(dt, samples).unwrap()
}

proptest! {
    #[test]
    fn csv_write_parse_closes(alts in prop::collection::vec(0.0f64..40_000.0, 2..40), dt in 1u32..10, tas in 120.0f64..500.0) {
        let traj = trajectory(f64::from(dt), &alts, tas);
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let back = parse_trajectory_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), traj.len());
        for (a, b) in back.samples().iter().zip(traj.samples()) {
            prop_assert!((a.t - b.t).abs() < 1e-9);
            prop_assert!((a.h - b.h).abs() <= 1e-9 * b.h.abs().max(1.0));
            prop_assert!((a.v - b.v).abs() <= 1e-9 * b.v);
            prop_assert!((a.roc - b.roc).abs() <= 1e-9);
        }
    }

    #[test]
    fn metering_errors_ignore_common_altitude_shift(
        pred in prop::collection::vec(0.0f64..30_000.0, 300..320),
        obs in prop::collection::vec(0.0f64..30_000.0, 300..320),
        shift in -5000.0f64..5000.0,
    ) {
        let spec = MeteringSpec::offline_default();
        let e = |p: &[f64], o: &[f64]| {
            metering_errors(&trajectory(5.0, p, 250.0), &trajectory(5.0, o, 250.0), &spec, 10.0, None).unwrap()
        };
        let shifted = |v: &[f64]| v.iter().map(|a| a + shift).collect::<Vec<_>>();
        let base = e(&pred, &obs);
        let moved = e(&shifted(&pred), &shifted(&obs));
        for (a, b) in base.iter().zip(&moved) {
            prop_assert!((a - b).abs() < 1e-6);
        }
    }
}
