use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use climb_core::atmosphere::cas_to_tas;
use climb_core::cmaes::CmaConfig;
use climb_core::dataio::config::{load_aircraft, load_bounds, load_online_config};
use climb_core::dataio::synth::{generate_synthetic, write_truth, SynthSpec};
use climb_core::dataio::{load_dataset, parse_trajectory_csv, write_dataset, write_trajectory_csv, TRUTH_FILE};
use climb_core::estimation::{
    self, fit_offline, offline_cma_config, offline_objective, online_cma_config, predict_online, SIM_DT,
};
use climb_core::evaluation::{
    check_flight, filter_dataset, initial_state, render_table, run_offline_experiment, run_online_experiment,
    top_of_climb, write_report_csv, FilterCriteria, MeteringReference,
};
use climb_core::integrator::{simulate, Termination};
use climb_core::units::{ft_to_m, kt_to_ms, m_to_fl};
use climb_core::{
    AircraftPerfModel, ClimbContext, DynamicsConfig, Error, EvaluationReport, Flight, HybridSystem, MeteringSpec,
    OnlineConfig, ParamBounds, State, Trajectory, TuningParams,
};
use serde::Serialize;

use crate::args::{
    Cli, Command, EvaluateArgs, EvaluateOnlineArgs, FitArgs, FlightArgs, MassSweepArgs, ModelArgs, NumberList,
    PredictArgs, SearchArgs, SimulateArgs, SynthArgs,
};
use crate::error::{CliError, CliResult};
use crate::settings::Settings;

/// Seed used when neither `--seed` nor the config file sets one.
pub const DEFAULT_SEED: u64 = 42;

/// Smallest dataset the evaluation commands accept after filtering.
const MIN_TRAJECTORIES: usize = 5;

const DEFAULT_INITIAL_ALT_FT: f64 = 1500.0;
const DEFAULT_INITIAL_CAS_KT: f64 = 160.0;
const DEFAULT_CRUISE_FL: f64 = 350.0;
const DEFAULT_DT: f64 = 5.0;
const DEFAULT_SIM_HORIZON: f64 = 3000.0;
const DEFAULT_PREDICT_HORIZON: f64 = 600.0;
const DEFAULT_SLICES: [f64; 3] = [400.0, 500.0, 600.0];

pub fn run(cli: Cli) -> CliResult<()> {
    let settings = Settings::load(cli.config.as_deref())?;
    if let Some(jobs) = settings.value(cli.jobs, "jobs")? {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot set up {jobs} worker threads: {e}")))?;
    }
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&settings, a),
        Command::Fit(a) => cmd_fit(&settings, a),
        Command::Predict(a) => cmd_predict(&settings, a),
        Command::EvaluateOffline(a) => cmd_evaluate_offline(&settings, a),
        Command::EvaluateOnline(a) => cmd_evaluate_online(&settings, a),
        Command::Synth(a) => cmd_synth(&settings, a),
        Command::MassSweep(a) => cmd_mass_sweep(&settings, a),
    }
}

fn input_error(path: &Path, e: Error) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

struct Aircraft {
    model: AircraftPerfModel,
    dynamics: DynamicsConfig,
}

impl Aircraft {
    fn ctx(&self) -> ClimbContext<'_> {
        ClimbContext::new(&self.model, &self.dynamics)
    }
}

fn aircraft(settings: &Settings, args: &ModelArgs) -> CliResult<Aircraft> {
    match settings.path(args.aircraft.clone(), "aircraft") {
        Some(path) => {
            let cfg = load_aircraft(&path).map_err(|e| input_error(&path, e))?;
            Ok(Aircraft {
                model: cfg.model,
                dynamics: cfg.dynamics,
            })
        }
        None => Ok(Aircraft {
            model: AircraftPerfModel::a320_like(),
            dynamics: DynamicsConfig::default(),
        }),
    }
}

fn bounds(settings: &Settings, cli: Option<PathBuf>, model: &AircraftPerfModel) -> CliResult<ParamBounds> {
    match settings.path(cli, "bounds") {
        Some(path) => Ok(load_bounds(&path, model).map_err(|e| input_error(&path, e))?.0),
        None => Ok(ParamBounds::for_model(model)),
    }
}

fn online_settings(settings: &Settings, cli: Option<PathBuf>, budget: Option<usize>) -> CliResult<OnlineConfig> {
    let mut cfg = match settings.path(cli, "online_config") {
        Some(path) => load_online_config(&path).map_err(|e| input_error(&path, e))?.0,
        None => OnlineConfig::default(),
    };
    if let Some(b) = budget {
        cfg.evals_budget = b;
    }
    cfg.validate().map_err(CliError::Config)?;
    Ok(cfg)
}

/// Optimizer settings: `base(seed)` with budget and population overrides.
fn search(settings: &Settings, args: &SearchArgs, base: fn(u64) -> CmaConfig) -> CliResult<CmaConfig> {
    let mut cfg = base(settings.or(args.seed, "seed", DEFAULT_SEED)?);
    if let Some(b) = budget(settings, args)? {
        cfg.max_evals = b;
    }
    if let Some(p) = settings.value(args.population, "population")? {
        cfg.population = p;
    }
    if let Some(s) = settings.value(None, "sigma0")? {
        cfg.sigma0 = s;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn budget(settings: &Settings, args: &SearchArgs) -> CliResult<Option<usize>> {
    let b = settings.value(args.budget, "budget")?;
    if b == Some(0) {
        return Err(CliError::Usage("--budget must be at least 1".into()));
    }
    Ok(b)
}

fn read_trajectory(path: &Path) -> CliResult<Trajectory> {
    let file = fs::File::open(path).map_err(|e| input_error(path, e.into()))?;
    parse_trajectory_csv(file).map_err(|e| input_error(path, e))
}

/// Writes `bytes` to `path`, or to standard output.
fn emit(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|source| CliError::Output {
            path: p.to_path_buf(),
            source,
        }),
        None => std::io::stdout().write_all(bytes).map_err(|source| CliError::Output {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

/// Human-readable notes go to standard output unless it carries the data.
fn note(data_on_stdout: bool, text: &str) {
    if data_on_stdout {
        eprintln!("{text}");
    } else {
        println!("{text}");
    }
}

fn trajectory_csv(traj: &Trajectory) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write_trajectory_csv(traj, &mut buf)?;
    Ok(buf)
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s.into_bytes()
}

fn apply_params(mut theta: TuningParams, assignments: &[String]) -> CliResult<TuningParams> {
    for a in assignments {
        let (key, value) = a
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("parameter {a:?} is not of the form key=value")))?;
        let value: f64 = value
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| CliError::Usage(format!("parameter {a:?}: not a number")))?;
        match key.trim() {
            "m" | "mass" => theta.mass = value,
            "dT" | "delta_t" => theta.delta_t = value,
            "v1" => theta.v1 = value,
            "v2" => theta.v2 = value,
            "M" | "mach" => theta.mach = value,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown parameter {other:?} (use m, dT, v1, v2, mach)"
                )))
            }
        }
    }
    Ok(theta)
}

struct FlightSetup {
    theta: TuningParams,
    initial_alt_ft: f64,
    initial_cas_kt: f64,
    cruise_fl: f64,
    dt: f64,
    horizon: f64,
}

fn flight_setup(settings: &Settings, args: &FlightArgs, ac: &Aircraft) -> CliResult<FlightSetup> {
    let assignments = settings.assignments(args.params.clone(), "params");
    let setup = FlightSetup {
        theta: apply_params(TuningParams::nominal(&ac.model), &assignments)?,
        initial_alt_ft: settings.or(args.initial_alt, "initial_alt", DEFAULT_INITIAL_ALT_FT)?,
        initial_cas_kt: settings.or(args.initial_cas, "initial_cas", DEFAULT_INITIAL_CAS_KT)?,
        cruise_fl: settings.or(args.cruise_fl, "cruise_fl", DEFAULT_CRUISE_FL)?,
        dt: settings.or(args.dt, "dt", DEFAULT_DT)?,
        horizon: settings.or(args.horizon, "horizon", DEFAULT_SIM_HORIZON)?,
    };
    if !(setup.dt > 0.0) || !(setup.horizon > 0.0) {
        return Err(CliError::Usage("--dt and --horizon must be positive".into()));
    }
    if !(setup.initial_cas_kt > 0.0) || !(setup.initial_alt_ft >= 0.0) {
        return Err(CliError::Usage(
            "initial altitude and speed must be non-negative and positive".into(),
        ));
    }
    if !(setup.cruise_fl > 0.0) {
        return Err(CliError::Usage("--cruise-fl must be positive".into()));
    }
    if setup.cruise_fl * 100.0 > ac.model.h_max {
        return Err(CliError::Simulation(Error::Envelope(format!(
            "cruise level FL{} above the {} ft ceiling",
            setup.cruise_fl, ac.model.h_max
        ))));
    }
    Ok(setup)
}

fn start_state(setup: &FlightSetup, theta: &TuningParams, ac: &Aircraft) -> CliResult<State> {
    let h = ft_to_m(setup.initial_alt_ft);
    let v = cas_to_tas(kt_to_ms(setup.initial_cas_kt), h, theta.delta_t)?;
    let sys = HybridSystem::new(*theta, &ac.dynamics, &ac.model)?;
    Ok(State {
        t: 0.0,
        q: sys.mode_of(v, h),
        h,
        v,
    })
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::ReachedLevel => "reached_level",
        Termination::Horizon => "horizon",
        Termination::Ceiling => "ceiling",
    }
}

fn cmd_simulate(settings: &Settings, args: SimulateArgs) -> CliResult<()> {
    let ac = aircraft(settings, &args.model)?;
    let setup = flight_setup(settings, &args.flight, &ac)?;
    let s0 = start_state(&setup, &setup.theta, &ac)?;
    let fine = simulate(
        &setup.theta,
        &s0,
        Some(setup.cruise_fl),
        setup.horizon,
        SIM_DT,
        &ac.dynamics,
        &ac.model,
    )?;
    let traj = estimation::forecast(
        &setup.theta,
        &s0,
        Some(setup.cruise_fl),
        setup.horizon,
        setup.dt,
        ac.ctx(),
    )?;
    let out = settings.path(args.out, "out");
    emit(out.as_deref(), &trajectory_csv(&traj)?)?;
    let top = fine.trajectory.samples()[top_of_climb(&fine.trajectory)];
    note(
        out.is_none(),
        &format!(
            "termination: {}\ntop_of_climb_s: {}\ntop_of_climb_fl: {:.1}\nmode_switches: {}",
            termination_name(fine.termination),
            top.t,
            m_to_fl(top.h),
            fine.mode_switch_count
        ),
    );
    Ok(())
}

#[derive(Serialize)]
struct FitReport {
    obs: String,
    seed: u64,
    level_fl: f64,
    samples_fitted: usize,
    theta: TuningParams,
    objective_fl: f64,
    mean_abs_error_fl: f64,
    default_objective_fl: f64,
    evals: usize,
}

fn cmd_fit(settings: &Settings, args: FitArgs) -> CliResult<()> {
    let obs_path = settings.required_path(args.obs, "obs")?;
    let ac = aircraft(settings, &args.model)?;
    let bounds = bounds(settings, args.search.bounds.clone(), &ac.model)?;
    let cma = search(settings, &args.search, offline_cma_config)?;
    let obs = read_trajectory(&obs_path)?;
    if !settings.switch(args.no_filter, "no_filter")? {
        if let Some(reason) = check_flight(&obs, &FilterCriteria::default()) {
            return Err(CliError::Usage(format!(
                "{}: rejected by the dataset filters ({reason}); pass --no-filter to fit it anyway",
                obs_path.display()
            )));
        }
    }
    let ctx = ac.ctx();
    let s0 = initial_state(&obs);
    let level = estimation::cruise_level_fl(&obs);
    let j = top_of_climb(&obs);
    let fit = fit_offline(&obs, &s0, &bounds, &cma, ctx).map_err(CliError::optimizer)?;
    let default_objective =
        offline_objective(&ctx.default_theta(), &obs, &s0, 0, j, level, ctx).map_err(CliError::optimizer)?;
    let report = FitReport {
        obs: obs_path.display().to_string(),
        seed: cma.seed,
        level_fl: level,
        samples_fitted: j + 1,
        theta: fit.theta,
        objective_fl: fit.objective,
        mean_abs_error_fl: fit.objective / (j + 1) as f64,
        default_objective_fl: default_objective,
        evals: fit.evals,
    };
    let out = settings.path(args.out, "out");
    emit(out.as_deref(), &json(&report))?;
    if out.is_some() {
        println!(
            "mean absolute error {:.4} FL over {} samples ({} evaluations)",
            report.mean_abs_error_fl, report.samples_fitted, report.evals
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct PredictReport {
    obs: String,
    seed: u64,
    present_s: f64,
    horizon_s: f64,
    prefix_samples: usize,
    theta: TuningParams,
    lambda_used: Option<f64>,
    fell_back_to_default: bool,
    validation_error_fl: Option<f64>,
    objective: f64,
    evals: usize,
}

fn cmd_predict(settings: &Settings, args: PredictArgs) -> CliResult<()> {
    let obs_path = settings.required_path(args.obs, "obs")?;
    let present: f64 = settings.required(args.present, "present")?;
    let horizon = settings.or(args.horizon, "horizon", DEFAULT_PREDICT_HORIZON)?;
    if !(present >= 0.0) || !(horizon > 0.0) {
        return Err(CliError::Usage(
            "--present must be non-negative and --horizon positive".into(),
        ));
    }
    let cruise_fl = settings.value(args.cruise_fl, "cruise_fl")?;
    let ac = aircraft(settings, &args.model)?;
    let bounds = bounds(settings, args.search.bounds.clone(), &ac.model)?;
    let cma = search(settings, &args.search, online_cma_config)?;
    let online = online_settings(settings, args.online_config, budget(settings, &args.search)?)?;
    if let Some(fl) = cruise_fl {
        if fl * 100.0 > ac.model.h_max {
            return Err(CliError::Simulation(Error::Envelope(format!(
                "cruise level FL{fl} above the {} ft ceiling",
                ac.model.h_max
            ))));
        }
    }
    let obs = read_trajectory(&obs_path)?;
    let cut = obs
        .samples()
        .iter()
        .take_while(|s| s.t <= obs.t0() + present + 1e-9)
        .count();
    let prefix = obs.truncated(cut.max(1));
    let s0 = initial_state(&obs);
    let (fit, pred) = predict_online(
        &prefix,
        &s0,
        cruise_fl,
        &bounds,
        &online,
        &cma,
        present + horizon,
        ac.ctx(),
    )
    .map_err(CliError::optimizer)?;
    let report = PredictReport {
        obs: obs_path.display().to_string(),
        seed: cma.seed,
        present_s: present,
        horizon_s: horizon,
        prefix_samples: prefix.len(),
        theta: fit.theta,
        lambda_used: fit.lambda_used,
        fell_back_to_default: fit.fell_back_to_default,
        validation_error_fl: fit.validation_error_fl,
        objective: fit.objective,
        evals: fit.evals,
    };
    let out = settings.path(args.out, "out");
    let report_path = settings.path(args.report, "report");
    emit(out.as_deref(), &trajectory_csv(&pred)?)?;
    match report_path {
        Some(p) => emit(Some(&p), &json(&report))?,
        None => note(out.is_none(), String::from_utf8_lossy(&json(&report)).trim_end()),
    }
    Ok(())
}

/// Loads and filters the dataset; fewer than [`MIN_TRAJECTORIES`] left is an
/// error.
fn dataset(settings: &Settings, args: &EvaluateArgs) -> CliResult<Vec<Flight>> {
    let dir = settings.required_path(args.dataset.clone(), "dataset")?;
    if !dir.is_dir() {
        return Err(CliError::Usage(format!("{} is not a directory", dir.display())));
    }
    let flights = load_dataset(&dir).map_err(|e| input_error(&dir, e))?;
    let total = flights.len();
    let kept = if settings.switch(args.no_filter, "no_filter")? {
        flights
    } else {
        let (kept, rejected) = filter_dataset(flights, &FilterCriteria::default());
        for (f, reason) in &rejected {
            log::info!("{}: rejected ({reason})", f.id);
        }
        kept
    };
    eprintln!("{} of {total} trajectories kept", kept.len());
    if kept.len() < MIN_TRAJECTORIES {
        return Err(CliError::TooFewTrajectories {
            kept: kept.len(),
            needed: MIN_TRAJECTORIES,
        });
    }
    Ok(kept)
}

fn metering(settings: &Settings, cli: Option<NumberList>, reference: MeteringReference) -> CliResult<MeteringSpec> {
    let offsets = settings.list(cli.map(|l| l.0), "offsets")?;
    let spec = match offsets {
        Some(o) => MeteringSpec::new(reference, o).map_err(|e| CliError::Usage(e.to_string()))?,
        None => match reference {
            MeteringReference::Takeoff => MeteringSpec::offline_default(),
            MeteringReference::CurrentTime => MeteringSpec::online_default(),
        },
    };
    Ok(spec)
}

fn publish(settings: &Settings, args: &EvaluateArgs, reports: &[EvaluationReport]) -> CliResult<()> {
    let table = render_table(reports);
    if let Some(path) = settings.path(args.report.clone(), "report") {
        let mut buf = Vec::new();
        write_report_csv(reports, &mut buf)?;
        emit(Some(&path), &buf)?;
    }
    if let Some(path) = settings.path(args.table.clone(), "table") {
        emit(Some(&path), table.as_bytes())?;
    }
    print!("{table}");
    Ok(())
}

fn cmd_evaluate_offline(settings: &Settings, args: EvaluateArgs) -> CliResult<()> {
    let ac = aircraft(settings, &args.model)?;
    let bounds = bounds(settings, args.search.bounds.clone(), &ac.model)?;
    let cma = search(settings, &args.search, offline_cma_config)?;
    let spec = metering(settings, args.offsets.clone(), MeteringReference::Takeoff)?;
    let flights = dataset(settings, &args)?;
    let report = run_offline_experiment(&flights, &bounds, &cma, &spec, ac.ctx()).map_err(CliError::optimizer)?;
    publish(settings, &args, &[report])
}

fn cmd_evaluate_online(settings: &Settings, args: EvaluateOnlineArgs) -> CliResult<()> {
    let common = &args.common;
    let ac = aircraft(settings, &common.model)?;
    let bounds = bounds(settings, common.search.bounds.clone(), &ac.model)?;
    let cma = search(settings, &common.search, online_cma_config)?;
    let online = online_settings(settings, args.online_config.clone(), budget(settings, &common.search)?)?;
    let spec = metering(settings, common.offsets.clone(), MeteringReference::CurrentTime)?;
    let slices = settings
        .list(args.slices.clone().map(|l| l.0), "slices")?
        .unwrap_or_else(|| DEFAULT_SLICES.to_vec());
    if slices.is_empty() || slices.iter().any(|p| !(*p > 0.0)) {
        return Err(CliError::Usage("--slices must be positive times".into()));
    }
    let flights = dataset(settings, common)?;
    let latest = slices.iter().copied().fold(0.0, f64::max);
    if let Some(short) = flights.iter().find(|f| f.trajectory.span() < latest) {
        return Err(CliError::Usage(format!(
            "{} covers {} s, shorter than the {latest} s slice",
            short.id,
            short.trajectory.span()
        )));
    }
    let reports = run_online_experiment(&flights, &slices, &online, &bounds, &cma, &spec, ac.ctx())
        .map_err(CliError::optimizer)?;
    for r in &reports {
        eprintln!(
            "P = {} s: default parameters chosen for {:.1}% of the flights",
            r.slice_s.unwrap_or_default(),
            100.0 * r.default_ratio
        );
    }
    publish(settings, common, &reports)
}

fn cmd_synth(settings: &Settings, args: SynthArgs) -> CliResult<()> {
    let out = settings.required_path(args.out, "out")?;
    let ac = aircraft(settings, &args.model)?;
    let bounds = bounds(settings, args.bounds, &ac.model)?;
    let mut spec = match settings.path(args.spec, "spec") {
        Some(path) => SynthSpec::load(&path).map_err(|e| input_error(&path, e))?.0,
        None => SynthSpec::default(),
    };
    if let Some(n) = settings.value(args.n, "n")? {
        spec.n_trajectories = n;
    }
    if let Some(seed) = settings.value(args.seed, "seed")? {
        spec.seed = seed;
    }
    spec.validate(&bounds).map_err(CliError::Config)?;
    let generated = generate_synthetic(&spec, &bounds, &ac.model, &ac.dynamics)?;
    let flights: Vec<Flight> = generated
        .iter()
        .map(|f| Flight {
            id: f.id.clone(),
            trajectory: f.trajectory.clone(),
        })
        .collect();
    let io_error = |e: Error| match e {
        Error::Io(source) => CliError::Output {
            path: out.clone(),
            source,
        },
        other => CliError::from(other),
    };
    write_dataset(&out, &flights).map_err(io_error)?;
    let mut truth = Vec::new();
    write_truth(&generated, &mut truth)?;
    emit(Some(&out.join(TRUTH_FILE)), &truth)?;
    println!(
        "wrote {} trajectories and {TRUTH_FILE} to {}",
        flights.len(),
        out.display()
    );
    Ok(())
}

fn cmd_mass_sweep(settings: &Settings, args: MassSweepArgs) -> CliResult<()> {
    let ac = aircraft(settings, &args.model)?;
    let setup = flight_setup(settings, &args.flight, &ac)?;
    let m = &ac.model;
    let masses = settings
        .list(args.masses.map(|l| l.0), "masses")?
        .unwrap_or_else(|| vec![m.mass_min, m.mass_ref, m.mass_max]);
    if masses.is_empty() {
        return Err(CliError::Usage("--masses is empty".into()));
    }
    if let Some(bad) = masses.iter().find(|x| !(m.mass_min..=m.mass_max).contains(*x)) {
        return Err(CliError::Usage(format!(
            "mass {bad} kg outside the aircraft range {} to {} kg",
            m.mass_min, m.mass_max
        )));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["mass_kg", "t_s", "alt_fl"])?;
    for &mass in &masses {
        let theta = TuningParams { mass, ..setup.theta };
        let s0 = start_state(&setup, &theta, &ac)?;
        let traj = estimation::forecast(&theta, &s0, Some(setup.cruise_fl), setup.horizon, setup.dt, ac.ctx())?;
        for s in traj.samples() {
            w.write_record([mass.to_string(), s.t.to_string(), m_to_fl(s.h).to_string()])?;
        }
    }
    let buf = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    emit(settings.path(args.out, "out").as_deref(), &buf)
}
