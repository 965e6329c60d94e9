//! Flat `key = value` configuration files.
//!
//! One entry per line, `#` starts a comment, blank lines are ignored. Numbers
//! are decimal with a period separator. Unknown keys produce a warning (so
//! newer files still load); missing keys keep their defaults.

use std::fs;
use std::path::Path;

use crate::dynamics::DynamicsConfig;
use crate::error::{Error, Result};
use crate::estimation::{OnlineConfig, ParamBounds, WeightScheme};
use crate::performance::AircraftPerfModel;
use crate::units::kt_to_ms;

/// Parsed entries of a configuration file in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    /// (key, value, line)
    entries: Vec<(String, String, usize)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String, usize)> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                row: line,
                msg: format!("expected `key = value`, got {content:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(Error::Parse {
                    row: line,
                    msg: "empty key".into(),
                });
            }
            if entries.iter().any(|e| e.0 == key) {
                return Err(Error::Parse {
                    row: line,
                    msg: format!("duplicate key {key:?}"),
                });
            }
            entries.push((key.to_string(), value.to_string(), line));
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.0.as_str())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|e| e.0 == key).map(|e| e.1.as_str())
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::config(key, format!("not a finite number: {v:?}")))
            })
            .transpose()
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| Error::config(key, format!("not a non-negative integer: {v:?}")))
            })
            .transpose()
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        Ok(self.u64(key)?.map(|v| v as usize))
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>> {
        self.get(key)
            .map(|v| match v {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(Error::config(key, format!("expected true or false, got {v:?}"))),
            })
            .transpose()
    }

    /// Comma-separated numbers.
    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key).map(|v| parse_f64_list(key, v)).transpose()
    }

    /// Warnings for keys not in `known`, also sent to the log.
    pub fn unknown_keys(&self, known: &[&str]) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| !known.contains(&e.0.as_str()))
            .map(|e| {
                let w = format!("line {}: unknown key {:?} ignored", e.2, e.0);
                log::warn!("{w}");
                w
            })
            .collect()
    }
}

pub fn parse_f64_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::config(key, format!("not a finite number: {s:?}")))
        })
        .collect()
}

/// Aircraft file contents: performance coefficients and hybrid-system
/// settings.
#[derive(Debug, Clone, PartialEq)]
pub struct AircraftConfig {
    pub model: AircraftPerfModel,
    pub dynamics: DynamicsConfig,
    pub warnings: Vec<String>,
}

const PERF_KEYS: [&str; 17] = [
    "label",
    "mass_ref",
    "mass_min",
    "mass_max",
    "wing_area",
    "cd0",
    "cd2",
    "ctc1",
    "ctc2",
    "ctc3",
    "c_red",
    "v_stall",
    "v_mo",
    "m_mo",
    "h_max",
    "esf_acc",
    "esf_dec",
];

const DYNAMICS_KEYS: [&str; 3] = ["epsilon_kt", "below_fl60_schedule", "cap_250_below_fl100"];

fn perf_from(kv: &KeyValues) -> Result<AircraftPerfModel> {
    let mut m = AircraftPerfModel::a320_like();
    if let Some(label) = kv.get("label") {
        m.label = label.to_string();
    }
    let fields: [(&str, &mut f64); 16] = [
        ("mass_ref", &mut m.mass_ref),
        ("mass_min", &mut m.mass_min),
        ("mass_max", &mut m.mass_max),
        ("wing_area", &mut m.wing_area),
        ("cd0", &mut m.cd0),
        ("cd2", &mut m.cd2),
        ("ctc1", &mut m.ctc1),
        ("ctc2", &mut m.ctc2),
        ("ctc3", &mut m.ctc3),
        ("c_red", &mut m.c_red),
        ("v_stall", &mut m.v_stall),
        ("v_mo", &mut m.v_mo),
        ("m_mo", &mut m.m_mo),
        ("h_max", &mut m.h_max),
        ("esf_acc", &mut m.esf_acc),
        ("esf_dec", &mut m.esf_dec),
    ];
    for (key, slot) in fields {
        if let Some(v) = kv.f64(key)? {
            *slot = v;
        }
    }
    m.validate()?;
    Ok(m)
}

/// `FL:kt` pairs separated by commas, e.g. `15:170, 30:185`.
fn parse_schedule(v: &str) -> Result<Vec<(f64, f64)>> {
    v.split(',')
        .map(|pair| {
            let (fl, kt) = pair.split_once(':').ok_or_else(|| {
                Error::config("below_fl60_schedule", format!("expected FL:kt, got {:?}", pair.trim()))
            })?;
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::config("below_fl60_schedule", format!("not a number: {:?}", s.trim())))
            };
            Ok((num(fl)?, num(kt)?))
        })
        .collect()
}

fn dynamics_from(kv: &KeyValues) -> Result<DynamicsConfig> {
    let mut d = DynamicsConfig::default();
    if let Some(eps) = kv.f64("epsilon_kt")? {
        d.epsilon = kt_to_ms(eps);
    }
    if let Some(s) = kv.get("below_fl60_schedule") {
        d.below_fl60_schedule = parse_schedule(s)?;
    }
    if let Some(b) = kv.bool("cap_250_below_fl100")? {
        d.cap_250_below_fl100 = b;
    }
    d.validate()?;
    Ok(d)
}

pub fn parse_aircraft(text: &str) -> Result<AircraftConfig> {
    let kv = KeyValues::parse(text)?;
    let known: Vec<&str> = PERF_KEYS.iter().chain(&DYNAMICS_KEYS).copied().collect();
    Ok(AircraftConfig {
        model: perf_from(&kv)?,
        dynamics: dynamics_from(&kv)?,
        warnings: kv.unknown_keys(&known),
    })
}

/// Aircraft coefficients plus optional hybrid-system keys.
pub fn load_aircraft(path: &Path) -> Result<AircraftConfig> {
    parse_aircraft(&fs::read_to_string(path)?)
}

/// Aircraft coefficients only.
pub fn load_perf(path: &Path) -> Result<AircraftPerfModel> {
    Ok(load_aircraft(path)?.model)
}

const BOUNDS_KEYS: [&str; 10] = [
    "mass_min", "mass_max", "dT_min", "dT_max", "v1_min", "v1_max", "v2_min", "v2_max", "mach_min", "mach_max",
];

/// Bounds with the model's defaults for missing keys, plus unknown-key
/// warnings.
pub fn parse_bounds(text: &str, model: &AircraftPerfModel) -> Result<(ParamBounds, Vec<String>)> {
    let kv = KeyValues::parse(text)?;
    let mut pairs = ParamBounds::for_model(model).pairs();
    for (k, pair) in pairs.iter_mut().enumerate() {
        if let Some(lo) = kv.f64(BOUNDS_KEYS[2 * k])? {
            pair.0 = lo;
        }
        if let Some(hi) = kv.f64(BOUNDS_KEYS[2 * k + 1])? {
            pair.1 = hi;
        }
    }
    let bounds = ParamBounds::from_pairs(pairs);
    bounds.validate(model)?;
    Ok((bounds, kv.unknown_keys(&BOUNDS_KEYS)))
}

pub fn load_bounds(path: &Path, model: &AircraftPerfModel) -> Result<(ParamBounds, Vec<String>)> {
    parse_bounds(&fs::read_to_string(path)?, model)
}

const ONLINE_KEYS: [&str; 6] = [
    "validation_points",
    "lambda0",
    "lambda_growth",
    "fallback_threshold_fl",
    "weight_scheme",
    "evals_budget",
];

pub fn parse_online_config(text: &str) -> Result<(OnlineConfig, Vec<String>)> {
    let kv = KeyValues::parse(text)?;
    let mut c = OnlineConfig::default();
    if let Some(v) = kv.usize("validation_points")? {
        c.validation_points = v;
    }
    if let Some(v) = kv.f64("lambda0")? {
        c.lambda0 = v;
    }
    if let Some(v) = kv.f64("lambda_growth")? {
        c.lambda_growth = v;
    }
    if let Some(v) = kv.f64("fallback_threshold_fl")? {
        c.fallback_threshold = v;
    }
    match kv.get("weight_scheme") {
        None | Some("linear") => c.weight_scheme = WeightScheme::Linear,
        Some(other) => return Err(Error::config("weight_scheme", format!("unsupported scheme {other:?}"))),
    }
    if let Some(v) = kv.usize("evals_budget")? {
        c.evals_budget = v;
    }
    c.validate()?;
    Ok((c, kv.unknown_keys(&ONLINE_KEYS)))
}

pub fn load_online_config(path: &Path) -> Result<(OnlineConfig, Vec<String>)> {
    parse_online_config(&fs::read_to_string(path)?)
}
