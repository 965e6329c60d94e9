//! Trajectory files, configuration files, dataset directories and the
//! synthetic flight generator.

pub mod config;
pub mod synth;
pub mod trajectory;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluation::Flight;

pub use self::config::{load_aircraft, load_bounds, load_online_config, load_perf, AircraftConfig, KeyValues};
pub use self::synth::{generate_synthetic, read_truth, write_truth, SynthSpec, SyntheticFlight};
pub use self::trajectory::{parse_trajectory_csv, write_trajectory_csv};

/// Name of the ground-truth manifest inside a dataset directory.
pub const TRUTH_FILE: &str = "truth.csv";

/// Loads every `*.csv` trajectory of a directory (except the truth
/// manifest), ordered by file name. Flight ids are the file names.
pub fn load_dataset(dir: &Path) -> Result<Vec<Flight>> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".csv") && name != TRUTH_FILE && entry.file_type()?.is_file() {
            names.push(name);
        }
    }
    names.sort();
    names
        .into_iter()
        .map(|name| {
            let file = fs::File::open(dir.join(&name))?;
            let trajectory = parse_trajectory_csv(file).map_err(|e| match e {
                Error::Parse { row, msg } => Error::Parse {
                    row,
                    msg: format!("{name}: {msg}"),
                },
                other => other,
            })?;
            Ok(Flight { id: name, trajectory })
        })
        .collect()
}

/// Writes flights as `<id>` files into `dir`, creating it if needed.
pub fn write_dataset(dir: &Path, flights: &[Flight]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for f in flights {
        let file = fs::File::create(dir.join(&f.id))?;
        write_trajectory_csv(&f.trajectory, std::io::BufWriter::new(file))?;
    }
    Ok(())
}
