//! Trajectory CSV files: `t_s,alt_ft,tas_kt,roc_fpm`, one sample per row on
//! a uniform time grid. Values are converted to SI on reading.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::integrator::{Trajectory, TrajectorySample};
use crate::units::{ft_to_m, kt_to_ms, m_to_ft, ms_to_kt, FPM};

pub const HEADER: [&str; 4] = ["t_s", "alt_ft", "tas_kt", "roc_fpm"];

/// Relative slack on grid times.
const GRID_TOL: f64 = 1e-6;

/// Parses a trajectory. Error rows count data lines from 1; row 0 is the
/// header.
pub fn parse_trajectory_csv<R: Read>(source: R) -> Result<Trajectory> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.iter().ne(HEADER) {
        let missing: Vec<_> = HEADER.iter().filter(|h| !headers.iter().any(|x| x == **h)).collect();
        let msg = if missing.is_empty() {
            format!("columns must be {} in this order", HEADER.join(","))
        } else {
            format!("missing column(s) {missing:?}")
        };
        return Err(Error::Parse { row: 0, msg });
    }
    let mut samples: Vec<TrajectorySample> = Vec::new();
    let mut dt = None;
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            msg: e.to_string(),
        })?;
        if record.len() != 4 {
            return Err(Error::Parse {
                row,
                msg: format!("expected 4 fields, got {}", record.len()),
            });
        }
        let mut v = [0.0; 4];
        for (i, field) in record.iter().enumerate() {
            v[i] = field
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Parse {
                    row,
                    msg: format!("{}: not a finite number: {field:?}", HEADER[i]),
                })?;
        }
        let t = v[0];
        if let Some(prev) = samples.last() {
            if t <= prev.t {
                return Err(Error::Parse {
                    row,
                    msg: format!("time {t} s not after {} s", prev.t),
                });
            }
            let step = *dt.get_or_insert(t - prev.t);
            let expected = samples[0].t + k as f64 * step;
            if (t - expected).abs() > GRID_TOL * expected.abs().max(1.0) {
                return Err(Error::Parse {
                    row,
                    msg: format!("time {t} s off the {step} s grid (expected {expected} s)"),
                });
            }
        }
        samples.push(TrajectorySample {
            t,
            h: ft_to_m(v[1]),
            v: kt_to_ms(v[2]),
            roc: v[3] * FPM,
        });
    }
    let dt = dt.ok_or_else(|| Error::Parse {
        row: samples.len(),
        msg: "a trajectory needs at least two samples".into(),
    })?;
    Trajectory::new(dt, samples)
}

/// Writes a trajectory with the standard header. Numbers use the shortest
/// representation that reads back to the same value.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(HEADER)?;
    for s in traj.samples() {
        w.write_record([
            s.t.to_string(),
            m_to_ft(s.h).to_string(),
            ms_to_kt(s.v).to_string(),
            (s.roc / FPM).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_rows() {
        let text = "t_s,alt_ft,tas_kt,roc_fpm\n0,1500,170,2000\n5,1666,171,2000\n10,1833,172,2000\n";
        let t = parse_trajectory_csv(text.as_bytes()).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.dt(), 5.0);
    }

    #[test]
    fn unit_conversion() {
        let text = "t_s,alt_ft,tas_kt,roc_fpm\n0,10000,100,60\n5,10000,100,60\n";
        let t = parse_trajectory_csv(text.as_bytes()).unwrap();
        let s = t.samples()[0];
        assert_eq!(s.h, 3048.0);
        assert!((s.v - 100.0 * 1852.0 / 3600.0).abs() < 1e-12);
        assert!((s.roc - 0.3048).abs() < 1e-15);
    }

    #[test]
    fn grid_violation_reports_row() {
        let text = "t_s,alt_ft,tas_kt,roc_fpm\n0,1,1,1\n5,1,1,1\n11,1,1,1\n";
        match parse_trajectory_csv(text.as_bytes()) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
        let text = "t_s,alt_ft,tas_kt,roc_fpm\n0,1,1,1\n5,1,1,1\n5,1,1,1\n";
        assert!(matches!(
            parse_trajectory_csv(text.as_bytes()),
            Err(Error::Parse { row: 3, .. })
        ));
    }

    #[test]
    fn missing_column() {
        let text = "t_s,alt_ft,tas_kt\n0,1,1\n5,1,1\n";
        assert!(matches!(
            parse_trajectory_csv(text.as_bytes()),
            Err(Error::Parse { row: 0, .. })
        ));
    }

    #[test]
    fn bad_number() {
        let text = "t_s,alt_ft,tas_kt,roc_fpm\n0,1,1,1\n5,x,1,1\n";
        assert!(matches!(
            parse_trajectory_csv(text.as_bytes()),
            Err(Error::Parse { row: 2, .. })
        ));
    }

    #[test]
    fn header_written_exactly() {
        let t = parse_trajectory_csv("t_s,alt_ft,tas_kt,roc_fpm\n0,1,1,1\n5,1,1,1\n".as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&t, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("t_s,alt_ft,tas_kt,roc_fpm\n"));
    }
}
