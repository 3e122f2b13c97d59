//! CSV and JSON file formats.
//!
//! * profiles: `t,v_1,...,v_n`, one row per knot shared by all workers
//! * trajectories: `time,iter,f,grad_sq_norm`, plus a JSON sidecar
//! * bound sequences: `k,t_lower,t_upper`, blank past a sequence's end

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use hetsgd_core::analyzer::BoundSequences;
use hetsgd_core::simulator::{Record, Trajectory};
use hetsgd_core::time_models::{Interpolation, PowerProfile};
use serde::Serialize;

use crate::error::{HarnessError, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn csv_error(path: &Path, e: csv::Error) -> HarnessError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io(path, io),
        other => HarnessError::format(path, format!("{other:?}")),
    }
}

/// Writes profiles on the union of their knots, where every profile is
/// sampled exactly.
pub fn write_profiles_csv(path: &Path, profiles: &[PowerProfile]) -> Result<()> {
    let mut knots: Vec<f64> = profiles.iter().flat_map(|p| p.times().iter().copied()).collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut w = csv_writer(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=profiles.len()).map(|i| format!("v_{i}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for t in knots {
        let mut row = vec![t.to_string()];
        row.extend(profiles.iter().map(|p| p.value_at(t).to_string()));
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_profiles_csv(path: &Path, interpolation: Interpolation) -> Result<Vec<PowerProfile>> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.get(0) != Some("t") || header.len() < 2 {
        return Err(HarnessError::format(path, "header must be t,v_1,...,v_n"));
    }
    let n = header.len() - 1;
    let mut times = Vec::new();
    let mut values = vec![Vec::new(); n];
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| HarnessError::format(path, format!("row {}: {s:?} is not a number", line + 2)))
        };
        times.push(parse(&rec[0])?);
        for (i, col) in values.iter_mut().enumerate() {
            col.push(parse(&rec[i + 1])?);
        }
    }
    values
        .into_iter()
        .map(|v| PowerProfile::new(times.clone(), v, interpolation).map_err(|e| HarnessError::format(path, e)))
        .collect()
}

pub fn write_trajectory_csv(path: &Path, trajectory: &Trajectory) -> Result<()> {
    let mut w = csv_writer(path)?;
    for rec in &trajectory.records {
        w.serialize(rec).map_err(|e| csv_error(path, e))?;
    }
    if trajectory.records.is_empty() {
        w.write_record(["time", "iter", "f", "grad_sq_norm"])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<Record>> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .map(|r| r.map_err(|e| csv_error(path, e)))
        .collect()
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| HarnessError::format(path, e))?;
    w.write_all(b"\n").map_err(|e| HarnessError::io(path, e))?;
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn write_bounds_csv(path: &Path, bounds: &BoundSequences) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["k", "t_lower", "t_upper"])
        .map_err(|e| csv_error(path, e))?;
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (k, lo, hi) in bounds.rows() {
        w.write_record([k.to_string(), cell(lo), cell(hi)])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Reads one sample per line, or the first column of a CSV with a header.
pub fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => {}
            Err(_) => {
                return Err(HarnessError::format(
                    path,
                    format!("line {}: {field:?} is not a number", i + 1),
                ));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_round_trip_on_union_of_knots() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let a = PowerProfile::new(vec![0.0, 1.0, 3.0], vec![1.0, 2.0, 0.5], Interpolation::Linear).unwrap();
        let b = PowerProfile::new(vec![0.0, 2.0], vec![4.0, 1.0], Interpolation::Linear).unwrap();
        write_profiles_csv(&path, &[a.clone(), b.clone()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,v_1,v_2\n0,1,4\n1,2,2.5\n"));
        let back = read_profiles_csv(&path, Interpolation::Linear).unwrap();
        for t in [0.0, 0.5, 1.7, 2.9, 10.0] {
            assert!((back[0].value_at(t) - a.value_at(t)).abs() < 1e-12);
            assert!((back[1].value_at(t) - b.value_at(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_profile_csv_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        std::fs::write(&path, "t,v_1\n0,1\n1,x\n").unwrap();
        let err = read_profiles_csv(&path, Interpolation::Linear).unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
        std::fs::write(&path, "time,v_1\n0,1\n").unwrap();
        assert!(read_profiles_csv(&path, Interpolation::Linear).is_err());
    }

    #[test]
    fn trajectory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let tr = Trajectory {
            records: vec![
                Record {
                    time: 0.0,
                    iter: 0,
                    f: 0.1,
                    grad_sq_norm: 2.0,
                },
                Record {
                    time: 1.5,
                    iter: 3,
                    f: -1e-7,
                    grad_sq_norm: 1.0 / 3.0,
                },
            ],
            ..Trajectory::default()
        };
        write_trajectory_csv(&path, &tr).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("time,iter,f,grad_sq_norm\n"));
        assert_eq!(read_trajectory_csv(&path).unwrap(), tr.records);
    }

    #[test]
    fn samples_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, "delay,worker\n1.5,0\n\n2.0,1\n").unwrap();
        assert_eq!(read_samples(&path).unwrap(), [1.5, 2.0]);
    }
}
