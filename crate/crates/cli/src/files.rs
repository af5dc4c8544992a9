//! CSV data and parameter files.

use std::path::Path;

use vpid::constitutive::HardeningParams;

use crate::error::{output_error, CliError};

fn data_err(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {msg}", path.display()))
}

/// `strain,stress` rows, in observation order.
pub fn read_data(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| data_err(path, e))?;
    let headers = reader.headers().map_err(|e| data_err(path, e))?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["strain", "stress"] {
        return Err(data_err(path, "header must be `strain,stress`"));
    }
    let (mut strains, mut stresses) = (Vec::new(), Vec::new());
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| data_err(path, e))?;
        let line = i + 2;
        let value = |k: usize| -> Result<f64, CliError> {
            let v: f64 = row[k].trim().parse().map_err(|e| data_err(path, format!("line {line}: {e}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(data_err(path, format!("line {line}: non-finite value")))
            }
        };
        strains.push(value(0)?);
        stresses.push(value(1)?);
    }
    if strains.len() < 2 {
        return Err(data_err(path, format!("need at least 2 observations, found {}", strains.len())));
    }
    Ok((strains, stresses))
}

pub fn write_data(path: &Path, strains: &[f64], stresses: &[f64]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| output_error(path, e))?;
    w.write_record(["strain", "stress"]).map_err(|e| output_error(path, e))?;
    for (e, s) in strains.iter().zip(stresses) {
        w.serialize((e, s)).map_err(|e| output_error(path, e))?;
    }
    w.flush().map_err(|e| output_error(path, e))
}

/// `parameter,value` rows naming each hardening parameter once.
pub fn read_params(path: &Path) -> Result<HardeningParams, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| data_err(path, e))?;
    let headers = reader.headers().map_err(|e| data_err(path, e))?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["parameter", "value"] {
        return Err(data_err(path, "header must be `parameter,value`"));
    }
    let mut values: [Option<f64>; 6] = [None; 6];
    for row in reader.records() {
        let row = row.map_err(|e| data_err(path, e))?;
        let name = row[0].trim();
        let idx = HardeningParams::NAMES
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| data_err(path, format!("unknown parameter {name:?}")))?;
        if values[idx].is_some() {
            return Err(data_err(path, format!("parameter {name} given twice")));
        }
        let v: f64 = row[1].trim().parse().map_err(|e| data_err(path, format!("{name}: {e}")))?;
        values[idx] = Some(v);
    }
    let mut out = [0.0; 6];
    for (i, v) in values.iter().enumerate() {
        out[i] = v.ok_or_else(|| data_err(path, format!("missing parameter {}", HardeningParams::NAMES[i])))?;
    }
    HardeningParams::from_array(out).map_err(|e| data_err(path, e))
}

pub fn write_params(path: &Path, p: &HardeningParams) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| output_error(path, e))?;
    w.write_record(["parameter", "value"]).map_err(|e| output_error(path, e))?;
    for (name, v) in HardeningParams::NAMES.iter().zip(p.to_array()) {
        w.serialize((name, v)).map_err(|e| output_error(path, e))?;
    }
    w.flush().map_err(|e| output_error(path, e))
}

/// `key,value` rows.
pub fn write_pairs(path: &Path, rows: &[(String, String)]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| output_error(path, e))?;
    w.write_record(["key", "value"]).map_err(|e| output_error(path, e))?;
    for (k, v) in rows {
        w.write_record([k, v]).map_err(|e| output_error(path, e))?;
    }
    w.flush().map_err(|e| output_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let p = HardeningParams::steel_diag_inverse_cov();
        write_params(&path, &p).unwrap();
        assert_eq!(read_params(&path).unwrap(), p);
    }

    #[test]
    fn data_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let (e, s) = (vec![0.0, 0.1, 1.0 / 3.0], vec![0.0, 123.456789012345, -1e-7]);
        write_data(&path, &e, &s).unwrap();
        assert_eq!(read_data(&path).unwrap(), (e, s));
    }

    #[test]
    fn bad_files_are_data_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "strain,stress\n0.0,NaN\n0.1,2.0\n").unwrap();
        assert_eq!(read_data(&path).unwrap_err().exit_code(), 3);
        std::fs::write(&path, "x,y\n0.0,1.0\n0.1,2.0\n").unwrap();
        assert_eq!(read_data(&path).unwrap_err().exit_code(), 3);
        std::fs::write(&path, "parameter,value\ngamma,1\n").unwrap();
        assert_eq!(read_params(&path).unwrap_err().exit_code(), 3);
    }
}
