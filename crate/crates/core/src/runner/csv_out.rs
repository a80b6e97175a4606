// Copyright 2026 The qdc-emu Contributors
// SPDX-License-Identifier: Apache-2.0

use std::io::{Read, Write};
use std::path::Path;

use crate::noise::distance_for_steps;

use super::{ExperimentRecord, RunnerError};

pub const CSV_HEADER: [&str; 16] = [
    "experiment_id",
    "protocol",
    "control_init",
    "fiber_type",
    "alpha",
    "kappa_t",
    "kappa_f",
    "dt",
    "steps",
    "distance_km",
    "mode",
    "shots",
    "seed",
    "metric_name",
    "metric_value",
    "stderr",
];

const DISTANCE_REL_TOL: f64 = 1e-12;

/// Formats with 6 significant digits, `%g` style: plain notation for
/// exponents in [-4, 6), scientific otherwise, trailing zeros removed.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-4..6).contains(&exp) {
        trim(format!("{:.*}", (5 - exp).max(0) as usize, x))
    } else {
        format!("{}e{exp}", trim(mantissa.to_string()))
    }
}

fn check_distance(index: usize, r: &ExperimentRecord) -> Result<(), RunnerError> {
    let expected = distance_for_steps(r.steps, r.kappa_f, r.alpha)?;
    let scale = expected.abs().max(f64::MIN_POSITIVE);
    if (expected - r.distance_km).abs() > DISTANCE_REL_TOL * scale {
        return Err(RunnerError::InconsistentRecord {
            index,
            reason: format!("distance_km {} but steps/kappa_f/alpha give {expected}", r.distance_km),
        });
    }
    Ok(())
}

fn io(e: impl std::fmt::Display) -> RunnerError {
    RunnerError::Io(e.to_string())
}

/// Writes the header and one line per record.
///
/// Every row's distance column is checked against its own steps, κ_F and α.
pub fn write_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<(), RunnerError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER).map_err(io)?;
    for (i, r) in records.iter().enumerate() {
        check_distance(i, r)?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        w.write_record([
            r.experiment_id.clone(),
            r.protocol.clone(),
            opt(r.control_init.map(|c| c.to_string())),
            r.fiber_type.clone(),
            format_sig6(r.alpha),
            format_sig6(r.kappa_t),
            format_sig6(r.kappa_f),
            format_sig6(r.dt),
            r.steps.to_string(),
            format_sig6(r.distance_km),
            r.mode.clone(),
            opt(r.shots.map(|s| s.to_string())),
            r.seed.to_string(),
            r.metric_name.clone(),
            format_sig6(r.metric_value),
            opt(r.stderr.map(format_sig6)),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn export_csv(records: &[ExperimentRecord], path: &Path) -> Result<(), RunnerError> {
    let file = std::fs::File::create(path).map_err(|e| RunnerError::Io(format!("{}: {e}", path.display())))?;
    write_csv(records, std::io::BufWriter::new(file))
}

/// Parses a file written by [`write_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<Vec<ExperimentRecord>, RunnerError> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers().map_err(io)?.iter().map(String::from).collect();
    if header != CSV_HEADER {
        return Err(RunnerError::Io(format!("unexpected header {header:?}")));
    }
    let float = |s: &str| s.parse::<f64>().map_err(io);
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row.map_err(io)?;
        let opt_f = |s: &str| if s.is_empty() { Ok(None) } else { float(s).map(Some) };
        out.push(ExperimentRecord {
            experiment_id: row[0].to_string(),
            protocol: row[1].to_string(),
            control_init: if row[2].is_empty() { None } else { Some(row[2].parse().map_err(io)?) },
            fiber_type: row[3].to_string(),
            alpha: float(&row[4])?,
            kappa_t: float(&row[5])?,
            kappa_f: float(&row[6])?,
            dt: float(&row[7])?,
            steps: row[8].parse().map_err(io)?,
            distance_km: float(&row[9])?,
            mode: row[10].to_string(),
            shots: if row[11].is_empty() { None } else { Some(row[11].parse().map_err(io)?) },
            seed: row[12].parse().map_err(io)?,
            metric_name: row[13].to_string(),
            metric_value: float(&row[14])?,
            stderr: opt_f(&row[15])?,
        });
    }
    Ok(out)
}
