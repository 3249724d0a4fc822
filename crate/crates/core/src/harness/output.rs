use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::format::fmt_g;

use super::sweep::Row;

pub const HEADER: [&str; 16] = [
    "scenario_id",
    "env",
    "policy",
    "method",
    "lambda_per_km2",
    "H_km",
    "X_cop_km",
    "B",
    "F",
    "S",
    "kappa",
    "capacity_bits",
    "ee_bits_per_joule",
    "stderr",
    "n_trials",
    "seed",
];

const SIG: usize = 12;

fn record(row: &Row) -> Vec<String> {
    let p = &row.point;
    let mut out = vec![
        row.scenario_id.to_string(),
        p.env.to_string(),
        p.policy.to_string(),
        String::new(),
        fmt_g(p.lambda, SIG),
        fmt_g(p.altitude, SIG),
        fmt_g(p.x_cop, SIG),
        p.subchannels.to_string(),
        p.library_size.to_string(),
        p.cache_size.to_string(),
        fmt_g(p.kappa, SIG),
    ];
    match &row.outcome {
        Ok(m) => {
            out[3] = row.method.to_string();
            out.push(fmt_g(m.capacity, SIG));
            out.push(fmt_g(m.ee, SIG));
            out.push(m.std_err.map(|x| fmt_g(x, SIG)).unwrap_or_default());
            out.push(m.n_trials.map(|n| n.to_string()).unwrap_or_default());
        }
        Err(_) => {
            out[3] = "failed".into();
            out.extend(std::iter::repeat_n(String::new(), 4));
        }
    }
    out.push(row.seed.to_string());
    out
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[Row]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

/// Writes the table to `path`, or stdout when `path` is `None`.
pub fn emit_csv(rows: &[Row], path: Option<&Path>) -> Result<()> {
    let io_err = |p: &str, e: std::io::Error| Error::Io {
        path: p.to_string(),
        source: e,
    };
    match path {
        Some(path) => {
            let shown = path.display().to_string();
            std::fs::write(path, csv_string(rows)).map_err(|e| io_err(&shown, e))
        }
        None => std::io::stdout()
            .lock()
            .write_all(csv_string(rows).as_bytes())
            .map_err(|e| io_err("<stdout>", e)),
    }
}
