//! Flat text outputs of a fit: a `key = value` record and a per-parameter table.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::bootstrap::Interval;
use super::fit::FitResult;
use super::Theta;

pub const TABLE_HEADER: [&str; 5] = ["segment", "parameter", "estimate", "lo2_5", "hi97_5"];

/// One row of the parameter table. Bounds are absent without a bootstrap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRow {
    pub segment: String,
    pub parameter: String,
    pub estimate: f64,
    pub interval: Option<Interval>,
}

/// Rows for λ, δ, μ, σ and the implied unemployment rate.
pub fn param_rows(segment: &str, fit: &FitResult) -> Vec<ParamRow> {
    let mut rows: Vec<ParamRow> = Theta::NAMES
        .iter()
        .map(|&n| ParamRow {
            segment: segment.to_string(),
            parameter: n.to_string(),
            estimate: fit.theta.get(n).unwrap(),
            interval: fit.intervals.as_ref().and_then(|iv| iv.get(n)),
        })
        .collect();
    rows.push(ParamRow {
        segment: segment.to_string(),
        parameter: "u".into(),
        estimate: fit.unemployment,
        interval: fit.intervals.as_ref().map(|iv| iv.unemployment),
    });
    rows
}

pub fn write_param_table<W: Write>(rows: &[ParamRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER)?;
    for r in rows {
        let (lo, hi) = match r.interval {
            Some(iv) => (iv.lo.to_string(), iv.hi.to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([r.segment.clone(), r.parameter.clone(), r.estimate.to_string(), lo, hi])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_param_table<R: Read>(input: R) -> Result<Vec<ParamRow>> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(TABLE_HEADER.iter().copied()) {
        return Err(Error::Schema(format!("expected header {}", TABLE_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let num = |j: usize| -> Result<f64> {
            rec[j].parse().map_err(|_| Error::Row { row: line, reason: format!("{} is not a number", TABLE_HEADER[j]) })
        };
        let interval = match (rec[3].is_empty(), rec[4].is_empty()) {
            (true, true) => None,
            (false, false) => Some(Interval { lo: num(3)?, hi: num(4)? }),
            _ => return Err(Error::Row { row: line, reason: "interval needs both bounds".into() }),
        };
        rows.push(ParamRow {
            segment: rec[0].to_string(),
            parameter: rec[1].to_string(),
            estimate: num(2)?,
            interval,
        });
    }
    Ok(rows)
}

/// Ordered `key = value` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues(pub BTreeMap<String, String>);

impl KeyValues {
    pub fn insert(&mut self, key: impl Into<String>, value: impl ToString) {
        self.0.insert(key.into(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        let v = self.get(key).ok_or_else(|| Error::Schema(format!("missing key `{key}`")))?;
        v.parse().map_err(|_| Error::Schema(format!("`{key}` is not a number: {v}")))
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.0 {
            writeln!(out, "{k} = {v}")?;
        }
        Ok(())
    }

    /// Blank lines and lines starting with `#` are skipped.
    pub fn read<R: Read>(input: R) -> Result<Self> {
        let mut kv = KeyValues::default();
        for (i, line) in BufReader::new(input).lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) = t.split_once('=').ok_or_else(|| Error::Row {
                row: i + 1,
                reason: "expected `key = value`".into(),
            })?;
            kv.insert(k.trim(), v.trim());
        }
        Ok(kv)
    }
}

/// Key-value record of a fit. Bootstrap bounds appear as `<name>.lo2_5` and
/// `<name>.hi97_5`.
pub fn fit_record(segment: &str, fit: &FitResult) -> KeyValues {
    let mut kv = KeyValues::default();
    kv.insert("segment", segment);
    for n in Theta::NAMES {
        kv.insert(n, fit.theta.get(n).unwrap());
    }
    kv.insert("u", fit.unemployment);
    kv.insert("loglik", fit.loglik);
    kv.insert("converged", fit.converged());
    kv.insert("n_used", fit.n_used);
    kv.insert("n_dropped", fit.n_dropped);
    kv.insert("w_min", fit.w_min);
    kv.insert("w_max", fit.w_max);
    kv.insert("bandwidth", fit.bandwidth);
    kv.insert("truncation_q", fit.truncation_q);
    kv.insert("starts", fit.starts.len());
    for (i, s) in fit.starts.iter().enumerate() {
        kv.insert(format!("start{i}.loglik"), s.loglik);
        kv.insert(format!("start{i}.iterations"), s.iterations);
        kv.insert(format!("start{i}.converged"), s.converged);
    }
    kv.insert("flat_directions", fit.flat_directions.join(" "));
    if let Some(iv) = &fit.intervals {
        for n in ["lambda", "delta", "mu", "sigma", "u"] {
            let b = iv.get(n).unwrap();
            kv.insert(format!("{n}.lo2_5"), b.lo);
            kv.insert(format!("{n}.hi97_5"), b.hi);
        }
        kv.insert("bootstrap.replicates", iv.replicates);
        kv.insert("bootstrap.failures", iv.failures);
        kv.insert("bootstrap.flagged", iv.flagged);
    }
    kv
}

/// `θ̂` from a fit record.
pub fn theta_from_record(kv: &KeyValues) -> Result<Theta> {
    Ok(Theta {
        lambda: kv.get_f64("lambda")?,
        delta: kv.get_f64("delta")?,
        mu: kv.get_f64("mu")?,
        sigma: kv.get_f64("sigma")?,
    })
}
