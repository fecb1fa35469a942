use std::collections::BTreeMap;

use ergoforge::oracle::Method;
use serde::{Deserialize, Serialize};

use crate::output::RECORD_HEADER;
use crate::{CliError, Result};

/// Seed-averaged ergotropy at one grid time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub t: f64,
    pub count: usize,
    pub mean_work: f64,
    pub mean: f64,
    pub std: f64,
    pub exact: Option<f64>,
}

/// One `(M, depth, method)` series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    #[serde(rename = "M")]
    pub m: usize,
    pub depth: Option<usize>,
    pub method: String,
    /// Grid time of the largest mean ergotropy; the earliest on ties.
    pub argmax_t: f64,
    pub peak: f64,
    pub peak_work: f64,
    /// Largest `|mean − exact|` over the times with an exact row.
    pub max_abs_error: Option<f64>,
    pub efficiency_min: Option<f64>,
    pub efficiency_max: Option<f64>,
    pub series: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub records: usize,
    pub groups: Vec<GroupSummary>,
}

struct Row {
    t: f64,
    m: usize,
    depth: Option<usize>,
    method: Method,
    work: f64,
    ergotropy: f64,
    efficiency: Option<f64>,
}

fn parse_row(fields: &csv::StringRecord) -> std::result::Result<Row, String> {
    fn num<T: std::str::FromStr>(s: &str, name: &str) -> std::result::Result<T, String> {
        s.parse().map_err(|_| format!("bad {name} {s:?}"))
    }
    fn maybe<T: std::str::FromStr>(s: &str, name: &str) -> std::result::Result<Option<T>, String> {
        if s.is_empty() {
            Ok(None)
        } else {
            num(s, name).map(Some)
        }
    }
    let f = |k: usize| fields.get(k).unwrap_or("");
    let row = Row {
        t: num(f(0), "t")?,
        m: num(f(1), "M")?,
        depth: maybe(f(2), "depth")?,
        method: Method::parse(f(4)).ok_or_else(|| format!("unknown method {:?}", f(4)))?,
        work: num(f(5), "work")?,
        ergotropy: num(f(6), "ergotropy")?,
        efficiency: maybe(f(7), "efficiency")?,
    };
    maybe::<u64>(f(3), "seed")?;
    num::<f64>(f(8), "e_mean")?;
    num::<f64>(f(9), "e_pass")?;
    if [row.t, row.work, row.ergotropy]
        .iter()
        .any(|v| !v.is_finite())
    {
        return Err("non-finite value".into());
    }
    Ok(row)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Summarizes a records CSV. `source` names the input in error messages;
/// an input without rows gives an empty summary.
pub fn report(text: &str, source: &str) -> Result<Summary> {
    let malformed = |line: u64, message: String| CliError::Malformed {
        path: source.to_string(),
        line,
        message,
    };
    if text.trim().is_empty() {
        return Ok(Summary {
            records: 0,
            groups: Vec::new(),
        });
    }
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != RECORD_HEADER {
        return Err(malformed(1, format!("unexpected header {header:?}")));
    }

    let mut rows = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push(parse_row(&record).map_err(|msg| malformed(line, msg))?);
    }

    let mut exact: BTreeMap<(u64, usize), Vec<f64>> = BTreeMap::new();
    let mut groups: BTreeMap<(usize, Option<usize>, &str), BTreeMap<u64, Vec<&Row>>> =
        BTreeMap::new();
    for r in &rows {
        if r.method == Method::Exact {
            exact
                .entry((r.t.to_bits(), r.m))
                .or_default()
                .push(r.ergotropy);
        }
        groups
            .entry((r.m, r.depth, r.method.as_str()))
            .or_default()
            .entry(ordered_key(r.t))
            .or_default()
            .push(r);
    }

    let groups = groups
        .into_iter()
        .map(|((m, depth, method), by_time)| {
            let effs: Vec<f64> = by_time
                .values()
                .flatten()
                .filter_map(|r| r.efficiency)
                .collect();
            let series: Vec<Point> = by_time
                .into_values()
                .map(|cell| {
                    let erg: Vec<f64> = cell.iter().map(|r| r.ergotropy).collect();
                    let (mean, std) = mean_std(&erg);
                    let work: Vec<f64> = cell.iter().map(|r| r.work).collect();
                    let t = cell[0].t;
                    Point {
                        t,
                        count: cell.len(),
                        mean_work: mean_std(&work).0,
                        mean,
                        std,
                        exact: exact.get(&(t.to_bits(), m)).map(|v| mean_std(v).0),
                    }
                })
                .collect();
            let peak = series.iter().fold(
                &series[0],
                |best, p| if p.mean > best.mean { p } else { best },
            );
            let errors: Vec<f64> = series
                .iter()
                .filter_map(|p| p.exact.map(|e| (p.mean - e).abs()))
                .collect();
            GroupSummary {
                m,
                depth,
                method: method.to_string(),
                argmax_t: peak.t,
                peak: peak.mean,
                peak_work: peak.mean_work,
                max_abs_error: errors.into_iter().reduce(f64::max),
                efficiency_min: effs.iter().copied().reduce(f64::min),
                efficiency_max: effs.iter().copied().reduce(f64::max),
                series,
            }
        })
        .collect();
    Ok(Summary {
        records: rows.len(),
        groups,
    })
}

/// Order-preserving integer key for finite floats.
fn ordered_key(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}
