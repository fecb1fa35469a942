use std::fmt::Write;

use ergoforge::oracle::ErgotropyRecord;
use ergoforge::vqergo::Aggregate;

pub const RECORD_HEADER: &str =
    "t,M,depth,seed,method,work,ergotropy,efficiency,e_mean,e_pass,config_hash";
pub const AGGREGATE_HEADER: &str =
    "t,M,depth,method,count,mean_work,mean,std,min,max,exact,config_hash";
pub const CORRELATION_HEADER: &str = "site,ell,axis,t,value,config_hash";
pub const INFIDELITY_HEADER: &str =
    "depth,seed,step,t,cost,infidelity,oracle_infidelity,best,config_hash";

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn opt_float(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

pub(crate) fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn records_csv(records: &[ErgotropyRecord], hash: &str) -> String {
    let mut out = format!("{RECORD_HEADER}\n");
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{hash}",
            format_float(r.t),
            r.m,
            opt(r.depth),
            opt(r.seed),
            r.method,
            format_float(r.work),
            format_float(r.ergotropy),
            opt_float(r.efficiency),
            format_float(r.e_mean),
            format_float(r.e_pass),
        )
        .expect("writing to a String");
    }
    out
}

/// `exact` holds the matching exact ergotropy of each aggregate, if known.
pub fn aggregates_csv(aggregates: &[(Aggregate, Option<f64>)], hash: &str) -> String {
    let mut out = format!("{AGGREGATE_HEADER}\n");
    for (a, exact) in aggregates {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{hash}",
            format_float(a.t),
            a.m,
            opt(a.depth),
            a.method,
            a.count,
            format_float(a.mean_work),
            format_float(a.mean),
            format_float(a.std),
            format_float(a.min),
            format_float(a.max),
            opt_float(*exact),
        )
        .expect("writing to a String");
    }
    out
}
