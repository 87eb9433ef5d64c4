//! Bench output.
//!
//! JSON: one `BenchReport` object, or with `--sweep` an array of
//! `{"param", "value", "report"}` objects.
//!
//! CSV columns: `param,value,trial,m,solver,acc,tacc,nsv,nsv_ratio,iters,
//! time_seconds,converged,final_s,stationary,invariants_ok,failures,error`.
//! Each report contributes one row per trial (`trial` is the seed) and a
//! closing row with `trial = mean`. Missing values are empty cells.

use std::io::Write;

use anyhow::Result;
use nssvm::BenchReport;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct SweepEntry {
    pub param: String,
    pub value: f64,
    pub report: BenchReport,
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    param: &'a str,
    value: Option<f64>,
    trial: String,
    m: Option<usize>,
    solver: &'a str,
    acc: Option<f64>,
    tacc: Option<f64>,
    nsv: Option<f64>,
    nsv_ratio: Option<f64>,
    iters: Option<f64>,
    time_seconds: Option<f64>,
    converged: Option<bool>,
    final_s: Option<usize>,
    stationary: Option<bool>,
    invariants_ok: Option<bool>,
    failures: Option<usize>,
    error: Option<&'a str>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn push_rows<W: Write>(
    out: &mut csv::Writer<W>,
    param: &str,
    value: Option<f64>,
    report: &BenchReport,
) -> Result<()> {
    for t in &report.per_trial {
        let m = t.metrics.as_ref();
        out.serialize(CsvRow {
            param,
            value,
            trial: t.seed.to_string(),
            m: Some(t.m),
            solver: &report.solver,
            acc: m.map(|x| x.acc),
            tacc: m.and_then(|x| x.tacc),
            nsv: m.map(|x| x.nsv as f64),
            nsv_ratio: m.map(|x| x.nsv_ratio),
            iters: m.map(|x| x.iters as f64),
            time_seconds: m.map(|x| x.time_seconds),
            converged: Some(t.converged),
            final_s: Some(t.final_s),
            stationary: Some(t.stationary),
            invariants_ok: Some(t.invariants_ok),
            failures: None,
            error: t.error.as_deref(),
        })?;
    }
    let m = report.per_trial.first().map(|t| t.m);
    out.serialize(CsvRow {
        param,
        value,
        trial: "mean".into(),
        m,
        solver: &report.solver,
        acc: finite(report.acc),
        tacc: report.tacc,
        nsv: finite(report.nsv),
        nsv_ratio: finite(report.nsv_ratio),
        iters: finite(report.iters),
        time_seconds: finite(report.time_seconds),
        converged: None,
        final_s: None,
        stationary: None,
        invariants_ok: None,
        failures: Some(report.failures),
        error: None,
    })?;
    Ok(())
}

pub fn write_csv<W: Write>(out: W, entries: &[SweepEntry], swept: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in entries {
        let (param, value) = if swept { (e.param.as_str(), Some(e.value)) } else { ("", None) };
        push_rows(&mut w, param, value, &e.report)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(mut out: W, entries: &[SweepEntry], swept: bool) -> Result<()> {
    if swept {
        serde_json::to_writer_pretty(&mut out, entries)?;
    } else {
        serde_json::to_writer_pretty(&mut out, &entries[0].report)?;
    }
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}
