//! Writes experiment reports as JSON plus CSV tables.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::Context;
use ddval_ledger::{write_trace_jsonl, SessionTrace};
use serde::Serialize;

use crate::experiments::compare::{mode_name, CompareReport};
use crate::experiments::gas::GasReport;
use crate::experiments::ledger_demo::LedgerDemoReport;
use crate::experiments::scale::ScaleReport;
use crate::experiments::value::ValueReport;

fn create(dir: &Path, name: &str) -> anyhow::Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> anyhow::Result<PathBuf> {
    serde_json::to_writer_pretty(create(dir, name)?, value)?;
    Ok(dir.join(name))
}

fn csv_writer(dir: &Path, name: &str) -> anyhow::Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(dir, name)?))
}

pub fn write_value(dir: &Path, report: &ValueReport) -> anyhow::Result<()> {
    write_json(dir, "value_report.json", report)?;
    let mut w = csv_writer(dir, "value_strata.csv")?;
    w.write_record(["seed", "kind", "stratum", "count", "mean_sv"])?;
    for r in &report.runs {
        for (k, s) in &r.by_flips {
            w.serialize((r.seed, "flips", k.to_string(), s.count, s.mean_sv))?;
        }
        for (k, s) in &r.by_label_pattern {
            w.serialize((r.seed, "label_pattern", k, s.count, s.mean_sv))?;
        }
    }
    w.flush()?;
    let mut w = csv_writer(dir, "value_summary.csv")?;
    w.write_record(["kind", "stratum", "n_seeds", "mean", "ci_low", "ci_high"])?;
    for (k, s) in &report.flip_summary {
        w.serialize(("flips", k.to_string(), s.n, s.mean, s.ci_low, s.ci_high))?;
    }
    for (k, s) in &report.label_summary {
        w.serialize(("label_pattern", k, s.n, s.mean, s.ci_low, s.ci_high))?;
    }
    w.flush()?;
    for r in &report.runs {
        if let Some(points) = &r.points {
            points.write_csv(create(dir, &format!("value_points_seed{}.csv", r.seed))?)?;
        }
    }
    Ok(())
}

pub fn write_compare(dir: &Path, report: &CompareReport) -> anyhow::Result<()> {
    write_json(dir, "compare_report.json", report)?;
    let mut w = csv_writer(dir, "compare_runs.csv")?;
    w.write_record(["mode", "seed", "method", "cosine", "values"])?;
    for r in &report.runs {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
        w.serialize((mode_name(r.mode), r.seed, "canonical", 1.0, join(&r.canonical)))?;
        for (m, v) in &r.estimates {
            w.serialize((mode_name(r.mode), r.seed, m, r.cosine[m], join(v)))?;
        }
    }
    w.flush()?;
    let mut w = csv_writer(dir, "compare_summary.csv")?;
    w.write_record(["mode", "method", "n_seeds", "mean", "ci_low", "ci_high"])?;
    for (mode, methods) in &report.summary {
        for (m, s) in methods {
            w.serialize((mode, m, s.n, s.mean, s.ci_low, s.ci_high))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_scale(dir: &Path, report: &ScaleReport) -> anyhow::Result<()> {
    write_json(dir, "scale_report.json", report)?;
    let mut w = csv_writer(dir, "scale_ddval.csv")?;
    w.write_record(["n_points", "repeat", "seconds"])?;
    for t in &report.ddval {
        for (i, s) in t.seconds.iter().enumerate() {
            w.serialize((t.n_points, i, s))?;
        }
    }
    w.flush()?;
    let mut w = csv_writer(dir, "scale_clients.csv")?;
    w.write_record(["n_clients", "method", "evaluations", "repeat", "seconds"])?;
    for c in &report.clients {
        for (i, s) in c.or_seconds.iter().enumerate() {
            w.serialize((c.n_clients, "or", c.or_evaluations, i, s))?;
        }
        for (i, s) in c.safe_seconds.iter().enumerate() {
            w.serialize((c.n_clients, "safe", c.safe_evaluations, i, s))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_ledger(dir: &Path, report: &LedgerDemoReport, trace: &SessionTrace) -> anyhow::Result<()> {
    write_json(dir, "ledger_report.json", report)?;
    write_trace_jsonl(&trace.entries, create(dir, "ledger_trace.jsonl")?)?;
    let mut w = csv_writer(dir, "ledger_settlement.csv")?;
    w.write_record(["address", "payout", "refund", "balance"])?;
    for (addr, balance) in &trace.state.token.balances {
        let payout = report.payouts.get(addr).copied().unwrap_or(0);
        let refund = report.refunds.get(addr).copied().unwrap_or(0);
        w.serialize((addr.to_string(), payout, refund, balance))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_gas(dir: &Path, report: &GasReport) -> anyhow::Result<()> {
    write_json(dir, "gas_report.json", report)?;
    let mut w = csv_writer(dir, "gas.csv")?;
    w.write_record(["institutions", "gas", "usd"])?;
    for row in &report.table {
        w.serialize((row.institutions, row.gas, row.usd))?;
    }
    w.flush()?;
    Ok(())
}
