//! CSV serialization for training logs and reports.
//!
//! Scheduler trace columns: `iteration,epoch,attribute,val_loss,lambda,tau,fp,fn`
//! with one row per attribute per scheduler pass. Floats print in shortest
//! round-trip form, so reading a trace back reproduces the written values
//! exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::{EvalReport, SchemeRow};
use crate::trainer::{AttrTraceRow, LrEvent, SchedulerUpdate, TrainLog};

pub const TRACE_HEADER: &str = "iteration,epoch,attribute,val_loss,lambda,tau,fp,fn";

pub fn write_scheduler_trace(path: &Path, log: &TrainLog) -> Result<()> {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for update in &log.scheduler_updates {
        for (name, row) in log.attribute_names.iter().zip(&update.rows) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                update.iteration,
                update.epoch,
                name,
                row.val_loss,
                row.lambda,
                row.tau,
                row.fp,
                row.fn_count
            );
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a scheduler trace back into per-pass updates. Returns the attribute
/// names in first-seen order and the updates in file order.
pub fn read_scheduler_trace(path: &Path) -> Result<(Vec<String>, Vec<SchedulerUpdate>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == TRACE_HEADER => {}
        _ => return Err(Error::parse(path, 1, format!("expected header {TRACE_HEADER:?}"))),
    }

    let mut names: Vec<String> = Vec::new();
    let mut updates: Vec<SchedulerUpdate> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected 8 fields, got {}", fields.len()),
            ));
        }
        let bad = |what: &str| Error::parse(path, line_no, format!("bad {what} field"));
        let iteration: u64 = fields[0].parse().map_err(|_| bad("iteration"))?;
        let epoch: u64 = fields[1].parse().map_err(|_| bad("epoch"))?;
        let attribute = fields[2].to_string();
        let row = AttrTraceRow {
            val_loss: fields[3].parse().map_err(|_| bad("val_loss"))?,
            lambda: fields[4].parse().map_err(|_| bad("lambda"))?,
            tau: fields[5].parse().map_err(|_| bad("tau"))?,
            fp: fields[6].parse().map_err(|_| bad("fp"))?,
            fn_count: fields[7].parse().map_err(|_| bad("fn"))?,
        };
        if !names.contains(&attribute) {
            names.push(attribute.clone());
        }
        match updates.last_mut() {
            Some(update) if update.iteration == iteration => update.rows.push(row),
            _ => updates.push(SchedulerUpdate {
                iteration,
                epoch,
                update_index: updates.len() as u64,
                rows: vec![row],
            }),
        }
    }
    if updates.is_empty() {
        return Err(Error::EmptyInput(format!("trace {} has no rows", path.display())));
    }
    Ok((names, updates))
}

pub fn write_loss_curve(path: &Path, curve: &[(u64, f64)]) -> Result<()> {
    let mut out = String::from("iteration,joint_loss\n");
    for (iteration, loss) in curve {
        let _ = writeln!(out, "{iteration},{loss}");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_lr_events(path: &Path, events: &[LrEvent]) -> Result<()> {
    let mut out = String::from("iteration,old_lr,new_lr\n");
    for e in events {
        let _ = writeln!(out, "{},{},{}", e.iteration, e.old_lr, e.new_lr);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_eval_report(path: &Path, report: &EvalReport) -> Result<()> {
    let mut out = String::from("attribute,accuracy,balanced_accuracy,tp,tn,fp,fn\n");
    for (name, stats) in report.attribute_names.iter().zip(&report.per_attribute) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            name, stats.accuracy, stats.balanced_accuracy, stats.tp, stats.tn, stats.fp,
            stats.fn_count
        );
    }
    let _ = writeln!(out, "mean,{},,,,,", report.mean_accuracy);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_scheme_comparison(path: &Path, rows: &[SchemeRow]) -> Result<()> {
    let mut out = String::from("scheme,seed,mean_accuracy\n");
    for row in rows {
        let _ = writeln!(out, "{},{},{}", row.scheme, row.seed, row.mean_accuracy);
    }
    // aggregate block: one mean row per scheme, in first-seen order
    let mut seen: Vec<&str> = Vec::new();
    for row in rows {
        if !seen.contains(&row.scheme.as_str()) {
            seen.push(&row.scheme);
        }
    }
    for scheme in seen {
        let accs: Vec<f64> = rows
            .iter()
            .filter(|r| r.scheme == scheme)
            .map(|r| r.mean_accuracy)
            .collect();
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        let _ = writeln!(out, "{scheme},aggregate,{mean}");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
