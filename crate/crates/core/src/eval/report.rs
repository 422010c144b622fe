//! Report files: line-delimited key/value records with a closing summary,
//! plus tab-separated plot data.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::experiments::{AblationRow, ExperimentReport, RateRow};
use crate::domain::RealEvent;
use crate::error::{Error, Result};

fn write(dir: &Path, name: &str, body: &str, out: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    out.push(path);
    Ok(())
}

fn opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, |x| json!(x))
}

/// The key/value records of a report, summary last.
pub fn report_records(r: &ExperimentReport) -> Vec<Value> {
    let mut recs = vec![
        json!({"key": "name", "value": r.name}),
        json!({"key": "accuracy", "value": r.accuracy}),
    ];
    for e in RealEvent::ALL {
        recs.push(json!({"key": format!("precision.{}", e.name()), "value": opt(r.precision[e.index()])}));
        recs.push(json!({"key": format!("recall.{}", e.name()), "value": opt(r.recall[e.index()])}));
    }
    recs.extend([
        json!({"key": "median_error_m", "value": opt(r.median_error)}),
        json!({"key": "p90_error_m", "value": opt(r.p90_error)}),
        json!({"key": "mean_error_m", "value": opt(r.mean_error)}),
        json!({"key": "mean_latency_s", "value": opt(r.mean_latency_s)}),
        json!({"key": "frames_scored", "value": r.confusion.total()}),
        json!({"key": "frames_tracked", "value": r.cdf.len()}),
        json!({"key": "epochs_run", "value": r.train_log.len()}),
        json!({"key": "fingerprint", "value": r.fingerprint}),
        json!({"key": "seed", "value": r.seed}),
        json!({"summary": {
            "name": r.name,
            "accuracy": r.accuracy,
            "median_error_m": opt(r.median_error),
            "p90_error_m": opt(r.p90_error),
            "mean_latency_s": opt(r.mean_latency_s),
            "fingerprint": r.fingerprint,
            "seed": r.seed,
        }}),
    ]);
    recs
}

/// Writes `report.jsonl`, `cdf.tsv`, `confusion.tsv` and `train_log.tsv`
/// into `dir`. Output is a pure function of the report.
pub fn emit_report(r: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    if r.confusion.total() == 0 {
        return Err(Error::Evaluation("refusing to emit a report with no scored frames".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();

    let mut s = String::new();
    for rec in report_records(r) {
        s.push_str(&rec.to_string());
        s.push('\n');
    }
    write(dir, "report.jsonl", &s, &mut out)?;

    let mut s = String::from("error_m\tp\n");
    for (x, p) in r.cdf.points() {
        writeln!(s, "{x}\t{p}").expect("string write");
    }
    write(dir, "cdf.tsv", &s, &mut out)?;

    let mut s = String::from("truth");
    for e in RealEvent::ALL {
        write!(s, "\t{}", e.name()).expect("string write");
    }
    s.push('\n');
    for e in RealEvent::ALL {
        s.push_str(e.name());
        for c in r.confusion.counts[e.index()] {
            write!(s, "\t{c}").expect("string write");
        }
        s.push('\n');
    }
    write(dir, "confusion.tsv", &s, &mut out)?;

    let mut s = String::from("epoch\ttrain_loss\ttrain_acc\tval_loss\tval_acc\n");
    for l in &r.train_log {
        writeln!(s, "{}\t{}\t{}\t{}\t{}", l.epoch, l.train_loss, l.train_acc, l.val_loss, l.val_acc).expect("string write");
    }
    write(dir, "train_log.tsv", &s, &mut out)?;
    Ok(out)
}

pub fn emit_ablation(rows: &[AblationRow], dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut s = String::from("subset\tinputs\taccuracy\tmedian_error_m\terror\n");
    for row in rows {
        let inputs: String = row.subset.inputs.iter().map(|&b| if b { '1' } else { '0' }).collect();
        match &row.report {
            Ok(r) => writeln!(
                s,
                "{}\t{inputs}\t{}\t{}\t",
                row.subset.name,
                r.accuracy,
                r.median_error.map_or("NaN".into(), |v| v.to_string())
            ),
            Err(e) => writeln!(s, "{}\t{inputs}\tNaN\tNaN\t{e}", row.subset.name),
        }
        .expect("string write");
    }
    let mut out = Vec::new();
    write(dir, "ablation.tsv", &s, &mut out)?;
    Ok(out.remove(0))
}

pub fn emit_rate_sweep(rows: &[RateRow], dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut s = String::from("rate_hz\taccuracy\tmean_error_m\tmedian_error_m\n");
    for r in rows {
        writeln!(s, "{}\t{}\t{}\t{}", r.rate_hz, r.accuracy, r.mean_error, r.median_error).expect("string write");
    }
    let mut out = Vec::new();
    write(dir, "rate_sweep.tsv", &s, &mut out)?;
    Ok(out.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use crate::eval::{ConfusionMatrix, ErrorCdf, Scored};

    fn report() -> ExperimentReport {
        let mut m = ConfusionMatrix::default();
        m.add(RealEvent::Walking, RealEvent::Walking);
        m.add(RealEvent::Absence, RealEvent::Stillness);
        let scored = Scored {
            confusion: m,
            cdf: ErrorCdf::from_errors(vec![0.5, 0.25, 1.0]).unwrap(),
        };
        ExperimentReport::new("t", scored, &ExperimentConfig::default())
    }

    #[test]
    fn emits_cdf_rows_and_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let r = report();
        let files = emit_report(&r, dir.path()).unwrap();
        let cdf = fs::read_to_string(dir.path().join("cdf.tsv")).unwrap();
        assert_eq!(cdf.lines().count(), 4);
        let ps: Vec<f64> = cdf.lines().skip(1).map(|l| l.split('\t').nth(1).unwrap().parse().unwrap()).collect();
        assert!(ps.windows(2).all(|w| w[0] < w[1]));
        let first: Vec<Vec<u8>> = files.iter().map(|f| fs::read(f).unwrap()).collect();
        emit_report(&r, dir.path()).unwrap();
        let second: Vec<Vec<u8>> = files.iter().map(|f| fs::read(f).unwrap()).collect();
        assert_eq!(first, second);
        let last = fs::read_to_string(dir.path().join("report.jsonl")).unwrap();
        let v: Value = serde_json::from_str(last.lines().last().unwrap()).unwrap();
        assert_eq!(v["summary"]["accuracy"], json!(0.5));
    }

    #[test]
    fn refuses_empty_report() {
        let dir = tempfile::tempdir().unwrap();
        let r = ExperimentReport::new("e", Scored::default(), &ExperimentConfig::default());
        let e = emit_report(&r, dir.path()).unwrap_err();
        assert!(e.to_string().contains("no scored frames"));
    }
}
