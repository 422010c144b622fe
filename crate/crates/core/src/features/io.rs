//! Line-delimited feature sequence files, one record per frame:
//! `{"ts":0.5,"corr_s":0.41,"dser_s":-4.7,"plcr":0.0,"corr_l":null,"dser_l":null}`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use super::FeatureFrame;
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    ts: f64,
    #[serde(deserialize_with = "nullable")]
    corr_s: Option<f64>,
    #[serde(deserialize_with = "nullable")]
    dser_s: Option<f64>,
    #[serde(deserialize_with = "nullable")]
    plcr: Option<f64>,
    #[serde(deserialize_with = "nullable")]
    corr_l: Option<f64>,
    #[serde(deserialize_with = "nullable")]
    dser_l: Option<f64>,
}

// A plain `Option` field would silently accept a missing key.
fn nullable<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    Option::<f64>::deserialize(d)
}

fn slot(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl From<&FeatureFrame> for Record {
    fn from(f: &FeatureFrame) -> Self {
        let v = f.values;
        Self {
            ts: f.ts,
            corr_s: slot(v[0]),
            dser_s: slot(v[1]),
            plcr: slot(v[2]),
            corr_l: slot(v[3]),
            dser_l: slot(v[4]),
        }
    }
}

impl From<Record> for FeatureFrame {
    fn from(r: Record) -> Self {
        let s = FeatureFrame::SENTINEL;
        FeatureFrame::new(
            r.ts,
            [
                r.corr_s.unwrap_or(s),
                r.dser_s.unwrap_or(s),
                r.plcr.unwrap_or(s),
                r.corr_l.unwrap_or(s),
                r.dser_l.unwrap_or(s),
            ],
        )
    }
}

pub fn write_features<W: Write>(frames: &[FeatureFrame], mut out: W) -> Result<()> {
    let io_err = |e| Error::io("<feature stream>", e);
    for f in frames {
        if !f.ts.is_finite() {
            return Err(Error::Format {
                line: 0,
                msg: "feature frame has a non-finite timestamp".into(),
            });
        }
        serde_json::to_writer(&mut out, &Record::from(f)).map_err(|e| Error::Synthesis(e.to_string()))?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn write_feature_file(frames: &[FeatureFrame], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_features(frames, BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_feature_file<R: BufRead>(source: R) -> Result<Vec<FeatureFrame>> {
    let mut out = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let err = |msg: String| Error::Parse {
            line: idx + 1,
            record: Some(idx),
            msg,
        };
        let line = line.map_err(|e| err(e.to_string()))?;
        let rec: Record = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        out.push(FeatureFrame::from(rec));
    }
    Ok(out)
}

pub fn read_feature_file(path: &Path) -> Result<Vec<FeatureFrame>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_feature_file(BufReader::new(file))
}
