//! Line-delimited CSI trace files.
//!
//! ```text
//! {"n_sub":30,"n_rx":3}
//! {"ts":0.0,"csi":[[0.91,-0.33],[...], ...]}
//! ```
//!
//! The first line declares the shape; every following line is one frame with
//! exactly `n_sub * n_rx` `[re, im]` pairs in subcarrier-major order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::CsiFrame;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    pub n_sub: u32,
    pub n_rx: u32,
}

#[derive(Serialize)]
struct RecordOut<'a> {
    ts: f64,
    csi: &'a [[f64; 2]],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordIn {
    ts: f64,
    csi: Vec<[f64; 2]>,
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<trace stream>", e)
}

/// Writes the header and one record per frame.
pub fn write_csi_trace<W: Write>(frames: &[CsiFrame], mut out: W) -> Result<()> {
    let Some(first) = frames.first() else {
        return Ok(());
    };
    let header = TraceHeader {
        n_sub: first.n_sub as u32,
        n_rx: first.n_rx as u32,
    };
    serde_json::to_writer(&mut out, &header).map_err(|e| Error::Synthesis(e.to_string()))?;
    out.write_all(b"\n").map_err(io_err)?;

    let mut pairs: Vec<[f64; 2]> = Vec::with_capacity(first.h.len());
    let mut last_ts = f64::NEG_INFINITY;
    for (i, f) in frames.iter().enumerate() {
        if f.n_sub != first.n_sub || f.n_rx != first.n_rx || f.h.len() != f.n_sub * f.n_rx {
            return Err(Error::Format {
                line: i + 2,
                msg: format!("frame {i} changes shape"),
            });
        }
        if !f.ts.is_finite() || f.ts < last_ts {
            return Err(Error::Format {
                line: i + 2,
                msg: format!("frame {i} has a non-monotone timestamp"),
            });
        }
        last_ts = f.ts;
        pairs.clear();
        for c in &f.h {
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::Format {
                    line: i + 2,
                    msg: format!("frame {i} contains a non-finite value"),
                });
            }
            pairs.push([c.re, c.im]);
        }
        serde_json::to_writer(&mut out, &RecordOut { ts: f.ts, csi: &pairs })
            .map_err(|e| Error::Synthesis(e.to_string()))?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn write_csi_trace_file(frames: &[CsiFrame], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csi_trace(frames, BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Parses a trace stream. An empty stream yields no frames.
pub fn parse_csi_trace<R: BufRead>(source: R) -> Result<Vec<CsiFrame>> {
    let mut lines = source.lines();
    let header: TraceHeader = match lines.next() {
        None => return Ok(Vec::new()),
        Some(line) => {
            let line = line.map_err(|e| Error::Parse {
                line: 1,
                record: None,
                msg: e.to_string(),
            })?;
            serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: 1,
                record: None,
                msg: format!("bad header: {e}"),
            })?
        }
    };
    if header.n_sub == 0 || header.n_rx == 0 {
        return Err(Error::Format {
            line: 1,
            msg: "header declares an empty CSI matrix".into(),
        });
    }
    let (n_sub, n_rx) = (header.n_sub as usize, header.n_rx as usize);
    let expected = n_sub * n_rx;

    let mut frames = Vec::new();
    let mut last_ts = f64::NEG_INFINITY;
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            record: Some(idx),
            msg: e.to_string(),
        })?;
        let rec: RecordIn = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            record: Some(idx),
            msg: e.to_string(),
        })?;
        if rec.csi.len() != expected {
            return Err(Error::Parse {
                line: line_no,
                record: Some(idx),
                msg: format!(
                    "record has {} [re, im] pairs, header declares {n_sub}x{n_rx} = {expected}",
                    rec.csi.len()
                ),
            });
        }
        if rec.ts < last_ts {
            return Err(Error::Format {
                line: line_no,
                msg: format!("timestamp {} precedes {last_ts}", rec.ts),
            });
        }
        last_ts = rec.ts;
        frames.push(CsiFrame {
            ts: rec.ts,
            n_sub,
            n_rx,
            h: rec.csi.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
        });
    }
    Ok(frames)
}

pub fn read_csi_trace(path: &Path) -> Result<Vec<CsiFrame>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csi_trace(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frames(n: usize) -> Vec<CsiFrame> {
        (0..n)
            .map(|i| CsiFrame {
                ts: i as f64 * 0.01,
                n_sub: 2,
                n_rx: 1,
                h: vec![Complex64::new(0.1 * i as f64, -1.0 / 3.0), Complex64::new(1e-300, 7.25)],
            })
            .collect()
    }

    #[test]
    fn empty_stream_is_empty() {
        assert!(parse_csi_trace(&b""[..]).unwrap().is_empty());
        assert!(parse_csi_trace(&b"{\"n_sub\":2,\"n_rx\":1}\n"[..]).unwrap().is_empty());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let f = frames(5);
        let mut buf = Vec::new();
        write_csi_trace(&f, &mut buf).unwrap();
        let back = parse_csi_trace(&buf[..]).unwrap();
        assert_eq!(back, f);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("{\"n_sub\":2,\"n_rx\":1}\n{\"ts\":0.0,\"csi\":[["));
    }

    #[test]
    fn wrong_pair_count_names_record() {
        let text = "{\"n_sub\":2,\"n_rx\":1}\n{\"ts\":0.0,\"csi\":[[1,0],[0,1]]}\n{\"ts\":0.1,\"csi\":[[1,0]]}\n";
        match parse_csi_trace(text.as_bytes()) {
            Err(Error::Parse { line: 3, record: Some(1), .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_monotone_timestamps_are_rejected() {
        let text = "{\"n_sub\":1,\"n_rx\":1}\n{\"ts\":0.5,\"csi\":[[1,0]]}\n{\"ts\":0.4,\"csi\":[[1,0]]}\n";
        assert!(matches!(parse_csi_trace(text.as_bytes()), Err(Error::Format { line: 3, .. })));
    }

    #[test]
    fn strictness() {
        for bad in [
            "{\"n_sub\":1,\"n_rx\":1,\"x\":2}\n",
            "{\"n_sub\":1.0,\"n_rx\":1}\n",
            "{\"n_sub\":0,\"n_rx\":1}\n",
            "{\"n_sub\":1,\"n_rx\":1}\n{\"ts\":0.0,\"csi\":[[1,0]],\"rssi\":3}\n",
            "{\"n_sub\":1,\"n_rx\":1}\n{\"ts\":0.0,\"csi\":[[1,0,0]]}\n",
            "{\"n_sub\":1,\"n_rx\":1}\n\n",
            "{\"n_sub\":1,\"n_rx\":1}\n{\"csi\":[[1,0]]}\n",
        ] {
            assert!(parse_csi_trace(bad.as_bytes()).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn writer_rejects_shape_change() {
        let mut f = frames(3);
        f[2].n_sub = 1;
        f[2].h.pop();
        assert!(write_csi_trace(&f, Vec::new()).is_err());
    }
}
