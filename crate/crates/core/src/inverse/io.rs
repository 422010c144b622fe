//! Binary model container: magic, format version, JSON config block,
//! normalizer, little-endian f64 parameters and a trailing CRC-32.

use std::fs;
use std::path::Path;

use super::data::Normalizer;
use super::model::InverseModel;
use super::ModelConfig;
use crate::domain::N_SLOTS;
use crate::error::{Error, Result};

pub const MODEL_MAGIC: [u8; 8] = *b"UNIFIMDL";
pub const MODEL_VERSION: u32 = 1;

pub fn write_model(model: &InverseModel) -> Vec<u8> {
    let cfg = serde_json::to_vec(&model.config).expect("config serializes");
    let mut out = Vec::with_capacity(64 + cfg.len() + 8 * model.params.len());
    out.extend_from_slice(&MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&(cfg.len() as u32).to_le_bytes());
    out.extend_from_slice(&cfg);
    for v in model.normalizer.mean.iter().chain(&model.normalizer.std) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(model.params.len() as u64).to_le_bytes());
    for v in &model.params {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.at < n {
            return Err(Error::ModelFile(format!(
                "truncated at byte {} reading {what} ({n} bytes needed, {} left)",
                self.at,
                self.buf.len() - self.at
            )));
        }
        let s = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

pub fn read_model(bytes: &[u8]) -> Result<InverseModel> {
    let mut r = Reader { buf: bytes, at: 0 };
    if r.take(8, "magic")? != MODEL_MAGIC {
        return Err(Error::ModelFile("bad magic at byte 0: not a model file".into()));
    }
    let version = r.u32("version")?;
    if version != MODEL_VERSION {
        return Err(Error::ModelFile(format!(
            "format version {version} at byte 8, this build reads version {MODEL_VERSION}"
        )));
    }
    if bytes.len() < r.at + 4 {
        return Err(Error::ModelFile(format!("truncated at byte {}: no checksum", bytes.len())));
    }
    let body = &bytes[..bytes.len() - 4];
    let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().expect("4 bytes"));
    let actual = crc32fast::hash(body);
    if stored != actual {
        return Err(Error::ModelFile(format!(
            "checksum mismatch at byte {}: stored {stored:08x}, computed {actual:08x}",
            body.len()
        )));
    }
    let mut r = Reader { buf: body, at: r.at };
    let cfg_len = r.u32("config length")? as usize;
    let cfg_at = r.at;
    let cfg: ModelConfig = serde_json::from_slice(r.take(cfg_len, "config")?)
        .map_err(|e| Error::ModelFile(format!("config block at byte {cfg_at}: {e}")))?;
    let mut norm = Normalizer::default();
    for k in 0..N_SLOTS {
        norm.mean[k] = r.f64("normalizer")?;
    }
    for k in 0..N_SLOTS {
        norm.std[k] = r.f64("normalizer")?;
    }
    let n = r.u64("parameter count")? as usize;
    if n.checked_mul(8) != Some(body.len() - r.at) {
        return Err(Error::ModelFile(format!(
            "parameter count {n} at byte {} does not match the {} remaining bytes",
            r.at - 8,
            body.len() - r.at
        )));
    }
    let params = (0..n).map(|_| r.f64("parameters")).collect::<Result<Vec<_>>>()?;
    InverseModel::new(cfg, norm, params).map_err(|e| match e {
        Error::ModelFile(m) => Error::ModelFile(format!("config block at byte {cfg_at}: {m}")),
        other => Error::ModelFile(format!("config block at byte {cfg_at}: {other}")),
    })
}

pub fn save_model(model: &InverseModel, path: &Path) -> Result<()> {
    fs::write(path, write_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<InverseModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_model(&bytes)
}
