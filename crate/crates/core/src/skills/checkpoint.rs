//! Binary container for transferable weights.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        4 bytes  "SKLC"
//! version      u32
//! task id      u32 length + UTF-8
//! dims         3 x u32  (input width, hidden per direction, labels)
//! vocab hash   u64
//! metadata     u32 count, then (u32 length + UTF-8 key, u32 length + UTF-8 value)
//! tensors      u32 count, then per tensor:
//!              u32 name length, name, u32 rank, rank x u32 dims,
//!              product(dims) x f64 payload
//! ```

use std::path::Path;

use super::TaskId;
use crate::nn::{ParamStore, Tensor};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SKLC";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderCheckpoint {
    pub version: u32,
    pub task: TaskId,
    /// `[input width, hidden per direction, labels]`
    pub dims: [usize; 3],
    pub vocab_hash: u64,
    pub metadata: Vec<(String, String)>,
    pub tensors: Vec<(String, Tensor)>,
}

impl EncoderCheckpoint {
    /// Collects every store entry under `prefix` (names stored without it).
    pub fn from_store(
        task: TaskId,
        store: &ParamStore,
        prefix: &str,
        dims: [usize; 3],
        vocab_hash: u64,
        metadata: Vec<(String, String)>,
    ) -> Self {
        EncoderCheckpoint {
            version: VERSION,
            task,
            dims,
            vocab_hash,
            metadata,
            tensors: store.export_prefix(prefix),
        }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        put_str(&mut out, self.task.as_str());
        for d in self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.vocab_hash.to_le_bytes());
        out.extend_from_slice(&(self.metadata.len() as u32).to_le_bytes());
        for (k, v) in &self.metadata {
            put_str(&mut out, k);
            put_str(&mut out, v);
        }
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            put_str(&mut out, name);
            out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
            for d in t.shape() {
                out.extend_from_slice(&(*d as u32).to_le_bytes());
            }
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Checkpoint("bad magic bytes".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}, expected {VERSION}")));
        }
        let task: TaskId = r.string()?.parse().map_err(|_| Error::Checkpoint("unknown task id".into()))?;
        let dims = [r.u32()? as usize, r.u32()? as usize, r.u32()? as usize];
        let vocab_hash = r.u64()?;
        let n_meta = r.u32()?;
        let mut metadata = Vec::new();
        for _ in 0..n_meta {
            metadata.push((r.string()?, r.string()?));
        }
        let n_tensors = r.u32()?;
        let mut tensors = Vec::new();
        for _ in 0..n_tensors {
            let name = r.string()?;
            let rank = r.u32()? as usize;
            let shape: Vec<usize> = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<_>>()?;
            let count: usize = shape.iter().product();
            let payload = r.take(count.checked_mul(8).ok_or_else(|| Error::Checkpoint("tensor too large".into()))?)?;
            let data = payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            tensors.push((name, Tensor::new(shape, data)?));
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes after last tensor".into()));
        }
        Ok(EncoderCheckpoint {
            version,
            task,
            dims,
            vocab_hash,
            metadata,
            tensors,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Loads and checks the task id and, when given, the dims.
    pub fn load_expecting(path: &Path, task: TaskId, dims: Option<[usize; 3]>) -> Result<Self> {
        let ck = Self::load(path)?;
        ck.expect(task, dims)?;
        Ok(ck)
    }

    pub fn expect(&self, task: TaskId, dims: Option<[usize; 3]>) -> Result<()> {
        if self.task != task {
            return Err(Error::Checkpoint(format!("checkpoint holds task {}, expected {task}", self.task)));
        }
        if let Some(d) = dims {
            if d != self.dims {
                return Err(Error::Checkpoint(format!("checkpoint dims {:?}, expected {d:?}", self.dims)));
            }
        }
        Ok(())
    }

    /// Writes every tensor into `store` as `{prefix}{name}`, replacing
    /// existing entries (shape-checked) or inserting new ones.
    pub fn install(&self, store: &mut ParamStore, prefix: &str, trainable: bool) -> Result<()> {
        for (name, t) in &self.tensors {
            let full = format!("{prefix}{name}");
            match store.id(&full) {
                Some(id) => {
                    store.set_value(id, t.clone()).map_err(|e| Error::Checkpoint(e.to_string()))?;
                    store.set_trainable(id, trainable);
                }
                None => {
                    store.insert(full, t.clone(), trainable)?;
                }
            }
        }
        Ok(())
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Checkpoint("invalid UTF-8".into()))
    }
}
