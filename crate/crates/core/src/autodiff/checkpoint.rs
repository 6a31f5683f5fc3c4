//! Binary checkpoints.
//!
//! ```text
//! XDRS-CKPT v1\n
//! u64 LE   manifest length in bytes
//! JSON     {"meta": ..., "tensors": [{"name", "rows", "cols", "trainable"}, ...]}
//! f64 LE   tensor payloads in manifest order, row-major
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{AutodiffError, ParamStore, Tensor};

pub const CHECKPOINT_HEADER: &str = "XDRS-CKPT v1\n";

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
    trainable: bool,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    meta: Value,
    tensors: Vec<TensorEntry>,
}

fn bad(m: impl Into<String>) -> AutodiffError {
    AutodiffError::Checkpoint(m.into())
}

pub fn checkpoint_bytes(meta: &Value, store: &ParamStore) -> Vec<u8> {
    let manifest = Manifest {
        meta: meta.clone(),
        tensors: store
            .iter()
            .map(|(_, p)| TensorEntry {
                name: p.name.clone(),
                rows: p.value.rows(),
                cols: p.value.cols(),
                trainable: p.trainable,
            })
            .collect(),
    };
    let json = serde_json::to_vec(&manifest).expect("manifest serializes");
    let mut out = Vec::with_capacity(CHECKPOINT_HEADER.len() + 8 + json.len() + store.parameter_count() * 8);
    out.extend_from_slice(CHECKPOINT_HEADER.as_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, p) in store.iter() {
        for v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn parse_checkpoint(bytes: &[u8]) -> Result<(Value, ParamStore), AutodiffError> {
    let rest = bytes
        .strip_prefix(CHECKPOINT_HEADER.as_bytes())
        .ok_or_else(|| bad("missing or unsupported header"))?;
    if rest.len() < 8 {
        return Err(bad("truncated manifest length"));
    }
    let len = u64::from_le_bytes(rest[..8].try_into().unwrap()) as usize;
    let rest = &rest[8..];
    if rest.len() < len {
        return Err(bad("truncated manifest"));
    }
    let manifest: Manifest = serde_json::from_slice(&rest[..len]).map_err(|e| bad(e.to_string()))?;
    let mut payload = &rest[len..];
    let mut store = ParamStore::new(0);
    for t in manifest.tensors {
        let n = t.rows * t.cols;
        if payload.len() < n * 8 {
            return Err(bad(format!("truncated payload for {}", t.name)));
        }
        let data = payload[..n * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        payload = &payload[n * 8..];
        store.insert(&t.name, Tensor::new(t.rows, t.cols, data)?, t.trainable);
    }
    if !payload.is_empty() {
        return Err(bad("trailing bytes after payload"));
    }
    Ok((manifest.meta, store))
}

pub fn save_checkpoint(path: &Path, meta: &Value, store: &ParamStore) -> Result<(), AutodiffError> {
    std::fs::write(path, checkpoint_bytes(meta, store))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(Value, ParamStore), AutodiffError> {
    parse_checkpoint(&std::fs::read(path)?)
}

impl ParamStore {
    /// Copies values from `other` by name. Names and shapes must agree.
    pub fn restore_from(&mut self, other: &ParamStore) -> Result<(), AutodiffError> {
        if other.len() != self.len() {
            return Err(bad(format!(
                "checkpoint has {} tensors, model has {}",
                other.len(),
                self.len()
            )));
        }
        for (_, p) in other.iter() {
            let id = self
                .get(&p.name)
                .ok_or_else(|| bad(format!("unknown tensor {}", p.name)))?;
            if self.value(id).shape() != p.value.shape() {
                return Err(bad(format!("shape mismatch for {}", p.name)));
            }
            *self.value_mut(id) = p.value.clone();
            self.set_trainable(id, p.trainable);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut store = ParamStore::new(11);
        store.uniform("a", 3, 4);
        let e = store.uniform("emb", 2, 2);
        store.set_trainable(e, false);
        let meta = serde_json::json!({"hidden": 4});
        let bytes = checkpoint_bytes(&meta, &store);
        assert!(bytes.starts_with(b"XDRS-CKPT v1\n"));
        let (m, loaded) = parse_checkpoint(&bytes).unwrap();
        assert_eq!(m, meta);
        let mut fresh = ParamStore::new(99);
        fresh.uniform("a", 3, 4);
        fresh.uniform("emb", 2, 2);
        fresh.restore_from(&loaded).unwrap();
        for ((_, p), (_, q)) in fresh.iter().zip(store.iter()) {
            assert_eq!(p, q);
        }
        assert!(parse_checkpoint(&bytes[..bytes.len() - 1]).is_err());
        assert!(parse_checkpoint(b"garbage").is_err());
    }
}
