//! Binary model container: magic, version, JSON header, then named
//! little-endian `f64` arrays in header order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;

pub const MAGIC: &[u8; 8] = b"RCATCKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl NamedArray {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) -> Self {
        NamedArray { name: name.into(), shape, data }
    }
}

#[derive(Serialize, Deserialize)]
struct ArrayEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    kind: String,
    meta: serde_json::Value,
    arrays: Vec<ArrayEntry>,
}

/// A self-describing checkpoint: a kind tag, free-form JSON metadata and
/// named arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub kind: String,
    pub meta: serde_json::Value,
    pub arrays: Vec<NamedArray>,
}

impl Container {
    pub fn new(kind: impl Into<String>, meta: serde_json::Value) -> Self {
        Container { kind: kind.into(), meta, arrays: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) {
        self.arrays.push(NamedArray::new(name, shape, data));
    }

    pub fn get(&self, name: &str) -> Result<&NamedArray> {
        self.arrays
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::Checkpoint(format!("missing array '{name}'")))
    }

    /// Header field, deserialized.
    pub fn meta_field<T: serde::de::DeserializeOwned>(&self, key: &str) -> Result<T> {
        let v = self
            .meta
            .get(key)
            .ok_or_else(|| Error::Checkpoint(format!("header lacks '{key}'")))?;
        serde_json::from_value(v.clone()).map_err(|e| Error::Checkpoint(format!("header field '{key}': {e}")))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        for a in &self.arrays {
            if a.shape.iter().product::<usize>() != a.data.len() {
                return Err(Error::Checkpoint(format!("array '{}' does not match its shape", a.name)));
            }
        }
        let header = Header {
            kind: self.kind.clone(),
            meta: self.meta.clone(),
            arrays: self.arrays.iter().map(|a| ArrayEntry { name: a.name.clone(), shape: a.shape.clone() }).collect(),
        };
        let json = serde_json::to_vec(&header)?;
        let n: usize = self.arrays.iter().map(|a| a.data.len()).sum();
        let mut out = Vec::with_capacity(20 + json.len() + 8 * n);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for a in &self.arrays {
            for v in &a.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let header_len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
        let body = bytes.get(20..).ok_or_else(|| bad("truncated header"))?;
        let json = body.get(..header_len).ok_or_else(|| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(json)?;
        let mut data = &body[header_len..];
        let mut arrays = Vec::with_capacity(header.arrays.len());
        for entry in header.arrays {
            let n: usize = entry.shape.iter().product();
            if data.len() < 8 * n {
                return Err(Error::Checkpoint(format!("array '{}' is truncated", entry.name)));
            }
            let values = data[..8 * n]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            data = &data[8 * n..];
            arrays.push(NamedArray::new(entry.name, entry.shape, values));
        }
        if !data.is_empty() {
            return Err(bad("trailing bytes after the last array"));
        }
        Ok(Container { kind: header.kind, meta: header.meta, arrays })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Loads and checks the kind tag.
    pub fn load_kind(path: &Path, kind: &str) -> Result<Self> {
        let c = Self::load(path)?;
        if c.kind != kind {
            return Err(Error::Checkpoint(format!("expected a {kind} checkpoint, found {}", c.kind)));
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut c = Container::new("test", serde_json::json!({"seed": 3, "vocab_hash": "ab"}));
        c.push("w", vec![2, 2], vec![0.1, -0.0, f64::MIN_POSITIVE, 1e300]);
        c.push("b", vec![0], vec![]);
        let back = Container::from_bytes(&c.to_bytes().unwrap()).unwrap();
        assert_eq!(back.meta, c.meta);
        let w = back.get("w").unwrap();
        assert!(w.data.iter().zip(&c.arrays[0].data).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(back.meta_field::<u64>("seed").unwrap(), 3);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let mut c = Container::new("test", serde_json::Value::Null);
        c.push("w", vec![3], vec![1.0, 2.0, 3.0]);
        let bytes = c.to_bytes().unwrap();
        assert!(Container::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(Container::from_bytes(b"NOTACKPT").is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Container::from_bytes(&extra).is_err());
        c.arrays[0].shape = vec![4];
        assert!(c.to_bytes().is_err());
    }

    proptest! {
        #[test]
        fn arbitrary_values_survive(bits in prop::collection::vec(any::<u64>(), 0..50)) {
            let data: Vec<f64> = bits.iter().map(|&b| f64::from_bits(b)).collect();
            let mut c = Container::new("p", serde_json::json!({}));
            c.push("x", vec![data.len()], data);
            let back = Container::from_bytes(&c.to_bytes().unwrap()).unwrap();
            let got: Vec<u64> = back.get("x").unwrap().data.iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(got, bits);
        }
    }
}
