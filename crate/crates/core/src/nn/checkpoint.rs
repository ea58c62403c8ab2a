// Copyright 2026 The rbert Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Named-tensor container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   b"RBTC"
//! version u32 (= 1)
//! meta    u32 length + UTF-8 text (free-form `key = value` lines)
//! count   u32
//! count × { name: u32 length + UTF-8, rank: u32, dims: rank × u64, dtype: u8 (0 = f64) }
//! count × raw tensor values, row-major, in header order
//! ```

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::param::ParamStore;
use crate::error::{RbertError, Result};

const MAGIC: &[u8; 4] = b"RBTC";
const VERSION: u32 = 1;
const DTYPE_F64: u8 = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub metadata: String,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn from_store(store: &ParamStore, metadata: impl Into<String>) -> Self {
        Checkpoint {
            metadata: metadata.into(),
            tensors: store
                .iter()
                .map(|p| NamedTensor {
                    name: p.name.clone(),
                    shape: p.value.shape().to_vec(),
                    values: p.value.iter().copied().collect(),
                })
                .collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&NamedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    /// Copies every tensor into the matching store parameter. The store must
    /// hold exactly the same names.
    pub fn restore_into(&self, store: &mut ParamStore) -> Result<()> {
        if self.tensors.len() != store.len() {
            return Err(RbertError::Checkpoint(format!(
                "checkpoint has {} tensors, model expects {}",
                self.tensors.len(),
                store.len()
            )));
        }
        for t in &self.tensors {
            let value = match t.shape.as_slice() {
                [r, c] => Array2::from_shape_vec((*r, *c), t.values.clone())
                    .map_err(|e| RbertError::Checkpoint(format!("{}: {e}", t.name)))?,
                other => {
                    return Err(RbertError::Checkpoint(format!("{}: unsupported rank {}", t.name, other.len())))
                }
            };
            store.set_value(&t.name, value)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        write_str(&mut out, &self.metadata);
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            write_str(&mut out, &t.name);
            out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
            for &d in &t.shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            out.push(DTYPE_F64);
        }
        for t in &self.tensors {
            for v in &t.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(RbertError::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(RbertError::Checkpoint(format!("unsupported version {version}")));
        }
        let metadata = r.string()?;
        let count = r.u32()? as usize;
        let mut headers = Vec::with_capacity(count);
        for _ in 0..count {
            let name = r.string()?;
            let rank = r.u32()? as usize;
            let shape = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let dtype = r.take(1)?[0];
            if dtype != DTYPE_F64 {
                return Err(RbertError::Checkpoint(format!("{name}: unsupported dtype {dtype}")));
            }
            headers.push((name, shape));
        }
        let mut tensors = Vec::with_capacity(count);
        for (name, shape) in headers {
            let n: usize = shape.iter().product();
            let raw = r.take(n * 8)?;
            let values = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            tensors.push(NamedTensor { name, shape, values });
        }
        if r.pos != bytes.len() {
            return Err(RbertError::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(Checkpoint { metadata, tensors })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| RbertError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| RbertError::io(path, e))?;
        Checkpoint::from_bytes(&bytes)
    }
}

fn write_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| RbertError::Checkpoint("unexpected end of file".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| RbertError::Checkpoint(e.to_string()))
    }
}
