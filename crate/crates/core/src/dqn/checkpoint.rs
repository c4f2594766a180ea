//! Versioned flat binary policy checkpoints.
//!
//! Layout: magic `RLTQ`, `u32` version, `u32` layer count, one `u32` per layer
//! width, then every parameter as a little-endian `f64`.

use std::io::{Read, Write};
use std::path::Path;

use super::{QNetwork, TrainedPolicy};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"RLTQ";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_policy<W: Write>(policy: &TrainedPolicy, mut w: W) -> std::io::Result<()> {
    let dims = policy.net.dims();
    w.write_all(&CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for d in dims {
        w.write_all(&(*d as u32).to_le_bytes())?;
    }
    for p in policy.net.params() {
        w.write_all(&p.to_le_bytes())?;
    }
    w.flush()
}

fn read_u32(bytes: &[u8], at: &mut usize) -> Result<u32> {
    let chunk = bytes
        .get(*at..*at + 4)
        .ok_or_else(|| Error::Checkpoint("truncated header".into()))?;
    *at += 4;
    Ok(u32::from_le_bytes(chunk.try_into().expect("4 bytes")))
}

pub fn read_policy<R: Read>(mut r: R) -> Result<TrainedPolicy> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    if bytes.get(..4) != Some(&CHECKPOINT_MAGIC[..]) {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let mut at = 4;
    let version = read_u32(&bytes, &mut at)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let layers = read_u32(&bytes, &mut at)? as usize;
    if layers > 64 {
        return Err(Error::Checkpoint(format!("implausible layer count {layers}")));
    }
    let dims = (0..layers)
        .map(|_| read_u32(&bytes, &mut at).map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let body = &bytes[at..];
    if body.len() % 8 != 0 {
        return Err(Error::Checkpoint("parameter block not a whole number of f64".into()));
    }
    let params: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::Checkpoint("non-finite parameter".into()));
    }
    let net = QNetwork::from_params(&dims, params).map_err(|e| Error::Checkpoint(e.to_string()))?;
    Ok(TrainedPolicy { net })
}

pub fn save_policy(policy: &TrainedPolicy, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_policy(policy, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load_policy(path: &Path) -> Result<TrainedPolicy> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_policy(std::io::BufReader::new(file))
}
