//! Binary model checkpoints.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic      8 bytes  "MTALCKPT"
//! version    u32      1
//! hash_len   u32      length of the config hash string
//! hash       bytes    UTF-8 config hash
//! dim        u64
//! hidden     u64
//! step       u64
//! adam       4 x f64  beta1, beta2, epsilon, weight_decay
//! params     f64 block (see below), then first moment, then second moment
//! ```
//!
//! A parameter block is the shared weights (`dim * hidden`, row-major), the
//! shared bias (`hidden`), then for offensive, violent, vulgar: head weights
//! (`hidden`) and head bias. Floats are stored as raw bit patterns, so a
//! save/load round trip is exact.

use crate::model::{AdamConfig, ModelConfig, ModelState, Params};
use crate::task::Task;
use std::io::{self, Read, Write};
use thiserror::Error;

const MAGIC: &[u8; 8] = b"MTALCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

/// A model state together with the hash of the config that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_hash: String,
    pub state: ModelState,
}

fn write_block(w: &mut impl Write, p: &Params) -> io::Result<()> {
    let mut buf = Vec::with_capacity(p.len() * 8);
    let mut put = |v: f64| buf.extend_from_slice(&v.to_bits().to_le_bytes());
    p.shared_weights.iter().for_each(|&v| put(v));
    p.shared_bias.iter().for_each(|&v| put(v));
    for task in Task::ALL {
        p.heads[task].weights.iter().for_each(|&v| put(v));
        put(p.heads[task].bias);
    }
    w.write_all(&buf)
}

fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> io::Result<f64> {
    read_u64(r).map(f64::from_bits)
}

fn read_block(r: &mut impl Read, dim: usize, hidden: usize) -> io::Result<Params> {
    let mut p = Params::zeros(dim, hidden);
    let mut bytes = vec![0u8; p.len() * 8];
    r.read_exact(&mut bytes)?;
    let mut vals = bytes
        .chunks_exact(8)
        .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().expect("8-byte chunk"))));
    let mut next = || vals.next().expect("block sized from dims");
    p.shared_weights.iter_mut().for_each(|v| *v = next());
    p.shared_bias.iter_mut().for_each(|v| *v = next());
    for task in Task::ALL {
        p.heads[task].weights.iter_mut().for_each(|v| *v = next());
        p.heads[task].bias = next();
    }
    Ok(p)
}

impl Checkpoint {
    pub fn write(&self, w: &mut impl Write) -> Result<(), CheckpointError> {
        let s = &self.state;
        w.write_all(MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        w.write_all(&(self.config_hash.len() as u32).to_le_bytes())?;
        w.write_all(self.config_hash.as_bytes())?;
        w.write_all(&(s.config.dim as u64).to_le_bytes())?;
        w.write_all(&(s.config.hidden as u64).to_le_bytes())?;
        w.write_all(&s.step.to_le_bytes())?;
        let a = s.config.adam;
        for v in [a.beta1, a.beta2, a.epsilon, a.weight_decay] {
            w.write_all(&v.to_bits().to_le_bytes())?;
        }
        write_block(w, &s.params)?;
        write_block(w, &s.first_moment)?;
        write_block(w, &s.second_moment)?;
        Ok(())
    }

    pub fn read(r: &mut impl Read) -> Result<Self, CheckpointError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = read_u32(r)?;
        if version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version(version));
        }
        let hash_len = read_u32(r)? as usize;
        if hash_len > 1024 {
            return Err(CheckpointError::Corrupt(format!("hash length {hash_len}")));
        }
        let mut hash = vec![0u8; hash_len];
        r.read_exact(&mut hash)?;
        let config_hash = String::from_utf8(hash)
            .map_err(|_| CheckpointError::Corrupt("hash is not UTF-8".into()))?;
        let dim = read_u64(r)? as usize;
        let hidden = read_u64(r)? as usize;
        if dim == 0 || hidden == 0 || dim.checked_mul(hidden).is_none_or(|n| n > 1 << 34) {
            return Err(CheckpointError::Corrupt(format!("dims {dim}x{hidden}")));
        }
        let step = read_u64(r)?;
        let adam = AdamConfig {
            beta1: read_f64(r)?,
            beta2: read_f64(r)?,
            epsilon: read_f64(r)?,
            weight_decay: read_f64(r)?,
        };
        let params = read_block(r, dim, hidden)?;
        let first_moment = read_block(r, dim, hidden)?;
        let second_moment = read_block(r, dim, hidden)?;
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(CheckpointError::Corrupt("trailing bytes".into()));
        }
        Ok(Self {
            config_hash,
            state: ModelState {
                config: ModelConfig { dim, hidden, adam },
                params,
                first_moment,
                second_moment,
                step,
            },
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write(&mut out).expect("writing to a Vec cannot fail");
        out
    }
}
