//! Binary parameter checkpoints.
//!
//! Layout, all integers and floats little-endian:
//!
//! | offset        | size      | field                                   |
//! |---------------|-----------|-----------------------------------------|
//! | 0             | 8         | magic `DDPSMLP1`                        |
//! | 8             | 4 (u32)   | number of layer sizes `L`               |
//! | 12            | 4 L (u32) | layer sizes, input first                |
//! | 12 + 4L       | 8 (u64)   | parameter count `P`                     |
//! | 20 + 4L       | 8 P (f64) | parameters in [`MlpParams`] flat order  |

use std::io::{Read, Write};

use super::{param_count, MlpParams};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"DDPSMLP1";

fn io(e: std::io::Error) -> Error {
    Error::Checkpoint(e.to_string())
}

pub fn write_checkpoint<W: Write>(params: &MlpParams, mut out: W) -> Result<()> {
    out.write_all(MAGIC).map_err(io)?;
    out.write_all(&(params.sizes().len() as u32).to_le_bytes())
        .map_err(io)?;
    for s in params.sizes() {
        out.write_all(&(*s as u32).to_le_bytes()).map_err(io)?;
    }
    out.write_all(&(params.theta().len() as u64).to_le_bytes())
        .map_err(io)?;
    for t in params.theta() {
        out.write_all(&t.to_le_bytes()).map_err(io)?;
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<MlpParams> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!("bad magic {magic:?}")));
    }
    let mut b4 = [0u8; 4];
    input.read_exact(&mut b4).map_err(io)?;
    let n_sizes = u32::from_le_bytes(b4) as usize;
    if n_sizes > 1024 {
        return Err(Error::Checkpoint(format!(
            "implausible layer count {n_sizes}"
        )));
    }
    let mut sizes = Vec::with_capacity(n_sizes);
    for _ in 0..n_sizes {
        input.read_exact(&mut b4).map_err(io)?;
        sizes.push(u32::from_le_bytes(b4) as usize);
    }
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b8).map_err(io)?;
    let count = u64::from_le_bytes(b8) as usize;
    if count != param_count(&sizes) {
        return Err(Error::Checkpoint(format!(
            "parameter count {count} does not match shape {sizes:?}"
        )));
    }
    let mut theta = Vec::with_capacity(count);
    for _ in 0..count {
        input.read_exact(&mut b8).map_err(io)?;
        theta.push(f64::from_le_bytes(b8));
    }
    MlpParams::new(sizes, theta)
}
