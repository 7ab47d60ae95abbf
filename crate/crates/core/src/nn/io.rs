//! Binary parameter files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic     8 bytes  "CLNPPARM"
//! version   u32      1
//! count     u32      number of parameters
//! repeated count times:
//!   name_len u32, name (UTF-8), rank u32, dims u64 * rank, values f64 * prod(dims)
//! meta_len  u64      length of the trailing metadata blob (may be 0)
//! meta      bytes    model-specific metadata (JSON for the bundled models)
//! ```

use std::io::{self, Read, Write};

use super::{NnError, Parameterized, Tensor};

pub const MAGIC: &[u8; 8] = b"CLNPPARM";
pub const VERSION: u32 = 1;

/// Upper bound on a single length field, to reject garbage before allocating.
const MAX_LEN: u64 = 1 << 34;

pub fn write_params<W: Write>(
    mut w: W,
    params: &[(&str, &Tensor)],
    metadata: &[u8],
) -> Result<(), NnError> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for (name, tensor) in params {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(tensor.shape().len() as u32).to_le_bytes())?;
        for &dim in tensor.shape() {
            w.write_all(&(dim as u64).to_le_bytes())?;
        }
        for v in tensor.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.write_all(&(metadata.len() as u64).to_le_bytes())?;
    w.write_all(metadata)?;
    w.flush()?;
    Ok(())
}

/// Parameters in file order plus the metadata blob.
pub type ParamFile = (Vec<(String, Tensor)>, Vec<u8>);

pub fn read_params<R: Read>(mut r: R) -> Result<ParamFile, NnError> {
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic)?;
    if &magic != MAGIC {
        return Err(NnError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(NnError::BadVersion(version));
    }
    let count = read_u32(&mut r)?;
    let mut params = Vec::with_capacity(count.min(1024) as usize);
    for _ in 0..count {
        let name_len = checked_len(read_u32(&mut r)? as u64)?;
        let mut name = vec![0u8; name_len];
        read_exact(&mut r, &mut name)?;
        let name = String::from_utf8(name)
            .map_err(|_| NnError::Corrupt("parameter name is not UTF-8".into()))?;
        let rank = read_u32(&mut r)?;
        if rank > 8 {
            return Err(NnError::Corrupt(format!("rank {rank} for '{name}'")));
        }
        let mut shape = Vec::with_capacity(rank as usize);
        for _ in 0..rank {
            shape.push(checked_len(read_u64(&mut r)?)?);
        }
        let len = checked_len(shape.iter().map(|&d| d as u64).product())?;
        let mut data = Vec::with_capacity(len);
        let mut buf = [0u8; 8];
        for _ in 0..len {
            read_exact(&mut r, &mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        params.push((name, Tensor::from_vec(&shape, data)?));
    }
    let meta_len = checked_len(read_u64(&mut r)?)?;
    let mut meta = vec![0u8; meta_len];
    read_exact(&mut r, &mut meta)?;
    Ok((params, meta))
}

/// Writes every parameter of `model` in its stable order.
pub fn save_model<W: Write, M: Parameterized>(w: W, model: &M, metadata: &[u8]) -> Result<(), NnError> {
    let params = model.parameters();
    let named: Vec<(&str, &Tensor)> = params.iter().map(|p| (p.name.as_str(), &p.value)).collect();
    write_params(w, &named, metadata)
}

/// Copies loaded values into `model`, matching by name and shape.
pub fn restore<M: Parameterized>(model: &mut M, loaded: Vec<(String, Tensor)>) -> Result<(), NnError> {
    let mut params = model.parameters_mut();
    if params.len() != loaded.len() {
        return Err(NnError::Corrupt(format!(
            "expected {} parameters, found {}",
            params.len(),
            loaded.len()
        )));
    }
    for (name, tensor) in loaded {
        let p = params
            .iter_mut()
            .find(|p| p.name == name)
            .ok_or_else(|| NnError::Corrupt(format!("unexpected parameter '{name}'")))?;
        if p.value.shape() != tensor.shape() {
            return Err(NnError::Corrupt(format!(
                "parameter '{name}' has shape {:?}, expected {:?}",
                tensor.shape(),
                p.value.shape()
            )));
        }
        p.value = tensor;
    }
    Ok(())
}

fn checked_len(len: u64) -> Result<usize, NnError> {
    if len > MAX_LEN {
        return Err(NnError::Corrupt(format!("implausible length {len}")));
    }
    Ok(len as usize)
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), NnError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => NnError::Truncated,
        _ => NnError::Io(e),
    })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, NnError> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, NnError> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}
