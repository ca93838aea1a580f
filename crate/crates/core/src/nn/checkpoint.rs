//! Binary parameter checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! b"CPRB" | version: u16
//! repeated until EOF:
//!   name_len: u32 | name: [u8; name_len] (UTF-8)
//!   rank: u32 | dims: [u64; rank]
//!   payload: [f64; product(dims)]
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{NnError, ParamSet, Tensor};

pub const MAGIC: &[u8; 4] = b"CPRB";
pub const VERSION: u16 = 1;

pub fn write_checkpoint<W: Write>(mut w: W, params: &ParamSet) -> Result<(), NnError> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for (name, t) in params.iter() {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(t.shape().len() as u32).to_le_bytes())?;
        for &d in t.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for v in t.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn encode_checkpoint(params: &ParamSet) -> Vec<u8> {
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, params).expect("writing to a Vec cannot fail");
    buf
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        if self.pos + n > self.buf.len() {
            return Err(NnError::Checkpoint(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, NnError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_checkpoint(buf: &[u8]) -> Result<ParamSet, NnError> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(NnError::Checkpoint("bad magic bytes".into()));
    }
    let version = u16::from_le_bytes(c.take(2)?.try_into().unwrap());
    if version != VERSION {
        return Err(NnError::Checkpoint(format!("unsupported version {version}")));
    }
    let mut params = ParamSet::new();
    while c.pos < buf.len() {
        let name_len = c.u32()? as usize;
        let name = std::str::from_utf8(c.take(name_len)?)
            .map_err(|_| NnError::Checkpoint("tensor name is not UTF-8".into()))?
            .to_string();
        let rank = c.u32()? as usize;
        let dims = (0..rank)
            .map(|_| c.u64().map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let count: usize = dims.iter().product();
        let payload = c.take(count.checked_mul(8).ok_or_else(|| NnError::Checkpoint("tensor too large".into()))?)?;
        let data = payload
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        params.push(name, Tensor::from_vec(&dims, data)?);
    }
    Ok(params)
}

pub fn save_checkpoint(path: &Path, params: &ParamSet) -> Result<(), NnError> {
    fs::write(path, encode_checkpoint(params))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ParamSet, NnError> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    decode_checkpoint(&buf)
}
