//! Binary parameter archive.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    8 bytes  "TGLSCKPT"
//! version  u32
//! count    u32
//! count × {
//!     name_len u32, name (UTF-8), frozen u8,
//!     ndim u32, dims u64 × ndim,
//!     data f64 × prod(dims)
//! }
//! ```

use std::io::{self, Read, Write};

use super::{ParamStore, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"TGLSCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(store: &ParamStore, mut w: W) -> io::Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(store.len() as u32).to_le_bytes())?;
    for (id, name, tensor) in store.iter() {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&[store.is_frozen(id) as u8])?;
        w.write_all(&(tensor.shape().len() as u32).to_le_bytes())?;
        for d in tensor.shape() {
            w.write_all(&(*d as u64).to_le_bytes())?;
        }
        for v in tensor.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

fn bad(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> io::Result<ParamStore> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(bad("not a parameter checkpoint (bad magic)"));
    }
    let version = read_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!(
            "unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"
        )));
    }
    let count = read_u32(&mut r)?;
    let mut store = ParamStore::new();
    for _ in 0..count {
        let name_len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| bad("parameter name is not UTF-8"))?;
        if store.id_of(&name).is_some() {
            return Err(bad(format!("duplicate parameter {name}")));
        }
        let mut frozen = [0u8; 1];
        r.read_exact(&mut frozen)?;
        let ndim = read_u32(&mut r)? as usize;
        let shape = (0..ndim)
            .map(|_| read_u64(&mut r).map(|d| d as usize))
            .collect::<io::Result<Vec<_>>>()?;
        let len: usize = shape.iter().product();
        let mut raw = vec![0u8; len * 8];
        r.read_exact(&mut raw)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        let tensor = Tensor::new(shape, data).map_err(|e| bad(e.to_string()))?;
        let id = store.add(name, tensor);
        store.set_frozen(id, frozen[0] != 0);
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_bits_names_and_flags() {
        let mut store = ParamStore::new();
        store.add(
            "a.weight",
            Tensor::matrix(&[&[1.5, -0.0], &[f64::MIN_POSITIVE, 3.0]]),
        );
        let b = store.add("a.bias", Tensor::vector(vec![0.1, 0.2]));
        store.add("scalar", Tensor::scalar(std::f64::consts::PI));
        store.set_frozen(b, true);
        let mut buf = Vec::new();
        write_checkpoint(&store, &mut buf).unwrap();
        assert_eq!(&buf[..8], CHECKPOINT_MAGIC);
        let back = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back, store);
        assert!(back.is_frozen(b));
    }

    #[test]
    fn rejects_bad_magic_and_version() {
        assert!(read_checkpoint(&b"NOTACKPT\x01\0\0\0\0\0\0\0"[..]).is_err());
        let mut buf = Vec::new();
        write_checkpoint(&ParamStore::new(), &mut buf).unwrap();
        buf[8] = 9;
        let err = read_checkpoint(buf.as_slice()).unwrap_err();
        assert!(err.to_string().contains("version 9"));
    }
}
