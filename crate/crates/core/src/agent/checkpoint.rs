//! Binary model checkpoints: versioned header, architecture widths, then all
//! parameters as little-endian 64-bit floats in layout order. This file is
//! the artifact carried between environments, so round trips must be
//! bit-exact.

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::net::{DuelingNet, Layout, NetShape};

const MAGIC: &[u8; 8] = b"UAVTLCKP";
const VERSION: u32 = 1;

pub fn serialize<F: Real>(net: &DuelingNet<F>) -> Vec<u8> {
    let shape = net.shape();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(shape.input_dim as u32).to_le_bytes());
    out.extend_from_slice(&(shape.trunk.len() as u32).to_le_bytes());
    for &w in &shape.trunk {
        out.extend_from_slice(&(w as u32).to_le_bytes());
    }
    out.extend_from_slice(&(shape.head_hidden.len() as u32).to_le_bytes());
    for &w in &shape.head_hidden {
        out.extend_from_slice(&(w as u32).to_le_bytes());
    }
    out.extend_from_slice(&(shape.actions as u32).to_le_bytes());
    out.extend_from_slice(&(net.params().len() as u64).to_le_bytes());
    for &p in net.params() {
        out.extend_from_slice(&p.to64().to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Load("checkpoint truncated".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn deserialize<F: Real>(bytes: &[u8]) -> Result<DuelingNet<F>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Load("not a model checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Load(format!("unsupported checkpoint version {version}")));
    }
    let input_dim = r.u32()? as usize;
    let trunk_len = r.u32()? as usize;
    let mut trunk = Vec::with_capacity(trunk_len);
    for _ in 0..trunk_len {
        trunk.push(r.u32()? as usize);
    }
    let head_len = r.u32()? as usize;
    let mut head_hidden = Vec::with_capacity(head_len);
    for _ in 0..head_len {
        head_hidden.push(r.u32()? as usize);
    }
    let actions = r.u32()? as usize;
    let shape = NetShape { input_dim, trunk, head_hidden, actions };
    let count = r.u64()? as usize;
    let layout = Layout::from_shape(&shape);
    if count != layout.total_params {
        return Err(Error::Load(format!(
            "checkpoint declares {count} parameters but the architecture needs {}",
            layout.total_params
        )));
    }
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        params.push(F::of(r.f64()?));
    }
    if r.pos != bytes.len() {
        return Err(Error::Load("trailing bytes after checkpoint payload".into()));
    }
    DuelingNet::from_parts(shape, params)
}

/// Check that a loaded checkpoint matches the architecture the run expects,
/// naming the first differing layer.
pub fn check_shape(expected: &NetShape, found: &NetShape) -> Result<()> {
    if expected == found {
        return Ok(());
    }
    let el = Layout::from_shape(expected);
    let fl = Layout::from_shape(found);
    for (i, (e, f)) in el.layers.iter().zip(&fl.layers).enumerate() {
        if e.in_dim != f.in_dim || e.out_dim != f.out_dim {
            return Err(Error::Load(format!(
                "architecture mismatch at layer {}: expected {}x{}, checkpoint has {}x{}",
                el.layer_name(i),
                e.out_dim,
                e.in_dim,
                f.out_dim,
                f.in_dim
            )));
        }
    }
    Err(Error::Load(format!(
        "architecture mismatch: expected {} layers, checkpoint has {}",
        el.layers.len(),
        fl.layers.len()
    )))
}

pub fn save_file<F: Real>(net: &DuelingNet<F>, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, serialize(net))?;
    Ok(())
}

pub fn load_file<F: Real>(path: &std::path::Path) -> Result<DuelingNet<F>> {
    let bytes = std::fs::read(path)?;
    deserialize(&bytes)
}
