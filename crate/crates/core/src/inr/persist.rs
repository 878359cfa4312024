//! `INR1` container: a fitted network plus the channel scales needed to map
//! its output back to raw units.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! "INR1" | u32 n_widths | u32 × n_widths | u8 activation | f64 omega0
//!        | u32 n_channels | (f64 offset, f64 gain) × n_channels
//!        | u64 n_params | f64 × n_params
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::inr::mlp::{Activation, MlpSpec, ParamVector};
use crate::series::ChannelScale;

pub const INR_MAGIC: &[u8; 4] = b"INR1";

#[derive(Clone, Debug, PartialEq)]
pub struct InrModel {
    pub params: ParamVector,
    pub scale: Vec<ChannelScale>,
}

impl InrModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 8 * self.params.flat().len());
        out.extend_from_slice(INR_MAGIC);
        write_spec(&mut out, self.params.spec());
        write_scales(&mut out, &self.scale);
        write_f64s(&mut out, self.params.flat());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(INR_MAGIC)?;
        let spec = r.spec()?;
        let scale = r.scales()?;
        let flat = r.f64s()?;
        r.finish()?;
        if scale.len() != spec.output_width() {
            return Err(Error::Format("scale count differs from output width".into()));
        }
        Ok(InrModel {
            params: ParamVector::new(spec, flat).map_err(|e| Error::Format(e.to_string()))?,
            scale,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

pub(crate) fn write_spec(out: &mut Vec<u8>, spec: &MlpSpec) {
    out.extend_from_slice(&(spec.widths.len() as u32).to_le_bytes());
    for &w in &spec.widths {
        out.extend_from_slice(&(w as u32).to_le_bytes());
    }
    out.push(spec.activation.id());
    out.extend_from_slice(&spec.omega0.to_le_bytes());
}

pub(crate) fn write_scales(out: &mut Vec<u8>, scales: &[ChannelScale]) {
    out.extend_from_slice(&(scales.len() as u32).to_le_bytes());
    for s in scales {
        out.extend_from_slice(&s.offset.to_le_bytes());
        out.extend_from_slice(&s.gain.to_le_bytes());
    }
}

pub(crate) fn write_f64s(out: &mut Vec<u8>, values: &[f64]) {
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Cursor over a model container.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub(crate) fn magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        let got = self.take(4)?;
        if got != magic {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(got),
                String::from_utf8_lossy(magic)
            )));
        }
        Ok(())
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn spec(&mut self) -> Result<MlpSpec> {
        let n = self.u32()? as usize;
        if n > 64 {
            return Err(Error::Format(format!("implausible layer count {n}")));
        }
        let widths = (0..n).map(|_| self.u32().map(|w| w as usize)).collect::<Result<Vec<_>>>()?;
        let id = self.u8()?;
        let activation =
            Activation::from_id(id).ok_or_else(|| Error::Format(format!("unknown activation id {id}")))?;
        let omega0 = self.f64()?;
        MlpSpec::new(widths, activation, omega0).map_err(|e| Error::Format(e.to_string()))
    }

    pub(crate) fn scales(&mut self) -> Result<Vec<ChannelScale>> {
        let n = self.u32()? as usize;
        (0..n)
            .map(|_| {
                Ok(ChannelScale {
                    offset: self.f64()?,
                    gain: self.f64()?,
                })
            })
            .collect()
    }

    pub(crate) fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.u64()? as usize;
        if n > (self.bytes.len() - self.pos) / 8 {
            return Err(Error::Format(format!("declared {n} floats, file too short")));
        }
        (0..n).map(|_| self.f64()).collect()
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}
