//! Binary model file.
//!
//! ```text
//! "ANCL"                      4 bytes magic
//! version                     u16
//! --- payload ---
//! feature kind                u8   (0 = ACF, 1 = QAF)
//! lag count, lags             u32, u32 each
//! level count, levels         u32, f64 each
//! input, embed hidden, embed out, head hidden   u32 x 4
//! parameters                  f64 each, layer by layer, weights row-major then bias
//! --- end payload ---
//! CRC-32 of the payload       u32
//! ```
//!
//! All integers and floats are little-endian.

use std::path::Path;

use super::{NetworkDims, NetworkParams};
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureSpec};

pub const MODEL_MAGIC: &[u8; 4] = b"ANCL";
pub const MODEL_VERSION: u16 = 1;

/// Trained parameters together with the feature layout they expect.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityModel {
    pub layout: FeatureSpec,
    pub params: NetworkParams,
}

impl AffinityModel {
    pub fn new(layout: FeatureSpec, params: NetworkParams) -> Result<Self> {
        if layout.dim() != params.dims().input {
            return Err(Error::DimensionMismatch {
                expected: params.dims().input,
                got: layout.dim(),
            });
        }
        Ok(Self { layout, params })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut payload = Vec::new();
        payload.push(match self.layout.kind {
            FeatureKind::Acf => 0u8,
            FeatureKind::Qaf => 1u8,
        });
        payload.extend((self.layout.lags.len() as u32).to_le_bytes());
        for &l in &self.layout.lags {
            payload.extend((l as u32).to_le_bytes());
        }
        payload.extend((self.layout.levels.len() as u32).to_le_bytes());
        for &t in &self.layout.levels {
            payload.extend(t.to_le_bytes());
        }
        let dims = self.params.dims();
        for d in [dims.input, dims.embed_hidden, dims.embed_out, dims.head_hidden] {
            payload.extend((d as u32).to_le_bytes());
        }
        for v in self.params.values() {
            payload.extend(v.to_le_bytes());
        }
        let mut out = Vec::with_capacity(payload.len() + 10);
        out.extend_from_slice(MODEL_MAGIC);
        out.extend(MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&payload);
        out.extend(crc32fast::hash(&payload).to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != MODEL_MAGIC {
            return Err(Error::ModelVersion("missing `ANCL` magic bytes".into()));
        }
        let mut cur = Cursor { bytes, pos: 4 };
        let version = u16::from_le_bytes(cur.take::<2>()?);
        if version != MODEL_VERSION {
            return Err(Error::ModelVersion(format!(
                "format version {version}, this build reads {MODEL_VERSION}"
            )));
        }
        let payload_start = cur.pos;
        let kind = match cur.take::<1>()?[0] {
            0 => FeatureKind::Acf,
            1 => FeatureKind::Qaf,
            other => return Err(Error::ModelVersion(format!("unknown feature kind {other}"))),
        };
        let lag_count = cur.u32()? as usize;
        let lags = (0..lag_count)
            .map(|_| cur.u32().map(|l| l as usize))
            .collect::<Result<Vec<_>>>()?;
        let level_count = cur.u32()? as usize;
        let levels = (0..level_count)
            .map(|_| cur.take::<8>().map(f64::from_le_bytes))
            .collect::<Result<Vec<_>>>()?;
        let dims = NetworkDims {
            input: cur.u32()? as usize,
            embed_hidden: cur.u32()? as usize,
            embed_out: cur.u32()? as usize,
            head_hidden: cur.u32()? as usize,
        };
        cur.ensure(dims.param_count().saturating_mul(8))?;
        let values = (0..dims.param_count())
            .map(|_| cur.take::<8>().map(f64::from_le_bytes))
            .collect::<Result<Vec<_>>>()?;
        let payload_end = cur.pos;
        let stored = u32::from_le_bytes(cur.take::<4>()?);
        if cur.pos != bytes.len() {
            return Err(Error::ModelVersion(format!(
                "{} unexpected trailing bytes",
                bytes.len() - cur.pos
            )));
        }
        let computed = crc32fast::hash(&bytes[payload_start..payload_end]);
        if stored != computed {
            return Err(Error::ModelChecksum { stored, computed });
        }
        let layout = FeatureSpec { kind, lags, levels };
        layout
            .validate()
            .map_err(|e| Error::ModelVersion(format!("invalid feature layout: {e}")))?;
        Self::new(layout, NetworkParams::from_values(dims, values)?)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn ensure(&self, needed: usize) -> Result<()> {
        if self.bytes.len().saturating_sub(self.pos) < needed {
            return Err(Error::ModelTruncated {
                offset: self.pos,
                needed,
            });
        }
        Ok(())
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        self.ensure(N)?;
        let mut out = [0u8; N];
        out.copy_from_slice(&self.bytes[self.pos..self.pos + N]);
        self.pos += N;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        self.take::<4>().map(u32::from_le_bytes)
    }
}

pub fn save_model(model: &AffinityModel, path: &Path) -> Result<()> {
    std::fs::write(path, model.to_bytes())?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<AffinityModel> {
    AffinityModel::from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    fn model() -> AffinityModel {
        let layout = FeatureSpec::default_qaf();
        let params = NetworkParams::init(layout.dim(), &mut seeded_rng(3)).unwrap();
        AffinityModel::new(layout, params).unwrap()
    }

    #[test]
    fn bytes_round_trip_exactly() {
        let m = model();
        let bytes = m.to_bytes();
        let back = AffinityModel::from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn corruption_is_classified() {
        let bytes = model().to_bytes();

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(AffinityModel::from_bytes(&bad_magic), Err(Error::ModelVersion(_))));

        let mut bad_version = bytes.clone();
        bad_version[4] = 9;
        assert!(matches!(AffinityModel::from_bytes(&bad_version), Err(Error::ModelVersion(_))));

        let truncated = &bytes[..bytes.len() - 100];
        assert!(matches!(
            AffinityModel::from_bytes(truncated),
            Err(Error::ModelTruncated { .. })
        ));

        let mut flipped = bytes.clone();
        let idx = bytes.len() - 40;
        flipped[idx] ^= 0x01;
        assert!(matches!(
            AffinityModel::from_bytes(&flipped),
            Err(Error::ModelChecksum { .. })
        ));
    }
}
