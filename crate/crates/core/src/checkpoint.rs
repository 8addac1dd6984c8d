//! Binary checkpoint: magic, version, a JSON block (config plus tensor index)
//! and the tensors as little-endian f32 in index order.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::{EncoderConfig, EncoderError, EncoderParams};
use crate::eval::ClassifierHead;
use crate::trainer::TrainableAlpha;

pub const MAGIC: &[u8; 8] = b"TFCODECK";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint file")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: EncoderParams,
    pub classifier: Option<ClassifierHead>,
    pub alpha: Option<TrainableAlpha>,
    /// Category names for the classifier outputs, in index order.
    pub labels: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    encoder: EncoderConfig,
    tensors: Vec<TensorEntry>,
    #[serde(default)]
    alpha_logit: Option<f64>,
    #[serde(default)]
    labels: Vec<String>,
}

impl Checkpoint {
    pub fn new(params: EncoderParams) -> Self {
        Checkpoint {
            params,
            classifier: None,
            alpha: None,
            labels: Vec::new(),
        }
    }

    fn tensor_list(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut t = self.params.tensors();
        if let Some(h) = &self.classifier {
            t.push(("classifier.w".into(), h.w.shape().to_vec(), h.w.as_slice().unwrap()));
            t.push(("classifier.b".into(), vec![h.b.len()], h.b.as_slice().unwrap()));
        }
        t
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<(), CheckpointError> {
        let tensors = self.tensor_list();
        let meta = Meta {
            encoder: self.params.config.clone(),
            tensors: tensors
                .iter()
                .map(|(name, shape, _)| TensorEntry {
                    name: name.clone(),
                    shape: shape.clone(),
                })
                .collect(),
            alpha_logit: self.alpha.map(|a| a.logit),
            labels: self.labels.clone(),
        };
        let json = serde_json::to_vec(&meta).expect("metadata serializes");
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        for (_, _, data) in tensors {
            for &x in data {
                w.write_all(&(x as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("in-memory write");
        buf
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let mut w = crate::io::create(path).map_err(|e| CheckpointError::Io(std::io::Error::other(e.to_string())))?;
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self, CheckpointError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let mut json = vec![0u8; u64::from_le_bytes(b8) as usize];
        r.read_exact(&mut json)?;
        let meta: Meta = serde_json::from_slice(&json).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;

        let mut params = EncoderParams::init(meta.encoder.clone(), 0)?;
        let expected: Vec<(String, Vec<usize>)> = params.tensors().into_iter().map(|(n, s, _)| (n, s)).collect();
        let n_enc = expected.len();
        if meta.tensors.len() < n_enc {
            return Err(CheckpointError::Corrupt("missing encoder tensors".into()));
        }
        for (entry, (name, shape)) in meta.tensors.iter().zip(&expected) {
            if &entry.name != name || &entry.shape != shape {
                return Err(CheckpointError::Corrupt(format!("unexpected tensor {}", entry.name)));
            }
        }
        let mut read_into = |dst: &mut [f64]| -> Result<(), CheckpointError> {
            let mut buf = vec![0u8; dst.len() * 4];
            r.read_exact(&mut buf)?;
            for (d, c) in dst.iter_mut().zip(buf.chunks_exact(4)) {
                *d = f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64;
            }
            Ok(())
        };
        for t in params.tensors_mut() {
            read_into(t)?;
        }
        let classifier = match &meta.tensors[n_enc..] {
            [] => None,
            [w, b] if w.name == "classifier.w" && b.name == "classifier.b" && w.shape.len() == 2 => {
                let mut wa = Array2::zeros((w.shape[0], w.shape[1]));
                let mut ba = Array1::zeros(b.shape[0]);
                read_into(wa.as_slice_mut().unwrap())?;
                read_into(ba.as_slice_mut().unwrap())?;
                Some(ClassifierHead { w: wa, b: ba })
            }
            _ => return Err(CheckpointError::Corrupt("unexpected trailing tensors".into())),
        };
        Ok(Checkpoint {
            params,
            classifier,
            alpha: meta.alpha_logit.map(|logit| TrainableAlpha { logit }),
            labels: meta.labels,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> EncoderParams {
        let mut c = EncoderConfig::new(7, 8, 2, 2);
        c.mlp_dims = vec![8, 4];
        c.max_relative_distance = 3;
        EncoderParams::init(c, 9).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let mut ck = Checkpoint::new(params());
        ck.classifier = Some(ClassifierHead {
            w: Array2::from_shape_fn((4, 3), |(i, j)| ((i * 3 + j) as f32 * 0.1) as f64),
            b: Array1::from(vec![0.5, -0.25, 1.0]),
        });
        ck.alpha = Some(TrainableAlpha { logit: -1.25 });
        ck.labels = vec!["a".into(), "b".into(), "c".into()];
        let bytes = ck.to_bytes();
        let back = Checkpoint::read_from(bytes.as_slice()).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_bytes(), bytes);
        let ids = [1, 2, 6, 0];
        assert_eq!(back.params.embed(&ids).unwrap(), ck.params.embed(&ids).unwrap());
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(matches!(
            Checkpoint::read_from(&b"NOTACKPTxxxxxxxxxxxx"[..]),
            Err(CheckpointError::BadMagic)
        ));
        let mut bytes = Checkpoint::new(params()).to_bytes();
        bytes[8] = 9;
        assert!(matches!(
            Checkpoint::read_from(bytes.as_slice()),
            Err(CheckpointError::UnsupportedVersion(9))
        ));
    }
}
