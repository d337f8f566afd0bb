//! Versioned binary model file: magic bytes, version, payload, CRC32
//! trailer. All multi-byte fields are little-endian.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{CoreError, Result};

use super::{ClassifierModel, ModelMeta, FEATURE_LEN};

const MAGIC: &[u8; 4] = b"VAMD";
const VERSION: u32 = 1;

/// Serializes a model. The layout is
/// `magic | version | bias | slope | intercept | meta | n_weights | weights | crc32`.
pub fn save_model(model: &ClassifierModel, path: &Path) -> Result<()> {
    let mut body = Vec::with_capacity(16 + FEATURE_LEN * 8);
    body.extend_from_slice(MAGIC);
    body.extend_from_slice(&VERSION.to_le_bytes());
    body.extend_from_slice(&model.bias.to_le_bytes());
    body.extend_from_slice(&model.calibration.0.to_le_bytes());
    body.extend_from_slice(&model.calibration.1.to_le_bytes());
    body.extend_from_slice(&model.meta.n_examples.to_le_bytes());
    body.extend_from_slice(&model.meta.n_positive.to_le_bytes());
    body.extend_from_slice(&model.meta.n_negative.to_le_bytes());
    body.extend_from_slice(&model.meta.created_unix.to_le_bytes());
    let digest = model.meta.config_digest.as_bytes();
    body.extend_from_slice(&(digest.len() as u32).to_le_bytes());
    body.extend_from_slice(digest);
    body.extend_from_slice(&(model.weights.len() as u32).to_le_bytes());
    for w in &model.weights {
        body.extend_from_slice(&w.to_le_bytes());
    }
    let crc = crc32(&body);
    let mut file = std::fs::File::create(path)?;
    file.write_all(&body)?;
    file.write_all(&crc.to_le_bytes())?;
    Ok(())
}

/// Loads a model, validating magic, version, length and checksum.
pub fn load_model(path: &Path) -> Result<ClassifierModel> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 4 + 4 + 4 {
        return Err(CoreError::ModelFormatError("file truncated".into()));
    }
    let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let stored_crc = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    if crc32(body) != stored_crc {
        return Err(CoreError::ModelFormatError("checksum mismatch".into()));
    }

    let mut cur = Cursor { buf: body, pos: 0 };
    let magic = cur.take(4)?;
    if magic != MAGIC {
        return Err(CoreError::ModelFormatError("bad magic bytes".into()));
    }
    let version = cur.read_u32()?;
    if version != VERSION {
        return Err(CoreError::ModelFormatError(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let bias = cur.read_f64()?;
    let slope = cur.read_f64()?;
    let intercept = cur.read_f64()?;
    let n_examples = cur.read_u32()?;
    let n_positive = cur.read_u32()?;
    let n_negative = cur.read_u32()?;
    let created_unix = i64::from_le_bytes(cur.take(8)?.try_into().unwrap());
    let digest_len = cur.read_u32()? as usize;
    let digest = String::from_utf8(cur.take(digest_len)?.to_vec())
        .map_err(|_| CoreError::ModelFormatError("config digest is not utf-8".into()))?;
    let n_weights = cur.read_u32()? as usize;
    let mut weights = Vec::with_capacity(n_weights);
    for _ in 0..n_weights {
        weights.push(cur.read_f64()?);
    }
    if cur.pos != body.len() {
        return Err(CoreError::ModelFormatError("trailing bytes".into()));
    }

    Ok(ClassifierModel {
        weights,
        bias,
        calibration: (slope, intercept),
        meta: ModelMeta {
            n_examples,
            n_positive,
            n_negative,
            created_unix,
            config_digest: digest,
        },
    })
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(CoreError::ModelFormatError("file truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn read_u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn read_f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// CRC-32 (IEEE 802.3, reflected polynomial 0xEDB88320).
fn crc32(data: &[u8]) -> u32 {
    let mut crc = 0xFFFFFFFFu32;
    for &byte in data {
        crc ^= byte as u32;
        for _ in 0..8 {
            let mask = (crc & 1).wrapping_neg();
            crc = (crc >> 1) ^ (0xEDB88320 & mask);
        }
    }
    !crc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_model() -> ClassifierModel {
        ClassifierModel {
            weights: (0..FEATURE_LEN).map(|i| (i as f64).sin()).collect(),
            bias: -0.731,
            calibration: (2.25, -0.4),
            meta: ModelMeta {
                n_examples: 2112,
                n_positive: 220,
                n_negative: 1892,
                created_unix: 1_700_000_000,
                config_digest: "0123456789abcdef".into(),
            },
        }
    }

    #[test]
    fn crc32_known_vector() {
        // CRC-32 of "123456789" is 0xCBF43926.
        assert_eq!(crc32(b"123456789"), 0xCBF43926);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.vamd");
        let model = sample_model();
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(model, loaded);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.vamd");
        save_model(&sample_model(), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(
            load_model(&path),
            Err(CoreError::ModelFormatError(_))
        ));
    }

    #[test]
    fn corrupted_byte_fails_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.vamd");
        save_model(&sample_model(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        std::fs::write(&path, &bytes).unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(matches!(err, CoreError::ModelFormatError(_)));
    }

    #[test]
    fn version_mismatch_is_reported_with_detail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.vamd");
        save_model(&sample_model(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 99; // bump version field
        let body_len = bytes.len() - 4;
        let crc = crc32(&bytes[..body_len]).to_le_bytes();
        bytes[body_len..].copy_from_slice(&crc);
        std::fs::write(&path, &bytes).unwrap();
        match load_model(&path) {
            Err(CoreError::ModelFormatError(msg)) => {
                assert!(msg.contains("version 99"), "message: {msg}")
            }
            other => panic!("expected version error, got {other:?}"),
        }
    }
}
