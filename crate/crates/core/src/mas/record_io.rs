//! On-disk attention records: a small JSON header next to a raw f32 payload.
//!
//! The header pins shape, key roles, dtype, byte order, element layout, the
//! payload filename, and the payload's SHA-256. The payload is
//! little-endian f32, layer-major then head then step then key. Weights are
//! f64 in memory; precision is dropped only at the file boundary.

use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{AttentionRecord, MasError, TokenRole};

const DTYPE: &str = "f32";
const BYTE_ORDER: &str = "little-endian";
const LAYOUT: &str = "layer-major then head then step then key";

#[derive(Debug, Error)]
pub enum RecordIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed attention record: {0}")]
    Malformed(String),
    #[error("payload hash mismatch: header says {expected}, payload is {actual}")]
    IntegrityMismatch { expected: String, actual: String },
    #[error(transparent)]
    Mas(#[from] MasError),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordHeader {
    #[serde(rename = "L")]
    layers: usize,
    #[serde(rename = "H")]
    heads: usize,
    #[serde(rename = "T_steps")]
    steps: usize,
    #[serde(rename = "T_keys")]
    keys: usize,
    roles: Vec<TokenRole>,
    dtype: String,
    byte_order: String,
    layout: String,
    payload: String,
    payload_sha256: String,
}

fn io_error(path: &Path, source: std::io::Error) -> RecordIoError {
    RecordIoError::Io { path: path.to_path_buf(), source }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn payload_path(header_path: &Path) -> Result<PathBuf, RecordIoError> {
    if header_path.file_name().is_none() {
        return Err(RecordIoError::Malformed(format!(
            "header path {} has no file name",
            header_path.display()
        )));
    }
    let mut p = header_path.to_path_buf();
    p.set_extension("bin");
    Ok(p)
}

/// Writes `record` as `<header_path>` plus a sibling `.bin` payload. The
/// record must already be row-normalized; invalid rows are refused here
/// rather than discovered by the next reader.
pub fn write_record(header_path: &Path, record: &AttentionRecord) -> Result<(), RecordIoError> {
    record.validate_row_sums()?;
    let bin_path = payload_path(header_path)?;

    let mut bytes = Vec::with_capacity(record.weights().len() * 4);
    for &w in record.weights() {
        bytes.extend_from_slice(&(w as f32).to_le_bytes());
    }

    let header = RecordHeader {
        layers: record.layers(),
        heads: record.heads(),
        steps: record.steps(),
        keys: record.keys(),
        roles: record.roles().to_vec(),
        dtype: DTYPE.into(),
        byte_order: BYTE_ORDER.into(),
        layout: LAYOUT.into(),
        payload: bin_path
            .file_name()
            .expect("payload path keeps the header's file name")
            .to_string_lossy()
            .into_owned(),
        payload_sha256: sha256_hex(&bytes),
    };

    std::fs::write(&bin_path, &bytes).map_err(|e| io_error(&bin_path, e))?;
    let mut json =
        serde_json::to_string_pretty(&header).expect("record header always serializes");
    json.push('\n');
    std::fs::write(header_path, json).map_err(|e| io_error(header_path, e))
}

/// Reads a record back, verifying dtype, byte order, layout, payload hash,
/// shape, finiteness, and row normalization before handing out weights.
pub fn read_record(header_path: &Path) -> Result<AttentionRecord, RecordIoError> {
    let header_text =
        std::fs::read_to_string(header_path).map_err(|e| io_error(header_path, e))?;
    let header: RecordHeader = serde_json::from_str(&header_text)
        .map_err(|e| RecordIoError::Malformed(format!("header does not parse: {e}")))?;

    if header.dtype != DTYPE {
        return Err(RecordIoError::Malformed(format!(
            "unsupported dtype {:?}, expected {DTYPE:?}",
            header.dtype
        )));
    }
    if header.byte_order != BYTE_ORDER {
        return Err(RecordIoError::Malformed(format!(
            "unsupported byte order {:?}, expected {BYTE_ORDER:?}",
            header.byte_order
        )));
    }
    if header.layout != LAYOUT {
        return Err(RecordIoError::Malformed(format!(
            "unsupported layout {:?}, expected {LAYOUT:?}",
            header.layout
        )));
    }
    if Path::new(&header.payload).file_name() != Some(header.payload.as_ref()) {
        return Err(RecordIoError::Malformed(format!(
            "payload {:?} must be a plain sibling file name",
            header.payload
        )));
    }

    let bin_path = header_path
        .parent()
        .unwrap_or_else(|| Path::new(""))
        .join(&header.payload);
    let bytes = match std::fs::read(&bin_path) {
        Ok(b) => b,
        Err(e) if e.kind() == ErrorKind::NotFound => {
            return Err(RecordIoError::Malformed(format!(
                "payload {} named by the header is missing",
                bin_path.display()
            )))
        }
        Err(e) => return Err(io_error(&bin_path, e)),
    };

    let actual = sha256_hex(&bytes);
    if actual != header.payload_sha256 {
        return Err(RecordIoError::IntegrityMismatch {
            expected: header.payload_sha256,
            actual,
        });
    }

    let expected_len = header.layers * header.heads * header.steps * header.keys * 4;
    if bytes.len() != expected_len {
        return Err(RecordIoError::Malformed(format!(
            "payload holds {} bytes, shape needs {expected_len}",
            bytes.len()
        )));
    }

    let mut weights = Vec::with_capacity(bytes.len() / 4);
    for (i, chunk) in bytes.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("chunks_exact yields 4 bytes"));
        if !v.is_finite() {
            return Err(RecordIoError::Malformed(format!(
                "non-finite weight at element {i}"
            )));
        }
        weights.push(f64::from(v));
    }

    let record = AttentionRecord::new(
        header.layers,
        header.heads,
        header.steps,
        header.keys,
        header.roles,
        weights,
    )?;
    record.validate_row_sums()?;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mas::DenominatorMode;
    use TokenRole::{Generated as G, Text as X, Visual as V};

    /// All weights exactly representable in f32 so round-trips are bitwise.
    fn sample_record() -> AttentionRecord {
        let roles = vec![V, V, X, G];
        let mut w = Vec::new();
        for head in 0..2 {
            for step in 0..4 {
                let row = if step == 3 {
                    if head == 0 {
                        [0.5, 0.25, 0.25, 0.0]
                    } else {
                        [0.125, 0.125, 0.75, 0.0]
                    }
                } else {
                    [0.25, 0.25, 0.5, 0.0]
                };
                w.extend_from_slice(&row);
            }
        }
        AttentionRecord::new(1, 2, 4, 4, roles, w).unwrap()
    }

    #[test]
    fn record_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("attn.json");
        let record = sample_record();
        write_record(&path, &record).unwrap();
        let back = read_record(&path).unwrap();
        assert_eq!(back, record);
        assert!(dir.path().join("attn.bin").exists());
        // The round-tripped record still scores.
        let mas = crate::mas::mas_layer(&back, 0, DenominatorMode::VisualText).unwrap();
        assert_eq!(mas, 0.5);
    }

    #[test]
    fn header_pins_format_fields_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("attn.json");
        write_record(&path, &sample_record()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"dtype\": \"f32\""));
        assert!(text.contains("\"byte_order\": \"little-endian\""));
        assert!(text.contains("\"layout\": \"layer-major then head then step then key\""));
        assert!(text.contains("\"payload\": \"attn.bin\""));
        let keys = ["\"L\"", "\"H\"", "\"T_steps\"", "\"T_keys\"", "\"roles\"", "\"payload_sha256\""];
        let mut last = 0;
        for k in keys {
            let pos = text.find(k).unwrap_or_else(|| panic!("{k} missing"));
            assert!(pos > last, "{k} out of order");
            last = pos;
        }
    }

    #[test]
    fn tampered_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("attn.json");
        write_record(&path, &sample_record()).unwrap();
        let bin = dir.path().join("attn.bin");
        let mut bytes = std::fs::read(&bin).unwrap();
        bytes[0] ^= 0x40;
        std::fs::write(&bin, &bytes).unwrap();
        assert!(matches!(
            read_record(&path),
            Err(RecordIoError::IntegrityMismatch { .. })
        ));
    }

    #[test]
    fn missing_payload_is_reported_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("attn.json");
        write_record(&path, &sample_record()).unwrap();
        std::fs::remove_file(dir.path().join("attn.bin")).unwrap();
        let err = read_record(&path).unwrap_err();
        assert!(matches!(err, RecordIoError::Malformed(_)));
        assert!(err.to_string().contains("attn.bin"));
    }

    #[test]
    fn foreign_dtype_or_layout_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("attn.json");
        write_record(&path, &sample_record()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();

        std::fs::write(&path, text.replace("\"f32\"", "\"f64\"")).unwrap();
        assert!(matches!(read_record(&path), Err(RecordIoError::Malformed(_))));

        std::fs::write(&path, text.replace("little-endian", "big-endian")).unwrap();
        assert!(matches!(read_record(&path), Err(RecordIoError::Malformed(_))));
    }

    #[test]
    fn unnormalized_rows_fail_on_read_and_write() {
        // Bypass write_record's own validation by crafting the files by hand.
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("attn.json");
        let bad_row = [0.2f32, 0.2, 0.2, 0.2];
        let mut bytes = Vec::new();
        for v in bad_row {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let header = serde_json::json!({
            "L": 1, "H": 1, "T_steps": 1, "T_keys": 4,
            "roles": ["visual", "visual", "text", "generated"],
            "dtype": "f32",
            "byte_order": "little-endian",
            "layout": "layer-major then head then step then key",
            "payload": "attn.bin",
            "payload_sha256": sha256_hex(&bytes),
        });
        std::fs::write(&path, serde_json::to_string(&header).unwrap()).unwrap();
        std::fs::write(dir.path().join("attn.bin"), &bytes).unwrap();
        assert!(matches!(
            read_record(&path),
            Err(RecordIoError::Mas(MasError::RowSumOutOfTolerance { .. }))
        ));

        let record =
            AttentionRecord::new(1, 1, 1, 4, vec![V, V, X, G], vec![0.2, 0.2, 0.2, 0.2])
                .unwrap();
        assert!(matches!(
            write_record(&dir.path().join("other.json"), &record),
            Err(RecordIoError::Mas(MasError::RowSumOutOfTolerance { .. }))
        ));
    }

    #[test]
    fn wrong_payload_length_with_matching_hash_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("attn.json");
        let bytes = vec![0u8; 12]; // 3 floats for a 4-key row
        let header = serde_json::json!({
            "L": 1, "H": 1, "T_steps": 1, "T_keys": 4,
            "roles": ["visual", "visual", "text", "generated"],
            "dtype": "f32",
            "byte_order": "little-endian",
            "layout": "layer-major then head then step then key",
            "payload": "attn.bin",
            "payload_sha256": sha256_hex(&bytes),
        });
        std::fs::write(&path, serde_json::to_string(&header).unwrap()).unwrap();
        std::fs::write(dir.path().join("attn.bin"), &bytes).unwrap();
        let err = read_record(&path).unwrap_err();
        assert!(matches!(err, RecordIoError::Malformed(_)));
        assert!(err.to_string().contains("12 bytes"));
    }

    #[test]
    fn payload_escaping_the_directory_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("attn.json");
        write_record(&path, &sample_record()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace("\"attn.bin\"", "\"../attn.bin\"")).unwrap();
        assert!(matches!(read_record(&path), Err(RecordIoError::Malformed(_))));
    }
}
