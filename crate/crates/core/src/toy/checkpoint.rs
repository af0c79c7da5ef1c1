//! Model checkpoints (JSON shape header + flat little-endian f64 payload)
//! and trajectory files (one JSON object per epoch line).

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::{ToyModel, D_MODEL, N_CLASSES, N_HEADS, N_LAYERS, N_PARAMS, VOCAB};
use super::train::TrajectoryPoint;
use super::ToyError;

const DTYPE: &str = "f64";
const BYTE_ORDER: &str = "little-endian";
const LAYOUT: &str = "embedding, then per-layer wq wk wv wo, then classifier";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointHeader {
    d: usize,
    heads: usize,
    layers: usize,
    vocab: usize,
    n_classes: usize,
    n_params: usize,
    dtype: String,
    byte_order: String,
    layout: String,
    payload: String,
    payload_sha256: String,
}

fn io_error(path: &Path, source: std::io::Error) -> ToyError {
    ToyError::Io { path: path.to_path_buf(), source }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn payload_path(header_path: &Path) -> PathBuf {
    let mut p = header_path.to_path_buf();
    p.set_extension("bin");
    p
}

pub fn save_model(header_path: &Path, model: &ToyModel) -> Result<(), ToyError> {
    let bin_path = payload_path(header_path);
    let mut bytes = Vec::with_capacity(N_PARAMS * 8);
    for &p in model.params() {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    let header = CheckpointHeader {
        d: D_MODEL,
        heads: N_HEADS,
        layers: N_LAYERS,
        vocab: VOCAB,
        n_classes: N_CLASSES,
        n_params: N_PARAMS,
        dtype: DTYPE.into(),
        byte_order: BYTE_ORDER.into(),
        layout: LAYOUT.into(),
        payload: bin_path
            .file_name()
            .expect("checkpoint path has a file name")
            .to_string_lossy()
            .into_owned(),
        payload_sha256: sha256_hex(&bytes),
    };
    std::fs::write(&bin_path, &bytes).map_err(|e| io_error(&bin_path, e))?;
    let mut json = serde_json::to_string_pretty(&header).expect("header always serializes");
    json.push('\n');
    std::fs::write(header_path, json).map_err(|e| io_error(header_path, e))
}

pub fn load_model(header_path: &Path) -> Result<ToyModel, ToyError> {
    let text = std::fs::read_to_string(header_path).map_err(|e| io_error(header_path, e))?;
    let header: CheckpointHeader = serde_json::from_str(&text)
        .map_err(|e| ToyError::MalformedCheckpoint(format!("header does not parse: {e}")))?;

    let expected = (D_MODEL, N_HEADS, N_LAYERS, VOCAB, N_CLASSES, N_PARAMS);
    let got = (header.d, header.heads, header.layers, header.vocab, header.n_classes, header.n_params);
    if got != expected {
        return Err(ToyError::MalformedCheckpoint(format!(
            "shape {got:?} does not match this model family {expected:?}"
        )));
    }
    if header.dtype != DTYPE || header.byte_order != BYTE_ORDER || header.layout != LAYOUT {
        return Err(ToyError::MalformedCheckpoint("dtype/byte-order/layout mismatch".into()));
    }
    let bin_path = header_path
        .parent()
        .unwrap_or_else(|| Path::new(""))
        .join(&header.payload);
    let bytes = std::fs::read(&bin_path).map_err(|e| io_error(&bin_path, e))?;
    if sha256_hex(&bytes) != header.payload_sha256 {
        return Err(ToyError::MalformedCheckpoint("payload hash mismatch".into()));
    }
    if bytes.len() != N_PARAMS * 8 {
        return Err(ToyError::MalformedCheckpoint(format!(
            "payload holds {} bytes, expected {}",
            bytes.len(),
            N_PARAMS * 8
        )));
    }
    let mut params = Vec::with_capacity(N_PARAMS);
    for chunk in bytes.chunks_exact(8) {
        let v = f64::from_le_bytes(chunk.try_into().expect("chunks_exact yields 8 bytes"));
        if !v.is_finite() {
            return Err(ToyError::MalformedCheckpoint("non-finite parameter".into()));
        }
        params.push(v);
    }
    ToyModel::from_params(params)
}

pub fn write_trajectory(path: &Path, trajectory: &[TrajectoryPoint]) -> Result<(), ToyError> {
    let mut out = Vec::new();
    for point in trajectory {
        serde_json::to_writer(&mut out, point).expect("trajectory points always serialize");
        out.push(b'\n');
    }
    std::fs::write(path, out).map_err(|e| io_error(path, e))
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryPoint>, ToyError> {
    let file = std::fs::File::open(path).map_err(|e| io_error(path, e))?;
    let mut points = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_error(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let point: TrajectoryPoint = serde_json::from_str(&line).map_err(|e| {
            ToyError::MalformedCheckpoint(format!("trajectory line {}: {e}", i + 1))
        })?;
        points.push(point);
    }
    Ok(points)
}

/// Writes `value` as pretty JSON with a trailing newline; shared by the demo
/// summary and report outputs.
pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<(), ToyError> {
    let file = std::fs::File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| ToyError::MalformedCheckpoint(format!("serialize: {e}")))?;
    w.write_all(b"\n").map_err(|e| io_error(path, e))?;
    Ok(())
}
