//! Row-major run-length encoding for binary masks.
//!
//! Runs alternate zero/one and the first run always counts zeros, so a mask
//! that starts with a set pixel encodes as `"0 ..."`. Every run is written,
//! trailing zeros included: runs must sum exactly to `width * height`.

use super::RasterError;

/// Encodes row-major bits. Examples: all-zero 4x4 -> `"16"`, all-one 4x4 ->
/// `"0 16"`, `[0,1,1,0]` -> `"1 2 1"`.
pub fn rle_encode(bits: &[bool]) -> String {
    let mut runs: Vec<usize> = Vec::new();
    let mut current = false; // zeros first
    let mut len = 0usize;
    for &b in bits {
        if b == current {
            len += 1;
        } else {
            runs.push(len);
            current = b;
            len = 1;
        }
    }
    runs.push(len);
    runs.iter()
        .map(|r| r.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Decodes into `width * height` row-major bits.
pub fn rle_decode(encoded: &str, width: u32, height: u32) -> Result<Vec<bool>, RasterError> {
    let expected = (width as usize) * (height as usize);
    let malformed = |detail: String| RasterError::MalformedRle { detail };
    let mut bits = Vec::with_capacity(expected);
    let mut value = false;
    for token in encoded.split_whitespace() {
        let run: usize = token
            .parse()
            .map_err(|_| malformed(format!("run {token:?} is not a number")))?;
        if bits.len() + run > expected {
            return Err(malformed(format!(
                "runs exceed {expected} pixels for a {width}x{height} mask"
            )));
        }
        bits.resize(bits.len() + run, value);
        value = !value;
    }
    if bits.len() != expected {
        return Err(malformed(format!(
            "runs sum to {} but a {width}x{height} mask has {expected} pixels",
            bits.len()
        )));
    }
    Ok(bits)
}
