//! Closed-form parameter counts for the detection probe.
//!
//! The probe is a 1x1 bottleneck projection (c_in -> 512, bias, GroupNorm
//! affine) feeding a shared head: one 3x3 convolution (512 -> 256, bias) and
//! a 1x1 predictor (256 -> 5: four box offsets plus objectness, bias). Only
//! the arithmetic lives here; nothing is trained.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProbeError {
    #[error("input channel count must be positive")]
    ZeroChannels,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub c_in: usize,
    pub bottleneck: usize,
}

impl ProbeSpec {
    /// The standard probe: 512 bottleneck channels.
    pub fn new(c_in: usize) -> Self {
        Self { c_in, bottleneck: 512 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeParams {
    pub bottleneck_params: usize,
    pub head_params: usize,
    pub total: usize,
}

pub fn probe_param_count(spec: &ProbeSpec) -> Result<ProbeParams, ProbeError> {
    if spec.c_in == 0 || spec.bottleneck == 0 {
        return Err(ProbeError::ZeroChannels);
    }
    let b = spec.bottleneck;
    // 1x1 projection weights + bias + GroupNorm scale and shift.
    let bottleneck_params = spec.c_in * b + b + 2 * b;
    // 3x3 conv (b -> 256) + bias, then 1x1 predictor (256 -> 5) + bias.
    let head_params = b * 256 * 9 + 256 + 256 * 5 + 5;
    Ok(ProbeParams { bottleneck_params, head_params, total: bottleneck_params + head_params })
}
