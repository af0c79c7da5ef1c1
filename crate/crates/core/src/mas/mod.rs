//! Modality attention share (MAS): how much of a generated token's attention
//! lands on visual keys rather than text keys.
//!
//! Per layer, MAS averages over target steps the ratio of head-summed
//! attention into visual keys to head-summed attention into visual-plus-text
//! keys. Keys that are themselves generated tokens stay out of numerator and
//! denominator unless [`DenominatorMode::AllKeys`] is asked for explicitly.

mod record_io;

pub use record_io::{read_record, write_record, RecordIoError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ROW_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum MasError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("no generated positions to average over")]
    EmptyTarget,
    #[error("zero denominator at layer {layer}, step {step}")]
    ZeroDenominator { layer: usize, step: usize },
    #[error("layer {layer} out of range for a {layers}-layer record")]
    LayerOutOfRange { layer: usize, layers: usize },
    #[error("attention row (layer {layer}, head {head}, step {step}) sums to {sum}, not 1")]
    RowSumOutOfTolerance { layer: usize, head: usize, step: usize, sum: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenRole {
    Visual,
    Text,
    Generated,
}

/// Which keys make up the share's denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenominatorMode {
    /// Visual plus text keys; generated keys are excluded (the default).
    #[default]
    VisualText,
    /// Every key, generated ones included.
    AllKeys,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasConfig {
    pub tau: f64,
    pub lambda: f64,
    /// Layers to average; `None` means all layers.
    pub layers: Option<Vec<usize>>,
    pub denominator: DenominatorMode,
}

impl Default for MasConfig {
    fn default() -> Self {
        Self { tau: 0.4, lambda: 0.1, layers: None, denominator: DenominatorMode::default() }
    }
}

/// Attention weights for one recorded forward pass, stored dense in f64.
///
/// Layout is layer-major, then head, then step, then key. The record may
/// carry rows for only the last `steps` positions of the sequence; `roles`
/// labels all `keys` positions, and step `t` corresponds to position
/// `keys - steps + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionRecord {
    layers: usize,
    heads: usize,
    steps: usize,
    keys: usize,
    roles: Vec<TokenRole>,
    weights: Vec<f64>,
}

impl AttentionRecord {
    pub fn new(
        layers: usize,
        heads: usize,
        steps: usize,
        keys: usize,
        roles: Vec<TokenRole>,
        weights: Vec<f64>,
    ) -> Result<Self, MasError> {
        if layers == 0 || heads == 0 || steps == 0 || keys == 0 {
            return Err(MasError::ShapeMismatch(format!(
                "all dimensions must be positive, got {layers}x{heads}x{steps}x{keys}"
            )));
        }
        if steps > keys {
            return Err(MasError::ShapeMismatch(format!(
                "{steps} steps cannot map onto {keys} positions"
            )));
        }
        if roles.len() != keys {
            return Err(MasError::ShapeMismatch(format!(
                "{} roles for {keys} keys",
                roles.len()
            )));
        }
        let expected = layers * heads * steps * keys;
        if weights.len() != expected {
            return Err(MasError::ShapeMismatch(format!(
                "{} weights for shape {layers}x{heads}x{steps}x{keys} (need {expected})",
                weights.len()
            )));
        }
        Ok(Self { layers, heads, steps, keys, roles, weights })
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn keys(&self) -> usize {
        self.keys
    }

    pub fn roles(&self) -> &[TokenRole] {
        &self.roles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, layer: usize, head: usize, step: usize, key: usize) -> f64 {
        debug_assert!(layer < self.layers && head < self.heads);
        debug_assert!(step < self.steps && key < self.keys);
        self.weights[((layer * self.heads + head) * self.steps + step) * self.keys + key]
    }

    fn row(&self, layer: usize, head: usize, step: usize) -> &[f64] {
        let start = ((layer * self.heads + head) * self.steps + step) * self.keys;
        &self.weights[start..start + self.keys]
    }

    /// Sequence position a step row attends from.
    pub fn step_position(&self, step: usize) -> usize {
        self.keys - self.steps + step
    }

    /// Checks every attention row sums to 1 within [`ROW_SUM_TOLERANCE`].
    pub fn validate_row_sums(&self) -> Result<(), MasError> {
        for layer in 0..self.layers {
            for head in 0..self.heads {
                for step in 0..self.steps {
                    let sum: f64 = self.row(layer, head, step).iter().sum();
                    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                        return Err(MasError::RowSumOutOfTolerance { layer, head, step, sum });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Steps whose sequence position carries the generated role, in order.
pub fn select_target_steps(record: &AttentionRecord) -> Vec<usize> {
    (0..record.steps)
        .filter(|&t| record.roles[record.step_position(t)] == TokenRole::Generated)
        .collect()
}

/// Share of one step's head-summed attention that lands on visual keys,
/// over the denominator the mode selects. Invariant to positive rescaling of
/// the step's rows, so it works on unnormalized scores too.
pub fn step_visual_share(
    record: &AttentionRecord,
    layer: usize,
    step: usize,
    mode: DenominatorMode,
) -> Result<f64, MasError> {
    if layer >= record.layers {
        return Err(MasError::LayerOutOfRange { layer, layers: record.layers });
    }
    if step >= record.steps {
        return Err(MasError::ShapeMismatch(format!(
            "step {step} out of range for {} steps",
            record.steps
        )));
    }
    let mut visual = 0.0;
    let mut denom = 0.0;
    for head in 0..record.heads {
        for (key, &w) in record.row(layer, head, step).iter().enumerate() {
            match record.roles[key] {
                TokenRole::Visual => {
                    visual += w;
                    denom += w;
                }
                TokenRole::Text => denom += w,
                TokenRole::Generated => {
                    if mode == DenominatorMode::AllKeys {
                        denom += w;
                    }
                }
            }
        }
    }
    if denom == 0.0 {
        return Err(MasError::ZeroDenominator { layer, step });
    }
    Ok(visual / denom)
}

/// MAS for one layer: the mean visual share over all generated-role steps.
pub fn mas_layer(
    record: &AttentionRecord,
    layer: usize,
    mode: DenominatorMode,
) -> Result<f64, MasError> {
    if layer >= record.layers {
        return Err(MasError::LayerOutOfRange { layer, layers: record.layers });
    }
    let targets = select_target_steps(record);
    if targets.is_empty() {
        return Err(MasError::EmptyTarget);
    }
    let mut total = 0.0;
    for &t in &targets {
        total += step_visual_share(record, layer, t, mode)?;
    }
    Ok(total / targets.len() as f64)
}

/// Mean of [`mas_layer`] over the configured layer set.
pub fn mas_mean(record: &AttentionRecord, config: &MasConfig) -> Result<f64, MasError> {
    let all: Vec<usize>;
    let layers: &[usize] = match &config.layers {
        Some(list) => list,
        None => {
            all = (0..record.layers).collect();
            &all
        }
    };
    if layers.is_empty() {
        return Err(MasError::ShapeMismatch("empty layer set".into()));
    }
    let mut total = 0.0;
    for &l in layers {
        total += mas_layer(record, l, config.denominator)?;
    }
    Ok(total / layers.len() as f64)
}

/// Hinge penalty `max(0, tau - mas)`; flat at zero once the share clears the
/// threshold.
pub fn hinge_loss(mas: f64, tau: f64) -> f64 {
    (tau - mas).max(0.0)
}

/// Combined objective `ce + lambda * hinge(mas, tau)`.
pub fn total_loss(ce: f64, mas: f64, config: &MasConfig) -> f64 {
    ce + config.lambda * hinge_loss(mas, config.tau)
}
