//! Samples, datasets, and the full-batch gradient-descent loop.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{
    eval_loss_impl, loss_and_grads, LossBreakdown, ToyModel, TOKEN_ANSWER, TOKEN_EMPTY,
    TOKEN_OCCUPIED, TOY_GRID_DIM, VISUAL_TOKENS, VOCAB,
};
use super::ToyError;
use crate::case::CaseCode;
use crate::grid::PatchGrid;
use crate::scene::{sample_scene, Scene};
use crate::mas::MasConfig;

/// Count classes start here: class 0 means three objects.
pub const COUNT_CLASS_MIN: u32 = 3;

/// One training example: 64 occupancy tokens, the tokenized prompt, and the
/// answer slot, labeled with the count class.
#[derive(Debug, Clone, PartialEq)]
pub struct ToySample {
    pub tokens: Vec<u16>,
    pub label: u32,
}

/// Stable text token for a prompt word: FNV-1a folded into the vocab range
/// above the three reserved ids.
pub fn text_token(word: &str) -> u16 {
    const OFFSET: u64 = 0xcbf29ce484222325;
    const PRIME: u64 = 0x100000001b3;
    let mut h = OFFSET;
    for &b in word.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(PRIME);
    }
    3 + (h % (VOCAB as u64 - 3)) as u16
}

impl ToySample {
    /// Downscales a scene to the 8x8 occupancy grid (a cell is occupied when
    /// at least one object center lands in it), appends the tokenized prompt
    /// and the answer slot, and labels with the count class.
    pub fn from_scene(scene: &Scene, prompt_text: &str) -> Result<Self, ToyError> {
        let count = scene.count() as u32;
        if count < COUNT_CLASS_MIN {
            return Err(ToyError::BadSample(format!("count {count} below the class range")));
        }
        let label = count - COUNT_CLASS_MIN;

        let cell = scene.grid.image_size() as f64 / TOY_GRID_DIM as f64;
        let mut tokens = vec![TOKEN_EMPTY; VISUAL_TOKENS];
        for obj in &scene.objects {
            let col = ((obj.cx / cell) as usize).min(TOY_GRID_DIM - 1);
            let row = ((obj.cy / cell) as usize).min(TOY_GRID_DIM - 1);
            tokens[row * TOY_GRID_DIM + col] = TOKEN_OCCUPIED;
        }
        tokens.extend(prompt_text.split_whitespace().map(text_token));
        tokens.push(TOKEN_ANSWER);
        Ok(Self { tokens, label })
    }
}

/// Scenes for one case with counts cycling evenly over the class range;
/// sample `i` uses seed `base_seed + i`.
pub fn make_counting_dataset(
    case: CaseCode,
    n: usize,
    grid: &PatchGrid,
    base_seed: u64,
    prompt_text: &str,
) -> Result<Vec<ToySample>, ToyError> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let count = COUNT_CLASS_MIN + (i % 10) as u32;
        let scene = sample_scene(case, count, grid, base_seed.wrapping_add(i as u64))?;
        out.push(ToySample::from_scene(&scene, prompt_text)?);
    }
    Ok(out)
}

/// Loss surface at one point, no gradients.
pub fn eval_loss(
    model: &ToyModel,
    batch: &[ToySample],
    config: &MasConfig,
) -> Result<LossBreakdown, ToyError> {
    eval_loss_impl(model, batch, config)
}

/// One trajectory row per epoch; epoch 0 is the untouched initialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub epoch: u32,
    pub ce: f64,
    pub mas_mean: f64,
    pub l_mas: f64,
    pub l_total: f64,
}

impl TrajectoryPoint {
    fn from_breakdown(epoch: u32, bd: LossBreakdown) -> Self {
        Self { epoch, ce: bd.ce, mas_mean: bd.mas_mean, l_mas: bd.l_mas, l_total: bd.total }
    }
}

/// Full-batch gradient descent with a fixed step. Deterministic given the
/// model's starting parameters; a non-finite loss aborts with the epoch it
/// appeared in. Returns `epochs + 1` trajectory points, the first being the
/// starting state.
pub fn train(
    model: &mut ToyModel,
    dataset: &[ToySample],
    config: &MasConfig,
    epochs: u32,
    lr: f64,
) -> Result<Vec<TrajectoryPoint>, ToyError> {
    let mut trajectory = Vec::with_capacity(epochs as usize + 1);
    for epoch in 0..=epochs {
        let (bd, grads) = loss_and_grads(model, dataset, config)?;
        if !bd.total.is_finite() {
            return Err(ToyError::Diverged { epoch, loss: bd.total });
        }
        trajectory.push(TrajectoryPoint::from_breakdown(epoch, bd));
        if epoch == epochs {
            break;
        }
        for (p, g) in model.params_mut().iter_mut().zip(&grads) {
            *p -= lr * g;
        }
    }
    Ok(trajectory)
}

/// Pushes answer-step attention toward text keys: a few embedding
/// coordinates (one per head) are boosted on text and answer tokens, and the
/// matching query/key diagonals are raised, so text keys win the dot
/// products. Used to exercise the hinge-active regime in tests and demos.
#[doc(hidden)]
pub fn text_sink_model(seed: u64, text_ids: &[u16]) -> ToyModel {
    use super::model::{embed_index, wk_index, wq_index, HEAD_DIM, N_HEADS, N_LAYERS};
    let mut model = ToyModel::random_init(seed);
    let params = model.params_mut();
    for h in 0..N_HEADS {
        let c = h * HEAD_DIM;
        for &tok in text_ids {
            params[embed_index(tok as usize, c)] += 2.0;
        }
        params[embed_index(TOKEN_ANSWER as usize, c)] += 2.0;
        for l in 0..N_LAYERS {
            params[wq_index(l, c, c)] += 2.0;
            params[wk_index(l, c, c)] += 2.0;
        }
    }
    model
}

/// Deterministic scene-free batch for gradient checks: random occupancy at a
/// given count plus a fixed short prompt.
#[doc(hidden)]
pub fn synthetic_batch(n: usize, seed: u64, text_ids: &[u16]) -> Vec<ToySample> {
    use rand::seq::index::sample as index_sample;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let count = 3 + (i % 10);
            let mut tokens = vec![TOKEN_EMPTY; VISUAL_TOKENS];
            for idx in index_sample(&mut rng, VISUAL_TOKENS, count) {
                tokens[idx] = TOKEN_OCCUPIED;
            }
            tokens.extend_from_slice(text_ids);
            tokens.push(TOKEN_ANSWER);
            ToySample { tokens, label: (count - 3) as u32 }
        })
        .collect()
}
