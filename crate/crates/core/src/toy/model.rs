//! The model itself: embeddings, multi-head attention with a residual
//! stream, a count classifier at the answer position, and hand-written
//! analytic gradients for the combined CE + MAS objective.
//!
//! Sequences are laid out [64 visual tokens | text tokens | answer token].
//! Prompt positions attend bidirectionally over the prompt; only the answer
//! position sees the whole sequence, itself included. There are no positional
//! embeddings and no biases, which keeps the parameter set to the embedding
//! table, four projection matrices per layer, and the classifier.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::train::ToySample;
use super::ToyError;
use crate::mas::{AttentionRecord, DenominatorMode, MasConfig, TokenRole};

pub const D_MODEL: usize = 32;
pub const N_HEADS: usize = 4;
pub const HEAD_DIM: usize = D_MODEL / N_HEADS;
pub const N_LAYERS: usize = 2;
pub const VOCAB: usize = 64;
pub const N_CLASSES: usize = 10;

/// Scenes are downscaled to an 8x8 occupancy grid; one visual token per cell.
pub const TOY_GRID_DIM: usize = 8;
pub const VISUAL_TOKENS: usize = TOY_GRID_DIM * TOY_GRID_DIM;

pub const TOKEN_EMPTY: u16 = 0;
pub const TOKEN_OCCUPIED: u16 = 1;
pub const TOKEN_ANSWER: u16 = 2;

const EMBED_LEN: usize = VOCAB * D_MODEL;
const MAT_LEN: usize = D_MODEL * D_MODEL;
const LAYER_LEN: usize = 4 * MAT_LEN;
const CLS_OFF: usize = EMBED_LEN + N_LAYERS * LAYER_LEN;
pub const N_PARAMS: usize = CLS_OFF + D_MODEL * N_CLASSES;

pub fn embed_index(token: usize, dim: usize) -> usize {
    debug_assert!(token < VOCAB && dim < D_MODEL);
    token * D_MODEL + dim
}

fn layer_base(layer: usize) -> usize {
    debug_assert!(layer < N_LAYERS);
    EMBED_LEN + layer * LAYER_LEN
}

pub fn wq_index(layer: usize, row: usize, col: usize) -> usize {
    layer_base(layer) + row * D_MODEL + col
}

pub fn wk_index(layer: usize, row: usize, col: usize) -> usize {
    layer_base(layer) + MAT_LEN + row * D_MODEL + col
}

fn wv_index(layer: usize, row: usize, col: usize) -> usize {
    layer_base(layer) + 2 * MAT_LEN + row * D_MODEL + col
}

fn wo_index(layer: usize, row: usize, col: usize) -> usize {
    layer_base(layer) + 3 * MAT_LEN + row * D_MODEL + col
}

pub fn w_cls_index(dim: usize, class: usize) -> usize {
    debug_assert!(dim < D_MODEL && class < N_CLASSES);
    CLS_OFF + dim * N_CLASSES + class
}

/// All parameters in one flat vector so gradient descent, checkpointing, and
/// finite-difference probing address coordinates uniformly. Layout: embedding
/// table, then per layer the query/key/value/output projections, then the
/// classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    params: Vec<f64>,
}

impl ToyModel {
    pub fn zeros() -> Self {
        Self { params: vec![0.0; N_PARAMS] }
    }

    /// Uniform init in (-0.1, 0.1); small enough that attention starts near
    /// uniform, large enough that training moves.
    pub fn random_init(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = (0..N_PARAMS).map(|_| rng.random_range(-0.1..0.1)).collect();
        Self { params }
    }

    pub fn from_params(params: Vec<f64>) -> Result<Self, ToyError> {
        if params.len() != N_PARAMS {
            return Err(ToyError::Config(format!(
                "{} parameters supplied, model has {N_PARAMS}",
                params.len()
            )));
        }
        Ok(Self { params })
    }

    pub fn n_params(&self) -> usize {
        N_PARAMS
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn embed_row(&self, token: u16) -> &[f64] {
        let off = embed_index(token as usize, 0);
        &self.params[off..off + D_MODEL]
    }

    fn mat(&self, off: usize) -> &[f64] {
        &self.params[off..off + MAT_LEN]
    }

    fn wq(&self, layer: usize) -> &[f64] {
        self.mat(wq_index(layer, 0, 0))
    }

    fn wk(&self, layer: usize) -> &[f64] {
        self.mat(wk_index(layer, 0, 0))
    }

    fn wv(&self, layer: usize) -> &[f64] {
        self.mat(wv_index(layer, 0, 0))
    }

    fn wo(&self, layer: usize) -> &[f64] {
        self.mat(wo_index(layer, 0, 0))
    }

    fn w_cls(&self) -> &[f64] {
        &self.params[CLS_OFF..CLS_OFF + D_MODEL * N_CLASSES]
    }
}

/// `a [m x k] @ b [k x n]`, all row-major.
fn mm(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += av * brow[j];
            }
        }
    }
    out
}

fn validate_tokens(tokens: &[u16]) -> Result<(usize, usize), ToyError> {
    let t = tokens.len();
    if t < VISUAL_TOKENS + 1 {
        return Err(ToyError::BadSample(format!(
            "{t} tokens; need {VISUAL_TOKENS} visual cells plus an answer slot"
        )));
    }
    for (i, &tok) in tokens.iter().enumerate() {
        if (tok as usize) >= VOCAB {
            return Err(ToyError::BadSample(format!("token {tok} at position {i} exceeds vocab")));
        }
        if i < VISUAL_TOKENS && tok != TOKEN_EMPTY && tok != TOKEN_OCCUPIED {
            return Err(ToyError::BadSample(format!(
                "visual position {i} holds token {tok}, not an occupancy bit"
            )));
        }
    }
    if tokens[t - 1] != TOKEN_ANSWER {
        return Err(ToyError::BadSample("sequence must end with the answer token".into()));
    }
    Ok((t, t - 1 - VISUAL_TOKENS))
}

/// Keys a query position may attend: prompt positions see the prompt,
/// the final answer position sees everything, itself included.
fn key_limit(q: usize, t: usize) -> usize {
    if q == t - 1 {
        t
    } else {
        t - 1
    }
}

struct LayerCache {
    x_in: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// Head-major [H, T, T]; masked entries are exact zeros.
    attn: Vec<f64>,
    av: Vec<f64>,
}

struct FullCache {
    t: usize,
    layers: Vec<LayerCache>,
    x_final: Vec<f64>,
    logits: Vec<f64>,
    probs: Vec<f64>,
    label: usize,
}

fn forward_sample(model: &ToyModel, tokens: &[u16]) -> Result<FullCache, ToyError> {
    let (t, _n_text) = validate_tokens(tokens)?;
    let scale = 1.0 / (HEAD_DIM as f64).sqrt();

    let mut x = vec![0.0; t * D_MODEL];
    for (pos, &tok) in tokens.iter().enumerate() {
        x[pos * D_MODEL..(pos + 1) * D_MODEL].copy_from_slice(model.embed_row(tok));
    }

    let mut layers = Vec::with_capacity(N_LAYERS);
    for l in 0..N_LAYERS {
        let q = mm(&x, model.wq(l), t, D_MODEL, D_MODEL);
        let k = mm(&x, model.wk(l), t, D_MODEL, D_MODEL);
        let v = mm(&x, model.wv(l), t, D_MODEL, D_MODEL);
        let mut attn = vec![0.0; N_HEADS * t * t];
        let mut av = vec![0.0; t * D_MODEL];
        let mut scores = vec![0.0; t];
        for h in 0..N_HEADS {
            let off = h * HEAD_DIM;
            for qi in 0..t {
                let k_end = key_limit(qi, t);
                let mut max_s = f64::NEG_INFINITY;
                for (ki, slot) in scores[..k_end].iter_mut().enumerate() {
                    let mut s = 0.0;
                    for c in 0..HEAD_DIM {
                        s += q[qi * D_MODEL + off + c] * k[ki * D_MODEL + off + c];
                    }
                    *slot = s * scale;
                    max_s = max_s.max(*slot);
                }
                let mut z = 0.0;
                for slot in scores[..k_end].iter_mut() {
                    *slot = (*slot - max_s).exp();
                    z += *slot;
                }
                let arow = &mut attn[(h * t + qi) * t..(h * t + qi + 1) * t];
                for (ki, &e) in scores[..k_end].iter().enumerate() {
                    arow[ki] = e / z;
                }
                for c in 0..HEAD_DIM {
                    let mut acc = 0.0;
                    for (ki, &a) in arow[..k_end].iter().enumerate() {
                        acc += a * v[ki * D_MODEL + off + c];
                    }
                    av[qi * D_MODEL + off + c] = acc;
                }
            }
        }
        let o = mm(&av, model.wo(l), t, D_MODEL, D_MODEL);
        let mut x_out = x.clone();
        for (xo, oo) in x_out.iter_mut().zip(&o) {
            *xo += oo;
        }
        layers.push(LayerCache { x_in: x, q, k, v, attn, av });
        x = x_out;
    }

    let ans = &x[(t - 1) * D_MODEL..t * D_MODEL];
    let mut logits = vec![0.0; N_CLASSES];
    let w_cls = model.w_cls();
    for (d, &xv) in ans.iter().enumerate() {
        for (c, logit) in logits.iter_mut().enumerate() {
            *logit += xv * w_cls[d * N_CLASSES + c];
        }
    }

    Ok(FullCache { t, layers, x_final: x, logits, probs: Vec::new(), label: 0 })
}

/// Visual-mass numerator and mode-dependent denominator of the answer row,
/// summed over heads, for one layer.
fn share_parts(cache: &FullCache, layer: usize, mode: DenominatorMode) -> (f64, f64) {
    let t = cache.t;
    let den_limit = match mode {
        DenominatorMode::VisualText => t - 1, // the answer key itself is generated
        DenominatorMode::AllKeys => t,
    };
    let attn = &cache.layers[layer].attn;
    let mut num = 0.0;
    let mut den = 0.0;
    for h in 0..N_HEADS {
        let row = &attn[(h * t + t - 1) * t..(h * t + t) * t];
        for (j, &a) in row.iter().enumerate() {
            if j < VISUAL_TOKENS {
                num += a;
            }
            if j < den_limit {
                den += a;
            }
        }
    }
    (num, den)
}

fn resolve_layer_set(config: &MasConfig) -> Result<Vec<usize>, ToyError> {
    let layers = match &config.layers {
        Some(list) => list.clone(),
        None => (0..N_LAYERS).collect(),
    };
    if layers.is_empty() {
        return Err(ToyError::Config("empty MAS layer set".into()));
    }
    for &l in &layers {
        if l >= N_LAYERS {
            return Err(ToyError::Config(format!("MAS layer {l} out of range (model has {N_LAYERS})")));
        }
    }
    Ok(layers)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub ce: f64,
    pub mas_mean: f64,
    pub l_mas: f64,
}

fn forward_batch(
    model: &ToyModel,
    batch: &[ToySample],
    config: &MasConfig,
) -> Result<(LossBreakdown, Vec<FullCache>, Vec<usize>), ToyError> {
    if batch.is_empty() {
        return Err(ToyError::EmptyBatch);
    }
    let layer_set = resolve_layer_set(config)?;

    let mut caches = Vec::with_capacity(batch.len());
    let mut ce_sum = 0.0;
    let mut share_sum = 0.0;
    for sample in batch {
        if (sample.label as usize) >= N_CLASSES {
            return Err(ToyError::BadSample(format!(
                "label {} outside the {N_CLASSES} count classes",
                sample.label
            )));
        }
        let mut cache = forward_sample(model, &sample.tokens)?;
        cache.label = sample.label as usize;

        let max = cache.logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + cache.logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
        ce_sum += lse - cache.logits[cache.label];
        cache.probs = cache.logits.iter().map(|&l| (l - lse).exp()).collect();

        for &l in &layer_set {
            let (num, den) = share_parts(&cache, l, config.denominator);
            share_sum += num / den;
        }
        caches.push(cache);
    }

    let ce = ce_sum / batch.len() as f64;
    let mas_mean = share_sum / (batch.len() * layer_set.len()) as f64;
    let l_mas = crate::mas::hinge_loss(mas_mean, config.tau);
    let breakdown = LossBreakdown { total: ce + config.lambda * l_mas, ce, mas_mean, l_mas };
    Ok((breakdown, caches, layer_set))
}

pub(super) fn eval_loss_impl(
    model: &ToyModel,
    batch: &[ToySample],
    config: &MasConfig,
) -> Result<LossBreakdown, ToyError> {
    forward_batch(model, batch, config).map(|(b, _, _)| b)
}

/// Logits plus the full attention record for one sample, roles attached, so
/// the record pipeline can consume the toy model's output directly.
pub fn forward(
    model: &ToyModel,
    sample: &ToySample,
) -> Result<(Vec<f64>, AttentionRecord), ToyError> {
    let cache = forward_sample(model, &sample.tokens)?;
    let t = cache.t;
    let mut roles = vec![TokenRole::Visual; VISUAL_TOKENS];
    roles.resize(t - 1, TokenRole::Text);
    roles.push(TokenRole::Generated);
    let mut weights = Vec::with_capacity(N_LAYERS * N_HEADS * t * t);
    for layer in &cache.layers {
        weights.extend_from_slice(&layer.attn);
    }
    let record = AttentionRecord::new(N_LAYERS, N_HEADS, t, t, roles, weights)
        .expect("forward caches always have record shape");
    Ok((cache.logits, record))
}

/// Mean cross-entropy plus the hinged MAS penalty, with analytic gradients
/// for every parameter. The MAS path backpropagates through the answer row's
/// softmax into the query and key projections; the hinge subgradient at the
/// kink is 0, so a batch sitting exactly at tau contributes nothing.
pub fn loss_and_grads(
    model: &ToyModel,
    batch: &[ToySample],
    config: &MasConfig,
) -> Result<(LossBreakdown, Vec<f64>), ToyError> {
    let (breakdown, caches, layer_set) = forward_batch(model, batch, config)?;
    let hinge_active = breakdown.mas_mean < config.tau;
    let share_coef = -config.lambda / (batch.len() * layer_set.len()) as f64;
    let scale = 1.0 / (HEAD_DIM as f64).sqrt();
    let b_inv = 1.0 / batch.len() as f64;

    let mut grads = vec![0.0; N_PARAMS];
    for (sample, cache) in batch.iter().zip(&caches) {
        let t = cache.t;

        // Classifier and the answer position's final activation.
        let mut dx = vec![0.0; t * D_MODEL];
        let w_cls = model.w_cls();
        for c in 0..N_CLASSES {
            let dl = (cache.probs[c] - ((c == cache.label) as u8 as f64)) * b_inv;
            for d in 0..D_MODEL {
                grads[w_cls_index(d, c)] += cache.x_final[(t - 1) * D_MODEL + d] * dl;
                dx[(t - 1) * D_MODEL + d] += w_cls[d * N_CLASSES + c] * dl;
            }
        }

        for l in (0..N_LAYERS).rev() {
            let lc = &cache.layers[l];
            // O = AV @ Wo; the residual keeps dx flowing to the input too.
            let wo = model.wo(l);
            for r in 0..D_MODEL {
                for qi in 0..t {
                    let av = lc.av[qi * D_MODEL + r];
                    if av != 0.0 {
                        for c in 0..D_MODEL {
                            grads[wo_index(l, r, c)] += av * dx[qi * D_MODEL + c];
                        }
                    }
                }
            }
            let mut dav = vec![0.0; t * D_MODEL];
            for qi in 0..t {
                for r in 0..D_MODEL {
                    let mut acc = 0.0;
                    for c in 0..D_MODEL {
                        acc += dx[qi * D_MODEL + c] * wo[r * D_MODEL + c];
                    }
                    dav[qi * D_MODEL + r] = acc;
                }
            }

            let mas_here = hinge_active && layer_set.contains(&l);
            let (num, den) = if mas_here {
                share_parts(cache, l, config.denominator)
            } else {
                (0.0, 0.0)
            };
            let den_limit = match config.denominator {
                DenominatorMode::VisualText => t - 1,
                DenominatorMode::AllKeys => t,
            };

            let mut dq = vec![0.0; t * D_MODEL];
            let mut dk = vec![0.0; t * D_MODEL];
            let mut dv = vec![0.0; t * D_MODEL];
            let mut da = vec![0.0; t];
            for h in 0..N_HEADS {
                let off = h * HEAD_DIM;
                for qi in 0..t {
                    let k_end = key_limit(qi, t);
                    let arow = &lc.attn[(h * t + qi) * t..(h * t + qi + 1) * t];

                    // dA from the value path...
                    for (ki, slot) in da[..k_end].iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for c in 0..HEAD_DIM {
                            acc += dav[qi * D_MODEL + off + c] * lc.v[ki * D_MODEL + off + c];
                        }
                        *slot = acc;
                    }
                    // ...plus the MAS ratio at the answer row.
                    if mas_here && qi == t - 1 {
                        let den_sq = den * den;
                        for (ki, slot) in da[..k_end].iter_mut().enumerate() {
                            let in_num = (ki < VISUAL_TOKENS) as u8 as f64;
                            let in_den = (ki < den_limit) as u8 as f64;
                            *slot += share_coef * (in_num * den - num * in_den) / den_sq;
                        }
                    }

                    for c in 0..HEAD_DIM {
                        let g = dav[qi * D_MODEL + off + c];
                        if g != 0.0 {
                            for (ki, &a) in arow[..k_end].iter().enumerate() {
                                dv[ki * D_MODEL + off + c] += a * g;
                            }
                        }
                    }

                    // Softmax backward, then the scaled score products.
                    let dot: f64 =
                        da[..k_end].iter().zip(&arow[..k_end]).map(|(d, a)| d * a).sum();
                    for ki in 0..k_end {
                        let ds = arow[ki] * (da[ki] - dot) * scale;
                        if ds != 0.0 {
                            for c in 0..HEAD_DIM {
                                dq[qi * D_MODEL + off + c] += ds * lc.k[ki * D_MODEL + off + c];
                                dk[ki * D_MODEL + off + c] += ds * lc.q[qi * D_MODEL + off + c];
                            }
                        }
                    }
                }
            }

            // Projection weights and the gradient into the layer input.
            let mut dx_in = dx; // residual path
            let wq = model.wq(l);
            let wk = model.wk(l);
            let wv = model.wv(l);
            for qi in 0..t {
                for r in 0..D_MODEL {
                    let xv = lc.x_in[qi * D_MODEL + r];
                    let mut acc = 0.0;
                    for c in 0..D_MODEL {
                        let (gq, gk, gv) = (
                            dq[qi * D_MODEL + c],
                            dk[qi * D_MODEL + c],
                            dv[qi * D_MODEL + c],
                        );
                        grads[wq_index(l, r, c)] += xv * gq;
                        grads[wk_index(l, r, c)] += xv * gk;
                        grads[wv_index(l, r, c)] += xv * gv;
                        acc += gq * wq[r * D_MODEL + c]
                            + gk * wk[r * D_MODEL + c]
                            + gv * wv[r * D_MODEL + c];
                    }
                    dx_in[qi * D_MODEL + r] += acc;
                }
            }
            dx = dx_in;
        }

        for (pos, &tok) in sample.tokens.iter().enumerate() {
            for d in 0..D_MODEL {
                grads[embed_index(tok as usize, d)] += dx[pos * D_MODEL + d];
            }
        }
    }

    Ok((breakdown, grads))
}
