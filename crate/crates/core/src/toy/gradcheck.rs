//! Central-difference verification of the analytic gradients.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{eval_loss_impl, loss_and_grads, ToyModel, N_PARAMS};
use super::train::ToySample;
use super::ToyError;
use crate::mas::MasConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdReport {
    pub max_rel_err: f64,
    /// Coordinates actually compared.
    pub checked: usize,
    /// Coordinates whose two-sided perturbation straddled the hinge kink.
    pub skipped_kink: usize,
    /// Coordinates where both gradients sit below the resolution floor.
    pub skipped_tiny: usize,
}

/// Relative agreement the comparison is calibrated to resolve.
const FD_REL_TARGET: f64 = 1e-4;
/// Headroom over a single rounding quantum of the loss in the difference.
const FD_NOISE_MARGIN: f64 = 4.0;

/// Compares analytic gradients against central differences at `n_coords`
/// uniformly random parameter coordinates (with replacement, seeded).
///
/// A coordinate is skipped when the hinge is active on one perturbed side
/// but not the other (the objective is not differentiable across the kink)
/// or when both gradients sit below the resolution floor. The floor is
/// where f64 runs out: the loss is quantized to about `EPSILON * |loss|`,
/// so the difference quotient carries an error near
/// `EPSILON * |loss| / (2 * eps)`, and a gradient must exceed that by
/// `1 / FD_REL_TARGET` (with margin) before agreement at the target is
/// evidence of anything. Below the floor both values are rounding noise;
/// such draws are counted in `skipped_tiny`, never compared. The relative
/// error is `|analytic - numeric| / max(|analytic|, |numeric|, 1e-12)`.
pub fn finite_diff_check(
    model: &ToyModel,
    batch: &[ToySample],
    config: &MasConfig,
    n_coords: usize,
    eps: f64,
    seed: u64,
) -> Result<FdReport, ToyError> {
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(ToyError::InvalidEpsilon(eps));
    }
    let (_, grads) = loss_and_grads(model, batch, config)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scratch = model.clone();
    let mut report =
        FdReport { max_rel_err: 0.0, checked: 0, skipped_kink: 0, skipped_tiny: 0 };

    for _ in 0..n_coords {
        let i = rng.random_range(0..N_PARAMS);
        let original = scratch.params()[i];

        scratch.params_mut()[i] = original + eps;
        let plus = eval_loss_impl(&scratch, batch, config)?;
        scratch.params_mut()[i] = original - eps;
        let minus = eval_loss_impl(&scratch, batch, config)?;
        scratch.params_mut()[i] = original;

        // With a live penalty, a coordinate whose perturbation crosses the
        // kink has no two-sided derivative; report it instead of comparing.
        if config.lambda != 0.0
            && (plus.mas_mean < config.tau) != (minus.mas_mean < config.tau)
        {
            report.skipped_kink += 1;
            continue;
        }

        let numeric = (plus.total - minus.total) / (2.0 * eps);
        let analytic = grads[i];
        let scale = plus.total.abs().max(minus.total.abs()).max(1.0);
        let quantum = f64::EPSILON * scale / (2.0 * eps);
        let floor = (FD_NOISE_MARGIN * quantum / FD_REL_TARGET).max(1e-12);
        if analytic.abs() < floor && numeric.abs() < floor {
            report.skipped_tiny += 1;
            continue;
        }
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12);
        report.max_rel_err = report.max_rel_err.max(rel);
        report.checked += 1;
    }
    Ok(report)
}
