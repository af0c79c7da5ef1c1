//! Deterministic scene sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::placement::{base_diameter, placement_centers, PlacementError};
use super::{ObjectSpec, Scene, Shape, PALETTE, SHAPES};
use crate::case::CaseCode;
use crate::grid::PatchGrid;

pub const COUNT_MIN: u32 = 3;
pub const COUNT_MAX: u32 = 12;

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("object count {0} outside [{COUNT_MIN}, {COUNT_MAX}]")]
    CountOutOfRange(u32),
    #[error(transparent)]
    Placement(#[from] PlacementError),
}

/// Samples a scene with `n` objects for `case`. Pure in `(case, n, grid, seed)`:
/// the same arguments always produce the identical scene, byte for byte.
///
/// Shape/color pairs are drawn round-robin from a randomly rotated enumeration
/// of all 24 combinations, so no pair repeats before every pair has appeared
/// (the dilated prefixes 5-8 place circles only and round-robin colors alone).
pub fn sample_scene(
    case: CaseCode,
    n: u32,
    grid: &PatchGrid,
    seed: u64,
) -> Result<Scene, SceneError> {
    if !(COUNT_MIN..=COUNT_MAX).contains(&n) {
        return Err(SceneError::CountOutOfRange(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pair_offset = rng.random_range(0..SHAPES.len() * PALETTE.len());
    let centers = placement_centers(case, grid, n, &mut rng)?;

    let base = base_diameter(grid);
    let fixed = match case.dilation() {
        Some(mult) => mult * grid.patch_size() as f64,
        None => base,
    };
    let circles_only = case.dilation().is_some();

    let objects = centers
        .into_iter()
        .enumerate()
        .map(|(k, (cx, cy))| {
            let diameter = if case.varies_size() {
                rng.random_range(0.2 * base..=base)
            } else {
                fixed
            };
            let (shape, color) = if circles_only {
                (Shape::Circle, ((pair_offset + k) % PALETTE.len()) as u8)
            } else {
                let q = (pair_offset + k) % (SHAPES.len() * PALETTE.len());
                (SHAPES[q % SHAPES.len()], ((q / SHAPES.len()) % PALETTE.len()) as u8)
            };
            ObjectSpec { shape, color, cx, cy, diameter }
        })
        .collect();

    Ok(Scene { case, grid: *grid, seed, objects })
}
