//! Patch geometry of the vision encoder: a square image cut into a square grid
//! of fixed-size patches. Placement rules, attention grids, and the downscaled
//! toy-model view all index into this grid.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("patch size {patch} does not divide image size {image}")]
    NotDivisible { image: u32, patch: u32 },
    #[error("grid of {0}x{0} patches is below the 8x8 minimum")]
    TooCoarse(u32),
}

/// Square image partitioned into `dim() x dim()` patches of `patch_size()` px.
///
/// Invariants: `patch_size` divides `image_size` and the grid is at least 8x8.
/// Both are enforced at construction, so a held `PatchGrid` is always valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchGrid {
    image_size: u32,
    patch_size: u32,
}

impl PatchGrid {
    pub fn new(image_size: u32, patch_size: u32) -> Result<Self, GridError> {
        if patch_size == 0 || image_size % patch_size != 0 {
            return Err(GridError::NotDivisible { image: image_size, patch: patch_size });
        }
        let dim = image_size / patch_size;
        if dim < 8 {
            return Err(GridError::TooCoarse(dim));
        }
        Ok(Self { image_size, patch_size })
    }

    pub fn image_size(&self) -> u32 {
        self.image_size
    }

    pub fn patch_size(&self) -> u32 {
        self.patch_size
    }

    /// Patches per side.
    pub fn dim(&self) -> u32 {
        self.image_size / self.patch_size
    }

    /// Total patch count (`dim` squared).
    pub fn cells(&self) -> usize {
        (self.dim() as usize) * (self.dim() as usize)
    }
}

impl Default for PatchGrid {
    /// 448 px image over 28 px patches, i.e. the stock 16x16 layout.
    fn default() -> Self {
        Self { image_size: 448, patch_size: 28 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_16_by_16() {
        let g = PatchGrid::default();
        assert_eq!(g.image_size(), 448);
        assert_eq!(g.patch_size(), 28);
        assert_eq!(g.dim(), 16);
        assert_eq!(g.cells(), 256);
    }

    #[test]
    fn rejects_non_divisible_patch() {
        assert_eq!(
            PatchGrid::new(448, 30),
            Err(GridError::NotDivisible { image: 448, patch: 30 })
        );
        assert_eq!(
            PatchGrid::new(448, 0),
            Err(GridError::NotDivisible { image: 448, patch: 0 })
        );
    }

    #[test]
    fn rejects_grids_coarser_than_8() {
        assert_eq!(PatchGrid::new(448, 64), Err(GridError::TooCoarse(7)));
        assert!(PatchGrid::new(448, 56).is_ok()); // exactly 8x8
    }
}
