//! Attention-grid localization: top-k binarization and IoU against masks.

use super::MetricsError;
use crate::grid::PatchGrid;
use crate::raster::Mask;

/// Marks the top `k_percent` percent of cells, `ceil(k/100 * len)` of them.
/// Ties resolve toward the lower (row-major) index so the selection is
/// deterministic.
pub fn binarize_topk(values: &[f64], k_percent: f64) -> Vec<bool> {
    let n = values.len();
    let m = ((k_percent / 100.0) * n as f64).ceil().max(0.0) as usize;
    let m = m.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut out = vec![false; n];
    for &i in &order[..m] {
        out[i] = true;
    }
    out
}

/// IoU between the top-k attention cells (upsampled to pixels, one cell per
/// patch) and a ground-truth pixel mask.
///
/// `values` is a row-major `dim x dim` grid matching `grid`; the mask must be
/// `image_size` square. Both masks empty counts as perfect agreement.
pub fn attn_iou(
    values: &[f64],
    grid: &PatchGrid,
    k_percent: f64,
    ground_truth: &Mask,
) -> Result<f64, MetricsError> {
    let dim = grid.dim() as usize;
    if values.len() != dim * dim {
        return Err(MetricsError::DimensionMismatch(format!(
            "{} attention cells for a {dim}x{dim} grid",
            values.len()
        )));
    }
    let side = grid.image_size();
    if ground_truth.width() != side || ground_truth.height() != side {
        return Err(MetricsError::DimensionMismatch(format!(
            "{}x{} mask for a {side}x{side} image",
            ground_truth.width(),
            ground_truth.height()
        )));
    }

    let selected = binarize_topk(values, k_percent);
    let p = grid.patch_size() as usize;
    let (mut inter, mut union) = (0u64, 0u64);
    for y in 0..side as usize {
        for x in 0..side as usize {
            let cell = (y / p) * dim + (x / p);
            let a = selected[cell];
            let b = ground_truth.get(x as u32, y as u32);
            inter += (a && b) as u64;
            union += (a || b) as u64;
        }
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binarize_selects_ceil_of_the_percentage() {
        // 4 cells at 25% -> 1 cell; all-equal values break ties low.
        assert_eq!(binarize_topk(&[0.25; 4], 25.0), vec![true, false, false, false]);

        // 64 cells at 10% -> ceil(6.4) = 7 cells.
        let mut values = vec![0.0; 64];
        values[20] = 1.0;
        let picked = binarize_topk(&values, 10.0);
        assert_eq!(picked.iter().filter(|&&b| b).count(), 7);
        assert!(picked[20]);
        // Remaining six are the lowest-index ties.
        for i in 0..6 {
            assert!(picked[i]);
        }
        assert!(!picked[6]);
    }

    #[test]
    fn binarize_edge_percentages() {
        assert_eq!(binarize_topk(&[1.0, 2.0], 0.0), vec![false, false]);
        assert_eq!(binarize_topk(&[1.0, 2.0], 100.0), vec![true, true]);
        assert_eq!(binarize_topk(&[], 10.0), Vec::<bool>::new());
    }

    fn grid8() -> PatchGrid {
        PatchGrid::new(448, 56).unwrap()
    }

    /// Mask that is exactly the union of the given 8x8 cells.
    fn cell_mask(cells: &[usize]) -> Mask {
        let mut m = Mask::new(448, 448);
        for &c in cells {
            let (gy, gx) = (c / 8, c % 8);
            for y in 0..56 {
                for x in 0..56 {
                    m.set((gx * 56 + x) as u32, (gy * 56 + y) as u32, true);
                }
            }
        }
        m
    }

    #[test]
    fn iou_hits_the_three_reference_values() {
        // k = 2/64 cells -> m = ceil(3.125% of 64) = 2.
        let mut values = vec![0.0; 64];
        values[5] = 0.9;
        values[9] = 0.8;
        let g = grid8();

        let perfect = attn_iou(&values, &g, 3.125, &cell_mask(&[5, 9])).unwrap();
        assert_eq!(perfect, 1.0);

        let disjoint = attn_iou(&values, &g, 3.125, &cell_mask(&[40, 41])).unwrap();
        assert_eq!(disjoint, 0.0);

        // Selection {5, 9} vs truth {9, 40}: 1 cell shared of 3 distinct.
        let third = attn_iou(&values, &g, 3.125, &cell_mask(&[9, 40])).unwrap();
        assert!((third - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn iou_rejects_shape_mismatches() {
        let g = grid8();
        assert!(matches!(
            attn_iou(&[0.0; 60], &g, 10.0, &cell_mask(&[])),
            Err(MetricsError::DimensionMismatch(_))
        ));
        let small = Mask::new(448, 440);
        assert!(matches!(
            attn_iou(&[0.0; 64], &g, 10.0, &small),
            Err(MetricsError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn iou_of_two_empty_masks_is_one() {
        let g = grid8();
        let v = vec![0.0; 64];
        assert_eq!(attn_iou(&v, &g, 0.0, &Mask::new(448, 448)).unwrap(), 1.0);
    }
}
