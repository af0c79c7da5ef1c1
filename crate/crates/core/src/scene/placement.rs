//! Center placement per case prefix.
//!
//! Prefixes 1-8 draw from enumerable anchor sites on the patch grid; prefixes
//! 9-15 build near-touching cluster layouts and drop them at a random anchor.
//! Sizes here are bounding-circle diameters, so "silhouettes do not overlap"
//! reduces to center distance >= mean diameter.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::case::CaseCode;
use crate::grid::PatchGrid;

/// Whole-layout retries before a placement is declared infeasible.
pub const MAX_PLACEMENT_RETRIES: usize = 1000;

/// Per-axis jitter bound for suffixes C/D, as a fraction of the patch size.
pub const JITTER_FRACTION: f64 = 1.0 / 8.0;

#[derive(Debug, Error, PartialEq)]
pub enum PlacementError {
    #[error("cannot place {n} objects for case {case} on a {dim}x{dim} grid")]
    Infeasible { case: CaseCode, n: u32, dim: u32 },
}

/// Base object diameter: 0.6 patch sizes, so an unjittered object fits
/// strictly inside one grid cell.
pub fn base_diameter(grid: &PatchGrid) -> f64 {
    0.6 * grid.patch_size() as f64
}

/// Required silhouette gap (px) for the adjacency prefixes 9-15, measured
/// between bounding circles. Tighter for the diagonal/blob/mixed layouts.
pub fn ledger_gap(prefix: u8) -> f64 {
    match prefix {
        9..=12 => 2.0,
        13..=15 => 1.0,
        _ => panic!("prefix {prefix} has no adjacency gap"),
    }
}

/// Enumerates the legal anchor sites for prefixes 1-8 in row-major order.
///
/// Prefix 1 and the dilated prefixes 5-8 anchor at cell centers (sites where
/// a disc of `diameter` would leave the image are dropped); prefix 2 anchors
/// on interior vertical patch edges, prefix 3 on interior horizontal edges,
/// prefix 4 on interior patch-grid intersections. Adjacency prefixes have no
/// site list and yield an empty vector.
pub fn anchor_sites(prefix: u8, grid: &PatchGrid, diameter: f64) -> Vec<(f64, f64)> {
    let p = grid.patch_size() as f64;
    let dim = grid.dim();
    let size = grid.image_size() as f64;
    let r = diameter / 2.0;
    let mut sites = Vec::new();
    match prefix {
        1 | 5..=8 => {
            for j in 0..dim {
                for i in 0..dim {
                    let (x, y) = ((i as f64 + 0.5) * p, (j as f64 + 0.5) * p);
                    if x - r >= 0.0 && x + r <= size && y - r >= 0.0 && y + r <= size {
                        sites.push((x, y));
                    }
                }
            }
        }
        2 => {
            for j in 0..dim {
                for i in 1..dim {
                    sites.push((i as f64 * p, (j as f64 + 0.5) * p));
                }
            }
        }
        3 => {
            for j in 1..dim {
                for i in 0..dim {
                    sites.push(((i as f64 + 0.5) * p, j as f64 * p));
                }
            }
        }
        4 => {
            for j in 1..dim {
                for i in 1..dim {
                    sites.push((i as f64 * p, j as f64 * p));
                }
            }
        }
        _ => {}
    }
    sites
}

/// Draws `n` object centers for `case`. Deterministic given the RNG state.
///
/// Suffix C/D jitter is applied here (uniform in +-patch/8 per axis), after
/// the anchors are chosen, so callers always receive final centers.
pub fn placement_centers<R: Rng>(
    case: CaseCode,
    grid: &PatchGrid,
    n: u32,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>, PlacementError> {
    let p = grid.patch_size() as f64;
    let infeasible = || PlacementError::Infeasible { case, n, dim: grid.dim() };
    let count = n as usize;

    let mut centers = match case.prefix() {
        1..=4 => {
            let sites = anchor_sites(case.prefix(), grid, base_diameter(grid));
            if sites.len() < count {
                return Err(infeasible());
            }
            // Any distinct anchors are at least one patch apart on some axis,
            // which exceeds the base diameter even after maximal jitter.
            rand::seq::index::sample(rng, sites.len(), count)
                .iter()
                .map(|k| sites[k])
                .collect()
        }
        5..=8 => {
            let diameter = case.dilation().expect("dilated prefix") * p;
            dilated_centers(case, grid, diameter, count, rng).ok_or_else(infeasible)?
        }
        9..=15 => cluster_centers(case, grid, count, rng).ok_or_else(infeasible)?,
        _ => unreachable!("CaseCode construction caps the prefix at 15"),
    };

    if case.jitters() {
        let j = p * JITTER_FRACTION;
        for c in &mut centers {
            c.0 += rng.random_range(-j..j);
            c.1 += rng.random_range(-j..j);
        }
    }
    Ok(centers)
}

/// Greedy packing of dilated circles onto cell centers: shuffle the sites,
/// keep every site that stays at least one diameter from the picks so far,
/// retry on failure. A final pass in row-major site order catches packings
/// the shuffles keep missing. Dense requests (e.g. prefix 8 at n = 12) can
/// exceed what any packing admits; the caller maps `None` to `Infeasible`.
fn dilated_centers<R: Rng>(
    case: CaseCode,
    grid: &PatchGrid,
    diameter: f64,
    n: usize,
    rng: &mut R,
) -> Option<Vec<(f64, f64)>> {
    let sites = anchor_sites(case.prefix(), grid, diameter);
    if sites.len() < n {
        return None;
    }
    let min_dist2 = diameter * diameter - 1e-9;
    let mut order: Vec<usize> = (0..sites.len()).collect();
    let greedy = |order: &[usize]| -> Option<Vec<(f64, f64)>> {
        let mut picks: Vec<(f64, f64)> = Vec::with_capacity(n);
        for &s in order {
            let c = sites[s];
            let clear = picks
                .iter()
                .all(|&q| (c.0 - q.0).powi(2) + (c.1 - q.1).powi(2) >= min_dist2);
            if clear {
                picks.push(c);
                if picks.len() == n {
                    return Some(picks);
                }
            }
        }
        None
    };
    for _ in 0..MAX_PLACEMENT_RETRIES {
        order.shuffle(rng);
        if let Some(picks) = greedy(&order) {
            return Some(picks);
        }
    }
    let row_major: Vec<usize> = (0..sites.len()).collect();
    greedy(&row_major)
}

/// Builds the adjacency layout for prefixes 9-15 and anchors it uniformly at
/// random inside the image. Consecutive (or hex-neighbor) centers sit exactly
/// `base diameter + ledger gap` apart, so suffix-A scenes meet the gap with
/// equality and suffix-B scenes (diameters <= base) can only widen it.
fn cluster_centers<R: Rng>(
    case: CaseCode,
    grid: &PatchGrid,
    n: usize,
    rng: &mut R,
) -> Option<Vec<(f64, f64)>> {
    let d = base_diameter(grid);
    let s = d + ledger_gap(case.prefix());
    let rel = match case.prefix() {
        9 => (0..n).map(|k| (k as f64 * s, 0.0)).collect(),
        10 => (0..n).map(|k| (0.0, k as f64 * s)).collect(),
        11 => {
            let top = n.div_ceil(2);
            let mut v: Vec<(f64, f64)> = (0..top).map(|k| (k as f64 * s, 0.0)).collect();
            v.extend((0..n - top).map(|k| (k as f64 * s, s)));
            v
        }
        12 => {
            let radius = s / (2.0 * (std::f64::consts::PI / n as f64).sin());
            let rot = rng.random_range(0.0..std::f64::consts::TAU);
            (0..n)
                .map(|k| {
                    let a = rot + std::f64::consts::TAU * k as f64 / n as f64;
                    (radius * a.cos(), radius * a.sin())
                })
                .collect()
        }
        13 => {
            let step = s / std::f64::consts::SQRT_2;
            (0..n).map(|k| (k as f64 * step, k as f64 * step)).collect()
        }
        14 => hex_rows(n, s, 0.0, false),
        15 => {
            let chain = n.div_ceil(2);
            let mut v: Vec<(f64, f64)> = (0..chain).map(|k| (k as f64 * s, 0.0)).collect();
            v.extend(hex_rows(n - chain, s, s, true));
            v
        }
        _ => unreachable!("not an adjacency prefix"),
    };
    anchor_cluster(rel, d, grid, rng)
}

/// Hexagonal rows of width `ceil(sqrt(n))`, every other row shifted half a
/// step; `y0`/`shift_first` let the mixed layout hang a blob off a chain.
fn hex_rows(n: usize, s: f64, y0: f64, shift_first: bool) -> Vec<(f64, f64)> {
    let width = (n as f64).sqrt().ceil() as usize;
    let row_pitch = s * 3.0f64.sqrt() / 2.0;
    (0..n)
        .map(|k| {
            let (row, col) = (k / width, k % width);
            let shifted = (row % 2 == 1) != shift_first;
            let x = col as f64 * s + if shifted { s / 2.0 } else { 0.0 };
            (x, y0 + row as f64 * row_pitch)
        })
        .collect()
}

fn anchor_cluster<R: Rng>(
    rel: Vec<(f64, f64)>,
    max_diameter: f64,
    grid: &PatchGrid,
    rng: &mut R,
) -> Option<Vec<(f64, f64)>> {
    let size = grid.image_size() as f64;
    let margin = max_diameter / 2.0;
    let (mut min_x, mut max_x, mut min_y, mut max_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &rel {
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    }
    let lo_x = margin - min_x;
    let hi_x = size - margin - max_x;
    let lo_y = margin - min_y;
    let hi_y = size - margin - max_y;
    if hi_x < lo_x || hi_y < lo_y {
        return None;
    }
    let ax = uniform_or_point(rng, lo_x, hi_x);
    let ay = uniform_or_point(rng, lo_y, hi_y);
    Some(rel.into_iter().map(|(x, y)| (x + ax, y + ay)).collect())
}

fn uniform_or_point<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}
