//! Independent re-check of every scene invariant.
//!
//! The validator shares no code with the sampler beyond the anchor-site
//! formulas' constants: it recomputes nearest anchors arithmetically and
//! measures overlap on bounding circles (silhouettes are inscribed in them,
//! so disjoint circles imply disjoint silhouettes).

use std::fmt;

use super::placement::{base_diameter, ledger_gap, JITTER_FRACTION};
use super::{Scene, Shape, COUNT_MAX, COUNT_MIN, PALETTE};

/// Geometry tolerance for exact-anchor checks; placements are computed in
/// f64 straight from the formulas, so violations sit far above this.
const TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Index of the offending object, if the rule is per-object.
    pub object: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.object {
            Some(i) => write!(f, "object {i}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Checks every invariant of `scene` and returns one entry per violation.
/// An empty report means the scene is valid.
pub fn validate_scene(scene: &Scene) -> Vec<Violation> {
    let mut out = Vec::new();
    let grid = &scene.grid;
    let p = grid.patch_size() as f64;
    let size = grid.image_size() as f64;
    let dim = grid.dim();
    let base = base_diameter(grid);
    let prefix = scene.case.prefix();

    let n = scene.count();
    if !(COUNT_MIN..=COUNT_MAX).contains(&n) {
        out.push(Violation {
            object: None,
            message: format!("count {n} out of [{COUNT_MIN}, {COUNT_MAX}]"),
        });
    }

    let expected_fixed = match scene.case.dilation() {
        Some(mult) => mult * p,
        None => base,
    };

    for (i, obj) in scene.objects.iter().enumerate() {
        let mut fail = |message: String| out.push(Violation { object: Some(i), message });
        let r = obj.radius();

        if obj.color as usize >= PALETTE.len() {
            fail(format!("color index {} outside the palette", obj.color));
        }
        if scene.case.dilation().is_some() && obj.shape != Shape::Circle {
            fail(format!("dilated prefix {prefix} allows circles only, got {:?}", obj.shape));
        }
        if scene.case.varies_size() {
            if obj.diameter < 0.2 * base - TOL || obj.diameter > base + TOL {
                fail(format!(
                    "diameter {} outside [{}, {}]",
                    obj.diameter,
                    0.2 * base,
                    base
                ));
            }
        } else if (obj.diameter - expected_fixed).abs() > TOL {
            fail(format!("diameter {} differs from fixed {expected_fixed}", obj.diameter));
        }
        if obj.cx - r < -TOL || obj.cx + r > size + TOL || obj.cy - r < -TOL || obj.cy + r > size + TOL {
            fail(format!("silhouette leaves the image at ({}, {})", obj.cx, obj.cy));
        }

        // Per-prefix anchor rule. Jittered suffixes may sit up to patch/8 per
        // axis from the nearest legal anchor; everything else must hit it.
        let allowed = if scene.case.jitters() { p * JITTER_FRACTION + TOL } else { TOL };
        let axis_center = |c: f64| -> f64 {
            let k = (c / p - 0.5).round().clamp(0.0, dim as f64 - 1.0);
            (k + 0.5) * p
        };
        let axis_edge = |c: f64| -> f64 {
            let k = (c / p).round().clamp(1.0, dim as f64 - 1.0);
            k * p
        };
        let anchor = match prefix {
            1 | 5..=8 => Some((axis_center(obj.cx), axis_center(obj.cy), "cell center")),
            2 => Some((axis_edge(obj.cx), axis_center(obj.cy), "vertical patch edge")),
            3 => Some((axis_center(obj.cx), axis_edge(obj.cy), "horizontal patch edge")),
            4 => Some((axis_edge(obj.cx), axis_edge(obj.cy), "grid intersection")),
            _ => None,
        };
        if let Some((ax, ay, what)) = anchor {
            let (dx, dy) = ((obj.cx - ax).abs(), (obj.cy - ay).abs());
            if dx > allowed || dy > allowed {
                fail(format!(
                    "prefix-{prefix} alignment: center ({}, {}) is off the nearest {what} ({ax}, {ay})",
                    obj.cx, obj.cy
                ));
            }
        }

        // Prefix 1 confines the whole silhouette to a single grid cell.
        if prefix == 1 {
            let (ci, cj) = ((obj.cx / p).floor(), (obj.cy / p).floor());
            let inside = obj.cx - r >= ci * p - TOL
                && obj.cx + r <= (ci + 1.0) * p + TOL
                && obj.cy - r >= cj * p - TOL
                && obj.cy + r <= (cj + 1.0) * p + TOL;
            if !inside {
                fail(format!(
                    "prefix-1 one-cell rule: silhouette at ({}, {}) spills out of its cell",
                    obj.cx, obj.cy
                ));
            }
        }
    }

    // Pairwise separation, measured between bounding circles.
    let mut min_gap = f64::MAX;
    for i in 0..scene.objects.len() {
        for j in i + 1..scene.objects.len() {
            let (a, b) = (&scene.objects[i], &scene.objects[j]);
            let dist = ((a.cx - b.cx).powi(2) + (a.cy - b.cy).powi(2)).sqrt();
            let touch = (a.diameter + b.diameter) / 2.0;
            if dist < touch - TOL {
                out.push(Violation {
                    object: None,
                    message: format!("overlap: objects {i} and {j} are {dist:.3} px apart, need {touch:.3}"),
                });
            }
            min_gap = min_gap.min(dist - touch);
        }
    }

    // Adjacency prefixes at fixed size must actually cluster: some pair has
    // to close down to the ledger gap.
    if scene.case.is_adjacency() && !scene.case.varies_size() && scene.objects.len() >= 2 {
        let gap = ledger_gap(prefix);
        if min_gap > gap + TOL {
            out.push(Violation {
                object: None,
                message: format!(
                    "adjacency gap: closest silhouettes are {min_gap:.3} px apart, ledger allows at most {gap}"
                ),
            });
        }
    }

    out
}
