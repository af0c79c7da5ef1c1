//! Scene model: colored shapes placed on a patch grid according to a case code.
//!
//! A scene is pure data (no pixels); rasterization lives in `crate::raster`.
//! `sample_scene` is deterministic in `(case, n, grid, seed)`, and
//! `validate_scene` re-checks every placement invariant from scratch so
//! generated scenes can be audited independently of the sampler.

mod placement;
mod sample;
mod validate;

pub use placement::{
    anchor_sites, base_diameter, ledger_gap, placement_centers, PlacementError,
    JITTER_FRACTION, MAX_PLACEMENT_RETRIES,
};
pub use sample::{sample_scene, SceneError, COUNT_MAX, COUNT_MIN};
pub use validate::{validate_scene, Violation};

use serde::{Deserialize, Serialize};

use crate::case::CaseCode;
use crate::grid::PatchGrid;

/// Fill colors available to objects, as `(name, rgb)`. Index order is the
/// round-robin order used by the sampler.
pub const PALETTE: [(&str, [u8; 3]); 8] = [
    ("red", [230, 25, 25]),
    ("green", [40, 160, 44]),
    ("blue", [31, 80, 230]),
    ("yellow", [240, 200, 20]),
    ("purple", [130, 40, 160]),
    ("orange", [245, 130, 20]),
    ("cyan", [25, 190, 200]),
    ("magenta", [230, 35, 200]),
];

/// Background color of every rendered image.
pub const BACKGROUND: [u8; 3] = [255, 255, 255];

/// Looks up a palette index by color name.
pub fn palette_index(name: &str) -> Option<u8> {
    PALETTE.iter().position(|(n, _)| *n == name).map(|i| i as u8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Circle,
    Square,
    Triangle,
}

/// Round-robin order for shapes; paired with the palette it enumerates all
/// 24 `(shape, color)` combinations before any repeats.
pub const SHAPES: [Shape; 3] = [Shape::Circle, Shape::Square, Shape::Triangle];

/// One placed object.
///
/// `diameter` is the bounding-circle diameter for every shape: squares are
/// axis-aligned and inscribed in that circle, triangles are equilateral,
/// apex-up, inscribed in it. The silhouette therefore never leaves the disc
/// of radius `diameter / 2` around `(cx, cy)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub shape: Shape,
    /// Palette index into [`PALETTE`].
    pub color: u8,
    pub cx: f64,
    pub cy: f64,
    pub diameter: f64,
}

impl ObjectSpec {
    pub fn color_name(&self) -> &'static str {
        PALETTE[self.color as usize].0
    }

    /// Bounding-circle radius.
    pub fn radius(&self) -> f64 {
        self.diameter / 2.0
    }
}

/// A sampled scene: the case it belongs to, the grid it was placed on, the
/// seed that produced it, and the objects in placement order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub case: CaseCode,
    pub grid: PatchGrid,
    pub seed: u64,
    pub objects: Vec<ObjectSpec>,
}

impl Scene {
    /// Ground-truth object count.
    pub fn count(&self) -> u32 {
        self.objects.len() as u32
    }
}
