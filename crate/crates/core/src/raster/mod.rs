//! Rasterization of scenes into RGB images, per-object binary masks with
//! tight boxes, and the on-disk sample layout.
//!
//! Membership uses the pixel-center rule with no anti-aliasing: a pixel
//! belongs to an object iff its center `(x + 0.5, y + 0.5)` lies inside the
//! closed shape. Rendering is pure, so a scene rasterizes to identical bytes
//! on every run.

mod io;
mod rle;

pub use io::{
    read_index, read_sample, write_index, write_sample, IndexEntry, Manifest, ManifestObject,
};
pub use rle::{rle_decode, rle_encode};

use std::path::PathBuf;

use image::RgbImage;
use thiserror::Error;

use crate::scene::{ObjectSpec, Scene, Shape, BACKGROUND, PALETTE};

pub use io::png_bytes;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("malformed RLE: {detail}")]
    MalformedRle { detail: String },
    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),
    #[error("corrupt manifest: {0}")]
    CorruptManifest(String),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Row-major binary mask over the full image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, bits: vec![false; (width * height) as usize] }
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), (width * height) as usize);
        Self { width, height, bits }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.bits[(y * self.width + x) as usize] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Tight bounding box as `[x0, y0, x1, y1]` with exclusive maxima, or
    /// `None` for an empty mask.
    pub fn bounding_box(&self) -> Option<[u32; 4]> {
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0u32, 0u32);
        let mut any = false;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    any = true;
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x + 1);
                    y1 = y1.max(y + 1);
                }
            }
        }
        any.then_some([x0, y0, x1, y1])
    }
}

/// A rasterized scene: image, per-object masks and boxes (index-aligned with
/// `manifest.objects`), and the manifest that describes them all.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedSample {
    pub image: RgbImage,
    pub masks: Vec<Mask>,
    pub boxes: Vec<[u32; 4]>,
    pub manifest: Manifest,
}

/// True iff the pixel-center point lies inside the closed shape.
///
/// `diameter` bounds every shape's circumscribed circle: squares are
/// axis-aligned and inscribed in it, triangles equilateral and apex-up.
pub fn contains_point(obj: &ObjectSpec, px: f64, py: f64) -> bool {
    let (dx, dy) = (px - obj.cx, py - obj.cy);
    let r = obj.radius();
    match obj.shape {
        Shape::Circle => dx * dx + dy * dy <= r * r,
        Shape::Square => {
            let half = r / std::f64::consts::SQRT_2;
            dx.abs() <= half && dy.abs() <= half
        }
        Shape::Triangle => {
            // Vertices on the bounding circle; y grows downward, apex on top.
            let h = r * 3.0f64.sqrt() / 2.0;
            let a = (obj.cx, obj.cy - r);
            let rv = (obj.cx + h, obj.cy + r / 2.0);
            let lv = (obj.cx - h, obj.cy + r / 2.0);
            let edge = |from: (f64, f64), to: (f64, f64)| {
                (to.0 - from.0) * (py - from.1) - (to.1 - from.1) * (px - from.0)
            };
            edge(a, rv) >= 0.0 && edge(rv, lv) >= 0.0 && edge(lv, a) >= 0.0
        }
    }
}

/// Rasterizes `scene`. Objects draw in placement order; silhouettes never
/// overlap (adjacency prefixes may abut), so order only fixes tie-break
/// behavior on shared boundary pixels, which even patch sizes never produce.
pub fn render(scene: &Scene) -> RenderedSample {
    let size = scene.grid.image_size();
    let mut image = RgbImage::from_pixel(size, size, image::Rgb(BACKGROUND));
    let mut masks = Vec::with_capacity(scene.objects.len());
    let mut boxes = Vec::with_capacity(scene.objects.len());

    for obj in &scene.objects {
        let mut mask = Mask::new(size, size);
        let r = obj.radius();
        let x_lo = (obj.cx - r).floor().max(0.0) as u32;
        let x_hi = ((obj.cx + r).ceil() as u32).min(size);
        let y_lo = (obj.cy - r).floor().max(0.0) as u32;
        let y_hi = ((obj.cy + r).ceil() as u32).min(size);
        let rgb = image::Rgb(PALETTE[obj.color as usize].1);
        for y in y_lo..y_hi {
            for x in x_lo..x_hi {
                if contains_point(obj, x as f64 + 0.5, y as f64 + 0.5) {
                    mask.set(x, y, true);
                    image.put_pixel(x, y, rgb);
                }
            }
        }
        let bbox = mask
            .bounding_box()
            .expect("object diameters keep every mask nonempty");
        boxes.push(bbox);
        masks.push(mask);
    }

    let manifest = Manifest::describe(scene, &boxes, &masks);
    RenderedSample { image, masks, boxes, manifest }
}
