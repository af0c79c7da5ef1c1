//! On-disk sample layout and the dataset index.
//!
//! One directory per sample holding `image.png` and `manifest.json`; masks
//! travel as RLE strings inside the manifest so each sample carries exactly
//! one metadata file. A dataset is a tree of such directories plus a JSONL
//! index at its root.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::{rle_decode, rle_encode, Mask, RasterError, RenderedSample};
use crate::case::CaseCode;
use crate::scene::{palette_index, Scene, Shape};

pub const IMAGE_FILE: &str = "image.png";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Sidecar metadata for one sample.
///
/// Field order is fixed and floats print as plain decimals, so identical
/// samples serialize to byte-identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub id: String,
    pub case_code: CaseCode,
    pub seed: u64,
    pub image_size: u32,
    pub patch_size: u32,
    pub count: u32,
    pub objects: Vec<ManifestObject>,
    pub boxes: Vec<[u32; 4]>,
    pub masks_rle: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestObject {
    pub shape: Shape,
    /// Palette color name (`"red"`, ...), friendlier to eyeball than an index.
    pub color: String,
    pub cx: f64,
    pub cy: f64,
    pub diameter: f64,
}

impl Manifest {
    pub(crate) fn describe(scene: &Scene, boxes: &[[u32; 4]], masks: &[Mask]) -> Self {
        Manifest {
            id: format!("{}-s{:016x}", scene.case, scene.seed),
            case_code: scene.case,
            seed: scene.seed,
            image_size: scene.grid.image_size(),
            patch_size: scene.grid.patch_size(),
            count: scene.count(),
            objects: scene
                .objects
                .iter()
                .map(|o| ManifestObject {
                    shape: o.shape,
                    color: o.color_name().to_string(),
                    cx: o.cx,
                    cy: o.cy,
                    diameter: o.diameter,
                })
                .collect(),
            boxes: boxes.to_vec(),
            masks_rle: masks.iter().map(|m| rle_encode(m.bits())).collect(),
        }
    }
}

fn io_error(path: &Path, source: std::io::Error) -> RasterError {
    if source.kind() == std::io::ErrorKind::NotFound {
        RasterError::MissingArtifact(path.to_path_buf())
    } else {
        RasterError::Io { path: path.to_path_buf(), source }
    }
}

/// Deterministic PNG encoding of a rendered image.
pub fn png_bytes(image: &RgbImage) -> Vec<u8> {
    let mut buf = Cursor::new(Vec::new());
    image
        .write_to(&mut buf, image::ImageFormat::Png)
        .expect("in-memory PNG encoding cannot fail");
    buf.into_inner()
}

/// Writes `sample` under `root/<id>/` and returns that directory.
pub fn write_sample(root: &Path, sample: &RenderedSample) -> Result<PathBuf, RasterError> {
    let dir = root.join(&sample.manifest.id);
    fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    let image_path = dir.join(IMAGE_FILE);
    fs::write(&image_path, png_bytes(&sample.image)).map_err(|e| io_error(&image_path, e))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut json = serde_json::to_string_pretty(&sample.manifest)
        .expect("manifest serialization cannot fail");
    json.push('\n');
    fs::write(&manifest_path, json).map_err(|e| io_error(&manifest_path, e))?;
    Ok(dir)
}

/// Reads a sample directory back. Missing files map to `MissingArtifact`;
/// internally inconsistent metadata maps to `CorruptManifest`.
pub fn read_sample(dir: &Path) -> Result<RenderedSample, RasterError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let raw = fs::read_to_string(&manifest_path).map_err(|e| io_error(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&raw)
        .map_err(|e| RasterError::CorruptManifest(format!("{}: {e}", manifest_path.display())))?;

    let n = manifest.count as usize;
    if manifest.objects.len() != n || manifest.boxes.len() != n || manifest.masks_rle.len() != n {
        return Err(RasterError::CorruptManifest(format!(
            "{}: count {} disagrees with {} objects / {} boxes / {} masks",
            manifest_path.display(),
            manifest.count,
            manifest.objects.len(),
            manifest.boxes.len(),
            manifest.masks_rle.len()
        )));
    }
    for obj in &manifest.objects {
        if palette_index(&obj.color).is_none() {
            return Err(RasterError::CorruptManifest(format!(
                "{}: unknown color {:?}",
                manifest_path.display(),
                obj.color
            )));
        }
    }

    let image_path = dir.join(IMAGE_FILE);
    let bytes = fs::read(&image_path).map_err(|e| io_error(&image_path, e))?;
    let image = image::load_from_memory(&bytes)
        .map_err(|e| RasterError::CorruptManifest(format!("{}: {e}", image_path.display())))?
        .to_rgb8();
    if image.width() != manifest.image_size || image.height() != manifest.image_size {
        return Err(RasterError::CorruptManifest(format!(
            "{}: image is {}x{}, manifest says {}",
            image_path.display(),
            image.width(),
            image.height(),
            manifest.image_size
        )));
    }

    let masks = manifest
        .masks_rle
        .iter()
        .map(|enc| {
            rle_decode(enc, manifest.image_size, manifest.image_size)
                .map(|bits| Mask::from_bits(manifest.image_size, manifest.image_size, bits))
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(RenderedSample { image, masks, boxes: manifest.boxes.clone(), manifest })
}

/// One dataset-index line: where the manifest lives (relative to the index
/// file) and the two fields every consumer filters on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub manifest: String,
    pub case_code: CaseCode,
    pub count: u32,
}

pub fn write_index(path: &Path, entries: &[IndexEntry]) -> Result<(), RasterError> {
    let mut out = String::new();
    for entry in entries {
        out.push_str(&serde_json::to_string(entry).expect("index serialization cannot fail"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_error(path, e))
}

pub fn read_index(path: &Path) -> Result<Vec<IndexEntry>, RasterError> {
    let raw = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    raw.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            serde_json::from_str(line)
                .map_err(|e| RasterError::CorruptManifest(format!("{}: {e}", path.display())))
        })
        .collect()
}
