//! Dataset manifests: a versioned JSON document listing every patch pair,
//! with the patches themselves stored as PNG files next to it.

use std::collections::HashSet;
use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageFormat};
use serde::{Deserialize, Serialize};
use vexcd_core::dataset::{extract_patches, Geometry, Image, Patch, PatchPair, Split};
use vexcd_core::{FeatureMode, Matrix, PatchPairDataset};

use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
const PATCH_DIR: &str = "patches";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    #[serde(default)]
    pub provenance: String,
    pub feature_mode: FeatureMode,
    pub geometry: Geometry,
    pub pairs: Vec<PairEntry>,
    /// Precomputed feature rows in pair order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairEntry {
    pub id: usize,
    pub split: Split,
    #[serde(default)]
    pub label: Option<u8>,
    /// Patch file at the first instant, relative to the manifest.
    pub t0: PathBuf,
    pub t1: PathBuf,
}

/// A dataset read from disk, with the directory its patch paths resolve
/// against.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: PatchPairDataset,
    pub root: PathBuf,
}

fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

/// Writes `dir/manifest.json` and one PNG per patch under `dir/patches/`.
pub fn save_dataset(dataset: &PatchPairDataset, dir: &Path) -> Result<PathBuf> {
    dataset.validate()?;
    let patch_dir = dir.join(PATCH_DIR);
    fs::create_dir_all(&patch_dir).map_err(|e| Error::io(&patch_dir, e))?;
    let mut pairs = Vec::with_capacity(dataset.len());
    for pair in &dataset.pairs {
        let t0 = Path::new(PATCH_DIR).join(format!("{:06}_t0.png", pair.id));
        let t1 = Path::new(PATCH_DIR).join(format!("{:06}_t1.png", pair.id));
        write_png(&pair.p, &dir.join(&t0))?;
        write_png(&pair.q, &dir.join(&t1))?;
        pairs.push(PairEntry {
            id: pair.id,
            split: pair.split,
            label: pair.label,
            t0,
            t1,
        });
    }
    let manifest = Manifest {
        format_version: MANIFEST_VERSION,
        provenance: dataset.provenance.clone(),
        feature_mode: dataset.feature_mode,
        geometry: dataset.geometry,
        pairs,
        features: dataset
            .features
            .as_ref()
            .map(|f| (0..f.rows()).map(|r| f.row(r).to_vec()).collect()),
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Reads a manifest (or a directory containing one) and decodes every
/// patch it references.
pub fn load_dataset(path: &Path) -> Result<LoadedDataset> {
    let path = manifest_path(path);
    let manifest = read_manifest(&path)?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    check_manifest(&manifest, &root)?;

    let g = manifest.geometry;
    let mut pairs = Vec::with_capacity(manifest.pairs.len());
    for entry in &manifest.pairs {
        let p = read_png(&root.join(&entry.t0))?;
        let q = read_png(&root.join(&entry.t1))?;
        for (patch, file) in [(&p, &entry.t0), (&q, &entry.t1)] {
            if patch.shape() != (g.height, g.width, g.channels) {
                return Err(Error::Integrity(format!(
                    "{} is {:?}, geometry says {:?}",
                    file.display(),
                    patch.shape(),
                    (g.height, g.width, g.channels)
                )));
            }
        }
        pairs.push(PatchPair {
            id: entry.id,
            p,
            q,
            label: entry.label,
            split: entry.split,
        });
    }
    let features = match manifest.features {
        Some(rows) => Some(Matrix::from_rows(&rows).map_err(|e| Error::Integrity(format!("features: {e}")))?),
        None => None,
    };
    let dataset = PatchPairDataset {
        pairs,
        feature_mode: manifest.feature_mode,
        geometry: g,
        provenance: manifest.provenance,
        features,
    };
    dataset.validate().map_err(|e| Error::Integrity(e.to_string()))?;
    Ok(LoadedDataset { dataset, root })
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    // check the version before the full schema so old files get a clear error
    #[derive(Deserialize)]
    struct Versioned {
        format_version: u32,
    }
    let v: Versioned = serde_json::from_str(&text).map_err(|e| Error::parse(path, &e))?;
    if v.format_version != MANIFEST_VERSION {
        return Err(Error::Version {
            what: "manifest",
            found: v.format_version,
            expected: MANIFEST_VERSION,
        });
    }
    serde_json::from_str(&text).map_err(|e| Error::parse(path, &e))
}

/// Structural checks that need no image decoding.
pub fn check_manifest(manifest: &Manifest, root: &Path) -> Result<()> {
    let mut seen = HashSet::new();
    let mut missing = Vec::new();
    for entry in &manifest.pairs {
        if !seen.insert(entry.id) {
            return Err(Error::Integrity(format!("duplicate pair id {}", entry.id)));
        }
        if let Some(l) = entry.label {
            if l > 1 {
                return Err(Error::Integrity(format!("pair {} has label {l}", entry.id)));
            }
        }
        for file in [&entry.t0, &entry.t1] {
            if !root.join(file).is_file() {
                missing.push(file.display().to_string());
            }
        }
    }
    if !missing.is_empty() {
        let shown: Vec<&str> = missing.iter().take(5).map(String::as_str).collect();
        return Err(Error::Integrity(format!(
            "{} patch file(s) missing: {}{}",
            missing.len(),
            shown.join(", "),
            if missing.len() > 5 { ", ..." } else { "" }
        )));
    }
    if let Some(rows) = &manifest.features {
        if rows.len() != manifest.pairs.len() {
            return Err(Error::Integrity(format!(
                "{} feature rows for {} pairs",
                rows.len(),
                manifest.pairs.len()
            )));
        }
    }
    Ok(())
}

fn to_dynamic(patch: &Patch) -> Result<DynamicImage> {
    let (w, h) = (patch.width as u32, patch.height as u32);
    let data = patch.data.clone();
    let img = match patch.channels {
        1 => image::GrayImage::from_raw(w, h, data).map(DynamicImage::ImageLuma8),
        3 => image::RgbImage::from_raw(w, h, data).map(DynamicImage::ImageRgb8),
        4 => image::RgbaImage::from_raw(w, h, data).map(DynamicImage::ImageRgba8),
        c => return Err(Error::Invalid(format!("cannot encode {c}-channel patch as PNG"))),
    };
    img.ok_or_else(|| Error::Invalid("patch buffer does not match its shape".into()))
}

fn from_dynamic(img: DynamicImage) -> Result<Patch> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (channels, data) = match img {
        DynamicImage::ImageLuma8(b) => (1, b.into_raw()),
        DynamicImage::ImageRgba8(b) => (4, b.into_raw()),
        other => (3, other.into_rgb8().into_raw()),
    };
    Ok(Patch::new(h, w, channels, data)?)
}

pub fn encode_png(patch: &Patch) -> Result<Vec<u8>> {
    let mut out = Cursor::new(Vec::new());
    to_dynamic(patch)?
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::Invalid(format!("PNG encoding failed: {e}")))?;
    Ok(out.into_inner())
}

pub fn write_png(patch: &Patch, path: &Path) -> Result<()> {
    let bytes = encode_png(patch)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Decodes any image the `image` crate was built to read (PNG here).
pub fn read_png(path: &Path) -> Result<Image> {
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    from_dynamic(img)
}

/// Tiles two co-registered images into an unlabeled dataset. With a mask
/// image, a tile is kept when the mask pixel at its center is nonzero.
pub fn ingest(
    image_t0: &Path,
    image_t1: &Path,
    patch_size: usize,
    stride: usize,
    mask: Option<&Path>,
) -> Result<PatchPairDataset> {
    let a = read_png(image_t0)?;
    let b = read_png(image_t1)?;
    let mask = mask.map(read_png).transpose()?;
    if let Some(m) = &mask {
        if (m.height, m.width) != (a.height, a.width) {
            return Err(Error::Invalid(format!(
                "mask is {}x{}, images are {}x{}",
                m.height, m.width, a.height, a.width
            )));
        }
    }
    let keep = |r: usize, c: usize| {
        let m = mask.as_ref().expect("only called with a mask");
        let (y, x) = (r * stride + patch_size / 2, c * stride + patch_size / 2);
        let at = (y * m.width + x) * m.channels;
        m.data[at..at + m.channels].iter().any(|&v| v != 0)
    };
    let keep_ref: Option<&dyn Fn(usize, usize) -> bool> = if mask.is_some() { Some(&keep) } else { None };
    Ok(extract_patches(&a, &b, patch_size, stride, keep_ref)?)
}
