//! Aligned bi-temporal patch pairs: tiling, featurization, synthetic
//! benchmarks and the standardized feature view used by the engine.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::classifier::ClassifierModel;
use crate::error::{Error, Result};
use crate::eval::compute_eer;
use crate::numerics::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// An 8-bit image or patch, channel-last row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patch {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

impl Patch {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::Dataset(format!(
                "patch buffer holds {} bytes, expected {height}x{width}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: u8) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![value; height * width * channels],
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    #[inline]
    fn offset(&self, y: usize, x: usize) -> usize {
        (y * self.width + x) * self.channels
    }

    /// Copies a `size`×`size` window whose top-left corner is (`y`, `x`).
    fn crop(&self, y: usize, x: usize, size: usize) -> Patch {
        let mut data = Vec::with_capacity(size * size * self.channels);
        for row in y..y + size {
            let start = self.offset(row, x);
            data.extend_from_slice(&self.data[start..start + size * self.channels]);
        }
        Patch {
            height: size,
            width: size,
            channels: self.channels,
            data,
        }
    }
}

/// Full images are the same structure as patches.
pub type Image = Patch;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchPair {
    pub id: usize,
    /// Patch at the first instant.
    pub p: Patch,
    /// Patch at the second instant.
    pub q: Patch,
    /// 1 when `q` shows a relevant change with respect to `p`.
    pub label: Option<u8>,
    pub split: Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Both patches flattened and scaled to [0, 1].
    #[default]
    Concat,
    /// Signed difference `(q − p) / 255`.
    Diff,
    /// `Concat` followed by `Diff`.
    ConcatDiff,
}

impl core::str::FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "concat" => Ok(Self::Concat),
            "diff" => Ok(Self::Diff),
            "concat_diff" => Ok(Self::ConcatDiff),
            other => Err(Error::Config(format!("unknown feature mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Geometry {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchPairDataset {
    pub pairs: Vec<PatchPair>,
    pub feature_mode: FeatureMode,
    pub geometry: Geometry,
    pub provenance: String,
    /// Precomputed feature rows (one per pair, in pair order). When absent,
    /// features come from [`featurize`].
    pub features: Option<Matrix>,
}

impl PatchPairDataset {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids: Vec<usize> = self.pairs.iter().map(|p| p.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Dataset(format!("duplicate pair id {}", w[0])));
        }
        for pair in &self.pairs {
            if pair.p.shape() != pair.q.shape() {
                return Err(Error::Dataset(format!("pair {} has mismatched patch shapes", pair.id)));
            }
            if let Some(l) = pair.label {
                if l > 1 {
                    return Err(Error::Dataset(format!("pair {} has label {l}", pair.id)));
                }
            }
        }
        if let Some(f) = &self.features {
            if f.rows() != self.pairs.len() {
                return Err(Error::Dataset(format!(
                    "{} feature rows for {} pairs",
                    f.rows(),
                    self.pairs.len()
                )));
            }
        }
        Ok(())
    }

    pub fn has_ground_truth(&self) -> bool {
        !self.pairs.is_empty() && self.pairs.iter().all(|p| p.label.is_some())
    }

    /// One feature row per pair.
    pub fn feature_matrix(&self) -> Result<Matrix> {
        if let Some(f) = &self.features {
            return Ok(f.clone());
        }
        let rows: Vec<Vec<f64>> = self
            .pairs
            .iter()
            .map(|p| featurize(p, self.feature_mode))
            .collect::<Result<_>>()?;
        Matrix::from_rows(&rows)
    }

    pub fn position_of(&self, id: usize) -> Option<usize> {
        self.pairs.iter().position(|p| p.id == id)
    }
}

/// Tiles two co-registered images into aligned patch pairs, row-major.
/// Border tiles that do not fit are dropped. `keep(row, col)` can mask out
/// grid cells. Splits alternate train/test in tile order.
pub fn extract_patches(
    image_t0: &Image,
    image_t1: &Image,
    patch_size: usize,
    stride: usize,
    keep: Option<&dyn Fn(usize, usize) -> bool>,
) -> Result<PatchPairDataset> {
    if image_t0.shape() != image_t1.shape() {
        return Err(Error::Dataset(format!(
            "images are not aligned: {:?} vs {:?}",
            image_t0.shape(),
            image_t1.shape()
        )));
    }
    if patch_size == 0 || stride < patch_size {
        return Err(Error::Config(format!(
            "stride ({stride}) must be >= patch size ({patch_size}) > 0"
        )));
    }
    let grid_rows = tile_count(image_t0.height, patch_size, stride);
    let grid_cols = tile_count(image_t0.width, patch_size, stride);
    let mut pairs = Vec::with_capacity(grid_rows * grid_cols);
    for r in 0..grid_rows {
        for c in 0..grid_cols {
            if keep.is_some_and(|k| !k(r, c)) {
                continue;
            }
            let (y, x) = (r * stride, c * stride);
            let id = pairs.len();
            pairs.push(PatchPair {
                id,
                p: image_t0.crop(y, x, patch_size),
                q: image_t1.crop(y, x, patch_size),
                label: None,
                split: if id % 2 == 0 { Split::Train } else { Split::Test },
            });
        }
    }
    Ok(PatchPairDataset {
        pairs,
        feature_mode: FeatureMode::Concat,
        geometry: Geometry {
            height: patch_size,
            width: patch_size,
            channels: image_t0.channels,
            stride,
        },
        provenance: format!(
            "tiled {}x{}x{} image pair, patch {patch_size}, stride {stride}",
            image_t0.height, image_t0.width, image_t0.channels
        ),
        features: None,
    })
}

/// Number of whole tiles along one axis.
pub fn tile_count(extent: usize, patch_size: usize, stride: usize) -> usize {
    if extent < patch_size {
        0
    } else {
        (extent - patch_size) / stride + 1
    }
}

/// Feature vector of a pair, channel-last row-major.
pub fn featurize(pair: &PatchPair, mode: FeatureMode) -> Result<Vec<f64>> {
    if pair.p.shape() != pair.q.shape() {
        return Err(Error::Dataset(format!("pair {} has mismatched patch shapes", pair.id)));
    }
    let scaled = |b: &u8| f64::from(*b) / 255.0;
    let diff = || {
        pair.p
            .data
            .iter()
            .zip(&pair.q.data)
            .map(|(a, b)| (f64::from(*b) - f64::from(*a)) / 255.0)
    };
    Ok(match mode {
        FeatureMode::Concat => pair.p.data.iter().chain(&pair.q.data).map(scaled).collect(),
        FeatureMode::Diff => diff().collect(),
        FeatureMode::ConcatDiff => pair
            .p
            .data
            .iter()
            .chain(&pair.q.data)
            .map(scaled)
            .chain(diff())
            .collect(),
    })
}

/// Inverse of `Concat` featurization.
pub fn unflatten_concat(features: &[f64], geometry: &Geometry) -> Result<(Patch, Patch)> {
    let len = geometry.height * geometry.width * geometry.channels;
    if features.len() != 2 * len {
        return Err(Error::Dataset(format!(
            "feature vector of length {} does not match geometry {geometry:?}",
            features.len()
        )));
    }
    let to_bytes = |s: &[f64]| {
        s.iter()
            .map(|v| libm::round(v * 255.0).clamp(0.0, 255.0) as u8)
            .collect()
    };
    Ok((
        Patch::new(
            geometry.height,
            geometry.width,
            geometry.channels,
            to_bytes(&features[..len]),
        )?,
        Patch::new(
            geometry.height,
            geometry.width,
            geometry.channels,
            to_bytes(&features[len..]),
        )?,
    ))
}

/// Reassigns splits so each label class is halved evenly (train gets the
/// extra sample of an odd class). Unlabeled pairs form their own stratum.
pub fn split_evenly(pairs: &mut [PatchPair], seed: u64) {
    let mut rng = rng::seeded(seed);
    // the parity carries across strata so odd strata don't all favor Train
    let mut offset = 0;
    for stratum in [Some(0u8), Some(1), None] {
        let mut idx: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].label == stratum).collect();
        idx.shuffle(&mut rng);
        let len = idx.len();
        for (j, i) in idx.into_iter().enumerate() {
            pairs[i].split = if (j + offset) % 2 == 0 {
                Split::Train
            } else {
                Split::Test
            };
        }
        offset += len;
    }
}

/// Parameters of the synthetic imbalanced benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n: usize,
    pub d: usize,
    /// Defaults to 39/2200, the change share of the Jefferson benchmark.
    pub positive_fraction: f64,
    /// Number of "irrelevant change" clusters the negatives come from.
    pub negative_clusters: usize,
    /// Standard deviation of negative cluster centers.
    pub cluster_separation: f64,
    pub cluster_std: f64,
    /// Distance from the anchoring negative center to the change cluster.
    pub positive_offset: f64,
    pub positive_std: f64,
    /// Side of the rendered pseudo-patches.
    pub patch_size: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 2200,
            d: 32,
            positive_fraction: 39.0 / 2200.0,
            negative_clusters: 3,
            cluster_separation: 3.0,
            cluster_std: 1.0,
            positive_offset: 4.0,
            positive_std: 0.5,
            patch_size: 30,
            seed: 0,
        }
    }
}

/// Gaussian-mixture benchmark with rendered pseudo-patches.
///
/// Negatives come from `negative_clusters` clusters; positives from one
/// tight cluster offset from the first negative center. Each pair is also
/// rendered as a flat-textured patch pair (a dark blob marks positives) so
/// the labeling UI has something to show.
pub fn gen_synthetic(config: &SynthConfig) -> Result<PatchPairDataset> {
    let f = config.positive_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::Config(format!("positive fraction must lie in (0, 1), got {f}")));
    }
    if config.n < 4 {
        return Err(Error::Config(format!("need n >= 4, got {}", config.n)));
    }
    if config.d == 0 || config.negative_clusters < 2 || config.patch_size < 4 {
        return Err(Error::Config(
            "need d >= 1, at least 2 negative clusters and patch size >= 4".into(),
        ));
    }
    let n_pos = libm::round(config.n as f64 * f) as usize;
    let n_neg = config.n - n_pos;
    if n_pos / 2 == 0 || n_neg / 2 == 0 {
        return Err(Error::Config(format!(
            "{n_pos} positives / {n_neg} negatives cannot give every split both classes"
        )));
    }

    let mut rng = rng::seeded(config.seed);
    let d = config.d;
    let centers: Vec<Vec<f64>> = (0..config.negative_clusters)
        .map(|_| gaussian_vec(&mut rng, d, config.cluster_separation))
        .collect();
    let mut direction = gaussian_vec(&mut rng, d, 1.0);
    let norm = libm::sqrt(direction.iter().map(|v| v * v).sum::<f64>()).max(1e-12);
    direction.iter_mut().for_each(|v| *v *= config.positive_offset / norm);
    let positive_center: Vec<f64> = centers[0].iter().zip(&direction).map(|(c, o)| c + o).collect();

    let mut labels: Vec<u8> = core::iter::repeat_n(1u8, n_pos)
        .chain(core::iter::repeat_n(0u8, n_neg))
        .collect();
    labels.shuffle(&mut rng);

    let mut features = Matrix::zeros(config.n, d);
    let mut pairs = Vec::with_capacity(config.n);
    for (i, &label) in labels.iter().enumerate() {
        let (cluster, center, spread) = if label == 1 {
            (0, &positive_center, config.positive_std)
        } else {
            let c = rng.random_range(0..config.negative_clusters);
            (c, &centers[c], config.cluster_std)
        };
        let noise = gaussian_vec(&mut rng, d, spread);
        for (j, (c, e)) in center.iter().zip(&noise).enumerate() {
            features.set(i, j, c + e);
        }
        let (p, q) = render_pair(&mut rng, config.patch_size, cluster, label == 1);
        pairs.push(PatchPair {
            id: i,
            p,
            q,
            label: Some(label),
            split: Split::Train,
        });
    }
    split_evenly(&mut pairs, rng::derive_seed(config.seed, 1));

    Ok(PatchPairDataset {
        pairs,
        feature_mode: FeatureMode::Concat,
        geometry: Geometry {
            height: config.patch_size,
            width: config.patch_size,
            channels: 3,
            stride: config.patch_size,
        },
        provenance: format!(
            "synthetic: n={} d={} positives={} clusters={} seed={}",
            config.n, d, n_pos, config.negative_clusters, config.seed
        ),
        features: Some(features),
    })
}

fn gaussian_vec(rng: &mut rng::EngineRng, d: usize, scale: f64) -> Vec<f64> {
    (0..d)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * scale
        })
        .collect()
}

fn render_pair(rng: &mut rng::EngineRng, size: usize, cluster: usize, changed: bool) -> (Patch, Patch) {
    const PALETTE: [[f64; 3]; 4] = [
        [96.0, 128.0, 72.0],
        [150.0, 140.0, 120.0],
        [70.0, 90.0, 110.0],
        [180.0, 170.0, 150.0],
    ];
    let base = PALETTE[cluster % PALETTE.len()];
    let texture = Normal::new(0.0, 6.0).expect("valid texture scale");
    // irrelevant radiometric shift between acquisitions
    let shift = rng.random_range(-20.0..20.0);
    let (cy, cx) = (rng.random_range(0..size), rng.random_range(0..size));
    let radius = (size / 4).max(1) as f64;
    let mut p = Patch::filled(size, size, 3, 0);
    let mut q = Patch::filled(size, size, 3, 0);
    for y in 0..size {
        for x in 0..size {
            let in_blob = changed && {
                let (dy, dx) = (y as f64 - cy as f64, x as f64 - cx as f64);
                dy * dy + dx * dx <= radius * radius
            };
            for c in 0..3 {
                let t = texture.sample(rng);
                let at = (y * size + x) * 3 + c;
                p.data[at] = (base[c] + t).clamp(0.0, 255.0) as u8;
                let later = if in_blob { 35.0 + t } else { base[c] + t + shift };
                q.data[at] = later.clamp(0.0, 255.0) as u8;
            }
        }
    }
    (p, q)
}

/// Standardized feature view of a dataset with its train/test partition.
///
/// Indices used by sessions and samplers are positions into `features`;
/// `ids` maps them back to pair ids.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub features: Matrix,
    pub ids: Vec<usize>,
    pub labels: Vec<Option<u8>>,
    pub train_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
}

impl PreparedData {
    /// Features are standardized per dimension with training-half
    /// statistics (constant dimensions are only centered).
    pub fn from_dataset(dataset: &PatchPairDataset) -> Result<Self> {
        dataset.validate()?;
        let raw = dataset.feature_matrix()?;
        let train_ids: Vec<usize> = (0..dataset.len())
            .filter(|&i| dataset.pairs[i].split == Split::Train)
            .collect();
        let test_ids: Vec<usize> = (0..dataset.len())
            .filter(|&i| dataset.pairs[i].split == Split::Test)
            .collect();
        if train_ids.is_empty() {
            return Err(Error::Dataset("training half is empty".into()));
        }
        let (mean, std) = raw.select_rows(&train_ids).col_mean_std();
        let features = Matrix::from_fn(raw.rows(), raw.cols(), |r, c| {
            let s = if std[c] > 1e-12 { std[c] } else { 1.0 };
            (raw.get(r, c) - mean[c]) / s
        });
        Ok(Self {
            features,
            ids: dataset.pairs.iter().map(|p| p.id).collect(),
            labels: dataset.pairs.iter().map(|p| p.label).collect(),
            train_ids,
            test_ids,
        })
    }

    /// Dataset size |𝕀| (both halves).
    pub fn total(&self) -> usize {
        self.features.rows()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn has_test_ground_truth(&self) -> bool {
        let labels: Vec<u8> = self.test_ids.iter().filter_map(|&i| self.labels[i]).collect();
        labels.len() == self.test_ids.len() && labels.contains(&0) && labels.contains(&1)
    }

    pub fn has_train_ground_truth(&self) -> bool {
        self.train_ids.iter().all(|&i| self.labels[i].is_some())
    }

    pub fn labels_of(&self, positions: &[usize]) -> Result<Vec<u8>> {
        positions
            .iter()
            .map(|&i| {
                self.labels[i].ok_or_else(|| Error::Dataset(format!("pair {} has no ground-truth label", self.ids[i])))
            })
            .collect()
    }

    /// Test-half EER of `model`, scoring by `P(change)`.
    pub fn test_eer(&self, model: &ClassifierModel) -> Result<f64> {
        let labels = self.labels_of(&self.test_ids)?;
        let scores = model.change_scores(&self.features.select_rows(&self.test_ids))?;
        compute_eer(&scores, &labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient_image(h: usize, w: usize, salt: u8) -> Image {
        let data = (0..h * w * 3)
            .map(|i| (i as u8).wrapping_mul(7).wrapping_add(salt))
            .collect();
        Patch::new(h, w, 3, data).unwrap()
    }

    #[test]
    fn tiling_counts() {
        let a = gradient_image(60, 60, 0);
        let b = gradient_image(60, 60, 1);
        assert_eq!(extract_patches(&a, &b, 30, 30, None).unwrap().len(), 4);
        let a = gradient_image(59, 60, 0);
        let b = gradient_image(59, 60, 1);
        assert_eq!(extract_patches(&a, &b, 30, 30, None).unwrap().len(), 2);
        assert_eq!(tile_count(2400, 30, 30) * tile_count(1652, 30, 30), 4400);
    }

    #[test]
    fn tiling_respects_mask_and_alignment() {
        let a = gradient_image(60, 90, 0);
        let b = gradient_image(60, 90, 1);
        let keep = |r: usize, c: usize| r == 1 || c == 0;
        let ds = extract_patches(&a, &b, 30, 30, Some(&keep)).unwrap();
        assert_eq!(ds.len(), 4);
        // second tile of the kept set is grid cell (1, 0): rows 30.., cols 0..
        assert_eq!(ds.pairs[1].p.data[0], a.data[a.offset(30, 0)]);
        assert_eq!(ds.pairs[1].q.data[0], b.data[b.offset(30, 0)]);
        let c = gradient_image(61, 90, 0);
        assert!(matches!(extract_patches(&a, &c, 30, 30, None), Err(Error::Dataset(_))));
        assert!(matches!(extract_patches(&a, &b, 30, 20, None), Err(Error::Config(_))));
    }

    #[test]
    fn tile_count_matches_loop_oracle() {
        let mut rng = rng::seeded(4);
        for _ in 0..50 {
            let (h, w) = (rng.random_range(1..200), rng.random_range(1..200));
            let patch = rng.random_range(1..40);
            let stride = patch + rng.random_range(0..5);
            let mut count = 0;
            let mut y = 0;
            while y + patch <= h {
                let mut x = 0;
                while x + patch <= w {
                    count += 1;
                    x += stride;
                }
                y += stride;
            }
            assert_eq!(tile_count(h, patch, stride) * tile_count(w, patch, stride), count);
        }
    }

    #[test]
    fn featurize_modes() {
        let p = Patch::new(30, 30, 3, vec![10; 2700]).unwrap();
        let pair = PatchPair {
            id: 0,
            p: p.clone(),
            q: p,
            label: None,
            split: Split::Train,
        };
        assert_eq!(featurize(&pair, FeatureMode::Concat).unwrap().len(), 5400);
        assert!(featurize(&pair, FeatureMode::Diff).unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(featurize(&pair, FeatureMode::ConcatDiff).unwrap().len(), 8100);
        assert!("bogus".parse::<FeatureMode>().is_err());
    }

    #[test]
    fn concat_round_trips() {
        let a = gradient_image(4, 5, 3);
        let b = gradient_image(4, 5, 9);
        let pair = PatchPair {
            id: 0,
            p: a.clone(),
            q: b.clone(),
            label: None,
            split: Split::Train,
        };
        let geom = Geometry {
            height: 4,
            width: 5,
            channels: 3,
            stride: 5,
        };
        let f = featurize(&pair, FeatureMode::Concat).unwrap();
        assert_eq!(unflatten_concat(&f, &geom).unwrap(), (a, b));
    }

    #[test]
    fn synthetic_counts() {
        let ds = gen_synthetic(&SynthConfig::default()).unwrap();
        let pos = ds.pairs.iter().filter(|p| p.label == Some(1)).count();
        assert_eq!(pos, 39);
        assert_eq!(ds.len() - pos, 2161);
        let small = gen_synthetic(&SynthConfig {
            n: 100,
            positive_fraction: 0.5,
            patch_size: 8,
            ..SynthConfig::default()
        })
        .unwrap();
        assert_eq!(small.pairs.iter().filter(|p| p.label == Some(1)).count(), 50);
    }

    #[test]
    fn synthetic_split_is_stratified() {
        let ds = gen_synthetic(&SynthConfig::default()).unwrap();
        let count = |split, label| {
            ds.pairs
                .iter()
                .filter(|p| p.split == split && p.label == Some(label))
                .count() as i64
        };
        assert!((count(Split::Train, 1) - count(Split::Test, 1)).abs() <= 1);
        assert!((count(Split::Train, 0) - count(Split::Test, 0)).abs() <= 1);
        assert_eq!(ds.pairs.iter().filter(|p| p.split == Split::Train).count(), 1100);
    }

    #[test]
    fn synthetic_is_deterministic() {
        let cfg = SynthConfig {
            n: 50,
            positive_fraction: 0.2,
            patch_size: 6,
            seed: 7,
            ..SynthConfig::default()
        };
        assert_eq!(gen_synthetic(&cfg).unwrap(), gen_synthetic(&cfg).unwrap());
    }

    #[test]
    fn synthetic_rejects_degenerate_fractions() {
        for f in [0.0, 1.0, 0.001] {
            let cfg = SynthConfig {
                n: 100,
                positive_fraction: f,
                ..SynthConfig::default()
            };
            assert!(matches!(gen_synthetic(&cfg), Err(Error::Config(_))), "{f}");
        }
    }

    #[test]
    fn duplicate_ids_fail_validation() {
        let mut ds = gen_synthetic(&SynthConfig {
            n: 10,
            positive_fraction: 0.4,
            patch_size: 4,
            ..SynthConfig::default()
        })
        .unwrap();
        ds.pairs[3].id = ds.pairs[0].id;
        assert!(matches!(ds.validate(), Err(Error::Dataset(_))));
    }

    #[test]
    fn prepared_features_are_standardized_on_train_half() {
        let ds = gen_synthetic(&SynthConfig {
            n: 200,
            positive_fraction: 0.1,
            patch_size: 4,
            ..SynthConfig::default()
        })
        .unwrap();
        let data = PreparedData::from_dataset(&ds).unwrap();
        let (mean, std) = data.features.select_rows(&data.train_ids).col_mean_std();
        assert!(mean.iter().all(|m| m.abs() < 1e-12));
        assert!(std.iter().all(|s| (s - 1.0).abs() < 1e-12));
        assert_eq!(data.total(), 200);
    }
}
