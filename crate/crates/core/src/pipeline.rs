//! Seeded augmentation chain, manifest records, group-weighted sampling and
//! the train/validation split.
//!
//! The augmentation order is fixed: letterbox, brightness/contrast, rotation,
//! fisheye, then FDA with probability `fda_probability`. Each item draws its
//! parameters from its own stream seeded by [`crate::rng::mix`]`(seed, index)`
//! in this order: brightness, contrast, angle, k, FDA coin, target pick. All
//! six draws happen whether or not FDA fires.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fda::{fda_transfer, FdaParams, DEFAULT_BETA};
use crate::fisheye::{fisheye, FisheyeParams};
use crate::imaging::{brightness_contrast, resize_pad, rotate, ImageBuffer, Interpolator};
use crate::rng::{index_from_bits, mix, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    /// AMi-Br and the MIDOG atypical training set.
    PrimaryTrain,
    /// OMG-Octo atypical.
    ExternalA,
    /// The external labeled mitosis dataset.
    ExternalB,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::PrimaryTrain, Group::ExternalA, Group::ExternalB];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::PrimaryTrain => "primary_train",
            Group::ExternalA => "external_a",
            Group::ExternalB => "external_b",
        }
    }

    /// Only the primary group is split; external groups always train.
    pub fn is_split(self) -> bool {
        self == Group::PrimaryTrain
    }
}

impl core::str::FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Group::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| invalid!("unknown group {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    pub path: String,
    pub label: usize,
    pub group: Group,
    pub domain: String,
    pub split: Option<Split>,
}

/// Checks id uniqueness and `label < classes`.
pub fn validate_manifest(records: &[ManifestRecord], classes: usize) -> Result<()> {
    let mut seen = BTreeSet::new();
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(invalid!("duplicate manifest id {:?}", r.id));
        }
        if r.label >= classes {
            return Err(invalid!("record {:?} has label {} >= {classes}", r.id, r.label));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub side: usize,
    pub brightness_range: [f64; 2],
    pub contrast_range: [f64; 2],
    pub rotation_range: [f64; 2],
    pub fisheye_range: [f64; 2],
    pub fda_probability: f64,
    pub fda_beta: f64,
    pub target_dir: Option<String>,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            side: 224,
            brightness_range: [-0.2, 0.2],
            contrast_range: [0.8, 1.2],
            rotation_range: [-180.0, 180.0],
            fisheye_range: [-0.9, 0.9],
            fda_probability: 0.5,
            fda_beta: DEFAULT_BETA,
            target_dir: None,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    /// Every range neutral and FDA off: the chain reduces to the letterbox.
    pub fn neutral(side: usize) -> Self {
        Self {
            side,
            brightness_range: [0.0, 0.0],
            contrast_range: [1.0, 1.0],
            rotation_range: [0.0, 0.0],
            fisheye_range: [0.0, 0.0],
            fda_probability: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.side == 0 {
            return Err(invalid!("side must be at least 1"));
        }
        let ranges = [
            ("brightness_range", self.brightness_range),
            ("contrast_range", self.contrast_range),
            ("rotation_range", self.rotation_range),
            ("fisheye_range", self.fisheye_range),
        ];
        for (name, [lo, hi]) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(invalid!("{name} must be a finite interval with lo <= hi"));
            }
        }
        if !(self.contrast_range[0] > 0.0) {
            return Err(invalid!("contrast_range must be positive"));
        }
        if !(self.fisheye_range[0] > -1.0) {
            return Err(invalid!("fisheye_range must lie above -1"));
        }
        if !(0.0..=1.0).contains(&self.fda_probability) {
            return Err(invalid!("fda_probability must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.fda_beta) {
            return Err(invalid!("fda_beta must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// A source of FDA target images, indexed `0..len()`.
pub trait TargetPool {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Display name written to the provenance log.
    fn name(&self, index: usize) -> String;

    fn load(&self, index: usize) -> Result<ImageBuffer>;
}

impl TargetPool for [ImageBuffer] {
    fn len(&self) -> usize {
        <[ImageBuffer]>::len(self)
    }

    fn name(&self, index: usize) -> String {
        index.to_string()
    }

    fn load(&self, index: usize) -> Result<ImageBuffer> {
        Ok(self[index].clone())
    }
}

/// Every random parameter one item used; one line of the provenance log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub id: String,
    pub brightness: f64,
    pub contrast: f64,
    pub angle: f64,
    pub k: f64,
    pub fda_applied: bool,
    pub fda_target: Option<String>,
    pub fda_beta: f64,
}

/// Parameters drawn for one item, before the target is resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrawnParams {
    pub brightness: f64,
    pub contrast: f64,
    pub angle: f64,
    pub k: f64,
    pub fda_applied: bool,
    /// Raw bits for the target pick; reduced modulo the pool size on use.
    pub target_bits: u64,
}

pub fn draw_params(cfg: &AugmentConfig, item_seed: u64) -> DrawnParams {
    let mut s = Stream::new(item_seed);
    let brightness = s.uniform(cfg.brightness_range[0], cfg.brightness_range[1]);
    let contrast = s.uniform(cfg.contrast_range[0], cfg.contrast_range[1]);
    let angle = s.uniform(cfg.rotation_range[0], cfg.rotation_range[1]);
    let k = s.uniform(cfg.fisheye_range[0], cfg.fisheye_range[1]);
    let fda_applied = s.next_unit() < cfg.fda_probability;
    let target_bits = s.next_u64();
    DrawnParams {
        brightness,
        contrast,
        angle,
        k,
        fda_applied,
        target_bits,
    }
}

/// Runs the augmentation chain for one item.
pub fn augment_one<P: TargetPool + ?Sized>(
    img: &ImageBuffer,
    id: &str,
    cfg: &AugmentConfig,
    item_seed: u64,
    targets: &P,
) -> Result<(ImageBuffer, Provenance)> {
    cfg.validate()?;
    let drawn = draw_params(cfg, item_seed);
    let mut out = resize_pad(img, cfg.side)?;
    out = brightness_contrast(&out, drawn.brightness, drawn.contrast)?;
    out = rotate(&out, drawn.angle, Interpolator::CLAMP)?;
    out = fisheye(&out, FisheyeParams::new(drawn.k))?;
    let mut fda_target = None;
    if drawn.fda_applied {
        if targets.is_empty() {
            return Err(Error::MissingTargets);
        }
        let pick = index_from_bits(drawn.target_bits, targets.len());
        let target = targets.load(pick)?;
        out = fda_transfer(
            &out,
            &FdaParams {
                beta: cfg.fda_beta,
                target,
            },
        )?;
        fda_target = Some(targets.name(pick));
    }
    let provenance = Provenance {
        id: id.to_string(),
        brightness: drawn.brightness,
        contrast: drawn.contrast,
        angle: drawn.angle,
        k: drawn.k,
        fda_applied: drawn.fda_applied,
        fda_target,
        fda_beta: cfg.fda_beta,
    };
    Ok((out, provenance))
}

/// Item `index` of a run: [`augment_one`] with seed `mix(cfg.seed, index)`.
pub fn augment_item<P: TargetPool + ?Sized>(
    img: &ImageBuffer,
    id: &str,
    cfg: &AugmentConfig,
    index: u64,
    targets: &P,
) -> Result<(ImageBuffer, Provenance)> {
    augment_one(img, id, cfg, mix(cfg.seed, index), targets)
}

/// Per-group sampling weight applied to every member record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupWeights {
    pub weights: BTreeMap<Group, f64>,
}

impl Default for GroupWeights {
    fn default() -> Self {
        Self::new([1.0, 0.15, 0.15]).expect("default weights are positive")
    }
}

impl GroupWeights {
    /// Weights for primary_train, external_a, external_b, in that order.
    pub fn new(weights: [f64; 3]) -> Result<Self> {
        Self::from_pairs(Group::ALL.into_iter().zip(weights))
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Group, f64)>) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for (g, w) in pairs {
            if !(w > 0.0 && w.is_finite()) {
                return Err(invalid!("weight for {} must be positive, got {w}", g.as_str()));
            }
            weights.insert(g, w);
        }
        Ok(Self { weights })
    }

    pub fn get(&self, group: Group) -> Option<f64> {
        self.weights.get(&group).copied()
    }

    /// Per-draw selection probability of each record.
    pub fn record_probabilities(&self, records: &[ManifestRecord]) -> Result<Vec<f64>> {
        let mut per_record = Vec::with_capacity(records.len());
        for r in records {
            let w = self
                .get(r.group)
                .ok_or_else(|| invalid!("no sampling weight for group {}", r.group.as_str()))?;
            per_record.push(w);
        }
        let total: f64 = per_record.iter().sum();
        Ok(per_record.into_iter().map(|w| w / total).collect())
    }
}

/// `n` draws with replacement; returns record indices.
///
/// Each draw takes one unit `u` from a stream seeded with `seed` and picks the
/// first record whose cumulative weight exceeds `u * total`.
pub fn weighted_sample_indices(
    records: &[ManifestRecord],
    gw: &GroupWeights,
    n: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if records.is_empty() {
        return Err(invalid!("cannot sample from an empty manifest"));
    }
    if n == 0 {
        return Err(invalid!("sample count must be at least 1"));
    }
    let mut cumulative = Vec::with_capacity(records.len());
    let mut total = 0.0;
    for r in records {
        total += gw
            .get(r.group)
            .ok_or_else(|| invalid!("no sampling weight for group {}", r.group.as_str()))?;
        cumulative.push(total);
    }
    let mut s = Stream::new(seed);
    Ok((0..n)
        .map(|_| {
            let target = s.next_unit() * total;
            cumulative.partition_point(|&c| c <= target).min(records.len() - 1)
        })
        .collect())
}

/// `n` weighted draws with replacement; returns record ids.
pub fn weighted_sample(
    records: &[ManifestRecord],
    gw: &GroupWeights,
    n: usize,
    seed: u64,
) -> Result<Vec<String>> {
    Ok(weighted_sample_indices(records, gw, n, seed)?
        .into_iter()
        .map(|i| records[i].id.clone())
        .collect())
}

/// Splits the primary group `ratio : 1 - ratio` into train/val.
///
/// Primary records are shuffled (Fisher-Yates on a stream seeded with
/// `seed`); the first `ceil(ratio * n)` become train. External records always
/// go to train. Both lists keep manifest order and carry their `split` field.
pub fn split_manifest(
    records: &[ManifestRecord],
    ratio: f64,
    seed: u64,
) -> Result<(Vec<ManifestRecord>, Vec<ManifestRecord>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(invalid!("split ratio must lie in (0, 1), got {ratio}"));
    }
    let mut primary: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].group.is_split())
        .collect();
    let mut s = Stream::new(seed);
    for i in (1..primary.len()).rev() {
        let j = s.index(i + 1);
        primary.swap(i, j);
    }
    // Guard against ratio * n landing a hair above an integer.
    let n_train = libm::ceil(ratio * primary.len() as f64 - 1e-9) as usize;
    let val: BTreeSet<usize> = primary[n_train.min(primary.len())..].iter().copied().collect();

    let mut train = Vec::new();
    let mut held_out = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let mut r = r.clone();
        if val.contains(&i) {
            r.split = Some(Split::Val);
            held_out.push(r);
        } else {
            r.split = Some(Split::Train);
            train.push(r);
        }
    }
    Ok((train, held_out))
}
