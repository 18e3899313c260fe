use mitoforge_core::fda::{fda_transfer, FdaParams};
use mitoforge_core::fisheye::{fisheye, FisheyeParams};
use mitoforge_core::imaging::{brightness_contrast, resize_pad, rotate, ImageBuffer, Interpolator};
use mitoforge_core::pipeline::{
    augment_item, augment_one, split_manifest, weighted_sample_indices, AugmentConfig, Group, GroupWeights,
    ManifestRecord, Split,
};
use mitoforge_core::rng::{mix, Stream};
use mitoforge_core::Error;

fn records(per_group: usize) -> Vec<ManifestRecord> {
    Group::ALL
        .iter()
        .flat_map(|&group| {
            (0..per_group).map(move |i| ManifestRecord {
                id: format!("{}-{i}", group.as_str()),
                path: format!("{i}.png"),
                label: i % 2,
                group,
                domain: String::new(),
                split: None,
            })
        })
        .collect()
}

fn noise(h: usize, w: usize, seed: u64) -> ImageBuffer {
    let mut s = Stream::new(seed);
    ImageBuffer::from_fn(h, w, |_, _| [s.next_unit(), s.next_unit(), s.next_unit()])
}

#[test]
fn sampler_frequencies_follow_group_weights() {
    let recs = records(10);
    let draws = 100_000;
    let picks = weighted_sample_indices(&recs, &GroupWeights::default(), draws, 42).unwrap();
    let mut counts = [0usize; 3];
    for i in picks {
        counts[i / 10] += 1;
    }
    let expected = [1.0 / 1.3, 0.15 / 1.3, 0.15 / 1.3];
    let mut chi2 = 0.0;
    for g in 0..3 {
        let freq = counts[g] as f64 / draws as f64;
        assert!((freq - expected[g]).abs() < 0.01, "group {g}: {freq}");
        let e = expected[g] * draws as f64;
        chi2 += (counts[g] as f64 - e).powi(2) / e;
    }
    // upper 0.001 quantile of chi-square with two degrees of freedom: -2 ln 0.001
    assert!(chi2 < -2.0 * 0.001f64.ln(), "chi2 {chi2}");
}

#[test]
fn sampler_is_reproducible_and_seed_sensitive() {
    let recs = records(4);
    let gw = GroupWeights::new([1.0, 0.5, 2.0]).unwrap();
    let a = weighted_sample_indices(&recs, &gw, 500, 3).unwrap();
    assert_eq!(a, weighted_sample_indices(&recs, &gw, 500, 3).unwrap());
    assert_ne!(a, weighted_sample_indices(&recs, &gw, 500, 4).unwrap());
}

#[test]
fn missing_group_weight_is_rejected() {
    let recs = records(2);
    let gw = GroupWeights::from_pairs([(Group::PrimaryTrain, 1.0)]).unwrap();
    assert!(matches!(weighted_sample_indices(&recs, &gw, 3, 0), Err(Error::InvalidInput(_))));
}

#[test]
fn provenance_replays_the_chain() {
    let cfg = AugmentConfig {
        side: 24,
        fda_probability: 1.0,
        fda_beta: 0.2,
        seed: 77,
        ..AugmentConfig::default()
    };
    let targets = vec![noise(24, 24, 5)];
    for index in 0..8u64 {
        let img = noise(30, 18, index);
        let (out, prov) = augment_item(&img, "x", &cfg, index, targets.as_slice()).unwrap();
        assert!(prov.fda_applied);
        assert_eq!(prov.fda_target.as_deref(), Some("0"));

        let mut replay = resize_pad(&img, 24).unwrap();
        replay = brightness_contrast(&replay, prov.brightness, prov.contrast).unwrap();
        replay = rotate(&replay, prov.angle, Interpolator::CLAMP).unwrap();
        replay = fisheye(&replay, FisheyeParams::new(prov.k)).unwrap();
        replay = fda_transfer(
            &replay,
            &FdaParams {
                beta: prov.fda_beta,
                target: targets[0].clone(),
            },
        )
        .unwrap();
        assert_eq!(replay, out);
    }
}

#[test]
fn item_results_do_not_depend_on_processing_order() {
    let cfg = AugmentConfig {
        side: 16,
        seed: 5,
        ..AugmentConfig::default()
    };
    let targets = vec![noise(16, 16, 1), noise(20, 12, 2)];
    let imgs: Vec<_> = (0..6).map(|i| noise(16, 16, 100 + i)).collect();
    let forward: Vec<_> = (0..6)
        .map(|i| augment_item(&imgs[i], "x", &cfg, i as u64, targets.as_slice()).unwrap())
        .collect();
    for i in (0..6).rev() {
        let again = augment_item(&imgs[i], "x", &cfg, i as u64, targets.as_slice()).unwrap();
        assert_eq!(again, forward[i]);
    }
    let (_, p0) = &forward[0];
    let (_, p1) = &forward[1];
    assert_ne!(p0.angle, p1.angle);
}

#[test]
fn item_seed_is_mixed_from_run_seed_and_index() {
    let cfg = AugmentConfig {
        side: 8,
        fda_probability: 0.0,
        seed: 11,
        ..AugmentConfig::default()
    };
    let img = noise(8, 8, 0);
    let empty: Vec<ImageBuffer> = Vec::new();
    let a = augment_item(&img, "i", &cfg, 3, empty.as_slice()).unwrap();
    let b = augment_one(&img, "i", &cfg, mix(11, 3), empty.as_slice()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fda_without_targets_is_an_error() {
    let cfg = AugmentConfig {
        side: 8,
        fda_probability: 1.0,
        ..AugmentConfig::default()
    };
    let empty: Vec<ImageBuffer> = Vec::new();
    let res = augment_item(&noise(8, 8, 0), "i", &cfg, 0, empty.as_slice());
    assert!(matches!(res, Err(Error::MissingTargets)));
}

#[test]
fn neutral_config_reduces_to_letterbox() {
    let img = noise(20, 11, 9);
    let empty: Vec<ImageBuffer> = Vec::new();
    let (out, prov) = augment_item(&img, "n", &AugmentConfig::neutral(16), 0, empty.as_slice()).unwrap();
    assert_eq!(out, resize_pad(&img, 16).unwrap());
    assert!(!prov.fda_applied && prov.fda_target.is_none());
}

#[test]
fn split_partitions_primary_and_keeps_externals_in_train() {
    let recs = records(10);
    let (train, val) = split_manifest(&recs, 0.8, 1).unwrap();
    assert_eq!(train.len() + val.len(), recs.len());
    assert_eq!(val.len(), 2);
    assert!(val.iter().all(|r| r.group == Group::PrimaryTrain && r.split == Some(Split::Val)));
    assert!(train.iter().all(|r| r.split == Some(Split::Train)));
    assert_eq!(train.iter().filter(|r| r.group != Group::PrimaryTrain).count(), 20);
    let again = split_manifest(&recs, 0.8, 1).unwrap();
    assert_eq!((train, val), again);
}
