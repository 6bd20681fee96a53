use learnpool_core::codebook::{train_kmeans, triangle_from_distances};
use learnpool_core::dataset::{decode_cifar_records, encode_cifar_record, split, ImageSample, CHANNELS};
use learnpool_core::preprocess::{fit_whitening, mean_and_covariance, normalize_patch, Patch};
use learnpool_core::seeded_rng;
use proptest::prelude::*;
use rand::Rng as _;

fn samples(count: usize, side: usize) -> Vec<ImageSample> {
    (0..count)
        .map(|i| ImageSample::new(side, vec![(i % 256) as f64; CHANNELS * side * side], i % 10, 10).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalized_patch_has_zero_mean(values in prop::collection::vec(0.0f64..255.0, 12..48)) {
        let p = normalize_patch(&Patch(values.clone()), 10.0);
        let d = values.len() as f64;
        let mean = p.values().iter().sum::<f64>() / d;
        prop_assert!(mean.abs() < 1e-9);
        // Variance is v / (v + eps) for raw variance v.
        let raw_mean = values.iter().sum::<f64>() / d;
        let v = values.iter().map(|x| (x - raw_mean).powi(2)).sum::<f64>() / d;
        let var = p.values().iter().map(|x| x * x).sum::<f64>() / d;
        prop_assert!((var - v / (v + 10.0)).abs() < 1e-9);
    }

    #[test]
    fn normalization_ignores_brightness_shift(values in prop::collection::vec(0.0f64..200.0, 12), shift in -50.0f64..50.0) {
        let a = normalize_patch(&Patch(values.clone()), 10.0);
        let b = normalize_patch(&Patch(values.iter().map(|v| v + shift).collect()), 10.0);
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn split_is_a_partition(count in 2usize..200, fraction in 0.05f64..0.95, seed in any::<u64>()) {
        let s = split(&samples(count, 2), fraction, seed).unwrap();
        let mut all: Vec<usize> = s.train_indices.iter().chain(&s.validation_indices).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..count).collect::<Vec<_>>());
        prop_assert_eq!(s.train.len(), (fraction * count as f64).floor() as usize);
        prop_assert_eq!(&split(&samples(count, 2), fraction, seed).unwrap(), &s);
    }

    #[test]
    fn cifar_records_round_trip(pixels in prop::collection::vec(any::<u8>(), CHANNELS * 16), label in 0usize..10) {
        let img = ImageSample::new(4, pixels.iter().map(|&b| f64::from(b)).collect(), label, 10).unwrap();
        let mut bytes = Vec::new();
        encode_cifar_record(&img, &mut bytes).unwrap();
        prop_assert_eq!(bytes.len(), 1 + CHANNELS * 16);
        prop_assert_eq!(bytes[0] as usize, label);
        prop_assert_eq!(&bytes[1..], &pixels[..]);
        let back = decode_cifar_records(&bytes, 4, 10).unwrap();
        prop_assert_eq!(&back[0], &img);
    }

    #[test]
    fn triangle_commutes_with_permutation(distances in prop::collection::vec(0.0f64..10.0, 2..12), seed in any::<u64>()) {
        let k = distances.len();
        let mut perm: Vec<usize> = (0..k).collect();
        let mut rng = seeded_rng(seed);
        for i in (1..k).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let permuted: Vec<f64> = perm.iter().map(|&j| distances[j]).collect();
        let mut a = vec![0.0; k];
        let mut b = vec![0.0; k];
        triangle_from_distances(&distances, &mut a);
        triangle_from_distances(&permuted, &mut b);
        for (i, &j) in perm.iter().enumerate() {
            prop_assert!((b[i] - a[j]).abs() < 1e-12);
        }
        prop_assert!(a.iter().all(|&v| v >= 0.0));
        // At least one distance is at or above the mean.
        prop_assert!(a.contains(&0.0));
    }

    #[test]
    fn kmeans_objective_never_increases(seed in any::<u64>(), k in 1usize..6) {
        let mut rng = seeded_rng(seed);
        let patches: Vec<Patch> = (0..60)
            .map(|_| Patch((0..4).map(|_| rng.random_range(-3.0..3.0)).collect()))
            .collect();
        let km = train_kmeans(&patches, k, 20, seed).unwrap();
        for pair in km.objective.windows(2) {
            prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-12) + 1e-12);
        }
    }
}

#[test]
fn whitened_covariance_is_near_identity() {
    let mut rng = seeded_rng(5);
    let d = 6;
    let mixing: Vec<f64> = (0..d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let patches: Vec<Patch> = (0..4000)
        .map(|_| {
            let z: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            Patch((0..d).map(|i| (0..d).map(|j| mixing[i * d + j] * z[j]).sum()).collect())
        })
        .collect();
    let eps = 1e-9;
    let t = fit_whitening(&patches, eps).unwrap();
    let white: Vec<Patch> = patches.iter().map(|p| t.apply(p).unwrap()).collect();
    let (_, cov) = mean_and_covariance(&white).unwrap();
    for i in 0..d {
        for j in 0..d {
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((cov[i * d + j] - expected).abs() < 1e-6, "({i},{j}) = {}", cov[i * d + j]);
        }
    }
}
