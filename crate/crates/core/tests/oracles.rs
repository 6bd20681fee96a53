use learnpool_core::codebook::{encode_image, Codebook, EncodedGrid, PatchParams};
use learnpool_core::dataset::{ImageSample, CHANNELS};
use learnpool_core::pooling::{init_quadrant_maps, pool_forward, PoolMapSet};
use learnpool_core::preprocess::{extract_patches, grid_side, WhiteningTransform};
use learnpool_core::verify::{brute_pool, check_quadrant_equivalence};
use learnpool_core::{seeded_rng, Rng};
use rand::Rng as _;

fn random_grid(side: usize, k: usize, rng: &mut Rng) -> EncodedGrid {
    EncodedGrid::new(side, k, (0..side * side * k).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap()
}

fn random_maps(side: usize, rng: &mut Rng) -> PoolMapSet {
    PoolMapSet::new(side, 4, (0..4 * side * side).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

#[test]
fn pool_forward_matches_brute_force() {
    let mut rng = seeded_rng(11);
    for case in 0..100 {
        let side = 1 + case % 9;
        let k = 1 + case % 5;
        let g = random_grid(side, k, &mut rng);
        let maps = random_maps(side, &mut rng);
        let fast = pool_forward(&maps, &g).unwrap();
        let slow = brute_pool(&maps, &g);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "case {case}: {a} vs {b}");
        }
    }
}

#[test]
fn pooling_is_linear_in_the_grid() {
    let mut rng = seeded_rng(12);
    for _ in 0..50 {
        let (side, k) = (6, 3);
        let g1 = random_grid(side, k, &mut rng);
        let g2 = random_grid(side, k, &mut rng);
        let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let mix: Vec<f64> = g1.values().iter().zip(g2.values()).map(|(x, y)| a * x + b * y).collect();
        let g = EncodedGrid::new(side, k, mix).unwrap();
        let maps = random_maps(side, &mut rng);
        let h = pool_forward(&maps, &g).unwrap();
        let h1 = pool_forward(&maps, &g1).unwrap();
        let h2 = pool_forward(&maps, &g2).unwrap();
        for i in 0..h.len() {
            assert!((h[i] - (a * h1[i] + b * h2[i])).abs() < 1e-10);
        }
    }
}

#[test]
fn quadrant_maps_reproduce_quadrant_means() {
    let mut rng = seeded_rng(13);
    for side in [2, 3, 4, 5, 27] {
        for _ in 0..20 {
            let g = random_grid(side, 3, &mut rng);
            assert!(check_quadrant_equivalence(side, &g).unwrap(), "side {side}");
        }
    }
}

#[test]
fn quadrant_maps_sum_to_one() {
    for side in 2..=30 {
        let maps = init_quadrant_maps(side).unwrap();
        for i in 0..4 {
            let total: f64 = maps.map(i).iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn patch_count_matches_enumeration() {
    for n in 1..=16 {
        for w in 1..=n {
            for stride in 1..=4 {
                let mut count = 0;
                let mut top = 0;
                while top + w <= n {
                    let mut left = 0;
                    while left + w <= n {
                        count += 1;
                        left += stride;
                    }
                    top += stride;
                }
                let side = grid_side(n, w, stride).unwrap();
                assert_eq!(side * side, count, "n={n} w={w} s={stride}");
            }
        }
    }
}

#[test]
fn extracted_patches_are_the_pixel_windows() {
    let mut rng = seeded_rng(14);
    let n = 7;
    let pixels: Vec<f64> = (0..CHANNELS * n * n).map(|_| rng.random_range(0.0..255.0)).collect();
    let img = ImageSample::new(n, pixels, 0, 2).unwrap();
    let grid = extract_patches(&img, 3, 2).unwrap();
    assert_eq!(grid.side, 3);
    let p = grid.get(1, 2);
    assert_eq!(p.dim(), 27);
    assert_eq!(p.values()[0], img.pixel(0, 2, 4));
    assert_eq!(p.values()[26], img.pixel(2, 4, 6));
}

/// Straight-line encoder written out step by step.
fn reference_encode(cb: &Codebook, img: &ImageSample, w: usize, eps: f64) -> Vec<f64> {
    let side = img.side() - w + 1;
    let d = CHANNELS * w * w;
    let k = cb.k();
    let white = cb.whitening();
    let mut out = Vec::new();
    for m in 0..side {
        for n in 0..side {
            let mut x = Vec::new();
            for c in 0..CHANNELS {
                for r in 0..w {
                    for s in 0..w {
                        x.push(img.pixel(c, m + r, n + s));
                    }
                }
            }
            let mean = x.iter().sum::<f64>() / d as f64;
            let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d as f64;
            let x: Vec<f64> = x.iter().map(|v| (v - mean) / (var + eps).sqrt()).collect();
            let mut y = vec![0.0; d];
            for (i, yi) in y.iter_mut().enumerate() {
                for (j, xj) in x.iter().enumerate() {
                    *yi += white.matrix[i * d + j] * (xj - white.mean[j]);
                }
            }
            let z: Vec<f64> = (0..k)
                .map(|j| cb.centroid(j).iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
                .collect();
            let mu = z.iter().sum::<f64>() / k as f64;
            out.extend(z.iter().map(|zj| (mu - zj).max(0.0)));
        }
    }
    out
}

#[test]
fn encoder_matches_reference() {
    let mut rng = seeded_rng(15);
    let (n, w, k) = (8, 3, 3);
    let d = CHANNELS * w * w;
    let pixels: Vec<f64> = (0..CHANNELS * n * n).map(|_| rng.random_range(0.0..255.0)).collect();
    let img = ImageSample::new(n, pixels, 1, 2).unwrap();
    let mean: Vec<f64> = (0..d).map(|_| rng.random_range(-0.1..0.1)).collect();
    let matrix: Vec<f64> = (0..d * d).map(|_| rng.random_range(-0.3..0.3)).collect();
    let white = WhiteningTransform::new(mean, matrix, 0.1).unwrap();
    let centroids: Vec<f64> = (0..k * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let cb = Codebook::new(centroids, k, white).unwrap();
    let grid = encode_image(&cb, &img, PatchParams { w, stride: 1, eps_norm: 10.0 }).unwrap();
    assert_eq!(grid.side(), 6);
    let reference = reference_encode(&cb, &img, w, 10.0);
    for (a, b) in grid.values().iter().zip(&reference) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
    // Some but not all triangle features are active.
    assert!(grid.values().iter().any(|&v| v > 0.0));
    assert!(grid.values().contains(&0.0));
}
