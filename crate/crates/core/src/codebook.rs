//! k-means codebook learning and triangle encoding of the dense patch grid.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::dataset::ImageSample;
use crate::preprocess::{self, grid_side, normalize_in_place, patch_dim, Patch, WhiteningTransform};
use crate::{par, seeded_rng, Error, Result};

/// `k` centroids in whitened patch space plus the transform that defines it.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    /// `k×d`, row-major.
    centroids: Vec<f64>,
    k: usize,
    whitening: WhiteningTransform,
}

impl Codebook {
    pub fn new(centroids: Vec<f64>, k: usize, whitening: WhiteningTransform) -> Result<Self> {
        let d = whitening.dim();
        if k < 1 || centroids.len() != k * d {
            return Err(Error::argument(format!(
                "codebook needs k >= 1 and k*d = {} centroid values, got k={k} and {}",
                k * d,
                centroids.len()
            )));
        }
        if centroids.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite centroid value".into()));
        }
        Ok(Self { centroids, k, whitening })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.whitening.dim()
    }

    pub fn centroids(&self) -> &[f64] {
        &self.centroids
    }

    pub fn centroid(&self, j: usize) -> &[f64] {
        let d = self.dim();
        &self.centroids[j * d..(j + 1) * d]
    }

    pub fn whitening(&self) -> &WhiteningTransform {
        &self.whitening
    }
}

/// Mid-level representation `g`: a `P×P×k` grid, index `(m·P + n)·k + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedGrid {
    side: usize,
    k: usize,
    values: Vec<f64>,
}

impl EncodedGrid {
    pub fn new(side: usize, k: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != side * side * k {
            return Err(Error::argument(format!(
                "grid {side}x{side}x{k} needs {} values, got {}",
                side * side * k,
                values.len()
            )));
        }
        Ok(Self { side, k, values })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, m: usize, n: usize, c: usize) -> f64 {
        self.values[(m * self.side + n) * self.k + c]
    }

    /// The `k` codes of cell `(m, n)`.
    pub fn cell(&self, m: usize, n: usize) -> &[f64] {
        let start = (m * self.side + n) * self.k;
        &self.values[start..start + self.k]
    }
}

/// Result of Lloyd's algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    /// `k×d`, row-major.
    pub centroids: Vec<f64>,
    pub k: usize,
    pub dim: usize,
    /// Sum of squared distances to the nearest centroid after each
    /// assignment step, first entry measured at initialization.
    pub objective: Vec<f64>,
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[f64], d: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.chunks_exact(d).enumerate() {
        let dist = sq_dist(point, c);
        if dist < best.1 {
            best = (j, dist);
        }
    }
    best
}

/// Lloyd's k-means.
///
/// Initialized from `k` patches with distinct values drawn uniformly without
/// replacement. A centroid that loses all its members is moved onto the patch
/// farthest from its own centroid. Stops after `iters` updates or when the
/// assignment no longer changes.
pub fn train_kmeans(patches: &[Patch], k: usize, iters: usize, seed: u64) -> Result<KMeans> {
    if k == 0 {
        return Err(Error::argument("k must be at least 1"));
    }
    if patches.len() < k {
        return Err(Error::argument(format!("k-means needs at least k={k} patches, got {}", patches.len())));
    }
    if iters == 0 {
        return Err(Error::argument("k-means needs at least one iteration"));
    }
    let d = patches[0].dim();
    if patches.iter().any(|p| p.dim() != d) {
        return Err(Error::argument("mixed patch dimensions"));
    }

    let mut order: Vec<usize> = (0..patches.len()).collect();
    order.shuffle(&mut seeded_rng(seed));
    let mut centroids = Vec::with_capacity(k * d);
    let mut chosen = 0;
    for &i in &order {
        let p = patches[i].values();
        if centroids.chunks_exact(d).any(|c: &[f64]| c == p) {
            continue;
        }
        centroids.extend_from_slice(p);
        chosen += 1;
        if chosen == k {
            break;
        }
    }
    if chosen < k {
        return Err(Error::argument(format!("only {chosen} distinct patches available for k={k}")));
    }

    let assign = |centroids: &[f64]| -> Vec<(usize, f64)> {
        par::map_indexed(patches.len(), |i| nearest(patches[i].values(), centroids, d))
    };

    let mut assignment = assign(&centroids);
    let mut objective = vec![assignment.iter().map(|a| a.1).sum::<f64>()];
    for _ in 0..iters {
        let mut sums = vec![0.0; k * d];
        let mut counts = vec![0usize; k];
        for (p, &(j, _)) in patches.iter().zip(&assignment) {
            counts[j] += 1;
            for (s, v) in sums[j * d..(j + 1) * d].iter_mut().zip(p.values()) {
                *s += v;
            }
        }
        let mut taken = vec![false; patches.len()];
        for j in 0..k {
            let target = &mut centroids[j * d..(j + 1) * d];
            if counts[j] > 0 {
                let inv = 1.0 / counts[j] as f64;
                for (c, s) in target.iter_mut().zip(&sums[j * d..(j + 1) * d]) {
                    *c = s * inv;
                }
            } else {
                let far = assignment.iter().enumerate().filter(|(i, _)| !taken[*i]).fold(
                    None::<(usize, f64)>,
                    |best, (i, a)| match best {
                        Some((_, bd)) if bd >= a.1 => best,
                        _ => Some((i, a.1)),
                    },
                );
                if let Some((i, _)) = far {
                    taken[i] = true;
                    target.copy_from_slice(patches[i].values());
                }
            }
        }
        let next = assign(&centroids);
        let changed = next.iter().zip(&assignment).any(|(a, b)| a.0 != b.0);
        objective.push(next.iter().map(|a| a.1).sum::<f64>());
        assignment = next;
        if !changed {
            break;
        }
    }
    Ok(KMeans { centroids, k, dim: d, objective })
}

/// Triangle activation `max(0, mean(z) − z_j)` with `z_j` the Euclidean
/// distance to centroid `j`.
pub fn triangle_from_distances(distances: &[f64], out: &mut [f64]) {
    let mean = distances.iter().sum::<f64>() / distances.len() as f64;
    for (o, z) in out.iter_mut().zip(distances) {
        *o = (mean - z).max(0.0);
    }
}

pub fn triangle_encode(cb: &Codebook, patch: &Patch) -> Vec<f64> {
    let distances: Vec<f64> = (0..cb.k()).map(|j| libm::sqrt(sq_dist(patch.values(), cb.centroid(j)))).collect();
    let mut out = vec![0.0; cb.k()];
    triangle_from_distances(&distances, &mut out);
    out
}

/// Patch geometry and normalization shared by encoding and codebook learning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchParams {
    pub w: usize,
    pub stride: usize,
    pub eps_norm: f64,
}

/// extract → normalize → whiten → triangle at every grid cell.
pub fn encode_image(cb: &Codebook, image: &ImageSample, params: PatchParams) -> Result<EncodedGrid> {
    let PatchParams { w, stride, eps_norm } = params;
    let side = grid_side(image.side(), w, stride)?;
    if patch_dim(w) != cb.dim() {
        return Err(Error::argument(format!(
            "patch dimension {} does not match codebook dimension {}",
            patch_dim(w),
            cb.dim()
        )));
    }
    let k = cb.k();
    let mut values = vec![0.0; side * side * k];
    let mut window = Vec::with_capacity(cb.dim());
    let mut scratch = Vec::with_capacity(cb.dim());
    let mut white = Vec::with_capacity(cb.dim());
    let mut distances = vec![0.0; k];
    for m in 0..side {
        for n in 0..side {
            preprocess::window_into(image, w, m * stride, n * stride, &mut window);
            normalize_in_place(&mut window, eps_norm);
            cb.whitening().apply_into(&window, &mut scratch, &mut white);
            for (j, z) in distances.iter_mut().enumerate() {
                *z = libm::sqrt(sq_dist(&white, cb.centroid(j)));
            }
            let start = (m * side + n) * k;
            triangle_from_distances(&distances, &mut values[start..start + k]);
        }
    }
    EncodedGrid::new(side, k, values)
}

/// Encodes many images; output order matches input order.
pub fn encode_images(cb: &Codebook, images: &[&ImageSample], params: PatchParams) -> Result<Vec<EncodedGrid>> {
    par::map_indexed(images.len(), |i| encode_image(cb, images[i], params)).into_iter().collect()
}

/// Settings for [`learn_codebook`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodebookParams {
    pub patch: PatchParams,
    pub k: usize,
    pub eps_zca: f64,
    pub iters: usize,
    /// How many random patches to draw for whitening and clustering.
    pub sample_patches: usize,
}

/// Samples random normalized patches, fits whitening on them, then runs
/// k-means in whitened space.
pub fn learn_codebook(images: &[ImageSample], params: CodebookParams, seed: u64) -> Result<(Codebook, KMeans)> {
    if images.is_empty() {
        return Err(Error::argument("no images to learn a codebook from"));
    }
    let w = params.patch.w;
    let mut rng = seeded_rng(seed);
    let mut raw = Vec::with_capacity(params.sample_patches);
    for _ in 0..params.sample_patches {
        let img = &images[rng.random_range(0..images.len())];
        let side = grid_side(img.side(), w, params.patch.stride)?;
        let top = rng.random_range(0..side) * params.patch.stride;
        let left = rng.random_range(0..side) * params.patch.stride;
        let mut buf = Vec::with_capacity(patch_dim(w));
        preprocess::window_into(img, w, top, left, &mut buf);
        normalize_in_place(&mut buf, params.patch.eps_norm);
        raw.push(Patch(buf));
    }
    let whitening = preprocess::fit_whitening(&raw, params.eps_zca)?;
    let white: Vec<Patch> = raw.iter().map(|p| whitening.apply(p)).collect::<Result<_>>()?;
    let km = train_kmeans(&white, params.k, params.iters, rng.random())?;
    let cb = Codebook::new(km.centroids.clone(), params.k, whitening)?;
    Ok((cb, km))
}
