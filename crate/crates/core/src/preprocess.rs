//! Dense patch extraction, per-patch contrast normalization and ZCA whitening.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dataset::{ImageSample, CHANNELS};
use crate::{Error, Result};

/// Flattened `w×w×3` window: red rows, then green rows, then blue rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch(pub Vec<f64>);

impl Patch {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Dimension of a flattened patch for side `w`.
pub const fn patch_dim(w: usize) -> usize {
    w * w * CHANNELS
}

/// Number of valid window positions along one axis.
pub fn grid_side(n: usize, w: usize, stride: usize) -> Result<usize> {
    if stride == 0 {
        return Err(Error::argument("stride must be at least 1"));
    }
    if w == 0 || w > n {
        return Err(Error::argument(format!("patch size {w} must be in 1..={n}")));
    }
    Ok((n - w) / stride + 1)
}

/// `P×P` patches in row-major grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrid {
    pub side: usize,
    pub patches: Vec<Patch>,
}

impl PatchGrid {
    pub fn get(&self, m: usize, n: usize) -> &Patch {
        &self.patches[m * self.side + n]
    }
}

/// Copies the window whose top-left pixel is `(top, left)` into `out`.
pub(crate) fn window_into(image: &ImageSample, w: usize, top: usize, left: usize, out: &mut Vec<f64>) {
    out.clear();
    for c in 0..CHANNELS {
        for r in top..top + w {
            for col in left..left + w {
                out.push(image.pixel(c, r, col));
            }
        }
    }
}

pub fn extract_patches(image: &ImageSample, w: usize, stride: usize) -> Result<PatchGrid> {
    let side = grid_side(image.side(), w, stride)?;
    let mut patches = Vec::with_capacity(side * side);
    for m in 0..side {
        for n in 0..side {
            let mut buf = Vec::with_capacity(patch_dim(w));
            window_into(image, w, m * stride, n * stride, &mut buf);
            patches.push(Patch(buf));
        }
    }
    Ok(PatchGrid { side, patches })
}

/// In-place brightness/contrast normalization: `(x − mean) / sqrt(var + eps)`
/// with the variance taken over the patch elements (1/d).
pub fn normalize_in_place(values: &mut [f64], eps_norm: f64) {
    if values.is_empty() {
        return;
    }
    let d = values.len() as f64;
    let mean = values.iter().sum::<f64>() / d;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
    let denom = libm::sqrt(var + eps_norm);
    for v in values.iter_mut() {
        let centered = *v - mean;
        // A constant patch with eps 0 has 0/0; its normalized form is zero.
        *v = if centered == 0.0 { 0.0 } else { centered / denom };
    }
}

pub fn normalize_patch(patch: &Patch, eps_norm: f64) -> Patch {
    let mut out = patch.clone();
    normalize_in_place(&mut out.0, eps_norm);
    out
}

/// ZCA whitening: `x ↦ M (x − mean)` with `M = U (Λ + εI)^(-1/2) Uᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteningTransform {
    pub mean: Vec<f64>,
    /// `d×d`, row-major.
    pub matrix: Vec<f64>,
    pub epsilon: f64,
}

impl WhiteningTransform {
    pub fn new(mean: Vec<f64>, matrix: Vec<f64>, epsilon: f64) -> Result<Self> {
        let d = mean.len();
        if matrix.len() != d * d {
            return Err(Error::argument(format!("whitening matrix has {} entries, expected {}", matrix.len(), d * d)));
        }
        Ok(Self { mean, matrix, epsilon })
    }

    pub fn identity(d: usize) -> Self {
        let mut matrix = vec![0.0; d * d];
        for i in 0..d {
            matrix[i * d + i] = 1.0;
        }
        Self { mean: vec![0.0; d], matrix, epsilon: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Writes `M (x − mean)` into `out`; `scratch` receives the centered input.
    pub(crate) fn apply_into(&self, x: &[f64], scratch: &mut Vec<f64>, out: &mut Vec<f64>) {
        let d = self.dim();
        scratch.clear();
        scratch.extend(x.iter().zip(&self.mean).map(|(a, b)| a - b));
        out.clear();
        out.extend(self.matrix.chunks_exact(d).map(|row| dot(row, scratch)));
    }

    pub fn apply(&self, patch: &Patch) -> Result<Patch> {
        if patch.dim() != self.dim() {
            return Err(Error::argument(format!(
                "patch dimension {} does not match whitening dimension {}",
                patch.dim(),
                self.dim()
            )));
        }
        let mut scratch = Vec::new();
        let mut out = Vec::new();
        self.apply_into(&patch.0, &mut scratch, &mut out);
        Ok(Patch(out))
    }
}

pub fn apply_whitening(t: &WhiteningTransform, patch: &Patch) -> Result<Patch> {
    t.apply(patch)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sample mean and unbiased (1/(N−1)) covariance of a patch population.
pub fn mean_and_covariance(patches: &[Patch]) -> Result<(Vec<f64>, Vec<f64>)> {
    if patches.len() < 2 {
        return Err(Error::argument(format!("need at least 2 patches, got {}", patches.len())));
    }
    let d = patches[0].dim();
    if let Some(p) = patches.iter().find(|p| p.dim() != d) {
        return Err(Error::argument(format!("mixed patch dimensions {d} and {}", p.dim())));
    }
    let count = patches.len() as f64;
    let mut mean = vec![0.0; d];
    for p in patches {
        for (m, v) in mean.iter_mut().zip(&p.0) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);

    let mut cov = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for p in patches {
        for ((c, v), m) in centered.iter_mut().zip(&p.0).zip(&mean) {
            *c = v - m;
        }
        for i in 0..d {
            let ci = centered[i];
            let row = &mut cov[i * d..i * d + d];
            for j in i..d {
                row[j] += ci * centered[j];
            }
        }
    }
    let norm = count - 1.0;
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / norm;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    Ok((mean, cov))
}

/// Fits a ZCA transform. Eigenvalues are clamped at zero before adding
/// `eps_zca`; directions with `λ + ε = 0` are mapped to zero.
pub fn fit_whitening(patches: &[Patch], eps_zca: f64) -> Result<WhiteningTransform> {
    if !(eps_zca >= 0.0 && eps_zca.is_finite()) {
        return Err(Error::argument(format!("eps_zca {eps_zca} must be finite and >= 0")));
    }
    let (mean, cov) = mean_and_covariance(patches)?;
    let d = mean.len();
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, &cov));
    let scales: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&lambda| {
            let reg = lambda.max(0.0) + eps_zca;
            if reg > 0.0 {
                1.0 / libm::sqrt(reg)
            } else {
                0.0
            }
        })
        .collect();
    let u = &eig.eigenvectors;
    let mut matrix = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let v: f64 = (0..d).map(|e| u[(i, e)] * scales[e] * u[(j, e)]).sum();
            matrix[i * d + j] = v;
            matrix[j * d + i] = v;
        }
    }
    WhiteningTransform::new(mean, matrix, eps_zca)
}
