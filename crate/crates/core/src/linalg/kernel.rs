use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;

use super::{Spectrum, PSD_TOL, RADICAND_TOL, SYMMETRY_TOL};
use crate::{Error, Result};

/// Read access to a symmetric similarity kernel over `size()` items.
///
/// Implemented both by the dense [`KernelMatrix`] and by [`FeatureKernel`],
/// which evaluates entries on demand so that coreset construction and
/// sampling never need the full N×N matrix in memory.
pub trait Kernel: Sync {
    fn size(&self) -> usize;

    fn entry(&self, i: usize, j: usize) -> f64;

    fn diag(&self, i: usize) -> f64 {
        self.entry(i, i)
    }

    /// Dense principal submatrix L_Y (rows and columns in the order of `idx`).
    fn submatrix(&self, idx: &[usize]) -> DMatrix<f64> {
        let m = idx.len();
        let mut out = DMatrix::zeros(m, m);
        for a in 0..m {
            out[(a, a)] = self.diag(idx[a]);
            for b in (a + 1)..m {
                let v = self.entry(idx[a], idx[b]);
                out[(a, b)] = v;
                out[(b, a)] = v;
            }
        }
        out
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let idx: Vec<usize> = (0..self.size()).collect();
        self.submatrix(&idx)
    }
}

/// Rectangular array of finite feature vectors, one row per item.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    coords: Vec<f64>,
    n: usize,
    dim: usize,
}

impl PointSet {
    /// Build from row-major coordinates.
    pub fn new(coords: Vec<f64>, n: usize, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("point dimension must be >= 1".into()));
        }
        if coords.len() != n * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} coordinates for {n}x{dim} points, got {}",
                n * dim,
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite coordinate in row {}",
                pos / dim
            )));
        }
        Ok(PointSet { coords, n, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::InvalidInput(format!("row {bad} has ragged length")));
        }
        PointSet::new(rows.concat(), rows.len(), dim)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    /// Points at the given indices, in that order.
    pub fn select(&self, idx: &[usize]) -> PointSet {
        let mut coords = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            coords.extend_from_slice(self.point(i));
        }
        PointSet {
            coords,
            n: idx.len(),
            dim: self.dim,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Dense symmetric PSD kernel with strictly positive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    entries: DMatrix<f64>,
}

impl KernelMatrix {
    /// Validate symmetry, positive diagonal and positive semidefiniteness.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let km = Self::checked_structure(entries)?;
        let eig = raw_eigenvalues(&km.entries);
        let (lo, hi) = eig
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if lo < -PSD_TOL * hi.max(0.0) {
            return Err(Error::NotPsd(format!(
                "smallest eigenvalue {lo:e} vs largest {hi:e}"
            )));
        }
        Ok(km)
    }

    /// Symmetry and diagonal checks only; for kernels that are PSD by
    /// construction (Gram matrices, RBF, D·L·D rescalings).
    pub(crate) fn from_psd(entries: DMatrix<f64>) -> Result<Self> {
        Self::checked_structure(entries)
    }

    fn checked_structure(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if entries.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "kernel must be square, got {}x{}",
                n,
                entries.ncols()
            )));
        }
        for i in 0..n {
            let d = entries[(i, i)];
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPsd(format!("diagonal entry {i} is {d}")));
            }
            for j in (i + 1)..n {
                let (a, b) = (entries[(i, j)], entries[(j, i)]);
                let gap = (a - b).abs();
                if !a.is_finite() || gap > SYMMETRY_TOL * a.abs().max(1.0) {
                    return Err(Error::NotSymmetric { i, j, gap });
                }
            }
        }
        Ok(KernelMatrix { entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("kernel rows must be square".into()));
        }
        KernelMatrix::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum::of(&self.entries)
    }

    pub fn max_diag(&self) -> f64 {
        self.entries.diagonal().max()
    }
}

fn raw_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    m.clone().symmetric_eigenvalues().iter().copied().collect()
}

impl Kernel for KernelMatrix {
    fn size(&self) -> usize {
        self.n()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.entries.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    Linear,
    Rbf { bandwidth: f64 },
}

impl KernelKind {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            KernelKind::Linear => dot(a, b),
            KernelKind::Rbf { bandwidth } => {
                (-sq_dist(a, b) / (2.0 * bandwidth * bandwidth)).exp()
            }
        }
    }
}

/// Kernel evaluated lazily from feature vectors.
#[derive(Debug, Clone)]
pub struct FeatureKernel {
    points: PointSet,
    kind: KernelKind,
}

impl FeatureKernel {
    pub fn new(points: PointSet, kind: KernelKind) -> Result<Self> {
        if let KernelKind::Rbf { bandwidth } = kind {
            check_bandwidth(bandwidth)?;
        }
        let fk = FeatureKernel { points, kind };
        if let Some(i) = (0..fk.size()).find(|&i| !(fk.diag(i) > 0.0)) {
            return Err(Error::NotPsd(format!("diagonal entry {i} is {}", fk.diag(i))));
        }
        Ok(fk)
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn materialize(&self) -> Result<KernelMatrix> {
        KernelMatrix::from_psd(self.to_dense())
    }
}

impl Kernel for FeatureKernel {
    fn size(&self) -> usize {
        self.points.len()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.kind.eval(self.points.point(i), self.points.point(j))
    }

    fn diag(&self, i: usize) -> f64 {
        match self.kind {
            KernelKind::Linear => {
                let p = self.points.point(i);
                dot(p, p)
            }
            KernelKind::Rbf { .. } => 1.0,
        }
    }
}

fn check_bandwidth(bandwidth: f64) -> Result<()> {
    if bandwidth.is_finite() && bandwidth > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidBandwidth(bandwidth))
    }
}

fn gram(points: &PointSet, kind: KernelKind) -> DMatrix<f64> {
    let n = points.len();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let pi = points.point(i);
        for j in i..n {
            let v = kind.eval(pi, points.point(j));
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// L[i][j] = ⟨x_i, x_j⟩.
pub fn linear_kernel(points: &PointSet) -> Result<KernelMatrix> {
    KernelMatrix::from_psd(gram(points, KernelKind::Linear))
}

/// L[i][j] = exp(-‖x_i - x_j‖² / (2 bandwidth²)).
pub fn rbf_kernel(points: &PointSet, bandwidth: f64) -> Result<KernelMatrix> {
    check_bandwidth(bandwidth)?;
    KernelMatrix::from_psd(gram(points, KernelKind::Rbf { bandwidth }))
}

/// Median pairwise Euclidean distance over a subsample of at most
/// `max_points` points.
pub fn median_bandwidth<R: Rng + ?Sized>(
    points: &PointSet,
    max_points: usize,
    rng: &mut R,
) -> Result<f64> {
    let n = points.len();
    let idx: Vec<usize> = if n > max_points {
        let mut v = index::sample(rng, n, max_points).into_vec();
        v.sort_unstable();
        v
    } else {
        (0..n).collect()
    };
    let mut dists = Vec::with_capacity(idx.len() * idx.len().saturating_sub(1) / 2);
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            dists.push(sq_dist(points.point(i), points.point(j)).sqrt());
        }
    }
    if dists.is_empty() {
        return Ok(1.0);
    }
    let mid = dists.len() / 2;
    let (_, median, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
    let median = *median;
    if median > 0.0 {
        Ok(median)
    } else {
        Ok(1.0)
    }
}

/// Feature-space distance ‖φ(u) − φ(v)‖ = √(L_uu + L_vv − 2 L_uv).
pub fn kernel_distance<K: Kernel + ?Sized>(kernel: &K, u: usize, v: usize) -> Result<f64> {
    let n = kernel.size();
    for idx in [u, v] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, n });
        }
    }
    if u == v {
        return Ok(0.0);
    }
    let radicand = kernel.diag(u) + kernel.diag(v) - 2.0 * kernel.entry(u, v);
    if radicand < -RADICAND_TOL {
        return Err(Error::NegativeRadicand(radicand));
    }
    Ok(radicand.max(0.0).sqrt())
}
