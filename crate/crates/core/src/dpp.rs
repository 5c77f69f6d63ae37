//! Exact k-DPP: probabilities, normalizer and the two-phase spectral sampler.

use rand::Rng;

use crate::linalg::{
    elementary_symmetric_all, log_det_psd, log_elementary_symmetric, Kernel, KernelMatrix,
    Spectrum, PIVOT_FLOOR,
};
use crate::{Error, Result};

/// k-DPP over a dense kernel, with its spectrum computed once.
#[derive(Debug, Clone)]
pub struct KDppModel {
    kernel: KernelMatrix,
    spectrum: Spectrum,
    k: usize,
    log_normalizer: f64,
    /// e_l over the first n (max-scaled) eigenvalues, indexed [l][n].
    table: Vec<Vec<f64>>,
}

/// Build the k-DPP P(Y) = det(L_Y) / e_k(L) over |Y| = k.
pub fn build_kdpp(kernel: KernelMatrix, k: usize) -> Result<KDppModel> {
    let spectrum = kernel.spectrum();
    KDppModel::from_parts(kernel, spectrum, k)
}

impl KDppModel {
    pub fn new(kernel: KernelMatrix, k: usize) -> Result<Self> {
        build_kdpp(kernel, k)
    }

    /// Assemble from a precomputed spectrum of `kernel`.
    pub fn from_parts(kernel: KernelMatrix, spectrum: Spectrum, k: usize) -> Result<Self> {
        let n = kernel.n();
        if k == 0 || k > n {
            return Err(Error::KOutOfRange { k, n });
        }
        let eig = spectrum.eigenvalues();
        let top = eig.first().copied().unwrap_or(0.0);
        let rank = eig.iter().filter(|&&v| v > PIVOT_FLOOR * top).count();
        let log_normalizer = log_elementary_symmetric(eig, k)?;
        if rank < k || log_normalizer <= 1e-300f64.ln() {
            return Err(Error::DegenerateModel(log_normalizer.exp()));
        }

        let scaled: Vec<f64> = eig.iter().map(|v| v / top).collect();
        let mut table = vec![vec![0.0; n + 1]; k + 1];
        table[0].iter_mut().for_each(|v| *v = 1.0);
        for m in 1..=n {
            let lambda = scaled[m - 1];
            for l in 1..=k.min(m) {
                table[l][m] = table[l][m - 1] + lambda * table[l - 1][m - 1];
            }
        }
        debug_assert!({
            let direct = elementary_symmetric_all(&scaled, k)[k];
            (direct - table[k][n]).abs() <= 1e-10 * direct.abs()
        });

        Ok(KDppModel {
            kernel,
            spectrum,
            k,
            log_normalizer,
            table,
        })
    }

    pub fn kernel(&self) -> &KernelMatrix {
        &self.kernel
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.kernel.n()
    }

    /// e_k(L).
    pub fn normalizer(&self) -> f64 {
        self.log_normalizer.exp()
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    fn check_subset(&self, subset: &[usize]) -> Result<()> {
        if subset.len() != self.k {
            return Err(Error::WrongCardinality {
                expected: self.k,
                got: subset.len(),
            });
        }
        crate::linalg::check_subset(self.n(), subset)
    }

    /// ln P(Y); −∞ for singular minors.
    pub fn log_prob(&self, subset: &[usize]) -> Result<f64> {
        self.check_subset(subset)?;
        Ok(log_det_psd(&self.kernel.submatrix(subset)) - self.log_normalizer)
    }

    /// P(Y) = det(L_Y) / e_k(L).
    pub fn prob(&self, subset: &[usize]) -> Result<f64> {
        Ok(self.log_prob(subset)?.exp())
    }

    /// Phase one: eigenvector indices, chosen with probability proportional
    /// to the product of their eigenvalues (backward pass over the e-table).
    pub fn sample_eigenindices<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let top = self.spectrum.eigenvalues()[0];
        let mut remaining = self.k;
        let mut picked = Vec::with_capacity(self.k);
        for m in (1..=self.n()).rev() {
            if remaining == 0 {
                break;
            }
            if m == remaining {
                picked.extend((0..m).rev());
                break;
            }
            let lambda = self.spectrum.eigenvalues()[m - 1] / top;
            let p = lambda * self.table[remaining - 1][m - 1] / self.table[remaining][m];
            if rng.random::<f64>() < p {
                picked.push(m - 1);
                remaining -= 1;
            }
        }
        picked
    }

    /// Draw Y with |Y| = k; indices returned sorted.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let eig_idx = self.sample_eigenindices(rng);
        let vectors = self.spectrum.eigenvectors();
        let n = self.n();
        let mut basis: Vec<Vec<f64>> = eig_idx
            .iter()
            .map(|&c| vectors.column(c).iter().copied().collect())
            .collect();
        project_sample(&mut basis, n, rng)
    }
}

/// Sequential projection sampling from an orthonormal basis (columns of length n).
pub(crate) fn project_sample<R: Rng + ?Sized>(
    basis: &mut Vec<Vec<f64>>,
    n: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut out = Vec::with_capacity(basis.len());
    let mut weights = vec![0.0; n];
    while !basis.is_empty() {
        let mut total = 0.0;
        for (i, w) in weights.iter_mut().enumerate() {
            *w = basis.iter().map(|col| col[i] * col[i]).sum();
            total += *w;
        }
        let mut target = rng.random::<f64>() * total;
        let mut item = n - 1;
        for (i, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            if target < w {
                item = i;
                break;
            }
            target -= w;
            item = i;
        }
        out.push(item);

        // eliminate the direction along e_item
        let pivot = (0..basis.len())
            .max_by(|&a, &b| basis[a][item].abs().total_cmp(&basis[b][item].abs()))
            .unwrap();
        let pcol = basis.swap_remove(pivot);
        let pv = pcol[item];
        for col in basis.iter_mut() {
            let f = col[item] / pv;
            if f != 0.0 {
                for (c, p) in col.iter_mut().zip(&pcol) {
                    *c -= f * p;
                }
            }
            col[item] = 0.0;
        }
        // modified Gram-Schmidt
        for a in 0..basis.len() {
            let (done, rest) = basis.split_at_mut(a);
            let col = &mut rest[0];
            for prev in done.iter() {
                let d: f64 = col.iter().zip(prev).map(|(x, y)| x * y).sum();
                for (c, p) in col.iter_mut().zip(prev) {
                    *c -= d * p;
                }
            }
            let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                col.iter_mut().for_each(|x| *x /= norm);
            }
        }
    }
    out.sort_unstable();
    out
}
