use nalgebra::DMatrix;

use super::{Kernel, Spectrum, PIVOT_FLOOR};
use crate::{Error, Result};

/// e_0..=e_kmax of the given values via the triangular recurrence
/// e_j ← e_j + λ·e_{j-1} over growing prefixes.
pub fn elementary_symmetric_all(values: &[f64], kmax: usize) -> Vec<f64> {
    let mut e = vec![0.0; kmax + 1];
    e[0] = 1.0;
    for (i, &lambda) in values.iter().enumerate() {
        for j in (1..=kmax.min(i + 1)).rev() {
            e[j] += lambda * e[j - 1];
        }
    }
    e
}

/// e_k(λ_1, …, λ_n).
pub fn elementary_symmetric(values: &[f64], k: usize) -> Result<f64> {
    if k > values.len() {
        return Err(Error::KOutOfRange {
            k,
            n: values.len(),
        });
    }
    Ok(elementary_symmetric_all(values, k)[k])
}

/// ln e_k, computed on values rescaled by their maximum so that large
/// spectra do not overflow.
pub fn log_elementary_symmetric(values: &[f64], k: usize) -> Result<f64> {
    if k > values.len() {
        return Err(Error::KOutOfRange {
            k,
            n: values.len(),
        });
    }
    if k == 0 {
        return Ok(0.0);
    }
    let scale = values.iter().copied().fold(0.0, f64::max);
    if scale <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let scaled: Vec<f64> = values.iter().map(|v| v / scale).collect();
    let ek = elementary_symmetric_all(&scaled, k)[k];
    Ok(ek.ln() + k as f64 * scale.ln())
}

/// e_k of the eigenvalues of a symmetric PSD matrix.
pub fn matrix_elementary_symmetric(matrix: &DMatrix<f64>, k: usize) -> Result<f64> {
    elementary_symmetric(&Spectrum::eigenvalues_of(matrix), k)
}

/// Symmetric-pivoted elimination; returns the pivots in elimination order,
/// stopping early at the first pivot below the floor.
fn pivots(matrix: &DMatrix<f64>) -> (Vec<f64>, bool) {
    let m = matrix.nrows();
    if m == 0 {
        return (Vec::new(), true);
    }
    let mut a: Vec<f64> = matrix.iter().copied().collect();
    let floor = PIVOT_FLOOR * (0..m).map(|i| a[i * m + i]).fold(0.0, f64::max);
    let mut perm: Vec<usize> = (0..m).collect();
    let mut out = Vec::with_capacity(m);
    for s in 0..m {
        let (p_idx, &p) = perm[s..]
            .iter()
            .enumerate()
            .max_by(|(_, &x), (_, &y)| a[x * m + x].total_cmp(&a[y * m + y]))
            .unwrap();
        let pivot = a[p * m + p];
        if !(pivot > floor) {
            return (out, false);
        }
        perm.swap(s, s + p_idx);
        out.push(pivot);
        let rest = &perm[s + 1..];
        for &i in rest {
            let f = a[i * m + p] / pivot;
            if f == 0.0 {
                continue;
            }
            for &j in rest {
                a[i * m + j] -= f * a[p * m + j];
            }
        }
    }
    (out, true)
}

/// det of a symmetric PSD matrix; 0 when numerically singular.
pub fn det_psd(matrix: &DMatrix<f64>) -> f64 {
    match pivots(matrix) {
        (p, true) => p.iter().product(),
        _ => 0.0,
    }
}

/// ln det of a symmetric PSD matrix; −∞ when numerically singular.
pub fn log_det_psd(matrix: &DMatrix<f64>) -> f64 {
    match pivots(matrix) {
        (p, true) => p.iter().map(|v| v.ln()).sum(),
        _ => f64::NEG_INFINITY,
    }
}

pub(crate) fn check_subset(n: usize, subset: &[usize]) -> Result<()> {
    for (a, &i) in subset.iter().enumerate() {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        if subset[..a].contains(&i) {
            return Err(Error::DuplicateIndex(i));
        }
    }
    Ok(())
}

/// det(L_Y); the empty minor is 1.
pub fn principal_minor_det<K: Kernel + ?Sized>(kernel: &K, subset: &[usize]) -> Result<f64> {
    check_subset(kernel.size(), subset)?;
    Ok(det_psd(&kernel.submatrix(subset)))
}

/// Normalized Schur complement M' = L − L[:,y] L[y,:] / L[y][y] with row and
/// column `y` removed, so that det(L_{S∪{y}}) = L[y][y] · det(M'_S).
///
/// Remaining indices keep their relative order: index i of the result is
/// index i (i < y) or i + 1 (i ≥ y) of the input.
pub fn schur_condition(matrix: &DMatrix<f64>, y: usize) -> Result<DMatrix<f64>> {
    let n = matrix.nrows();
    if y >= n {
        return Err(Error::IndexOutOfRange { index: y, n });
    }
    let pivot = matrix[(y, y)];
    let max_diag = matrix.diagonal().max();
    if !(pivot > PIVOT_FLOOR * max_diag) {
        return Err(Error::SingularPivot { index: y, pivot });
    }
    let keep: Vec<usize> = (0..n).filter(|&i| i != y).collect();
    Ok(DMatrix::from_fn(n - 1, n - 1, |a, b| {
        let (i, j) = (keep[a], keep[b]);
        matrix[(i, j)] - matrix[(i, y)] * matrix[(y, j)] / pivot
    }))
}
