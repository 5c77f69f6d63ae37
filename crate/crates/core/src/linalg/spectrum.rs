use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigendecomposition of a symmetric PSD matrix, eigenvalues nonincreasing
/// and clamped at zero.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn of(matrix: &DMatrix<f64>) -> Self {
        let n = matrix.nrows();
        if n == 0 {
            return Spectrum {
                eigenvalues: Vec::new(),
                eigenvectors: DMatrix::zeros(0, 0),
            };
        }
        let eig = SymmetricEigen::new(matrix.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let mut eigenvalues = Vec::with_capacity(n);
        let mut eigenvectors = DMatrix::zeros(n, n);
        for (col, &src) in order.iter().enumerate() {
            eigenvalues.push(eig.eigenvalues[src].max(0.0));
            eigenvectors.set_column(col, &eig.eigenvectors.column(src));
        }
        Spectrum {
            eigenvalues,
            eigenvectors,
        }
    }

    /// Eigenvalues only, unsorted work skipped where possible.
    pub fn eigenvalues_of(matrix: &DMatrix<f64>) -> Vec<f64> {
        if matrix.nrows() == 0 {
            return Vec::new();
        }
        let vals: DVector<f64> = matrix.clone().symmetric_eigenvalues();
        let mut vals: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        vals
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// V diag(λ) Vᵀ.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut scaled = self.eigenvectors.clone();
        for (col, &lambda) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(col).scale_mut(lambda);
        }
        if n == 0 {
            return scaled;
        }
        &scaled * self.eigenvectors.transpose()
    }
}
