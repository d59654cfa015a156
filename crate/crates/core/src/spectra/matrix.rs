//! Eigendecomposition of Gram matrices.
//!
//! Circulant matrices (uniform circle grids) are diagonalized by sampled
//! Fourier vectors, so their spectrum is read off the first row. Everything
//! else goes through a dense symmetric eigensolver.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::GramMatrix;

const SYMMETRY_TOL: f64 = 1e-10;
const CIRCULANT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Circulant route when the matrix is circulant, dense otherwise.
    Auto,
    Dense,
    Circulant,
}

/// Which sampled Fourier vector an eigenvector is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FourierMode {
    Cos(usize),
    Sin(usize),
}

impl FourierMode {
    pub fn frequency(self) -> usize {
        match self {
            FourierMode::Cos(k) | FourierMode::Sin(k) => k,
        }
    }
}

/// Eigenvalues in descending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct MatrixSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    /// Fourier label of each eigenpair; present for the circulant route.
    pub modes: Option<Vec<FourierMode>>,
}

impl MatrixSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        self.eigenvectors.column(i).iter().copied().collect()
    }

    /// Eigenvalue attached to frequency `k` (circulant route only).
    pub fn frequency_eigenvalue(&self, k: usize) -> Option<f64> {
        let modes = self.modes.as_ref()?;
        modes
            .iter()
            .position(|m| m.frequency() == k)
            .map(|i| self.eigenvalues[i])
    }

    /// `V^T y`.
    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.eigenvectors.column(i).iter().zip(y).map(|(a, b)| a * b).sum())
            .collect()
    }
}

pub fn matrix_spectrum(gram: &GramMatrix) -> Result<MatrixSpectrum> {
    matrix_spectrum_with(gram, Route::Auto)
}

pub fn matrix_spectrum_with(gram: &GramMatrix, route: Route) -> Result<MatrixSpectrum> {
    let asym = gram.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::Asymmetric(asym));
    }
    match route {
        Route::Dense => Ok(dense(gram)),
        Route::Circulant => {
            if !gram.is_circulant(CIRCULANT_TOL) {
                return Err(Error::Argument("matrix is not circulant".into()));
            }
            Ok(circulant(gram))
        }
        Route::Auto if gram.n() > 2 && gram.is_circulant(CIRCULANT_TOL) => Ok(circulant(gram)),
        Route::Auto => Ok(dense(gram)),
    }
}

/// Unit-norm sampled Fourier vector on an `n`-point grid.
pub fn fourier_vector(mode: FourierMode, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|j| {
            let phase = 2.0 * PI * (j as f64) / n as f64;
            match mode {
                FourierMode::Cos(k) => (k as f64 * phase).cos(),
                FourierMode::Sin(k) => (k as f64 * phase).sin(),
            }
        })
        .collect();
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    raw.into_iter().map(|x| x / norm).collect()
}

fn circulant(gram: &GramMatrix) -> MatrixSpectrum {
    let n = gram.n();
    let first = gram.row(0);
    let mut pairs: Vec<(f64, FourierMode)> = Vec::with_capacity(n);
    for k in 0..=n / 2 {
        let lambda: f64 = first
            .iter()
            .enumerate()
            .map(|(j, c)| c * (2.0 * PI * ((k * j) % n) as f64 / n as f64).cos())
            .sum();
        pairs.push((lambda, FourierMode::Cos(k)));
        if k != 0 && 2 * k != n {
            pairs.push((lambda, FourierMode::Sin(k)));
        }
    }
    // descending; ties by frequency then cos before sin
    pairs.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(a.1.frequency().cmp(&b.1.frequency()))
            .then(matches!(a.1, FourierMode::Sin(_)).cmp(&matches!(b.1, FourierMode::Sin(_))))
    });
    let mut vecs = DMatrix::zeros(n, n);
    for (col, (_, mode)) in pairs.iter().enumerate() {
        for (row, v) in fourier_vector(*mode, n).into_iter().enumerate() {
            vecs[(row, col)] = v;
        }
    }
    MatrixSpectrum {
        eigenvalues: pairs.iter().map(|p| p.0).collect(),
        eigenvectors: vecs,
        modes: Some(pairs.into_iter().map(|p| p.1).collect()),
    }
}

fn dense(gram: &GramMatrix) -> MatrixSpectrum {
    let n = gram.n();
    let eig = gram.to_dmatrix().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut vecs = DMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(src);
        // fix the sign so the largest-magnitude entry is positive
        let pivot = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for row in 0..n {
            vecs[(row, col)] = sign * v[row];
        }
    }
    MatrixSpectrum {
        eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        eigenvectors: vecs,
        modes: None,
    }
}

/// Norm of the projection of unit vector `v` onto the span of the given
/// eigenvector columns; 1 means `v` lies in the subspace.
pub fn subspace_alignment(spectrum: &MatrixSpectrum, columns: &[usize], v: &[f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    columns
        .iter()
        .map(|&c| {
            let dot: f64 = spectrum.eigenvectors.column(c).iter().zip(v).map(|(a, b)| a * b).sum();
            (dot / norm).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Columns whose eigenvalue lies within `rel_tol * lambda_max` of `lambda`.
pub fn eigenspace_columns(spectrum: &MatrixSpectrum, lambda: f64, rel_tol: f64) -> Vec<usize> {
    let scale = spectrum.eigenvalues.first().copied().unwrap_or(1.0).abs().max(f64::MIN_POSITIVE);
    (0..spectrum.len())
        .filter(|&i| (spectrum.eigenvalues[i] - lambda).abs() <= rel_tol * scale)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::{sample_uniform_sphere, uniform_circle_grid};
    use crate::kernels::{gram_matrix, KernelVariant};

    #[test]
    fn one_by_one() {
        let g = gram_matrix(&uniform_circle_grid(1), KernelVariant::BiasFree).unwrap();
        let s = matrix_spectrum(&g).unwrap();
        assert_eq!(s.eigenvalues, vec![0.5]);
    }

    #[test]
    fn rejects_asymmetric() {
        let g = GramMatrix::from_row_major(2, vec![1.0, 0.5, 0.4, 1.0], KernelVariant::BiasFree).unwrap();
        assert!(matches!(matrix_spectrum(&g), Err(Error::Asymmetric(_))));
    }

    #[test]
    fn circulant_matches_dense() {
        for v in KernelVariant::ALL {
            let g = gram_matrix(&uniform_circle_grid(64), v).unwrap();
            let a = matrix_spectrum_with(&g, Route::Circulant).unwrap();
            let b = matrix_spectrum_with(&g, Route::Dense).unwrap();
            for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
                assert!((x - y).abs() < 1e-9, "{x} vs {y}");
            }
            // each circulant eigenvector is an eigenvector of the matrix
            for i in 0..64 {
                let vec = a.eigenvector(i);
                let hv = g.mul_vec(&vec);
                let err: f64 = hv.iter().zip(&vec).map(|(h, x)| (h - a.eigenvalues[i] * x).abs()).fold(0.0, f64::max);
                assert!(err < 1e-10);
            }
        }
    }

    #[test]
    fn dense_is_orthonormal_and_deterministic() {
        let pts = sample_uniform_sphere(40, 2, 6);
        let g = gram_matrix(&pts, KernelVariant::WithBias).unwrap();
        let s = matrix_spectrum(&g).unwrap();
        assert!(s.modes.is_none());
        assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        let gram = s.eigenvectors.transpose() * &s.eigenvectors;
        assert!((gram - DMatrix::identity(40, 40)).abs().max() < 1e-10);
        let again = matrix_spectrum(&g).unwrap();
        assert_eq!(s.eigenvalues, again.eigenvalues);
        assert_eq!(s.eigenvectors, again.eigenvectors);
    }

    #[test]
    fn eigenvectors_span_fourier_pairs() {
        // dense eigenvectors agree with sin/cos up to rotation in each 2-d eigenspace
        let n = 256;
        let g = gram_matrix(&uniform_circle_grid(n), KernelVariant::WithBias).unwrap();
        let dense = matrix_spectrum_with(&g, Route::Dense).unwrap();
        let circ = matrix_spectrum_with(&g, Route::Circulant).unwrap();
        for k in 0..=10 {
            let lambda = circ.frequency_eigenvalue(k).unwrap();
            let cols = eigenspace_columns(&dense, lambda, 1e-9);
            assert_eq!(cols.len(), if k == 0 { 1 } else { 2 }, "k={k}");
            for mode in [FourierMode::Cos(k), FourierMode::Sin(k)] {
                if k == 0 && matches!(mode, FourierMode::Sin(_)) {
                    continue;
                }
                let a = subspace_alignment(&dense, &cols, &fourier_vector(mode, n));
                // cos of the subspace angle; 1 - cos(1e-6) ~ 5e-13
                assert!(1.0 - a < 1e-12, "k={k} alignment {a}");
            }
        }
    }
}
