//! Kernel spectrum tables from every available source, plus eigenvector
//! panels of the circle Gram matrix.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harmonics::{circle_grid_angles, uniform_circle_grid};
use crate::kernels::{gram_matrix, KernelVariant};
use crate::spectra::{
    coefficient, default_nodes, eigen_quadrature, matrix_coefficients, matrix_spectrum_with, MatrixSpectrum, Route,
    Source, SpectrumEntry,
};

use super::demos::fourier_energies;
use super::svg::{Plot, Series};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReportConfig {
    pub d_list: Vec<usize>,
    pub k_max: usize,
    pub variants: Vec<KernelVariant>,
    /// Grid size for circle matrix estimates.
    pub circle_n: usize,
    /// Sample count for sphere matrix estimates.
    pub sphere_n: usize,
    /// Grid size of the eigenvector panels.
    pub panel_n: usize,
    pub seed: u64,
}

impl Default for SpectrumReportConfig {
    fn default() -> Self {
        Self {
            d_list: vec![1, 2],
            k_max: 20,
            variants: KernelVariant::ALL.to_vec(),
            circle_n: 2048,
            sphere_n: 1500,
            panel_n: 256,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub entries: Vec<SpectrumEntry>,
    /// `(file stem, rendered svg)`.
    pub panels: Vec<(String, String)>,
}

/// Frequency carrying most of the energy of grid samples `v`.
pub fn dominant_frequency(v: &[f64]) -> usize {
    let ks: Vec<usize> = (0..=v.len() / 2).collect();
    let e = fourier_energies(v, &ks);
    (0..e.len()).max_by(|&a, &b| e[a].total_cmp(&e[b]).then(b.cmp(&a))).unwrap_or(0)
}

/// Frequencies of the leading `count` eigenvectors, in order, with
/// repeats from the same cos/sin pair collapsed.
pub fn leading_frequencies(spectrum: &MatrixSpectrum, count: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    for i in 0..count.min(spectrum.len()) {
        let k = dominant_frequency(&spectrum.eigenvector(i));
        if out.last() != Some(&k) {
            out.push(k);
        }
    }
    out
}

/// Coefficients for each `(variant, d, k <= k_max)` from every source that
/// applies: closed form for d = 1 and even d, quadrature always, matrix
/// estimates always.
pub fn spectrum_entries(config: &SpectrumReportConfig) -> Result<Vec<SpectrumEntry>> {
    if config.d_list.is_empty() || config.variants.is_empty() {
        return Err(Error::Empty("spectrum report needs at least one d and variant".into()));
    }
    let mut entries = Vec::new();
    for &variant in &config.variants {
        for &d in &config.d_list {
            if d == 0 {
                return Err(Error::Argument("sphere dimension must be >= 1".into()));
            }
            let n = if d == 1 { config.circle_n } else { config.sphere_n };
            let matrix = matrix_coefficients(variant, d, config.k_max, n, config.seed)?;
            for k in 0..=config.k_max {
                let mut push = |value, source| entries.push(SpectrumEntry { k, d, variant, value, source });
                if d == 1 || d % 2 == 0 {
                    push(coefficient(variant, k, d)?, Source::ClosedForm);
                }
                push(eigen_quadrature(variant, k, d, default_nodes(k, d))?, Source::Quadrature);
                push(matrix[k], Source::Matrix);
            }
        }
    }
    Ok(entries)
}

/// Top-6 and bottom-3 eigenvectors of the circle Gram matrix per variant.
pub fn eigenvector_panels(variants: &[KernelVariant], n: usize) -> Result<Vec<(String, String)>> {
    let angles = circle_grid_angles(n);
    let points = uniform_circle_grid(n);
    let mut panels = Vec::new();
    for &variant in variants {
        let spec = matrix_spectrum_with(&gram_matrix(&points, variant)?, Route::Dense)?;
        let mut plot = Plot::new(format!("{variant}: circle Gram eigenvectors, n = {n}"), "theta", "value");
        let picks = (0..6.min(n)).chain(n.saturating_sub(3)..n);
        for i in picks {
            let v = spec.eigenvector(i);
            let name = format!("#{} (lambda {:.3e}, k = {})", i + 1, spec.eigenvalues[i], dominant_frequency(&v));
            plot = plot.with(Series::line(name, angles.iter().copied().zip(v).collect()));
        }
        panels.push((format!("eigenvectors_{variant}"), plot.render()));
    }
    Ok(panels)
}

pub fn emit_spectrum_report(config: &SpectrumReportConfig) -> Result<SpectrumReport> {
    Ok(SpectrumReport {
        entries: spectrum_entries(config)?,
        panels: eigenvector_panels(&config.variants, config.panel_n)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::matrix_spectrum;

    #[test]
    fn leading_order_bias_free() {
        let g = gram_matrix(&uniform_circle_grid(128), KernelVariant::BiasFree).unwrap();
        let spec = matrix_spectrum_with(&g, Route::Dense).unwrap();
        assert_eq!(leading_frequencies(&spec, 9), vec![1, 0, 2, 4, 6]);
    }

    #[test]
    fn leading_order_with_bias() {
        let g = gram_matrix(&uniform_circle_grid(128), KernelVariant::WithBias).unwrap();
        let spec = matrix_spectrum(&g).unwrap();
        assert_eq!(leading_frequencies(&spec, 9), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn row_count_per_source() {
        let cfg = SpectrumReportConfig {
            d_list: vec![1, 2, 3],
            k_max: 4,
            variants: vec![KernelVariant::WithBias],
            circle_n: 64,
            sphere_n: 200,
            ..SpectrumReportConfig::default()
        };
        let e = spectrum_entries(&cfg).unwrap();
        // 3 sources for d = 1, 2; 2 for d = 3
        assert_eq!(e.len(), 5 * (3 + 3 + 2));
        assert!(!e.iter().any(|x| x.d == 3 && x.source == Source::ClosedForm));
    }

    #[test]
    fn panels_render() {
        let p = eigenvector_panels(&[KernelVariant::BiasFree], 32).unwrap();
        assert_eq!(p.len(), 1);
        assert!(p[0].1.starts_with("<svg"));
        assert_eq!(p[0].1.matches("<polyline").count(), 9);
    }
}
