//! Kernel eigenvalues per frequency, computed three independent ways:
//! closed forms, Funk–Hecke quadrature, and Gram-matrix eigendecomposition.
//!
//! Normalization: on S^1 the coefficient of frequency `k` is the Fourier
//! coefficient `(1/z_k) int_{-pi}^{pi} K(cos theta) cos(k theta) d theta` with
//! `z_0 = 2 pi`, `z_k = pi`. On S^d, d >= 2, it is the Funk–Hecke eigenvalue
//! `Vol(S^{d-1}) int_{-1}^{1} K(t) P_{k,d}(t) (1-t^2)^{(d-2)/2} dt`.

mod exact;
mod matrix;

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics::{gegenbauer_unchecked, harmonic_labels, sample_uniform_sphere, uniform_circle_grid, HarmonicLabelSpec};
use crate::kernels::{gram_matrix, KernelVariant};
use crate::quadrature::integrate_doubling;

pub use exact::{
    bias_dc_half_factor_exact, bias_free_k1_row_exact, bias_part_exact, sphere_coefficient_exact, ExactCoefficient,
};
pub use matrix::{
    eigenspace_columns, fourier_vector, matrix_spectrum, matrix_spectrum_with, subspace_alignment, FourierMode,
    MatrixSpectrum, Route,
};

/// Node-doubling tolerance of [`eigen_quadrature`].
pub const QUADRATURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    ClosedForm,
    Quadrature,
    Matrix,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::ClosedForm, Source::Quadrature, Source::Matrix];
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::ClosedForm => "closed_form",
            Source::Quadrature => "quadrature",
            Source::Matrix => "matrix",
        })
    }
}

/// One kernel coefficient for frequency `k` on S^d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub k: usize,
    pub d: usize,
    pub variant: KernelVariant,
    pub value: f64,
    pub source: Source,
}

/// Surface area of the unit sphere S^n in R^{n+1}, `2 pi^{(n+1)/2} / Gamma((n+1)/2)`.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf((n as f64 + 1.0) / 2.0) / gamma_half(n + 1)
}

/// `Gamma(m / 2)` for integer `m >= 1`.
fn gamma_half(m: usize) -> f64 {
    let (mut g, mut x) = if m % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while 2.0 * x < m as f64 {
        g *= x;
        x += 1.0;
    }
    g
}

/// The constants of the closed form on S^d.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientConstants {
    pub d: usize,
    pub k: usize,
    /// `Vol(S^{d-1})`.
    pub vol: f64,
    /// `C1(d, k) = Vol(S^{d-1}) Gamma(d/2) (-1)^k / (2^k Gamma(k + d/2))`.
    pub c1: f64,
}

impl CoefficientConstants {
    pub fn new(d: usize, k: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::Argument(format!("constants need d >= 2, got {d}")));
        }
        let vol = sphere_area(d - 1);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        // Gamma(d/2) / Gamma(k + d/2) = 1 / prod_{j<k} (d/2 + j)
        let ratio: f64 = (0..k).map(|j| 1.0 / (d as f64 / 2.0 + j as f64)).product();
        Ok(Self {
            d,
            k,
            vol,
            c1: vol * sign * ratio / 2f64.powi(k as i32),
        })
    }

    /// `p = k + (d-2)/2`, the top of the `q` range.
    pub fn p(&self) -> usize {
        self.k + (self.d - 2) / 2
    }

    /// `C2(q, d, k) = (-1)^q binom(p, q) (2q)! / (2q - k)!`; zero outside `ceil(k/2) <= q <= p`.
    pub fn c2(&self, q: usize) -> f64 {
        let p = self.p();
        if q > p || 2 * q < self.k {
            return 0.0;
        }
        let binom: f64 = (0..q).map(|j| (p - j) as f64 / (j + 1) as f64).product();
        let falling: f64 = ((2 * q - self.k + 1)..=(2 * q)).map(|j| j as f64).product();
        let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
        sign * binom * falling
    }
}

/// `a_k^1` (bias-free) or `c_k^1` (with bias) on the circle.
pub fn circle_coefficient(variant: KernelVariant, k: usize) -> f64 {
    let pi2 = PI * PI;
    let kf = k as f64;
    match (variant, k) {
        (KernelVariant::BiasFree, 0) => 1.0 / pi2,
        (KernelVariant::BiasFree, 1) => 0.25,
        (KernelVariant::BiasFree, _) if k % 2 == 0 => 2.0 * (kf * kf + 1.0) / (pi2 * (kf * kf - 1.0).powi(2)),
        (KernelVariant::BiasFree, _) => 0.0,
        (KernelVariant::WithBias, 0) => 1.0 / (2.0 * pi2) + 0.125,
        (KernelVariant::WithBias, 1) => 1.0 / pi2 + 0.125,
        (KernelVariant::WithBias, _) if k % 2 == 0 => (kf * kf + 1.0) / (pi2 * (kf * kf - 1.0).powi(2)),
        (KernelVariant::WithBias, _) => 1.0 / (pi2 * kf * kf),
    }
}

/// `a_k^d` or `c_k^d` for even `d >= 2`, exact sums with one final rounding.
pub fn sphere_coefficient(variant: KernelVariant, k: usize, d: usize) -> Result<f64> {
    Ok(sphere_coefficient_exact(variant, k, d)?.to_f64())
}

/// Closed form where one exists (d = 1 or even d), quadrature otherwise.
pub fn coefficient(variant: KernelVariant, k: usize, d: usize) -> Result<f64> {
    match d {
        0 => Err(Error::Argument("sphere dimension must be >= 1".into())),
        1 => Ok(circle_coefficient(variant, k)),
        _ if d % 2 == 0 => sphere_coefficient(variant, k, d),
        _ => eigen_quadrature(variant, k, d, default_nodes(k, d)),
    }
}

/// Node count that resolves frequency `k` comfortably.
pub fn default_nodes(k: usize, d: usize) -> usize {
    64 + 2 * k + 4 * d
}

/// Funk–Hecke eigenvalue by Gauss–Legendre quadrature in `theta = arccos t`.
///
/// Integrates with `nodes` and `2 * nodes` points and returns the finer
/// value; [`Error::NonConvergence`] if they differ by [`QUADRATURE_TOL`] or more.
pub fn eigen_quadrature(variant: KernelVariant, k: usize, d: usize, nodes: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::Argument("sphere dimension must be >= 1".into()));
    }
    if nodes == 0 {
        return Err(Error::Argument("quadrature needs at least one node".into()));
    }
    if d == 1 {
        let z = if k == 0 { 2.0 * PI } else { PI };
        let kf = k as f64;
        // the integrand is even in theta
        let half = integrate_doubling(0.0, PI, nodes, QUADRATURE_TOL / 2.0, |th| {
            variant.eval_angle(th) * (kf * th).cos()
        })?;
        return Ok(2.0 * half / z);
    }
    let vol = sphere_area(d - 1);
    let integral = integrate_doubling(0.0, PI, nodes, QUADRATURE_TOL / vol, |th| {
        variant.eval_angle(th) * gegenbauer_unchecked(k, d, th.cos()) * th.sin().powi(d as i32 - 1)
    })?;
    Ok(vol * integral)
}

/// The one-dimensional integrals the closed forms are assembled from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceIntegral {
    /// `int_0^pi cos^n theta d theta`
    CosPow,
    /// `int_0^pi sin^n theta d theta`
    SinPow,
    /// `int_0^pi theta cos^n theta sin theta d theta`
    ThetaCosPowSin,
    /// `int_0^pi theta cos theta sin^n theta d theta`
    ThetaCosSinPow,
}

impl ReferenceIntegral {
    pub const ALL: [ReferenceIntegral; 4] = [
        ReferenceIntegral::CosPow,
        ReferenceIntegral::SinPow,
        ReferenceIntegral::ThetaCosPowSin,
        ReferenceIntegral::ThetaCosSinPow,
    ];

    /// The integrand, for checking the closed form numerically.
    pub fn integrand(self, n: usize, theta: f64) -> f64 {
        let (c, s) = (theta.cos(), theta.sin());
        let n = n as i32;
        match self {
            ReferenceIntegral::CosPow => c.powi(n),
            ReferenceIntegral::SinPow => s.powi(n),
            ReferenceIntegral::ThetaCosPowSin => theta * c.powi(n) * s,
            ReferenceIntegral::ThetaCosSinPow => theta * c * s.powi(n),
        }
    }
}

/// `binom(2m, m) / 4^m`, accumulated as a product to avoid overflow.
fn central_ratio(m: usize) -> f64 {
    (1..=m).map(|j| (2 * j - 1) as f64 / (2 * j) as f64).product()
}

/// `int_0^pi cos^n` (even n) and `int_0^pi sin^n` (any n).
fn sin_pow(n: usize) -> f64 {
    if n % 2 == 0 {
        PI * central_ratio(n / 2)
    } else {
        // 2^{n+1} / ((n+1) binom(n, (n+1)/2)) with n = 2m - 1
        let m = n.div_ceil(2);
        1.0 / (m as f64 * central_ratio(m))
    }
}

/// Closed-form value of a reference integral.
pub fn reference_integral(which: ReferenceIntegral, n: usize) -> f64 {
    match which {
        ReferenceIntegral::CosPow if n % 2 == 1 => 0.0,
        ReferenceIntegral::CosPow | ReferenceIntegral::SinPow => sin_pow(n),
        ReferenceIntegral::ThetaCosPowSin => {
            let m = (n + 1) as f64;
            if n % 2 == 0 {
                PI / m
            } else {
                PI / m * (central_ratio((n + 1) / 2) - 1.0)
            }
        }
        ReferenceIntegral::ThetaCosSinPow => -sin_pow(n + 1) / (n + 1) as f64,
    }
}

/// Decay exponent: least-squares slope of `-log c_k` against `log k` over the
/// nonzero coefficients with `k` in `[k_max/2, k_max]`.
///
/// d = 1 uses the circle closed forms, even d the exact sums.
pub fn convergence_exponent(variant: KernelVariant, d: usize, k_max: usize) -> Result<f64> {
    if k_max < 100 {
        return Err(Error::Argument(format!("k_max must be >= 100, got {k_max}")));
    }
    if d != 1 && d % 2 == 1 {
        return Err(Error::OddDimension(d));
    }
    let values: Vec<(usize, f64)> = (k_max / 2..=k_max)
        .into_par_iter()
        .map(|k| {
            let c = if d == 1 {
                circle_coefficient(variant, k)
            } else {
                sphere_coefficient(variant, k, d)?
            };
            Ok((k, c))
        })
        .collect::<Result<_>>()?;
    let pts: Vec<(f64, f64)> = values
        .into_iter()
        .filter(|&(_, c)| c > 0.0)
        .map(|(k, c)| ((k as f64).ln(), -c.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InsufficientPoints { needed: 2, have: pts.len() });
    }
    Ok(ols(&pts).0)
}

/// Ordinary least squares `y = slope x + intercept`; returns
/// `(slope, intercept, slope standard error)`.
pub(crate) fn ols(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if pts.len() > 2 {
        let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, stderr)
}

/// Coefficient estimates read off a sampled Gram matrix.
///
/// d = 1: the circulant eigenvalue of frequency `k` on an `n`-point grid,
/// scaled by `2 pi / (n z_k)`. d >= 2: the Rayleigh quotient of a zonal
/// harmonic on `n` uniform samples, scaled by `|S^d| / n`.
pub fn matrix_coefficients(variant: KernelVariant, d: usize, k_max: usize, n: usize, seed: u64) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::Argument("sphere dimension must be >= 1".into()));
    }
    if d == 1 {
        let gram = gram_matrix(&uniform_circle_grid(n), variant)?;
        let spec = matrix_spectrum_with(&gram, Route::Circulant)?;
        return (0..=k_max)
            .map(|k| {
                let lambda = spec
                    .frequency_eigenvalue(k)
                    .ok_or_else(|| Error::Argument(format!("frequency {k} exceeds grid size {n}")))?;
                let z = if k == 0 { 2.0 * PI } else { PI };
                Ok(2.0 * PI * lambda / (n as f64 * z))
            })
            .collect();
    }
    let points = sample_uniform_sphere(n, d, seed);
    let gram = gram_matrix(&points, variant)?;
    let area = sphere_area(d);
    (0..=k_max)
        .map(|k| {
            let y = harmonic_labels(&points, &HarmonicLabelSpec::zonal_random_pole(k, d, seed))?;
            let hy = gram.mul_vec(&y);
            let num: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            let den: f64 = y.iter().map(|a| a * a).sum();
            Ok(area * num / (den * n as f64))
        })
        .collect()
}

/// Writes `variant,d,k,source,value` rows with a header.
pub fn write_spectrum_csv<W: Write>(entries: &[SpectrumEntry], mut w: W) -> Result<()> {
    writeln!(w, "variant,d,k,source,value")?;
    for e in entries {
        writeln!(w, "{},{},{},{},{:e}", e.variant, e.d, e.k, e.source, e.value)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn agree(closed: f64, quad: f64) -> bool {
        if closed == 0.0 {
            quad.abs() <= 1e-12
        } else {
            ((closed - quad) / closed).abs() <= 1e-8
        }
    }

    #[test]
    fn circle_examples() {
        let pi2 = PI * PI;
        assert_eq!(circle_coefficient(KernelVariant::BiasFree, 0), 1.0 / pi2);
        assert_eq!(circle_coefficient(KernelVariant::BiasFree, 1), 0.25);
        assert_relative_eq!(circle_coefficient(KernelVariant::BiasFree, 2), 10.0 / (9.0 * pi2), max_relative = 1e-15);
        assert_eq!(circle_coefficient(KernelVariant::BiasFree, 3), 0.0);
        assert_relative_eq!(circle_coefficient(KernelVariant::WithBias, 0), 0.1756606, epsilon = 1e-7);
        assert_relative_eq!(circle_coefficient(KernelVariant::WithBias, 3), 0.0112579, epsilon = 1e-7);
    }

    #[test]
    fn circle_quadrature_matches_closed_form() {
        for v in KernelVariant::ALL {
            for k in 0..=30 {
                let q = eigen_quadrature(v, k, 1, default_nodes(k, 1)).unwrap();
                assert!((q - circle_coefficient(v, k)).abs() < 1e-10, "{v} k={k}: {q}");
            }
        }
        // guards the (k^2-1)^2 denominator of the even row
        let q = eigen_quadrature(KernelVariant::BiasFree, 2, 1, 32).unwrap();
        assert!((q - 10.0 / (9.0 * PI * PI)).abs() < 1e-12);
    }

    #[test]
    fn sphere_quadrature_matches_closed_form() {
        for v in KernelVariant::ALL {
            for d in [2, 4, 6] {
                for k in 0..=20 {
                    let c = sphere_coefficient(v, k, d).unwrap();
                    let q = eigen_quadrature(v, k, d, default_nodes(k, d)).unwrap();
                    assert!(agree(c, q), "{v} d={d} k={k}: closed {c} quad {q}");
                }
            }
        }
    }

    #[test]
    fn sphere_examples() {
        assert_eq!(sphere_coefficient(KernelVariant::BiasFree, 3, 2).unwrap(), 0.0);
        assert!(eigen_quadrature(KernelVariant::BiasFree, 5, 2, 64).unwrap().abs() < 1e-9);
        assert!((eigen_quadrature(KernelVariant::BiasFree, 1, 1, 64).unwrap() - 0.25).abs() < 1e-10);
        assert!(matches!(sphere_coefficient(KernelVariant::WithBias, 1, 3), Err(Error::OddDimension(3))));
    }

    #[test]
    fn with_bias_positive_up_to_1000() {
        let all_positive = (1..=1000usize)
            .into_par_iter()
            .all(|k| sphere_coefficient_exact(KernelVariant::WithBias, k, 2).unwrap().is_positive());
        assert!(all_positive);
        for k in 1..=50 {
            assert!(eigen_quadrature(KernelVariant::WithBias, k, 2, default_nodes(k, 2)).unwrap() > 0.0);
        }
    }

    #[test]
    fn odd_null_space() {
        for d in [1usize, 2, 4] {
            for k in [3, 5, 7, 9] {
                if d > 1 {
                    assert!(sphere_coefficient_exact(KernelVariant::BiasFree, k, d).unwrap().is_zero());
                } else {
                    assert_eq!(circle_coefficient(KernelVariant::BiasFree, k), 0.0);
                }
                assert!(eigen_quadrature(KernelVariant::BiasFree, k, d, 96).unwrap().abs() <= 1e-9);
                assert!(coefficient(KernelVariant::WithBias, k, d).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn monotone_decay_within_parity() {
        for d in [1usize, 2, 4] {
            let c: Vec<f64> = (0..=100).map(|k| coefficient(KernelVariant::WithBias, k, d).unwrap()).collect();
            for k in 2..=98 {
                assert!(c[k + 2] < c[k], "d={d} k={k}");
            }
        }
    }

    #[test]
    fn alternate_k1_row_agrees_with_general_sum() {
        for d in [2, 4, 6, 8] {
            let row = bias_free_k1_row_exact(d).unwrap();
            let general = sphere_coefficient_exact(KernelVariant::BiasFree, 1, d).unwrap();
            assert_eq!(row, general, "d={d}");
            let q = eigen_quadrature(KernelVariant::BiasFree, 1, d, 96).unwrap();
            assert!(agree(general.to_f64(), q));
        }
    }

    #[test]
    fn bias_dc_term_without_extra_half() {
        // the DC bias term enters c_0 = (a_0 + b_0) / 2 without a further factor 1/2
        for d in [2, 4, 6] {
            let b0 = bias_part_exact(0, d).unwrap().to_f64();
            let quad = 2.0 * eigen_quadrature(KernelVariant::WithBias, 0, d, 96).unwrap()
                - eigen_quadrature(KernelVariant::BiasFree, 0, d, 96).unwrap();
            assert!(agree(b0, quad), "d={d}: {b0} vs {quad}");
            let halved = bias_dc_half_factor_exact(d).unwrap().to_f64();
            assert!(!agree(halved, quad), "d={d}");
        }
    }

    #[test]
    fn constants() {
        let c = CoefficientConstants::new(2, 0).unwrap();
        assert!((c.vol - 2.0 * PI).abs() < 1e-12);
        let c = CoefficientConstants::new(4, 3).unwrap();
        assert!((c.vol - 2.0 * PI * PI).abs() < 1e-12);
        // C1(4,3) = 2 pi^2 (-1)^3 / (2^3 * 4!)
        assert_relative_eq!(c.c1, -2.0 * PI * PI / (8.0 * 24.0), max_relative = 1e-14);
        // p = 4, q = 2: binom(4,2) (4)!/(1)! = 6 * 24
        assert_eq!(c.c2(2), 144.0);
        assert_eq!(c.c2(1), 0.0);
        assert_relative_eq!(sphere_area(2), 4.0 * PI, max_relative = 1e-15);
    }

    #[test]
    fn floating_closed_form_matches_exact_for_small_k() {
        // direct evaluation with the float constants, fine while cancellation is mild
        for k in 0..=6usize {
            for d in [2usize, 4] {
                let c = CoefficientConstants::new(d, k).unwrap();
                let sum: f64 = (k.div_ceil(2)..=c.p())
                    .map(|q| {
                        let n = 2 * q - k;
                        let term = if k % 2 == 0 {
                            (1.0 - central_ratio((n + 2) / 2)) / (2.0 * (n + 2) as f64)
                        } else {
                            1.0 / (2.0 * (n + 2) as f64)
                        };
                        c.c2(q) * term
                    })
                    .sum();
                let exact = sphere_coefficient(KernelVariant::BiasFree, k, d).unwrap();
                assert!((c.c1 * sum - exact).abs() < 1e-13, "k={k} d={d}");
            }
        }
    }

    #[test]
    fn reference_integral_examples() {
        assert_relative_eq!(reference_integral(ReferenceIntegral::CosPow, 2), PI / 2.0, max_relative = 1e-15);
        assert_relative_eq!(reference_integral(ReferenceIntegral::SinPow, 3), 4.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(reference_integral(ReferenceIntegral::ThetaCosPowSin, 1), -PI / 4.0, max_relative = 1e-15);
        for which in ReferenceIntegral::ALL {
            for n in 0..=20 {
                let q = integrate_doubling(0.0, PI, 64, 1e-12, |t| which.integrand(n, t)).unwrap();
                assert!((q - reference_integral(which, n)).abs() < 1e-10, "{which:?} n={n}");
            }
        }
    }

    #[test]
    fn exponent_on_circle() {
        let g = convergence_exponent(KernelVariant::WithBias, 1, 1000).unwrap();
        assert!((g - 2.0).abs() < 0.05, "{g}");
        assert!(convergence_exponent(KernelVariant::WithBias, 3, 1000).is_err());
        assert!(convergence_exponent(KernelVariant::WithBias, 2, 50).is_err());
    }

    #[test]
    fn matrix_estimates_on_circle() {
        for v in KernelVariant::ALL {
            let est = matrix_coefficients(v, 1, 10, 1001, 0).unwrap();
            for (k, e) in est.iter().enumerate() {
                let c = circle_coefficient(v, k);
                if c == 0.0 {
                    assert!(e.abs() < 1e-6);
                } else {
                    assert!(((e - c) / c).abs() < 0.01, "{v} k={k}");
                }
            }
        }
    }

    #[test]
    fn spectrum_csv_shape() {
        let entries: Vec<SpectrumEntry> = (0..3)
            .map(|k| SpectrumEntry {
                k,
                d: 1,
                variant: KernelVariant::WithBias,
                value: circle_coefficient(KernelVariant::WithBias, k),
                source: Source::ClosedForm,
            })
            .collect();
        let mut buf = Vec::new();
        write_spectrum_csv(&entries, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("variant,d,k,source,value\n"));
        assert!(text.lines().nth(1).unwrap().starts_with("with_bias,1,0,closed_form,"));
    }

    proptest! {
        #[test]
        fn coefficients_nonnegative(k in 0usize..60, d in prop::sample::select(vec![1usize, 2, 4, 6])) {
            for v in KernelVariant::ALL {
                prop_assert!(coefficient(v, k, d).unwrap() >= -1e-9);
            }
        }

        #[test]
        fn quadrature_is_stable_under_more_nodes(k in 0usize..25, extra in 0usize..64) {
            let a = eigen_quadrature(KernelVariant::WithBias, k, 3, default_nodes(k, 3)).unwrap();
            let b = eigen_quadrature(KernelVariant::WithBias, k, 3, default_nodes(k, 3) + extra).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
