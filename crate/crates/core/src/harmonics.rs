//! Points on the hypersphere, zonal harmonics and data generation.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, stream};

/// Tolerance on the unit-norm invariant.
pub const NORM_TOL: f64 = 1e-12;

/// A point on S^d, stored either in its intrinsic `d+1` coordinates or
/// embedded in a larger ambient space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitPoint {
    coords: Vec<f64>,
    sphere_dim: usize,
}

impl UnitPoint {
    /// Wraps coordinates that are already unit norm.
    pub fn new(coords: Vec<f64>, sphere_dim: usize) -> Result<Self> {
        if sphere_dim == 0 {
            return Err(Error::Argument("sphere dimension must be >= 1".into()));
        }
        if coords.len() < sphere_dim + 1 {
            return Err(Error::DimensionMismatch {
                expected: sphere_dim + 1,
                found: coords.len(),
            });
        }
        let norm = norm(&coords);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Domain(format!("point has norm {norm}, expected 1")));
        }
        Ok(Self { coords, sphere_dim })
    }

    /// Normalizes `v` onto the sphere of dimension `v.len() - 1`.
    pub fn normalized(v: Vec<f64>) -> Result<Self> {
        let n = norm(&v);
        if v.len() < 2 || n == 0.0 || !n.is_finite() {
            return Err(Error::Argument("cannot normalize a zero or 1-d vector".into()));
        }
        let sphere_dim = v.len() - 1;
        Ok(Self {
            coords: v.into_iter().map(|x| x / n).collect(),
            sphere_dim,
        })
    }

    /// The point `(cos theta, sin theta)` on S^1.
    pub fn from_angle(theta: f64) -> Self {
        Self {
            coords: vec![theta.cos(), theta.sin()],
            sphere_dim: 1,
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn sphere_dim(&self) -> usize {
        self.sphere_dim
    }

    /// Length of the coordinate vector (d+1 intrinsic, larger when embedded).
    pub fn ambient_dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_intrinsic(&self) -> bool {
        self.coords.len() == self.sphere_dim + 1
    }

    /// Polar angle on S^1, only meaningful for intrinsic circle points.
    pub fn angle(&self) -> Result<f64> {
        if self.sphere_dim != 1 || !self.is_intrinsic() {
            return Err(Error::Argument("angle() needs an intrinsic point on S^1".into()));
        }
        Ok(self.coords[1].atan2(self.coords[0]))
    }

    /// Inner product clamped to [-1, 1].
    pub fn dot(&self, other: &UnitPoint) -> Result<f64> {
        if self.coords.len() != other.coords.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coords.len(),
                found: other.coords.len(),
            });
        }
        Ok(clamped_dot(&self.coords, &other.coords))
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn clamped_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().clamp(-1.0, 1.0)
}

/// Angle between unit vectors, `2 atan2(|a - b|, |a + b|)`; accurate near 0
/// and pi where `arccos` of the dot product loses half the digits.
pub fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let (mut minus, mut plus) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        minus += (x - y) * (x - y);
        plus += (x + y) * (x + y);
    }
    2.0 * minus.sqrt().atan2(plus.sqrt())
}

/// Checks that every point has the same coordinate length and returns it.
pub(crate) fn common_dim(points: &[UnitPoint]) -> Result<usize> {
    let first = points
        .first()
        .ok_or_else(|| Error::Empty("no points".into()))?
        .ambient_dim();
    for p in points {
        if p.ambient_dim() != first {
            return Err(Error::DimensionMismatch {
                expected: first,
                found: p.ambient_dim(),
            });
        }
    }
    Ok(first)
}

/// Normalized Gegenbauer polynomial `P_{k,d}(t)` with `P_{k,d}(1) = 1`, the
/// zonal harmonic of degree `k` on S^d.
pub fn gegenbauer(k: usize, d: usize, t: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::Argument(format!(
            "Gegenbauer polynomials need d >= 2, got {d}"
        )));
    }
    if !(t.abs() <= 1.0 + 1e-12) {
        return Err(Error::Domain(format!("|t| = {} > 1", t.abs())));
    }
    Ok(gegenbauer_unchecked(k, d, t.clamp(-1.0, 1.0)))
}

/// Three-term recurrence
/// `(k+d-1) P_{k+1} = (2k+d-1) t P_k - k P_{k-1}`.
pub(crate) fn gegenbauer_unchecked(k: usize, d: usize, t: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let d = d as f64;
    let (mut prev, mut cur) = (1.0, t);
    for j in 1..k {
        let j = j as f64;
        let next = ((2.0 * j + d - 1.0) * t * cur - j * prev) / (j + d - 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

pub fn circle_harmonic(k: i64, phase: f64, theta: f64) -> f64 {
    (k as f64 * theta - phase).cos()
}

/// Which harmonic to sample as labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicLabelSpec {
    pub frequency: usize,
    pub sphere_dim: usize,
    /// Phase of `cos(k theta - phase)`; used on S^1 only.
    pub phase: f64,
    /// Pole of the zonal harmonic; required for d >= 2.
    pub pole: Option<UnitPoint>,
}

impl HarmonicLabelSpec {
    pub fn circle(frequency: usize, phase: f64) -> Self {
        Self {
            frequency,
            sphere_dim: 1,
            phase,
            pole: None,
        }
    }

    pub fn zonal(frequency: usize, pole: UnitPoint) -> Self {
        Self {
            frequency,
            sphere_dim: pole.sphere_dim(),
            phase: 0.0,
            pole: Some(pole),
        }
    }

    /// Zonal harmonic about a pole drawn uniformly from S^d.
    pub fn zonal_random_pole(frequency: usize, d: usize, seed: u64) -> Self {
        let mut r = rng::seeded(seed, stream::POLE);
        let pole = loop {
            let v = rng::normal_vec(&mut r, d + 1, 1.0);
            if let Ok(p) = UnitPoint::normalized(v) {
                break p;
            }
        };
        Self::zonal(frequency, pole)
    }
}

/// Evaluates the label function at every point.
///
/// Points must be given in the same coordinates as the pole (intrinsic
/// coordinates on S^1); embed after labelling.
pub fn harmonic_labels(points: &[UnitPoint], spec: &HarmonicLabelSpec) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|p| {
            if p.sphere_dim() != spec.sphere_dim {
                return Err(Error::DimensionMismatch {
                    expected: spec.sphere_dim,
                    found: p.sphere_dim(),
                });
            }
            if spec.sphere_dim == 1 {
                if !p.is_intrinsic() {
                    return Err(Error::DimensionMismatch {
                        expected: 2,
                        found: p.ambient_dim(),
                    });
                }
                Ok(circle_harmonic(spec.frequency as i64, spec.phase, p.angle()?))
            } else {
                let pole = spec
                    .pole
                    .as_ref()
                    .ok_or_else(|| Error::Argument("zonal labels need a pole".into()))?;
                let t = p.dot(pole)?;
                Ok(gegenbauer_unchecked(spec.frequency, spec.sphere_dim, t))
            }
        })
        .collect()
}

/// `n` equally spaced points at angles `2 pi i / n`.
pub fn uniform_circle_grid(n: usize) -> Vec<UnitPoint> {
    circle_grid_angles(n).into_iter().map(UnitPoint::from_angle).collect()
}

pub fn circle_grid_angles(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}

/// `n` i.i.d. uniform points on S^d from normalized Gaussian draws.
pub fn sample_uniform_sphere(n: usize, d: usize, seed: u64) -> Vec<UnitPoint> {
    let mut r = rng::seeded(seed, stream::SPHERE);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let v = rng::normal_vec(&mut r, d + 1, 1.0);
        // a zero draw has probability zero; skip it rather than divide by it
        if let Ok(p) = UnitPoint::normalized(v) {
            out.push(p);
        }
    }
    out
}

/// Orthonormal `ambient_dim x (d+1)` isometry from a QR-orthonormalized
/// seeded Gaussian matrix.
pub fn random_isometry(intrinsic_dim: usize, ambient_dim: usize, seed: u64) -> Result<DMatrix<f64>> {
    if ambient_dim < intrinsic_dim {
        return Err(Error::Argument(format!(
            "ambient dimension {ambient_dim} < intrinsic dimension {intrinsic_dim}"
        )));
    }
    let mut r = rng::seeded(seed, stream::ROTATION);
    let g = DMatrix::from_fn(ambient_dim, intrinsic_dim, |_, _| rng::standard_normal(&mut r));
    Ok(g.qr().q())
}

/// Applies one shared random isometry to every point.
pub fn embed_random_rotation(
    points: &[UnitPoint],
    ambient_dim: usize,
    seed: u64,
) -> Result<Vec<UnitPoint>> {
    let dim = common_dim(points)?;
    let q = random_isometry(dim, ambient_dim, seed)?;
    Ok(points
        .iter()
        .map(|p| {
            let coords = (0..ambient_dim)
                .map(|row| (0..dim).map(|c| q[(row, c)] * p.coords[c]).sum())
                .collect();
            UnitPoint {
                coords,
                sphere_dim: p.sphere_dim,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Rodrigues form evaluated with exact polynomial arithmetic, valid for
    /// even d: P_{k,d}(t) = (-1)^k / 2^k * G(d/2)/G(k+d/2) * (1-t^2)^{-(d-2)/2}
    /// * D^k (1-t^2)^{k+(d-2)/2}.
    fn rodrigues(k: usize, d: usize, t: f64) -> f64 {
        assert!(d % 2 == 0);
        let p = k + (d - 2) / 2;
        // coefficients of (1-t^2)^p in powers of t
        let mut coef = vec![0.0f64; 2 * p + 1];
        let mut binom = 1.0;
        for q in 0..=p {
            coef[2 * q] = if q % 2 == 0 { binom } else { -binom };
            binom = binom * (p - q) as f64 / (q + 1) as f64;
        }
        for _ in 0..k {
            coef = (1..coef.len()).map(|i| coef[i] * i as f64).collect();
        }
        let deriv: f64 = coef.iter().rev().fold(0.0, |acc, c| acc * t + c);
        let mut gamma_ratio = 1.0; // G(d/2)/G(k+d/2)
        for j in 0..k {
            gamma_ratio /= (d / 2 + j) as f64;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let weight = (1.0 - t * t).powi((d as i32 - 2) / 2);
        sign / 2f64.powi(k as i32) * gamma_ratio * deriv / weight
    }

    #[test]
    fn gegenbauer_examples() {
        assert_eq!(gegenbauer(0, 2, 0.37).unwrap(), 1.0);
        assert_abs_diff_eq!(gegenbauer(1, 4, -0.5).unwrap(), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(gegenbauer(2, 2, 0.0).unwrap(), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(gegenbauer(5, 2, 1.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rodrigues(2, 2, 0.0), -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(rodrigues(5, 2, 0.999_999), 1.0, epsilon = 1e-4);
    }

    #[test]
    fn gegenbauer_errors() {
        assert!(matches!(gegenbauer(2, 1, 0.0), Err(Error::Argument(_))));
        assert!(matches!(gegenbauer(2, 3, 1.1), Err(Error::Domain(_))));
        assert!(gegenbauer(2, 3, 1.0 + 1e-13).is_ok());
    }

    #[test]
    fn recurrence_matches_rodrigues() {
        for d in [2, 4] {
            for k in 0..=6 {
                for i in 0..=40 {
                    let t = -0.95 + 1.9 * i as f64 / 40.0;
                    let a = gegenbauer(k, d, t).unwrap();
                    let b = rodrigues(k, d, t);
                    assert!((a - b).abs() <= 1e-10, "k={k} d={d} t={t}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn parity() {
        for d in [2, 4, 6] {
            for k in 0..=10 {
                for i in 0..25 {
                    let t = i as f64 / 24.0;
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    let lhs = gegenbauer(k, d, -t).unwrap();
                    let rhs = sign * gegenbauer(k, d, t).unwrap();
                    assert!((lhs - rhs).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn legendre_orthogonality() {
        let rule = crate::quadrature::GaussLegendre::new(32);
        for k in 0..=8 {
            for kp in 0..=8 {
                if k == kp {
                    continue;
                }
                let v = rule.integrate(-1.0, 1.0, |t| {
                    gegenbauer_unchecked(k, 2, t) * gegenbauer_unchecked(kp, 2, t)
                });
                assert!(v.abs() <= 1e-10, "k={k} k'={kp}: {v}");
            }
        }
    }

    #[test]
    fn circle_harmonic_examples() {
        assert_eq!(circle_harmonic(0, 0.0, 1.234), 1.0);
        assert_abs_diff_eq!(circle_harmonic(4, 0.0, PI / 4.0), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(circle_harmonic(3, PI / 2.0, PI / 6.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn label_examples() {
        let pts = sample_uniform_sphere(20, 2, 3);
        let spec = HarmonicLabelSpec::zonal_random_pole(0, 2, 9);
        assert!(harmonic_labels(&pts, &spec).unwrap().iter().all(|&y| y == 1.0));

        let pole = UnitPoint::new(vec![0.0, 0.0, 1.0], 2).unwrap();
        let equator = UnitPoint::new(vec![1.0, 0.0, 0.0], 2).unwrap();
        let spec = HarmonicLabelSpec::zonal(7, pole.clone());
        let y = harmonic_labels(&[pole.clone(), equator.clone()], &spec).unwrap();
        assert_abs_diff_eq!(y[0], 1.0, epsilon = 1e-13);
        let spec2 = HarmonicLabelSpec::zonal(2, pole);
        assert_abs_diff_eq!(harmonic_labels(&[equator], &spec2).unwrap()[0], -0.5, epsilon = 1e-15);

        let circle = uniform_circle_grid(8);
        let err = harmonic_labels(&circle, &spec2).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn grid_examples() {
        let g = uniform_circle_grid(4);
        let expect = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        for (p, (x, y)) in g.iter().zip(expect) {
            assert_abs_diff_eq!(p.coords()[0], x, epsilon = 1e-15);
            assert_abs_diff_eq!(p.coords()[1], y, epsilon = 1e-15);
        }
        let g = uniform_circle_grid(2);
        assert_abs_diff_eq!(g[0].dot(&g[1]).unwrap(), -1.0, epsilon = 1e-15);

        let angles = circle_grid_angles(1001);
        let gap = 2.0 * PI / 1001.0;
        for w in angles.windows(2) {
            assert_abs_diff_eq!(w[1] - w[0], gap, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(2.0 * PI - angles[1000], gap, epsilon = 1e-12);
    }

    #[test]
    fn sphere_sampling() {
        let one = sample_uniform_sphere(1, 2, 5);
        assert_eq!(one[0].ambient_dim(), 3);
        assert_abs_diff_eq!(norm(one[0].coords()), 1.0, epsilon = 1e-12);
        assert_eq!(sample_uniform_sphere(50, 3, 11), sample_uniform_sphere(50, 3, 11));
        assert_ne!(sample_uniform_sphere(5, 3, 11), sample_uniform_sphere(5, 3, 12));

        let n = 10_000;
        let pts = sample_uniform_sphere(n, 2, 42);
        let mut mean = [0.0; 3];
        for p in &pts {
            for (m, c) in mean.iter_mut().zip(p.coords()) {
                *m += c / n as f64;
            }
        }
        assert!(norm(&mean) <= 0.05);
    }

    #[test]
    fn circle_sampling_is_uniform() {
        // chi-square with 7 dof, 0.001 critical value 24.32
        let n = 10_000;
        let pts = sample_uniform_sphere(n, 1, 7);
        let mut bins = [0usize; 8];
        for p in &pts {
            let a = p.angle().unwrap().rem_euclid(2.0 * PI);
            bins[((a / (2.0 * PI) * 8.0) as usize).min(7)] += 1;
        }
        let expected = n as f64 / 8.0;
        let chi2: f64 = bins
            .iter()
            .map(|&b| (b as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 24.32, "chi2 = {chi2}");
    }

    fn gram(points: &[UnitPoint]) -> Vec<f64> {
        let mut g = Vec::new();
        for a in points {
            for b in points {
                g.push(a.dot(b).unwrap());
            }
        }
        g
    }

    #[test]
    fn embedding_is_isometric() {
        let pts = sample_uniform_sphere(12, 2, 1);
        let same = embed_random_rotation(&pts, 3, 8).unwrap();
        for (a, b) in gram(&pts).iter().zip(gram(&same)) {
            assert!((a - b).abs() <= 1e-12);
        }
        let circle = uniform_circle_grid(16);
        let big = embed_random_rotation(&circle, 30, 4).unwrap();
        for p in &big {
            assert_eq!(p.ambient_dim(), 30);
            assert_eq!(p.sphere_dim(), 1);
            assert!((norm(p.coords()) - 1.0).abs() <= 1e-12);
        }
        let pair = uniform_circle_grid(2);
        let pair = embed_random_rotation(&pair, 30, 4).unwrap();
        assert!((pair[0].dot(&pair[1]).unwrap() + 1.0).abs() <= 1e-12);
        assert!(embed_random_rotation(&circle, 1, 0).is_err());
    }
}
