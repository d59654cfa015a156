//! The infinite-width kernels of a two-layer ReLU network and their Gram
//! matrices, plus the finite-width Gram matrix of a sampled network.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics::{angle_between, clamped_dot, common_dim, UnitPoint};
use crate::rng::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelVariant {
    BiasFree,
    WithBias,
}

impl KernelVariant {
    pub const ALL: [KernelVariant; 2] = [KernelVariant::BiasFree, KernelVariant::WithBias];

    /// Kernel value at inner product `t`.
    pub fn eval(self, t: f64) -> f64 {
        match self {
            KernelVariant::BiasFree => k_infinity(t),
            KernelVariant::WithBias => k_bar_infinity(t),
        }
    }

    /// Kernel value at angle `theta` between the inputs, `t = cos theta`.
    pub fn eval_angle(self, theta: f64) -> f64 {
        let c = theta.cos();
        match self {
            KernelVariant::BiasFree => c * (PI - theta) / (2.0 * PI),
            KernelVariant::WithBias => (c + 1.0) * (PI - theta) / (4.0 * PI),
        }
    }

    pub fn has_bias(self) -> bool {
        self == KernelVariant::WithBias
    }

    fn tag(self) -> u64 {
        match self {
            KernelVariant::BiasFree => 0,
            KernelVariant::WithBias => 1,
        }
    }

    fn from_tag(tag: u64) -> Result<Self> {
        match tag {
            0 => Ok(KernelVariant::BiasFree),
            1 => Ok(KernelVariant::WithBias),
            other => Err(Error::Argument(format!("unknown kernel variant tag {other}"))),
        }
    }
}

impl fmt::Display for KernelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelVariant::BiasFree => "bias_free",
            KernelVariant::WithBias => "with_bias",
        })
    }
}

impl FromStr for KernelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "bias_free" | "biasfree" | "nobias" | "no_bias" => Ok(KernelVariant::BiasFree),
            "with_bias" | "withbias" | "bias" => Ok(KernelVariant::WithBias),
            other => Err(Error::Argument(format!("unknown kernel variant '{other}'"))),
        }
    }
}

/// `t (pi - arccos t) / (2 pi)`.
pub fn k_infinity(t: f64) -> f64 {
    let t = t.clamp(-1.0, 1.0);
    t * (PI - t.acos()) / (2.0 * PI)
}

/// `(t + 1)(pi - arccos t) / (4 pi)`.
pub fn k_bar_infinity(t: f64) -> f64 {
    let t = t.clamp(-1.0, 1.0);
    (t + 1.0) * (PI - t.acos()) / (4.0 * PI)
}

/// Additive split of the kernels: `K = K1 + K2` and `Kbar = (K1+K2+K3+K4)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParts {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
}

pub fn kernel_parts(t: f64) -> KernelParts {
    let t = t.clamp(-1.0, 1.0);
    let theta = t.acos();
    KernelParts {
        k1: t / 2.0,
        k2: -t * theta / (2.0 * PI),
        k3: 0.5,
        k4: -theta / (2.0 * PI),
    }
}

/// `x -> (x, 1) / sqrt(2)`, a unit vector one dimension up.
pub fn homogeneous_lift(x: &UnitPoint) -> UnitPoint {
    let mut coords: Vec<f64> = x.coords().iter().map(|c| c * FRAC_1_SQRT_2).collect();
    coords.push(FRAC_1_SQRT_2);
    let d = x.sphere_dim() + 1;
    // the norm is 1 up to rounding of 1/sqrt(2); renormalize through the checked path
    UnitPoint::new(coords.clone(), d).unwrap_or_else(|_| UnitPoint::normalized(coords).unwrap())
}

/// Where a Gram matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GramSource {
    /// Expected kernel, `m -> infinity`.
    Infinite,
    /// Sampled network of width `m`.
    Empirical { m: usize, kappa: f64, seed: u64 },
    /// Read from disk or built by hand.
    External,
}

/// Dense symmetric `n x n` kernel matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    entries: Vec<f64>,
    variant: KernelVariant,
    source: GramSource,
}

impl GramMatrix {
    pub fn from_row_major(n: usize, entries: Vec<f64>, variant: KernelVariant) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: entries.len(),
            });
        }
        Ok(Self {
            n,
            entries,
            variant,
            source: GramSource::External,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn variant(&self) -> KernelVariant {
        self.variant
    }

    pub fn source(&self) -> GramSource {
        self.source
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.entries)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// True when every row is a cyclic shift of the first, within `tol`.
    pub fn is_circulant(&self, tol: f64) -> bool {
        let n = self.n;
        let first = self.row(0);
        (1..n).all(|i| (0..n).all(|j| (self.get(i, j) - first[(j + n - i) % n]).abs() <= tol))
    }

    pub fn frobenius_distance(&self, other: &GramMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Binary layout: `n` and the variant tag as little-endian u64, then
    /// `n * n` little-endian f64 in row-major order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&self.variant.tag().to_le_bytes())?;
        for v in &self.entries {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let n = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let variant = KernelVariant::from_tag(u64::from_le_bytes(word))?;
        let mut entries = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            r.read_exact(&mut word)?;
            entries.push(f64::from_le_bytes(word));
        }
        GramMatrix::from_row_major(n, entries, variant)
    }

    pub fn save_binary(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_binary(f)
    }

    pub fn load_binary(path: &Path) -> Result<Self> {
        Self::read_binary(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    /// Plain CSV, one matrix row per line, no header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for i in 0..self.n {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Gram matrix of the infinite-width kernel over `points`.
pub fn gram_matrix(points: &[UnitPoint], variant: KernelVariant) -> Result<GramMatrix> {
    common_dim(points)?;
    let n = points.len();
    let mut entries = vec![0.0; n * n];
    entries.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = variant.eval_angle(angle_between(points[i].coords(), points[j].coords()));
        }
    });
    // symmetrize exactly; the angles are evaluated in different orders
    for i in 0..n {
        for j in 0..i {
            entries[i * n + j] = entries[j * n + i];
        }
    }
    Ok(GramMatrix {
        n,
        entries,
        variant,
        source: GramSource::Infinite,
    })
}

/// Gram matrix `H = Z^T Z` of a network of width `m` at initialization.
///
/// `w_r ~ N(0, kappa^2 I)`; biases start at zero, so both variants share the
/// same activity pattern `1[w_r . x >= 0]` and differ only in the input inner
/// product (`x_i . x_j` versus `(x_i . x_j + 1) / 2`).
pub fn empirical_gram(
    points: &[UnitPoint],
    variant: KernelVariant,
    m: usize,
    kappa: f64,
    seed: u64,
) -> Result<GramMatrix> {
    let dim = common_dim(points)?;
    if m == 0 {
        return Err(Error::Argument("width m must be >= 1".into()));
    }
    if !(kappa > 0.0) {
        return Err(Error::Argument("kappa must be > 0".into()));
    }
    let n = points.len();
    let mut r = rng::seeded(seed, stream::EMPIRICAL_GRAM);
    let weights = rng::normal_vec(&mut r, m * dim, kappa);

    // activity bitsets, one per point
    let words = m.div_ceil(64);
    let active: Vec<Vec<u64>> = points
        .par_iter()
        .map(|p| {
            let mut bits = vec![0u64; words];
            for (unit, w) in weights.chunks_exact(dim).enumerate() {
                let z: f64 = w.iter().zip(p.coords()).map(|(a, b)| a * b).sum();
                if z >= 0.0 {
                    bits[unit / 64] |= 1 << (unit % 64);
                }
            }
            bits
        })
        .collect();

    let mut entries = vec![0.0; n * n];
    entries.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, slot) in row.iter_mut().enumerate() {
            let both: u32 = active[i]
                .iter()
                .zip(&active[j])
                .map(|(a, b)| (a & b).count_ones())
                .sum();
            let t = clamped_dot(points[i].coords(), points[j].coords());
            let ip = if variant.has_bias() { 0.5 * (t + 1.0) } else { t };
            *slot = ip * both as f64 / m as f64;
        }
    });
    for i in 0..n {
        for j in 0..i {
            entries[i * n + j] = entries[j * n + i];
        }
    }
    Ok(GramMatrix {
        n,
        entries,
        variant,
        source: GramSource::Empirical { m, kappa, seed },
    })
}
