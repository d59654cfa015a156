//! Closed-form kernel coefficients on S^d (even d) in exact rational
//! arithmetic.
//!
//! With `p = k + (d-2)/2` and `n = 2q - k`, the coefficient is
//!
//! ```text
//! C1(d,k) * sum_{q = ceil(k/2)}^{p} C2(q,d,k) * term(q)
//! C1(d,k) = Vol(S^{d-1}) * G(d/2) * (-1)^k / (2^k G(k + d/2)) = 2 pi^{d/2} (-1)^k / (2^k (k+d/2-1)!)
//! C2(q,d,k) = (-1)^q binom(p, q) (2q)! / (2q - k)!
//! ```
//!
//! where `term(q)` integrates one monomial `t^n` against the kernel. The
//! alternating sum cancels catastrophically in floating point, so it is
//! carried out over a common denominator in big integers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::kernels::KernelVariant;

/// A coefficient of the form `rational * pi^pi_power`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactCoefficient {
    pub rational: BigRational,
    pub pi_power: u32,
}

impl ExactCoefficient {
    pub fn is_zero(&self) -> bool {
        self.rational.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.rational.is_positive()
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.rational) * std::f64::consts::PI.powi(self.pi_power as i32)
    }
}

/// Correctly scaled conversion even when numerator and denominator overflow f64.
pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let (num, den) = (r.numer(), r.denom());
    let shift = num.bits() as i64 - den.bits() as i64 - 60;
    let q = if shift >= 0 {
        num / (den << (shift as usize))
    } else {
        (num << ((-shift) as usize)) / den
    };
    q.to_f64().unwrap() * 2f64.powi(shift as i32)
}

/// Which pieces of the kernel to transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    /// `K1 + K2`, the bias-free kernel.
    NoBias,
    /// `K3 + K4`, the part the bias adds.
    Bias,
}

fn central_binomial(m: u64) -> BigInt {
    let mut c = BigInt::one();
    for j in 0..m {
        c = c * (2 * j + 1) * (2 * j + 2) / ((j + 1) * (j + 1));
    }
    c
}

fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut c = BigInt::one();
    for j in 0..k {
        c = c * (n - j) / (j + 1);
    }
    c
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, j| acc * j)
}

fn lcm_upto(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, j| acc.lcm(&BigInt::from(j)))
}

/// `sum_q C2(q) * term(q)` scaled by the common denominator `D`, returned
/// together with `D`.
fn scaled_sum(part: Part, k: u64, d: u64) -> (BigInt, BigInt) {
    let p = k + (d - 2) / 2;
    let q0 = k.div_ceil(2);
    let n_max_plus_2 = 2 * p - k + 2;
    let pow = n_max_plus_2 + 1;
    let denom = lcm_upto(n_max_plus_2) << (pow as usize);

    let mut binom_pq = binomial(p, q0);
    // (2q)! / (2q - k)!
    let mut falling: BigInt = ((2 * q0 - k + 1)..=(2 * q0)).fold(BigInt::one(), |acc, j| acc * j);
    // central binomial C(2M, M) with 2M = n + 2 (k even) or n + 1 (k odd)
    let mut m_idx = if k % 2 == 0 { q0 - k / 2 + 1 } else { q0 - (k - 1) / 2 };
    let mut central = central_binomial(m_idx);

    let mut total = BigInt::zero();
    for q in q0..=p {
        let n = 2 * q - k;
        let mut c2 = &binom_pq * &falling;
        if q % 2 == 1 {
            c2 = -c2;
        }
        // term(q) * D as an exact integer
        let scaled = match (part, k % 2 == 0) {
            // 1/(2(n+2)) * (1 - C(n+2, (n+2)/2) / 2^{n+2})
            (Part::NoBias, true) => {
                let a = &denom / (2 * (n + 2));
                let b = (&denom >> ((n + 3) as usize)) * &central / (n + 2);
                a - b
            }
            // 1/(2(n+2))
            (Part::NoBias, false) => &denom / (2 * (n + 2)),
            // k = 0 picks up K3: +1/(n+1) - 1/(2(n+1)) = 1/(2(n+1))
            (Part::Bias, true) if k == 0 => &denom / (2 * (n + 1)),
            // -1/(2(n+1))
            (Part::Bias, true) => -(&denom / (2 * (n + 1))),
            // 1/(2(n+1)) * (1 - C(n+1, (n+1)/2) / 2^{n+1})
            (Part::Bias, false) => {
                let a = &denom / (2 * (n + 1));
                let b = (&denom >> ((n + 2) as usize)) * &central / (n + 1);
                a - b
            }
        };
        total += c2 * scaled;

        if q < p {
            binom_pq = binom_pq * (p - q) / (q + 1);
            falling = falling * (2 * q + 1) * (2 * q + 2) / ((2 * q + 1 - k) * (2 * q + 2 - k));
            central = central * 2 * (2 * m_idx + 1) / (m_idx + 1);
            m_idx += 1;
        }
    }
    (total, denom)
}

/// `C1(d, k) / pi^{d/2}` as a rational, `2 (-1)^k / (2^k (k + d/2 - 1)!)`.
fn c1_rational(k: u64, d: u64) -> BigRational {
    let mut num = BigInt::from(2);
    if k % 2 == 1 {
        num = -num;
    }
    let den = factorial(k + d / 2 - 1) << (k as usize);
    BigRational::new(num, den)
}

fn check_even(d: usize) -> Result<()> {
    if d < 2 || d % 2 == 1 {
        return Err(Error::OddDimension(d));
    }
    Ok(())
}

fn transform(part: Part, k: u64, d: u64) -> BigRational {
    let (sum, denom) = scaled_sum(part, k, d);
    c1_rational(k, d) * BigRational::new(sum, denom)
}

/// Exact `a_k^d` (bias-free) or `c_k^d = (a_k^d + b_k^d) / 2` (with bias).
pub fn sphere_coefficient_exact(variant: KernelVariant, k: usize, d: usize) -> Result<ExactCoefficient> {
    check_even(d)?;
    let (k, dd) = (k as u64, d as u64);
    let a = transform(Part::NoBias, k, dd);
    let rational = match variant {
        KernelVariant::BiasFree => a,
        KernelVariant::WithBias => (a + transform(Part::Bias, k, dd)) / BigInt::from(2),
    };
    Ok(ExactCoefficient {
        rational,
        pi_power: (d / 2) as u32,
    })
}

/// Transform of the bias part `K3 + K4` alone.
pub fn bias_part_exact(k: usize, d: usize) -> Result<ExactCoefficient> {
    check_even(d)?;
    Ok(ExactCoefficient {
        rational: transform(Part::Bias, k as u64, d as u64),
        pi_power: (d / 2) as u32,
    })
}

/// Alternate `k = 1` row for the bias-free kernel, summing `q = 1..=d`
/// instead of `q = 1..=p`. Terms with `q > p` carry `binom(p, q) = 0`.
pub fn bias_free_k1_row_exact(d: usize) -> Result<ExactCoefficient> {
    check_even(d)?;
    let dd = d as u64;
    let p = 1 + (dd - 2) / 2;
    let mut sum = BigRational::zero();
    for q in 1..=dd {
        let mut c2 = binomial(p, q) * BigInt::from(2 * q);
        if q % 2 == 1 {
            c2 = -c2;
        }
        sum += BigRational::new(c2, BigInt::from(2 * (2 * q + 1)));
    }
    Ok(ExactCoefficient {
        rational: c1_rational(1, dd) * sum,
        pi_power: (d / 2) as u32,
    })
}

/// Bias-only DC term carrying an extra leading factor 1/2:
/// `b_0 = (1/2) C1 (2^{d-1} / (d binom(d-1, d/2)) - (1/2) sum_q (-1)^q binom((d-2)/2, q) / (2q+1))`.
pub fn bias_dc_half_factor_exact(d: usize) -> Result<ExactCoefficient> {
    check_even(d)?;
    let dd = d as u64;
    let first = BigRational::new(BigInt::one() << ((dd - 1) as usize), BigInt::from(dd) * binomial(dd - 1, dd / 2));
    let r = (dd - 2) / 2;
    let mut alt = BigRational::zero();
    for q in 0..=r {
        let mut b = binomial(r, q);
        if q % 2 == 1 {
            b = -b;
        }
        alt += BigRational::new(b, BigInt::from(2 * q + 1));
    }
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    Ok(ExactCoefficient {
        rational: c1_rational(0, dd) * &half * (first - half.clone() * alt),
        pi_power: (d / 2) as u32,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_conversion_handles_huge_parts() {
        let big = BigInt::from(10).pow(400u32);
        let r = BigRational::new(&big + 1, big * 3);
        assert!((rational_to_f64(&r) - 1.0 / 3.0).abs() < 1e-16);
        let r = BigRational::new(BigInt::from(-7), BigInt::from(2));
        assert_eq!(rational_to_f64(&r), -3.5);
    }

    #[test]
    fn small_binomials() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(2, 3), BigInt::zero());
        assert_eq!(central_binomial(3), BigInt::from(20));
        assert_eq!(lcm_upto(6), BigInt::from(60));
    }

    #[test]
    fn dc_term_on_s2() {
        // c_0^2 = 5 pi / 8, a_0^2 = pi / 4
        let c = sphere_coefficient_exact(KernelVariant::WithBias, 0, 2).unwrap();
        assert_eq!(c.rational, BigRational::new(5.into(), 8.into()));
        assert_eq!(c.pi_power, 1);
        let a = sphere_coefficient_exact(KernelVariant::BiasFree, 0, 2).unwrap();
        assert_eq!(a.rational, BigRational::new(1.into(), 4.into()));
    }

    #[test]
    fn odd_rows_vanish() {
        for d in [2, 4, 6] {
            for k in (3..40).step_by(2) {
                assert!(sphere_coefficient_exact(KernelVariant::BiasFree, k, d).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn odd_dimension_rejected() {
        assert!(matches!(
            sphere_coefficient_exact(KernelVariant::WithBias, 2, 3),
            Err(Error::OddDimension(3))
        ));
    }
}
