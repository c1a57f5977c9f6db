//! Probability values the model semantics can be instantiated with.
//!
//! Everything in [`crate::model`], [`crate::symmetry`] and [`crate::explore`]
//! is generic over [`Probability`], so the same semantics produce either an
//! `f64` chain for large runs or an exact [`BigRational`] chain for small
//! validation runs.

use core::fmt::Debug;
use core::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub trait Probability:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: u64, den: u64) -> Self;
    fn to_f64(&self) -> f64;
    fn is_zero(&self) -> bool;

    /// Multinomial probability `m! / prod(x_i!) * prod(p_i^x_i)` with
    /// `m = sum(x_i)`.
    fn multinomial(counts: &[u32], probs: &[Self]) -> Self;
}

impl Probability for f64 {
    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }

    fn multinomial(counts: &[u32], probs: &[Self]) -> Self {
        // Log space: the coefficient alone overflows f64 for a few hundred
        // trials.
        let total: u32 = counts.iter().sum();
        let mut log = libm::lgamma(f64::from(total) + 1.0);
        for (&x, &p) in counts.iter().zip(probs) {
            if x == 0 {
                continue;
            }
            if p == 0.0 {
                return 0.0;
            }
            log += f64::from(x) * libm::log(p) - libm::lgamma(f64::from(x) + 1.0);
        }
        libm::exp(log)
    }
}

impl Probability for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }

    fn one() -> Self {
        One::one()
    }

    fn from_ratio(num: u64, den: u64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn multinomial(counts: &[u32], probs: &[Self]) -> Self {
        let mut acc = <Self as One>::one();
        let mut trials = 0u32;
        for (&x, p) in counts.iter().zip(probs) {
            for k in 1..=x {
                trials += 1;
                // Running binomial product: trials / k keeps the coefficient exact.
                acc = acc * BigRational::new(BigInt::from(trials), BigInt::from(k)) * p.clone();
            }
        }
        acc
    }
}
