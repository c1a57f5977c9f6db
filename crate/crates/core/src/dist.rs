//! Finite distributions over tick counts (`ν`, `γ0`, `γ1`).

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::prob::Probability;

/// Number of global ticks.
pub type Ticks = u16;

/// Exact probability `num / den` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidDistribution("zero denominator".into()));
        }
        let g = num.gcd(&den);
        Ok(Ratio { num: num / g, den: den / g })
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn to_big(self) -> BigRational {
        BigRational::new(BigInt::from(self.num), BigInt::from(self.den))
    }

    fn from_big(r: &BigRational) -> Option<Self> {
        let num = r.numer().to_u64()?;
        let den = r.denom().to_u64()?;
        Ratio::new(num, den).ok()
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Ratio {
    type Err = Error;

    /// Accepts `p/q`, integers and plain decimals such as `0.25`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidDistribution(format!("cannot parse probability `{s}`"));
        if let Some((n, d)) = s.split_once('/') {
            let n: u64 = n.trim().parse().map_err(|_| bad())?;
            let d: u64 = d.trim().parse().map_err(|_| bad())?;
            return Ratio::new(n, d);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 18 {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let num = int.checked_mul(den).and_then(|v| v.checked_add(frac)).ok_or_else(bad)?;
        Ratio::new(num, den)
    }
}

/// A probability distribution with finite support over tick counts.
///
/// Support values are distinct and ascending, probabilities are strictly
/// positive and sum to exactly one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DiscreteDistribution {
    entries: Vec<(Ticks, Ratio)>,
}

impl DiscreteDistribution {
    /// Builds a distribution, sorting the support. A total that misses one by
    /// at most `1e-12` (rounded decimal input) is renormalised.
    pub fn new(entries: impl IntoIterator<Item = (Ticks, Ratio)>) -> Result<Self> {
        let mut entries: Vec<(Ticks, Ratio)> = entries.into_iter().collect();
        if entries.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        entries.sort_by_key(|&(v, _)| v);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidDistribution("duplicate support value".into()));
        }
        if entries.iter().any(|(_, p)| p.num == 0) {
            return Err(Error::InvalidDistribution("zero-probability support value".into()));
        }
        let total = entries.iter().fold(<BigRational as Zero>::zero(), |acc, (_, p)| acc + p.to_big());
        if !total.is_one() {
            let gap = ToPrimitive::to_f64(&(total.clone() - <BigRational as One>::one())).unwrap_or(f64::INFINITY);
            if gap.is_nan() || gap.abs() > 1e-12 {
                return Err(Error::InvalidDistribution(format!("probabilities sum to {total}, not 1")));
            }
            for (_, p) in &mut entries {
                *p = Ratio::from_big(&(p.to_big() / total.clone())).ok_or_else(|| {
                    Error::InvalidDistribution("renormalised probability does not fit in u64/u64".into())
                })?;
            }
        }
        Ok(DiscreteDistribution { entries })
    }

    pub fn point(value: Ticks) -> Self {
        DiscreteDistribution { entries: alloc::vec![(value, Ratio { num: 1, den: 1 })] }
    }

    /// Uniform distribution over the given support values.
    pub fn uniform(values: &[Ticks]) -> Result<Self> {
        let k = values.len() as u64;
        DiscreteDistribution::new(values.iter().map(|&v| (v, Ratio { num: 1, den: k.max(1) })))
    }

    pub fn entries(&self) -> &[(Ticks, Ratio)] {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = Ticks> + '_ {
        self.entries.iter().map(|&(v, _)| v)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_value(&self) -> Ticks {
        self.entries.last().map(|&(v, _)| v).unwrap_or(0)
    }

    pub fn min_value(&self) -> Ticks {
        self.entries.first().map(|&(v, _)| v).unwrap_or(0)
    }

    /// Support paired with probabilities converted into `P`.
    pub fn weighted<P: Probability>(&self) -> Vec<(Ticks, P)> {
        self.entries.iter().map(|&(v, p)| (v, P::from_ratio(p.num, p.den))).collect()
    }
}

impl fmt::Display for DiscreteDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (v, p)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}:{p}")?;
        }
        Ok(())
    }
}

impl FromStr for DiscreteDistribution {
    type Err = Error;

    /// Parses `value:prob[,value:prob...]`, e.g. `40:1/2,50:0.5`.
    fn from_str(s: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for item in s.split(',') {
            let item = item.trim();
            let (v, p) = item
                .split_once(':')
                .ok_or_else(|| Error::InvalidDistribution(format!("expected value:prob, got `{item}`")))?;
            let v: Ticks = v.trim().parse().map_err(|_| {
                Error::InvalidDistribution(format!("tick value `{}` is not in 0..={}", v.trim(), Ticks::MAX))
            })?;
            entries.push((v, p.parse::<Ratio>()?));
        }
        DiscreteDistribution::new(entries)
    }
}

impl From<DiscreteDistribution> for String {
    fn from(d: DiscreteDistribution) -> String {
        d.to_string()
    }
}
