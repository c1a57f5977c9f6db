//! Run configuration, settable from a `key = value` file and from flags
//! that use the same keys.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use spinmc_core::symmetry::InitialMode;
use spinmc_core::{DiscreteDistribution, ModelParams};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Full,
    Reduced,
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" => Ok(ModelKind::Full),
            "reduced" => Ok(ModelKind::Reduced),
            _ => Err(format!("unknown model `{s}` (expected full or reduced)")),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Full => "full",
            ModelKind::Reduced => "reduced",
        })
    }
}

/// Inclusive range of process counts: `5`, `2..20` or `2..=20`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NRange {
    pub start: u32,
    pub end: u32,
}

impl NRange {
    pub fn single(n: u32) -> Self {
        NRange { start: n, end: n }
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> {
        self.start..=self.end
    }
}

impl FromStr for NRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |t: &str| t.trim().parse::<u32>().map_err(|_| format!("bad process count `{t}`"));
        let r = match s.split_once("..") {
            Some((a, b)) => NRange { start: num(a)?, end: num(b.strip_prefix('=').unwrap_or(b))? },
            None => NRange::single(num(s)?),
        };
        if r.start == 0 || r.end < r.start {
            return Err(format!("empty or zero process range `{s}`"));
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    pub n: NRange,
    pub nu: DiscreteDistribution,
    pub gamma0: DiscreteDistribution,
    pub gamma1: DiscreteDistribution,
    pub initial: InitialMode,
    pub eps: f64,
    pub max_iter: usize,
    pub max_states: usize,
    /// Base path for `.tra` / `.lab`.
    pub mrmc: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    /// Steady-state vector to import instead of solving.
    pub steady: Option<PathBuf>,
    /// Where `steady` writes the computed vector.
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub ticks: u64,
    /// Defaults to 10% of `ticks`.
    pub warmup: Option<u64>,
    /// Exploration threads; 0 uses every core.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ex = ModelParams::example(3);
        RunConfig {
            model: ModelKind::Reduced,
            n: NRange::single(3),
            nu: ex.nu,
            gamma0: ex.gamma0,
            gamma1: ex.gamma1,
            initial: InitialMode::Multinomial,
            eps: 1e-10,
            max_iter: 1_000_000,
            max_states: u32::MAX as usize - 1,
            mrmc: None,
            csv: None,
            steady: None,
            output: None,
            seed: 1,
            ticks: 10_000_000,
            warmup: None,
            threads: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| Error::Config(format!("{key} = {value}: {e}")))
}

impl RunConfig {
    pub const KEYS: &'static [&'static str] = &[
        "model",
        "n",
        "nu",
        "gamma0",
        "gamma1",
        "initial",
        "eps",
        "max_iter",
        "max_states",
        "mrmc",
        "csv",
        "steady",
        "output",
        "seed",
        "ticks",
        "warmup",
        "threads",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "model" => self.model = parse(key, value)?,
            "n" => self.n = parse(key, value)?,
            "nu" => self.nu = parse(key, value)?,
            "gamma0" => self.gamma0 = parse(key, value)?,
            "gamma1" => self.gamma1 = parse(key, value)?,
            "initial" => {
                self.initial = match value {
                    "multinomial" => InitialMode::Multinomial,
                    "uniform" => InitialMode::UniformCompositions,
                    _ => return Err(Error::Config(format!("initial = {value}: expected multinomial or uniform"))),
                }
            }
            "eps" => self.eps = parse(key, value)?,
            "max_iter" => self.max_iter = parse(key, value)?,
            "max_states" => self.max_states = parse(key, value)?,
            "mrmc" => self.mrmc = Some(value.into()),
            "csv" => self.csv = Some(value.into()),
            "steady" => self.steady = Some(value.into()),
            "output" => self.output = Some(value.into()),
            "seed" => self.seed = parse(key, value)?,
            "ticks" => self.ticks = parse(key, value)?,
            "warmup" => self.warmup = Some(parse(key, value)?),
            "threads" => self.threads = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key = value` document; `#` starts a comment.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            self.set(k, v).map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn params(&self, n: u32) -> Result<ModelParams> {
        Ok(ModelParams::new(n, self.nu.clone(), self.gamma0.clone(), self.gamma1.clone())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!("5".parse::<NRange>().unwrap(), NRange::single(5));
        assert_eq!("2..20".parse::<NRange>().unwrap(), NRange { start: 2, end: 20 });
        assert_eq!("2..=20".parse::<NRange>().unwrap().iter().count(), 19);
        assert!("0".parse::<NRange>().is_err());
        assert!("5..2".parse::<NRange>().is_err());
    }

    #[test]
    fn file_and_flags_share_keys() {
        let mut c = RunConfig::default();
        c.apply_file("# example\nmodel = full\nn = 2..4\nnu = 4:1/2, 6:1/2\ngamma0=1:1\nmax-iter = 10\n").unwrap();
        assert_eq!(c.model, ModelKind::Full);
        assert_eq!(c.n, NRange { start: 2, end: 4 });
        assert_eq!(c.nu.to_string(), "4:1/2,6:1/2");
        assert_eq!(c.max_iter, 10);
        assert!(c.apply_file("bogus = 1").is_err());
        assert!(c.apply_file("nu = 4:0.7").is_err());
        assert!(c.set("initial", "uniform").is_ok());
        assert_eq!(c.initial, InitialMode::UniformCompositions);
    }
}
