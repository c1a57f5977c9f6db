//! Tick-by-tick simulation of the full spinlock model.
//!
//! This is written against the model description directly and shares no
//! transition code with [`crate::model`], so agreement between simulated and
//! solved properties checks both the semantics and the quotient.
//! Standard errors come from non-overlapping batch means.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::{DiscreteDistribution, Ticks};
use crate::error::{Error, Result};
use crate::model::ModelParams;

pub const DEFAULT_BATCHES: u32 = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: ModelParams,
    /// Total simulated ticks, warmup included.
    pub ticks: u64,
    /// Leading ticks discarded before estimation.
    pub warmup: u64,
    pub seed: u64,
    pub batches: u32,
}

impl SimConfig {
    /// Warmup of 10% and [`DEFAULT_BATCHES`] batches.
    pub fn new(params: ModelParams, ticks: u64, seed: u64) -> Self {
        SimConfig { params, ticks, warmup: ticks / 10, seed, batches: DEFAULT_BATCHES }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.ticks <= self.warmup {
            return Err(Error::InvalidSimConfig(format!(
                "ticks ({}) must exceed warmup ({})",
                self.ticks, self.warmup
            )));
        }
        if self.batches < 30 {
            return Err(Error::InvalidSimConfig(format!("need at least 30 batches, got {}", self.batches)));
        }
        if self.ticks - self.warmup < u64::from(self.batches) {
            return Err(Error::InvalidSimConfig("fewer observed ticks than batches".into()));
        }
        Ok(())
    }
}

/// Point estimate with its batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// Distance to `x` in standard errors; infinite when `se == 0` and the
    /// values differ beyond rounding.
    pub fn z(&self, x: f64) -> f64 {
        let diff = (self.mean - x).abs();
        if diff <= 1e-12 {
            0.0
        } else if self.se == 0.0 {
            f64::INFINITY
        } else {
            diff / self.se
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEstimates {
    pub observed_ticks: u64,
    pub ncrit_histogram: Vec<Estimate>,
    pub p1_spinning: Estimate,
    pub any_spinning: Estimate,
    pub distance_spectrum: BTreeMap<Ticks, Estimate>,
    pub p_acquire_no_wait: Option<Estimate>,
    pub expected_wait: Option<Estimate>,
    pub wait_quantile_95: Option<Estimate>,
    /// Completed `P1` wait visits.
    pub wait_visits: u64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Loc {
    NonCrit,
    Wait,
    Crit,
}

struct Sampler {
    values: Vec<Ticks>,
    cumulative: Vec<f64>,
}

impl Sampler {
    fn new(d: &DiscreteDistribution) -> Self {
        let mut acc = 0.0;
        let mut values = Vec::new();
        let mut cumulative = Vec::new();
        for (v, p) in d.entries() {
            acc += p.to_f64();
            values.push(*v);
            cumulative.push(acc);
        }
        Sampler { values, cumulative }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Ticks {
        if self.values.len() == 1 {
            return self.values[0];
        }
        let u: f64 = rng.gen::<f64>() * self.cumulative[self.cumulative.len() - 1];
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.values[i.min(self.values.len() - 1)]
    }
}

#[derive(Default, Clone)]
struct Batch {
    ticks: u64,
    ncrit: Vec<u64>,
    p1_spin: u64,
    any_spin: u64,
    dist: Vec<u64>,
    acquire_t1: u64,
    acquire_all: u64,
    wait_sum: u64,
    wait_lengths: BTreeMap<u64, u64>,
}

impl Batch {
    fn visits(&self) -> u64 {
        self.wait_lengths.values().sum()
    }
}

fn quantile(lengths: &BTreeMap<u64, u64>, q: f64) -> Option<f64> {
    let total: u64 = lengths.values().sum();
    if total == 0 {
        return None;
    }
    let mut acc = 0u64;
    for (&len, &c) in lengths {
        acc += c;
        if acc as f64 >= q * total as f64 {
            return Some(len as f64);
        }
    }
    lengths.keys().next_back().map(|&l| l as f64)
}

fn mean_se(samples: &[f64]) -> (f64, f64) {
    let b = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / b;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (b - 1.0);
    (mean, libm::sqrt(var / b))
}

/// Simulates `cfg.ticks` ticks and estimates every long-run property.
pub fn simulate(cfg: &SimConfig) -> Result<SimEstimates> {
    cfg.validate()?;
    let p = &cfg.params;
    let n = p.n as usize;
    let nu = Sampler::new(&p.nu);
    let g0 = Sampler::new(&p.gamma0);
    let g1 = Sampler::new(&p.gamma1);
    let max_nu = p.max_nu() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut loc = vec![Loc::NonCrit; n];
    let mut timer: Vec<Ticks> = (0..n).map(|_| nu.sample(&mut rng)).collect();
    let mut holder: Option<usize> = None;

    let observed = cfg.ticks - cfg.warmup;
    let empty = Batch { ncrit: vec![0; n + 1], dist: vec![0; max_nu + 1], ..Default::default() };
    let mut batches = vec![empty; cfg.batches as usize];
    let mut p1_wait_run = 0u64;
    let mut waiters: Vec<usize> = Vec::with_capacity(n);
    let mut ncrit_timers: Vec<Ticks> = Vec::with_capacity(n);
    let mut dist_seen = vec![false; max_nu + 1];

    for tick in 0..cfg.ticks {
        // Observe the current state.
        if tick >= cfg.warmup {
            let i = tick - cfg.warmup;
            let b = &mut batches[(i as u128 * u128::from(cfg.batches) / u128::from(observed)) as usize];
            b.ticks += 1;
            ncrit_timers.clear();
            let mut waiting = 0usize;
            for k in 0..n {
                match loc[k] {
                    Loc::NonCrit => ncrit_timers.push(timer[k]),
                    Loc::Wait => waiting += 1,
                    Loc::Crit => {}
                }
            }
            b.ncrit[ncrit_timers.len()] += 1;
            let holder_waits = holder.is_some_and(|h| loc[h] == Loc::Wait);
            if holder.is_some() && holder != Some(0) && loc[0] == Loc::Wait {
                b.p1_spin += 1;
            }
            if holder.is_some() && waiting > usize::from(holder_waits) {
                b.any_spin += 1;
            }
            ncrit_timers.sort_unstable();
            dist_seen.iter_mut().for_each(|d| *d = false);
            for w in ncrit_timers.windows(2) {
                dist_seen[(w[1] - w[0]) as usize] = true;
            }
            for (k, &seen) in dist_seen.iter().enumerate() {
                if seen {
                    b.dist[k] += 1;
                }
            }
            if holder == Some(0) && loc[0] == Loc::Wait {
                b.acquire_all += 1;
                if timer[0] == 1 {
                    b.acquire_t1 += 1;
                }
            }
            if loc[0] == Loc::Wait {
                p1_wait_run += 1;
            } else if p1_wait_run > 0 {
                b.wait_sum += p1_wait_run;
                *b.wait_lengths.entry(p1_wait_run).or_insert(0) += 1;
                p1_wait_run = 0;
            }
        }

        // Advance one synchronous tick, reading only the pre-tick state.
        waiters.clear();
        waiters.extend((0..n).filter(|&k| loc[k] == Loc::Wait));
        let old_holder = holder;
        let mut release = holder.is_none();
        for k in 0..n {
            let holds = old_holder == Some(k);
            match loc[k] {
                Loc::NonCrit if timer[k] > 0 => timer[k] -= 1,
                Loc::NonCrit => {
                    loc[k] = Loc::Wait;
                    timer[k] = 0;
                }
                Loc::Wait if holds => {
                    loc[k] = Loc::Crit;
                    timer[k] = match timer[k] {
                        1 => g0.sample(&mut rng),
                        2 => g1.sample(&mut rng),
                        t => {
                            return Err(Error::Invariant {
                                state: format!("process {k}"),
                                reason: format!("lock holder waiting with timer {t}"),
                            })
                        }
                    };
                }
                Loc::Wait => timer[k] = (timer[k] + 1).min(2),
                Loc::Crit if timer[k] > 0 => timer[k] -= 1,
                Loc::Crit => {
                    loc[k] = Loc::NonCrit;
                    timer[k] = nu.sample(&mut rng);
                    release = true;
                }
            }
        }
        if release {
            holder = if waiters.is_empty() { None } else { Some(waiters[rng.gen_range(0..waiters.len())]) };
        }
    }

    let bsz: Vec<f64> = batches.iter().map(|b| b.ticks as f64).collect();
    let frac = |f: &dyn Fn(&Batch) -> u64| -> Estimate {
        let xs: Vec<f64> = batches.iter().zip(&bsz).map(|(b, t)| f(b) as f64 / t).collect();
        let total: u64 = batches.iter().map(f).sum();
        let (_, se) = mean_se(&xs);
        Estimate { mean: total as f64 / observed as f64, se }
    };
    let ratio = |num: &dyn Fn(&Batch) -> f64, den: &dyn Fn(&Batch) -> f64| -> Option<Estimate> {
        if batches.iter().any(|b| den(b) == 0.0) {
            return None;
        }
        let xs: Vec<f64> = batches.iter().map(|b| num(b) / den(b)).collect();
        let total_num: f64 = batches.iter().map(num).sum();
        let total_den: f64 = batches.iter().map(den).sum();
        Some(Estimate { mean: total_num / total_den, se: mean_se(&xs).1 })
    };

    let ncrit_histogram = (0..=n).map(|k| frac(&|b: &Batch| b.ncrit[k])).collect();
    let mut distance_spectrum = BTreeMap::new();
    for k in 0..=max_nu {
        if batches.iter().any(|b| b.dist[k] > 0) {
            distance_spectrum.insert(k as Ticks, frac(&|b: &Batch| b.dist[k]));
        }
    }
    let mut all_lengths: BTreeMap<u64, u64> = BTreeMap::new();
    for b in &batches {
        for (&l, &c) in &b.wait_lengths {
            *all_lengths.entry(l).or_insert(0) += c;
        }
    }
    let batch_q: Option<Vec<f64>> = batches.iter().map(|b| quantile(&b.wait_lengths, 0.95)).collect();
    let wait_quantile_95 = match (quantile(&all_lengths, 0.95), batch_q) {
        (Some(q), Some(bq)) => Some(Estimate { mean: q, se: mean_se(&bq).1 }),
        _ => None,
    };

    Ok(SimEstimates {
        observed_ticks: observed,
        ncrit_histogram,
        p1_spinning: frac(&|b: &Batch| b.p1_spin),
        any_spinning: frac(&|b: &Batch| b.any_spin),
        distance_spectrum,
        p_acquire_no_wait: ratio(&|b: &Batch| b.acquire_t1 as f64, &|b: &Batch| b.acquire_all as f64),
        expected_wait: ratio(&|b: &Batch| b.wait_sum as f64, &|b: &Batch| b.visits() as f64),
        wait_quantile_95,
        wait_visits: all_lengths.values().sum(),
    })
}
