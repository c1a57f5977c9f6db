//! The build → solve → analyze pipeline shared by every subcommand.

use std::time::{Duration, Instant};

use spinmc_core::analyze::{PropertyReport, SpinlockLabels};
use spinmc_core::montecarlo::{self, SimConfig, SimEstimates};
use spinmc_core::solve::{self, SolverOptions, SteadyState};
use spinmc_core::{explore, ExploreOptions, FullModel, FullState, ReducedModel, ReducedState, SparseDtmc};

use crate::config::{ModelKind, RunConfig};
use crate::Result;

/// Result of a phase with its wall-clock time.
#[derive(Debug)]
pub struct Timed<T> {
    pub value: T,
    pub elapsed: Duration,
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<Timed<T>> {
    let start = Instant::now();
    let value = f()?;
    Ok(Timed { value, elapsed: start.elapsed() })
}

pub fn build(cfg: &RunConfig, n: u32) -> Result<Timed<SparseDtmc<f64>>> {
    let params = cfg.params(n)?;
    let max_nu = params.max_nu();
    let opts = ExploreOptions { max_states: cfg.max_states, keep_states: false, threads: cfg.threads };
    log::info!("exploring {} model, n = {n}", cfg.model);
    timed(|| {
        Ok(match cfg.model {
            ModelKind::Full => explore(&FullModel::new(params)?, &SpinlockLabels::<FullState>::new(n, max_nu), &opts)?,
            ModelKind::Reduced => explore(
                &ReducedModel::new(params, cfg.initial)?,
                &SpinlockLabels::<ReducedState>::new(n, max_nu),
                &opts,
            )?,
        })
    })
}

pub fn steady(cfg: &RunConfig, d: &SparseDtmc<f64>) -> Result<Timed<SteadyState>> {
    let opts = SolverOptions { eps: cfg.eps, max_iter: cfg.max_iter };
    timed(|| Ok(solve::stationary(d, &opts)?))
}

pub fn analyze(d: &SparseDtmc<f64>, pi: &[f64], n: u32) -> Result<Timed<PropertyReport>> {
    timed(|| Ok(PropertyReport::build(d, pi, n)?))
}

pub fn simulate(cfg: &RunConfig, n: u32) -> Result<Timed<SimEstimates>> {
    let mut sim = SimConfig::new(cfg.params(n)?, cfg.ticks, cfg.seed);
    if let Some(w) = cfg.warmup {
        sim.warmup = w;
    }
    timed(|| Ok(montecarlo::simulate(&sim)?))
}
