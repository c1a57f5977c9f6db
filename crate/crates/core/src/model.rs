//! The full (non-reduced) spinlock model.
//!
//! `n` identical processes run `ncrit -> wait -> crit -> ncrit` forever and
//! move in lock-step with a lock process. One call to
//! [`FullModel::successors`] is one global tick: every process and the lock
//! take their enabled edge simultaneously, with guards evaluated on the
//! pre-tick state.
//!
//! Per process:
//!
//! | location | guard                 | effect                        |
//! |----------|-----------------------|-------------------------------|
//! | ncrit    | `t > 0`               | `t -= 1`                      |
//! | ncrit    | `t = 0`               | go to wait, `t` stays 0       |
//! | wait     | lock not ours         | `t = min(t + 1, 2)`           |
//! | wait     | lock ours, `t = 1`    | go to crit, `t ~ γ0`          |
//! | wait     | lock ours, `t = 2`    | go to crit, `t ~ γ1`          |
//! | crit     | `t > 0`               | `t -= 1`                      |
//! | crit     | `t = 0`               | go to ncrit, `t ~ ν`          |
//!
//! The lock stays free while nobody waits, grants uniformly among the current
//! waiters when free, and on release (holder in crit with `t = 0`) either
//! becomes free or hands over directly to a uniformly chosen waiter.
//!
//! The start location of each process is folded into the initial
//! distribution: every process starts in ncrit with a `ν`-distributed timer.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dist::{DiscreteDistribution, Ticks};
use crate::error::{Error, Result};
use crate::prob::Probability;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Location {
    NonCritical,
    Waiting,
    Critical,
}

impl Location {
    pub(crate) fn code(self) -> u8 {
        match self {
            Location::NonCritical => 0,
            Location::Waiting => 1,
            Location::Critical => 2,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Location::NonCritical),
            1 => Some(Location::Waiting),
            2 => Some(Location::Critical),
            _ => None,
        }
    }
}

/// Local state of a single process: control location plus its timer.
///
/// In `Waiting` the timer only records `0` (just arrived), `1` (lock seen
/// free on the first waiting tick) or `2` (had to spin).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProcState {
    pub loc: Location,
    pub timer: Ticks,
}

impl ProcState {
    pub const fn ncrit(timer: Ticks) -> Self {
        ProcState { loc: Location::NonCritical, timer }
    }

    pub const fn wait(timer: Ticks) -> Self {
        ProcState { loc: Location::Waiting, timer }
    }

    pub const fn crit(timer: Ticks) -> Self {
        ProcState { loc: Location::Critical, timer }
    }

    pub fn is_waiting(&self) -> bool {
        self.loc == Location::Waiting
    }

    /// Holder about to release: in crit with an expired timer.
    pub fn is_releasing(&self) -> bool {
        self.loc == Location::Critical && self.timer == 0
    }
}

impl fmt::Display for ProcState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let loc = match self.loc {
            Location::NonCritical => "ncrit",
            Location::Waiting => "wait",
            Location::Critical => "crit",
        };
        write!(f, "{loc}({})", self.timer)
    }
}

/// Distribution-valued outcome of one process taking one tick.
///
/// Only a process that holds the lock ever branches probabilistically; every
/// other process moves deterministically.
pub(crate) fn step_process<P: Probability>(
    proc: ProcState,
    holds_lock: bool,
    params: &ModelParams,
) -> core::result::Result<StepOutcome<P>, &'static str> {
    Ok(match proc.loc {
        Location::NonCritical if proc.timer > 0 => StepOutcome::Det(ProcState::ncrit(proc.timer - 1)),
        Location::NonCritical => StepOutcome::Det(ProcState::wait(0)),
        Location::Waiting if !holds_lock => StepOutcome::Det(ProcState::wait((proc.timer + 1).min(2))),
        Location::Waiting => {
            let gamma = match proc.timer {
                1 => &params.gamma0,
                2 => &params.gamma1,
                _ => return Err("waiting process holds the lock with wait timer 0"),
            };
            StepOutcome::Branch(gamma.weighted::<P>().into_iter().map(|(t, p)| (p, ProcState::crit(t))).collect())
        }
        Location::Critical if proc.timer > 0 => StepOutcome::Det(ProcState::crit(proc.timer - 1)),
        Location::Critical => {
            StepOutcome::Branch(params.nu.weighted::<P>().into_iter().map(|(t, p)| (p, ProcState::ncrit(t))).collect())
        }
    })
}

pub(crate) enum StepOutcome<P> {
    Det(ProcState),
    Branch(Vec<(P, ProcState)>),
}

impl<P: Probability> StepOutcome<P> {
    pub(crate) fn into_vec(self) -> Vec<(P, ProcState)> {
        match self {
            StepOutcome::Det(s) => vec![(P::one(), s)],
            StepOutcome::Branch(v) => v,
        }
    }
}

/// Number of processes and the three timing distributions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelParams {
    pub n: u32,
    pub nu: DiscreteDistribution,
    pub gamma0: DiscreteDistribution,
    pub gamma1: DiscreteDistribution,
}

impl ModelParams {
    pub fn new(
        n: u32,
        nu: DiscreteDistribution,
        gamma0: DiscreteDistribution,
        gamma1: DiscreteDistribution,
    ) -> Result<Self> {
        let params = ModelParams { n, nu, gamma0, gamma1 };
        params.validate()?;
        Ok(params)
    }

    /// `γ0(5) = 1`, `γ1(6) = 1`, `ν(40) = ν(50) = 1/2`.
    pub fn example(n: u32) -> Self {
        ModelParams {
            n,
            nu: DiscreteDistribution::uniform(&[40, 50]).expect("valid"),
            gamma0: DiscreteDistribution::point(5),
            gamma1: DiscreteDistribution::point(6),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParams("need at least one process".into()));
        }
        if self.n > u32::MAX / 2 {
            return Err(Error::InvalidParams(format!("{} processes is too many", self.n)));
        }
        Ok(())
    }

    pub fn max_nu(&self) -> Ticks {
        self.nu.max_value()
    }

    pub fn max_crit(&self) -> Ticks {
        self.gamma0.max_value().max(self.gamma1.max_value())
    }
}

/// Lock component of the full model. Holders are 0-based process indices
/// (`Held(0)` is `P1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LockState {
    Free,
    Held(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FullState {
    pub lock: LockState,
    pub procs: Vec<ProcState>,
}

impl FullState {
    pub fn holds_lock(&self, i: usize) -> bool {
        self.lock == LockState::Held(i as u32)
    }

    /// Structural invariants: mutual exclusion and holder consistency.
    pub fn check(&self) -> core::result::Result<(), &'static str> {
        let mut crit = 0;
        for (i, p) in self.procs.iter().enumerate() {
            if p.loc == Location::Critical {
                crit += 1;
                if !self.holds_lock(i) {
                    return Err("process in crit does not hold the lock");
                }
            }
        }
        if crit > 1 {
            return Err("two processes in crit");
        }
        if let LockState::Held(i) = self.lock {
            match self.procs.get(i as usize) {
                Some(p) if p.loc != Location::NonCritical => {}
                Some(_) => return Err("lock holder is in ncrit"),
                None => return Err("lock holder index out of range"),
            }
        }
        Ok(())
    }
}

impl fmt::Display for FullState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lock {
            LockState::Free => f.write_str("(unlock, [")?,
            LockState::Held(i) => write!(f, "(lock_{}, [", i + 1)?,
        }
        for (i, p) in self.procs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("])")
    }
}

/// The non-reduced synchronous product.
#[derive(Debug, Clone)]
pub struct FullModel {
    pub params: ModelParams,
}

impl FullModel {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        Ok(FullModel { params })
    }

    /// Product distribution: lock free, every process in ncrit with an
    /// independent `ν` timer. Has `|supp ν|^n` states.
    pub fn initial<P: Probability>(&self) -> Vec<(P, FullState)> {
        let nu = self.params.nu.weighted::<P>();
        let n = self.params.n as usize;
        let mut out = vec![(P::one(), FullState { lock: LockState::Free, procs: Vec::with_capacity(n) })];
        for _ in 0..n {
            let mut next = Vec::with_capacity(out.len() * nu.len());
            for (p, s) in &out {
                for (t, q) in &nu {
                    let mut s = s.clone();
                    s.procs.push(ProcState::ncrit(*t));
                    next.push((p.clone() * q.clone(), s));
                }
            }
            out = next;
        }
        out
    }

    /// One global tick. The result has unique states and sums to one.
    pub fn successors<P: Probability>(&self, s: &FullState) -> Result<Vec<(P, FullState)>> {
        let mut out = Vec::new();
        self.successors_into(s, &mut out)?;
        Ok(out)
    }

    pub fn successors_into<P: Probability>(&self, s: &FullState, out: &mut Vec<(P, FullState)>) -> Result<()> {
        out.clear();
        let violation = |reason: &str| Error::Invariant { state: s.to_string(), reason: reason.into() };
        if s.procs.len() != self.params.n as usize {
            return Err(violation("wrong number of processes"));
        }
        s.check().map_err(violation)?;

        let mut next = Vec::with_capacity(s.procs.len());
        let mut holder_branches: Option<(usize, Vec<(P, ProcState)>)> = None;
        let mut waiters: Vec<u32> = Vec::new();
        for (i, &p) in s.procs.iter().enumerate() {
            if p.is_waiting() {
                waiters.push(i as u32);
            }
            match step_process::<P>(p, s.holds_lock(i), &self.params).map_err(violation)? {
                StepOutcome::Det(q) => next.push(q),
                StepOutcome::Branch(b) => {
                    holder_branches = Some((i, b));
                    next.push(p);
                }
            }
        }

        let releasing = match s.lock {
            LockState::Free => true,
            LockState::Held(i) => s.procs[i as usize].is_releasing(),
        };
        let lock_choices: Vec<(P, LockState)> = if !releasing {
            vec![(P::one(), s.lock)]
        } else if waiters.is_empty() {
            vec![(P::one(), LockState::Free)]
        } else {
            let w = waiters.len() as u64;
            waiters.iter().map(|&k| (P::from_ratio(1, w), LockState::Held(k))).collect()
        };

        let holder_branches = holder_branches.unwrap_or_else(|| (usize::MAX, vec![(P::one(), ProcState::ncrit(0))]));
        for (ph, hs) in &holder_branches.1 {
            for (pl, lock) in &lock_choices {
                let mut procs = next.clone();
                if holder_branches.0 != usize::MAX {
                    procs[holder_branches.0] = *hs;
                }
                push_merge(out, ph.clone() * pl.clone(), FullState { lock: *lock, procs });
            }
        }
        Ok(())
    }
}

/// Adds `(p, s)` to a successor list, summing probabilities of equal states.
pub(crate) fn push_merge<P: Probability, S: PartialEq>(out: &mut Vec<(P, S)>, p: P, s: S) {
    if let Some(slot) = out.iter_mut().find(|(_, t)| *t == s) {
        slot.0 = slot.0.clone() + p;
    } else {
        out.push((p, s));
    }
}
