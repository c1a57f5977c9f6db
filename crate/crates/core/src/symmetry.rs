//! Generic-representatives quotient of the spinlock model.
//!
//! `P1` is kept explicit. Processes `2..n` are indistinguishable and are
//! stored as counters over their local states, except for the one symmetric
//! process that currently holds the lock: it is pulled out of the counters
//! into a singleton `holder` slot while it waits for its critical section or
//! runs it, and merged back when it returns to ncrit. Consequently the
//! counters only ever contain ncrit and wait classes.
//!
//! When the lock is granted, `P1` receives it with probability
//! `1 / waiting` and a symmetric waiter of class `c` with probability
//! `count_c / waiting`, where `waiting` counts every process in wait.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dist::Ticks;
use crate::error::{Error, Result};
use crate::model::{push_merge, step_process, FullState, Location, LockState, ModelParams, ProcState};
use crate::prob::Probability;

/// How the `n - 1` symmetric processes are initialised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum InitialMode {
    /// Every composition of `n - 1` over `supp ν` is equally likely.
    UniformCompositions,
    /// Compositions weighted multinomially, reproducing the full model's
    /// product initial distribution exactly.
    #[default]
    Multinomial,
}

/// Counts of symmetric processes per local state. Only ncrit timer classes
/// and the three wait classes exist.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CounterVector {
    ncrit: Vec<u32>,
    wait: [u32; 3],
}

impl CounterVector {
    pub fn new(max_nu: Ticks) -> Self {
        CounterVector { ncrit: vec![0; max_nu as usize + 1], wait: [0; 3] }
    }

    pub fn get(&self, class: ProcState) -> u32 {
        match class.loc {
            Location::NonCritical => self.ncrit.get(class.timer as usize).copied().unwrap_or(0),
            Location::Waiting => self.wait.get(class.timer as usize).copied().unwrap_or(0),
            Location::Critical => 0,
        }
    }

    fn slot(&mut self, class: ProcState) -> Result<&mut u32> {
        let bad =
            || Error::Invariant { state: class.to_string(), reason: "no counter class for this local state".into() };
        match class.loc {
            Location::NonCritical => self.ncrit.get_mut(class.timer as usize).ok_or_else(bad),
            Location::Waiting => self.wait.get_mut(class.timer as usize).ok_or_else(bad),
            Location::Critical => Err(bad()),
        }
    }

    pub fn add(&mut self, class: ProcState, k: u32) -> Result<()> {
        *self.slot(class)? += k;
        Ok(())
    }

    pub fn remove(&mut self, class: ProcState) -> Result<()> {
        let slot = self.slot(class)?;
        *slot = slot
            .checked_sub(1)
            .ok_or_else(|| Error::Invariant { state: class.to_string(), reason: "counter underflow".into() })?;
        Ok(())
    }

    pub fn total(&self) -> u32 {
        self.ncrit.iter().sum::<u32>() + self.wait.iter().sum::<u32>()
    }

    pub fn waiting(&self) -> u32 {
        self.wait.iter().sum()
    }

    pub fn ncrit_total(&self) -> u32 {
        self.ncrit.iter().sum()
    }

    /// Non-empty classes in ascending (location, timer) order.
    pub fn iter(&self) -> impl Iterator<Item = (ProcState, u32)> + '_ {
        let ncrit = self.ncrit.iter().enumerate().map(|(t, &c)| (ProcState::ncrit(t as Ticks), c));
        let wait = self.wait.iter().enumerate().map(|(t, &c)| (ProcState::wait(t as Ticks), c));
        ncrit.chain(wait).filter(|&(_, c)| c > 0)
    }

    /// Deterministic tick of every symmetric process.
    fn tick(&self) -> CounterVector {
        let mut next = CounterVector { ncrit: vec![0; self.ncrit.len()], wait: [0; 3] };
        next.ncrit[..self.ncrit.len() - 1].copy_from_slice(&self.ncrit[1..]);
        next.wait[0] = self.ncrit[0];
        next.wait[1] = self.wait[0];
        next.wait[2] = self.wait[1] + self.wait[2];
        next
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReducedLock {
    Free,
    P1,
    Sym,
}

impl ReducedLock {
    fn code(self) -> u8 {
        match self {
            ReducedLock::Free => 0,
            ReducedLock::P1 => 1,
            ReducedLock::Sym => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReducedState {
    pub p1: ProcState,
    pub lock: ReducedLock,
    /// Present iff `lock == Sym`; in wait or crit.
    pub holder: Option<ProcState>,
    pub counters: CounterVector,
}

impl ReducedState {
    pub fn check(&self, n: u32) -> core::result::Result<(), &'static str> {
        let expected = n - 1 - u32::from(self.holder.is_some());
        if self.counters.total() != expected {
            return Err("counters do not account for n - 1 symmetric processes");
        }
        match (self.lock, self.holder) {
            (ReducedLock::Sym, Some(h)) if h.loc != Location::NonCritical => {}
            (ReducedLock::Sym, _) => return Err("symmetric lock without a waiting or critical holder"),
            (_, Some(_)) => return Err("holder present but the lock is not held symmetrically"),
            (_, None) => {}
        }
        if self.lock == ReducedLock::P1 && self.p1.loc == Location::NonCritical {
            return Err("P1 holds the lock from ncrit");
        }
        if self.p1.loc == Location::Critical && self.lock != ReducedLock::P1 {
            return Err("P1 in crit without the lock");
        }
        Ok(())
    }

    /// Quotient image of a full state (process 0 is `P1`).
    pub fn from_full(s: &FullState, max_nu: Ticks) -> Result<ReducedState> {
        let mut counters = CounterVector::new(max_nu);
        let (lock, holder) = match s.lock {
            LockState::Free => (ReducedLock::Free, None),
            LockState::Held(0) => (ReducedLock::P1, None),
            LockState::Held(i) => (ReducedLock::Sym, Some(s.procs[i as usize])),
        };
        for (i, p) in s.procs.iter().enumerate().skip(1) {
            if !s.holds_lock(i) {
                counters.add(*p, 1)?;
            }
        }
        Ok(ReducedState { p1: s.procs[0], lock, holder, counters })
    }
}

impl fmt::Display for ReducedState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P1={} lock={:?}", self.p1, self.lock)?;
        if let Some(h) = self.holder {
            write!(f, " holder={h}")?;
        }
        f.write_str(" {")?;
        for (i, (c, k)) in self.counters.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}:{k}")?;
        }
        f.write_str("}")
    }
}

/// The symmetry-reduced chain.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    pub params: ModelParams,
    pub mode: InitialMode,
}

impl ReducedModel {
    pub fn new(params: ModelParams, mode: InitialMode) -> Result<Self> {
        params.validate()?;
        Ok(ReducedModel { params, mode })
    }

    pub fn max_nu(&self) -> Ticks {
        self.params.max_nu()
    }

    /// P1 in ncrit with a `ν` timer, symmetric processes spread over the ncrit
    /// classes of `supp ν` according to [`InitialMode`].
    pub fn initial<P: Probability>(&self) -> Vec<(P, ReducedState)> {
        let nu = self.params.nu.weighted::<P>();
        let probs: Vec<P> = nu.iter().map(|(_, p)| p.clone()).collect();
        let m = self.params.n - 1;
        let compositions = compositions(m, nu.len());
        let uniform = P::from_ratio(1, compositions.len() as u64);
        let mut out = Vec::with_capacity(compositions.len() * nu.len());
        for (t1, p1) in &nu {
            for comp in &compositions {
                let weight = match self.mode {
                    InitialMode::UniformCompositions => uniform.clone(),
                    InitialMode::Multinomial => P::multinomial(comp, &probs),
                };
                let mut counters = CounterVector::new(self.max_nu());
                for ((t, _), &k) in nu.iter().zip(comp) {
                    counters.ncrit[*t as usize] = k;
                }
                let s = ReducedState { p1: ProcState::ncrit(*t1), lock: ReducedLock::Free, holder: None, counters };
                out.push((p1.clone() * weight, s));
            }
        }
        out
    }

    pub fn successors<P: Probability>(&self, s: &ReducedState) -> Result<Vec<(P, ReducedState)>> {
        let mut out = Vec::new();
        self.successors_into(s, &mut out)?;
        Ok(out)
    }

    pub fn successors_into<P: Probability>(&self, s: &ReducedState, out: &mut Vec<(P, ReducedState)>) -> Result<()> {
        out.clear();
        let violation = |reason: &str| Error::Invariant { state: s.to_string(), reason: reason.into() };
        s.check(self.params.n).map_err(violation)?;
        if s.counters.ncrit.len() != self.max_nu() as usize + 1 {
            return Err(violation("counter layout does not match ν"));
        }

        let waiting = u32::from(s.p1.is_waiting()) + s.counters.waiting();
        let shifted = s.counters.tick();
        let p1_next = step_process::<P>(s.p1, s.lock == ReducedLock::P1, &self.params).map_err(violation)?.into_vec();
        let holder_next: Vec<(P, Option<ProcState>)> = match s.holder {
            Some(h) => step_process::<P>(h, true, &self.params)
                .map_err(violation)?
                .into_vec()
                .into_iter()
                .map(|(p, h)| (p, Some(h)))
                .collect(),
            None => vec![(P::one(), None)],
        };
        let releasing = match s.lock {
            ReducedLock::Free => true,
            ReducedLock::P1 => s.p1.is_releasing(),
            ReducedLock::Sym => s.holder.is_some_and(|h| h.is_releasing()),
        };

        for (pp, p1) in &p1_next {
            for (ph, holder) in &holder_next {
                let mut counters = shifted.clone();
                let mut holder = *holder;
                if let Some(h) = holder {
                    if h.loc == Location::NonCritical {
                        counters.add(h, 1)?;
                        holder = None;
                    }
                }
                let base = pp.clone() * ph.clone();
                if !releasing {
                    push_merge(out, base, ReducedState { p1: *p1, lock: s.lock, holder, counters });
                    continue;
                }
                if holder.is_some() {
                    return Err(violation("lock released while the symmetric holder stays"));
                }
                if waiting == 0 {
                    push_merge(out, base, ReducedState { p1: *p1, lock: ReducedLock::Free, holder: None, counters });
                    continue;
                }
                if s.p1.is_waiting() {
                    let p = base.clone() * P::from_ratio(1, u64::from(waiting));
                    push_merge(
                        out,
                        p,
                        ReducedState { p1: *p1, lock: ReducedLock::P1, holder: None, counters: counters.clone() },
                    );
                }
                for (t, &k) in s.counters.wait.iter().enumerate() {
                    if k == 0 {
                        continue;
                    }
                    // The granted process still ticks its wait timer this tick.
                    let granted = ProcState::wait((t as Ticks + 1).min(2));
                    let mut c = counters.clone();
                    c.remove(granted)?;
                    let p = base.clone() * P::from_ratio(u64::from(k), u64::from(waiting));
                    push_merge(
                        out,
                        p,
                        ReducedState { p1: *p1, lock: ReducedLock::Sym, holder: Some(granted), counters: c },
                    );
                }
            }
        }
        Ok(())
    }

    /// Canonical byte encoding. Injective on valid states for fixed
    /// parameters.
    pub fn encode(&self, s: &ReducedState, buf: &mut Vec<u8>) {
        let holder_code = s.holder.map_or(0, |h| h.loc.code());
        buf.push(s.p1.loc.code() | (s.lock.code() << 2) | (holder_code << 4));
        buf.extend_from_slice(&s.p1.timer.to_le_bytes());
        if let Some(h) = s.holder {
            buf.extend_from_slice(&h.timer.to_le_bytes());
        }
        for &w in &s.counters.wait {
            put_varint(buf, w);
        }
        for (t, &c) in s.counters.ncrit.iter().enumerate() {
            if c > 0 {
                buf.extend_from_slice(&(t as Ticks).to_le_bytes());
                put_varint(buf, c);
            }
        }
    }

    pub fn decode(&self, bytes: &[u8]) -> Result<ReducedState> {
        let mut r = Reader { bytes, pos: 0 };
        let head = r.byte()?;
        let loc = |c: u8| Location::from_code(c).ok_or_else(|| Error::Decode(format!("bad location code {c}")));
        let p1 = ProcState { loc: loc(head & 3)?, timer: r.u16()? };
        let lock = match (head >> 2) & 3 {
            0 => ReducedLock::Free,
            1 => ReducedLock::P1,
            2 => ReducedLock::Sym,
            c => return Err(Error::Decode(format!("bad lock code {c}"))),
        };
        let holder =
            if lock == ReducedLock::Sym { Some(ProcState { loc: loc(head >> 4)?, timer: r.u16()? }) } else { None };
        let mut counters = CounterVector::new(self.max_nu());
        for w in counters.wait.iter_mut() {
            *w = r.varint()?;
        }
        let mut last = None;
        while !r.done() {
            let t = r.u16()?;
            if last.is_some_and(|l| l >= t) {
                return Err(Error::Decode("ncrit classes out of order".into()));
            }
            last = Some(t);
            let slot = counters
                .ncrit
                .get_mut(t as usize)
                .ok_or_else(|| Error::Decode(format!("ncrit timer {t} out of range")))?;
            *slot = r.varint()?;
            if *slot == 0 {
                return Err(Error::Decode("explicit zero counter".into()));
            }
        }
        let s = ReducedState { p1, lock, holder, counters };
        s.check(self.params.n).map_err(|e| Error::Decode(e.into()))?;
        Ok(s)
    }
}

/// All `k`-part compositions of `m` (ordered tuples of non-negative counts
/// summing to `m`), in lexicographically descending order of the first part.
pub fn compositions(m: u32, k: usize) -> Vec<Vec<u32>> {
    fn rec(m: u32, k: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k == 1 {
            prefix.push(m);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=m).rev() {
            prefix.push(first);
            rec(m - first, k - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(m, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

pub(crate) fn put_varint(buf: &mut Vec<u8>, mut v: u32) {
    while v >= 0x80 {
        buf.push((v as u8) | 0x80);
        v >>= 7;
    }
    buf.push(v as u8);
}

pub(crate) struct Reader<'a> {
    pub(crate) bytes: &'a [u8],
    pub(crate) pos: usize,
}

impl Reader<'_> {
    pub(crate) fn done(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    pub(crate) fn byte(&mut self) -> Result<u8> {
        let b = *self.bytes.get(self.pos).ok_or_else(|| Error::Decode("truncated".into()))?;
        self.pos += 1;
        Ok(b)
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes([self.byte()?, self.byte()?]))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes([self.byte()?, self.byte()?, self.byte()?, self.byte()?]))
    }

    pub(crate) fn varint(&mut self) -> Result<u32> {
        let mut v = 0u32;
        for shift in (0..35).step_by(7) {
            let b = self.byte()?;
            v |= u32::from(b & 0x7f) << shift;
            if b & 0x80 == 0 {
                if b == 0 && shift > 0 {
                    return Err(Error::Decode("non-canonical varint".into()));
                }
                return Ok(v);
            }
        }
        Err(Error::Decode("varint too long".into()))
    }
}

/// Read-only view shared by full and reduced states, enough to evaluate any
/// predicate that is invariant under permuting processes `2..n`.
pub trait SymmetricView {
    fn p1(&self) -> ProcState;
    fn p1_holds_lock(&self) -> bool;
    fn lock_held(&self) -> bool;
    /// Lock holder is in wait (granted, not yet in crit).
    fn holder_waiting(&self) -> bool;
    fn waiting_count(&self) -> u32;
    fn ncrit_count(&self) -> u32;
    /// `(timer, multiplicity)` of every process in ncrit, ascending timers.
    fn ncrit_classes(&self, out: &mut Vec<(Ticks, u32)>);

    fn p1_spinning(&self) -> bool {
        self.p1().is_waiting() && self.lock_held() && !self.p1_holds_lock()
    }

    /// Somebody waits while another process holds the lock.
    fn some_spinning(&self) -> bool {
        self.lock_held() && self.waiting_count() > u32::from(self.holder_waiting())
    }
}

impl SymmetricView for FullState {
    fn p1(&self) -> ProcState {
        self.procs[0]
    }

    fn p1_holds_lock(&self) -> bool {
        self.lock == LockState::Held(0)
    }

    fn lock_held(&self) -> bool {
        self.lock != LockState::Free
    }

    fn holder_waiting(&self) -> bool {
        match self.lock {
            LockState::Free => false,
            LockState::Held(i) => self.procs[i as usize].is_waiting(),
        }
    }

    fn waiting_count(&self) -> u32 {
        self.procs.iter().filter(|p| p.is_waiting()).count() as u32
    }

    fn ncrit_count(&self) -> u32 {
        self.procs.iter().filter(|p| p.loc == Location::NonCritical).count() as u32
    }

    fn ncrit_classes(&self, out: &mut Vec<(Ticks, u32)>) {
        out.clear();
        let mut timers: Vec<Ticks> =
            self.procs.iter().filter(|p| p.loc == Location::NonCritical).map(|p| p.timer).collect();
        timers.sort_unstable();
        for t in timers {
            match out.last_mut() {
                Some((last, k)) if *last == t => *k += 1,
                _ => out.push((t, 1)),
            }
        }
    }
}

impl SymmetricView for ReducedState {
    fn p1(&self) -> ProcState {
        self.p1
    }

    fn p1_holds_lock(&self) -> bool {
        self.lock == ReducedLock::P1
    }

    fn lock_held(&self) -> bool {
        self.lock != ReducedLock::Free
    }

    fn holder_waiting(&self) -> bool {
        match self.lock {
            ReducedLock::Free => false,
            ReducedLock::P1 => self.p1.is_waiting(),
            ReducedLock::Sym => self.holder.is_some_and(|h| h.is_waiting()),
        }
    }

    fn waiting_count(&self) -> u32 {
        u32::from(self.p1.is_waiting())
            + self.counters.waiting()
            + u32::from(self.holder.is_some_and(|h| h.is_waiting()))
    }

    fn ncrit_count(&self) -> u32 {
        u32::from(self.p1.loc == Location::NonCritical) + self.counters.ncrit_total()
    }

    fn ncrit_classes(&self, out: &mut Vec<(Ticks, u32)>) {
        out.clear();
        let p1 = (self.p1.loc == Location::NonCritical).then_some(self.p1.timer);
        for (t, &k) in self.counters.ncrit.iter().enumerate() {
            let k = k + u32::from(p1 == Some(t as Ticks));
            if k > 0 {
                out.push((t as Ticks, k));
            }
        }
        if let Some(t) = p1 {
            if t as usize >= self.counters.ncrit.len() {
                out.push((t, 1));
            }
        }
    }
}

/// Distances between neighbouring ncrit timers: `0` when two processes share
/// a timer, otherwise the gap between adjacent distinct timers. Sorted and
/// deduplicated.
pub fn ncrit_distances(classes: &[(Ticks, u32)], out: &mut Vec<Ticks>) {
    out.clear();
    if classes.iter().any(|&(_, k)| k >= 2) {
        out.push(0);
    }
    out.extend(classes.windows(2).map(|w| w[1].0 - w[0].0));
    out.sort_unstable();
    out.dedup();
}

/// Predicates over global states that do not distinguish processes `2..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymmetricPredicate {
    /// Exactly `k` processes in ncrit.
    NcritCount(u32),
    P1At(Location),
    /// `P1` waits while another process holds the lock.
    P1Spinning,
    SomeWaiting,
    SomeSpinning,
    /// `P1` waits, holds the lock and has the given wait timer, i.e. it enters
    /// crit on the next tick.
    P1Granted(Ticks),
    /// Two ncrit processes at distance `k` with nobody in between.
    Distance(Ticks),
    /// Process with the given 1-based index is at a location. Only `P1` can
    /// be lifted to the quotient.
    ProcessAt {
        process: u32,
        loc: Location,
    },
}

impl SymmetricPredicate {
    pub fn eval<S: SymmetricView>(&self, s: &S) -> bool {
        match *self {
            SymmetricPredicate::NcritCount(k) => s.ncrit_count() == k,
            SymmetricPredicate::P1At(loc) | SymmetricPredicate::ProcessAt { process: 1, loc } => s.p1().loc == loc,
            SymmetricPredicate::P1Spinning => s.p1_spinning(),
            SymmetricPredicate::SomeWaiting => s.waiting_count() > 0,
            SymmetricPredicate::SomeSpinning => s.some_spinning(),
            SymmetricPredicate::P1Granted(t) => s.p1_holds_lock() && s.p1() == ProcState::wait(t),
            SymmetricPredicate::Distance(k) => {
                let mut classes = Vec::new();
                let mut d = Vec::new();
                s.ncrit_classes(&mut classes);
                ncrit_distances(&classes, &mut d);
                d.binary_search(&k).is_ok()
            }
            SymmetricPredicate::ProcessAt { .. } => false,
        }
    }

    /// Evaluates on a full state; defined for every predicate.
    pub fn eval_full(&self, s: &FullState) -> bool {
        match *self {
            SymmetricPredicate::ProcessAt { process, loc } => {
                s.procs.get(process.wrapping_sub(1) as usize).is_some_and(|p| p.loc == loc)
            }
            _ => self.eval(s),
        }
    }

    /// Lifts the predicate to quotient states, so that for a full state `f`
    /// with quotient `q`, `self.eval_full(f) == lifted.eval(q)`.
    pub fn lift(self) -> Result<LiftedPredicate> {
        match self {
            SymmetricPredicate::ProcessAt { process, .. } if process != 1 => {
                Err(Error::NotSymmetric(format!("refers to symmetric process P{process}")))
            }
            p => Ok(LiftedPredicate(p)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiftedPredicate(SymmetricPredicate);

impl LiftedPredicate {
    pub fn eval(&self, s: &ReducedState) -> bool {
        self.0.eval(s)
    }

    pub fn predicate(&self) -> SymmetricPredicate {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DiscreteDistribution;
    use crate::model::FullModel;
    use num_rational::BigRational;

    fn r(n: u64, d: u64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    #[test]
    fn uniform_compositions_for_three_processes() {
        let m = ReducedModel::new(ModelParams::example(3), InitialMode::UniformCompositions).unwrap();
        let init = m.initial::<BigRational>();
        assert_eq!(init.len(), 6);
        for (p, s) in &init {
            assert_eq!(*p, r(1, 6));
            assert_eq!(s.counters.total(), 2);
        }
    }

    #[test]
    fn multinomial_weights_for_three_processes() {
        let m = ReducedModel::new(ModelParams::example(3), InitialMode::Multinomial).unwrap();
        let init = m.initial::<BigRational>();
        let weight = |x40: u32| {
            init.iter()
                .filter(|(_, s)| s.p1 == ProcState::ncrit(40) && s.counters.get(ProcState::ncrit(40)) == x40)
                .map(|(p, _)| p.clone())
                .next()
                .unwrap()
        };
        // P1's own 1/2 times binomial(2, 1/2).
        assert_eq!(weight(2), r(1, 8));
        assert_eq!(weight(1), r(1, 4));
        assert_eq!(weight(0), r(1, 8));
    }

    #[test]
    fn single_process_has_empty_counters() {
        let m = ReducedModel::new(ModelParams::example(1), InitialMode::Multinomial).unwrap();
        let init = m.initial::<f64>();
        assert_eq!(init.len(), 2);
        assert!(init.iter().all(|(_, s)| s.counters.total() == 0));
    }

    #[test]
    fn grant_rule_weights_by_class_size() {
        let params = ModelParams::example(6);
        let m = ReducedModel::new(params, InitialMode::Multinomial).unwrap();
        let mut counters = CounterVector::new(50);
        counters.add(ProcState::wait(1), 2).unwrap();
        counters.add(ProcState::wait(2), 1).unwrap();
        counters.add(ProcState::ncrit(10), 1).unwrap();
        let s =
            ReducedState { p1: ProcState::wait(1), lock: ReducedLock::Sym, holder: Some(ProcState::crit(0)), counters };
        let succ = m.successors::<BigRational>(&s).unwrap();
        // waiting = 4; both symmetric wait classes land in wait(2) after the
        // tick, so their branches merge: 3/4 to a symmetric holder.
        let p1 = succ.iter().filter(|(_, t)| t.lock == ReducedLock::P1).fold(r(0, 1), |a, (p, _)| a + p.clone());
        let sym = succ.iter().filter(|(_, t)| t.lock == ReducedLock::Sym).fold(r(0, 1), |a, (p, _)| a + p.clone());
        assert_eq!(p1, r(1, 4));
        assert_eq!(sym, r(3, 4));
        assert_eq!(succ.len(), 4);
        for (p, t) in &succ {
            let back = t.counters.get(ProcState::ncrit(40)) + t.counters.get(ProcState::ncrit(50));
            assert_eq!(back, 1, "old holder returns to ncrit");
            assert!(*p == r(1, 8) || *p == r(3, 8));
            if t.lock == ReducedLock::P1 {
                assert_eq!(t.p1, ProcState::wait(2));
                assert_eq!(t.counters.get(ProcState::wait(2)), 3);
            } else {
                assert_eq!(t.holder, Some(ProcState::wait(2)));
                assert_eq!(t.counters.get(ProcState::wait(2)), 2);
            }
        }
    }

    #[test]
    fn all_ncrit_ticks_deterministically() {
        let m = ReducedModel::new(ModelParams::example(4), InitialMode::Multinomial).unwrap();
        let mut counters = CounterVector::new(50);
        counters.add(ProcState::ncrit(30), 2).unwrap();
        counters.add(ProcState::ncrit(7), 1).unwrap();
        let s = ReducedState { p1: ProcState::ncrit(3), lock: ReducedLock::Free, holder: None, counters };
        let succ = m.successors::<f64>(&s).unwrap();
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].0, 1.0);
        let t = &succ[0].1;
        assert_eq!(t.p1, ProcState::ncrit(2));
        assert_eq!(t.counters.get(ProcState::ncrit(29)), 2);
        assert_eq!(t.counters.get(ProcState::ncrit(6)), 1);
    }

    #[test]
    fn counter_underflow_is_an_error() {
        let mut c = CounterVector::new(4);
        assert!(c.remove(ProcState::wait(2)).is_err());
        assert!(c.add(ProcState::crit(1), 1).is_err());
    }

    #[test]
    fn encoding_round_trips_and_rejects_garbage() {
        let m = ReducedModel::new(ModelParams::example(5), InitialMode::Multinomial).unwrap();
        let mut counters = CounterVector::new(50);
        counters.add(ProcState::wait(2), 300).unwrap();
        counters.add(ProcState::ncrit(49), 1).unwrap();
        let s = ReducedState { p1: ProcState::crit(3), lock: ReducedLock::P1, holder: None, counters };
        let m = ReducedModel { params: ModelParams::example(302), ..m };
        let mut buf = Vec::new();
        m.encode(&s, &mut buf);
        assert_eq!(m.decode(&buf).unwrap(), s);
        assert!(m.decode(&buf[..buf.len() - 1]).is_err());
        assert!(m.decode(&[0xff]).is_err());
    }

    #[test]
    fn distances_follow_sorted_timers() {
        let mut d = Vec::new();
        ncrit_distances(&[(12, 1), (16, 1)], &mut d);
        assert_eq!(d, [4]);
        ncrit_distances(&[(12, 1)], &mut d);
        assert!(d.is_empty());
        ncrit_distances(&[(3, 2), (9, 1), (20, 1)], &mut d);
        assert_eq!(d, [0, 6, 11]);
    }

    #[test]
    fn lifting_rejects_symmetric_process_indices() {
        assert!(SymmetricPredicate::ProcessAt { process: 2, loc: Location::Waiting }.lift().is_err());
        assert!(SymmetricPredicate::ProcessAt { process: 1, loc: Location::Waiting }.lift().is_ok());
        assert!(SymmetricPredicate::NcritCount(3).lift().is_ok());
    }

    #[test]
    fn lifted_predicates_agree_on_quotient_images() {
        let params = ModelParams::new(
            3,
            DiscreteDistribution::uniform(&[4, 6]).unwrap(),
            DiscreteDistribution::point(1),
            DiscreteDistribution::point(2),
        )
        .unwrap();
        let full = FullModel::new(params.clone()).unwrap();
        let preds = [
            SymmetricPredicate::NcritCount(0),
            SymmetricPredicate::NcritCount(2),
            SymmetricPredicate::P1At(Location::Waiting),
            SymmetricPredicate::P1Spinning,
            SymmetricPredicate::SomeWaiting,
            SymmetricPredicate::SomeSpinning,
            SymmetricPredicate::P1Granted(1),
            SymmetricPredicate::Distance(0),
            SymmetricPredicate::Distance(2),
            SymmetricPredicate::ProcessAt { process: 1, loc: Location::Critical },
        ];
        // Walk a few hundred ticks of reachable states.
        let mut frontier: Vec<FullState> = full.initial::<f64>().into_iter().map(|(_, s)| s).collect();
        for _ in 0..40 {
            let mut next = Vec::new();
            for f in &frontier {
                let q = ReducedState::from_full(f, params.max_nu()).unwrap();
                for p in preds {
                    assert_eq!(p.eval_full(f), p.lift().unwrap().eval(&q), "{p:?} on {f}");
                }
                for (_, t) in full.successors::<f64>(f).unwrap() {
                    if !next.contains(&t) {
                        next.push(t);
                    }
                }
            }
            frontier = next;
        }
    }
}
