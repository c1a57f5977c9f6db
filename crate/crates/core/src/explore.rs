//! Breadth-first materialisation of a model as a labelled sparse DTMC.
//!
//! States are kept only as canonical byte encodings in one arena, indexed by
//! a hash table of `u32` state numbers. Each BFS level is expanded in state
//! order and the states it discovers are renumbered by their encoding before
//! the next level starts, so numbering does not depend on how expansion was
//! scheduled.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::hash::BuildHasher;

use hashbrown::DefaultHashBuilder;
use hashbrown::HashTable;

use crate::error::{Error, Result};
use crate::model::{FullModel, FullState, Location, LockState, ProcState};
use crate::prob::Probability;
use crate::symmetry::{Reader, ReducedModel, ReducedState};

/// Name of the label attached automatically to states with positive initial
/// probability.
pub const INIT_LABEL: &str = "init";

/// A transition system with a canonical state encoding.
pub trait Semantics: Sync {
    type State: Send;

    fn initial_states<P: Probability>(&self) -> Result<Vec<(P, Self::State)>>;
    fn successors_into<P: Probability>(&self, s: &Self::State, out: &mut Vec<(P, Self::State)>) -> Result<()>;
    fn encode(&self, s: &Self::State, buf: &mut Vec<u8>);
    fn decode(&self, bytes: &[u8]) -> Result<Self::State>;
}

/// Atomic propositions evaluated once per explored state.
pub trait Labeling<S>: Sync {
    fn names(&self) -> Vec<String>;
    /// Pushes the indices (into `names()`) of the labels holding in `s`.
    fn holds(&self, s: &S, out: &mut Vec<u32>);
}

type Pred<S> = Box<dyn Fn(&S) -> bool + Send + Sync>;

/// Labeling from a list of named closures.
pub struct PredicateLabels<S> {
    defs: Vec<(String, Pred<S>)>,
}

impl<S> Default for PredicateLabels<S> {
    fn default() -> Self {
        PredicateLabels { defs: Vec::new() }
    }
}

impl<S> PredicateLabels<S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, pred: impl Fn(&S) -> bool + Send + Sync + 'static) -> Self {
        self.defs.push((name.into(), Box::new(pred)));
        self
    }
}

impl<S> Labeling<S> for PredicateLabels<S> {
    fn names(&self) -> Vec<String> {
        self.defs.iter().map(|(n, _)| n.clone()).collect()
    }

    fn holds(&self, s: &S, out: &mut Vec<u32>) {
        for (i, (_, p)) in self.defs.iter().enumerate() {
            if p(s) {
                out.push(i as u32);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExploreOptions {
    /// Abort with [`Error::StateLimit`] beyond this many states.
    pub max_states: usize,
    /// Keep the encoded states after exploration.
    pub keep_states: bool,
    /// Worker threads for frontier expansion; `0` uses the global pool.
    /// Ignored without the `parallel` feature.
    pub threads: usize,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions { max_states: u32::MAX as usize - 1, keep_states: true, threads: 0 }
    }
}

/// Encoded states in index order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StateTable {
    bytes: Vec<u8>,
    offsets: Vec<usize>,
}

impl StateTable {
    fn new() -> Self {
        StateTable { bytes: Vec::new(), offsets: alloc::vec![0] }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> &[u8] {
        &self.bytes[self.offsets[i]..self.offsets[i + 1]]
    }

    fn push(&mut self, s: &[u8]) {
        self.bytes.extend_from_slice(s);
        self.offsets.push(self.bytes.len());
    }

    fn clear(&mut self) {
        self.bytes.clear();
        self.offsets.truncate(1);
    }
}

/// Row-compressed DTMC with initial distribution and state labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDtmc<P> {
    pub num_states: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<u32>,
    pub values: Vec<P>,
    pub initial: Vec<(u32, P)>,
    /// Label name and sorted state indices, in declaration order.
    pub labels: Vec<(String, Vec<u32>)>,
    pub states: Option<StateTable>,
}

impl<P: Probability> SparseDtmc<P> {
    pub fn num_transitions(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[P]) {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[r.clone()], &self.values[r])
    }

    pub fn label(&self, name: &str) -> Result<&[u32]> {
        self.labels
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::UnknownLabel(name.into()))
    }

    /// Membership mask of a label.
    pub fn label_mask(&self, name: &str) -> Result<Vec<bool>> {
        let mut mask = alloc::vec![false; self.num_states];
        for &i in self.label(name)? {
            mask[i as usize] = true;
        }
        Ok(mask)
    }

    pub fn map_values<Q>(&self, f: impl Fn(&P) -> Q) -> SparseDtmc<Q> {
        SparseDtmc {
            num_states: self.num_states,
            row_offsets: self.row_offsets.clone(),
            col_indices: self.col_indices.clone(),
            values: self.values.iter().map(&f).collect(),
            initial: self.initial.iter().map(|(i, p)| (*i, f(p))).collect(),
            labels: self.labels.clone(),
            states: self.states.clone(),
        }
    }

    pub fn to_f64(&self) -> SparseDtmc<f64> {
        self.map_values(|p| p.to_f64())
    }

    /// Checks row stochasticity (within `tol`), column order and the initial
    /// distribution.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let bad = |state: usize, reason: String| Error::Invariant { state: state.to_string(), reason };
        if self.row_offsets.len() != self.num_states + 1 {
            return Err(bad(self.num_states, "row offset count".into()));
        }
        for i in 0..self.num_states {
            let (cols, vals) = self.row(i);
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(bad(i, "columns not strictly increasing".into()));
            }
            if cols.last().is_some_and(|&c| c as usize >= self.num_states) {
                return Err(bad(i, "column out of range".into()));
            }
            let sum: f64 = vals.iter().map(|p| p.to_f64()).sum();
            if (sum - 1.0).abs() > tol {
                return Err(bad(i, alloc::format!("row sums to {sum}")));
            }
        }
        let init: f64 = self.initial.iter().map(|(_, p)| p.to_f64()).sum();
        if (init - 1.0).abs() > tol {
            return Err(bad(0, alloc::format!("initial distribution sums to {init}")));
        }
        Ok(())
    }
}

impl SparseDtmc<f64> {
    /// Transpose as CSR (i.e. the matrix in column-compressed form).
    pub fn transpose(&self) -> (Vec<usize>, Vec<u32>, Vec<f64>) {
        let n = self.num_states;
        let mut offsets = alloc::vec![0usize; n + 1];
        for &c in &self.col_indices {
            offsets[c as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut rows = alloc::vec![0u32; self.col_indices.len()];
        let mut vals = alloc::vec![0.0; self.col_indices.len()];
        for i in 0..n {
            let (cols, ps) = self.row(i);
            for (&c, &p) in cols.iter().zip(ps) {
                let slot = &mut fill[c as usize];
                rows[*slot] = i as u32;
                vals[*slot] = p;
                *slot += 1;
            }
        }
        (offsets, rows, vals)
    }
}

/// Successors of one expanded state, encoded.
struct Expanded<P> {
    bytes: Vec<u8>,
    succ: Vec<(P, usize, usize)>,
    labels: Vec<u32>,
}

fn expand<S: Semantics, L: Labeling<S::State>, P: Probability>(
    sem: &S,
    labels: &L,
    encoded: &[u8],
) -> Result<Expanded<P>> {
    let state = sem.decode(encoded)?;
    let mut out = Vec::new();
    sem.successors_into::<P>(&state, &mut out)?;
    let mut lab = Vec::new();
    labels.holds(&state, &mut lab);
    let mut bytes = Vec::new();
    let mut succ = Vec::with_capacity(out.len());
    for (p, t) in out {
        let start = bytes.len();
        sem.encode(&t, &mut bytes);
        succ.push((p, start, bytes.len()));
    }
    Ok(Expanded { bytes, succ, labels: lab })
}

const CHUNK: usize = 2048;

/// Explores everything reachable from the initial distribution of `sem`.
pub fn explore<P: Probability, S: Semantics, L: Labeling<S::State>>(
    sem: &S,
    labels: &L,
    opts: &ExploreOptions,
) -> Result<SparseDtmc<P>> {
    #[cfg(feature = "parallel")]
    if opts.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| Error::InvalidParams(e.to_string()))?;
        return pool.install(|| explore_inner(sem, labels, opts));
    }
    explore_inner(sem, labels, opts)
}

fn explore_inner<P: Probability, S: Semantics, L: Labeling<S::State>>(
    sem: &S,
    labels: &L,
    opts: &ExploreOptions,
) -> Result<SparseDtmc<P>> {
    let hasher = DefaultHashBuilder::default();
    let mut table: HashTable<u32> = HashTable::new();
    let mut states = StateTable::new();
    let label_names = labels.names();
    let mut label_sets: Vec<Vec<u32>> = alloc::vec![Vec::new(); label_names.len()];

    // Level 0: the initial support, merged and sorted by encoding.
    let mut init: Vec<(Vec<u8>, P)> = Vec::new();
    for (p, s) in sem.initial_states::<P>()? {
        if p.is_zero() {
            continue;
        }
        let mut buf = Vec::new();
        sem.encode(&s, &mut buf);
        init.push((buf, p));
    }
    init.sort_by(|a, b| a.0.cmp(&b.0));
    let mut initial: Vec<(u32, P)> = Vec::new();
    for (bytes, p) in init {
        if !states.is_empty() && states.get(states.len() - 1) == bytes.as_slice() {
            let last = initial.last_mut().expect("initial entry for the previous state");
            last.1 = last.1.clone() + p;
            continue;
        }
        let idx = states.len() as u32;
        let h = hasher.hash_one(bytes.as_slice());
        table.insert_unique(h, idx, |&i| hasher.hash_one(states.get(i as usize)));
        states.push(&bytes);
        initial.push((idx, p));
    }
    if states.len() > opts.max_states {
        return Err(Error::StateLimit { limit: opts.max_states, explored: states.len() });
    }

    let mut row_offsets = alloc::vec![0usize];
    let mut col_indices: Vec<u32> = Vec::new();
    let mut values: Vec<P> = Vec::new();

    let mut pending = StateTable::new();
    let mut pending_hashes: Vec<u64> = Vec::new();
    let mut pending_table: HashTable<u32> = HashTable::new();
    let mut level_rows: Vec<(u32, P)> = Vec::new();
    let mut level_row_ends: Vec<usize> = Vec::new();

    let mut lo = 0usize;
    while lo < states.len() {
        let hi = states.len();
        level_rows.clear();
        level_row_ends.clear();

        let mut start = lo;
        while start < hi {
            let end = (start + CHUNK).min(hi);
            let chunk = expand_chunk::<P, S, L>(sem, labels, &states, start, end)?;
            for (k, ex) in chunk.into_iter().enumerate() {
                let src = start + k;
                for &l in &ex.labels {
                    label_sets[l as usize].push(src as u32);
                }
                for (p, a, b) in ex.succ {
                    let enc = &ex.bytes[a..b];
                    let h = hasher.hash_one(enc);
                    let col = if let Some(&i) = table.find(h, |&i| states.get(i as usize) == enc) {
                        i
                    } else if let Some(&i) = pending_table.find(h, |&i| pending.get(i as usize) == enc) {
                        hi as u32 + i
                    } else {
                        let i = pending.len() as u32;
                        if hi + pending.len() + 1 > opts.max_states {
                            return Err(Error::StateLimit { limit: opts.max_states, explored: hi + pending.len() });
                        }
                        pending_table.insert_unique(h, i, |&j| pending_hashes[j as usize]);
                        pending.push(enc);
                        pending_hashes.push(h);
                        hi as u32 + i
                    };
                    level_rows.push((col, p));
                }
                level_row_ends.push(level_rows.len());
            }
            start = end;
        }

        // Renumber the new level by encoding and commit it.
        let mut order: Vec<u32> = (0..pending.len() as u32).collect();
        order.sort_unstable_by(|&a, &b| pending.get(a as usize).cmp(pending.get(b as usize)));
        let mut rank = alloc::vec![0u32; order.len()];
        for (r, &k) in order.iter().enumerate() {
            rank[k as usize] = r as u32;
            let idx = states.len() as u32;
            states.push(pending.get(k as usize));
            let h = pending_hashes[k as usize];
            table.insert_unique(h, idx, |&i| hasher.hash_one(states.get(i as usize)));
        }
        pending.clear();
        pending_hashes.clear();
        pending_table.clear();

        let mut begin = 0;
        for &end in &level_row_ends {
            let row = &mut level_rows[begin..end];
            for (c, _) in row.iter_mut() {
                if *c as usize >= hi {
                    *c = hi as u32 + rank[*c as usize - hi];
                }
            }
            row.sort_by_key(|(c, _)| *c);
            let row_start = col_indices.len();
            for (c, p) in row.iter() {
                if col_indices.len() > row_start && *col_indices.last().unwrap() == *c {
                    let last = values.last_mut().unwrap();
                    *last = last.clone() + p.clone();
                } else {
                    col_indices.push(*c);
                    values.push(p.clone());
                }
            }
            row_offsets.push(col_indices.len());
            begin = end;
        }
        lo = hi;
    }

    let num_states = states.len();
    drop(table);
    let mut all_labels = Vec::with_capacity(label_names.len() + 1);
    let mut init_set: Vec<u32> = initial.iter().map(|(i, _)| *i).collect();
    init_set.sort_unstable();
    all_labels.push((INIT_LABEL.to_string(), init_set));
    all_labels.extend(label_names.into_iter().zip(label_sets));
    Ok(SparseDtmc {
        num_states,
        row_offsets,
        col_indices,
        values,
        initial,
        labels: all_labels,
        states: opts.keep_states.then_some(states),
    })
}

#[cfg(feature = "parallel")]
fn expand_chunk<P: Probability, S: Semantics, L: Labeling<S::State>>(
    sem: &S,
    labels: &L,
    states: &StateTable,
    start: usize,
    end: usize,
) -> Result<Vec<Expanded<P>>> {
    use rayon::prelude::*;
    (start..end).into_par_iter().map(|i| expand(sem, labels, states.get(i))).collect()
}

#[cfg(not(feature = "parallel"))]
fn expand_chunk<P: Probability, S: Semantics, L: Labeling<S::State>>(
    sem: &S,
    labels: &L,
    states: &StateTable,
    start: usize,
    end: usize,
) -> Result<Vec<Expanded<P>>> {
    (start..end).map(|i| expand(sem, labels, states.get(i))).collect()
}

impl Semantics for FullModel {
    type State = FullState;

    fn initial_states<P: Probability>(&self) -> Result<Vec<(P, FullState)>> {
        Ok(self.initial())
    }

    fn successors_into<P: Probability>(&self, s: &FullState, out: &mut Vec<(P, FullState)>) -> Result<()> {
        FullModel::successors_into(self, s, out)
    }

    /// Lock as `u32` (0 free, `i + 1` held by process `i`), then location
    /// code and `u16` timer per process.
    fn encode(&self, s: &FullState, buf: &mut Vec<u8>) {
        let lock = match s.lock {
            LockState::Free => 0,
            LockState::Held(i) => i + 1,
        };
        buf.extend_from_slice(&lock.to_le_bytes());
        for p in &s.procs {
            buf.push(p.loc.code());
            buf.extend_from_slice(&p.timer.to_le_bytes());
        }
    }

    fn decode(&self, bytes: &[u8]) -> Result<FullState> {
        let mut r = Reader { bytes, pos: 0 };
        let lock = match r.u32()? {
            0 => LockState::Free,
            i => LockState::Held(i - 1),
        };
        let mut procs = Vec::with_capacity(self.params.n as usize);
        for _ in 0..self.params.n {
            let code = r.byte()?;
            let loc =
                Location::from_code(code).ok_or_else(|| Error::Decode(alloc::format!("bad location code {code}")))?;
            procs.push(ProcState { loc, timer: r.u16()? });
        }
        if !r.done() {
            return Err(Error::Decode("trailing bytes".into()));
        }
        let s = FullState { lock, procs };
        s.check().map_err(|e| Error::Decode(e.into()))?;
        Ok(s)
    }
}

impl Semantics for ReducedModel {
    type State = ReducedState;

    fn initial_states<P: Probability>(&self) -> Result<Vec<(P, ReducedState)>> {
        Ok(self.initial())
    }

    fn successors_into<P: Probability>(&self, s: &ReducedState, out: &mut Vec<(P, ReducedState)>) -> Result<()> {
        ReducedModel::successors_into(self, s, out)
    }

    fn encode(&self, s: &ReducedState, buf: &mut Vec<u8>) {
        ReducedModel::encode(self, s, buf)
    }

    fn decode(&self, bytes: &[u8]) -> Result<ReducedState> {
        ReducedModel::decode(self, bytes)
    }
}
