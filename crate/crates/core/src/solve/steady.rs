use alloc::vec;
use alloc::vec::Vec;

use super::scc::{bscc_decompose, BsccDecomposition};
use crate::error::{Error, Result};
use crate::explore::SparseDtmc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target max-norm of `πP - π`.
    pub eps: f64,
    /// Gauss-Seidel sweeps allowed per BSCC.
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { eps: 1e-10, max_iter: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    /// Long-run fraction of time spent in each state.
    pub pi: Vec<f64>,
    pub residual: f64,
    /// Total sweeps over all BSCCs.
    pub iterations: usize,
    pub decomposition: BsccDecomposition,
}

/// Max-norm of `πP - π`.
pub fn residual(d: &SparseDtmc<f64>, pi: &[f64]) -> f64 {
    let mut y = vec![0.0; d.num_states];
    for (i, &p) in pi.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let (cols, vals) = d.row(i);
        for (&c, &v) in cols.iter().zip(vals) {
            y[c as usize] += p * v;
        }
    }
    y.iter().zip(pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Long-run state probabilities from the initial distribution: per-BSCC
/// balance equations solved by Gauss-Seidel sweeps, weighted by the
/// probability of reaching each BSCC. Solving the balance equations instead
/// of iterating `πP` gives the time-average vector on periodic chains too.
pub fn stationary(d: &SparseDtmc<f64>, opts: &SolverOptions) -> Result<SteadyState> {
    if opts.eps.is_nan() || opts.eps <= 0.0 {
        return Err(Error::InvalidParams("eps must be positive".into()));
    }
    let dec = bscc_decompose(d);
    let (t_off, t_rows, t_vals) = d.transpose();
    let mut pi = vec![0.0; d.num_states];
    let mut iterations = 0;
    for (b, states) in dec.bsccs.iter().enumerate() {
        let (local, it) = solve_bscc(&dec, b as u32, states, (&t_off, &t_rows, &t_vals), opts)?;
        iterations += it;
        for (&s, &x) in states.iter().zip(&local) {
            pi[s as usize] = dec.reach[b] * x;
        }
    }
    let residual = residual(d, &pi);
    Ok(SteadyState { pi, residual, iterations, decomposition: dec })
}

/// Sweeps continue until the residual is this fraction of `eps`, so the
/// vector itself and not only its residual is accurate to about `eps`.
const MARGIN: f64 = 0.01;
const STALL_WINDOW: usize = 256;
const RELAXED_OMEGA: f64 = 0.5;

type Transposed<'a> = (&'a [usize], &'a [u32], &'a [f64]);

fn solve_bscc(
    dec: &BsccDecomposition,
    b: u32,
    states: &[u32],
    (t_off, t_rows, t_vals): Transposed<'_>,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, usize)> {
    let m = states.len();
    if m == 1 {
        return Ok((vec![1.0], 0));
    }
    // Local transposed matrix without the diagonal.
    let mut local_of = hashbrown::HashMap::with_capacity(m);
    for (k, &s) in states.iter().enumerate() {
        local_of.insert(s, k as u32);
    }
    let mut offsets = Vec::with_capacity(m + 1);
    offsets.push(0usize);
    let mut srcs: Vec<u32> = Vec::new();
    let mut probs: Vec<f64> = Vec::new();
    let mut stay = vec![0.0; m];
    for (k, &s) in states.iter().enumerate() {
        let s = s as usize;
        for e in t_off[s]..t_off[s + 1] {
            let i = t_rows[e];
            if dec.component[i as usize] != b {
                continue;
            }
            if i as usize == s {
                stay[k] += t_vals[e];
            } else {
                srcs.push(local_of[&i]);
                probs.push(t_vals[e]);
            }
        }
        offsets.push(srcs.len());
    }
    drop(local_of);

    let mut x = vec![1.0 / m as f64; m];
    let mut res = f64::INFINITY;
    // Plain sweeps can rotate mass around a periodic class forever; once
    // the residual stalls, under-relaxed sweeps are used instead.
    let mut omega = 1.0;
    let mut checkpoint = f64::INFINITY;
    for sweep in 1..=opts.max_iter {
        for j in 0..m {
            let mut acc = 0.0;
            for e in offsets[j]..offsets[j + 1] {
                acc += x[srcs[e] as usize] * probs[e];
            }
            x[j] = (1.0 - omega) * x[j] + omega * acc / (1.0 - stay[j]);
        }
        let total: f64 = x.iter().sum();
        for v in &mut x {
            *v /= total;
        }
        // Residual of the normalised iterate.
        res = 0.0;
        for j in 0..m {
            let mut acc = x[j] * stay[j];
            for e in offsets[j]..offsets[j + 1] {
                acc += x[srcs[e] as usize] * probs[e];
            }
            res = res.max((acc - x[j]).abs());
        }
        if res <= opts.eps * MARGIN {
            return Ok((x, sweep));
        }
        if sweep % STALL_WINDOW == 0 {
            let stalled = res >= 0.5 * checkpoint;
            if stalled && res <= opts.eps {
                return Ok((x, sweep));
            }
            if stalled && omega == 1.0 {
                omega = RELAXED_OMEGA;
            }
            checkpoint = res;
        }
    }
    if res <= opts.eps {
        return Ok((x, opts.max_iter));
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, residual: res })
}
