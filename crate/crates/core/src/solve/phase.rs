use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::explore::SparseDtmc;

/// Truncation threshold for the remaining tail mass of a waiting-time PMF.
pub const PMF_TAIL: f64 = 1e-12;

const MAX_STEPS: usize = 50_000_000;

/// Distribution of the number of consecutive ticks spent in a set of states
/// per visit, in the long run.
#[derive(Debug, Clone, PartialEq)]
pub struct WaitingTime {
    /// `pmf[k - 1] = P(W = k)`.
    pub pmf: Vec<f64>,
    pub mean: f64,
    /// Long-run number of entries into the set per tick.
    pub entry_rate: f64,
    /// Mass left out by truncation.
    pub tail: f64,
}

impl WaitingTime {
    /// Smallest `k` with `P(W <= k) >= q`.
    pub fn quantile(&self, q: f64) -> u64 {
        let mut cdf = 0.0;
        for (k, p) in self.pmf.iter().enumerate() {
            cdf += p;
            if cdf >= q {
                return k as u64 + 1;
            }
        }
        self.pmf.len() as u64
    }
}

/// Long-run frequency `Σ π(s) P(s, t)` over edges with `from[s]` and `to[t]`.
pub fn edge_frequency(d: &SparseDtmc<f64>, pi: &[f64], from: &[bool], to: &[bool]) -> f64 {
    let mut f = 0.0;
    for s in 0..d.num_states {
        if !from[s] || pi[s] == 0.0 {
            continue;
        }
        let (cols, vals) = d.row(s);
        let out: f64 = cols.iter().zip(vals).filter(|(&t, _)| to[t as usize]).map(|(_, &p)| p).sum();
        f += pi[s] * out;
    }
    f
}

/// Phase-type law of the sojourn time in `wait`: entered with the long-run
/// entry distribution, then evolving by the sub-stochastic restriction of the
/// matrix to `wait` until it exits.
pub fn phase_type_waiting(d: &SparseDtmc<f64>, pi: &[f64], wait: &[bool]) -> Result<WaitingTime> {
    let members: Vec<u32> = (0..d.num_states as u32).filter(|&s| wait[s as usize]).collect();
    if members.is_empty() {
        return Err(Error::Degenerate("empty waiting set".into()));
    }
    let mut local = vec![u32::MAX; d.num_states];
    for (k, &s) in members.iter().enumerate() {
        local[s as usize] = k as u32;
    }

    let mut entry = vec![0.0; members.len()];
    for s in 0..d.num_states {
        if wait[s] || pi[s] == 0.0 {
            continue;
        }
        let (cols, vals) = d.row(s);
        for (&t, &p) in cols.iter().zip(vals) {
            if wait[t as usize] {
                entry[local[t as usize] as usize] += pi[s] * p;
            }
        }
    }
    let entry_rate: f64 = entry.iter().sum();
    if entry_rate.is_nan() || entry_rate <= 0.0 {
        return Err(Error::Degenerate("the waiting set is never entered in the long run".into()));
    }

    // Restriction to the waiting set, in local indices, plus exit mass.
    let mut offsets = vec![0usize];
    let mut targets: Vec<u32> = Vec::new();
    let mut probs: Vec<f64> = Vec::new();
    let mut exit = vec![0.0; members.len()];
    for (k, &s) in members.iter().enumerate() {
        let (cols, vals) = d.row(s as usize);
        for (&t, &p) in cols.iter().zip(vals) {
            if wait[t as usize] {
                targets.push(local[t as usize]);
                probs.push(p);
            } else {
                exit[k] += p;
            }
        }
        offsets.push(targets.len());
    }

    let mut v: Vec<f64> = entry.iter().map(|e| e / entry_rate).collect();
    let mut next = vec![0.0; members.len()];
    let mut pmf = Vec::new();
    let mut remaining = 1.0;
    while remaining >= PMF_TAIL {
        if pmf.len() >= MAX_STEPS {
            return Err(Error::Degenerate("waiting time does not terminate".into()));
        }
        let mut out = 0.0;
        next.iter_mut().for_each(|x| *x = 0.0);
        for (k, &x) in v.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            out += x * exit[k];
            for e in offsets[k]..offsets[k + 1] {
                next[targets[e] as usize] += x * probs[e];
            }
        }
        pmf.push(out);
        core::mem::swap(&mut v, &mut next);
        remaining = v.iter().sum();
    }
    let mean = pmf.iter().enumerate().map(|(k, p)| (k + 1) as f64 * p).sum();
    Ok(WaitingTime { pmf, mean, entry_rate, tail: remaining })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solve::testutil::chain;
    use crate::solve::{stationary, SolverOptions};

    #[test]
    fn fixed_two_tick_wait() {
        // 0 -> 1 -> 2 -> 0, waiting set {1, 2}
        let d = chain(&[&[(1, 1.0)], &[(2, 1.0)], &[(0, 1.0)]], &[(0, 1.0)]);
        let pi = stationary(&d, &SolverOptions::default()).unwrap().pi;
        let w = phase_type_waiting(&d, &pi, &[false, true, true]).unwrap();
        assert_eq!(w.pmf, vec![0.0, 1.0]);
        assert_eq!(w.mean, 2.0);
        assert_eq!(w.quantile(0.95), 2);
    }

    #[test]
    fn geometric_wait_and_renewal_reward() {
        // 0 -> 1; 1 stays with 3/4.
        let d = chain(&[&[(1, 1.0)], &[(0, 0.25), (1, 0.75)]], &[(0, 1.0)]);
        let pi = stationary(&d, &SolverOptions::default()).unwrap().pi;
        let w = phase_type_waiting(&d, &pi, &[false, true]).unwrap();
        assert!((w.mean - 4.0).abs() < 1e-9);
        assert!((w.mean * w.entry_rate - pi[1]).abs() < 1e-9);
        let total: f64 = w.pmf.iter().sum();
        assert!((total - 1.0).abs() <= PMF_TAIL);
        // P(W <= k) = 1 - 0.75^k >= 0.95 first at k = 11
        assert_eq!(w.quantile(0.95), 11);
    }

    #[test]
    fn never_entered_is_degenerate() {
        let d = chain(&[&[(0, 1.0)], &[(1, 1.0)]], &[(0, 1.0)]);
        let pi = vec![1.0, 0.0];
        assert!(phase_type_waiting(&d, &pi, &[false, true]).is_err());
        assert!(phase_type_waiting(&d, &pi, &[false, false]).is_err());
    }

    #[test]
    fn edge_frequency_counts_selected_edges() {
        let d = chain(&[&[(0, 0.9), (1, 0.1)], &[(0, 0.2), (1, 0.8)]], &[(0, 1.0)]);
        let pi = [2.0 / 3.0, 1.0 / 3.0];
        let f = edge_frequency(&d, &pi, &[true, false], &[false, true]);
        assert!((f - 2.0 / 30.0).abs() < 1e-15);
    }
}
