use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::scc::strongly_connected;
use crate::error::{Error, Result};
use crate::explore::SparseDtmc;

/// Default bound on the recurrent states handed to the exact solver.
pub const EXACT_STATE_LIMIT: usize = 50_000;

/// Exact long-run distribution over rationals: sparse
/// Grassmann-Taksar-Heyman elimination inside every BSCC, weighted by exact
/// absorption probabilities. `limit` bounds the number of recurrent states
/// and the size of any transient SCC, which is solved densely.
pub fn stationary_exact(d: &SparseDtmc<BigRational>, limit: usize) -> Result<Vec<BigRational>> {
    let sccs = strongly_connected(d);
    let mut scc_of = vec![0u32; d.num_states];
    for (k, c) in sccs.iter().enumerate() {
        for &s in c {
            scc_of[s as usize] = k as u32;
        }
    }
    let bottom: Vec<bool> = sccs
        .iter()
        .enumerate()
        .map(|(k, c)| c.iter().all(|&s| d.row(s as usize).0.iter().all(|&t| scc_of[t as usize] == k as u32)))
        .collect();
    let recurrent: usize = sccs.iter().zip(&bottom).filter(|(_, b)| **b).map(|(c, _)| c.len()).sum();
    if recurrent > limit {
        return Err(Error::TooLarge { states: recurrent, limit });
    }

    let reach = absorption_exact(d, &sccs, &bottom, limit)?;
    let mut pi = vec![BigRational::zero(); d.num_states];
    for ((c, _), r) in sccs.iter().zip(&bottom).filter(|(_, b)| **b).zip(reach) {
        if r.is_zero() {
            continue;
        }
        for (&s, x) in c.iter().zip(gth(d, c)?) {
            pi[s as usize] = &r * x;
        }
    }
    Ok(pi)
}

/// Probability of ending in each BSCC (in Tarjan order) from the initial
/// distribution.
fn absorption_exact(
    d: &SparseDtmc<BigRational>,
    sccs: &[Vec<u32>],
    bottom: &[bool],
    limit: usize,
) -> Result<Vec<BigRational>> {
    let k = bottom.iter().filter(|b| **b).count();
    let n = d.num_states;
    let mut h: Vec<Vec<BigRational>> = vec![Vec::new(); n];
    let mut b_index = 0;
    for (c, comp) in sccs.iter().enumerate() {
        if bottom[c] {
            for &s in comp {
                let mut v = vec![BigRational::zero(); k];
                v[b_index] = BigRational::one();
                h[s as usize] = v;
            }
            b_index += 1;
            continue;
        }
        let m = comp.len();
        if m > limit {
            return Err(Error::TooLarge { states: m, limit });
        }
        let mut local = BTreeMap::new();
        for (i, &s) in comp.iter().enumerate() {
            local.insert(s, i);
        }
        // (I - Q) x = r for all BSCCs at once: augmented dense system.
        let mut a = vec![vec![BigRational::zero(); m + k]; m];
        for (i, &s) in comp.iter().enumerate() {
            a[i][i] = BigRational::one();
            let (cols, vals) = d.row(s as usize);
            for (&t, p) in cols.iter().zip(vals) {
                match local.get(&t) {
                    Some(&j) => a[i][j] -= p,
                    None => {
                        for b in 0..k {
                            a[i][m + b] += p * &h[t as usize][b];
                        }
                    }
                }
            }
        }
        for col in 0..m {
            let pivot = (col..m)
                .find(|&r| !a[r][col].is_zero())
                .ok_or_else(|| Error::Degenerate("singular absorption system".into()))?;
            a.swap(col, pivot);
            let inv = BigRational::one() / &a[col][col];
            for x in a[col].iter_mut() {
                *x *= &inv;
            }
            let row = a[col].clone();
            for (r, other) in a.iter_mut().enumerate() {
                if r != col && !other[col].is_zero() {
                    let f = other[col].clone();
                    for (x, y) in other.iter_mut().zip(&row) {
                        *x -= &f * y;
                    }
                }
            }
        }
        for (i, &s) in comp.iter().enumerate() {
            h[s as usize] = a[i][m..].to_vec();
        }
    }
    let mut reach = vec![BigRational::zero(); k];
    for (s, p) in &d.initial {
        for (r, x) in reach.iter_mut().zip(&h[*s as usize]) {
            *r += p * x;
        }
    }
    Ok(reach)
}

/// Stationary vector of one closed, irreducible set of states.
fn gth(d: &SparseDtmc<BigRational>, states: &[u32]) -> Result<Vec<BigRational>> {
    let m = states.len();
    let mut local = BTreeMap::new();
    for (k, &s) in states.iter().enumerate() {
        local.insert(s, k as u32);
    }

    let mut rows: Vec<BTreeMap<u32, BigRational>> = vec![BTreeMap::new(); m];
    let mut cols: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); m];
    for (k, &s) in states.iter().enumerate() {
        let (c, v) = d.row(s as usize);
        for (&t, p) in c.iter().zip(v) {
            let j = local[&t];
            if j as usize != k && !p.is_zero() {
                rows[k].insert(j, p.clone());
                cols[j as usize].insert(k as u32);
            }
        }
    }

    let mut out_mass = vec![BigRational::zero(); m];
    for k in (1..m).rev() {
        let lower: Vec<(u32, BigRational)> = rows[k].range(..k as u32).map(|(j, v)| (*j, v.clone())).collect();
        let s = lower.iter().fold(BigRational::zero(), |a, (_, v)| a + v);
        if s.is_zero() {
            return Err(Error::Degenerate("BSCC is not irreducible".into()));
        }
        let feeders: Vec<u32> = cols[k].range(..k as u32).copied().collect();
        for i in feeders {
            let factor = rows[i as usize][&(k as u32)].clone() / &s;
            for (j, v) in &lower {
                if *j == i {
                    continue;
                }
                let add = &factor * v;
                rows[i as usize].entry(*j).and_modify(|e| *e += &add).or_insert(add);
                cols[*j as usize].insert(i);
            }
        }
        out_mass[k] = s;
    }

    let mut x = vec![BigRational::zero(); m];
    x[0] = BigRational::one();
    for j in 1..m {
        let mut acc = BigRational::zero();
        for &i in cols[j].range(..j as u32) {
            acc += &x[i as usize] * &rows[i as usize][&(j as u32)];
        }
        x[j] = acc / &out_mass[j];
    }
    let total = x.iter().fold(BigRational::zero(), |a, v| a + v);
    Ok(x.into_iter().map(|v| v / &total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Probability;
    use crate::solve::testutil::chain;

    fn q(n: u64, d: u64) -> BigRational {
        BigRational::from_ratio(n, d)
    }

    #[test]
    fn two_state_balance_is_exact() {
        let d = chain(&[&[(0, 0.9), (1, 0.1)], &[(0, 0.2), (1, 0.8)]], &[(0, 1.0)]);
        let d = d.map_values(|p| {
            if *p == 0.9 {
                q(9, 10)
            } else if *p == 0.1 {
                q(1, 10)
            } else if *p == 0.2 {
                q(1, 5)
            } else if *p == 0.8 {
                q(4, 5)
            } else {
                q(1, 1)
            }
        });
        let pi = stationary_exact(&d, 10).unwrap();
        assert_eq!(pi, vec![q(2, 3), q(1, 3)]);
    }

    #[test]
    fn three_state_cycle_with_shortcut() {
        // 0 -> 1 (1/2), 0 -> 2 (1/2), 1 -> 2, 2 -> 0: pi = (2/5, 1/5, 2/5)
        let d = chain(&[&[(1, 0.5), (2, 0.5)], &[(2, 1.0)], &[(0, 1.0)]], &[(0, 1.0)]);
        let d = d.map_values(|p| if *p == 0.5 { q(1, 2) } else { q(1, 1) });
        let pi = stationary_exact(&d, 10).unwrap();
        assert_eq!(pi, vec![q(2, 5), q(1, 5), q(2, 5)]);
    }

    #[test]
    fn two_traps_split_by_reach() {
        // 2 -> {0: 1/4, 1: 1/4, 2: 1/2}; 0 and 1 absorbing.
        let d = chain(&[&[(0, 1.0)], &[(1, 1.0)], &[(0, 0.25), (1, 0.25), (2, 0.5)]], &[(2, 1.0)]);
        let d = d.map_values(|p| {
            if *p == 0.25 {
                q(1, 4)
            } else if *p == 0.5 {
                q(1, 2)
            } else {
                q(1, 1)
            }
        });
        assert_eq!(stationary_exact(&d, 10).unwrap(), vec![q(1, 2), q(1, 2), q(0, 1)]);
    }

    #[test]
    fn rejects_large_chains() {
        let d = chain(&[&[(1, 1.0)], &[(0, 1.0)]], &[(0, 1.0)]).map_values(|_| q(1, 1));
        assert!(matches!(stationary_exact(&d, 1), Err(Error::TooLarge { states: 2, limit: 1 })));
    }
}
