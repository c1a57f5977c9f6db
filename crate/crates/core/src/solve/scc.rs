use alloc::vec;
use alloc::vec::Vec;

use crate::explore::SparseDtmc;

const NONE: u32 = u32::MAX;

/// Bottom strongly connected components and how likely each is to be
/// reached from the initial distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct BsccDecomposition {
    pub bsccs: Vec<Vec<u32>>,
    pub transient: Vec<u32>,
    /// Probability of eventually entering each BSCC.
    pub reach: Vec<f64>,
    /// BSCC index of every state, `u32::MAX` for transient states.
    pub component: Vec<u32>,
}

impl BsccDecomposition {
    pub fn is_transient(&self, s: usize) -> bool {
        self.component[s] == NONE
    }
}

/// Tarjan's algorithm with an explicit stack. Components are returned in the
/// order Tarjan completes them, a reverse topological order of the
/// condensation.
pub(crate) fn strongly_connected<P>(d: &SparseDtmc<P>) -> Vec<Vec<u32>> {
    let n = d.num_states;
    let mut index = vec![NONE; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut call: Vec<(u32, usize)> = Vec::new();
    let mut next = 0u32;
    let mut out = Vec::new();

    for root in 0..n {
        if index[root] != NONE {
            continue;
        }
        call.push((root as u32, d.row_offsets[root]));
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root as u32);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            let v = v as usize;
            let end = d.row_offsets[v + 1];
            if *pos < end {
                let w = d.col_indices[*pos] as usize;
                *pos += 1;
                if index[w] == NONE {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w as u32);
                    on_stack[w] = true;
                    call.push((w as u32, d.row_offsets[w]));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                let p = parent as usize;
                low[p] = low[p].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w as usize] = false;
                    comp.push(w);
                    if w as usize == v {
                        break;
                    }
                }
                comp.sort_unstable();
                out.push(comp);
            }
        }
    }
    out
}

/// Splits the state space into BSCCs and transient states and computes the
/// absorption probabilities from the initial distribution.
pub fn bscc_decompose(d: &SparseDtmc<f64>) -> BsccDecomposition {
    let n = d.num_states;
    let sccs = strongly_connected(d);
    let mut scc_of = vec![0u32; n];
    for (k, c) in sccs.iter().enumerate() {
        for &s in c {
            scc_of[s as usize] = k as u32;
        }
    }
    let mut component = vec![NONE; n];
    let mut bsccs = Vec::new();
    let mut bottom_of_scc = vec![NONE; sccs.len()];
    for (k, c) in sccs.iter().enumerate() {
        let closed = c.iter().all(|&s| d.row(s as usize).0.iter().all(|&t| scc_of[t as usize] == k as u32));
        if closed {
            bottom_of_scc[k] = bsccs.len() as u32;
            for &s in c {
                component[s as usize] = bsccs.len() as u32;
            }
            bsccs.push(c.clone());
        }
    }
    let mut transient: Vec<u32> = (0..n as u32).filter(|&s| component[s as usize] == NONE).collect();
    transient.sort_unstable();

    let reach = if bsccs.len() == 1 { vec![1.0] } else { absorption(d, &sccs, &bottom_of_scc, bsccs.len()) };
    BsccDecomposition { bsccs, transient, reach, component }
}

/// Absorption probabilities, solved one transient SCC at a time in Tarjan
/// order so that every successor outside the SCC is already known.
fn absorption(d: &SparseDtmc<f64>, sccs: &[Vec<u32>], bottom_of_scc: &[u32], k: usize) -> Vec<f64> {
    let n = d.num_states;
    // h[s * k + b] = probability of absorption in BSCC b from s.
    let mut h = vec![0.0f64; n * k];
    for (c, comp) in sccs.iter().enumerate() {
        if bottom_of_scc[c] != NONE {
            let b = bottom_of_scc[c] as usize;
            for &s in comp {
                h[s as usize * k + b] = 1.0;
            }
            continue;
        }
        // Gauss-Seidel inside the SCC; the restriction is sub-stochastic.
        let mut sweeps = 0usize;
        loop {
            let mut delta = 0.0f64;
            for &s in comp {
                let s = s as usize;
                let (cols, vals) = d.row(s);
                for b in 0..k {
                    let mut acc = 0.0;
                    let mut selfp = 0.0;
                    for (&t, &p) in cols.iter().zip(vals) {
                        if t as usize == s {
                            selfp += p;
                        } else {
                            acc += p * h[t as usize * k + b];
                        }
                    }
                    let v = acc / (1.0 - selfp);
                    delta = delta.max((v - h[s * k + b]).abs());
                    h[s * k + b] = v;
                }
            }
            sweeps += 1;
            if comp.len() == 1 || delta < 1e-15 || sweeps > 1_000_000 {
                break;
            }
        }
    }
    let mut reach = vec![0.0; k];
    for (s, p) in &d.initial {
        for b in 0..k {
            reach[b] += p * h[*s as usize * k + b];
        }
    }
    reach
}
