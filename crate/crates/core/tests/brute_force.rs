//! A second, deliberately naive implementation of the full semantics,
//! checked state by state against the explorer.

use std::collections::{HashMap, VecDeque};

use spinmc_core::explore::{PredicateLabels, Semantics};
use spinmc_core::{
    explore, DiscreteDistribution, ExploreOptions, FullModel, FullState, Location, LockState, ModelParams, SparseDtmc,
};

/// `(location, timer)` with 0 = ncrit, 1 = wait, 2 = crit; lock holder index.
type Naive = (Option<usize>, Vec<(u8, u16)>);

fn dist(d: &DiscreteDistribution) -> Vec<(u16, f64)> {
    d.entries().iter().map(|(v, p)| (*v, p.to_f64())).collect()
}

/// `(prob, new local state, releases the lock)`.
type LocalMove = (f64, (u8, u16), bool);

fn naive_successors(s: &Naive, nu: &[(u16, f64)], g0: &[(u16, f64)], g1: &[(u16, f64)]) -> Vec<(f64, Naive)> {
    let (lock, procs) = s;
    let n = procs.len();
    let mut options: Vec<Vec<LocalMove>> = Vec::new();
    for (i, &(loc, t)) in procs.iter().enumerate() {
        let mine = *lock == Some(i);
        let opts = match (loc, t, mine) {
            (0, 0, _) => vec![(1.0, (1, 0), false)],
            (0, t, _) => vec![(1.0, (0, t - 1), false)],
            (1, 1, true) => g0.iter().map(|&(c, p)| (p, (2, c), false)).collect(),
            (1, 2, true) => g1.iter().map(|&(c, p)| (p, (2, c), false)).collect(),
            (1, t, false) => vec![(1.0, (1, (t + 1).min(2)), false)],
            (2, 0, _) => nu.iter().map(|&(v, p)| (p, (0, v), true)).collect(),
            (2, t, _) => vec![(1.0, (2, t - 1), false)],
            other => panic!("unexpected local state {other:?}"),
        };
        options.push(opts);
    }
    let waiting: Vec<usize> = (0..n).filter(|&i| procs[i].0 == 1).collect();
    let mut out: Vec<(f64, Naive)> = Vec::new();
    let mut stack = vec![(1.0, Vec::new(), false)];
    for opts in &options {
        let mut next = Vec::new();
        for (p, partial, rel) in &stack {
            for (q, st, r) in opts {
                let mut v: Vec<(u8, u16)> = partial.clone();
                v.push(*st);
                next.push((p * q, v, *rel || *r));
            }
        }
        stack = next;
    }
    for (p, procs2, released) in stack {
        let free = lock.is_none() || released;
        if !free {
            out.push((p, (*lock, procs2)));
        } else if waiting.is_empty() {
            out.push((p, (None, procs2)));
        } else {
            for &w in &waiting {
                out.push((p / waiting.len() as f64, (Some(w), procs2.clone())));
            }
        }
    }
    let mut merged: Vec<(f64, Naive)> = Vec::new();
    for (p, s) in out {
        match merged.iter_mut().find(|(_, t)| *t == s) {
            Some(e) => e.0 += p,
            None => merged.push((p, s)),
        }
    }
    merged
}

fn naive_reachable(params: &ModelParams) -> HashMap<Naive, Vec<(f64, Naive)>> {
    let nu = dist(&params.nu);
    let (g0, g1) = (dist(&params.gamma0), dist(&params.gamma1));
    let mut init: Vec<Vec<(u8, u16)>> = vec![vec![]];
    for _ in 0..params.n {
        init =
            init.into_iter().flat_map(|v| nu.iter().map(move |&(t, _)| [v.clone(), vec![(0, t)]].concat())).collect();
    }
    let mut seen: HashMap<Naive, Vec<(f64, Naive)>> = HashMap::new();
    let mut queue: VecDeque<Naive> = init.into_iter().map(|p| (None, p)).collect();
    while let Some(s) = queue.pop_front() {
        if seen.contains_key(&s) {
            continue;
        }
        let succ = naive_successors(&s, &nu, &g0, &g1);
        for (_, t) in &succ {
            if !seen.contains_key(t) {
                queue.push_back(t.clone());
            }
        }
        seen.insert(s, succ);
    }
    seen
}

fn to_naive(s: &FullState) -> Naive {
    let lock = match s.lock {
        LockState::Free => None,
        LockState::Held(i) => Some(i as usize),
    };
    let procs = s
        .procs
        .iter()
        .map(|p| {
            let code = match p.loc {
                Location::NonCritical => 0,
                Location::Waiting => 1,
                Location::Critical => 2,
            };
            (code, p.timer)
        })
        .collect();
    (lock, procs)
}

fn check_against_oracle(params: ModelParams) {
    let oracle = naive_reachable(&params);
    let model = FullModel::new(params.clone()).unwrap();
    let d: SparseDtmc<f64> = explore(&model, &PredicateLabels::new(), &ExploreOptions::default()).unwrap();
    assert_eq!(d.num_states, oracle.len(), "state count for {params:?}");
    let table = d.states.as_ref().unwrap();
    let decoded: Vec<Naive> = (0..d.num_states).map(|i| to_naive(&model.decode(table.get(i)).unwrap())).collect();
    for (i, s) in decoded.iter().enumerate() {
        let expected = &oracle[s];
        let (cols, vals) = d.row(i);
        assert_eq!(cols.len(), expected.len(), "row width of {s:?}");
        for (&c, &p) in cols.iter().zip(vals) {
            let target = &decoded[c as usize];
            let q = expected.iter().find(|(_, t)| t == target).map(|(q, _)| *q).expect("unexpected successor");
            assert!((p - q).abs() < 1e-12, "{s:?} -> {target:?}: {p} vs {q}");
        }
    }
}

fn tiny(n: u32, nu: &str) -> ModelParams {
    ModelParams::new(n, nu.parse().unwrap(), "1:1".parse().unwrap(), "2:1".parse().unwrap()).unwrap()
}

#[test]
fn hand_enumerated_single_process_cycle() {
    // ncrit 2, 1, 0; wait 0 (lock free); wait 1 (granted); crit 1, 0.
    let p = ModelParams::new(
        1,
        DiscreteDistribution::point(2),
        DiscreteDistribution::point(1),
        DiscreteDistribution::point(1),
    )
    .unwrap();
    let d: SparseDtmc<f64> =
        explore(&FullModel::new(p).unwrap(), &PredicateLabels::new(), &ExploreOptions::default()).unwrap();
    assert_eq!(d.num_states, 7);
}

#[test]
fn tiny_distributions_match_oracle() {
    for n in 1..=3 {
        check_against_oracle(tiny(n, "4:1"));
        check_against_oracle(tiny(n, "4:1/2,6:1/2"));
    }
}

#[test]
fn example_distributions_match_oracle() {
    check_against_oracle(ModelParams::example(1));
    check_against_oracle(ModelParams::example(2));
}

#[test]
fn example_three_processes_state_count() {
    let p = ModelParams::example(3);
    let oracle = naive_reachable(&p);
    let d: SparseDtmc<f64> =
        explore(&FullModel::new(p).unwrap(), &PredicateLabels::new(), &ExploreOptions::default()).unwrap();
    assert_eq!(d.num_states, oracle.len());
}
