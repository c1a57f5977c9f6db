use proptest::prelude::*;

use spinmc_core::analyze::{PropertyReport, SpinlockLabels, P1_WAIT};
use spinmc_core::dist::Ratio;
use spinmc_core::explore::Semantics;
use spinmc_core::solve::{phase_type_waiting, residual, stationary, SolverOptions, PMF_TAIL};
use spinmc_core::symmetry::ncrit_distances;
use spinmc_core::{
    explore, DiscreteDistribution, ExploreOptions, FullModel, FullState, InitialMode, ModelParams, ReducedModel,
    ReducedState, SparseDtmc,
};

fn distribution(max: u16) -> impl Strategy<Value = DiscreteDistribution> {
    prop::collection::btree_map(1..=max, 1u64..4, 1..=2).prop_map(|m| {
        let total: u64 = m.values().sum();
        DiscreteDistribution::new(m.into_iter().map(|(v, w)| (v, Ratio::new(w, total).unwrap()))).unwrap()
    })
}

fn params(max_n: u32) -> impl Strategy<Value = ModelParams> {
    (1..=max_n, distribution(7), distribution(3), distribution(3))
        .prop_map(|(n, nu, g0, g1)| ModelParams::new(n, nu, g0, g1).unwrap())
}

fn full_chain(p: &ModelParams) -> (FullModel, SparseDtmc<f64>) {
    let m = FullModel::new(p.clone()).unwrap();
    let d = explore(&m, &SpinlockLabels::<FullState>::new(p.n, p.max_nu()), &ExploreOptions::default()).unwrap();
    (m, d)
}

fn reduced_chain(p: &ModelParams) -> (ReducedModel, SparseDtmc<f64>) {
    let m = ReducedModel::new(p.clone(), InitialMode::Multinomial).unwrap();
    let d = explore(&m, &SpinlockLabels::<ReducedState>::new(p.n, p.max_nu()), &ExploreOptions::default()).unwrap();
    (m, d)
}

/// Relabels states by `perm` (old index -> new index).
fn permute(d: &SparseDtmc<f64>, perm: &[u32]) -> SparseDtmc<f64> {
    let n = d.num_states;
    let mut inv = vec![0usize; n];
    for (old, &new) in perm.iter().enumerate() {
        inv[new as usize] = old;
    }
    let mut row_offsets = vec![0];
    let mut col_indices = Vec::new();
    let mut values = Vec::new();
    for &old in &inv {
        let (cols, vals) = d.row(old);
        let mut row: Vec<(u32, f64)> = cols.iter().map(|&c| perm[c as usize]).zip(vals.iter().copied()).collect();
        row.sort_by_key(|e| e.0);
        for (c, v) in row {
            col_indices.push(c);
            values.push(v);
        }
        row_offsets.push(col_indices.len());
    }
    SparseDtmc {
        num_states: n,
        row_offsets,
        col_indices,
        values,
        initial: d.initial.iter().map(|&(s, p)| (perm[s as usize], p)).collect(),
        labels: Vec::new(),
        states: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn explored_chains_are_stochastic(p in params(3)) {
        let (_, f) = full_chain(&p);
        let (_, r) = reduced_chain(&p);
        f.validate(1e-12).unwrap();
        r.validate(1e-12).unwrap();
        prop_assert!(r.num_states <= f.num_states);
    }

    #[test]
    fn encodings_round_trip(p in params(3)) {
        let (fm, f) = full_chain(&p);
        let table = f.states.as_ref().unwrap();
        for i in 0..f.num_states {
            let mut buf = Vec::new();
            fm.encode(&fm.decode(table.get(i)).unwrap(), &mut buf);
            prop_assert_eq!(buf.as_slice(), table.get(i));
        }
        let (rm, r) = reduced_chain(&p);
        let table = r.states.as_ref().unwrap();
        for i in 0..r.num_states {
            let s = rm.decode(table.get(i)).unwrap();
            prop_assert_eq!(s.counters.total() + u32::from(s.holder.is_some()), p.n - 1);
            let mut buf = Vec::new();
            rm.encode(&s, &mut buf);
            prop_assert_eq!(buf.as_slice(), table.get(i));
        }
    }

    #[test]
    fn reduced_successors_conserve_processes(p in params(5)) {
        let (rm, r) = reduced_chain(&p);
        let table = r.states.as_ref().unwrap();
        for i in (0..r.num_states).step_by(7) {
            let s = rm.decode(table.get(i)).unwrap();
            let succ = rm.successors::<f64>(&s).unwrap();
            let total: f64 = succ.iter().map(|(q, _)| q).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for (_, t) in succ {
                prop_assert_eq!(t.counters.total() + u32::from(t.holder.is_some()), p.n - 1);
            }
        }
    }

    #[test]
    fn stationary_vector_invariants(p in params(3)) {
        let (_, d) = reduced_chain(&p);
        let opts = SolverOptions::default();
        let s = stationary(&d, &opts).unwrap();
        prop_assert!(s.residual <= opts.eps);
        prop_assert!(s.pi.iter().all(|&x| x >= 0.0));
        prop_assert!((s.pi.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(s.decomposition.transient.iter().all(|&t| s.pi[t as usize] == 0.0));
        prop_assert!((s.decomposition.reach.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!((residual(&d, &s.pi) - s.residual).abs() < 1e-15);
    }

    #[test]
    fn solution_does_not_depend_on_state_order(p in params(2), seed in any::<u64>()) {
        let (_, d) = full_chain(&p);
        let mut perm: Vec<u32> = (0..d.num_states as u32).collect();
        let mut x = seed | 1;
        for i in (1..perm.len()).rev() {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            perm.swap(i, (x % (i as u64 + 1)) as usize);
        }
        let opts = SolverOptions::default();
        let a = stationary(&d, &opts).unwrap().pi;
        let b = stationary(&permute(&d, &perm), &opts).unwrap().pi;
        for (old, &new) in perm.iter().enumerate() {
            prop_assert!((a[old] - b[new as usize]).abs() <= 10.0 * opts.eps, "{} vs {}", a[old], b[new as usize]);
        }
    }

    #[test]
    fn waiting_time_law_is_consistent(p in params(3)) {
        let (_, d) = reduced_chain(&p);
        let pi = stationary(&d, &SolverOptions::default()).unwrap().pi;
        let wait = d.label_mask(P1_WAIT).unwrap();
        let w = phase_type_waiting(&d, &pi, &wait).unwrap();
        prop_assert!(w.pmf.iter().all(|&x| x >= 0.0));
        prop_assert!((w.pmf.iter().sum::<f64>() - 1.0).abs() <= 2.0 * PMF_TAIL);
        let in_wait: f64 = pi.iter().zip(&wait).filter(|(_, w)| **w).map(|(x, _)| x).sum();
        prop_assert!((w.mean * w.entry_rate - in_wait).abs() < 1e-8);
        prop_assert!(w.quantile(0.5) <= w.quantile(0.95));
    }

    #[test]
    fn full_and_reduced_reports_agree(p in params(3)) {
        let opts = SolverOptions { eps: 1e-13, ..Default::default() };
        let (_, f) = full_chain(&p);
        let (_, r) = reduced_chain(&p);
        let rf = PropertyReport::build(&f, &stationary(&f, &opts).unwrap().pi, p.n).unwrap();
        let rr = PropertyReport::build(&r, &stationary(&r, &opts).unwrap().pi, p.n).unwrap();
        prop_assert!((rf.ncrit_histogram.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for ((pa, ka, va), (pb, kb, vb)) in rf.rows().into_iter().zip(rr.rows()) {
            prop_assert_eq!((pa, &ka), (pb, &kb));
            prop_assert!((va - vb).abs() < 1e-9, "{}[{}]: {} vs {}", pa, ka, va, vb);
            prop_assert!(pa == "expected_wait" || pa == "wait_quantile_95" || (0.0..=1.0 + 1e-12).contains(&va));
        }
        prop_assert!(rr.any_spinning + 1e-12 >= rr.p1_spinning);
    }

    #[test]
    fn exploration_is_deterministic(p in params(3)) {
        let (_, a) = reduced_chain(&p);
        let (_, b) = reduced_chain(&p);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn distances_match_pairwise_definition(timers in prop::collection::vec(0u16..20, 0..8)) {
        let mut sorted = timers.clone();
        sorted.sort_unstable();
        let mut classes: Vec<(u16, u32)> = Vec::new();
        for &t in &sorted {
            match classes.last_mut() {
                Some((v, k)) if *v == t => *k += 1,
                _ => classes.push((t, 1)),
            }
        }
        let mut got = Vec::new();
        ncrit_distances(&classes, &mut got);
        // Two processes are neighbours when no third timer lies strictly
        // between theirs.
        let mut expected = Vec::new();
        for i in 0..timers.len() {
            for j in 0..timers.len() {
                let (a, b) = (timers[i], timers[j]);
                if i == j || a > b {
                    continue;
                }
                let between = timers.iter().enumerate().any(|(k, &c)| k != i && k != j && a < c && c < b);
                if !between {
                    expected.push(b - a);
                }
            }
        }
        expected.sort_unstable();
        expected.dedup();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn distributions_print_and_parse(d in distribution(60)) {
        let back: DiscreteDistribution = d.to_string().parse().unwrap();
        prop_assert_eq!(back, d);
    }
}

#[test]
fn example_reduced_three_processes_has_one_bscc() {
    let (_, d) = reduced_chain(&ModelParams::example(3));
    let s = stationary(&d, &SolverOptions::default()).unwrap();
    assert_eq!(s.decomposition.bsccs.len(), 1);
}
