//! The symmetry quotient against the full model: lumped stationary vectors
//! and every reported property.

use std::collections::HashMap;

use num_rational::BigRational;
use spinmc_core::analyze::{PropertyReport, SpinlockLabels};
use spinmc_core::explore::Semantics;
use spinmc_core::solve::{stationary, stationary_exact, SolverOptions};
use spinmc_core::{
    explore, ExploreOptions, FullModel, FullState, InitialMode, ModelParams, Probability, ReducedModel, ReducedState,
    SparseDtmc,
};

fn tiny(n: u32) -> ModelParams {
    ModelParams::new(n, "4:1/2,6:1/2".parse().unwrap(), "1:1".parse().unwrap(), "2:1".parse().unwrap()).unwrap()
}

fn point_tiny(n: u32) -> ModelParams {
    ModelParams::new(n, "4:1".parse().unwrap(), "1:1".parse().unwrap(), "2:1".parse().unwrap()).unwrap()
}

struct Pair<P> {
    full: FullModel,
    reduced: ReducedModel,
    fd: SparseDtmc<P>,
    rd: SparseDtmc<P>,
}

fn build<P: Probability>(p: &ModelParams) -> Pair<P> {
    let full = FullModel::new(p.clone()).unwrap();
    let reduced = ReducedModel::new(p.clone(), InitialMode::Multinomial).unwrap();
    let fd = explore(&full, &SpinlockLabels::<FullState>::new(p.n, p.max_nu()), &ExploreOptions::default()).unwrap();
    let rd =
        explore(&reduced, &SpinlockLabels::<ReducedState>::new(p.n, p.max_nu()), &ExploreOptions::default()).unwrap();
    Pair { full, reduced, fd, rd }
}

/// Index of the quotient image of every full state.
fn quotient_map<P: Probability>(pair: &Pair<P>) -> Vec<usize> {
    let rt = pair.rd.states.as_ref().unwrap();
    let index: HashMap<&[u8], usize> = (0..pair.rd.num_states).map(|i| (rt.get(i), i)).collect();
    let ft = pair.fd.states.as_ref().unwrap();
    (0..pair.fd.num_states)
        .map(|i| {
            let f = pair.full.decode(ft.get(i)).unwrap();
            let q = ReducedState::from_full(&f, pair.reduced.max_nu()).unwrap();
            let mut buf = Vec::new();
            pair.reduced.encode(&q, &mut buf);
            *index.get(buf.as_slice()).expect("quotient image was not explored")
        })
        .collect()
}

#[test]
fn every_full_state_maps_onto_an_explored_quotient_state() {
    for p in [tiny(3), ModelParams::example(3)] {
        let pair = build::<f64>(&p);
        let map = quotient_map(&pair);
        let mut hit = vec![false; pair.rd.num_states];
        map.iter().for_each(|&q| hit[q] = true);
        assert!(hit.iter().all(|&h| h), "quotient has states without a preimage");
    }
}

#[test]
fn lumped_stationary_vectors_agree() {
    let opts = SolverOptions { eps: 1e-14, ..Default::default() };
    for p in [tiny(2), tiny(3), ModelParams::example(2), ModelParams::example(3)] {
        let pair = build::<f64>(&p);
        let pf = stationary(&pair.fd, &opts).unwrap().pi;
        let pr = stationary(&pair.rd, &opts).unwrap().pi;
        let mut lumped = vec![0.0; pair.rd.num_states];
        for (i, &q) in quotient_map(&pair).iter().enumerate() {
            lumped[q] += pf[i];
        }
        let worst = lumped.iter().zip(&pr).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-9, "n={} worst {worst:e}", p.n);
    }
}

#[test]
fn exact_lumped_stationary_vectors_are_equal() {
    for p in [point_tiny(2), tiny(2), point_tiny(3)] {
        let pair = build::<BigRational>(&p);
        let pf = stationary_exact(&pair.fd, 50_000).unwrap();
        let pr = stationary_exact(&pair.rd, 50_000).unwrap();
        let mut lumped = vec![<BigRational as Probability>::zero(); pair.rd.num_states];
        for (i, &q) in quotient_map(&pair).iter().enumerate() {
            lumped[q] = lumped[q].clone() + pf[i].clone();
        }
        assert_eq!(lumped, pr, "n={}", p.n);
    }
}

#[test]
fn gauss_seidel_matches_exact_solution() {
    let pair = build::<BigRational>(&point_tiny(2));
    let exact = stationary_exact(&pair.fd, 50_000).unwrap();
    let approx = stationary(&pair.fd.to_f64(), &SolverOptions::default()).unwrap();
    assert!(approx.residual <= 1e-10);
    for (a, e) in approx.pi.iter().zip(&exact) {
        assert!((a - e.to_f64()).abs() < 1e-9);
    }
}

#[test]
fn reports_agree_between_models() {
    let opts = SolverOptions { eps: 1e-14, ..Default::default() };
    for p in [tiny(2), tiny(3), ModelParams::example(2), ModelParams::example(3)] {
        let pair = build::<f64>(&p);
        let rf = PropertyReport::build(&pair.fd, &stationary(&pair.fd, &opts).unwrap().pi, p.n).unwrap();
        let rr = PropertyReport::build(&pair.rd, &stationary(&pair.rd, &opts).unwrap().pi, p.n).unwrap();
        assert_eq!(rf.wait_quantile_95, rr.wait_quantile_95);
        let (a, b) = (rf.rows(), rr.rows());
        assert_eq!(a.len(), b.len());
        for ((pa, ka, va), (pb, kb, vb)) in a.into_iter().zip(b) {
            assert_eq!((pa, &ka), (pb, &kb));
            assert!((va - vb).abs() < 1e-9, "n={} {pa}[{ka}]: {va} vs {vb}", p.n);
        }
    }
}
