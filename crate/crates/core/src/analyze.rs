//! Long-run spinlock properties computed from a labelled chain and its
//! stationary vector.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::marker::PhantomData;

use crate::dist::Ticks;
use crate::error::{Error, Result};
use crate::explore::{Labeling, SparseDtmc};
use crate::model::Location;
use crate::solve::{edge_frequency, phase_type_waiting, WaitingTime};
use crate::symmetry::{ncrit_distances, SymmetricView};

pub const P1_WAIT: &str = "p1_wait";
pub const P1_SPIN: &str = "p1_spin";
pub const SOME_WAIT: &str = "some_wait";
pub const SOME_SPIN: &str = "some_spin";
pub const P1_CRIT: &str = "p1_crit";
pub const P1_GRANTED_T1: &str = "p1_granted_t1";
pub const P1_GRANTED_T2: &str = "p1_granted_t2";

pub fn ncrit_label(k: u32) -> String {
    format!("ncrit_{k}")
}

pub fn dist_label(k: Ticks) -> String {
    format!("dist_{k}")
}

/// The atomic propositions used by the analysis, for any state type that
/// exposes a [`SymmetricView`].
#[derive(Debug, Clone)]
pub struct SpinlockLabels<S> {
    n: u32,
    max_nu: Ticks,
    _state: PhantomData<fn(&S)>,
}

impl<S> SpinlockLabels<S> {
    pub fn new(n: u32, max_nu: Ticks) -> Self {
        SpinlockLabels { n, max_nu, _state: PhantomData }
    }

    fn fixed_base(&self) -> u32 {
        self.n + 1
    }

    fn dist_base(&self) -> u32 {
        self.fixed_base() + 7
    }
}

impl<S: SymmetricView> Labeling<S> for SpinlockLabels<S> {
    fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..=self.n).map(ncrit_label).collect();
        for fixed in [P1_WAIT, P1_SPIN, SOME_WAIT, SOME_SPIN, P1_CRIT, P1_GRANTED_T1, P1_GRANTED_T2] {
            names.push(fixed.into());
        }
        names.extend((0..=self.max_nu).map(dist_label));
        names
    }

    fn holds(&self, s: &S, out: &mut Vec<u32>) {
        out.push(s.ncrit_count());
        let base = self.fixed_base();
        let p1 = s.p1();
        let flags = [
            p1.is_waiting(),
            s.p1_spinning(),
            s.waiting_count() > 0,
            s.some_spinning(),
            p1.loc == Location::Critical,
            s.p1_holds_lock() && p1.is_waiting() && p1.timer == 1,
            s.p1_holds_lock() && p1.is_waiting() && p1.timer == 2,
        ];
        for (i, f) in flags.into_iter().enumerate() {
            if f {
                out.push(base + i as u32);
            }
        }
        let mut classes = Vec::new();
        let mut dists = Vec::new();
        s.ncrit_classes(&mut classes);
        ncrit_distances(&classes, &mut dists);
        out.extend(dists.iter().map(|&d| self.dist_base() + u32::from(d)));
    }
}

fn mass(d: &SparseDtmc<f64>, pi: &[f64], label: &str) -> Result<f64> {
    Ok(d.label(label)?.iter().fold(0.0, |acc, &s| acc + pi[s as usize]))
}

/// `hist[k]` = long-run probability that exactly `k` processes are in ncrit.
pub fn ncrit_histogram(d: &SparseDtmc<f64>, pi: &[f64], n: u32) -> Result<Vec<f64>> {
    (0..=n).map(|k| mass(d, pi, &ncrit_label(k))).collect()
}

/// `(P1 spinning, some process spinning)`, where spinning means waiting
/// while another process holds the lock.
pub fn spinning_probabilities(d: &SparseDtmc<f64>, pi: &[f64]) -> Result<(f64, f64)> {
    Ok((mass(d, pi, P1_SPIN)?, mass(d, pi, SOME_SPIN)?))
}

/// Long-run probability of each neighbouring-timer distance among ncrit
/// processes. Distances with zero mass are omitted.
pub fn distance_spectrum(d: &SparseDtmc<f64>, pi: &[f64]) -> Result<BTreeMap<Ticks, f64>> {
    let mut out = BTreeMap::new();
    for (name, states) in &d.labels {
        let Some(k) = name.strip_prefix("dist_").and_then(|k| k.parse::<Ticks>().ok()) else {
            continue;
        };
        let m: f64 = states.iter().map(|&s| pi[s as usize]).sum();
        if m > 0.0 {
            out.insert(k, m);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionStats {
    /// Fraction of `P1`'s lock acquisitions entered from wait timer 1.
    pub p_acquire_no_wait: f64,
    /// Long-run frequency of `P1` entering crit.
    pub acquisition_rate: f64,
    /// Ticks `P1` spends in wait per visit; `None` if it never waits.
    pub waiting: Option<WaitingTime>,
}

pub fn acquisition_stats(d: &SparseDtmc<f64>, pi: &[f64]) -> Result<AcquisitionStats> {
    let t1 = d.label_mask(P1_GRANTED_T1)?;
    let t2 = d.label_mask(P1_GRANTED_T2)?;
    let crit = d.label_mask(P1_CRIT)?;
    let any: Vec<bool> = t1.iter().zip(&t2).map(|(a, b)| *a || *b).collect();
    let immediate = edge_frequency(d, pi, &t1, &crit);
    let all = edge_frequency(d, pi, &any, &crit);
    if all.is_nan() || all <= 0.0 {
        return Err(Error::Degenerate("P1 never acquires the lock in the long run".into()));
    }
    let waiting = match phase_type_waiting(d, pi, &d.label_mask(P1_WAIT)?) {
        Ok(w) => Some(w),
        Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(AcquisitionStats { p_acquire_no_wait: immediate / all, acquisition_rate: all, waiting })
}

/// Every long-run property for one `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub n: u32,
    pub ncrit_histogram: Vec<f64>,
    pub p1_spinning: f64,
    pub any_spinning: f64,
    pub distance_spectrum: BTreeMap<Ticks, f64>,
    pub p_acquire_no_wait: f64,
    pub expected_wait: Option<f64>,
    pub wait_quantile_95: Option<u64>,
}

impl PropertyReport {
    pub fn build(d: &SparseDtmc<f64>, pi: &[f64], n: u32) -> Result<Self> {
        if pi.len() != d.num_states {
            return Err(Error::InvalidParams(format!("pi has {} entries for {} states", pi.len(), d.num_states)));
        }
        let (p1_spinning, any_spinning) = spinning_probabilities(d, pi)?;
        let acq = acquisition_stats(d, pi)?;
        Ok(PropertyReport {
            n,
            ncrit_histogram: ncrit_histogram(d, pi, n)?,
            p1_spinning,
            any_spinning,
            distance_spectrum: distance_spectrum(d, pi)?,
            p_acquire_no_wait: acq.p_acquire_no_wait,
            expected_wait: acq.waiting.as_ref().map(|w| w.mean),
            wait_quantile_95: acq.waiting.as_ref().map(|w| w.quantile(0.95)),
        })
    }

    /// Flat `(property, key, value)` rows in a stable order.
    pub fn rows(&self) -> Vec<(&'static str, String, f64)> {
        let mut rows = Vec::new();
        for (k, p) in self.ncrit_histogram.iter().enumerate() {
            rows.push(("ncrit", format!("{k}"), *p));
        }
        rows.push(("p1_spinning", String::new(), self.p1_spinning));
        rows.push(("any_spinning", String::new(), self.any_spinning));
        for (k, p) in &self.distance_spectrum {
            rows.push(("distance", format!("{k}"), *p));
        }
        rows.push(("p_acquire_no_wait", String::new(), self.p_acquire_no_wait));
        if let Some(w) = self.expected_wait {
            rows.push(("expected_wait", String::new(), w));
        }
        if let Some(q) = self.wait_quantile_95 {
            rows.push(("wait_quantile_95", String::new(), q as f64));
        }
        rows
    }
}
