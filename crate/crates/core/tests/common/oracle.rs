//! Brute-force reference for audience attribution: try every labelling of
//! every visitor and keep those that reproduce each window's deltas.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use adtrap_core::gdn::VisitLogEntry;
use adtrap_core::ids::{AudienceId, NetworkId};
use adtrap_core::trap::{Attribution, Label, WindowObservation};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    Exact,
    Ambiguous,
    Unknown,
}

pub fn class_of(a: &Attribution) -> Class {
    match a {
        Attribution::Exact(_) => Class::Exact,
        Attribution::Ambiguous(_) => Class::Ambiguous,
        Attribution::Unknown => Class::Unknown,
    }
}

/// `None` when no labelling explains the observations; otherwise every
/// label each visitor takes in some consistent labelling.
pub fn brute_force(obs: &[WindowObservation]) -> Option<BTreeMap<NetworkId, BTreeSet<Label>>> {
    let visitors: Vec<NetworkId> = obs
        .iter()
        .flat_map(|w| w.visits.iter().map(|v| v.network_id.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut labels = vec![Label::Nothing];
    labels.extend(
        obs.iter()
            .flat_map(|w| w.deltas.keys().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(Label::Audience),
    );

    let mut seen: BTreeMap<NetworkId, BTreeSet<Label>> = BTreeMap::new();
    let mut any = false;
    let mut digits = vec![0usize; visitors.len()];
    loop {
        let pick: BTreeMap<&NetworkId, &Label> = visitors
            .iter()
            .zip(digits.iter().map(|d| &labels[*d]))
            .collect();
        let ok = obs.iter().all(|w| {
            let mut counts: BTreeMap<AudienceId, u64> =
                w.deltas.keys().map(|a| (a.clone(), 0)).collect();
            for v in &w.visits {
                if let Label::Audience(a) = pick[&v.network_id] {
                    *counts.entry(a.clone()).or_insert(0) += 1;
                }
            }
            counts == w.deltas
        });
        if ok {
            any = true;
            for (v, l) in &pick {
                seen.entry((*v).clone()).or_default().insert((*l).clone());
            }
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == digits.len() {
                return any.then_some(seen);
            }
            digits[i] += 1;
            if digits[i] < labels.len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Number of labellings the oracle walks through.
pub fn search_space(obs: &[WindowObservation]) -> u64 {
    let visitors: BTreeSet<&NetworkId> = obs
        .iter()
        .flat_map(|w| w.visits.iter().map(|v| &v.network_id))
        .collect();
    let labels = 1 + obs
        .iter()
        .flat_map(|w| w.deltas.keys())
        .collect::<BTreeSet<_>>()
        .len() as u64;
    labels.saturating_pow(visitors.len() as u32)
}

fn entry(t: i64, who: &str) -> VisitLogEntry {
    VisitLogEntry {
        timestamp: t,
        network_id: who.into(),
        page: "p".into(),
        referral: None,
        tracking_arg: None,
    }
}

/// A random instance within the given bounds. When `planted` is set the
/// deltas come from a hidden labelling, so at least one solution exists;
/// otherwise they are drawn at random and are often inconsistent.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    max_visitors: usize,
    max_audiences: usize,
    max_windows: usize,
    planted: bool,
) -> Vec<WindowObservation> {
    let nv = rng.gen_range(1..=max_visitors);
    let na = rng.gen_range(1..=max_audiences);
    let nw = rng.gen_range(1..=max_windows);
    let audiences: Vec<AudienceId> = (0..na)
        .map(|i| AudienceId::from(format!("aud{i}")))
        .collect();
    let hidden: Vec<Option<usize>> = (0..nv)
        .map(|_| {
            if rng.gen_bool(0.25) {
                None
            } else {
                Some(rng.gen_range(0..na))
            }
        })
        .collect();
    (0..nw as i64)
        .map(|k| {
            let mut visits = Vec::new();
            let mut deltas: BTreeMap<AudienceId, u64> =
                audiences.iter().map(|a| (a.clone(), 0)).collect();
            for (v, label) in hidden.iter().enumerate() {
                if !rng.gen_bool(0.4) {
                    continue;
                }
                let times = if rng.gen_bool(0.15) { 2 } else { 1 };
                for j in 0..times {
                    visits.push(entry(k * 100 + j, &format!("10.0.0.{v}")));
                    if let (true, Some(a)) = (planted, label) {
                        *deltas.get_mut(&audiences[*a]).unwrap() += 1;
                    }
                }
            }
            if !planted {
                for _ in 0..visits.len() {
                    if rng.gen_bool(0.6) {
                        *deltas.get_mut(&audiences[rng.gen_range(0..na)]).unwrap() += 1;
                    }
                }
            }
            visits.sort_by_key(|e| e.timestamp);
            WindowObservation {
                window_index: k,
                window_start: k * 100,
                window_end: (k + 1) * 100,
                deltas,
                visits,
            }
        })
        .collect()
}

/// Compares solver output with the oracle visitor by visitor. Returns a
/// description of the first disagreement.
pub fn agrees(obs: &[WindowObservation], limit: u64) -> Result<(), String> {
    use adtrap_core::trap::{infer_audiences, SolverConfig};
    let oracle = brute_force(obs);
    let solved = infer_audiences(
        obs,
        &SolverConfig {
            exhaustive_limit: limit,
        },
    );
    match (oracle, solved) {
        (None, Err(_)) => Ok(()),
        (None, Ok(r)) => Err(format!(
            "oracle inconsistent, solver gave {:?}",
            r.assignments
        )),
        (Some(o), Err(e)) => Err(format!("solver failed ({e}) but oracle found {o:?}")),
        (Some(o), Ok(r)) => {
            if o.len() != r.assignments.len() {
                return Err(format!("visitor sets differ: {o:?} vs {:?}", r.assignments));
            }
            for (v, labels) in &o {
                let got = &r.assignments[v];
                let ok = match got {
                    Attribution::Exact(l) => labels.len() == 1 && labels.contains(l),
                    Attribution::Ambiguous(s) => labels.len() > 1 && s == labels,
                    // only when even the whole instance is too large to enumerate
                    Attribution::Unknown => search_space(obs) > limit,
                };
                if !ok {
                    return Err(format!("visitor {v}: oracle {labels:?}, solver {got:?}"));
                }
            }
            Ok(())
        }
    }
}
