//! Attribution of logged visitors to probed audiences.
//!
//! Every window states that the multiset of labels of the visits it holds
//! equals its delta multiset, where a visitor matching no probed audience
//! carries [`Label::Nothing`] and contributes nothing. A visitor keeps one
//! label across windows. Forced labels are found by propagation first; what
//! is left splits into independent components which are enumerated when
//! small enough and reported as unknown otherwise.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{TrapError, WindowObservation};
use crate::ids::{AudienceId, NetworkId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    /// Largest number of candidate assignments a residual component may have
    /// and still be enumerated.
    pub exhaustive_limit: u64,
}

impl SolverConfig {
    pub const DEFAULT_EXHAUSTIVE_LIMIT: u64 = 1_000_000;
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            exhaustive_limit: Self::DEFAULT_EXHAUSTIVE_LIMIT,
        }
    }
}

/// What a visitor's visits add to the counters. Serializes as the audience
/// id, or `null` for [`Label::Nothing`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "Option<AudienceId>", into = "Option<AudienceId>")]
pub enum Label {
    /// Matches none of the probed audiences.
    Nothing,
    Audience(AudienceId),
}

impl Label {
    pub fn audience(&self) -> Option<&AudienceId> {
        match self {
            Label::Nothing => None,
            Label::Audience(a) => Some(a),
        }
    }
}

impl From<Option<AudienceId>> for Label {
    fn from(a: Option<AudienceId>) -> Self {
        a.map_or(Label::Nothing, Label::Audience)
    }
}

impl From<Label> for Option<AudienceId> {
    fn from(l: Label) -> Self {
        match l {
            Label::Nothing => None,
            Label::Audience(a) => Some(a),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum Attribution {
    Exact(Label),
    /// Every label some consistent assignment gives this visitor. At least
    /// two entries.
    Ambiguous(BTreeSet<Label>),
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributionResult {
    pub assignments: BTreeMap<NetworkId, Attribution>,
    /// Fraction of visitors attributed correctly; only set once scored
    /// against ground truth, and `None` if there was nothing to score.
    pub accuracy: Option<f64>,
}

impl AttributionResult {
    pub fn count_exact(&self) -> usize {
        self.assignments
            .values()
            .filter(|a| matches!(a, Attribution::Exact(_)))
            .count()
    }

    pub fn count_ambiguous(&self) -> usize {
        self.assignments
            .values()
            .filter(|a| matches!(a, Attribution::Ambiguous(_)))
            .count()
    }

    pub fn count_unknown(&self) -> usize {
        self.assignments
            .values()
            .filter(|a| matches!(a, Attribution::Unknown))
            .count()
    }

    /// Replays exact assignments against every window: they may never
    /// exceed a delta, and a window whose visitors are all exact must be
    /// reproduced exactly.
    pub fn consistent_with(&self, observations: &[WindowObservation]) -> bool {
        observations.iter().all(|w| {
            let mut counts: BTreeMap<&AudienceId, u64> = BTreeMap::new();
            let mut all_exact = true;
            for v in &w.visits {
                match self.assignments.get(&v.network_id) {
                    Some(Attribution::Exact(Label::Audience(a))) => {
                        *counts.entry(a).or_insert(0) += 1
                    }
                    Some(Attribution::Exact(Label::Nothing)) => {}
                    _ => all_exact = false,
                }
            }
            let within = counts
                .iter()
                .all(|(a, n)| w.deltas.get(*a).copied().unwrap_or(0) >= *n);
            let reproduced = w
                .deltas
                .iter()
                .all(|(a, n)| counts.get(a).copied().unwrap_or(0) == *n);
            within && (!all_exact || reproduced)
        })
    }
}

struct Window {
    index: i64,
    /// (visitor, number of visits in this window)
    members: Vec<(usize, u64)>,
    /// By label index; slot 0 (nothing) stays 0.
    delta: Vec<u64>,
}

struct Problem {
    visitors: Vec<NetworkId>,
    labels: Vec<Label>,
    windows: Vec<Window>,
}

impl Problem {
    fn new(observations: &[WindowObservation]) -> Problem {
        let audiences: BTreeSet<&AudienceId> =
            observations.iter().flat_map(|w| w.deltas.keys()).collect();
        let mut labels = vec![Label::Nothing];
        labels.extend(audiences.iter().map(|a| Label::Audience((*a).clone())));
        let label_ix: BTreeMap<&AudienceId, usize> = audiences
            .iter()
            .enumerate()
            .map(|(i, a)| (*a, i + 1))
            .collect();

        let visitor_set: BTreeSet<&NetworkId> = observations
            .iter()
            .flat_map(|w| w.visits.iter().map(|v| &v.network_id))
            .collect();
        let visitor_ix: BTreeMap<&NetworkId, usize> = visitor_set
            .iter()
            .enumerate()
            .map(|(i, v)| (*v, i))
            .collect();

        let windows = observations
            .iter()
            .map(|w| {
                let mut mult: BTreeMap<usize, u64> = BTreeMap::new();
                for v in &w.visits {
                    *mult.entry(visitor_ix[&v.network_id]).or_insert(0) += 1;
                }
                let mut delta = vec![0u64; labels.len()];
                for (a, n) in &w.deltas {
                    delta[label_ix[a]] = *n;
                }
                Window {
                    index: w.window_index,
                    members: mult.into_iter().collect(),
                    delta,
                }
            })
            .collect();

        Problem {
            visitors: visitor_set.into_iter().cloned().collect(),
            labels,
            windows,
        }
    }
}

struct State {
    fixed: Vec<Option<usize>>,
    domain: Vec<Vec<bool>>,
}

impl State {
    fn fix(&mut self, v: usize, label: usize, window: i64) -> Result<bool, TrapError> {
        match self.fixed[v] {
            Some(l) if l == label => Ok(false),
            Some(_) => Err(TrapError::Inconsistent(window)),
            None if !self.domain[v][label] => Err(TrapError::Inconsistent(window)),
            None => {
                self.fixed[v] = Some(label);
                for (i, d) in self.domain[v].iter_mut().enumerate() {
                    *d = i == label;
                }
                Ok(true)
            }
        }
    }

    /// Delta left over once fixed visitors are accounted for.
    fn residual(&self, w: &Window) -> Result<Vec<u64>, TrapError> {
        let mut res = w.delta.clone();
        for &(v, m) in &w.members {
            if let Some(l) = self.fixed[v] {
                if l != 0 {
                    res[l] = res[l]
                        .checked_sub(m)
                        .ok_or(TrapError::Inconsistent(w.index))?;
                }
            }
        }
        Ok(res)
    }
}

/// Fixed-point propagation of forced labels.
fn propagate(p: &Problem, st: &mut State) -> Result<(), TrapError> {
    let nl = p.labels.len();
    let mut changed = true;
    while changed {
        changed = false;
        for w in &p.windows {
            let res = st.residual(w)?;
            let unfixed: Vec<(usize, u64)> = w
                .members
                .iter()
                .copied()
                .filter(|(v, _)| st.fixed[*v].is_none())
                .collect();
            let r: u64 = res.iter().sum();
            let u: u64 = unfixed.iter().map(|(_, m)| m).sum();
            if unfixed.is_empty() {
                if r != 0 {
                    return Err(TrapError::Inconsistent(w.index));
                }
                continue;
            }
            if r == 0 {
                for &(v, _) in &unfixed {
                    changed |= st.fix(v, 0, w.index)?;
                }
                continue;
            }
            if r > u {
                return Err(TrapError::Inconsistent(w.index));
            }
            if let [(v, m)] = unfixed[..] {
                // a lone visitor contributes all of its visits to one label
                let mut nonzero = (1..nl).filter(|&a| res[a] != 0);
                match (nonzero.next(), nonzero.next()) {
                    (Some(a), None) if res[a] == m => {
                        changed |= st.fix(v, a, w.index)?;
                    }
                    _ => return Err(TrapError::Inconsistent(w.index)),
                }
                continue;
            }
            if r == u {
                for &(v, _) in &unfixed {
                    if st.domain[v][0] {
                        st.domain[v][0] = false;
                        changed = true;
                    }
                }
            }
            for &(v, m) in &unfixed {
                for (allowed, left) in st.domain[v].iter_mut().zip(&res).skip(1) {
                    if *allowed && *left < m {
                        *allowed = false;
                        changed = true;
                    }
                }
            }
        }
        for v in 0..p.visitors.len() {
            if st.fixed[v].is_some() {
                continue;
            }
            let mut it = (0..nl).filter(|&a| st.domain[v][a]);
            match (it.next(), it.next()) {
                (None, _) => {
                    let w = p
                        .windows
                        .iter()
                        .find(|w| w.members.iter().any(|(x, _)| *x == v))
                        .map_or(0, |w| w.index);
                    return Err(TrapError::Inconsistent(w));
                }
                (Some(a), None) => {
                    st.fixed[v] = Some(a);
                    changed = true;
                }
                _ => {}
            }
        }
    }
    Ok(())
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut root = x;
    while parent[root] != root {
        root = parent[root];
    }
    let mut cur = x;
    while parent[cur] != root {
        let next = parent[cur];
        parent[cur] = root;
        cur = next;
    }
    root
}

/// Unfixed visitors grouped by shared windows.
fn components(p: &Problem, st: &State) -> Vec<Vec<usize>> {
    let n = p.visitors.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for w in &p.windows {
        let mut unfixed = w
            .members
            .iter()
            .map(|(v, _)| *v)
            .filter(|v| st.fixed[*v].is_none());
        if let Some(first) = unfixed.next() {
            for other in unfixed {
                let (a, b) = (find(&mut parent, first), find(&mut parent, other));
                if a != b {
                    parent[b] = a;
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in (0..n).filter(|v| st.fixed[*v].is_none()) {
        let root = find(&mut parent, v);
        groups.entry(root).or_default().push(v);
    }
    groups.into_values().collect()
}

/// Attributes every logged visitor. Fails when no assignment reproduces the
/// observations, which means the counters saw impressions the log cannot
/// explain.
pub fn infer_audiences(
    observations: &[WindowObservation],
    config: &SolverConfig,
) -> Result<AttributionResult, TrapError> {
    let p = Problem::new(observations);
    let n = p.visitors.len();
    let nl = p.labels.len();
    let mut st = State {
        fixed: vec![None; n],
        domain: vec![vec![true; nl]; n],
    };
    propagate(&p, &mut st)?;

    let mut outcome: Vec<Option<Attribution>> = st
        .fixed
        .iter()
        .map(|f| f.map(|l| Attribution::Exact(p.labels[l].clone())))
        .collect();

    for comp in components(&p, &st) {
        let domain: Vec<Vec<usize>> = comp
            .iter()
            .map(|&v| (0..nl).filter(|&a| st.domain[v][a]).collect())
            .collect();
        let candidates = domain
            .iter()
            .try_fold(1u64, |acc, d| acc.checked_mul(d.len() as u64))
            .unwrap_or(u64::MAX);
        if candidates > config.exhaustive_limit {
            for &v in &comp {
                outcome[v] = Some(Attribution::Unknown);
            }
            continue;
        }
        let seen = enumerate(&p, &st, &comp, domain)?;
        for (i, &v) in comp.iter().enumerate() {
            let labels: BTreeSet<Label> = seen[i].iter().map(|&l| p.labels[l].clone()).collect();
            outcome[v] = Some(if labels.len() == 1 {
                Attribution::Exact(labels.into_iter().next().unwrap_or(Label::Nothing))
            } else {
                Attribution::Ambiguous(labels)
            });
        }
    }

    let assignments = p
        .visitors
        .into_iter()
        .zip(outcome)
        .map(|(v, a)| (v, a.unwrap_or(Attribution::Unknown)))
        .collect();
    Ok(AttributionResult {
        assignments,
        accuracy: None,
    })
}

/// Backtracking over one residual component; returns the labels each
/// visitor takes across all consistent assignments.
fn enumerate(
    p: &Problem,
    st: &State,
    comp: &[usize],
    domain: Vec<Vec<usize>>,
) -> Result<Vec<BTreeSet<usize>>, TrapError> {
    let pos: BTreeMap<usize, usize> = comp.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut local_windows = Vec::new();
    let mut touches: Vec<Vec<(usize, u64)>> = vec![Vec::new(); comp.len()];
    let mut res = Vec::new();
    let mut unassigned = Vec::new();
    for w in &p.windows {
        let inside: Vec<(usize, u64)> = w
            .members
            .iter()
            .filter_map(|(v, m)| pos.get(v).map(|i| (*i, *m)))
            .collect();
        if inside.is_empty() {
            continue;
        }
        let lw = local_windows.len();
        local_windows.push(w.index);
        for &(i, m) in &inside {
            touches[i].push((lw, m));
        }
        res.push(st.residual(w)?);
        unassigned.push(inside.iter().map(|(_, m)| m).sum::<u64>());
    }
    let mut search = Search {
        domain,
        touches,
        res_sum: res.iter().map(|r| r.iter().sum()).collect(),
        res,
        unassigned,
        seen: vec![BTreeSet::new(); comp.len()],
        current: Vec::with_capacity(comp.len()),
        solutions: 0,
    };
    search.run(0);
    if search.solutions == 0 {
        return Err(TrapError::InconsistentComponent);
    }
    Ok(search.seen)
}

struct Search {
    domain: Vec<Vec<usize>>,
    touches: Vec<Vec<(usize, u64)>>,
    res: Vec<Vec<u64>>,
    res_sum: Vec<u64>,
    unassigned: Vec<u64>,
    seen: Vec<BTreeSet<usize>>,
    current: Vec<usize>,
    solutions: u64,
}

impl Search {
    fn run(&mut self, depth: usize) {
        if depth == self.domain.len() {
            self.solutions += 1;
            for (i, l) in self.current.iter().enumerate() {
                self.seen[i].insert(*l);
            }
            return;
        }
        for li in 0..self.domain[depth].len() {
            let label = self.domain[depth][li];
            if !self.fits(depth, label) {
                continue;
            }
            self.assign(depth, label, true);
            if self.balanced(depth) {
                self.current.push(label);
                self.run(depth + 1);
                self.current.pop();
            }
            self.assign(depth, label, false);
        }
    }

    fn fits(&self, depth: usize, label: usize) -> bool {
        label == 0
            || self.touches[depth]
                .iter()
                .all(|&(w, m)| self.res[w][label] >= m)
    }

    fn assign(&mut self, depth: usize, label: usize, forward: bool) {
        for &(w, m) in &self.touches[depth] {
            if forward {
                self.unassigned[w] -= m;
                if label != 0 {
                    self.res[w][label] -= m;
                    self.res_sum[w] -= m;
                }
            } else {
                self.unassigned[w] += m;
                if label != 0 {
                    self.res[w][label] += m;
                    self.res_sum[w] += m;
                }
            }
        }
    }

    /// The visitors still to be assigned can cover what is left.
    fn balanced(&self, depth: usize) -> bool {
        self.touches[depth]
            .iter()
            .all(|&(w, _)| self.res_sum[w] <= self.unassigned[w])
    }
}
