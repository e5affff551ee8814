use alloc::collections::btree_map::Entry;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use super::{
    bind_identities, collect_observations, infer_audiences, resolve_tracked_visits, Attribution,
    AttributionResult, Label, TrapConfig, TrapError, WindowObservation,
};
use crate::gdn::VisitLogEntry;
use crate::ids::{AudienceId, CampaignId, NetworkId, SiteId};
use crate::marketplace::AudienceCounterReport;

/// Reports of one attacker campaign next to the access log of the site it
/// is placed on. Nothing here carries a cookie id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackerSiteView {
    pub site: SiteId,
    pub campaign: CampaignId,
    pub reports: Vec<AudienceCounterReport>,
    pub log: Vec<VisitLogEntry>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AttackerView {
    pub sites: Vec<AttackerSiteView>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisitorScore {
    pub network_id: NetworkId,
    pub attribution: Attribution,
    /// Probed audiences the visitor actually belongs to.
    pub truth: BTreeSet<AudienceId>,
    pub correct: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AttackSummary {
    pub visitors: usize,
    pub exact: usize,
    pub ambiguous: usize,
    pub unknown: usize,
    pub correct: usize,
    pub accuracy: Option<f64>,
}

impl fmt::Display for AttackSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "exact={} ambiguous={} unknown={} accuracy=",
            self.exact, self.ambiguous, self.unknown
        )?;
        match self.accuracy {
            Some(a) => write!(f, "{a:?}"),
            None => f.write_str("undefined"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub observations: Vec<WindowObservation>,
    pub result: AttributionResult,
    /// False when some site's counters admit no labelling; that site's
    /// visitors are then reported unknown.
    pub consistent: bool,
    pub scores: Vec<VisitorScore>,
    pub summary: AttackSummary,
    pub identities: BTreeMap<String, Attribution>,
}

/// A correct attribution names one of the visitor's probed audiences, or
/// `Nothing` for a visitor in none of them. Ambiguous and unknown visitors
/// count as wrong.
pub fn score(
    result: &mut AttributionResult,
    truth: &BTreeMap<NetworkId, BTreeSet<AudienceId>>,
    probed: &BTreeSet<AudienceId>,
) -> Vec<VisitorScore> {
    let scores: Vec<VisitorScore> = result
        .assignments
        .iter()
        .map(|(net, attribution)| {
            let truth: BTreeSet<AudienceId> = truth
                .get(net)
                .map(|t| t.intersection(probed).cloned().collect())
                .unwrap_or_default();
            let correct = match attribution {
                Attribution::Exact(Label::Audience(a)) => truth.contains(a),
                Attribution::Exact(Label::Nothing) => truth.is_empty(),
                _ => false,
            };
            VisitorScore {
                network_id: net.clone(),
                attribution: attribution.clone(),
                truth,
                correct,
            }
        })
        .collect();
    result.accuracy = if scores.is_empty() {
        None
    } else {
        Some(scores.iter().filter(|s| s.correct).count() as f64 / scores.len() as f64)
    };
    scores
}

/// Runs the whole inference side of the attack over the attacker's view,
/// optionally scoring it against ground truth keyed by network id. Each
/// attacker site is solved on its own; when no labelling explains a site's
/// counters, all of that site's visitors are reported unknown.
pub fn evaluate(
    view: &AttackerView,
    config: &TrapConfig,
    truth: Option<&BTreeMap<NetworkId, BTreeSet<AudienceId>>>,
) -> Result<AttackOutcome, TrapError> {
    let probed = config.probed();
    let solver = config.solver();
    let mut observations = Vec::new();
    let mut assignments: BTreeMap<NetworkId, Attribution> = BTreeMap::new();
    let mut consistent = true;
    for site in &view.sites {
        let obs = collect_observations(&site.reports, &site.log, &probed)?;
        let part = match infer_audiences(&obs, &solver) {
            Ok(r) => r.assignments,
            Err(TrapError::Inconsistent(_) | TrapError::InconsistentComponent) => {
                consistent = false;
                obs.iter()
                    .flat_map(|w| {
                        w.visits
                            .iter()
                            .map(|v| (v.network_id.clone(), Attribution::Unknown))
                    })
                    .collect()
            }
            Err(e) => return Err(e),
        };
        for (v, a) in part {
            match assignments.entry(v) {
                Entry::Vacant(e) => {
                    e.insert(a);
                }
                // seen on two sites with different outcomes
                Entry::Occupied(mut e) if *e.get() != a => {
                    e.insert(Attribution::Unknown);
                }
                Entry::Occupied(_) => {}
            }
        }
        observations.extend(obs);
    }
    let mut result = AttributionResult {
        assignments,
        accuracy: None,
    };
    let scores = match truth {
        Some(t) => score(&mut result, t, &probed),
        None => Vec::new(),
    };
    let all_logs: Vec<VisitLogEntry> = view
        .sites
        .iter()
        .flat_map(|s| s.log.iter().cloned())
        .collect();
    let bindings = resolve_tracked_visits(&all_logs, &config.tracking_args)?;
    let identities = bind_identities(&bindings, &result);
    let summary = AttackSummary {
        visitors: result.assignments.len(),
        exact: result.count_exact(),
        ambiguous: result.count_ambiguous(),
        unknown: result.count_unknown(),
        correct: scores.iter().filter(|s| s.correct).count(),
        accuracy: result.accuracy,
    };
    Ok(AttackOutcome {
        observations,
        result,
        consistent,
        scores,
        summary,
        identities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn summary_line() {
        let s = AttackSummary {
            visitors: 10,
            exact: 10,
            correct: 10,
            accuracy: Some(1.0),
            ..Default::default()
        };
        assert_eq!(s.to_string(), "exact=10 ambiguous=0 unknown=0 accuracy=1.0");
        assert_eq!(
            AttackSummary::default().to_string(),
            "exact=0 ambiguous=0 unknown=0 accuracy=undefined"
        );
    }

    #[test]
    fn scoring_rules() {
        let mut r = AttributionResult {
            assignments: BTreeMap::new(),
            accuracy: None,
        };
        r.assignments
            .insert("a".into(), Attribution::Exact(Label::Audience("x".into())));
        r.assignments
            .insert("b".into(), Attribution::Exact(Label::Nothing));
        r.assignments
            .insert("c".into(), Attribution::Exact(Label::Nothing));
        r.assignments.insert("d".into(), Attribution::Unknown);
        let mut truth = BTreeMap::new();
        truth.insert(
            NetworkId::from("a"),
            [AudienceId::from("x"), "unprobed".into()]
                .into_iter()
                .collect(),
        );
        truth.insert(
            NetworkId::from("b"),
            [AudienceId::from("unprobed")].into_iter().collect(),
        );
        truth.insert(
            NetworkId::from("c"),
            [AudienceId::from("x")].into_iter().collect(),
        );
        let probed = [AudienceId::from("x")].into_iter().collect();
        let scores = score(&mut r, &truth, &probed);
        let flags: Vec<bool> = scores.iter().map(|s| s.correct).collect();
        assert_eq!(flags, [true, true, false, false]);
        assert_eq!(r.accuracy, Some(0.5));
    }
}
