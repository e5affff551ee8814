use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::TrapError;
use crate::gdn::VisitLogEntry;
use crate::ids::AudienceId;
use crate::marketplace::AudienceCounterReport;

/// One reporting window as the attacker sees it: probed-audience counter
/// deltas next to the visits its own site logged during the window.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowObservation {
    pub window_index: i64,
    pub window_start: i64,
    pub window_end: i64,
    pub deltas: BTreeMap<AudienceId, u64>,
    pub visits: Vec<VisitLogEntry>,
}

impl WindowObservation {
    pub fn total_delta(&self) -> u64 {
        self.deltas.values().sum()
    }
}

/// Pairs each report with the log entries in `[window_start, window_end)`.
/// Entries outside every reported window are dropped.
pub fn collect_observations(
    reports: &[AudienceCounterReport],
    log: &[VisitLogEntry],
    probed: &BTreeSet<AudienceId>,
) -> Result<Vec<WindowObservation>, TrapError> {
    if let Some(first) = reports.first() {
        if reports.iter().any(|r| r.campaign != first.campaign) {
            return Err(TrapError::MixedCampaigns);
        }
    }
    let mut sorted: Vec<&AudienceCounterReport> = reports.iter().collect();
    sorted.sort_by_key(|r| (r.window_index, r.window_start));
    for pair in sorted.windows(2) {
        if pair[0].window_index == pair[1].window_index {
            return Err(TrapError::DuplicateWindow(pair[1].window_index));
        }
        if pair[1].window_start < pair[0].window_end {
            return Err(TrapError::OverlappingWindow(pair[1].window_index));
        }
    }
    Ok(sorted
        .into_iter()
        .map(|r| WindowObservation {
            window_index: r.window_index,
            window_start: r.window_start,
            window_end: r.window_end,
            deltas: r
                .deltas
                .iter()
                .filter(|(a, _)| probed.contains(*a))
                .map(|(a, n)| (a.clone(), *n))
                .collect(),
            visits: log
                .iter()
                .filter(|e| r.window_start <= e.timestamp && e.timestamp < r.window_end)
                .cloned()
                .collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::CampaignId;

    fn report(k: i64, deltas: &[(&str, u64)]) -> AudienceCounterReport {
        AudienceCounterReport {
            campaign: CampaignId::from("trap"),
            window_index: k,
            window_start: k * 1800,
            window_end: (k + 1) * 1800,
            deltas: deltas
                .iter()
                .map(|(a, n)| (AudienceId::from(*a), *n))
                .collect(),
            cumulative: BTreeMap::new(),
        }
    }

    fn visit(t: i64, who: &str) -> VisitLogEntry {
        VisitLogEntry {
            timestamp: t,
            network_id: who.into(),
            page: "p".into(),
            referral: None,
            tracking_arg: None,
        }
    }

    fn probed(xs: &[&str]) -> BTreeSet<AudienceId> {
        xs.iter().map(|s| AudienceId::from(*s)).collect()
    }

    #[test]
    fn buckets_half_open() {
        let obs = collect_observations(
            &[report(0, &[("a", 1)]), report(1, &[("a", 0)])],
            &[visit(10, "x"), visit(1800, "y")],
            &probed(&["a"]),
        )
        .unwrap();
        assert_eq!(obs.len(), 2);
        assert_eq!(obs[0].visits.len(), 1);
        assert_eq!(obs[1].visits[0].network_id.as_str(), "y");
        // zero-delta windows with visits are kept
        assert_eq!(obs[1].total_delta(), 0);
    }

    #[test]
    fn restricts_to_probed() {
        let obs = collect_observations(&[report(0, &[("a", 1), ("b", 2)])], &[], &probed(&["b"]))
            .unwrap();
        assert_eq!(obs[0].deltas.len(), 1);
        assert_eq!(obs[0].total_delta(), 2);
    }

    #[test]
    fn rejects_duplicate_and_overlap() {
        assert_eq!(
            collect_observations(&[report(0, &[]), report(0, &[])], &[], &probed(&[])),
            Err(TrapError::DuplicateWindow(0))
        );
        let mut r = report(1, &[]);
        r.window_start = 1000;
        assert_eq!(
            collect_observations(&[report(0, &[]), r], &[], &probed(&[])),
            Err(TrapError::OverlappingWindow(1))
        );
        let mut other = report(1, &[]);
        other.campaign = "x".into();
        assert_eq!(
            collect_observations(&[report(0, &[]), other], &[], &probed(&[])),
            Err(TrapError::MixedCampaigns)
        );
        assert!(collect_observations(&[], &[visit(1, "x")], &probed(&[]))
            .unwrap()
            .is_empty());
    }
}
