use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::ops::Range;
use serde::{Deserialize, Serialize};

use super::ImpressionRecord;
use crate::ids::{AudienceId, CampaignId};

/// Fixed-length reporting windows `[k * length, (k + 1) * length)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowClock {
    pub length: i64,
}

impl WindowClock {
    pub const DEFAULT_LENGTH: i64 = 1800;

    pub fn new(length: i64) -> Self {
        assert!(length > 0, "window length must be positive");
        WindowClock { length }
    }

    pub fn index_of(&self, t: i64) -> i64 {
        t.div_euclid(self.length)
    }

    pub fn bounds(&self, index: i64) -> (i64, i64) {
        (index * self.length, (index + 1) * self.length)
    }

    /// Number of windows needed to cover `[0, horizon)`.
    pub fn windows_until(&self, horizon: i64) -> i64 {
        if horizon <= 0 {
            0
        } else {
            (horizon + self.length - 1) / self.length
        }
    }
}

impl Default for WindowClock {
    fn default() -> Self {
        WindowClock {
            length: Self::DEFAULT_LENGTH,
        }
    }
}

/// Per-audience impression counts of one campaign over one window. This is
/// everything the advertiser gets to see.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AudienceCounterReport {
    pub campaign: CampaignId,
    pub window_index: i64,
    pub window_start: i64,
    pub window_end: i64,
    pub deltas: BTreeMap<AudienceId, u64>,
    pub cumulative: BTreeMap<AudienceId, u64>,
}

impl AudienceCounterReport {
    pub fn total(&self) -> u64 {
        self.deltas.values().sum()
    }
}

/// Batches `impressions` of `campaign` into one report per window in
/// `windows`. `audiences` seeds zero entries so quiet windows still list
/// every targeted audience. Cumulative counts start at the first window in
/// the range.
pub fn publish_reports(
    impressions: &[ImpressionRecord],
    campaign: &CampaignId,
    audiences: &BTreeSet<AudienceId>,
    clock: WindowClock,
    windows: Range<i64>,
) -> Vec<AudienceCounterReport> {
    let mut per_window: BTreeMap<i64, BTreeMap<AudienceId, u64>> = BTreeMap::new();
    for imp in impressions.iter().filter(|i| &i.campaign == campaign) {
        let k = clock.index_of(imp.timestamp);
        if windows.contains(&k) {
            *per_window
                .entry(k)
                .or_default()
                .entry(imp.audience.clone())
                .or_insert(0) += 1;
        }
    }
    let mut running: BTreeMap<AudienceId, u64> = BTreeMap::new();
    windows
        .map(|k| {
            let mut deltas: BTreeMap<AudienceId, u64> =
                audiences.iter().map(|a| (a.clone(), 0)).collect();
            for (a, n) in per_window.remove(&k).unwrap_or_default() {
                *deltas.entry(a).or_insert(0) += n;
            }
            for (a, n) in &deltas {
                *running.entry(a.clone()).or_insert(0) += n;
            }
            let cumulative = deltas.keys().map(|a| (a.clone(), running[a])).collect();
            let (start, end) = clock.bounds(k);
            AudienceCounterReport {
                campaign: campaign.clone(),
                window_index: k,
                window_start: start,
                window_end: end,
                deltas,
                cumulative,
            }
        })
        .collect()
}
