//! The audience-counter correlation attack.
//!
//! Setup builds exclusive-placement campaigns with one ad group per probed
//! audience. Inference only ever sees the advertiser-facing counter reports
//! and the attacker site's own access log: windows of per-audience deltas
//! are matched against the visits logged in the same window.

mod campaign;
mod evaluate;
mod observe;
mod solver;
mod stats;
mod tracking;

pub use campaign::{
    assign_per_victim_sites, build_trap_campaign, default_site_factory, VictimSite,
};
pub use evaluate::{
    evaluate, score, AttackOutcome, AttackSummary, AttackerSiteView, AttackerView, VisitorScore,
};
pub use observe::{collect_observations, WindowObservation};
pub use solver::{infer_audiences, Attribution, AttributionResult, Label, SolverConfig};
pub use stats::{group_statistics, GroupStats};
pub use tracking::{bind_identities, resolve_tracked_visits};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::ids::{AudienceId, SiteId};
use crate::marketplace::Bid;
use crate::money::Money;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TrapError {
    #[error("no audiences to probe")]
    NoAudiences,
    #[error("audience `{0}` probed twice")]
    DuplicateAudience(AudienceId),
    #[error("bid amount must be positive")]
    NonPositiveBid,
    #[error("website `{0}` is not attacker-owned")]
    NotAttackerOwned(SiteId),
    #[error("website `{0}` does not log visits")]
    NotLogging(SiteId),
    #[error("tracking argument `{arg}` assigned to both `{first}` and `{second}`")]
    DuplicateTrackingArg {
        arg: String,
        first: String,
        second: String,
    },
    #[error("duplicate report for window {0}")]
    DuplicateWindow(i64),
    #[error("window {0} overlaps the previous window")]
    OverlappingWindow(i64),
    #[error("reports from more than one campaign")]
    MixedCampaigns,
    #[error("inconsistent observations: no assignment reproduces window {0}")]
    Inconsistent(i64),
    #[error("inconsistent observations: no assignment reproduces every window")]
    InconsistentComponent,
    #[error("audience pair must be two distinct audiences")]
    SameAudience,
    #[error("audience `{0}` is not probed")]
    NotProbed(AudienceId),
}

/// Attacker-side campaign configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapConfig {
    pub attacker_site: SiteId,
    pub audiences_to_probe: Vec<AudienceId>,
    pub bid: Bid,
    #[serde(default = "default_budget")]
    pub budget: Money,
    #[serde(default)]
    pub one_site_per_victim: bool,
    /// Invitee identity -> unique query argument handed to that invitee.
    #[serde(default)]
    pub tracking_args: BTreeMap<String, String>,
    #[serde(default = "default_exhaustive_limit")]
    pub exhaustive_limit: u64,
    /// Extra sites the TRAP ad groups are also placed on. Empty for a real
    /// attack; non-empty only to measure what shared placement does to the
    /// counters.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub shared_placements: BTreeSet<SiteId>,
}

fn default_budget() -> Money {
    Money::from_units(100)
}

fn default_exhaustive_limit() -> u64 {
    SolverConfig::DEFAULT_EXHAUSTIVE_LIMIT
}

impl TrapConfig {
    pub fn new(attacker_site: SiteId, audiences_to_probe: Vec<AudienceId>, bid: Bid) -> Self {
        TrapConfig {
            attacker_site,
            audiences_to_probe,
            bid,
            budget: default_budget(),
            one_site_per_victim: false,
            tracking_args: BTreeMap::new(),
            exhaustive_limit: default_exhaustive_limit(),
            shared_placements: BTreeSet::new(),
        }
    }

    pub fn validate(&self) -> Result<(), TrapError> {
        if self.audiences_to_probe.is_empty() {
            return Err(TrapError::NoAudiences);
        }
        let mut seen = BTreeSet::new();
        for a in &self.audiences_to_probe {
            if !seen.insert(a) {
                return Err(TrapError::DuplicateAudience(a.clone()));
            }
        }
        if self.bid.amount.is_zero() {
            return Err(TrapError::NonPositiveBid);
        }
        tracking::invert(&self.tracking_args)?;
        Ok(())
    }

    pub fn probed(&self) -> BTreeSet<AudienceId> {
        self.audiences_to_probe.iter().cloned().collect()
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            exhaustive_limit: self.exhaustive_limit,
        }
    }
}
