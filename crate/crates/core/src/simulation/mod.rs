//! Scenario description, validation, the discrete-event run, and parameter
//! sweeps.

mod engine;
mod sweep;

pub use engine::{
    run_scenario, AttackerSite, CampaignSpend, RunTrace, SimError, TraceSummary,
    TRACE_SCHEMA_VERSION,
};
pub use sweep::{expand_grid, run_cell, sweep, GridAxis, GridKey, SweepCell, SweepError, SweepRow};

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::gdn::{GdnError, Network, Owner, Website};
use crate::ids::{CookieId, NetworkId, PageId, RegionTag, SiteId, UserId};
use crate::marketplace::{AuctionMode, Campaign, MarketError, WindowClock};
use crate::profile::{Demographics, ProfileRules};
use crate::taxonomy::{Taxonomy, TaxonomyDoc, TaxonomyError};
use crate::trap::{TrapConfig, TrapError};

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarmupStep {
    pub site: SiteId,
    /// Defaults to the site's first page.
    #[serde(default)]
    pub page: Option<PageId>,
    #[serde(default = "one")]
    pub repeat: u32,
    #[serde(default = "default_warmup_dwell")]
    pub dwell_s: f64,
}

fn one() -> u32 {
    1
}

fn default_warmup_dwell() -> f64 {
    60.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimedVisit {
    pub site: SiteId,
    #[serde(default)]
    pub page: Option<PageId>,
    pub timestamp: i64,
    #[serde(default = "default_visit_dwell")]
    pub dwell_s: f64,
    #[serde(default)]
    pub referral: Option<PageId>,
    #[serde(default)]
    pub tracking_arg: Option<String>,
}

fn default_visit_dwell() -> f64 {
    30.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserAgentSpec {
    pub id: UserId,
    pub cookie_id: CookieId,
    /// Drawn from the run's seed when absent.
    #[serde(default)]
    pub network_id: Option<NetworkId>,
    #[serde(default = "yes")]
    pub consent: bool,
    #[serde(default)]
    pub warmup_plan: Vec<WarmupStep>,
    /// Timed page views after warm-up; strictly increasing timestamps.
    #[serde(default)]
    pub attack_visits: Vec<TimedVisit>,
    #[serde(default)]
    pub demographics: Option<Demographics>,
    #[serde(default)]
    pub geo: Option<RegionTag>,
}

fn yes() -> bool {
    true
}

fn default_window() -> i64 {
    WindowClock::DEFAULT_LENGTH
}

/// A scenario document before cross-reference validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub spec_version: u32,
    #[serde(default)]
    pub taxonomy: TaxonomyDoc,
    #[serde(default)]
    pub websites: Vec<Website>,
    #[serde(default)]
    pub campaigns: Vec<Campaign>,
    #[serde(default)]
    pub users: Vec<UserAgentSpec>,
    #[serde(default)]
    pub attack: Option<TrapConfig>,
    #[serde(default = "default_window")]
    pub window_length_s: i64,
    pub horizon_s: i64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub profile_rules: ProfileRules,
    #[serde(default)]
    pub auction: AuctionMode,
}

/// A validated scenario. Fields stay public so sweeps can vary them; call
/// [`Scenario::validate`] again after editing.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub spec_version: u32,
    pub taxonomy: Taxonomy,
    pub websites: Vec<Website>,
    pub campaigns: Vec<Campaign>,
    pub users: Vec<UserAgentSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attack: Option<TrapConfig>,
    pub window_length_s: i64,
    pub horizon_s: i64,
    pub seed: u64,
    pub profile_rules: ProfileRules,
    pub auction: AuctionMode,
}

impl<'de> Deserialize<'de> for Scenario {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = ScenarioDoc::deserialize(d)?;
        Scenario::from_doc(doc).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Website(#[from] GdnError),
    #[error(transparent)]
    Campaign(#[from] MarketError),
    #[error("{pointer}: {source}")]
    Attack { pointer: String, source: TrapError },
    #[error("{pointer}: {message}")]
    Invalid { pointer: String, message: String },
}

impl ScenarioError {
    fn invalid(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Invalid {
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}

impl Scenario {
    pub fn from_doc(doc: ScenarioDoc) -> Result<Scenario, ScenarioError> {
        let taxonomy = Taxonomy::from_doc(doc.taxonomy, "/taxonomy")?;
        let scenario = Scenario {
            spec_version: doc.spec_version,
            taxonomy,
            websites: doc.websites,
            campaigns: doc.campaigns,
            users: doc.users,
            attack: doc.attack,
            window_length_s: doc.window_length_s,
            horizon_s: doc.horizon_s,
            seed: doc.seed,
            profile_rules: doc.profile_rules,
            auction: doc.auction,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn site(&self, id: &SiteId) -> Option<&Website> {
        self.websites.iter().find(|w| &w.id == id)
    }

    pub fn clock(&self) -> WindowClock {
        WindowClock {
            length: self.window_length_s,
        }
    }

    /// Checks every invariant and cross reference, reporting the first
    /// violation with a JSON pointer into the scenario document.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.spec_version != SCENARIO_VERSION {
            return Err(ScenarioError::invalid(
                "/spec_version",
                format!(
                    "unsupported version {} (expected {SCENARIO_VERSION})",
                    self.spec_version
                ),
            ));
        }
        if self.window_length_s <= 0 {
            return Err(ScenarioError::invalid(
                "/window_length_s",
                "must be positive",
            ));
        }
        if self.horizon_s < 0 {
            return Err(ScenarioError::invalid("/horizon_s", "must not be negative"));
        }
        if self.profile_rules.interest_threshold.is_nan()
            || self.profile_rules.interest_threshold <= 0.0
        {
            return Err(ScenarioError::invalid(
                "/profile_rules/interest_threshold",
                "must be positive",
            ));
        }

        Network::new(self.websites.iter().cloned(), &self.taxonomy)?;
        let sites: BTreeSet<SiteId> = self.websites.iter().map(|w| w.id.clone()).collect();

        let mut campaign_ids = BTreeSet::new();
        for (i, c) in self.campaigns.iter().enumerate() {
            let base = format!("/campaigns/{i}");
            if !campaign_ids.insert(&c.id) {
                return Err(ScenarioError::invalid(
                    format!("{base}/id"),
                    format!("duplicate campaign id `{}`", c.id),
                ));
            }
            c.validate(&self.taxonomy, &sites, &base)?;
        }

        self.validate_users()?;

        if let Some(attack) = &self.attack {
            let err = |pointer: &str, source: TrapError| ScenarioError::Attack {
                pointer: pointer.into(),
                source,
            };
            attack.validate().map_err(|e| err("/attack", e))?;
            let site = self.site(&attack.attacker_site).ok_or_else(|| {
                ScenarioError::invalid(
                    "/attack/attacker_site",
                    format!("unknown website id `{}`", attack.attacker_site),
                )
            })?;
            if site.owner != Owner::Attacker {
                return Err(err(
                    "/attack/attacker_site",
                    TrapError::NotAttackerOwned(site.id.clone()),
                ));
            }
            if !site.logging {
                return Err(err(
                    "/attack/attacker_site",
                    TrapError::NotLogging(site.id.clone()),
                ));
            }
            for (i, a) in attack.audiences_to_probe.iter().enumerate() {
                if !self.taxonomy.has_audience(a) {
                    return Err(ScenarioError::invalid(
                        format!("/attack/audiences_to_probe/{i}"),
                        format!("unknown audience id `{a}`"),
                    ));
                }
            }
            if let Some(s) = attack
                .shared_placements
                .iter()
                .find(|s| !sites.contains(*s))
            {
                return Err(ScenarioError::invalid(
                    "/attack/shared_placements",
                    format!("unknown website id `{s}`"),
                ));
            }
            for c in &self.campaigns {
                if c.id.as_str().starts_with("trap-") {
                    return Err(ScenarioError::invalid(
                        "/campaigns",
                        format!(
                            "campaign id `{}` collides with generated attack campaigns",
                            c.id
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    fn validate_users(&self) -> Result<(), ScenarioError> {
        let mut ids = BTreeSet::new();
        let mut cookies = BTreeSet::new();
        let mut networks = BTreeSet::new();
        for (i, u) in self.users.iter().enumerate() {
            let base = format!("/users/{i}");
            if !ids.insert(&u.id) {
                return Err(ScenarioError::invalid(
                    format!("{base}/id"),
                    format!("duplicate user id `{}`", u.id),
                ));
            }
            if !cookies.insert(u.cookie_id.as_str()) {
                return Err(ScenarioError::invalid(
                    format!("{base}/cookie_id"),
                    format!("duplicate cookie id `{}`", u.cookie_id),
                ));
            }
            if let Some(n) = &u.network_id {
                if !networks.insert(n.as_str()) {
                    return Err(ScenarioError::invalid(
                        format!("{base}/network_id"),
                        format!("duplicate network id `{n}`"),
                    ));
                }
            }
            for (k, step) in u.warmup_plan.iter().enumerate() {
                let p = format!("{base}/warmup_plan/{k}");
                self.check_page(&step.site, step.page.as_ref(), &p)?;
                if step.dwell_s.is_nan() || step.dwell_s < 0.0 {
                    return Err(ScenarioError::invalid(
                        format!("{p}/dwell_s"),
                        "must not be negative",
                    ));
                }
            }
            let mut last: Option<i64> = None;
            for (k, v) in u.attack_visits.iter().enumerate() {
                let p = format!("{base}/attack_visits/{k}");
                self.check_page(&v.site, v.page.as_ref(), &p)?;
                if v.dwell_s.is_nan() || v.dwell_s < 0.0 {
                    return Err(ScenarioError::invalid(
                        format!("{p}/dwell_s"),
                        "must not be negative",
                    ));
                }
                if v.timestamp < 0 {
                    return Err(ScenarioError::invalid(
                        format!("{p}/timestamp"),
                        "must not be negative",
                    ));
                }
                if v.timestamp >= self.horizon_s {
                    return Err(ScenarioError::invalid(
                        format!("{p}/timestamp"),
                        format!("{} is beyond horizon {}", v.timestamp, self.horizon_s),
                    ));
                }
                if last.is_some_and(|l| v.timestamp <= l) {
                    return Err(ScenarioError::invalid(
                        format!("{p}/timestamp"),
                        "visit timestamps must be strictly increasing",
                    ));
                }
                last = Some(v.timestamp);
            }
        }
        // namespaces must stay disjoint so a log line never leaks a cookie
        for (i, u) in self.users.iter().enumerate() {
            if let Some(n) = &u.network_id {
                if cookies.contains(n.as_str()) {
                    return Err(ScenarioError::invalid(
                        format!("/users/{i}/network_id"),
                        format!("network id `{n}` equals a cookie id"),
                    ));
                }
            }
        }
        Ok(())
    }

    fn check_page(
        &self,
        site: &SiteId,
        page: Option<&PageId>,
        pointer: &str,
    ) -> Result<(), ScenarioError> {
        let w = self.site(site).ok_or_else(|| {
            ScenarioError::invalid(
                format!("{pointer}/site"),
                format!("unknown website id `{site}`"),
            )
        })?;
        if let Some(p) = page {
            if w.page(p).is_none() {
                return Err(ScenarioError::invalid(
                    format!("{pointer}/page"),
                    format!("website `{site}` has no page `{p}`"),
                ));
            }
        }
        Ok(())
    }
}
