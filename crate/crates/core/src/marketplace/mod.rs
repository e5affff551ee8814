//! Advertiser side of the network: campaigns, targeting, per-impression
//! auctions, spend, and batched per-audience impression counters.

mod auction;
mod reports;

pub use auction::{eligible_ads, run_auction, AuctionMode, AuctionOutcome, Candidate};
pub use reports::{publish_reports, AudienceCounterReport, WindowClock};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::ids::{AdGroupId, AdId, AudienceId, CampaignId, CookieId, PageId, RegionTag, SiteId};
use crate::money::Money;
use crate::profile::{AdUserProfile, Demographics};
use crate::taxonomy::Taxonomy;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MarketError {
    #[error("{pointer}: bid amount must be positive")]
    NonPositiveBid { pointer: String },
    #[error("{pointer}: ad group has no ads")]
    NoAds { pointer: String },
    #[error("{pointer}: ad group targets no audience")]
    NoAudience { pointer: String },
    #[error("{pointer}: duplicate {kind} id `{id}`")]
    DuplicateId {
        pointer: String,
        kind: &'static str,
        id: String,
    },
    #[error("{pointer}: unknown {kind} id `{id}`")]
    DanglingReference {
        pointer: String,
        kind: &'static str,
        id: String,
    },
    #[error("{pointer}: spent exceeds total budget")]
    Overspent { pointer: String },
    #[error("{pointer}: {what} must lie in [0, 1]")]
    Rate { pointer: String, what: &'static str },
    #[error("{pointer}: schedule end must be after start")]
    Schedule { pointer: String },
    #[error("impression would overdraw campaign `{0}`")]
    BudgetExceeded(CampaignId),
    #[error("unknown campaign `{0}`")]
    UnknownCampaign(CampaignId),
    #[error("winning ad group `{0}` does not target any of the visitor's audiences")]
    NoMatchedAudience(AdGroupId),
    #[error("window {index} closed after window {last}")]
    WindowOrder { index: i64, last: i64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BidKind {
    Cpc,
    Cpm,
    Cpa,
}

/// A bid. CPM amounts are per 1000 impressions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bid {
    pub kind: BidKind,
    pub amount: Money,
}

impl Bid {
    pub fn cpm(amount: Money) -> Self {
        Bid {
            kind: BidKind::Cpm,
            amount,
        }
    }

    /// Expected value per 1000 impressions, used to rank bids of different
    /// kinds against each other.
    pub fn effective_cpm(&self, rates: &ResponseRates) -> Money {
        match self.kind {
            BidKind::Cpm => self.amount,
            BidKind::Cpc => self.amount.scale(rates.click_through * 1000.0),
            BidKind::Cpa => self.amount.scale(rates.acquisition * 1000.0),
        }
    }
}

/// Configured click-through and acquisition rates of an ad group.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseRates {
    #[serde(default = "default_ctr")]
    pub click_through: f64,
    #[serde(default = "default_acquisition")]
    pub acquisition: f64,
}

fn default_ctr() -> f64 {
    0.01
}

fn default_acquisition() -> f64 {
    0.001
}

impl Default for ResponseRates {
    fn default() -> Self {
        ResponseRates {
            click_through: default_ctr(),
            acquisition: default_acquisition(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ad {
    pub id: AdId,
    #[serde(default)]
    pub landing_url: String,
    #[serde(default)]
    pub creative: String,
}

/// Each non-empty set restricts; an empty set accepts anything.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemographicFilter {
    #[serde(default)]
    pub genders: BTreeSet<String>,
    #[serde(default)]
    pub age_bands: BTreeSet<String>,
    #[serde(default)]
    pub languages: BTreeSet<String>,
}

impl DemographicFilter {
    pub fn accepts(&self, demo: Option<&Demographics>) -> bool {
        let field = |allowed: &BTreeSet<String>, value: Option<&String>| {
            allowed.is_empty() || value.is_some_and(|v| allowed.contains(v))
        };
        let Some(d) = demo else {
            return self.genders.is_empty()
                && self.age_bands.is_empty()
                && self.languages.is_empty();
        };
        field(&self.genders, d.gender.as_ref())
            && field(&self.age_bands, d.age_band.as_ref())
            && (self.languages.is_empty() || !self.languages.is_disjoint(&d.languages))
    }
}

/// Half-open `[start, end)` in simulated seconds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub start: i64,
    pub end: i64,
}

impl Schedule {
    pub fn contains(&self, t: i64) -> bool {
        self.start <= t && t < self.end
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdGroup {
    pub id: AdGroupId,
    #[serde(default)]
    pub name: String,
    pub ads: Vec<Ad>,
    pub target_audiences: BTreeSet<AudienceId>,
    /// Empty means the whole network.
    #[serde(default)]
    pub placement: BTreeSet<SiteId>,
    #[serde(default)]
    pub demographics: Option<DemographicFilter>,
    #[serde(default)]
    pub geo: Option<BTreeSet<RegionTag>>,
    #[serde(default)]
    pub schedule: Option<Schedule>,
    pub bid: Bid,
    #[serde(default)]
    pub rates: ResponseRates,
}

impl AdGroup {
    pub fn effective_cpm(&self) -> Money {
        self.bid.effective_cpm(&self.rates)
    }

    /// What one impression costs the advertiser at its own bid.
    pub fn impression_cost(&self) -> Money {
        self.effective_cpm().div_floor(1000)
    }

    pub fn places_on(&self, site: &SiteId) -> bool {
        self.placement.is_empty() || self.placement.contains(site)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Campaign {
    pub id: CampaignId,
    #[serde(default)]
    pub name: String,
    pub ad_groups: Vec<AdGroup>,
    pub total_budget: Money,
    #[serde(default)]
    pub spent: Money,
}

impl Campaign {
    pub fn remaining(&self) -> Money {
        self.total_budget.saturating_sub(self.spent)
    }

    pub fn targeted_audiences(&self) -> BTreeSet<AudienceId> {
        self.ad_groups
            .iter()
            .flat_map(|g| g.target_audiences.iter().cloned())
            .collect()
    }

    /// Checks the campaign's internal invariants and that every reference
    /// resolves against `taxonomy` and `sites`. `base` prefixes pointers.
    pub fn validate(
        &self,
        taxonomy: &Taxonomy,
        sites: &BTreeSet<SiteId>,
        base: &str,
    ) -> Result<(), MarketError> {
        if self.spent > self.total_budget {
            return Err(MarketError::Overspent {
                pointer: format!("{base}/spent"),
            });
        }
        let mut ads = BTreeSet::new();
        let mut groups = BTreeSet::new();
        for (gi, g) in self.ad_groups.iter().enumerate() {
            let gp = format!("{base}/ad_groups/{gi}");
            if !groups.insert(&g.id) {
                return Err(MarketError::DuplicateId {
                    pointer: format!("{gp}/id"),
                    kind: "ad group",
                    id: g.id.0.clone(),
                });
            }
            if g.ads.is_empty() {
                return Err(MarketError::NoAds {
                    pointer: format!("{gp}/ads"),
                });
            }
            for (ai, ad) in g.ads.iter().enumerate() {
                if !ads.insert(&ad.id) {
                    return Err(MarketError::DuplicateId {
                        pointer: format!("{gp}/ads/{ai}/id"),
                        kind: "ad",
                        id: ad.id.0.clone(),
                    });
                }
            }
            if g.target_audiences.is_empty() {
                return Err(MarketError::NoAudience {
                    pointer: format!("{gp}/target_audiences"),
                });
            }
            if let Some(a) = g
                .target_audiences
                .iter()
                .find(|a| !taxonomy.has_audience(a))
            {
                return Err(MarketError::DanglingReference {
                    pointer: format!("{gp}/target_audiences"),
                    kind: "audience",
                    id: a.0.clone(),
                });
            }
            if let Some(s) = g.placement.iter().find(|s| !sites.contains(*s)) {
                return Err(MarketError::DanglingReference {
                    pointer: format!("{gp}/placement"),
                    kind: "website",
                    id: s.0.clone(),
                });
            }
            if g.bid.amount.is_zero() {
                return Err(MarketError::NonPositiveBid {
                    pointer: format!("{gp}/bid/amount"),
                });
            }
            for (what, rate) in [
                ("click_through", g.rates.click_through),
                ("acquisition", g.rates.acquisition),
            ] {
                if !(0.0..=1.0).contains(&rate) {
                    return Err(MarketError::Rate {
                        pointer: format!("{gp}/rates/{what}"),
                        what,
                    });
                }
            }
            if let Some(s) = g.schedule {
                if s.end <= s.start {
                    return Err(MarketError::Schedule {
                        pointer: format!("{gp}/schedule"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// One ad served to one visitor. The cookie id is ground truth held by the
/// ad network and never reaches the advertiser-facing reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpressionRecord {
    pub ad: AdId,
    pub ad_group: AdGroupId,
    pub campaign: CampaignId,
    pub website: SiteId,
    pub page: PageId,
    pub audience: AudienceId,
    pub cookie: CookieId,
    pub timestamp: i64,
    pub cost: Money,
    pub clicked: bool,
}

/// All campaigns plus the not-yet-published counter increments.
#[derive(Clone, Debug)]
pub struct Marketplace {
    campaigns: BTreeMap<CampaignId, Campaign>,
    mode: AuctionMode,
    clock: WindowClock,
    // campaign -> window -> audience -> count
    pending: BTreeMap<CampaignId, BTreeMap<i64, BTreeMap<AudienceId, u64>>>,
    cumulative: BTreeMap<CampaignId, BTreeMap<AudienceId, u64>>,
    last_closed: Option<i64>,
}

impl Marketplace {
    pub fn new(
        campaigns: impl IntoIterator<Item = Campaign>,
        mode: AuctionMode,
        clock: WindowClock,
    ) -> Self {
        Marketplace {
            campaigns: campaigns.into_iter().map(|c| (c.id.clone(), c)).collect(),
            mode,
            clock,
            pending: BTreeMap::new(),
            cumulative: BTreeMap::new(),
            last_closed: None,
        }
    }

    pub fn campaigns(&self) -> impl Iterator<Item = &Campaign> {
        self.campaigns.values()
    }

    pub fn campaign(&self, id: &CampaignId) -> Option<&Campaign> {
        self.campaigns.get(id)
    }

    pub fn mode(&self) -> AuctionMode {
        self.mode
    }

    pub fn clock(&self) -> WindowClock {
        self.clock
    }

    pub fn eligible_ads(
        &self,
        site: &SiteId,
        profile: &AdUserProfile,
        geo: Option<&RegionTag>,
        time: i64,
    ) -> Vec<Candidate> {
        eligible_ads(site, profile, geo, time, self.campaigns.values())
    }

    /// Charges the winner, attributes the impression to exactly one audience
    /// (the smallest matching id) and queues a counter increment.
    pub fn record_impression(
        &mut self,
        outcome: &AuctionOutcome,
        profile: &AdUserProfile,
        site: &SiteId,
        page: &PageId,
        time: i64,
        clicked: bool,
    ) -> Result<ImpressionRecord, MarketError> {
        let w = &outcome.winner;
        let campaign = self
            .campaigns
            .get_mut(&w.campaign)
            .ok_or_else(|| MarketError::UnknownCampaign(w.campaign.clone()))?;
        let audience = w
            .matched
            .iter()
            .find(|a| profile.audiences.contains(*a))
            .cloned()
            .ok_or_else(|| MarketError::NoMatchedAudience(w.ad_group.clone()))?;
        let spent = campaign
            .spent
            .checked_add(outcome.price)
            .filter(|s| *s <= campaign.total_budget)
            .ok_or_else(|| MarketError::BudgetExceeded(w.campaign.clone()))?;
        campaign.spent = spent;
        let window = self.clock.index_of(time);
        *self
            .pending
            .entry(w.campaign.clone())
            .or_default()
            .entry(window)
            .or_default()
            .entry(audience.clone())
            .or_insert(0) += 1;
        Ok(ImpressionRecord {
            ad: w.ad.clone(),
            ad_group: w.ad_group.clone(),
            campaign: w.campaign.clone(),
            website: site.clone(),
            page: page.clone(),
            audience,
            cookie: profile.cookie.clone(),
            timestamp: time,
            cost: outcome.price,
            clicked,
        })
    }

    /// Publishes window `index` for every campaign. Windows must be closed in
    /// increasing order.
    pub fn close_window(&mut self, index: i64) -> Result<Vec<AudienceCounterReport>, MarketError> {
        if let Some(last) = self.last_closed {
            if index <= last {
                return Err(MarketError::WindowOrder { index, last });
            }
        }
        self.last_closed = Some(index);
        let (start, end) = self.clock.bounds(index);
        let mut out = Vec::with_capacity(self.campaigns.len());
        for c in self.campaigns.values() {
            let mut deltas: BTreeMap<AudienceId, u64> =
                c.targeted_audiences().into_iter().map(|a| (a, 0)).collect();
            if let Some(p) = self.pending.get_mut(&c.id).and_then(|w| w.remove(&index)) {
                for (a, n) in p {
                    *deltas.entry(a).or_insert(0) += n;
                }
            }
            let cum = self.cumulative.entry(c.id.clone()).or_default();
            for (a, n) in &deltas {
                *cum.entry(a.clone()).or_insert(0) += n;
            }
            let cumulative = deltas
                .keys()
                .map(|a| (a.clone(), cum.get(a).copied().unwrap_or(0)))
                .collect();
            out.push(AudienceCounterReport {
                campaign: c.id.clone(),
                window_index: index,
                window_start: start,
                window_end: end,
                deltas,
                cumulative,
            });
        }
        Ok(out)
    }

    /// Increments not yet published, across all campaigns and windows.
    pub fn pending_total(&self) -> u64 {
        self.pending
            .values()
            .flat_map(|w| w.values())
            .flat_map(|a| a.values())
            .sum()
    }
}
