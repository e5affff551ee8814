use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::cmp::Ordering;
use serde::{Deserialize, Serialize};

use super::Campaign;
use crate::ids::{AdGroupId, AdId, AudienceId, CampaignId, RegionTag, SiteId};
use crate::money::Money;
use crate::profile::AdUserProfile;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuctionMode {
    /// Winner pays its own bid.
    #[default]
    FirstPrice,
    /// Winner pays the best bid of any other campaign, or its own bid when
    /// unopposed.
    SecondPrice,
}

/// One ad that may fill the current slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub campaign: CampaignId,
    pub ad_group: AdGroupId,
    pub ad: AdId,
    /// Target audiences of the ad group that the visitor belongs to.
    pub matched: BTreeSet<AudienceId>,
    pub effective_cpm: Money,
}

impl Candidate {
    pub fn impression_cost(&self) -> Money {
        self.effective_cpm.div_floor(1000)
    }

    /// Auction order: higher effective bid first, then smaller ad id.
    fn rank(&self, other: &Self) -> Ordering {
        other
            .effective_cpm
            .cmp(&self.effective_cpm)
            .then_with(|| self.ad.cmp(&other.ad))
            .then_with(|| self.campaign.cmp(&other.campaign))
            .then_with(|| self.ad_group.cmp(&other.ad_group))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuctionOutcome {
    pub winner: Candidate,
    /// Charged for this single impression.
    pub price: Money,
}

/// Ads that may be shown on `site` to a visitor with `profile`: placement
/// allows the site, audiences intersect, demographic/geo/schedule filters
/// pass, and the campaign can still afford one impression.
pub fn eligible_ads<'a>(
    site: &SiteId,
    profile: &AdUserProfile,
    geo: Option<&RegionTag>,
    time: i64,
    campaigns: impl IntoIterator<Item = &'a Campaign>,
) -> Vec<Candidate> {
    let mut out = Vec::new();
    for c in campaigns {
        for g in &c.ad_groups {
            if !g.places_on(site) {
                continue;
            }
            let matched: BTreeSet<AudienceId> = g
                .target_audiences
                .intersection(&profile.audiences)
                .cloned()
                .collect();
            if matched.is_empty() {
                continue;
            }
            if let Some(f) = &g.demographics {
                if !f.accepts(profile.demographics.as_ref()) {
                    continue;
                }
            }
            if let Some(regions) = &g.geo {
                if !geo.is_some_and(|r| regions.contains(r)) {
                    continue;
                }
            }
            if g.schedule.is_some_and(|s| !s.contains(time)) {
                continue;
            }
            if c.remaining() < g.impression_cost() {
                continue;
            }
            let effective_cpm = g.effective_cpm();
            for ad in &g.ads {
                out.push(Candidate {
                    campaign: c.id.clone(),
                    ad_group: g.id.clone(),
                    ad: ad.id.clone(),
                    matched: matched.clone(),
                    effective_cpm,
                });
            }
        }
    }
    out
}

/// Highest effective bid wins; ties go to the lexicographically smallest ad
/// id. `None` iff there are no candidates.
pub fn run_auction(candidates: &[Candidate], mode: AuctionMode) -> Option<AuctionOutcome> {
    let winner = candidates.iter().min_by(|a, b| a.rank(b))?;
    let price = match mode {
        AuctionMode::FirstPrice => winner.impression_cost(),
        AuctionMode::SecondPrice => candidates
            .iter()
            .filter(|c| c.campaign != winner.campaign)
            .map(Candidate::impression_cost)
            .max()
            .unwrap_or_else(|| winner.impression_cost()),
    };
    Some(AuctionOutcome {
        winner: winner.clone(),
        price,
    })
}
