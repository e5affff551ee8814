//! Publisher side: display-network websites, the per-page-view serving flow,
//! and the visit logs that logging (attacker-owned) sites keep.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::ids::{NetworkId, PageId, RegionTag, SiteId};
use crate::marketplace::{run_auction, ImpressionRecord, MarketError, Marketplace};
use crate::profile::{AdUserProfile, NavigationEvent, PageProfile, ProfileError, ProfileRules};
use crate::taxonomy::Taxonomy;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GdnError {
    #[error("unknown website `{0}`")]
    UnknownSite(SiteId),
    #[error("website `{site}` has no page `{page}`")]
    UnknownPage { site: SiteId, page: PageId },
    #[error("{pointer}: page not eligible for display network")]
    NotEligible { pointer: String },
    #[error("{pointer}: unknown topic id `{id}`")]
    UnknownTopic { pointer: String, id: String },
    #[error("{pointer}: website has no pages")]
    NoPages { pointer: String },
    #[error("{pointer}: duplicate {kind} id `{id}`")]
    DuplicateId {
        pointer: String,
        kind: &'static str,
        id: String,
    },
    #[error("no log for this site (`{0}`)")]
    LoggingDisabled(SiteId),
    #[error("log of `{site}` would go back in time ({at} < {last})")]
    LogOrder { site: SiteId, at: i64, last: i64 },
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Market(#[from] MarketError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Owner {
    Attacker,
    ThirdParty,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Website {
    pub id: SiteId,
    pub domain: String,
    pub pages: Vec<PageProfile>,
    pub owner: Owner,
    #[serde(default)]
    pub logging: bool,
}

impl Website {
    pub fn page(&self, id: &PageId) -> Option<&PageProfile> {
        self.pages.iter().find(|p| &p.page_id == id)
    }

    pub fn landing_page(&self) -> Option<&PageProfile> {
        self.pages.first()
    }

    /// Checks network admission: at least one page, and every page declares
    /// at least one known topic.
    pub fn validate(&self, taxonomy: &Taxonomy, base: &str) -> Result<(), GdnError> {
        if self.pages.is_empty() {
            return Err(GdnError::NoPages {
                pointer: format!("{base}/pages"),
            });
        }
        for (i, p) in self.pages.iter().enumerate() {
            if p.topics.is_empty() {
                return Err(GdnError::NotEligible {
                    pointer: format!("{base}/pages/{i}/topics"),
                });
            }
            if let Some(t) = p.topics.iter().find(|t| !taxonomy.has_topic(t)) {
                return Err(GdnError::UnknownTopic {
                    pointer: format!("{base}/pages/{i}/topics"),
                    id: t.0.clone(),
                });
            }
        }
        Ok(())
    }
}

/// One line of a website's own access log. Carries the network address, not
/// the ad-network cookie.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitLogEntry {
    pub timestamp: i64,
    pub network_id: NetworkId,
    pub page: PageId,
    pub referral: Option<PageId>,
    pub tracking_arg: Option<String>,
}

/// Browser-side state of one simulated user.
#[derive(Clone, Debug, PartialEq)]
pub struct Visitor {
    pub profile: AdUserProfile,
    pub network_id: NetworkId,
    /// Agreement given on the landing page; gates logging only.
    pub consent: bool,
    pub geo: Option<RegionTag>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PageView {
    pub page: PageId,
    pub time: i64,
    pub dwell_s: f64,
    pub referral: Option<PageId>,
    pub tracking_arg: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ServeOutcome {
    pub impression: Option<ImpressionRecord>,
    pub log_entry: Option<VisitLogEntry>,
}

/// The set of display-network websites and their access logs.
#[derive(Clone, Debug, Default)]
pub struct Network {
    sites: BTreeMap<SiteId, Website>,
    logs: BTreeMap<SiteId, Vec<VisitLogEntry>>,
}

impl Network {
    pub fn new(
        sites: impl IntoIterator<Item = Website>,
        taxonomy: &Taxonomy,
    ) -> Result<Self, GdnError> {
        let mut map = BTreeMap::new();
        let mut pages = BTreeSet::new();
        for (i, site) in sites.into_iter().enumerate() {
            let base = format!("/websites/{i}");
            site.validate(taxonomy, &base)?;
            for (pi, p) in site.pages.iter().enumerate() {
                if !pages.insert(p.page_id.clone()) {
                    return Err(GdnError::DuplicateId {
                        pointer: format!("{base}/pages/{pi}/id"),
                        kind: "page",
                        id: p.page_id.0.clone(),
                    });
                }
            }
            if map.contains_key(&site.id) {
                return Err(GdnError::DuplicateId {
                    pointer: format!("{base}/id"),
                    kind: "website",
                    id: site.id.0.clone(),
                });
            }
            map.insert(site.id.clone(), site);
        }
        let logs = map
            .values()
            .filter(|s| s.logging)
            .map(|s| (s.id.clone(), Vec::new()))
            .collect();
        Ok(Network { sites: map, logs })
    }

    pub fn site(&self, id: &SiteId) -> Option<&Website> {
        self.sites.get(id)
    }

    pub fn sites(&self) -> impl Iterator<Item = &Website> {
        self.sites.values()
    }

    /// Handles one page view: the ad network updates the visitor's profile,
    /// runs the slot's auction and records the impression; a logging site
    /// appends a log line when the visitor consented.
    #[allow(clippy::too_many_arguments)]
    pub fn serve_page<R: RngCore>(
        &mut self,
        site: &SiteId,
        view: &PageView,
        visitor: &mut Visitor,
        market: &mut Marketplace,
        taxonomy: &Taxonomy,
        rules: &ProfileRules,
        rng: &mut R,
    ) -> Result<ServeOutcome, GdnError> {
        let website = self
            .sites
            .get(site)
            .ok_or_else(|| GdnError::UnknownSite(site.clone()))?;
        let page = website
            .page(&view.page)
            .ok_or_else(|| GdnError::UnknownPage {
                site: site.clone(),
                page: view.page.clone(),
            })?;

        let event = NavigationEvent {
            cookie: visitor.profile.cookie.clone(),
            page: page.page_id.clone(),
            timestamp: view.time,
            dwell_s: view.dwell_s,
            referral: view.referral.clone(),
            geo: visitor.geo.clone(),
        };
        visitor
            .profile
            .record_visit(page, &event, taxonomy, rules)?;

        let candidates =
            market.eligible_ads(site, &visitor.profile, visitor.geo.as_ref(), view.time);
        let impression = match run_auction(&candidates, market.mode()) {
            Some(outcome) => {
                let ctr = market
                    .campaign(&outcome.winner.campaign)
                    .and_then(|c| c.ad_groups.iter().find(|g| g.id == outcome.winner.ad_group))
                    .map(|g| g.rates.click_through)
                    .unwrap_or(0.0);
                let clicked = rng.gen::<f64>() < ctr;
                Some(market.record_impression(
                    &outcome,
                    &visitor.profile,
                    site,
                    &page.page_id,
                    view.time,
                    clicked,
                )?)
            }
            None => None,
        };

        let log_entry = if website.logging && visitor.consent {
            let entry = VisitLogEntry {
                timestamp: view.time,
                network_id: visitor.network_id.clone(),
                page: page.page_id.clone(),
                referral: view.referral.clone(),
                tracking_arg: view.tracking_arg.clone(),
            };
            let log = self.logs.entry(site.clone()).or_default();
            if let Some(last) = log.last() {
                if entry.timestamp < last.timestamp {
                    return Err(GdnError::LogOrder {
                        site: site.clone(),
                        at: entry.timestamp,
                        last: last.timestamp,
                    });
                }
            }
            log.push(entry.clone());
            Some(entry)
        } else {
            None
        };

        Ok(ServeOutcome {
            impression,
            log_entry,
        })
    }

    /// Entries of `site` with timestamps in `range`, in timestamp order.
    pub fn visitor_log(
        &self,
        site: &SiteId,
        range: Range<i64>,
    ) -> Result<Vec<VisitLogEntry>, GdnError> {
        let website = self
            .sites
            .get(site)
            .ok_or_else(|| GdnError::UnknownSite(site.clone()))?;
        if !website.logging {
            return Err(GdnError::LoggingDisabled(site.clone()));
        }
        Ok(self
            .logs
            .get(site)
            .map(|l| {
                l.iter()
                    .filter(|e| range.contains(&e.timestamp))
                    .cloned()
                    .collect()
            })
            .unwrap_or_default())
    }

    pub fn into_logs(self) -> BTreeMap<SiteId, Vec<VisitLogEntry>> {
        self.logs
    }
}
