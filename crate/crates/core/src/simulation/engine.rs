use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Reverse;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Scenario, ScenarioError};
use crate::gdn::{GdnError, Network, PageView, VisitLogEntry, Visitor};
use crate::ids::{AudienceId, CampaignId, InterestId, NetworkId, PageId, SiteId, UserId};
use crate::marketplace::{
    AudienceCounterReport, Campaign, ImpressionRecord, MarketError, Marketplace,
};
use crate::money::Money;
use crate::profile::{AdUserProfile, NavigationEvent, ProfileError};
use crate::trap::{
    assign_per_victim_sites, build_trap_campaign, default_site_factory, AttackerSiteView,
    AttackerView, TrapError,
};

/// Seconds between consecutive warm-up page views.
const WARMUP_SPACING_S: i64 = 60;

pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Network(#[from] GdnError),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Trap(#[from] TrapError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// A site the attacker controls and the campaign placed on it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackerSite {
    pub site: SiteId,
    pub campaign: CampaignId,
    /// Set when the site was cloned for a single victim.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub victim: Option<UserId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignSpend {
    pub total_budget: Money,
    pub spent: Money,
}

/// Everything a run produced. Serializing the same scenario and seed twice
/// yields identical bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub schema_version: u32,
    pub seed: u64,
    pub window_length_s: i64,
    pub horizon_s: i64,
    pub impressions: Vec<ImpressionRecord>,
    /// Ordered by window, then campaign.
    pub reports: Vec<AudienceCounterReport>,
    pub logs: BTreeMap<SiteId, Vec<VisitLogEntry>>,
    /// Each user's derived audiences at attack time.
    pub ground_truth: BTreeMap<UserId, BTreeSet<AudienceId>>,
    pub interests: BTreeMap<UserId, BTreeSet<InterestId>>,
    pub network_ids: BTreeMap<UserId, NetworkId>,
    pub spend: BTreeMap<CampaignId, CampaignSpend>,
    pub attacker_sites: Vec<AttackerSite>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub impressions: usize,
    pub attacker_impressions: usize,
    pub log_entries: usize,
    pub windows: usize,
}

impl RunTrace {
    /// What the attacker gets: the counters of its own campaigns and the
    /// logs of its own sites.
    pub fn attacker_view(&self) -> AttackerView {
        let sites = self
            .attacker_sites
            .iter()
            .map(|a| AttackerSiteView {
                site: a.site.clone(),
                campaign: a.campaign.clone(),
                reports: self
                    .reports
                    .iter()
                    .filter(|r| r.campaign == a.campaign)
                    .cloned()
                    .collect(),
                log: self.logs.get(&a.site).cloned().unwrap_or_default(),
            })
            .collect();
        AttackerView { sites }
    }

    /// Final audiences keyed by network id, for scoring.
    pub fn truth_by_network(&self) -> BTreeMap<NetworkId, BTreeSet<AudienceId>> {
        self.ground_truth
            .iter()
            .filter_map(|(u, a)| Some((self.network_ids.get(u)?.clone(), a.clone())))
            .collect()
    }

    pub fn summary(&self) -> TraceSummary {
        let attacker: BTreeSet<&CampaignId> =
            self.attacker_sites.iter().map(|a| &a.campaign).collect();
        let windows: BTreeSet<i64> = self.reports.iter().map(|r| r.window_index).collect();
        TraceSummary {
            impressions: self.impressions.len(),
            attacker_impressions: self
                .impressions
                .iter()
                .filter(|i| attacker.contains(&i.campaign))
                .count(),
            log_entries: self.logs.values().map(Vec::len).sum(),
            windows: windows.len(),
        }
    }
}

// Window closes sort before visits at the same instant: a visit at a
// window's end belongs to the next window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Event {
    Close { time: i64, index: i64 },
    Visit { time: i64, user: usize, seq: usize },
}

impl Event {
    fn key(&self) -> (i64, u8, usize, usize) {
        match *self {
            Event::Close { time, index } => (time, 0, 0, index as usize),
            Event::Visit { time, user, seq } => (time, 1, user, seq),
        }
    }
}

#[derive(PartialEq, Eq)]
struct Queued(Event);

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.0.key().cmp(&other.0.key())
    }
}

/// Runs warm-up navigation, then the timed visits in a discrete-event loop
/// that closes every reporting window up to the horizon.
pub fn run_scenario(scenario: &Scenario) -> Result<RunTrace, SimError> {
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let taxonomy = &scenario.taxonomy;
    let rules = &scenario.profile_rules;

    let mut websites = scenario.websites.clone();
    let mut campaigns = scenario.campaigns.clone();
    let mut attacker_sites = Vec::new();
    let mut redirect: BTreeMap<UserId, SiteId> = BTreeMap::new();
    if let Some(attack) = &scenario.attack {
        let template = scenario
            .site(&attack.attacker_site)
            .ok_or_else(|| GdnError::UnknownSite(attack.attacker_site.clone()))?;
        let place = |mut c: Campaign| {
            for g in &mut c.ad_groups {
                g.placement.extend(attack.shared_placements.iter().cloned());
            }
            c
        };
        if attack.one_site_per_victim {
            let mut victims: Vec<UserId> = scenario
                .users
                .iter()
                .filter(|u| {
                    u.attack_visits
                        .iter()
                        .any(|v| v.site == attack.attacker_site)
                })
                .map(|u| u.id.clone())
                .collect();
            victims.sort();
            for (user, vs) in
                assign_per_victim_sites(&victims, template, attack, default_site_factory)?
            {
                attacker_sites.push(AttackerSite {
                    site: vs.site.id.clone(),
                    campaign: vs.campaign.id.clone(),
                    victim: Some(user.clone()),
                });
                redirect.insert(user, vs.site.id.clone());
                websites.push(vs.site);
                campaigns.push(place(vs.campaign));
            }
        } else {
            let c = build_trap_campaign(attack, template)?;
            attacker_sites.push(AttackerSite {
                site: template.id.clone(),
                campaign: c.id.clone(),
                victim: None,
            });
            campaigns.push(place(c));
        }
    }

    let mut network = Network::new(websites, taxonomy)?;
    let mut market = Marketplace::new(campaigns, scenario.auction, scenario.clock());

    let mut order: Vec<usize> = (0..scenario.users.len()).collect();
    order.sort_by(|a, b| scenario.users[*a].id.cmp(&scenario.users[*b].id));

    let mut taken: BTreeSet<String> = scenario
        .users
        .iter()
        .flat_map(|u| {
            core::iter::once(u.cookie_id.as_str().into())
                .chain(u.network_id.iter().map(|n| n.as_str().into()))
        })
        .collect();
    let mut visitors: Vec<Visitor> = Vec::with_capacity(order.len());
    for &i in &order {
        let spec = &scenario.users[i];
        let network_id = match &spec.network_id {
            Some(n) => n.clone(),
            None => loop {
                let [a, b, c]: [u8; 3] = rng.gen();
                let candidate = format!("10.{a}.{b}.{c}");
                if taken.insert(candidate.clone()) {
                    break NetworkId::from(candidate);
                }
            },
        };
        visitors.push(Visitor {
            profile: AdUserProfile::new(spec.cookie_id.clone(), spec.demographics.clone()),
            network_id,
            consent: spec.consent,
            geo: spec.geo.clone(),
        });
    }

    // Warm-up shapes profiles only: no auctions, no logs.
    for (rank, &i) in order.iter().enumerate() {
        let spec = &scenario.users[i];
        let visitor = &mut visitors[rank];
        let total: i64 = spec.warmup_plan.iter().map(|s| i64::from(s.repeat)).sum();
        let mut k = 0;
        for step in &spec.warmup_plan {
            let site = network
                .site(&step.site)
                .ok_or_else(|| GdnError::UnknownSite(step.site.clone()))?;
            let page = match &step.page {
                Some(p) => site.page(p),
                None => site.landing_page(),
            }
            .ok_or(GdnError::NoPages {
                pointer: format!("/users/{i}/warmup_plan"),
            })?;
            for _ in 0..step.repeat {
                let event = NavigationEvent {
                    cookie: spec.cookie_id.clone(),
                    page: page.page_id.clone(),
                    timestamp: -(total - k) * WARMUP_SPACING_S,
                    dwell_s: step.dwell_s,
                    referral: None,
                    geo: spec.geo.clone(),
                };
                visitor
                    .profile
                    .record_visit(page, &event, taxonomy, rules)?;
                k += 1;
            }
        }
    }

    let clock = scenario.clock();
    let mut queue = BinaryHeap::new();
    for index in 0..clock.windows_until(scenario.horizon_s) {
        let (_, end) = clock.bounds(index);
        queue.push(Reverse(Queued(Event::Close { time: end, index })));
    }
    for (rank, &i) in order.iter().enumerate() {
        for (seq, v) in scenario.users[i].attack_visits.iter().enumerate() {
            queue.push(Reverse(Queued(Event::Visit {
                time: v.timestamp,
                user: rank,
                seq,
            })));
        }
    }

    let mut impressions = Vec::new();
    let mut reports = Vec::new();
    while let Some(Reverse(Queued(event))) = queue.pop() {
        match event {
            Event::Close { index, .. } => reports.extend(market.close_window(index)?),
            Event::Visit { time, user, seq } => {
                let spec = &scenario.users[order[user]];
                let visit = &spec.attack_visits[seq];
                let redirected = scenario
                    .attack
                    .as_ref()
                    .filter(|a| a.attacker_site == visit.site)
                    .and_then(|_| redirect.get(&spec.id));
                let (site, page) = match redirected {
                    Some(clone) => (
                        clone.clone(),
                        visit
                            .page
                            .as_ref()
                            .map(|p| PageId::from(format!("{p}~{}", spec.id))),
                    ),
                    None => (visit.site.clone(), visit.page.clone()),
                };
                let page = match page {
                    Some(p) => p,
                    None => network
                        .site(&site)
                        .and_then(|w| w.landing_page())
                        .map(|p| p.page_id.clone())
                        .ok_or_else(|| GdnError::UnknownSite(site.clone()))?,
                };
                let view = PageView {
                    page,
                    time,
                    dwell_s: visit.dwell_s,
                    referral: visit.referral.clone(),
                    tracking_arg: visit.tracking_arg.clone(),
                };
                let outcome = network.serve_page(
                    &site,
                    &view,
                    &mut visitors[user],
                    &mut market,
                    taxonomy,
                    rules,
                    &mut rng,
                )?;
                impressions.extend(outcome.impression);
            }
        }
    }

    let spend = market
        .campaigns()
        .map(|c| {
            (
                c.id.clone(),
                CampaignSpend {
                    total_budget: c.total_budget,
                    spent: c.spent,
                },
            )
        })
        .collect();
    let mut ground_truth = BTreeMap::new();
    let mut interests = BTreeMap::new();
    let mut network_ids = BTreeMap::new();
    for (&i, v) in order.iter().zip(visitors) {
        let id = &scenario.users[i].id;
        ground_truth.insert(id.clone(), v.profile.audiences);
        interests.insert(id.clone(), v.profile.interests);
        network_ids.insert(id.clone(), v.network_id);
    }

    Ok(RunTrace {
        schema_version: TRACE_SCHEMA_VERSION,
        seed: scenario.seed,
        window_length_s: scenario.window_length_s,
        horizon_s: scenario.horizon_s,
        impressions,
        reports,
        logs: network.into_logs(),
        ground_truth,
        interests,
        network_ids,
        spend,
        attacker_sites,
    })
}
