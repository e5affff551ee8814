//! Conservation, budget and pairing checks over a finished run.

#![allow(dead_code)]

use std::collections::BTreeMap;

use adtrap_core::ids::{AudienceId, CampaignId};
use adtrap_core::money::Money;
use adtrap_core::simulation::{RunTrace, Scenario};

/// Window deltas add up to the impressions of each (campaign, window,
/// audience), and every campaign's spend is the sum of its impression
/// costs, grows monotonically and stays within budget.
pub fn check_conservation(trace: &RunTrace) -> Result<(), String> {
    let mut served: BTreeMap<(&CampaignId, i64, &AudienceId), u64> = BTreeMap::new();
    for i in &trace.impressions {
        let w = i.timestamp.div_euclid(trace.window_length_s);
        *served.entry((&i.campaign, w, &i.audience)).or_insert(0) += 1;
    }
    let mut reported: BTreeMap<(&CampaignId, i64, &AudienceId), u64> = BTreeMap::new();
    let mut running: BTreeMap<(&CampaignId, &AudienceId), u64> = BTreeMap::new();
    for r in &trace.reports {
        for (a, d) in &r.deltas {
            if *d > 0 {
                reported.insert((&r.campaign, r.window_index, a), *d);
            }
            let cum = running.entry((&r.campaign, a)).or_insert(0);
            *cum += d;
            if r.cumulative.get(a) != Some(cum) {
                return Err(format!(
                    "cumulative of {} / {a} in window {} is off",
                    r.campaign, r.window_index
                ));
            }
        }
    }
    if served != reported {
        return Err(format!("deltas {reported:?} != impressions {served:?}"));
    }
    let total_delta: u64 = trace.reports.iter().map(|r| r.total()).sum();
    if total_delta != trace.impressions.len() as u64 {
        return Err(format!(
            "{total_delta} deltas for {} impressions",
            trace.impressions.len()
        ));
    }

    let mut spent: BTreeMap<&CampaignId, Money> = BTreeMap::new();
    for i in &trace.impressions {
        let s = spent.entry(&i.campaign).or_insert(Money::ZERO);
        let next = *s + i.cost;
        if next < *s {
            return Err(format!("spend of {} decreased", i.campaign));
        }
        let budget = trace.spend[&i.campaign].total_budget;
        if next > budget {
            return Err(format!("{} spent {next} over budget {budget}", i.campaign));
        }
        *s = next;
    }
    for (c, s) in &trace.spend {
        let from_impressions = spent.get(c).copied().unwrap_or(Money::ZERO);
        if s.spent != from_impressions || s.spent > s.total_budget {
            return Err(format!(
                "{c}: spent {} vs impressions {from_impressions}",
                s.spent
            ));
        }
    }
    Ok(())
}

/// Nothing reaches the attacker before the first timed visit, and logged
/// consenting visits pair up with impressions on logging sites.
pub fn check_isolation(scenario: &Scenario, trace: &RunTrace) -> Result<(), String> {
    let first = scenario
        .users
        .iter()
        .flat_map(|u| u.attack_visits.iter().map(|v| v.timestamp))
        .min();
    let attacker: Vec<&CampaignId> = trace.attacker_sites.iter().map(|a| &a.campaign).collect();
    for i in &trace.impressions {
        if attacker.contains(&&i.campaign) && first.is_none_or(|f| i.timestamp < f) {
            return Err(format!(
                "attacker impression at {} before first visit",
                i.timestamp
            ));
        }
    }
    for (site, log) in &trace.logs {
        if let Some(e) = log.iter().find(|e| first.is_none_or(|f| e.timestamp < f)) {
            return Err(format!("{site} logged {} before first visit", e.timestamp));
        }
        if log.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
            return Err(format!("{site} log goes back in time"));
        }
    }
    Ok(())
}
