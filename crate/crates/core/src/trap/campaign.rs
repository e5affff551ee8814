use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;

use super::{TrapConfig, TrapError};
use crate::gdn::{Owner, Website};
use crate::ids::{CampaignId, SiteId, UserId};
use crate::marketplace::{Ad, AdGroup, Campaign, ResponseRates};
use crate::money::Money;
use crate::profile::PageProfile;

/// One ad group per probed audience, each placed only on `site`.
pub fn build_trap_campaign(config: &TrapConfig, site: &Website) -> Result<Campaign, TrapError> {
    config.validate()?;
    if site.owner != Owner::Attacker {
        return Err(TrapError::NotAttackerOwned(site.id.clone()));
    }
    if !site.logging {
        return Err(TrapError::NotLogging(site.id.clone()));
    }
    let ad_groups = config
        .audiences_to_probe
        .iter()
        .map(|a| AdGroup {
            id: format!("{}/{}", site.id, a).into(),
            name: format!("probe {a}"),
            ads: alloc::vec![Ad {
                id: format!("trap-{}-{}", site.id, a).into(),
                landing_url: format!("https://{}/", site.domain),
                creative: String::from("hook"),
            }],
            target_audiences: [a.clone()].into_iter().collect(),
            placement: [site.id.clone()].into_iter().collect(),
            demographics: None,
            geo: None,
            schedule: None,
            bid: config.bid,
            rates: ResponseRates::default(),
        })
        .collect();
    Ok(Campaign {
        id: trap_campaign_id(&site.id),
        name: format!("trap on {}", site.domain),
        ad_groups,
        total_budget: config.budget,
        spent: Money::ZERO,
    })
}

pub(crate) fn trap_campaign_id(site: &SiteId) -> CampaignId {
    format!("trap-{site}").into()
}

#[derive(Clone, Debug, PartialEq)]
pub struct VictimSite {
    pub site: Website,
    pub campaign: Campaign,
}

/// Clones `template` into `<template>~<victim>`, prefixing page ids the same
/// way so pages stay globally unique.
pub fn default_site_factory(victim: &UserId, template: &Website) -> Website {
    let id: SiteId = format!("{}~{}", template.id, victim).into();
    Website {
        domain: format!("{}.{}", victim, template.domain),
        pages: template
            .pages
            .iter()
            .map(|p| PageProfile {
                page_id: format!("{}~{}", p.page_id, victim).into(),
                topics: p.topics.clone(),
            })
            .collect(),
        owner: Owner::Attacker,
        logging: true,
        id,
    }
}

/// A dedicated attacker site and campaign clone per victim.
pub fn assign_per_victim_sites<F>(
    victims: &[UserId],
    template: &Website,
    config: &TrapConfig,
    mut factory: F,
) -> Result<BTreeMap<UserId, VictimSite>, TrapError>
where
    F: FnMut(&UserId, &Website) -> Website,
{
    let mut out = BTreeMap::new();
    for v in victims {
        let site = factory(v, template);
        let campaign = build_trap_campaign(config, &site)?;
        out.insert(v.clone(), VictimSite { site, campaign });
    }
    Ok(out)
}
