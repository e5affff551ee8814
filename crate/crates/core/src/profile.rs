//! Page profiles and ad user profiles built from navigation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use serde::{Deserialize, Serialize};

use crate::ids::{AudienceId, CookieId, InterestId, PageId, RegionTag, TopicId};
use crate::taxonomy::Taxonomy;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ProfileError {
    #[error("page `{0}` not eligible for display network: no topics declared")]
    NotEligible(PageId),
    #[error("page `{page}` declares unknown topic `{topic}`")]
    UnknownTopic { page: PageId, topic: TopicId },
    #[error("navigation event targets page `{event}` but page profile is `{page}`")]
    PageMismatch { event: PageId, page: PageId },
    #[error("navigation event for cookie `{event}` applied to profile `{profile}`")]
    CookieMismatch { event: CookieId, profile: CookieId },
    #[error("negative dwell time on page `{0}`")]
    NegativeDwell(PageId),
    #[error("cookie `{cookie}` navigation goes back in time ({at} < {last})")]
    TimeRegression {
        cookie: CookieId,
        at: i64,
        last: i64,
    },
}

/// Topics attached to one display-network page.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PageProfile {
    #[serde(rename = "id")]
    pub page_id: PageId,
    pub topics: BTreeSet<TopicId>,
}

/// Content analysis stand-in: pages carry declared topics, and admission to
/// the network only requires at least one topic the taxonomy knows.
pub fn analyze_page(
    page_id: PageId,
    declared: BTreeSet<TopicId>,
    taxonomy: &Taxonomy,
) -> Result<PageProfile, ProfileError> {
    if declared.is_empty() {
        return Err(ProfileError::NotEligible(page_id));
    }
    if let Some(t) = declared.iter().find(|t| !taxonomy.has_topic(t)) {
        return Err(ProfileError::UnknownTopic {
            page: page_id,
            topic: t.clone(),
        });
    }
    Ok(PageProfile {
        page_id,
        topics: declared,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NavigationEvent {
    pub cookie: CookieId,
    pub page: PageId,
    /// Simulated seconds. Warm-up navigation happens at negative times.
    pub timestamp: i64,
    pub dwell_s: f64,
    #[serde(default)]
    pub referral: Option<PageId>,
    #[serde(default)]
    pub geo: Option<RegionTag>,
}

/// Static demographic fields. Never inferred.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Demographics {
    #[serde(default)]
    pub gender: Option<String>,
    #[serde(default)]
    pub age_band: Option<String>,
    #[serde(default)]
    pub languages: BTreeSet<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreRule {
    /// One point per visit per page topic.
    #[default]
    Count,
    /// `dwell_s / 60` points per visit per page topic.
    Dwell,
}

impl ScoreRule {
    pub fn increment(self, event: &NavigationEvent) -> f64 {
        match self {
            ScoreRule::Count => 1.0,
            ScoreRule::Dwell => event.dwell_s / 60.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileRules {
    #[serde(default)]
    pub score: ScoreRule,
    /// Inclusive: a topic score equal to the threshold yields the interest.
    #[serde(default = "default_threshold")]
    pub interest_threshold: f64,
}

fn default_threshold() -> f64 {
    1.0
}

impl Default for ProfileRules {
    fn default() -> Self {
        ProfileRules {
            score: ScoreRule::Count,
            interest_threshold: default_threshold(),
        }
    }
}

/// What the ad network knows about one cookie.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdUserProfile {
    pub cookie: CookieId,
    pub demographics: Option<Demographics>,
    pub topic_scores: BTreeMap<TopicId, f64>,
    pub interests: BTreeSet<InterestId>,
    pub audiences: BTreeSet<AudienceId>,
    pub visit_counts: BTreeMap<PageId, u64>,
    #[serde(skip)]
    last_seen: Option<i64>,
}

impl AdUserProfile {
    pub fn new(cookie: CookieId, demographics: Option<Demographics>) -> Self {
        AdUserProfile {
            cookie,
            demographics,
            topic_scores: BTreeMap::new(),
            interests: BTreeSet::new(),
            audiences: BTreeSet::new(),
            visit_counts: BTreeMap::new(),
            last_seen: None,
        }
    }

    /// Folds one page view into the profile and re-derives interests and
    /// audiences.
    pub fn record_visit(
        &mut self,
        page: &PageProfile,
        event: &NavigationEvent,
        taxonomy: &Taxonomy,
        rules: &ProfileRules,
    ) -> Result<(), ProfileError> {
        if event.page != page.page_id {
            return Err(ProfileError::PageMismatch {
                event: event.page.clone(),
                page: page.page_id.clone(),
            });
        }
        if event.cookie != self.cookie {
            return Err(ProfileError::CookieMismatch {
                event: event.cookie.clone(),
                profile: self.cookie.clone(),
            });
        }
        if event.dwell_s.is_nan() || event.dwell_s < 0.0 {
            return Err(ProfileError::NegativeDwell(event.page.clone()));
        }
        if let Some(last) = self.last_seen {
            if event.timestamp < last {
                return Err(ProfileError::TimeRegression {
                    cookie: self.cookie.clone(),
                    at: event.timestamp,
                    last,
                });
            }
        }
        self.last_seen = Some(event.timestamp);
        *self.visit_counts.entry(page.page_id.clone()).or_insert(0) += 1;
        let inc = rules.score.increment(event);
        for t in &page.topics {
            *self.topic_scores.entry(t.clone()).or_insert(0.0) += inc;
        }
        self.rederive(taxonomy, rules);
        Ok(())
    }

    pub fn rederive(&mut self, taxonomy: &Taxonomy, rules: &ProfileRules) {
        self.interests = derive_interests(self, taxonomy, rules);
        self.audiences = derive_audiences(self, taxonomy);
    }

    pub fn score(&self, topic: &TopicId) -> f64 {
        self.topic_scores.get(topic).copied().unwrap_or(0.0)
    }
}

/// An interest is held when any of its source topics has reached the
/// threshold.
pub fn derive_interests(
    profile: &AdUserProfile,
    taxonomy: &Taxonomy,
    rules: &ProfileRules,
) -> BTreeSet<InterestId> {
    taxonomy
        .interests()
        .filter(|i| {
            i.source_topics
                .iter()
                .any(|t| profile.score(t) >= rules.interest_threshold)
        })
        .map(|i| i.id.clone())
        .collect()
}

pub fn derive_audiences(profile: &AdUserProfile, taxonomy: &Taxonomy) -> BTreeSet<AudienceId> {
    taxonomy.qualified_audiences(&profile.interests)
}
