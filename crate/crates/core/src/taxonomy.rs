//! Topics, interest categories and affinity audiences.
//!
//! A page carries topics; a user's accumulated topics imply interests
//! (through each interest's `source_topics` edges); interests qualify a
//! user for audiences once at least `qualify_rule` of an audience's
//! qualifying interests are held. All three are separate id namespaces.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::ids::{AudienceId, InterestId, TopicId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topic {
    pub id: TopicId,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<TopicId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterestCategory {
    pub id: InterestId,
    pub name: String,
    pub source_topics: BTreeSet<TopicId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffinityAudience {
    pub id: AudienceId,
    pub name: String,
    pub qualifying_interests: BTreeSet<InterestId>,
    /// Minimum number of qualifying interests a profile must hold.
    #[serde(default = "default_qualify_rule")]
    pub qualify_rule: u32,
}

fn default_qualify_rule() -> u32 {
    1
}

impl AffinityAudience {
    pub fn qualifies(&self, interests: &BTreeSet<InterestId>) -> bool {
        let held = self
            .qualifying_interests
            .iter()
            .filter(|i| interests.contains(*i))
            .count();
        held >= self.qualify_rule as usize
    }
}

/// Unvalidated taxonomy as it appears in a scenario document.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxonomyDoc {
    #[serde(default)]
    pub topics: Vec<Topic>,
    #[serde(default)]
    pub interests: Vec<InterestCategory>,
    #[serde(default)]
    pub audiences: Vec<AffinityAudience>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TaxonomyError {
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
    #[error("{pointer}: {what} must not be empty")]
    Empty { pointer: String, what: &'static str },
    #[error("{pointer}: qualify_rule must be at least 1")]
    QualifyRule { pointer: String },
    #[error("{pointer}: topic parent links form a cycle through `{id}`")]
    Cycle { pointer: String, id: String },
    #[error("unknown interest id `{0}`")]
    UnknownInterest(InterestId),
}

/// Validated, immutable taxonomy. Serializes back to a [`TaxonomyDoc`] with
/// entries in id order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(into = "TaxonomyDoc")]
pub struct Taxonomy {
    topics: BTreeMap<TopicId, Topic>,
    interests: BTreeMap<InterestId, InterestCategory>,
    audiences: BTreeMap<AudienceId, AffinityAudience>,
}

impl From<Taxonomy> for TaxonomyDoc {
    fn from(t: Taxonomy) -> Self {
        TaxonomyDoc {
            topics: t.topics.into_values().collect(),
            interests: t.interests.into_values().collect(),
            audiences: t.audiences.into_values().collect(),
        }
    }
}

impl<'de> Deserialize<'de> for Taxonomy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = TaxonomyDoc::deserialize(d)?;
        load_taxonomy(doc).map_err(serde::de::Error::custom)
    }
}

/// Validates a taxonomy document. Error pointers are relative to the
/// document root.
pub fn load_taxonomy(doc: TaxonomyDoc) -> Result<Taxonomy, TaxonomyError> {
    Taxonomy::from_doc(doc, "")
}

impl Taxonomy {
    /// Validates `doc`, prefixing every error pointer with `base` (for
    /// example `/taxonomy` when the document is embedded in a scenario).
    pub fn from_doc(doc: TaxonomyDoc, base: &str) -> Result<Taxonomy, TaxonomyError> {
        let mut topics = BTreeMap::new();
        for (i, t) in doc.topics.into_iter().enumerate() {
            if topics.contains_key(&t.id) {
                return Err(TaxonomyError::DuplicateId {
                    pointer: format!("{base}/topics/{i}/id"),
                    kind: "topic",
                    id: t.id.0,
                });
            }
            topics.insert(t.id.clone(), (i, t));
        }
        for (i, t) in topics.values() {
            if let Some(p) = &t.parent {
                if !topics.contains_key(p) {
                    return Err(TaxonomyError::DanglingReference {
                        pointer: format!("{base}/topics/{i}/parent"),
                        kind: "topic",
                        id: p.0.clone(),
                    });
                }
            }
        }
        // Walk each parent chain; a chain longer than the topic count cycles.
        for (i, t) in topics.values() {
            let mut cur = t.parent.as_ref();
            let mut steps = 0usize;
            while let Some(p) = cur {
                steps += 1;
                if steps > topics.len() {
                    return Err(TaxonomyError::Cycle {
                        pointer: format!("{base}/topics/{i}/parent"),
                        id: t.id.0.clone(),
                    });
                }
                cur = topics.get(p).and_then(|(_, pt)| pt.parent.as_ref());
            }
        }

        let mut interests = BTreeMap::new();
        for (i, interest) in doc.interests.into_iter().enumerate() {
            if interests.contains_key(&interest.id) {
                return Err(TaxonomyError::DuplicateId {
                    pointer: format!("{base}/interests/{i}/id"),
                    kind: "interest",
                    id: interest.id.0,
                });
            }
            if interest.source_topics.is_empty() {
                return Err(TaxonomyError::Empty {
                    pointer: format!("{base}/interests/{i}/source_topics"),
                    what: "source_topics",
                });
            }
            if let Some(missing) = interest
                .source_topics
                .iter()
                .find(|t| !topics.contains_key(*t))
            {
                return Err(TaxonomyError::DanglingReference {
                    pointer: format!("{base}/interests/{i}/source_topics"),
                    kind: "topic",
                    id: missing.0.clone(),
                });
            }
            interests.insert(interest.id.clone(), interest);
        }

        let mut audiences = BTreeMap::new();
        for (i, audience) in doc.audiences.into_iter().enumerate() {
            if audiences.contains_key(&audience.id) {
                return Err(TaxonomyError::DuplicateId {
                    pointer: format!("{base}/audiences/{i}/id"),
                    kind: "audience",
                    id: audience.id.0,
                });
            }
            if audience.qualifying_interests.is_empty() {
                return Err(TaxonomyError::Empty {
                    pointer: format!("{base}/audiences/{i}/qualifying_interests"),
                    what: "qualifying_interests",
                });
            }
            if audience.qualify_rule == 0 {
                return Err(TaxonomyError::QualifyRule {
                    pointer: format!("{base}/audiences/{i}/qualify_rule"),
                });
            }
            if let Some(missing) = audience
                .qualifying_interests
                .iter()
                .find(|x| !interests.contains_key(*x))
            {
                return Err(TaxonomyError::DanglingReference {
                    pointer: format!("{base}/audiences/{i}/qualifying_interests"),
                    kind: "interest",
                    id: missing.0.clone(),
                });
            }
            audiences.insert(audience.id.clone(), audience);
        }

        Ok(Taxonomy {
            topics: topics.into_iter().map(|(k, (_, t))| (k, t)).collect(),
            interests,
            audiences,
        })
    }

    pub fn topic(&self, id: &TopicId) -> Option<&Topic> {
        self.topics.get(id)
    }

    pub fn interest(&self, id: &InterestId) -> Option<&InterestCategory> {
        self.interests.get(id)
    }

    pub fn audience(&self, id: &AudienceId) -> Option<&AffinityAudience> {
        self.audiences.get(id)
    }

    pub fn topics(&self) -> impl Iterator<Item = &Topic> {
        self.topics.values()
    }

    pub fn interests(&self) -> impl Iterator<Item = &InterestCategory> {
        self.interests.values()
    }

    pub fn audiences(&self) -> impl Iterator<Item = &AffinityAudience> {
        self.audiences.values()
    }

    pub fn has_topic(&self, id: &TopicId) -> bool {
        self.topics.contains_key(id)
    }

    pub fn has_audience(&self, id: &AudienceId) -> bool {
        self.audiences.contains_key(id)
    }

    /// Audiences for which `interests` holds at least `qualify_rule` of the
    /// qualifying interests.
    pub fn audiences_for_interests(
        &self,
        interests: &BTreeSet<InterestId>,
    ) -> Result<BTreeSet<AudienceId>, TaxonomyError> {
        if let Some(unknown) = interests.iter().find(|i| !self.interests.contains_key(*i)) {
            return Err(TaxonomyError::UnknownInterest(unknown.clone()));
        }
        Ok(self.qualified_audiences(interests))
    }

    /// Same as [`Self::audiences_for_interests`] but silently ignores ids the
    /// taxonomy does not know.
    pub(crate) fn qualified_audiences(
        &self,
        interests: &BTreeSet<InterestId>,
    ) -> BTreeSet<AudienceId> {
        self.audiences
            .values()
            .filter(|a| a.qualifies(interests))
            .map(|a| a.id.clone())
            .collect()
    }
}

/// Free-function form of [`Taxonomy::audiences_for_interests`].
pub fn audiences_for_interests(
    taxonomy: &Taxonomy,
    interests: &BTreeSet<InterestId>,
) -> Result<BTreeSet<AudienceId>, TaxonomyError> {
    taxonomy.audiences_for_interests(interests)
}
