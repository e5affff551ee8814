//! Opaque identifiers. Each namespace gets its own newtype so a topic id can
//! never be handed to something expecting an audience id.

use alloc::string::String;
use core::fmt;
use serde::{Deserialize, Serialize};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl core::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.into())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

id_type!(
    /// Content topic assigned to pages.
    TopicId
);
id_type!(
    /// Interest category attributed to users.
    InterestId
);
id_type!(
    /// Targetable affinity audience.
    AudienceId
);
id_type!(PageId);
id_type!(SiteId);
id_type!(
    /// Ad-network cookie. Only the ad network ever sees it.
    CookieId
);
id_type!(
    /// Pseudonymous network address as seen by a website log. Distinct
    /// namespace from [`CookieId`].
    NetworkId
);
id_type!(UserId);
id_type!(CampaignId);
id_type!(AdGroupId);
id_type!(AdId);
id_type!(RegionTag);
