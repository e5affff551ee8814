use alloc::collections::BTreeMap;
use alloc::string::String;

use super::{Attribution, AttributionResult, TrapError};
use crate::gdn::VisitLogEntry;
use crate::ids::NetworkId;

/// Reverses identity -> argument, rejecting arguments shared by two
/// identities.
pub(super) fn invert(
    invitations: &BTreeMap<String, String>,
) -> Result<BTreeMap<&str, &str>, TrapError> {
    let mut by_arg: BTreeMap<&str, &str> = BTreeMap::new();
    for (who, arg) in invitations {
        if let Some(first) = by_arg.insert(arg.as_str(), who.as_str()) {
            return Err(TrapError::DuplicateTrackingArg {
                arg: arg.clone(),
                first: first.into(),
                second: who.clone(),
            });
        }
    }
    Ok(by_arg)
}

/// Binds network ids to invited identities through the unique argument
/// each invitation carried. The first tracked visit of a network id wins.
pub fn resolve_tracked_visits(
    entries: &[VisitLogEntry],
    invitations: &BTreeMap<String, String>,
) -> Result<BTreeMap<NetworkId, String>, TrapError> {
    let by_arg = invert(invitations)?;
    let mut out = BTreeMap::new();
    for e in entries {
        let Some(arg) = e.tracking_arg.as_deref() else {
            continue;
        };
        if let Some(who) = by_arg.get(arg) {
            out.entry(e.network_id.clone())
                .or_insert_with(|| String::from(*who));
        }
    }
    Ok(out)
}

/// Identity -> attribution for every bound visitor present in `result`.
pub fn bind_identities(
    bindings: &BTreeMap<NetworkId, String>,
    result: &AttributionResult,
) -> BTreeMap<String, Attribution> {
    bindings
        .iter()
        .filter_map(|(net, who)| {
            result
                .assignments
                .get(net)
                .map(|a| (who.clone(), a.clone()))
        })
        .collect()
}
