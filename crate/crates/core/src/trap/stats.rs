use serde::{Deserialize, Serialize};

use super::{TrapError, WindowObservation};
use crate::ids::AudienceId;

/// Impression totals for two complementary audiences over a group of
/// visitors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub count_x: u64,
    pub count_y: u64,
    /// `count_x / (count_x + count_y)`; `None` when both are zero.
    pub fraction_x: Option<f64>,
}

pub fn group_statistics(
    observations: &[WindowObservation],
    x: &AudienceId,
    y: &AudienceId,
) -> Result<GroupStats, TrapError> {
    if x == y {
        return Err(TrapError::SameAudience);
    }
    for a in [x, y] {
        if !observations.iter().any(|w| w.deltas.contains_key(a)) {
            return Err(TrapError::NotProbed(a.clone()));
        }
    }
    let total =
        |a: &AudienceId| -> u64 { observations.iter().filter_map(|w| w.deltas.get(a)).sum() };
    let (count_x, count_y) = (total(x), total(y));
    let fraction_x = match count_x + count_y {
        0 => None,
        n => Some(count_x as f64 / n as f64),
    };
    Ok(GroupStats {
        count_x,
        count_y,
        fraction_x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeMap;
    use alloc::vec::Vec;

    fn window(k: i64, x: u64, y: u64) -> WindowObservation {
        let mut deltas = BTreeMap::new();
        deltas.insert(AudienceId::from("family"), x);
        deltas.insert(AudienceId::from("travel"), y);
        WindowObservation {
            window_index: k,
            window_start: k * 1800,
            window_end: (k + 1) * 1800,
            deltas,
            visits: Vec::new(),
        }
    }

    #[test]
    fn three_to_one() {
        let obs = [window(0, 2, 0), window(1, 1, 1)];
        let s = group_statistics(&obs, &"family".into(), &"travel".into()).unwrap();
        assert_eq!((s.count_x, s.count_y, s.fraction_x), (3, 1, Some(0.75)));
    }

    #[test]
    fn undefined_when_silent() {
        let s = group_statistics(&[window(0, 0, 0)], &"family".into(), &"travel".into()).unwrap();
        assert_eq!(s.fraction_x, None);
    }

    #[test]
    fn all_x() {
        let s = group_statistics(&[window(0, 4, 0)], &"family".into(), &"travel".into()).unwrap();
        assert_eq!(s.fraction_x, Some(1.0));
    }

    #[test]
    fn argument_errors() {
        let obs = [window(0, 1, 0)];
        assert_eq!(
            group_statistics(&obs, &"family".into(), &"family".into()),
            Err(TrapError::SameAudience)
        );
        assert_eq!(
            group_statistics(&obs, &"family".into(), &"pets".into()),
            Err(TrapError::NotProbed("pets".into()))
        );
    }
}
