use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{run_scenario, Scenario, ScenarioError, SimError, TraceSummary};
use crate::marketplace::Bid;
use crate::money::Money;
use crate::trap::{evaluate, AttackSummary};

/// Stream used for visit retiming, kept apart from the run's own stream.
const RETIME_STREAM: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKey {
    WindowLength,
    /// Attack visits per hour; visits are re-drawn as a Poisson process.
    VisitRate,
    /// Keeps the first N probed audiences.
    AudienceCount,
    /// CPM of every non-attacker ad group; 0 removes those campaigns.
    RivalBid,
}

impl GridKey {
    pub const ALL: [GridKey; 4] = [
        GridKey::WindowLength,
        GridKey::VisitRate,
        GridKey::AudienceCount,
        GridKey::RivalBid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GridKey::WindowLength => "window_length",
            GridKey::VisitRate => "visit_rate",
            GridKey::AudienceCount => "audience_count",
            GridKey::RivalBid => "rival_bid",
        }
    }
}

impl fmt::Display for GridKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GridKey {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GridKey::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| SweepError::UnknownKey(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub key: GridKey,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SweepError {
    #[error("unknown grid key `{0}`")]
    UnknownKey(String),
    #[error("no seeds")]
    NoSeeds,
    #[error("grid key `{key}` has no values")]
    EmptyAxis { key: GridKey },
    #[error("invalid value {value} for grid key `{key}`")]
    BadValue { key: GridKey, value: f64 },
    #[error("grid key `{0}` needs an attack section")]
    NoAttack(GridKey),
    #[error("cell {cell}: {source}")]
    Scenario { cell: usize, source: ScenarioError },
    #[error("cell {cell}: {source}")]
    Run { cell: usize, source: SimError },
}

/// One grid point under one seed, with the scenario already rewritten.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub index: usize,
    pub params: Vec<(GridKey, f64)>,
    pub seed: u64,
    pub scenario: Scenario,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: usize,
    pub seed: u64,
    pub params: Vec<(GridKey, f64)>,
    pub trace: TraceSummary,
    /// Absent when the template has no attack section.
    pub attack: Option<AttackSummary>,
}

/// Cartesian product of the axes, crossed with the seeds. An empty grid
/// expands to nothing.
pub fn expand_grid(
    template: &Scenario,
    grid: &[GridAxis],
    seeds: &[u64],
) -> Result<Vec<SweepCell>, SweepError> {
    if seeds.is_empty() {
        return Err(SweepError::NoSeeds);
    }
    if grid.is_empty() {
        return Ok(Vec::new());
    }
    for axis in grid {
        if axis.values.is_empty() {
            return Err(SweepError::EmptyAxis { key: axis.key });
        }
    }
    let mut points: Vec<Vec<(GridKey, f64)>> = alloc::vec![Vec::new()];
    for axis in grid {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((axis.key, *v));
                    q
                })
            })
            .collect();
    }
    let mut cells = Vec::with_capacity(points.len() * seeds.len());
    for params in points {
        for &seed in seeds {
            let index = cells.len();
            let mut scenario = template.clone();
            scenario.seed = seed;
            for &(key, value) in &params {
                apply(&mut scenario, key, value)?;
            }
            scenario.validate().map_err(|source| SweepError::Scenario {
                cell: index,
                source,
            })?;
            cells.push(SweepCell {
                index,
                params: params.clone(),
                seed,
                scenario,
            });
        }
    }
    Ok(cells)
}

fn whole(key: GridKey, value: f64) -> Result<u64, SweepError> {
    if value.is_finite() && value >= 0.0 && libm::trunc(value) == value {
        Ok(value as u64)
    } else {
        Err(SweepError::BadValue { key, value })
    }
}

fn apply(scenario: &mut Scenario, key: GridKey, value: f64) -> Result<(), SweepError> {
    match key {
        GridKey::WindowLength => {
            let len = whole(key, value)?;
            if len == 0 {
                return Err(SweepError::BadValue { key, value });
            }
            scenario.window_length_s = len as i64;
        }
        GridKey::AudienceCount => {
            let n = whole(key, value)? as usize;
            let attack = scenario.attack.as_mut().ok_or(SweepError::NoAttack(key))?;
            if n == 0 {
                return Err(SweepError::BadValue { key, value });
            }
            attack.audiences_to_probe.truncate(n);
        }
        GridKey::RivalBid => {
            let amount = Money::from_f64(value).ok_or(SweepError::BadValue { key, value })?;
            if amount.is_zero() {
                scenario.campaigns.clear();
            } else {
                for g in scenario
                    .campaigns
                    .iter_mut()
                    .flat_map(|c| c.ad_groups.iter_mut())
                {
                    g.bid = Bid::cpm(amount);
                }
            }
        }
        GridKey::VisitRate => {
            if !(value.is_finite() && value > 0.0) {
                return Err(SweepError::BadValue { key, value });
            }
            retime(scenario, value);
        }
    }
    Ok(())
}

/// Replaces attack-visit timestamps with Poisson arrivals at `per_hour`,
/// keeping the original global visit order. The horizon grows if needed.
fn retime(scenario: &mut Scenario, per_hour: f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    rng.set_stream(RETIME_STREAM);
    let mut slots: Vec<(i64, usize, usize)> = Vec::new();
    for (u, user) in scenario.users.iter().enumerate() {
        for (k, v) in user.attack_visits.iter().enumerate() {
            slots.push((v.timestamp, u, k));
        }
    }
    slots.sort_by(|a, b| {
        (a.0, &scenario.users[a.1].id, a.2).cmp(&(b.0, &scenario.users[b.1].id, b.2))
    });

    let mean_gap = 3600.0 / per_hour;
    let mut clock = 0.0f64;
    let mut last_per_user: Vec<Option<i64>> = alloc::vec![None; scenario.users.len()];
    let mut latest = 0i64;
    for (_, u, k) in slots {
        let draw: f64 = rng.gen();
        clock += -libm::log(1.0 - draw) * mean_gap;
        let mut t = libm::floor(clock) as i64;
        if let Some(prev) = last_per_user[u] {
            t = t.max(prev + 1);
        }
        last_per_user[u] = Some(t);
        latest = latest.max(t);
        scenario.users[u].attack_visits[k].timestamp = t;
    }
    if latest >= scenario.horizon_s {
        scenario.horizon_s = latest + 1;
    }
}

/// Runs one cell and scores the attack against the run's ground truth.
pub fn run_cell(cell: &SweepCell) -> Result<SweepRow, SweepError> {
    let run_err = |source| SweepError::Run {
        cell: cell.index,
        source,
    };
    let trace = run_scenario(&cell.scenario).map_err(run_err)?;
    let attack = match &cell.scenario.attack {
        Some(config) => {
            let truth = trace.truth_by_network();
            let outcome = evaluate(&trace.attacker_view(), config, Some(&truth))
                .map_err(|e| run_err(SimError::Trap(e)))?;
            Some(outcome.summary)
        }
        None => None,
    };
    Ok(SweepRow {
        cell: cell.index,
        seed: cell.seed,
        params: cell.params.clone(),
        trace: trace.summary(),
        attack,
    })
}

/// Sequential sweep; callers wanting parallelism can map [`run_cell`] over
/// [`expand_grid`] themselves.
pub fn sweep(
    template: &Scenario,
    grid: &[GridAxis],
    seeds: &[u64],
) -> Result<Vec<SweepRow>, SweepError> {
    expand_grid(template, grid, seeds)?
        .iter()
        .map(run_cell)
        .collect()
}
