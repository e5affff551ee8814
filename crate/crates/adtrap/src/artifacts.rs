//! CSV and JSON writers. All files are UTF-8 with `\n` line endings, so
//! rewriting the same run produces identical bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use adtrap_core::gdn::VisitLogEntry;
use adtrap_core::ids::AudienceId;
use adtrap_core::marketplace::{AudienceCounterReport, ImpressionRecord};
use adtrap_core::simulation::{GridKey, SweepRow};
use adtrap_core::trap::{AttackOutcome, Attribution, Label};
use serde::Serialize;

use crate::error::CliError;

fn writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|source| CliError::Csv {
            path: path.to_path_buf(),
            source,
        })
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let wrap = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = writer(path)?;
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(row).map_err(wrap)?;
    }
    w.flush().map_err(|e| wrap(e.into()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let json_err = |source| CliError::Json {
        path: path.to_path_buf(),
        source,
    };
    let mut bytes = serde_json::to_vec_pretty(value).map_err(json_err)?;
    bytes.push(b'\n');
    let mut f = fs::File::create(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    f.write_all(&bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One row per (window, audience) of a single campaign.
pub fn write_reports(path: &Path, reports: &[AudienceCounterReport]) -> Result<(), CliError> {
    let rows = reports.iter().flat_map(|r| {
        r.deltas.iter().map(move |(a, d)| {
            vec![
                r.window_index.to_string(),
                r.window_start.to_string(),
                r.window_end.to_string(),
                a.to_string(),
                d.to_string(),
                r.cumulative.get(a).copied().unwrap_or(0).to_string(),
            ]
        })
    });
    write_rows(
        path,
        &[
            "window_index",
            "window_start",
            "window_end",
            "audience_id",
            "delta",
            "cumulative",
        ],
        rows,
    )
}

pub fn write_log(path: &Path, log: &[VisitLogEntry]) -> Result<(), CliError> {
    let rows = log.iter().map(|e| {
        vec![
            e.timestamp.to_string(),
            e.network_id.to_string(),
            e.page.to_string(),
            e.referral
                .as_ref()
                .map(ToString::to_string)
                .unwrap_or_default(),
            e.tracking_arg.clone().unwrap_or_default(),
        ]
    });
    write_rows(
        path,
        &[
            "timestamp",
            "network_id",
            "page_id",
            "referral",
            "tracking_arg",
        ],
        rows,
    )
}

pub fn write_impressions(path: &Path, impressions: &[ImpressionRecord]) -> Result<(), CliError> {
    let rows = impressions.iter().map(|i| {
        vec![
            i.timestamp.to_string(),
            i.campaign.to_string(),
            i.ad_group.to_string(),
            i.ad.to_string(),
            i.website.to_string(),
            i.page.to_string(),
            i.audience.to_string(),
            i.cookie.to_string(),
            i.cost.to_string(),
            i.clicked.to_string(),
        ]
    });
    write_rows(
        path,
        &[
            "timestamp",
            "campaign_id",
            "ad_group_id",
            "ad_id",
            "website_id",
            "page_id",
            "audience_id",
            "cookie_id",
            "cost",
            "clicked",
        ],
        rows,
    )
}

fn label(l: &Label) -> String {
    l.audience()
        .map_or_else(|| "none".to_string(), ToString::to_string)
}

fn audience_set(set: &BTreeSet<AudienceId>) -> String {
    if set.is_empty() {
        "none".to_string()
    } else {
        set.iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Status, inferred value and, when scored, ground truth per visitor.
pub fn write_attribution(path: &Path, outcome: &AttackOutcome) -> Result<(), CliError> {
    let scores: BTreeMap<_, _> = outcome.scores.iter().map(|s| (&s.network_id, s)).collect();
    let rows = outcome.result.assignments.iter().map(|(v, a)| {
        let (status, value) = match a {
            Attribution::Exact(l) => ("exact", label(l)),
            Attribution::Ambiguous(s) => (
                "ambiguous",
                s.iter().map(label).collect::<Vec<_>>().join(";"),
            ),
            Attribution::Unknown => ("unknown", String::new()),
        };
        let score = scores.get(v);
        vec![
            v.to_string(),
            status.to_string(),
            value,
            score.map(|s| audience_set(&s.truth)).unwrap_or_default(),
            score.map(|s| s.correct.to_string()).unwrap_or_default(),
        ]
    });
    write_rows(
        path,
        &[
            "network_id",
            "status",
            "audience_or_set",
            "ground_truth_audience",
            "correct",
        ],
        rows,
    )
}

/// Grid columns follow the order the keys were given in.
pub fn write_sweep(path: &Path, keys: &[GridKey], rows: &[SweepRow]) -> Result<(), CliError> {
    let mut header = vec!["cell", "seed"];
    header.extend(keys.iter().map(|k| k.as_str()));
    header.extend([
        "impressions",
        "attacker_impressions",
        "log_entries",
        "windows",
        "visitors",
        "exact",
        "ambiguous",
        "unknown",
        "correct",
        "accuracy",
    ]);
    let body = rows.iter().map(|r| {
        let mut row = vec![r.cell.to_string(), r.seed.to_string()];
        for k in keys {
            let v = r.params.iter().find(|(p, _)| p == k).map(|(_, v)| *v);
            row.push(v.map(|v| v.to_string()).unwrap_or_default());
        }
        row.extend([
            r.trace.impressions.to_string(),
            r.trace.attacker_impressions.to_string(),
            r.trace.log_entries.to_string(),
            r.trace.windows.to_string(),
        ]);
        match &r.attack {
            Some(a) => row.extend([
                a.visitors.to_string(),
                a.exact.to_string(),
                a.ambiguous.to_string(),
                a.unknown.to_string(),
                a.correct.to_string(),
                a.accuracy.map(|x| format!("{x:?}")).unwrap_or_default(),
            ]),
            None => row.extend(std::iter::repeat_n(String::new(), 6)),
        }
        row
    });
    write_rows(path, &header, body)
}

/// File-name-safe rendering of an id.
pub fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    Ok(dir.to_path_buf())
}
