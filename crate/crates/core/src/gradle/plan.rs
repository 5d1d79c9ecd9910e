//! Turning an app-store source listing into a clone plan for external
//! checkout tooling.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VcsKind {
    Git,
    Other,
}

impl fmt::Display for VcsKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VcsKind::Git => "git",
            VcsKind::Other => "other",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CloneEntry {
    pub app_id: String,
    pub source_url: String,
    pub vcs_kind: VcsKind,
}

#[derive(Debug, Default)]
pub struct ClonePlan {
    pub entries: Vec<CloneEntry>,
    pub malformed_lines: u64,
}

const GIT_FORGE_HOSTS: [&str; 5] = [
    "github.com",
    "gitlab.com",
    "bitbucket.org",
    "codeberg.org",
    "git.sr.ht",
];

/// Url-pattern heuristic only; whether the remote actually serves git is
/// the clone tool's problem.
pub fn vcs_kind_of(source_url: &str) -> VcsKind {
    if source_url.ends_with(".git") {
        return VcsKind::Git;
    }
    let Ok(parsed) = url::Url::parse(source_url) else {
        return VcsKind::Other;
    };
    if parsed.scheme() == "git" {
        return VcsKind::Git;
    }
    if parsed.scheme() != "http" && parsed.scheme() != "https" {
        return VcsKind::Other;
    }
    match parsed.host_str() {
        Some(host) => {
            let host = host.trim_start_matches("www.");
            if GIT_FORGE_HOSTS.contains(&host) || host.starts_with("git.") {
                VcsKind::Git
            } else {
                VcsKind::Other
            }
        }
        None => VcsKind::Other,
    }
}

/// Parses a line-oriented "app_id,source_url" listing. Malformed lines are
/// skipped and counted; repeated app ids keep their first occurrence.
pub fn build_clone_plan<R: Read>(source_listing: R) -> std::io::Result<ClonePlan> {
    let mut plan = ClonePlan::default();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for line in BufReader::new(source_listing).lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((app_id, source_url)) = line.split_once(',') else {
            plan.malformed_lines += 1;
            continue;
        };
        let app_id = app_id.trim();
        let source_url = source_url.trim();
        if app_id.is_empty() || source_url.is_empty() {
            plan.malformed_lines += 1;
            continue;
        }
        if !seen.insert(app_id.to_string()) {
            continue;
        }
        plan.entries.push(CloneEntry {
            app_id: app_id.to_string(),
            source_url: source_url.to_string(),
            vcs_kind: vcs_kind_of(source_url),
        });
    }
    Ok(plan)
}

pub fn write_clone_plan_csv(plan: &ClonePlan, destination: &Path) -> csv::Result<()> {
    let mut writer = csv::Writer::from_path(destination)?;
    writer.write_record(["app_id", "source_url", "vcs_kind"])?;
    for entry in &plan.entries {
        writer.write_record([
            entry.app_id.as_str(),
            entry.source_url.as_str(),
            &entry.vcs_kind.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
