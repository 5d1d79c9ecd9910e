//! Directory scanning and whole-corpus mining.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use walkdir::WalkDir;

use crate::model::PackageName;

use super::extract::extract_dependencies;
use super::extract_repositories;
use super::{ConfigurationSet, GradleDependency, RepoDecl};

/// Recursively lists build files (`build.gradle` and `build.gradle.kts`)
/// under `root_dir`, sorted by path.
pub fn scan_project(root_dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    if !root_dir.exists() {
        return Err(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("project root {} does not exist", root_dir.display()),
        ));
    }
    let mut files = Vec::new();
    for entry in WalkDir::new(root_dir) {
        let entry = match entry {
            Ok(entry) => entry,
            Err(err) => {
                log::warn!("skipping unreadable entry under {}: {err}", root_dir.display());
                continue;
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy();
        if name == "build.gradle" || name == "build.gradle.kts" {
            files.push(entry.into_path());
        }
    }
    files.sort();
    Ok(files)
}

/// Union of everything mined from a set of project roots. Outputs are kept
/// in sorted sets so the result does not depend on traversal order.
#[derive(Debug, Default)]
pub struct MiningOutcome {
    pub names: BTreeSet<PackageName>,
    pub repositories: BTreeSet<RepoDecl>,
    pub dependencies: Vec<GradleDependency>,
    pub skipped_lines: u64,
    /// Project roots (or files) that could not be read; mining continued.
    pub failures: Vec<(PathBuf, String)>,
}

pub fn mine_projects(dirs: &[PathBuf], configurations: ConfigurationSet) -> MiningOutcome {
    let mut outcome = MiningOutcome::default();
    for dir in dirs {
        let files = match scan_project(dir) {
            Ok(files) => files,
            Err(err) => {
                outcome.failures.push((dir.clone(), err.to_string()));
                continue;
            }
        };
        for file in files {
            let text = match std::fs::read_to_string(&file) {
                Ok(text) => text,
                Err(err) => {
                    outcome.failures.push((file.clone(), err.to_string()));
                    continue;
                }
            };
            let report = extract_dependencies(&text, &file, configurations);
            outcome.skipped_lines += report.skipped_lines;
            for dependency in report.dependencies {
                match PackageName::parse(&dependency.coordinate.group) {
                    Ok(name) => {
                        outcome.names.insert(name);
                    }
                    Err(err) => log::warn!(
                        "group \"{}\" in {} is not a valid package name: {err}",
                        dependency.coordinate.group,
                        file.display()
                    ),
                }
                outcome.dependencies.push(dependency);
            }
            outcome.repositories.extend(extract_repositories(&text));
        }
    }
    outcome
        .dependencies
        .sort_by(|a, b| (&a.source_file, a.line).cmp(&(&b.source_file, b.line)));
    outcome
}

/// CSV report of every extracted declaration with its provenance.
pub fn write_dependency_report(
    dependencies: &[GradleDependency],
    destination: &Path,
) -> csv::Result<()> {
    let mut writer = csv::Writer::from_path(destination)?;
    writer.write_record(["configuration", "group", "artifact", "version", "file", "line"])?;
    for dep in dependencies {
        writer.write_record([
            dep.configuration.as_str(),
            dep.coordinate.group.as_str(),
            dep.coordinate.artifact.as_str(),
            dep.coordinate.version.as_str(),
            &dep.source_file.display().to_string(),
            &dep.line.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
