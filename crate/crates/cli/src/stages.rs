//! The pipeline stages behind each subcommand.
//!
//! Every stage follows the same protocol: digest its inputs, skip if the
//! journal already has a completed record for that digest, otherwise run,
//! write outputs atomically, and append a journal record. The running
//! total tracks the cumulative allowlist across the five source stages;
//! `duplicates` is defined as `produced + running_total(before) -
//! running_total(after)`, i.e. everything a stage emitted that did not
//! grow the total, which keeps the accounting identity exact for mining,
//! merging, and refinement alike.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

use allowlistforge_core::classify::{read_fqcn_file, classification_report, write_labeled_csv, write_report_csv};
use allowlistforge_core::crawl::{crawl_google_index, crawl_gradle_plugin_portal, FetchPolicy};
use allowlistforge_core::gradle::plan::{build_clone_plan, write_clone_plan_csv};
use allowlistforge_core::gradle::scan::{mine_projects, write_dependency_report};
use allowlistforge_core::gradle::ConfigurationSet;
use allowlistforge_core::maven::coordinate::MavenCoordinate;
use allowlistforge_core::maven::index::parse_index_export;
use allowlistforge_core::maven::repo::{CachingClient, HttpRepository, RepositoryClient};
use allowlistforge_core::maven::tree::{collect_transitive, resolve_tree};
use allowlistforge_core::model::{read_allowlist, render_allowlist, write_allowlist};
use allowlistforge_core::refine::write_removal_report;
use allowlistforge_core::{compute_stats, refine, AllowList, AllowListStore, PackageName};

use crate::journal::{
    now_ms, write_atomic, InputDigest, Journal, JournalError, StageRecord, SOURCE_STAGES,
};
use crate::pool::{run_parallel, TaskOutcome, WorkerConfig};

#[derive(Debug, Error)]
pub enum StageError {
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Journal(#[from] JournalError),
}

/// Settings shared by every stage, straight from the global CLI flags.
#[derive(Debug, Clone)]
pub struct StageContext {
    pub journal_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
    pub force: bool,
    pub retries: u32,
    pub backoff_ms: u64,
    pub politeness_ms: u64,
}

impl StageContext {
    pub fn fetch_policy(&self) -> FetchPolicy {
        FetchPolicy {
            max_retries: self.retries,
            backoff_base: Duration::from_millis(self.backoff_ms),
            politeness_delay: Duration::from_millis(self.politeness_ms),
            cache_dir: self.cache_dir.clone(),
            ..FetchPolicy::default()
        }
    }
}

/// What a stage run reports back to the terminal.
#[derive(Debug)]
pub struct StageSummary {
    pub stage: &'static str,
    pub produced: u64,
    pub duplicates: u64,
    pub running_total: u64,
    pub cached: bool,
    pub output: Option<PathBuf>,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

impl StageSummary {
    fn from_record(stage: &'static str, dir: &Path, record: &StageRecord) -> StageSummary {
        StageSummary {
            stage,
            produced: record.produced,
            duplicates: record.duplicates,
            running_total: record.running_total,
            cached: true,
            output: Some(dir.join(&record.output)),
            failures: Vec::new(),
            notes: vec!["inputs unchanged since the last completed run".to_string()],
        }
    }
}

fn failed(message: impl Into<String>) -> StageError {
    StageError::Failed(message.into())
}

fn require_file(path: &Path, what: &str) -> Result<(), StageError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(StageError::MissingInput(format!(
            "{what} {} does not exist",
            path.display()
        )))
    }
}

/// Skips the stage when its last completed record matches the current
/// digest and the recorded output is still present.
fn cached_record<'j>(
    ctx: &StageContext,
    journal: &'j Journal,
    stage: &str,
    digest: &str,
) -> Option<&'j StageRecord> {
    if ctx.force {
        return None;
    }
    let record = journal.last_completed(stage)?;
    if record.inputs_digest == digest && journal.dir().join(&record.output).is_file() {
        Some(record)
    } else {
        None
    }
}

fn record_failure(
    journal: &mut Journal,
    stage: &str,
    digest: &str,
    output: &str,
    started_ms: u64,
) -> Result<(), JournalError> {
    let running_total = journal.running_total();
    journal.append(StageRecord {
        stage: stage.to_string(),
        inputs_digest: digest.to_string(),
        output: output.to_string(),
        produced: 0,
        duplicates: 0,
        running_total,
        started_ms,
        finished_ms: now_ms(),
        completed: false,
    })
}

/// `produced + before - after`, saturating: a stage can only be blamed for
/// duplicates it actually processed.
fn duplicates_for(produced: u64, before: u64, after: u64) -> u64 {
    (produced as i128 + before as i128 - after as i128).max(0) as u64
}

fn names_output(stage: &str) -> String {
    format!("{stage}.txt")
}

/// Union of the name files of every completed source stage, read from
/// disk. Records whose output is not the stage's name file (the clone-plan
/// variant of mine-gradle) contribute nothing. `extra` joins the union
/// even without a completed record yet — the stage that just wrote its
/// file.
fn source_union(
    journal: &Journal,
    extra: Option<&str>,
) -> Result<BTreeSet<PackageName>, StageError> {
    let mut stages = journal.completed_source_stages();
    if let Some(stage) = extra {
        if !stages.iter().any(|s| s == stage) {
            stages.push(stage.to_string());
        }
    }
    let mut union = BTreeSet::new();
    for stage in stages {
        let file = names_output(&stage);
        if let Some(record) = journal.last_completed(&stage) {
            if record.output != file {
                continue;
            }
        }
        let path = journal.dir().join(&file);
        if !path.is_file() {
            log::warn!("journal lists {stage} as completed but {file} is gone; skipping it");
            continue;
        }
        let loaded = read_allowlist(&path)
            .map_err(|err| failed(format!("rereading {file}: {err}")))?;
        union.extend(loaded.list.into_entries());
    }
    Ok(union)
}

/// Common tail for the five mining/crawling stages: write the name file,
/// recompute the cumulative union, append the journal record.
#[allow(clippy::too_many_arguments)]
fn finish_source_stage(
    ctx: &StageContext,
    journal: &mut Journal,
    stage: &'static str,
    digest: String,
    names: BTreeSet<PackageName>,
    failures: Vec<String>,
    notes: Vec<String>,
    started_ms: u64,
) -> Result<StageSummary, StageError> {
    let output = names_output(stage);
    let path = ctx.journal_dir.join(&output);
    let list = AllowList::new(names);
    write_atomic(&path, render_allowlist(&list).as_bytes())
        .map_err(|err| failed(format!("writing {output}: {err}")))?;

    let before = journal.running_total();
    let after = source_union(journal, Some(stage))?.len() as u64;
    let produced = list.len() as u64;
    let duplicates = duplicates_for(produced, before, after);
    journal.append(StageRecord {
        stage: stage.to_string(),
        inputs_digest: digest,
        output,
        produced,
        duplicates,
        running_total: after,
        started_ms,
        finished_ms: now_ms(),
        completed: true,
    })?;

    Ok(StageSummary {
        stage,
        produced,
        duplicates,
        running_total: after,
        cached: false,
        output: Some(path),
        failures,
        notes,
    })
}

pub fn mine_maven(ctx: &StageContext, index_export: &Path) -> Result<StageSummary, StageError> {
    const STAGE: &str = "mine-maven";
    require_file(index_export, "index export")?;
    let mut journal = Journal::open(&ctx.journal_dir)?;
    let digest = InputDigest::new()
        .file(index_export)
        .map_err(|err| failed(format!("reading {}: {err}", index_export.display())))?
        .finish();
    if let Some(record) = cached_record(ctx, &journal, STAGE, &digest) {
        return Ok(StageSummary::from_record(STAGE, &ctx.journal_dir, record));
    }

    let started = now_ms();
    let file = match File::open(index_export) {
        Ok(file) => file,
        Err(err) => {
            record_failure(&mut journal, STAGE, &digest, &names_output(STAGE), started)?;
            return Err(failed(format!("opening {}: {err}", index_export.display())));
        }
    };
    let export = match parse_index_export(BufReader::new(file)) {
        Ok(export) => export,
        Err(err) => {
            record_failure(&mut journal, STAGE, &digest, &names_output(STAGE), started)?;
            return Err(failed(format!("parsing {}: {err}", index_export.display())));
        }
    };

    let coordinates = export.coordinates.len();
    let names = export.groups();
    let failures: Vec<String> = export
        .malformed
        .iter()
        .map(|(line, text)| format!("line {line}: unusable entry {text:?}"))
        .collect();
    let notes = vec![format!(
        "{coordinates} coordinates over {} distinct groups",
        names.len()
    )];
    finish_source_stage(ctx, &mut journal, STAGE, digest, names, failures, notes, started)
}

pub fn crawl_google(ctx: &StageContext, base_url: &str) -> Result<StageSummary, StageError> {
    const STAGE: &str = "crawl-google";
    let mut journal = Journal::open(&ctx.journal_dir)?;
    let digest = InputDigest::new().param("base-url", base_url).finish();
    if let Some(record) = cached_record(ctx, &journal, STAGE, &digest) {
        return Ok(StageSummary::from_record(STAGE, &ctx.journal_dir, record));
    }

    let started = now_ms();
    let result = match crawl_google_index(base_url, &ctx.fetch_policy()) {
        Ok(result) => result,
        Err(err) => {
            record_failure(&mut journal, STAGE, &digest, &names_output(STAGE), started)?;
            return Err(failed(format!("fetching the master index: {err}")));
        }
    };

    let failures: Vec<String> = result
        .failures
        .iter()
        .map(|(what, why)| format!("{what}: {why}"))
        .collect();
    let notes = vec![format!("{} page(s) fetched", result.pages_fetched)];
    finish_source_stage(
        ctx,
        &mut journal,
        STAGE,
        digest,
        result.names,
        failures,
        notes,
        started,
    )
}

pub fn crawl_portal(
    ctx: &StageContext,
    base_url: &str,
    max_pages: u32,
) -> Result<StageSummary, StageError> {
    const STAGE: &str = "crawl-portal";
    let mut journal = Journal::open(&ctx.journal_dir)?;
    let digest = InputDigest::new()
        .param("base-url", base_url)
        .param("max-pages", max_pages)
        .finish();
    if let Some(record) = cached_record(ctx, &journal, STAGE, &digest) {
        return Ok(StageSummary::from_record(STAGE, &ctx.journal_dir, record));
    }

    let started = now_ms();
    let result = crawl_gradle_plugin_portal(base_url, &ctx.fetch_policy(), max_pages);
    if result.names.is_empty() && !result.failures.is_empty() {
        record_failure(&mut journal, STAGE, &digest, &names_output(STAGE), started)?;
        let (what, why) = &result.failures[0];
        return Err(failed(format!("portal crawl got nothing: {what}: {why}")));
    }

    let failures: Vec<String> = result
        .failures
        .iter()
        .map(|(what, why)| format!("{what}: {why}"))
        .collect();
    let notes = vec![format!("{} page(s) fetched", result.pages_fetched)];
    finish_source_stage(
        ctx,
        &mut journal,
        STAGE,
        digest,
        result.names,
        failures,
        notes,
        started,
    )
}

#[derive(Debug, Clone)]
pub struct ResolveOptions {
    pub repo_url: String,
    pub timeout_secs: u64,
    pub jobs: Option<usize>,
    pub stop_after_stable_batches: Option<u32>,
}

pub fn resolve_deps(
    ctx: &StageContext,
    coords: &Path,
    options: &ResolveOptions,
) -> Result<StageSummary, StageError> {
    const STAGE: &str = "resolve-deps";
    require_file(coords, "coordinate list")?;
    let mut journal = Journal::open(&ctx.journal_dir)?;
    let digest = InputDigest::new()
        .file(coords)
        .map_err(|err| failed(format!("reading {}: {err}", coords.display())))?
        .param("repo-url", &options.repo_url)
        .param("timeout-secs", options.timeout_secs)
        .param(
            "stop-after-stable-batches",
            options
                .stop_after_stable_batches
                .map(|n| n.to_string())
                .unwrap_or_else(|| "off".to_string()),
        )
        .finish();
    if let Some(record) = cached_record(ctx, &journal, STAGE, &digest) {
        return Ok(StageSummary::from_record(STAGE, &ctx.journal_dir, record));
    }

    let started = now_ms();
    let text = match fs::read_to_string(coords) {
        Ok(text) => text,
        Err(err) => {
            record_failure(&mut journal, STAGE, &digest, &names_output(STAGE), started)?;
            return Err(failed(format!("reading {}: {err}", coords.display())));
        }
    };

    let mut targets = Vec::new();
    let mut failures = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match MavenCoordinate::parse(line) {
            Ok(coordinate) => targets.push(coordinate),
            Err(err) => failures.push(format!("line {}: {err}", index + 1)),
        }
    }

    let deadline = Duration::from_secs(options.timeout_secs.max(1));
    let config = match options.jobs {
        Some(jobs) => WorkerConfig::new(jobs, deadline),
        None => WorkerConfig::detect(deadline),
    };
    let repo = Arc::new(CachingClient::new(HttpRepository::new(
        options.repo_url.clone(),
        ctx.fetch_policy(),
    )));
    let store = Arc::new(AllowListStore::new());

    let total = targets.len();
    let mut resolved = 0usize;
    let mut skipped = 0usize;
    let mut stable_batches = 0u32;
    // One wave of workers per batch; saturation is judged batch by batch.
    let batch = config.jobs().max(1);
    let mut remaining: &[MavenCoordinate] = &targets;
    while !remaining.is_empty() {
        if let Some(limit) = options.stop_after_stable_batches {
            if stable_batches >= limit {
                skipped = remaining.len();
                break;
            }
        }
        let (chunk, rest) = remaining.split_at(batch.min(remaining.len()));
        remaining = rest;

        let before = store.len();
        let task_store = Arc::clone(&store);
        let task_repo = Arc::clone(&repo);
        let results = run_parallel(chunk.to_vec(), &config, move |target, cancel| {
            resolve_one(&target, &task_repo, deadline, &cancel).map(|groups| {
                let found = groups.len();
                task_store.submit(groups);
                found
            })
        });
        for (target, outcome) in results {
            match outcome {
                TaskOutcome::Done(_) => resolved += 1,
                TaskOutcome::Failed(message) => failures.push(format!("{target}: {message}")),
                TaskOutcome::TimedOut(limit) => {
                    failures.push(format!("{target}: timed out after {}s", limit.as_secs()))
                }
                TaskOutcome::Panicked(message) => {
                    failures.push(format!("{target}: resolver panicked: {message}"))
                }
            }
        }
        if store.len() == before {
            stable_batches += 1;
        } else {
            stable_batches = 0;
        }
    }

    if resolved == 0 && total > 0 {
        record_failure(&mut journal, STAGE, &digest, &names_output(STAGE), started)?;
        return Err(failed(format!(
            "no coordinate resolved; first failure: {}",
            failures.first().map(String::as_str).unwrap_or("none recorded")
        )));
    }

    let mut notes = vec![format!("{resolved}/{total} trees resolved")];
    if skipped > 0 {
        notes.push(format!(
            "stopped early after {stable_batches} stable batches; {skipped} coordinate(s) skipped"
        ));
    }
    finish_source_stage(
        ctx,
        &mut journal,
        STAGE,
        digest,
        store.snapshot().into_entries(),
        failures,
        notes,
        started,
    )
}

fn resolve_one(
    target: &MavenCoordinate,
    repo: &dyn RepositoryClient,
    deadline: Duration,
    cancel: &crate::pool::CancelFlag,
) -> Result<BTreeSet<PackageName>, String> {
    let target = if target.is_fully_versioned() {
        target.clone()
    } else {
        let metadata = repo
            .fetch_metadata(&target.group, &target.artifact)
            .map_err(|err| format!("metadata lookup failed: {err}"))?;
        let version = metadata
            .highest()
            .ok_or_else(|| "metadata lists no versions".to_string())?
            .to_string();
        MavenCoordinate::new(target.group.clone(), target.artifact.clone(), version)
    };
    if cancel.is_cancelled() {
        return Err("cancelled before resolution started".to_string());
    }
    let tree = resolve_tree(&target, repo, deadline).map_err(|err| err.to_string())?;
    Ok(collect_transitive(&tree))
}

pub fn mine_gradle_projects(
    ctx: &StageContext,
    projects_dir: &Path,
    extended: bool,
) -> Result<StageSummary, StageError> {
    const STAGE: &str = "mine-gradle";
    if !projects_dir.is_dir() {
        return Err(StageError::MissingInput(format!(
            "projects directory {} does not exist",
            projects_dir.display()
        )));
    }
    let mut journal = Journal::open(&ctx.journal_dir)?;

    let configurations = if extended {
        ConfigurationSet::Extended
    } else {
        ConfigurationSet::Standard
    };
    let projects = project_roots(projects_dir)
        .map_err(|err| failed(format!("listing {}: {err}", projects_dir.display())))?;

    // Digest over every build file found, so editing any project re-runs
    // the stage.
    let mut digest = InputDigest::new().param("configurations", format!("{configurations:?}"));
    for project in &projects {
        if let Ok(build_files) = allowlistforge_core::gradle::scan::scan_project(project) {
            for build_file in build_files {
                digest = digest
                    .file(&build_file)
                    .map_err(|err| failed(format!("reading {}: {err}", build_file.display())))?;
            }
        }
    }
    let digest = digest.finish();
    if let Some(record) = cached_record(ctx, &journal, STAGE, &digest) {
        return Ok(StageSummary::from_record(STAGE, &ctx.journal_dir, record));
    }

    let started = now_ms();
    let outcome = mine_projects(&projects, configurations);

    let dependency_report = ctx.journal_dir.join("gradle-dependencies.csv");
    if let Err(err) = write_dependency_report(&outcome.dependencies, &dependency_report) {
        log::warn!("could not write {}: {err}", dependency_report.display());
    }
    let repositories: Vec<String> = outcome
        .repositories
        .iter()
        .map(|decl| decl.to_string())
        .collect();
    write_atomic(
        &ctx.journal_dir.join("gradle-repositories.txt"),
        (repositories.join("\n") + "\n").as_bytes(),
    )
    .map_err(|err| failed(format!("writing gradle-repositories.txt: {err}")))?;

    let failures: Vec<String> = outcome
        .failures
        .iter()
        .map(|(path, why)| format!("{}: {why}", path.display()))
        .collect();
    let notes = vec![
        format!(
            "{} project(s), {} declaration(s), {} line(s) skipped",
            projects.len(),
            outcome.dependencies.len(),
            outcome.skipped_lines
        ),
        format!("{} repository declaration(s)", repositories.len()),
    ];
    finish_source_stage(
        ctx,
        &mut journal,
        STAGE,
        digest,
        outcome.names,
        failures,
        notes,
        started,
    )
}

/// A directory that itself contains a build file is one project; otherwise
/// every immediate subdirectory is treated as a checkout.
fn project_roots(projects_dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let direct = ["build.gradle", "build.gradle.kts"]
        .iter()
        .any(|name| projects_dir.join(name).is_file());
    if direct {
        return Ok(vec![projects_dir.to_path_buf()]);
    }
    let mut roots: Vec<PathBuf> = fs::read_dir(projects_dir)?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.path())
        .filter(|path| path.is_dir())
        .collect();
    roots.sort();
    Ok(roots)
}

pub fn mine_gradle_sources(
    ctx: &StageContext,
    source_list: &Path,
) -> Result<StageSummary, StageError> {
    const STAGE: &str = "mine-gradle";
    const OUTPUT: &str = "clone-plan.csv";
    require_file(source_list, "source list")?;
    let mut journal = Journal::open(&ctx.journal_dir)?;
    let digest = InputDigest::new()
        .file(source_list)
        .map_err(|err| failed(format!("reading {}: {err}", source_list.display())))?
        .param("mode", "clone-plan")
        .finish();
    if let Some(record) = cached_record(ctx, &journal, STAGE, &digest) {
        return Ok(StageSummary::from_record(STAGE, &ctx.journal_dir, record));
    }

    let started = now_ms();
    let file = match File::open(source_list) {
        Ok(file) => file,
        Err(err) => {
            record_failure(&mut journal, STAGE, &digest, OUTPUT, started)?;
            return Err(failed(format!("opening {}: {err}", source_list.display())));
        }
    };
    let plan = match build_clone_plan(BufReader::new(file)) {
        Ok(plan) => plan,
        Err(err) => {
            record_failure(&mut journal, STAGE, &digest, OUTPUT, started)?;
            return Err(failed(format!("reading {}: {err}", source_list.display())));
        }
    };
    let output_path = ctx.journal_dir.join(OUTPUT);
    if let Err(err) = write_clone_plan_csv(&plan, &output_path) {
        record_failure(&mut journal, STAGE, &digest, OUTPUT, started)?;
        return Err(failed(format!("writing {OUTPUT}: {err}")));
    }

    // Planning adds nothing to the allowlist; the record keeps the total
    // where it was.
    let running_total = journal.running_total();
    journal.append(StageRecord {
        stage: STAGE.to_string(),
        inputs_digest: digest,
        output: OUTPUT.to_string(),
        produced: 0,
        duplicates: 0,
        running_total,
        started_ms: started,
        finished_ms: now_ms(),
        completed: true,
    })?;

    let failures = if plan.malformed_lines > 0 {
        vec![format!("{} unusable listing line(s)", plan.malformed_lines)]
    } else {
        Vec::new()
    };
    Ok(StageSummary {
        stage: STAGE,
        produced: 0,
        duplicates: 0,
        running_total,
        cached: false,
        output: Some(output_path),
        failures,
        notes: vec![format!("{} clone target(s) planned", plan.entries.len())],
    })
}

pub const MERGED_FILE: &str = "allowlist.txt";
pub const REFINED_FILE: &str = "refined.txt";

pub fn merge(ctx: &StageContext) -> Result<StageSummary, StageError> {
    const STAGE: &str = "merge";
    let mut journal = Journal::open(&ctx.journal_dir)?;

    let mut sources = Vec::new();
    for stage in SOURCE_STAGES {
        let Some(record) = journal.last_completed(stage) else {
            continue;
        };
        if record.output != names_output(stage) {
            continue;
        }
        let path = ctx.journal_dir.join(&record.output);
        if path.is_file() {
            sources.push(path);
        }
    }
    if sources.is_empty() {
        return Err(StageError::MissingInput(
            "no completed source stage found in this journal; run the mining stages first"
                .to_string(),
        ));
    }

    let mut digest = InputDigest::new();
    for path in &sources {
        digest = digest
            .file(path)
            .map_err(|err| failed(format!("reading {}: {err}", path.display())))?;
    }
    let digest = digest.finish();
    if let Some(record) = cached_record(ctx, &journal, STAGE, &digest) {
        return Ok(StageSummary::from_record(STAGE, &ctx.journal_dir, record));
    }

    let started = now_ms();
    let mut union = BTreeSet::new();
    for path in &sources {
        match read_allowlist(path) {
            Ok(loaded) => union.extend(loaded.list.into_entries()),
            Err(err) => {
                record_failure(&mut journal, STAGE, &digest, MERGED_FILE, started)?;
                return Err(failed(format!("reading {}: {err}", path.display())));
            }
        }
    }
    let list = AllowList::new(union);
    let output_path = ctx.journal_dir.join(MERGED_FILE);
    write_atomic(&output_path, render_allowlist(&list).as_bytes())
        .map_err(|err| failed(format!("writing {MERGED_FILE}: {err}")))?;

    // Every merged entry was already accounted for by its source stage, so
    // the merge leaves the running total alone.
    let before = journal.running_total();
    let produced = list.len() as u64;
    let duplicates = duplicates_for(produced, before, before);
    journal.append(StageRecord {
        stage: STAGE.to_string(),
        inputs_digest: digest,
        output: MERGED_FILE.to_string(),
        produced,
        duplicates,
        running_total: before,
        started_ms: started,
        finished_ms: now_ms(),
        completed: true,
    })?;

    Ok(StageSummary {
        stage: STAGE,
        produced,
        duplicates,
        running_total: before,
        cached: false,
        output: Some(output_path),
        failures: Vec::new(),
        notes: vec![format!("{} source file(s) merged", sources.len())],
    })
}

pub fn refine_stage(ctx: &StageContext) -> Result<StageSummary, StageError> {
    const STAGE: &str = "refine";
    let input = ctx.journal_dir.join(MERGED_FILE);
    require_file(&input, "merged allowlist")?;
    let mut journal = Journal::open(&ctx.journal_dir)?;
    let digest = InputDigest::new()
        .file(&input)
        .map_err(|err| failed(format!("reading {MERGED_FILE}: {err}")))?
        .finish();
    if let Some(record) = cached_record(ctx, &journal, STAGE, &digest) {
        return Ok(StageSummary::from_record(STAGE, &ctx.journal_dir, record));
    }

    let started = now_ms();
    let loaded = match read_allowlist(&input) {
        Ok(loaded) => loaded,
        Err(err) => {
            record_failure(&mut journal, STAGE, &digest, REFINED_FILE, started)?;
            return Err(failed(format!("reading {MERGED_FILE}: {err}")));
        }
    };
    let outcome = refine(&loaded.list);

    let output_path = ctx.journal_dir.join(REFINED_FILE);
    if let Err(err) = write_allowlist(&outcome.list, &output_path) {
        record_failure(&mut journal, STAGE, &digest, REFINED_FILE, started)?;
        return Err(failed(format!("writing {REFINED_FILE}: {err}")));
    }
    let removals_path = ctx.journal_dir.join("removals.csv");
    if let Err(err) = write_removal_report(&outcome.removals, &removals_path) {
        log::warn!("could not write {}: {err}", removals_path.display());
    }

    // After refinement the cumulative total IS the kept count; everything
    // processed on the way there counts as duplicate coverage.
    let before = journal.running_total();
    let kept = outcome.list.len() as u64;
    let removed = outcome.removals.len() as u64;
    let duplicates = duplicates_for(kept, before, kept);
    journal.append(StageRecord {
        stage: STAGE.to_string(),
        inputs_digest: digest,
        output: REFINED_FILE.to_string(),
        produced: kept,
        duplicates,
        running_total: kept,
        started_ms: started,
        finished_ms: now_ms(),
        completed: true,
    })?;

    Ok(StageSummary {
        stage: STAGE,
        produced: kept,
        duplicates: removed,
        running_total: kept,
        cached: false,
        output: Some(output_path),
        failures: Vec::new(),
        notes: vec![format!(
            "kept {kept}, removed {removed} (see removals.csv)"
        )],
    })
}

pub fn stats_stage(ctx: &StageContext, top_n: usize) -> Result<StageSummary, StageError> {
    const STAGE: &str = "stats";
    const OUTPUT: &str = "stats.json";
    let refined = ctx.journal_dir.join(REFINED_FILE);
    let merged = ctx.journal_dir.join(MERGED_FILE);
    let input = if refined.is_file() {
        refined
    } else if merged.is_file() {
        merged
    } else {
        return Err(StageError::MissingInput(format!(
            "neither {REFINED_FILE} nor {MERGED_FILE} exists in the journal directory; \
             run merge (and ideally refine) first"
        )));
    };

    let mut journal = Journal::open(&ctx.journal_dir)?;
    let digest = InputDigest::new()
        .file(&input)
        .map_err(|err| failed(format!("reading {}: {err}", input.display())))?
        .param("top-n", top_n)
        .finish();
    if let Some(record) = cached_record(ctx, &journal, STAGE, &digest) {
        return Ok(StageSummary::from_record(STAGE, &ctx.journal_dir, record));
    }

    let started = now_ms();
    let loaded = match read_allowlist(&input) {
        Ok(loaded) => loaded,
        Err(err) => {
            record_failure(&mut journal, STAGE, &digest, OUTPUT, started)?;
            return Err(failed(format!("reading {}: {err}", input.display())));
        }
    };
    let report = compute_stats(&loaded.list);
    let json = serde_json::to_string_pretty(&report)
        .map_err(|err| failed(format!("encoding the report: {err}")))?;
    let output_path = ctx.journal_dir.join(OUTPUT);
    if let Err(err) = write_atomic(&output_path, json.as_bytes()) {
        record_failure(&mut journal, STAGE, &digest, OUTPUT, started)?;
        return Err(failed(format!("writing {OUTPUT}: {err}")));
    }

    let running_total = journal.running_total();
    journal.append(StageRecord {
        stage: STAGE.to_string(),
        inputs_digest: digest,
        output: OUTPUT.to_string(),
        produced: 0,
        duplicates: 0,
        running_total,
        started_ms: started,
        finished_ms: now_ms(),
        completed: true,
    })?;

    let mut notes = vec![format!(
        "{} entries over {} distinct roots (from {})",
        report.total,
        report.roots_histogram.len(),
        input.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
    )];
    let mut histogram: Vec<String> = report
        .fields_histogram
        .iter()
        .map(|(fields, count)| format!("{fields}:{count}"))
        .collect();
    if !histogram.is_empty() {
        notes.push(format!("fields histogram {}", histogram.join(" ")));
    }
    histogram.clear();
    for (root, count) in report.top_roots(top_n) {
        notes.push(format!("top root {root}: {count}"));
    }
    Ok(StageSummary {
        stage: STAGE,
        produced: 0,
        duplicates: 0,
        running_total,
        cached: false,
        output: Some(output_path),
        failures: Vec::new(),
        notes,
    })
}

#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    pub app_package: PackageName,
    pub three_way: bool,
    pub labeled: Option<PathBuf>,
}

pub fn classify_stage(
    ctx: &StageContext,
    fqcns: &Path,
    allowlist_path: &Path,
    options: &ClassifyOptions,
) -> Result<StageSummary, StageError> {
    const STAGE: &str = "classify";
    const OUTPUT: &str = "classify-report.csv";
    require_file(fqcns, "class-name dump")?;
    require_file(allowlist_path, "allowlist")?;
    let mut journal = Journal::open(&ctx.journal_dir)?;
    let digest = InputDigest::new()
        .file(fqcns)
        .map_err(|err| failed(format!("reading {}: {err}", fqcns.display())))?
        .file(allowlist_path)
        .map_err(|err| failed(format!("reading {}: {err}", allowlist_path.display())))?
        .param("app-package", &options.app_package)
        .param("three-way", options.three_way)
        .param(
            "labeled",
            options
                .labeled
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "off".to_string()),
        )
        .finish();
    if let Some(record) = cached_record(ctx, &journal, STAGE, &digest) {
        return Ok(StageSummary::from_record(STAGE, &ctx.journal_dir, record));
    }

    let started = now_ms();
    let allowlist = match read_allowlist(allowlist_path) {
        Ok(loaded) => loaded.list,
        Err(err) => {
            record_failure(&mut journal, STAGE, &digest, OUTPUT, started)?;
            return Err(failed(format!("reading {}: {err}", allowlist_path.display())));
        }
    };
    let file = match read_fqcn_file(fqcns) {
        Ok(file) => file,
        Err(err) => {
            record_failure(&mut journal, STAGE, &digest, OUTPUT, started)?;
            return Err(failed(format!("reading {}: {err}", fqcns.display())));
        }
    };

    let report = classification_report(
        &file.records,
        &options.app_package,
        &allowlist,
        options.three_way,
    );
    let output_path = ctx.journal_dir.join(OUTPUT);
    if let Err(err) = write_report_csv(&report, &output_path) {
        record_failure(&mut journal, STAGE, &digest, OUTPUT, started)?;
        return Err(failed(format!("writing {OUTPUT}: {err}")));
    }
    if let Some(labeled_path) = &options.labeled {
        let classifier =
            allowlistforge_core::Classifier::new(options.app_package.clone(), &allowlist);
        if let Err(err) =
            write_labeled_csv(&file.records, &classifier, options.three_way, labeled_path)
        {
            record_failure(&mut journal, STAGE, &digest, OUTPUT, started)?;
            return Err(failed(format!("writing {}: {err}", labeled_path.display())));
        }
    }

    let running_total = journal.running_total();
    journal.append(StageRecord {
        stage: STAGE.to_string(),
        inputs_digest: digest,
        output: OUTPUT.to_string(),
        produced: 0,
        duplicates: 0,
        running_total,
        started_ms: started,
        finished_ms: now_ms(),
        completed: true,
    })?;

    let failures: Vec<String> = file
        .skipped
        .iter()
        .map(|(line, text)| format!("line {line}: unusable record {text:?}"))
        .collect();
    let mut notes = vec![format!("{} record(s) classified", report.total)];
    for (category, count) in &report.counts {
        let proportion = report.proportions.get(category).copied().unwrap_or(0.0);
        notes.push(format!("{category}: {count} ({:.1}%)", proportion * 100.0));
    }
    Ok(StageSummary {
        stage: STAGE,
        produced: 0,
        duplicates: 0,
        running_total,
        cached: false,
        output: Some(output_path),
        failures,
        notes,
    })
}
