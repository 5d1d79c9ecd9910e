use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use allowlistforge_core::PackageName;

use allowlistforge_cli::lock::JournalLock;
use allowlistforge_cli::stages::{
    classify_stage, crawl_google, crawl_portal, merge, mine_gradle_projects,
    mine_gradle_sources, mine_maven, refine_stage, resolve_deps, stats_stage, ClassifyOptions,
    ResolveOptions, StageContext, StageError, StageSummary,
};

/// Builds, refines, and applies an allowlist of third-party library
/// package names for Android static analysis.
#[derive(Debug, Parser)]
#[command(name = "allowlistforge", version)]
struct Cli {
    /// Directory holding the journal, stage outputs, and the lock file.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    journal_dir: PathBuf,

    /// On-disk cache for fetched urls (one file per url hash); off when
    /// not set.
    #[arg(long, global = true, value_name = "DIR")]
    cache_dir: Option<PathBuf>,

    /// Re-run the stage even when the journal says it is complete.
    #[arg(long, global = true)]
    force: bool,

    /// Chattier logging and full failure listings.
    #[arg(long, global = true)]
    verbose: bool,

    /// Retries after a retryable fetch failure (5xx or transport).
    #[arg(long, global = true, value_name = "N", default_value_t = 3)]
    retries: u32,

    /// Base backoff between retries; doubles on each attempt.
    #[arg(long, global = true, value_name = "MS", default_value_t = 1000)]
    backoff_ms: u64,

    /// Pause between successive crawl page fetches.
    #[arg(long, global = true, value_name = "MS", default_value_t = 200)]
    politeness_ms: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract library group ids from a Maven index export.
    MineMaven {
        /// Index export with one group:artifact:version per line.
        #[arg(long, value_name = "FILE")]
        index_export: PathBuf,
    },
    /// Resolve transitive dependency trees for a list of coordinates and
    /// collect every group they pull in.
    ResolveDeps {
        /// Coordinates to resolve, one group:artifact[:version] per line.
        #[arg(long, value_name = "FILE")]
        coords: PathBuf,
        /// Maven repository to resolve against.
        #[arg(long, value_name = "URL")]
        repo_url: String,
        /// Per-tree resolution deadline.
        #[arg(long, value_name = "N", default_value_t = 30)]
        timeout_secs: u64,
        /// Worker count; defaults to the processor count.
        #[arg(long, value_name = "N")]
        jobs: Option<usize>,
        /// Stop once this many consecutive batches found nothing new.
        #[arg(long, value_name = "N")]
        stop_after_stable_batches: Option<u32>,
    },
    /// Crawl the Google Maven master index for group ids.
    CrawlGoogle {
        #[arg(long, value_name = "URL")]
        base_url: String,
    },
    /// Crawl the Gradle plugin portal listing for plugin ids.
    CrawlPortal {
        #[arg(long, value_name = "URL")]
        base_url: String,
        /// Hard cap on listing pages followed.
        #[arg(long, value_name = "N", default_value_t = 1000)]
        max_pages: u32,
    },
    /// Mine dependency declarations from Gradle build files, or plan the
    /// clones for a source listing.
    MineGradle {
        /// Directory of project checkouts (or a single project root).
        #[arg(
            long,
            value_name = "DIR",
            conflicts_with = "source_list",
            required_unless_present = "source_list"
        )]
        projects_dir: Option<PathBuf>,
        /// App listing (app_id,source_url per line); produces a clone plan
        /// instead of mining.
        #[arg(long, value_name = "FILE")]
        source_list: Option<PathBuf>,
        /// Also accept api/testImplementation/annotationProcessor/kapt
        /// declarations.
        #[arg(long)]
        extended_configurations: bool,
    },
    /// Merge every completed source stage into allowlist.txt.
    Merge,
    /// Drop entries covered by a whole-segment prefix, writing refined.txt
    /// and removals.csv.
    Refine,
    /// Histograms over the refined (or merged) allowlist.
    Stats {
        /// How many top roots to print.
        #[arg(long, value_name = "N", default_value_t = 10)]
        top_n: usize,
    },
    /// Label a class-name dump against an app package and an allowlist.
    Classify {
        /// Dump with one fully qualified class name per line.
        #[arg(long, value_name = "FILE")]
        fqcns: PathBuf,
        /// The app's own package name.
        #[arg(long, value_name = "PKG")]
        app_package: PackageName,
        /// Allowlist file to discriminate library packages with.
        #[arg(long, value_name = "FILE")]
        allowlist: PathBuf,
        /// Fold Library into Other, collapsing the report to in-app, obfuscated, and other.
        #[arg(long)]
        three_way: bool,
        /// Also write one fqcn,category row per record to this file.
        #[arg(long, value_name = "FILE")]
        labeled: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(
        if cli.verbose { "debug" } else { "warn" },
    ))
    .format_timestamp(None)
    .init();

    let ctx = StageContext {
        journal_dir: cli.journal_dir.clone(),
        cache_dir: cli.cache_dir.clone(),
        force: cli.force,
        retries: cli.retries,
        backoff_ms: cli.backoff_ms,
        politeness_ms: cli.politeness_ms,
    };

    let _lock = match JournalLock::acquire(&ctx.journal_dir) {
        Ok(lock) => lock,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(1);
        }
    };

    let result = run(&ctx, cli.command);
    match result {
        Ok(summary) => {
            print_summary(&summary, cli.verbose);
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn run(ctx: &StageContext, command: Command) -> Result<StageSummary, StageError> {
    match command {
        Command::MineMaven { index_export } => mine_maven(ctx, &index_export),
        Command::ResolveDeps {
            coords,
            repo_url,
            timeout_secs,
            jobs,
            stop_after_stable_batches,
        } => resolve_deps(
            ctx,
            &coords,
            &ResolveOptions {
                repo_url,
                timeout_secs,
                jobs,
                stop_after_stable_batches,
            },
        ),
        Command::CrawlGoogle { base_url } => crawl_google(ctx, &base_url),
        Command::CrawlPortal {
            base_url,
            max_pages,
        } => crawl_portal(ctx, &base_url, max_pages),
        Command::MineGradle {
            projects_dir,
            source_list,
            extended_configurations,
        } => match (projects_dir, source_list) {
            (Some(dir), None) => mine_gradle_projects(ctx, &dir, extended_configurations),
            (None, Some(list)) => mine_gradle_sources(ctx, &list),
            // clap enforces exactly one of the two.
            _ => unreachable!("argument group"),
        },
        Command::Merge => merge(ctx),
        Command::Refine => refine_stage(ctx),
        Command::Stats { top_n } => stats_stage(ctx, top_n),
        Command::Classify {
            fqcns,
            app_package,
            allowlist,
            three_way,
            labeled,
        } => classify_stage(
            ctx,
            &fqcns,
            &allowlist,
            &ClassifyOptions {
                app_package,
                three_way,
                labeled,
            },
        ),
    }
}

fn print_summary(summary: &StageSummary, verbose: bool) {
    let cached = if summary.cached { ", cached" } else { "" };
    println!(
        "[{}] produced {} (duplicates {}), running total {}{cached}",
        summary.stage, summary.produced, summary.duplicates, summary.running_total
    );
    if let Some(output) = &summary.output {
        println!("  output {}", output.display());
    }
    for note in &summary.notes {
        println!("  {note}");
    }
    if !summary.failures.is_empty() {
        println!("  {} failure(s):", summary.failures.len());
        let shown = if verbose { summary.failures.len() } else { 5 };
        for failure in summary.failures.iter().take(shown) {
            println!("    {failure}");
        }
        if summary.failures.len() > shown {
            println!(
                "    ... and {} more (re-run with --verbose)",
                summary.failures.len() - shown
            );
        }
    }
}
