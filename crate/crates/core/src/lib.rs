//! Construction, refinement, and application of a package-name allowlist
//! for third-party library detection in Android static analysis.
//!
//! The pipeline mirrors how such a list is assembled in practice: harvest
//! group identifiers from artifact repositories (index exports, a master
//! index, a plugin portal), resolve transitive dependency closures of known
//! libraries, mine build scripts of open-source apps, merge everything,
//! reduce the union to a minimal prefix-free set, and use the result to
//! classify class names into app, library, obfuscated, and other code.

pub mod classify;
pub mod crawl;
pub mod gradle;
pub mod maven;
pub mod model;
pub mod refine;
pub mod testing;

pub use classify::{classify_fqcn, is_obfuscated, Category, Classifier, FqcnRecord, ClassificationReport};
pub use crawl::{crawl_google_index, crawl_gradle_plugin_portal, CrawlResult, FetchPolicy};
pub use model::{
    compute_stats, parse_package_name, read_allowlist, write_allowlist, AllowList, AllowListStore,
    PackageName, StatsReport,
};
pub use refine::{is_covered, refine, PrefixTrie, RefineOutcome};
