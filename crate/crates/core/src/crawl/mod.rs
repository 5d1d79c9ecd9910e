//! HTTP acquisition: cached fetch plus the two repository crawlers.

pub mod fetch;
pub mod google;
pub mod portal;

use std::collections::BTreeSet;

use crate::model::PackageName;

pub use fetch::{cache_path, fetch, FetchError, FetchPolicy};
pub use google::crawl_google_index;
pub use portal::crawl_gradle_plugin_portal;

/// Outcome of a crawl. Failures are carried alongside the names rather than
/// aborting the crawl, so partial results stay usable and auditable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CrawlResult {
    pub names: BTreeSet<PackageName>,
    pub pages_fetched: u64,
    pub failures: Vec<(String, String)>,
}

impl CrawlResult {
    pub fn record_failure(&mut self, url: impl Into<String>, reason: impl Into<String>) {
        self.failures.push((url.into(), reason.into()));
    }
}
