//! Paginated crawl of a plugin-portal listing. Plugin identifiers appear as
//! anchors pointing at `/plugin/<id>`; pages link to each other through a
//! rel="next" anchor or a "Next" link.

use std::sync::OnceLock;

use regex::Regex;

use crate::model::PackageName;

use super::fetch::{fetch, FetchPolicy};
use super::CrawlResult;

const PLUGIN_HREF_PREFIX: &str = "/plugin/";
const MAX_CONSECUTIVE_FAILURES: u32 = 3;

fn anchor_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| {
        Regex::new(r#"(?is)<a\s+([^>]*)>(.*?)</a>"#).expect("anchor pattern compiles")
    })
}

fn href_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| {
        Regex::new(r#"(?i)href\s*=\s*["']([^"']+)["']"#).expect("href pattern compiles")
    })
}

struct Page {
    plugin_ids: Vec<String>,
    next_url: Option<String>,
}

/// Anchor-pattern extraction: ids from `/plugin/<id>` hrefs, next page from
/// a rel="next" attribute or a literal "Next" anchor text. Relative hrefs
/// resolve against the page url.
fn parse_page(page_url: &str, html: &str) -> Page {
    let base = url::Url::parse(page_url).ok();
    let mut plugin_ids = Vec::new();
    let mut next_url = None;

    for capture in anchor_pattern().captures_iter(html) {
        let attrs = capture.get(1).map_or("", |m| m.as_str());
        let text = capture.get(2).map_or("", |m| m.as_str());
        let Some(href) = href_pattern()
            .captures(attrs)
            .and_then(|c| c.get(1))
            .map(|m| m.as_str())
        else {
            continue;
        };

        if let Some(id) = href.strip_prefix(PLUGIN_HREF_PREFIX) {
            let id = id
                .split(['?', '#'])
                .next()
                .unwrap_or(id)
                .trim_matches('/');
            if !id.is_empty() {
                plugin_ids.push(id.to_string());
            }
            continue;
        }

        let is_next = attrs.to_ascii_lowercase().contains("rel=\"next\"")
            || attrs.to_ascii_lowercase().contains("rel='next'")
            || text.trim().eq_ignore_ascii_case("next");
        if is_next && next_url.is_none() {
            next_url = match &base {
                Some(base) => base.join(href).ok().map(String::from),
                None => Some(href.to_string()),
            };
        }
    }

    Page {
        plugin_ids,
        next_url,
    }
}

/// After a failed page the crawl has no next link to follow; synthesize one
/// by bumping the `page` query parameter so a single bad page does not end
/// the run.
fn synthesize_next_url(current: &str) -> Option<String> {
    let mut parsed = url::Url::parse(current).ok()?;
    let mut pairs: Vec<(String, String)> = parsed
        .query_pairs()
        .map(|(k, v)| (k.into_owned(), v.into_owned()))
        .collect();
    let mut bumped = false;
    for (key, value) in &mut pairs {
        if key == "page" {
            let number: u64 = value.parse().ok()?;
            *value = (number + 1).to_string();
            bumped = true;
        }
    }
    if !bumped {
        pairs.push(("page".to_string(), "2".to_string()));
    }
    parsed
        .query_pairs_mut()
        .clear()
        .extend_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())));
    Some(parsed.into())
}

/// Sequential crawl from `base_url`, stopping at the first of: no next
/// link, an empty page, or `max_pages` fetched. Failed pages are recorded
/// and skipped over until three failures land in a row.
pub fn crawl_gradle_plugin_portal(
    base_url: &str,
    policy: &FetchPolicy,
    max_pages: u32,
) -> CrawlResult {
    let mut result = CrawlResult::default();
    let mut url = base_url.to_string();
    let mut consecutive_failures = 0_u32;
    let mut first = true;

    while result.pages_fetched < u64::from(max_pages) {
        if !first && !policy.politeness_delay.is_zero() {
            std::thread::sleep(policy.politeness_delay);
        }
        first = false;

        match fetch(&url, policy) {
            Ok(body) => {
                consecutive_failures = 0;
                result.pages_fetched += 1;
                let page = parse_page(&url, &String::from_utf8_lossy(&body));
                if page.plugin_ids.is_empty() {
                    break;
                }
                for id in page.plugin_ids {
                    match PackageName::parse(&id) {
                        Ok(name) => {
                            result.names.insert(name);
                        }
                        Err(err) => {
                            result.record_failure(&url, format!("plugin id \"{id}\": {err}"))
                        }
                    }
                }
                match page.next_url {
                    Some(next) => url = next,
                    None => break,
                }
            }
            Err(err) => {
                result.record_failure(&url, err.to_string());
                consecutive_failures += 1;
                if consecutive_failures >= MAX_CONSECUTIVE_FAILURES {
                    log::warn!(
                        "aborting portal crawl after {consecutive_failures} consecutive failures"
                    );
                    break;
                }
                match synthesize_next_url(&url) {
                    Some(next) => url = next,
                    None => break,
                }
            }
        }
    }
    result
}
