//! Crawl of a Google-style repository master index: a single XML document
//! whose element names are the group identifiers.

use quick_xml::events::Event;
use quick_xml::Reader;

use crate::model::PackageName;

use super::fetch::{fetch, FetchError, FetchPolicy};
use super::CrawlResult;

/// Fetches and parses the master index below `base_url`. A url that already
/// points at an .xml document is used as-is; otherwise the conventional
/// `master-index.xml` name is appended.
pub fn crawl_google_index(base_url: &str, policy: &FetchPolicy) -> Result<CrawlResult, FetchError> {
    let url = master_index_url(base_url);
    let body = fetch(&url, policy)?;
    let text = String::from_utf8_lossy(&body);

    let mut result = CrawlResult {
        pages_fetched: 1,
        ..CrawlResult::default()
    };
    for entry in index_entries(&text) {
        match entry {
            Ok(name) => match PackageName::parse(&name) {
                Ok(parsed) => {
                    result.names.insert(parsed);
                }
                Err(err) => result.record_failure(&url, format!("entry \"{name}\": {err}")),
            },
            Err(detail) => result.record_failure(&url, detail),
        }
    }
    Ok(result)
}

pub fn master_index_url(base_url: &str) -> String {
    if base_url.ends_with(".xml") {
        return base_url.to_string();
    }
    format!("{}/master-index.xml", base_url.trim_end_matches('/'))
}

/// Yields the names of the elements one level below the document root.
fn index_entries(document: &str) -> Vec<Result<String, String>> {
    let mut reader = Reader::from_str(document);
    reader.trim_text(true);
    let mut entries = Vec::new();
    let mut depth = 0_usize;
    let mut buf = Vec::new();
    loop {
        match reader.read_event_into(&mut buf) {
            Ok(Event::Start(start)) => {
                if depth == 1 {
                    entries.push(Ok(String::from_utf8_lossy(start.name().as_ref()).into_owned()));
                }
                depth += 1;
            }
            Ok(Event::Empty(start)) => {
                if depth == 1 {
                    entries.push(Ok(String::from_utf8_lossy(start.name().as_ref()).into_owned()));
                }
            }
            Ok(Event::End(_)) => depth = depth.saturating_sub(1),
            Ok(Event::Eof) => break,
            Ok(_) => {}
            Err(err) => {
                entries.push(Err(format!("malformed index document: {err}")));
                break;
            }
        }
        buf.clear();
    }
    entries
}
