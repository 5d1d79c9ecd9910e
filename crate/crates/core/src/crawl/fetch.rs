//! HTTP GET with retry, exponential backoff, and an on-disk body cache.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Duration;

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("invalid url \"{0}\"")]
    BadUrl(String),
    #[error("GET {url} returned client error {status}")]
    Terminal4xx { url: String, status: u16 },
    #[error("GET {url} failed after {attempts} attempts: {last}")]
    RetriesExhausted {
        url: String,
        attempts: u32,
        last: String,
    },
    #[error("GET {url} timed out after {attempts} attempts")]
    Timeout { url: String, attempts: u32 },
    #[error("cache i/o for {url}: {detail}")]
    CacheIo { url: String, detail: String },
}

/// Knobs for the acquisition layer. `politeness_delay` is not applied by
/// [`fetch`] itself; sequential crawlers honor it between page requests.
#[derive(Debug, Clone)]
pub struct FetchPolicy {
    pub max_retries: u32,
    pub backoff_base: Duration,
    pub cache_dir: Option<PathBuf>,
    pub timeout: Duration,
    pub user_agent: String,
    pub politeness_delay: Duration,
}

impl Default for FetchPolicy {
    fn default() -> FetchPolicy {
        FetchPolicy {
            max_retries: 3,
            backoff_base: Duration::from_secs(1),
            cache_dir: None,
            timeout: Duration::from_secs(30),
            user_agent: concat!("allowlistforge/", env!("CARGO_PKG_VERSION")).to_string(),
            politeness_delay: Duration::from_millis(200),
        }
    }
}

impl FetchPolicy {
    pub fn with_cache(cache_dir: impl Into<PathBuf>) -> FetchPolicy {
        FetchPolicy {
            cache_dir: Some(cache_dir.into()),
            ..FetchPolicy::default()
        }
    }

    /// Fast-failing variant for tests: no real backoff waits.
    pub fn impatient() -> FetchPolicy {
        FetchPolicy {
            backoff_base: Duration::from_millis(1),
            politeness_delay: Duration::ZERO,
            timeout: Duration::from_secs(5),
            ..FetchPolicy::default()
        }
    }
}

/// Cache layout: one file per url, named by the hex sha-256 of the exact
/// url string.
pub fn cache_path(cache_dir: &Path, url: &str) -> PathBuf {
    let digest = Sha256::digest(url.as_bytes());
    cache_dir.join(hex::encode(digest))
}

fn looks_like_timeout(detail: &str) -> bool {
    let lower = detail.to_ascii_lowercase();
    lower.contains("timed out") || lower.contains("timeout")
}

/// Fetches a url honoring the policy: cached bodies short-circuit the
/// network; 5xx and transport errors are retried with doubling backoff;
/// any 4xx is terminal immediately.
pub fn fetch(url: &str, policy: &FetchPolicy) -> Result<Vec<u8>, FetchError> {
    let parsed = url::Url::parse(url).map_err(|_| FetchError::BadUrl(url.to_string()))?;
    if parsed.scheme() != "http" && parsed.scheme() != "https" {
        return Err(FetchError::BadUrl(url.to_string()));
    }

    let cached_at = policy.cache_dir.as_deref().map(|dir| cache_path(dir, url));
    if let Some(path) = &cached_at {
        if path.exists() {
            return std::fs::read(path).map_err(|e| FetchError::CacheIo {
                url: url.to_string(),
                detail: e.to_string(),
            });
        }
    }

    let agent = ureq::AgentBuilder::new()
        .timeout(policy.timeout)
        .user_agent(&policy.user_agent)
        .build();

    let attempts = policy.max_retries + 1;
    let mut last_error = String::new();
    for attempt in 0..attempts {
        if attempt > 0 {
            std::thread::sleep(policy.backoff_base * 2_u32.pow(attempt - 1));
        }
        match agent.get(url).call() {
            Ok(response) => {
                let mut body = Vec::new();
                if let Err(err) = response.into_reader().read_to_end(&mut body) {
                    last_error = format!("reading body: {err}");
                    continue;
                }
                if let Some(path) = &cached_at {
                    store(path, &body).map_err(|e| FetchError::CacheIo {
                        url: url.to_string(),
                        detail: e.to_string(),
                    })?;
                }
                return Ok(body);
            }
            Err(ureq::Error::Status(status, _)) if (400..500).contains(&status) => {
                return Err(FetchError::Terminal4xx {
                    url: url.to_string(),
                    status,
                });
            }
            Err(ureq::Error::Status(status, _)) => {
                last_error = format!("server error {status}");
            }
            Err(ureq::Error::Transport(transport)) => {
                last_error = transport.to_string();
            }
        }
        log::debug!("GET {url} attempt {} failed: {last_error}", attempt + 1);
    }

    if looks_like_timeout(&last_error) {
        Err(FetchError::Timeout {
            url: url.to_string(),
            attempts,
        })
    } else {
        Err(FetchError::RetriesExhausted {
            url: url.to_string(),
            attempts,
            last: last_error,
        })
    }
}

fn store(path: &Path, body: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().expect("cache file has a parent directory");
    std::fs::create_dir_all(dir)?;
    // Temp-then-rename so readers never see a half-written body. Concurrent
    // writers of the same url write identical bytes, so the race is benign.
    let temp = path.with_extension("part");
    std::fs::write(&temp, body)?;
    std::fs::rename(&temp, path)
}
