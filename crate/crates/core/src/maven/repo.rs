//! Sources of POM documents and artifact metadata: in-memory fixtures, local
//! directory layouts, and remote repositories over HTTP.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Mutex;

use quick_xml::events::Event;
use quick_xml::Reader;
use thiserror::Error;

use crate::crawl::fetch::{fetch, FetchError, FetchPolicy};

use super::coordinate::MavenCoordinate;
use super::pom::parse_pom;

#[derive(Debug, Error)]
pub enum RepoError {
    #[error("artifact {0} not found in repository")]
    NotFound(MavenCoordinate),
    #[error("transport failure for {what}: {detail}")]
    Transport { what: String, detail: String },
    #[error("malformed metadata document: {0}")]
    MalformedMetadata(String),
}

/// Version listing from a maven-metadata.xml document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ArtifactMetadata {
    pub versions: Vec<String>,
    pub latest: Option<String>,
    pub release: Option<String>,
}

impl ArtifactMetadata {
    /// The version a bracketed range request resolves to: the release
    /// version when published, otherwise the last (most recently appended)
    /// entry of the version list.
    pub fn highest(&self) -> Option<&str> {
        self.release
            .as_deref()
            .or_else(|| self.versions.last().map(String::as_str))
    }
}

pub fn parse_metadata(document: &str) -> Result<ArtifactMetadata, RepoError> {
    let mut reader = Reader::from_str(document);
    reader.trim_text(true);
    let mut path: Vec<String> = Vec::new();
    let mut metadata = ArtifactMetadata::default();
    let mut buf = Vec::new();
    loop {
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| RepoError::MalformedMetadata(e.to_string()))?;
        match event {
            Event::Start(start) => {
                path.push(String::from_utf8_lossy(start.name().as_ref()).into_owned())
            }
            Event::End(_) => {
                path.pop();
            }
            Event::Text(text) => {
                let value = text
                    .unescape()
                    .map_err(|e| RepoError::MalformedMetadata(e.to_string()))?
                    .trim()
                    .to_string();
                if value.is_empty() {
                    continue;
                }
                match path.last().map(String::as_str) {
                    Some("version") if path.iter().any(|p| p == "versions") => {
                        metadata.versions.push(value)
                    }
                    Some("latest") => metadata.latest = Some(value),
                    Some("release") => metadata.release = Some(value),
                    _ => {}
                }
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    Ok(metadata)
}

/// Serves POM documents and metadata by coordinate. Implementations must be
/// shareable across resolver threads.
pub trait RepositoryClient: Send + Sync {
    fn fetch_pom(&self, coordinate: &MavenCoordinate) -> Result<String, RepoError>;
    fn fetch_metadata(&self, group: &str, artifact: &str) -> Result<ArtifactMetadata, RepoError>;
}

impl<T: RepositoryClient + ?Sized> RepositoryClient for &T {
    fn fetch_pom(&self, coordinate: &MavenCoordinate) -> Result<String, RepoError> {
        (**self).fetch_pom(coordinate)
    }
    fn fetch_metadata(&self, group: &str, artifact: &str) -> Result<ArtifactMetadata, RepoError> {
        (**self).fetch_metadata(group, artifact)
    }
}

impl<T: RepositoryClient + ?Sized> RepositoryClient for std::sync::Arc<T> {
    fn fetch_pom(&self, coordinate: &MavenCoordinate) -> Result<String, RepoError> {
        (**self).fetch_pom(coordinate)
    }
    fn fetch_metadata(&self, group: &str, artifact: &str) -> Result<ArtifactMetadata, RepoError> {
        (**self).fetch_metadata(group, artifact)
    }
}

/// Fixture repository backed by maps. Build it up front, then share.
#[derive(Debug, Default)]
pub struct InMemoryRepository {
    poms: HashMap<(String, String, String), String>,
    metadata: HashMap<(String, String), ArtifactMetadata>,
}

impl InMemoryRepository {
    pub fn new() -> InMemoryRepository {
        InMemoryRepository::default()
    }

    /// Registers a document under the coordinate it declares.
    pub fn add_pom(&mut self, document: &str) {
        let model = parse_pom(document).expect("fixture descriptor must parse");
        self.add_pom_at(&model.coordinate, document);
    }

    pub fn add_pom_at(&mut self, coordinate: &MavenCoordinate, document: &str) {
        self.poms.insert(
            (
                coordinate.group.clone(),
                coordinate.artifact.clone(),
                coordinate.version.clone(),
            ),
            document.to_string(),
        );
    }

    pub fn add_metadata(&mut self, group: &str, artifact: &str, metadata: ArtifactMetadata) {
        self.metadata
            .insert((group.to_string(), artifact.to_string()), metadata);
    }
}

impl RepositoryClient for InMemoryRepository {
    fn fetch_pom(&self, coordinate: &MavenCoordinate) -> Result<String, RepoError> {
        self.poms
            .get(&(
                coordinate.group.clone(),
                coordinate.artifact.clone(),
                coordinate.version.clone(),
            ))
            .cloned()
            .ok_or_else(|| RepoError::NotFound(coordinate.clone()))
    }

    fn fetch_metadata(&self, group: &str, artifact: &str) -> Result<ArtifactMetadata, RepoError> {
        self.metadata
            .get(&(group.to_string(), artifact.to_string()))
            .cloned()
            .ok_or_else(|| {
                RepoError::NotFound(MavenCoordinate::new(group, artifact, ""))
            })
    }
}

fn artifact_dir(group: &str, artifact: &str) -> PathBuf {
    let mut path = PathBuf::new();
    for segment in group.split('.') {
        path.push(segment);
    }
    path.push(artifact);
    path
}

/// Standard repository directory layout on the local filesystem:
/// `<group-as-dirs>/<artifact>/<version>/<artifact>-<version>.pom` and
/// `<group-as-dirs>/<artifact>/maven-metadata.xml`.
#[derive(Debug, Clone)]
pub struct FileRepository {
    root: PathBuf,
}

impl FileRepository {
    pub fn new(root: impl Into<PathBuf>) -> FileRepository {
        FileRepository { root: root.into() }
    }

    fn pom_path(&self, coordinate: &MavenCoordinate) -> PathBuf {
        self.root
            .join(artifact_dir(&coordinate.group, &coordinate.artifact))
            .join(&coordinate.version)
            .join(format!("{}-{}.pom", coordinate.artifact, coordinate.version))
    }
}

impl RepositoryClient for FileRepository {
    fn fetch_pom(&self, coordinate: &MavenCoordinate) -> Result<String, RepoError> {
        let path = self.pom_path(coordinate);
        match std::fs::read_to_string(&path) {
            Ok(text) => Ok(text),
            Err(err) if err.kind() == std::io::ErrorKind::NotFound => {
                Err(RepoError::NotFound(coordinate.clone()))
            }
            Err(err) => Err(RepoError::Transport {
                what: path.display().to_string(),
                detail: err.to_string(),
            }),
        }
    }

    fn fetch_metadata(&self, group: &str, artifact: &str) -> Result<ArtifactMetadata, RepoError> {
        let path = self
            .root
            .join(artifact_dir(group, artifact))
            .join("maven-metadata.xml");
        match std::fs::read_to_string(&path) {
            Ok(text) => parse_metadata(&text),
            Err(err) if err.kind() == std::io::ErrorKind::NotFound => Err(RepoError::NotFound(
                MavenCoordinate::new(group, artifact, ""),
            )),
            Err(err) => Err(RepoError::Transport {
                what: path.display().to_string(),
                detail: err.to_string(),
            }),
        }
    }
}

/// Remote repository reached through the caching fetch layer, so retries,
/// backoff, and the on-disk body cache all apply to POM downloads.
pub struct HttpRepository {
    base_url: String,
    policy: FetchPolicy,
}

impl HttpRepository {
    pub fn new(base_url: impl Into<String>, policy: FetchPolicy) -> HttpRepository {
        let mut base_url = base_url.into();
        while base_url.ends_with('/') {
            base_url.pop();
        }
        HttpRepository { base_url, policy }
    }

    fn url_for(&self, group: &str, artifact: &str, tail: &str) -> String {
        format!(
            "{}/{}/{}/{}",
            self.base_url,
            group.replace('.', "/"),
            artifact,
            tail
        )
    }

    fn get(&self, url: &str, missing: MavenCoordinate) -> Result<String, RepoError> {
        match fetch(url, &self.policy) {
            Ok(body) => String::from_utf8(body).map_err(|e| RepoError::Transport {
                what: url.to_string(),
                detail: format!("response is not utf-8: {e}"),
            }),
            Err(FetchError::Terminal4xx { status: 404, .. }) => Err(RepoError::NotFound(missing)),
            Err(err) => Err(RepoError::Transport {
                what: url.to_string(),
                detail: err.to_string(),
            }),
        }
    }
}

impl RepositoryClient for HttpRepository {
    fn fetch_pom(&self, coordinate: &MavenCoordinate) -> Result<String, RepoError> {
        let url = self.url_for(
            &coordinate.group,
            &coordinate.artifact,
            &format!(
                "{}/{}-{}.pom",
                coordinate.version, coordinate.artifact, coordinate.version
            ),
        );
        self.get(&url, coordinate.clone())
    }

    fn fetch_metadata(&self, group: &str, artifact: &str) -> Result<ArtifactMetadata, RepoError> {
        let url = self.url_for(group, artifact, "maven-metadata.xml");
        let body = self.get(&url, MavenCoordinate::new(group, artifact, ""))?;
        parse_metadata(&body)
    }
}

/// Tries each layer in order; NotFound falls through to the next layer.
/// Used to overlay a generated stub descriptor on a real repository.
pub struct LayeredRepository {
    layers: Vec<Box<dyn RepositoryClient>>,
}

impl LayeredRepository {
    pub fn new(layers: Vec<Box<dyn RepositoryClient>>) -> LayeredRepository {
        LayeredRepository { layers }
    }

    fn try_each<T>(
        &self,
        mut call: impl FnMut(&dyn RepositoryClient) -> Result<T, RepoError>,
        empty: RepoError,
    ) -> Result<T, RepoError> {
        let mut last = empty;
        for layer in &self.layers {
            match call(layer.as_ref()) {
                Err(RepoError::NotFound(c)) => last = RepoError::NotFound(c),
                other => return other,
            }
        }
        Err(last)
    }
}

impl RepositoryClient for LayeredRepository {
    fn fetch_pom(&self, coordinate: &MavenCoordinate) -> Result<String, RepoError> {
        self.try_each(
            |layer| layer.fetch_pom(coordinate),
            RepoError::NotFound(coordinate.clone()),
        )
    }

    fn fetch_metadata(&self, group: &str, artifact: &str) -> Result<ArtifactMetadata, RepoError> {
        self.try_each(
            |layer| layer.fetch_metadata(group, artifact),
            RepoError::NotFound(MavenCoordinate::new(group, artifact, "")),
        )
    }
}

/// Concurrent in-process POM cache in front of another client. Writes are
/// last-wins on identical keys; identical keys always map to identical
/// bodies, so racing resolvers are safe.
pub struct CachingClient<C> {
    inner: C,
    poms: Mutex<HashMap<(String, String, String), String>>,
}

impl<C: RepositoryClient> CachingClient<C> {
    pub fn new(inner: C) -> CachingClient<C> {
        CachingClient {
            inner,
            poms: Mutex::new(HashMap::new()),
        }
    }
}

impl<C: RepositoryClient> RepositoryClient for CachingClient<C> {
    fn fetch_pom(&self, coordinate: &MavenCoordinate) -> Result<String, RepoError> {
        let key = (
            coordinate.group.clone(),
            coordinate.artifact.clone(),
            coordinate.version.clone(),
        );
        if let Some(hit) = self.poms.lock().expect("pom cache poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let body = self.inner.fetch_pom(coordinate)?;
        self.poms
            .lock()
            .expect("pom cache poisoned")
            .insert(key, body.clone());
        Ok(body)
    }

    fn fetch_metadata(&self, group: &str, artifact: &str) -> Result<ArtifactMetadata, RepoError> {
        self.inner.fetch_metadata(group, artifact)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_pom(group: &str, artifact: &str, version: &str) -> String {
        format!(
            "<project><groupId>{group}</groupId><artifactId>{artifact}</artifactId>\
             <version>{version}</version></project>"
        )
    }

    #[test]
    fn in_memory_round_trip() {
        let mut repo = InMemoryRepository::new();
        repo.add_pom(&simple_pom("g", "a", "1.0"));
        let coordinate = MavenCoordinate::new("g", "a", "1.0");
        assert!(repo.fetch_pom(&coordinate).is_ok());
        assert!(matches!(
            repo.fetch_pom(&MavenCoordinate::new("g", "a", "2.0")),
            Err(RepoError::NotFound(_))
        ));
    }

    #[test]
    fn metadata_parsing() {
        let metadata = parse_metadata(
            r#"<metadata>
              <groupId>g</groupId><artifactId>a</artifactId>
              <versioning>
                <latest>2.1</latest>
                <release>2.0</release>
                <versions><version>1.0</version><version>2.0</version><version>2.1</version></versions>
              </versioning>
            </metadata>"#,
        )
        .unwrap();
        assert_eq!(metadata.versions, vec!["1.0", "2.0", "2.1"]);
        assert_eq!(metadata.release.as_deref(), Some("2.0"));
        assert_eq!(metadata.highest(), Some("2.0"));
    }

    #[test]
    fn metadata_highest_falls_back_to_last_listed() {
        let metadata = ArtifactMetadata {
            versions: vec!["1.0".into(), "1.1".into()],
            latest: None,
            release: None,
        };
        assert_eq!(metadata.highest(), Some("1.1"));
        assert_eq!(ArtifactMetadata::default().highest(), None);
    }

    #[test]
    fn file_repository_layout() {
        let dir = tempfile::tempdir().unwrap();
        let pom_dir = dir.path().join("com/example/lib/1.0");
        std::fs::create_dir_all(&pom_dir).unwrap();
        std::fs::write(pom_dir.join("lib-1.0.pom"), simple_pom("com.example", "lib", "1.0"))
            .unwrap();
        std::fs::write(
            dir.path().join("com/example/lib/maven-metadata.xml"),
            "<metadata><versioning><versions><version>1.0</version></versions></versioning></metadata>",
        )
        .unwrap();

        let repo = FileRepository::new(dir.path());
        let coordinate = MavenCoordinate::new("com.example", "lib", "1.0");
        assert!(repo.fetch_pom(&coordinate).is_ok());
        assert_eq!(
            repo.fetch_metadata("com.example", "lib").unwrap().versions,
            vec!["1.0"]
        );
        assert!(matches!(
            repo.fetch_metadata("com.example", "other"),
            Err(RepoError::NotFound(_))
        ));
    }

    #[test]
    fn layered_falls_through_not_found() {
        let mut bottom = InMemoryRepository::new();
        bottom.add_pom(&simple_pom("g", "real", "1.0"));
        let mut top = InMemoryRepository::new();
        top.add_pom(&simple_pom("org.allowlistforge", "stub", "1.0"));

        let layered = LayeredRepository::new(vec![Box::new(top), Box::new(bottom)]);
        assert!(layered
            .fetch_pom(&MavenCoordinate::new("org.allowlistforge", "stub", "1.0"))
            .is_ok());
        assert!(layered
            .fetch_pom(&MavenCoordinate::new("g", "real", "1.0"))
            .is_ok());
        assert!(matches!(
            layered.fetch_pom(&MavenCoordinate::new("g", "missing", "1.0")),
            Err(RepoError::NotFound(_))
        ));
    }

    #[test]
    fn caching_client_serves_repeats() {
        let mut repo = InMemoryRepository::new();
        repo.add_pom(&simple_pom("g", "a", "1.0"));
        let caching = CachingClient::new(repo);
        let coordinate = MavenCoordinate::new("g", "a", "1.0");
        let first = caching.fetch_pom(&coordinate).unwrap();
        let second = caching.fetch_pom(&coordinate).unwrap();
        assert_eq!(first, second);
    }
}
