//! Mining of build scripts checked out from application source
//! repositories: dependency declarations, repository declarations, and the
//! clone plan that produces the checkouts in the first place.

pub mod extract;
pub mod plan;
pub mod scan;

use std::fmt;
use std::path::PathBuf;

use crate::maven::MavenCoordinate;

pub use extract::{extract_dependencies, extract_repositories, strip_comments, ExtractionReport};
pub use plan::{build_clone_plan, write_clone_plan_csv, CloneEntry, ClonePlan, VcsKind};
pub use scan::{mine_projects, scan_project, write_dependency_report, MiningOutcome};

/// Which dependency configurations count as declarations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConfigurationSet {
    /// implementation, classpath, and compile — the trio that covers app
    /// dependencies across old and new Gradle DSLs.
    #[default]
    Standard,
    /// Adds the modern configuration names as an opt-in.
    Extended,
}

impl ConfigurationSet {
    pub fn accepts(self, configuration: &str) -> bool {
        const DEFAULT: [&str; 3] = ["implementation", "classpath", "compile"];
        const EXTENDED: [&str; 4] = ["api", "testImplementation", "annotationProcessor", "kapt"];
        DEFAULT.contains(&configuration)
            || (self == ConfigurationSet::Extended && EXTENDED.contains(&configuration))
    }
}

/// One extracted dependency declaration, with its provenance in the scanned
/// tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradleDependency {
    pub configuration: String,
    pub coordinate: MavenCoordinate,
    pub source_file: PathBuf,
    pub line: usize,
}

/// A declared artifact repository.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RepoDecl {
    Jcenter,
    GradlePluginPortal,
    Google,
    MavenCentral,
    Custom { url: String },
}

impl RepoDecl {
    pub fn kind(&self) -> &'static str {
        match self {
            RepoDecl::Jcenter => "jcenter",
            RepoDecl::GradlePluginPortal => "gradlePluginPortal",
            RepoDecl::Google => "google",
            RepoDecl::MavenCentral => "mavenCentral",
            RepoDecl::Custom { .. } => "custom",
        }
    }

    pub fn url(&self) -> Option<&str> {
        match self {
            RepoDecl::Custom { url } => Some(url),
            _ => None,
        }
    }
}

impl fmt::Display for RepoDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.url() {
            Some(url) => write!(f, "{} {}", self.kind(), url),
            None => f.write_str(self.kind()),
        }
    }
}
