use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoordinateError {
    #[error("coordinate \"{0}\" has no group id")]
    MissingGroup(String),
    #[error("coordinate \"{0}\" has too many fields")]
    TooManyFields(String),
}

/// group:artifact:version triple. Version (and, for bare index lines,
/// artifact) may be empty meaning not-yet-resolved.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MavenCoordinate {
    pub group: String,
    pub artifact: String,
    pub version: String,
}

impl MavenCoordinate {
    pub fn new(
        group: impl Into<String>,
        artifact: impl Into<String>,
        version: impl Into<String>,
    ) -> MavenCoordinate {
        MavenCoordinate {
            group: group.into(),
            artifact: artifact.into(),
            version: version.into(),
        }
    }

    /// Accepts "group", "group:artifact", or "group:artifact:version".
    pub fn parse(input: &str) -> Result<MavenCoordinate, CoordinateError> {
        let trimmed = input.trim();
        let mut parts = trimmed.split(':');
        let group = parts.next().unwrap_or("").trim();
        let artifact = parts.next().unwrap_or("").trim();
        let version = parts.next().unwrap_or("").trim();
        if parts.next().is_some() {
            return Err(CoordinateError::TooManyFields(trimmed.to_string()));
        }
        if group.is_empty() {
            return Err(CoordinateError::MissingGroup(trimmed.to_string()));
        }
        Ok(MavenCoordinate::new(group, artifact, version))
    }

    /// Mediation key: conflict resolution operates per (group, artifact).
    pub fn key(&self) -> (String, String) {
        (self.group.clone(), self.artifact.clone())
    }

    pub fn is_fully_versioned(&self) -> bool {
        !self.group.is_empty() && !self.artifact.is_empty() && !self.version.is_empty()
    }
}

impl fmt::Display for MavenCoordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.group, self.artifact, self.version)
    }
}

/// Standard dependency scopes. `import` is only meaningful inside
/// dependencyManagement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Scope {
    #[default]
    Compile,
    Runtime,
    Provided,
    Test,
    System,
    Import,
}

impl Scope {
    pub fn as_str(self) -> &'static str {
        match self {
            Scope::Compile => "compile",
            Scope::Runtime => "runtime",
            Scope::Provided => "provided",
            Scope::Test => "test",
            Scope::System => "system",
            Scope::Import => "import",
        }
    }

    /// Scopes a transitive walk descends through.
    pub fn is_transitive(self) -> bool {
        matches!(self, Scope::Compile | Scope::Runtime)
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Scope, String> {
        match s.trim() {
            "compile" => Ok(Scope::Compile),
            "runtime" => Ok(Scope::Runtime),
            "provided" => Ok(Scope::Provided),
            "test" => Ok(Scope::Test),
            "system" => Ok(Scope::System),
            "import" => Ok(Scope::Import),
            other => Err(format!("unknown scope \"{other}\"")),
        }
    }
}
