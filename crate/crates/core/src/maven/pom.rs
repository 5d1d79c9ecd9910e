//! Event-based parser for project descriptor XML (pom.xml).

use std::collections::BTreeMap;

use quick_xml::events::Event;
use quick_xml::Reader;
use thiserror::Error;

use super::coordinate::{MavenCoordinate, Scope};

#[derive(Debug, Error)]
pub enum PomError {
    #[error("xml syntax error: {0}")]
    XmlSyntax(String),
    #[error("descriptor is missing mandatory element <{0}>")]
    MissingMandatory(&'static str),
    #[error("cannot generate a stub for {0}: version is empty")]
    UnversionedStubTarget(MavenCoordinate),
}

/// One `<dependency>` entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyDecl {
    pub coordinate: MavenCoordinate,
    pub scope: Scope,
    pub optional: bool,
    /// (group, artifact) pairs; artifact may be the wildcard "*".
    pub exclusions: Vec<(String, String)>,
}

impl DependencyDecl {
    pub fn new(coordinate: MavenCoordinate) -> DependencyDecl {
        DependencyDecl {
            coordinate,
            scope: Scope::default(),
            optional: false,
            exclusions: Vec::new(),
        }
    }
}

/// Parsed descriptor before inheritance and interpolation. Group and version
/// may still be empty when a parent supplies them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PomModel {
    pub coordinate: MavenCoordinate,
    pub parent: Option<MavenCoordinate>,
    pub packaging: String,
    pub properties: BTreeMap<String, String>,
    pub dependencies: Vec<DependencyDecl>,
    pub dependency_management: Vec<DependencyDecl>,
}

fn local_name(raw: &[u8]) -> String {
    let name = String::from_utf8_lossy(raw);
    match name.rsplit_once(':') {
        Some((_, local)) => local.to_string(),
        None => name.into_owned(),
    }
}

/// Where inside the descriptor a text value landed.
fn path_is(path: &[String], suffix: &[&str]) -> bool {
    path.len() == suffix.len() && path.iter().zip(suffix).all(|(a, b)| a == b)
}

pub fn parse_pom(document: &str) -> Result<PomModel, PomError> {
    let mut reader = Reader::from_str(document);
    reader.trim_text(true);

    let mut path: Vec<String> = Vec::new();
    let mut saw_project = false;

    let mut group = String::new();
    let mut artifact = String::new();
    let mut version = String::new();
    let mut packaging = String::new();
    let mut parent: Option<MavenCoordinate> = None;
    let mut properties = BTreeMap::new();
    let mut dependencies = Vec::new();
    let mut dependency_management = Vec::new();

    // Builder state for the <dependency> currently open, if any.
    let mut current: Option<DependencyDecl> = None;
    let mut current_exclusion: Option<(String, String)> = None;

    let mut buf = Vec::new();
    loop {
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| PomError::XmlSyntax(e.to_string()))?;
        match event {
            Event::Start(start) => {
                let name = local_name(start.name().as_ref());
                if path.is_empty() && name == "project" {
                    saw_project = true;
                }
                if name == "dependency"
                    && (path_is(&path, &["project", "dependencies"])
                        || path_is(
                            &path,
                            &["project", "dependencyManagement", "dependencies"],
                        ))
                {
                    current = Some(DependencyDecl::new(MavenCoordinate::new("", "", "")));
                }
                if name == "exclusion" {
                    current_exclusion = Some((String::new(), String::new()));
                }
                path.push(name);
            }
            Event::End(_) => {
                let name = path.pop().unwrap_or_default();
                if name == "exclusion" {
                    if let (Some(decl), Some(exclusion)) = (&mut current, current_exclusion.take())
                    {
                        decl.exclusions.push(exclusion);
                    }
                }
                if name == "dependency" {
                    if let Some(decl) = current.take() {
                        if decl.coordinate.artifact.is_empty() {
                            log::warn!("skipping dependency without artifactId");
                        } else if path_is(&path, &["project", "dependencies"]) {
                            dependencies.push(decl);
                        } else if path_is(
                            &path,
                            &["project", "dependencyManagement", "dependencies"],
                        ) {
                            dependency_management.push(decl);
                        }
                    }
                }
            }
            Event::Empty(start) => {
                // Self-closing elements carry no text; nothing to record.
                let _ = local_name(start.name().as_ref());
            }
            Event::Text(text) => {
                let value = text
                    .unescape()
                    .map_err(|e| PomError::XmlSyntax(e.to_string()))?
                    .trim()
                    .to_string();
                if value.is_empty() {
                    continue;
                }
                record_text(
                    &path,
                    &value,
                    &mut group,
                    &mut artifact,
                    &mut version,
                    &mut packaging,
                    &mut parent,
                    &mut properties,
                    &mut current,
                    &mut current_exclusion,
                );
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }

    if !saw_project {
        return Err(PomError::XmlSyntax(
            "no project root element found".to_string(),
        ));
    }
    if artifact.is_empty() {
        return Err(PomError::MissingMandatory("artifactId"));
    }
    if packaging.is_empty() {
        packaging = "jar".to_string();
    }
    Ok(PomModel {
        coordinate: MavenCoordinate::new(group, artifact, version),
        parent,
        packaging,
        properties,
        dependencies,
        dependency_management,
    })
}

#[allow(clippy::too_many_arguments)]
fn record_text(
    path: &[String],
    value: &str,
    group: &mut String,
    artifact: &mut String,
    version: &mut String,
    packaging: &mut String,
    parent: &mut Option<MavenCoordinate>,
    properties: &mut BTreeMap<String, String>,
    current: &mut Option<DependencyDecl>,
    current_exclusion: &mut Option<(String, String)>,
) {
    if path_is(path, &["project", "groupId"]) {
        *group = value.to_string();
    } else if path_is(path, &["project", "artifactId"]) {
        *artifact = value.to_string();
    } else if path_is(path, &["project", "version"]) {
        *version = value.to_string();
    } else if path_is(path, &["project", "packaging"]) {
        *packaging = value.to_string();
    } else if path.len() == 3 && path[0] == "project" && path[1] == "parent" {
        let slot = parent.get_or_insert_with(|| MavenCoordinate::new("", "", ""));
        match path[2].as_str() {
            "groupId" => slot.group = value.to_string(),
            "artifactId" => slot.artifact = value.to_string(),
            "version" => slot.version = value.to_string(),
            _ => {}
        }
    } else if path.len() == 3 && path[0] == "project" && path[1] == "properties" {
        properties.insert(path[2].clone(), value.to_string());
    } else if let Some(exclusion) = current_exclusion {
        if path.last().map(String::as_str) == Some("groupId") {
            exclusion.0 = value.to_string();
        } else if path.last().map(String::as_str) == Some("artifactId") {
            exclusion.1 = value.to_string();
        }
    } else if let Some(decl) = current {
        // Inside a <dependency>, one level below it.
        match path.last().map(String::as_str) {
            Some("groupId") => decl.coordinate.group = value.to_string(),
            Some("artifactId") => decl.coordinate.artifact = value.to_string(),
            Some("version") => decl.coordinate.version = value.to_string(),
            Some("scope") => {
                decl.scope = value.parse().unwrap_or_else(|_| {
                    log::warn!("unknown scope \"{value}\", treating as compile");
                    Scope::Compile
                })
            }
            Some("optional") => decl.optional = value.eq_ignore_ascii_case("true"),
            _ => {}
        }
    }
}

/// Fixed dummy-project identity used when resolving a single target library.
pub const STUB_GROUP: &str = "org.allowlistforge";
pub const STUB_ARTIFACT: &str = "stub";
pub const STUB_VERSION: &str = "1.0";

pub fn stub_coordinate() -> MavenCoordinate {
    MavenCoordinate::new(STUB_GROUP, STUB_ARTIFACT, STUB_VERSION)
}

pub fn is_stub(coordinate: &MavenCoordinate) -> bool {
    coordinate.group == STUB_GROUP && coordinate.artifact == STUB_ARTIFACT
}

/// Emits a dummy-project descriptor whose sole dependency is `target`.
pub fn generate_stub_pom(target: &MavenCoordinate) -> Result<String, PomError> {
    if !target.is_fully_versioned() {
        return Err(PomError::UnversionedStubTarget(target.clone()));
    }
    Ok(format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>
<project xmlns=\"http://maven.apache.org/POM/4.0.0\">
  <modelVersion>4.0.0</modelVersion>
  <groupId>{STUB_GROUP}</groupId>
  <artifactId>{STUB_ARTIFACT}</artifactId>
  <version>{STUB_VERSION}</version>
  <packaging>pom</packaging>
  <dependencies>
    <dependency>
      <groupId>{}</groupId>
      <artifactId>{}</artifactId>
      <version>{}</version>
    </dependency>
  </dependencies>
</project>
",
        target.group, target.artifact, target.version
    ))
}
