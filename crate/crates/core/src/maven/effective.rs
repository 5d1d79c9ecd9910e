//! Effective descriptor computation: parent-chain inheritance, `${...}`
//! property interpolation, dependency-management merging, and import-scope
//! expansion.

use std::collections::BTreeMap;

use thiserror::Error;

use super::coordinate::{MavenCoordinate, Scope};
use super::pom::{parse_pom, DependencyDecl, PomError, PomModel};
use super::repo::{RepoError, RepositoryClient};

/// Parent chains and import chains both stop here.
pub const PARENT_DEPTH_CAP: usize = 32;

const INTERPOLATION_PASSES: usize = 10;

#[derive(Debug, Error)]
pub enum EffectiveError {
    #[error(transparent)]
    Pom(#[from] PomError),
    #[error(transparent)]
    Repo(#[from] RepoError),
    #[error("parent/import chain exceeds depth cap {0}")]
    DepthExceeded(usize),
    #[error("unresolved property ${{{0}}}")]
    UnresolvedProperty(String),
}

/// Descriptor after inheritance and interpolation. `managed` is keyed by
/// (group, artifact); dependency versions have already been filled from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectivePom {
    pub coordinate: MavenCoordinate,
    pub packaging: String,
    pub properties: BTreeMap<String, String>,
    pub dependencies: Vec<DependencyDecl>,
    pub managed: BTreeMap<(String, String), DependencyDecl>,
}

pub fn resolve_effective_pom(
    coordinate: &MavenCoordinate,
    repo: &dyn RepositoryClient,
) -> Result<EffectivePom, EffectiveError> {
    resolve_at_depth(coordinate, repo, 0)
}

fn resolve_at_depth(
    coordinate: &MavenCoordinate,
    repo: &dyn RepositoryClient,
    depth: usize,
) -> Result<EffectivePom, EffectiveError> {
    let chain = load_chain(coordinate, repo)?;

    // Properties: walk root-first so nearer descriptors override.
    let mut properties = BTreeMap::new();
    for model in chain.iter().rev() {
        properties.extend(model.properties.clone());
    }

    let child = &chain[0];
    let mut group = child.coordinate.group.clone();
    let mut version = child.coordinate.version.clone();
    for ancestor in &chain[1..] {
        if group.is_empty() {
            group = ancestor.coordinate.group.clone();
        }
        if version.is_empty() {
            version = ancestor.coordinate.version.clone();
        }
    }
    let group = interpolate(&group, &properties)?;
    let version = interpolate(&version, &properties)?;
    let artifact = child.coordinate.artifact.clone();

    // The project's own coordinates are available as properties; both the
    // modern and the legacy spellings appear in the wild.
    for prefix in ["project", "pom"] {
        properties.insert(format!("{prefix}.groupId"), group.clone());
        properties.insert(format!("{prefix}.artifactId"), artifact.clone());
        properties.insert(format!("{prefix}.version"), version.clone());
    }

    let mut managed_entries = Vec::new();
    for model in &chain {
        for decl in &model.dependency_management {
            managed_entries.push(interpolate_decl(decl, &properties)?);
        }
    }
    let mut managed: BTreeMap<(String, String), DependencyDecl> = BTreeMap::new();
    for decl in managed_entries {
        if decl.scope == Scope::Import {
            if depth >= PARENT_DEPTH_CAP {
                return Err(EffectiveError::DepthExceeded(PARENT_DEPTH_CAP));
            }
            let imported = resolve_at_depth(&decl.coordinate, repo, depth + 1)?;
            for (key, imported_decl) in imported.managed {
                managed.entry(key).or_insert(imported_decl);
            }
        } else {
            managed.entry(decl.coordinate.key()).or_insert(decl);
        }
    }

    // Dependencies are inherited too: the child's declarations shadow a
    // parent's for the same (group, artifact).
    let mut dependencies: Vec<DependencyDecl> = Vec::new();
    for model in &chain {
        for decl in &model.dependencies {
            let decl = interpolate_decl(decl, &properties)?;
            if dependencies
                .iter()
                .any(|d| d.coordinate.key() == decl.coordinate.key())
            {
                continue;
            }
            dependencies.push(decl);
        }
    }
    for decl in &mut dependencies {
        if decl.coordinate.version.is_empty() {
            if let Some(managed_decl) = managed.get(&decl.coordinate.key()) {
                decl.coordinate.version = managed_decl.coordinate.version.clone();
            }
        }
    }

    Ok(EffectivePom {
        coordinate: MavenCoordinate::new(group, artifact, version),
        packaging: child.packaging.clone(),
        properties,
        dependencies,
        managed,
    })
}

/// Child-first parent chain, fetched and parsed, capped at
/// [`PARENT_DEPTH_CAP`]. A self-referential parent keeps producing links
/// until the cap trips.
fn load_chain(
    coordinate: &MavenCoordinate,
    repo: &dyn RepositoryClient,
) -> Result<Vec<PomModel>, EffectiveError> {
    let mut chain = Vec::new();
    let mut next = Some(coordinate.clone());
    while let Some(coordinate) = next {
        if chain.len() >= PARENT_DEPTH_CAP {
            return Err(EffectiveError::DepthExceeded(PARENT_DEPTH_CAP));
        }
        let document = repo.fetch_pom(&coordinate)?;
        let model = parse_pom(&document)?;
        next = model.parent.clone();
        chain.push(model);
    }
    Ok(chain)
}

fn interpolate_decl(
    decl: &DependencyDecl,
    properties: &BTreeMap<String, String>,
) -> Result<DependencyDecl, EffectiveError> {
    let mut out = decl.clone();
    out.coordinate.group = interpolate(&decl.coordinate.group, properties)?;
    out.coordinate.artifact = interpolate(&decl.coordinate.artifact, properties)?;
    out.coordinate.version = interpolate(&decl.coordinate.version, properties)?;
    Ok(out)
}

/// Expands `${name}` references, including references that resolve to
/// further references, up to a fixed pass count. A reference to an unknown
/// property is an error naming the property; an unterminated `${` is left
/// as literal text.
pub fn interpolate(
    input: &str,
    properties: &BTreeMap<String, String>,
) -> Result<String, EffectiveError> {
    let mut current = input.to_string();
    for _ in 0..INTERPOLATION_PASSES {
        if !current.contains("${") {
            return Ok(current);
        }
        let mut output = String::with_capacity(current.len());
        let mut rest = current.as_str();
        let mut changed = false;
        while let Some(start) = rest.find("${") {
            output.push_str(&rest[..start]);
            let tail = &rest[start + 2..];
            match tail.find('}') {
                Some(end) => {
                    let name = &tail[..end];
                    match properties.get(name) {
                        Some(value) => {
                            output.push_str(value);
                            changed = true;
                        }
                        None => {
                            return Err(EffectiveError::UnresolvedProperty(name.to_string()))
                        }
                    }
                    rest = &tail[end + 1..];
                }
                None => {
                    output.push_str(&rest[start..]);
                    rest = "";
                }
            }
        }
        output.push_str(rest);
        if !changed {
            return Ok(output);
        }
        current = output;
    }
    // Still rewriting after the pass cap: property definitions form a cycle.
    let name = current
        .split("${")
        .nth(1)
        .and_then(|tail| tail.split('}').next())
        .unwrap_or("")
        .to_string();
    Err(EffectiveError::UnresolvedProperty(name))
}
