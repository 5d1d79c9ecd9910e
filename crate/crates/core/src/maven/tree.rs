//! Transitive dependency-tree resolution with nearest-wins version
//! mediation, scope propagation, exclusions, and a hard deadline.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::model::PackageName;

use super::coordinate::{MavenCoordinate, Scope};
use super::effective::{resolve_effective_pom, EffectiveError};
use super::pom::is_stub;
use super::repo::{RepoError, RepositoryClient};

/// Trees deeper than this stop expanding; guards corrupt repositories.
pub const TREE_DEPTH_CAP: usize = 64;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("resolution exceeded the {0:?} deadline")]
    TimedOut(Duration),
    #[error(transparent)]
    Effective(#[from] EffectiveError),
    #[error("no version for {group}:{artifact} after management lookup")]
    UnresolvableVersion { group: String, artifact: String },
}

/// Resolved node. The root carries no scope; every child edge does.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyTree {
    pub coordinate: MavenCoordinate,
    pub packaging: String,
    pub scope: Option<Scope>,
    pub children: Vec<DependencyTree>,
}

impl DependencyTree {
    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(DependencyTree::node_count).sum::<usize>()
    }

    /// Depth-first, root first, declaration order.
    pub fn walk(&self, visit: &mut dyn FnMut(&DependencyTree)) {
        visit(self);
        for child in &self.children {
            child.walk(visit);
        }
    }
}

struct ArenaNode {
    coordinate: MavenCoordinate,
    packaging: String,
    scope: Option<Scope>,
    children: Vec<usize>,
}

struct Expansion {
    index: usize,
    depth: usize,
    exclusions: HashSet<(String, String)>,
}

fn is_excluded(exclusions: &HashSet<(String, String)>, group: &str, artifact: &str) -> bool {
    exclusions.contains(&(group.to_string(), artifact.to_string()))
        || exclusions.contains(&(group.to_string(), "*".to_string()))
}

fn looks_like_range(version: &str) -> bool {
    version.starts_with('[') || version.starts_with('(')
}

/// Effective scope of a child edge given the scope of the edge above it:
/// anything reached through a runtime edge is itself runtime.
fn propagate(parent: Option<Scope>, declared: Scope) -> Scope {
    match (parent, declared) {
        (Some(Scope::Runtime), Scope::Compile) => Scope::Runtime,
        _ => declared,
    }
}

/// Breadth-first resolution from `root`. The first occurrence of a
/// (group, artifact) pair — shallowest depth, earliest declaration — wins;
/// later occurrences are omitted, so each pair appears at most once in the
/// whole tree. Direct dependencies keep all scopes; the walk only descends
/// through compile and runtime edges.
pub fn resolve_tree(
    root: &MavenCoordinate,
    repo: &dyn RepositoryClient,
    deadline: Duration,
) -> Result<DependencyTree, TreeError> {
    let started = Instant::now();
    let check = |started: Instant| -> Result<(), TreeError> {
        if started.elapsed() >= deadline {
            Err(TreeError::TimedOut(deadline))
        } else {
            Ok(())
        }
    };

    check(started)?;
    let root_effective = resolve_effective_pom(root, repo)?;

    let mut arena = vec![ArenaNode {
        coordinate: root.clone(),
        packaging: root_effective.packaging.clone(),
        scope: None,
        children: Vec::new(),
    }];
    let mut winners: HashSet<(String, String)> = HashSet::new();
    winners.insert(root.key());

    let mut queue = VecDeque::new();
    queue.push_back((
        Expansion {
            index: 0,
            depth: 0,
            exclusions: HashSet::new(),
        },
        Some(root_effective),
    ));

    while let Some((task, prefetched)) = queue.pop_front() {
        check(started)?;
        let effective = match prefetched {
            Some(effective) => effective,
            None => match resolve_effective_pom(&arena[task.index].coordinate, repo) {
                Ok(effective) => effective,
                Err(EffectiveError::Repo(RepoError::NotFound(coordinate))) => {
                    log::warn!("descriptor for {coordinate} not found; treating as leaf");
                    continue;
                }
                Err(err) => {
                    log::warn!(
                        "cannot compute effective descriptor for {}: {err}; treating as leaf",
                        arena[task.index].coordinate
                    );
                    continue;
                }
            },
        };
        if task.depth > 0 {
            arena[task.index].packaging = effective.packaging.clone();
        }

        let parent_scope = arena[task.index].scope;
        for decl in &effective.dependencies {
            if decl.scope == Scope::Import {
                continue;
            }
            let group = &decl.coordinate.group;
            let artifact = &decl.coordinate.artifact;
            if is_excluded(&task.exclusions, group, artifact) {
                continue;
            }
            if task.depth > 0 {
                if decl.optional {
                    continue;
                }
                if !decl.scope.is_transitive() {
                    continue;
                }
            }
            if winners.contains(&decl.coordinate.key()) {
                continue;
            }

            let mut version = decl.coordinate.version.clone();
            if looks_like_range(&version) {
                version = match repo.fetch_metadata(group, artifact) {
                    Ok(metadata) => match metadata.highest() {
                        Some(v) => v.to_string(),
                        None => String::new(),
                    },
                    Err(_) => String::new(),
                };
            }
            if version.is_empty() {
                return Err(TreeError::UnresolvableVersion {
                    group: group.clone(),
                    artifact: artifact.clone(),
                });
            }

            let scope = propagate(parent_scope, decl.scope);
            winners.insert(decl.coordinate.key());
            let child_index = arena.len();
            arena.push(ArenaNode {
                coordinate: MavenCoordinate::new(group, artifact, version),
                packaging: "jar".to_string(),
                scope: Some(scope),
                children: Vec::new(),
            });
            arena[task.index].children.push(child_index);

            let child_depth = task.depth + 1;
            if !scope.is_transitive() {
                continue;
            }
            if child_depth >= TREE_DEPTH_CAP {
                log::warn!(
                    "depth cap {TREE_DEPTH_CAP} reached under {}; not descending further",
                    arena[child_index].coordinate
                );
                continue;
            }
            let mut exclusions = task.exclusions.clone();
            exclusions.extend(decl.exclusions.iter().cloned());
            queue.push_back((
                Expansion {
                    index: child_index,
                    depth: child_depth,
                    exclusions,
                },
                None,
            ));
        }
    }

    Ok(build(&arena, 0))
}

fn build(arena: &[ArenaNode], index: usize) -> DependencyTree {
    let node = &arena[index];
    DependencyTree {
        coordinate: node.coordinate.clone(),
        packaging: node.packaging.clone(),
        scope: node.scope,
        children: node.children.iter().map(|c| build(arena, *c)).collect(),
    }
}

/// Group identifiers of every node, deduplicated; a dummy stub root is not
/// part of the result.
pub fn collect_transitive(tree: &DependencyTree) -> BTreeSet<PackageName> {
    let mut groups = BTreeSet::new();
    let mut visit = |node: &DependencyTree| {
        if std::ptr::eq(node, tree) && is_stub(&node.coordinate) {
            return;
        }
        match PackageName::parse(&node.coordinate.group) {
            Ok(name) => {
                groups.insert(name);
            }
            Err(err) => log::warn!(
                "group \"{}\" is not a valid package name: {err}",
                node.coordinate.group
            ),
        }
    };
    tree.walk(&mut visit);
    groups
}
