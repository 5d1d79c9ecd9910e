//! Descriptor parsing, effective-descriptor computation, transitive
//! dependency resolution, and artifact-index ingestion.

pub mod coordinate;
pub mod effective;
pub mod index;
pub mod pom;
pub mod repo;
pub mod tree;
pub mod treetext;

pub use coordinate::{CoordinateError, MavenCoordinate, Scope};
pub use effective::{resolve_effective_pom, EffectiveError, EffectivePom, PARENT_DEPTH_CAP};
pub use index::{parse_index_export, IndexExport};
pub use pom::{
    generate_stub_pom, is_stub, parse_pom, stub_coordinate, DependencyDecl, PomError, PomModel,
    STUB_ARTIFACT, STUB_GROUP, STUB_VERSION,
};
pub use repo::{
    parse_metadata, ArtifactMetadata, CachingClient, FileRepository, HttpRepository,
    InMemoryRepository, LayeredRepository, RepoError, RepositoryClient,
};
pub use tree::{collect_transitive, resolve_tree, DependencyTree, TreeError, TREE_DEPTH_CAP};
pub use treetext::{parse_dependency_tree_text, render_tree_text, TreeTextError};
