//! Allowlist refinement: drop every entry already covered by a
//! whole-segment prefix entry, keeping the minimal covering set.

use std::collections::BTreeMap;
use std::path::Path;

use crate::model::{AllowList, PackageName};

#[derive(Debug, Default)]
struct TrieNode {
    children: BTreeMap<String, TrieNode>,
    terminal: bool,
}

/// Segment-keyed trie over package names. Terminal nodes mark stored names.
#[derive(Debug, Default)]
pub struct PrefixTrie {
    root: TrieNode,
}

impl PrefixTrie {
    pub fn new() -> PrefixTrie {
        PrefixTrie::default()
    }

    pub fn from_allowlist(list: &AllowList) -> PrefixTrie {
        let mut trie = PrefixTrie::new();
        for name in list.iter() {
            trie.insert(name);
        }
        trie
    }

    pub fn insert(&mut self, name: &PackageName) {
        let mut node = &mut self.root;
        for segment in name.segments() {
            node = node.children.entry(segment.to_string()).or_default();
        }
        node.terminal = true;
    }

    /// True iff some stored name equals `name` or is a whole-segment prefix
    /// of it.
    pub fn covers(&self, name: &PackageName) -> bool {
        let mut node = &self.root;
        for segment in name.segments() {
            node = match node.children.get(segment) {
                Some(child) => child,
                None => return false,
            };
            if node.terminal {
                return true;
            }
        }
        false
    }

    /// The stored name covering `name`, if any (shortest cover wins).
    pub fn find_cover(&self, name: &PackageName) -> Option<PackageName> {
        let mut node = &self.root;
        let mut consumed: Vec<&str> = Vec::new();
        for segment in name.segments() {
            node = node.children.get(segment)?;
            consumed.push(segment);
            if node.terminal {
                let text = consumed.join(".");
                return Some(PackageName::parse(&text).expect("segments came from a valid name"));
            }
        }
        None
    }
}

/// One refinement removal: `removed` was dropped because `covered_by` is a
/// whole-segment prefix of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Removal {
    pub removed: PackageName,
    pub covered_by: PackageName,
}

#[derive(Debug)]
pub struct RefineOutcome {
    pub list: AllowList,
    pub removals: Vec<Removal>,
}

/// Single sorted insert-and-prune pass. Entries arrive in ascending order,
/// so any covering prefix is inserted before the names it covers; the result
/// is the same fixpoint an iterate-until-stable scan would reach.
pub fn refine(list: &AllowList) -> RefineOutcome {
    let mut trie = PrefixTrie::new();
    let mut kept = std::collections::BTreeSet::new();
    let mut removals = Vec::new();
    for name in list.iter() {
        match trie.find_cover(name) {
            Some(covered_by) => removals.push(Removal {
                removed: name.clone(),
                covered_by,
            }),
            None => {
                trie.insert(name);
                kept.insert(name.clone());
            }
        }
    }
    RefineOutcome {
        list: AllowList::refined_from(kept),
        removals,
    }
}

/// True iff some entry equals `name` or is a whole-segment prefix of it,
/// which is what makes `name` count as library code.
pub fn is_covered(name: &PackageName, list: &AllowList) -> bool {
    PrefixTrie::from_allowlist(list).covers(name)
}

/// Writes the removal report as CSV with a `removed_name,covering_name`
/// header.
pub fn write_removal_report(removals: &[Removal], destination: &Path) -> csv::Result<()> {
    let mut writer = csv::Writer::from_path(destination)?;
    writer.write_record(["removed_name", "covering_name"])?;
    for removal in removals {
        writer.write_record([removal.removed.as_str(), removal.covered_by.as_str()])?;
    }
    writer.flush()?;
    Ok(())
}
