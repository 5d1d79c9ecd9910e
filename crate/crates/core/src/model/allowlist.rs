use std::collections::BTreeSet;
use std::sync::Mutex;

use crate::model::PackageName;

/// A deduplicated, sorted set of package names.
///
/// The `refined` flag is bookkeeping, not data: it is set only by the
/// refinement pass and promises minimality (no entry is a whole-segment
/// prefix of another). Equality compares entries only.
#[derive(Debug, Clone, Default)]
pub struct AllowList {
    entries: BTreeSet<PackageName>,
    refined: bool,
}

impl AllowList {
    pub fn new(entries: BTreeSet<PackageName>) -> AllowList {
        AllowList {
            entries,
            refined: false,
        }
    }

    /// Union of the given source sets with duplicates removed.
    pub fn merge<I>(source_sets: I) -> AllowList
    where
        I: IntoIterator<Item = BTreeSet<PackageName>>,
    {
        let mut entries = BTreeSet::new();
        for set in source_sets {
            entries.extend(set);
        }
        AllowList::new(entries)
    }

    pub(crate) fn refined_from(entries: BTreeSet<PackageName>) -> AllowList {
        AllowList {
            entries,
            refined: true,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn refined(&self) -> bool {
        self.refined
    }

    pub fn contains(&self, name: &PackageName) -> bool {
        self.entries.contains(name)
    }

    /// Entries in ascending lexicographic order of their serialized form.
    pub fn iter(&self) -> impl Iterator<Item = &PackageName> {
        self.entries.iter()
    }

    pub fn entries(&self) -> &BTreeSet<PackageName> {
        &self.entries
    }

    pub fn into_entries(self) -> BTreeSet<PackageName> {
        self.entries
    }
}

impl PartialEq for AllowList {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl Eq for AllowList {}

impl FromIterator<PackageName> for AllowList {
    fn from_iter<T: IntoIterator<Item = PackageName>>(iter: T) -> Self {
        AllowList::new(iter.into_iter().collect())
    }
}

/// Outcome of one [`AllowListStore::submit`] call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubmitOutcome {
    pub added: usize,
    pub duplicates: usize,
}

/// Serialized merge point for concurrent producers.
///
/// Producers submit whole sets; each merge is applied atomically under the
/// lock, so the final contents are independent of submission order.
#[derive(Debug, Default)]
pub struct AllowListStore {
    inner: Mutex<BTreeSet<PackageName>>,
}

impl AllowListStore {
    pub fn new() -> AllowListStore {
        AllowListStore::default()
    }

    pub fn submit<I>(&self, names: I) -> SubmitOutcome
    where
        I: IntoIterator<Item = PackageName>,
    {
        let mut set = self.inner.lock().expect("allowlist store poisoned");
        let mut outcome = SubmitOutcome {
            added: 0,
            duplicates: 0,
        };
        for name in names {
            if set.insert(name) {
                outcome.added += 1;
            } else {
                outcome.duplicates += 1;
            }
        }
        outcome
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("allowlist store poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> AllowList {
        AllowList::new(self.inner.lock().expect("allowlist store poisoned").clone())
    }
}
