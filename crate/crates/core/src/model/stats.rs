use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::AllowList;

/// Histograms over an allowlist: where names are rooted, how many fields
/// they have, and how often each field occurs positionally.
///
/// Field occurrences are counted per occurrence, so a field repeated inside
/// one name counts each time. For every field `f`,
/// `field_occurrences_with_roots[f] == roots_histogram[f] + field_occurrences_without_roots[f]`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StatsReport {
    pub total: u64,
    pub roots_histogram: BTreeMap<String, u64>,
    pub fields_histogram: BTreeMap<u32, u64>,
    pub field_occurrences_with_roots: BTreeMap<String, u64>,
    pub field_occurrences_without_roots: BTreeMap<String, u64>,
}

impl StatsReport {
    pub fn top_roots(&self, n: usize) -> Vec<(String, u64)> {
        top_n(&self.roots_histogram, n)
    }

    pub fn top_fields_with_roots(&self, n: usize) -> Vec<(String, u64)> {
        top_n(&self.field_occurrences_with_roots, n)
    }

    pub fn top_fields_without_roots(&self, n: usize) -> Vec<(String, u64)> {
        top_n(&self.field_occurrences_without_roots, n)
    }
}

pub fn compute_stats(list: &AllowList) -> StatsReport {
    let mut report = StatsReport {
        total: list.len() as u64,
        ..StatsReport::default()
    };
    for name in list.iter() {
        *report
            .roots_histogram
            .entry(name.root().to_string())
            .or_insert(0) += 1;
        *report
            .fields_histogram
            .entry(name.field_count() as u32)
            .or_insert(0) += 1;
        for (position, segment) in name.segments().enumerate() {
            *report
                .field_occurrences_with_roots
                .entry(segment.to_string())
                .or_insert(0) += 1;
            if position > 0 {
                *report
                    .field_occurrences_without_roots
                    .entry(segment.to_string())
                    .or_insert(0) += 1;
            }
        }
    }
    report
}

/// Highest counts first; ties broken by ascending field name.
fn top_n(histogram: &BTreeMap<String, u64>, n: usize) -> Vec<(String, u64)> {
    let mut entries: Vec<(String, u64)> = histogram
        .iter()
        .map(|(field, count)| (field.clone(), *count))
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    entries.truncate(n);
    entries
}
