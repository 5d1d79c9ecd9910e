//! Classification of fully qualified class names into app, obfuscated,
//! library, and other code, driven by an app package and an allowlist.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use thiserror::Error;

use crate::model::{AllowList, NameError, PackageName};
use crate::refine::PrefixTrie;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed FQCN \"{input}\": {reason}")]
    MalformedFqcn { input: String, reason: String },
}

/// A fully qualified class name split into its package part and final
/// class-name segment. Classes in the default package have no package part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FqcnRecord {
    package_part: Option<PackageName>,
    class_name: String,
}

impl FqcnRecord {
    /// Splits at the last dot. The class-name segment may contain characters
    /// package segments cannot (inner classes like `Outer$Inner`).
    pub fn parse(input: &str) -> Result<FqcnRecord, ClassifyError> {
        let trimmed = input.trim();
        if trimmed.is_empty() {
            return Err(ClassifyError::MalformedFqcn {
                input: input.to_string(),
                reason: "empty".to_string(),
            });
        }
        let (package_part, class_name) = match trimmed.rsplit_once('.') {
            Some((package, class)) => {
                let package = PackageName::parse(package).map_err(|e: NameError| {
                    ClassifyError::MalformedFqcn {
                        input: trimmed.to_string(),
                        reason: e.to_string(),
                    }
                })?;
                (Some(package), class)
            }
            None => (None, trimmed),
        };
        if class_name.is_empty() || class_name.chars().any(|c| c.is_whitespace()) {
            return Err(ClassifyError::MalformedFqcn {
                input: trimmed.to_string(),
                reason: "bad class-name segment".to_string(),
            });
        }
        Ok(FqcnRecord {
            package_part,
            class_name: class_name.to_string(),
        })
    }

    pub fn package_part(&self) -> Option<&PackageName> {
        self.package_part.as_ref()
    }

    pub fn class_name(&self) -> &str {
        &self.class_name
    }
}

impl fmt::Display for FqcnRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.package_part {
            Some(package) => write!(f, "{package}.{}", self.class_name),
            None => f.write_str(&self.class_name),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    InAppPackage,
    Obfuscated,
    Library,
    Other,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::InAppPackage => "in_app_package",
            Category::Obfuscated => "obfuscated",
            Category::Library => "library",
            Category::Other => "other",
        })
    }
}

fn is_single_letter(segment: &str) -> bool {
    segment.len() == 1 && segment.chars().all(|c| c.is_ascii_alphabetic())
}

/// Name-obfuscation test: the first segment of the whole FQCN is a single
/// letter, or the class name itself is a single letter.
pub fn is_obfuscated(fqcn: &FqcnRecord) -> bool {
    let first_segment = match fqcn.package_part() {
        Some(package) => package.root(),
        None => fqcn.class_name(),
    };
    is_single_letter(first_segment) || is_single_letter(fqcn.class_name())
}

/// Classifier with the allowlist trie built once for repeated queries.
pub struct Classifier {
    app_package: PackageName,
    allowlist: PrefixTrie,
}

impl Classifier {
    pub fn new(app_package: PackageName, allowlist: &AllowList) -> Classifier {
        Classifier {
            app_package,
            allowlist: PrefixTrie::from_allowlist(allowlist),
        }
    }

    /// Precedence: in-app, then obfuscated, then library, then other. A class
    /// under the app's own package stays in-app even if its name looks
    /// obfuscated.
    pub fn classify(&self, fqcn: &FqcnRecord) -> Category {
        if let Some(package) = fqcn.package_part() {
            if package.starts_with(&self.app_package) {
                return Category::InAppPackage;
            }
        }
        if is_obfuscated(fqcn) {
            return Category::Obfuscated;
        }
        if let Some(package) = fqcn.package_part() {
            if self.allowlist.covers(package) {
                return Category::Library;
            }
        }
        Category::Other
    }
}

pub fn classify_fqcn(
    fqcn: &FqcnRecord,
    app_package: &PackageName,
    allowlist: &AllowList,
) -> Category {
    Classifier::new(app_package.clone(), allowlist).classify(fqcn)
}

/// Aggregated classification counts and proportions.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub total: u64,
    pub counts: BTreeMap<Category, u64>,
    pub proportions: BTreeMap<Category, f64>,
}

impl ClassificationReport {
    pub fn count(&self, category: Category) -> u64 {
        self.counts.get(&category).copied().unwrap_or(0)
    }
}

/// Classifies every record and aggregates counts. With `three_way`, library
/// hits fold into the other category, leaving the three-way split between
/// in-app, obfuscated, and everything else.
pub fn classification_report(
    records: &[FqcnRecord],
    app_package: &PackageName,
    allowlist: &AllowList,
    three_way: bool,
) -> ClassificationReport {
    let classifier = Classifier::new(app_package.clone(), allowlist);
    let categories: &[Category] = if three_way {
        &[Category::InAppPackage, Category::Obfuscated, Category::Other]
    } else {
        &[
            Category::InAppPackage,
            Category::Obfuscated,
            Category::Library,
            Category::Other,
        ]
    };
    let mut counts: BTreeMap<Category, u64> = categories.iter().map(|c| (*c, 0)).collect();
    for record in records {
        let mut category = classifier.classify(record);
        if three_way && category == Category::Library {
            category = Category::Other;
        }
        *counts.get_mut(&category).expect("category key present") += 1;
    }
    let total = records.len() as u64;
    let proportions = counts
        .iter()
        .map(|(category, count)| {
            let proportion = if total == 0 {
                0.0
            } else {
                *count as f64 / total as f64
            };
            (*category, proportion)
        })
        .collect();
    ClassificationReport {
        total,
        counts,
        proportions,
    }
}

/// FQCN lines read from a dump file plus the lines that failed validation.
#[derive(Debug)]
pub struct FqcnFile {
    pub records: Vec<FqcnRecord>,
    pub skipped: Vec<(usize, String)>,
}

pub fn read_fqcn_file(path: &Path) -> Result<FqcnFile, ClassifyError> {
    let file = std::fs::File::open(path)?;
    read_fqcns_from(BufReader::new(file))
}

/// One FQCN per line; blank lines and malformed records are skipped and
/// reported by line number.
pub fn read_fqcns_from<R: Read>(reader: R) -> Result<FqcnFile, ClassifyError> {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (index, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match FqcnRecord::parse(line) {
            Ok(record) => records.push(record),
            Err(err) => skipped.push((index + 1, err.to_string())),
        }
    }
    Ok(FqcnFile { records, skipped })
}

/// Writes `category,count,proportion` rows in category order.
pub fn write_report_csv(report: &ClassificationReport, destination: &Path) -> csv::Result<()> {
    let mut writer = csv::Writer::from_path(destination)?;
    writer.write_record(["category", "count", "proportion"])?;
    for (category, count) in &report.counts {
        let proportion = report.proportions.get(category).copied().unwrap_or(0.0);
        writer.write_record([
            category.to_string(),
            count.to_string(),
            format!("{proportion:.6}"),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes one `fqcn,category` row per record.
pub fn write_labeled_csv(
    records: &[FqcnRecord],
    classifier: &Classifier,
    three_way: bool,
    destination: &Path,
) -> csv::Result<()> {
    let mut writer = csv::Writer::from_path(destination)?;
    writer.write_record(["fqcn", "category"])?;
    for record in records {
        let mut category = classifier.classify(record);
        if three_way && category == Category::Library {
            category = Category::Other;
        }
        writer.write_record([record.to_string(), category.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}
