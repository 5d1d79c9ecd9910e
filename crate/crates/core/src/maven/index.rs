//! Ingestion of plain-text exports of an artifact index: one
//! `group[:artifact[:version]]` coordinate per line.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read};

use crate::model::PackageName;

use super::coordinate::MavenCoordinate;

/// Parsed export plus the lines that were rejected, by line number.
#[derive(Debug, Default)]
pub struct IndexExport {
    pub coordinates: BTreeSet<MavenCoordinate>,
    pub malformed: Vec<(usize, String)>,
}

impl IndexExport {
    /// Group identifiers of every coordinate, validated as package names.
    pub fn groups(&self) -> BTreeSet<PackageName> {
        self.coordinates
            .iter()
            .filter_map(|c| PackageName::parse(&c.group).ok())
            .collect()
    }
}

/// Reads an index export line by line. Blank lines and `#` comments are
/// ignored; malformed lines are skipped and reported. A line is malformed
/// when the coordinate shape is wrong or the group is not a valid package
/// name.
pub fn parse_index_export<R: Read>(reader: R) -> std::io::Result<IndexExport> {
    let mut export = IndexExport::default();
    for (index, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match MavenCoordinate::parse(line) {
            Ok(coordinate) => {
                if PackageName::parse(&coordinate.group).is_err() {
                    export
                        .malformed
                        .push((index + 1, format!("invalid group id \"{}\"", coordinate.group)));
                } else {
                    export.coordinates.insert(coordinate);
                }
            }
            Err(err) => export.malformed.push((index + 1, err.to_string())),
        }
    }
    Ok(export)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse(text: &str) -> IndexExport {
        parse_index_export(Cursor::new(text)).unwrap()
    }

    #[test]
    fn full_coordinate_line() {
        let export = parse("com.example:mylib:1.0\n");
        assert_eq!(export.coordinates.len(), 1);
        let c = export.coordinates.iter().next().unwrap();
        assert_eq!(
            (c.group.as_str(), c.artifact.as_str(), c.version.as_str()),
            ("com.example", "mylib", "1.0")
        );
    }

    #[test]
    fn empty_input_is_empty_set() {
        let export = parse("");
        assert!(export.coordinates.is_empty());
        assert!(export.malformed.is_empty());
    }

    #[test]
    fn identical_lines_collapse() {
        let export = parse("com.example:mylib:1.0\ncom.example:mylib:1.0\n");
        assert_eq!(export.coordinates.len(), 1);
    }

    #[test]
    fn short_lines_carry_empty_fields() {
        let export = parse("com.example\norg.other:thing\n");
        assert_eq!(export.coordinates.len(), 2);
        assert!(export
            .coordinates
            .iter()
            .any(|c| c.group == "com.example" && c.artifact.is_empty()));
    }

    #[test]
    fn malformed_lines_are_skipped_with_numbers() {
        let export = parse("com.example:ok:1\nbad..group:x:1\n:noargroup\ncom.fine\n");
        assert_eq!(export.coordinates.len(), 2);
        let lines: Vec<usize> = export.malformed.iter().map(|(n, _)| *n).collect();
        assert_eq!(lines, vec![2, 3]);
    }

    #[test]
    fn groups_are_deduplicated_package_names() {
        let export = parse("com.example:a:1\ncom.example:b:2\norg.other:c:3\n");
        let groups = export.groups();
        assert_eq!(groups.len(), 2);
        assert!(groups.iter().any(|g| g.as_str() == "com.example"));
    }
}
