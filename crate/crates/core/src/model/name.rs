use std::fmt;

use thiserror::Error;

/// Why a candidate package name was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NameError {
    #[error("empty package name")]
    Empty,
    #[error("empty segment in \"{0}\"")]
    EmptySegment(String),
    #[error("illegal character '{ch}' in \"{input}\"")]
    IllegalCharacter { input: String, ch: char },
}

/// A validated dot-separated package name such as `com.example.mypackage`.
///
/// Stored in canonical serialized form; ordering and equality are the
/// lexicographic order of that form. Segments are non-empty runs of
/// `[A-Za-z0-9_-]`, case preserved and case-sensitive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PackageName {
    text: String,
}

impl PackageName {
    /// Validates and normalizes a candidate name. Surrounding whitespace is
    /// trimmed before validation; everything else must already be canonical.
    pub fn parse(input: &str) -> Result<PackageName, NameError> {
        let trimmed = input.trim();
        if trimmed.is_empty() {
            return Err(NameError::Empty);
        }
        for segment in trimmed.split('.') {
            if segment.is_empty() {
                return Err(NameError::EmptySegment(trimmed.to_string()));
            }
            if let Some(ch) = segment
                .chars()
                .find(|c| !(c.is_ascii_alphanumeric() || *c == '_' || *c == '-'))
            {
                return Err(NameError::IllegalCharacter {
                    input: trimmed.to_string(),
                    ch,
                });
            }
        }
        Ok(PackageName {
            text: trimmed.to_string(),
        })
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn segments(&self) -> impl Iterator<Item = &str> {
        self.text.split('.')
    }

    /// First dot-separated element, e.g. `com` in `com.example.mypackage`.
    pub fn root(&self) -> &str {
        self.segments().next().expect("validated name is non-empty")
    }

    /// Number of dot-separated elements.
    pub fn field_count(&self) -> usize {
        self.text.bytes().filter(|b| *b == b'.').count() + 1
    }

    /// Whole-segment prefix test: `com.example` is a prefix of
    /// `com.example.sub` but not of `com.examplefoo`.
    pub fn starts_with(&self, prefix: &PackageName) -> bool {
        match self.text.strip_prefix(&prefix.text) {
            Some("") => true,
            Some(rest) => rest.starts_with('.'),
            None => false,
        }
    }
}

impl fmt::Display for PackageName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl std::str::FromStr for PackageName {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PackageName::parse(s)
    }
}

/// Convenience wrapper matching the ingestion-gate role of validation.
pub fn parse_package_name(input: &str) -> Result<PackageName, NameError> {
    PackageName::parse(input)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_three_field_name() {
        let name = PackageName::parse("com.example.mypackage").unwrap();
        assert_eq!(
            name.segments().collect::<Vec<_>>(),
            vec!["com", "example", "mypackage"]
        );
        assert_eq!(name.root(), "com");
        assert_eq!(name.field_count(), 3);
        assert_eq!(name.as_str(), "com.example.mypackage");
    }

    #[test]
    fn single_segment_is_valid() {
        let name = PackageName::parse("a").unwrap();
        assert_eq!(name.field_count(), 1);
        assert_eq!(name.root(), "a");
    }

    #[test]
    fn double_dot_rejected() {
        assert_eq!(
            PackageName::parse("com..example"),
            Err(NameError::EmptySegment("com..example".to_string()))
        );
    }

    #[test]
    fn leading_and_trailing_dots_rejected() {
        assert!(matches!(
            PackageName::parse(".com.example"),
            Err(NameError::EmptySegment(_))
        ));
        assert!(matches!(
            PackageName::parse("com.example."),
            Err(NameError::EmptySegment(_))
        ));
    }

    #[test]
    fn surrounding_whitespace_trimmed() {
        let name = PackageName::parse("  com.example \n").unwrap();
        assert_eq!(name.as_str(), "com.example");
    }

    #[test]
    fn interior_whitespace_rejected() {
        assert_eq!(
            PackageName::parse("com. example"),
            Err(NameError::IllegalCharacter {
                input: "com. example".to_string(),
                ch: ' ',
            })
        );
    }

    #[test]
    fn empty_input_rejected() {
        assert_eq!(PackageName::parse(""), Err(NameError::Empty));
        assert_eq!(PackageName::parse("   "), Err(NameError::Empty));
    }

    #[test]
    fn hyphen_underscore_digits_allowed() {
        assert!(PackageName::parse("commons-logging").is_ok());
        assert!(PackageName::parse("net.sf.kxml_2").is_ok());
        assert!(PackageName::parse("io.7zip").is_ok());
    }

    #[test]
    fn unicode_rejected() {
        assert!(matches!(
            PackageName::parse("com.exämple"),
            Err(NameError::IllegalCharacter { .. })
        ));
    }

    #[test]
    fn segment_boundary_prefix() {
        let base = PackageName::parse("com.example").unwrap();
        let sub = PackageName::parse("com.example.subpackage").unwrap();
        let glued = PackageName::parse("com.examplefoo").unwrap();
        assert!(sub.starts_with(&base));
        assert!(base.starts_with(&base));
        assert!(!glued.starts_with(&base));
        assert!(!base.starts_with(&sub));
    }

    #[test]
    fn ordering_is_on_serialized_form() {
        // '-' sorts before '.' in ASCII, so the hyphenated name comes first.
        let a = PackageName::parse("com.example-foo").unwrap();
        let b = PackageName::parse("com.example.x").unwrap();
        assert!(a < b);
    }
}
