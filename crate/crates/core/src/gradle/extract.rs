//! Tolerant line-oriented extraction of dependency and repository
//! declarations from build scripts. This is deliberately not a script
//! parser: the declarations of interest are syntactically local, so a
//! scanner over comment-stripped text is enough.

use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;

use super::{ConfigurationSet, GradleDependency, RepoDecl};
use crate::maven::MavenCoordinate;

/// Replaces `//` and `/* */` comments with spaces while leaving string
/// literals and every newline untouched, so downstream line numbers match
/// the original file.
pub fn strip_comments(text: &str) -> String {
    #[derive(PartialEq)]
    enum State {
        Code,
        LineComment,
        BlockComment,
        Str(char),
    }
    let mut state = State::Code;
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match state {
            State::Code => match c {
                '/' if chars.peek() == Some(&'/') => {
                    chars.next();
                    out.push_str("  ");
                    state = State::LineComment;
                }
                '/' if chars.peek() == Some(&'*') => {
                    chars.next();
                    out.push_str("  ");
                    state = State::BlockComment;
                }
                '\'' | '"' => {
                    out.push(c);
                    state = State::Str(c);
                }
                _ => out.push(c),
            },
            State::LineComment => {
                if c == '\n' {
                    out.push('\n');
                    state = State::Code;
                } else {
                    out.push(' ');
                }
            }
            State::BlockComment => {
                if c == '*' && chars.peek() == Some(&'/') {
                    chars.next();
                    out.push_str("  ");
                    state = State::Code;
                } else if c == '\n' {
                    out.push('\n');
                } else {
                    out.push(' ');
                }
            }
            State::Str(quote) => {
                out.push(c);
                if c == '\\' {
                    if let Some(escaped) = chars.next() {
                        out.push(escaped);
                    }
                } else if c == quote {
                    state = State::Code;
                }
            }
        }
    }
    out
}

fn statement_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| {
        Regex::new(r"^([A-Za-z][A-Za-z0-9_]*)\s*(.*)$").expect("statement pattern compiles")
    })
}

fn string_notation_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    // conf 'g:a:v'   |   conf("g:a:v")
    PATTERN.get_or_init(|| {
        Regex::new(r#"^\(?\s*["']([^"']+)["']"#).expect("string notation pattern compiles")
    })
}

fn map_pair_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| {
        Regex::new(r#"([A-Za-z]+)\s*:\s*["']([^"']*)["']"#).expect("map pair pattern compiles")
    })
}

/// Parses "g:a:v" / "g:a" notation. Classifier and extension suffixes after
/// the version are ignored. Returns None when group or artifact is unusable
/// (missing or itself interpolated).
fn coordinate_from_notation(notation: &str) -> Option<MavenCoordinate> {
    let mut parts = notation.split(':');
    let group = parts.next().unwrap_or("").trim();
    let artifact = parts.next().unwrap_or("").trim();
    let version = parts.next().unwrap_or("").trim();
    if group.is_empty() || artifact.is_empty() {
        return None;
    }
    if group.contains('$') || artifact.contains('$') {
        return None;
    }
    // An interpolated version can't be resolved without evaluating the
    // script; the group is what matters downstream, so keep the dependency.
    let version = if version.contains('$') { "" } else { version };
    Some(MavenCoordinate::new(group, artifact, version))
}

fn coordinate_from_map(rest: &str) -> Option<MavenCoordinate> {
    let mut group = None;
    let mut name = None;
    let mut version = None;
    for capture in map_pair_pattern().captures_iter(rest) {
        let value = capture.get(2).map_or("", |m| m.as_str()).trim().to_string();
        match capture.get(1).map_or("", |m| m.as_str()) {
            "group" => group = Some(value),
            "name" => name = Some(value),
            "version" => version = Some(value),
            _ => {}
        }
    }
    let group = group?;
    let name = name?;
    if group.is_empty() || name.is_empty() || group.contains('$') || name.contains('$') {
        return None;
    }
    let version = version.unwrap_or_default();
    let version = if version.contains('$') {
        String::new()
    } else {
        version
    };
    Some(MavenCoordinate::new(group, name, version))
}

/// Dependency declarations plus the count of lines that named an accepted
/// configuration but could not be parsed into a coordinate.
#[derive(Debug, Default)]
pub struct ExtractionReport {
    pub dependencies: Vec<GradleDependency>,
    pub skipped_lines: u64,
}

/// Splits a line at `{`, `}`, and `;` occurring outside string literals, so
/// one-liners like `dependencies { implementation 'g:a:v' }` still expose
/// the declaration as its own statement.
fn split_statements(line: &str) -> Vec<&str> {
    let mut segments = Vec::new();
    let mut in_string: Option<char> = None;
    let mut start = 0;
    for (offset, c) in line.char_indices() {
        match in_string {
            Some(quote) => {
                if c == quote {
                    in_string = None;
                }
            }
            None => match c {
                '\'' | '"' => in_string = Some(c),
                '{' | '}' | ';' => {
                    segments.push(&line[start..offset]);
                    start = offset + c.len_utf8();
                }
                _ => {}
            },
        }
    }
    segments.push(&line[start..]);
    segments
}

pub fn extract_dependencies(
    file_text: &str,
    source_file: &Path,
    configurations: ConfigurationSet,
) -> ExtractionReport {
    let stripped = strip_comments(file_text);
    let mut report = ExtractionReport::default();

    for (index, raw_line) in stripped.lines().enumerate() {
        extract_line(raw_line, index, source_file, configurations, &mut report);
    }
    report
}

fn extract_line(
    raw_line: &str,
    index: usize,
    source_file: &Path,
    configurations: ConfigurationSet,
    report: &mut ExtractionReport,
) {
    for segment in split_statements(raw_line) {
        let line = segment.trim();
        let Some(capture) = statement_pattern().captures(line) else {
            continue;
        };
        let configuration = capture.get(1).map_or("", |m| m.as_str());
        if !configurations.accepts(configuration) {
            continue;
        }
        let rest = capture.get(2).map_or("", |m| m.as_str());

        // String/call notation first: a trailing `{ exclude group: ... }`
        // block must not shadow the coordinate literal.
        let coordinate = string_notation_pattern()
            .captures(rest)
            .and_then(|c| c.get(1))
            .and_then(|m| coordinate_from_notation(m.as_str()))
            .or_else(|| coordinate_from_map(rest));

        match coordinate {
            Some(coordinate) => report.dependencies.push(GradleDependency {
                configuration: configuration.to_string(),
                coordinate,
                source_file: source_file.to_path_buf(),
                line: index + 1,
            }),
            None => report.skipped_lines += 1,
        }
    }
}

fn builtin_repo_patterns() -> &'static [(RepoDecl, Regex)] {
    static PATTERNS: OnceLock<Vec<(RepoDecl, Regex)>> = OnceLock::new();
    PATTERNS
        .get_or_init(|| {
            [
                (RepoDecl::Jcenter, r"\bjcenter\s*\(\s*\)"),
                (RepoDecl::GradlePluginPortal, r"\bgradlePluginPortal\s*\(\s*\)"),
                (RepoDecl::Google, r"\bgoogle\s*\(\s*\)"),
                (RepoDecl::MavenCentral, r"\bmavenCentral\s*\(\s*\)"),
            ]
            .into_iter()
            .map(|(decl, pattern)| (decl, Regex::new(pattern).expect("repo pattern compiles")))
            .collect()
        })
        .as_slice()
}

fn custom_repo_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    // maven { url 'u' }  |  maven { url = "u" }  |  maven(url = "u")
    // and the Kotlin-DSL uri("u") wrapper.
    PATTERN.get_or_init(|| {
        Regex::new(
            r#"(?s)\bmaven\s*[({].{0,200}?\burl\s*(?:=\s*)?(?:uri\s*\(\s*)?["']([^"']+)["']"#,
        )
        .expect("custom repo pattern compiles")
    })
}

/// Declared repositories, deduplicated preserving first appearance order in
/// the file.
pub fn extract_repositories(file_text: &str) -> Vec<RepoDecl> {
    let stripped = strip_comments(file_text);
    let mut found: Vec<(usize, RepoDecl)> = Vec::new();

    for (decl, pattern) in builtin_repo_patterns() {
        for hit in pattern.find_iter(&stripped) {
            found.push((hit.start(), decl.clone()));
        }
    }
    for capture in custom_repo_pattern().captures_iter(&stripped) {
        let start = capture.get(0).expect("whole match").start();
        let url = capture.get(1).map_or("", |m| m.as_str()).trim().to_string();
        if !url.is_empty() {
            found.push((start, RepoDecl::Custom { url }));
        }
    }

    found.sort_by_key(|(position, _)| *position);
    let mut out = Vec::new();
    for (_, decl) in found {
        if !out.contains(&decl) {
            out.push(decl);
        }
    }
    out
}
