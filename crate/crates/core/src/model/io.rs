use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::model::{AllowList, NameError, PackageName};

#[derive(Debug, Error)]
pub enum AllowListIoError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed package name at line {line}: {source}")]
    MalformedName { line: usize, source: NameError },
}

/// An allowlist read from disk, plus how many duplicate lines were dropped.
#[derive(Debug, PartialEq, Eq)]
pub struct LoadedAllowList {
    pub list: AllowList,
    pub duplicate_lines: usize,
}

/// Writes one serialized name per line, LF-terminated, in ascending order.
pub fn write_allowlist(list: &AllowList, destination: &Path) -> Result<(), AllowListIoError> {
    let mut out = Vec::with_capacity(list.len() * 16);
    for name in list.iter() {
        out.extend_from_slice(name.as_str().as_bytes());
        out.push(b'\n');
    }
    fs::write(destination, out)?;
    Ok(())
}

pub fn read_allowlist(source: &Path) -> Result<LoadedAllowList, AllowListIoError> {
    let file = fs::File::open(source)?;
    read_allowlist_from(BufReader::new(file))
}

/// Reads the line-per-name format. CRLF line endings are accepted; duplicate
/// lines are dropped with a warning count rather than an error.
pub fn read_allowlist_from<R: Read>(reader: R) -> Result<LoadedAllowList, AllowListIoError> {
    let mut entries = std::collections::BTreeSet::new();
    let mut duplicate_lines = 0;
    for (index, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let name = PackageName::parse(line).map_err(|source| AllowListIoError::MalformedName {
            line: index + 1,
            source,
        })?;
        if !entries.insert(name) {
            duplicate_lines += 1;
        }
    }
    if duplicate_lines > 0 {
        log::warn!("allowlist input contained {duplicate_lines} duplicate line(s)");
    }
    Ok(LoadedAllowList {
        list: AllowList::new(entries),
        duplicate_lines,
    })
}

/// Serializes an allowlist to the on-disk line format in memory.
pub fn render_allowlist(list: &AllowList) -> String {
    let mut out = String::new();
    for name in list.iter() {
        out.push_str(name.as_str());
        out.push('\n');
    }
    out
}

#[allow(dead_code)]
fn write_to<W: Write>(list: &AllowList, mut writer: W) -> std::io::Result<()> {
    writer.write_all(render_allowlist(list).as_bytes())
}
