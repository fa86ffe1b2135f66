//! Line-delimited JSON records and atomic file output.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Parses one JSON object per non-blank line. Each record is returned with
/// its 1-based line number.
pub fn parse_records<T, R>(reader: R, source_name: &str) -> Result<Vec<(usize, T)>>
where
    T: DeserializeOwned,
    R: BufRead,
{
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::malformed(source_name, line_no, e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let record = serde_json::from_str(trimmed)
            .map_err(|e| Error::malformed(source_name, line_no, e.to_string()))?;
        out.push((line_no, record));
    }
    Ok(out)
}

pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_records(BufReader::new(file), &path.display().to_string())
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Serializes records one per line, each terminated by `\n`.
pub fn to_lines<T: Serialize>(records: &[T]) -> String {
    let mut buf = String::new();
    for r in records {
        // Serialization of our own record types cannot fail.
        buf.push_str(&serde_json::to_string(r).expect("record serializes"));
        buf.push('\n');
    }
    buf
}

/// Writes `contents` to a sibling temp file and renames it over `path`, so
/// readers never observe a partially written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = temp_sibling(path);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

fn temp_sibling(path: &Path) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(format!(".tmp{}", std::process::id()));
    path.with_file_name(name)
}
