//! File helpers shared by the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::manifest::InputDigest;
use crate::CliError;

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline; field order follows the types.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

/// Reads an input file as UTF-8 and returns it with its digest.
pub fn read_input(path: &Path) -> Result<(String, InputDigest), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let digest = InputDigest::of(path, &bytes);
    let text = String::from_utf8(bytes).map_err(|_| CliError::Data(format!("{} is not UTF-8", path.display())))?;
    Ok((text, digest))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<(T, InputDigest), CliError> {
    let (text, digest) = read_input(path)?;
    let value = serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok((value, digest))
}

/// Files as given plus every `*.csv` directly inside any directory,
/// sorted and de-duplicated.
pub fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let entries =
                fs::read_dir(input).map_err(|e| CliError::Data(format!("cannot list {}: {e}", input.display())))?;
            for entry in entries {
                let path = entry.map_err(|e| CliError::Data(e.to_string()))?.path();
                if path.is_file() && path.extension().is_some_and(|x| x == "csv") {
                    files.push(path);
                }
            }
        } else {
            files.push(input.clone());
        }
    }
    files.sort();
    files.dedup();
    Ok(files)
}

/// Parses simple headed CSV with no quoting; blank lines are skipped.
pub fn parse_table(text: &str, header: &[&str], source: &Path) -> Result<Vec<Vec<String>>, CliError> {
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
    let found: Vec<&str> = lines.next().unwrap_or("").split(',').map(str::trim).collect();
    if found != header {
        return Err(CliError::Data(format!(
            "{}: expected header '{}', found '{}'",
            source.display(),
            header.join(","),
            found.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
        if cells.len() != header.len() {
            return Err(CliError::Data(format!(
                "{} line {}: expected {} cells, found {}",
                source.display(),
                i + 2,
                header.len(),
                cells.len()
            )));
        }
        rows.push(cells);
    }
    Ok(rows)
}
