use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_path_to_error::{Path as DePath, Segment};

use crate::exit::{CliResult, Failure, WithPath};

/// Renders a deserializer path as a JSON pointer (`/factors/1/id`).
pub fn json_pointer(path: &DePath) -> String {
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => {
                out.push('/');
                out.push_str(&key.replace('~', "~0").replace('/', "~1"));
            }
            Segment::Enum { variant } => {
                out.push('/');
                out.push_str(variant);
            }
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Reads a JSON document; schema violations exit as usage errors naming the
/// offending field, unreadable files as I/O errors.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).at(path)?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = json_pointer(e.path());
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            Failure::io(path, format!("not valid JSON: {inner}"))
        } else {
            Failure::usage(format!("{}: {pointer}: {inner}", path.display()))
        }
    })
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::io(path, e))?;
    fs::write(path, text + "\n").at(path)
}

pub fn parse_hex(text: &str) -> CliResult<Vec<u8>> {
    let digits = text.trim().trim_start_matches("0x");
    if digits.is_empty() {
        return Err(Failure::usage("empty hex value"));
    }
    hex::decode(digits).map_err(|e| Failure::usage(format!("'{text}' is not hex: {e}")))
}

pub fn ensure_parent(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).at(dir),
        _ => Ok(()),
    }
}
