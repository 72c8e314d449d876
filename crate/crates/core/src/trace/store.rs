//! `<name>.manifest.json` + `<name>.traces.bin` persistence.
//!
//! The payload holds, per trace, `data_len` metadata bytes followed by
//! `sample_count` little-endian binary32 samples. No header, no padding.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ProcessingStep, SetLabel, Trace, TraceMeta, TraceSet};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub sample_count: usize,
    pub trace_count: usize,
    pub data_len: usize,
    pub sampling_rate: f64,
    pub set_label: SetLabel,
    pub rng_seed: u64,
    #[serde(default)]
    pub history: Vec<ProcessingStep>,
}

fn with_suffix(base: &Path, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn manifest_path(base: &Path) -> PathBuf {
    with_suffix(base, ".manifest.json")
}

pub fn payload_path(base: &Path) -> PathBuf {
    with_suffix(base, ".traces.bin")
}

/// Writes `set` under the path prefix `base`. Sets mixing labels are rejected
/// because the manifest records a single label.
pub fn store_traceset(set: &TraceSet, base: &Path) -> Result<()> {
    let first = &set.traces()[0].meta;
    if set.traces().iter().any(|t| t.meta.set_label != first.set_label) {
        return Err(Error::invalid("cannot store a set with mixed labels"));
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        sample_count: set.sample_count(),
        trace_count: set.len(),
        data_len: set.data_len(),
        sampling_rate: set.sampling_rate,
        set_label: first.set_label,
        rng_seed: first.seed,
        history: set.history.clone(),
    };
    let mut out = BufWriter::new(File::create(payload_path(base))?);
    for t in set.traces() {
        out.write_all(&t.meta.data)?;
        for &s in &t.samples {
            out.write_all(&(s as f32).to_le_bytes())?;
        }
    }
    out.flush()?;
    fs::write(manifest_path(base), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn load_traceset(base: &Path) -> Result<TraceSet> {
    let text = fs::read_to_string(manifest_path(base))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::MalformedFile(format!("manifest: {e}")))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::MalformedFile(format!(
            "unsupported format_version {}",
            manifest.format_version
        )));
    }
    if manifest.trace_count == 0 || manifest.sample_count == 0 {
        return Err(Error::MalformedFile("empty set declared".into()));
    }
    if manifest.data_len != 1 && manifest.data_len != 16 {
        return Err(Error::MalformedFile(format!("data_len {}", manifest.data_len)));
    }
    let payload = fs::read(payload_path(base))?;
    let record = manifest.data_len + 4 * manifest.sample_count;
    let expected = record * manifest.trace_count;
    if payload.len() != expected {
        // A payload that still splits into `trace_count` whole records means the
        // manifest's sample_count is what disagrees; anything else is a cut file.
        let per_trace = payload.len() / manifest.trace_count;
        let whole = payload.len() % manifest.trace_count == 0
            && per_trace > manifest.data_len
            && (per_trace - manifest.data_len).is_multiple_of(4);
        if whole {
            return Err(Error::LengthMismatch {
                expected: manifest.sample_count,
                actual: (per_trace - manifest.data_len) / 4,
            });
        }
        return Err(Error::MalformedFile(format!(
            "payload has {} bytes, manifest implies {expected}",
            payload.len()
        )));
    }

    let traces = payload
        .chunks_exact(record)
        .map(|rec| {
            let (data, body) = rec.split_at(manifest.data_len);
            let samples = body
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
                .collect();
            Trace {
                samples,
                meta: TraceMeta {
                    data: data.to_vec(),
                    set_label: manifest.set_label,
                    seed: manifest.rng_seed,
                },
            }
        })
        .collect();
    let set = TraceSet::new(traces, manifest.sampling_rate)
        .map_err(|e| Error::MalformedFile(e.to_string()))?;
    Ok(set.with_history(manifest.history))
}

/// One trace per row: label, seed and hex data first, then the samples.
pub fn export_csv<W: Write>(set: &TraceSet, mut out: W) -> Result<()> {
    write!(out, "set_label,seed,data")?;
    for i in 0..set.sample_count() {
        write!(out, ",s{i}")?;
    }
    writeln!(out)?;
    for t in set.traces() {
        let label = serde_json::to_value(t.meta.set_label)?;
        let hex: String = t.meta.data.iter().map(|b| format!("{b:02x}")).collect();
        write!(out, "{},{},{}", label.as_str().unwrap_or_default(), t.meta.seed, hex)?;
        for s in &t.samples {
            write!(out, ",{s}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{simulate_traces, DataWidth, SimConfig, SimMode};

    fn sample_set() -> TraceSet {
        let cfg = SimConfig {
            sample_count: 40,
            leak_index: 10,
            noise_sigma: 0.2,
            jitter_max: 3,
            width: DataWidth::Block,
            rng_seed: 5,
            ..SimConfig::default()
        };
        simulate_traces(&cfg, 12, &SimMode::RandomData).unwrap()
    }

    #[test]
    fn roundtrip_is_exact_at_f32() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("set");
        let set = sample_set();
        store_traceset(&set, &base).unwrap();
        let back = load_traceset(&base).unwrap();
        assert_eq!(back.len(), set.len());
        for (a, b) in set.traces().iter().zip(back.traces()) {
            assert_eq!(a.meta, b.meta);
            for (x, y) in a.samples.iter().zip(&b.samples) {
                assert_eq!((*x as f32) as f64, *y);
            }
        }
        // a second cycle is bit-identical
        let base2 = dir.path().join("set2");
        store_traceset(&back, &base2).unwrap();
        assert_eq!(fs::read(payload_path(&base)).unwrap(), fs::read(payload_path(&base2)).unwrap());
        assert_eq!(load_traceset(&base2).unwrap(), back);
    }

    #[test]
    fn truncated_payload_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("set");
        store_traceset(&sample_set(), &base).unwrap();
        let bytes = fs::read(payload_path(&base)).unwrap();
        fs::write(payload_path(&base), &bytes[..bytes.len() - 7]).unwrap();
        assert!(matches!(load_traceset(&base), Err(Error::MalformedFile(_))));
    }

    #[test]
    fn truncated_manifest_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("set");
        store_traceset(&sample_set(), &base).unwrap();
        let text = fs::read_to_string(manifest_path(&base)).unwrap();
        fs::write(manifest_path(&base), &text[..text.len() / 2]).unwrap();
        assert!(matches!(load_traceset(&base), Err(Error::MalformedFile(_))));
    }

    #[test]
    fn manifest_sample_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("set");
        store_traceset(&sample_set(), &base).unwrap();
        for wrong in [39usize, 41] {
            let mut m: Manifest =
                serde_json::from_str(&fs::read_to_string(manifest_path(&base)).unwrap()).unwrap();
            m.sample_count = wrong;
            fs::write(manifest_path(&base), serde_json::to_string(&m).unwrap()).unwrap();
            match load_traceset(&base) {
                Err(Error::LengthMismatch { expected, actual }) => {
                    assert_eq!(expected, wrong);
                    assert_eq!(actual, 40);
                }
                other => panic!("expected LengthMismatch, got {other:?}"),
            }
        }
    }

    #[test]
    fn missing_file_is_io() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_traceset(&dir.path().join("nope")), Err(Error::Io(_))));
    }

    #[test]
    fn csv_has_metadata_first() {
        let set = sample_set();
        let mut buf = Vec::new();
        export_csv(&set, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("set_label,seed,data,s0,s1"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "random");
        assert_eq!(row[2].len(), 32);
        assert_eq!(row.len(), 3 + 40);
        assert_eq!(text.lines().count(), 13);
    }
}
