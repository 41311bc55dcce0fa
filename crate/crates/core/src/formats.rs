//! On-disk artifact formats: code profiles, density histograms, result
//! CSVs, and run manifests.
//!
//! Every JSON format carries a `version` field and rejects unknown
//! fields, so a stale tool fails loudly instead of misreading an
//! artifact. Writes go through a temporary sibling file and a rename,
//! leaving either the old or the new artifact on disk after a crash.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::decode::EmpiricalHistogramSet;
use crate::polar::{CodeProfile, PolarError};
use crate::sim::SimulationRecord;

/// Format version stamped into every JSON artifact.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format version {got}, this tool reads {expected}")]
    Version { got: u32, expected: u32 },
    #[error(transparent)]
    Polar(#[from] PolarError),
}

fn check_version(got: u32) -> Result<(), FormatError> {
    if got != FORMAT_VERSION {
        return Err(FormatError::Version {
            got,
            expected: FORMAT_VERSION,
        });
    }
    Ok(())
}

/// Writes pretty JSON atomically: temp sibling first, then rename.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let tmp = path.with_extension("tmp");
    {
        let mut file = BufWriter::new(File::create(&tmp)?);
        serde_json::to_writer_pretty(&mut file, value)?;
        file.write_all(b"\n")?;
        file.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, FormatError> {
    let file = File::open(path)?;
    Ok(serde_json::from_reader(file)?)
}

/// How an artifact was produced: method name, its parameters, and the
/// SHA-256 of every input file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub method: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub input_hashes: BTreeMap<String, String>,
}

/// A code profile artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub version: u32,
    pub n: u32,
    pub unfrozen: Vec<usize>,
    pub reliability_order: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl ProfileFile {
    pub fn from_profile(profile: &CodeProfile, provenance: Option<Provenance>) -> Self {
        Self {
            version: FORMAT_VERSION,
            n: profile.n(),
            unfrozen: profile.unfrozen().to_vec(),
            reliability_order: profile.reliability_order().to_vec(),
            provenance,
        }
    }

    pub fn to_profile(&self) -> Result<CodeProfile, FormatError> {
        check_version(self.version)?;
        let profile = CodeProfile::from_reliability_order(
            self.n,
            self.unfrozen.len(),
            self.reliability_order.clone(),
        )?;
        if profile.unfrozen() != self.unfrozen.as_slice() {
            return Err(FormatError::Polar(PolarError::InvalidProfile(
                "unfrozen set disagrees with the reliability order prefix".into(),
            )));
        }
        Ok(profile)
    }
}

pub fn write_profile(
    path: &Path,
    profile: &CodeProfile,
    provenance: Option<Provenance>,
) -> Result<(), FormatError> {
    write_json(path, &ProfileFile::from_profile(profile, provenance))
}

pub fn read_profile(path: &Path) -> Result<(CodeProfile, Option<Provenance>), FormatError> {
    let file: ProfileFile = read_json(path)?;
    Ok((file.to_profile()?, file.provenance))
}

/// An empirical density artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramFile {
    pub version: u32,
    #[serde(flatten)]
    pub set: EmpiricalHistogramSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

pub fn write_histograms(
    path: &Path,
    set: &EmpiricalHistogramSet,
    provenance: Option<Provenance>,
) -> Result<(), FormatError> {
    write_json(
        path,
        &HistogramFile {
            version: FORMAT_VERSION,
            set: set.clone(),
            provenance,
        },
    )
}

pub fn read_histograms(path: &Path) -> Result<EmpiricalHistogramSet, FormatError> {
    let file: HistogramFile = read_json(path)?;
    check_version(file.version)?;
    Ok(file.set)
}

/// Metadata columns repeated on every CSV row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunLabels {
    pub decode_mode: String,
    pub design_method: String,
    pub build_tag: String,
}

pub const CSV_HEADER: &str =
    "snr_db,frames,frame_errors,bit_errors,fer,ber,wall_seconds,decode_mode,design_method,build_tag";

/// Appends simulation records to a CSV file, flushing after every row so
/// an interrupted sweep keeps its finished points.
pub struct CsvSink {
    writer: BufWriter<File>,
    labels: RunLabels,
}

impl CsvSink {
    /// Opens for append, writing the header only when the file is new or
    /// empty.
    pub fn open_append(path: &Path, labels: RunLabels) -> Result<Self, FormatError> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let needs_header = file.metadata()?.len() == 0;
        let mut writer = BufWriter::new(file);
        if needs_header {
            writeln!(writer, "{CSV_HEADER}")?;
            writer.flush()?;
        }
        Ok(Self { writer, labels })
    }

    pub fn write_record(&mut self, record: &SimulationRecord) -> std::io::Result<()> {
        writeln!(
            self.writer,
            "{},{},{},{},{},{},{},{},{},{}",
            record.snr_db,
            record.frames,
            record.frame_errors,
            record.bit_errors,
            record.fer,
            record.ber,
            record.wall_seconds,
            self.labels.decode_mode,
            self.labels.design_method,
            self.labels.build_tag,
        )?;
        self.writer.flush()
    }
}

/// Everything needed to re-derive an output file from the repository.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub version: u32,
    pub tool_version: String,
    pub command: String,
    pub resolved_config: serde_json::Value,
    pub input_hashes: BTreeMap<String, String>,
    pub seed: u64,
    /// Unix epoch seconds at write time; excluded from determinism
    /// comparisons.
    pub timestamp_unix: u64,
}

impl RunManifest {
    pub fn new(
        command: String,
        resolved_config: serde_json::Value,
        input_hashes: BTreeMap<String, String>,
        seed: u64,
    ) -> Self {
        let timestamp_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            version: FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            resolved_config,
            input_hashes,
            seed,
            timestamp_unix,
        }
    }
}

/// Sibling manifest path for an output file: `results.csv` gets
/// `results.csv.manifest.json`.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    let mut name = output
        .file_name()
        .map(|s| s.to_os_string())
        .unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

/// SHA-256 of a file's contents, lowercase hex.
pub fn sha256_hex(path: &Path) -> Result<String, FormatError> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let read = file.read(&mut buf)?;
        if read == 0 {
            break;
        }
        hasher.update(&buf[..read]);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}
