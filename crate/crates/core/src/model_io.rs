//! Model files. See `docs/model-format.md` for the layout.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::BspForest;

pub const MAGIC: &[u8; 4] = b"BSPF";
/// Magic of posterior sample files (a list of forests).
pub const SAMPLES_MAGIC: &[u8; 4] = b"BSPS";
pub const FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "bspf-model";
const SAMPLES_FORMAT_NAME: &str = "bspf-samples";
const HEADER_LEN: usize = 4 + 4 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    Binary,
    Json,
}

#[derive(Serialize)]
struct JsonOut<'a, T> {
    format: &'a str,
    version: u32,
    #[serde(flatten)]
    body: T,
}

#[derive(Deserialize)]
struct JsonHeader {
    format: String,
    version: u32,
}

#[derive(Serialize, Deserialize)]
struct ForestBody<F> {
    forest: F,
}

#[derive(Serialize, Deserialize)]
struct SamplesBody<F> {
    forests: F,
}

fn frame(magic: &[u8; 4], payload: Vec<u8>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    out
}

fn unframe<'b>(magic: &[u8; 4], bytes: &'b [u8]) -> Result<&'b [u8]> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Decode(format!("truncated header ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != magic {
        return Err(Error::Decode("bad magic bytes".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let payload = &bytes[HEADER_LEN..];
    if payload.len() as u64 != len {
        return Err(Error::Decode(format!(
            "payload length {} does not match header ({len})",
            payload.len()
        )));
    }
    Ok(payload)
}

fn check_json_header(text: &str, name: &str) -> Result<()> {
    let header: JsonHeader = serde_json::from_str(text).map_err(|e| Error::Decode(e.to_string()))?;
    if header.format != name {
        return Err(Error::Decode(format!("unknown format `{}`", header.format)));
    }
    if header.version != FORMAT_VERSION {
        return Err(Error::Version {
            found: header.version,
            expected: FORMAT_VERSION,
        });
    }
    Ok(())
}

fn encode_err(e: bincode::Error) -> Error {
    Error::Decode(e.to_string())
}

pub fn to_bytes(forest: &BspForest) -> Result<Vec<u8>> {
    Ok(frame(MAGIC, bincode::serialize(forest).map_err(encode_err)?))
}

pub fn from_bytes(bytes: &[u8]) -> Result<BspForest> {
    let forest: BspForest = bincode::deserialize(unframe(MAGIC, bytes)?).map_err(encode_err)?;
    forest.validate()?;
    Ok(forest)
}

pub fn to_json(forest: &BspForest) -> Result<String> {
    Ok(serde_json::to_string_pretty(&JsonOut {
        format: FORMAT_NAME,
        version: FORMAT_VERSION,
        body: ForestBody { forest },
    })?)
}

pub fn from_json(text: &str) -> Result<BspForest> {
    check_json_header(text, FORMAT_NAME)?;
    let body: ForestBody<BspForest> = serde_json::from_str(text).map_err(|e| Error::Decode(e.to_string()))?;
    body.forest.validate()?;
    Ok(body.forest)
}

pub fn write<W: Write>(forest: &BspForest, format: ModelFormat, mut w: W) -> Result<()> {
    match format {
        ModelFormat::Binary => w.write_all(&to_bytes(forest)?)?,
        ModelFormat::Json => w.write_all(to_json(forest)?.as_bytes())?,
    }
    Ok(())
}

/// Reads either format, detected from the first bytes.
pub fn read<R: Read>(mut r: R) -> Result<BspForest> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    decode(&buf)
}

fn as_json(buf: &[u8]) -> Result<Option<&str>> {
    let first = buf.iter().find(|b| !b.is_ascii_whitespace());
    if first == Some(&b'{') {
        std::str::from_utf8(buf).map(Some).map_err(|e| Error::Decode(e.to_string()))
    } else {
        Ok(None)
    }
}

pub fn decode(buf: &[u8]) -> Result<BspForest> {
    match as_json(buf)? {
        Some(text) => from_json(text),
        None => from_bytes(buf),
    }
}

/// Format implied by a file extension: `.json` is JSON, anything else binary.
pub fn format_for_path(path: &Path) -> ModelFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("json") => ModelFormat::Json,
        _ => ModelFormat::Binary,
    }
}

pub fn save(forest: &BspForest, path: &Path) -> Result<()> {
    let f = fs::File::create(path)?;
    write(forest, format_for_path(path), std::io::BufWriter::new(f))
}

pub fn load(path: &Path) -> Result<BspForest> {
    decode(&fs::read(path)?)
}

pub fn samples_to_bytes(forests: &[BspForest]) -> Result<Vec<u8>> {
    Ok(frame(SAMPLES_MAGIC, bincode::serialize(forests).map_err(encode_err)?))
}

pub fn samples_to_json(forests: &[BspForest]) -> Result<String> {
    Ok(serde_json::to_string(&JsonOut {
        format: SAMPLES_FORMAT_NAME,
        version: FORMAT_VERSION,
        body: SamplesBody { forests },
    })?)
}

pub fn decode_samples(buf: &[u8]) -> Result<Vec<BspForest>> {
    let forests: Vec<BspForest> = match as_json(buf)? {
        Some(text) => {
            check_json_header(text, SAMPLES_FORMAT_NAME)?;
            let body: SamplesBody<Vec<BspForest>> =
                serde_json::from_str(text).map_err(|e| Error::Decode(e.to_string()))?;
            body.forests
        }
        None => bincode::deserialize(unframe(SAMPLES_MAGIC, buf)?).map_err(encode_err)?,
    };
    for f in &forests {
        f.validate()?;
    }
    Ok(forests)
}

pub fn save_samples(forests: &[BspForest], path: &Path) -> Result<()> {
    let bytes = match format_for_path(path) {
        ModelFormat::Binary => samples_to_bytes(forests)?,
        ModelFormat::Json => samples_to_json(forests)?.into_bytes(),
    };
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_samples(path: &Path) -> Result<Vec<BspForest>> {
    decode_samples(&fs::read(path)?)
}
