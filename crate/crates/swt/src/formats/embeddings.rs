//! Embedding files: line-delimited JSON and the packed little-endian binary.
//!
//! JSON lines: an optional header `{"dim":D,"model":"<id>"}` followed by one
//! record per line,
//! `{"id":..,"lemma":..,"pos":..,"sense":..|null,"layer":k,"vec":[..]}`.
//!
//! Packed: `"SWTE"`, `u32` version 1, `u32` dim, `u64` count, then per record
//! four `u16`-length-prefixed UTF-8 strings (id, lemma, pos, sense; an empty
//! sense means unlabeled), an `i32` layer and `dim` little-endian `f32`s.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use swt_core::corpus::{validate_vector, EmbeddingRecord, EmbeddingSet};

use crate::{Error, Result};

pub const PACKED_MAGIC: &[u8; 4] = b"SWTE";
pub const PACKED_VERSION: u32 = 1;
pub const DEFAULT_MODEL_ID: &str = "unknown";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Jsonl,
    Packed,
}

#[derive(Serialize, Deserialize)]
struct Header {
    dim: usize,
    #[serde(default)]
    model: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    id: String,
    lemma: String,
    pos: String,
    #[serde(default)]
    sense: Option<String>,
    #[serde(default)]
    layer: i32,
    vec: Vec<f32>,
}

/// Packed files are recognized by their magic bytes; anything else is read as
/// JSON lines.
pub fn detect_format(path: &Path) -> Result<EmbeddingFormat> {
    let mut magic = [0u8; 4];
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut read = 0;
    while read < 4 {
        match f.read(&mut magic[read..]).map_err(|e| Error::io(path, e))? {
            0 => break,
            n => read += n,
        }
    }
    Ok(if read == 4 && &magic == PACKED_MAGIC { EmbeddingFormat::Packed } else { EmbeddingFormat::Jsonl })
}

pub fn load_embeddings(path: &Path, format: Option<EmbeddingFormat>) -> Result<EmbeddingSet> {
    let format = match format {
        Some(f) => f,
        None => detect_format(path)?,
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    match format {
        EmbeddingFormat::Jsonl => read_jsonl(reader, path),
        EmbeddingFormat::Packed => {
            let model = path.file_stem().map_or(DEFAULT_MODEL_ID.into(), |s| s.to_string_lossy().into_owned());
            read_packed(reader, path, &model)
        }
    }
}

fn is_header(value: &serde_json::Value) -> bool {
    value.get("dim").is_some() && value.get("id").is_none()
}

/// Parses JSON lines; `label` names the source in error messages.
pub fn read_jsonl<R: BufRead>(reader: R, label: &Path) -> Result<EmbeddingSet> {
    let mut model = DEFAULT_MODEL_ID.to_string();
    let mut dim: Option<usize> = None;
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(label, e))?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::parse(label, lineno, e))?;
        if records.is_empty() && dim.is_none() && is_header(&value) {
            let header: Header = serde_json::from_value(value).map_err(|e| Error::parse(label, lineno, e))?;
            dim = Some(header.dim);
            if let Some(m) = header.model {
                model = m;
            }
            continue;
        }
        let rec: RecordLine = serde_json::from_value(value).map_err(|e| Error::parse(label, lineno, e))?;
        let expected = *dim.get_or_insert(rec.vec.len());
        validate_vector(&rec.id, &rec.vec, expected).map_err(|e| Error::parse(label, lineno, e))?;
        records.push(EmbeddingRecord {
            instance_id: rec.id,
            lemma: rec.lemma,
            pos: rec.pos,
            sense_id: rec.sense.filter(|s| !s.is_empty()),
            layer: rec.layer,
            vector: rec.vec,
        });
    }
    EmbeddingSet::new(model, records).map_err(|source| Error::Data { path: label.into(), source })
}

pub fn write_jsonl<W: Write>(set: &EmbeddingSet, mut out: W) -> io::Result<()> {
    let header = Header { dim: set.dim(), model: Some(set.model_id().to_string()) };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for r in set.records() {
        let line = RecordLine {
            id: r.instance_id.clone(),
            lemma: r.lemma.clone(),
            pos: r.pos.clone(),
            sense: r.sense_id.clone(),
            layer: r.layer,
            vec: r.vector.clone(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

fn put_str<W: Write>(out: &mut W, s: &str, id: &str) -> io::Result<()> {
    let len = u16::try_from(s.len()).map_err(|_| {
        io::Error::new(io::ErrorKind::InvalidData, format!("string field of `{id}` longer than {} bytes", u16::MAX))
    })?;
    out.write_all(&len.to_le_bytes())?;
    out.write_all(s.as_bytes())
}

pub fn write_packed<W: Write>(set: &EmbeddingSet, mut out: W) -> io::Result<()> {
    let dim =
        u32::try_from(set.dim()).map_err(|_| io::Error::new(io::ErrorKind::InvalidData, "dimension exceeds u32"))?;
    out.write_all(PACKED_MAGIC)?;
    out.write_all(&PACKED_VERSION.to_le_bytes())?;
    out.write_all(&dim.to_le_bytes())?;
    out.write_all(&(set.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(4 * set.dim());
    for r in set.records() {
        put_str(&mut out, &r.instance_id, &r.instance_id)?;
        put_str(&mut out, &r.lemma, &r.instance_id)?;
        put_str(&mut out, &r.pos, &r.instance_id)?;
        put_str(&mut out, r.sense_id.as_deref().unwrap_or(""), &r.instance_id)?;
        out.write_all(&r.layer.to_le_bytes())?;
        buf.clear();
        for x in &r.vector {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    out.flush()
}

struct PackedReader<'a, R> {
    inner: R,
    label: &'a Path,
    record: usize,
}

impl<R: Read> PackedReader<'_, R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| self.fail(e))?;
        Ok(buf)
    }

    fn fail(&self, e: impl ToString) -> Error {
        // Packed files report the 1-based record number in place of a line.
        Error::parse(self.label, self.record, e)
    }

    fn string(&mut self) -> Result<String> {
        let len = u16::from_le_bytes(self.bytes()?) as usize;
        let mut buf = vec![0u8; len];
        self.inner.read_exact(&mut buf).map_err(|e| self.fail(e))?;
        String::from_utf8(buf).map_err(|e| self.fail(e))
    }
}

pub fn read_packed<R: Read>(reader: R, label: &Path, model_id: &str) -> Result<EmbeddingSet> {
    let mut r = PackedReader { inner: reader, label, record: 0 };
    if &r.bytes::<4>()? != PACKED_MAGIC {
        return Err(r.fail("bad magic bytes"));
    }
    let version = u32::from_le_bytes(r.bytes()?);
    if version != PACKED_VERSION {
        return Err(r.fail(format!("unsupported version {version}")));
    }
    let dim = u32::from_le_bytes(r.bytes()?) as usize;
    let count = u64::from_le_bytes(r.bytes()?);
    let mut records = Vec::with_capacity(count.min(1 << 20) as usize);
    for i in 0..count {
        r.record = i as usize + 1;
        let instance_id = r.string()?;
        let lemma = r.string()?;
        let pos = r.string()?;
        let sense = r.string()?;
        let layer = i32::from_le_bytes(r.bytes()?);
        let mut raw = vec![0u8; 4 * dim];
        r.inner.read_exact(&mut raw).map_err(|e| r.fail(e))?;
        let vector: Vec<f32> = raw.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        validate_vector(&instance_id, &vector, dim).map_err(|e| r.fail(e))?;
        records.push(EmbeddingRecord {
            instance_id,
            lemma,
            pos,
            sense_id: (!sense.is_empty()).then_some(sense),
            layer,
            vector,
        });
    }
    let mut trailing = [0u8; 1];
    if r.inner.read(&mut trailing).map_err(|e| Error::io(label, e))? != 0 {
        return Err(Error::parse(label, count as usize, "trailing bytes after last record"));
    }
    EmbeddingSet::new(model_id, records).map_err(|source| Error::Data { path: label.into(), source })
}
