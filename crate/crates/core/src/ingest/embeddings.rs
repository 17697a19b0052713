//! Embedding file reader/writer.
//!
//! Two encodings carry the same content: a header (count, dimension, corpus
//! content hash, optional model id) followed by one `(id, vector)` row per post.
//!
//! Text:
//! ```text
//! # novelty-embeddings count=3 dim=4 hash=<sha256 hex> model=<id>
//! <id>\t<v0>\t<v1>\t...
//! ```
//!
//! Binary (little-endian): magic `NVEMB\0\x01\0`, `u64` count, `u64` dim,
//! 32-byte hash, `u32` model-id length + bytes, then per row `u32` id length,
//! id bytes, `dim` × `f64`.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::posts::PostRecord;
use crate::error::{Error, Result};
use crate::novelty::{EmbeddingMatrix, Stage};

const MAGIC: &[u8; 8] = b"NVEMB\0\x01\0";
const TEXT_TAG: &str = "# novelty-embeddings";

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    pub ids: Vec<String>,
    /// Hex SHA-256 of the posts file the vectors were computed from.
    pub corpus_hash: String,
    pub model: Option<String>,
    pub matrix: EmbeddingMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Text,
    Binary,
}

/// Hex SHA-256 of a file's bytes.
pub fn corpus_hash(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingFile> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(MAGIC) {
        parse_binary(path, &bytes)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::parse(path, 1, "embedding file is neither binary nor UTF-8 text"))?;
        parse_text(path, &text)
    }
}

fn parse_text(path: &Path, text: &str) -> Result<EmbeddingFile> {
    let mut lines = text.lines().enumerate();
    let header = match lines.next() {
        Some((_, h)) if h.starts_with(TEXT_TAG) => h,
        _ => return Err(Error::parse(path, 1, "missing embedding header")),
    };
    let mut count = None;
    let mut dim = None;
    let mut hash = None;
    let mut model = None;
    for token in header[TEXT_TAG.len()..].split_whitespace() {
        let Some((k, v)) = token.split_once('=') else {
            return Err(Error::parse(path, 1, format!("bad header token {token:?}")));
        };
        match k {
            "count" => count = v.parse::<usize>().ok(),
            "dim" => dim = v.parse::<usize>().ok(),
            "hash" => hash = Some(v.to_string()),
            "model" => model = Some(v.to_string()),
            _ => {}
        }
    }
    let (Some(count), Some(dim), Some(hash)) = (count, dim, hash) else {
        return Err(Error::parse(path, 1, "header needs count, dim and hash"));
    };

    let mut ids = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count * dim);
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let id = fields.next().unwrap_or_default().to_string();
        let before = values.len();
        for f in fields {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("bad number {f:?}")))?;
            values.push(v);
        }
        if values.len() - before != dim {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected {dim} values, got {}", values.len() - before),
            ));
        }
        ids.push(id);
    }
    if ids.len() != count {
        return Err(Error::EmbeddingMismatch(format!(
            "count mismatch: header says {count}, file has {} rows",
            ids.len()
        )));
    }
    let matrix = EmbeddingMatrix::new(count, dim, values, Stage::Raw)?;
    Ok(EmbeddingFile {
        ids,
        corpus_hash: hash,
        model,
        matrix,
    })
}

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::EmbeddingMismatch(format!(
                "count mismatch: {} truncated at byte {}",
                self.path.display(),
                self.pos
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| Error::parse(self.path, 0, "invalid UTF-8 in binary embedding file"))
    }
}

fn parse_binary(path: &Path, bytes: &[u8]) -> Result<EmbeddingFile> {
    let mut cur = Cursor {
        path,
        bytes,
        pos: MAGIC.len(),
    };
    let count = cur.u64()? as usize;
    let dim = cur.u64()? as usize;
    let hash = hex::encode(cur.take(32)?);
    let model = cur.string()?;
    let mut ids = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count * dim);
    for _ in 0..count {
        ids.push(cur.string()?);
        for chunk in cur.take(dim * 8)?.chunks_exact(8) {
            values.push(f64::from_le_bytes(chunk.try_into().unwrap()));
        }
    }
    if cur.pos != bytes.len() {
        return Err(Error::EmbeddingMismatch(format!(
            "count mismatch: {} trailing bytes after {count} rows",
            bytes.len() - cur.pos
        )));
    }
    let matrix = EmbeddingMatrix::new(count, dim, values, Stage::Raw)?;
    Ok(EmbeddingFile {
        ids,
        corpus_hash: hash,
        model: (!model.is_empty()).then_some(model),
        matrix,
    })
}

pub fn write_embeddings(
    path: impl AsRef<Path>,
    file: &EmbeddingFile,
    format: EmbeddingFormat,
) -> Result<()> {
    let path = path.as_ref();
    let m = &file.matrix;
    let mut out = Vec::new();
    match format {
        EmbeddingFormat::Text => {
            write!(out, "{TEXT_TAG} count={} dim={} hash={}", m.rows(), m.dim(), file.corpus_hash).unwrap();
            if let Some(model) = &file.model {
                write!(out, " model={model}").unwrap();
            }
            out.push(b'\n');
            for (id, row) in file.ids.iter().zip(m.iter_rows()) {
                out.extend_from_slice(id.as_bytes());
                for v in row {
                    write!(out, "\t{v:?}").unwrap();
                }
                out.push(b'\n');
            }
        }
        EmbeddingFormat::Binary => {
            let hash = hex::decode(&file.corpus_hash)
                .ok()
                .filter(|h| h.len() == 32)
                .ok_or_else(|| Error::InvalidArgument("corpus hash must be 64 hex digits".into()))?;
            out.extend_from_slice(MAGIC);
            out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
            out.extend_from_slice(&(m.dim() as u64).to_le_bytes());
            out.extend_from_slice(&hash);
            let model = file.model.as_deref().unwrap_or("");
            out.extend_from_slice(&(model.len() as u32).to_le_bytes());
            out.extend_from_slice(model.as_bytes());
            for (id, row) in file.ids.iter().zip(m.iter_rows()) {
                out.extend_from_slice(&(id.len() as u32).to_le_bytes());
                out.extend_from_slice(id.as_bytes());
                for v in row {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Links each post to its embedding row by id.
///
/// When `expected_hash` is given it must equal the file's corpus hash.
pub fn join_embeddings(
    posts: &mut [PostRecord],
    file: &EmbeddingFile,
    expected_hash: Option<&str>,
) -> Result<()> {
    if let Some(h) = expected_hash {
        if !h.eq_ignore_ascii_case(&file.corpus_hash) {
            return Err(Error::EmbeddingMismatch(format!(
                "corpus hash {} does not match posts file hash {h}",
                file.corpus_hash
            )));
        }
    }
    if file.ids.len() != posts.len() {
        return Err(Error::EmbeddingMismatch(format!(
            "count mismatch: {} posts, {} vectors",
            posts.len(),
            file.ids.len()
        )));
    }
    let by_id: HashMap<&str, usize> = file
        .ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    for post in posts.iter_mut() {
        let row = by_id
            .get(post.id.as_str())
            .ok_or_else(|| Error::EmbeddingMismatch(format!("no vector for post {:?}", post.id)))?;
        post.embedding_row = Some(*row);
    }
    Ok(())
}

/// Outcome of checking an embedding file against the posts it claims to cover.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct VerifyReport {
    pub count: Option<usize>,
    pub dim: Option<usize>,
    pub problems: Vec<String>,
}

impl VerifyReport {
    pub fn is_ok(&self) -> bool {
        self.problems.is_empty()
    }
}

impl std::fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, p) in self.problems.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "- {p}")?;
        }
        Ok(())
    }
}

/// Checks count, dimension, hash linkage, finite values and id coverage.
///
/// Problems are collected rather than returned as errors; only an unreadable
/// posts file is an error.
pub fn verify_embedding_file(path: impl AsRef<Path>, posts_path: impl AsRef<Path>) -> Result<VerifyReport> {
    let posts_path = posts_path.as_ref();
    let posts_hash = corpus_hash(posts_path)?;
    let posts = super::posts::load_posts(posts_path, "UTC")?;
    let mut report = VerifyReport {
        count: None,
        dim: None,
        problems: Vec::new(),
    };
    let file = match load_embeddings(path) {
        Ok(f) => f,
        Err(Error::NonFinite { row }) => {
            report.problems.push(format!("non-finite at row {row}"));
            return Ok(report);
        }
        Err(e) => {
            report.problems.push(e.to_string());
            return Ok(report);
        }
    };
    report.count = Some(file.matrix.rows());
    report.dim = Some(file.matrix.dim());
    if file.matrix.dim() == 0 {
        report.problems.push("dimension is 0".into());
    }
    if !file.corpus_hash.eq_ignore_ascii_case(&posts_hash) {
        report
            .problems
            .push(format!("hash mismatch: file records {}, posts hash to {posts_hash}", file.corpus_hash));
    }
    if file.ids.len() != posts.len() {
        report
            .problems
            .push(format!("count mismatch: {} posts, {} vectors", posts.len(), file.ids.len()));
    }
    let ids: std::collections::HashSet<&str> = file.ids.iter().map(String::as_str).collect();
    if ids.len() != file.ids.len() {
        report.problems.push("duplicate ids in embedding file".into());
    }
    let missing = posts.iter().filter(|p| !ids.contains(p.id.as_str())).count();
    if missing > 0 {
        report.problems.push(format!("{missing} posts have no vector"));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EmbeddingFile {
        EmbeddingFile {
            ids: vec!["a".into(), "b".into()],
            corpus_hash: "ab".repeat(32),
            model: Some("toy".into()),
            matrix: EmbeddingMatrix::from_rows(&[vec![0.1, -2.5], vec![1e-300, 3.0]], Stage::Raw)
                .unwrap(),
        }
    }

    #[test]
    fn both_encodings_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for fmt in [EmbeddingFormat::Text, EmbeddingFormat::Binary] {
            let p = dir.path().join("e");
            write_embeddings(&p, &sample(), fmt).unwrap();
            assert_eq!(load_embeddings(&p).unwrap(), sample());
        }
    }

    #[test]
    fn truncated_binary_is_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.bin");
        write_embeddings(&p, &sample(), EmbeddingFormat::Binary).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 8]).unwrap();
        let err = load_embeddings(&p).unwrap_err().to_string();
        assert!(err.contains("count mismatch"), "{err}");
    }

    #[test]
    fn text_row_count_checked() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.txt");
        fs::write(&p, format!("{TEXT_TAG} count=2 dim=1 hash=00\na\t1.0\n")).unwrap();
        let err = load_embeddings(&p).unwrap_err().to_string();
        assert!(err.contains("count mismatch"), "{err}");
    }

    #[test]
    fn nan_rejected_with_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.txt");
        fs::write(&p, format!("{TEXT_TAG} count=2 dim=1 hash=00\na\t1.0\nb\tNaN\n")).unwrap();
        assert!(matches!(load_embeddings(&p), Err(Error::NonFinite { row: 1 })));
    }

    #[test]
    fn join_checks_hash_and_ids() {
        let file = sample();
        let mk = |id: &str| PostRecord {
            id: id.into(),
            timestamp: chrono::Utc::now(),
            text: String::new(),
            embedding_row: None,
        };
        let mut posts = vec![mk("b"), mk("a")];
        join_embeddings(&mut posts, &file, Some(&file.corpus_hash)).unwrap();
        assert_eq!(posts[0].embedding_row, Some(1));
        assert!(join_embeddings(&mut posts, &file, Some("ff")).is_err());
        let mut other = vec![mk("a"), mk("z")];
        assert!(join_embeddings(&mut other, &file, None).is_err());
    }
}
