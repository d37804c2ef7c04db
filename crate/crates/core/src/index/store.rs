//! Append-only vector store.
//!
//! Layout (little-endian):
//!
//! ```text
//! header  : b"OTVS" | u32 format version | u64 generation
//! entry   : u8 kind (1 = lexical, 2 = semantic) | [u8; 3] zero | u32 count | payload
//! lexical : count × (u64 n-gram hash | f64 magnitude)
//! semantic: count × f64
//! ```
//!
//! The generation is the first eight bytes of the SHA-256 of all entry
//! bytes. Handles carry it so that a record from one build cannot silently
//! read vectors from another.

use std::fs::File;
use std::io::{BufWriter, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use memmap2::Mmap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::vectors::{LexicalVector, SemanticVector};

pub const STORE_MAGIC: &[u8; 4] = b"OTVS";
pub const STORE_VERSION: u32 = 1;
const HEADER_LEN: u64 = 16;
const ENTRY_HEADER_LEN: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorKind {
    Lexical,
    Semantic,
}

impl VectorKind {
    fn tag(self) -> u8 {
        match self {
            VectorKind::Lexical => 1,
            VectorKind::Semantic => 2,
        }
    }
}

/// Location of one stored vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorHandle {
    pub offset: u64,
    pub kind: VectorKind,
    pub generation: u64,
}

pub(crate) struct StoreWriter {
    path: PathBuf,
    out: BufWriter<File>,
    offset: u64,
    hasher: Sha256,
    count: usize,
}

impl StoreWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut header = Vec::with_capacity(HEADER_LEN as usize);
        header.extend_from_slice(STORE_MAGIC);
        header.extend_from_slice(&STORE_VERSION.to_le_bytes());
        header.extend_from_slice(&0u64.to_le_bytes());
        out.write_all(&header).map_err(|e| Error::io(path, e))?;
        Ok(StoreWriter {
            path: path.to_owned(),
            out,
            offset: HEADER_LEN,
            hasher: Sha256::new(),
            count: 0,
        })
    }

    fn append(&mut self, bytes: &[u8]) -> Result<u64> {
        let at = self.offset;
        self.out
            .write_all(bytes)
            .map_err(|e| Error::io(&self.path, e))?;
        self.hasher.update(bytes);
        self.offset += bytes.len() as u64;
        self.count += 1;
        Ok(at)
    }

    pub fn append_lexical(&mut self, v: &LexicalVector) -> Result<u64> {
        let mut buf = entry_header(VectorKind::Lexical, v.entries().len());
        for (h, m) in v.entries() {
            buf.extend_from_slice(&h.to_le_bytes());
            buf.extend_from_slice(&m.to_le_bytes());
        }
        self.append(&buf)
    }

    pub fn append_semantic(&mut self, v: &SemanticVector) -> Result<u64> {
        let mut buf = entry_header(VectorKind::Semantic, v.dimension());
        for x in v.values() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        self.append(&buf)
    }

    /// Writes the generation into the header and returns `(generation, vector count)`.
    pub fn finish(self) -> Result<(u64, usize)> {
        let digest = self.hasher.finalize();
        let generation = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
        let path = self.path;
        let mut file = self
            .out
            .into_inner()
            .map_err(|e| Error::io(&path, e.into_error()))?;
        file.seek(SeekFrom::Start(8))
            .map_err(|e| Error::io(&path, e))?;
        file.write_all(&generation.to_le_bytes())
            .map_err(|e| Error::io(&path, e))?;
        file.sync_all().map_err(|e| Error::io(&path, e))?;
        Ok((generation, self.count))
    }
}

fn entry_header(kind: VectorKind, count: usize) -> Vec<u8> {
    let mut buf = Vec::with_capacity(ENTRY_HEADER_LEN + count * 16);
    buf.push(kind.tag());
    buf.extend_from_slice(&[0, 0, 0]);
    buf.extend_from_slice(&(count as u32).to_le_bytes());
    buf
}

/// Memory-mapped, read-only view of a vector store. Safe to share across threads.
pub struct VectorStore {
    map: Mmap,
    generation: u64,
}

impl VectorStore {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        // SAFETY: the store is written once at build time and never modified
        // while an index is open.
        let map = unsafe { Mmap::map(&file) }.map_err(|e| Error::io(path, e))?;
        if map.len() < HEADER_LEN as usize || &map[..4] != STORE_MAGIC {
            return Err(Error::Integrity(format!(
                "{} is not a vector store",
                path.display()
            )));
        }
        let version = u32::from_le_bytes(map[4..8].try_into().expect("4 bytes"));
        if version != STORE_VERSION {
            return Err(Error::Integrity(format!(
                "vector store version {version}, expected {STORE_VERSION}"
            )));
        }
        let generation = u64::from_le_bytes(map[8..16].try_into().expect("8 bytes"));
        Ok(VectorStore { map, generation })
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    fn entry(&self, handle: VectorHandle, expected: VectorKind) -> Result<(usize, &[u8])> {
        if handle.generation != self.generation {
            return Err(Error::Integrity(format!(
                "handle generation {:016x} does not match store generation {:016x}",
                handle.generation, self.generation
            )));
        }
        if handle.kind != expected {
            return Err(Error::Integrity(format!(
                "handle at {} is {:?}, expected {expected:?}",
                handle.offset, handle.kind
            )));
        }
        let start = usize::try_from(handle.offset)
            .ok()
            .filter(|&o| o >= HEADER_LEN as usize && o + ENTRY_HEADER_LEN <= self.map.len())
            .ok_or_else(|| {
                Error::Integrity(format!("handle offset {} out of range", handle.offset))
            })?;
        let head = &self.map[start..start + ENTRY_HEADER_LEN];
        if head[0] != expected.tag() {
            return Err(Error::Integrity(format!(
                "entry at {} has kind tag {}, expected {}",
                handle.offset,
                head[0],
                expected.tag()
            )));
        }
        let count = u32::from_le_bytes(head[4..8].try_into().expect("4 bytes")) as usize;
        let width = match expected {
            VectorKind::Lexical => 16,
            VectorKind::Semantic => 8,
        };
        let body_start = start + ENTRY_HEADER_LEN;
        let body_end = body_start + count * width;
        if body_end > self.map.len() {
            return Err(Error::Integrity(format!(
                "entry at {} runs past the end of the store",
                handle.offset
            )));
        }
        Ok((count, &self.map[body_start..body_end]))
    }

    pub fn lexical(&self, handle: VectorHandle) -> Result<LexicalVector> {
        let (_, body) = self.entry(handle, VectorKind::Lexical)?;
        let entries = body
            .chunks_exact(16)
            .map(|c| {
                (
                    u64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
                )
            })
            .collect();
        Ok(LexicalVector::from_stored(entries))
    }

    pub fn semantic(&self, handle: VectorHandle) -> Result<SemanticVector> {
        let (_, body) = self.entry(handle, VectorKind::Semantic)?;
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(SemanticVector::from_stored(values))
    }
}
