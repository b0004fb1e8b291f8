//! The reference embedding store: labeled appearance vectors searched by
//! brute-force cosine similarity, extended at runtime by appending records
//! (no retraining anywhere), and persisted as a line-delimited JSON snapshot.
//!
//! Embeddings are L2-normalized when ingested and quantized through f32 so
//! the snapshot round-trips bit-exactly. Lookups still divide by cached
//! norms, which keeps similarity scores exact cosine values for any snapshot
//! a caller might load. Reads (`nearest`, `classify`) take `&self` and writes
//! take `&mut self`, so concurrent readers are safe and a reader can never
//! observe a half-inserted record.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::{l2_normalize, Embedding};
use crate::error::{Error, Result};
use crate::kernel;
use crate::taxonomy::ClassLabel;

pub const SNAPSHOT_FORMAT: &str = "foi-store";
pub const SNAPSHOT_VERSION: u32 = 1;

/// One reference entry: a unique index, the embedding, the source image it
/// came from, and its class label.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRecord {
    pub index: u64,
    pub label: ClassLabel,
    pub source_path: String,
    pub embedding: Embedding,
}

/// A retrieval hit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Match {
    pub record_index: u64,
    pub label: ClassLabel,
    pub similarity: f64,
}

/// Vote statistics for one label across a track's per-frame matches.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelVotes {
    pub label: ClassLabel,
    pub count: usize,
    pub mean_similarity: f64,
}

/// Outcome of majority voting over per-frame matches.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VoteSummary {
    pub label: ClassLabel,
    /// Per-label tallies, winner first.
    pub tally: Vec<LabelVotes>,
}

#[derive(Serialize, Deserialize)]
struct SnapshotHeader {
    format: String,
    version: u32,
    dim: usize,
    count: usize,
}

#[derive(Serialize, Deserialize)]
struct SnapshotRecord {
    index: u64,
    label: ClassLabel,
    source_path: String,
    embedding: Vec<f32>,
}

#[derive(Debug)]
pub struct ReferenceStore {
    dim: usize,
    records: Vec<ReferenceRecord>,
    /// Row-major f32 payload cache scanned by the hot lookup path.
    flat: Vec<f32>,
    /// Cached L2 norm per record (about 1 after ingestion normalization).
    norms: Vec<f64>,
    next_index: u64,
}

impl ReferenceStore {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("store dimension must be positive".into()));
        }
        Ok(ReferenceStore {
            dim,
            records: Vec::new(),
            flat: Vec::new(),
            norms: Vec::new(),
            next_index: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[ReferenceRecord] {
        &self.records
    }

    /// Appends a record under the next free index. New labels need no other
    /// state change; the record is retrievable immediately.
    pub fn insert(
        &mut self,
        embedding: &Embedding,
        label: ClassLabel,
        source_path: impl Into<String>,
    ) -> Result<u64> {
        let index = self.next_index;
        self.insert_at(index, embedding, label, source_path, true)
    }

    /// Appends a record under a caller-chosen index; duplicates are an error.
    pub fn insert_with_index(
        &mut self,
        index: u64,
        embedding: &Embedding,
        label: ClassLabel,
        source_path: impl Into<String>,
    ) -> Result<u64> {
        self.insert_at(index, embedding, label, source_path, true)
    }

    fn insert_at(
        &mut self,
        index: u64,
        embedding: &Embedding,
        label: ClassLabel,
        source_path: impl Into<String>,
        normalize: bool,
    ) -> Result<u64> {
        if embedding.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: embedding.dim(),
            });
        }
        if self.records.iter().any(|r| r.index == index) {
            return Err(Error::DuplicateIndex(index));
        }
        let stored = if normalize {
            l2_normalize(embedding)?.quantized()
        } else {
            embedding.quantized()
        };
        let norm = stored.l2_norm();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        self.flat.extend(stored.to_f32());
        self.norms.push(norm);
        self.records.push(ReferenceRecord {
            index,
            label,
            source_path: source_path.into(),
            embedding: stored,
        });
        self.next_index = self.next_index.max(index + 1);
        Ok(index)
    }

    fn similarity_scan(&self, query: &Embedding) -> Result<Vec<f64>> {
        if self.records.is_empty() {
            return Err(Error::EmptyStore);
        }
        if query.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: query.dim(),
            });
        }
        let query_norm = query.l2_norm();
        if query_norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let values = query.values();
        let sims = self
            .flat
            .chunks_exact(self.dim)
            .zip(&self.norms)
            .map(|(row, &norm)| {
                (kernel::dot_f64_f32(values, row) / (query_norm * norm)).clamp(-1.0, 1.0)
            })
            .collect();
        Ok(sims)
    }

    /// Exact top-k by cosine similarity over every record. Equal similarities
    /// rank by lower record index. Returns `min(k, len)` matches.
    pub fn nearest(&self, query: &Embedding, k: usize) -> Result<Vec<Match>> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let sims = self.similarity_scan(query)?;
        if k == 1 {
            // Hot path: single max scan; strict `>` keeps the lowest index
            // among ties.
            let mut best = 0usize;
            for (i, &s) in sims.iter().enumerate().skip(1) {
                if s > sims[best] {
                    best = i;
                }
            }
            return Ok(vec![self.match_for(best, sims[best])]);
        }
        let mut order: Vec<usize> = (0..sims.len()).collect();
        let rank = |a: &usize, b: &usize| {
            sims[*b]
                .partial_cmp(&sims[*a])
                .expect("similarities are finite")
                .then(self.records[*a].index.cmp(&self.records[*b].index))
        };
        let k = k.min(order.len());
        if k < order.len() {
            order.select_nth_unstable_by(k - 1, rank);
            order.truncate(k);
        }
        order.sort_unstable_by(rank);
        Ok(order.into_iter().map(|i| self.match_for(i, sims[i])).collect())
    }

    /// The per-frame classification: closest match over the whole store.
    pub fn classify(&self, query: &Embedding) -> Result<Match> {
        Ok(self.nearest(query, 1)?.remove(0))
    }

    fn match_for(&self, slot: usize, similarity: f64) -> Match {
        let record = &self.records[slot];
        Match {
            record_index: record.index,
            label: record.label.clone(),
            similarity,
        }
    }

    /// Writes the snapshot: one header line, then one record per line.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        let header = SnapshotHeader {
            format: SNAPSHOT_FORMAT.to_string(),
            version: SNAPSHOT_VERSION,
            dim: self.dim,
            count: self.records.len(),
        };
        writeln!(w, "{}", serde_json::to_string(&header).expect("header serializes"))?;
        for record in &self.records {
            let line = SnapshotRecord {
                index: record.index,
                label: record.label.clone(),
                source_path: record.source_path.clone(),
                embedding: record.embedding.to_f32(),
            };
            writeln!(w, "{}", serde_json::to_string(&line).expect("record serializes"))?;
        }
        Ok(())
    }

    pub fn save_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.save(&mut out)?;
        out.flush()?;
        Ok(())
    }

    /// Reads a snapshot back. Records are stored as saved (no
    /// re-normalization), so load(save(S)) is record-for-record equal to S.
    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing snapshot header"))??;
        let header: SnapshotHeader = serde_json::from_str(&header_line)
            .map_err(|e| Error::parse(1, format!("bad snapshot header: {e}")))?;
        if header.format != SNAPSHOT_FORMAT {
            return Err(Error::parse(
                1,
                format!("unknown snapshot format {:?}", header.format),
            ));
        }
        if header.version != SNAPSHOT_VERSION {
            return Err(Error::parse(
                1,
                format!("unsupported snapshot version {}", header.version),
            ));
        }
        let mut store = ReferenceStore::new(header.dim)
            .map_err(|e| Error::parse(1, format!("bad snapshot header: {e}")))?;
        for (offset, line) in lines.enumerate() {
            let line_no = offset + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: SnapshotRecord = serde_json::from_str(&line)
                .map_err(|e| Error::parse(line_no, format!("bad record: {e}")))?;
            if record.embedding.len() != header.dim {
                return Err(Error::parse(
                    line_no,
                    format!(
                        "embedding has {} components but the header says dim {}",
                        record.embedding.len(),
                        header.dim
                    ),
                ));
            }
            let embedding = Embedding::from_f32(&record.embedding)
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
            store
                .insert_at(record.index, &embedding, record.label, record.source_path, false)
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
        }
        if store.len() != header.count {
            return Err(Error::parse(
                1,
                format!(
                    "header declares {} records but the snapshot holds {}",
                    header.count,
                    store.len()
                ),
            ));
        }
        Ok(store)
    }

    pub fn load_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::load(BufReader::new(File::open(path)?))
    }
}

/// Majority vote over per-frame matches: the most frequent label wins; ties
/// break on higher mean similarity, then lexicographic label order.
pub fn majority_vote(votes: &[Match]) -> Result<VoteSummary> {
    if votes.is_empty() {
        return Err(Error::InvalidArgument("majority vote over no votes".into()));
    }
    let mut tally: Vec<LabelVotes> = Vec::new();
    for vote in votes {
        match tally.iter_mut().find(|t| t.label == vote.label) {
            Some(entry) => {
                entry.count += 1;
                entry.mean_similarity += vote.similarity;
            }
            None => tally.push(LabelVotes {
                label: vote.label.clone(),
                count: 1,
                mean_similarity: vote.similarity,
            }),
        }
    }
    for entry in &mut tally {
        entry.mean_similarity /= entry.count as f64;
    }
    tally.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then(
                b.mean_similarity
                    .partial_cmp(&a.mean_similarity)
                    .expect("similarities are finite"),
            )
            .then(a.label.cmp(&b.label))
    });
    Ok(VoteSummary {
        label: tally[0].label.clone(),
        tally,
    })
}
