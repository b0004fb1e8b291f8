//! Feature-assisted IoU multi-object tracking.
//!
//! Association runs in two stages each frame. Spatial first: track/detection
//! pairs are committed greedily in descending IoU while the overlap clears
//! the threshold, with exact IoU ties broken by appearance similarity and
//! then by lower track id. Appearance second: every detection still
//! unmatched is compared against the remaining tracks by cosine similarity
//! over a small buffer of recent embeddings, and pairs are committed
//! greedily in descending similarity while they clear the feature
//! threshold. This is what keeps identities alive through fast motion and
//! viewpoint jumps where IoU collapses to zero. Detections that survive both
//! stages spawn new tracks; tracks that match nothing accrue a miss and turn
//! Lost after `max_misses` consecutive misses.
//!
//! One tracker instance serves one stream; calls must stay serialized and
//! frame indices strictly increasing. Lost tracks are retained (never
//! re-associated) so end-of-run reporting can still vote over their history.

use std::collections::VecDeque;

use crate::embedding::{cosine_similarity, Embedding};
use crate::error::{Error, Result};
use crate::geometry::{center, iou, BoundingBox, Point};
use crate::store::Match;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    /// Minimum IoU for a spatial association.
    pub iou_threshold: f64,
    /// Minimum appearance similarity for a feature association. Values
    /// above 1 disable the feature stage outright (cosine never exceeds 1).
    pub feature_threshold: f64,
    /// Consecutive unmatched frames before a track is marked Lost.
    pub max_misses: u32,
    /// Number of recent embeddings retained per track.
    pub buffer_size: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            iou_threshold: 0.5,
            feature_threshold: 0.70,
            max_misses: 30,
            buffer_size: 5,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.iou_threshold) {
            return Err(Error::InvalidArgument(
                "iou threshold must lie in [0, 1]".into(),
            ));
        }
        if !self.feature_threshold.is_finite() || self.feature_threshold < 0.0 {
            return Err(Error::InvalidArgument(
                "feature threshold must be a non-negative real".into(),
            ));
        }
        if self.max_misses == 0 {
            return Err(Error::InvalidArgument("max_misses must be at least 1".into()));
        }
        if self.buffer_size == 0 {
            return Err(Error::InvalidArgument("buffer size must be at least 1".into()));
        }
        Ok(())
    }
}

/// One per-frame observation handed to the tracker.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub bbox: BoundingBox,
    pub confidence: f64,
    pub embedding: Embedding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum TrackState {
    Active,
    Lost,
}

/// Per-frame classification vote attached to a track by the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteEntry {
    pub frame_index: u64,
    pub matched: Match,
}

/// A persistent identity: box history, a ring buffer of recent embeddings,
/// the per-frame vote trail, and lifecycle state.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    id: u64,
    state: TrackState,
    last_box: BoundingBox,
    center_history: Vec<Point>,
    embeddings: VecDeque<Embedding>,
    votes: Vec<VoteEntry>,
    misses: u32,
    first_frame: u64,
    last_update_frame: u64,
}

impl Track {
    fn spawn(id: u64, detection: &Detection, frame_index: u64, buffer_size: usize) -> Self {
        let mut embeddings = VecDeque::with_capacity(buffer_size);
        embeddings.push_back(detection.embedding.clone());
        Track {
            id,
            state: TrackState::Active,
            last_box: detection.bbox,
            center_history: vec![center(&detection.bbox)],
            embeddings,
            votes: Vec::new(),
            misses: 0,
            first_frame: frame_index,
            last_update_frame: frame_index,
        }
    }

    fn update(&mut self, detection: &Detection, frame_index: u64, buffer_size: usize) {
        self.last_box = detection.bbox;
        self.center_history.push(center(&detection.bbox));
        self.embeddings.push_back(detection.embedding.clone());
        while self.embeddings.len() > buffer_size {
            self.embeddings.pop_front();
        }
        self.misses = 0;
        self.last_update_frame = frame_index;
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn state(&self) -> TrackState {
        self.state
    }

    pub fn is_active(&self) -> bool {
        self.state == TrackState::Active
    }

    pub fn last_box(&self) -> &BoundingBox {
        &self.last_box
    }

    pub fn center_history(&self) -> &[Point] {
        &self.center_history
    }

    pub fn last_center(&self) -> Point {
        *self.center_history.last().expect("tracks always have a center")
    }

    pub fn embeddings(&self) -> impl Iterator<Item = &Embedding> {
        self.embeddings.iter()
    }

    pub fn votes(&self) -> &[VoteEntry] {
        &self.votes
    }

    pub fn vote_matches(&self) -> Vec<Match> {
        self.votes.iter().map(|v| v.matched.clone()).collect()
    }

    pub(crate) fn push_vote(&mut self, frame_index: u64, matched: Match) {
        self.votes.push(VoteEntry { frame_index, matched });
    }

    pub fn misses(&self) -> u32 {
        self.misses
    }

    pub fn first_frame(&self) -> u64 {
        self.first_frame
    }

    pub fn last_update_frame(&self) -> u64 {
        self.last_update_frame
    }
}

/// Highest cosine similarity between an embedding and any embedding buffered
/// on the track.
pub fn track_similarity(track: &Track, embedding: &Embedding) -> Result<f64> {
    if track.embeddings.is_empty() {
        return Err(Error::InvalidArgument(
            "track has no buffered embeddings".into(),
        ));
    }
    let mut best = f64::MIN;
    for buffered in &track.embeddings {
        best = best.max(cosine_similarity(embedding, buffered)?);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum AssociationMode {
    #[serde(rename = "IoU")]
    Iou,
    Feature,
}

/// A committed track/detection pair, with the scores that drove it.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Assignment {
    pub track_id: u64,
    pub detection: usize,
    pub mode: AssociationMode,
    pub iou: f64,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct NewTrack {
    pub track_id: u64,
    pub detection: usize,
}

/// What one frame did to the track set.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FrameResult {
    pub frame_index: u64,
    pub assignments: Vec<Assignment>,
    pub new_tracks: Vec<NewTrack>,
    pub lost_tracks: Vec<u64>,
}

pub struct Tracker {
    config: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u64,
    last_frame_index: Option<u64>,
}

struct PairScore {
    slot: usize,
    detection: usize,
    iou: f64,
    similarity: f64,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Tracker {
            config,
            tracks: Vec::new(),
            next_id: 1,
            last_frame_index: None,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Every track seen this session, Active and Lost alike, in id order.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn track(&self, id: u64) -> Option<&Track> {
        self.tracks.iter().find(|t| t.id == id)
    }

    pub(crate) fn track_mut(&mut self, id: u64) -> Option<&mut Track> {
        self.tracks.iter_mut().find(|t| t.id == id)
    }

    /// Runs both association stages and applies the outcome: matched tracks
    /// are updated, unmatched detections spawn tracks, unmatched tracks
    /// accrue a miss and flip to Lost at the limit.
    pub fn step(&mut self, detections: &[Detection], frame_index: u64) -> Result<FrameResult> {
        if let Some(previous) = self.last_frame_index {
            if frame_index <= previous {
                return Err(Error::OutOfOrderFrame {
                    previous,
                    current: frame_index,
                });
            }
        }
        self.last_frame_index = Some(frame_index);

        let active: Vec<usize> = (0..self.tracks.len())
            .filter(|&i| self.tracks[i].is_active())
            .collect();

        // Score every active-track/detection pair once; both stages and the
        // diagnostics read from the same matrix.
        let mut pairs: Vec<PairScore> = Vec::with_capacity(active.len() * detections.len());
        for &slot in &active {
            for (d, det) in detections.iter().enumerate() {
                pairs.push(PairScore {
                    slot,
                    detection: d,
                    iou: iou(self.tracks[slot].last_box(), &det.bbox),
                    similarity: track_similarity(&self.tracks[slot], &det.embedding)?,
                });
            }
        }

        let mut track_taken = vec![false; self.tracks.len()];
        let mut det_taken = vec![false; detections.len()];
        let mut assignments: Vec<Assignment> = Vec::new();

        // Spatial stage: descending IoU above the threshold; exact ties fall
        // back to appearance, then to the lower track id.
        let mut spatial: Vec<&PairScore> = pairs
            .iter()
            .filter(|p| p.iou >= self.config.iou_threshold)
            .collect();
        spatial.sort_by(|a, b| {
            b.iou
                .partial_cmp(&a.iou)
                .expect("iou is finite")
                .then(b.similarity.partial_cmp(&a.similarity).expect("similarity is finite"))
                .then(self.tracks[a.slot].id.cmp(&self.tracks[b.slot].id))
                .then(a.detection.cmp(&b.detection))
        });
        for pair in spatial {
            if track_taken[pair.slot] || det_taken[pair.detection] {
                continue;
            }
            track_taken[pair.slot] = true;
            det_taken[pair.detection] = true;
            assignments.push(Assignment {
                track_id: self.tracks[pair.slot].id,
                detection: pair.detection,
                mode: AssociationMode::Iou,
                iou: pair.iou,
                similarity: pair.similarity,
            });
        }

        // Appearance stage over what is left: descending similarity above
        // the feature threshold.
        let mut feature: Vec<&PairScore> = pairs
            .iter()
            .filter(|p| {
                !track_taken[p.slot]
                    && !det_taken[p.detection]
                    && p.similarity >= self.config.feature_threshold
            })
            .collect();
        feature.sort_by(|a, b| {
            b.similarity
                .partial_cmp(&a.similarity)
                .expect("similarity is finite")
                .then(self.tracks[a.slot].id.cmp(&self.tracks[b.slot].id))
                .then(a.detection.cmp(&b.detection))
        });
        for pair in feature {
            if track_taken[pair.slot] || det_taken[pair.detection] {
                continue;
            }
            track_taken[pair.slot] = true;
            det_taken[pair.detection] = true;
            assignments.push(Assignment {
                track_id: self.tracks[pair.slot].id,
                detection: pair.detection,
                mode: AssociationMode::Feature,
                iou: pair.iou,
                similarity: pair.similarity,
            });
        }

        for assignment in &assignments {
            let slot = self
                .tracks
                .iter()
                .position(|t| t.id == assignment.track_id)
                .expect("assignment references a live track");
            self.tracks[slot].update(
                &detections[assignment.detection],
                frame_index,
                self.config.buffer_size,
            );
        }

        let mut lost_tracks = Vec::new();
        for &slot in &active {
            if track_taken[slot] {
                continue;
            }
            let track = &mut self.tracks[slot];
            track.misses += 1;
            if track.misses >= self.config.max_misses {
                track.state = TrackState::Lost;
                lost_tracks.push(track.id);
            }
        }

        let mut new_tracks = Vec::new();
        for (d, det) in detections.iter().enumerate() {
            if det_taken[d] {
                continue;
            }
            let id = self.next_id;
            self.next_id += 1;
            self.tracks
                .push(Track::spawn(id, det, frame_index, self.config.buffer_size));
            new_tracks.push(NewTrack {
                track_id: id,
                detection: d,
            });
        }

        Ok(FrameResult {
            frame_index,
            assignments,
            new_tracks,
            lost_tracks,
        })
    }
}
