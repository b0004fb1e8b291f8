//! Per-frame orchestration: run the tracker, attach per-frame
//! classifications to each track's vote trail, evaluate zone intrusion and
//! approach, and emit alert events. Classification runs every frame for
//! every matched detection so the final majority vote sees the full trail.
//!
//! Alerts are edge-triggered with episode semantics: a track sitting inside
//! a zone for a hundred frames raises exactly one `Entered` event, and an
//! episode re-arms only after its condition has stayed clear for the
//! configured approach window.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::FrameDetections;
use crate::geometry::{approaching, Point, Zone};
use crate::store::{majority_vote, ReferenceStore, VoteSummary};
use crate::taxonomy::{ClassLabel, ClassTaxonomy};
use crate::tracker::{Detection, FrameResult, Tracker, TrackerConfig};

/// Reported when a track with an empty vote trail must be labeled anyway.
pub const UNCLASSIFIED: &str = "unclassified";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub tracker: TrackerConfig,
    pub zones: Vec<Zone>,
    /// Window (frames) for the approach predicate and for episode re-arming.
    pub approach_window: usize,
    /// Fine-to-aggregate class mapping carried by the session. Aggregate
    /// hints on input detections stay advisory; track identity always comes
    /// from the embedding store.
    pub taxonomy: ClassTaxonomy,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            tracker: TrackerConfig::default(),
            zones: Vec::new(),
            approach_window: 5,
            taxonomy: ClassTaxonomy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AlertKind {
    Entered,
    Approaching,
}

/// An intrusion event. At most one live event per (track, zone, kind)
/// episode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlertEvent {
    pub frame_index: u64,
    pub track_id: u64,
    pub kind: AlertKind,
    pub zone: String,
    pub label: ClassLabel,
    pub mean_similarity: f64,
}

/// Per-track summary: the majority label over the full vote trail, the trail
/// itself, and the center trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackReport {
    pub track_id: u64,
    pub final_label: ClassLabel,
    pub first_frame: u64,
    pub last_frame: u64,
    pub votes: Vec<ReportVote>,
    pub trajectory: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportVote {
    pub frame_index: u64,
    pub record_index: u64,
    pub label: ClassLabel,
    pub similarity: f64,
}

/// Outcome of one processed frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStep {
    pub result: FrameResult,
    pub alerts: Vec<AlertEvent>,
}

/// Accumulated wall-clock cost per stage. Stage boundaries share timestamps,
/// so parse + associate + classify + alert telescopes exactly to `total`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SessionStats {
    pub frames: u64,
    pub parse: Duration,
    pub associate: Duration,
    pub classify: Duration,
    pub alert: Duration,
    pub total: Duration,
}

#[derive(Debug, Default, Clone)]
struct EpisodeState {
    live: bool,
    clear_streak: usize,
}

impl EpisodeState {
    /// Returns true when this observation should emit an event.
    fn observe(&mut self, condition_holds: bool, rearm_after: usize) -> bool {
        if condition_holds {
            self.clear_streak = 0;
            if !self.live {
                self.live = true;
                return true;
            }
            return false;
        }
        if self.live {
            self.clear_streak += 1;
            if self.clear_streak >= rearm_after {
                self.live = false;
                self.clear_streak = 0;
            }
        }
        false
    }
}

pub struct Session {
    store: ReferenceStore,
    config: SessionConfig,
    tracker: Tracker,
    // Keyed by (track id, zone index, kind discriminant).
    episodes: BTreeMap<(u64, usize, u8), EpisodeState>,
    stats: SessionStats,
}

impl Session {
    pub fn new(store: ReferenceStore, config: SessionConfig) -> Result<Self> {
        if config.approach_window < 2 {
            return Err(Error::InvalidArgument(
                "approach window must be at least 2".into(),
            ));
        }
        let tracker = Tracker::new(config.tracker.clone())?;
        Ok(Session {
            store,
            config,
            tracker,
            episodes: BTreeMap::new(),
            stats: SessionStats::default(),
        })
    }

    pub fn store(&self) -> &ReferenceStore {
        &self.store
    }

    pub fn taxonomy(&self) -> &ClassTaxonomy {
        &self.config.taxonomy
    }

    pub fn tracker(&self) -> &Tracker {
        &self.tracker
    }

    pub fn stats(&self) -> SessionStats {
        self.stats
    }

    /// Lets the caller account time spent parsing this session's input.
    pub fn add_parse_time(&mut self, spent: Duration) {
        self.stats.parse += spent;
        self.stats.total += spent;
    }

    pub fn process_frame(&mut self, frame: &FrameDetections) -> Result<FrameStep> {
        let detections: Vec<Detection> = frame
            .detections
            .iter()
            .map(|record| record.to_detection())
            .collect::<Result<_>>()?;
        if !detections.is_empty() && self.store.is_empty() {
            return Err(Error::EmptyStore);
        }

        let started = Instant::now();
        let result = self.tracker.step(&detections, frame.frame_index)?;
        let associated = Instant::now();

        // Vote trail: classify the embedding behind every matched or
        // newly спawned track.
        let mut touched: Vec<(u64, usize)> = result
            .assignments
            .iter()
            .map(|a| (a.track_id, a.detection))
            .chain(result.new_tracks.iter().map(|n| (n.track_id, n.detection)))
            .collect();
        touched.sort_unstable();
        for (track_id, det) in touched {
            let matched = self.store.classify(&detections[det].embedding)?;
            self.tracker
                .track_mut(track_id)
                .expect("touched tracks exist")
                .push_vote(frame.frame_index, matched);
        }
        let classified = Instant::now();

        let alerts = self.evaluate_alerts(frame.frame_index)?;
        let alerted = Instant::now();

        self.stats.frames += 1;
        self.stats.associate += associated - started;
        self.stats.classify += classified - associated;
        self.stats.alert += alerted - classified;
        self.stats.total += alerted - started;

        Ok(FrameStep { result, alerts })
    }

    fn evaluate_alerts(&mut self, frame_index: u64) -> Result<Vec<AlertEvent>> {
        let mut alerts = Vec::new();
        let window = self.config.approach_window;
        // Track id order, then zone config order: deterministic output.
        let track_ids: Vec<u64> = self
            .tracker
            .tracks()
            .iter()
            .filter(|t| t.is_active())
            .map(|t| t.id())
            .collect();
        for track_id in track_ids {
            let track = self.tracker.track(track_id).expect("id from live set");
            let centers: Vec<Point> = track.center_history().to_vec();
            let last = *centers.last().expect("tracks always have a center");
            let summary = current_label(track.vote_matches().as_slice());
            for (zone_idx, zone) in self.config.zones.iter().enumerate() {
                let inside = zone.contains(&last);
                let near = if inside {
                    // An occupied zone keeps the approach episode pinned so
                    // leaving and re-entering does not double-fire it.
                    true
                } else if centers.len() >= 2 {
                    approaching(&centers, zone, window)?
                } else {
                    false
                };

                let entered = self
                    .episodes
                    .entry((track_id, zone_idx, 0))
                    .or_default()
                    .observe(inside, window);
                if entered {
                    alerts.push(AlertEvent {
                        frame_index,
                        track_id,
                        kind: AlertKind::Entered,
                        zone: zone.name.clone(),
                        label: summary.0.clone(),
                        mean_similarity: summary.1,
                    });
                }
                let approach_fired = self
                    .episodes
                    .entry((track_id, zone_idx, 1))
                    .or_default()
                    .observe(near, window);
                if approach_fired && !inside {
                    alerts.push(AlertEvent {
                        frame_index,
                        track_id,
                        kind: AlertKind::Approaching,
                        zone: zone.name.clone(),
                        label: summary.0.clone(),
                        mean_similarity: summary.1,
                    });
                }
            }
        }
        Ok(alerts)
    }

    /// One report per track, Active or Lost, majority-voted over its full
    /// trail.
    pub fn finalize(&self) -> Vec<TrackReport> {
        self.tracker
            .tracks()
            .iter()
            .map(|track| {
                let votes = track.vote_matches();
                let final_label = match majority_vote(&votes) {
                    Ok(summary) => summary.label,
                    Err(_) => ClassLabel::new(UNCLASSIFIED).expect("constant label is valid"),
                };
                TrackReport {
                    track_id: track.id(),
                    final_label,
                    first_frame: track.first_frame(),
                    last_frame: track.last_update_frame(),
                    votes: track
                        .votes()
                        .iter()
                        .map(|v| ReportVote {
                            frame_index: v.frame_index,
                            record_index: v.matched.record_index,
                            label: v.matched.label.clone(),
                            similarity: v.matched.similarity,
                        })
                        .collect(),
                    trajectory: track
                        .center_history()
                        .iter()
                        .map(|p| (p.x, p.y))
                        .collect(),
                }
            })
            .collect()
    }
}

/// Majority label so far plus its mean similarity; `unclassified` for an
/// empty trail.
fn current_label(votes: &[crate::store::Match]) -> (ClassLabel, f64) {
    match majority_vote(votes) {
        Ok(VoteSummary { label, tally }) => {
            let mean = tally
                .iter()
                .find(|t| t.label == label)
                .map(|t| t.mean_similarity)
                .unwrap_or(0.0);
            (label, mean)
        }
        Err(_) => (
            ClassLabel::new(UNCLASSIFIED).expect("constant label is valid"),
            0.0,
        ),
    }
}
