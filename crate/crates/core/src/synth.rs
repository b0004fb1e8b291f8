//! Deterministic synthetic scenarios: moving boxes on a canvas with
//! class-conditioned embeddings, plus matching ground truth and a reference
//! store snapshot. This is the desk-scale stand-in for real footage when
//! exercising the tracker and the retrieval pipeline end to end.
//!
//! Embedding construction keeps the class geometry under explicit control:
//! class prototypes are orthonormalized, and per-detection noise is sampled
//! in the subspace orthogonal to every prototype, capped so the cosine
//! between a detection and its own prototype never drops below
//! `min_prototype_cosine`. With a floor of 0.95 that bounds cross-class
//! similarity by 0.0975, so class separation holds by construction rather
//! than by luck.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::formats::{DetectionRecord, FrameDetections};
use crate::geometry::{iou, BoundingBox};
use crate::store::ReferenceStore;
use crate::taxonomy::ClassLabel;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub label: String,
    /// Starting box as [x_min, y_min, x_max, y_max].
    pub start: [f64; 4],
    /// Pixels per frame.
    pub velocity: [f64; 2],
    /// Inclusive frame ranges during which the detection is dropped.
    #[serde(default)]
    pub occlusions: Vec<[u64; 2]>,
}

/// A persistent viewpoint shift: every box at `frame` and later is offset by
/// (dx, dy), which forces IoU to collapse across the jump.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraJump {
    pub frame: u64,
    pub dx: f64,
    pub dy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub n_frames: u64,
    #[serde(default = "default_canvas_width")]
    pub canvas_width: f64,
    #[serde(default = "default_canvas_height")]
    pub canvas_height: f64,
    #[serde(default = "default_noise_sigma")]
    pub noise_sigma: f64,
    #[serde(default = "default_min_prototype_cosine")]
    pub min_prototype_cosine: f64,
    #[serde(default = "default_refs_per_class")]
    pub refs_per_class: usize,
    #[serde(default = "default_frame_interval_ms")]
    pub frame_interval_ms: u64,
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub camera_jumps: Vec<CameraJump>,
}

fn default_dim() -> usize {
    32
}
fn default_canvas_width() -> f64 {
    1280.0
}
fn default_canvas_height() -> f64 {
    720.0
}
fn default_noise_sigma() -> f64 {
    0.05
}
fn default_min_prototype_cosine() -> f64 {
    0.95
}
fn default_refs_per_class() -> usize {
    4
}
fn default_frame_interval_ms() -> u64 {
    33
}

impl ScenarioConfig {
    /// Three objects with crossing paths, one occlusion window each for the
    /// two fast movers, and a persistent camera jump late in the run. IoU
    /// alone loses identities here; appearance carries them through.
    pub fn crossing(seed: u64) -> Self {
        ScenarioConfig {
            seed,
            dim: default_dim(),
            n_frames: 120,
            canvas_width: 1280.0,
            canvas_height: 720.0,
            noise_sigma: 0.05,
            min_prototype_cosine: 0.95,
            refs_per_class: 4,
            frame_interval_ms: 33,
            objects: vec![
                ObjectSpec {
                    label: "crane vehicle".into(),
                    start: [50.0, 300.0, 130.0, 360.0],
                    velocity: [9.5, 0.0],
                    occlusions: vec![[40, 42]],
                },
                ObjectSpec {
                    label: "dust-proof net".into(),
                    start: [1150.0, 330.0, 1230.0, 390.0],
                    velocity: [-9.5, 0.0],
                    occlusions: vec![[70, 71]],
                },
                ObjectSpec {
                    label: "excavator".into(),
                    start: [600.0, 80.0, 700.0, 160.0],
                    velocity: [0.0, 4.5],
                    occlusions: vec![[55, 56]],
                },
            ],
            camera_jumps: vec![CameraJump {
                frame: 90,
                dx: -300.0,
                dy: 0.0,
            }],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_frames == 0 {
            return Err(Error::InvalidArgument("scenario needs at least one frame".into()));
        }
        if self.objects.is_empty() {
            return Err(Error::InvalidArgument("scenario needs at least one object".into()));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidArgument("noise sigma must be non-negative".into()));
        }
        if !(self.min_prototype_cosine > 0.0 && self.min_prototype_cosine <= 1.0) {
            return Err(Error::InvalidArgument(
                "min prototype cosine must lie in (0, 1]".into(),
            ));
        }
        if self.canvas_width <= 0.0 || self.canvas_height <= 0.0 {
            return Err(Error::InvalidArgument("canvas must have positive extent".into()));
        }
        Ok(())
    }
}

/// Everything one scenario produces.
pub struct Scenario {
    pub frames: Vec<FrameDetections>,
    pub ground_truth: Vec<FrameDetections>,
    pub store: ReferenceStore,
    /// Per object, per frame: IoU between this frame's box and the object's
    /// previous visible box. None while occluded or before first sighting.
    pub object_ious: Vec<Vec<Option<f64>>>,
    /// Clamp reports for objects that would have left the canvas.
    pub warnings: Vec<String>,
}

struct EmbeddingFactory {
    prototypes: Vec<Vec<f64>>,
    sigma: f64,
    max_residual_norm: f64,
}

impl EmbeddingFactory {
    fn new(n_classes: usize, dim: usize, sigma: f64, min_cosine: f64, rng: &mut ChaCha8Rng) -> Result<Self> {
        if n_classes > dim {
            return Err(Error::InvalidArgument(format!(
                "{n_classes} classes need at least dimension {n_classes}, got {dim}"
            )));
        }
        let mut prototypes: Vec<Vec<f64>> = Vec::with_capacity(n_classes);
        while prototypes.len() < n_classes {
            let mut candidate: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            project_out(&mut candidate, &prototypes);
            let norm = norm(&candidate);
            if norm < 1e-9 {
                continue;
            }
            candidate.iter_mut().for_each(|v| *v /= norm);
            prototypes.push(candidate);
        }
        // cos(e, prototype) = 1/sqrt(1 + s^2) for residual norm s, so the
        // floor translates into a cap on s.
        let max_residual_norm = (1.0 / (min_cosine * min_cosine) - 1.0).max(0.0).sqrt();
        Ok(EmbeddingFactory {
            prototypes,
            sigma,
            max_residual_norm,
        })
    }

    fn prototype(&self, class: usize) -> Result<Embedding> {
        Embedding::new(self.prototypes[class].clone())
    }

    /// Prototype plus noise confined to the subspace orthogonal to every
    /// prototype, capped to honor the cosine floor, then normalized.
    fn sample(&self, class: usize, rng: &mut ChaCha8Rng) -> Result<Embedding> {
        let dim = self.prototypes[class].len();
        let mut residual: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal) * self.sigma)
            .collect();
        project_out(&mut residual, &self.prototypes);
        let s = norm(&residual);
        if s > self.max_residual_norm && s > 0.0 {
            let scale = self.max_residual_norm / s;
            residual.iter_mut().for_each(|v| *v *= scale);
        }
        let mut values = self.prototypes[class].clone();
        for (v, r) in values.iter_mut().zip(&residual) {
            *v += r;
        }
        let n = norm(&values);
        values.iter_mut().for_each(|v| *v /= n);
        Embedding::new(values)
    }
}

fn project_out(vector: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let d: f64 = vector.iter().zip(b).map(|(v, w)| v * w).sum();
        for (v, w) in vector.iter_mut().zip(b) {
            *v -= d * w;
        }
    }
}

fn norm(vector: &[f64]) -> f64 {
    vector.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn generate(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let classes: Vec<ClassLabel> = config
        .objects
        .iter()
        .map(|o| ClassLabel::new(o.label.clone()))
        .collect::<Result<BTreeSet<_>>>()?
        .into_iter()
        .collect();
    let class_of = |label: &str| -> usize {
        classes
            .iter()
            .position(|c| c.as_str() == label)
            .expect("object labels were collected above")
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let factory = EmbeddingFactory::new(
        classes.len(),
        config.dim,
        config.noise_sigma,
        config.min_prototype_cosine,
        &mut rng,
    )?;

    let mut store = ReferenceStore::new(config.dim)?;
    for (c, class) in classes.iter().enumerate() {
        store.insert(
            &factory.prototype(c)?,
            class.clone(),
            format!("synthetic://{}/prototype", class),
        )?;
        for r in 0..config.refs_per_class {
            store.insert(
                &factory.sample(c, &mut rng)?,
                class.clone(),
                format!("synthetic://{}/ref{}", class, r),
            )?;
        }
    }

    let mut frames = Vec::with_capacity(config.n_frames as usize);
    let mut ground_truth = Vec::with_capacity(config.n_frames as usize);
    let mut object_ious: Vec<Vec<Option<f64>>> =
        vec![Vec::with_capacity(config.n_frames as usize); config.objects.len()];
    let mut previous_box: Vec<Option<BoundingBox>> = vec![None; config.objects.len()];
    let mut clamp_reported = vec![false; config.objects.len()];
    let mut warnings = Vec::new();

    for frame_index in 0..config.n_frames {
        let mut offset = (0.0, 0.0);
        for jump in &config.camera_jumps {
            if frame_index >= jump.frame {
                offset.0 += jump.dx;
                offset.1 += jump.dy;
            }
        }
        let mut detections = Vec::new();
        let mut gt_detections = Vec::new();
        for (obj_idx, object) in config.objects.iter().enumerate() {
            let occluded = object
                .occlusions
                .iter()
                .any(|range| frame_index >= range[0] && frame_index <= range[1]);
            if occluded {
                object_ious[obj_idx].push(None);
                continue;
            }
            let f = frame_index as f64;
            let raw = [
                object.start[0] + object.velocity[0] * f + offset.0,
                object.start[1] + object.velocity[1] * f + offset.1,
                object.start[2] + object.velocity[0] * f + offset.0,
                object.start[3] + object.velocity[1] * f + offset.1,
            ];
            let (bbox, clamped) =
                clamp_box(raw, config.canvas_width, config.canvas_height)?;
            if clamped && !clamp_reported[obj_idx] {
                clamp_reported[obj_idx] = true;
                warnings.push(format!(
                    "object {obj_idx} ({}) left the canvas at frame {frame_index}; clamped",
                    object.label
                ));
            }
            object_ious[obj_idx].push(previous_box[obj_idx].map(|prev| iou(&prev, &bbox)));
            previous_box[obj_idx] = Some(bbox);

            let embedding = factory.sample(class_of(&object.label), &mut rng)?;
            let mut record = DetectionRecord::new(bbox, 0.9, embedding);
            detections.push(record.clone());
            record.gt_label = Some(ClassLabel::new(object.label.clone())?);
            record.gt_identity = Some(obj_idx as u64);
            gt_detections.push(record);
        }
        let timestamp_ms = frame_index * config.frame_interval_ms;
        frames.push(FrameDetections {
            frame_index,
            timestamp_ms,
            detections,
        });
        ground_truth.push(FrameDetections {
            frame_index,
            timestamp_ms,
            detections: gt_detections,
        });
    }

    Ok(Scenario {
        frames,
        ground_truth,
        store,
        object_ious,
        warnings,
    })
}

/// Shifts a box back inside the canvas, shrinking it only when it is larger
/// than the canvas itself.
fn clamp_box(raw: [f64; 4], width: f64, height: f64) -> Result<(BoundingBox, bool)> {
    let [mut x0, mut y0, mut x1, mut y1] = raw;
    let mut clamped = false;
    let w = (x1 - x0).min(width);
    let h = (y1 - y0).min(height);
    if x0 < 0.0 {
        x0 = 0.0;
        x1 = w;
        clamped = true;
    } else if x1 > width {
        x1 = width;
        x0 = width - w;
        clamped = true;
    }
    if y0 < 0.0 {
        y0 = 0.0;
        y1 = h;
        clamped = true;
    } else if y1 > height {
        y1 = height;
        y0 = height - h;
        clamped = true;
    }
    Ok((BoundingBox::new(x0, y0, x1, y1)?, clamped))
}
