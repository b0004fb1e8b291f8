//! Bundled six-frame traces reproducing two recorded tracking episodes where
//! spatial overlap alone could not hold the identity: a crane vehicle moving
//! fast through a fixed-camera corridor, and a dust-proof net filmed from a
//! drone whose own motion zeroed the overlap between several frames.
//!
//! Both traces are reverse-built from their published per-frame score
//! chains, so the constructions are auditable:
//!
//! - Boxes slide along one axis with equal size. For a target IoU `r`
//!   between equal boxes of width `w`, the overlap `o` solves
//!   `o / (2w - o) = r`, i.e. `o = 2wr / (1 + r)`; a target of zero makes
//!   consecutive boxes touch exactly.
//! - Embeddings rotate inside a fixed 2-D plane. Consecutive cosines pin the
//!   angle steps; alternating the step sign keeps every frame inside a tight
//!   cone around the first, so a single on-axis reference out-scores the
//!   orthogonal contrast reference for all six frames.

use crate::embedding::Embedding;
use crate::error::Result;
use crate::formats::{DetectionRecord, FrameDetections};
use crate::geometry::{center, BoundingBox, Zone};
use crate::store::ReferenceStore;
use crate::taxonomy::ClassLabel;

/// Consecutive-frame IoU targets for the crane-vehicle trace.
pub const CRANE_IOU_CHAIN: [f64; 5] = [0.1568, 0.3261, 0.4375, 0.3632, 0.3420];
/// Consecutive-frame cosine targets for the crane-vehicle trace.
pub const CRANE_SIMILARITY_CHAIN: [f64; 5] = [0.7789, 0.7873, 0.8470, 0.7057, 0.8829];

/// Consecutive-frame IoU targets for the dust-proof-net trace; overlap is
/// exactly zero across two of the transitions.
pub const NET_IOU_CHAIN: [f64; 5] = [0.4665, 0.0, 0.0, 0.2375, 0.4076];
/// Consecutive-frame cosine targets for the dust-proof-net trace.
pub const NET_SIMILARITY_CHAIN: [f64; 5] = [0.7463, 0.8008, 0.9075, 0.8300, 0.8239];

pub const FIXTURE_DIM: usize = 16;

/// A bundled trace: frames, the matching reference store, the score chains
/// it was built from, and a zone the trace is guaranteed to enter.
pub struct TraceFixture {
    pub label: ClassLabel,
    pub contrast_label: ClassLabel,
    pub frames: Vec<FrameDetections>,
    pub store: ReferenceStore,
    pub iou_chain: &'static [f64],
    pub similarity_chain: &'static [f64],
    pub zone: Zone,
}

/// Equal-size boxes sliding along x so that consecutive pairs hit the target
/// IoUs exactly.
pub fn boxes_from_iou_chain(first: BoundingBox, targets: &[f64]) -> Result<Vec<BoundingBox>> {
    let w = first.width();
    let mut boxes = vec![first];
    for &target in targets {
        let overlap = 2.0 * w * target / (1.0 + target);
        let prev = *boxes.last().expect("chain starts non-empty");
        boxes.push(prev.translated(w - overlap, 0.0)?);
    }
    Ok(boxes)
}

/// Unit vectors in the plane of the first two axes whose consecutive
/// cosines equal the targets. The rotation direction alternates, keeping
/// all vectors within the largest single step of the first frame's
/// direction.
pub fn embeddings_from_cosine_chain(dim: usize, targets: &[f64]) -> Result<Vec<Embedding>> {
    let mut angles = vec![0.0f64];
    let mut sign = 1.0;
    for &cosine in targets {
        let step = cosine.clamp(-1.0, 1.0).acos();
        let previous = *angles.last().expect("chain starts non-empty");
        angles.push(previous + sign * step);
        sign = -sign;
    }
    angles
        .into_iter()
        .map(|theta| {
            let mut values = vec![0.0; dim];
            values[0] = theta.cos();
            values[1] = theta.sin();
            Embedding::new(values)
        })
        .collect()
}

fn build_trace(
    label: &str,
    contrast_label: &str,
    first_box: BoundingBox,
    iou_chain: &'static [f64],
    similarity_chain: &'static [f64],
) -> Result<TraceFixture> {
    let label = ClassLabel::new(label)?;
    let contrast = ClassLabel::new(contrast_label)?;
    let boxes = boxes_from_iou_chain(first_box, iou_chain)?;
    let embeddings = embeddings_from_cosine_chain(FIXTURE_DIM, similarity_chain)?;

    let mut store = ReferenceStore::new(FIXTURE_DIM)?;
    let mut on_axis = vec![0.0; FIXTURE_DIM];
    on_axis[0] = 1.0;
    store.insert(
        &Embedding::new(on_axis)?,
        label.clone(),
        format!("fixture://{}/reference", label),
    )?;
    let mut off_axis = vec![0.0; FIXTURE_DIM];
    off_axis[1] = 1.0;
    store.insert(
        &Embedding::new(off_axis)?,
        contrast.clone(),
        format!("fixture://{}/reference", contrast),
    )?;

    let frames = boxes
        .iter()
        .zip(&embeddings)
        .enumerate()
        .map(|(i, (bbox, embedding))| FrameDetections {
            frame_index: i as u64,
            timestamp_ms: i as u64 * 33,
            detections: vec![DetectionRecord::new(*bbox, 0.9, embedding.clone())],
        })
        .collect::<Vec<_>>();

    // A zone the object's center enters on the second-to-last frame.
    let c4 = center(&boxes[4]);
    let c5 = center(&boxes[5]);
    let zone = Zone::new(
        "critical",
        BoundingBox::new(
            c4.x - 1.0,
            first_box.y_min - 40.0,
            c5.x + boxes[5].width(),
            first_box.y_max + 40.0,
        )?,
    );

    Ok(TraceFixture {
        label,
        contrast_label: contrast,
        frames,
        store,
        iou_chain,
        similarity_chain,
        zone,
    })
}

/// The crane-vehicle trace: all five transitions sit below the 0.5 IoU gate
/// while appearance similarity stays at or above 0.7057.
pub fn crane_trace() -> Result<TraceFixture> {
    build_trace(
        "crane vehicle",
        "dust-proof net",
        BoundingBox::new(100.0, 300.0, 260.0, 390.0)?,
        &CRANE_IOU_CHAIN,
        &CRANE_SIMILARITY_CHAIN,
    )
}

/// The dust-proof-net trace: overlap vanishes entirely across two
/// transitions; the track survives on appearance alone.
pub fn dust_net_trace() -> Result<TraceFixture> {
    build_trace(
        "dust-proof net",
        "tower crane",
        BoundingBox::new(80.0, 200.0, 200.0, 280.0)?,
        &NET_IOU_CHAIN,
        &NET_SIMILARITY_CHAIN,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::cosine_similarity;
    use crate::geometry::iou;

    fn assert_chain_reproduced(fixture: &TraceFixture) {
        let frames = &fixture.frames;
        assert_eq!(frames.len(), 6);
        for i in 0..5 {
            let a = &frames[i].detections[0];
            let b = &frames[i + 1].detections[0];
            let got_iou = iou(&a.bbox, &b.bbox);
            assert!(
                (got_iou - fixture.iou_chain[i]).abs() < 5e-5,
                "transition {i}: iou {got_iou} vs {}",
                fixture.iou_chain[i]
            );
            let got_cos = cosine_similarity(
                a.embedding.as_ref().unwrap(),
                b.embedding.as_ref().unwrap(),
            )
            .unwrap();
            assert!(
                (got_cos - fixture.similarity_chain[i]).abs() < 5e-5,
                "transition {i}: cosine {got_cos} vs {}",
                fixture.similarity_chain[i]
            );
        }
    }

    #[test]
    fn crane_trace_reproduces_published_chains() {
        assert_chain_reproduced(&crane_trace().unwrap());
    }

    #[test]
    fn net_trace_reproduces_published_chains() {
        assert_chain_reproduced(&dust_net_trace().unwrap());
    }

    #[test]
    fn every_frame_classifies_to_the_trace_label() {
        for fixture in [crane_trace().unwrap(), dust_net_trace().unwrap()] {
            for frame in &fixture.frames {
                let hit = fixture
                    .store
                    .classify(frame.detections[0].embedding.as_ref().unwrap())
                    .unwrap();
                assert_eq!(hit.label, fixture.label, "frame {}", frame.frame_index);
            }
        }
    }

    #[test]
    fn trace_center_enters_the_bundled_zone() {
        for fixture in [crane_trace().unwrap(), dust_net_trace().unwrap()] {
            let inside: Vec<bool> = fixture
                .frames
                .iter()
                .map(|f| fixture.zone.contains(&center(&f.detections[0].bbox)))
                .collect();
            assert!(!inside[0], "first frame should start outside");
            assert!(inside[4] && inside[5], "trace should end inside the zone");
        }
    }

    #[test]
    fn zero_iou_transitions_touch_exactly() {
        let fixture = dust_net_trace().unwrap();
        let b2 = &fixture.frames[2].detections[0].bbox;
        let b3 = &fixture.frames[3].detections[0].bbox;
        assert_eq!(iou(b2, b3), 0.0);
        assert_eq!(b2.x_min, fixture.frames[1].detections[0].bbox.x_max);
    }
}
