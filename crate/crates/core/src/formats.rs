//! Line-delimited JSON formats: frame inputs, alert events, track reports.
//!
//! Frame files carry one frame per line:
//!
//! ```json
//! {"frame_index":0,"timestamp_ms":0,"detections":[{"box":[x0,y0,x1,y1],"confidence":0.9,"embedding":[...]}]}
//! ```
//!
//! Detections may additionally carry an advisory `agg_class` hint, a
//! predicted `label` (scored files), and `gt_label`/`gt_identity`
//! (ground-truth files reuse the same shape). Embedding payloads are 32-bit;
//! parsing widens them and rejects zero-norm or dimension-mixing input with
//! the offending line number.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::taxonomy::ClassLabel;
use crate::tracker::Detection;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawFrame {
    frame_index: u64,
    timestamp_ms: u64,
    detections: Vec<RawDetection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawDetection {
    #[serde(rename = "box")]
    bbox: [f64; 4],
    confidence: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    agg_class: Option<ClassLabel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<ClassLabel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gt_label: Option<ClassLabel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gt_identity: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    embedding: Option<Vec<f32>>,
}

/// One parsed detection plus the optional bookkeeping fields.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub bbox: BoundingBox,
    pub confidence: f64,
    pub embedding: Option<Embedding>,
    pub agg_class: Option<ClassLabel>,
    pub label: Option<ClassLabel>,
    pub gt_label: Option<ClassLabel>,
    pub gt_identity: Option<u64>,
}

impl DetectionRecord {
    pub fn new(bbox: BoundingBox, confidence: f64, embedding: Embedding) -> Self {
        DetectionRecord {
            bbox,
            confidence,
            embedding: Some(embedding),
            agg_class: None,
            label: None,
            gt_label: None,
            gt_identity: None,
        }
    }

    /// The tracker-facing view; errors when the record has no embedding.
    pub fn to_detection(&self) -> Result<Detection> {
        let embedding = self.embedding.clone().ok_or_else(|| {
            Error::InvalidArgument("detection record has no embedding".into())
        })?;
        Ok(Detection {
            bbox: self.bbox,
            confidence: self.confidence,
            embedding,
        })
    }
}

/// One frame of input: strictly increasing `frame_index` within a stream,
/// timestamps carried through but never used for association.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDetections {
    pub frame_index: u64,
    pub timestamp_ms: u64,
    pub detections: Vec<DetectionRecord>,
}

#[derive(Debug, Clone, Copy)]
pub struct ReadOptions {
    /// When set, every embedding must have exactly this dimension. When
    /// unset, the first embedding in the file fixes the dimension.
    pub expected_dim: Option<usize>,
    /// Frame streams for tracking require embeddings; ground-truth files
    /// may omit them.
    pub require_embedding: bool,
}

impl Default for ReadOptions {
    fn default() -> Self {
        ReadOptions {
            expected_dim: None,
            require_embedding: true,
        }
    }
}

/// Streaming frame parser; yields frames in file order and fails fast with
/// the offending line number.
pub struct FrameReader<R: BufRead> {
    lines: std::io::Lines<R>,
    line_no: usize,
    options: ReadOptions,
    dim: Option<usize>,
    previous_index: Option<u64>,
}

impl<R: BufRead> FrameReader<R> {
    pub fn new(reader: R, options: ReadOptions) -> Self {
        FrameReader {
            lines: reader.lines(),
            line_no: 0,
            options,
            dim: options.expected_dim,
            previous_index: None,
        }
    }

    fn parse_line(&mut self, line: &str) -> Result<FrameDetections> {
        let raw: RawFrame = serde_json::from_str(line)
            .map_err(|e| Error::parse(self.line_no, e.to_string()))?;
        if let Some(previous) = self.previous_index {
            if raw.frame_index <= previous {
                return Err(Error::parse(
                    self.line_no,
                    format!("frame_index {} is not after {}", raw.frame_index, previous),
                ));
            }
        }
        self.previous_index = Some(raw.frame_index);

        let mut detections = Vec::with_capacity(raw.detections.len());
        for (i, det) in raw.detections.into_iter().enumerate() {
            let context = |msg: String| {
                Error::parse(self.line_no, format!("detection {i}: {msg}"))
            };
            let [x0, y0, x1, y1] = det.bbox;
            let bbox = BoundingBox::new(x0, y0, x1, y1).map_err(|e| context(e.to_string()))?;
            if !(0.0..=1.0).contains(&det.confidence) || !det.confidence.is_finite() {
                return Err(context(format!(
                    "confidence {} outside [0, 1]",
                    det.confidence
                )));
            }
            let embedding = match det.embedding {
                Some(values) => {
                    if let Some(dim) = self.dim {
                        if values.len() != dim {
                            return Err(context(format!(
                                "embedding has {} components, expected {}",
                                values.len(),
                                dim
                            )));
                        }
                    } else {
                        self.dim = Some(values.len());
                    }
                    let emb = Embedding::from_f32(&values).map_err(|e| context(e.to_string()))?;
                    if emb.l2_norm() == 0.0 {
                        return Err(context("zero-norm embedding".into()));
                    }
                    Some(emb)
                }
                None if self.options.require_embedding => {
                    return Err(context("missing field `embedding`".into()));
                }
                None => None,
            };
            detections.push(DetectionRecord {
                bbox,
                confidence: det.confidence,
                embedding,
                agg_class: det.agg_class,
                label: det.label,
                gt_label: det.gt_label,
                gt_identity: det.gt_identity,
            });
        }
        Ok(FrameDetections {
            frame_index: raw.frame_index,
            timestamp_ms: raw.timestamp_ms,
            detections,
        })
    }
}

impl<R: BufRead> Iterator for FrameReader<R> {
    type Item = Result<FrameDetections>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line_no += 1;
            match self.lines.next()? {
                Ok(line) => {
                    if line.trim().is_empty() {
                        continue;
                    }
                    return Some(self.parse_line(&line));
                }
                Err(e) => return Some(Err(e.into())),
            }
        }
    }
}

/// Reads a whole frame file into memory.
pub fn read_frames<R: BufRead>(reader: R, options: ReadOptions) -> Result<Vec<FrameDetections>> {
    FrameReader::new(reader, options).collect()
}

/// Writes frames in the line format above.
pub fn write_frames<W: Write>(mut w: W, frames: &[FrameDetections]) -> Result<()> {
    for frame in frames {
        let raw = RawFrame {
            frame_index: frame.frame_index,
            timestamp_ms: frame.timestamp_ms,
            detections: frame
                .detections
                .iter()
                .map(|d| RawDetection {
                    bbox: [d.bbox.x_min, d.bbox.y_min, d.bbox.x_max, d.bbox.y_max],
                    confidence: d.confidence,
                    agg_class: d.agg_class.clone(),
                    label: d.label.clone(),
                    gt_label: d.gt_label.clone(),
                    gt_identity: d.gt_identity,
                    embedding: d.embedding.as_ref().map(|e| e.to_f32()),
                })
                .collect(),
        };
        writeln!(w, "{}", serde_json::to_string(&raw).expect("frame serializes"))?;
    }
    Ok(())
}

/// Serializes any record stream as line-delimited JSON.
pub fn write_jsonl<W: Write, T: Serialize>(mut w: W, items: &[T]) -> Result<()> {
    for item in items {
        writeln!(w, "{}", serde_json::to_string(item).expect("record serializes"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame_line(dim: usize) -> String {
        let emb: Vec<String> = (0..dim).map(|i| format!("{}.0", i + 1)).collect();
        format!(
            "{{\"frame_index\":0,\"timestamp_ms\":0,\"detections\":[{{\"box\":[0,0,10,10],\"confidence\":0.9,\"embedding\":[{}]}}]}}",
            emb.join(",")
        )
    }

    #[test]
    fn frames_round_trip() {
        let line = frame_line(4);
        let frames = read_frames(line.as_bytes(), ReadOptions::default()).unwrap();
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].detections.len(), 1);
        let mut out = Vec::new();
        write_frames(&mut out, &frames).unwrap();
        let again = read_frames(out.as_slice(), ReadOptions::default()).unwrap();
        assert_eq!(frames, again);
    }

    #[test]
    fn missing_embedding_names_field_and_line() {
        let text = format!(
            "{}\n{{\"frame_index\":1,\"timestamp_ms\":33,\"detections\":[{{\"box\":[0,0,1,1],\"confidence\":0.5}}]}}",
            frame_line(4)
        );
        match read_frames(text.as_bytes(), ReadOptions::default()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("embedding"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_monotonic_frame_index_rejected() {
        let text = format!("{}\n{}", frame_line(4), frame_line(4));
        match read_frames(text.as_bytes(), ReadOptions::default()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("frame_index"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn dimension_mixing_rejected() {
        let options = ReadOptions {
            expected_dim: Some(3),
            require_embedding: true,
        };
        match read_frames(frame_line(4).as_bytes(), options) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 1);
                assert!(message.contains("expected 3"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn zero_norm_embedding_rejected_at_parse() {
        let text = "{\"frame_index\":0,\"timestamp_ms\":0,\"detections\":[{\"box\":[0,0,1,1],\"confidence\":0.5,\"embedding\":[0.0,0.0]}]}";
        assert!(matches!(
            read_frames(text.as_bytes(), ReadOptions::default()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn gt_records_may_omit_embeddings() {
        let text = "{\"frame_index\":0,\"timestamp_ms\":0,\"detections\":[{\"box\":[0,0,1,1],\"confidence\":0.5,\"gt_label\":\"crane vehicle\",\"gt_identity\":2}]}";
        let options = ReadOptions {
            expected_dim: None,
            require_embedding: false,
        };
        let frames = read_frames(text.as_bytes(), options).unwrap();
        let det = &frames[0].detections[0];
        assert_eq!(det.gt_identity, Some(2));
        assert!(det.embedding.is_none());
        assert!(det.to_detection().is_err());
    }

    #[test]
    fn bad_confidence_and_bad_box_are_parse_errors() {
        let text = "{\"frame_index\":0,\"timestamp_ms\":0,\"detections\":[{\"box\":[0,0,1,1],\"confidence\":1.5,\"embedding\":[1.0]}]}";
        assert!(matches!(
            read_frames(text.as_bytes(), ReadOptions::default()),
            Err(Error::Parse { .. })
        ));
        let text = "{\"frame_index\":0,\"timestamp_ms\":0,\"detections\":[{\"box\":[5,0,1,1],\"confidence\":0.5,\"embedding\":[1.0]}]}";
        assert!(matches!(
            read_frames(text.as_bytes(), ReadOptions::default()),
            Err(Error::Parse { .. })
        ));
    }
}
