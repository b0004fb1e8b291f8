//! Axis-aligned box math: IoU, centers, zone membership, and the approach
//! predicate behind intrusion alerts. Coordinates are real-valued pixels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }
}

/// Axis-aligned pixel rectangle. Zero-area boxes are representable
/// (degenerate detections); inverted corners are not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let finite = [x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite());
        if !finite || x_min > x_max || y_min > y_max {
            return Err(Error::InvalidBox {
                x_min,
                y_min,
                x_max,
                y_max,
            });
        }
        Ok(BoundingBox {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Result<Self> {
        BoundingBox::new(
            self.x_min + dx,
            self.y_min + dy,
            self.x_max + dx,
            self.y_max + dy,
        )
    }
}

/// Midpoint of a box's corners.
pub fn center(b: &BoundingBox) -> Point {
    Point::new((b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0)
}

/// Intersection area over union area. Disjoint boxes score 0; a pair of
/// zero-area boxes also scores 0.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let iy = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    inter / union
}

/// Named rectangular region whose entry by a tracked object's center raises
/// an alert. The boundary is closed: membership on the edge counts as inside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub name: String,
    pub bounds: BoundingBox,
}

impl Zone {
    pub fn new(name: impl Into<String>, bounds: BoundingBox) -> Self {
        Zone {
            name: name.into(),
            bounds,
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.bounds.x_min
            && p.x <= self.bounds.x_max
            && p.y >= self.bounds.y_min
            && p.y <= self.bounds.y_max
    }

    /// Euclidean distance from a point to the zone rectangle; 0 inside.
    pub fn distance_to(&self, p: &Point) -> f64 {
        let dx = (self.bounds.x_min - p.x).max(0.0).max(p.x - self.bounds.x_max);
        let dy = (self.bounds.y_min - p.y).max(0.0).max(p.y - self.bounds.y_max);
        (dx * dx + dy * dy).sqrt()
    }
}

/// Whether a trajectory of centers (most recent last) is closing in on a
/// zone: the point-to-zone distance strictly decreased between the first and
/// last of the most recent `window` samples, or the last center is already
/// inside. Needs at least two centers and a window of at least two.
pub fn approaching(centers: &[Point], zone: &Zone, window: usize) -> Result<bool> {
    if centers.len() < 2 {
        return Err(Error::InvalidArgument(
            "approaching needs at least two centers".into(),
        ));
    }
    if window < 2 {
        return Err(Error::InvalidArgument(
            "approach window must be at least 2".into(),
        ));
    }
    let tail = &centers[centers.len().saturating_sub(window)..];
    let last = tail.last().expect("tail is non-empty");
    if zone.contains(last) {
        return Ok(true);
    }
    let first = &tail[0];
    Ok(zone.distance_to(first) > zone.distance_to(last))
}
