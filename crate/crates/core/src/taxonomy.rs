//! Class labels and the fine-to-aggregate taxonomies.
//!
//! Ten fine classes cover the common foreign-object types seen around
//! transmission corridors. Three grouping presets collapse them into three
//! broader categories; the functional-behavior grouping is the default.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Non-empty class name with case-sensitive exact-match semantics.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ClassLabel(String);

impl ClassLabel {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::InvalidArgument("class label must be non-empty".into()));
        }
        Ok(ClassLabel(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for ClassLabel {
    type Error = Error;
    fn try_from(value: String) -> Result<Self> {
        ClassLabel::new(value)
    }
}

impl From<ClassLabel> for String {
    fn from(label: ClassLabel) -> String {
        label.0
    }
}

/// The fine class vocabulary. Stores may extend it at runtime.
pub const FINE_CLASSES: [&str; 10] = [
    "bulldozer",
    "cement mixer",
    "cement pump",
    "crane vehicle",
    "dust-proof net",
    "excavator",
    "greenhouse film",
    "metal roof sheet",
    "tower crane",
    "wind-blown banner",
];

pub const AGGREGATE_NON_RIGID: &str = "non-rigid";
pub const AGGREGATE_MACHINERY: &str = "construction machinery";
pub const AGGREGATE_RIGID: &str = "rigid";

/// Total mapping from fine labels to aggregate labels, with an optional
/// catch-all bucket for labels added after the taxonomy was built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTaxonomy {
    mapping: BTreeMap<ClassLabel, ClassLabel>,
    unknown_bucket: Option<ClassLabel>,
}

impl ClassTaxonomy {
    pub fn from_pairs<I, S, T>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut mapping = BTreeMap::new();
        for (fine, aggregate) in pairs {
            mapping.insert(ClassLabel::new(fine)?, ClassLabel::new(aggregate)?);
        }
        Ok(ClassTaxonomy {
            mapping,
            unknown_bucket: None,
        })
    }

    /// Grouping by functional behavior; the best-performing preset and the
    /// session default.
    pub fn functional_behavior() -> Self {
        Self::from_pairs([
            ("greenhouse film", AGGREGATE_NON_RIGID),
            ("dust-proof net", AGGREGATE_NON_RIGID),
            ("wind-blown banner", AGGREGATE_NON_RIGID),
            ("tower crane", AGGREGATE_MACHINERY),
            ("crane vehicle", AGGREGATE_MACHINERY),
            ("cement mixer", AGGREGATE_MACHINERY),
            ("excavator", AGGREGATE_MACHINERY),
            ("bulldozer", AGGREGATE_MACHINERY),
            ("cement pump", AGGREGATE_MACHINERY),
            ("metal roof sheet", AGGREGATE_RIGID),
        ])
        .expect("static taxonomy is valid")
    }

    /// Grouping by material: metal, mesh, and plastic objects.
    pub fn by_material() -> Self {
        Self::from_pairs([
            ("tower crane", "metal"),
            ("crane vehicle", "metal"),
            ("cement mixer", "metal"),
            ("excavator", "metal"),
            ("bulldozer", "metal"),
            ("cement pump", "metal"),
            ("metal roof sheet", "metal"),
            ("dust-proof net", "mesh"),
            ("wind-blown banner", "plastic"),
            ("greenhouse film", "plastic"),
        ])
        .expect("static taxonomy is valid")
    }

    /// Grouping by height: high, medium, and ground-contact objects.
    pub fn by_height() -> Self {
        Self::from_pairs([
            ("tower crane", "high"),
            ("cement pump", "high"),
            ("crane vehicle", "high"),
            ("excavator", "medium"),
            ("cement mixer", "medium"),
            ("bulldozer", "medium"),
            ("metal roof sheet", "medium"),
            ("dust-proof net", "ground-contact"),
            ("greenhouse film", "ground-contact"),
            ("wind-blown banner", "ground-contact"),
        ])
        .expect("static taxonomy is valid")
    }

    /// Routes unmapped fine labels into `bucket` instead of erroring.
    pub fn with_unknown_bucket(mut self, bucket: ClassLabel) -> Self {
        self.unknown_bucket = Some(bucket);
        self
    }

    pub fn insert(&mut self, fine: ClassLabel, aggregate: ClassLabel) {
        self.mapping.insert(fine, aggregate);
    }

    pub fn contains(&self, fine: &ClassLabel) -> bool {
        self.mapping.contains_key(fine)
    }

    /// Maps a fine label to its aggregate class. Unmapped labels fall into
    /// the unknown bucket when one is configured and error otherwise.
    pub fn aggregate(&self, fine: &ClassLabel) -> Result<ClassLabel> {
        if let Some(agg) = self.mapping.get(fine) {
            return Ok(agg.clone());
        }
        self.unknown_bucket
            .clone()
            .ok_or_else(|| Error::UnmappedLabel(fine.as_str().to_string()))
    }
}

impl Default for ClassTaxonomy {
    fn default() -> Self {
        Self::functional_behavior()
    }
}
