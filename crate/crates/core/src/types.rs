//! Domain values shared by the fusion, prior, index and ranking layers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Source modality of a retrieved chunk.
///
/// The declaration order (text, image, screenshot) is the canonical fold and
/// tie-break order everywhere in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Text,
    Image,
    Screenshot,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Text, Modality::Image, Modality::Screenshot];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Text => "text",
            Modality::Image => "image",
            Modality::Screenshot => "screenshot",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown modality '{0}' (expected text, image or screenshot)")]
pub struct UnknownModality(pub String);

impl FromStr for Modality {
    type Err = UnknownModality;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Modality::Text),
            "image" => Ok(Modality::Image),
            "screenshot" => Ok(Modality::Screenshot),
            other => Err(UnknownModality(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid bounding box [{x0}, {y0}, {x1}, {y1}]: need finite x0 <= x1 and y0 <= y1")]
pub struct InvalidBBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

/// Axis-aligned rectangle in page coordinates.
///
/// Serialized as the array `[x0, y0, x1, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[T; 4]", into = "[T; 4]")]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct BBox<T> {
    x0: T,
    y0: T,
    x1: T,
    y1: T,
}

impl<T: Scalar> BBox<T> {
    pub fn new(x0: T, y0: T, x1: T, y1: T) -> Result<Self, InvalidBBox> {
        let finite = [x0, y0, x1, y1].iter().all(|v| v.is_finite());
        if !finite || x0 > x1 || y0 > y1 {
            return Err(InvalidBBox {
                x0: x0.to_f64().unwrap_or(f64::NAN),
                y0: y0.to_f64().unwrap_or(f64::NAN),
                x1: x1.to_f64().unwrap_or(f64::NAN),
                y1: y1.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn coords(&self) -> [T; 4] {
        [self.x0, self.y0, self.x1, self.y1]
    }

    pub fn center(&self) -> (T, T) {
        (
            (self.x0 + self.x1) * T::half(),
            (self.y0 + self.y1) * T::half(),
        )
    }

    /// Euclidean distance between the two box centers.
    pub fn center_distance(&self, other: &Self) -> T {
        let (ax, ay) = self.center();
        let (bx, by) = other.center();
        (ax - bx).hypot(ay - by)
    }
}

impl<T: Scalar> TryFrom<[T; 4]> for BBox<T> {
    type Error = InvalidBBox;

    fn try_from(c: [T; 4]) -> Result<Self, Self::Error> {
        BBox::new(c[0], c[1], c[2], c[3])
    }
}

impl<T: Scalar> From<BBox<T>> for [T; 4] {
    fn from(b: BBox<T>) -> Self {
        b.coords()
    }
}

/// One retrieved chunk with its similarity score for the current query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct Candidate<T> {
    pub chunk_id: String,
    pub doc_id: String,
    pub modality: Modality,
    pub page: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox<T>>,
    pub raw_score: T,
    /// Min-max normalized score; zero until a normalizer has been applied.
    #[serde(default)]
    pub norm_score: T,
}

impl<T: Scalar> Candidate<T> {
    pub fn new(
        chunk_id: impl Into<String>,
        doc_id: impl Into<String>,
        modality: Modality,
        page: u32,
        raw_score: T,
    ) -> Self {
        Self {
            chunk_id: chunk_id.into(),
            doc_id: doc_id.into(),
            modality,
            page,
            bbox: None,
            raw_score,
            norm_score: T::zero(),
        }
    }

    pub fn with_bbox(mut self, bbox: BBox<T>) -> Self {
        self.bbox = Some(bbox);
        self
    }

    /// Sets `norm_score` directly, for callers that normalize upstream.
    pub fn with_norm_score(mut self, norm_score: T) -> Self {
        self.norm_score = norm_score;
        self
    }
}

/// Borrowed view of an evidence tuple's slots; at most one candidate per modality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slots<'a, T> {
    pub text: Option<&'a Candidate<T>>,
    pub image: Option<&'a Candidate<T>>,
    pub screenshot: Option<&'a Candidate<T>>,
}

impl<'a, T> Slots<'a, T> {
    pub fn new(
        text: Option<&'a Candidate<T>>,
        image: Option<&'a Candidate<T>>,
        screenshot: Option<&'a Candidate<T>>,
    ) -> Self {
        Self { text, image, screenshot }
    }

    pub fn get(&self, modality: Modality) -> Option<&'a Candidate<T>> {
        match modality {
            Modality::Text => self.text,
            Modality::Image => self.image,
            Modality::Screenshot => self.screenshot,
        }
    }

    /// Present candidates in canonical modality order.
    pub fn present(&self) -> impl Iterator<Item = &'a Candidate<T>> {
        [self.text, self.image, self.screenshot].into_iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.present().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Shared document id, or `None` when empty or when slots disagree.
    pub fn doc_id(&self) -> Option<&'a str> {
        let mut it = self.present();
        let first = it.next()?.doc_id.as_str();
        it.all(|c| c.doc_id == first).then_some(first)
    }
}
