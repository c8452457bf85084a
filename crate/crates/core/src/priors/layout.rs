//! Bounding-box and pagination prior.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::FusionConfig;
use crate::scalar::Scalar;
use crate::types::BBox;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("layout record {chunk_id}: page size {width} x {height} must be positive")]
    InvalidPageSize { chunk_id: String, width: f64, height: f64 },
    #[error("duplicate layout record for chunk {0}")]
    DuplicateChunk(String),
}

/// Placement of one chunk inside its source document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct LayoutRecord<T> {
    pub chunk_id: String,
    pub doc_id: String,
    pub page: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BBox<T>>,
    pub page_width: T,
    pub page_height: T,
}

impl<T: Scalar> LayoutRecord<T> {
    pub fn new(
        chunk_id: impl Into<String>,
        doc_id: impl Into<String>,
        page: u32,
        bbox: Option<BBox<T>>,
        page_width: T,
        page_height: T,
    ) -> Result<Self, LayoutError> {
        let record = Self {
            chunk_id: chunk_id.into(),
            doc_id: doc_id.into(),
            page,
            bbox,
            page_width,
            page_height,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<(), LayoutError> {
        let ok = |v: T| v.is_finite() && v > T::zero();
        if ok(self.page_width) && ok(self.page_height) {
            Ok(())
        } else {
            Err(LayoutError::InvalidPageSize {
                chunk_id: self.chunk_id.clone(),
                width: self.page_width.to_f64().unwrap_or(f64::NAN),
                height: self.page_height.to_f64().unwrap_or(f64::NAN),
            })
        }
    }

    pub fn page_diagonal(&self) -> T {
        self.page_width.hypot(self.page_height)
    }
}

/// Layout records keyed by chunk id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LayoutStore<T> {
    records: HashMap<String, LayoutRecord<T>>,
}

impl<T: Scalar> LayoutStore<T> {
    pub fn from_records(
        records: impl IntoIterator<Item = LayoutRecord<T>>,
    ) -> Result<Self, LayoutError> {
        let mut map = HashMap::new();
        for r in records {
            r.validate()?;
            if map.contains_key(&r.chunk_id) {
                return Err(LayoutError::DuplicateChunk(r.chunk_id));
            }
            map.insert(r.chunk_id.clone(), r);
        }
        Ok(Self { records: map })
    }

    pub fn get(&self, chunk_id: &str) -> Option<&LayoutRecord<T>> {
        self.records.get(chunk_id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Result of the layout check. `bbox_missing` marks that the spatial signal
/// was unavailable and `value` fell back to epsilon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutPrior<T> {
    pub value: T,
    pub bbox_missing: bool,
}

/// 1.0 when text and image boxes are close and both sit near the screenshot page, epsilon otherwise.
///
/// Closeness compares the box-center distance with `tau` times the diagonal of
/// the text chunk's page. Pages are near when both offsets from the screenshot
/// page are strictly below `tau_page`.
pub fn layout_prior<T: Scalar>(
    t: &LayoutRecord<T>,
    v: &LayoutRecord<T>,
    s: &LayoutRecord<T>,
    config: &FusionConfig<T>,
) -> LayoutPrior<T> {
    layout_check(t, v, s.page, config)
}

pub(crate) fn layout_check<T: Scalar>(
    t: &LayoutRecord<T>,
    v: &LayoutRecord<T>,
    reference_page: u32,
    config: &FusionConfig<T>,
) -> LayoutPrior<T> {
    let (Some(tb), Some(vb)) = (t.bbox, v.bbox) else {
        return LayoutPrior {
            value: config.epsilon,
            bbox_missing: true,
        };
    };
    let near_in_space = tb.center_distance(&vb) < config.tau * t.page_diagonal();
    let page_gap = t.page.abs_diff(reference_page).max(v.page.abs_diff(reference_page));
    let near_in_pages = page_gap < config.tau_page;
    LayoutPrior {
        value: if near_in_space && near_in_pages {
            T::one()
        } else {
            config.epsilon
        },
        bbox_missing: false,
    }
}
