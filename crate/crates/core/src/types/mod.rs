//! Core value types shared by the simulation and analysis modules.
//!
//! Every type validates its invariants at construction and is immutable
//! afterwards; all of them are plain data (Send + Sync).

mod alignment;
mod clmap;
mod fit;
mod histogram;
mod params;
mod spectrum;
mod stream;

pub use alignment::AlignmentRecord;
pub use clmap::{ClMap, ClMapData};
pub use fit::FitResult;
pub use histogram::{CorrelationHistogram, Normalization};
pub use params::{DetectorParams, EmitterParams, PulseTrain, SplitterParams};
pub use spectrum::Spectrum;
pub use stream::{TimeTag, TimeTagStream};

/// A violated construction invariant, naming the offending field and the
/// constraint it broke.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{type_name}.{field}: violates `{constraint}` (got {value})")]
pub struct ValidationError {
    pub type_name: &'static str,
    pub field: &'static str,
    pub constraint: &'static str,
    pub value: String,
}

impl ValidationError {
    pub fn new(
        type_name: &'static str,
        field: &'static str,
        constraint: &'static str,
        value: impl std::fmt::Display,
    ) -> Self {
        Self {
            type_name,
            field,
            constraint,
            value: value.to_string(),
        }
    }
}

pub(crate) fn ensure_finite(
    type_name: &'static str,
    field: &'static str,
    value: f64,
) -> Result<(), ValidationError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ValidationError::new(type_name, field, "finite", value))
    }
}
