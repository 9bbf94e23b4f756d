//! Measured-vs-target position records for alignment evaluation.

use super::{ensure_finite, ValidationError};

/// One registered structure: where it was meant to go and where it ended
/// up, both in nm in the same frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentRecord {
    pub id: String,
    pub target_nm: (f64, f64),
    pub measured_nm: (f64, f64),
}

impl AlignmentRecord {
    pub fn new(
        id: impl Into<String>,
        target_nm: (f64, f64),
        measured_nm: (f64, f64),
    ) -> Result<Self, ValidationError> {
        const T: &str = "AlignmentRecord";
        ensure_finite(T, "target_nm.0", target_nm.0)?;
        ensure_finite(T, "target_nm.1", target_nm.1)?;
        ensure_finite(T, "measured_nm.0", measured_nm.0)?;
        ensure_finite(T, "measured_nm.1", measured_nm.1)?;
        Ok(Self {
            id: id.into(),
            target_nm,
            measured_nm,
        })
    }

    /// Placement error (measured - target) in nm.
    pub fn offset_nm(&self) -> (f64, f64) {
        (
            self.measured_nm.0 - self.target_nm.0,
            self.measured_nm.1 - self.target_nm.1,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offset_is_measured_minus_target() {
        let r = AlignmentRecord::new("qd1", (100.0, 200.0), (154.8, 175.8)).unwrap();
        let (dx, dy) = r.offset_nm();
        assert!((dx - 54.8).abs() < 1e-12);
        assert!((dy + 24.2).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite_coordinates() {
        assert!(AlignmentRecord::new("x", (f64::NAN, 0.0), (0.0, 0.0)).is_err());
    }
}
