//! Sampled emission spectra.

use super::{ensure_finite, ValidationError};

/// Intensity vs wavelength, on a strictly increasing wavelength axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    wavelength_nm: Vec<f64>,
    intensity: Vec<f64>,
}

impl Spectrum {
    pub fn new(wavelength_nm: Vec<f64>, intensity: Vec<f64>) -> Result<Self, ValidationError> {
        const T: &str = "Spectrum";
        if wavelength_nm.is_empty() {
            return Err(ValidationError::new(T, "wavelength_nm", "non-empty", "[]"));
        }
        if wavelength_nm.len() != intensity.len() {
            return Err(ValidationError::new(
                T,
                "intensity",
                "same length as wavelength_nm",
                format!("{} vs {}", intensity.len(), wavelength_nm.len()),
            ));
        }
        for &w in &wavelength_nm {
            ensure_finite(T, "wavelength_nm", w)?;
        }
        for pair in wavelength_nm.windows(2) {
            if pair[1] <= pair[0] {
                return Err(ValidationError::new(
                    T,
                    "wavelength_nm",
                    "strictly increasing",
                    format!("{} then {}", pair[0], pair[1]),
                ));
            }
        }
        for &v in &intensity {
            ensure_finite(T, "intensity", v)?;
            if v < 0.0 {
                return Err(ValidationError::new(T, "intensity", ">= 0", v));
            }
        }
        Ok(Self {
            wavelength_nm,
            intensity,
        })
    }

    pub fn len(&self) -> usize {
        self.wavelength_nm.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires at least one sample
    }

    pub fn wavelength_nm(&self) -> &[f64] {
        &self.wavelength_nm
    }

    pub fn intensity(&self) -> &[f64] {
        &self.intensity
    }

    pub fn total_intensity(&self) -> f64 {
        self.intensity.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_increasing_axis() {
        let s = Spectrum::new(vec![917.0, 918.0, 919.0], vec![1.0, 5.0, 2.0]).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.total_intensity(), 8.0);
    }

    #[test]
    fn rejects_nonmonotonic_axis() {
        let err = Spectrum::new(vec![918.0, 918.0], vec![1.0, 1.0]).unwrap_err();
        assert_eq!(err.constraint, "strictly increasing");
    }

    #[test]
    fn rejects_negative_intensity() {
        assert!(Spectrum::new(vec![918.0], vec![-0.5]).is_err());
    }

    #[test]
    fn rejects_length_mismatch() {
        assert!(Spectrum::new(vec![918.0, 919.0], vec![1.0]).is_err());
    }
}
