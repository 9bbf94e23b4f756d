//! Scan maps: scalar or hyperspectral intensity on a square pixel grid.

use super::{ensure_finite, ValidationError};
use crate::types::Spectrum;

/// Per-pixel payload of a [`ClMap`].
#[derive(Debug, Clone, PartialEq)]
pub enum ClMapData {
    /// One intensity per pixel, row-major (`idx = iy * width + ix`).
    Scalar(Vec<f64>),
    /// One spectrum per pixel on a shared wavelength axis;
    /// `values[(iy * width + ix) * n_wl + iw]`.
    Hyperspectral {
        wavelength_nm: Vec<f64>,
        values: Vec<f64>,
    },
}

/// Cathodoluminescence-style scan map on a uniform square pixel grid.
///
/// `origin_nm` is the physical position of the center of pixel (0, 0);
/// pixel (ix, iy) is centered at `origin + pitch * (ix, iy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClMap {
    width: usize,
    height: usize,
    pixel_pitch_nm: f64,
    origin_nm: (f64, f64),
    data: ClMapData,
}

impl ClMap {
    pub fn new(
        width: usize,
        height: usize,
        pixel_pitch_nm: f64,
        origin_nm: (f64, f64),
        data: ClMapData,
    ) -> Result<Self, ValidationError> {
        const T: &str = "ClMap";
        if width == 0 {
            return Err(ValidationError::new(T, "width", ">= 1", width));
        }
        if height == 0 {
            return Err(ValidationError::new(T, "height", ">= 1", height));
        }
        ensure_finite(T, "pixel_pitch_nm", pixel_pitch_nm)?;
        if pixel_pitch_nm <= 0.0 {
            return Err(ValidationError::new(T, "pixel_pitch_nm", "> 0", pixel_pitch_nm));
        }
        ensure_finite(T, "origin_nm.0", origin_nm.0)?;
        ensure_finite(T, "origin_nm.1", origin_nm.1)?;
        let n_pixels = width * height;
        match &data {
            ClMapData::Scalar(values) => {
                if values.len() != n_pixels {
                    return Err(ValidationError::new(
                        T,
                        "data",
                        "width * height values",
                        values.len(),
                    ));
                }
                for &v in values {
                    ensure_finite(T, "data", v)?;
                }
            }
            ClMapData::Hyperspectral {
                wavelength_nm,
                values,
            } => {
                if wavelength_nm.is_empty() {
                    return Err(ValidationError::new(T, "wavelength_nm", "non-empty", "[]"));
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
                if values.len() != n_pixels * wavelength_nm.len() {
                    return Err(ValidationError::new(
                        T,
                        "data",
                        "width * height * n_wavelengths values",
                        values.len(),
                    ));
                }
                for &v in values {
                    ensure_finite(T, "data", v)?;
                }
            }
        }
        Ok(Self {
            width,
            height,
            pixel_pitch_nm,
            origin_nm,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_pitch_nm(&self) -> f64 {
        self.pixel_pitch_nm
    }

    pub fn origin_nm(&self) -> (f64, f64) {
        self.origin_nm
    }

    pub fn data(&self) -> &ClMapData {
        &self.data
    }

    pub fn is_hyperspectral(&self) -> bool {
        matches!(self.data, ClMapData::Hyperspectral { .. })
    }

    /// Physical position of the center of pixel (ix, iy) in nm.
    pub fn pixel_center_nm(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            self.origin_nm.0 + ix as f64 * self.pixel_pitch_nm,
            self.origin_nm.1 + iy as f64 * self.pixel_pitch_nm,
        )
    }

    /// Scalar intensity at a pixel; for hyperspectral maps the spectrally
    /// integrated intensity.
    pub fn intensity(&self, ix: usize, iy: usize) -> f64 {
        assert!(ix < self.width && iy < self.height, "pixel out of range");
        match &self.data {
            ClMapData::Scalar(values) => values[iy * self.width + ix],
            ClMapData::Hyperspectral { wavelength_nm, values } => {
                let n = wavelength_nm.len();
                let base = (iy * self.width + ix) * n;
                values[base..base + n].iter().sum()
            }
        }
    }

    /// Per-pixel spectrum (hyperspectral maps only).
    pub fn spectrum_at(&self, ix: usize, iy: usize) -> Option<Spectrum> {
        assert!(ix < self.width && iy < self.height, "pixel out of range");
        match &self.data {
            ClMapData::Scalar(_) => None,
            ClMapData::Hyperspectral { wavelength_nm, values } => {
                let n = wavelength_nm.len();
                let base = (iy * self.width + ix) * n;
                Some(
                    Spectrum::new(wavelength_nm.clone(), values[base..base + n].to_vec())
                        .expect("per-pixel slice inherits a valid axis"),
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_map_indexing_is_row_major() {
        let m = ClMap::new(
            3,
            2,
            250.0,
            (0.0, 0.0),
            ClMapData::Scalar(vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]),
        )
        .unwrap();
        assert_eq!(m.intensity(2, 0), 2.0);
        assert_eq!(m.intensity(0, 1), 3.0);
        assert_eq!(m.pixel_center_nm(2, 1), (500.0, 250.0));
    }

    #[test]
    fn hyperspectral_shares_one_axis_and_integrates() {
        let m = ClMap::new(
            2,
            1,
            250.0,
            (0.0, 0.0),
            ClMapData::Hyperspectral {
                wavelength_nm: vec![918.0, 919.0],
                values: vec![1.0, 2.0, 10.0, 20.0],
            },
        )
        .unwrap();
        assert_eq!(m.intensity(0, 0), 3.0);
        assert_eq!(m.intensity(1, 0), 30.0);
        let s = m.spectrum_at(1, 0).unwrap();
        assert_eq!(s.intensity(), &[10.0, 20.0]);
    }

    #[test]
    fn rejects_wrong_payload_length() {
        assert!(ClMap::new(2, 2, 250.0, (0.0, 0.0), ClMapData::Scalar(vec![0.0; 3])).is_err());
        assert!(ClMap::new(
            2,
            1,
            250.0,
            (0.0, 0.0),
            ClMapData::Hyperspectral {
                wavelength_nm: vec![918.0, 919.0],
                values: vec![0.0; 3],
            },
        )
        .is_err());
    }

    #[test]
    fn rejects_nonpositive_pitch() {
        let err =
            ClMap::new(1, 1, 0.0, (0.0, 0.0), ClMapData::Scalar(vec![0.0])).unwrap_err();
        assert_eq!(err.field, "pixel_pitch_nm");
    }
}
