//! Physical parameter sets for the emitter, pulse train, splitters and
//! detectors.

use serde::{Deserialize, Serialize};

use super::{ensure_finite, ValidationError};

/// Deserialization funnels through `new` so that a config file cannot
/// smuggle in values the constructors would reject.
macro_rules! validated_deserialize {
    ($ty:ident, $raw:ident { $($field:ident : $t:ty),+ $(,)? }) => {
        #[derive(Deserialize)]
        struct $raw {
            $($field: $t),+
        }

        impl TryFrom<$raw> for $ty {
            type Error = ValidationError;

            fn try_from(raw: $raw) -> Result<Self, Self::Error> {
                $ty::new($(raw.$field),+)
            }
        }
    };
}

/// Quantum emitter description.
///
/// `lifetime_ns` is the spontaneous-emission (decay) time, `coherence_ns`
/// the first-order coherence time of the emitted wave packet. The
/// transform limit caps coherence at twice the lifetime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EmitterParamsRaw")]
pub struct EmitterParams {
    lifetime_ns: f64,
    coherence_ns: f64,
    multiphoton_prob: f64,
    brightness: f64,
    wavelength_nm: f64,
}

validated_deserialize!(EmitterParams, EmitterParamsRaw {
    lifetime_ns: f64,
    coherence_ns: f64,
    multiphoton_prob: f64,
    brightness: f64,
    wavelength_nm: f64,
});

impl EmitterParams {
    /// `brightness` is the mean detected rate in counts/s for CW operation
    /// and the mean detected photons per pulse for pulsed operation.
    /// `multiphoton_prob` is the probability that an excitation yields two
    /// photons instead of one.
    pub fn new(
        lifetime_ns: f64,
        coherence_ns: f64,
        multiphoton_prob: f64,
        brightness: f64,
        wavelength_nm: f64,
    ) -> Result<Self, ValidationError> {
        const T: &str = "EmitterParams";
        ensure_finite(T, "lifetime_ns", lifetime_ns)?;
        ensure_finite(T, "coherence_ns", coherence_ns)?;
        ensure_finite(T, "multiphoton_prob", multiphoton_prob)?;
        ensure_finite(T, "brightness", brightness)?;
        ensure_finite(T, "wavelength_nm", wavelength_nm)?;
        if lifetime_ns <= 0.0 {
            return Err(ValidationError::new(T, "lifetime_ns", "> 0", lifetime_ns));
        }
        if coherence_ns <= 0.0 {
            return Err(ValidationError::new(T, "coherence_ns", "> 0", coherence_ns));
        }
        if coherence_ns > 2.0 * lifetime_ns {
            return Err(ValidationError::new(
                T,
                "coherence_ns",
                "<= 2 * lifetime_ns",
                coherence_ns,
            ));
        }
        if !(0.0..1.0).contains(&multiphoton_prob) {
            return Err(ValidationError::new(
                T,
                "multiphoton_prob",
                "0 <= p < 1",
                multiphoton_prob,
            ));
        }
        if brightness <= 0.0 {
            return Err(ValidationError::new(T, "brightness", "> 0", brightness));
        }
        if wavelength_nm <= 0.0 {
            return Err(ValidationError::new(T, "wavelength_nm", "> 0", wavelength_nm));
        }
        Ok(Self {
            lifetime_ns,
            coherence_ns,
            multiphoton_prob,
            brightness,
            wavelength_nm,
        })
    }

    pub fn lifetime_ns(&self) -> f64 {
        self.lifetime_ns
    }

    pub fn coherence_ns(&self) -> f64 {
        self.coherence_ns
    }

    pub fn multiphoton_prob(&self) -> f64 {
        self.multiphoton_prob
    }

    pub fn brightness(&self) -> f64 {
        self.brightness
    }

    pub fn wavelength_nm(&self) -> f64 {
        self.wavelength_nm
    }
}

/// Excitation pulse train and interferometer delay geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PulseTrainRaw")]
pub struct PulseTrain {
    rep_period_ns: f64,
    mzi_delay_ns: f64,
    n_pulses: u64,
}

validated_deserialize!(PulseTrain, PulseTrainRaw {
    rep_period_ns: f64,
    mzi_delay_ns: f64,
    n_pulses: u64,
});

impl PulseTrain {
    /// `mzi_delay_ns` is the long-arm excess delay of the unbalanced
    /// Mach-Zehnder; it must leave the delayed peaks clear of the next
    /// repetition period (delay < T_rep / 2). `n_pulses` counts repetition
    /// periods.
    pub fn new(rep_period_ns: f64, mzi_delay_ns: f64, n_pulses: u64) -> Result<Self, ValidationError> {
        const T: &str = "PulseTrain";
        ensure_finite(T, "rep_period_ns", rep_period_ns)?;
        ensure_finite(T, "mzi_delay_ns", mzi_delay_ns)?;
        if rep_period_ns <= 0.0 {
            return Err(ValidationError::new(T, "rep_period_ns", "> 0", rep_period_ns));
        }
        if mzi_delay_ns <= 0.0 || mzi_delay_ns >= rep_period_ns / 2.0 {
            return Err(ValidationError::new(
                T,
                "mzi_delay_ns",
                "0 < delay < rep_period_ns / 2",
                mzi_delay_ns,
            ));
        }
        if n_pulses == 0 {
            return Err(ValidationError::new(T, "n_pulses", ">= 1", n_pulses));
        }
        Ok(Self {
            rep_period_ns,
            mzi_delay_ns,
            n_pulses,
        })
    }

    pub fn rep_period_ns(&self) -> f64 {
        self.rep_period_ns
    }

    pub fn mzi_delay_ns(&self) -> f64 {
        self.mzi_delay_ns
    }

    pub fn n_pulses(&self) -> u64 {
        self.n_pulses
    }
}

const SPLIT_SUM_TOL: f64 = 1e-9;

/// Intensity reflectances/transmittances of the two interferometer
/// splitters plus the on-chip MMI splitting ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SplitterParamsRaw")]
pub struct SplitterParams {
    r1: f64,
    t1: f64,
    r2: f64,
    t2: f64,
    mmi_ratio: f64,
}

validated_deserialize!(SplitterParams, SplitterParamsRaw {
    r1: f64,
    t1: f64,
    r2: f64,
    t2: f64,
    mmi_ratio: f64,
});

impl SplitterParams {
    /// Each reflectance/transmittance pair must sum to 1 within 1e-9
    /// (lossless splitters); `mmi_ratio` is the fraction routed to the
    /// first MMI output port.
    pub fn new(r1: f64, t1: f64, r2: f64, t2: f64, mmi_ratio: f64) -> Result<Self, ValidationError> {
        const T: &str = "SplitterParams";
        for (field, v) in [("r1", r1), ("t1", t1), ("r2", r2), ("t2", t2)] {
            ensure_finite(T, field, v)?;
            if !(0.0..=1.0).contains(&v) {
                return Err(ValidationError::new(T, field, "0 <= x <= 1", v));
            }
        }
        ensure_finite(T, "mmi_ratio", mmi_ratio)?;
        if (r1 + t1 - 1.0).abs() > SPLIT_SUM_TOL {
            return Err(ValidationError::new(T, "r1", "r1 + t1 == 1 within 1e-9", r1 + t1));
        }
        if (r2 + t2 - 1.0).abs() > SPLIT_SUM_TOL {
            return Err(ValidationError::new(T, "r2", "r2 + t2 == 1 within 1e-9", r2 + t2));
        }
        if mmi_ratio <= 0.0 || mmi_ratio >= 1.0 {
            return Err(ValidationError::new(T, "mmi_ratio", "0 < ratio < 1", mmi_ratio));
        }
        Ok(Self { r1, t1, r2, t2, mmi_ratio })
    }

    /// Both splitters 50/50 and a balanced MMI.
    pub fn balanced() -> Self {
        Self::new(0.5, 0.5, 0.5, 0.5, 0.5).expect("balanced splitters are valid")
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    pub fn mmi_ratio(&self) -> f64 {
        self.mmi_ratio
    }
}

/// Single-photon detector response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DetectorParamsRaw")]
pub struct DetectorParams {
    jitter_fwhm_ps: f64,
    efficiency: f64,
    dark_rate_hz: f64,
    dead_time_ns: f64,
}

validated_deserialize!(DetectorParams, DetectorParamsRaw {
    jitter_fwhm_ps: f64,
    efficiency: f64,
    dark_rate_hz: f64,
    dead_time_ns: f64,
});

impl DetectorParams {
    pub fn new(
        jitter_fwhm_ps: f64,
        efficiency: f64,
        dark_rate_hz: f64,
        dead_time_ns: f64,
    ) -> Result<Self, ValidationError> {
        const T: &str = "DetectorParams";
        ensure_finite(T, "jitter_fwhm_ps", jitter_fwhm_ps)?;
        ensure_finite(T, "efficiency", efficiency)?;
        ensure_finite(T, "dark_rate_hz", dark_rate_hz)?;
        ensure_finite(T, "dead_time_ns", dead_time_ns)?;
        if jitter_fwhm_ps < 0.0 {
            return Err(ValidationError::new(T, "jitter_fwhm_ps", ">= 0", jitter_fwhm_ps));
        }
        if efficiency <= 0.0 || efficiency > 1.0 {
            return Err(ValidationError::new(T, "efficiency", "0 < eff <= 1", efficiency));
        }
        if dark_rate_hz < 0.0 {
            return Err(ValidationError::new(T, "dark_rate_hz", ">= 0", dark_rate_hz));
        }
        if dead_time_ns < 0.0 {
            return Err(ValidationError::new(T, "dead_time_ns", ">= 0", dead_time_ns));
        }
        Ok(Self {
            jitter_fwhm_ps,
            efficiency,
            dark_rate_hz,
            dead_time_ns,
        })
    }

    /// Ideal detector: no jitter, unit efficiency, no dark counts, no dead
    /// time.
    pub fn ideal() -> Self {
        Self::new(0.0, 1.0, 0.0, 0.0).expect("ideal detector is valid")
    }

    pub fn jitter_fwhm_ps(&self) -> f64 {
        self.jitter_fwhm_ps
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn dark_rate_hz(&self) -> f64 {
        self.dark_rate_hz
    }

    pub fn dead_time_ns(&self) -> f64 {
        self.dead_time_ns
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deserialization_rejects_invalid_values() {
        let toml = "lifetime_ns = -1.0\ncoherence_ns = 0.4\nmultiphoton_prob = 0.0\nbrightness = 1e5\nwavelength_nm = 920.0\n";
        let err = toml::from_str::<EmitterParams>(toml).unwrap_err();
        assert!(err.to_string().contains("lifetime_ns"));

        let toml = "r1 = 0.5\nt1 = 0.6\nr2 = 0.5\nt2 = 0.5\nmmi_ratio = 0.5\n";
        assert!(toml::from_str::<SplitterParams>(toml).is_err());
    }

    #[test]
    fn deserialization_accepts_valid_values() {
        let toml = "jitter_fwhm_ps = 40.0\nefficiency = 0.8\ndark_rate_hz = 100.0\ndead_time_ns = 25.0\n";
        let d: DetectorParams = toml::from_str(toml).unwrap();
        assert_eq!(d.efficiency(), 0.8);
        let back = toml::to_string(&d).unwrap();
        let d2: DetectorParams = toml::from_str(&back).unwrap();
        assert_eq!(d, d2);
    }

    #[test]
    fn emitter_accepts_physical_values() {
        let e = EmitterParams::new(0.945, 0.4, 0.026, 1e5, 920.0).unwrap();
        assert_eq!(e.lifetime_ns(), 0.945);
        assert_eq!(e.wavelength_nm(), 920.0);
    }

    #[test]
    fn emitter_rejects_nonpositive_lifetime() {
        let err = EmitterParams::new(0.0, 0.4, 0.0, 1e5, 920.0).unwrap_err();
        assert_eq!(err.field, "lifetime_ns");
    }

    #[test]
    fn emitter_rejects_coherence_beyond_transform_limit() {
        let err = EmitterParams::new(1.0, 2.0 + 1e-9, 0.0, 1e5, 920.0).unwrap_err();
        assert_eq!(err.field, "coherence_ns");
        assert!(err.constraint.contains("2 * lifetime_ns"));
        // exactly at the limit is allowed
        assert!(EmitterParams::new(1.0, 2.0, 0.0, 1e5, 920.0).is_ok());
    }

    #[test]
    fn emitter_rejects_multiphoton_prob_of_one() {
        assert!(EmitterParams::new(1.0, 0.4, 1.0, 1e5, 920.0).is_err());
        assert!(EmitterParams::new(1.0, 0.4, -0.1, 1e5, 920.0).is_err());
        assert!(EmitterParams::new(1.0, 0.4, 0.0, 1e5, 920.0).is_ok());
    }

    #[test]
    fn emitter_rejects_nan() {
        let err = EmitterParams::new(f64::NAN, 0.4, 0.0, 1e5, 920.0).unwrap_err();
        assert_eq!(err.constraint, "finite");
    }

    #[test]
    fn pulse_train_rejects_delay_of_half_period() {
        assert!(PulseTrain::new(8.0, 4.0, 100).is_err());
        assert!(PulseTrain::new(12.5, 4.0, 100).is_ok());
        assert!(PulseTrain::new(12.5, 0.0, 100).is_err());
    }

    #[test]
    fn pulse_train_rejects_zero_pulses() {
        let err = PulseTrain::new(12.5, 4.0, 0).unwrap_err();
        assert_eq!(err.field, "n_pulses");
    }

    #[test]
    fn splitters_enforce_unit_sum() {
        let err = SplitterParams::new(0.5, 0.51, 0.5, 0.5, 0.5).unwrap_err();
        assert!(err.constraint.contains("r1 + t1"));
        assert!(SplitterParams::new(0.5, 0.5, 0.53, 0.47, 0.5).is_ok());
        // within the 1e-9 tolerance
        assert!(SplitterParams::new(0.5, 0.5 + 5e-10, 0.5, 0.5, 0.5).is_ok());
    }

    #[test]
    fn splitters_reject_degenerate_mmi_ratio() {
        assert!(SplitterParams::new(0.5, 0.5, 0.5, 0.5, 0.0).is_err());
        assert!(SplitterParams::new(0.5, 0.5, 0.5, 0.5, 1.0).is_err());
    }

    #[test]
    fn detector_bounds() {
        assert!(DetectorParams::new(50.0, 0.8, 100.0, 30.0).is_ok());
        assert!(DetectorParams::new(-1.0, 0.8, 100.0, 30.0).is_err());
        assert!(DetectorParams::new(50.0, 0.0, 100.0, 30.0).is_err());
        assert!(DetectorParams::new(50.0, 1.2, 100.0, 30.0).is_err());
        assert!(DetectorParams::new(50.0, 1.0, 0.0, 0.0).is_ok());
    }
}
