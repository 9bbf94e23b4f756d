//! Uniform-bin correlation/decay histograms.

use super::ValidationError;

/// How the `normalized` values of a [`CorrelationHistogram`] were scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Raw pair counts, no normalization applied.
    Raw,
    /// Divided by the accidental-coincidence level `rate_a * rate_b *
    /// duration * bin_width` of a CW measurement.
    CwPoisson,
    /// Divided by the mean area of far repetition-period side peaks of a
    /// pulsed measurement.
    PulsedSidepeak,
}

impl Normalization {
    pub fn as_str(&self) -> &'static str {
        match self {
            Normalization::Raw => "raw",
            Normalization::CwPoisson => "cw-poisson",
            Normalization::PulsedSidepeak => "pulsed-sidepeak",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "raw" => Some(Normalization::Raw),
            "cw-poisson" => Some(Normalization::CwPoisson),
            "pulsed-sidepeak" => Some(Normalization::PulsedSidepeak),
            _ => None,
        }
    }
}

/// Histogram over uniform, contiguous delay bins.
///
/// Bin `k` is centered at `first_center_ps + k * bin_width_ps` and covers
/// the half-open interval `[center - bin_width/2, center + bin_width/2)`
/// (exact rational edges; for odd widths the edges fall on half-integers,
/// so integer delays bin unambiguously).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationHistogram {
    first_center_ps: i64,
    bin_width_ps: i64,
    counts: Vec<u64>,
    normalized: Option<Vec<f64>>,
    normalization: Normalization,
}

impl CorrelationHistogram {
    pub fn new(
        first_center_ps: i64,
        bin_width_ps: i64,
        counts: Vec<u64>,
    ) -> Result<Self, ValidationError> {
        const T: &str = "CorrelationHistogram";
        if bin_width_ps < 1 {
            return Err(ValidationError::new(T, "bin_width_ps", ">= 1", bin_width_ps));
        }
        if counts.is_empty() {
            return Err(ValidationError::new(T, "counts", "non-empty", "[]"));
        }
        Ok(Self {
            first_center_ps,
            bin_width_ps,
            counts,
            normalized: None,
            normalization: Normalization::Raw,
        })
    }

    /// Attaches normalized per-bin values (same binning as `counts`).
    pub fn with_normalized(
        mut self,
        normalized: Vec<f64>,
        normalization: Normalization,
    ) -> Result<Self, ValidationError> {
        const T: &str = "CorrelationHistogram";
        if normalized.len() != self.counts.len() {
            return Err(ValidationError::new(
                T,
                "normalized",
                "same length as counts",
                format!("{} vs {}", normalized.len(), self.counts.len()),
            ));
        }
        if normalization == Normalization::Raw {
            return Err(ValidationError::new(
                T,
                "normalization",
                "normalized values require a non-raw tag",
                normalization.as_str(),
            ));
        }
        self.normalized = Some(normalized);
        self.normalization = normalization;
        Ok(self)
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_width_ps(&self) -> i64 {
        self.bin_width_ps
    }

    pub fn first_center_ps(&self) -> i64 {
        self.first_center_ps
    }

    pub fn center_ps(&self, bin: usize) -> i64 {
        self.first_center_ps + bin as i64 * self.bin_width_ps
    }

    pub fn centers_ps(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.counts.len()).map(|k| self.center_ps(k))
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn normalized(&self) -> Option<&[f64]> {
        self.normalized.as_deref()
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Bin index for a delay, by the half-open edge rule; `None` when the
    /// delay falls outside the binned range.
    pub fn bin_index(&self, tau_ps: i64) -> Option<usize> {
        // edge_k = first_center - bw/2 + k*bw as an exact rational;
        // doubling keeps everything in integers for odd widths.
        let idx = (2 * (tau_ps - self.first_center_ps) + self.bin_width_ps)
            .div_euclid(2 * self.bin_width_ps);
        if idx >= 0 && (idx as usize) < self.counts.len() {
            Some(idx as usize)
        } else {
            None
        }
    }

    /// Value of the bin containing `tau_ps`: normalized if present,
    /// otherwise the raw count.
    pub fn value_at(&self, tau_ps: i64) -> Option<f64> {
        let k = self.bin_index(tau_ps)?;
        Some(match &self.normalized {
            Some(v) => v[k],
            None => self.counts[k] as f64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_are_uniform() {
        let h = CorrelationHistogram::new(-100, 50, vec![0; 5]).unwrap();
        let centers: Vec<i64> = h.centers_ps().collect();
        assert_eq!(centers, vec![-100, -50, 0, 50, 100]);
    }

    #[test]
    fn bin_index_uses_half_open_edges_even_width() {
        let h = CorrelationHistogram::new(-100, 50, vec![0; 5]).unwrap();
        // bin around 0 covers [-25, 25)
        assert_eq!(h.bin_index(-25), Some(2));
        assert_eq!(h.bin_index(24), Some(2));
        assert_eq!(h.bin_index(25), Some(3));
        assert_eq!(h.bin_index(-26), Some(1));
        // extremes: [-125, 125)
        assert_eq!(h.bin_index(-125), Some(0));
        assert_eq!(h.bin_index(-126), None);
        assert_eq!(h.bin_index(124), Some(4));
        assert_eq!(h.bin_index(125), None);
    }

    #[test]
    fn bin_index_handles_odd_width() {
        // width 5: bin around 0 covers [-2.5, 2.5) -> integers -2..=2
        let h = CorrelationHistogram::new(-10, 5, vec![0; 5]).unwrap();
        assert_eq!(h.bin_index(-2), Some(2));
        assert_eq!(h.bin_index(2), Some(2));
        assert_eq!(h.bin_index(3), Some(3));
        assert_eq!(h.bin_index(-3), Some(1));
    }

    #[test]
    fn rejects_zero_width_and_empty() {
        assert!(CorrelationHistogram::new(0, 0, vec![1]).is_err());
        assert!(CorrelationHistogram::new(0, 10, vec![]).is_err());
    }

    #[test]
    fn normalized_length_must_match() {
        let h = CorrelationHistogram::new(0, 10, vec![1, 2]).unwrap();
        assert!(h
            .clone()
            .with_normalized(vec![0.5], Normalization::CwPoisson)
            .is_err());
        let h = h
            .with_normalized(vec![0.5, 1.0], Normalization::CwPoisson)
            .unwrap();
        assert_eq!(h.normalization(), Normalization::CwPoisson);
        assert_eq!(h.value_at(10), Some(1.0));
    }

    #[test]
    fn normalization_tag_round_trips_through_strings() {
        for n in [
            Normalization::Raw,
            Normalization::CwPoisson,
            Normalization::PulsedSidepeak,
        ] {
            assert_eq!(Normalization::parse(n.as_str()), Some(n));
        }
        assert_eq!(Normalization::parse("bogus"), None);
    }
}
