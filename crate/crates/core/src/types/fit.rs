//! Fit result record shared by every model fit in the crate.

use super::ValidationError;

/// Parameter estimates from a nonlinear least-squares fit.
///
/// `covariance` is the row-major p x p parameter covariance;
/// `std_errors[i]` is `sqrt(covariance[i][i])`. `reduced_chi_sq` is
/// SSR / (n - p) in whatever units the residuals carried.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub parameter_names: Vec<String>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub covariance: Vec<f64>,
    pub reduced_chi_sq: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn n_params(&self) -> usize {
        self.values.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.parameter_names.iter().position(|n| n == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.values[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.std_errors[i])
    }

    pub fn covariance_at(&self, i: usize, j: usize) -> f64 {
        self.covariance[i * self.values.len() + j]
    }

    /// Checks the structural invariants: consistent lengths, symmetric
    /// covariance with nonnegative diagonal, nonnegative errors.
    pub fn validate(&self) -> Result<(), ValidationError> {
        const T: &str = "FitResult";
        let p = self.values.len();
        if self.parameter_names.len() != p {
            return Err(ValidationError::new(
                T,
                "parameter_names",
                "same length as values",
                self.parameter_names.len(),
            ));
        }
        if self.std_errors.len() != p {
            return Err(ValidationError::new(
                T,
                "std_errors",
                "same length as values",
                self.std_errors.len(),
            ));
        }
        if self.covariance.len() != p * p {
            return Err(ValidationError::new(
                T,
                "covariance",
                "p*p entries",
                self.covariance.len(),
            ));
        }
        for i in 0..p {
            if self.std_errors[i] < 0.0 {
                return Err(ValidationError::new(T, "std_errors", ">= 0", self.std_errors[i]));
            }
            if self.covariance_at(i, i) < 0.0 {
                return Err(ValidationError::new(
                    T,
                    "covariance",
                    "diagonal >= 0",
                    self.covariance_at(i, i),
                ));
            }
            for j in 0..i {
                let a = self.covariance_at(i, j);
                let b = self.covariance_at(j, i);
                let scale = a.abs().max(b.abs()).max(1e-300);
                if ((a - b) / scale).abs() > 1e-9 {
                    return Err(ValidationError::new(
                        T,
                        "covariance",
                        "symmetric",
                        format!("[{i},{j}]={a} vs [{j},{i}]={b}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result() -> FitResult {
        FitResult {
            parameter_names: vec!["a".into(), "tau".into()],
            values: vec![2.0, 1.5],
            std_errors: vec![0.1, 0.2],
            covariance: vec![0.01, 0.002, 0.002, 0.04],
            reduced_chi_sq: 1.1,
            converged: true,
            iterations: 7,
        }
    }

    #[test]
    fn lookup_by_name() {
        let r = result();
        assert_eq!(r.value("tau"), Some(1.5));
        assert_eq!(r.std_error("a"), Some(0.1));
        assert_eq!(r.value("missing"), None);
        assert_eq!(r.covariance_at(0, 1), 0.002);
    }

    #[test]
    fn validate_accepts_consistent_record() {
        assert!(result().validate().is_ok());
    }

    #[test]
    fn validate_rejects_asymmetric_covariance() {
        let mut r = result();
        r.covariance[1] = 0.003;
        assert!(r.validate().is_err());
    }

    #[test]
    fn validate_rejects_length_mismatch() {
        let mut r = result();
        r.std_errors.pop();
        assert!(r.validate().is_err());
    }
}
