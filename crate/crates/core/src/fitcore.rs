//! Damped nonlinear least-squares (Levenberg-Marquardt) with optional
//! box bounds and finite-difference Jacobians.
//!
//! Conventions used by every fit in the crate:
//! - residuals are `model - data` (possibly weighted by the caller),
//! - the residual vector length must not depend on the parameters,
//! - `converged` means the final gradient of 1/2 SSR satisfies
//!   `max|g| <= gradient_tol * max(1, SSR)`, where components pinned by an
//!   active box bound are excluded (KKT stationarity: pushing across the
//!   bound is not a feasible descent direction); hitting the iteration cap
//!   returns the best parameters found with `converged = false`,
//! - parameter covariance is `s^2 (J^T J)^-1` with `s^2 = SSR / (n - p)`,
//!   inverted by eigendecomposition with an eigenvalue floor so that
//!   unidentifiable directions surface as huge standard errors rather
//!   than a hard failure.

use nalgebra::{DMatrix, DVector};

use crate::types::FitResult;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("residuals are non-finite at parameters {0:?}")]
    NonFiniteResidual(Vec<f64>),
    #[error("normal matrix is singular or non-finite; no damped step possible")]
    SingularNormalMatrix,
    #[error("inconsistent fit setup: {0}")]
    Dimensions(String),
}

/// A least-squares problem: residual function, starting point, optional
/// analytic Jacobian and box bounds.
pub struct ModelSpec<'a> {
    pub parameter_names: Vec<String>,
    pub initial: Vec<f64>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub residual: &'a dyn Fn(&[f64]) -> Vec<f64>,
    /// Row-major m x p Jacobian of the residuals. When absent the fit
    /// falls back to [`numeric_jacobian`].
    pub jacobian: Option<&'a dyn Fn(&[f64]) -> DMatrix<f64>>,
}

impl<'a> ModelSpec<'a> {
    pub fn new(
        parameter_names: &[&str],
        initial: Vec<f64>,
        residual: &'a dyn Fn(&[f64]) -> Vec<f64>,
    ) -> Self {
        Self {
            parameter_names: parameter_names.iter().map(|s| s.to_string()).collect(),
            initial,
            lower: None,
            upper: None,
            residual,
            jacobian: None,
        }
    }

    pub fn with_jacobian(mut self, jacobian: &'a dyn Fn(&[f64]) -> DMatrix<f64>) -> Self {
        self.jacobian = Some(jacobian);
        self
    }

    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = Some(lower);
        self.upper = Some(upper);
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub gradient_tol: f64,
    pub step_tol: f64,
    pub max_iterations: usize,
    /// Relative step for finite-difference Jacobians.
    pub jacobian_rel_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            gradient_tol: 1e-8,
            step_tol: 1e-10,
            max_iterations: 200,
            jacobian_rel_step: 1e-6,
        }
    }
}

const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e14;
const LAMBDA_MIN: f64 = 1e-14;
const EIG_FLOOR_REL: f64 = 1e-12;

fn clamp_to_bounds(x: &mut [f64], lower: Option<&[f64]>, upper: Option<&[f64]>) {
    if let Some(lo) = lower {
        for (xi, &l) in x.iter_mut().zip(lo) {
            if *xi < l {
                *xi = l;
            }
        }
    }
    if let Some(hi) = upper {
        for (xi, &u) in x.iter_mut().zip(hi) {
            if *xi > u {
                *xi = u;
            }
        }
    }
}

fn eval_residual(
    model: &ModelSpec,
    x: &[f64],
    expect_len: Option<usize>,
) -> Result<Option<DVector<f64>>, FitError> {
    let r = (model.residual)(x);
    if let Some(n) = expect_len {
        if r.len() != n {
            return Err(FitError::Dimensions(format!(
                "residual length changed from {n} to {} during the fit",
                r.len()
            )));
        }
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Ok(None);
    }
    Ok(Some(DVector::from_vec(r)))
}

fn jacobian_at(model: &ModelSpec, x: &[f64], opts: &FitOptions, n: usize) -> Result<DMatrix<f64>, FitError> {
    let j = match model.jacobian {
        Some(jac) => jac(x),
        None => numeric_jacobian(model.residual, x, opts.jacobian_rel_step)?,
    };
    if j.nrows() != n || j.ncols() != x.len() {
        return Err(FitError::Dimensions(format!(
            "jacobian is {}x{}, expected {}x{}",
            j.nrows(),
            j.ncols(),
            n,
            x.len()
        )));
    }
    if j.iter().any(|v| !v.is_finite()) {
        return Err(FitError::SingularNormalMatrix);
    }
    Ok(j)
}

/// Central-difference Jacobian of `residual` at `params`; step for
/// parameter i is `rel_step * max(|params[i]|, 1)`.
pub fn numeric_jacobian(
    residual: &dyn Fn(&[f64]) -> Vec<f64>,
    params: &[f64],
    rel_step: f64,
) -> Result<DMatrix<f64>, FitError> {
    if rel_step <= 0.0 || !rel_step.is_finite() {
        return Err(FitError::Dimensions(format!("rel_step must be positive, got {rel_step}")));
    }
    let r0 = residual(params);
    let m = r0.len();
    let p = params.len();
    let mut j = DMatrix::zeros(m, p);
    let mut x = params.to_vec();
    for i in 0..p {
        let h = rel_step * params[i].abs().max(1.0);
        x[i] = params[i] + h;
        let rp = residual(&x);
        x[i] = params[i] - h;
        let rm = residual(&x);
        x[i] = params[i];
        if rp.len() != m || rm.len() != m {
            return Err(FitError::Dimensions(
                "residual length changed during differentiation".into(),
            ));
        }
        for k in 0..m {
            j[(k, i)] = (rp[k] - rm[k]) / (2.0 * h);
        }
    }
    if j.iter().any(|v| !v.is_finite()) {
        return Err(FitError::NonFiniteResidual(params.to_vec()));
    }
    Ok(j)
}

/// True when parameter `i` sits on a bound and the gradient pushes it
/// further out: the clamp blocks that direction entirely, so it belongs
/// to the active set and takes no part in steps or convergence tests.
fn pinned_outward(
    i: usize,
    x: &[f64],
    g: &DVector<f64>,
    lower: Option<&[f64]>,
    upper: Option<&[f64]>,
) -> bool {
    (g[i] > 0.0 && lower.is_some_and(|lo| x[i] <= lo[i]))
        || (g[i] < 0.0 && upper.is_some_and(|hi| x[i] >= hi[i]))
}

/// Stationarity test on the projected gradient (KKT conditions for the
/// box-constrained problem): pinned components are excluded.
fn gradient_ok(
    g: &DVector<f64>,
    x: &[f64],
    lower: Option<&[f64]>,
    upper: Option<&[f64]>,
    ssr: f64,
    tol: f64,
) -> bool {
    let scale = tol * ssr.max(1.0);
    g.iter()
        .enumerate()
        .all(|(i, &gi)| pinned_outward(i, x, g, lower, upper) || gi.abs() <= scale)
}

/// Covariance `s2 * H^-1` by symmetric eigendecomposition; eigenvalues
/// below `EIG_FLOOR_REL * max_eig` are floored so degenerate directions
/// yield large finite variances.
fn covariance(h: &DMatrix<f64>, s2: f64) -> DMatrix<f64> {
    let p = h.nrows();
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let max_eig = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let floor = (max_eig * EIG_FLOOR_REL).max(f64::MIN_POSITIVE);
    let mut cov = DMatrix::zeros(p, p);
    for k in 0..p {
        let inv = 1.0 / eig.eigenvalues[k].max(floor);
        let v = eig.eigenvectors.column(k);
        for i in 0..p {
            for j in 0..p {
                cov[(i, j)] += s2 * inv * v[i] * v[j];
            }
        }
    }
    // symmetrize against round-off
    for i in 0..p {
        for j in 0..i {
            let m = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = m;
            cov[(j, i)] = m;
        }
    }
    cov
}

/// Levenberg-Marquardt minimization of `|residual(x)|^2`.
///
/// Damping: `lambda` starts at 1e-3, multiplies by 10 on a rejected step
/// and divides by 10 on acceptance (Marquardt diagonal scaling). Steps
/// are projected onto the box bounds; parameters pinned on a bound with
/// an outward gradient are held out of the damped solve (active set) so
/// the remaining directions get undistorted steps.
pub fn nlls_fit(model: &ModelSpec, opts: &FitOptions) -> Result<FitResult, FitError> {
    let p = model.initial.len();
    if p == 0 {
        return Err(FitError::Dimensions("no parameters".into()));
    }
    if model.parameter_names.len() != p {
        return Err(FitError::Dimensions(format!(
            "{} parameter names for {} parameters",
            model.parameter_names.len(),
            p
        )));
    }
    for bounds in [&model.lower, &model.upper] {
        if let Some(b) = bounds {
            if b.len() != p {
                return Err(FitError::Dimensions(format!(
                    "bounds length {} for {} parameters",
                    b.len(),
                    p
                )));
            }
        }
    }
    if let (Some(lo), Some(hi)) = (&model.lower, &model.upper) {
        for i in 0..p {
            if lo[i] > hi[i] {
                return Err(FitError::Dimensions(format!(
                    "lower bound {} above upper bound {} for parameter {}",
                    lo[i], hi[i], model.parameter_names[i]
                )));
            }
        }
    }

    let mut x = model.initial.clone();
    clamp_to_bounds(&mut x, model.lower.as_deref(), model.upper.as_deref());
    let mut r = eval_residual(model, &x, None)?.ok_or_else(|| FitError::NonFiniteResidual(x.clone()))?;
    let n = r.len();
    if n == 0 {
        return Err(FitError::Dimensions("empty residual vector".into()));
    }
    let mut ssr = r.norm_squared();
    let mut lambda = LAMBDA_INIT;
    let mut iterations = 0;
    let mut converged = false;
    let mut last_step_small = false;

    while iterations < opts.max_iterations {
        let j = jacobian_at(model, &x, opts, n)?;
        let g = j.transpose() * &r;
        if gradient_ok(
            &g,
            &x,
            model.lower.as_deref(),
            model.upper.as_deref(),
            ssr,
            opts.gradient_tol,
        ) {
            converged = true;
            break;
        }
        if last_step_small {
            // stalled: steps below step_tol but gradient still large
            break;
        }
        // this pass will attempt a step, so it counts as an iteration
        iterations += 1;
        let h = j.transpose() * &j;

        // active-set reduction: solving the normal equations with a pinned
        // column present tilts the step toward the blocked direction and
        // the clamp then mangles it, stalling the free parameters short of
        // their optimum. Pinned parameters simply hold still this step.
        let free: Vec<usize> = (0..p)
            .filter(|&i| !pinned_outward(i, &x, &g, model.lower.as_deref(), model.upper.as_deref()))
            .collect();
        let nf = free.len();
        let mut hf = DMatrix::zeros(nf, nf);
        for (row, &i) in free.iter().enumerate() {
            for (col, &k) in free.iter().enumerate() {
                hf[(row, col)] = h[(i, k)];
            }
        }
        let gf = DVector::from_iterator(nf, free.iter().map(|&i| g[i]));

        let mut accepted = false;
        let mut solve_failed_at_cap = false;
        while lambda <= LAMBDA_MAX {
            let mut a = hf.clone();
            for i in 0..nf {
                a[(i, i)] += lambda * hf[(i, i)].max(1e-12);
            }
            let delta = match a.cholesky() {
                Some(ch) => ch.solve(&(-&gf)),
                None => {
                    lambda *= 10.0;
                    solve_failed_at_cap = true;
                    continue;
                }
            };
            solve_failed_at_cap = false;
            let mut x_trial = x.clone();
            for (k, &i) in free.iter().enumerate() {
                x_trial[i] += delta[k];
            }
            clamp_to_bounds(&mut x_trial, model.lower.as_deref(), model.upper.as_deref());
            let moved = x_trial.iter().zip(&x).any(|(a, b)| a != b);
            if !moved {
                lambda *= 10.0;
                continue;
            }
            match eval_residual(model, &x_trial, Some(n))? {
                Some(r_trial) => {
                    let ssr_trial = r_trial.norm_squared();
                    if ssr_trial < ssr {
                        last_step_small = x_trial
                            .iter()
                            .zip(&x)
                            .all(|(a, b)| (a - b).abs() <= opts.step_tol * (b.abs() + opts.step_tol));
                        x = x_trial;
                        r = r_trial;
                        ssr = ssr_trial;
                        lambda = (lambda / 10.0).max(LAMBDA_MIN);
                        accepted = true;
                        break;
                    }
                }
                None => {} // non-finite trial residual: treat as rejected
            }
            lambda *= 10.0;
        }
        if !accepted {
            if solve_failed_at_cap {
                return Err(FitError::SingularNormalMatrix);
            }
            // no descent direction left at maximum damping
            break;
        }
    }

    let j = jacobian_at(model, &x, opts, n)?;
    if converged {
        // already final
    } else {
        // report the flag against the final point as well, so callers see
        // convergence when the cap landed exactly on a stationary point
        let g = j.transpose() * &r;
        converged = gradient_ok(
            &g,
            &x,
            model.lower.as_deref(),
            model.upper.as_deref(),
            ssr,
            opts.gradient_tol,
        );
    }
    let h = j.transpose() * &j;
    let dof = n.saturating_sub(p).max(1);
    let s2 = ssr / dof as f64;
    let cov = covariance(&h, s2);
    let std_errors: Vec<f64> = (0..p).map(|i| cov[(i, i)].max(0.0).sqrt()).collect();
    let covariance: Vec<f64> = (0..p)
        .flat_map(|i| (0..p).map(move |j| (i, j)))
        .map(|(i, j)| cov[(i, j)])
        .collect();

    Ok(FitResult {
        parameter_names: model.parameter_names.clone(),
        values: x,
        std_errors,
        covariance,
        reduced_chi_sq: s2,
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_data() -> (Vec<f64>, Vec<f64>) {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        (xs, ys)
    }

    #[test]
    fn linear_exact_data_recovers_slope_with_zero_error() {
        let (xs, ys) = linear_data();
        let residual = move |p: &[f64]| -> Vec<f64> {
            xs.iter().zip(&ys).map(|(x, y)| p[0] * x - y).collect()
        };
        let model = ModelSpec::new(&["a"], vec![0.3], &residual);
        let fit = nlls_fit(&model, &FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.iterations <= 3, "took {} iterations", fit.iterations);
        assert!((fit.values[0] - 2.0).abs() < 1e-10);
        assert!(fit.std_errors[0] < 1e-10);
        fit.validate().unwrap();
    }

    #[test]
    fn exponential_exact_data_recovers_decay_time() {
        let ts: Vec<f64> = (0..60).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = ts.iter().map(|t| (-t / 0.945).exp()).collect();
        let residual = move |p: &[f64]| -> Vec<f64> {
            ts.iter().zip(&ys).map(|(t, y)| (-t / p[0]).exp() - y).collect()
        };
        let model = ModelSpec::new(&["tau"], vec![2.0], &residual);
        let fit = nlls_fit(&model, &FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.iterations <= 25);
        assert!((fit.values[0] - 0.945).abs() < 1e-6);
    }

    #[test]
    fn rosenbrock_valley_from_poor_start() {
        let residual = |p: &[f64]| -> Vec<f64> { vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]] };
        let model = ModelSpec::new(&["x", "y"], vec![-1.2, 1.0], &residual);
        let fit = nlls_fit(&model, &FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert!((fit.values[0] - 1.0).abs() < 1e-6);
        assert!((fit.values[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn numeric_jacobian_of_linear_model_is_design_matrix() {
        let xs: Vec<f64> = vec![0.0, 1.0, 2.0, 5.0];
        let residual = move |p: &[f64]| -> Vec<f64> {
            xs.iter().map(|x| p[0] * x + p[1]).collect()
        };
        let j = numeric_jacobian(&residual, &[1.3, -0.2], 1e-6).unwrap();
        for (k, x) in [0.0, 1.0, 2.0, 5.0].iter().enumerate() {
            assert!((j[(k, 0)] - x).abs() < 1e-9);
            assert!((j[(k, 1)] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn numeric_jacobian_of_constant_model_is_zero() {
        let residual = |_p: &[f64]| -> Vec<f64> { vec![4.0, 4.0, 4.0] };
        let j = numeric_jacobian(&residual, &[1.0, 2.0], 1e-6).unwrap();
        assert!(j.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn data_reordering_leaves_parameters_unchanged() {
        let ts: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        // deterministic pseudo-noise so the optimum is nontrivial
        let ys: Vec<f64> = ts
            .iter()
            .enumerate()
            .map(|(i, t)| (-t / 1.3).exp() + 0.01 * ((i * 2654435761) % 97) as f64 / 97.0)
            .collect();
        let fit_with_order = |perm: Vec<usize>| {
            let ts = ts.clone();
            let ys = ys.clone();
            let residual = move |p: &[f64]| -> Vec<f64> {
                perm.iter()
                    .map(|&i| (-ts[i] / p[0]).exp() + p[1] - ys[i])
                    .collect()
            };
            let model = ModelSpec::new(&["tau", "b"], vec![1.0, 0.0], &residual);
            nlls_fit(&model, &FitOptions::default()).unwrap()
        };
        let forward = fit_with_order((0..40).collect());
        let reversed = fit_with_order((0..40).rev().collect());
        assert!(forward.converged && reversed.converged);
        for i in 0..2 {
            assert!((forward.values[i] - reversed.values[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn residual_scaling_leaves_parameters_and_errors_unchanged() {
        let ts: Vec<f64> = (0..30).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = ts
            .iter()
            .enumerate()
            .map(|(i, t)| (-t / 0.8).exp() + 0.02 * ((i * 40503) % 89) as f64 / 89.0)
            .collect();
        let fit_scaled = |c: f64| {
            let ts = ts.clone();
            let ys = ys.clone();
            let residual = move |p: &[f64]| -> Vec<f64> {
                ts.iter()
                    .zip(&ys)
                    .map(|(t, y)| c * ((-t / p[0]).exp() - y))
                    .collect()
            };
            let model = ModelSpec::new(&["tau"], vec![1.5], &residual);
            let opts = FitOptions {
                gradient_tol: 1e-13,
                ..FitOptions::default()
            };
            nlls_fit(&model, &opts).unwrap()
        };
        let base = fit_scaled(1.0);
        let scaled = fit_scaled(37.0);
        assert!((base.values[0] - scaled.values[0]).abs() < 1e-9);
        // s^2 and J^T J both scale by c^2, so the covariance is invariant
        let rel = (base.std_errors[0] - scaled.std_errors[0]).abs() / base.std_errors[0];
        assert!(rel < 1e-6, "standard errors differ by {rel}");
    }

    #[test]
    fn bounds_are_respected() {
        let residual = |p: &[f64]| -> Vec<f64> { vec![p[0] - 5.0] };
        let model =
            ModelSpec::new(&["a"], vec![0.5], &residual).with_bounds(vec![0.0], vec![1.0]);
        let fit = nlls_fit(&model, &FitOptions::default()).unwrap();
        assert!((fit.values[0] - 1.0).abs() < 1e-12);
        // the raw gradient stays large, but the bound blocks it: the pinned
        // point is KKT-stationary and must report converged
        assert!(fit.converged);
    }

    #[test]
    fn gradient_along_a_bound_still_blocks_convergence() {
        // minimum at (5, 5); box allows y to improve while x is pinned,
        // so the point (1, start) is not stationary
        let residual = |p: &[f64]| -> Vec<f64> { vec![p[0] - 5.0, p[1] - 5.0] };
        let model = ModelSpec::new(&["a", "b"], vec![0.5, 0.5], &residual)
            .with_bounds(vec![0.0, 0.0], vec![1.0, 10.0]);
        let opts = FitOptions {
            max_iterations: 1,
            ..FitOptions::default()
        };
        let fit = nlls_fit(&model, &opts).unwrap();
        assert!((fit.values[0] - 1.0).abs() < 1e-12);
        // b has not reached 5 yet after one iteration; its free-direction
        // gradient is large, so the fit must not claim convergence
        if (fit.values[1] - 5.0).abs() > 1e-6 {
            assert!(!fit.converged);
        }
    }

    #[test]
    fn iteration_cap_returns_best_so_far_unconverged() {
        let residual = |p: &[f64]| -> Vec<f64> { vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]] };
        let model = ModelSpec::new(&["x", "y"], vec![-1.2, 1.0], &residual);
        let opts = FitOptions {
            max_iterations: 2,
            ..FitOptions::default()
        };
        let fit = nlls_fit(&model, &opts).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 2);
    }

    #[test]
    fn non_finite_residual_at_start_is_an_error() {
        let residual = |p: &[f64]| -> Vec<f64> { vec![(p[0] - 1.0).ln()] };
        let model = ModelSpec::new(&["a"], vec![0.5], &residual);
        match nlls_fit(&model, &FitOptions::default()) {
            Err(FitError::NonFiniteResidual(_)) => {}
            other => panic!("expected NonFiniteResidual, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_jacobian_is_singular_normal_matrix() {
        let residual = |p: &[f64]| -> Vec<f64> { vec![p[0] - 1.0, p[0] * 2.0] };
        let jac = |_p: &[f64]| -> DMatrix<f64> {
            DMatrix::from_row_slice(2, 1, &[f64::NAN, 2.0])
        };
        let model = ModelSpec::new(&["a"], vec![0.0], &residual).with_jacobian(&jac);
        match nlls_fit(&model, &FitOptions::default()) {
            Err(FitError::SingularNormalMatrix) => {}
            other => panic!("expected SingularNormalMatrix, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_parameter_gets_huge_std_error_not_failure() {
        // second parameter never enters the residuals
        let residual = |p: &[f64]| -> Vec<f64> {
            vec![p[0] - 3.0, 2.0 * (p[0] - 3.0), 0.5 * (p[0] - 3.0) + 1e-8]
        };
        let model = ModelSpec::new(&["a", "dead"], vec![0.0, 1.0], &residual);
        let fit = nlls_fit(&model, &FitOptions::default()).unwrap();
        assert!((fit.values[0] - 3.0).abs() < 1e-6);
        assert!(fit.std_errors[1] > 1e3 * fit.std_errors[0].max(1e-300));
        fit.validate().unwrap();
    }

    #[test]
    fn covariance_is_symmetric_with_nonnegative_diagonal() {
        let ts: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 * (-t / 1.2).exp() + 0.4).collect();
        let residual = move |p: &[f64]| -> Vec<f64> {
            ts.iter()
                .zip(&ys)
                .map(|(t, y)| p[0] * (-t / p[1]).exp() + p[2] - y)
                .collect()
        };
        let model = ModelSpec::new(&["c", "tau", "b"], vec![1.0, 2.0, 0.0], &residual);
        let fit = nlls_fit(&model, &FitOptions::default()).unwrap();
        fit.validate().unwrap();
        assert!(fit.converged);
    }
}
