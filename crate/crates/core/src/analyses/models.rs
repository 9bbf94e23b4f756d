//! Closed-form fit models with analytic gradients.
//!
//! Every model implements [`FitModel`] over a flat coordinate slice (one
//! entry for time-like axes, two for image coordinates), which lets the
//! same machinery drive curve fits, the 2-D localizer and the gradient
//! cross-checks in the test suite.

use nalgebra::DMatrix;

use crate::fitcore::{nlls_fit, FitError, FitOptions, ModelSpec};
use crate::types::{FitResult, SplitterParams};

pub trait FitModel {
    fn parameter_names(&self) -> &'static [&'static str];
    /// Coordinates per data point (1 for curves, 2 for images).
    fn point_dim(&self) -> usize {
        1
    }
    fn value(&self, point: &[f64], params: &[f64]) -> f64;
    /// Writes df/dp_j at `point` into `grad` (length = number of params).
    fn gradient(&self, point: &[f64], params: &[f64], grad: &mut [f64]);
}

// ---------------------------------------------------------------------
// continuous-wave intensity correlation

/// Antibunched CW correlation `g2(t) = 1 - (1 - a0) exp(-|t|/tau1)`.
/// `a0` is the zero-delay value; an uncorrelated background of relative
/// power 1 - rho raises it to `a0 = 1 - rho^2` without changing the form.
pub struct AntibunchingCw;

impl FitModel for AntibunchingCw {
    fn parameter_names(&self) -> &'static [&'static str] {
        &["g2_zero", "tau1_ps"]
    }

    fn value(&self, point: &[f64], p: &[f64]) -> f64 {
        let (a0, tau) = (p[0], p[1]);
        1.0 - (1.0 - a0) * (-point[0].abs() / tau).exp()
    }

    fn gradient(&self, point: &[f64], p: &[f64], grad: &mut [f64]) {
        let (a0, tau) = (p[0], p[1]);
        let t = point[0].abs();
        let e = (-t / tau).exp();
        grad[0] = e;
        grad[1] = -(1.0 - a0) * e * t / (tau * tau);
    }
}

// ---------------------------------------------------------------------
// delay interferometer, continuous-wave drive

/// Splitter-geometry prefactors of the three correlation terms: the
/// same-arm pairs (peaked at zero) and the two cross-arm pairs (peaked at
/// plus/minus the arm delay).
#[derive(Debug, Clone, Copy)]
pub(crate) struct HomCwGeometry {
    pub c_same: f64,
    pub c_cross_plus: f64,
    pub c_cross_minus: f64,
}

impl HomCwGeometry {
    pub fn new(sp: &SplitterParams) -> Self {
        HomCwGeometry {
            c_same: 4.0 * (sp.t1() * sp.t1() + sp.r1() * sp.r1()) * sp.t2() * sp.r2(),
            c_cross_plus: 4.0 * sp.t1() * sp.r1() * sp.t2() * sp.t2(),
            c_cross_minus: 4.0 * sp.t1() * sp.r1() * sp.r2() * sp.r2(),
        }
    }

    /// Cross-arm weight at zero delay difference; this is the fraction of
    /// pair flux eligible for interference.
    pub fn cross_sum(&self) -> f64 {
        self.c_cross_plus + self.c_cross_minus
    }
}

fn g_src(t: f64, a0: f64, tau1: f64) -> f64 {
    1.0 - (1.0 - a0) * (-t.abs() / tau1).exp()
}

/// Normalized cross-correlation of the interferometer outputs for
/// distinguishable (orthogonally polarized) arms:
///
/// `f(t) = c_same g(t) + c_cross_plus g(t - dt) + c_cross_minus g(t + dt)`
///
/// with `g` the source correlation of [`AntibunchingCw`]. Parameters:
/// `g2_zero`, `tau1_ps`; the splitter coefficients and delay are fixed
/// instrument knowledge.
pub struct HomCwOrthogonal {
    geometry: HomCwGeometry,
    delay_ps: f64,
}

impl HomCwOrthogonal {
    pub fn new(sp: &SplitterParams, delay_ps: f64) -> Self {
        HomCwOrthogonal { geometry: HomCwGeometry::new(sp), delay_ps }
    }
}

impl FitModel for HomCwOrthogonal {
    fn parameter_names(&self) -> &'static [&'static str] {
        &["g2_zero", "tau1_ps"]
    }

    fn value(&self, point: &[f64], p: &[f64]) -> f64 {
        let (a0, tau1) = (p[0], p[1]);
        let g = &self.geometry;
        let t = point[0];
        g.c_same * g_src(t, a0, tau1)
            + g.c_cross_plus * g_src(t - self.delay_ps, a0, tau1)
            + g.c_cross_minus * g_src(t + self.delay_ps, a0, tau1)
    }

    fn gradient(&self, point: &[f64], p: &[f64], grad: &mut [f64]) {
        let (a0, tau1) = (p[0], p[1]);
        let g = &self.geometry;
        let t = point[0];
        let terms = [
            (g.c_same, t.abs()),
            (g.c_cross_plus, (t - self.delay_ps).abs()),
            (g.c_cross_minus, (t + self.delay_ps).abs()),
        ];
        grad[0] = 0.0;
        grad[1] = 0.0;
        for (c, u) in terms {
            let e = (-u / tau1).exp();
            grad[0] += c * e;
            grad[1] += -c * (1.0 - a0) * e * u / (tau1 * tau1);
        }
    }
}

/// Parallel-polarization counterpart: the cross-arm pair flux is
/// suppressed by two-photon interference within the mutual coherence
/// time,
///
/// `f(t) = c_same g(t) + [cross terms](t) * (1 - v exp(-2|t|/tau_c))`.
///
/// The source parameters `g2_zero` and `tau1_ps` come from the
/// orthogonal fit and stay fixed; free parameters are `visibility` and
/// `tau_c_ps`.
pub struct HomCwParallel {
    geometry: HomCwGeometry,
    delay_ps: f64,
    a0: f64,
    tau1_ps: f64,
}

impl HomCwParallel {
    pub fn new(sp: &SplitterParams, delay_ps: f64, a0: f64, tau1_ps: f64) -> Self {
        HomCwParallel {
            geometry: HomCwGeometry::new(sp),
            delay_ps,
            a0,
            tau1_ps,
        }
    }

    fn cross_part(&self, t: f64) -> f64 {
        self.geometry.c_cross_plus * g_src(t - self.delay_ps, self.a0, self.tau1_ps)
            + self.geometry.c_cross_minus * g_src(t + self.delay_ps, self.a0, self.tau1_ps)
    }
}

impl FitModel for HomCwParallel {
    fn parameter_names(&self) -> &'static [&'static str] {
        &["visibility", "tau_c_ps"]
    }

    fn value(&self, point: &[f64], p: &[f64]) -> f64 {
        let (v, tau_c) = (p[0], p[1]);
        let t = point[0];
        let same = self.geometry.c_same * g_src(t, self.a0, self.tau1_ps);
        same + self.cross_part(t) * (1.0 - v * (-2.0 * t.abs() / tau_c).exp())
    }

    fn gradient(&self, point: &[f64], p: &[f64], grad: &mut [f64]) {
        let (v, tau_c) = (p[0], p[1]);
        let t = point[0];
        let cross = self.cross_part(t);
        let e = (-2.0 * t.abs() / tau_c).exp();
        grad[0] = -cross * e;
        grad[1] = -cross * v * e * 2.0 * t.abs() / (tau_c * tau_c);
    }
}

// ---------------------------------------------------------------------
// delay interferometer, pulsed double drive

/// Unit-height peak shape `L(d; tau) = tau^2 / (4 d^2 + tau^2)`; with the
/// 2/pi prefactor used below, a peak of amplitude `a` carries area
/// `a * tau`.
fn peak_shape(d: f64, tau: f64) -> f64 {
    tau * tau / (4.0 * d * d + tau * tau)
}

fn peak_shape_dtau(d: f64, tau: f64) -> f64 {
    let denom = 4.0 * d * d + tau * tau;
    8.0 * tau * d * d / (denom * denom)
}

const FRAC_2_PI: f64 = std::f64::consts::FRAC_2_PI;

/// Center cluster of the pulsed interferometer correlation for
/// distinguishable arms: five peaks at `0, ±dt, ±2dt` sharing one width.
/// Parameters: `a0, a_plus, a_minus, a_plus2, a_minus2` (amplitude of
/// each peak; area = amplitude x tau1) and `tau1_ps`.
pub struct HomPulsedOrthogonal {
    delay_ps: f64,
}

impl HomPulsedOrthogonal {
    pub fn new(delay_ps: f64) -> Self {
        HomPulsedOrthogonal { delay_ps }
    }

    fn offsets(&self) -> [f64; 5] {
        let dt = self.delay_ps;
        [0.0, dt, -dt, 2.0 * dt, -2.0 * dt]
    }
}

impl FitModel for HomPulsedOrthogonal {
    fn parameter_names(&self) -> &'static [&'static str] {
        &["a0", "a_plus", "a_minus", "a_plus2", "a_minus2", "tau1_ps"]
    }

    fn value(&self, point: &[f64], p: &[f64]) -> f64 {
        let tau1 = p[5];
        let d = point[0];
        let mut sum = 0.0;
        for (amp, off) in p[..5].iter().zip(self.offsets()) {
            sum += amp * peak_shape(d - off, tau1);
        }
        FRAC_2_PI * sum
    }

    fn gradient(&self, point: &[f64], p: &[f64], grad: &mut [f64]) {
        let tau1 = p[5];
        let d = point[0];
        grad[5] = 0.0;
        for (i, off) in self.offsets().into_iter().enumerate() {
            grad[i] = FRAC_2_PI * peak_shape(d - off, tau1);
            grad[5] += FRAC_2_PI * p[i] * peak_shape_dtau(d - off, tau1);
        }
    }
}

/// Parallel-polarization center cluster: the orthogonal shape minus an
/// interference dip at zero with its own width,
/// `f(d) = f_orth(d) - (2/pi) a_dip L(d; tau_c)`. Adds `a_dip` and
/// `tau_c_ps` to the orthogonal parameters.
pub struct HomPulsedParallel {
    inner: HomPulsedOrthogonal,
}

impl HomPulsedParallel {
    pub fn new(delay_ps: f64) -> Self {
        HomPulsedParallel { inner: HomPulsedOrthogonal::new(delay_ps) }
    }
}

impl FitModel for HomPulsedParallel {
    fn parameter_names(&self) -> &'static [&'static str] {
        &["a0", "a_plus", "a_minus", "a_plus2", "a_minus2", "tau1_ps", "a_dip", "tau_c_ps"]
    }

    fn value(&self, point: &[f64], p: &[f64]) -> f64 {
        let (a_dip, tau_c) = (p[6], p[7]);
        self.inner.value(point, &p[..6]) - FRAC_2_PI * a_dip * peak_shape(point[0], tau_c)
    }

    fn gradient(&self, point: &[f64], p: &[f64], grad: &mut [f64]) {
        let (a_dip, tau_c) = (p[6], p[7]);
        self.inner.gradient(point, &p[..6], &mut grad[..6]);
        grad[6] = -FRAC_2_PI * peak_shape(point[0], tau_c);
        grad[7] = -FRAC_2_PI * a_dip * peak_shape_dtau(point[0], tau_c);
    }
}

// ---------------------------------------------------------------------
// time-resolved decay, polarization scan, 2-D spot

/// Single-exponential decay on a flat baseline:
/// `f(t) = baseline + amplitude exp(-t/tau)`.
pub struct LifetimeExp;

impl FitModel for LifetimeExp {
    fn parameter_names(&self) -> &'static [&'static str] {
        &["baseline", "amplitude", "tau_ps"]
    }

    fn value(&self, point: &[f64], p: &[f64]) -> f64 {
        p[0] + p[1] * (-point[0] / p[2]).exp()
    }

    fn gradient(&self, point: &[f64], p: &[f64], grad: &mut [f64]) {
        let t = point[0];
        let e = (-t / p[2]).exp();
        grad[0] = 1.0;
        grad[1] = e;
        grad[2] = p[1] * e * t / (p[2] * p[2]);
    }
}

/// Malus-law polarization scan in degrees:
/// `I(theta) = offset + amplitude cos^2(theta - theta0)`.
pub struct DopCos2;

impl FitModel for DopCos2 {
    fn parameter_names(&self) -> &'static [&'static str] {
        &["offset", "amplitude", "theta0_deg"]
    }

    fn value(&self, point: &[f64], p: &[f64]) -> f64 {
        let phi = (point[0] - p[2]).to_radians();
        p[0] + p[1] * phi.cos().powi(2)
    }

    fn gradient(&self, point: &[f64], p: &[f64], grad: &mut [f64]) {
        let phi = (point[0] - p[2]).to_radians();
        grad[0] = 1.0;
        grad[1] = phi.cos().powi(2);
        grad[2] = p[1] * (2.0 * phi).sin() * std::f64::consts::PI / 180.0;
    }
}

/// Axis-aligned 2-D Gaussian on a flat background, for spot localization:
/// `f(x, y) = baseline + amplitude exp(-(x-x0)^2/2sx^2 - (y-y0)^2/2sy^2)`.
pub struct Gaussian2d;

impl FitModel for Gaussian2d {
    fn parameter_names(&self) -> &'static [&'static str] {
        &["amplitude", "x0", "y0", "sigma_x", "sigma_y", "baseline"]
    }

    fn point_dim(&self) -> usize {
        2
    }

    fn value(&self, point: &[f64], p: &[f64]) -> f64 {
        let dx = (point[0] - p[1]) / p[3];
        let dy = (point[1] - p[2]) / p[4];
        p[5] + p[0] * (-0.5 * (dx * dx + dy * dy)).exp()
    }

    fn gradient(&self, point: &[f64], p: &[f64], grad: &mut [f64]) {
        let dx = point[0] - p[1];
        let dy = point[1] - p[2];
        let (sx, sy) = (p[3], p[4]);
        let e = (-0.5 * (dx * dx / (sx * sx) + dy * dy / (sy * sy))).exp();
        grad[0] = e;
        grad[1] = p[0] * e * dx / (sx * sx);
        grad[2] = p[0] * e * dy / (sy * sy);
        grad[3] = p[0] * e * dx * dx / (sx * sx * sx);
        grad[4] = p[0] * e * dy * dy / (sy * sy * sy);
        grad[5] = 1.0;
    }
}

// ---------------------------------------------------------------------
// shared fit driver

/// Least-squares fit of a [`FitModel`] to points. `points` is flattened
/// with the model's `point_dim` stride; `weights`, when given, multiply
/// each residual (use 1/sigma_i).
pub(crate) struct PointFit<'a> {
    pub model: &'a dyn FitModel,
    pub points: &'a [f64],
    pub values: &'a [f64],
    pub weights: Option<&'a [f64]>,
    pub initial: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

pub(crate) fn run_point_fit(pf: PointFit<'_>, options: &FitOptions) -> Result<FitResult, FitError> {
    let dim = pf.model.point_dim();
    let n = pf.values.len();
    if pf.points.len() != n * dim {
        return Err(FitError::Dimensions(format!(
            "{} coordinates for {} values with {} per point",
            pf.points.len(),
            n,
            dim
        )));
    }
    if let Some(w) = pf.weights {
        if w.len() != n {
            return Err(FitError::Dimensions(format!(
                "{} weights for {} values",
                w.len(),
                n
            )));
        }
    }
    let model = pf.model;
    let points = pf.points;
    let values = pf.values;
    let weights = pf.weights;
    let n_params = model.parameter_names().len();

    let residual = move |p: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let r = model.value(&points[i * dim..(i + 1) * dim], p) - values[i];
                match weights {
                    Some(w) => r * w[i],
                    None => r,
                }
            })
            .collect()
    };
    let jacobian = move |p: &[f64]| -> DMatrix<f64> {
        let mut j = DMatrix::zeros(n, n_params);
        let mut grad = vec![0.0; n_params];
        for i in 0..n {
            model.gradient(&points[i * dim..(i + 1) * dim], p, &mut grad);
            let w = weights.map_or(1.0, |w| w[i]);
            for (k, g) in grad.iter().enumerate() {
                j[(i, k)] = g * w;
            }
        }
        j
    };

    let names: Vec<&str> = model.parameter_names().to_vec();
    let spec = ModelSpec::new(&names, pf.initial, &residual)
        .with_jacobian(&jacobian)
        .with_bounds(pf.lower, pf.upper);
    nlls_fit(&spec, options)
}
