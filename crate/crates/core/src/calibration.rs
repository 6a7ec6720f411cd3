//! Numerical certificates that a 2-form field calibrates: unit comass,
//! closedness, and pairing against parameterized surface patches.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{self, metric_at_x, MetricParams, PointTI, SymmetricBilinear3, TwoForm3};

pub const DEFAULT_RESTARTS: usize = 32;
const ASCENT_ITERATIONS: usize = 64;

pub type FormEvaluator = Arc<dyn Fn(&PointTI, &MetricParams) -> TwoForm3 + Send + Sync>;

/// A pointwise 2-form field on T²×I together with the metric it is
/// measured against.
///
/// Product forms `ψ ∧ dvol_K` with a fixed factor metric are carried as
/// `extra_factor_volume`: comass is unchanged and pairings scale by it.
#[derive(Clone)]
pub struct FormFieldSpec {
    pub params: MetricParams,
    evaluator: FormEvaluator,
    pub extra_factor_volume: f64,
}

impl fmt::Debug for FormFieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormFieldSpec")
            .field("params", &self.params)
            .field("extra_factor_volume", &self.extra_factor_volume)
            .finish_non_exhaustive()
    }
}

impl FormFieldSpec {
    pub fn new<F>(params: MetricParams, evaluator: F) -> Self
    where
        F: Fn(&PointTI, &MetricParams) -> TwoForm3 + Send + Sync + 'static,
    {
        Self {
            params,
            evaluator: Arc::new(evaluator),
            extra_factor_volume: 1.0,
        }
    }

    /// The calibrating form ψ_j.
    pub fn psi(params: MetricParams) -> Self {
        Self::new(params, metric::psi_at)
    }

    pub fn scaled(&self, k: f64) -> Self {
        let inner = Arc::clone(&self.evaluator);
        Self {
            params: self.params,
            evaluator: Arc::new(move |p, prm| inner(p, prm).scaled(k)),
            extra_factor_volume: self.extra_factor_volume,
        }
    }

    pub fn with_extra_factor_volume(mut self, volume: f64) -> Self {
        self.extra_factor_volume = volume;
        self
    }

    pub fn eval(&self, p: &PointTI) -> TwoForm3 {
        (self.evaluator)(p, &self.params)
    }

    /// Evaluate at lifted coordinates; `y, z` are reduced mod 1.
    pub fn eval_lifted(&self, q: [f64; 3]) -> Result<TwoForm3> {
        let p = PointTI::new(q[0], q[1], q[2], &self.params)?;
        Ok(self.eval(&p))
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ComassReport {
    /// `max over points of (estimated comass − 1)`.
    pub max_violation: f64,
    pub argmax_point: PointTI,
    pub max_value: f64,
    pub min_value: f64,
    pub points: usize,
    pub passed: bool,
}

fn g_normalize(g: &Matrix3<f64>, v: Vector3<f64>) -> Option<Vector3<f64>> {
    let n = v.dot(&(g * v)).sqrt();
    (n > 1e-300 && n.is_finite()).then(|| v / n)
}

fn g_orthogonalize(g: &Matrix3<f64>, v: Vector3<f64>, against: &Vector3<f64>) -> Vector3<f64> {
    v - against * against.dot(&(g * v))
}

/// Largest value of `ω(X₁, X₂)` over `g`-orthonormal pairs, from random
/// restarts refined by alternating block ascent.
pub(crate) fn max_on_orthonormal_pairs(
    metric: &SymmetricBilinear3,
    form: &TwoForm3,
    restarts: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    let g = metric.matrix();
    let g_inv = g
        .try_inverse()
        .ok_or_else(|| Error::Internal("degenerate metric at comass sample".into()))?;
    let w = form.matrix();
    let mut best = f64::NEG_INFINITY;
    for _ in 0..restarts.max(1) {
        let draw = |rng: &mut dyn rand::RngCore| {
            Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
        };
        let Some(mut x1) = g_normalize(&g, draw(rng)) else { continue };
        let Some(mut x2) = g_normalize(&g, g_orthogonalize(&g, draw(rng), &x1)) else { continue };
        let mut value = x1.dot(&(w * x2));
        for _ in 0..ASCENT_ITERATIONS {
            // gradient of ω(·, X₂) in the g-inner product, restricted to X₂^⊥
            if let Some(n1) = g_normalize(&g, g_orthogonalize(&g, g_inv * (w * x2), &x2)) {
                x1 = n1;
            }
            if let Some(n2) = g_normalize(&g, g_orthogonalize(&g, -(g_inv * (w * x1)), &x1)) {
                x2 = n2;
            }
            let next = x1.dot(&(w * x2));
            let done = (next - value).abs() <= 1e-15 * next.abs().max(1.0);
            value = next;
            if done {
                break;
            }
        }
        best = best.max(value);
    }
    Ok(best)
}

fn sample_point(params: &MetricParams, rng: &mut impl Rng) -> PointTI {
    PointTI {
        x: rng.gen_range(0.0..=params.length()),
        y: rng.gen_range(0.0..1.0),
        z: rng.gen_range(0.0..1.0),
    }
}

/// Sample `n_points` uniformly, maximize the form over `n_planes` random
/// orthonormal pairs at each, and compare against 1.
pub fn verify_comass(
    spec: &FormFieldSpec,
    n_points: usize,
    n_planes: usize,
    tol: f64,
    seed: u64,
) -> Result<ComassReport> {
    if n_points == 0 || n_planes == 0 {
        return Err(Error::arg("n_points and n_planes must be >= 1"));
    }
    let per_point: Vec<(PointTI, f64)> = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let p = sample_point(&spec.params, &mut rng);
            let g = metric::metric_at(&p, &spec.params);
            let v = max_on_orthonormal_pairs(&g, &spec.eval(&p), n_planes, &mut rng)?;
            Ok((p, v))
        })
        .collect::<Result<_>>()?;
    let (mut argmax, mut max_value, mut min_value) = (per_point[0].0, f64::NEG_INFINITY, f64::INFINITY);
    for &(p, v) in &per_point {
        if v > max_value {
            max_value = v;
            argmax = p;
        }
        min_value = min_value.min(v);
    }
    let max_violation = max_value - 1.0;
    Ok(ComassReport {
        max_violation,
        argmax_point: argmax,
        max_value,
        min_value,
        points: n_points,
        passed: max_violation <= tol,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClosedReport {
    pub max_residual: f64,
    pub points_used: usize,
}

/// Smooth chart `(u, v, w) ↦ (u + a (L/π) sin(πu/L) sin 2πw, v + a sin 2πw, w + a sin 2πv)`
/// on `[0, L] × T²`, used to test closedness in coordinates where the form
/// coefficients vary in every direction. For `a < 1` it fixes both walls and
/// maps the slab onto itself.
#[derive(Debug, Clone, Copy)]
pub struct ShearChart {
    pub amplitude: f64,
}

impl ShearChart {
    fn map(&self, q: &Vector3<f64>, length: f64) -> Vector3<f64> {
        let a = self.amplitude;
        let bump = length / PI * (PI * q[0] / length).sin();
        Vector3::new(
            q[0] + a * bump * (2.0 * PI * q[2]).sin(),
            q[1] + a * (2.0 * PI * q[2]).sin(),
            q[2] + a * (2.0 * PI * q[1]).sin(),
        )
    }

    fn jacobian(&self, q: &Vector3<f64>, length: f64) -> Matrix3<f64> {
        let a = self.amplitude;
        let c = 2.0 * PI * a;
        let (su, cu) = (PI * q[0] / length).sin_cos();
        let (sw, cw) = (2.0 * PI * q[2]).sin_cos();
        Matrix3::new(
            1.0 + a * cu * sw, 0.0, 2.0 * a * length * su * cw, //
            0.0, 1.0, c * cw, //
            0.0, c * (2.0 * PI * q[1]).cos(), 1.0,
        )
    }
}

fn pulled_back(spec: &FormFieldSpec, chart: Option<&ShearChart>, q: &Vector3<f64>) -> Result<TwoForm3> {
    match chart {
        None => spec.eval_lifted([q[0], q[1], q[2]]),
        Some(c) => {
            let length = spec.params.length();
            let image = c.map(q, length);
            let w = spec.eval_lifted([image[0], image[1], image[2]])?.matrix();
            let jac = c.jacobian(q, length);
            Ok(TwoForm3::from_matrix(&(jac.transpose() * w * jac)))
        }
    }
}

/// The single coefficient of `dω` at `q`, by central differences.
fn d_residual(spec: &FormFieldSpec, chart: Option<&ShearChart>, q: &Vector3<f64>, h: f64) -> Result<f64> {
    let e = [Vector3::x(), Vector3::y(), Vector3::z()];
    let diff = |axis: usize| -> Result<(TwoForm3, TwoForm3)> {
        Ok((pulled_back(spec, chart, &(q + h * e[axis]))?, pulled_back(spec, chart, &(q - h * e[axis]))?))
    };
    let (xp, xm) = diff(0)?;
    let (yp, ym) = diff(1)?;
    let (zp, zm) = diff(2)?;
    Ok(((xp.wyz - xm.wyz) - (yp.wxz - ym.wxz) + (zp.wxy - zm.wxy)) / (2.0 * h))
}

/// Deterministic sample positions outside the smoothing band and at least
/// `2h` from the ends of the interval.
fn closedness_samples(params: &MetricParams, n_points: usize, h: f64) -> Vec<Vector3<f64>> {
    let band = params.smoothing_delta() + 2.0 * h;
    let mut pts = Vec::with_capacity(n_points);
    let mut i = 0usize;
    while pts.len() < n_points && i < 64 * n_points.max(1) {
        // low-discrepancy additive recurrence in the unit cube
        let t = (i as f64 + 0.5) * 0.754_877_666_246_692_7;
        let s = (i as f64 + 0.5) * 0.569_840_290_998_053_2;
        let r = (i as f64 + 0.5) * 0.430_159_709_001_946_8;
        let x = 2.0 * h + t.fract() * (params.length() - 4.0 * h);
        i += 1;
        if (x - params.j()).abs() < band {
            continue;
        }
        pts.push(Vector3::new(x, s.fract(), r.fract()));
    }
    pts
}

fn max_residual(spec: &FormFieldSpec, chart: Option<&ShearChart>, n_points: usize, h: f64) -> Result<ClosedReport> {
    let pts = closedness_samples(&spec.params, n_points, h);
    let residuals: Vec<f64> = pts
        .par_iter()
        .map(|q| d_residual(spec, chart, q, h).map(f64::abs))
        .collect::<Result<_>>()?;
    Ok(ClosedReport {
        max_residual: residuals.into_iter().fold(0.0, f64::max),
        points_used: pts.len(),
    })
}

/// Max `|dω|` over points outside the smoothing band, in the base chart.
pub fn verify_closed(spec: &FormFieldSpec, n_points: usize, fd_step: f64) -> Result<ClosedReport> {
    if !(fd_step > 0.0) {
        return Err(Error::arg("fd_step must be positive"));
    }
    max_residual(spec, None, n_points, fd_step)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub steps: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Smallest of the successive `log2(r(h) / r(h/2))`.
    pub observed_order: f64,
}

/// Closedness residual of the form pulled back through a [`ShearChart`]
/// for `fd_step, fd_step/2, …`; the truncation error there is genuinely
/// nonzero, so the observed order measures the stencil.
pub fn closedness_convergence(
    spec: &FormFieldSpec,
    chart: ShearChart,
    n_points: usize,
    fd_step: f64,
    halvings: usize,
) -> Result<ConvergenceReport> {
    if halvings == 0 {
        return Err(Error::arg("need at least one halving"));
    }
    let steps: Vec<f64> = (0..=halvings).map(|k| fd_step / f64::powi(2.0, k as i32)).collect();
    // sample positions fixed by the coarsest step so every level sees the same points
    let pts = closedness_samples(&spec.params, n_points, fd_step);
    let mut residuals = Vec::with_capacity(steps.len());
    for &h in &steps {
        let r = pts
            .par_iter()
            .map(|q| d_residual(spec, Some(&chart), q, h).map(f64::abs))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        residuals.push(r);
    }
    let observed_order = residuals
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        // a vanishing residual says nothing about the stencil: keep the NaN
        .fold(f64::INFINITY, |acc, r| if acc.is_nan() || r.is_nan() { f64::NAN } else { acc.min(r) });
    Ok(ConvergenceReport {
        steps,
        residuals,
        observed_order,
    })
}

pub type Parameterization = Arc<dyn Fn(f64, f64) -> [f64; 3] + Send + Sync>;

/// A map `[0,1]² → T²×I` in lifted coordinates, with a midpoint grid.
#[derive(Clone)]
pub struct SurfacePatch {
    parameterization: Parameterization,
    pub orientation: i8,
    pub nu: usize,
    pub nv: usize,
}

impl fmt::Debug for SurfacePatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SurfacePatch")
            .field("orientation", &self.orientation)
            .field("nu", &self.nu)
            .field("nv", &self.nv)
            .finish_non_exhaustive()
    }
}

impl SurfacePatch {
    pub fn new<F>(parameterization: F, orientation: i8, nu: usize, nv: usize) -> Result<Self>
    where
        F: Fn(f64, f64) -> [f64; 3] + Send + Sync + 'static,
    {
        if orientation != 1 && orientation != -1 {
            return Err(Error::arg("orientation must be +1 or -1"));
        }
        if nu < 8 || nv < 8 {
            return Err(Error::arg("patch resolution must be at least 8x8"));
        }
        Ok(Self {
            parameterization: Arc::new(parameterization),
            orientation,
            nu,
            nv,
        })
    }

    /// `{z = z0}` spanning all of `[0, 2j] × S¹_y`, oriented by `(∂x, ∂y)`.
    pub fn z_constant(params: &MetricParams, z0: f64, nu: usize, nv: usize) -> Result<Self> {
        let len = params.length();
        Self::new(move |u, v| [u * len, v, z0], 1, nu, nv)
    }

    /// `{y = y0}` spanning `[0, 2j] × S¹_z`, oriented by `(∂x, ∂z)`.
    pub fn y_constant(params: &MetricParams, y0: f64, nu: usize, nv: usize) -> Result<Self> {
        let len = params.length();
        Self::new(move |u, v| [u * len, y0, v], 1, nu, nv)
    }

    /// `{z = z0 + slope·y}` over `[0, 2j] × S¹_y`.
    pub fn tilted(params: &MetricParams, z0: f64, slope: f64, nu: usize, nv: usize) -> Result<Self> {
        let len = params.length();
        Self::new(move |u, v| [u * len, v, z0 + slope * v], 1, nu, nv)
    }

    pub fn reversed(&self) -> Self {
        Self {
            orientation: -self.orientation,
            ..self.clone()
        }
    }

    pub fn point(&self, u: f64, v: f64) -> [f64; 3] {
        (self.parameterization)(u, v)
    }

    fn tangents(&self, u: f64, v: f64) -> (Vector3<f64>, Vector3<f64>) {
        let h = 1e-6;
        let d = |a: [f64; 3], b: [f64; 3]| Vector3::new(a[0] - b[0], a[1] - b[1], a[2] - b[2]) / (2.0 * h);
        (
            d(self.point(u + h, v), self.point(u - h, v)),
            d(self.point(u, v + h), self.point(u, v - h)),
        )
    }

    /// Midpoints of the parameter grid with their cell area.
    fn midpoints(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (nu, nv) = (self.nu, self.nv);
        (0..nu).flat_map(move |a| (0..nv).map(move |b| ((a as f64 + 0.5) / nu as f64, (b as f64 + 0.5) / nv as f64)))
    }

    fn cell_area(&self) -> f64 {
        1.0 / (self.nu * self.nv) as f64
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Pairing {
    pub value: f64,
    pub degenerate_samples: usize,
    /// Set when more than a tenth of the samples had a rank-deficient Jacobian.
    pub warning: bool,
}

const RANK_TOL: f64 = 1e-12;

/// `∫_patch ω` by the midpoint rule, orientation-signed.
pub fn pair_form_surface(spec: &FormFieldSpec, patch: &SurfacePatch) -> Result<Pairing> {
    let mut total = 0.0;
    let mut degenerate = 0usize;
    let mut samples = 0usize;
    for (u, v) in patch.midpoints() {
        samples += 1;
        let (tu, tv) = patch.tangents(u, v);
        if tu.cross(&tv).norm() < RANK_TOL {
            degenerate += 1;
            continue;
        }
        let w = spec.eval_lifted(patch.point(u, v))?;
        total += w.eval(&tu, &tv);
    }
    Ok(Pairing {
        value: f64::from(patch.orientation) * total * patch.cell_area() * spec.extra_factor_volume,
        degenerate_samples: degenerate,
        warning: degenerate * 10 > samples,
    })
}

/// Riemannian area of the patch by the same midpoint rule.
pub fn patch_area(params: &MetricParams, patch: &SurfacePatch) -> Result<f64> {
    let mut total = 0.0;
    for (u, v) in patch.midpoints() {
        let (tu, tv) = patch.tangents(u, v);
        let q = patch.point(u, v);
        if !(0.0..=params.length()).contains(&q[0]) {
            return Err(Error::domain(format!("patch leaves the slab at x = {}", q[0])));
        }
        let g = metric_at_x(q[0], params);
        let (e, f, gg) = (g.apply(&tu, &tu), g.apply(&tu, &tv), g.apply(&tv, &tv));
        total += (e * gg - f * f).max(0.0).sqrt();
    }
    Ok(total * patch.cell_area())
}

/// `area(patch) − ∫_patch ω`; nonnegative up to quadrature error when ω has
/// comass at most one, and zero on calibrated patches.
pub fn calibration_defect(spec: &FormFieldSpec, patch: &SurfacePatch) -> Result<f64> {
    let area = patch_area(&spec.params, patch)? * spec.extra_factor_volume;
    Ok(area - pair_form_surface(spec, patch)?.value)
}
