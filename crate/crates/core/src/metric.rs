//! The two-circle metric family on T²×I.
//!
//! Coordinates are `(x, y, z)` with `x ∈ [0, 2j]` and `(y, z)` on the unit
//! square torus. The metric is
//!
//! ```text
//! g_j = dx² + dy² + (dz − x̂ dy)²,      x̂ = min(x, 2j − x)
//! ```
//!
//! with the kink of `x̂` at `x = j` replaced by a C² smooth minimum of
//! half-width `smoothing_delta`. Every tensor here has determinant one.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SMOOTHING: f64 = 0.1;
pub const DEFAULT_QUADRATURE_ORDER: usize = 8;
/// Gauss–Legendre panels along `x` per unit of `j`.
pub const PANELS_PER_UNIT_J: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    j: f64,
    smoothing_delta: f64,
}

impl MetricParams {
    pub fn new(j: f64, smoothing_delta: f64) -> Result<Self> {
        if !j.is_finite() || j < 1.0 {
            return Err(Error::arg(format!("j must be finite and >= 1, got {j}")));
        }
        if !smoothing_delta.is_finite() || smoothing_delta < 0.0 || smoothing_delta >= j / 2.0 {
            return Err(Error::arg(format!(
                "smoothing_delta must lie in [0, j/2), got {smoothing_delta} for j = {j}"
            )));
        }
        Ok(Self { j, smoothing_delta })
    }

    /// Parameters with the default smoothing half-width.
    pub fn with_j(j: f64) -> Result<Self> {
        Self::new(j, DEFAULT_SMOOTHING)
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn smoothing_delta(&self) -> f64 {
        self.smoothing_delta
    }

    /// Length of the interval factor, `2j`.
    pub fn length(&self) -> f64 {
        2.0 * self.j
    }

    /// True when `x` lies inside the band where `x̂` is smoothed.
    pub fn in_smoothing_band(&self, x: f64) -> bool {
        (x - self.j).abs() < self.smoothing_delta
    }
}

/// A point of T²×I with `y, z` reduced into `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointTI {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl PointTI {
    pub fn new(x: f64, y: f64, z: f64, params: &MetricParams) -> Result<Self> {
        check_x(x, params)?;
        if !y.is_finite() || !z.is_finite() {
            return Err(Error::domain("torus coordinates must be finite"));
        }
        Ok(Self {
            x,
            y: reduce_periodic(y),
            z: reduce_periodic(z),
        })
    }
}

pub(crate) fn reduce_periodic(t: f64) -> f64 {
    let r = t.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

fn check_x(x: f64, params: &MetricParams) -> Result<()> {
    if !(0.0..=params.length()).contains(&x) {
        return Err(Error::domain(format!(
            "x = {x} outside [0, {}]",
            params.length()
        )));
    }
    Ok(())
}

/// Even C² profile replacing `|u|` on `[-1, 1]`; matches value, slope and
/// curvature of `|u|` at `u = ±1`.
fn smooth_abs_unit(u: f64) -> f64 {
    let u2 = u * u;
    0.375 + 0.75 * u2 - 0.125 * u2 * u2
}

fn smooth_abs_unit_prime(u: f64) -> f64 {
    1.5 * u - 0.5 * u * u * u
}

/// `x̂ = min(x, 2j − x)` with the kink at `x = j` smoothed.
pub fn hat(x: f64, params: &MetricParams) -> Result<f64> {
    check_x(x, params)?;
    Ok(hat_unchecked(x, params))
}

pub(crate) fn hat_unchecked(x: f64, params: &MetricParams) -> f64 {
    let t = x - params.j;
    let d = params.smoothing_delta;
    if t.abs() >= d {
        params.j - t.abs()
    } else {
        params.j - d * smooth_abs_unit(t / d)
    }
}

/// Derivative of [`hat`] in `x`.
pub fn hat_prime(x: f64, params: &MetricParams) -> Result<f64> {
    check_x(x, params)?;
    let t = x - params.j;
    let d = params.smoothing_delta;
    Ok(if t.abs() >= d {
        -t.signum()
    } else {
        -smooth_abs_unit_prime(t / d)
    })
}

/// Symmetric bilinear form in the coordinate order `x, y, z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricBilinear3 {
    pub gxx: f64,
    pub gxy: f64,
    pub gxz: f64,
    pub gyy: f64,
    pub gyz: f64,
    pub gzz: f64,
}

impl SymmetricBilinear3 {
    pub fn identity() -> Self {
        Self {
            gxx: 1.0,
            gxy: 0.0,
            gxz: 0.0,
            gyy: 1.0,
            gyz: 0.0,
            gzz: 1.0,
        }
    }

    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        Self {
            gxx: m[(0, 0)],
            gxy: 0.5 * (m[(0, 1)] + m[(1, 0)]),
            gxz: 0.5 * (m[(0, 2)] + m[(2, 0)]),
            gyy: m[(1, 1)],
            gyz: 0.5 * (m[(1, 2)] + m[(2, 1)]),
            gzz: m[(2, 2)],
        }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.gxx, self.gxy, self.gxz, //
            self.gxy, self.gyy, self.gyz, //
            self.gxz, self.gyz, self.gzz,
        )
    }

    pub fn det(&self) -> f64 {
        self.gxx * (self.gyy * self.gzz - self.gyz * self.gyz)
            - self.gxy * (self.gxy * self.gzz - self.gyz * self.gxz)
            + self.gxz * (self.gxy * self.gyz - self.gyy * self.gxz)
    }

    pub fn is_positive_definite(&self) -> bool {
        let m1 = self.gxx;
        let m2 = self.gxx * self.gyy - self.gxy * self.gxy;
        m1 > 0.0 && m2 > 0.0 && self.det() > 0.0
    }

    pub fn apply(&self, u: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
        (self.matrix() * v).dot(u)
    }

    pub fn norm(&self, v: &Vector3<f64>) -> f64 {
        self.apply(v, v).max(0.0).sqrt()
    }

    /// Upper-triangular `A` with `Aᵀ A = g`; its rows are an orthonormal coframe.
    pub fn orthonormal_coframe(&self) -> Result<Matrix3<f64>> {
        let chol = self
            .matrix()
            .cholesky()
            .ok_or_else(|| Error::Internal("metric is not positive definite".into()))?;
        Ok(chol.l().transpose())
    }
}

/// A 2-form `wxy dx∧dy + wxz dx∧dz + wyz dy∧dz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoForm3 {
    pub wxy: f64,
    pub wxz: f64,
    pub wyz: f64,
}

impl TwoForm3 {
    pub fn zero() -> Self {
        Self {
            wxy: 0.0,
            wxz: 0.0,
            wyz: 0.0,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            wxy: k * self.wxy,
            wxz: k * self.wxz,
            wyz: k * self.wyz,
        }
    }

    /// Antisymmetric matrix `W` with `ω(u, v) = uᵀ W v`.
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            0.0, self.wxy, self.wxz, //
            -self.wxy, 0.0, self.wyz, //
            -self.wxz, -self.wyz, 0.0,
        )
    }

    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        Self {
            wxy: 0.5 * (m[(0, 1)] - m[(1, 0)]),
            wxz: 0.5 * (m[(0, 2)] - m[(2, 0)]),
            wyz: 0.5 * (m[(1, 2)] - m[(2, 1)]),
        }
    }

    pub fn eval(&self, u: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
        self.wxy * (u[0] * v[1] - u[1] * v[0])
            + self.wxz * (u[0] * v[2] - u[2] * v[0])
            + self.wyz * (u[1] * v[2] - u[2] * v[1])
    }

    pub fn is_finite(&self) -> bool {
        self.wxy.is_finite() && self.wxz.is_finite() && self.wyz.is_finite()
    }

    /// Exact comass with respect to `metric`. In three dimensions every
    /// 2-form is simple, so the comass is the Euclidean norm of its
    /// components in an orthonormal coframe.
    pub fn comass(&self, metric: &SymmetricBilinear3) -> Result<f64> {
        let a = metric.orthonormal_coframe()?;
        let a_inv = a
            .try_inverse()
            .ok_or_else(|| Error::Internal("singular coframe".into()))?;
        let e = a_inv.transpose() * self.matrix() * a_inv;
        let f = Self::from_matrix(&e);
        Ok((f.wxy * f.wxy + f.wxz * f.wxz + f.wyz * f.wyz).sqrt())
    }
}

pub(crate) fn metric_from_hat(xh: f64) -> SymmetricBilinear3 {
    SymmetricBilinear3 {
        gxx: 1.0,
        gxy: 0.0,
        gxz: 0.0,
        gyy: 1.0 + xh * xh,
        gyz: -xh,
        gzz: 1.0,
    }
}

pub fn metric_at(p: &PointTI, params: &MetricParams) -> SymmetricBilinear3 {
    metric_from_hat(hat_unchecked(p.x, params))
}

/// Metric at a raw x-coordinate; `x` must already be inside `[0, 2j]`.
pub(crate) fn metric_at_x(x: f64, params: &MetricParams) -> SymmetricBilinear3 {
    metric_from_hat(hat_unchecked(x, params))
}

/// Rows are the coframe `e¹ = dx, e² = dy, e³ = dz − x̂ dy`.
fn nil_coframe(xh: f64) -> Matrix3<f64> {
    Matrix3::new(
        1.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, //
        0.0, -xh, 1.0,
    )
}

/// Hodge star of a 1-form given by its coframe components, as a 2-form
/// matrix in the same coframe (orientation `e¹∧e²∧e³`).
fn hodge_star_coframe(c: &Vector3<f64>) -> Matrix3<f64> {
    TwoForm3 {
        wxy: c[2],
        wxz: -c[1],
        wyz: c[0],
    }
    .matrix()
}

pub(crate) fn psi_from_hat(xh: f64) -> TwoForm3 {
    let a = nil_coframe(xh);
    // covector dz in coframe components: dz = Aᵀ c
    let a_inv_t = a
        .transpose()
        .try_inverse()
        .expect("unipotent coframe is invertible");
    let c = a_inv_t * Vector3::new(0.0, 0.0, 1.0);
    let star_e = hodge_star_coframe(&c);
    let star_dx = a.transpose() * star_e * a;
    TwoForm3::from_matrix(&star_dx).scaled(1.0 / (1.0 + xh * xh).sqrt())
}

/// The calibrating form `ψ = (1 + x̂²)^(-1/2) * dz`.
pub fn psi_at(p: &PointTI, params: &MetricParams) -> TwoForm3 {
    psi_from_hat(hat_unchecked(p.x, params))
}

pub(crate) fn psi_at_x(x: f64, params: &MetricParams) -> TwoForm3 {
    psi_from_hat(hat_unchecked(x, params))
}

/// Gauss–Legendre nodes and weights mapped to `[0, 1]`.
pub(crate) fn unit_gauss_rule(order: usize) -> Vec<(f64, f64)> {
    let order = NonZeroUsize::new(order.max(1)).expect("nonzero");
    GaussLegendre::new(order)
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

/// Volume of `[0, 2j] × T²` by composite Gauss–Legendre quadrature.
pub fn total_volume(params: &MetricParams, quadrature_order: usize) -> Result<f64> {
    let panels = PANELS_PER_UNIT_J * params.j.ceil() as usize;
    total_volume_with_panels(params, quadrature_order, panels)
}

pub fn total_volume_with_panels(
    params: &MetricParams,
    quadrature_order: usize,
    panels: usize,
) -> Result<f64> {
    if quadrature_order < 2 {
        return Err(Error::arg("quadrature_order must be >= 2"));
    }
    if panels == 0 {
        return Err(Error::arg("need at least one panel"));
    }
    let rule = unit_gauss_rule(quadrature_order);
    let hx = params.length() / panels as f64;
    let mut total = 0.0;
    for panel in 0..panels {
        let x0 = panel as f64 * hx;
        let mut panel_sum = 0.0;
        for &(tx, wx) in &rule {
            let x = x0 + tx * hx;
            // the density depends on x only, but we integrate the full slice
            let mut slice = 0.0;
            for &(ty, wy) in &rule {
                for &(tz, wz) in &rule {
                    let p = PointTI {
                        x,
                        y: ty,
                        z: tz,
                    };
                    slice += wy * wz * metric_at(&p, params).det().sqrt();
                }
            }
            panel_sum += wx * slice;
        }
        total += hx * panel_sum;
    }
    Ok(total)
}

/// Length of a polygonal curve given in lifted (unreduced) coordinates.
pub fn curve_length(samples: &[[f64; 3]], params: &MetricParams) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::arg("curve_length needs at least two samples"));
    }
    let mut total = 0.0;
    for w in samples.windows(2) {
        let (a, b) = (w[0], w[1]);
        check_x(a[0], params)?;
        check_x(b[0], params)?;
        let d = Vector3::new(b[0] - a[0], b[1] - a[1], b[2] - a[2]);
        if d[1].abs() >= 0.5 || d[2].abs() >= 0.5 {
            return Err(Error::arg(
                "consecutive samples must be within half a period in y and z",
            ));
        }
        let g = metric_at_x(0.5 * (a[0] + b[0]), params);
        total += g.norm(&d);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub max_abs_sectional: f64,
    pub sample_count: usize,
    pub fd_step: f64,
}

pub(crate) type Plane = (Vector3<f64>, Vector3<f64>);

fn fixed_random_planes() -> &'static [Plane] {
    static PLANES: OnceLock<Vec<Plane>> = OnceLock::new();
    PLANES.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
        let mut draw = || Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        (0..16).map(|_| (draw(), draw())).collect()
    })
}

fn coordinate_planes() -> [Plane; 3] {
    let (ex, ey, ez) = (Vector3::x(), Vector3::y(), Vector3::z());
    [(ex, ey), (ex, ez), (ey, ez)]
}

/// Sectional curvatures of `metric` at `p` for each plane, from the Riemann
/// tensor assembled out of central finite differences of the metric.
pub(crate) fn sectional_curvatures_fd<F>(metric: F, p: Vector3<f64>, h: f64, planes: &[Plane]) -> Vec<f64>
where
    F: Fn(&Vector3<f64>) -> Matrix3<f64>,
{
    let e = [Vector3::x(), Vector3::y(), Vector3::z()];
    let g0 = metric(&p);
    let ginv = g0.try_inverse().expect("metric must be invertible");

    let mut dg = [Matrix3::zeros(); 3];
    for i in 0..3 {
        dg[i] = (metric(&(p + h * e[i])) - metric(&(p - h * e[i]))) / (2.0 * h);
    }
    let mut d2g = [[Matrix3::zeros(); 3]; 3];
    for i in 0..3 {
        for k in i..3 {
            let m = if i == k {
                (metric(&(p + h * e[i])) - 2.0 * g0 + metric(&(p - h * e[i]))) / (h * h)
            } else {
                (metric(&(p + h * e[i] + h * e[k])) - metric(&(p + h * e[i] - h * e[k]))
                    - metric(&(p - h * e[i] + h * e[k]))
                    + metric(&(p - h * e[i] - h * e[k])))
                    / (4.0 * h * h)
            };
            d2g[i][k] = m;
            d2g[k][i] = m;
        }
    }

    // Christoffel symbols of the second kind, gamma[k][(i, j)] = Γ^k_ij
    let mut gamma = [Matrix3::zeros(); 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for l in 0..3 {
                    s += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                gamma[k][(i, j)] = 0.5 * s;
            }
        }
    }

    // fully covariant R_{iklm}
    let riemann = |i: usize, k: usize, l: usize, m: usize| -> f64 {
        let mut r = 0.5
            * (d2g[k][l][(i, m)] + d2g[i][m][(k, l)] - d2g[k][m][(i, l)] - d2g[i][l][(k, m)]);
        for n in 0..3 {
            for q in 0..3 {
                r += g0[(n, q)]
                    * (gamma[n][(k, l)] * gamma[q][(i, m)] - gamma[n][(k, m)] * gamma[q][(i, l)]);
            }
        }
        r
    };

    planes
        .iter()
        .map(|(u, v)| {
            let mut num = 0.0;
            for i in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        for m in 0..3 {
                            num += riemann(i, k, l, m) * u[i] * v[k] * u[l] * v[m];
                        }
                    }
                }
            }
            let uu = u.dot(&(g0 * u));
            let vv = v.dot(&(g0 * v));
            let uv = u.dot(&(g0 * v));
            num / (uu * vv - uv * uv)
        })
        .collect()
}

/// Max `|K|` over the coordinate planes and a fixed set of 16 random planes.
pub fn curvature_at(p: &PointTI, params: &MetricParams, fd_step: f64) -> Result<f64> {
    if !(fd_step > 0.0 && fd_step <= 0.1) {
        return Err(Error::domain(format!("fd_step {fd_step} outside (0, 0.1]")));
    }
    if p.x < fd_step || p.x > params.length() - fd_step {
        return Err(Error::domain(format!(
            "x = {} closer than fd_step to the boundary",
            p.x
        )));
    }
    let mut planes: Vec<Plane> = coordinate_planes().to_vec();
    planes.extend_from_slice(fixed_random_planes());
    let metric = |q: &Vector3<f64>| metric_at_x(q[0], params).matrix();
    let ks = sectional_curvatures_fd(metric, Vector3::new(p.x, p.y, p.z), fd_step, &planes);
    Ok(ks.into_iter().fold(0.0, |acc, k| acc.max(k.abs())))
}

/// Samples of `x` in both halves of the interval, at least `margin` away
/// from the smoothing band and at least `fd_step` from the boundary. The
/// sample positions in `x̂` do not depend on `j` beyond the upper cutoff.
pub(crate) fn curvature_sample_xs(params: &MetricParams, n_samples: usize, fd_step: f64) -> Vec<f64> {
    let lo = fd_step.max(0.05);
    let hi = params.j - params.smoothing_delta - 0.25;
    let per_half = n_samples.div_ceil(2).max(1);
    let mut xs = Vec::with_capacity(2 * per_half);
    for i in 0..per_half {
        let t = if per_half == 1 { 0.0 } else { i as f64 / (per_half - 1) as f64 };
        let xh = lo + t * (hi - lo).max(0.0);
        xs.push(xh);
        xs.push(params.length() - xh);
    }
    xs.truncate(n_samples.max(1));
    xs
}

pub fn curvature_report(params: &MetricParams, n_samples: usize, fd_step: f64) -> Result<CurvatureReport> {
    if n_samples == 0 {
        return Err(Error::arg("need at least one curvature sample"));
    }
    let xs = curvature_sample_xs(params, n_samples, fd_step);
    let mut max_abs = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        // y, z do not affect the metric; vary them anyway for honesty
        let frac = (i as f64 * 0.618_033_988_749_895).fract();
        let p = PointTI::new(x, frac, 1.0 - frac, params)?;
        max_abs = max_abs.max(curvature_at(&p, params, fd_step)?);
    }
    Ok(CurvatureReport {
        max_abs_sectional: max_abs,
        sample_count: xs.len(),
        fd_step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params(j: f64) -> MetricParams {
        MetricParams::with_j(j).unwrap()
    }

    #[test]
    fn hat_examples() {
        let p = params(4.0);
        assert_eq!(hat(0.0, &p).unwrap(), 0.0);
        assert_eq!(hat(7.0, &p).unwrap(), 1.0);
        // smooth-min value at the kink: j − 3δ/8
        let mid = hat(4.0, &p).unwrap();
        assert!((3.9..=4.0).contains(&mid));
        assert_abs_diff_eq!(mid, 3.9625, epsilon = 1e-15);
        assert!(hat(-0.1, &p).is_err());
        assert!(hat(8.01, &p).is_err());
    }

    #[test]
    fn hat_is_c1_at_band_edges() {
        let p = params(3.0);
        for edge in [2.9, 3.1] {
            let below = hat_unchecked(edge - 1e-9, &p);
            let above = hat_unchecked(edge + 1e-9, &p);
            assert!((below - above).abs() < 1e-8);
            let d1 = hat_prime(edge - 1e-7, &p).unwrap();
            let d2 = hat_prime(edge + 1e-7, &p).unwrap();
            assert!((d1 - d2).abs() < 1e-5);
        }
    }

    #[test]
    fn params_validation() {
        assert!(MetricParams::new(0.5, 0.1).is_err());
        assert!(MetricParams::new(2.0, 1.0).is_err());
        assert!(MetricParams::new(2.0, -0.1).is_err());
        assert!(MetricParams::new(2.0, 0.0).is_ok());
    }

    #[test]
    fn metric_examples() {
        let g0 = metric_from_hat(0.0);
        assert_eq!(g0, SymmetricBilinear3::identity());
        let g2 = metric_from_hat(2.0);
        assert_eq!((g2.gxx, g2.gyy, g2.gyz, g2.gzz), (1.0, 5.0, -2.0, 1.0));
        assert_eq!(g2.det(), 1.0);
    }

    #[test]
    fn volume_is_twice_j() {
        for j in [1.0, 3.0, 16.0] {
            let v = total_volume(&params(j), DEFAULT_QUADRATURE_ORDER).unwrap();
            assert_abs_diff_eq!(v, 2.0 * j, epsilon = 1e-6);
        }
        assert!(total_volume(&params(1.0), 1).is_err());
    }

    #[test]
    fn circle_lengths() {
        let p = params(4.0);
        let n = 64;
        let z_circle: Vec<[f64; 3]> = (0..=n).map(|i| [1.3, 0.2, i as f64 / n as f64]).collect();
        assert_abs_diff_eq!(curve_length(&z_circle, &p).unwrap(), 1.0, epsilon = 1e-12);
        let y_circle: Vec<[f64; 3]> = (0..=n).map(|i| [2.0, i as f64 / n as f64, 0.7]).collect();
        assert_abs_diff_eq!(curve_length(&y_circle, &p).unwrap(), 5f64.sqrt(), epsilon = 1e-6);
        let still = vec![[1.0, 0.5, 0.5]; 5];
        assert_eq!(curve_length(&still, &p).unwrap(), 0.0);
        assert!(curve_length(&still[..1], &p).is_err());
        assert!(curve_length(&[[1.0, 0.0, 0.0], [1.0, 0.6, 0.0]], &p).is_err());
    }

    #[test]
    fn psi_components() {
        let f0 = psi_from_hat(0.0);
        assert_abs_diff_eq!(f0.wxy, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f0.wxz, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f0.wyz, 0.0, epsilon = 1e-15);
        let f1 = psi_from_hat(1.0);
        assert_abs_diff_eq!(f1.wxy, 2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(f1.wxz, -1.0 / 2f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(f1.wyz, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn comass_of_scaled_forms() {
        let g = metric_from_hat(1.7);
        let psi = psi_from_hat(1.7);
        assert_abs_diff_eq!(psi.comass(&g).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(psi.scaled(2.0).comass(&g).unwrap(), 2.0, epsilon = 1e-12);
        assert_eq!(TwoForm3::zero().comass(&g).unwrap(), 0.0);
    }

    /// Round 2-sphere times a line: K(∂θ, ∂φ) = +1, planes containing ∂z are flat.
    #[test]
    fn curvature_sign_on_sphere_product() {
        let metric = |q: &Vector3<f64>| {
            let s = q[0].sin();
            Matrix3::new(1.0, 0.0, 0.0, 0.0, s * s, 0.0, 0.0, 0.0, 1.0)
        };
        let ks = sectional_curvatures_fd(metric, Vector3::new(1.1, 0.3, 0.0), 1e-3, &coordinate_planes());
        assert_abs_diff_eq!(ks[0], 1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(ks[1], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(ks[2], 0.0, epsilon = 1e-6);
    }

    /// Left-invariant Heisenberg metric: horizontal planes have K = −3/4,
    /// planes containing the vertical direction have K = 1/4.
    #[test]
    fn nil_curvature_oracle() {
        let p = params(2.0);
        let x = 0.7;
        let metric = |q: &Vector3<f64>| metric_at_x(q[0], &p).matrix();
        let horizontal = (Vector3::x(), Vector3::new(0.0, 1.0, x));
        let vertical = (Vector3::x(), Vector3::z());
        let ks = sectional_curvatures_fd(metric, Vector3::new(x, 0.0, 0.0), 1e-3, &[horizontal, vertical]);
        assert_abs_diff_eq!(ks[0], -0.75, epsilon = 1e-5);
        assert_abs_diff_eq!(ks[1], 0.25, epsilon = 1e-5);
    }

    #[test]
    fn curvature_bounds_and_j_independence() {
        let (a, b) = (params(2.0), params(4.0));
        let pa = PointTI::new(0.8, 0.1, 0.2, &a).unwrap();
        let pb = PointTI::new(0.8, 0.1, 0.2, &b).unwrap();
        let ka = curvature_at(&pa, &a, 1e-3).unwrap();
        let kb = curvature_at(&pb, &b, 1e-3).unwrap();
        assert!(ka <= 0.76);
        assert!((ka - kb).abs() <= 0.02 * ka);
        let edge = PointTI::new(0.0005, 0.0, 0.0, &a).unwrap();
        assert!(curvature_at(&edge, &a, 1e-3).is_err());
        assert!(curvature_at(&pa, &a, 0.5).is_err());
    }

    #[test]
    fn flat_slab_curvature_vanishes() {
        // x̂ is affine with slope one away from the band, so only the
        // frozen-coefficient metric is flat; check that directly
        let metric = |_: &Vector3<f64>| metric_from_hat(0.0).matrix();
        let ks = sectional_curvatures_fd(metric, Vector3::new(1.0, 0.0, 0.0), 1e-2, fixed_random_planes());
        assert!(ks.iter().all(|k| k.abs() < 1e-4));
    }

    proptest! {
        #[test]
        fn det_is_one(j in 1.0f64..40.0, t in 0.0f64..=1.0, y in -3.0f64..3.0, z in -3.0f64..3.0) {
            let p = params(j);
            let pt = PointTI::new(t * p.length(), y, z, &p).unwrap();
            let g = metric_at(&pt, &p);
            prop_assert!((g.det() - 1.0).abs() < 1e-12 * (1.0 + g.gyy));
            prop_assert!(g.is_positive_definite());
            prop_assert!((0.0..1.0).contains(&pt.y) && (0.0..1.0).contains(&pt.z));
        }

        #[test]
        fn hat_monotone_on_left_half(j in 1.0f64..20.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let p = params(j);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(hat(lo * j, &p).unwrap() <= hat(hi * j, &p).unwrap() + 1e-15);
        }

        #[test]
        fn psi_has_unit_comass(j in 1.0f64..40.0, t in 0.0f64..=1.0) {
            let p = params(j);
            let x = t * p.length();
            let c = psi_at_x(x, &p).comass(&metric_at_x(x, &p)).unwrap();
            prop_assert!((c - 1.0).abs() < 1e-12);
        }
    }
}
