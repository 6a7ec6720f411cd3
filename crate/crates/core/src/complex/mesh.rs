//! Metric-weighted cubical meshes of T²×I and their chains.
//!
//! Vertices sit at `(i·hx, k·hy, l·hz)` with `i ∈ 0..=nx` and `k, l`
//! periodic. Besides the cubical edges in `x`, `y`, `z` the 1-skeleton
//! carries sheared edges `(k, l) → (k + 1, l + m)` for `0 < |m| ≤ K` inside
//! each `x = const` slice: the metric shears the `y` direction by `x̂`, and
//! axis-aligned edges alone cannot follow the short diagonal directions.
//! Sheared edges are straight segments weighted by their exact length, so
//! they never undercut the continuum.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{self, MetricParams, SymmetricBilinear3};

/// The metric a mesh discretizes. Both choices depend on `x` only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MeshMetric {
    TwoCircle(MetricParams),
    /// Flat `[0, length] × T²` control.
    Flat { length: f64 },
}

impl MeshMetric {
    pub fn length(&self) -> f64 {
        match self {
            MeshMetric::TwoCircle(p) => p.length(),
            MeshMetric::Flat { length } => *length,
        }
    }

    pub fn at_x(&self, x: f64) -> SymmetricBilinear3 {
        match self {
            MeshMetric::TwoCircle(p) => metric::metric_at_x(x.clamp(0.0, p.length()), p),
            MeshMetric::Flat { .. } => SymmetricBilinear3::identity(),
        }
    }

    /// Largest shear `x̂` the metric reaches.
    fn max_shear(&self) -> f64 {
        match self {
            MeshMetric::TwoCircle(p) => p.j(),
            MeshMetric::Flat { .. } => 0.0,
        }
    }

    pub fn params(&self) -> Option<&MetricParams> {
        match self {
            MeshMetric::TwoCircle(p) => Some(p),
            MeshMetric::Flat { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeKind {
    X,
    Z,
    /// One step in `y` and `shear` steps in `z`; `Y(0)` is the cubical y-edge.
    Y(i32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FaceKind {
    /// Normal to `x`, spanned by `(y, z)`, oriented `dy∧dz`.
    XNormal,
    /// Normal to `y`, spanned by `(x, z)`, oriented `dx∧dz`.
    YNormal,
    /// Normal to `z`, spanned by `(x, y)`, oriented `dx∧dy`.
    ZNormal,
}

impl FaceKind {
    pub fn axis(self) -> usize {
        match self {
            FaceKind::XNormal => 0,
            FaceKind::YNormal => 1,
            FaceKind::ZNormal => 2,
        }
    }

    /// Sign of `(face orientation) ∧ (unit normal)` against `dx∧dy∧dz`.
    pub fn normal_sign(self) -> i64 {
        match self {
            FaceKind::XNormal | FaceKind::ZNormal => 1,
            FaceKind::YNormal => -1,
        }
    }

    pub fn from_axis(axis: usize) -> Self {
        match axis {
            0 => FaceKind::XNormal,
            1 => FaceKind::YNormal,
            _ => FaceKind::ZNormal,
        }
    }
}

/// Homology class in the torus factor: `a` windings in `z`, `b` in `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WindingClass {
    pub a: i64,
    pub b: i64,
}

impl WindingClass {
    pub const fn new(a: i64, b: i64) -> Self {
        Self { a, b }
    }

    pub fn is_trivial(&self) -> bool {
        self.a == 0 && self.b == 0
    }

    pub fn is_primitive(&self) -> bool {
        gcd(self.a, self.b) == 1
    }

    pub fn scaled(&self, m: i64) -> Self {
        Self::new(self.a * m, self.b * m)
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1)
    }

    /// Representative of `{c, −c}` with the first nonzero entry positive.
    pub fn canonical_sign(&self) -> Self {
        if self.a < 0 || (self.a == 0 && self.b < 0) {
            self.negated()
        } else {
            *self
        }
    }

    pub fn max_abs(&self) -> i64 {
        self.a.abs().max(self.b.abs())
    }
}

impl fmt::Display for WindingClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

pub(crate) fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coefficients {
    Z,
    Z2,
}

/// A chain of cells of one dimension. Indices refer to the mesh's vertex,
/// edge, face or cell numbering according to `dimension`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub dimension: u8,
    pub coefficients: BTreeMap<usize, i64>,
    pub ring: Coefficients,
    /// Boundary may lie on `∂(T²×I)`.
    pub relative: bool,
}

impl Chain {
    pub fn zero(dimension: u8, ring: Coefficients) -> Self {
        Self {
            dimension,
            coefficients: BTreeMap::new(),
            ring,
            relative: false,
        }
    }

    pub fn from_pairs(dimension: u8, ring: Coefficients, pairs: impl IntoIterator<Item = (usize, i64)>) -> Self {
        let mut c = Self::zero(dimension, ring);
        for (i, v) in pairs {
            c.add(i, v);
        }
        c
    }

    pub fn add(&mut self, index: usize, value: i64) {
        let entry = self.coefficients.entry(index).or_insert(0);
        *entry += value;
        if self.ring == Coefficients::Z2 {
            *entry = entry.rem_euclid(2);
        }
        if *entry == 0 {
            self.coefficients.remove(&index);
        }
    }

    pub fn plus(&self, other: &Chain) -> Chain {
        let mut out = self.clone();
        for (&i, &v) in &other.coefficients {
            out.add(i, v);
        }
        out.relative |= other.relative;
        out
    }

    pub fn scaled(&self, k: i64) -> Chain {
        let mut out = Chain {
            coefficients: BTreeMap::new(),
            ..self.clone()
        };
        for (&i, &v) in &self.coefficients {
            out.add(i, k * v);
        }
        out
    }

    pub fn to_z2(&self) -> Chain {
        let mut out = Chain::zero(self.dimension, Coefficients::Z2);
        out.relative = self.relative;
        for (&i, &v) in &self.coefficients {
            out.add(i, v);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        self.coefficients.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CubicalMesh {
    metric: MeshMetric,
    dims: [usize; 3],
    spacing: [f64; 3],
    shear_reach: usize,
    // weights depend on the x-index only; tables are indexed by it
    x_edge_w: Vec<f64>,
    z_edge_w: Vec<f64>,
    y_edge_w: Vec<Vec<f64>>,
    x_face_w: Vec<f64>,
    y_face_w: Vec<f64>,
    z_face_w: Vec<f64>,
    cell_w: Vec<f64>,
}

/// Neighbor step in the 1-skeleton with its winding increments.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Step {
    pub to: usize,
    pub edge: usize,
    /// +1 when traversed along the edge orientation.
    pub dir: i8,
    pub weight: f64,
    pub dwy: i32,
    pub dwz: i32,
}

impl CubicalMesh {
    fn with_metric(metric: MeshMetric, dims: [usize; 3]) -> Result<Self> {
        let [nx, ny, nz] = dims;
        let len = metric.length();
        let spacing = [len / nx as f64, 1.0 / ny as f64, 1.0 / nz as f64];
        let [hx, hy, hz] = spacing;
        let shear_reach = (metric.max_shear() * hy / hz - 1e-9).ceil().max(0.0) as usize;

        let gauss = metric::unit_gauss_rule(2);
        let xv = |i: usize| i as f64 * hx;
        // straight-segment length along a constant vector at fixed x
        let seg = |x: f64, v: [f64; 3]| {
            let v = nalgebra::Vector3::new(v[0], v[1], v[2]);
            metric.at_x(x).norm(&v)
        };

        let x_edge_w = (0..nx)
            .map(|i| gauss.iter().map(|&(t, w)| w * seg(xv(i) + t * hx, [hx, 0.0, 0.0])).sum())
            .collect();
        let z_edge_w = (0..=nx).map(|i| seg(xv(i), [0.0, 0.0, hz])).collect();
        let y_edge_w = (-(shear_reach as i32)..=shear_reach as i32)
            .map(|m| (0..=nx).map(|i| seg(xv(i), [0.0, hy, m as f64 * hz])).collect())
            .collect();

        // area densities of the three coordinate planes
        let density = |x: f64, axis: usize| {
            let g = metric.at_x(x);
            match axis {
                0 => (g.gyy * g.gzz - g.gyz * g.gyz).sqrt(),
                1 => (g.gxx * g.gzz - g.gxz * g.gxz).sqrt(),
                _ => (g.gxx * g.gyy - g.gxy * g.gxy).sqrt(),
            }
        };
        let x_face_w = (0..=nx).map(|i| hy * hz * density(xv(i), 0)).collect();
        let in_x = |i: usize, axis: usize, other: f64| -> f64 {
            gauss.iter().map(|&(t, w)| w * density(xv(i) + t * hx, axis)).sum::<f64>() * hx * other
        };
        let y_face_w = (0..nx).map(|i| in_x(i, 1, hz)).collect();
        let z_face_w = (0..nx).map(|i| in_x(i, 2, hy)).collect();
        let cell_w = (0..nx)
            .map(|i| {
                gauss.iter().map(|&(t, w)| w * metric.at_x(xv(i) + t * hx).det().sqrt()).sum::<f64>() * hx * hy * hz
            })
            .collect();

        Ok(Self {
            metric,
            dims,
            spacing,
            shear_reach,
            x_edge_w,
            z_edge_w,
            y_edge_w,
            x_face_w,
            y_face_w,
            z_face_w,
            cell_w,
        })
    }

    /// Flat `[0, length] × T²` control mesh.
    pub fn flat(length: f64, dims: [usize; 3]) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::arg("flat mesh length must be positive"));
        }
        if dims.iter().any(|&n| n < 2) {
            return Err(Error::arg("flat mesh needs at least 2 cells per axis"));
        }
        Self::with_metric(MeshMetric::Flat { length }, dims)
    }

    pub fn metric(&self) -> &MeshMetric {
        &self.metric
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    /// Largest `|m|` among the sheared edges.
    pub fn shear_reach(&self) -> usize {
        self.shear_reach
    }

    /// Periodicity of the three axes: interval, circle, circle.
    pub fn periodic(&self) -> [bool; 3] {
        [false, true, true]
    }

    pub fn vertex_count(&self) -> usize {
        (self.dims[0] + 1) * self.dims[1] * self.dims[2]
    }

    pub fn vertex_index(&self, i: usize, k: usize, l: usize) -> usize {
        (i * self.dims[1] + k) * self.dims[2] + l
    }

    pub fn vertex_coords(&self, v: usize) -> (usize, usize, usize) {
        let [_, ny, nz] = self.dims;
        (v / (ny * nz), (v / nz) % ny, v % nz)
    }

    /// Coordinates of the vertex in `[0, 2j] × [0, 1)²`.
    pub fn vertex_position(&self, v: usize) -> [f64; 3] {
        let (i, k, l) = self.vertex_coords(v);
        [i as f64 * self.spacing[0], k as f64 * self.spacing[1], l as f64 * self.spacing[2]]
    }

    fn layer(&self) -> usize {
        self.dims[1] * self.dims[2]
    }

    fn edge_block_len(&self, kind: EdgeKind) -> usize {
        match kind {
            EdgeKind::X => self.dims[0] * self.layer(),
            _ => self.vertex_count(),
        }
    }

    fn edge_kinds(&self) -> impl Iterator<Item = EdgeKind> + '_ {
        let k = self.shear_reach as i32;
        [EdgeKind::X, EdgeKind::Y(0), EdgeKind::Z]
            .into_iter()
            .chain((-k..=k).filter(|&m| m != 0).map(EdgeKind::Y))
    }

    fn edge_block_start(&self, kind: EdgeKind) -> usize {
        let mut start = 0;
        for k in self.edge_kinds() {
            if k == kind {
                return start;
            }
            start += self.edge_block_len(k);
        }
        unreachable!("edge kind {kind:?} not present in this mesh")
    }

    pub fn edge_count(&self) -> usize {
        self.edge_kinds().map(|k| self.edge_block_len(k)).sum()
    }

    /// Number of edges of the cubical complex proper (`X`, `Y(0)`, `Z`).
    pub fn cubical_edge_count(&self) -> usize {
        self.dims[0] * self.layer() + 2 * self.vertex_count()
    }

    pub fn edge_index(&self, kind: EdgeKind, i: usize, k: usize, l: usize) -> Option<usize> {
        let [nx, ny, nz] = self.dims;
        let ok = k < ny
            && l < nz
            && match kind {
                EdgeKind::X => i < nx,
                EdgeKind::Y(m) => i <= nx && m.unsigned_abs() as usize <= self.shear_reach,
                EdgeKind::Z => i <= nx,
            };
        ok.then(|| self.edge_block_start(kind) + self.vertex_index(i, k, l))
    }

    pub fn edge_info(&self, e: usize) -> (EdgeKind, usize, usize, usize) {
        let mut start = 0;
        for kind in self.edge_kinds() {
            let len = self.edge_block_len(kind);
            if e < start + len {
                let (i, k, l) = self.vertex_coords(e - start);
                return (kind, i, k, l);
            }
            start += len;
        }
        panic!("edge index {e} out of range");
    }

    pub fn is_cubical_edge(&self, e: usize) -> bool {
        e < self.cubical_edge_count()
    }

    /// Head vertex and winding increments of edge `e` (tail is its base vertex).
    pub fn edge_head(&self, e: usize) -> (usize, i32, i32) {
        let (kind, i, k, l) = self.edge_info(e);
        let [_, ny, nz] = self.dims;
        match kind {
            EdgeKind::X => (self.vertex_index(i + 1, k, l), 0, 0),
            EdgeKind::Z => {
                let lz = l + 1;
                (self.vertex_index(i, k, lz % nz), 0, (lz / nz) as i32)
            }
            EdgeKind::Y(m) => {
                let ky = k + 1;
                let lz = l as i64 + m as i64;
                (
                    self.vertex_index(i, ky % ny, lz.rem_euclid(nz as i64) as usize),
                    (ky / ny) as i32,
                    lz.div_euclid(nz as i64) as i32,
                )
            }
        }
    }

    pub fn edge_endpoints(&self, e: usize) -> (usize, usize) {
        let (kind, i, k, l) = self.edge_info(e);
        let _ = kind;
        (self.vertex_index(i, k, l), self.edge_head(e).0)
    }

    pub fn edge_weight(&self, e: usize) -> f64 {
        let (kind, i, _, _) = self.edge_info(e);
        self.edge_weight_of(kind, i)
    }

    pub(crate) fn edge_weight_of(&self, kind: EdgeKind, i: usize) -> f64 {
        match kind {
            EdgeKind::X => self.x_edge_w[i],
            EdgeKind::Z => self.z_edge_w[i],
            EdgeKind::Y(m) => self.y_edge_w[(m + self.shear_reach as i32) as usize][i],
        }
    }

    fn face_block_len(&self, kind: FaceKind) -> usize {
        match kind {
            FaceKind::XNormal => self.vertex_count(),
            _ => self.dims[0] * self.layer(),
        }
    }

    fn face_block_start(&self, kind: FaceKind) -> usize {
        match kind {
            FaceKind::XNormal => 0,
            FaceKind::YNormal => self.face_block_len(FaceKind::XNormal),
            FaceKind::ZNormal => self.face_block_len(FaceKind::XNormal) + self.face_block_len(FaceKind::YNormal),
        }
    }

    pub fn face_count(&self) -> usize {
        self.vertex_count() + 2 * self.dims[0] * self.layer()
    }

    pub fn face_index(&self, kind: FaceKind, i: usize, k: usize, l: usize) -> Option<usize> {
        let [nx, ny, nz] = self.dims;
        let ok = k < ny
            && l < nz
            && match kind {
                FaceKind::XNormal => i <= nx,
                _ => i < nx,
            };
        ok.then(|| self.face_block_start(kind) + self.vertex_index(i, k, l))
    }

    pub fn face_info(&self, f: usize) -> (FaceKind, usize, usize, usize) {
        for kind in [FaceKind::XNormal, FaceKind::YNormal, FaceKind::ZNormal] {
            let start = self.face_block_start(kind);
            if f < start + self.face_block_len(kind) {
                let (i, k, l) = self.vertex_coords(f - start);
                return (kind, i, k, l);
            }
        }
        panic!("face index {f} out of range");
    }

    pub fn face_weight(&self, f: usize) -> f64 {
        let (kind, i, _, _) = self.face_info(f);
        self.face_weight_of(kind, i)
    }

    pub(crate) fn face_weight_of(&self, kind: FaceKind, i: usize) -> f64 {
        match kind {
            FaceKind::XNormal => self.x_face_w[i],
            FaceKind::YNormal => self.y_face_w[i],
            FaceKind::ZNormal => self.z_face_w[i],
        }
    }

    pub fn cell_count(&self) -> usize {
        self.dims[0] * self.layer()
    }

    pub fn cell_index(&self, i: usize, k: usize, l: usize) -> usize {
        self.vertex_index(i, k, l)
    }

    pub fn cell_coords(&self, c: usize) -> (usize, usize, usize) {
        self.vertex_coords(c)
    }

    pub fn cell_volume(&self, c: usize) -> f64 {
        self.cell_w[self.cell_coords(c).0]
    }

    pub fn total_cell_volume(&self) -> f64 {
        self.cell_w.iter().sum::<f64>() * self.layer() as f64
    }

    /// Distinct x-positions of the vertex slices with their metrics.
    pub(crate) fn slice_metrics(&self) -> Vec<SymmetricBilinear3> {
        (0..=self.dims[0]).map(|i| self.metric.at_x(i as f64 * self.spacing[0])).collect()
    }

    /// Calls `f` for every edge step leaving vertex `v`.
    pub(crate) fn for_each_step(&self, v: usize, f: impl FnMut(Step)) {
        self.steps(v, true, f)
    }

    /// Like [`Self::for_each_step`] but stays inside the vertex's x-slice.
    pub(crate) fn for_each_slice_step(&self, v: usize, f: impl FnMut(Step)) {
        self.steps(v, false, f)
    }

    fn steps(&self, v: usize, include_x: bool, mut f: impl FnMut(Step)) {
        let [nx, ny, nz] = self.dims;
        let (i, k, l) = self.vertex_coords(v);
        if include_x && i < nx {
            let e = self.edge_block_start(EdgeKind::X) + v;
            f(Step { to: v + self.layer(), edge: e, dir: 1, weight: self.x_edge_w[i], dwy: 0, dwz: 0 });
        }
        if include_x && i > 0 {
            let u = v - self.layer();
            let e = self.edge_block_start(EdgeKind::X) + u;
            f(Step { to: u, edge: e, dir: -1, weight: self.x_edge_w[i - 1], dwy: 0, dwz: 0 });
        }
        let zs = self.edge_block_start(EdgeKind::Z);
        let wz = self.z_edge_w[i];
        let (lu, wu) = if l + 1 == nz { (0, 1) } else { (l + 1, 0) };
        f(Step { to: self.vertex_index(i, k, lu), edge: zs + v, dir: 1, weight: wz, dwy: 0, dwz: wu });
        let (ld, wd) = if l == 0 { (nz - 1, -1) } else { (l - 1, 0) };
        let down = self.vertex_index(i, k, ld);
        f(Step { to: down, edge: zs + down, dir: -1, weight: wz, dwy: 0, dwz: wd });

        let reach = self.shear_reach as i64;
        for m in -reach..=reach {
            let kind = EdgeKind::Y(m as i32);
            let start = self.edge_block_start(kind);
            let w = self.y_edge_w[(m + reach) as usize][i];
            // forward: (k, l) → (k + 1, l + m)
            let (kf, wyf) = if k + 1 == ny { (0, 1) } else { (k + 1, 0) };
            let lf = l as i64 + m;
            f(Step {
                to: self.vertex_index(i, kf, lf.rem_euclid(nz as i64) as usize),
                edge: start + v,
                dir: 1,
                weight: w,
                dwy: wyf,
                dwz: lf.div_euclid(nz as i64) as i32,
            });
            // backward along the edge ending here: (k − 1, l − m) → (k, l)
            let (kb, wyb) = if k == 0 { (ny - 1, -1) } else { (k - 1, 0) };
            let lb = l as i64 - m;
            let tail = self.vertex_index(i, kb, lb.rem_euclid(nz as i64) as usize);
            f(Step {
                to: tail,
                edge: start + tail,
                dir: -1,
                weight: w,
                dwy: wyb,
                dwz: lb.div_euclid(nz as i64) as i32,
            });
        }
    }

    /// Total weight of a 1-chain (absolute coefficients).
    pub fn chain_mass(&self, chain: &Chain) -> f64 {
        let w = |i: usize| match chain.dimension {
            0 => 0.0,
            1 => self.edge_weight(i),
            2 => self.face_weight(i),
            _ => self.cell_volume(i),
        };
        chain.coefficients.iter().map(|(&i, &c)| c.unsigned_abs() as f64 * w(i)).sum()
    }

    /// ∂ of a 1-chain (vertex chain).
    pub fn boundary_1(&self, chain: &Chain) -> Chain {
        let mut out = Chain::zero(0, chain.ring);
        for (&e, &c) in &chain.coefficients {
            let (tail, head) = self.edge_endpoints(e);
            out.add(head, c);
            out.add(tail, -c);
        }
        out
    }

    /// ∂ of a 2-chain of faces, as a cubical edge chain.
    pub fn boundary_2(&self, chain: &Chain) -> Chain {
        let [_, ny, nz] = self.dims;
        let mut out = Chain::zero(1, chain.ring);
        out.relative = chain.relative;
        for (&f, &c) in &chain.coefficients {
            let (kind, i, k, l) = self.face_info(f);
            let (k1, l1) = ((k + 1) % ny, (l + 1) % nz);
            let e = |kind, i, k, l| self.edge_index(kind, i, k, l).expect("face edge in range");
            // oriented square a∧b: +e_a(v) + e_b(v+a) − e_a(v+b) − e_b(v)
            let [p, q, r, s] = match kind {
                FaceKind::ZNormal => [
                    e(EdgeKind::X, i, k, l),
                    e(EdgeKind::Y(0), i + 1, k, l),
                    e(EdgeKind::X, i, k1, l),
                    e(EdgeKind::Y(0), i, k, l),
                ],
                FaceKind::YNormal => [
                    e(EdgeKind::X, i, k, l),
                    e(EdgeKind::Z, i + 1, k, l),
                    e(EdgeKind::X, i, k, l1),
                    e(EdgeKind::Z, i, k, l),
                ],
                FaceKind::XNormal => [
                    e(EdgeKind::Y(0), i, k, l),
                    e(EdgeKind::Z, i, k1, l),
                    e(EdgeKind::Y(0), i, k, l1),
                    e(EdgeKind::Z, i, k, l),
                ],
            };
            out.add(p, c);
            out.add(q, c);
            out.add(r, -c);
            out.add(s, -c);
        }
        out
    }

    /// ∂ of a 3-chain of cells, oriented by `dx∧dy∧dz`.
    pub fn boundary_3(&self, chain: &Chain) -> Chain {
        let [_, ny, nz] = self.dims;
        let mut out = Chain::zero(2, chain.ring);
        for (&cell, &c) in &chain.coefficients {
            let (i, k, l) = self.cell_coords(cell);
            let f = |kind, i, k, l| self.face_index(kind, i, k, l).expect("cell face in range");
            // Σ_axis (−1)^axis (F_axis(1) − F_axis(0))
            out.add(f(FaceKind::XNormal, i + 1, k, l), c);
            out.add(f(FaceKind::XNormal, i, k, l), -c);
            out.add(f(FaceKind::YNormal, i, (k + 1) % ny, l), -c);
            out.add(f(FaceKind::YNormal, i, k, l), c);
            out.add(f(FaceKind::ZNormal, i, k, (l + 1) % nz), c);
            out.add(f(FaceKind::ZNormal, i, k, l), -c);
        }
        out
    }

    /// Rewrites sheared edges as cubical staircases (one `y` step, then
    /// `|m|` steps in `z`); homotopic rel endpoints inside the slice.
    pub fn to_cubical(&self, chain: &Chain) -> Chain {
        let nz = self.dims[2];
        let mut out = Chain::zero(1, chain.ring);
        out.relative = chain.relative;
        for (&e, &c) in &chain.coefficients {
            let (kind, i, k, l) = self.edge_info(e);
            match kind {
                EdgeKind::Y(m) if m != 0 => {
                    out.add(self.edge_index(EdgeKind::Y(0), i, k, l).expect("in range"), c);
                    let k1 = (k + 1) % self.dims[1];
                    for s in 0..m.unsigned_abs() as i64 {
                        let lz = if m > 0 { l as i64 + s } else { l as i64 - s - 1 };
                        let idx = self
                            .edge_index(EdgeKind::Z, i, k1, lz.rem_euclid(nz as i64) as usize)
                            .expect("in range");
                        out.add(idx, if m > 0 { c } else { -c });
                    }
                }
                _ => out.add(e, c),
            }
        }
        out
    }
}

/// Builds the metric-weighted mesh of `g_j` at resolution `(nx, ny, nz)`.
pub fn build_mesh(params: &MetricParams, resolution: [usize; 3]) -> Result<CubicalMesh> {
    let [nx, ny, nz] = resolution;
    let min_nx = (4.0 * params.j()).ceil() as usize;
    if nx < min_nx {
        return Err(Error::arg(format!(
            "nx = {nx} too coarse: need at least 4j = {min_nx} (two cells per unit of x)"
        )));
    }
    if ny < 8 || nz < 8 {
        return Err(Error::arg(format!(
            "ny = {ny}, nz = {nz} too coarse: the torus directions need at least 8 cells each"
        )));
    }
    CubicalMesh::with_metric(MeshMetric::TwoCircle(*params), resolution)
}
