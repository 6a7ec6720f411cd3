//! Shortest homologically nontrivial 1-cycles, stable-norm brackets and
//! ball masses.
//!
//! Cycle searches run Dijkstra on the Z²-cover of the mesh: a state is a
//! vertex plus its accumulated windings `(wy, wz)`, and a closed lift of a
//! loop through the base vertex ends at `(base, wy, wz)`. The mesh is
//! invariant under the fiber translations, so one base vertex per x-slice
//! suffices, and each search only visits slices at or above its base (every
//! cycle is found from its lowest slice).

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;

use super::mesh::{gcd, Chain, Coefficients, CubicalMesh, EdgeKind, WindingClass};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_WINDING: usize = 2;

#[derive(Debug, Clone, Serialize)]
pub struct SystoleResult {
    pub value: f64,
    pub witness: Chain,
    pub class: WindingClass,
    /// Calibration lower bound, when one is available for the problem.
    pub lower_bound_certificate: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StableNormBounds {
    pub lb: f64,
    pub ub: f64,
    /// Multiple `m` and split `m·target = α + β` attaining `ub`.
    pub best_multiple: i64,
    pub decomposition: [WindingClass; 2],
    /// `(c, c′)` of the closed form `c·dz + c′·dy` attaining `lb`.
    pub dual_form: (f64, f64),
}

pub(crate) fn tie_tol(x: f64) -> f64 {
    1e-12 * x.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct HeapItem {
    pub d: f64,
    pub key: u64,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    // reversed: BinaryHeap pops the smallest distance, then smallest key
    fn cmp(&self, other: &Self) -> Ordering {
        other.d.total_cmp(&self.d).then_with(|| other.key.cmp(&self.key))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const W_OFF: i64 = 1 << 15;
const W_LIMIT: i32 = (1 << 15) - 2;

fn pack(v: usize, wy: i32, wz: i32) -> u64 {
    v as u64 | ((wy as i64 + W_OFF) as u64) << 32 | ((wz as i64 + W_OFF) as u64) << 48
}

fn unpack(key: u64) -> (usize, i32, i32) {
    let v = (key & 0xffff_ffff) as usize;
    let wy = ((key >> 32) & 0xffff) as i64 - W_OFF;
    let wz = (key >> 48) as i64 - W_OFF;
    (v, wy as i32, wz as i32)
}

#[derive(Debug, Clone)]
struct Found {
    length: f64,
    wy: i32,
    wz: i32,
    chain: Chain,
    support: Vec<usize>,
}

fn prefer(a: &Found, b: &Found) -> bool {
    let t = tie_tol(b.length);
    if a.length < b.length - t {
        true
    } else if a.length > b.length + t {
        false
    } else {
        a.support < b.support
    }
}

fn keep_better(best: &mut Option<Found>, cand: Found) {
    if best.as_ref().is_none_or(|b| prefer(&cand, b)) {
        *best = Some(cand);
    }
}

fn trace(pred: &FxHashMap<u64, (u64, usize, i8)>, mut key: u64, start: u64) -> Chain {
    let mut chain = Chain::zero(1, Coefficients::Z);
    while key != start {
        let (prev, edge, dir) = pred[&key];
        chain.add(edge, dir as i64);
        key = prev;
    }
    chain
}

type Goal = dyn Fn(i32, i32) -> bool + Sync;

fn cover_search(mesh: &CubicalMesh, base: usize, bound: f64, goal: &Goal) -> Option<Found> {
    let i0 = mesh.vertex_coords(base).0;
    let start = pack(base, 0, 0);
    let mut dist: FxHashMap<u64, f64> = FxHashMap::default();
    let mut pred: FxHashMap<u64, (u64, usize, i8)> = FxHashMap::default();
    let mut heap = BinaryHeap::new();
    dist.insert(start, 0.0);
    heap.push(HeapItem { d: 0.0, key: start });
    let mut limit = bound;
    let mut best = None;

    while let Some(HeapItem { d, key }) = heap.pop() {
        if d > limit + tie_tol(limit) {
            break;
        }
        if d > dist[&key] {
            continue;
        }
        let (v, wy, wz) = unpack(key);
        if v == base && (wy, wz) != (0, 0) && goal(wy, wz) {
            let chain = trace(&pred, key, start);
            let support = chain.support();
            keep_better(&mut best, Found { length: d, wy, wz, chain, support });
            limit = limit.min(d);
            // a longer walk through here splits into two loops, one of them already shorter
            continue;
        }
        let cap = limit + tie_tol(limit);
        mesh.for_each_step(v, |s| {
            if mesh.vertex_coords(s.to).0 < i0 {
                return;
            }
            let nd = d + s.weight;
            if nd > cap {
                return;
            }
            let (nwy, nwz) = (wy + s.dwy, wz + s.dwz);
            if nwy.abs() >= W_LIMIT || nwz.abs() >= W_LIMIT {
                return;
            }
            let nk = pack(s.to, nwy, nwz);
            if dist.get(&nk).is_none_or(|&old| nd < old) {
                dist.insert(nk, nd);
                pred.insert(nk, (key, s.edge, s.dir));
                heap.push(HeapItem { d: nd, key: nk });
            }
        });
    }
    best
}

fn search_all_bases(mesh: &CubicalMesh, bound: f64, goal: &Goal) -> Option<Found> {
    let nx = mesh.dims()[0];
    let found: Vec<Option<Found>> = (0..=nx)
        .into_par_iter()
        .map(|i| cover_search(mesh, mesh.vertex_index(i, 0, 0), bound, goal))
        .collect();
    let mut best = None;
    for f in found.into_iter().flatten() {
        keep_better(&mut best, f);
    }
    best
}

/// Length of the cheapest straight fiber circle: an upper bound for sys₁.
fn fiber_circle_bound(mesh: &CubicalMesh) -> f64 {
    let [nx, ny, nz] = mesh.dims();
    (0..=nx)
        .flat_map(|i| {
            [
                (0..nz).map(|_| mesh.edge_weight_of(EdgeKind::Z, i)).sum::<f64>(),
                (0..ny).map(|_| mesh.edge_weight_of(EdgeKind::Y(0), i)).sum::<f64>(),
            ]
        })
        .fold(f64::INFINITY, f64::min)
}

/// Shortest closed edge path over all primitive classes `(a, b)` with
/// `max(|a|, |b|) ≤ max_winding`.
pub fn shortest_nontrivial_cycle(mesh: &CubicalMesh, max_winding: usize) -> Result<SystoleResult> {
    if max_winding == 0 {
        return Err(Error::arg("max_winding must be at least 1"));
    }
    let w = max_winding.min(W_LIMIT as usize) as i32;
    let goal = move |wy: i32, wz: i32| wy.abs() <= w && wz.abs() <= w && gcd(wy as i64, wz as i64) == 1;
    let bound = fiber_circle_bound(mesh);
    let best = search_all_bases(mesh, bound, &goal)
        .ok_or_else(|| Error::Internal("no nontrivial cycle within the fiber-circle bound".into()))?;
    // report the class with its first nonzero winding positive
    let class = WindingClass::new(best.wz as i64, best.wy as i64);
    let (class, witness) = if class == class.canonical_sign() {
        (class, best.chain)
    } else {
        (class.negated(), best.chain.scaled(-1))
    };
    Ok(SystoleResult {
        value: best.length,
        witness,
        class,
        lower_bound_certificate: None,
    })
}

/// Shortest closed edge path in one class, searched in the full 3D cover.
pub fn shortest_cycle_in_class(mesh: &CubicalMesh, class: WindingClass) -> Result<SystoleResult> {
    if class.is_trivial() {
        return Err(Error::arg("class must be nonzero"));
    }
    if class.max_abs() >= W_LIMIT as i64 {
        return Err(Error::arg(format!("class {class} exceeds the winding range")));
    }
    let bound = SlabOracle::new(mesh).length(class);
    let (a, b) = (class.a as i32, class.b as i32);
    let goal = move |wy: i32, wz: i32| wy == b && wz == a;
    let best = search_all_bases(mesh, bound, &goal)
        .ok_or_else(|| Error::Internal(format!("class {class} not realized within its slab bound")))?;
    Ok(SystoleResult {
        value: best.length,
        witness: best.chain,
        class,
        lower_bound_certificate: None,
    })
}

/// One x-slice of the mesh, a flat torus with metric `gyy dy² + 2gyz dy dz + gzz dz²`.
#[derive(Debug, Clone)]
struct Slab {
    index: usize,
    q: [f64; 3],
    g: Matrix3<f64>,
}

impl Slab {
    fn norm(&self, c: WindingClass) -> f64 {
        let (dy, dz) = (c.b as f64, c.a as f64);
        self.norm_f(dy, dz)
    }

    fn norm_f(&self, dy: f64, dz: f64) -> f64 {
        let [gyy, gyz, gzz] = self.q;
        (gyy * dy * dy + 2.0 * gyz * dy * dz + gzz * dz * dz).max(0.0).sqrt()
    }
}

/// Shortest slab-confined representatives, cached by class up to sign.
struct SlabOracle<'a> {
    mesh: &'a CubicalMesh,
    slabs: Vec<Slab>,
    cache: HashMap<WindingClass, f64>,
}

impl<'a> SlabOracle<'a> {
    fn new(mesh: &'a CubicalMesh) -> Self {
        let mut slabs: Vec<Slab> = Vec::new();
        for (index, g) in mesh.slice_metrics().into_iter().enumerate() {
            let q = [g.gyy, g.gyz, g.gzz];
            let same = |s: &Slab| s.q.iter().zip(&q).all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0));
            if !slabs.iter().any(same) {
                slabs.push(Slab { index, q, g: g.matrix() });
            }
        }
        Self {
            mesh,
            slabs,
            cache: HashMap::new(),
        }
    }

    fn continuum(&self, c: WindingClass) -> f64 {
        self.slabs.iter().map(|s| s.norm(c)).fold(f64::INFINITY, f64::min)
    }

    fn length(&mut self, c: WindingClass) -> f64 {
        if c.is_trivial() {
            return 0.0;
        }
        let key = c.canonical_sign();
        if let Some(&l) = self.cache.get(&key) {
            return l;
        }
        let mut order: Vec<(f64, usize)> = self.slabs.iter().enumerate().map(|(n, s)| (s.norm(key), n)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut best = f64::INFINITY;
        for (lower, n) in order {
            if lower >= best - tie_tol(best) {
                break;
            }
            if let Some(l) = slab_astar(self.mesh, &self.slabs[n], key, best) {
                best = best.min(l);
            }
        }
        self.cache.insert(key, best);
        best
    }
}

/// A* inside one slice from `(i, 0, 0)` to its translate by `class`.
fn slab_astar(mesh: &CubicalMesh, slab: &Slab, class: WindingClass, bound: f64) -> Option<f64> {
    let [_, hy, hz] = mesh.spacing();
    let base = mesh.vertex_index(slab.index, 0, 0);
    let goal = pack(base, class.b as i32, class.a as i32);
    let h = |v: usize, wy: i32, wz: i32| {
        let (_, k, l) = mesh.vertex_coords(v);
        slab.norm_f(class.b as f64 - (k as f64 * hy + wy as f64), class.a as f64 - (l as f64 * hz + wz as f64))
    };
    let start = pack(base, 0, 0);
    let mut dist: FxHashMap<u64, f64> = FxHashMap::default();
    let mut heap = BinaryHeap::new();
    dist.insert(start, 0.0);
    heap.push(HeapItem { d: h(base, 0, 0), key: start });
    let cap = if bound.is_finite() { bound + tie_tol(bound) } else { f64::INFINITY };

    while let Some(HeapItem { d: f, key }) = heap.pop() {
        if f > cap {
            return None;
        }
        let (v, wy, wz) = unpack(key);
        let g = dist[&key];
        if key == goal {
            return Some(g);
        }
        if f > g + h(v, wy, wz) + tie_tol(f) {
            continue;
        }
        mesh.for_each_slice_step(v, |s| {
            let ng = g + s.weight;
            let (nwy, nwz) = (wy + s.dwy, wz + s.dwz);
            if nwy.abs() >= W_LIMIT || nwz.abs() >= W_LIMIT {
                return;
            }
            let nk = pack(s.to, nwy, nwz);
            if dist.get(&nk).is_none_or(|&old| ng < old) {
                let nf = ng + h(s.to, nwy, nwz);
                if nf <= cap {
                    dist.insert(nk, ng);
                    heap.push(HeapItem { d: nf, key: nk });
                }
            }
        });
    }
    None
}

/// Bracket for the stable norm of `target`.
///
/// `ub` is the best of: the shortest 3D cycle in the class; and, for every
/// multiple `m ≤ max_multiple`, splits `m·target = α + β` with each term
/// realized in its cheapest slice, divided by `m`. `lb` maximizes the pairing
/// with `target` over closed forms `c·dz + c′·dy` whose dual norm is at most
/// one on every slice, which bounds every edge length from below.
pub fn stable_norm_bounds(mesh: &CubicalMesh, target: WindingClass, max_multiple: usize) -> Result<StableNormBounds> {
    if target.is_trivial() {
        return Err(Error::arg("stable norm target must be a nonzero class"));
    }
    if max_multiple == 0 {
        return Err(Error::arg("max_multiple must be at least 1"));
    }
    let zero = WindingClass::new(0, 0);
    let mut oracle = SlabOracle::new(mesh);
    let mut ub = oracle.length(target);
    let mut best_multiple = 1;
    let mut decomposition = [target, zero];

    let direct = shortest_cycle_in_class(mesh, target)?;
    if direct.value < ub {
        ub = direct.value;
    }

    // envelope of the slab norms: Q = gzz (a − s b)² + ρ b²
    let shear: Vec<f64> = oracle.slabs.iter().map(|s| -s.q[1] / s.q[2]).collect();
    let s_min = shear.iter().copied().fold(f64::INFINITY, f64::min);
    let s_max = shear.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sigma = oracle.slabs.iter().map(|s| s.q[2].sqrt()).fold(f64::INFINITY, f64::min);
    let rho = oracle
        .slabs
        .iter()
        .map(|s| (s.q[0] - s.q[1] * s.q[1] / s.q[2]).max(0.0).sqrt())
        .fold(f64::INFINITY, f64::min);

    for m in 1..=max_multiple as i64 {
        let t = target.scaled(m);
        let budget = m as f64 * ub;
        let b_reach = (budget / rho).floor() as i64;
        let a_slack = budget / sigma;
        let a_window = |b: i64| {
            let (p, q) = (s_min * b as f64, s_max * b as f64);
            ((p.min(q) - a_slack).floor() as i64, (p.max(q) + a_slack).ceil() as i64)
        };
        let mut cands: Vec<(f64, WindingClass)> = Vec::new();
        let b_lo = (-b_reach).max(t.b - b_reach);
        let b_hi = b_reach.min(t.b + b_reach);
        for b1 in b_lo..=b_hi {
            let (lo1, hi1) = a_window(b1);
            let (lo2, hi2) = a_window(t.b - b1);
            let lo = lo1.max(t.a - hi2);
            let hi = hi1.min(t.a - lo2);
            for a1 in lo..=hi {
                let alpha = WindingClass::new(a1, b1);
                let beta = WindingClass::new(t.a - a1, t.b - b1);
                if alpha > beta {
                    continue;
                }
                let c = oracle.continuum(alpha) + oracle.continuum(beta);
                if c < budget - tie_tol(budget) {
                    cands.push((c, alpha));
                }
            }
        }
        cands.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        for (c, alpha) in cands {
            let budget = m as f64 * ub;
            if c >= budget - tie_tol(budget) {
                break;
            }
            let beta = WindingClass::new(t.a - alpha.a, t.b - alpha.b);
            let la = oracle.length(alpha);
            if la + oracle.continuum(beta) >= budget {
                continue;
            }
            let total = la + oracle.length(beta);
            if total / (m as f64) < ub - tie_tol(ub) {
                ub = total / m as f64;
                best_multiple = m;
                decomposition = [alpha, beta];
            }
        }
    }

    let (lb, dual_form) = dual_lower_bound(&oracle.slabs, target);
    Ok(StableNormBounds {
        lb,
        ub,
        best_multiple,
        decomposition,
        dual_form,
    })
}

fn dual_lower_bound(slabs: &[Slab], target: WindingClass) -> (f64, (f64, f64)) {
    let inverses: Vec<Matrix3<f64>> = slabs
        .iter()
        .map(|s| s.g.try_inverse().expect("slice metrics are positive definite"))
        .collect();
    let dual_norm = |c: f64, cp: f64| {
        let w = Vector3::new(0.0, cp, c);
        inverses.iter().map(|ginv| w.dot(&(ginv * w)).max(0.0).sqrt()).fold(0.0, f64::max)
    };
    let value = |theta: f64| {
        let (c, cp) = (theta.cos(), theta.sin());
        (c * target.a as f64 + cp * target.b as f64) / dual_norm(c, cp)
    };
    let n = 3600;
    let step = std::f64::consts::TAU / n as f64;
    let mut best_theta = 0.0;
    let mut best = f64::NEG_INFINITY;
    for s in 0..n {
        let th = s as f64 * step;
        let v = value(th);
        if v > best {
            best = v;
            best_theta = th;
        }
    }
    // golden-section refinement around the grid maximum
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best_theta - step, best_theta + step);
    for _ in 0..80 {
        let x1 = hi - phi * (hi - lo);
        let x2 = lo + phi * (hi - lo);
        if value(x1) < value(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    let mid = 0.5 * (lo + hi);
    if value(mid) > best {
        best = value(mid);
        best_theta = mid;
    }
    let (c, cp) = (best_theta.cos(), best_theta.sin());
    let n = dual_norm(c, cp);
    (best.max(0.0), (c / n, cp / n))
}

/// Dijkstra distances from `source` up to `bound` in the mesh graph.
pub(crate) fn vertex_distances(mesh: &CubicalMesh, source: usize, bound: f64) -> FxHashMap<usize, f64> {
    let mut dist: FxHashMap<usize, f64> = FxHashMap::default();
    let mut heap = BinaryHeap::new();
    dist.insert(source, 0.0);
    heap.push(HeapItem { d: 0.0, key: source as u64 });
    while let Some(HeapItem { d, key }) = heap.pop() {
        let v = key as usize;
        if d > dist[&v] {
            continue;
        }
        mesh.for_each_step(v, |s| {
            let nd = d + s.weight;
            if nd <= bound && dist.get(&s.to).is_none_or(|&old| nd < old) {
                dist.insert(s.to, nd);
                heap.push(HeapItem { d: nd, key: s.to as u64 });
            }
        });
    }
    dist
}

/// Weight of `chain` inside the graph-metric ball of radius `r` about `center`.
///
/// An edge `uv` of weight `w` contributes the measure of its points within
/// `r` of the center through either endpoint, `min(w, (r − d_u)⁺ + (r − d_v)⁺)`.
pub fn ball_mass(chain: &Chain, center: usize, r: f64, mesh: &CubicalMesh) -> Result<f64> {
    if chain.dimension != 1 {
        return Err(Error::arg("ball_mass needs a 1-chain"));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::arg(format!("radius {r} outside [0, 1)")));
    }
    if center >= mesh.vertex_count() {
        return Err(Error::arg(format!("center {center} is not a vertex")));
    }
    let on_chain = chain.coefficients.keys().any(|&e| {
        let (u, v) = mesh.edge_endpoints(e);
        u == center || v == center
    });
    if !on_chain {
        return Err(Error::arg(format!("center {center} is not on the chain")));
    }
    let dist = vertex_distances(mesh, center, r);
    let reach = |v: usize| dist.get(&v).map_or(0.0, |&d| (r - d).max(0.0));
    Ok(chain
        .coefficients
        .iter()
        .map(|(&e, &c)| {
            let (u, v) = mesh.edge_endpoints(e);
            let w = mesh.edge_weight(e);
            c.unsigned_abs() as f64 * w.min(reach(u) + reach(v))
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::mesh::build_mesh;
    use crate::metric::MetricParams;
    use approx::assert_abs_diff_eq;

    fn z_circle(mesh: &CubicalMesh, i: usize, k: usize) -> Chain {
        let nz = mesh.dims()[2];
        Chain::from_pairs(1, Coefficients::Z, (0..nz).map(|l| (mesh.edge_index(EdgeKind::Z, i, k, l).unwrap(), 1)))
    }

    #[test]
    fn pack_round_trips() {
        for &(v, wy, wz) in &[(0, 0, 0), (12345, -3, 7), (99, 100, -100)] {
            assert_eq!(unpack(pack(v, wy, wz)), (v, wy, wz));
        }
    }

    #[test]
    fn flat_torus_systole_is_one() {
        let mesh = CubicalMesh::flat(1.0, [4, 8, 8]).unwrap();
        let s = shortest_nontrivial_cycle(&mesh, 2).unwrap();
        assert_abs_diff_eq!(s.value, 1.0, epsilon = mesh.spacing()[1]);
        assert!(mesh.boundary_1(&s.witness).is_zero());
        assert!(s.class.max_abs() == 1 && s.class.is_primitive());
    }

    #[test]
    fn zero_winding_rejected() {
        let mesh = CubicalMesh::flat(1.0, [4, 8, 8]).unwrap();
        assert!(matches!(shortest_nontrivial_cycle(&mesh, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn two_circle_systole_near_one() {
        let p = MetricParams::with_j(2.0).unwrap();
        let mesh = build_mesh(&p, [16, 16, 16]).unwrap();
        let s = shortest_nontrivial_cycle(&mesh, 2).unwrap();
        assert!((s.value - 1.0).abs() < 0.05, "{}", s.value);
        assert!(mesh.boundary_1(&s.witness).is_zero());
        assert_abs_diff_eq!(mesh.chain_mass(&s.witness), s.value, epsilon = 1e-9);
        assert!([WindingClass::new(1, 0), WindingClass::new(0, 1)].contains(&s.class.canonical_sign()));
    }

    #[test]
    fn class_search_matches_continuum_on_flat_mesh() {
        let mesh = CubicalMesh::flat(1.0, [4, 8, 8]).unwrap();
        // no diagonals: the (1,1) class costs 2 in the taxicab lattice
        let s = shortest_cycle_in_class(&mesh, WindingClass::new(1, 1)).unwrap();
        assert_abs_diff_eq!(s.value, 2.0, epsilon = 1e-12);
        assert_eq!(s.class, WindingClass::new(1, 1));
    }

    #[test]
    fn slab_astar_hits_sheared_diagonal() {
        let p = MetricParams::new(2.0, 0.0).unwrap();
        let mesh = build_mesh(&p, [16, 16, 16]).unwrap();
        let mut oracle = SlabOracle::new(&mesh);
        // (2,1) is straight at x̂ = 2 with length 1
        assert_abs_diff_eq!(oracle.length(WindingClass::new(2, 1)), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(oracle.length(WindingClass::new(-2, -1)), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(oracle.length(WindingClass::new(0, 1)), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn stable_norm_of_y_class() {
        let p = MetricParams::with_j(2.0).unwrap();
        let mesh = build_mesh(&p, [16, 16, 16]).unwrap();
        let b = stable_norm_bounds(&mesh, WindingClass::new(0, 1), 4).unwrap();
        assert!((b.ub - 1.0).abs() < 0.05 && (b.lb - 1.0).abs() < 0.05, "{b:?}");
        assert!(b.lb <= b.ub + 1e-12);
    }

    #[test]
    fn stable_norm_collapses_for_z_class() {
        let p = MetricParams::with_j(4.0).unwrap();
        let mesh = build_mesh(&p, [32, 16, 16]).unwrap();
        let b = stable_norm_bounds(&mesh, WindingClass::new(1, 0), 16).unwrap();
        assert!(b.ub <= 0.55, "{b:?}");
        assert!(b.lb >= 1.0 / 17f64.sqrt() - 1e-12, "{b:?}");
        assert!(b.lb <= b.ub);
        let [alpha, beta] = b.decomposition;
        assert_eq!(
            WindingClass::new(alpha.a + beta.a, alpha.b + beta.b),
            WindingClass::new(1, 0).scaled(b.best_multiple)
        );
    }

    #[test]
    fn trivial_target_rejected() {
        let mesh = CubicalMesh::flat(1.0, [4, 8, 8]).unwrap();
        assert!(stable_norm_bounds(&mesh, WindingClass::new(0, 0), 4).is_err());
    }

    #[test]
    fn ball_mass_of_straight_circle() {
        let p = MetricParams::with_j(1.0).unwrap();
        let mesh = build_mesh(&p, [8, 8, 16]).unwrap();
        let c = z_circle(&mesh, 0, 0);
        let center = mesh.vertex_index(0, 0, 0);
        let m = ball_mass(&c, center, 0.3, &mesh).unwrap();
        assert_abs_diff_eq!(m, 0.6, epsilon = mesh.spacing()[2]);
        assert_abs_diff_eq!(ball_mass(&c, center, 0.0, &mesh).unwrap(), 0.0);
        assert!(ball_mass(&c, center, 1e-3, &mesh).unwrap() <= 2e-3 + 1e-15);
    }

    #[test]
    fn ball_mass_rejects_foreign_center() {
        let mesh = CubicalMesh::flat(1.0, [4, 8, 8]).unwrap();
        let c = z_circle(&mesh, 0, 0);
        assert!(ball_mass(&c, mesh.vertex_index(2, 3, 3), 0.2, &mesh).is_err());
        assert!(ball_mass(&c, mesh.vertex_index(0, 0, 0), 1.5, &mesh).is_err());
    }
}
