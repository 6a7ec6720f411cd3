//! Minimal relative 2-cycles by max-flow/min-cut on the dual graph.
//!
//! The mesh is cut open along the coordinate slice `y = 0` (or `z = 0`).
//! Cells are the dual nodes; every interior face is an arc in both
//! directions with capacity equal to its area. Faces of the slice become a
//! source arc into the cell above it and a sink arc out of the cell below.
//! A finite cut is then exactly a relative 2-cycle in the class dual to
//! `dy` (or `dz`), with boundary free on the two walls `x = 0, 2j`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::cycles::SystoleResult;
use super::flow::FlowNetwork;
use super::mesh::{Chain, Coefficients, CubicalMesh, FaceKind, MeshMetric, WindingClass};
use crate::error::{Error, Result};
use crate::metric::{self, MetricParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DualDirection {
    Dy,
    Dz,
}

impl DualDirection {
    pub fn axis(self) -> usize {
        match self {
            DualDirection::Dy => 1,
            DualDirection::Dz => 2,
        }
    }
}

impl fmt::Display for DualDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DualDirection::Dy => "dy",
            DualDirection::Dz => "dz",
        })
    }
}

impl FromStr for DualDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dy" => Ok(DualDirection::Dy),
            "dz" => Ok(DualDirection::Dz),
            other => Err(Error::arg(format!("unknown dual direction '{other}' (expected dy or dz)"))),
        }
    }
}

/// Dual graph with, per network edge, the face it crosses and the axis
/// direction it runs in (+1 along the axis).
struct DualGraph {
    net: FlowNetwork,
    crossing: Vec<(usize, i64)>,
    source: usize,
    sink: usize,
}

/// Builds the dual graph of the cells with `i ∈ layers`, cut open along the
/// slice normal to `axis` at index 0. X-faces are only used between layers.
fn dual_graph(mesh: &CubicalMesh, axis: usize, layers: std::ops::Range<usize>) -> DualGraph {
    let [_, ny, nz] = mesh.dims();
    let width = layers.len();
    let node = |i: usize, k: usize, l: usize| ((i - layers.start) * ny + k) * nz + l;
    let cells = width * ny * nz;
    let (source, sink) = (cells, cells + 1);
    let mut net = FlowNetwork::new(cells + 2);
    let mut crossing = Vec::new();
    let mut link = |net: &mut FlowNetwork, u: usize, v: usize, face: usize, w: f64, both: bool| {
        net.add_edge(u, v, w, if both { w } else { 0.0 });
        crossing.push((face, 1));
    };
    for i in layers.clone() {
        for k in 0..ny {
            for l in 0..nz {
                let here = node(i, k, l);
                if i + 1 < layers.end {
                    let f = mesh.face_index(FaceKind::XNormal, i + 1, k, l).expect("interior face");
                    link(&mut net, here, node(i + 1, k, l), f, mesh.face_weight(f), true);
                }
                for (ax, kind) in [(1, FaceKind::YNormal), (2, FaceKind::ZNormal)] {
                    let (k1, l1, wraps) = if ax == 1 {
                        ((k + 1) % ny, l, k + 1 == ny)
                    } else {
                        (k, (l + 1) % nz, l + 1 == nz)
                    };
                    let f = mesh.face_index(kind, i, k1, l1).expect("face in range");
                    let w = mesh.face_weight(f);
                    if wraps && ax == axis {
                        link(&mut net, here, sink, f, w, false);
                        link(&mut net, source, node(i, k1, l1), f, w, false);
                    } else {
                        link(&mut net, here, node(i, k1, l1), f, w, true);
                    }
                }
            }
        }
    }
    DualGraph {
        net,
        crossing,
        source,
        sink,
    }
}

/// `∫ ψ` over one face with its canonical orientation (2-point Gauss in x).
fn psi_on_face(mesh: &CubicalMesh, params: &MetricParams, kind: FaceKind, i: usize) -> f64 {
    let [hx, hy, hz] = mesh.spacing();
    let x0 = i as f64 * hx;
    match kind {
        FaceKind::XNormal => hy * hz * metric::psi_at_x(x0, params).wyz,
        FaceKind::YNormal | FaceKind::ZNormal => {
            let along: f64 = metric::unit_gauss_rule(2)
                .iter()
                .map(|&(t, w)| {
                    let psi = metric::psi_at_x(x0 + t * hx, params);
                    w * if kind == FaceKind::YNormal { psi.wxz } else { psi.wxy }
                })
                .sum();
            along * hx * if kind == FaceKind::YNormal { hz } else { hy }
        }
    }
}

/// Pairing of `ψ` with a 2-chain of mesh faces.
pub fn pair_psi_chain(mesh: &CubicalMesh, chain: &Chain) -> Result<f64> {
    let params = mesh
        .metric()
        .params()
        .ok_or_else(|| Error::domain("ψ is only defined on two-circle meshes"))?;
    if chain.dimension != 2 {
        return Err(Error::arg("ψ pairs with 2-chains"));
    }
    Ok(chain
        .coefficients
        .iter()
        .map(|(&f, &c)| {
            let (kind, i, _, _) = mesh.face_info(f);
            c as f64 * psi_on_face(mesh, params, kind, i)
        })
        .sum())
}

/// Minimum-area relative 2-cycle dual to `dy` or `dz`.
///
/// The witness is oriented so that it pairs positively with the slice
/// normal to the chosen direction. For `dz` the certificate is its pairing
/// with `ψ`, a lower bound for every cycle in the class.
pub fn min_relative_2cycle(mesh: &CubicalMesh, dual_direction: DualDirection) -> Result<SystoleResult> {
    let axis = dual_direction.axis();
    let graph = dual_graph(mesh, axis, 0..mesh.dims()[0]);
    let sol = graph.net.max_flow(graph.source, graph.sink)?;
    if !(sol.cut_value > 0.0) {
        return Err(Error::Internal("dual graph disconnects source from sink".into()));
    }
    let mut witness = Chain::zero(2, Coefficients::Z);
    witness.relative = true;
    for &(id, dir) in &sol.cut_edges {
        let (face, along) = graph.crossing[id];
        let (kind, _, _, _) = mesh.face_info(face);
        witness.add(face, kind.normal_sign() * along * dir as i64);
    }
    let certificate = match (dual_direction, mesh.metric()) {
        (DualDirection::Dz, MeshMetric::TwoCircle(_)) => Some(pair_psi_chain(mesh, &witness)?),
        _ => None,
    };
    let class = match dual_direction {
        DualDirection::Dy => WindingClass::new(0, 1),
        DualDirection::Dz => WindingClass::new(1, 0),
    };
    Ok(SystoleResult {
        value: sol.cut_value,
        witness,
        class,
        lower_bound_certificate: certificate,
    })
}

/// Per-layer minimum of the separating curve weight inside each cell layer
/// `x ∈ [x_i, x_{i+1}]`. Any relative 2-cycle in the class meets every layer
/// in a separating curve, so its area is at least the sum.
pub fn coarea_slab_bound(mesh: &CubicalMesh, dual_direction: DualDirection) -> Result<Vec<f64>> {
    (0..mesh.dims()[0])
        .map(|i| {
            let graph = dual_graph(mesh, dual_direction.axis(), i..i + 1);
            Ok(graph.net.max_flow(graph.source, graph.sink)?.cut_value)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::mesh::{build_mesh, EdgeKind};
    use approx::assert_abs_diff_eq;

    fn calibrated_area(j: f64) -> f64 {
        j * (1.0 + j * j).sqrt() + j.asinh()
    }

    fn on_wall(mesh: &CubicalMesh, e: usize) -> bool {
        let (kind, i, _, _) = mesh.edge_info(e);
        kind != EdgeKind::X && (i == 0 || i == mesh.dims()[0])
    }

    #[test]
    fn dz_cut_matches_calibrated_area() {
        let p = MetricParams::with_j(2.0).unwrap();
        let mesh = build_mesh(&p, [32, 16, 16]).unwrap();
        let cut = min_relative_2cycle(&mesh, DualDirection::Dz).unwrap();
        let cert = cut.lower_bound_certificate.unwrap();
        assert!(cut.value >= cert - 1e-6, "{} < {}", cut.value, cert);
        assert!((cut.value / calibrated_area(2.0) - 1.0).abs() < 0.1, "{}", cut.value);
        assert_abs_diff_eq!(mesh.chain_mass(&cut.witness), cut.value, epsilon = 1e-9);
        let boundary = mesh.boundary_2(&cut.witness);
        assert!(boundary.support().iter().all(|&e| on_wall(&mesh, e)));
    }

    #[test]
    fn dy_cut_is_two_j() {
        let p = MetricParams::with_j(2.0).unwrap();
        let mesh = build_mesh(&p, [32, 16, 16]).unwrap();
        let cut = min_relative_2cycle(&mesh, DualDirection::Dy).unwrap();
        assert!((cut.value / 4.0 - 1.0).abs() < 0.05, "{}", cut.value);
        assert!(cut.lower_bound_certificate.is_none());
        let boundary = mesh.boundary_2(&cut.witness);
        assert!(boundary.support().iter().all(|&e| on_wall(&mesh, e)));
    }

    #[test]
    fn coarea_bound_holds_for_witness() {
        let p = MetricParams::with_j(2.0).unwrap();
        let mesh = build_mesh(&p, [16, 16, 16]).unwrap();
        let cut = min_relative_2cycle(&mesh, DualDirection::Dz).unwrap();
        let layers = coarea_slab_bound(&mesh, DualDirection::Dz).unwrap();
        assert_eq!(layers.len(), 16);
        let total: f64 = layers.iter().sum();
        assert!(mesh.chain_mass(&cut.witness) >= total - 1e-9);
    }

    #[test]
    fn flat_cut_is_coordinate_area() {
        let mesh = CubicalMesh::flat(3.0, [6, 8, 8]).unwrap();
        let cut = min_relative_2cycle(&mesh, DualDirection::Dz).unwrap();
        assert_abs_diff_eq!(cut.value, 3.0, epsilon = 1e-9);
        assert!(cut.lower_bound_certificate.is_none());
    }

    #[test]
    fn direction_parses() {
        assert_eq!("dz".parse::<DualDirection>().unwrap(), DualDirection::Dz);
        assert!("dx".parse::<DualDirection>().is_err());
    }
}
