//! Algebraic intersection of 1-cycles with relative 2-cycles.
//!
//! The 1-cycle is pushed half a cell along `(±1, 1, 1)` into the dual
//! lattice, where every edge pierces exactly one face transversally. The
//! x-shift points away from whichever wall the cycle touches.

use super::mesh::{Chain, CubicalMesh, EdgeKind, FaceKind};
use crate::error::{Error, Result};

fn check_inputs(c1: &Chain, c2: &Chain, mesh: &CubicalMesh) -> Result<()> {
    if c1.dimension != 1 || c2.dimension != 2 {
        return Err(Error::arg("intersection pairs a 1-chain with a 2-chain"));
    }
    if !mesh.boundary_1(c1).is_zero() {
        return Err(Error::arg("first argument is not a cycle"));
    }
    let nx = mesh.dims()[0];
    let loose = mesh.boundary_2(c2).support().into_iter().any(|e| {
        let (kind, i, _, _) = mesh.edge_info(e);
        kind == EdgeKind::X || (i != 0 && i != nx)
    });
    if loose {
        return Err(Error::arg("second argument is not a relative cycle"));
    }
    Ok(())
}

/// Signed count of crossings of `c1` through the faces of `c2`.
pub fn intersection_number(c1: &Chain, c2: &Chain, mesh: &CubicalMesh) -> Result<i64> {
    check_inputs(c1, c2, mesh)?;
    let [nx, ny, nz] = mesh.dims();
    let c1 = mesh.to_cubical(c1);
    let mut low = false;
    let mut high = false;
    for &e in c1.coefficients.keys() {
        let (tail, head) = mesh.edge_endpoints(e);
        for v in [tail, head] {
            let i = mesh.vertex_coords(v).0;
            low |= i == 0;
            high |= i == nx;
        }
    }
    let shift_down = match (low, high) {
        (true, true) => {
            return Err(Error::domain(
                "cycle meets both walls; no half-cell shift makes it transverse",
            ))
        }
        (_, true) => true,
        _ => false,
    };
    let mut total = 0;
    for (&e, &c) in &c1.coefficients {
        let (kind, i, k, l) = mesh.edge_info(e);
        let cell_i = if shift_down { i - 1 } else { i };
        let (face_kind, fi, fk, fl) = match kind {
            EdgeKind::X => (FaceKind::XNormal, cell_i + 1, k, l),
            EdgeKind::Y(_) => (FaceKind::YNormal, cell_i, (k + 1) % ny, l),
            EdgeKind::Z => (FaceKind::ZNormal, cell_i, k, (l + 1) % nz),
        };
        let f = mesh.face_index(face_kind, fi, fk, fl).expect("shifted face in range");
        if let Some(&d) = c2.coefficients.get(&f) {
            total += c * d * face_kind.normal_sign();
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::cut::{min_relative_2cycle, DualDirection};
    use crate::complex::mesh::{build_mesh, Coefficients};
    use crate::metric::MetricParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z_circle(mesh: &CubicalMesh, i: usize, k: usize) -> Chain {
        let nz = mesh.dims()[2];
        Chain::from_pairs(1, Coefficients::Z, (0..nz).map(|l| (mesh.edge_index(EdgeKind::Z, i, k, l).unwrap(), 1)))
    }

    fn y_circle(mesh: &CubicalMesh, i: usize, l: usize) -> Chain {
        let ny = mesh.dims()[1];
        Chain::from_pairs(1, Coefficients::Z, (0..ny).map(|k| (mesh.edge_index(EdgeKind::Y(0), i, k, l).unwrap(), 1)))
    }

    /// Brute force: the slice {z = 0} with all faces oriented dx∧dy.
    fn z_slice(mesh: &CubicalMesh) -> Chain {
        let [nx, ny, _] = mesh.dims();
        let mut c = Chain::zero(2, Coefficients::Z);
        c.relative = true;
        for i in 0..nx {
            for k in 0..ny {
                c.add(mesh.face_index(FaceKind::ZNormal, i, k, 0).unwrap(), 1);
            }
        }
        c
    }

    #[test]
    fn pairings_on_small_mesh() {
        let mesh = CubicalMesh::flat(1.0, [4, 4, 4]).unwrap();
        let dz = min_relative_2cycle(&mesh, DualDirection::Dz).unwrap().witness;
        let dy = min_relative_2cycle(&mesh, DualDirection::Dy).unwrap().witness;
        let zc = z_circle(&mesh, 2, 1);
        let yc = y_circle(&mesh, 2, 1);
        assert_eq!(intersection_number(&zc, &z_slice(&mesh), &mesh).unwrap(), 1);
        assert_eq!(intersection_number(&zc, &dz, &mesh).unwrap().abs(), 1);
        assert_eq!(intersection_number(&zc, &dy, &mesh).unwrap(), 0);
        assert_eq!(intersection_number(&yc, &dy, &mesh).unwrap().abs(), 1);
        assert_eq!(intersection_number(&yc, &dz, &mesh).unwrap(), 0);
        let doubled = zc.scaled(2);
        assert_eq!(intersection_number(&doubled, &dz, &mesh).unwrap(), 2 * intersection_number(&zc, &dz, &mesh).unwrap());
    }

    #[test]
    fn witness_orientation_is_positive() {
        let p = MetricParams::with_j(1.0).unwrap();
        let mesh = build_mesh(&p, [8, 8, 8]).unwrap();
        let dz = min_relative_2cycle(&mesh, DualDirection::Dz).unwrap().witness;
        let dy = min_relative_2cycle(&mesh, DualDirection::Dy).unwrap().witness;
        assert_eq!(intersection_number(&z_circle(&mesh, 3, 2), &dz, &mesh).unwrap(), 1);
        assert_eq!(intersection_number(&y_circle(&mesh, 3, 2), &dy, &mesh).unwrap(), 1);
    }

    #[test]
    fn invariant_under_boundaries() {
        let p = MetricParams::with_j(1.0).unwrap();
        let mesh = build_mesh(&p, [8, 8, 8]).unwrap();
        let dz = min_relative_2cycle(&mesh, DualDirection::Dz).unwrap().witness;
        let base = z_circle(&mesh, 3, 2);
        let expected = intersection_number(&base, &dz, &mesh).unwrap();
        let [nx, ny, nz] = mesh.dims();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let mut c1 = base.clone();
            for _ in 0..6 {
                let kind = [FaceKind::XNormal, FaceKind::YNormal, FaceKind::ZNormal][rng.gen_range(0..3)];
                // keep the pierced edge off the walls
                let i = rng.gen_range(1..nx - 2);
                let f = mesh.face_index(kind, i, rng.gen_range(0..ny), rng.gen_range(0..nz)).unwrap();
                let face = Chain::from_pairs(2, Coefficients::Z, [(f, rng.gen_range(-2..=2))]);
                c1 = c1.plus(&mesh.boundary_2(&face));
            }
            let mut c2 = dz.clone();
            for _ in 0..6 {
                let cell = rng.gen_range(0..mesh.cell_count());
                let cells = Chain::from_pairs(3, Coefficients::Z, [(cell, rng.gen_range(-2..=2))]);
                c2 = c2.plus(&mesh.boundary_3(&cells));
            }
            assert_eq!(intersection_number(&c1, &c2, &mesh).unwrap(), expected);
        }
    }

    #[test]
    fn sheared_cycles_are_handled() {
        let p = MetricParams::new(2.0, 0.0).unwrap();
        let mesh = build_mesh(&p, [16, 16, 16]).unwrap();
        let dz = min_relative_2cycle(&mesh, DualDirection::Dz).unwrap().witness;
        let dy = min_relative_2cycle(&mesh, DualDirection::Dy).unwrap().witness;
        // the (2,1) diagonal at x̂ = 2: sixteen Y(2) edges
        let diag = Chain::from_pairs(
            1,
            Coefficients::Z,
            (0..16).map(|k| (mesh.edge_index(EdgeKind::Y(2), 4, k, (2 * k) % 16).unwrap(), 1)),
        );
        assert!(mesh.boundary_1(&diag).is_zero());
        assert_eq!(intersection_number(&diag, &dz, &mesh).unwrap(), 2);
        assert_eq!(intersection_number(&diag, &dy, &mesh).unwrap(), 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mesh = CubicalMesh::flat(1.0, [4, 4, 4]).unwrap();
        let dz = min_relative_2cycle(&mesh, DualDirection::Dz).unwrap().witness;
        let open = Chain::from_pairs(1, Coefficients::Z, [(mesh.edge_index(EdgeKind::Z, 1, 1, 1).unwrap(), 1)]);
        assert!(intersection_number(&open, &dz, &mesh).is_err());
        let face = Chain::from_pairs(2, Coefficients::Z, [(mesh.face_index(FaceKind::ZNormal, 1, 1, 1).unwrap(), 1)]);
        assert!(intersection_number(&z_circle(&mesh, 1, 1), &face, &mesh).is_err());
    }
}
