//! Discrete systoles on metric-weighted cubical meshes of T²×I.

mod chain_file;
mod cut;
mod cycles;
mod flow;
mod intersection;
mod mesh;

pub use chain_file::{format_chain, parse_chain, ChainListing};
pub use cut::{coarea_slab_bound, min_relative_2cycle, pair_psi_chain, DualDirection};
pub use cycles::{
    ball_mass, shortest_cycle_in_class, shortest_nontrivial_cycle, stable_norm_bounds, StableNormBounds,
    SystoleResult, DEFAULT_MAX_WINDING,
};
pub use flow::{FlowNetwork, FlowSolution};
pub use intersection::intersection_number;
pub use mesh::{build_mesh, Chain, Coefficients, CubicalMesh, EdgeKind, FaceKind, MeshMetric, WindingClass};
