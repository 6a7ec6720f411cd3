//! Plain-text chain listings: a `#chain dim=<d> mesh=<nx>x<ny>x<nz>` header
//! followed by one cell index per line (the support of the chain).

use super::mesh::{Chain, CubicalMesh};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainListing {
    pub dimension: u8,
    pub dims: [usize; 3],
    pub indices: Vec<usize>,
}

pub fn format_chain(chain: &Chain, mesh: &CubicalMesh) -> String {
    let [nx, ny, nz] = mesh.dims();
    let mut out = format!("#chain dim={} mesh={nx}x{ny}x{nz}\n", chain.dimension);
    for i in chain.support() {
        out.push_str(&i.to_string());
        out.push('\n');
    }
    out
}

pub fn parse_chain(text: &str) -> Result<ChainListing> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Validation("empty chain file".into()))?;
    let bad = || Error::Validation(format!("malformed chain header '{header}'"));
    let rest = header.strip_prefix("#chain ").ok_or_else(bad)?;
    let mut dimension = None;
    let mut dims = None;
    for field in rest.split_whitespace() {
        match field.split_once('=') {
            Some(("dim", d)) => dimension = Some(d.parse::<u8>().map_err(|_| bad())?),
            Some(("mesh", m)) => {
                let parts: Vec<usize> = m.split('x').map(str::parse).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
                dims = Some(<[usize; 3]>::try_from(parts).map_err(|_| bad())?);
            }
            _ => return Err(bad()),
        }
    }
    let indices = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<usize>().map_err(|_| Error::Validation(format!("bad index line '{l}'"))))
        .collect::<Result<_>>()?;
    Ok(ChainListing {
        dimension: dimension.ok_or_else(bad)?,
        dims: dims.ok_or_else(bad)?,
        indices,
    })
}
