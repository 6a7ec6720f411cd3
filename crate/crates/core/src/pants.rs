//! Sphere maps of nonzero degree from a surface cut along a maximal family
//! of disjoint loops.
//!
//! The surface arrives already cut: regions are pants (three boundary slots)
//! or cylinders (two), and every loop is thickened to an annulus whose `s`
//! and `n` sides attach to region slots. Each annulus maps diffeomorphically
//! onto the sphere minus the poles, `s` to the south pole and `n` to the
//! north pole. Regions then either collapse to a pole, map a cylinder across
//! the sphere, or (mixed pants) split off a cylinder along a new circle.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Pants,
    Cylinder,
}

impl RegionKind {
    pub fn slots(self) -> usize {
        match self {
            RegionKind::Pants => 3,
            RegionKind::Cylinder => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    pub kind: RegionKind,
}

/// Slot `slot` (0-based) of region number `region`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlotRef {
    pub region: usize,
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annulus {
    pub loop_id: String,
    pub side_s: SlotRef,
    pub side_n: SlotRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DecoratedSurface {
    pub regions: Vec<Region>,
    pub annuli: Vec<Annulus>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceSummary {
    pub genus: usize,
    pub euler_characteristic: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pole {
    SP,
    NP,
}

impl Pole {
    pub fn opposite(self) -> Self {
        match self {
            Pole::SP => Pole::NP,
            Pole::NP => Pole::SP,
        }
    }
}

impl fmt::Display for Pole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pole::SP => "SP",
            Pole::NP => "NP",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum RegionAction {
    Collapse { pole: Pole },
    CylinderDiffeo { orientation: i8 },
    /// A new circle parallel to the odd slot, labeled with the majority
    /// pole, splits the pants into a cylinder (mapped across the sphere)
    /// and a pants collapsed to that pole.
    SubdividedPants {
        parallel_to_slot: usize,
        new_circle_label: Pole,
        residual_collapse: Pole,
    },
}

/// Where an annulus goes: always diffeomorphically onto a neighborhood of
/// the equator, `s` side to SP and `n` side to NP.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandAssignment {
    pub loop_id: String,
    pub s_pole: Pole,
    pub n_pole: Pole,
    pub orientation: i8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapPlan {
    pub markings: BTreeMap<String, Vec<Pole>>,
    pub bands: Vec<BandAssignment>,
    pub actions: BTreeMap<String, RegionAction>,
    pub degree: u64,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

/// Reads `region <id> pants|cylinder` and
/// `annulus <loop_id> s=<region>:<slot> n=<region>:<slot>` lines.
/// Blank lines and `#` comments are skipped.
pub fn parse_surface(text: &str) -> Result<DecoratedSurface> {
    let mut surface = DecoratedSurface::default();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut pending: Vec<(usize, String, String, String)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = n + 1;
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["region", id, kind] => {
                let kind = match *kind {
                    "pants" => RegionKind::Pants,
                    "cylinder" => RegionKind::Cylinder,
                    other => return Err(invalid(format!("line {lineno}: unknown region kind '{other}'"))),
                };
                if index.insert(id.to_string(), surface.regions.len()).is_some() {
                    return Err(invalid(format!("line {lineno}: duplicate region '{id}'")));
                }
                surface.regions.push(Region { id: id.to_string(), kind });
            }
            ["annulus", loop_id, s, n_side] => {
                let s = s
                    .strip_prefix("s=")
                    .ok_or_else(|| invalid(format!("line {lineno}: expected s=<region>:<slot>")))?;
                let n_side = n_side
                    .strip_prefix("n=")
                    .ok_or_else(|| invalid(format!("line {lineno}: expected n=<region>:<slot>")))?;
                pending.push((lineno, loop_id.to_string(), s.to_string(), n_side.to_string()));
            }
            _ => return Err(invalid(format!("line {lineno}: cannot parse '{line}'"))),
        }
    }
    let slot_ref = |lineno: usize, spec: &str| -> Result<SlotRef> {
        let (r, s) = spec
            .rsplit_once(':')
            .ok_or_else(|| invalid(format!("line {lineno}: slot reference '{spec}' lacks ':'")))?;
        let region = *index
            .get(r)
            .ok_or_else(|| invalid(format!("line {lineno}: unknown region '{r}'")))?;
        let slot = s
            .parse()
            .map_err(|_| invalid(format!("line {lineno}: bad slot number '{s}'")))?;
        Ok(SlotRef { region, slot })
    };
    for (lineno, loop_id, s, n) in pending {
        surface.annuli.push(Annulus {
            loop_id,
            side_s: slot_ref(lineno, &s)?,
            side_n: slot_ref(lineno, &n)?,
        });
    }
    Ok(surface)
}

pub fn format_surface(s: &DecoratedSurface) -> String {
    let mut out = String::new();
    for r in &s.regions {
        let kind = match r.kind {
            RegionKind::Pants => "pants",
            RegionKind::Cylinder => "cylinder",
        };
        out.push_str(&format!("region {} {kind}\n", r.id));
    }
    for a in &s.annuli {
        out.push_str(&format!(
            "annulus {} s={}:{} n={}:{}\n",
            a.loop_id, s.regions[a.side_s.region].id, a.side_s.slot, s.regions[a.side_n.region].id, a.side_n.slot
        ));
    }
    out
}

/// Checks the gluing and returns the genus and Euler characteristic.
pub fn validate_surface(s: &DecoratedSurface) -> Result<SurfaceSummary> {
    if s.annuli.is_empty() {
        return Err(invalid("empty loop family: the sphere map would have degree 0"));
    }
    if s.regions.is_empty() {
        return Err(invalid("surface has no regions"));
    }
    let mut used: HashMap<SlotRef, &str> = HashMap::new();
    for a in &s.annuli {
        for side in [a.side_s, a.side_n] {
            let region = s
                .regions
                .get(side.region)
                .ok_or_else(|| invalid(format!("annulus {} refers to a missing region", a.loop_id)))?;
            if side.slot >= region.kind.slots() {
                return Err(invalid(format!(
                    "annulus {} uses slot {} of {} which has only {}",
                    a.loop_id,
                    side.slot,
                    region.id,
                    region.kind.slots()
                )));
            }
            if let Some(other) = used.insert(side, &a.loop_id) {
                return Err(invalid(format!(
                    "slot {}:{} attached to both {} and {}",
                    region.id, side.slot, other, a.loop_id
                )));
            }
        }
    }
    for (r, region) in s.regions.iter().enumerate() {
        for slot in 0..region.kind.slots() {
            if !used.contains_key(&SlotRef { region: r, slot }) {
                return Err(invalid(format!("dangling slot {}:{slot}", region.id)));
            }
        }
    }

    // connectivity of the region/annulus incidence graph
    let mut parent: Vec<usize> = (0..s.regions.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for a in &s.annuli {
        let (x, y) = (find(&mut parent, a.side_s.region), find(&mut parent, a.side_n.region));
        parent[x] = y;
    }
    let root = find(&mut parent, 0);
    if (0..s.regions.len()).any(|r| find(&mut parent, r) != root) {
        return Err(invalid("region/annulus graph is disconnected"));
    }

    let pants = s.regions.iter().filter(|r| r.kind == RegionKind::Pants).count() as i64;
    let chi = -pants;
    // first Betti number of the incidence graph is the genus of the glued surface
    let cycle_rank = s.annuli.len() as i64 - s.regions.len() as i64 + 1;
    if chi % 2 != 0 || 2 - 2 * cycle_rank != chi {
        return Err(invalid(format!(
            "Euler characteristic {chi} inconsistent with the gluing (cycle rank {cycle_rank})"
        )));
    }
    Ok(SurfaceSummary {
        genus: cycle_rank as usize,
        euler_characteristic: chi,
    })
}

/// `s` sides mark SP, `n` sides mark NP; indexed by region then slot.
pub fn assign_markings(s: &DecoratedSurface) -> Result<Vec<Vec<Pole>>> {
    validate_surface(s)?;
    let mut marks: Vec<Vec<Option<Pole>>> = s.regions.iter().map(|r| vec![None; r.kind.slots()]).collect();
    for a in &s.annuli {
        marks[a.side_s.region][a.side_s.slot] = Some(Pole::SP);
        marks[a.side_n.region][a.side_n.slot] = Some(Pole::NP);
    }
    Ok(marks
        .into_iter()
        .map(|m| m.into_iter().map(|p| p.expect("validated surfaces have no free slots")).collect())
        .collect())
}

fn region_action(kind: RegionKind, marks: &[Pole]) -> Result<RegionAction> {
    let sp = marks.iter().filter(|&&p| p == Pole::SP).count();
    let np = marks.len() - sp;
    Ok(match (kind, sp, np) {
        (_, _, 0) => RegionAction::Collapse { pole: Pole::SP },
        (_, 0, _) => RegionAction::Collapse { pole: Pole::NP },
        (RegionKind::Cylinder, 1, 1) => RegionAction::CylinderDiffeo { orientation: 1 },
        (RegionKind::Pants, 2, 1) | (RegionKind::Pants, 1, 2) => {
            let majority = if sp == 2 { Pole::SP } else { Pole::NP };
            let odd = marks.iter().position(|&p| p != majority).expect("one odd slot");
            RegionAction::SubdividedPants {
                parallel_to_slot: odd,
                new_circle_label: majority,
                residual_collapse: majority,
            }
        }
        _ => return Err(Error::Internal(format!("unexpected marking pattern {marks:?}"))),
    })
}

/// Builds the sphere-map plan and its degree: one positive preimage of a
/// regular value near the equator per annulus band, plus one per cylinder
/// mapped across the sphere (original or split off a pants).
pub fn build_map_plan(s: &DecoratedSurface) -> Result<MapPlan> {
    let marks = assign_markings(s)?;
    let mut actions = BTreeMap::new();
    let mut markings = BTreeMap::new();
    let mut across = 0u64;
    for (r, region) in s.regions.iter().enumerate() {
        let action = region_action(region.kind, &marks[r])?;
        if matches!(action, RegionAction::CylinderDiffeo { .. } | RegionAction::SubdividedPants { .. }) {
            across += 1;
        }
        actions.insert(region.id.clone(), action);
        markings.insert(region.id.clone(), marks[r].clone());
    }
    let bands = s
        .annuli
        .iter()
        .map(|a| BandAssignment {
            loop_id: a.loop_id.clone(),
            s_pole: Pole::SP,
            n_pole: Pole::NP,
            orientation: 1,
        })
        .collect();
    let plan = MapPlan {
        markings,
        bands,
        actions,
        degree: s.annuli.len() as u64 + across,
    };
    check_plan(s, &plan)?;
    Ok(plan)
}

/// Marking consistency, band invariants and the degree bound.
pub fn check_plan(s: &DecoratedSurface, plan: &MapPlan) -> Result<()> {
    for a in &s.annuli {
        let ms = plan.markings[&s.regions[a.side_s.region].id][a.side_s.slot];
        let mn = plan.markings[&s.regions[a.side_n.region].id][a.side_n.slot];
        if (ms, mn) != (Pole::SP, Pole::NP) {
            return Err(Error::Internal(format!("annulus {} has markings {ms}/{mn}", a.loop_id)));
        }
    }
    if plan.bands.len() != s.annuli.len()
        || plan.bands.iter().any(|b| b.orientation != 1 || b.s_pole != Pole::SP || b.n_pole != Pole::NP)
    {
        return Err(Error::Internal("an annulus band is not mapped across the equator".into()));
    }
    for (id, action) in &plan.actions {
        let marks = &plan.markings[id];
        match *action {
            RegionAction::SubdividedPants { parallel_to_slot, new_circle_label, .. } => {
                let mut sorted = marks.clone();
                sorted.sort();
                if sorted != [Pole::SP, Pole::SP, Pole::NP] && sorted != [Pole::SP, Pole::NP, Pole::NP] {
                    return Err(Error::Internal(format!("subdivided pants {id} has markings {marks:?}")));
                }
                if marks[parallel_to_slot] == new_circle_label {
                    return Err(Error::Internal(format!("new circle in {id} is not parallel to the odd slot")));
                }
            }
            RegionAction::CylinderDiffeo { orientation } if orientation != 1 => {
                return Err(Error::Internal(format!("cylinder {id} reverses orientation")));
            }
            _ => {}
        }
    }
    if plan.degree < s.annuli.len() as u64 || plan.degree == 0 {
        return Err(Error::Internal(format!("degree {} below the loop count {}", plan.degree, s.annuli.len())));
    }
    Ok(())
}

/// The surface after performing every subdivision: each mixed pants becomes
/// a uniformly marked pants and a cylinder, joined by a new annulus whose
/// side facing the pants carries the majority pole.
pub fn induced_surface(s: &DecoratedSurface, plan: &MapPlan) -> Result<DecoratedSurface> {
    let mut out = s.clone();
    let mut fresh = 0usize;
    for (r, region) in s.regions.iter().enumerate() {
        let RegionAction::SubdividedPants { parallel_to_slot, new_circle_label, .. } = plan.actions[&region.id] else {
            continue;
        };
        let mut cyl_id = format!("{}~cyl", region.id);
        while out.regions.iter().any(|x| x.id == cyl_id) {
            cyl_id.push('~');
        }
        let cyl = out.regions.len();
        out.regions.push(Region { id: cyl_id, kind: RegionKind::Cylinder });
        // the odd boundary moves to the cylinder's slot 0
        for a in out.annuli.iter_mut() {
            for side in [&mut a.side_s, &mut a.side_n] {
                if *side == (SlotRef { region: r, slot: parallel_to_slot }) {
                    *side = SlotRef { region: cyl, slot: 0 };
                }
            }
        }
        let pants_side = SlotRef { region: r, slot: parallel_to_slot };
        let cyl_side = SlotRef { region: cyl, slot: 1 };
        let (side_s, side_n) = match new_circle_label {
            Pole::SP => (pants_side, cyl_side),
            Pole::NP => (cyl_side, pants_side),
        };
        let mut loop_id = format!("{}~new{fresh}", region.id);
        while out.annuli.iter().any(|a| a.loop_id == loop_id) {
            loop_id.push('~');
        }
        fresh += 1;
        out.annuli.push(Annulus { loop_id, side_s, side_n });
    }
    validate_surface(&out)?;
    Ok(out)
}

/// Random connected decorated surface of the given genus (≥ 1) with
/// `extra_cylinders` additional cylinders spliced in.
pub fn random_surface<R: Rng>(rng: &mut R, genus: usize, extra_cylinders: usize) -> Result<DecoratedSurface> {
    if genus == 0 {
        return Err(Error::arg("closed surfaces built from pants and cylinders have genus ≥ 1"));
    }
    let pants = 2 * genus - 2;
    let cylinders = extra_cylinders + usize::from(genus == 1);
    let mut regions: Vec<Region> = (0..pants)
        .map(|i| Region { id: format!("p{i}"), kind: RegionKind::Pants })
        .collect();
    regions.extend((0..cylinders).map(|i| Region { id: format!("c{i}"), kind: RegionKind::Cylinder }));
    let mut slots: Vec<SlotRef> = regions
        .iter()
        .enumerate()
        .flat_map(|(r, reg)| (0..reg.kind.slots()).map(move |slot| SlotRef { region: r, slot }))
        .collect();
    for _attempt in 0..1000 {
        slots.shuffle(rng);
        let annuli: Vec<Annulus> = slots
            .chunks(2)
            .enumerate()
            .map(|(n, pair)| {
                let (a, b) = if rng.gen_bool(0.5) { (pair[0], pair[1]) } else { (pair[1], pair[0]) };
                Annulus { loop_id: format!("L{n}"), side_s: a, side_n: b }
            })
            .collect();
        let s = DecoratedSurface { regions: regions.clone(), annuli };
        if validate_surface(&s).is_ok() {
            return Ok(s);
        }
    }
    Err(Error::Internal("no connected gluing found".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TORUS: &str = "region c cylinder\nannulus L0 s=c:0 n=c:1\n";
    const GENUS2: &str = "\
region P pants
region Q pants
annulus a s=P:0 n=Q:0
annulus b s=P:1 n=Q:1
annulus c s=Q:2 n=P:2
";

    #[test]
    fn torus_fixture() {
        let s = parse_surface(TORUS).unwrap();
        assert_eq!(validate_surface(&s).unwrap().genus, 1);
        assert_eq!(assign_markings(&s).unwrap(), vec![vec![Pole::SP, Pole::NP]]);
        let plan = build_map_plan(&s).unwrap();
        assert_eq!(plan.actions["c"], RegionAction::CylinderDiffeo { orientation: 1 });
        assert!(plan.degree >= 1);
    }

    #[test]
    fn genus_two_fixture() {
        let s = parse_surface(GENUS2).unwrap();
        let summary = validate_surface(&s).unwrap();
        assert_eq!(summary, SurfaceSummary { genus: 2, euler_characteristic: -2 });
        let marks = assign_markings(&s).unwrap();
        assert_eq!(marks[0], vec![Pole::SP, Pole::SP, Pole::NP]);
        assert_eq!(marks[1], vec![Pole::NP, Pole::NP, Pole::SP]);
        let plan = build_map_plan(&s).unwrap();
        assert_eq!(
            plan.actions["P"],
            RegionAction::SubdividedPants { parallel_to_slot: 2, new_circle_label: Pole::SP, residual_collapse: Pole::SP }
        );
        assert_eq!(
            plan.actions["Q"],
            RegionAction::SubdividedPants { parallel_to_slot: 2, new_circle_label: Pole::NP, residual_collapse: Pole::NP }
        );
        assert_eq!(plan.degree, 5);
    }

    #[test]
    fn uniform_pants_collapse() {
        let text = "region P pants\nregion Q pants\nannulus a s=P:0 n=Q:0\nannulus b s=P:1 n=Q:1\nannulus c s=P:2 n=Q:2\n";
        let plan = build_map_plan(&parse_surface(text).unwrap()).unwrap();
        assert_eq!(plan.markings["P"], vec![Pole::SP; 3]);
        assert_eq!(plan.actions["P"], RegionAction::Collapse { pole: Pole::SP });
        assert_eq!(plan.actions["Q"], RegionAction::Collapse { pole: Pole::NP });
        assert_eq!(plan.degree, 3);
    }

    #[test]
    fn validation_errors() {
        let dangling = "region P pants\nregion Q pants\nannulus a s=P:0 n=Q:0\nannulus b s=P:1 n=Q:1\n";
        assert!(matches!(validate_surface(&parse_surface(dangling).unwrap()), Err(Error::Validation(m)) if m.contains("dangling")));
        let empty = "region c cylinder\n";
        assert!(matches!(validate_surface(&parse_surface(empty).unwrap()), Err(Error::Validation(m)) if m.contains("empty")));
        let split = "region a cylinder\nregion b cylinder\nannulus x s=a:0 n=a:1\nannulus y s=b:0 n=b:1\n";
        assert!(matches!(validate_surface(&parse_surface(split).unwrap()), Err(Error::Validation(m)) if m.contains("disconnected")));
        let reused = "region c cylinder\nannulus x s=c:0 n=c:0\n";
        assert!(validate_surface(&parse_surface(reused).unwrap()).is_err());
        assert!(parse_surface("region c disk\n").is_err());
        assert!(parse_surface("annulus x s=q:0 n=q:1\n").is_err());
        assert!(parse_surface("region c cylinder\nannulus x s=c:9 n=c:1\n").and_then(|s| validate_surface(&s)).is_err());
    }

    #[test]
    fn text_round_trip() {
        let s = parse_surface(GENUS2).unwrap();
        assert_eq!(parse_surface(&format_surface(&s)).unwrap(), s);
    }

    #[test]
    fn induced_surface_keeps_degree() {
        let s = parse_surface(GENUS2).unwrap();
        let plan = build_map_plan(&s).unwrap();
        let induced = induced_surface(&s, &plan).unwrap();
        assert_eq!(induced.regions.len(), 4);
        assert_eq!(induced.annuli.len(), 5);
        let again = build_map_plan(&induced).unwrap();
        assert_eq!(again.degree, plan.degree);
        assert!(again.actions.values().all(|a| !matches!(a, RegionAction::SubdividedPants { .. })));
    }

    #[test]
    fn random_surfaces_satisfy_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 0..100 {
            let genus = 1 + n % 5;
            let s = random_surface(&mut rng, genus, n % 3).unwrap();
            assert_eq!(validate_surface(&s).unwrap().genus, genus);
            let plan = build_map_plan(&s).unwrap();
            assert!(plan.degree >= s.annuli.len() as u64);
            let induced = induced_surface(&s, &plan).unwrap();
            assert_eq!(build_map_plan(&induced).unwrap().degree, plan.degree);
        }
    }
}
