//! j-sweeps, log-log exponent fits and report emission.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{pair_form_surface, FormFieldSpec, SurfacePatch};
use crate::complex::{
    build_mesh, min_relative_2cycle, shortest_nontrivial_cycle, stable_norm_bounds, DualDirection, WindingClass,
    DEFAULT_MAX_WINDING,
};
use crate::error::{Error, Result};
use crate::metric::{total_volume, MetricParams, DEFAULT_QUADRATURE_ORDER};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CSV_COLUMNS: [&str; 13] = [
    "j",
    "nx",
    "ny",
    "nz",
    "vol",
    "sys1",
    "stsys1_lb",
    "stsys1_ub",
    "sys2rel_dz",
    "sys2rel_dy",
    "calib_area",
    "ratio_eq2",
    "gap_eq5",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub j: f64,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub vol: f64,
    pub sys1: f64,
    pub stsys1_lb: f64,
    pub stsys1_ub: f64,
    pub sys2rel_dz: f64,
    pub sys2rel_dy: f64,
    pub calib_area: f64,
    /// `vol / (sys1 · sys2rel_dz)`
    pub ratio_eq2: f64,
    /// `sys1 / stsys1_ub`
    pub gap_eq5: f64,
}

impl SweepRecord {
    pub fn resolution(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn field(&self, name: &str) -> Option<f64> {
        Some(match name {
            "j" => self.j,
            "nx" => self.nx as f64,
            "ny" => self.ny as f64,
            "nz" => self.nz as f64,
            "vol" => self.vol,
            "sys1" => self.sys1,
            "stsys1_lb" => self.stsys1_lb,
            "stsys1_ub" => self.stsys1_ub,
            "sys2rel_dz" => self.sys2rel_dz,
            "sys2rel_dy" => self.sys2rel_dy,
            "calib_area" => self.calib_area,
            "ratio_eq2" => self.ratio_eq2,
            "gap_eq5" => self.gap_eq5,
            _ => return None,
        })
    }

    fn reals(&self) -> [f64; 10] {
        [
            self.vol,
            self.sys1,
            self.stsys1_lb,
            self.stsys1_ub,
            self.sys2rel_dz,
            self.sys2rel_dy,
            self.calib_area,
            self.ratio_eq2,
            self.gap_eq5,
            self.j,
        ]
    }

    pub fn check_invariants(&self) -> Result<()> {
        if self.reals().iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Validation(format!("record for j = {} has a non-positive field", self.j)));
        }
        let back = self.ratio_eq2 * self.sys1 * self.sys2rel_dz;
        if (back - self.vol).abs() > 1e-9 * self.vol {
            return Err(Error::Validation(format!("ratio_eq2 inconsistent at j = {}", self.j)));
        }
        Ok(())
    }
}

/// Default mesh resolution `(max(32, 8j), max(16, 4j), 16)`, scaled by
/// `refine` and optionally capped to `max_cells` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionPolicy {
    pub refine: usize,
    pub max_cells: Option<usize>,
}

impl Default for ResolutionPolicy {
    fn default() -> Self {
        Self {
            refine: 1,
            max_cells: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolved {
    pub dims: [usize; 3],
    pub warning: Option<String>,
}

impl ResolutionPolicy {
    pub fn resolve(&self, j: f64) -> Result<Resolved> {
        if self.refine == 0 {
            return Err(Error::arg("refinement factor must be at least 1"));
        }
        let r = self.refine;
        let nx = 32usize.max((8.0 * j).ceil() as usize) * r;
        let ny = 16usize.max((4.0 * j).ceil() as usize) * r;
        let nz = 16 * r;
        let cells = nx * ny * nz;
        let Some(cap) = self.max_cells else {
            return Ok(Resolved { dims: [nx, ny, nz], warning: None });
        };
        if cells <= cap {
            return Ok(Resolved { dims: [nx, ny, nz], warning: None });
        }
        // shrink the two j-proportional axes together
        let f = (cap as f64 / cells as f64).sqrt();
        let nx2 = ((nx as f64 * f).floor() as usize).max((4.0 * j).ceil() as usize);
        let ny2 = ((ny as f64 * f).floor() as usize).max(8);
        if nx2 * ny2 * nz > cap {
            return Err(Error::Budget(format!(
                "j = {j}: even the coarsest admissible mesh {nx2}x{ny2}x{nz} exceeds {cap} cells"
            )));
        }
        Ok(Resolved {
            dims: [nx2, ny2, nz],
            warning: Some(format!(
                "j = {j}: resolution capped from {nx}x{ny}x{nz} to {nx2}x{ny2}x{nz}; accuracy targets may fail"
            )),
        })
    }
}

/// Multiples tried for the stable norm: enough to reach the `(j, 1)` split.
pub fn stable_max_multiple(j: f64) -> usize {
    16usize.max(j.ceil() as usize)
}

fn calibrated_area(params: &MetricParams) -> Result<f64> {
    let nu = 256usize.max((64.0 * params.j()).ceil() as usize);
    let patch = SurfacePatch::z_constant(params, 0.0, nu, 8)?;
    Ok(pair_form_surface(&FormFieldSpec::psi(*params), &patch)?.value)
}

pub fn sweep_record(j: f64, policy: &ResolutionPolicy) -> Result<(SweepRecord, Option<String>)> {
    let params = MetricParams::with_j(j)?;
    let Resolved { dims, warning } = policy.resolve(j)?;
    let mesh = build_mesh(&params, dims)?;
    let vol = total_volume(&params, DEFAULT_QUADRATURE_ORDER)?;
    let sys1 = shortest_nontrivial_cycle(&mesh, DEFAULT_MAX_WINDING)?.value;
    let stable = stable_norm_bounds(&mesh, WindingClass::new(1, 0), stable_max_multiple(j))?;
    let dz = min_relative_2cycle(&mesh, DualDirection::Dz)?.value;
    let dy = min_relative_2cycle(&mesh, DualDirection::Dy)?.value;
    let record = SweepRecord {
        j,
        nx: dims[0],
        ny: dims[1],
        nz: dims[2],
        vol,
        sys1,
        stsys1_lb: stable.lb,
        stsys1_ub: stable.ub,
        sys2rel_dz: dz,
        sys2rel_dy: dy,
        calib_area: calibrated_area(&params)?,
        ratio_eq2: vol / (sys1 * dz),
        gap_eq5: sys1 / stable.ub,
    };
    record.check_invariants()?;
    Ok((record, warning))
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub seed: u64,
    pub records: Vec<SweepRecord>,
    pub warnings: Vec<String>,
}

/// One record per `j`, computed concurrently and returned in input order.
/// Nothing in a sweep draws random numbers; the seed is carried into the
/// report header so every artifact names the seed it was produced under.
pub fn sweep(j_values: &[f64], policy: &ResolutionPolicy, seed: u64) -> Result<SweepOutput> {
    if j_values.is_empty() {
        return Err(Error::arg("empty j list"));
    }
    if j_values.iter().any(|&j| !(j >= 1.0 && j.is_finite())) {
        return Err(Error::arg("every j must be a finite number ≥ 1"));
    }
    if j_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::arg("j values must be strictly increasing"));
    }
    let results: Vec<Result<(SweepRecord, Option<String>)>> = j_values
        .par_iter()
        .map(|&j| sweep_record(j, policy).map_err(|e| e.context(format!("j = {j}"))))
        .collect();
    let mut records = Vec::with_capacity(results.len());
    let mut warnings = Vec::new();
    for r in results {
        let (rec, warning) = r?;
        records.push(rec);
        warnings.extend(warning);
    }
    Ok(SweepOutput { seed, records, warnings })
}

/// Property checks over a finished sweep; returns the violated ones.
pub fn sweep_violations(records: &[SweepRecord]) -> Vec<String> {
    let mut out = Vec::new();
    for w in records.windows(2) {
        if w[1].ratio_eq2 >= w[0].ratio_eq2 {
            out.push(format!("ratio_eq2 not decreasing between j = {} and j = {}", w[0].j, w[1].j));
        }
    }
    for r in records {
        if r.ratio_eq2 > 3.0 / r.j {
            out.push(format!("ratio_eq2 = {} exceeds 3/j at j = {}", r.ratio_eq2, r.j));
        }
        if [4.0, 8.0, 16.0].contains(&r.j) && r.gap_eq5 < 0.45 * r.j {
            out.push(format!("gap_eq5 = {} below 0.45·j at j = {}", r.gap_eq5, r.j));
        }
        if r.sys1 < 0.95 {
            out.push(format!("sys1 = {} below 0.95 at j = {}", r.sys1, r.j));
        }
        let vj = r.vol / r.j;
        if !(1.9..=2.1).contains(&vj) {
            out.push(format!("vol/j = {vj} outside [1.9, 2.1] at j = {}", r.j));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

/// Least-squares line through `(log x, log y)`.
pub fn fit_exponent(records: &[SweepRecord], x_field: &str, y_field: &str) -> Result<FitResult> {
    if records.len() < 3 {
        return Err(Error::arg("a fit needs at least 3 records"));
    }
    let get = |r: &SweepRecord, f: &str| r.field(f).ok_or_else(|| Error::arg(format!("unknown field '{f}'")));
    let mut pts = Vec::with_capacity(records.len());
    for r in records {
        let (x, y) = (get(r, x_field)?, get(r, y_field)?);
        if !(x > 0.0 && y > 0.0) {
            return Err(Error::arg(format!("non-positive value in {x_field}/{y_field} at j = {}", r.j)));
        }
        pts.push((x, y));
    }
    fit_log_log(&pts)
}

/// Least-squares line through `(log x, log y)` for raw positive pairs.
pub fn fit_log_log(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::arg("a fit needs at least 3 points"));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::arg("log-log fit needs finite positive values"));
    }
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        points_used: pts.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedFit {
    pub x_field: String,
    pub y_field: String,
    pub fit: FitResult,
}

/// Growth exponents against `j` for every reported quantity.
pub fn standard_fits(records: &[SweepRecord]) -> Result<Vec<NamedFit>> {
    if records.len() < 3 {
        return Ok(Vec::new());
    }
    ["vol", "sys1", "stsys1_lb", "stsys1_ub", "sys2rel_dz", "sys2rel_dy", "calib_area", "ratio_eq2", "gap_eq5"]
        .iter()
        .map(|y| {
            Ok(NamedFit {
                x_field: "j".into(),
                y_field: (*y).into(),
                fit: fit_exponent(records, "j", y)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::arg(format!("unknown report format '{other}' (expected csv or json)"))),
        }
    }
}

/// 17 significant digits: enough to reproduce every f64 exactly.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_row(r: &SweepRecord) -> String {
    let mut cells = vec![fmt17(r.j), r.nx.to_string(), r.ny.to_string(), r.nz.to_string()];
    cells.extend(
        [r.vol, r.sys1, r.stsys1_lb, r.stsys1_ub, r.sys2rel_dz, r.sys2rel_dy, r.calib_area, r.ratio_eq2, r.gap_eq5]
            .iter()
            .map(|&v| fmt17(v)),
    );
    cells.join(",")
}

fn csv_header(seed: u64) -> String {
    format!("# syslab {VERSION} seed={seed} | {}", CSV_COLUMNS.join(","))
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn json_report(records: &[SweepRecord], fits: &[NamedFit], seed: u64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{{");
    let _ = writeln!(out, "  \"version\": {},", json_string(VERSION));
    let _ = writeln!(out, "  \"seed\": {seed},");
    let _ = writeln!(out, "  \"records\": [");
    for (n, r) in records.iter().enumerate() {
        let fields: Vec<String> = CSV_COLUMNS
            .iter()
            .map(|&c| {
                let v = r.field(c).expect("known column");
                if matches!(c, "nx" | "ny" | "nz") {
                    format!("\"{c}\": {}", v as usize)
                } else {
                    format!("\"{c}\": {}", fmt17(v))
                }
            })
            .collect();
        let sep = if n + 1 < records.len() { "," } else { "" };
        let _ = writeln!(out, "    {{{}}}{sep}", fields.join(", "));
    }
    let _ = writeln!(out, "  ],");
    let _ = writeln!(out, "  \"fits\": [");
    for (n, f) in fits.iter().enumerate() {
        let sep = if n + 1 < fits.len() { "," } else { "" };
        let _ = writeln!(
            out,
            "    {{\"x_field\": {}, \"y_field\": {}, \"slope\": {}, \"intercept\": {}, \"r_squared\": {}, \"points_used\": {}}}{sep}",
            json_string(&f.x_field),
            json_string(&f.y_field),
            fmt17(f.fit.slope),
            fmt17(f.fit.intercept),
            fmt17(f.fit.r_squared),
            f.fit.points_used
        );
    }
    let _ = writeln!(out, "  ]");
    let _ = writeln!(out, "}}");
    out
}

/// CSV (one `#` header line naming seed, version and columns, then one row
/// per record) or JSON (records, fits, seed and version).
pub fn emit_report(records: &[SweepRecord], fits: &[NamedFit], format: ReportFormat, seed: u64) -> Result<String> {
    if records.is_empty() {
        return Err(Error::arg("no records to report"));
    }
    Ok(match format {
        ReportFormat::Csv => {
            let mut out = csv_header(seed);
            out.push('\n');
            for r in records {
                out.push_str(&csv_row(r));
                out.push('\n');
            }
            out
        }
        ReportFormat::Json => json_report(records, fits, seed),
    })
}

/// Python/matplotlib script drawing the log-log curves of a sweep.
pub fn emit_plot_script(records: &[SweepRecord], seed: u64) -> String {
    let list = |f: &str| {
        records
            .iter()
            .map(|r| fmt17(r.field(f).expect("known column")))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let mut out = String::new();
    let _ = writeln!(out, "# syslab {VERSION} seed={seed}");
    let _ = writeln!(out, "import matplotlib");
    let _ = writeln!(out, "matplotlib.use(\"Agg\")");
    let _ = writeln!(out, "import matplotlib.pyplot as plt\n");
    let _ = writeln!(out, "j = [{}]", list("j"));
    let _ = writeln!(out, "series = {{");
    for f in ["vol", "sys1", "stsys1_lb", "stsys1_ub", "sys2rel_dz", "sys2rel_dy", "calib_area", "ratio_eq2", "gap_eq5"] {
        let _ = writeln!(out, "    \"{f}\": [{}],", list(f));
    }
    let _ = writeln!(out, "}}\n");
    let _ = writeln!(out, "fig, ax = plt.subplots(figsize=(7, 5))");
    let _ = writeln!(out, "for name, ys in series.items():");
    let _ = writeln!(out, "    ax.loglog(j, ys, marker=\"o\", label=name)");
    let _ = writeln!(out, "ax.set_xlabel(\"j\")");
    let _ = writeln!(out, "ax.grid(True, which=\"both\", alpha=0.3)");
    let _ = writeln!(out, "ax.legend(fontsize=8)");
    let _ = writeln!(out, "fig.tight_layout()");
    let _ = writeln!(out, "fig.savefig(\"sweep.png\", dpi=150)");
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReport {
    pub version: String,
    pub seed: u64,
    pub records: Vec<SweepRecord>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub fn parse_report(text: &str, format: ReportFormat) -> Result<ParsedReport> {
    match format {
        ReportFormat::Csv => parse_csv(text),
        ReportFormat::Json => parse_json(text),
    }
}

fn parse_csv(text: &str) -> Result<ParsedReport> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty report"))?;
    let rest = header.strip_prefix("# syslab ").ok_or_else(|| bad("missing '# syslab' header line"))?;
    let (meta, cols) = rest.split_once(" | ").ok_or_else(|| bad("header lacks column list"))?;
    if cols != CSV_COLUMNS.join(",") {
        return Err(bad(format!("unexpected columns '{cols}'")));
    }
    let (version, seed) = meta.split_once(" seed=").ok_or_else(|| bad("header lacks seed"))?;
    let seed = seed.parse().map_err(|_| bad(format!("bad seed '{seed}'")))?;
    let mut records = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != CSV_COLUMNS.len() {
            return Err(bad(format!("row {} has {} cells", n + 1, cells.len())));
        }
        let f = |i: usize| cells[i].parse::<f64>().map_err(|_| bad(format!("bad number '{}'", cells[i])));
        let u = |i: usize| cells[i].parse::<usize>().map_err(|_| bad(format!("bad integer '{}'", cells[i])));
        records.push(SweepRecord {
            j: f(0)?,
            nx: u(1)?,
            ny: u(2)?,
            nz: u(3)?,
            vol: f(4)?,
            sys1: f(5)?,
            stsys1_lb: f(6)?,
            stsys1_ub: f(7)?,
            sys2rel_dz: f(8)?,
            sys2rel_dy: f(9)?,
            calib_area: f(10)?,
            ratio_eq2: f(11)?,
            gap_eq5: f(12)?,
        });
    }
    Ok(ParsedReport {
        version: version.to_string(),
        seed,
        records,
    })
}

fn parse_json(text: &str) -> Result<ParsedReport> {
    #[derive(Deserialize)]
    struct Doc {
        version: String,
        seed: u64,
        records: Vec<SweepRecord>,
    }
    let doc: Doc = serde_json::from_str(text).map_err(|e| bad(format!("malformed JSON report: {e}")))?;
    Ok(ParsedReport {
        version: doc.version,
        seed: doc.seed,
        records: doc.records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn synthetic(j: f64) -> SweepRecord {
        let vol = 2.0 * j;
        let sys1 = 1.0 + 1e-3 / j;
        let dz = j * (1.0 + j * j).sqrt() + j.asinh();
        let ub = 2.0 / j + 1e-4;
        SweepRecord {
            j,
            nx: 8 * j as usize,
            ny: 4 * j as usize,
            nz: 16,
            vol,
            sys1,
            stsys1_lb: 1.0 / (1.0 + j * j).sqrt(),
            stsys1_ub: ub,
            sys2rel_dz: dz,
            sys2rel_dy: 2.0 * j,
            calib_area: dz,
            ratio_eq2: vol / (sys1 * dz),
            gap_eq5: sys1 / ub,
        }
    }

    #[test]
    fn default_resolution_policy() {
        let p = ResolutionPolicy::default();
        assert_eq!(p.resolve(1.0).unwrap().dims, [32, 16, 16]);
        assert_eq!(p.resolve(8.0).unwrap().dims, [64, 32, 16]);
        let r2 = ResolutionPolicy { refine: 2, max_cells: None };
        assert_eq!(r2.resolve(8.0).unwrap().dims, [128, 64, 32]);
    }

    #[test]
    fn budget_caps_and_rejects() {
        let capped = ResolutionPolicy { refine: 1, max_cells: Some(20_000) }.resolve(8.0).unwrap();
        assert!(capped.warning.is_some());
        let [nx, ny, nz] = capped.dims;
        assert!(nx * ny * nz <= 20_000 && nx >= 32);
        let tiny = ResolutionPolicy { refine: 1, max_cells: Some(100) }.resolve(8.0);
        assert!(matches!(tiny, Err(Error::Budget(_))));
    }

    #[test]
    fn fit_recovers_power_laws() {
        let recs: Vec<_> = [2.0, 4.0, 8.0, 16.0].iter().map(|&j| synthetic(j)).collect();
        let f = fit_exponent(&recs, "j", "vol").unwrap();
        assert_abs_diff_eq!(f.slope, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.intercept, 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-12);
        assert_eq!(f.points_used, 4);
        assert!(fit_exponent(&recs[..2], "j", "vol").is_err());
        assert!(fit_exponent(&recs, "j", "nope").is_err());
        let mut bad = recs.clone();
        bad[1].sys1 = 0.0;
        assert!(matches!(fit_exponent(&bad, "j", "sys1"), Err(Error::Argument(_))));
    }

    #[test]
    fn report_shapes() {
        let recs: Vec<_> = [2.0, 4.0, 8.0].iter().map(|&j| synthetic(j)).collect();
        let csv = emit_report(&recs, &[], ReportFormat::Csv, 7).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().next().unwrap().starts_with('#'));
        assert!(csv.lines().next().unwrap().ends_with(&CSV_COLUMNS.join(",")));
        let fits = standard_fits(&recs).unwrap();
        let json = emit_report(&recs, &fits, ReportFormat::Json, 7).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["records"].as_array().unwrap().len(), 3);
        assert_eq!(v["seed"], 7);
        assert!(emit_report(&[], &[], ReportFormat::Csv, 7).is_err());
        assert!("xml".parse::<ReportFormat>().is_err());
        assert!(emit_plot_script(&recs, 7).contains("loglog"));
    }

    #[test]
    fn empty_and_unordered_sweeps_rejected() {
        let p = ResolutionPolicy::default();
        assert!(matches!(sweep(&[], &p, 1), Err(Error::Argument(_))));
        assert!(sweep(&[2.0, 2.0], &p, 1).is_err());
        assert!(sweep(&[0.5], &p, 1).is_err());
    }

    #[test]
    fn single_record_matches_oracles() {
        let (r, warning) = sweep_record(1.0, &ResolutionPolicy::default()).unwrap();
        assert!(warning.is_none());
        assert_abs_diff_eq!(r.vol, 2.0, epsilon = 1e-9);
        assert!((r.sys1 - 1.0).abs() < 0.05);
        assert!((r.ratio_eq2 - 2.0 / 2.2956).abs() < 0.03, "{}", r.ratio_eq2);
        r.check_invariants().unwrap();
    }

    proptest! {
        #[test]
        fn csv_and_json_round_trip(bits in proptest::collection::vec(any::<u64>(), 10), seed in any::<u64>()) {
            let mut r = synthetic(3.0);
            let vals: Vec<f64> = bits.iter().map(|b| {
                let x = f64::from_bits(*b);
                if x.is_finite() { x } else { 1.5 }
            }).collect();
            r.j = vals[0]; r.vol = vals[1]; r.sys1 = vals[2]; r.stsys1_lb = vals[3]; r.stsys1_ub = vals[4];
            r.sys2rel_dz = vals[5]; r.sys2rel_dy = vals[6]; r.calib_area = vals[7]; r.ratio_eq2 = vals[8]; r.gap_eq5 = vals[9];
            let recs = vec![r, synthetic(5.0)];
            for fmt in [ReportFormat::Csv, ReportFormat::Json] {
                let text = emit_report(&recs, &[], fmt, seed).unwrap();
                let back = parse_report(&text, fmt).unwrap();
                prop_assert_eq!(back.seed, seed);
                prop_assert_eq!(back.records.len(), 2);
                for (a, b) in back.records.iter().zip(&recs) {
                    for c in CSV_COLUMNS {
                        prop_assert_eq!(a.field(c).unwrap().to_bits(), b.field(c).unwrap().to_bits(), "{}", c);
                    }
                }
            }
        }
    }
}
