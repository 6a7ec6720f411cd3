use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use syslab_core::calibration::{
    calibration_defect, closedness_convergence, verify_closed, verify_comass, FormFieldSpec, ShearChart,
    SurfacePatch, DEFAULT_RESTARTS,
};
use syslab_core::complex::{
    build_mesh, format_chain, min_relative_2cycle, shortest_nontrivial_cycle, stable_norm_bounds, CubicalMesh,
    DualDirection, SystoleResult, WindingClass, DEFAULT_MAX_WINDING,
};
use syslab_core::harness::{
    emit_plot_script, emit_report, fmt17, parse_report, standard_fits, stable_max_multiple, sweep, sweep_violations,
    ReportFormat, ResolutionPolicy,
};
use syslab_core::metric::{self, MetricParams, PointTI, DEFAULT_QUADRATURE_ORDER};
use syslab_core::pants::{build_map_plan, check_plan, parse_surface};

mod config;
mod json;

use config::{pick, FileConfig, InputError};

const DEFAULT_SWEEP_J: [f64; 4] = [2.0, 4.0, 8.0, 16.0];

#[derive(Parser, Debug)]
#[command(name = "syslab", version, about = "Systoles, calibrations and cuts on the two-circle metrics")]
struct Cli {
    #[command(flatten)]
    global: GlobalFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalFlags {
    /// RNG seed for every sampled quantity.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report format: csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Tolerance for pass/fail checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Upper bound on mesh cells per computation.
    #[arg(long, global = true)]
    max_cells: Option<usize>,
    /// key=value settings file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Metric tensor, ψ and total volume.
    #[command(subcommand)]
    Metric(MetricCmd),
    /// Pointwise checks of the calibrating form.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Shortest cycles and stable-norm bounds on the mesh.
    #[command(subcommand)]
    Systole(SystoleCmd),
    /// Minimal relative 2-cycles.
    #[command(subcommand)]
    Cut(CutCmd),
    /// Sphere-map plans from decorated surfaces.
    #[command(subcommand)]
    Pants(PantsCmd),
    /// Compute one record per j and emit a report.
    Sweep(SweepArgs),
    /// Fit growth exponents to an existing sweep report.
    Report(ReportArgs),
}

#[derive(Subcommand, Debug)]
enum MetricCmd {
    Eval {
        #[arg(long)]
        j: f64,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 0.0)]
        y: f64,
        #[arg(long, default_value_t = 0.0)]
        z: f64,
        #[arg(long, default_value_t = metric::DEFAULT_SMOOTHING)]
        delta: f64,
    },
    Volume {
        #[arg(long)]
        j: f64,
        #[arg(long, default_value_t = DEFAULT_QUADRATURE_ORDER)]
        order: usize,
    },
}

#[derive(Subcommand, Debug)]
enum VerifyCmd {
    Calibration {
        #[arg(long)]
        j: f64,
        #[arg(long, default_value_t = 1e-3)]
        fd_step: f64,
        #[arg(long, default_value_t = 10_000)]
        points: usize,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        planes: usize,
    },
}

#[derive(Subcommand, Debug)]
enum SystoleCmd {
    Sys1 {
        #[arg(long)]
        j: f64,
        /// NX,NY,NZ; defaults to the sweep resolution for j.
        #[arg(long)]
        res: Option<Res>,
        #[arg(long, default_value_t = DEFAULT_MAX_WINDING)]
        max_winding: usize,
        /// Write the witness cycle as an edge-index list.
        #[arg(long)]
        chain_out: Option<PathBuf>,
    },
    Stable {
        /// A,B: windings in z and y.
        #[arg(long)]
        class: ClassArg,
        #[arg(long)]
        j: f64,
        #[arg(long)]
        max_multiple: Option<usize>,
        #[arg(long)]
        res: Option<Res>,
    },
}

#[derive(Subcommand, Debug)]
enum CutCmd {
    Sys2rel {
        #[arg(long)]
        dual: DualDirection,
        #[arg(long)]
        j: f64,
        #[arg(long)]
        res: Option<Res>,
        /// Write the witness surface as a face-index list.
        #[arg(long)]
        chain_out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum PantsCmd {
    Build {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Comma-separated, strictly increasing j values.
    #[arg(long, value_delimiter = ',')]
    j: Option<Vec<f64>>,
    /// Multiply the default resolution by this factor.
    #[arg(long)]
    refine: Option<usize>,
    /// Also write a matplotlib script for log-log curves.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
struct Res([usize; 3]);

impl std::str::FromStr for Res {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("'{p}': {e}")))
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [a, b, c] => Ok(Res([a, b, c])),
            _ => Err(format!("expected NX,NY,NZ, got '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct ClassArg(WindingClass);

impl std::str::FromStr for ClassArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(',').ok_or_else(|| format!("expected A,B, got '{s}'"))?;
        let parse = |t: &str| t.trim().parse::<i64>().map_err(|e| format!("'{t}': {e}"));
        Ok(ClassArg(WindingClass::new(parse(a)?, parse(b)?)))
    }
}

/// A check ran to completion and failed its tolerance.
#[derive(Debug)]
struct ToleranceViolation(String);

impl fmt::Display for ToleranceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tolerance violation: {}", self.0)
    }
}

impl std::error::Error for ToleranceViolation {}

struct Settings {
    seed: u64,
    format: ReportFormat,
    out: Option<PathBuf>,
    tol: Option<f64>,
    max_cells: Option<usize>,
    file: FileConfig,
}

impl Settings {
    fn resolve(flags: GlobalFlags) -> anyhow::Result<Self> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let format: String = pick(flags.format, &file, "format", "csv".into())?;
        Ok(Settings {
            seed: pick(flags.seed, &file, "seed", 0)?,
            format: format.parse()?,
            out: flags.out.or_else(|| file.path("out")),
            tol: flags.tol.or(file.get("tol")?),
            max_cells: flags.max_cells.or(file.get("max-cells")?),
            file,
        })
    }

    fn policy(&self, refine: Option<usize>) -> anyhow::Result<ResolutionPolicy> {
        Ok(ResolutionPolicy {
            refine: pick(refine, &self.file, "refine", 1)?,
            max_cells: self.max_cells,
        })
    }

    fn emit(&self, text: &str) -> anyhow::Result<()> {
        match &self.out {
            Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn mesh_for(settings: &Settings, j: f64, res: Option<Res>) -> anyhow::Result<CubicalMesh> {
    let params = MetricParams::with_j(j)?;
    let dims = match res {
        Some(Res(d)) => {
            let cells: usize = d.iter().product();
            if let Some(cap) = settings.max_cells.filter(|&c| cells > c) {
                return Err(syslab_core::Error::Budget(format!("{cells} cells requested, limit {cap}")).into());
            }
            d
        }
        None => {
            let r = settings.policy(None)?.resolve(j)?;
            if let Some(w) = r.warning {
                eprintln!("warning: {w}");
            }
            r.dims
        }
    };
    Ok(build_mesh(&params, dims)?)
}

fn class_json(c: WindingClass) -> Value {
    json!([c.a, c.b])
}

fn systole_json(r: &SystoleResult, mesh: &CubicalMesh) -> Value {
    json!({
        "value": r.value,
        "class": class_json(r.class),
        "certificate": r.lower_bound_certificate,
        "resolution": mesh.dims(),
    })
}

fn write_chain(path: &Path, r: &SystoleResult, mesh: &CubicalMesh) -> anyhow::Result<()> {
    fs::write(path, format_chain(&r.witness, mesh)).with_context(|| format!("writing {}", path.display()))
}

fn run_metric(cmd: MetricCmd, s: &Settings) -> anyhow::Result<()> {
    match cmd {
        MetricCmd::Eval { j, x, y, z, delta } => {
            let params = MetricParams::new(j, delta)?;
            let p = PointTI::new(x, y, z, &params)?;
            let g = metric::metric_at(&p, &params);
            let psi = metric::psi_at(&p, &params);
            let out = json!({
                "j": j,
                "point": [p.x, p.y, p.z],
                "x_hat": metric::hat(p.x, &params)?,
                "metric": g,
                "psi": psi,
                "psi_comass": psi.comass(&g)?,
            });
            s.emit(&json::to_string(&out))
        }
        MetricCmd::Volume { j, order } => {
            let params = MetricParams::with_j(j)?;
            let vol = metric::total_volume(&params, order)?;
            s.emit(&json::to_string(&json!({"j": j, "volume": vol, "quadrature_order": order})))
        }
    }
}

fn run_verify(cmd: VerifyCmd, s: &Settings) -> anyhow::Result<()> {
    let VerifyCmd::Calibration {
        j,
        fd_step,
        points,
        planes,
    } = cmd;
    let params = MetricParams::with_j(j)?;
    let spec = FormFieldSpec::psi(params);
    let tol = s.tol.unwrap_or(1e-6);
    let comass = verify_comass(&spec, points, planes, tol, s.seed)?;
    let closed = verify_closed(&spec, points.min(2000), fd_step)?;
    let conv = closedness_convergence(&spec, ShearChart { amplitude: 0.05 }, 64, 4.0 * fd_step, 3)?;
    let nu = 256usize.max((64.0 * j).ceil() as usize);
    let patches = [
        ("z=0", SurfacePatch::z_constant(&params, 0.0, nu, 8)?),
        ("y=0", SurfacePatch::y_constant(&params, 0.0, nu, 8)?),
        ("tilted", SurfacePatch::tilted(&params, 0.0, 1.0, nu, 64)?),
    ];
    let defects: Vec<Value> = patches
        .iter()
        .map(|(name, p)| Ok(json!({"patch": name, "defect": calibration_defect(&spec, p)?})))
        .collect::<syslab_core::Result<_>>()?;
    let d_ok = closed.max_residual < 1e-5;
    let order_ok = conv.observed_order >= 1.9;
    let passed = comass.passed && d_ok && order_ok;
    let out = json!({
        "j": j,
        "comass_max": comass.max_value,
        "comass_min": comass.min_value,
        "comass_points": comass.points,
        "d_residual": closed.max_residual,
        "fd_step": fd_step,
        "convergence_order": conv.observed_order,
        "defect_by_patch": defects,
        "tol": tol,
        "passed": passed,
    });
    s.emit(&json::to_string(&out))?;
    if !passed {
        return Err(ToleranceViolation(format!(
            "comass excess {:.3e} (tol {tol:.1e}), dψ residual {:.3e} (tol 1e-5), convergence order {:.3} (need 1.9)",
            comass.max_violation, closed.max_residual, conv.observed_order
        ))
        .into());
    }
    Ok(())
}

fn run_systole(cmd: SystoleCmd, s: &Settings) -> anyhow::Result<()> {
    match cmd {
        SystoleCmd::Sys1 {
            j,
            res,
            max_winding,
            chain_out,
        } => {
            let mesh = mesh_for(s, j, res)?;
            let r = shortest_nontrivial_cycle(&mesh, max_winding)?;
            if let Some(p) = chain_out {
                write_chain(&p, &r, &mesh)?;
            }
            s.emit(&json::to_string(&systole_json(&r, &mesh)))
        }
        SystoleCmd::Stable {
            class,
            j,
            max_multiple,
            res,
        } => {
            let mesh = mesh_for(s, j, res)?;
            let m = max_multiple.unwrap_or_else(|| stable_max_multiple(j));
            let b = stable_norm_bounds(&mesh, class.0, m)?;
            let out = json!({
                "value": b.ub,
                "class": class_json(class.0),
                "certificate": b.lb,
                "resolution": mesh.dims(),
                "lb": b.lb,
                "ub": b.ub,
                "best_multiple": b.best_multiple,
                "decomposition": [class_json(b.decomposition[0]), class_json(b.decomposition[1])],
                "dual_form": [b.dual_form.0, b.dual_form.1],
            });
            s.emit(&json::to_string(&out))
        }
    }
}

fn run_cut(cmd: CutCmd, s: &Settings) -> anyhow::Result<()> {
    let CutCmd::Sys2rel {
        dual,
        j,
        res,
        chain_out,
    } = cmd;
    let mesh = mesh_for(s, j, res)?;
    let r = min_relative_2cycle(&mesh, dual)?;
    if let Some(p) = chain_out {
        write_chain(&p, &r, &mesh)?;
    }
    let mut out = systole_json(&r, &mesh);
    out["dual"] = json!(dual.to_string());
    s.emit(&json::to_string(&out))
}

fn run_pants(cmd: PantsCmd, s: &Settings) -> anyhow::Result<()> {
    let PantsCmd::Build { input } = cmd;
    let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
    let surface = parse_surface(&text)?;
    let plan = build_map_plan(&surface)?;
    check_plan(&surface, &plan)?;
    let out = json!({
        "markings": plan.markings,
        "actions": plan.actions,
        "bands": plan.bands,
        "degree": plan.degree,
        "annuli": surface.annuli.len(),
    });
    s.emit(&json::to_string(&out))
}

fn run_sweep(args: SweepArgs, s: &Settings) -> anyhow::Result<()> {
    let js = match args.j {
        Some(js) => js,
        None => match s.file.get::<String>("j")? {
            Some(list) => list
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| InputError(format!("config key 'j': {e}")))?,
            None => DEFAULT_SWEEP_J.to_vec(),
        },
    };
    let policy = s.policy(args.refine)?;
    let result = sweep(&js, &policy, s.seed)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let fits = standard_fits(&result.records)?;
    s.emit(&emit_report(&result.records, &fits, s.format, s.seed)?)?;
    if let Some(p) = args.plot {
        fs::write(&p, emit_plot_script(&result.records, s.seed)).with_context(|| format!("writing {}", p.display()))?;
    }
    let violations = sweep_violations(&result.records);
    if !violations.is_empty() {
        return Err(ToleranceViolation(violations.join("; ")).into());
    }
    Ok(())
}

fn run_report(args: ReportArgs, s: &Settings) -> anyhow::Result<()> {
    let text = fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let in_format = if text.trim_start().starts_with('{') {
        ReportFormat::Json
    } else {
        ReportFormat::Csv
    };
    let parsed = parse_report(&text, in_format)?;
    let fits = standard_fits(&parsed.records)?;
    let out = match s.format {
        ReportFormat::Json => emit_report(&parsed.records, &fits, ReportFormat::Json, parsed.seed)?,
        ReportFormat::Csv => {
            let mut t = format!("# syslab {} seed={} | x_field,y_field,slope,intercept,r_squared,points_used\n", parsed.version, parsed.seed);
            for f in &fits {
                t.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    f.x_field,
                    f.y_field,
                    fmt17(f.fit.slope),
                    fmt17(f.fit.intercept),
                    fmt17(f.fit.r_squared),
                    f.fit.points_used
                ));
            }
            t
        }
    };
    if fits.is_empty() {
        eprintln!("warning: fewer than 3 records; no exponents fitted");
    }
    s.emit(&out)?;
    if let Some(p) = args.plot {
        fs::write(&p, emit_plot_script(&parsed.records, parsed.seed))
            .with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let settings = Settings::resolve(cli.global)?;
    match cli.command {
        Command::Metric(c) => run_metric(c, &settings),
        Command::Verify(c) => run_verify(c, &settings),
        Command::Systole(c) => run_systole(c, &settings),
        Command::Cut(c) => run_cut(c, &settings),
        Command::Pants(c) => run_pants(c, &settings),
        Command::Sweep(a) => run_sweep(a, &settings),
        Command::Report(a) => run_report(a, &settings),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ToleranceViolation>().is_some() {
        return 3;
    }
    if err.downcast_ref::<InputError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<syslab_core::Error>() {
        Some(syslab_core::Error::Validation(_) | syslab_core::Error::Argument(_)) => 2,
        Some(syslab_core::Error::Budget(_)) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("syslab: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Runs one command in-process with `--out` pointed at a scratch file;
    /// returns the exit code and whatever was written.
    fn syslab(args: &[&str]) -> (u8, String) {
        let out = scratch(&format!("out-{}", args.join("_").replace(['/', ' ', ','], "-")));
        let _ = fs::remove_file(&out);
        let mut argv = vec!["syslab", "--out", out.to_str().unwrap()];
        argv.extend_from_slice(args);
        let code = match Cli::try_parse_from(argv) {
            Err(_) => 2,
            Ok(cli) => match run(cli) {
                Ok(()) => 0,
                Err(e) => exit_code(&e),
            },
        };
        (code, fs::read_to_string(&out).unwrap_or_default())
    }

    fn scratch(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("syslab-cli-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    fn json_ok(args: &[&str]) -> Value {
        let (code, text) = syslab(args);
        assert_eq!(code, 0, "{args:?}");
        serde_json::from_str(&text).unwrap()
    }

    #[test]
    fn metric_eval_prints_tensor_and_psi() {
        let v = json_ok(&["metric", "eval", "--j", "4", "--x", "2", "--y", "0.1", "--z", "0.2"]);
        assert_eq!(v["metric"]["gyy"].as_f64().unwrap(), 5.0);
        assert_eq!(v["metric"]["gyz"].as_f64().unwrap(), -2.0);
        assert!((v["psi"]["wxy"].as_f64().unwrap() - 5f64.sqrt()).abs() < 1e-12);
        let (_, text) = syslab(&["metric", "volume", "--j", "3"]);
        let raw = text.split("\"volume\":").nth(1).unwrap().split(['}', ',']).next().unwrap();
        // 17 significant digits: one before the point, sixteen after
        assert_eq!(raw.split('e').next().unwrap().len(), 18, "{raw}");
        assert!((raw.parse::<f64>().unwrap() - 6.0).abs() < 1e-6);
    }

    #[test]
    fn systole_writes_witness_listing() {
        let chain = scratch("sys1.chain");
        let v = json_ok(&["systole", "sys1", "--j", "1", "--res", "8,8,8", "--chain-out", chain.to_str().unwrap()]);
        assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 0.05);
        assert_eq!(v["resolution"], json!([8, 8, 8]));
        let listing = fs::read_to_string(&chain).unwrap();
        assert!(listing.starts_with("#chain dim=1 mesh=8x8x8\n"));
        assert!(listing.lines().skip(1).all(|l| l.parse::<usize>().is_ok()));
    }

    #[test]
    fn cut_and_stable_report_certificates() {
        let v = json_ok(&["cut", "sys2rel", "--dual", "dz", "--j", "2", "--res", "16,16,8"]);
        assert!(v["value"].as_f64().unwrap() >= v["certificate"].as_f64().unwrap() - 1e-6);
        assert_eq!(v["class"], json!([1, 0]));
        let s = json_ok(&["systole", "stable", "--class", "0,1", "--j", "1", "--res", "8,8,8", "--max-multiple", "4"]);
        assert!(s["certificate"].as_f64().unwrap() <= s["value"].as_f64().unwrap() + 1e-12);
        assert_eq!(syslab(&["cut", "sys2rel", "--dual", "dx", "--j", "2"]).0, 2);
    }

    #[test]
    fn pants_build_and_validation_failure() {
        let good = scratch("torus.surface");
        fs::write(&good, "region c cylinder\nannulus L0 s=c:0 n=c:1\n").unwrap();
        let v = json_ok(&["pants", "build", "--in", good.to_str().unwrap()]);
        assert!(v["degree"].as_u64().unwrap() >= 1);
        assert_eq!(v["markings"]["c"], json!(["SP", "NP"]));
        let bad = scratch("dangling.surface");
        fs::write(&bad, "region P pants\nannulus a s=P:0 n=P:1\n").unwrap();
        assert_eq!(syslab(&["pants", "build", "--in", bad.to_str().unwrap()]).0, 2);
    }

    #[test]
    fn exit_codes_for_budget_and_tolerance() {
        assert_eq!(syslab(&["systole", "sys1", "--j", "2", "--max-cells", "1000"]).0, 4);
        assert_eq!(syslab(&["verify", "calibration", "--j", "2", "--points", "100", "--tol=-1e-3"]).0, 3);
        assert!(json_ok(&["verify", "calibration", "--j", "2", "--points", "500"])["passed"].as_bool().unwrap());
        assert_eq!(syslab(&["sweep", "--j", "1,2,3", "--format", "xml"]).0, 2);
        assert_eq!(syslab(&["sweep", "--j", "2,1"]).0, 2);
    }

    #[test]
    fn config_file_and_flag_precedence() {
        let cfg = scratch("run.conf");
        fs::write(&cfg, "# small sweep\nseed = 11\nformat = json\nj = 1,2,3\n").unwrap();
        let v = json_ok(&["sweep", "--config", cfg.to_str().unwrap()]);
        assert_eq!(v["seed"], 11);
        assert_eq!(v["records"].as_array().unwrap().len(), 3);
        assert_eq!(v["fits"].as_array().unwrap().len(), 9);
        let (code, text) = syslab(&["sweep", "--config", cfg.to_str().unwrap(), "--seed", "5", "--format", "csv"]);
        assert_eq!(code, 0);
        assert!(text.starts_with("# syslab ") && text.contains("seed=5"));
        assert_eq!(text.lines().count(), 4);
        let bad = scratch("bad.conf");
        fs::write(&bad, "colour = red\n").unwrap();
        assert_eq!(syslab(&["sweep", "--config", bad.to_str().unwrap()]).0, 2);
    }

    #[test]
    fn report_refits_a_saved_sweep() {
        let plot = scratch("plot.py");
        let (code, csv_text) = syslab(&["sweep", "--j", "1,2,4", "--plot", plot.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert!(fs::read_to_string(&plot).unwrap().contains("loglog"));
        let csv = scratch("sweep.csv");
        fs::write(&csv, csv_text).unwrap();
        let v = json_ok(&["report", "--in", csv.to_str().unwrap(), "--format", "json"]);
        let vol_fit = v["fits"].as_array().unwrap().iter().find(|f| f["y_field"] == "vol").unwrap().clone();
        assert!((vol_fit["slope"].as_f64().unwrap() - 1.0).abs() < 0.05);
        let (_, table) = syslab(&["report", "--in", csv.to_str().unwrap()]);
        assert!(table.lines().nth(1).unwrap().starts_with("j,vol,"));
    }
}
