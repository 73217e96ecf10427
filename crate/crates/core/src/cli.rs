//! Command-line front end: `solve`, `trace`, `scan`, `linearize`, `verify`, `mesh`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 no root found, 3 a
//! certificate or verdict failed, 64 bad usage.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    certify, profile_sample, revolve_mesh, write_file, Certificate, HypersurfaceProfile,
    ProfileDocument,
};
use crate::integrator::IntegratorConfig;
use crate::linearization::{
    finite_difference_check, solve_plane_linearization, solve_sphere_linearization, Side,
};
use crate::params::Params;
use crate::shooting::{
    assemble_closed_profile, default_offsets, find_root_offset, root_at, shot_trajectory,
    trajectory_points, verify_bounds, ShotOutcome, DEFAULT_GRID_COUNT, DEFAULT_LOG_COUNT,
    DEFAULT_ROOT_TOL,
};
use crate::store::scan_with_store;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NO_ROOT: i32 = 2;
pub const EXIT_CERTIFICATION: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// Residual bound for accepting a profile.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "lambda-surfaces", version, about = "Shooting solver for lambda-hypersurfaces of revolution")]
#[command(allow_negative_numbers = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan, root-find, assemble and certify closed profiles.
    Solve(SolveArgs),
    /// Integrate a single shot and export its trajectory.
    Trace(TraceArgs),
    /// Evaluate the shooting map on a grid (JSON-lines store).
    Scan(ScanArgs),
    /// Solve a linearized problem and print its sign verdicts.
    Linearize(LinearizeArgs),
    /// Check the near-plane bounds for one shot.
    Verify(VerifyArgs),
    /// Revolve an n = 2 profile into an OBJ mesh.
    Mesh(MeshArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub max_step: Option<f64>,
    #[arg(long)]
    pub max_arclength: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for grid shots (default: available cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Flat `key = value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub grid_count: Option<usize>,
    #[arg(long)]
    pub log_count: Option<usize>,
    #[arg(long)]
    pub root_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Reuse shots from an existing scan store in the output directory.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "epsilon", required_unless_present = "epsilon")]
    pub x0: Option<f64>,
    /// Start at `x0 = -lambda + epsilon`.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Linear x0 grid `[lo, hi]` instead of the default grid.
    #[arg(long, requires = "hi", allow_hyphen_values = true)]
    pub lo: Option<f64>,
    #[arg(long, requires = "lo", allow_hyphen_values = true)]
    pub hi: Option<f64>,
    #[arg(long)]
    pub resume: bool,
    /// Store path (default: OUT/scan.jsonl).
    #[arg(long)]
    pub store: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LinearizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub side: SideArg,
    /// Plane side: integrate on `[0, r_max]` (default sqrt(2n)).
    #[arg(long)]
    pub r_max: Option<f64>,
    /// Also run the finite-difference check at this offset.
    #[arg(long)]
    pub fd_epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SideArg {
    Plane,
    Sphere,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Mesh the closed profile through this x0 (e.g. the sphere radius)
    /// instead of solving.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    /// Which root (ordered by x-hat) to mesh.
    #[arg(long, default_value_t = 0)]
    pub root: usize,
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: Params,
    pub integrator: IntegratorConfig,
    pub grid_count: usize,
    pub log_count: usize,
    pub root_tol: f64,
    pub out: PathBuf,
    pub format: Format,
    pub jobs: usize,
}

const CONFIG_KEYS: &[&str] = &[
    "n",
    "lambda",
    "rel_tol",
    "abs_tol",
    "max_step",
    "series_start_step",
    "max_arclength",
    "event_tol",
    "grid_count",
    "log_count",
    "root_tol",
    "out",
    "format",
    "jobs",
];

/// Parses a flat `key = value` file; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        let (k, v) = (k.trim().replace('-', "_"), v.trim().to_string());
        if !CONFIG_KEYS.contains(&k.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key '{k}'", i + 1)));
        }
        if map.insert(k.clone(), v).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key '{k}'", i + 1)));
        }
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("invalid value '{v}' for {key}")))
}

impl RunConfig {
    /// Defaults, overridden by the config file, overridden by flags.
    pub fn resolve(flags: &CommonArgs) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        let get = |k: &str| file.get(k).map(String::as_str);

        fn pick<T: std::str::FromStr + Copy>(flag: Option<T>, file: Option<&str>, key: &str) -> Result<Option<T>> {
            match (flag, file) {
                (Some(v), _) => Ok(Some(v)),
                (None, Some(s)) => parse_value(key, s).map(Some),
                (None, None) => Ok(None),
            }
        }

        let n = pick(flags.n, get("n"), "n")?
            .ok_or_else(|| Error::Config("--n is required (flag or config file)".into()))?;
        let lambda = pick(flags.lambda, get("lambda"), "lambda")?
            .ok_or_else(|| Error::Config("--lambda is required (flag or config file)".into()))?;
        let params = Params::new(n, lambda)?;

        let d = IntegratorConfig::default();
        let integrator = IntegratorConfig {
            rel_tol: pick(flags.rel_tol, get("rel_tol"), "rel_tol")?.unwrap_or(d.rel_tol),
            abs_tol: pick(flags.abs_tol, get("abs_tol"), "abs_tol")?.unwrap_or(d.abs_tol),
            max_step: pick(flags.max_step, get("max_step"), "max_step")?.unwrap_or(d.max_step),
            series_start_step: pick(None, get("series_start_step"), "series_start_step")?
                .unwrap_or(d.series_start_step),
            max_arclength: pick(flags.max_arclength, get("max_arclength"), "max_arclength")?
                .unwrap_or(d.max_arclength),
            event_tol: pick(None, get("event_tol"), "event_tol")?.unwrap_or(d.event_tol),
        };
        integrator.validate()?;

        let grid_count = pick(flags.grid_count, get("grid_count"), "grid_count")?.unwrap_or(DEFAULT_GRID_COUNT);
        let log_count = pick(flags.log_count, get("log_count"), "log_count")?.unwrap_or(DEFAULT_LOG_COUNT);
        let root_tol = pick(flags.root_tol, get("root_tol"), "root_tol")?.unwrap_or(DEFAULT_ROOT_TOL);
        let jobs = pick(flags.jobs, get("jobs"), "jobs")?.unwrap_or_else(|| {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        });
        let out = match (&flags.out, get("out")) {
            (Some(p), _) => p.clone(),
            (None, Some(s)) => PathBuf::from(s),
            (None, None) => PathBuf::from("."),
        };
        let format = match (flags.format, get("format")) {
            (Some(f), _) => f,
            (None, Some(s)) => Format::from_str(s, true)
                .map_err(|_| Error::Config(format!("invalid value '{s}' for format")))?,
            (None, None) => Format::Csv,
        };

        if grid_count < 2 {
            return Err(Error::Config(format!("grid_count must be at least 2, got {grid_count}")));
        }
        if jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        if !(root_tol > 0.0 && root_tol.is_finite()) {
            return Err(Error::Config(format!("root_tol must be positive, got {root_tol}")));
        }
        Ok(RunConfig {
            params,
            integrator,
            grid_count,
            log_count,
            root_tol,
            out,
            format,
            jobs,
        })
    }

    fn prepare_out(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))
    }

    fn offsets(&self) -> Vec<f64> {
        default_offsets(&self.params, self.grid_count, self.log_count)
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParams(_) | Error::Domain(_) | Error::Config(_) | Error::Unsupported(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a, stdout, stderr),
        Command::Trace(a) => cmd_trace(a, stdout, stderr),
        Command::Scan(a) => cmd_scan(a, stdout, stderr),
        Command::Linearize(a) => cmd_linearize(a, stdout, stderr),
        Command::Verify(a) => cmd_verify(a, stdout, stderr),
        Command::Mesh(a) => cmd_mesh(a, stdout, stderr),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn warn_range(cfg: &RunConfig, stderr: &mut dyn Write) {
    let p = &cfg.params;
    if !p.in_theorem_range() {
        let _ = writeln!(
            stderr,
            "warning: lambda = {} is outside theorem range ({:.6}, 0) for n = {}",
            p.lambda,
            p.theorem_lambda_min(),
            p.n
        );
    }
}

fn print_json<T: Serialize>(stdout: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: PathBuf::from("<stdout>"),
        source: e,
    })?;
    writeln!(stdout, "{text}").map_err(|e| Error::io("<stdout>", e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    write_file(path, &(text + "\n"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSummary {
    pub x_hat: f64,
    pub epsilon_hat: f64,
    pub r_hat: f64,
    pub s_hat: f64,
    pub iterations: usize,
    pub residual: f64,
    pub inside_theorem_interval: bool,
    pub r_hat_above_sphere_radius: bool,
    pub certificate: Certificate,
    pub certified: bool,
    pub profile_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub params: Params,
    pub sphere_radius: f64,
    pub outside_theorem_range: bool,
    pub grid_points: usize,
    pub failed_shots: usize,
    pub brackets: usize,
    pub roots: Vec<RootSummary>,
    pub errors: Vec<String>,
}

/// Everything `solve` computes, in memory.
pub struct Solved {
    pub summary: SolveSummary,
    pub profiles: Vec<HypersurfaceProfile>,
}

/// The full solve pipeline without file output besides the scan store.
pub fn solve_profiles(cfg: &RunConfig, store: Option<(&Path, bool)>) -> Result<Solved> {
    let p = &cfg.params;
    let ic = &cfg.integrator;
    let offsets = cfg.offsets();
    let scan = match store {
        Some((path, resume)) => {
            scan_with_store(p, &offsets, ic, cfg.jobs, cfg.root_tol, path, resume)?.scan
        }
        None => crate::shooting::scan_offsets(p, &offsets, ic, cfg.jobs, cfg.root_tol)?,
    };
    let mut errors = Vec::new();
    let mut roots = Vec::new();
    let mut profiles = Vec::new();
    for b in &scan.brackets {
        let found = find_root_offset(p, b.offsets(), cfg.root_tol, ic)
            .and_then(|r| assemble_closed_profile(p, &r, ic).map(|c| (r, c)));
        let (root, closed) = match found {
            Ok(v) => v,
            Err(e) => {
                errors.push(format!("bracket x0 in [{}, {}]: {e}", b.lo.x0, b.hi.x0));
                continue;
            }
        };
        let hp = HypersurfaceProfile::from_closed(&closed);
        let cert = certify(&hp, ic)?;
        roots.push(RootSummary {
            x_hat: root.x_hat,
            epsilon_hat: root.epsilon_hat,
            r_hat: root.r_hat,
            s_hat: root.s_hat,
            iterations: root.iterations,
            residual: root.residual,
            inside_theorem_interval: root.inside_theorem_interval(p),
            r_hat_above_sphere_radius: root.r_hat > p.sphere_radius(),
            certified: cert.accepted(RESIDUAL_TOL),
            certificate: cert,
            profile_file: String::new(),
        });
        profiles.push(hp);
    }
    Ok(Solved {
        summary: SolveSummary {
            params: *p,
            sphere_radius: p.sphere_radius(),
            outside_theorem_range: !p.in_theorem_range(),
            grid_points: scan.outcomes.len(),
            failed_shots: scan.failures().count(),
            brackets: scan.brackets.len(),
            roots,
            errors,
        },
        profiles,
    })
}

fn cmd_solve(a: &SolveArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let cfg = RunConfig::resolve(&a.common)?;
    warn_range(&cfg, stderr);
    cfg.prepare_out()?;
    let store = cfg.out.join("scan.jsonl");
    let mut solved = solve_profiles(&cfg, Some((&store, a.resume)))?;
    for e in &solved.summary.errors {
        let _ = writeln!(stderr, "warning: {e}");
    }
    for (k, (root, hp)) in solved.summary.roots.iter_mut().zip(&solved.profiles).enumerate() {
        let name = match cfg.format {
            Format::Csv => format!("profile_{k}.csv"),
            Format::Json => format!("profile_{k}.json"),
        };
        let path = cfg.out.join(&name);
        match cfg.format {
            Format::Csv => hp.write_csv(&path)?,
            Format::Json => ProfileDocument {
                profile: hp.clone(),
                certificate: Some(root.certificate),
            }
            .write_json(&path)?,
        }
        root.profile_file = name;
    }
    write_json(&cfg.out.join("summary.json"), &solved.summary)?;
    print_json(stdout, &solved.summary)?;
    let s = &solved.summary;
    Ok(if s.roots.is_empty() {
        let _ = writeln!(stderr, "no root found");
        EXIT_NO_ROOT
    } else if s.roots.iter().any(|r| r.certified) {
        EXIT_OK
    } else {
        let _ = writeln!(stderr, "roots found but none certified convex, embedded and residual-clean");
        EXIT_CERTIFICATION
    })
}

fn cmd_trace(a: &TraceArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let cfg = RunConfig::resolve(&a.common)?;
    warn_range(&cfg, stderr);
    let p = &cfg.params;
    let epsilon = match (a.x0, a.epsilon) {
        (Some(x0), _) => x0 + p.lambda,
        (None, Some(e)) => e,
        (None, None) => return Err(Error::Config("one of --x0, --epsilon is required".into())),
    };
    let traj = shot_trajectory(p, epsilon, &cfg.integrator)?;
    let outcome = crate::shooting::shot_outcome(p, epsilon, &cfg.integrator)?;
    cfg.prepare_out()?;
    let points = trajectory_points(p, epsilon, &traj);
    match cfg.format {
        Format::Csv => {
            let mut text = String::from("s,x,r,theta,dtheta,kappa_1,kappa_n,residual\n");
            for q in &points {
                let s = profile_sample(p, q);
                text.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    s.s, s.x, s.r, s.theta, s.dtheta, s.kappa_1, s.kappa_n, s.residual
                ));
            }
            write_file(&cfg.out.join("trace.csv"), &text)?;
        }
        Format::Json => {
            #[derive(Serialize)]
            struct TraceDoc<'a> {
                outcome: &'a ShotOutcome,
                samples: Vec<crate::geometry::ProfileSample>,
            }
            let doc = TraceDoc {
                outcome: &outcome,
                samples: points.iter().map(|q| profile_sample(p, q)).collect(),
            };
            write_json(&cfg.out.join("trace.json"), &doc)?;
        }
    }
    print_json(stdout, &outcome)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct ScanSummary<'a> {
    params: Params,
    outside_theorem_range: bool,
    grid_points: usize,
    computed: usize,
    reused: usize,
    failed_shots: usize,
    brackets: Vec<(f64, f64)>,
    store: &'a str,
}

fn cmd_scan(a: &ScanArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let cfg = RunConfig::resolve(&a.common)?;
    warn_range(&cfg, stderr);
    let p = &cfg.params;
    let offsets = match (a.lo, a.hi) {
        (Some(lo), Some(hi)) => {
            if !(lo > -p.lambda && hi > lo) {
                return Err(Error::Domain(format!("scan needs -lambda < lo < hi, got [{lo}, {hi}]")));
            }
            let last = (cfg.grid_count - 1) as f64;
            (0..cfg.grid_count)
                .map(|k| lo + (hi - lo) * k as f64 / last + p.lambda)
                .collect()
        }
        _ => cfg.offsets(),
    };
    cfg.prepare_out()?;
    let store = a.store.clone().unwrap_or_else(|| cfg.out.join("scan.jsonl"));
    let res = scan_with_store(p, &offsets, &cfg.integrator, cfg.jobs, cfg.root_tol, &store, a.resume)?;
    let store_name = store.display().to_string();
    print_json(
        stdout,
        &ScanSummary {
            params: *p,
            outside_theorem_range: res.scan.outside_theorem_range,
            grid_points: res.scan.outcomes.len(),
            computed: res.computed,
            reused: res.reused,
            failed_shots: res.scan.failures().count(),
            brackets: res.scan.brackets.iter().map(|b| (b.lo.x0, b.hi.x0)).collect(),
            store: &store_name,
        },
    )?;
    Ok(EXIT_OK)
}

fn verdict(stdout: &mut dyn Write, label: &str, ok: bool, applicable: bool) -> bool {
    let tag = match (ok, applicable) {
        (true, _) => "PASS",
        (false, true) => "FAIL",
        (false, false) => "FAIL (not claimed for these parameters)",
    };
    let _ = writeln!(stdout, "{label}: {tag}");
    ok || !applicable
}

fn cmd_linearize(a: &LinearizeArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let cfg = RunConfig::resolve(&a.common)?;
    let p = &cfg.params;
    let ic = &cfg.integrator;
    cfg.prepare_out()?;
    let mut all = true;
    let side = match a.side {
        SideArg::Plane => {
            let r_max = a.r_max.unwrap_or((2.0 * p.nf()).sqrt());
            let pl = solve_plane_linearization(p, r_max, ic)?;
            pl.write_csv(&cfg.out.join("linearization_plane.csv"))?;
            let nf = p.nf();
            let _ = writeln!(stdout, "w(sqrt(n)) = {:.16e}", pl.w_at_sqrt_n);
            let _ = writeln!(stdout, "w(sqrt(2n)) = {:.16e}", pl.w_at_sqrt_2n);
            let _ = writeln!(stdout, "dw/dxi(0) = {:.16e} (expected {:.16e})", pl.w_xi_0, -1.0 / (2.0 * nf));
            let _ = writeln!(
                stdout,
                "d2w/dxi2(0) = {:.16e} (expected {:.16e})",
                pl.w_xixi_0,
                -1.0 / (4.0 * nf * (nf + 2.0))
            );
            all &= verdict(stdout, "w(sqrt(n)) > 0", pl.positive_at_sqrt_n(), true);
            all &= verdict(stdout, "w(sqrt(2n)) < 0", pl.negative_at_sqrt_2n(), true);
            all &= verdict(stdout, "dw/dxi < 0 and d2w/dxi2 < 0", pl.strictly_concave_decreasing(), true);
            Side::Plane
        }
        SideArg::Sphere => {
            let sp = solve_sphere_linearization(p, ic)?;
            sp.write_csv(&cfg.out.join("linearization_sphere.csv"))?;
            let claimed = p.lambda > p.theorem_lambda_min() && p.lambda <= 0.0;
            if !claimed {
                let _ = writeln!(stderr, "warning: sign claims cover -2/sqrt(n+2) < lambda <= 0 only");
            }
            let _ = writeln!(stdout, "A = {:.16e}", sp.a);
            let _ = writeln!(stdout, "w(pi/2) = {:.16e}", sp.w_end);
            let _ = writeln!(stdout, "w'(pi/2) = {:.16e}", sp.wp_end);
            let (d1, d2, d3) = sp.xi_one;
            let _ = writeln!(stdout, "w_xi(1), w_xixi(1), w_xixixi(1) = {d1:.16e}, {d2:.16e}, {d3:.16e}");
            all &= verdict(stdout, "w(pi/2) < 0", sp.w_end < 0.0, claimed);
            all &= verdict(stdout, "w'(pi/2) < 0", sp.wp_end < 0.0, claimed);
            all &= verdict(stdout, "d2w/dxi2(0) > 0 and d3w/dxi3(0) < 0", sp.xi_zero_chain(), claimed);
            Side::Sphere
        }
    };
    if let Some(eps) = a.fd_epsilon {
        let fd = finite_difference_check(p, eps, side, ic)?;
        let _ = writeln!(stdout, "finite-difference deviation at epsilon = {eps:e}: {:.3e}", fd.max_deviation);
        all &= verdict(stdout, "deviation <= 1e-6", fd.max_deviation <= 1e-6, true);
    }
    Ok(if all { EXIT_OK } else { EXIT_CERTIFICATION })
}

fn cmd_verify(a: &VerifyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let cfg = RunConfig::resolve(&a.common)?;
    warn_range(&cfg, stderr);
    let rep = verify_bounds(&cfg.params, a.epsilon, &cfg.integrator)?;
    print_json(stdout, &rep)?;
    if !rep.prop31_ok {
        let _ = writeln!(
            stderr,
            "note: the x* lower bound is only guaranteed for epsilon far below double precision"
        );
    }
    let ok = rep.lemma31_ok && rep.lemma32_ok && (rep.lemma33_ok || !rep.lemma33_applicable);
    Ok(if ok { EXIT_OK } else { EXIT_CERTIFICATION })
}

fn cmd_mesh(a: &MeshArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let cfg = RunConfig::resolve(&a.common)?;
    let p = &cfg.params;
    if p.n != 2 {
        return Err(Error::Unsupported(format!(
            "meshes are only produced for n = 2; use solve for profile data (n = {})",
            p.n
        )));
    }
    warn_range(&cfg, stderr);
    let ic = &cfg.integrator;
    let profile = match a.x0 {
        Some(x0) => {
            let root = root_at(p, x0 + p.lambda, cfg.root_tol, ic)?;
            HypersurfaceProfile::from_closed(&assemble_closed_profile(p, &root, ic)?)
        }
        None => {
            let solved = solve_profiles(&cfg, None)?;
            match solved.profiles.into_iter().nth(a.root) {
                Some(hp) => hp,
                None => {
                    let _ = writeln!(stderr, "no root with index {}", a.root);
                    return Ok(EXIT_NO_ROOT);
                }
            }
        }
    };
    let mesh = revolve_mesh(&profile, a.resolution)?;
    cfg.prepare_out()?;
    let path = cfg.out.join("mesh.obj");
    mesh.write_obj(&path)?;
    #[derive(Serialize)]
    struct MeshSummary {
        x_hat: f64,
        vertices: usize,
        faces: usize,
        euler_characteristic: i64,
        watertight: bool,
        volume: f64,
        file: String,
    }
    print_json(
        stdout,
        &MeshSummary {
            x_hat: profile.x_hat,
            vertices: mesh.vertices.len(),
            faces: mesh.faces.len(),
            euler_characteristic: mesh.euler_characteristic(),
            watertight: mesh.is_watertight(),
            volume: mesh.signed_volume(),
            file: path.display().to_string(),
        },
    )?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(parse_config_text("n = 2\nfoo = 3\n").is_err());
        let m = parse_config_text("# comment\nn = 2\nrel-tol = 1e-9 # inline\n").unwrap();
        assert_eq!(m["rel_tol"], "1e-9");
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "n = 3\nlambda = -0.9\nrel_tol = 1e-9\njobs = 2\n").unwrap();
        let flags = CommonArgs {
            config: Some(path),
            n: Some(2),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&flags).unwrap();
        assert_eq!(cfg.params.n, 2);
        assert_eq!(cfg.params.lambda, -0.9);
        assert_eq!(cfg.integrator.rel_tol, 1e-9);
        assert_eq!(cfg.jobs, 2);
        assert_eq!(cfg.integrator.abs_tol, 1e-12);
    }

    #[test]
    fn bad_n_is_usage_error() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(["lambda-surfaces", "solve", "--n", "1", "--lambda", "-1"], &mut o, &mut e);
        assert_eq!(code, EXIT_USAGE);
        let code = run(["lambda-surfaces", "bogus"], &mut o, &mut e);
        assert_eq!(code, EXIT_USAGE);
    }
}
