//! The `defectlab` command-line driver.
//!
//! Every subcommand runs a family of checks and writes one [`Report`]. Exit
//! status is 0 when every check passes, 1 when a check fails (the report is
//! still written) and 2 on argument errors.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::cover::{winding_of_loop, CoverSpec, SurfacePoint, DEFAULT_CLEARANCE_FACTOR};
use crate::flows::scenario::run_scenario_json;
use crate::flows::{commutator_apply, sheet_separation, traced_loop, Bump, StateFn};
use crate::localexp::linalg::op_norm;
use crate::localexp::{
    cosine_similarity, defect_indices_1d, exponentiate_local, random_suite, resolvent_commutation,
    subdivision_residual, verify_group_law, witness_csv, Boundary, Generator, LocalFlow,
};
use crate::quad::{verify_kv_identity_with, verify_mellin, verify_nicholson, KvRoute};
use crate::report::{Check, Report};
use crate::specfun::kv;
use crate::spectral::{
    defect_basis_finite, defect_dimension, defect_norm_parseval, lp_lc_classify, lplc_log_ratio,
    radial_profile_csv, residual_convergence, Endpoint, GFunction, Gauge, RadialGrid,
};
use crate::{Error, Result};

pub const SEED_ENV: &str = "DEFECTLAB_SEED";
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "defectlab", version, about = "Reproducible numerical checks for deficiency indices and lifted flows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for the random matrix suite; overrides DEFECTLAB_SEED.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// ∫₀^∞ K_ν(z)² z dz = ½πν / sin πν.
    KvVerify(KvArgs),
    /// K_ν(z)² = 2 ∫₀^∞ K_{2ν}(2z cosh t) dt.
    Nicholson(NicholsonArgs),
    /// The Mellin transform of K_ν.
    Mellin(MellinArgs),
    /// Defect bases on finite covers and the radial residual convergence.
    DefectBasis(DefectBasisArgs),
    /// Limit-point / limit-circle classification at r = 0.
    Lplc(LplcArgs),
    /// The defect norm by direct quadrature and by the weighted route.
    Parseval(ParsevalArgs),
    /// Run a flow scenario file.
    FlowScenario(FlowScenarioArgs),
    /// Sheet shifts of the translation commutator.
    Commutator(CommutatorArgs),
    /// Exponentiation of local flows.
    Exponentiate(ExponentiateArgs),
    /// Defect indices of the discretized d/dx.
    #[command(name = "indices-1d")]
    Indices1d(IndicesArgs),
    /// Resolvent commutation of matrix generators.
    Resolvent(ResolventArgs),
    /// Every default check.
    All,
}

#[derive(Debug, Clone, Parser)]
pub struct KvArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.3, 0.5, 0.7, 0.9], allow_negative_numbers = true)]
    pub nu: Vec<f64>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Route::Direct)]
    pub route: Route,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Route {
    Direct,
    Fubini,
}

#[derive(Debug, Clone, Parser)]
pub struct NicholsonArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.45], allow_negative_numbers = true)]
    pub nu: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
    pub z: Vec<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Clone, Parser)]
pub struct MellinArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.3, 0.6], allow_negative_numbers = true)]
    pub nu: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Clone, Parser)]
pub struct DefectBasisArgs {
    /// Sheet counts N of the finite covers.
    #[arg(long, value_delimiter = ',', default_values_t = [1u32, 2, 3, 4])]
    pub cover: Vec<u32>,
    /// Coarse grid step; the fine grid halves it.
    #[arg(long, default_value_t = 0.01)]
    pub h: f64,
    #[arg(long, default_value_t = 0.1)]
    pub r_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub r_max: f64,
    /// Write the radial profile `r,K_nu` of this order to `--profile-out`.
    #[arg(long, requires = "profile_out")]
    pub profile_nu: Option<f64>,
    #[arg(long, requires = "profile_nu")]
    pub profile_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Parser)]
pub struct LplcArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.999, 1.0], allow_negative_numbers = true)]
    pub nu: Vec<f64>,
}

#[derive(Debug, Clone, Parser)]
pub struct ParsevalArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub center: f64,
    #[arg(long, default_value_t = 0.5)]
    pub half_width: f64,
    /// Gauss–Legendre nodes on the support of g.
    #[arg(long, default_value_t = 32)]
    pub nodes: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Clone, Parser)]
pub struct FlowScenarioArgs {
    /// JSON scenario file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Allowed relative drift of the norm along the trace.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Clone, Parser)]
pub struct CommutatorArgs {
    #[arg(long, default_value_t = 2.5, allow_negative_numbers = true)]
    pub s: f64,
    #[arg(long, default_value_t = 2.5, allow_negative_numbers = true)]
    pub t: f64,
    #[arg(long, default_value_t = 0.3)]
    pub radius: f64,
    /// Sheet count of the finite cover for the order check.
    #[arg(long, default_value_t = 3)]
    pub sheets: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Demo {
    /// The planar rotation generator `[[0, 1], [-1, 0]]`.
    Rotation,
}

#[derive(Debug, Clone, Parser)]
pub struct ExponentiateArgs {
    #[arg(long, value_enum)]
    pub demo: Option<Demo>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 2.7, -3.1], allow_negative_numbers = true)]
    pub t: Vec<f64>,
    /// Size of the random suite.
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    /// Bound on the oracle and isometry residuals; 1e-10 for the suite and
    /// 1e-8 for a demo.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub group_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub subdivision_tol: f64,
}

#[derive(Debug, Clone, Parser)]
pub struct IndicesArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [100usize, 200, 400])]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    pub margin: usize,
    #[arg(long, default_value_t = 0.999)]
    pub min_cosine: f64,
    /// Write the witnesses of the first grid as CSV (`<path>` gets the `+`
    /// witness, `<path>.minus` the `-` witness).
    #[arg(long)]
    pub witness_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Parser)]
pub struct ResolventArgs {
    /// `re,im`.
    #[arg(long, default_value = "1,0.5", value_parser = parse_complex, allow_negative_numbers = true)]
    pub lambda1: Complex64,
    #[arg(long, default_value = "-0.7,2", value_parser = parse_complex, allow_negative_numbers = true)]
    pub lambda2: Complex64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Least commutator norm expected of the non-commuting pair.
    #[arg(long, default_value_t = 1e-3)]
    pub gap: f64,
}

fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|e| format!("{p:?}: {e}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected `re,im`, got {s:?}")),
    }
}

/// Resolved global options.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub format: Format,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl RunConfig {
    /// The seed comes from `--seed`, then `DEFECTLAB_SEED`, then the default.
    pub fn resolve(cli: &Cli, env_seed: Option<&str>) -> std::result::Result<Self, String> {
        let seed = match (cli.seed, env_seed) {
            (Some(s), _) => s,
            (None, Some(v)) => v
                .trim()
                .parse()
                .map_err(|e| format!("{SEED_ENV}={v:?} is not a seed: {e}"))?,
            (None, None) => DEFAULT_SEED,
        };
        Ok(Self {
            format: cli.format,
            out: cli.out.clone(),
            seed,
        })
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let cfg = match RunConfig::resolve(&cli, env_seed.as_deref()) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    let start = Instant::now();
    let report = match execute(&cli.command, &cfg) {
        Ok(r) => r,
        Err(e) if is_argument_error(&e) => {
            eprintln!("error: {e}");
            return 2;
        }
        Err(e) => {
            let mut r = Report::new(command_name(&cli.command));
            r.checks.push(Check::failed(command_name(&cli.command), &e.to_string()));
            r
        }
    };
    let mut report = report;
    report.params.insert("seed".into(), cfg.seed.into());
    report.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let text = match cfg.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    if let Err(e) = emit(&text, cfg.out.as_deref()) {
        eprintln!("error: {e}");
        return 2;
    }
    let passed = report.checks.iter().filter(|c| c.pass).count();
    eprintln!("{}: {passed}/{} checks passed", report.command, report.checks.len());
    if report.passed() {
        0
    } else {
        1
    }
}

fn emit(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Errors caused by the requested parameters rather than by a failed check.
fn is_argument_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Domain(_)
            | Error::Scenario(_)
            | Error::Pole { .. }
            | Error::Puncture { .. }
            | Error::OpenLoop
            | Error::DimensionMismatch { .. }
    )
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::KvVerify(_) => "kv-verify",
        Command::Nicholson(_) => "nicholson",
        Command::Mellin(_) => "mellin",
        Command::DefectBasis(_) => "defect-basis",
        Command::Lplc(_) => "lplc",
        Command::Parseval(_) => "parseval",
        Command::FlowScenario(_) => "flow-scenario",
        Command::Commutator(_) => "commutator",
        Command::Exponentiate(_) => "exponentiate",
        Command::Indices1d(_) => "indices-1d",
        Command::Resolvent(_) => "resolvent",
        Command::All => "all",
    }
}

/// Run one subcommand and build its report (without timing).
pub fn execute(command: &Command, cfg: &RunConfig) -> Result<Report> {
    match command {
        Command::KvVerify(a) => kv_verify(a),
        Command::Nicholson(a) => nicholson(a),
        Command::Mellin(a) => mellin(a),
        Command::DefectBasis(a) => defect_basis(a),
        Command::Lplc(a) => lplc(a),
        Command::Parseval(a) => parseval(a),
        Command::FlowScenario(a) => flow_scenario(a),
        Command::Commutator(a) => commutator(a),
        Command::Exponentiate(a) => exponentiate(a, cfg.seed),
        Command::Indices1d(a) => indices_1d(a),
        Command::Resolvent(a) => resolvent(a),
        Command::All => Ok(all(cfg.seed)),
    }
}

fn defaults<P: Parser>(name: &str) -> P {
    P::parse_from([name])
}

/// The default configuration of every subcommand except `flow-scenario`,
/// with check names prefixed by their subcommand.
pub fn all(seed: u64) -> Report {
    let parts: Vec<(&str, Result<Report>)> = vec![
        ("kv-verify", kv_verify(&defaults("kv-verify"))),
        ("nicholson", nicholson(&defaults("nicholson"))),
        ("mellin", mellin(&defaults("mellin"))),
        ("defect-basis", defect_basis(&defaults("defect-basis"))),
        ("lplc", lplc(&defaults("lplc"))),
        ("parseval", parseval(&defaults("parseval"))),
        ("commutator", commutator(&defaults("commutator"))),
        ("exponentiate", exponentiate(&defaults("exponentiate"), seed)),
        ("indices-1d", indices_1d(&defaults("indices-1d"))),
        ("resolvent", resolvent(&defaults("resolvent"))),
    ];
    let mut report = Report::new("all");
    for (name, part) in parts {
        match part {
            Ok(r) => report.checks.extend(r.checks.into_iter().map(|mut c| {
                c.name = format!("{name}/{}", c.name);
                c
            })),
            Err(e) => report.checks.push(Check::failed(name, &e.to_string())),
        }
    }
    report
}

fn list(v: &[f64]) -> Value {
    json!(v)
}

fn kv_verify(a: &KvArgs) -> Result<Report> {
    let route = match a.route {
        Route::Direct => KvRoute::Direct,
        Route::Fubini => KvRoute::Fubini,
    };
    let mut r = Report::new("kv-verify");
    r.params.insert("nu".into(), list(&a.nu));
    r.params.insert("tol".into(), a.tol.into());
    r.params.insert("route".into(), json!(route));
    for &nu in &a.nu {
        let id = verify_kv_identity_with(nu, a.tol, route)?;
        r.checks.push(Check::from_identity(&id, a.tol).with("route", json!(route)));
        if nu.abs() == 0.5 {
            r.checks.push(
                Check::relative("kv_norm_pi_over_4", id.lhs, PI / 4.0, a.tol)
                    .with("nu", nu)
                    .with("tol", a.tol),
            );
        }
    }
    Ok(r)
}

fn nicholson(a: &NicholsonArgs) -> Result<Report> {
    let mut r = Report::new("nicholson");
    r.params.insert("nu".into(), list(&a.nu));
    r.params.insert("z".into(), list(&a.z));
    r.params.insert("tol".into(), a.tol.into());
    for &nu in &a.nu {
        for &z in &a.z {
            r.checks.push(Check::from_identity(&verify_nicholson(nu, z, a.tol)?, a.tol));
        }
    }
    Ok(r)
}

fn mellin(a: &MellinArgs) -> Result<Report> {
    let mut r = Report::new("mellin");
    r.params.insert("nu".into(), list(&a.nu));
    r.params.insert("beta".into(), a.beta.into());
    r.params.insert("tol".into(), a.tol.into());
    for &nu in &a.nu {
        let id = verify_mellin(nu, a.beta, a.tol)?;
        r.checks.push(Check::from_identity(&id, a.tol));
        if nu == 0.0 && a.beta == 2.0 {
            r.checks.push(
                Check::relative("mellin_unit_value", id.lhs, 1.0, a.tol)
                    .with("nu", nu)
                    .with("beta", a.beta)
                    .with("tol", a.tol),
            );
        }
    }
    Ok(r)
}

/// Tolerance on the refinement ratio: `[3.5, 4.5]` around 4.
const RATIO_TOL: f64 = 0.125;

fn defect_basis(a: &DefectBasisArgs) -> Result<Report> {
    let mut r = Report::new("defect-basis");
    r.params.insert("cover".into(), json!(a.cover));
    r.params.insert("h".into(), a.h.into());
    r.params.insert("r_min".into(), a.r_min.into());
    r.params.insert("r_max".into(), a.r_max.into());
    let mut bases = serde_json::Map::new();
    let mut orders: Vec<f64> = Vec::new();
    for &n in &a.cover {
        let basis = defect_basis_finite(n)?;
        let dim = defect_dimension(n)?;
        let expected = 2 * u64::from(n) - 1;
        r.checks.push(Check::exact("defect_dimension", dim as f64, expected as f64).with("cover", n));
        r.checks.push(Check::exact("basis_length", basis.len() as f64, dim as f64).with("cover", n));
        orders.extend(basis.iter().map(|b| b.nu.nu()));
        bases.insert(n.to_string(), serde_json::to_value(&basis).expect("basis serializes"));
    }
    orders.sort_by(f64::total_cmp);
    orders.dedup();
    let grid = RadialGrid::uniform_step(a.r_min, a.r_max, a.h)?;
    for &nu in &orders {
        for (gauge, label) in [(Gauge::Radial, "radial"), (Gauge::Weighted, "weighted")] {
            let c = residual_convergence(nu, &grid, gauge)?;
            r.checks.push(
                Check::relative("residual_ratio", c.ratio, 4.0, RATIO_TOL)
                    .with("nu", nu)
                    .with("gauge", label)
                    .with("h", a.h)
                    .with("r_min", a.r_min)
                    .with("r_max", a.r_max)
                    .with("coarse", c.coarse)
                    .with("fine", c.fine),
            );
        }
        if nu == 0.5 {
            // K_{1/2}(r) = √(π/2r) e^{-r}
            let mut worst: f64 = 0.0;
            for x in [a.r_min, 1.0, a.r_max] {
                let exact = (PI / (2.0 * x)).sqrt() * (-x).exp();
                worst = worst.max(((kv(0.5, x)? - exact) / exact).abs());
            }
            r.checks.push(Check::at_most("k_half_closed_form", worst, 1e-12).with("nu", 0.5));
        }
    }
    r.data = Some(json!({ "bases": bases }));
    if let (Some(nu), Some(path)) = (a.profile_nu, &a.profile_out) {
        let csv = radial_profile_csv(nu, &grid)?;
        std::fs::write(path, csv).map_err(|e| Error::domain(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(r)
}

fn endpoint_code(e: Endpoint) -> f64 {
    match e {
        Endpoint::LimitCircle => 0.0,
        Endpoint::LimitPoint => 1.0,
    }
}

fn lplc(a: &LplcArgs) -> Result<Report> {
    let mut r = Report::new("lplc");
    r.params.insert("nu".into(), list(&a.nu));
    r.params.insert("codes".into(), json!({"limit_circle": 0, "limit_point": 1}));
    for &nu in &a.nu {
        let got = lp_lc_classify(nu)?;
        let expected = if nu.abs() < 1.0 {
            Endpoint::LimitCircle
        } else {
            Endpoint::LimitPoint
        };
        r.checks.push(
            Check::exact("lp_lc_classify", endpoint_code(got), endpoint_code(expected))
                .with("nu", nu)
                .with("class", json!(got))
                .with("log_ratio", lplc_log_ratio(nu)?),
        );
    }
    Ok(r)
}

fn parseval(a: &ParsevalArgs) -> Result<Report> {
    let mut r = Report::new("parseval");
    let g = GFunction::bump(a.center, a.half_width, a.nodes)?;
    let p = defect_norm_parseval(&g)?;
    r.checks.push(
        Check::relative("parseval_defect_norm", p.direct, p.weighted, a.tol)
            .with("center", a.center)
            .with("half_width", a.half_width)
            .with("nodes", a.nodes)
            .with("g_l2_norm_sq", g.l2_norm_sq()),
    );
    r.params.insert("center".into(), a.center.into());
    r.params.insert("half_width".into(), a.half_width.into());
    r.params.insert("nodes".into(), a.nodes.into());
    r.params.insert("tol".into(), a.tol.into());
    Ok(r)
}

fn flow_scenario(a: &FlowScenarioArgs) -> Result<Report> {
    let text = std::fs::read_to_string(&a.scenario)
        .map_err(|e| Error::Scenario(format!("cannot read {}: {e}", a.scenario.display())))?;
    let trace = run_scenario_json(&text)?;
    let mut r = Report::new("flow-scenario");
    r.params.insert("scenario".into(), a.scenario.display().to_string().into());
    r.params.insert("tol".into(), a.tol.into());
    let n0 = trace.trace[0].norm;
    for (k, step) in trace.trace.iter().enumerate().skip(1) {
        r.checks.push(Check::relative("norm_preserved", step.norm, n0, a.tol).with("step", k - 1));
    }
    r.data = Some(serde_json::to_value(&trace).expect("scenario report serializes"));
    Ok(r)
}

fn single_bump(x: f64, y: f64, radius: f64, cover: CoverSpec) -> Result<StateFn> {
    let c = SurfacePoint::from_planar(x, y, 0, cover)?;
    Ok(StateFn::single(Bump::new(c, radius, Complex64::new(1.0, 0.0))?))
}

fn commutator(a: &CommutatorArgs) -> Result<Report> {
    let (s, t, rad) = (a.s, a.t, a.radius);
    let mut r = Report::new("commutator");
    for (k, v) in [("s", s), ("t", t), ("radius", rad)] {
        r.params.insert(k.into(), v.into());
    }
    r.params.insert("sheets".into(), a.sheets.into());
    let inf = CoverSpec::Infinite;
    let tag = |c: Check, x: f64, y: f64| c.with("s", s).with("t", t).with("radius", rad).with("x", x).with("y", y);

    // the loop stays in x > 0
    let (x, y) = (s.abs() + 1.0, 1.0);
    let f = single_bump(x, y, rad, inf)?;
    let w = winding_of_loop(&traced_loop((x, y), s, t), DEFAULT_CLEARANCE_FACTOR)?;
    r.checks.push(tag(Check::exact("winding0_loop", w as f64, 0.0), x, y));
    r.checks.push(tag(Check::flag("winding0_identity", commutator_apply(&f, s, t)? == f), x, y));

    // a rectangle centered on the origin
    let (x, y) = (s / 2.0, t / 2.0);
    let f = single_bump(x, y, rad, inf)?;
    let w = winding_of_loop(&traced_loop((x, y), s, t), DEFAULT_CLEARANCE_FACTOR)?;
    let g = commutator_apply(&f, s, t)?;
    let shift = g.sheets()[0] - f.sheets()[0];
    r.checks.push(tag(Check::at_least("enclosing_winding", w.abs() as f64, 1.0), x, y));
    r.checks.push(tag(Check::exact("shift_is_minus_winding", shift as f64, -w as f64), x, y));
    let same_point = g.bumps()[0].center.planar() == f.bumps()[0].center.planar();
    r.checks.push(tag(Check::flag("planar_center_unchanged", same_point), x, y));

    let (x, y) = (-s / 2.0, -t / 2.0);
    let f = single_bump(x, y, rad, inf)?;
    let sep = sheet_separation(&f, s, t)?;
    let wb = sep.per_bump[0].winding;
    r.checks.push(tag(
        Check::exact("order_difference_is_winding", (sep.shift_ab - sep.shift_ba) as f64, wb as f64),
        x,
        y,
    ));
    r.checks.push(tag(Check::at_least("orders_wind", wb.abs() as f64, 1.0), x, y));
    if sep.shift_ab != sep.shift_ba {
        r.checks.push(tag(Check::exact("orders_inner_product", sep.overlap.norm(), 0.0), x, y));
    }

    let cover = CoverSpec::finite(a.sheets)?;
    let (x, y) = (s / 2.0, t / 2.0);
    let f = single_bump(x, y, rad, cover)?;
    let mut g = f.clone();
    let mut early = false;
    for k in 1..=a.sheets {
        g = commutator_apply(&g, s, t)?;
        if k < a.sheets && g == f {
            early = true;
        }
    }
    r.checks.push(tag(Check::flag("finite_cover_restored", g == f), x, y).with("sheets", a.sheets));
    r.checks.push(tag(Check::flag("finite_cover_not_restored_early", !early), x, y).with("sheets", a.sheets));
    Ok(r)
}

fn rotation(t: f64) -> DMatrix<f64> {
    let (s, c) = t.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, s, -s, c])
}

fn exponentiate(a: &ExponentiateArgs, seed: u64) -> Result<Report> {
    let mut r = Report::new("exponentiate");
    r.params.insert("t".into(), list(&a.t));
    if let Some(Demo::Rotation) = a.demo {
        let tol = a.tol.unwrap_or(1e-8);
        r.params.insert("demo".into(), "rotation".into());
        r.params.insert("tol".into(), tol.into());
        let flow = LocalFlow::new(Generator::rotation_2d())?;
        for &t in &a.t {
            let e = exponentiate_local(&flow, t, f64::INFINITY)?;
            let err = op_norm::<f64>(&(&e.u - rotation(t)));
            r.checks.push(Check::at_most("rotation_closed_form", err, tol).with("t", t).with("steps", e.steps));
        }
        return Ok(r);
    }
    let tol = a.tol.unwrap_or(1e-10);
    r.params.insert("count".into(), a.count.into());
    r.params.insert("tol".into(), tol.into());
    r.params.insert("group_tol".into(), a.group_tol.into());
    r.params.insert("subdivision_tol".into(), a.subdivision_tol.into());
    for (i, g) in random_suite(seed, a.count).into_iter().enumerate() {
        let dim = g.dim();
        let flow = LocalFlow::new(g)?;
        let tag = |c: Check| c.with("seed", seed).with("index", i).with("dim", dim);
        for &t in &a.t {
            let e = exponentiate_local(&flow, t, f64::INFINITY)?;
            r.checks.push(tag(Check::at_most("oracle", e.oracle, tol)).with("t", t).with("steps", e.steps));
            r.checks.push(tag(Check::at_most("isometry", e.isometry, tol)).with("t", t));
            let sub = subdivision_residual(&flow, t)?;
            r.checks.push(tag(Check::at_most("subdivision", sub, a.subdivision_tol)).with("t", t));
        }
        for pair in a.t.windows(2) {
            let res = verify_group_law(&flow, pair[0], pair[1])?;
            r.checks.push(tag(Check::at_most("group_law", res, a.group_tol)).with("s", pair[0]).with("t", pair[1]));
        }
    }
    Ok(r)
}

fn indices_1d(a: &IndicesArgs) -> Result<Report> {
    let mut r = Report::new("indices-1d");
    r.params.insert("n".into(), json!(a.n));
    r.params.insert("margin".into(), a.margin.into());
    r.params.insert("min_cosine".into(), a.min_cosine.into());
    for (idx, &n) in a.n.iter().enumerate() {
        let tag = |c: Check| c.with("n", n).with("margin", a.margin);
        let d = defect_indices_1d(Boundary::Interval, n, a.margin)?;
        r.checks.push(tag(Check::exact("interval_n_plus", d.n_plus as f64, 1.0)).with("raw", d.raw_codim_plus));
        r.checks.push(tag(Check::exact("interval_n_minus", d.n_minus as f64, 1.0)).with("raw", d.raw_codim_minus));
        if let (Some(wp), Some(wm)) = (d.witnesses_plus.first(), d.witnesses_minus.first()) {
            let up: Vec<f64> = d.nodes.iter().map(|x| x.exp()).collect();
            let down: Vec<f64> = d.nodes.iter().map(|x| (-x).exp()).collect();
            // {e^x, e^-x} as an unordered pair
            let straight = cosine_similarity(wp, &up).min(cosine_similarity(wm, &down));
            let crossed = cosine_similarity(wp, &down).min(cosine_similarity(wm, &up));
            r.checks.push(tag(Check::at_least("witness_cosine", straight.max(crossed), a.min_cosine)));
            if idx == 0 {
                if let Some(path) = &a.witness_out {
                    let write = |p: &Path, w: &[f64]| {
                        std::fs::write(p, witness_csv(w))
                            .map_err(|e| Error::domain(format!("cannot write {}: {e}", p.display())))
                    };
                    write(path, wp)?;
                    let mut minus = path.clone().into_os_string();
                    minus.push(".minus");
                    write(Path::new(&minus), wm)?;
                }
            }
        }
        let p = defect_indices_1d(Boundary::Periodic, n, a.margin)?;
        r.checks.push(tag(Check::exact("periodic_n_plus", p.n_plus as f64, 0.0)));
        r.checks.push(tag(Check::exact("periodic_n_minus", p.n_minus as f64, 0.0)));
    }
    Ok(r)
}

fn resolvent(a: &ResolventArgs) -> Result<Report> {
    let mut r = Report::new("resolvent");
    let (l1, l2) = (a.lambda1, a.lambda2);
    r.params.insert("lambda1".into(), json!([l1.re, l1.im]));
    r.params.insert("lambda2".into(), json!([l2.re, l2.im]));
    r.params.insert("tol".into(), a.tol.into());
    r.params.insert("gap".into(), a.gap.into());
    let tag = |c: Check| c.with("lambda1", json!([l1.re, l1.im])).with("lambda2", json!([l2.re, l2.im]));
    let (p, q) = (Generator::block_rotations(1.0, 2.0), Generator::block_rotations(3.0, -1.0));
    let norm = resolvent_commutation(&p, &q, l1, l2)?;
    r.checks.push(tag(Check::at_most("commuting_pair", norm, a.tol)).with("pair", "block_rotations(1,2),(3,-1)"));
    let (x, y) = (Generator::axis_rotation(0)?, Generator::axis_rotation(1)?);
    let norm = resolvent_commutation(&x, &y, l1, l2)?;
    r.checks.push(tag(Check::at_least("rotation_pair", norm, a.gap)).with("pair", "axis_rotation(0),(1)"));
    let rejected = resolvent_commutation(&x, &y, Complex64::new(0.0, 1.0), l2).is_err();
    r.checks.push(Check::flag("imaginary_lambda_rejected", rejected).with("lambda1", json!([0.0, 1.0])));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("defectlab").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn seed_precedence() {
        let cli = parse(&["all"]);
        assert_eq!(RunConfig::resolve(&cli, None).unwrap().seed, DEFAULT_SEED);
        assert_eq!(RunConfig::resolve(&cli, Some("9")).unwrap().seed, 9);
        assert!(RunConfig::resolve(&cli, Some("x")).is_err());
        let cli = parse(&["--seed", "4", "all"]);
        assert_eq!(RunConfig::resolve(&cli, Some("9")).unwrap().seed, 4);
        let cli = parse(&["all", "--seed", "5"]);
        assert_eq!(cli.seed, Some(5));
    }

    #[test]
    fn list_and_complex_arguments() {
        let cli = parse(&["exponentiate", "--t", "0.5,-3.1"]);
        let Command::Exponentiate(a) = cli.command else { panic!() };
        assert_eq!(a.t, vec![0.5, -3.1]);
        assert_eq!(parse_complex("-0.7, 2").unwrap(), Complex64::new(-0.7, 2.0));
        assert_eq!(parse_complex("3").unwrap(), Complex64::new(3.0, 0.0));
        assert!(parse_complex("1,2,3").is_err());
        let Command::KvVerify(k) = parse(&["kv-verify"]).command else { panic!() };
        assert_eq!(k.nu, vec![0.1, 0.3, 0.5, 0.7, 0.9]);
        assert!(Cli::try_parse_from(["defectlab", "indices1d"]).is_err());
        assert!(Cli::try_parse_from(["defectlab", "indices-1d"]).is_ok());
    }

    #[test]
    fn argument_errors_are_classified() {
        assert!(is_argument_error(&Error::domain("x")));
        assert!(!is_argument_error(&Error::RankAmbiguity { ratio: 0.2 }));
    }
}
