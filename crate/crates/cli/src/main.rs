//! `harmonic`: command-line front end to the harmonic-surface library.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use harmonic_core::catalog::{
    classification_tables, growth_limited, inline_surface, run_expectations, Catalog, CheckKind, ExpectationReport, Fixture,
    RunOptions, Status,
};
use harmonic_core::domain::SurfaceData;
use harmonic_core::ends::{admissibility, canonical_configuration, classify_budget, end_type, total_curvature};
use harmonic_core::eval::{integrate_curvature, CurvatureOptions};
use harmonic_core::expr::{parse_constant, Bindings};
use harmonic_core::mesh::{build_mesh, MeshOptions, MeshRegion};
use harmonic_core::periods::{period_report, PERIOD_TOL};
use harmonic_core::verify::{
    injectivity_witness_search, properness_probe, regularity_scan, self_intersection_scan, ProbeOptions, ProbeOutcome,
    Witness, DEFAULT_MAX_WITNESSES,
};
use harmonic_core::Error;

/// `println!` that ignores a closed pipe.
macro_rules! out {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

const PASS: u8 = 0;
const FAILED: u8 = 1;
const USAGE: u8 = 2;
const NONCONVERGENCE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "harmonic", version, about = "Ends, periods, curvature and embeddedness scans of harmonic surfaces")]
struct Cli {
    /// Worker threads for the parallel scans.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List catalog fixtures.
    List,
    /// Punctures, end types, curvature budget and admissibility verdicts.
    Info(TargetArgs),
    /// End types of a target, or the configurations of a curvature budget.
    Classify {
        #[command(flatten)]
        target: OptTargetArgs,
        /// Total curvature in units of 2π, e.g. -2.
        #[arg(long, allow_hyphen_values = true)]
        total: Option<i64>,
        #[arg(long, default_value_t = 0)]
        genus: u32,
    },
    /// Integrate K dA and compare with the Gauss-Bonnet budget.
    Curvature {
        #[command(flatten)]
        target: TargetArgs,
        /// Relative tolerance against the budget.
        #[arg(long, default_value_t = 0.01)]
        tol: f64,
    },
    /// Solve the fixture's period parameters and report the real periods.
    ClosePeriods {
        #[command(flatten)]
        target: TargetArgs,
        /// Largest admissible |Re period|.
        #[arg(long, default_value_t = PERIOD_TOL)]
        tol: f64,
    },
    /// Write a Wavefront OBJ mesh.
    Mesh {
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Emit per-vertex normals.
        #[arg(long)]
        normals: bool,
    },
    /// Run checks against the fixture's expectations.
    Check {
        #[command(flatten)]
        target: TargetArgs,
        /// Subset of types, curvature, periods, regular, embedded, proper, symmetry.
        which: Vec<String>,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Use the pinned values of solve parameters.
        #[arg(long)]
        pinned: bool,
    },
    /// Run every check on one fixture, or on the whole catalog.
    Report {
        #[command(flatten)]
        target: OptTargetArgs,
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long)]
        pinned: bool,
    },
}

#[derive(Args, Debug, Clone, Default)]
struct ParamArgs {
    /// Parameter binding `name=value`; repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE", allow_hyphen_values = true)]
    params: Vec<String>,
    /// Shorthand for `--param n=..`.
    #[arg(long, allow_hyphen_values = true)]
    n: Option<String>,
    /// Shorthand for `--param k=..`.
    #[arg(long, allow_hyphen_values = true)]
    k: Option<String>,
    /// Shorthand for `--param m=..`.
    #[arg(long, allow_hyphen_values = true)]
    m: Option<String>,
    /// Shorthand for `--param a=..`.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    /// Shorthand for `--param b=..`.
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    /// Shorthand for `--param c=..`.
    #[arg(long, allow_hyphen_values = true)]
    c: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct TargetArgs {
    /// Fixture id or alias.
    id: Option<String>,
    #[arg(long, conflicts_with = "id")]
    fixture: Option<String>,
    /// Inline forms, e.g. "1, i, 1/z".
    #[arg(long, conflicts_with = "fixture", allow_hyphen_values = true)]
    form: Option<String>,
    /// Roots of w^2 = prod (z - root) for inline forms in w, e.g. "-1,0,1".
    #[arg(long, requires = "form", allow_hyphen_values = true)]
    curve: Option<String>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args, Debug, Clone)]
struct OptTargetArgs {
    id: Option<String>,
    #[arg(long, conflicts_with = "id")]
    fixture: Option<String>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args, Debug, Clone, Default)]
struct MeshArgs {
    /// Parameter region `r_min,r_max`.
    #[arg(long, value_name = "R_MIN,R_MAX")]
    region: Option<String>,
    /// Rings per unit of log-radius.
    #[arg(long)]
    density: Option<usize>,
}

/// Failures carry their exit code.
struct Fail {
    code: u8,
    msg: String,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. }
            | Error::Schema(_)
            | Error::UnresolvedParam(_)
            | Error::Invalid(_)
            | Error::UnsupportedBudget { .. } => USAGE,
            _ => NONCONVERGENCE,
        };
        Fail { code, msg: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Fail {
    Fail { code: USAGE, msg: msg.into() }
}

enum Target<'a> {
    Fixture(&'a Fixture, Bindings),
    Inline(SurfaceData),
}

fn bindings(p: &ParamArgs) -> Result<Bindings, Fail> {
    let mut b = Bindings::new();
    let mut put = |name: &str, value: &str| -> Result<(), Fail> {
        let c = parse_constant(value, &Bindings::new()).map_err(|e| usage(format!("parameter {name}: {e}")))?;
        if c.im != 0.0 {
            return Err(usage(format!("parameter {name} must be real")));
        }
        b.insert(name.to_string(), c.re);
        Ok(())
    };
    for kv in &p.params {
        let (k, v) = kv.split_once('=').ok_or_else(|| usage(format!("--param expects NAME=VALUE, got `{kv}`")))?;
        put(k.trim(), v.trim())?;
    }
    for (name, v) in [("n", &p.n), ("k", &p.k), ("m", &p.m), ("a", &p.a), ("b", &p.b), ("c", &p.c)] {
        if let Some(v) = v {
            put(name, v)?;
        }
    }
    Ok(b)
}

fn resolve<'a>(cat: &'a Catalog, t: &TargetArgs) -> Result<Target<'a>, Fail> {
    let b = bindings(&t.params)?;
    if let Some(src) = &t.form {
        if t.id.is_some() {
            return Err(usage("give either a fixture id or --form, not both"));
        }
        return Ok(Target::Inline(inline_surface(src, t.curve.as_deref(), &b)?));
    }
    let id = t.id.as_ref().or(t.fixture.as_ref()).ok_or_else(|| usage("a fixture id or --form is required"))?;
    let f = cat.fixture(id)?;
    let b = f.bindings(&b)?;
    Ok(Target::Fixture(f, b))
}

fn resolve_opt<'a>(cat: &'a Catalog, t: &OptTargetArgs) -> Result<Option<(&'a Fixture, Bindings)>, Fail> {
    let b = bindings(&t.params)?;
    match t.id.as_ref().or(t.fixture.as_ref()) {
        None => Ok(None),
        Some(id) => {
            let f = cat.fixture(id)?;
            let b = f.bindings(&b)?;
            Ok(Some((f, b)))
        }
    }
}

fn mesh_options(m: &MeshArgs) -> Result<Option<MeshOptions>, Fail> {
    let mut o = MeshOptions::default();
    let mut set = false;
    if let Some(r) = &m.region {
        let parts: Vec<&str> = r.split(',').collect();
        let nums: Vec<f64> = parts.iter().filter_map(|p| p.trim().parse().ok()).collect();
        if parts.len() != 2 || nums.len() != 2 || !(nums[0] > 0.0 && nums[0] < nums[1]) {
            return Err(usage(format!("--region expects 0 < r_min < r_max, got `{r}`")));
        }
        o.region = MeshRegion { r_min: nums[0], r_max: nums[1] };
        set = true;
    }
    if let Some(d) = m.density {
        if d == 0 {
            return Err(usage("--density must be positive"));
        }
        o.density = d;
        set = true;
    }
    Ok(set.then_some(o))
}

fn pi_multiple(total_over_2pi: i64) -> String {
    format!("{}π", 2 * total_over_2pi)
}

fn fmt_triple(t: [u32; 3]) -> String {
    format!("({},{},{})", t[0], t[1], t[2])
}

fn surface_of(t: &Target) -> Result<SurfaceData, Fail> {
    Ok(match t {
        Target::Fixture(f, b) => f.instantiate(b)?.surface,
        Target::Inline(s) => s.clone(),
    })
}

fn cmd_list(cat: &Catalog, json: bool) -> Result<u8, Fail> {
    if json {
        let rows: Vec<_> = cat
            .fixtures
            .iter()
            .map(|f| serde_json::json!({ "id": f.id, "aliases": f.aliases, "title": f.title, "family": f.is_family() }))
            .collect();
        out!("{}", serde_json::to_string_pretty(&rows).expect("serializable"));
    } else {
        for f in &cat.fixtures {
            let params: Vec<&str> = f.params.iter().map(|p| p.name()).collect();
            let params = if params.is_empty() { String::new() } else { format!(" [{}]", params.join(", ")) };
            out!("{:24} {}{}", f.id, f.title, params);
        }
    }
    Ok(PASS)
}

fn cmd_info(t: &Target, json: bool) -> Result<u8, Fail> {
    let s = surface_of(t)?;
    let budget = total_curvature(&s)?;
    let mut ends = Vec::new();
    for p in s.domain.punctures() {
        let e = end_type(&s, p)?;
        let a = admissibility(e.reduced);
        ends.push((p.to_string(), e, a));
    }
    let title = match t {
        Target::Fixture(f, b) => {
            let params: Vec<String> = b.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let p = if params.is_empty() { String::new() } else { format!(" ({})", params.join(", ")) };
            format!("{}{}: {}", f.id, p, f.title)
        }
        Target::Inline(_) => "inline forms".to_string(),
    };
    if json {
        let rows: Vec<_> = ends
            .iter()
            .map(|(p, e, a)| serde_json::json!({ "puncture": p, "type": e, "verdict": a.verdict, "rule": a.rule }))
            .collect();
        let v = serde_json::json!({ "target": title, "genus": budget.genus, "total_over_2pi": budget.total_over_2pi, "ends": rows });
        out!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
        return Ok(PASS);
    }
    out!("{title}");
    let list: Vec<String> = ends.iter().map(|(_, e, _)| fmt_triple(e.reduced)).collect();
    let noun = if list.len() == 1 { "end" } else { "ends" };
    out!("genus {}, {noun} {}, total curvature {}", budget.genus, list.join(" + "), pi_multiple(budget.total_over_2pi));
    for (p, e, a) in &ends {
        let mut line = format!("end at {p}: type {}, order {}", fmt_triple(e.reduced), e.order);
        if e.raw != e.reduced {
            line += &format!(", raw {}", fmt_triple(e.raw));
        }
        if ends.len() == 1 {
            line += &format!(", total curvature {}", pi_multiple(budget.total_over_2pi));
        }
        line += &format!(", {:?} [{}]", a.verdict, a.rule);
        out!("{line}");
    }
    Ok(PASS)
}

fn cmd_classify(cat: &Catalog, target: &OptTargetArgs, total: Option<i64>, genus: u32, json: bool) -> Result<u8, Fail> {
    if let Some(k) = total {
        let configs: Vec<Vec<[u32; 3]>> = classify_budget(k, genus)?.iter().map(canonical_configuration).collect();
        if json {
            out!("{}", serde_json::to_string_pretty(&configs).expect("serializable"));
        } else {
            out!("total curvature {}, genus {genus}: {} families", pi_multiple(k), configs.len());
            for c in &configs {
                let ts: Vec<String> = c.iter().map(|t| fmt_triple(*t)).collect();
                out!("  {}", ts.join(" + "));
            }
        }
        return Ok(PASS);
    }
    let Some((f, b)) = resolve_opt(cat, target)? else {
        if json {
            out!("{}", serde_json::to_string_pretty(&classification_tables()?).expect("serializable"));
            return Ok(PASS);
        }
        for (k, g) in [(-1, 0), (-2, 0), (-1, 1), (-2, 1), (-3, 1)] {
            cmd_classify(cat, target, Some(k), g, false)?;
        }
        return Ok(PASS);
    };
    let t = Target::Fixture(f, b);
    let s = surface_of(&t)?;
    let budget = total_curvature(&s)?;
    let mut types = Vec::new();
    for p in s.domain.punctures() {
        types.push(end_type(&s, p)?.reduced);
    }
    let listed = classify_budget(budget.total_over_2pi, budget.genus)
        .map(|cs| cs.iter().map(canonical_configuration).any(|c| c == canonical_configuration(&types)))
        .ok();
    let ts: Vec<String> = types.iter().map(|t| fmt_triple(*t)).collect();
    if json {
        let v = serde_json::json!({ "ends": types, "total_over_2pi": budget.total_over_2pi, "genus": budget.genus, "in_table": listed });
        out!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
    } else {
        let tail = match listed {
            Some(true) => "listed in the classification table",
            Some(false) => "not in the classification table",
            None => "no classification table for this budget",
        };
        out!("{}: {}, total curvature {}, genus {}, {tail}", f.id, ts.join(" + "), pi_multiple(budget.total_over_2pi), budget.genus);
    }
    Ok(PASS)
}

fn cmd_curvature(t: &Target, tol: f64, json: bool) -> Result<u8, Fail> {
    let s = surface_of(t)?;
    let budget = total_curvature(&s)?;
    let r = integrate_curvature(&s, &CurvatureOptions::default())?;
    let target = 2.0 * std::f64::consts::PI * budget.total_over_2pi as f64;
    let rel = (r.value - target).abs() / target.abs().max(f64::MIN_POSITIVE);
    let ok = rel <= tol;
    if json {
        let v = serde_json::json!({ "integrated": r.value, "budget": target, "total_over_2pi": budget.total_over_2pi,
            "relative_error": rel, "converged": r.converged, "pass": ok });
        out!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
    } else {
        out!(
            "{} total curvature {:.6}π, budget {}, relative error {rel:.2e} (tol {tol})",
            if ok { "PASS" } else { "FAIL" },
            r.value / std::f64::consts::PI,
            pi_multiple(budget.total_over_2pi)
        );
    }
    Ok(if ok { PASS } else { FAILED })
}

fn cmd_close_periods(t: &Target, tol: f64, json: bool) -> Result<u8, Fail> {
    let Target::Fixture(f, b) = t else {
        return Err(usage("close-periods needs a catalog fixture with declared cycles"));
    };
    if f.cycles.is_empty() {
        return Err(usage(format!("fixture `{}` declares no cycles", f.id)));
    }
    let inst = f.instantiate(b)?;
    let rep = period_report(&inst.surface, &inst.cycles)?;
    let ok = rep.rows.iter().all(|r| r.re.abs() <= tol);
    let solved: Vec<(&String, &f64)> = inst.bindings.iter().filter(|(k, _)| !b.contains_key(*k)).collect();
    if json {
        let v = serde_json::json!({ "parameters": inst.bindings, "periods": rep, "tol": tol, "pass": ok });
        out!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
    } else {
        for (k, v) in &solved {
            out!("{k} = {v:.15}");
        }
        for r in &rep.rows {
            out!("cycle {:4} form {}: Re {:+.3e}  Im {:+.12e}", r.cycle, r.form, r.re, r.im);
        }
        out!("{} max |Re period| {:.3e} (tol {tol:e})", if ok { "PASS" } else { "FAIL" }, rep.max_abs_re());
    }
    Ok(if ok { PASS } else { FAILED })
}

fn region_for(t: &Target, s: &SurfaceData, m: Option<MeshOptions>) -> Result<MeshOptions, Fail> {
    if let Some(o) = m {
        return Ok(o);
    }
    let mut o = MeshOptions::default();
    if let Target::Fixture(f, _) = t {
        if let Some(r) = f.scan_region {
            o.region = r;
            return Ok(o);
        }
    }
    o.region = growth_limited(s, o.region)?;
    Ok(o)
}

fn cmd_mesh(t: &Target, m: Option<MeshOptions>, out: Option<&PathBuf>, normals: bool) -> Result<u8, Fail> {
    let s = surface_of(t)?;
    let opts = region_for(t, &s, m)?;
    let mesh = build_mesh(&s, &opts)?;
    let io = |e: std::io::Error| Fail { code: USAGE, msg: format!("cannot write mesh: {e}") };
    match out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(io)?;
            mesh.write_obj(std::io::BufWriter::new(file), normals).map_err(io)?;
        }
        None => {
            let stdout = std::io::stdout();
            mesh.write_obj(stdout.lock(), normals).map_err(io)?;
        }
    }
    eprintln!(
        "{} vertices, {} triangles, region r_min={} r_max={}",
        mesh.vertices.len(),
        mesh.triangles.len(),
        opts.region.r_min,
        opts.region.r_max
    );
    Ok(PASS)
}

fn parse_checks(which: &[String]) -> Result<Vec<CheckKind>, Fail> {
    if which.is_empty() {
        return Ok(CheckKind::ALL.to_vec());
    }
    which
        .iter()
        .map(|w| {
            CheckKind::parse(w).ok_or_else(|| {
                let names: Vec<&str> = CheckKind::ALL.iter().map(|c| c.name()).collect();
                usage(format!("unknown check `{w}`; expected one of {}", names.join(", ")))
            })
        })
        .collect()
}

fn report_code(reports: &[ExpectationReport]) -> u8 {
    if reports.iter().all(|r| r.passed()) {
        PASS
    } else if reports.iter().any(|r| r.claims.iter().any(|c| c.status == Status::Fail)) {
        FAILED
    } else {
        NONCONVERGENCE
    }
}

fn print_reports(reports: &[ExpectationReport], json: bool) {
    if json {
        let v: Vec<serde_json::Value> = reports.iter().map(|r| serde_json::from_str(&r.to_json()).expect("report JSON")).collect();
        let v = if v.len() == 1 { v.into_iter().next().unwrap() } else { serde_json::Value::Array(v) };
        out!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
    } else {
        for r in reports {
            let _ = write!(std::io::stdout(), "{}", r.to_text());
        }
    }
}

/// Scans without expectations: any witness fails.
fn check_inline(s: &SurfaceData, checks: &[CheckKind], m: Option<MeshOptions>, json: bool) -> Result<u8, Fail> {
    let mut opts = m.unwrap_or_default();
    if m.is_none() {
        opts.region = growth_limited(s, opts.region)?;
    }
    let mut lines: Vec<(String, bool, String, Vec<Witness>)> = Vec::new();
    for c in checks {
        match c {
            CheckKind::Regular => {
                let ws = regularity_scan(s, &opts, DEFAULT_MAX_WITNESSES)?;
                lines.push(("regular".into(), ws.is_empty(), format!("{} singular point witness(es)", ws.len()), ws));
            }
            CheckKind::Embedded => {
                let mesh = build_mesh(s, &opts)?;
                let mut ws = self_intersection_scan(s, &mesh, DEFAULT_MAX_WITNESSES)?;
                ws.extend(injectivity_witness_search(s, &mesh, DEFAULT_MAX_WITNESSES)?);
                lines.push(("embedded".into(), ws.is_empty(), format!("{} triangles, {} witness(es)", mesh.triangles.len(), ws.len()), ws));
            }
            CheckKind::Proper => {
                for p in s.domain.punctures() {
                    match properness_probe(s, p, &ProbeOptions::default())? {
                        ProbeOutcome::BoundedEscape { witness } => {
                            lines.push((format!("proper at {p}"), false, "image stays bounded".into(), vec![witness]))
                        }
                        ProbeOutcome::Escapes { .. } => lines.push((format!("proper at {p}"), true, "escapes".into(), Vec::new())),
                    }
                }
            }
            CheckKind::Curvature => {
                let budget = total_curvature(s)?;
                let r = integrate_curvature(s, &CurvatureOptions::default())?;
                let target = 2.0 * std::f64::consts::PI * budget.total_over_2pi as f64;
                let rel = (r.value - target).abs() / target.abs().max(f64::MIN_POSITIVE);
                lines.push(("curvature".into(), rel <= 0.01, format!("{:.6}π against {}", r.value / std::f64::consts::PI, pi_multiple(budget.total_over_2pi)), Vec::new()));
            }
            CheckKind::Types => {
                for p in s.domain.punctures() {
                    let e = end_type(s, p)?;
                    let a = admissibility(e.reduced);
                    lines.push((format!("type at {p}"), true, format!("{} {:?} [{}]", fmt_triple(e.reduced), a.verdict, a.rule), Vec::new()));
                }
            }
            CheckKind::Periods | CheckKind::Symmetry => {
                return Err(usage(format!("check `{}` needs a catalog fixture", c.name())));
            }
        }
    }
    let ok = lines.iter().all(|l| l.1);
    if json {
        let v: Vec<_> = lines
            .iter()
            .map(|(name, pass, detail, ws)| serde_json::json!({ "check": name, "pass": pass, "detail": detail, "witnesses": ws }))
            .collect();
        out!("{}", serde_json::to_string_pretty(&v).expect("serializable"));
    } else {
        for (name, pass, detail, ws) in &lines {
            out!("{:5} {name}: {detail}", if *pass { "PASS" } else { "FAIL" });
            for w in ws {
                out!("      {}", w.to_line());
            }
        }
    }
    Ok(if ok { PASS } else { FAILED })
}

fn run_options(checks: Vec<CheckKind>, m: Option<MeshOptions>, pinned: bool) -> RunOptions {
    let mut o = RunOptions { checks, pinned, ..RunOptions::default() };
    if let Some(m) = m {
        o.mesh = m;
    }
    o
}

fn cmd_check(t: &Target, which: &[String], m: Option<MeshOptions>, pinned: bool, json: bool) -> Result<u8, Fail> {
    let checks = parse_checks(which)?;
    match t {
        Target::Inline(s) => {
            let checks: Vec<CheckKind> = if which.is_empty() {
                checks.into_iter().filter(|c| !matches!(c, CheckKind::Periods | CheckKind::Symmetry)).collect()
            } else {
                checks
            };
            check_inline(s, &checks, m, json)
        }
        Target::Fixture(f, b) => {
            let opts = run_options(checks, m, pinned);
            let mut f = (*f).clone();
            if m.is_some() {
                // An explicit region overrides the fixture's scan region.
                f.scan_region = Some(opts.mesh.region);
            }
            let r = run_expectations(&f, b, &opts)?;
            print_reports(std::slice::from_ref(&r), json);
            Ok(report_code(std::slice::from_ref(&r)))
        }
    }
}

fn cmd_report(cat: &Catalog, target: &OptTargetArgs, m: Option<MeshOptions>, pinned: bool, json: bool) -> Result<u8, Fail> {
    let opts = run_options(CheckKind::ALL.to_vec(), m, pinned);
    let jobs: Vec<(Fixture, Bindings)> = match resolve_opt(cat, target)? {
        Some((f, b)) => vec![(f.clone(), b)],
        None => cat.fixtures.iter().map(|f| f.bindings(&Bindings::new()).map(|b| (f.clone(), b))).collect::<Result<_, _>>()?,
    };
    let mut reports = Vec::with_capacity(jobs.len());
    for (mut f, b) in jobs {
        if m.is_some() {
            f.scan_region = Some(opts.mesh.region);
        }
        reports.push(run_expectations(&f, &b, &opts)?);
    }
    print_reports(&reports, json);
    if !json {
        let passed = reports.iter().filter(|r| r.passed()).count();
        out!("{passed}/{} fixtures pass", reports.len());
    }
    Ok(report_code(&reports))
}

fn run(cli: Cli) -> Result<u8, Fail> {
    let cat = Catalog::builtin();
    let json = cli.json;
    match &cli.command {
        Command::List => cmd_list(&cat, json),
        Command::Info(t) => cmd_info(&resolve(&cat, t)?, json),
        Command::Classify { target, total, genus } => cmd_classify(&cat, target, *total, *genus, json),
        Command::Curvature { target, tol } => {
            if !(*tol > 0.0) {
                return Err(usage("--tol must be positive"));
            }
            cmd_curvature(&resolve(&cat, target)?, *tol, json)
        }
        Command::ClosePeriods { target, tol } => {
            if !(*tol > 0.0) {
                return Err(usage("--tol must be positive"));
            }
            cmd_close_periods(&resolve(&cat, target)?, *tol, json)
        }
        Command::Mesh { target, mesh, out, normals } => {
            let m = mesh_options(mesh)?;
            cmd_mesh(&resolve(&cat, target)?, m, out.as_ref(), *normals)
        }
        Command::Check { target, which, mesh, pinned } => {
            let m = mesh_options(mesh)?;
            // With --form the first positional is a check name.
            let (mut target, mut which) = (target.clone(), which.clone());
            if target.form.is_some() {
                if let Some(first) = target.id.take() {
                    which.insert(0, first);
                }
            }
            parse_checks(&which)?;
            cmd_check(&resolve(&cat, &target)?, &which, m, *pinned, json)
        }
        Command::Report { target, mesh, pinned } => {
            let m = mesh_options(mesh)?;
            cmd_report(&cat, target, m, *pinned, json)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(USAGE);
        }
    }
    match run(cli) {
        Ok(code) => {
            let _ = std::io::stdout().flush();
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
