//! Fixtures for the example surfaces and ends, with their expected
//! properties and a runner that checks them.
//!
//! The fixture file is versioned JSON; forms, punctures and branch roots are
//! expression strings evaluated at load, so pole locations stay exact.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

use crate::domain::{Curve, CutStyle, Domain, MeromorphicForm, Puncture, SheetPoint, SurfaceData};
use crate::ends::{admissibility, end_type, total_curvature, EndType, Verdict};
use crate::error::{Error, Result};
use crate::eval::{integrate_curvature, CurvatureOptions};
use crate::expr::{parse_constant, parse_form, parse_point, root_of_unity, Bindings};
use crate::laurent::ExtPoint;
use crate::mesh::{build_mesh, MeshOptions, MeshRegion};
use crate::periods::{close_periods, period_report, Cycle, FreeParam, PeriodProblem};
use crate::poly::C64;
use crate::verify::{
    check_symmetry, escape_curve_24n, injectivity_witness_search, probe_along, properness_probe, regularity_scan,
    self_intersection_scan, symmetry_samples, verify_witness, DomainMap, ProbeOptions, ProbeOutcome, SymmetryDescriptor,
    Witness, DEFAULT_MAX_WITNESSES,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const FIXTURES_JSON: &str = include_str!("../catalog/fixtures.json");
pub const MANIFEST_JSON: &str = include_str!("../catalog/manifest.json");
pub const CLASSIFICATION_JSON: &str = include_str!("../catalog/classification.json");

/// Relative tolerance of the numeric curvature check.
pub const CURVATURE_REL_TOL: f64 = 0.01;

/// Integer literal or an expression in the fixture parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntExpr {
    Int(i64),
    Expr(String),
}

impl IntExpr {
    pub fn eval(&self, b: &Bindings) -> Result<i64> {
        match self {
            IntExpr::Int(v) => Ok(*v),
            IntExpr::Expr(s) => {
                let c = parse_constant(s, b)?;
                if c.im != 0.0 || c.re.fract() != 0.0 {
                    return Err(Error::Schema(format!("`{s}` is not an integer")));
                }
                Ok(c.re as i64)
            }
        }
    }
}

fn eval_triple(t: &[IntExpr; 3], b: &Bindings) -> Result<[u32; 3]> {
    let mut out = [0u32; 3];
    for k in 0..3 {
        let v = t[k].eval(b)?;
        out[k] = u32::try_from(v).map_err(|_| Error::Schema(format!("negative pole order {v}")))?;
    }
    Ok(out)
}

/// `true`, `false`, or a comparison such as `"c != 0"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Condition {
    Bool(bool),
    Expr(String),
}

impl Condition {
    pub fn eval(&self, b: &Bindings) -> Result<bool> {
        let src = match self {
            Condition::Bool(v) => return Ok(*v),
            Condition::Expr(s) => s.as_str(),
        };
        for op in ["==", "!=", "<=", ">=", "<", ">"] {
            if let Some((l, r)) = src.split_once(op) {
                let (l, r) = (parse_constant(l, b)?.re, parse_constant(r, b)?.re);
                return Ok(match op {
                    "==" => l == r,
                    "!=" => l != r,
                    "<=" => l <= r,
                    ">=" => l >= r,
                    "<" => l < r,
                    _ => l > r,
                });
            }
        }
        Err(Error::Schema(format!("condition `{src}` has no comparison")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Sphere,
    /// `w^2 = lead * prod (z - root)`.
    Hyperelliptic { lead: String, roots: Vec<String> },
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParamSpec {
    Int {
        name: String,
        min: i64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max: Option<i64>,
        default: i64,
        /// Values instantiated by the test suite.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        representatives: Vec<i64>,
    },
    Real {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max: Option<f64>,
        /// Bounds are excluded.
        #[serde(default, skip_serializing_if = "is_false")]
        strict: bool,
        default: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        representatives: Vec<f64>,
    },
    /// Found by closing the real period of `cycles[cycle]` in form `form`.
    Solve { name: String, form: usize, cycle: usize, bracket: [f64; 2], pinned: f64 },
}

impl ParamSpec {
    pub fn name(&self) -> &str {
        match self {
            ParamSpec::Int { name, .. } | ParamSpec::Real { name, .. } | ParamSpec::Solve { name, .. } => name,
        }
    }

    fn check(&self, v: f64) -> Result<()> {
        let bad = |why: String| Err(Error::Invalid(format!("parameter {}={v} {why}", self.name())));
        match self {
            ParamSpec::Int { min, max, .. } => {
                if v.fract() != 0.0 {
                    return bad("is not an integer".into());
                }
                if (v as i64) < *min {
                    return bad(format!("is below the declared minimum {min}"));
                }
                if let Some(m) = max {
                    if v as i64 > *m {
                        return bad(format!("is above the declared maximum {m}"));
                    }
                }
            }
            ParamSpec::Real { min, max, strict, .. } => {
                if let Some(m) = min {
                    if v < *m || (*strict && v == *m) {
                        return bad(format!("is outside the declared range (min {m})"));
                    }
                }
                if let Some(m) = max {
                    if v > *m || (*strict && v == *m) {
                        return bad(format!("is outside the declared range (max {m})"));
                    }
                }
            }
            ParamSpec::Solve { bracket, .. } => {
                if v < bracket[0] || v > bracket[1] {
                    return bad(format!("is outside the bracket [{}, {}]", bracket[0], bracket[1]));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndExpectation {
    pub puncture: String,
    /// Sorted reduced type.
    pub reduced: [IntExpr; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<[IntExpr; 3]>,
    /// Reduced pole orders in form order, as the source writes them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_form: Option<[IntExpr; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    pub citation: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureExpectation {
    pub total_over_2pi: IntExpr,
    /// Also integrate `K dA` numerically.
    #[serde(default, skip_serializing_if = "is_false")]
    pub numeric: bool,
    pub citation: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Regular,
    Embedded,
    Proper,
    PeriodsClosed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictExpectation {
    pub property: Property,
    pub holds: Condition,
    /// Witness kind expected when the property fails.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    pub citation: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymmetrySpec {
    Reflection { name: String, map: DomainMap, axis: usize, citation: String },
    /// Rotation by `sign * 2 pi / k` about the `x3` axis.
    RotationX3 {
        name: String,
        k: IntExpr,
        #[serde(default, skip_serializing_if = "is_false")]
        reverse: bool,
        citation: String,
    },
    Linear { name: String, map: DomainMap, linear: [[f64; 3]; 3], citation: String },
}

impl SymmetrySpec {
    pub fn citation(&self) -> &str {
        match self {
            SymmetrySpec::Reflection { citation, .. } | SymmetrySpec::RotationX3 { citation, .. } | SymmetrySpec::Linear { citation, .. } => citation,
        }
    }

    pub fn descriptor(&self, b: &Bindings) -> Result<SymmetryDescriptor> {
        Ok(match self {
            SymmetrySpec::Reflection { name, map, axis, .. } => SymmetryDescriptor::reflection(name, *map, *axis),
            SymmetrySpec::RotationX3 { name, k, reverse, .. } => {
                let k = u32::try_from(k.eval(b)?).map_err(|_| Error::Schema("rotation order must be positive".into()))?;
                let mut d = SymmetryDescriptor::rotation_x3(name, k);
                if *reverse {
                    d.linear[0][1] = -d.linear[0][1];
                    d.linear[1][0] = -d.linear[1][0];
                }
                d
            }
            SymmetrySpec::Linear { name, map, linear, .. } => {
                SymmetryDescriptor { name: name.clone(), domain_map: *map, linear: *linear, translation: None }
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeTarget {
    Puncture { puncture: String },
    /// `x = (-1)^n / y^(2n-1)` for `y` from `y0` to `y1`, with the family parameter `n`.
    EscapeCurve24n { y0: f64, y1: f64, count: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeExpectation {
    pub target: ProbeTarget,
    pub bounded: bool,
    pub citation: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ends: Vec<EndExpectation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<CurvatureExpectation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<VerdictExpectation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub symmetries: Vec<SymmetrySpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<ProbeExpectation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
    pub title: String,
    pub domain: DomainSpec,
    /// `inf`, a constant expression, or `roots_of_unity(k)`.
    pub punctures: Vec<String>,
    pub forms: [String; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basepoint: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<ParamSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cycles: Vec<Cycle>,
    /// Parameter region for the regularity and embeddedness scans.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_region: Option<MeshRegion>,
    pub expected: Expected,
}

/// An instantiated fixture.
#[derive(Clone, Debug)]
pub struct Instance {
    pub id: String,
    pub bindings: Bindings,
    pub surface: SurfaceData,
    pub cycles: Vec<Cycle>,
}

fn expand_punctures(src: &[String], b: &Bindings) -> Result<Vec<ExtPoint>> {
    let mut out = Vec::new();
    for p in src {
        let t = p.trim();
        if let Some(arg) = t.strip_prefix("roots_of_unity(").and_then(|r| r.strip_suffix(')')) {
            let k = IntExpr::Expr(arg.to_string()).eval(b)?;
            if k < 1 {
                return Err(Error::Schema(format!("roots_of_unity needs a positive order, got {k}")));
            }
            for j in 0..k {
                out.push(ExtPoint::Finite(root_of_unity(k as f64, j as f64)));
            }
        } else {
            out.push(parse_point(t, b)?);
        }
    }
    Ok(out)
}

/// A point at distance at least `0.1` from every special point.
fn default_basepoint(specials: &[C64]) -> C64 {
    let cands = [C64::new(0.37, 0.21), C64::new(-0.43, 0.29), C64::new(0.61, -0.53), C64::new(1.7, 0.9), C64::new(3.1, 0.0)];
    for c in cands {
        if specials.iter().all(|p| (p - c).norm() >= 0.1) {
            return c;
        }
    }
    C64::new(10.3, 7.1)
}

impl Fixture {
    /// Declared defaults merged with `overrides`; solve parameters are left
    /// out unless overridden.
    pub fn bindings(&self, overrides: &Bindings) -> Result<Bindings> {
        for k in overrides.keys() {
            if !self.params.iter().any(|p| p.name() == k) {
                return Err(Error::Invalid(format!("fixture {} has no parameter `{k}`", self.id)));
            }
        }
        let mut b = Bindings::new();
        for p in &self.params {
            let v = match (overrides.get(p.name()), p) {
                (Some(v), _) => *v,
                (None, ParamSpec::Int { default, .. }) => *default as f64,
                (None, ParamSpec::Real { default, .. }) => *default,
                (None, ParamSpec::Solve { .. }) => continue,
            };
            p.check(v)?;
            b.insert(p.name().to_string(), v);
        }
        Ok(b)
    }

    fn solve_params(&self) -> impl Iterator<Item = (&str, usize, usize, [f64; 2], f64)> {
        self.params.iter().filter_map(|p| match p {
            ParamSpec::Solve { name, form, cycle, bracket, pinned } => Some((name.as_str(), *form, *cycle, *bracket, *pinned)),
            _ => None,
        })
    }

    fn build(&self, b: &Bindings) -> Result<SurfaceData> {
        let punctures = expand_punctures(&self.punctures, b)?;
        let (domain, curve_roots) = match &self.domain {
            DomainSpec::Sphere => (Domain::sphere(punctures)?, None),
            DomainSpec::Hyperelliptic { lead, roots } => {
                let lead = parse_constant(lead, b)?;
                let roots = roots.iter().map(|r| parse_constant(r, b)).collect::<Result<Vec<_>>>()?;
                let c = Curve::new(lead, roots, CutStyle::Principal)?;
                let cr = c.curve_roots();
                (Domain::hyperelliptic(c, punctures.into_iter().map(Puncture::point).collect())?, Some(cr))
            }
        };
        let mut forms = Vec::with_capacity(3);
        for f in &self.forms {
            forms.push(MeromorphicForm::from(parse_form(f, b, curve_roots.as_ref())?));
        }
        let omega: [MeromorphicForm; 3] = forms.try_into().expect("three forms");
        let base = match &self.basepoint {
            Some(src) => parse_constant(src, b)?,
            None => default_basepoint(&domain.special_points()),
        };
        SurfaceData::new(domain, omega, SheetPoint::new(base, 1), self.id.clone())
    }

    /// Period problem with every solve parameter at zero.
    pub fn period_problem(&self, b: &Bindings) -> Result<PeriodProblem> {
        let names: Vec<&str> = self.solve_params().map(|p| p.0).collect();
        let with = |one: Option<&str>| {
            let mut bb = b.clone();
            for n in &names {
                bb.insert((*n).to_string(), if Some(*n) == one { 1.0 } else { 0.0 });
            }
            bb
        };
        let base = self.build(&with(None))?;
        let mut free = Vec::new();
        for (name, form, cycle, bracket, _) in self.solve_params() {
            if form > 2 || cycle >= self.cycles.len() {
                return Err(Error::Schema(format!("solve parameter {name} refers to a missing form or cycle")));
            }
            let unit = self.build(&with(Some(name)))?;
            let generator = unit.omega[form].add(&base.omega[form].scale(C64::new(-1.0, 0.0)));
            free.push(FreeParam { name: name.to_string(), form, generator, target_cycle: cycle, bracket: (bracket[0], bracket[1]) });
        }
        Ok(PeriodProblem { surface: base, free, cycles: self.cycles.clone() })
    }

    /// Fully instantiated surface; solve parameters not in `overrides` are
    /// found with [`close_periods`].
    pub fn instantiate(&self, overrides: &Bindings) -> Result<Instance> {
        let mut b = self.bindings(overrides)?;
        let unsolved: Vec<&str> = self.solve_params().map(|p| p.0).filter(|n| !b.contains_key(*n)).collect();
        if !unsolved.is_empty() {
            let problem = self.period_problem(&b)?;
            let lambdas = close_periods(&problem)?;
            for (p, l) in problem.free.iter().zip(lambdas) {
                if unsolved.contains(&p.name.as_str()) {
                    b.insert(p.name.clone(), l);
                }
            }
        }
        let surface = self.build(&b)?;
        Ok(Instance { id: self.id.clone(), bindings: b, surface, cycles: self.cycles.clone() })
    }

    /// Instance with the pinned values of the solve parameters.
    pub fn instantiate_pinned(&self, overrides: &Bindings) -> Result<Instance> {
        let mut o = overrides.clone();
        for (name, _, _, _, pinned) in self.solve_params() {
            o.entry(name.to_string()).or_insert(pinned);
        }
        self.instantiate(&o)
    }

    /// Representative bindings: the cartesian product of the declared
    /// representatives, or the defaults.
    pub fn representative_bindings(&self) -> Vec<Bindings> {
        let mut out = vec![Bindings::new()];
        for p in &self.params {
            let vals: Vec<f64> = match p {
                ParamSpec::Int { representatives, .. } if !representatives.is_empty() => representatives.iter().map(|v| *v as f64).collect(),
                ParamSpec::Real { representatives, .. } if !representatives.is_empty() => representatives.clone(),
                _ => continue,
            };
            out = out
                .into_iter()
                .flat_map(|b| {
                    vals.iter().map(move |v| {
                        let mut b = b.clone();
                        b.insert(p.name().to_string(), *v);
                        b
                    })
                })
                .collect();
        }
        out
    }

    pub fn is_family(&self) -> bool {
        self.params.iter().any(|p| !matches!(p, ParamSpec::Solve { .. }))
    }

    /// Every citation tag of the expected values.
    pub fn citations(&self) -> Vec<&str> {
        let e = &self.expected;
        let mut v: Vec<&str> = e.ends.iter().map(|x| x.citation.as_str()).collect();
        v.extend(e.curvature.iter().map(|x| x.citation.as_str()));
        v.extend(e.verdicts.iter().map(|x| x.citation.as_str()));
        v.extend(e.symmetries.iter().map(|x| x.citation()));
        v.extend(e.probes.iter().map(|x| x.citation.as_str()));
        v
    }

    pub fn expects(&self, prop: Property, b: &Bindings) -> Result<Option<bool>> {
        for v in &self.expected.verdicts {
            if v.property == prop {
                return v.holds.eval(b).map(Some);
            }
        }
        Ok(None)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    pub schema_version: u32,
    pub fixtures: Vec<Fixture>,
}

impl Catalog {
    pub fn from_json(src: &str) -> Result<Catalog> {
        let c: Catalog = serde_json::from_str(src).map_err(|e| Error::Schema(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Catalog> {
        let src = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::Schema(format!("{}: {e}", path.as_ref().display())))?;
        Catalog::from_json(&src)
    }

    /// The catalog shipped with the crate.
    pub fn builtin() -> Catalog {
        Catalog::from_json(FIXTURES_JSON).expect("built-in catalog is valid")
    }

    /// Canonical serialization: two-space indentation, trailing newline.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }

    fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!("schema version {} (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        let mut seen = BTreeSet::new();
        for f in &self.fixtures {
            for id in std::iter::once(&f.id).chain(&f.aliases) {
                if !seen.insert(id.as_str()) {
                    return Err(Error::Schema(format!("duplicate fixture id `{id}`")));
                }
            }
            if let Some(c) = f.citations().into_iter().find(|c| c.trim().is_empty()) {
                return Err(Error::Schema(format!("fixture {} has an empty citation `{c}`", f.id)));
            }
            let mut names = BTreeSet::new();
            for p in &f.params {
                if !names.insert(p.name()) {
                    return Err(Error::Schema(format!("fixture {} declares `{}` twice", f.id, p.name())));
                }
            }
        }
        Ok(())
    }

    pub fn find(&self, id: &str) -> Option<&Fixture> {
        self.fixtures.iter().find(|f| f.id == id || f.aliases.iter().any(|a| a == id))
    }

    pub fn fixture(&self, id: &str) -> Result<&Fixture> {
        self.find(id).ok_or_else(|| Error::Invalid(format!("unknown fixture `{id}`")))
    }

    /// Instantiated surface of fixture `id`.
    pub fn get(&self, id: &str, bindings: &Bindings) -> Result<SurfaceData> {
        Ok(self.fixture(id)?.instantiate(bindings)?.surface)
    }
}

/// One displayed example of the source and the fixture that realizes it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub item: String,
    pub fixture: String,
    #[serde(default, skip_serializing_if = "Bindings::is_empty")]
    pub bindings: Bindings,
}

pub fn manifest() -> Vec<ManifestEntry> {
    serde_json::from_str(MANIFEST_JSON).expect("built-in manifest is valid")
}

/// Manifest items whose fixture is missing or fails to instantiate.
pub fn completeness_failures(cat: &Catalog, entries: &[ManifestEntry]) -> Vec<String> {
    entries
        .iter()
        .filter_map(|e| match cat.find(&e.fixture) {
            None => Some(format!("{}: no fixture `{}`", e.item, e.fixture)),
            Some(f) => f.instantiate_pinned(&e.bindings).err().map(|err| format!("{}: {err}", e.item)),
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Types,
    Curvature,
    Periods,
    Regular,
    Embedded,
    Proper,
    Symmetry,
}

impl CheckKind {
    pub const ALL: [CheckKind; 7] =
        [CheckKind::Types, CheckKind::Curvature, CheckKind::Periods, CheckKind::Regular, CheckKind::Embedded, CheckKind::Proper, CheckKind::Symmetry];

    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::Types => "types",
            CheckKind::Curvature => "curvature",
            CheckKind::Periods => "periods",
            CheckKind::Regular => "regular",
            CheckKind::Embedded => "embedded",
            CheckKind::Proper => "proper",
            CheckKind::Symmetry => "symmetry",
        }
    }

    pub fn parse(s: &str) -> Option<CheckKind> {
        CheckKind::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// The computation itself failed.
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClaimOutcome {
    pub check: CheckKind,
    pub claim: String,
    pub citation: String,
    pub status: Status,
    pub detail: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<Witness>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpectationReport {
    pub fixture: String,
    pub bindings: Bindings,
    pub claims: Vec<ClaimOutcome>,
}

impl ExpectationReport {
    pub fn passed(&self) -> bool {
        self.claims.iter().all(|c| c.status == Status::Pass)
    }

    pub fn has_errors(&self) -> bool {
        self.claims.iter().any(|c| c.status == Status::Error)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn to_text(&self) -> String {
        let params: Vec<String> = self.bindings.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let mut s = format!("fixture {}", self.fixture);
        if !params.is_empty() {
            s += &format!(" ({})", params.join(", "));
        }
        s.push('\n');
        for c in &self.claims {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Error => "ERROR",
            };
            s += &format!("{tag:5} {:9} {} [{}]: {}\n", c.check.name(), c.claim, c.citation, c.detail);
            for w in &c.witnesses {
                s += &format!("      {}\n", w.to_line());
            }
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub checks: Vec<CheckKind>,
    pub mesh: MeshOptions,
    pub curvature: CurvatureOptions,
    pub probe: ProbeOptions,
    pub max_witnesses: usize,
    /// Use pinned values for solve parameters instead of solving.
    pub pinned: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            checks: CheckKind::ALL.to_vec(),
            mesh: MeshOptions::default(),
            curvature: CurvatureOptions::default(),
            probe: ProbeOptions::default(),
            max_witnesses: DEFAULT_MAX_WITNESSES,
            pinned: false,
        }
    }
}

fn fmt_triple(t: [u32; 3]) -> String {
    format!("({},{},{})", t[0], t[1], t[2])
}

fn find_puncture<'a>(s: &'a SurfaceData, src: &str, b: &Bindings) -> Result<&'a Puncture> {
    let at = parse_point(src, b)?;
    s.domain
        .punctures()
        .iter()
        .find(|p| match (p.at, at) {
            (ExtPoint::Infinity, ExtPoint::Infinity) => true,
            (ExtPoint::Finite(a), ExtPoint::Finite(c)) => (a - c).norm() <= 1e-9 * (1.0 + c.norm()),
            _ => false,
        })
        .ok_or_else(|| Error::Schema(format!("`{src}` is not a puncture")))
}

struct Claims {
    out: Vec<ClaimOutcome>,
}

impl Claims {
    fn push(&mut self, check: CheckKind, claim: String, citation: &str, r: Result<(bool, String, Vec<Witness>)>) {
        let (status, detail, witnesses) = match r {
            Ok((true, d, w)) => (Status::Pass, d, w),
            Ok((false, d, w)) => (Status::Fail, d, w),
            Err(e) => (Status::Error, e.to_string(), Vec::new()),
        };
        self.out.push(ClaimOutcome { check, claim, citation: citation.to_string(), status, detail, witnesses });
    }
}

fn check_end(s: &SurfaceData, e: &EndExpectation, b: &Bindings) -> Result<(bool, String, Vec<Witness>)> {
    let p = find_puncture(s, &e.puncture, b)?;
    let t: EndType = end_type(s, p)?;
    let mut ok = t.reduced == eval_triple(&e.reduced, b)?;
    let mut detail = format!("reduced {}", fmt_triple(t.reduced));
    if let Some(raw) = &e.raw {
        ok &= t.raw == eval_triple(raw, b)?;
        detail += &format!(", raw {}", fmt_triple(t.raw));
    }
    if let Some(pf) = &e.per_form {
        ok &= t.per_form == eval_triple(pf, b)?;
        detail += &format!(", per form {}", fmt_triple(t.per_form));
    }
    if let Some(v) = e.verdict {
        let a = admissibility(t.reduced);
        ok &= a.verdict == v;
        detail += &format!(", {:?} [{}]", a.verdict, a.rule);
    }
    Ok((ok, detail, Vec::new()))
}

fn expected_text(e: &EndExpectation, b: &Bindings) -> String {
    match eval_triple(&e.reduced, b) {
        Ok(t) => format!("end at {} has type {}", e.puncture, fmt_triple(t)),
        Err(_) => format!("end at {}", e.puncture),
    }
}

/// Largest `|f|` the scans reach; beyond it separations of order one fall
/// under the relative coincidence tolerance.
pub const SCAN_GROWTH_CAP: f64 = 1e6;

/// Shrinks `region` so that `|f|` grows to at most [`SCAN_GROWTH_CAP`] at
/// every end, estimating `|f| ~ rho^(1-d)` for raw pole order `d`.
pub fn growth_limited(s: &SurfaceData, region: MeshRegion) -> Result<MeshRegion> {
    let mut r = region;
    for p in s.domain.punctures() {
        let d = end_type(s, p)?.raw[2];
        if d < 2 {
            continue;
        }
        let rho = SCAN_GROWTH_CAP.powf(-1.0 / (d - 1) as f64);
        match p.at {
            ExtPoint::Infinity => r.r_max = r.r_max.min(1.0 / rho),
            ExtPoint::Finite(_) => r.r_min = r.r_min.max(rho),
        }
    }
    Ok(r)
}

fn scan_options(f: &Fixture, s: &SurfaceData, o: &RunOptions) -> Result<MeshOptions> {
    let mut m = o.mesh;
    match f.scan_region {
        Some(r) => m.region = r,
        None => m.region = growth_limited(s, m.region)?,
    }
    Ok(m)
}

/// Runs the checks of `opts.checks` that the fixture has expectations for.
pub fn run_expectations(f: &Fixture, overrides: &Bindings, opts: &RunOptions) -> Result<ExpectationReport> {
    let inst = if opts.pinned { f.instantiate_pinned(overrides)? } else { f.instantiate(overrides)? };
    let (s, b) = (&inst.surface, &inst.bindings);
    let mut c = Claims { out: Vec::new() };
    let want = |k: CheckKind| opts.checks.contains(&k);
    let e = &f.expected;

    if want(CheckKind::Types) {
        let results: Vec<_> = e.ends.par_iter().map(|end| check_end(s, end, b)).collect();
        for (end, r) in e.ends.iter().zip(results) {
            c.push(CheckKind::Types, expected_text(end, b), &end.citation, r);
        }
    }

    if want(CheckKind::Curvature) {
        if let Some(ce) = &e.curvature {
            let r = (|| {
                let k = ce.total_over_2pi.eval(b)?;
                let budget = total_curvature(s)?;
                let mut ok = budget.total_over_2pi == k;
                let mut detail = format!("budget {}*2pi", budget.total_over_2pi);
                if ce.numeric {
                    let num = integrate_curvature(s, &opts.curvature)?;
                    let target = 2.0 * std::f64::consts::PI * k as f64;
                    let rel = (num.value - target).abs() / target.abs().max(1e-300);
                    ok &= rel <= CURVATURE_REL_TOL;
                    detail += &format!(", integrated {:.6}*2pi (rel. error {rel:.2e})", num.value / (2.0 * std::f64::consts::PI));
                }
                Ok((ok, detail, Vec::new()))
            })();
            c.push(CheckKind::Curvature, format!("total curvature {}*2pi", ce.total_over_2pi.eval(b).map(|k| k.to_string()).unwrap_or_default()), &ce.citation, r);
        }
    }

    if want(CheckKind::Periods) {
        if let Some(v) = e.verdicts.iter().find(|v| v.property == Property::PeriodsClosed) {
            let r = (|| {
                let holds = v.holds.eval(b)?;
                let rep = period_report(s, &inst.cycles)?;
                Ok((rep.closed() == holds, format!("max |Re period| {:.3e} over {} rows", rep.max_abs_re(), rep.rows.len()), Vec::new()))
            })();
            c.push(CheckKind::Periods, "real periods vanish".into(), &v.citation, r);
        }
    }

    let mesh_opts = scan_options(f, s, opts)?;
    if want(CheckKind::Regular) {
        if let Some(v) = e.verdicts.iter().find(|v| v.property == Property::Regular) {
            let r = (|| {
                let holds = v.holds.eval(b)?;
                let ws = regularity_scan(s, &mesh_opts, opts.max_witnesses)?;
                let ok = if holds { ws.is_empty() } else { !ws.is_empty() && verified(s, &ws)? };
                Ok((ok, format!("{} singular point witness(es)", ws.len()), ws))
            })();
            let claim = if v.holds.eval(b).unwrap_or(true) { "regular" } else { "not regular" };
            c.push(CheckKind::Regular, claim.into(), &v.citation, r);
        }
    }

    if want(CheckKind::Embedded) {
        if let Some(v) = e.verdicts.iter().find(|v| v.property == Property::Embedded) {
            let r = (|| {
                let holds = v.holds.eval(b)?;
                let m = build_mesh(s, &mesh_opts)?;
                let mut ws = self_intersection_scan(s, &m, opts.max_witnesses)?;
                ws.extend(injectivity_witness_search(s, &m, opts.max_witnesses)?);
                let ok = if holds {
                    ws.is_empty()
                } else {
                    let kind_ok = v.witness.as_ref().map_or(!ws.is_empty(), |k| ws.iter().any(|w| w.kind() == k));
                    kind_ok && verified(s, &ws)?
                };
                Ok((ok, format!("{} triangles, {} witness(es)", m.triangles.len(), ws.len()), ws))
            })();
            let claim = if v.holds.eval(b).unwrap_or(true) { "embedded" } else { "not embedded" };
            c.push(CheckKind::Embedded, claim.into(), &v.citation, r);
        }
    }

    if want(CheckKind::Proper) {
        for pe in &e.probes {
            let r = (|| {
                let outcome = match &pe.target {
                    ProbeTarget::Puncture { puncture } => properness_probe(s, find_puncture(s, puncture, b)?, &opts.probe)?,
                    ProbeTarget::EscapeCurve24n { y0, y1, count } => {
                        let n = b.get("n").copied().ok_or_else(|| Error::UnresolvedParam("n".into()))?;
                        probe_along(s, "escape curve", &escape_curve_24n(n as u32, *y0, *y1, *count))?
                    }
                };
                let ok = outcome.is_bounded() == pe.bounded;
                Ok(match outcome {
                    ProbeOutcome::BoundedEscape { witness } => (ok, "image stays bounded".into(), vec![witness]),
                    ProbeOutcome::Escapes { min_norms } => {
                        (ok, format!("min |f| grows from {:.3e} to {:.3e}", min_norms[0], min_norms.last().unwrap()), Vec::new())
                    }
                })
            })();
            let place = match &pe.target {
                ProbeTarget::Puncture { puncture } => format!("at {puncture}"),
                ProbeTarget::EscapeCurve24n { .. } => "along the escape curve".into(),
            };
            let claim = if pe.bounded { format!("bounded escape {place}") } else { format!("end escapes {place}") };
            c.push(CheckKind::Proper, claim, &pe.citation, r);
        }
    }

    if want(CheckKind::Symmetry) {
        let samples = symmetry_samples(s, 64);
        for sy in &e.symmetries {
            let r = (|| {
                let d = sy.descriptor(b)?;
                let rep = check_symmetry(s, &d, &samples)?;
                Ok((rep.pass, format!("max deviation {:.3e}", rep.max_deviation), Vec::new()))
            })();
            let name = match sy.descriptor(b) {
                Ok(d) => d.name,
                Err(_) => "symmetry".into(),
            };
            c.push(CheckKind::Symmetry, name, sy.citation(), r);
        }
    }

    Ok(ExpectationReport { fixture: f.id.clone(), bindings: inst.bindings.clone(), claims: c.out })
}

fn verified(s: &SurfaceData, ws: &[Witness]) -> Result<bool> {
    for w in ws {
        if !verify_witness(s, w, 1e-8)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Surface from an inline triple `"f1, f2, f3"` of expressions in `z` (and
/// `w` when `roots` gives the curve `w^2 = prod (z - root)`). Punctures are
/// the poles of the forms, with `inf` added on the curve or when some form
/// has a pole there.
pub fn inline_surface(forms: &str, roots: Option<&str>, b: &Bindings) -> Result<SurfaceData> {
    let curve = match roots {
        None => None,
        Some(src) => {
            let rs = crate::expr::split_top_level(src).into_iter().map(|r| parse_constant(r, b)).collect::<Result<Vec<_>>>()?;
            Some(Curve::new(C64::new(1.0, 0.0), rs, CutStyle::Principal)?)
        }
    };
    let cr = curve.as_ref().map(Curve::curve_roots);
    let parsed = crate::expr::parse_form_list(forms, b, cr.as_ref())?;
    let omega: [MeromorphicForm; 3] = parsed
        .into_iter()
        .map(MeromorphicForm::from)
        .collect::<Vec<_>>()
        .try_into()
        .map_err(|v: Vec<MeromorphicForm>| Error::Invalid(format!("expected three forms, got {}", v.len())))?;
    let mut finite: Vec<C64> = Vec::new();
    for f in &omega {
        for (z, _) in f.a.poles().iter().chain(f.b.poles()) {
            if !finite.iter().any(|q| (q - z).norm() <= 1e-9 * (1.0 + z.norm())) {
                finite.push(*z);
            }
        }
    }
    let mut pts: Vec<ExtPoint> = finite.into_iter().map(ExtPoint::Finite).collect();
    let at_inf = curve.is_some() || omega.iter().any(|f| f.a.form_pole_order(ExtPoint::Infinity) > 0);
    if at_inf {
        pts.push(ExtPoint::Infinity);
    }
    let domain = match curve {
        None => Domain::sphere(pts)?,
        Some(c) => Domain::hyperelliptic(c, pts.into_iter().map(Puncture::point).collect())?,
    };
    let base = default_basepoint(&domain.special_points());
    SurfaceData::new(domain, omega, SheetPoint::new(base, 1), "inline")
}

/// Classification tables for the supported budgets, in manifest form.
pub fn classification_tables() -> Result<serde_json::Value> {
    use crate::ends::{canonical_configuration, classify_budget};
    let mut rows = Vec::new();
    for (k, g) in [(-1i64, 0u32), (-2, 0), (-1, 1), (-2, 1), (-3, 1)] {
        let configs: Vec<Vec<[u32; 3]>> = classify_budget(k, g)?.iter().map(canonical_configuration).collect();
        rows.push(serde_json::json!({ "total_over_2pi": k, "genus": g, "configurations": configs }));
    }
    Ok(serde_json::Value::Array(rows))
}

pub fn classification_json() -> Result<String> {
    Ok(serde_json::to_string_pretty(&classification_tables()?).expect("serializable") + "\n")
}
