//! Command-line front end: problem files in, JSON reports out.
//!
//! Exit codes: 0 on success, 2 when the input or a precondition is at
//! fault, 1 when the computation itself fails.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use halfdisk_core::adjunction::{
    apply_move, check_adjunction, double_chern_count, maslov_from_zeros, maslov_sum,
    maslov_tangent, CurveConfig, Move, SectionZeroData, SurgeryKind, Verdict,
};
use halfdisk_core::cauchy_green::CauchyGreen;
use halfdisk_core::comparison::compare;
use halfdisk_core::grid::{Grid, C2};
use halfdisk_core::intersection::{boundary_index_series, split_to_transverse, IndexReport};
use halfdisk_core::linking::{boundary_index_linking, LinkingConfig, DEFAULT_SAMPLES};
use halfdisk_core::normal_form::{tangency_order, Contact, ContactKind};
use halfdisk_core::series::{Exact, Float};
use halfdisk_core::solver::{smooth_cusp_with, solve_perturbation_with, Solution, SolveConfig};
use halfdisk_core::structures::{reflect_structure, BundleStructure};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::fft::FftConvolver;
use crate::format::{
    from_value, matrix_rows, BundleSpec, CurveConfigJson, DiskSpec, FormatError, GridDump,
    JsonCoeff, SeriesJson, StructureSpec, VERSION,
};

/// Environment variable that takes precedence over `--seed`.
pub const SEED_ENV: &str = "HALFDISK_SEED";

/// Default grid resolution, cells per unit length.
pub const DEFAULT_GRID: usize = 64;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Input(FormatError),
    Precondition(String),
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Internal(_) => 1,
            _ => 2,
        }
    }

    fn report(&self) -> Value {
        let (kind, message, pointer) = match self {
            Failure::Usage(m) => ("usage", m.clone(), None),
            Failure::Input(e) => ("input", e.message.clone(), Some(e.pointer.clone())),
            Failure::Precondition(m) => ("precondition", m.clone(), None),
            Failure::Internal(m) => ("internal", m.clone(), None),
        };
        let mut err = json!({ "kind": kind, "message": message });
        if let Some(p) = pointer {
            err["pointer"] = Value::String(p);
        }
        json!({ "version": VERSION, "error": err })
    }
}

impl From<halfdisk_core::Error> for Failure {
    fn from(e: halfdisk_core::Error) -> Self {
        if e.is_precondition() {
            Failure::Precondition(e.to_string())
        } else {
            Failure::Internal(e.to_string())
        }
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        Failure::Input(e)
    }
}

type Outcome<T> = Result<T, Failure>;

#[derive(Parser, Debug)]
#[command(
    name = "halfdisk",
    version,
    about = "Boundary intersection indices and perturbations of attached half-disks"
)]
pub struct Cli {
    /// Indented JSON.
    #[arg(long, global = true, overrides_with = "json")]
    pub pretty: bool,
    /// Compact JSON (default).
    #[arg(long, global = true, overrides_with = "pretty")]
    pub json: bool,
    /// Seed for randomized commands; HALFDISK_SEED takes precedence.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for grid convolutions.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print the normalized problem file instead of solving it.
    #[arg(long, global = true)]
    pub emit_input: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Boundary intersection index of two half-disks.
    Index(IndexArgs),
    /// Order of tangency of two half-disks.
    Tangency(PairArgs),
    /// Reparametrization and remainder of two tangent half-disks.
    Compare(PairArgs),
    /// Attached perturbation of a half-disk for a non-standard structure.
    Perturb(SolveArgs),
    /// Removes a boundary cusp by an attached perturbation.
    SmoothCusp(SolveArgs),
    /// Adjunction identity for a curve configuration.
    Adjunction(AdjunctionArgs),
    /// Maslov indices.
    Maslov(MaslovArgs),
    /// Extension of a bundle structure by reflection.
    Reflect(FileArgs),
}

#[derive(Args, Debug)]
pub struct FileArgs {
    /// Problem file, or `-` for stdin.
    pub input: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Series,
    Linking,
    Both,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    #[default]
    Exact,
    Float,
}

#[derive(Args, Debug)]
pub struct SeriesFlags {
    /// Truncation order of the series.
    #[arg(long)]
    pub truncation: Option<usize>,
    /// Coefficient field; exact uses rationals.
    #[arg(long, value_enum)]
    pub arithmetic: Option<Arithmetic>,
}

#[derive(Args, Debug)]
pub struct IndexArgs {
    /// Problem file, or `-` for stdin.
    pub input: PathBuf,
    /// Series recursion, linking number of sphere traces, or both.
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Sphere radius of the linking route.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Samples per sphere trace.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Also split the contact into transverse intersections, perturbing by
    /// at most this much.
    #[arg(long)]
    pub split: Option<f64>,
    #[command(flatten)]
    pub series: SeriesFlags,
}

#[derive(Args, Debug)]
pub struct PairArgs {
    /// Problem file, or `-` for stdin.
    pub input: PathBuf,
    #[command(flatten)]
    pub series: SeriesFlags,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Problem file, or `-` for stdin.
    pub input: PathBuf,
    /// Grid cells per unit length, `h = 1 / grid`.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Target grid residual.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Directory receiving `w1.json` and `w2.json`.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Surgery {
    #[default]
    Same,
    Different,
}

impl From<Surgery> for SurgeryKind {
    fn from(s: Surgery) -> Self {
        match s {
            Surgery::Same => SurgeryKind::SameCircle,
            Surgery::Different => SurgeryKind::DifferentCircles,
        }
    }
}

#[derive(Args, Debug)]
pub struct AdjunctionArgs {
    /// Problem file, or `-` for stdin.
    pub input: PathBuf,
    /// Bookkeeping of boundary surgeries.
    #[arg(long, value_enum)]
    pub surgery: Option<Surgery>,
    /// Random moves applied to the configuration.
    #[arg(long)]
    pub walk: Option<usize>,
}

#[derive(Args, Debug)]
pub struct MaslovArgs {
    /// Problem file, or `-` for stdin; optional with `--tangent`.
    pub input: Option<PathBuf>,
    /// Maslov index of the tangent pair, `4 - 4g - 2 sigma`.
    #[arg(long)]
    pub tangent: bool,
    #[arg(short = 'g', long)]
    pub genus: Option<u32>,
    #[arg(short = 's', long)]
    pub sigma: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Index,
    Tangency,
    Compare,
    Perturb,
    SmoothCusp,
    Adjunction,
    Maslov,
    Reflect,
}

/// `{"version": "halfdisk/1", "kind": ..., "payload": ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub version: String,
    pub kind: Kind,
    pub payload: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexPayload {
    pub u1: SeriesJson,
    pub u2: SeriesJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arithmetic: Option<Arithmetic>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairPayload {
    pub u1: SeriesJson,
    pub u2: SeriesJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arithmetic: Option<Arithmetic>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbPayload {
    pub structure: StructureSpec,
    pub disk: DiskSpec,
    pub w0: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CuspPayload {
    pub structure: StructureSpec,
    pub disk: DiskSpec,
    /// Size of `w(0)`, orthogonal to the tangent vector.
    pub a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjunctionPayload {
    pub g: u32,
    pub sigma: u32,
    pub delta_b: u32,
    pub delta_i: u32,
    pub kappa_i: u32,
    pub normal_maslov: i64,
    pub maslov_total: i64,
    pub double_sq: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surgery: Option<Surgery>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walk: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl AdjunctionPayload {
    fn config(&self) -> CurveConfig {
        CurveConfigJson {
            g: self.g,
            sigma: self.sigma,
            delta_b: self.delta_b,
            delta_i: self.delta_i,
            kappa_i: self.kappa_i,
            normal_maslov: self.normal_maslov,
            maslov_total: self.maslov_total,
            double_sq: self.double_sq,
        }
        .into()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaslovPayload {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior_zeros: Option<Vec<i8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_zeros: Option<Vec<i8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summands: Option<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectPayload {
    pub structure: BundleSpec,
    pub points: Vec<[f64; 2]>,
}

fn read_input(path: &Path) -> Outcome<Value> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Precondition(format!("cannot read stdin: {e}")))?;
        s
    } else {
        std::fs::read_to_string(path)
            .map_err(|e| Failure::Precondition(format!("cannot read {}: {e}", path.display())))?
    };
    serde_json::from_str(&text)
        .map_err(|e| Failure::Input(FormatError::new("", format!("invalid JSON: {e}"))))
}

/// Payload of a problem file or a bare payload document, with the pointer
/// prefix under which it sits.
fn payload<T: DeserializeOwned>(doc: Value, kind: Kind) -> Outcome<(T, &'static str)> {
    let wrapped = doc.as_object().is_some_and(|o| o.contains_key("kind"));
    if !wrapped {
        return Ok((from_value(&doc)?, ""));
    }
    let file: ProblemFile = from_value(&doc)?;
    if file.version != VERSION {
        return Err(FormatError::new(
            "/version",
            format!("expected {VERSION:?}, found {:?}", file.version),
        )
        .into());
    }
    if file.kind != kind {
        return Err(FormatError::new(
            "/kind",
            format!("problem kind {:?} does not match the command", file.kind),
        )
        .into());
    }
    let p = from_value(&file.payload).map_err(|e| e.within("/payload"))?;
    Ok((p, "/payload"))
}

fn load<T: DeserializeOwned>(path: &Path, kind: Kind) -> Outcome<(T, &'static str)> {
    payload(read_input(path)?, kind)
}

struct Context {
    seed: u64,
    /// Whether the seed came from the environment or `--seed`.
    seed_from_flags: bool,
    emit: bool,
}

fn problem<T: Serialize>(kind: Kind, payload: &T) -> Value {
    json!({
        "version": VERSION,
        "kind": kind,
        "payload": serde_json::to_value(payload).expect("payload serializes"),
    })
}

fn contact_kind(k: ContactKind) -> &'static str {
    match k {
        ContactKind::Touching => "touching",
        ContactKind::Meeting => "meeting",
    }
}

fn series_report(r: &IndexReport) -> Value {
    json!({
        "index": r.index,
        "nu": r.nu,
        "tangency": r.tangency,
        "transverse": r.transverse,
        "kind": contact_kind(r.kind),
    })
}

fn linking_report(r: &IndexReport) -> Value {
    json!({
        "index": r.index,
        "residual": r.residual,
        "radius": r.sphere_radius,
        "kind": contact_kind(r.kind),
    })
}

fn run_index_with<C: JsonCoeff>(p: &IndexPayload, prefix: &'static str) -> Outcome<Value> {
    let u1 =
        p.u1.to_disk::<C>(None)
            .map_err(|e| Failure::Input(e.within(&format!("{prefix}/u1"))))?;
    let u2 =
        p.u2.to_disk::<C>(None)
            .map_err(|e| Failure::Input(e.within(&format!("{prefix}/u2"))))?;
    let method = p.method.unwrap_or(Method::Series);
    let mut out = json!({ "version": VERSION, "method": method });
    let series = if method != Method::Linking {
        Some(boundary_index_series(&u1, &u2)?)
    } else {
        None
    };
    let linking = if method != Method::Series {
        let cfg = LinkingConfig {
            radius: p.radius,
            samples: p.samples.unwrap_or(DEFAULT_SAMPLES),
            ..LinkingConfig::default()
        };
        Some(boundary_index_linking(&u1, &u2, &cfg)?)
    } else {
        None
    };
    if let Some(s) = &series {
        out["series"] = series_report(s);
        out["index"] = json!(s.index);
    }
    if let Some(l) = &linking {
        out["linking"] = linking_report(l);
        if series.is_none() {
            out["index"] = json!(l.index);
        }
    }
    if let (Some(s), Some(l)) = (&series, &linking) {
        out["agree"] = json!(s.index == l.index);
    }
    if let Some(eps) = p.split {
        let e1 =
            p.u1.to_disk::<Exact>(None)
                .map_err(|e| Failure::Input(e.within(&format!("{prefix}/u1"))))?;
        let e2 =
            p.u2.to_disk::<Exact>(None)
                .map_err(|e| Failure::Input(e.within(&format!("{prefix}/u2"))))?;
        let split = split_to_transverse(&e1, &e2, eps)?;
        out["split"] = json!({
            "index": split.index,
            "terms": split.terms,
            "roots": split.roots,
            "exact_real_roots": split.exact_real_roots,
            "squarefree": split.squarefree,
        });
    }
    Ok(out)
}

fn normalize_series(s: &SeriesJson, truncation: Option<usize>, at: &str) -> Outcome<SeriesJson> {
    s.normalized(truncation)
        .map_err(|e| Failure::Input(e.within(at)))
}

fn cmd_index(args: &IndexArgs, ctx: &Context) -> Outcome<Value> {
    let (mut p, prefix): (IndexPayload, _) = load(&args.input, Kind::Index)?;
    let truncation = args.series.truncation;
    p.u1 = normalize_series(&p.u1, truncation, &format!("{prefix}/u1"))?;
    p.u2 = normalize_series(&p.u2, truncation, &format!("{prefix}/u2"))?;
    p.method = Some(args.method.or(p.method).unwrap_or(Method::Series));
    p.radius = args.radius.or(p.radius);
    p.samples = Some(args.samples.or(p.samples).unwrap_or(DEFAULT_SAMPLES));
    p.split = args.split.or(p.split);
    p.arithmetic = Some(args.series.arithmetic.or(p.arithmetic).unwrap_or_default());
    if ctx.emit {
        return Ok(problem(Kind::Index, &p));
    }
    match p.arithmetic.unwrap_or_default() {
        Arithmetic::Exact => run_index_with::<Exact>(&p, prefix),
        Arithmetic::Float => run_index_with::<Float>(&p, prefix),
    }
}

fn load_pair(args: &PairArgs, kind: Kind) -> Outcome<(PairPayload, &'static str)> {
    let (mut p, prefix): (PairPayload, _) = load(&args.input, kind)?;
    p.u1 = normalize_series(&p.u1, args.series.truncation, &format!("{prefix}/u1"))?;
    p.u2 = normalize_series(&p.u2, args.series.truncation, &format!("{prefix}/u2"))?;
    p.arithmetic = Some(args.series.arithmetic.or(p.arithmetic).unwrap_or_default());
    Ok((p, prefix))
}

fn disks<C: JsonCoeff>(
    p: &PairPayload,
    prefix: &str,
) -> Outcome<(
    halfdisk_core::normal_form::SeriesDisk<C>,
    halfdisk_core::normal_form::SeriesDisk<C>,
)> {
    let u1 =
        p.u1.to_disk::<C>(None)
            .map_err(|e| Failure::Input(e.within(&format!("{prefix}/u1"))))?;
    let u2 =
        p.u2.to_disk::<C>(None)
            .map_err(|e| Failure::Input(e.within(&format!("{prefix}/u2"))))?;
    Ok((u1, u2))
}

fn tangency_with<C: JsonCoeff>(p: &PairPayload, prefix: &str) -> Outcome<Value> {
    let (u1, u2) = disks::<C>(p, prefix)?;
    let t = tangency_order(&u1, &u2)?;
    let (order, valid_to) = match t.order {
        Contact::Finite(d) => (Some(d), None),
        Contact::Infinite { valid_to } => (None, Some(valid_to)),
    };
    Ok(json!({
        "version": VERSION,
        "order": order,
        "coincide_to": valid_to,
        "kind": contact_kind(t.kind),
    }))
}

fn cmd_tangency(args: &PairArgs, ctx: &Context) -> Outcome<Value> {
    let (p, prefix) = load_pair(args, Kind::Tangency)?;
    if ctx.emit {
        return Ok(problem(Kind::Tangency, &p));
    }
    match p.arithmetic.unwrap_or_default() {
        Arithmetic::Exact => tangency_with::<Exact>(&p, prefix),
        Arithmetic::Float => tangency_with::<Float>(&p, prefix),
    }
}

fn compare_with<C: JsonCoeff>(p: &PairPayload, prefix: &str) -> Outcome<Value> {
    let (u1, u2) = disks::<C>(p, prefix)?;
    let r = compare(&u1, &u2)?;
    let w0 = r.w0();
    Ok(json!({
        "version": VERSION,
        "psi": SeriesJson::from_series(&r.psi),
        "nu": r.nu,
        "w0": [w0[0].to_pair(), w0[1].to_pair()],
        "kind": contact_kind(r.kind),
        "mu": r.mu,
        "steps": r.steps,
    }))
}

fn cmd_compare(args: &PairArgs, ctx: &Context) -> Outcome<Value> {
    let (p, prefix) = load_pair(args, Kind::Compare)?;
    if ctx.emit {
        return Ok(problem(Kind::Compare, &p));
    }
    match p.arithmetic.unwrap_or_default() {
        Arithmetic::Exact => compare_with::<Exact>(&p, prefix),
        Arithmetic::Float => compare_with::<Float>(&p, prefix),
    }
}

fn pair(v: Complex64) -> [f64; 2] {
    // `+ 0.0` turns `-0.0` into `0.0`.
    [v.re + 0.0, v.im + 0.0]
}

/// Non-finite values as the strings `"inf"`, `"-inf"`, `"nan"`.
fn real(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn solution_report(s: &Solution) -> Value {
    json!({
        "nu": s.nu,
        "w0": [pair(s.w0[0]), pair(s.w0[1])],
        "h": s.w.grid().h(),
        "iterations": s.iterations,
        "steps": s.steps,
        "ratio": real(s.ratio),
        "residual": s.residual,
        "residual_at": pair(s.residual_at),
        "identity_residual": s.identity_residual,
        "symmetry_residual": s.symmetry_residual,
        "origin_error": s.origin_error,
        "dilation": s.dilation,
        "stability": real(s.stability()),
        "zero_order_bound": s.zero_order_bound,
        "neumann_terms": s.neumann_terms,
    })
}

fn operator(n: usize) -> Outcome<CauchyGreen<FftConvolver>> {
    let grid = Grid::new(1.0 / n as f64)?;
    Ok(CauchyGreen::new(grid))
}

fn dump(dir: &Path, field: &halfdisk_core::grid::GridField<C2>) -> Outcome<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::Precondition(format!("cannot create {}: {e}", dir.display())))?;
    for c in 0..2 {
        let path = dir.join(format!("w{}.json", c + 1));
        let text = serde_json::to_string(&GridDump::component(field, c)).expect("dump serializes");
        std::fs::write(&path, text)
            .map_err(|e| Failure::Internal(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_perturb(args: &SolveArgs, ctx: &Context) -> Outcome<Value> {
    let (mut p, prefix): (PerturbPayload, _) = load(&args.input, Kind::Perturb)?;
    let d = SolveConfig::default();
    p.disk = p
        .disk
        .normalized()
        .map_err(|e| Failure::Input(e.within(&format!("{prefix}/disk"))))?;
    p.nu = Some(p.nu.unwrap_or(d.nu));
    p.grid = Some(args.grid.or(p.grid).unwrap_or(DEFAULT_GRID));
    p.tol = Some(args.tol.or(p.tol).unwrap_or(d.tol));
    p.max_iter = Some(args.max_iter.or(p.max_iter).unwrap_or(d.max_iter));
    p.alpha = Some(p.alpha.unwrap_or(d.alpha));
    if ctx.emit {
        return Ok(problem(Kind::Perturb, &p));
    }
    let j = p
        .structure
        .build()
        .map_err(|e| Failure::Input(e.within(&format!("{prefix}/structure"))))?;
    let u0 = p
        .disk
        .build()
        .map_err(|e| Failure::Input(e.within(&format!("{prefix}/disk"))))?;
    let n = p.grid.unwrap_or(DEFAULT_GRID);
    let cfg = SolveConfig {
        nu: p.nu.unwrap_or(d.nu),
        w0: p.w0,
        tol: p.tol.unwrap_or(d.tol),
        max_iter: p.max_iter.unwrap_or(d.max_iter),
        alpha: p.alpha.unwrap_or(d.alpha),
        h: 1.0 / n as f64,
        ..d
    };
    let cg = operator(n)?;
    let s = solve_perturbation_with(&cg, &*u0, &*j, &cfg)?;
    if let Some(dir) = &args.dump {
        dump(dir, &s.w)?;
    }
    let mut out = solution_report(&s);
    out["version"] = json!(VERSION);
    Ok(out)
}

fn cmd_smooth_cusp(args: &SolveArgs, ctx: &Context) -> Outcome<Value> {
    let (mut p, prefix): (CuspPayload, _) = load(&args.input, Kind::SmoothCusp)?;
    let d = SolveConfig::default();
    p.disk = p
        .disk
        .normalized()
        .map_err(|e| Failure::Input(e.within(&format!("{prefix}/disk"))))?;
    p.grid = Some(args.grid.or(p.grid).unwrap_or(DEFAULT_GRID));
    p.tol = Some(args.tol.or(p.tol).unwrap_or(d.tol));
    p.max_iter = Some(args.max_iter.or(p.max_iter).unwrap_or(d.max_iter));
    p.alpha = Some(p.alpha.unwrap_or(d.alpha));
    if ctx.emit {
        return Ok(problem(Kind::SmoothCusp, &p));
    }
    let j = p
        .structure
        .build()
        .map_err(|e| Failure::Input(e.within(&format!("{prefix}/structure"))))?;
    let u0 = p
        .disk
        .build()
        .map_err(|e| Failure::Input(e.within(&format!("{prefix}/disk"))))?;
    let n = p.grid.unwrap_or(DEFAULT_GRID);
    let cfg = SolveConfig {
        tol: p.tol.unwrap_or(d.tol),
        max_iter: p.max_iter.unwrap_or(d.max_iter),
        alpha: p.alpha.unwrap_or(d.alpha),
        h: 1.0 / n as f64,
        ..d
    };
    let cg = operator(n)?;
    let r = smooth_cusp_with(&cg, &*u0, &*j, p.a, &cfg)?;
    if let Some(dir) = &args.dump {
        dump(dir, &r.solution.w)?;
    }
    Ok(json!({
        "version": VERSION,
        "radius": r.radius,
        "min_differential": r.min_differential,
        "sigma": r.sigma,
        "c_const": r.c_const,
        "condition": [real(r.condition.0), real(r.condition.1)],
        "solution": solution_report(&r.solution),
    }))
}

fn verdict(v: Verdict) -> Value {
    match v {
        Verdict::Equal => json!({ "verdict": "equal" }),
        Verdict::Unequal { gap } => json!({ "verdict": "unequal", "gap": gap }),
    }
}

fn move_name(m: Move) -> String {
    let kind = |k: SurgeryKind| match k {
        SurgeryKind::SameCircle => "same",
        SurgeryKind::DifferentCircles => "different",
    };
    match m {
        Move::CuspToNodes(k) => format!("cusp-to-nodes:{k}"),
        Move::NodesToCusp(k) => format!("nodes-to-cusp:{k}"),
        Move::NodeToHandle => "node-to-handle".into(),
        Move::HandleToNode => "handle-to-node".into(),
        Move::BoundarySurgery(s) => format!("boundary-surgery:{}", kind(s)),
        Move::BoundaryNode(s) => format!("boundary-node:{}", kind(s)),
    }
}

fn random_move(rng: &mut ChaCha8Rng, kind: SurgeryKind) -> Move {
    match rng.gen_range(0..6) {
        0 => Move::CuspToNodes(rng.gen_range(1..=3)),
        1 => Move::NodesToCusp(rng.gen_range(1..=3)),
        2 => Move::NodeToHandle,
        3 => Move::HandleToNode,
        4 => Move::BoundarySurgery(kind),
        _ => Move::BoundaryNode(kind),
    }
}

fn cmd_adjunction(args: &AdjunctionArgs, ctx: &Context) -> Outcome<Value> {
    let (mut p, _): (AdjunctionPayload, _) = load(&args.input, Kind::Adjunction)?;
    p.surgery = Some(args.surgery.or(p.surgery).unwrap_or_default());
    p.walk = args.walk.or(p.walk);
    p.seed = if p.walk.is_some() {
        Some(ctx.seed_or(p.seed))
    } else {
        None
    };
    if ctx.emit {
        return Ok(problem(Kind::Adjunction, &p));
    }
    let cfg = p.config();
    let check = check_adjunction(&cfg)?;
    let mut out = verdict(check.verdict);
    out["version"] = json!(VERSION);
    out["lhs"] = json!(check.lhs);
    out["rhs"] = json!(check.rhs);
    out["expected_double_sq"] = json!(cfg.expected_double_sq());
    out["euler"] = json!(cfg.euler());
    if let Some(steps) = p.walk {
        let surgery: SurgeryKind = p.surgery.unwrap_or_default().into();
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed.unwrap_or(0));
        let mut current = cfg;
        let mut log = Vec::new();
        let mut all_equal = true;
        for _ in 0..steps {
            let m = random_move(&mut rng, surgery);
            let Ok(next) = apply_move(&current, m) else {
                continue;
            };
            let c = check_adjunction(&next)?;
            all_equal &= c.verdict == Verdict::Equal;
            let mut entry = verdict(c.verdict);
            entry["move"] = json!(move_name(m));
            entry["config"] =
                serde_json::to_value(CurveConfigJson::from(next)).expect("config serializes");
            log.push(entry);
            current = next;
        }
        out["walk"] = Value::Array(log);
        out["all_equal"] = json!(all_equal);
    }
    Ok(out)
}

impl Context {
    fn seed_or(&self, payload: Option<u64>) -> u64 {
        if self.seed_from_flags {
            self.seed
        } else {
            payload.unwrap_or(self.seed)
        }
    }
}

fn cmd_maslov(args: &MaslovArgs, ctx: &Context) -> Outcome<Value> {
    let mut p = match &args.input {
        Some(path) => load::<MaslovPayload>(path, Kind::Maslov)?.0,
        None => MaslovPayload::default(),
    };
    p.g = args.genus.or(p.g);
    p.sigma = args.sigma.or(p.sigma);
    if args.tangent && (p.g.is_none() || p.sigma.is_none()) {
        return Err(Failure::Usage("--tangent needs -g and -s".into()));
    }
    if ctx.emit {
        return Ok(problem(Kind::Maslov, &p));
    }
    let mut out = json!({ "version": VERSION });
    let mut any = false;
    if let (Some(g), Some(s)) = (p.g, p.sigma) {
        out["maslov"] = json!(maslov_tangent(g, s));
        any = true;
    }
    if p.interior_zeros.is_some() || p.boundary_zeros.is_some() {
        let z = SectionZeroData {
            interior_zeros: p.interior_zeros.clone().unwrap_or_default(),
            boundary_zeros: p.boundary_zeros.clone().unwrap_or_default(),
        };
        out["section_maslov"] = json!(maslov_from_zeros(&z)?);
        out["double_chern"] = json!(double_chern_count(&z)?);
        any = true;
    }
    if let Some(terms) = &p.summands {
        out["sum"] = json!(terms.iter().copied().fold(0, maslov_sum));
        any = true;
    }
    if !any {
        return Err(Failure::Usage(
            "nothing to compute: give -g and -s, zero data or summands".into(),
        ));
    }
    Ok(out)
}

fn cmd_reflect(args: &FileArgs, ctx: &Context) -> Outcome<Value> {
    let (p, prefix): (ReflectPayload, _) = load(&args.input, Kind::Reflect)?;
    if ctx.emit {
        return Ok(problem(Kind::Reflect, &p));
    }
    let b = p
        .structure
        .build()
        .map_err(|e| Failure::Input(e.within(&format!("{prefix}/structure"))))?;
    let r = reflect_structure(&*b)?;
    let matrices: Vec<[[f64; 4]; 4]> = p
        .points
        .iter()
        .map(|&[xi, eta]| matrix_rows(&r.eval(Complex64::new(xi, eta))))
        .collect();
    Ok(json!({ "version": VERSION, "points": p.points, "matrices": matrices }))
}

fn seed_from_env() -> Outcome<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("{SEED_ENV}={s:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn dispatch(cli: &Cli, ctx: &Context) -> Outcome<Value> {
    match &cli.command {
        Command::Index(a) => cmd_index(a, ctx),
        Command::Tangency(a) => cmd_tangency(a, ctx),
        Command::Compare(a) => cmd_compare(a, ctx),
        Command::Perturb(a) => cmd_perturb(a, ctx),
        Command::SmoothCusp(a) => cmd_smooth_cusp(a, ctx),
        Command::Adjunction(a) => cmd_adjunction(a, ctx),
        Command::Maslov(a) => cmd_maslov(a, ctx),
        Command::Reflect(a) => cmd_reflect(a, ctx),
    }
}

fn render(v: &Value, pretty: bool) -> String {
    let mut s = if pretty {
        serde_json::to_string_pretty(v)
    } else {
        serde_json::to_string(v)
    }
    .expect("report serializes");
    s.push('\n');
    s
}

/// Parses `argv`, runs the command and writes the report. Returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let result = seed_from_env().and_then(|env| {
        let ctx = Context {
            seed: env.or(cli.seed).unwrap_or(0),
            seed_from_flags: env.is_some() || cli.seed.is_some(),
            emit: cli.emit_input,
        };
        match cli.threads {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Failure::Internal(format!("thread pool: {e}")))?;
                pool.install(|| dispatch(&cli, &ctx))
            }
            None => dispatch(&cli, &ctx),
        }
    });
    match result {
        Ok(v) => {
            let _ = out.write_all(render(&v, cli.pretty).as_bytes());
            0
        }
        Err(f) => {
            let _ = err.write_all(render(&f.report(), cli.pretty).as_bytes());
            f.code()
        }
    }
}
