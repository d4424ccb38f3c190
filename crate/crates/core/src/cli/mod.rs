//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input, 2 regularity failure, 3 Holevo
//! solver did not converge, 4 `verify` found failing checks.

pub mod model_file;
pub mod report;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::bounds::{holevo_bound_with, HolevoMethod, HolevoOptions, WeightMatrix};
use crate::classify::{bloch_classify_points, classify_points, classify_with, Grid, CLASS_NAMES};
use crate::error::{Error, Result};
use crate::infogeo::{analyze, verify_identities, CheckKind, DEFAULT_SEED};
use crate::model::{evaluate, zoo, zoo_entry, Derivative, ParametricModel};
use crate::random::random_point;
use model_file::ModelFile;
use report::{complex_matrix, fmt_float, mark, object, real_matrix, render_json, to_value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID_INPUT: i32 = 1;
pub const EXIT_REGULARITY: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

/// Environment variable overriding the default seed of `verify`.
pub const SEED_ENV: &str = "QESTKIT_SEED";

#[derive(Parser, Debug)]
#[command(name = "qestkit", version, about = "Classify quantum statistical models and evaluate Cramér-Rao type bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify a model at one point, over a grid, or at every stored point.
    Classify(ClassifyArgs),
    /// SLD, RLD and Holevo bounds at one point.
    Bounds(BoundsArgs),
    /// Run the identity and inequality checks on seeded random models.
    Verify(VerifyArgs),
    /// List or describe the built-in models.
    Zoo(ZooArgs),
}

#[derive(Args, Debug)]
struct ModelSource {
    /// JSON model file.
    #[arg(long, value_name = "FILE", conflicts_with = "zoo")]
    model: Option<PathBuf>,
    /// Built-in model name.
    #[arg(long, value_name = "NAME")]
    zoo: Option<String>,
    /// Parameter of a built-in model (repeatable).
    #[arg(long = "param", value_name = "K=V", requires = "zoo")]
    params: Vec<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Auto,
    Numeric,
    ClosedForm,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[command(flatten)]
    source: ModelSource,
    /// Comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "grid")]
    theta: Option<String>,
    /// Grid `a:b:k` per axis, axes joined by `x`.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long, default_value_t = crate::classify::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Include wall-clock timings (makes the report non-reproducible).
    #[arg(long)]
    timings: bool,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[command(flatten)]
    source: ModelSource,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// `identity` or a JSON file holding an n×n real array.
    #[arg(long, default_value = "identity")]
    weight: String,
    #[arg(long, value_enum, default_value = "auto")]
    method: MethodArg,
    #[arg(long, default_value_t = crate::classify::DEFAULT_TOL)]
    tol: f64,
    /// Objective-evaluation budget of the numeric Holevo solver.
    #[arg(long, default_value_t = 100_000)]
    max_evals: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    timings: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Number of random models.
    #[arg(long, default_value_t = 100)]
    random: usize,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 2)]
    params: usize,
    /// Seed; defaults to $QESTKIT_SEED, then 42.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    timings: bool,
}

#[derive(Args, Debug)]
struct ZooArgs {
    #[arg(long, conflicts_with = "describe")]
    list: bool,
    #[arg(long, value_name = "NAME")]
    describe: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

/// Output of a command before rendering.
struct Outcome {
    json: Value,
    table: String,
    exit: i32,
}

/// Runs the command line `args` (program name first), writing the report to
/// `out` and diagnostics to `err`; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INVALID_INPUT,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let echo: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let started = Instant::now();
    let (name, timings, format, result) = match &cli.command {
        Command::Classify(a) => ("classify", a.timings, a.format, cmd_classify(a)),
        Command::Bounds(a) => ("bounds", a.timings, a.format, cmd_bounds(a)),
        Command::Verify(a) => ("verify", a.timings, a.format, cmd_verify(a)),
        Command::Zoo(a) => ("zoo", false, a.format, cmd_zoo(a)),
    };
    match result {
        Ok(mut outcome) => {
            if let Value::Object(map) = &mut outcome.json {
                map.insert("command".into(), json!({ "name": name, "args": echo }));
                if timings {
                    map.insert("timings".into(), json!({ "total_seconds": started.elapsed().as_secs_f64() }));
                }
            }
            let text = match format {
                Format::Json => render_json(outcome.json),
                Format::Table => outcome.table,
            };
            let _ = out.write_all(text.as_bytes());
            outcome.exit
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_regularity_failure() {
        EXIT_REGULARITY
    } else {
        EXIT_INVALID_INPUT
    }
}

fn parse_params(items: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("parameter '{item}' is not of the form key=value")))?;
        let v: f64 = v.trim().parse().map_err(|_| Error::Parse(format!("parameter '{item}' has a non-numeric value")))?;
        if out.insert(k.trim().to_string(), v).is_some() {
            return Err(Error::Parse(format!("parameter '{k}' given twice")));
        }
    }
    Ok(out)
}

fn parse_theta(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            let v: f64 = t.trim().parse().map_err(|_| Error::Parse(format!("bad coordinate '{t}' in --theta")))?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("coordinate '{t}' is not finite")));
            }
            Ok(v)
        })
        .collect()
}

fn load_model(src: &ModelSource) -> Result<ParametricModel> {
    match (&src.model, &src.zoo) {
        (Some(path), None) => ModelFile::read(path)?.to_model(),
        (None, Some(name)) => crate::model::build_zoo_model(name, &parse_params(&src.params)?),
        _ => Err(Error::Parse("give exactly one of --model FILE or --zoo NAME".into())),
    }
}

fn model_info(model: &ParametricModel) -> Value {
    let parameters = match ModelFile::from_model(model) {
        Ok(f) => to_value(&f.parameters),
        Err(_) => json!({}),
    };
    json!({
        "name": model.name(),
        "kind": to_value(&model.kind()),
        "dim": model.dim(),
        "params": model.param_count(),
        "parameters": parameters,
    })
}

/// Points used when neither `--theta` nor `--grid` is given.
fn default_points(model: &ParametricModel) -> Vec<Vec<f64>> {
    match model {
        ParametricModel::Explicit(e) => e.points().iter().map(|p| p.theta.clone()).collect(),
        _ => {
            let n = model.param_count();
            match zoo_entry(&model.name()) {
                Ok(entry) if entry.example_theta.len() == n => vec![entry.example_theta],
                _ => vec![vec![0.0; n]],
            }
        }
    }
}

fn check_arity(model: &ParametricModel, theta: &[f64]) -> Result<()> {
    if theta.len() != model.param_count() {
        return Err(Error::Dimension(format!(
            "model has {} parameters, --theta gives {}",
            model.param_count(),
            theta.len()
        )));
    }
    Ok(())
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(a.len().cmp(&b.len()))
}

fn theta_str(t: &[f64]) -> String {
    format!("({})", t.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", "))
}

fn cmd_classify(a: &ClassifyArgs) -> Result<Outcome> {
    let model = load_model(&a.source)?;
    let mut thetas = match (&a.theta, &a.grid) {
        (Some(t), _) => {
            let t = parse_theta(t)?;
            check_arity(&model, &t)?;
            vec![t]
        }
        (None, Some(g)) => {
            let grid = Grid::parse(g)?;
            if grid.arity() != model.param_count() {
                return Err(Error::Dimension(format!(
                    "grid has {} axes, model has {} parameters",
                    grid.arity(),
                    model.param_count()
                )));
            }
            grid.points()
        }
        (None, None) => default_points(&model),
    };
    thetas.sort_by(|x, y| lexicographic(x, y));
    let report = classify_points(&model, &thetas, a.tol)?;
    let bloch = match &model {
        ParametricModel::Bloch(_) => Some(bloch_classify_points(&model, &thetas, a.tol)?),
        _ => None,
    };

    let mut table = format!("model {} (dim {}, {} parameters), tol {:e}\n", model.name(), model.dim(), model.param_count(), a.tol);
    for r in &report.points {
        table += &format!("theta {}\n", theta_str(&r.theta));
        for (name, t) in r.tests() {
            table += &format!(
                "  {:<26} {:<4} residual {}{}\n",
                name,
                mark(t.verdict),
                fmt_float(t.primary_residual),
                if t.marginal { "  (marginal)" } else { "" }
            );
        }
        if r.internal_inconsistency {
            table += "  internal inconsistency: verdicts or cross-checks disagree\n";
        }
    }
    if report.points.len() > 1 {
        table += "global\n";
        for name in CLASS_NAMES {
            table += &format!("  {:<26} {}\n", name, mark(report.verdict(name)));
        }
    }
    if let Some(b) = &bloch {
        table += &format!("bloch criteria agree with general tests: {}\n", mark(b.all_agree));
    }

    let mut json = object(vec![
        ("model", model_info(&model)),
        ("tolerance", json!({ "tol_class": a.tol, "grid": a.grid })),
        ("classification", to_value(&report)),
    ]);
    if let (Some(b), Value::Object(map)) = (&bloch, &mut json) {
        map.insert("bloch".into(), to_value(b));
    }
    Ok(Outcome { json, table, exit: EXIT_OK })
}

fn read_weight(spec: &str, n: usize) -> Result<WeightMatrix> {
    if spec == "identity" {
        return Ok(WeightMatrix::identity(n));
    }
    let text = std::fs::read_to_string(spec).map_err(|e| Error::Parse(format!("cannot read weight file {spec}: {e}")))?;
    let rows: Vec<Vec<f64>> =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("weight file {spec}: {e}")))?;
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidWeight(format!("weight must be a {n}×{n} array")));
    }
    WeightMatrix::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn cmd_bounds(a: &BoundsArgs) -> Result<Outcome> {
    let model = load_model(&a.source)?;
    let theta = match &a.theta {
        Some(t) => parse_theta(t)?,
        None => default_points(&model).remove(0),
    };
    check_arity(&model, &theta)?;
    let w = read_weight(&a.weight, model.param_count())?;
    let method = match a.method {
        MethodArg::Auto => HolevoMethod::Auto,
        MethodArg::Numeric => HolevoMethod::Numeric,
        MethodArg::ClosedForm => HolevoMethod::ClosedForm,
    };
    if !(a.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", a.tol)));
    }
    let opts = HolevoOptions { method, tol_class: a.tol, max_evaluations: a.max_evals, ..Default::default() };
    let point = evaluate(&model, &theta, Derivative::Auto)?;
    let (scores, mats) = analyze(&point)?;
    let sol = holevo_bound_with(&point, &scores, &mats, &w, &opts)?;

    let exit = if sol.converged { EXIT_OK } else { EXIT_NOT_CONVERGED };
    let mut table = format!("model {} at theta {}\n", model.name(), theta_str(&theta));
    table += &format!("  SLD bound      {}\n", fmt_float(sol.sld_bound));
    table += &format!("  RLD bound      {}\n", fmt_float(sol.rld_bound));
    table += &format!("  Holevo bound   {}  ({:?})\n", fmt_float(sol.value), sol.solved_by);
    table += &format!("  gap vs lower   {}\n", fmt_float(sol.gap_vs_lower));
    table += &format!("  converged      {}\n", mark(sol.converged));

    let json = object(vec![
        ("model", model_info(&model)),
        ("theta", json!(theta)),
        ("tolerance", json!({ "tol_class": a.tol })),
        ("method", to_value(&method)),
        ("weight", real_matrix(w.matrix())),
        (
            "bounds",
            json!({
                "sld": sol.sld_bound,
                "rld": sol.rld_bound,
                "holevo": sol.value,
            }),
        ),
        (
            "holevo",
            json!({
                "solved_by": to_value(&sol.solved_by),
                "gap_vs_lower": sol.gap_vs_lower,
                "dual_objective": sol.dual_objective,
                "converged": sol.converged,
                "iterations": sol.iterations,
                "evaluations": sol.evaluations,
                "feasibility": to_value(&sol.feasibility),
                "smoothing": to_value(&sol.smoothing),
                "h": complex_matrix(&sol.h),
                "x": sol.x.iter().map(|x| complex_matrix(x)).collect::<Vec<_>>(),
                "coefficients": real_matrix(&sol.coefficients),
            }),
        ),
        (
            "information",
            json!({
                "g": real_matrix(&mats.g),
                "gt": complex_matrix(&mats.gt),
                "z": complex_matrix(&mats.z),
                "zt": complex_matrix(&mats.zt),
                "g_condition": mats.g_condition,
                "gt_condition": mats.gt_condition,
            }),
        ),
    ]);
    Ok(Outcome { json, table, exit })
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Error::Parse(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn cmd_verify(a: &VerifyArgs) -> Result<Outcome> {
    let (d, n) = (a.dim, a.params);
    if !(2..=16).contains(&d) {
        return Err(Error::InvalidParameter(format!("--dim must lie in [2, 16], got {d}")));
    }
    if n == 0 || n > d * d - 1 {
        return Err(Error::InvalidParameter(format!("--params must lie in [1, d² − 1 = {}], got {n}", d * d - 1)));
    }
    if a.random == 0 {
        return Err(Error::InvalidParameter("--random must be at least 1".into()));
    }
    if !(a.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", a.tol)));
    }
    let seed = resolve_seed(a.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(a.random);
    for _ in 0..a.random {
        let point = random_point(&mut rng, d, n)?;
        cases.push((point, rng.next_u64()));
    }
    let results = cases
        .par_iter()
        .map(|(point, probe_seed)| {
            let (scores, mats) = analyze(point)?;
            let identities = verify_identities(point, &scores, &mats, a.tol, *probe_seed)?;
            let class = classify_with(point, &scores, &mats, a.tol);
            Ok((identities, class))
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut summary: BTreeMap<String, Value> = BTreeMap::new();
    let names: Vec<(String, CheckKind)> = results[0].0.checks.iter().map(|c| (c.name.clone(), c.kind)).collect();
    let mut all_pass = true;
    let mut table = format!("{} random models, dim {d}, {n} parameters, seed {seed}, tol {:e}\n", a.random, a.tol);
    for (k, (name, kind)) in names.iter().enumerate() {
        let values: Vec<f64> = results.iter().map(|r| r.0.checks[k].value).collect();
        let failures = results.iter().filter(|r| !r.0.checks[k].passed).count();
        let worst = match kind {
            CheckKind::MinEigenvalue => values.iter().copied().fold(f64::INFINITY, f64::min),
            _ => values.iter().copied().fold(0.0, |m: f64, v| if v.is_nan() { m } else { m.max(v) }),
        };
        all_pass &= failures == 0;
        table += &format!(
            "  {:<24} {:<14} worst {:<14} failures {failures}/{}\n",
            name,
            format!("{kind:?}"),
            fmt_float(worst),
            a.random
        );
        summary.insert(name.clone(), json!({ "kind": to_value(kind), "worst": worst, "failures": failures }));
    }
    let mut counts: BTreeMap<&str, usize> = CLASS_NAMES.iter().map(|c| (*c, 0)).collect();
    let mut violations = 0;
    for (_, class) in &results {
        for (name, t) in class.tests() {
            if t.verdict {
                *counts.get_mut(name).expect("known class") += 1;
            }
        }
        if !class.consistency.consistent() {
            violations += 1;
        }
    }
    all_pass &= violations == 0;
    table += &format!("  classification consistency violations {violations}\n");
    table += &format!("all checks pass: {}\n", mark(all_pass));

    let models: Vec<Value> = results
        .iter()
        .enumerate()
        .map(|(index, (identities, _))| {
            let checks: BTreeMap<&str, f64> = identities.checks.iter().map(|c| (c.name.as_str(), c.value)).collect();
            let failures: Vec<&str> = identities.failures().map(|c| c.name.as_str()).collect();
            json!({ "index": index, "checks": checks, "failures": failures })
        })
        .collect();
    let json = object(vec![
        ("parameters", json!({ "count": a.random, "dim": d, "params": n, "seed": seed, "tol": a.tol })),
        ("summary", to_value(&summary)),
        ("classification", json!({ "verdict_counts": counts, "consistency_violations": violations })),
        ("models", Value::Array(models)),
        ("all_pass", json!(all_pass)),
    ]);
    Ok(Outcome { json, table, exit: if all_pass { EXIT_OK } else { EXIT_CHECK_FAILED } })
}

fn cmd_zoo(a: &ZooArgs) -> Result<Outcome> {
    match &a.describe {
        Some(name) => {
            let entry = zoo_entry(name)?;
            let mut table = format!("{}  ({:?})\n  {}\n  {}\n", entry.name, entry.kind, entry.summary, entry.provenance);
            for p in &entry.parameters {
                table += &format!("  {} = {} ({})\n", p.name, p.default, p.constraint);
            }
            Ok(Outcome { json: object(vec![("model", to_value(&entry))]), table, exit: EXIT_OK })
        }
        None => {
            let entries = zoo();
            let table = entries.iter().map(|e| format!("{:<20} {}\n", e.name, e.summary)).collect();
            Ok(Outcome { json: object(vec![("models", to_value(&entries))]), table, exit: EXIT_OK })
        }
    }
}
