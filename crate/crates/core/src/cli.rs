//! Command-line front end over problem files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use nchull::certify::{
    augment_generators, closedness_report, pointedness_certificate, qmodule_membership, qmodule_search,
    QModuleCertificate, Search,
};
use nchull::conic::SolverSettings;
use nchull::oracle::BoundingBox;
use nchull::orthant::{split_orthants, OrthantPattern, UnionHull};
use nchull::relax::{
    homogenize_system, is_member, support_value, trace_support_2d, Limits, Relaxation, SupportResult, SupportValue,
    DEFAULT_MAX_Y,
};
use nchull::{parse_polynomial, SemialgebraicSet};

pub const EXIT_USAGE: i32 = 64;
pub const EXIT_NO_INPUT: i32 = 66;
pub const EXIT_SOFTWARE: i32 = 70;

const DEFAULT_ORDER: usize = 2;
const DEFAULT_SEED: u64 = 0;
const DEFAULT_BOX: f64 = 16.0;

#[derive(Parser, Debug)]
#[command(name = "nchull", version, about = "Outer approximations of closed convex hulls of non-compact semialgebraic sets")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Relaxation order k (overrides the problem file)
    #[arg(long, global = true)]
    pub order: Option<usize>,
    #[arg(long = "tol-eq", global = true)]
    pub tol_eq: Option<f64>,
    #[arg(long = "tol-psd", global = true)]
    pub tol_psd: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Size guard on the number of moment variables
    #[arg(long = "max-y", global = true)]
    pub max_y: Option<usize>,
    /// Write the result here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Include wall-clock timings (output is then no longer reproducible)
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Membership of a point in the order-k relaxation
    Member {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        point: Vec<f64>,
        /// Use the non-homogenized baseline relaxation
        #[arg(long)]
        plain: bool,
    },
    /// Support function value along a direction
    Support {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        direction: Vec<f64>,
        #[arg(long)]
        plain: bool,
    },
    /// Support values on a circle of directions, as CSV
    Trace {
        file: PathBuf,
        #[arg(long, default_value_t = 64)]
        angles: usize,
        #[arg(long)]
        plain: bool,
    },
    /// Search for a pointedness certificate
    Certify { file: PathBuf },
    /// Closedness-at-infinity diagnostics and a recommended linear generator
    CheckClosed { file: PathBuf },
    /// Write a new problem file with a linear generator appended
    Augment {
        file: PathBuf,
        /// Generator to append; defaults to the check-closed recommendation
        #[arg(long)]
        generator: Option<String>,
    },
    /// Membership in the hull of a union of orthant pieces
    SplitMember {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        point: Vec<f64>,
        /// Orthant patterns such as 00,10 (default: all)
        #[arg(long, value_delimiter = ',')]
        patterns: Option<Vec<String>>,
        /// Allow the full 2^n split above four variables
        #[arg(long)]
        allow_large_split: bool,
    },
    /// Search for a quadratic-module certificate of a polynomial
    SosMember {
        file: PathBuf,
        #[arg(long)]
        poly: String,
        /// Certify a form over the homogenized generators instead
        #[arg(long)]
        homogenized: bool,
    },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eq_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psd_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Half-width of the sampling cube.
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub bbox: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    pub variables: Vec<String>,
    #[serde(default)]
    pub inequalities: Vec<String>,
    #[serde(default)]
    pub equalities: Vec<String>,
    #[serde(default)]
    pub options: ProblemOptions,
}

/// Marks errors caused by malformed input.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct InputError(String);

impl ProblemFile {
    pub fn set(&self) -> Result<SemialgebraicSet> {
        let vars: Vec<&str> = self.variables.iter().map(String::as_str).collect();
        SemialgebraicSet::parse(&vars, &self.inequalities, &self.equalities).context("invalid problem")
    }
}

struct Loaded {
    file: ProblemFile,
    set: SemialgebraicSet,
    hash: String,
}

fn load(path: &Path) -> Result<Loaded> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let file: ProblemFile = serde_json::from_slice(&bytes)
        .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    let set = file.set()?;
    let digest = Sha256::digest(&bytes);
    let hash = digest.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    });
    Ok(Loaded { file, set, hash })
}

struct Resolved {
    k: usize,
    settings: SolverSettings,
    limits: Limits,
    seed: u64,
    bbox: f64,
}

fn resolve(g: &Global, opts: &ProblemOptions) -> Result<Resolved> {
    let mut settings = SolverSettings::default();
    if let Some(t) = g.tol_eq.or(opts.eq_tol) {
        settings.eq_tol = t;
    }
    if let Some(t) = g.tol_psd.or(opts.psd_tol) {
        settings.psd_tol = t;
    }
    settings.validate().map_err(|e| InputError(e.to_string()))?;
    let bbox = opts.bbox.unwrap_or(DEFAULT_BOX);
    if !(bbox > 0.0 && bbox.is_finite()) {
        bail!(InputError(format!("box must be positive, got {bbox}")));
    }
    Ok(Resolved {
        k: g.order.or(opts.order).unwrap_or(DEFAULT_ORDER),
        settings,
        limits: Limits {
            max_y: g.max_y.unwrap_or(DEFAULT_MAX_Y),
            ..Limits::default()
        },
        seed: g.seed.or(opts.seed).unwrap_or(DEFAULT_SEED),
        bbox,
    })
}

/// What a command produced: a process exit code and either JSON or raw text.
pub struct Output {
    pub code: i32,
    pub body: Body,
}

pub enum Body {
    Json(Value),
    Text(String),
}

fn envelope(command: &str, loaded: &Loaded, r: &Resolved, result: Value, started: Option<Instant>) -> Value {
    let mut m = Map::new();
    m.insert("tool".into(), json!("nchull"));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("command".into(), json!(command));
    m.insert("problem_sha256".into(), json!(loaded.hash));
    m.insert("k".into(), json!(r.k));
    m.insert(
        "settings".into(),
        json!({
            "eq_tol": r.settings.eq_tol,
            "psd_tol": r.settings.psd_tol,
            "ray_tol": r.settings.ray_tol,
            "infeasible_radius": r.settings.infeasible_radius,
            "max_iters": r.settings.max_iters,
            "seed": r.seed,
            "box": r.bbox,
            "max_y": r.limits.max_y,
            "order_cap": r.limits.order_cap,
        }),
    );
    m.insert("result".into(), result);
    if let Some(t) = started {
        m.insert("timings".into(), json!({ "total_seconds": t.elapsed().as_secs_f64() }));
    }
    Value::Object(m)
}

fn relaxation(set: &SemialgebraicSet, k: usize, limits: Limits, plain: bool) -> Result<Relaxation> {
    Ok(if plain {
        Relaxation::plain(set, k, limits)?
    } else {
        Relaxation::homogenized(&homogenize_system(set), k, limits)?
    })
}

fn search_code<T>(s: &Search<T>) -> i32 {
    match s {
        Search::Found(_) => 0,
        Search::NotFound => 1,
        Search::Undetermined => 2,
    }
}

fn support_json(r: &SupportResult) -> Value {
    let (value, status) = match r.value {
        SupportValue::Finite(v) => (json!(v), "finite"),
        SupportValue::Unbounded => (json!("inf"), "unbounded"),
        SupportValue::Empty => (json!("-inf"), "empty"),
        SupportValue::Undetermined => (Value::Null, "undetermined"),
    };
    json!({
        "direction": r.direction,
        "k": r.order,
        "value": value,
        "status": status,
        "maximizer_proxy": r.maximizer_proxy,
        "solver_status": r.solver_status,
        "residuals": r.residuals,
    })
}

fn trace_csv(rows: &[(f64, SupportResult)]) -> String {
    let mut s = String::from("theta,value,px,py,status\n");
    for (theta, r) in rows {
        let (value, status) = match r.value {
            SupportValue::Finite(v) => (format!("{v:?}"), "finite"),
            SupportValue::Unbounded => ("inf".into(), "unbounded"),
            SupportValue::Empty => ("-inf".into(), "empty"),
            SupportValue::Undetermined => (String::new(), "undetermined"),
        };
        let (px, py) = match &r.maximizer_proxy {
            Some(p) => (format!("{:?}", p[0]), format!("{:?}", p[1])),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(s, "{theta:?},{value},{px},{py},{status}");
    }
    s
}

fn certificate_search_json(s: &Search<QModuleCertificate>) -> Value {
    json!({
        "status": s.label(),
        "certificate": s.found().map(QModuleCertificate::to_json),
    })
}

pub fn run(cli: &Cli) -> Result<Output> {
    let started = cli.global.timings.then(Instant::now);
    let (name, file) = match &cli.command {
        Command::Member { file, .. } => ("member", file),
        Command::Support { file, .. } => ("support", file),
        Command::Trace { file, .. } => ("trace", file),
        Command::Certify { file } => ("certify", file),
        Command::CheckClosed { file } => ("check-closed", file),
        Command::Augment { file, .. } => ("augment", file),
        Command::SplitMember { file, .. } => ("split-member", file),
        Command::SosMember { file, .. } => ("sos-member", file),
    };
    let loaded = load(file)?;
    let r = resolve(&cli.global, &loaded.file.options)?;
    let set = &loaded.set;
    let wrap = |result: Value, code: i32| Output {
        code,
        body: Body::Json(envelope(name, &loaded, &r, result, started)),
    };

    match &cli.command {
        Command::Member { point, plain, .. } => {
            let relax = relaxation(set, r.k, r.limits, *plain)?;
            let v = is_member(&relax, point, &r.settings)?;
            let result = json!({
                "decision": v.decision,
                "k": v.order,
                "point": v.point,
                "relaxation": if *plain { "plain" } else { "homogenized" },
                "witness_moments": v.witness,
                "residuals": v.residuals,
                "solver_status": v.solver_status,
            });
            Ok(wrap(result, v.decision.exit_code()))
        }
        Command::Support { direction, plain, .. } => {
            let relax = relaxation(set, r.k, r.limits, *plain)?;
            let s = support_value(&relax, direction, &r.settings)?;
            let code = if s.value == SupportValue::Undetermined { 2 } else { 0 };
            Ok(wrap(support_json(&s), code))
        }
        Command::Trace { angles, plain, .. } => {
            let relax = relaxation(set, r.k, r.limits, *plain)?;
            let rows = trace_support_2d(&relax, *angles, &r.settings)?;
            Ok(Output {
                code: 0,
                body: Body::Text(trace_csv(&rows)),
            })
        }
        Command::Certify { .. } => {
            let h = homogenize_system(set);
            let s = pointedness_certificate(&h, r.k, &r.settings, r.limits)?;
            let result = json!({
                "status": s.label(),
                "certificate": s.found().map(|c| c.to_json()),
            });
            Ok(wrap(result, search_code(&s)))
        }
        Command::CheckClosed { .. } => {
            let report = closedness_report(set, r.k, &r.settings, r.limits, r.seed)?;
            Ok(wrap(report.to_json(), 0))
        }
        Command::Augment { generator, .. } => {
            let Some(out) = &cli.global.out else {
                bail!(InputError("augment needs --out for the new problem file".into()));
            };
            let (ell, source) = match generator {
                Some(text) => (
                    parse_polynomial(text, set.variables()).map_err(|e| InputError(e.to_string()))?,
                    "given on the command line".to_string(),
                ),
                None => {
                    let report = closedness_report(set, r.k, &r.settings, r.limits, r.seed)?;
                    match report.recommendation {
                        Some(p) => (p, format!("recommended by check-closed at order {}", r.k)),
                        None => return Ok(wrap(json!({ "augmented": false, "report": report.to_json() }), 1)),
                    }
                }
            };
            let bbox = BoundingBox::cube(set.dim(), r.bbox)?;
            augment_generators(set, &ell, &bbox, r.seed)?;
            let mut next = loaded.file.clone();
            next.inequalities.push(ell.to_string());
            next.comment = Some(format!(
                "augmented from problem sha256 {} with `{} >= 0`, {}",
                loaded.hash, ell, source
            ));
            let text = serde_json::to_string_pretty(&next)? + "\n";
            fs::write(out, text).with_context(|| format!("cannot write {}", out.display()))?;
            let result = json!({
                "augmented": true,
                "generator": ell.to_string(),
                "out": out.display().to_string(),
            });
            Ok(Output {
                code: 0,
                body: Body::Json(envelope(name, &loaded, &r, result, started)),
            })
        }
        Command::SplitMember {
            point,
            patterns,
            allow_large_split,
            ..
        } => {
            let patterns = patterns
                .as_ref()
                .map(|ps| ps.iter().map(|p| p.parse::<OrthantPattern>()).collect::<Result<Vec<_>, _>>())
                .transpose()
                .map_err(|e| InputError(e.to_string()))?;
            let pieces = split_orthants(set, patterns.as_deref(), *allow_large_split)?;
            let labels: Vec<String> = pieces.iter().map(|(e, _)| e.to_string()).collect();
            let systems: Vec<_> = pieces.iter().map(|(_, p)| homogenize_system(p)).collect();
            let hull = UnionHull::new(&systems, r.k, &r.settings, r.limits)?;
            let v = hull.membership(point, &r.settings)?;
            let mut result = serde_json::to_value(&v)?;
            result["patterns"] = json!(labels);
            result["stabilized"] = json!(hull.stabilized());
            Ok(wrap(result, v.decision.exit_code()))
        }
        Command::SosMember { poly, homogenized, .. } => {
            let s = if *homogenized {
                let h = homogenize_system(set);
                let f = parse_polynomial(poly, h.variables()).map_err(|e| InputError(e.to_string()))?;
                qmodule_membership(&f, &h, r.k, &r.settings, r.limits)?
            } else {
                let f = parse_polynomial(poly, set.variables()).map_err(|e| InputError(e.to_string()))?;
                qmodule_search(&f, set.inequalities(), set.equalities(), r.k, &r.settings, r.limits)?
            };
            Ok(wrap(certificate_search_json(&s), search_code(&s)))
        }
    }
}

/// Exit code for a failed command: malformed input and usage errors map to
/// 64, unreadable files to 66.
pub fn failure_code(err: &anyhow::Error) -> i32 {
    use nchull::Error as E;
    for cause in err.chain() {
        if cause.is::<InputError>() || cause.is::<serde_json::Error>() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::NoSamples { .. } | E::InvalidAugmentation { .. } => 1,
                _ => EXIT_USAGE,
            };
        }
        if cause.is::<std::io::Error>() {
            return EXIT_NO_INPUT;
        }
    }
    EXIT_SOFTWARE
}

pub fn emit(out: &Output, path: Option<&Path>, command: &Command) -> Result<()> {
    let text = match &out.body {
        Body::Json(v) => serde_json::to_string_pretty(v)? + "\n",
        Body::Text(t) => t.clone(),
    };
    match (path, command) {
        // augment already wrote the problem file to --out
        (Some(p), c) if !matches!(c, Command::Augment { .. }) => {
            fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))
        }
        _ => {
            print!("{text}");
            Ok(())
        }
    }
}
