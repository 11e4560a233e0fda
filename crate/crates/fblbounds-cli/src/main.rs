//! Command-line front end for the finite-blocklength bounds library.
//!
//! Subcommands:
//!
//! * `capacity`: first- and second-order channel statistics;
//! * `tilt`: tilted moments of the information statistic at one tilt;
//! * `delta`: the tail-equation solution `delta_n(eps)` at one point;
//! * `bound`: named bounds at a single blocklength;
//! * `curve`: bound sweeps over a blocklength grid (figure tables);
//! * `tstar`: Z-channel sweep of the second-order optimal input weight;
//! * `verify`: built-in self-checks and curve-file revalidation.
//!
//! Every emitted number is canonicalized to 12 significant digits and rows
//! are written in a fixed order, so identical invocations produce
//! byte-identical files. Rates are reported in bits, with nats alongside.
//!
//! Exit codes: 0 on success (including partially failed grids, which carry
//! a per-row `status` column), 2 on precondition failures, 3 on numerical
//! failures. Hard failures print one JSON object `{"error", "message"}` to
//! stderr; grids where every row failed are emitted in full and then exit
//! with the first row's failure class.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use fblbounds::bounds::eval_bound;
use fblbounds::solve::{max_info_binary, optimize_t_star, solve_delta_n};
use fblbounds::tilted::{
    bimsc_tilt, q_func, q_inv, xi_pair, zeta, zeta_closed_form, TiltFamily, C_BE_DEFAULT,
};
use fblbounds::{
    BoundName, Channel, EpsilonSpec, Error, ErrorModel, InputDist, RateBound, SolverConfig,
};

const LN_2: f64 = std::f64::consts::LN_2;

/// Fixed column set of `bound`/`curve` tables; `t0` is blank on the
/// symmetric path.
const CURVE_HEADER: &str = "n,eps,bound,rate_bits,rate_nats,status,t0";

/// Fixed column set of `tstar` tables.
const TSTAR_HEADER: &str = "p,n,eps,t_star0,t_cap0,obj_t_star,obj_capacity,obj_uniform,\
                            ratio_capacity,ratio_uniform,status";

#[derive(Parser)]
#[command(
    name = "fblbounds",
    version,
    about = "Finite-blocklength channel-coding bounds",
    long_about = "Computes converse, achievability, and approximation bounds on the best \
                  coding rate of discrete-input memoryless channels at finite blocklength."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print capacity and second-order statistics of a channel.
    Capacity(CapacityArgs),
    /// Evaluate the tilted information-statistic moments at one tilt.
    Tilt(TiltArgs),
    /// Solve the tail equation for the mean shift at one (n, eps).
    Delta(DeltaArgs),
    /// Evaluate named bounds at a single blocklength.
    Bound(BoundArgs),
    /// Sweep a blocklength grid and emit a curve table.
    Curve(CurveArgs),
    /// Sweep the Z-channel crossover and emit the optimal-input trajectory.
    Tstar(TstarArgs),
    /// Run built-in self-checks and optionally revalidate a curve file.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ChannelArg {
    /// Channel spec: a path to a JSON file, or an inline JSON object.
    #[arg(long, value_name = "FILE|JSON")]
    channel: String,
}

#[derive(Args)]
struct SolverArgs {
    /// Relative solver tolerance (absolute tolerance scales along).
    #[arg(long, value_name = "T")]
    tol: Option<f64>,

    /// Iteration cap per bracketed solve.
    #[arg(long, value_name = "K")]
    max_iter: Option<usize>,

    /// Include the type-counting term in divergence-path converse rates.
    #[arg(long)]
    strict_type_term: bool,
}

impl SolverArgs {
    fn to_config(&self) -> Result<SolverConfig, Error> {
        let mut cfg = SolverConfig::default();
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::OutOfRange(format!("tol = {t} must be positive")));
            }
            cfg.rel_tol = t;
            cfg.abs_tol = t * 1e-2;
        }
        if let Some(k) = self.max_iter {
            if k == 0 {
                return Err(Error::OutOfRange("max-iter must be positive".into()));
            }
            cfg.max_iter = k;
        }
        cfg.dimc_type_term = self.strict_type_term;
        Ok(cfg)
    }
}

/// Error-probability schedule flags; exactly one must be given.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct EpsArgs {
    /// Fixed target error probability.
    #[arg(long, value_name = "V")]
    eps: Option<f64>,

    /// Fixed mean shift in nats; the target follows the tail factor.
    #[arg(long, value_name = "V")]
    delta: Option<f64>,

    /// Polynomial schedule exponent (eps ~ n^-alpha up to the slow factor).
    #[arg(long, value_name = "ALPHA")]
    poly: Option<f64>,

    /// Subexponential schedule exponent (eps ~ exp(-n^alpha), 0 < alpha < 1).
    #[arg(long, value_name = "ALPHA")]
    subexp: Option<f64>,
}

impl EpsArgs {
    fn to_spec(&self) -> EpsilonSpec {
        match (self.eps, self.delta, self.poly, self.subexp) {
            (Some(v), _, _, _) => EpsilonSpec::FixedEps(v),
            (_, Some(v), _, _) => EpsilonSpec::FixedDelta(v),
            (_, _, Some(a), _) => EpsilonSpec::Poly(a),
            _ => EpsilonSpec::Subexp(self.subexp.expect("clap enforces one flag")),
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum ErrorModelArg {
    Avg,
    Max,
}

impl From<ErrorModelArg> for ErrorModel {
    fn from(m: ErrorModelArg) -> ErrorModel {
        match m {
            ErrorModelArg::Avg => ErrorModel::Avg,
            ErrorModelArg::Max => ErrorModel::Max,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Output path (stdout when omitted).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CapacityArgs {
    #[command(flatten)]
    channel: ChannelArg,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct TiltArgs {
    #[command(flatten)]
    channel: ChannelArg,
    /// Tilt parameter.
    #[arg(long, value_name = "L", allow_hyphen_values = true)]
    lambda: f64,
    /// Input weight t(0); selects the divergence family explicitly.
    #[arg(long, value_name = "W")]
    t0: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct DeltaArgs {
    #[command(flatten)]
    channel: ChannelArg,
    /// Blocklength.
    #[arg(long, value_name = "N")]
    n: u64,
    #[command(flatten)]
    eps: EpsArgs,
    /// Input weight t(0); defaults to the channel's natural anchor input.
    #[arg(long, value_name = "W")]
    t0: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    channel: ChannelArg,
    /// Comma-separated bound names: so, nep, normal, normal_ln,
    /// exact_converse_avg, exact_converse_max, jar_achievability, dt_z,
    /// the alias exact_converse (resolved by --error-model), or tstar.
    #[arg(long, value_delimiter = ',', required = true, value_name = "LIST")]
    bounds: Vec<String>,
    /// Blocklength.
    #[arg(long, value_name = "N")]
    n: u64,
    #[command(flatten)]
    eps: EpsArgs,
    /// Error model resolving the exact_converse alias.
    #[arg(long, value_enum, default_value_t = ErrorModelArg::Avg)]
    error_model: ErrorModelArg,
    /// Information constraint as a fraction of the maximal mutual
    /// information (divergence-path optimizers only).
    #[arg(long, value_name = "F")]
    c_frac: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    channel: ChannelArg,
    /// Comma-separated bound names (see `bound --help`).
    #[arg(long, value_delimiter = ',', required = true, value_name = "LIST")]
    bounds: Vec<String>,
    /// Blocklength grid LO:HI:STEP, or a single N.
    #[arg(long, value_parser = parse_n_range, value_name = "LO:HI:STEP")]
    n: NRange,
    #[command(flatten)]
    eps: EpsArgs,
    /// Error model resolving the exact_converse alias.
    #[arg(long, value_enum, default_value_t = ErrorModelArg::Avg)]
    error_model: ErrorModelArg,
    /// Information constraint as a fraction of the maximal mutual
    /// information (divergence-path optimizers only).
    #[arg(long, value_name = "F")]
    c_frac: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct TstarArgs {
    /// Z-channel crossover grid LO:HI:STEP, or a single value.
    #[arg(long, value_parser = parse_f_range, value_name = "LO:HI:STEP")]
    p: FRange,
    /// Blocklength.
    #[arg(long, value_name = "N")]
    n: u64,
    /// Fixed target error probability.
    #[arg(long, value_name = "V")]
    eps: f64,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Curve or tstar table to revalidate (CSV or JSON, as emitted).
    #[arg(long, value_name = "PATH", requires = "channel")]
    rows: Option<PathBuf>,
    /// Channel spec the table was produced from (required with --rows).
    #[arg(long, value_name = "FILE|JSON")]
    channel: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
}

// ---------------------------------------------------------------------------
// Range parsing.
// ---------------------------------------------------------------------------

#[derive(Clone)]
struct NRange(Vec<u64>);

fn parse_n_range(s: &str) -> Result<NRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| format!("bad integer {t:?}"));
    match parts.as_slice() {
        [one] => {
            let n = num(one)?;
            if n == 0 {
                return Err("blocklength must be positive".into());
            }
            Ok(NRange(vec![n]))
        }
        [lo, hi, step] => {
            let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
            if lo == 0 || step == 0 || hi < lo {
                return Err("need 0 < LO <= HI and STEP > 0".into());
            }
            Ok(NRange((lo..=hi).step_by(step as usize).collect()))
        }
        _ => Err("expected N or LO:HI:STEP".into()),
    }
}

#[derive(Clone)]
struct FRange(Vec<f64>);

fn parse_f_range(s: &str) -> Result<FRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad number {t:?}"));
    match parts.as_slice() {
        [one] => Ok(FRange(vec![num(one)?])),
        [lo, hi, step] => {
            let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
            if !(step > 0.0) || hi < lo {
                return Err("need LO <= HI and STEP > 0".into());
            }
            // Integer step count avoids accumulation drift on decimal grids.
            let count = ((hi - lo) / step + 0.5).floor() as usize;
            Ok(FRange((0..=count).map(|i| lo + i as f64 * step).collect()))
        }
        _ => Err("expected V or LO:HI:STEP".into()),
    }
}

// ---------------------------------------------------------------------------
// Failure plumbing and canonical number formatting.
// ---------------------------------------------------------------------------

enum Failure {
    Domain(Error),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Domain(e) if !e.is_precondition() => 3,
            _ => 2,
        }
    }

    fn to_json(&self) -> String {
        let (code, msg) = match self {
            Failure::Domain(e) => (e.code(), e.to_string()),
            Failure::Io(m) => ("io", m.clone()),
        };
        let mut obj = serde_json::Map::new();
        obj.insert("error".into(), serde_json::Value::String(code.into()));
        obj.insert("message".into(), serde_json::Value::String(msg));
        serde_json::Value::Object(obj).to_string()
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::Domain(e)
    }
}

/// Canonical textual form of every emitted number: 12 significant digits in
/// scientific notation.
fn fmt_f(x: f64) -> String {
    format!("{x:.11e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

/// The float that the canonical text denotes; JSON output carries these so
/// both formats agree digit-for-digit.
fn canon(x: f64) -> f64 {
    fmt_f(x).parse().expect("canonical form round-trips")
}

fn jnum(x: f64) -> serde_json::Value {
    serde_json::Value::from(canon(x))
}

fn jnum_opt(x: Option<f64>) -> serde_json::Value {
    x.map(jnum).unwrap_or(serde_json::Value::Null)
}

fn load_channel(arg: &str) -> Result<Channel, Failure> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| Failure::Io(format!("cannot read {arg}: {e}")))?
    };
    Ok(Channel::from_json(&text)?)
}

fn write_output(out: &Option<PathBuf>, body: &str) -> Result<(), Failure> {
    match out {
        None => {
            print!("{body}");
            Ok(())
        }
        Some(path) => fs::write(path, body)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
    }
}

// ---------------------------------------------------------------------------
// Key/value reports (capacity, tilt, delta).
// ---------------------------------------------------------------------------

/// Ordered key/value report; CSV emits `key,value` lines, JSON one object.
struct Report(Vec<(&'static str, serde_json::Value)>);

impl Report {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut obj = serde_json::Map::new();
                for (k, v) in &self.0 {
                    obj.insert((*k).into(), v.clone());
                }
                let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(obj))
                    .expect("report serializes");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut s = String::from("key,value\n");
                for (k, v) in &self.0 {
                    let val = match v {
                        serde_json::Value::String(t) => t.clone(),
                        serde_json::Value::Null => String::new(),
                        other => other.to_string(),
                    };
                    s.push_str(&format!("{k},{val}\n"));
                }
                s
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Curve rows.
// ---------------------------------------------------------------------------

/// One table row; `rate_*` and `t0` are blank when `status` is not "ok".
struct Row {
    n: u64,
    eps: Option<f64>,
    bound: String,
    rate_bits: Option<f64>,
    rate_nats: Option<f64>,
    status: String,
    t0: Option<f64>,
    diagnostics: Option<serde_json::Value>,
}

impl Row {
    fn ok(bound: String, rb: RateBound, extra: Option<(&'static str, f64)>) -> Row {
        let mut diag = serde_json::to_value(&rb.meta).expect("meta serializes");
        if let (Some((k, v)), Some(map)) = (extra, diag.as_object_mut()) {
            map.insert(k.into(), jnum(v));
        }
        Row {
            n: rb.n,
            eps: Some(rb.eps),
            bound,
            rate_bits: Some(rb.rate_bits()),
            rate_nats: Some(rb.rate_nats),
            status: "ok".into(),
            t0: rb.meta.t0,
            diagnostics: Some(diag),
        }
    }

    fn failed(bound: String, n: u64, eps: Option<f64>, e: &Error) -> Row {
        Row {
            n,
            eps,
            bound,
            rate_bits: None,
            rate_nats: None,
            status: e.code().into(),
            t0: None,
            diagnostics: None,
        }
    }
}

fn rows_to_csv(rows: &[Row]) -> String {
    let mut s = String::from(CURVE_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n,
            fmt_opt(r.eps),
            r.bound,
            fmt_opt(r.rate_bits),
            fmt_opt(r.rate_nats),
            r.status,
            fmt_opt(r.t0),
        ));
    }
    s
}

fn rows_to_json(rows: &[Row]) -> String {
    let arr: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            let mut obj = serde_json::Map::new();
            obj.insert("n".into(), serde_json::Value::from(r.n));
            obj.insert("eps".into(), jnum_opt(r.eps));
            obj.insert("bound".into(), serde_json::Value::String(r.bound.clone()));
            obj.insert("rate_bits".into(), jnum_opt(r.rate_bits));
            obj.insert("rate_nats".into(), jnum_opt(r.rate_nats));
            obj.insert("status".into(), serde_json::Value::String(r.status.clone()));
            obj.insert("t0".into(), jnum_opt(r.t0));
            if let Some(d) = &r.diagnostics {
                obj.insert("diagnostics".into(), d.clone());
            }
            serde_json::Value::Object(obj)
        })
        .collect();
    let mut s =
        serde_json::to_string_pretty(&serde_json::Value::Array(arr)).expect("rows serialize");
    s.push('\n');
    s
}

/// A requested curve entry: a library bound or the t* pseudo-bound, which
/// emits the second-order objective at the optimizing input with its `t(0)`.
#[derive(Clone, Copy)]
enum CurveBound {
    Named(BoundName),
    TStar,
}

impl CurveBound {
    fn label(&self) -> String {
        match self {
            CurveBound::Named(b) => b.as_str().to_string(),
            CurveBound::TStar => "tstar".into(),
        }
    }
}

fn resolve_bounds(names: &[String], model: ErrorModel) -> Result<Vec<CurveBound>, Error> {
    let mut out = Vec::new();
    for raw in names {
        let key = raw.trim().to_ascii_lowercase().replace('-', "_");
        let b = match key.as_str() {
            "tstar" => CurveBound::TStar,
            "exact_converse" => CurveBound::Named(match model {
                ErrorModel::Avg => BoundName::ExactConverseAvg,
                ErrorModel::Max => BoundName::ExactConverseMax,
            }),
            _ => CurveBound::Named(BoundName::parse(&key)?),
        };
        out.push(b);
    }
    Ok(out)
}

fn resolve_c(ch: &Channel, c_frac: Option<f64>, cfg: &SolverConfig) -> Result<Option<f64>, Error> {
    match c_frac {
        None => Ok(None),
        Some(f) => {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::OutOfRange(format!("c-frac = {f} outside (0, 1)")));
            }
            let (_t0, info) = max_info_binary(ch, cfg)?;
            Ok(Some(f * info))
        }
    }
}

fn eval_point(
    ch: &Channel,
    b: CurveBound,
    n: u64,
    eps: &Result<f64, Error>,
    c: Option<f64>,
    cfg: &SolverConfig,
) -> (Row, Option<Error>) {
    let label = b.label();
    let eps = match eps {
        Ok(v) => *v,
        Err(e) => return (Row::failed(label, n, None, e), Some(e.clone())),
    };
    let res: Result<Row, Error> = match b {
        CurveBound::Named(name) => {
            eval_bound(ch, name, n, eps, c, cfg).map(|rb| Row::ok(label.clone(), rb, None))
        }
        // The pseudo-bound reports the second-order objective at t* and
        // carries the capacity-achieving weight for trajectory plots.
        CurveBound::TStar => optimize_t_star(ch, n, eps, c, cfg).and_then(|opt| {
            let t_cap0 = ch.capacity_achieving_input()?.probs()[0];
            Ok(Row {
                n,
                eps: Some(eps),
                bound: label.clone(),
                rate_bits: Some(opt.objective / LN_2),
                rate_nats: Some(opt.objective),
                status: "ok".into(),
                t0: Some(opt.t.probs()[0]),
                diagnostics: Some(serde_json::json!({
                    "t_cap0": jnum(t_cap0),
                    "info": jnum(opt.info),
                    "delta": jnum_opt(opt.delta),
                    "c": jnum(opt.c),
                })),
            })
        }),
    };
    match res {
        Ok(row) => (row, None),
        Err(e) => (Row::failed(label, n, Some(eps), &e), Some(e)),
    }
}

fn run_grid(
    ch: &Channel,
    bounds: &[CurveBound],
    ns: &[u64],
    spec: &EpsilonSpec,
    c: Option<f64>,
    cfg: &SolverConfig,
    output: &OutputArgs,
) -> Result<(), Failure> {
    // One eps per blocklength: the schedules depend on n only, and the
    // divergence-path fixed-delta schedule is costly enough to cache.
    let eps_by_n: Vec<(u64, Result<f64, Error>)> = ns
        .par_iter()
        .map(|&n| (n, spec.eps_at(ch, n, cfg)))
        .collect();
    let jobs: Vec<(u64, &Result<f64, Error>, CurveBound)> = eps_by_n
        .iter()
        .flat_map(|(n, eps)| bounds.iter().map(move |&b| (*n, eps, b)))
        .collect();
    let evaluated: Vec<(Row, Option<Error>)> = jobs
        .par_iter()
        .map(|(n, eps, b)| eval_point(ch, *b, *n, eps, c, cfg))
        .collect();
    let (rows, errors): (Vec<Row>, Vec<Option<Error>>) = evaluated.into_iter().unzip();
    let body = match output.format {
        Format::Csv => rows_to_csv(&rows),
        Format::Json => rows_to_json(&rows),
    };
    write_output(&output.out, &body)?;
    if !rows.is_empty() && rows.iter().all(|r| r.status != "ok") {
        let first = errors.into_iter().flatten().next().expect("all rows failed");
        return Err(Failure::Domain(first));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Subcommands.
// ---------------------------------------------------------------------------

fn run_capacity(args: CapacityArgs) -> Result<(), Failure> {
    let ch = load_channel(&args.channel.channel)?;
    let cfg = args.solver.to_config()?;
    let (t_anchor, cap) = match ch.capacity_achieving_input() {
        Ok(t) => (t, ch.capacity()?),
        // Generic binary-input channels: maximize the information curve.
        Err(_) => {
            let (t0, info) = max_info_binary(&ch, &cfg)?;
            (InputDist::binary(t0)?, info)
        }
    };
    let fam = if ch.is_bimsc() {
        TiltFamily::for_channel(&ch, None, cfg.gh_nodes)?
    } else {
        TiltFamily::for_channel(&ch, Some(&t_anchor), cfg.gh_nodes)?
    };
    let sigma = fam.eval(0.0).sigma2.sqrt();
    let mut fields: Vec<(&'static str, serde_json::Value)> = vec![
        ("kind", serde_json::Value::String(ch.kind_name().into())),
        (
            "family",
            serde_json::Value::String(
                if ch.is_bimsc() { "entropy" } else { "divergence" }.into(),
            ),
        ),
        ("capacity_nats", jnum(cap)),
        ("capacity_bits", jnum(cap / LN_2)),
        ("t_cap0", jnum(t_anchor.probs()[0])),
        ("sigma", jnum(sigma)),
        ("delta_star", jnum(fam.delta_star())),
    ];
    if let Ok(z) = zeta(&ch) {
        fields.push(("zeta", jnum(z)));
    }
    if let Ok(z) = zeta_closed_form(&ch) {
        fields.push(("zeta_closed_form", jnum(z)));
    }
    write_output(&args.output.out, &Report(fields).render(args.output.format))
}

fn run_tilt(args: TiltArgs) -> Result<(), Failure> {
    let ch = load_channel(&args.channel.channel)?;
    let cfg = args.solver.to_config()?;
    let t = args.t0.map(InputDist::binary).transpose()?;
    let fam = TiltFamily::for_channel(&ch, t.as_ref(), cfg.gh_nodes)?;
    let m = fam.eval(args.lambda);
    let fields: Vec<(&'static str, serde_json::Value)> = vec![
        ("kind", serde_json::Value::String(ch.kind_name().into())),
        (
            "family",
            serde_json::Value::String(if fam.is_dimc() { "divergence" } else { "entropy" }.into()),
        ),
        ("lambda", jnum(m.lambda)),
        ("delta", jnum(m.delta)),
        ("sigma2", jnum(m.sigma2)),
        ("m3", jnum(m.m3)),
        ("m3abs", jnum(m.m3abs)),
        ("rate", jnum(m.rate)),
        ("anchor", jnum(fam.anchor())),
        ("first_order_rate", jnum(fam.first_order_rate())),
    ];
    write_output(&args.output.out, &Report(fields).render(args.output.format))
}

fn run_delta(args: DeltaArgs) -> Result<(), Failure> {
    let ch = load_channel(&args.channel.channel)?;
    let cfg = args.solver.to_config()?;
    let t = args.t0.map(InputDist::binary).transpose()?;
    let eps = args.eps.to_spec().eps_at(&ch, args.n, &cfg)?;
    let sol = solve_delta_n(&ch, t.as_ref(), args.n, eps, &cfg)?;
    let fields: Vec<(&'static str, serde_json::Value)> = vec![
        ("n", serde_json::Value::from(args.n)),
        ("eps", jnum(eps)),
        ("delta", jnum(sol.value)),
        ("lambda", jnum(sol.lambda)),
        ("residual", jnum(sol.residual)),
        ("iterations", serde_json::Value::from(sol.iterations as u64)),
        ("status", serde_json::Value::String("converged".into())),
    ];
    write_output(&args.output.out, &Report(fields).render(args.output.format))
}

fn run_bound(args: BoundArgs) -> Result<(), Failure> {
    let ch = load_channel(&args.channel.channel)?;
    let cfg = args.solver.to_config()?;
    let bounds = resolve_bounds(&args.bounds, args.error_model.into())?;
    let c = resolve_c(&ch, args.c_frac, &cfg)?;
    let spec = args.eps.to_spec();
    run_grid(&ch, &bounds, &[args.n], &spec, c, &cfg, &args.output)
}

fn run_curve(args: CurveArgs) -> Result<(), Failure> {
    let ch = load_channel(&args.channel.channel)?;
    let cfg = args.solver.to_config()?;
    let bounds = resolve_bounds(&args.bounds, args.error_model.into())?;
    let c = resolve_c(&ch, args.c_frac, &cfg)?;
    let spec = args.eps.to_spec();
    run_grid(&ch, &bounds, &args.n.0, &spec, c, &cfg, &args.output)
}

// ---------------------------------------------------------------------------
// Z-channel t* sweep.
// ---------------------------------------------------------------------------

struct TstarRow {
    p: f64,
    t_star0: Option<f64>,
    t_cap0: Option<f64>,
    obj: [Option<f64>; 3],
    status: String,
}

/// Second-order objective `I(t) - delta_{t,n}(eps)` at a fixed input.
fn so_objective_at(
    ch: &Channel,
    t: &InputDist,
    n: u64,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<f64, Error> {
    let fam = TiltFamily::for_channel(ch, Some(t), cfg.gh_nodes)?;
    let sol = solve_delta_n(ch, Some(t), n, eps, cfg)?;
    Ok(fam.first_order_rate() - sol.value)
}

fn tstar_row(p: f64, n: u64, eps: f64, cfg: &SolverConfig) -> TstarRow {
    let attempt = || -> Result<TstarRow, Error> {
        let ch = Channel::z(p)?;
        let opt = optimize_t_star(&ch, n, eps, None, cfg)?;
        let t_cap = ch.capacity_achieving_input()?;
        let obj_cap = so_objective_at(&ch, &t_cap, n, eps, cfg)?;
        let obj_uni = so_objective_at(&ch, &InputDist::binary(0.5)?, n, eps, cfg)?;
        Ok(TstarRow {
            p,
            t_star0: Some(opt.t.probs()[0]),
            t_cap0: Some(t_cap.probs()[0]),
            obj: [Some(opt.objective), Some(obj_cap), Some(obj_uni)],
            status: "ok".into(),
        })
    };
    attempt().unwrap_or_else(|e| TstarRow {
        p,
        t_star0: None,
        t_cap0: None,
        obj: [None; 3],
        status: e.code().into(),
    })
}

fn run_tstar(args: TstarArgs) -> Result<(), Failure> {
    let cfg = args.solver.to_config()?;
    let rows: Vec<TstarRow> = args
        .p
        .0
        .par_iter()
        .map(|&p| tstar_row(p, args.n, args.eps, &cfg))
        .collect();
    let ratio = |row: &TstarRow, k: usize| -> Option<f64> {
        match (row.obj[k], row.obj[0]) {
            (Some(o), Some(best)) if best != 0.0 => Some(o / best),
            _ => None,
        }
    };
    let body = match args.output.format {
        Format::Csv => {
            let mut s = String::from(TSTAR_HEADER);
            s.push('\n');
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    fmt_f(r.p),
                    args.n,
                    fmt_f(args.eps),
                    fmt_opt(r.t_star0),
                    fmt_opt(r.t_cap0),
                    fmt_opt(r.obj[0]),
                    fmt_opt(r.obj[1]),
                    fmt_opt(r.obj[2]),
                    fmt_opt(ratio(r, 1)),
                    fmt_opt(ratio(r, 2)),
                    r.status,
                ));
            }
            s
        }
        Format::Json => {
            let arr: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "p": jnum(r.p),
                        "n": args.n,
                        "eps": jnum(args.eps),
                        "t_star0": jnum_opt(r.t_star0),
                        "t_cap0": jnum_opt(r.t_cap0),
                        "obj_t_star": jnum_opt(r.obj[0]),
                        "obj_capacity": jnum_opt(r.obj[1]),
                        "obj_uniform": jnum_opt(r.obj[2]),
                        "ratio_capacity": jnum_opt(ratio(r, 1)),
                        "ratio_uniform": jnum_opt(ratio(r, 2)),
                        "status": r.status,
                    })
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&serde_json::Value::Array(arr))
                .expect("rows serialize");
            s.push('\n');
            s
        }
    };
    write_output(&args.output.out, &body)?;
    if !rows.is_empty() && rows.iter().all(|r| r.status != "ok") {
        return Err(Failure::Domain(Error::EmptyFeasibleRegion(
            "every crossover probability in the sweep failed".into(),
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Verify: self-checks plus optional table replay.
// ---------------------------------------------------------------------------

fn run_verify(args: VerifyArgs) -> Result<(), Failure> {
    let cfg = args.solver.to_config()?;
    let mut failures = 0u32;
    let mut check = |name: &str, res: Result<(), String>| match res {
        Ok(()) => println!("ok {name}"),
        Err(msg) => {
            failures += 1;
            println!("FAIL {name}: {msg}");
        }
    };

    check(
        "gaussian-roundtrip",
        (|| {
            let x = q_inv(1e-6).map_err(|e| e.to_string())?;
            let back = q_func(x);
            if ((back - 1e-6) / 1e-6).abs() <= 1e-12 {
                Ok(())
            } else {
                Err(format!("q(q_inv(1e-6)) = {back}"))
            }
        })(),
    );

    check(
        "half-eps-shift-vanishes",
        (|| {
            let channels = [
                Channel::bsc(0.11),
                Channel::bec(0.5),
                Channel::biagc_from_snr_db(-3.52),
                Channel::z(0.5),
            ];
            let mut worst: f64 = 0.0;
            for ch in channels {
                let ch = ch.map_err(|e| e.to_string())?;
                let d = solve_delta_n(&ch, None, 500, 0.5, &cfg)
                    .map_err(|e| e.to_string())?
                    .value;
                worst = worst.max(d.abs());
            }
            if worst <= 1e-10 {
                Ok(())
            } else {
                Err(format!("max |delta_n(1/2)| = {worst}"))
            }
        })(),
    );

    check(
        "entropy-tail-sandwich",
        (|| {
            let ch = Channel::bsc(0.11).map_err(|e| e.to_string())?;
            let (n, delta) = (10u64, 0.5);
            let lam = fblbounds::solve::invert_delta(&ch, None, delta, &cfg)
                .map_err(|e| e.to_string())?
                .value;
            let m = bimsc_tilt(&ch, lam).map_err(|e| e.to_string())?;
            let xi = xi_pair(&m, n, C_BE_DEFAULT).map_err(|e| e.to_string())?;
            let tail = fblbounds::oracle::exact_tail_bimsc(&ch, n, delta)
                .map_err(|e| e.to_string())?
                .prob;
            let e = (-(n as f64) * m.rate).exp();
            if xi.xi_lower * e <= tail && tail <= xi.xi_upper * e {
                Ok(())
            } else {
                Err(format!(
                    "tail {tail} outside [{}, {}]",
                    xi.xi_lower * e,
                    xi.xi_upper * e
                ))
            }
        })(),
    );

    check(
        "erasure-nep-identity",
        (|| {
            let ch = Channel::bec(0.5).map_err(|e| e.to_string())?;
            let so = eval_bound(&ch, BoundName::So, 500, 1e-6, None, &cfg)
                .map_err(|e| e.to_string())?;
            let nep = eval_bound(&ch, BoundName::Nep, 500, 1e-6, None, &cfg)
                .map_err(|e| e.to_string())?;
            let gap = (so.rate_nats - nep.rate_nats).abs();
            if gap <= 1e-10 {
                Ok(())
            } else {
                Err(format!("|SO - NEP| = {gap}"))
            }
        })(),
    );

    check(
        "tilt-derivative-identity",
        (|| {
            let ch = Channel::bsc(0.11).map_err(|e| e.to_string())?;
            let fam =
                TiltFamily::for_channel(&ch, None, cfg.gh_nodes).map_err(|e| e.to_string())?;
            let (lam, h) = (0.3f64, 1e-4f64);
            let fd = (fam.eval(lam + h).delta - fam.eval(lam - h).delta) / (2.0 * h);
            let sigma2 = fam.eval(lam).sigma2;
            if ((fd - sigma2) / sigma2).abs() <= 1e-5 {
                Ok(())
            } else {
                Err(format!("d delta/d lambda = {fd}, sigma2 = {sigma2}"))
            }
        })(),
    );

    check(
        "converse-ordering",
        (|| {
            let ch = Channel::bsc(0.11).map_err(|e| e.to_string())?;
            let so = eval_bound(&ch, BoundName::So, 1000, 1e-3, None, &cfg)
                .map_err(|e| e.to_string())?
                .rate_nats;
            let cx = eval_bound(&ch, BoundName::ExactConverseMax, 1000, 1e-3, None, &cfg)
                .map_err(|e| e.to_string())?
                .rate_nats;
            let ca = eval_bound(&ch, BoundName::ExactConverseAvg, 1000, 1e-3, None, &cfg)
                .map_err(|e| e.to_string())?
                .rate_nats;
            if so <= cx && cx <= ca {
                Ok(())
            } else {
                Err(format!("expected SO {so} <= max {cx} <= avg {ca}"))
            }
        })(),
    );

    if let Some(path) = &args.rows {
        let channel = args.channel.as_ref().expect("clap enforces --channel");
        let ch = load_channel(channel)?;
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
        check("replay", replay_rows(&ch, &text, &cfg));
    }

    if failures == 0 {
        Ok(())
    } else {
        Err(Failure::Domain(Error::NoConvergence(format!(
            "{failures} self-check(s) failed"
        ))))
    }
}

/// Revalidates an emitted curve table: the bits/nats invariant on every
/// successful row, and a full recomputation of each row's rate.
fn replay_rows(ch: &Channel, text: &str, cfg: &SolverConfig) -> Result<(), String> {
    struct Loaded {
        n: u64,
        eps: f64,
        bound: String,
        rate_bits: f64,
        rate_nats: f64,
    }
    let mut loaded = Vec::new();
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        let rows: Vec<serde_json::Value> =
            serde_json::from_str(trimmed).map_err(|e| format!("bad JSON table: {e}"))?;
        for r in rows {
            if r["status"].as_str() != Some("ok") {
                continue;
            }
            loaded.push(Loaded {
                n: r["n"].as_u64().ok_or("row without n")?,
                eps: r["eps"].as_f64().ok_or("row without eps")?,
                bound: r["bound"].as_str().ok_or("row without bound")?.to_string(),
                rate_bits: r["rate_bits"].as_f64().ok_or("row without rate_bits")?,
                rate_nats: r["rate_nats"].as_f64().ok_or("row without rate_nats")?,
            });
        }
    } else {
        let mut lines = text.lines();
        let header = lines.next().ok_or("empty table")?;
        if header != CURVE_HEADER {
            return Err(format!("unexpected header {header:?}"));
        }
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 7 {
                return Err(format!("row with {} columns: {line:?}", cols.len()));
            }
            if cols[5] != "ok" {
                continue;
            }
            let f = |s: &str| s.parse::<f64>().map_err(|_| format!("bad number {s:?}"));
            loaded.push(Loaded {
                n: cols[0].parse().map_err(|_| format!("bad n {:?}", cols[0]))?,
                eps: f(cols[1])?,
                bound: cols[2].to_string(),
                rate_bits: f(cols[3])?,
                rate_nats: f(cols[4])?,
            });
        }
    }
    if loaded.is_empty() {
        return Err("no successful rows to replay".into());
    }
    for row in &loaded {
        // Serialized values carry 12 significant digits, hence the 1e-11.
        let bits = row.rate_nats / LN_2;
        if (row.rate_bits - bits).abs() > 1e-11 * bits.abs().max(1.0) {
            return Err(format!(
                "bits/nats mismatch at n = {}, {}: {} vs {}",
                row.n, row.bound, row.rate_bits, bits
            ));
        }
        let recomputed = if row.bound == "tstar" {
            optimize_t_star(ch, row.n, row.eps, None, cfg)
                .map(|o| o.objective)
                .map_err(|e| e.to_string())?
        } else {
            let name = BoundName::parse(&row.bound).map_err(|e| e.to_string())?;
            eval_bound(ch, name, row.n, row.eps, None, cfg)
                .map(|rb| rb.rate_nats)
                .map_err(|e| e.to_string())?
        };
        if (recomputed - row.rate_nats).abs() > 1e-9 * recomputed.abs().max(1.0) {
            return Err(format!(
                "rate mismatch at n = {}, {}: stored {}, recomputed {}",
                row.n, row.bound, row.rate_nats, recomputed
            ));
        }
    }
    println!("  replayed {} rows", loaded.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Capacity(a) => run_capacity(a),
        Command::Tilt(a) => run_tilt(a),
        Command::Delta(a) => run_delta(a),
        Command::Bound(a) => run_bound(a),
        Command::Curve(a) => run_curve(a),
        Command::Tstar(a) => run_tstar(a),
        Command::Verify(a) => run_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit_code())
        }
    }
}
