//! Command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning                                        |
//! |------|------------------------------------------------|
//! | 0    | success                                        |
//! | 1    | parse error or invalid input                   |
//! | 2    | an evaluation limit was hit (or inconclusive)  |
//! | 3    | unsupported symbol                             |
//! | 4    | a verification failed                          |
//!
//! With `--format json` every record is one JSON object per line and carries
//! the run configuration under `config`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::ops::RangeInclusive;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use crate::bases::g::f0_iterate;
use crate::bases::{self, audit_g, audit_h, compile_to_h, compile_to_unary, lift_binary, lift_unary, BasisError, LiftedBasis, UnaryBasis};
use crate::eval::{Env, EvalError, EvalLimits, Evaluator, Grid};
use crate::growth::refute::{preset, Expectation, RefuteError};
use crate::growth::sample::TermSampler;
use crate::growth::{check_certificate, refute_membership, CertError, Lemma, Outcome, RefuteConfig};
use crate::lower::{lower, verify_lowering, LowerError};
use crate::report::{Status, VerificationReport};
use crate::syntax::{parse, parse_file, parse_with_names, print_with, ParseError};
use crate::term::{Signature, Term};

const LARGE_TERM: u64 = 100_000;

#[derive(Debug, Parser)]
#[command(name = "basisforge", version, about = "Terms over arithmetic substitution bases")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    /// bit-size cap for intermediate values
    #[arg(long, env = "BASISFORGE_MAX_BITS", global = true)]
    pub max_bits: Option<u64>,
    /// node-evaluation budget
    #[arg(long, global = true)]
    pub max_steps: Option<u64>,
    /// worker threads (output does not depend on this)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a term
    Eval(EvalArgs),
    /// Lower a term to {add, mod, exp2}
    Lower(LowerArgs),
    /// Compute and check a growth certificate
    Certify(CertifyArgs),
    /// Search a closure for a target by bounded enumeration
    Refute(RefuteArgs),
    /// Unary and single-operation bases
    #[command(subcommand)]
    Bases(BasesCommand),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub expr: Option<String>,
    #[arg(short = 'x')]
    pub x: Option<BigUint>,
    #[arg(short = 'y')]
    pub y: Option<BigUint>,
    #[arg(short = 'z')]
    pub z: Option<BigUint>,
    /// NAME=VALUE, repeatable
    #[arg(long = "var")]
    pub vars: Vec<String>,
    /// evaluate every term in a file, one per line
    #[arg(long, conflicts_with = "expr")]
    pub file: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct LowerArgs {
    pub expr: String,
    /// compare with the input on LO..HI in every variable
    #[arg(long, value_parser = parse_range)]
    pub verify: Option<RangeInclusive<u64>>,
    /// print the rewrite trace as JSON lines
    #[arg(long)]
    pub trace_json: bool,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// a unary term; omit with --sample
    pub expr: Option<String>,
    #[arg(long, value_parser = parse_lemma)]
    pub lemma: Lemma,
    #[arg(long, value_parser = parse_range, default_value = "0..1000")]
    pub range: RangeInclusive<u64>,
    /// check this many random terms over the lemma's sub-basis instead
    #[arg(long, conflicts_with = "expr")]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 12)]
    pub sample_size: usize,
    #[arg(long, default_value_t = 10)]
    pub sample_consts: u64,
}

#[derive(Debug, Args)]
pub struct RefuteArgs {
    pub target: Option<String>,
    /// comma-separated symbol names, e.g. mod,exp2
    #[arg(long)]
    pub sig: Option<String>,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub consts: Option<u64>,
    /// candidates examined before the search stops
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub max_classes: Option<usize>,
    /// a known witness whose subterms join the enumeration
    #[arg(long)]
    pub plant: Vec<String>,
    #[arg(long, conflicts_with_all = ["target", "sig"])]
    pub preset: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum BasesCommand {
    /// Lift a function of x (or of x and y) to pairs
    Lift { expr: String },
    /// Compile a function of x into the lifted unary basis
    CompileUnary {
        expr: String,
        #[arg(long, default_value = "add,mod,exp2")]
        basis: String,
        #[arg(long, value_parser = parse_range, default_value = "0..60")]
        check: RangeInclusive<u64>,
    },
    /// Compile into the single operation h, or audit h's guards
    H {
        expr: Option<String>,
        /// spell constants with h as well
        #[arg(long)]
        pure: bool,
        #[arg(long, value_parser = parse_range, default_value = "0..6")]
        verify: RangeInclusive<u64>,
        /// check guard disjointness up to this bound
        #[arg(long)]
        audit: Option<u64>,
    },
    /// Check g against its unary basis, and audit its cases
    G {
        /// number of basis functions taken from the standard list
        #[arg(short, long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..=5))]
        k: u64,
        #[arg(long, value_parser = parse_range, default_value = "0..200")]
        check: RangeInclusive<u64>,
        #[arg(long)]
        audit: Option<u64>,
    },
    /// Check 2^(x mod 2) = 2^x / 2^(x/2 + x/2)
    Mod2Identity {
        #[arg(long, value_parser = parse_range, default_value = "0..64")]
        range: RangeInclusive<u64>,
    },
}

/// Parses `LO..HI` or `LO..=HI`, both inclusive.
pub fn parse_range(s: &str) -> Result<RangeInclusive<u64>, String> {
    let (lo, hi) = s.split_once("..").ok_or_else(|| format!("expected LO..HI, got `{s}`"))?;
    let hi = hi.strip_prefix('=').unwrap_or(hi);
    let lo: u64 = lo.trim().parse().map_err(|e| format!("{lo}: {e}"))?;
    let hi: u64 = hi.trim().parse().map_err(|e| format!("{hi}: {e}"))?;
    if lo > hi {
        return Err(format!("empty range {s}"));
    }
    Ok(lo..=hi)
}

fn parse_lemma(s: &str) -> Result<Lemma, String> {
    Lemma::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = Lemma::ALL.iter().map(|l| l.name()).collect();
        format!("unknown lemma `{s}`; expected one of {}", names.join(", "))
    })
}

/// Echoed into every JSON record.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub max_bits: u64,
    pub max_steps: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_const: Option<u64>,
    pub format: Format,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Unsupported(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Input(_) | CliError::Io(_) => 1,
            CliError::Eval(e) if e.is_inconclusive() => 2,
            CliError::Eval(_) => 1,
            CliError::Unsupported(_) => 3,
        }
    }
}

impl From<LowerError> for CliError {
    fn from(e: LowerError) -> Self {
        match e {
            LowerError::UnsupportedSymbol(_) => CliError::Unsupported(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<BasisError> for CliError {
    fn from(e: BasisError) -> Self {
        match e {
            BasisError::UnsupportedSymbol(_) => CliError::Unsupported(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<CertError> for CliError {
    fn from(e: CertError) -> Self {
        match e {
            CertError::SignatureViolation { .. } => CliError::Unsupported(e.to_string()),
            CertError::NonUnary(_) => CliError::Input(e.to_string()),
        }
    }
}

impl From<RefuteError> for CliError {
    fn from(e: RefuteError) -> Self {
        match e {
            RefuteError::Unsupported(_) => CliError::Unsupported(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

struct Ctx<'o> {
    config: RunConfig,
    limits: EvalLimits,
    out: &'o mut (dyn Write + Send),
}

#[derive(Serialize)]
struct Record<'a, T: Serialize> {
    kind: &'a str,
    #[serde(flatten)]
    body: T,
    config: &'a RunConfig,
}

impl Ctx<'_> {
    fn json(&self) -> bool {
        self.config.format == Format::Json
    }

    fn emit<T: Serialize>(&mut self, kind: &str, body: T, text: impl FnOnce() -> String) -> Result<(), CliError> {
        if self.json() {
            let rec = Record {
                kind,
                body,
                config: &self.config,
            };
            writeln!(self.out, "{}", serde_json::to_string(&rec).expect("plain data"))?;
        } else {
            writeln!(self.out, "{}", text())?;
        }
        Ok(())
    }

    fn report(&mut self, kind: &str, r: &VerificationReport) -> Result<i32, CliError> {
        self.emit(kind, r, || r.to_string())?;
        Ok(status_code(r.status))
    }
}

fn status_code(s: Status) -> i32 {
    match s {
        Status::Pass => 0,
        Status::Fail => 4,
        Status::Inconclusive => 2,
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let format = cli.global.format;
    let result = match cli.global.workers {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli, out)),
            Err(e) => Err(CliError::Input(e.to_string())),
        },
        None => dispatch(cli, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let code = e.exit_code();
            if format == Format::Json {
                let rec = serde_json::json!({ "kind": "error", "exit_code": code, "message": e.to_string() });
                let _ = writeln!(out, "{rec}");
            }
            let _ = writeln!(err, "error: {e}");
            code
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Eval(_) => "eval",
        Command::Lower(_) => "lower",
        Command::Certify(_) => "certify",
        Command::Refute(_) => "refute",
        Command::Bases(BasesCommand::Lift { .. }) => "bases lift",
        Command::Bases(BasesCommand::CompileUnary { .. }) => "bases compile-unary",
        Command::Bases(BasesCommand::H { .. }) => "bases h",
        Command::Bases(BasesCommand::G { .. }) => "bases g",
        Command::Bases(BasesCommand::Mod2Identity { .. }) => "bases mod2-identity",
    }
}

fn range_text(r: &RangeInclusive<u64>) -> String {
    format!("{}..{}", r.start(), r.end())
}

fn dispatch(cli: Cli, out: &mut (dyn Write + Send)) -> Result<i32, CliError> {
    let defaults = EvalLimits::default();
    let limits = EvalLimits {
        max_bits: cli.global.max_bits.unwrap_or(defaults.max_bits),
        max_steps: cli.global.max_steps.unwrap_or(defaults.max_steps),
    };
    let (grid, max_size, max_const) = match &cli.command {
        Command::Lower(a) => (a.verify.as_ref().map(range_text), None, None),
        Command::Certify(a) => (Some(range_text(&a.range)), a.sample.map(|_| a.sample_size), a.sample.map(|_| a.sample_consts)),
        Command::Refute(a) => (None, a.size, a.consts),
        Command::Bases(BasesCommand::CompileUnary { check, .. }) => (Some(range_text(check)), None, None),
        Command::Bases(BasesCommand::H { verify, .. }) => (Some(range_text(verify)), None, None),
        Command::Bases(BasesCommand::G { check, .. }) => (Some(range_text(check)), None, None),
        Command::Bases(BasesCommand::Mod2Identity { range }) => (Some(range_text(range)), None, None),
        _ => (None, None, None),
    };
    let config = RunConfig {
        command: command_name(&cli.command).to_string(),
        max_bits: limits.max_bits,
        max_steps: limits.max_steps,
        grid,
        max_size,
        max_const,
        format: cli.global.format,
        seed: cli.global.seed,
    };
    let mut ctx = Ctx { config, limits, out };
    match cli.command {
        Command::Eval(a) => cmd_eval(&mut ctx, a),
        Command::Lower(a) => cmd_lower(&mut ctx, a),
        Command::Certify(a) => cmd_certify(&mut ctx, a),
        Command::Refute(a) => cmd_refute(&mut ctx, a),
        Command::Bases(b) => cmd_bases(&mut ctx, b),
    }
}

fn cmd_eval(ctx: &mut Ctx<'_>, a: EvalArgs) -> Result<i32, CliError> {
    let basis = UnaryBasis::standard();
    let reg = basis.registry();
    let parsed = match (&a.expr, &a.file) {
        (Some(e), None) => vec![parse_with_names(e, Some(reg))?],
        (None, Some(path)) => parse_file(&std::fs::read_to_string(path)?, Some(reg))?,
        _ => return Err(CliError::Input("give an expression or --file".into())),
    };
    let mut bindings: BTreeMap<String, BigUint> = BTreeMap::new();
    for (name, v) in [("x", &a.x), ("y", &a.y), ("z", &a.z)] {
        if let Some(v) = v {
            bindings.insert(name.to_string(), v.clone());
        }
    }
    for kv in &a.vars {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Input(format!("expected NAME=VALUE, got `{kv}`")))?;
        let v: BigUint = v.trim().parse().map_err(|_| CliError::Input(format!("`{v}` is not a natural number")))?;
        bindings.insert(k.trim().to_string(), v);
    }
    let ev = Evaluator::with_registry(ctx.limits, reg);
    for p in parsed {
        let values = p
            .vars
            .iter()
            .map(|name| bindings.get(name).cloned().ok_or_else(|| CliError::Input(format!("no value for variable `{name}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        let value = ev.eval(&p.term, &Env::new(values))?;
        #[derive(Serialize)]
        struct Body {
            expr: String,
            bindings: BTreeMap<String, String>,
            value: String,
        }
        let used: BTreeMap<String, String> = p
            .vars
            .iter()
            .map(|n| (n.clone(), bindings[n].to_string()))
            .collect();
        let body = Body {
            expr: print_with(&p.term, Some(reg)),
            bindings: used,
            value: value.to_string(),
        };
        ctx.emit("eval", body, || value.to_string())?;
    }
    Ok(0)
}

fn cmd_lower(ctx: &mut Ctx<'_>, a: LowerArgs) -> Result<i32, CliError> {
    let t = parse(&a.expr)?;
    let (lowered, trace) = lower(&t)?;
    let (before, after) = (t.size(), lowered.size());
    if after.tree_nodes > LARGE_TERM {
        eprintln!("warning: lowered term has {} tree nodes ({} shared)", after.tree_nodes, after.dag_nodes);
    }
    #[derive(Serialize)]
    struct Body<'a> {
        input: String,
        lowered: String,
        steps: usize,
        before: crate::term::TermSize,
        after: crate::term::TermSize,
        #[serde(skip_serializing_if = "Option::is_none")]
        trace: Option<&'a crate::lower::LoweringTrace>,
    }
    let body = Body {
        input: t.to_string(),
        lowered: lowered.to_string(),
        steps: trace.len(),
        before,
        after,
        trace: a.trace_json.then_some(&trace),
    };
    let text = || {
        format!(
            "{lowered}\n# {} steps, tree size {} -> {}, {} shared nodes",
            trace.len(),
            before.tree_nodes,
            after.tree_nodes,
            after.dag_nodes
        )
    };
    ctx.emit("lower", body, text)?;
    if a.trace_json && !ctx.json() {
        write!(ctx.out, "{}", trace.to_json_lines())?;
    }
    let Some(range) = a.verify else {
        return Ok(0);
    };
    let dims = t.var_count().max(1) as usize;
    let ev = Evaluator::new(ctx.limits);
    let report = verify_lowering(&t, &Grid::square(range, dims), &ev)?;
    ctx.report("verification", &report)
}

fn cmd_certify(ctx: &mut Ctx<'_>, a: CertifyArgs) -> Result<i32, CliError> {
    let terms: Vec<Term> = match (&a.expr, a.sample) {
        (Some(e), None) => vec![parse(e)?],
        (None, Some(n)) => {
            let mut s = TermSampler::new(&a.lemma.signature(), a.sample_size, a.sample_consts, ctx.config.seed);
            (0..n).map(|_| s.sample()).collect()
        }
        _ => return Err(CliError::Input("give an expression or --sample".into())),
    };
    let mut worst = 0;
    for t in terms {
        let cert = a.lemma.certify(&t)?;
        let report = check_certificate(&t, &cert, a.range.clone());
        #[derive(Serialize)]
        struct Body<'a> {
            term: String,
            lemma: &'static str,
            certificate: &'a crate::growth::GrowthCertificate,
            report: &'a VerificationReport,
        }
        let body = Body {
            term: t.to_string(),
            lemma: a.lemma.name(),
            certificate: &cert,
            report: &report,
        };
        ctx.emit("certificate", body, || format!("{cert} {}\n{report}", report.status))?;
        worst = worst.max(status_code(report.status));
    }
    Ok(worst)
}

fn cmd_refute(ctx: &mut Ctx<'_>, a: RefuteArgs) -> Result<i32, CliError> {
    let (mut cfg, expected) = match &a.preset {
        Some(name) => {
            let p = preset(name)?;
            (p.config, Some(p.expected))
        }
        None => {
            let target = a.target.as_deref().ok_or_else(|| CliError::Input("give a target or --preset".into()))?;
            let sig = a.sig.as_deref().ok_or_else(|| CliError::Input("give --sig".into()))?;
            let sig = Signature::parse_list(sig).map_err(CliError::Input)?;
            (RefuteConfig::new(parse(target)?, sig, 9, 3), None)
        }
    };
    if let Some(n) = a.size {
        cfg.max_size = n;
    }
    if let Some(c) = a.consts {
        cfg.max_const = c;
    }
    if let Some(b) = a.budget {
        cfg.budget = b;
    }
    if let Some(m) = a.max_classes {
        cfg.max_classes = m;
    }
    for p in &a.plant {
        cfg.planted.push(parse(p)?);
    }
    ctx.config.max_size = Some(cfg.max_size);
    ctx.config.max_const = Some(cfg.max_const);
    let ev = refute_membership(&cfg)?;
    ctx.emit("refutation", &ev, || ev.to_string())?;
    let code = match (expected, ev.outcome) {
        (Some(Expectation::Found), Outcome::NotFoundUpToBound) | (Some(Expectation::NotFound), Outcome::Found) => 4,
        _ => 0,
    };
    Ok(code)
}

fn cmd_bases(ctx: &mut Ctx<'_>, b: BasesCommand) -> Result<i32, CliError> {
    match b {
        BasesCommand::Lift { expr } => {
            let t = parse(&expr)?;
            let lifted = if t.var_count() <= 1 { lift_unary(&t)? } else { lift_binary(&t)? };
            #[derive(Serialize)]
            struct Body {
                input: String,
                lifted: String,
            }
            let body = Body {
                input: t.to_string(),
                lifted: lifted.to_string(),
            };
            ctx.emit("lift", body, || lifted.to_string())?;
            Ok(0)
        }
        BasesCommand::CompileUnary { expr, basis, check } => {
            let sig = Signature::parse_list(&basis).map_err(CliError::Input)?;
            let lifted = LiftedBasis::new(&sig)?;
            let f = parse(&expr)?;
            let compiled = compile_to_unary(&f, &lifted)?;
            let decoded = lifted.decode(&compiled);
            let text = print_with(&decoded, Some(lifted.registry()));
            ctx.emit("compile-unary", serde_json::json!({ "input": f.to_string(), "decoded": text }), || text.clone())?;
            let ev = Evaluator::with_registry(ctx.limits, lifted.registry());
            let label = format!("{f} = {text} on [{}, {}]", check.start(), check.end());
            let report = crate::report::verify_equivalence(&label, &f, &decoded, &Grid::new(vec![check]), &ev);
            ctx.report("verification", &report)
        }
        BasesCommand::H { expr, pure, verify, audit } => {
            let mut code = 0;
            if let Some(e) = expr {
                let t = parse(&e)?;
                let h = compile_to_h(&t, pure)?;
                let ev = Evaluator::new(ctx.limits);
                ctx.emit("compile-h", serde_json::json!({ "input": t.to_string(), "h": h.to_string() }), || h.to_string())?;
                let grid = Grid::square(verify, t.var_count().max(1) as usize);
                let report = crate::report::verify_equivalence(&format!("{t} through h"), &t, &h, &grid, &ev);
                code = code.max(ctx.report("verification", &report)?);
            }
            if let Some(bound) = audit {
                code = code.max(ctx.report("audit", &audit_h(bound))?);
            }
            Ok(code)
        }
        BasesCommand::G { k, check, audit } => {
            let std = UnaryBasis::standard();
            let k = k as usize;
            let defs = std.names()[..k].iter().cloned().zip(std.bodies()[..k].iter().cloned()).collect();
            let basis = UnaryBasis::new(defs)?;
            let report = check_g(&basis, check, &ctx.limits);
            let mut code = ctx.report("verification", &report)?;
            if let Some(bound) = audit {
                code = code.max(ctx.report("audit", &audit_g(bound, k))?);
            }
            Ok(code)
        }
        BasesCommand::Mod2Identity { range } => {
            let ev = Evaluator::new(ctx.limits);
            let report = bases::check_mod2_identity(range, &ev);
            ctx.report("verification", &report)
        }
    }
}

/// `g(x, f0^i(x)) = fi(x)` for every `x` in `range` and `i < k`.
pub fn check_g(basis: &UnaryBasis, range: RangeInclusive<u64>, limits: &EvalLimits) -> VerificationReport {
    let ev = Evaluator::with_registry(*limits, basis.registry());
    let mut report = VerificationReport::new(format!(
        "g(x, f0^i(x)) = fi(x) on [{}, {}], k = {}",
        range.start(),
        range.end(),
        basis.k()
    ));
    for x in range {
        let bx = BigUint::from(x);
        for (i, body) in basis.bodies().iter().enumerate() {
            let y = f0_iterate(&bx, i);
            let want = ev.eval(body, &Env::new(vec![bx.clone()]));
            let got = bases::eval_g(&bx, &y, basis, limits);
            crate::report::compare_point(&mut report, vec![x, i as u64], want, got);
        }
    }
    report
}
