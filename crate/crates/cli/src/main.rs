mod json;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sylvester_core::iteration::{iterate, write_trace_csv, TraceRow};
use sylvester_core::kernel::{check_convolution_identities, lcm_identity_first_failure};
use sylvester_core::rational;
use sylvester_core::scheme::cancellation_check;
use sylvester_core::selection::{Matching, SelectionCoefficients, StepCheck};
use sylvester_core::sweep::{
    optimize_rho, write_sweep_csv, DEFAULT_REFINE_ROUNDS, DEFAULT_RHO_MAX, DEFAULT_RHO_MIN, DEFAULT_STEP,
};
use sylvester_core::verify::{
    geometric_ladder, verify_asymptotic_a, verify_final_bounds, verify_psi_pi, verify_selection_bounds,
    verify_v_identities, SUMMATION_TOLERANCE,
};
use sylvester_core::{
    base_bounds, build_recurrence, build_sieve, builtins, e_profile, fixed_point, hybrid_recurrence, resolve,
    selection_coefficients, selection_step_function, sweep_rho, AffineRecurrence, BaseBounds, EProfile,
    IterationResult, Pair, ProfileMetrics, RhoOptimum, Scheme, SelectOptions, Side, SweepRow, TermSelection,
    VerificationReport,
};

type CliResult<T = ()> = Result<T, Box<dyn std::error::Error>>;

/// Elementary ψ(x) bounds by Sylvester's iteration.
///
/// Scheme arguments accept a built-in name (see `list-schemes`), a bracket
/// string such as `[1,30;2,3,5]`, or an explicit list such as `1:1,2:-2`.
#[derive(Parser)]
#[command(name = "sylvester", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cancellation, A, the period of E and its metrics, and the base bounds.
    Analyze { scheme: String },
    /// Jumps of E over one period.
    Eprofile {
        scheme: String,
        /// Write `x,E` rows for one period.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// A, A′ and B.
    BaseBounds { scheme: String },
    /// The ψ terms kept in one bound of V at threshold ρ.
    Select {
        scheme: String,
        #[arg(long)]
        rho: f64,
        #[arg(long, value_enum)]
        side: SideArg,
        /// Ignore jumps beyond this index except those closing an earlier one.
        #[arg(long)]
        max_index: Option<u64>,
        /// Drop the pair `m,n` even if it passes the threshold; repeatable.
        #[arg(long, value_parser = parse_pair)]
        exclude: Vec<Pair>,
        /// Write `position,sign,status` rows.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Fixed point of the recurrence on (a, b), optionally with an iteration trace.
    Iterate {
        scheme: String,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        a0: Option<f64>,
        #[arg(long)]
        b0: Option<f64>,
        /// Number of iteration steps to trace.
        #[arg(long)]
        steps: Option<usize>,
        /// Take the lower bound (b-update) from this scheme instead.
        #[arg(long)]
        hybrid_lower: Option<String>,
        /// Truncate the hybrid lower selection at this index.
        #[arg(long, requires = "hybrid_lower")]
        hybrid_max_index: Option<u64>,
        #[arg(long, value_parser = parse_pair)]
        exclude: Vec<Pair>,
        /// Write the trace as `i,a_i,b_i` rows.
        #[arg(long, requires = "steps")]
        csv: Option<PathBuf>,
    },
    /// Limits, eigenvalues and term counts over a ρ grid, with the optimal ρ.
    Sweep {
        scheme: String,
        #[arg(long, default_value_t = DEFAULT_RHO_MIN)]
        rho_min: f64,
        #[arg(long, default_value_t = DEFAULT_RHO_MAX)]
        rho_max: f64,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
        /// Rounds of local grid halving around each optimum.
        #[arg(long, default_value_t = DEFAULT_REFINE_ROUNDS)]
        refine: u32,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Sieve-backed checks, one JSON report per line; exits nonzero if any fails.
    Verify {
        #[arg(value_enum)]
        check: Check,
        /// Largest x checked (largest x in the ladder for asymptotic-a and psi-pi).
        #[arg(long)]
        limit: Option<u64>,
        /// Scheme for v-identities, selection-bounds and asymptotic-a; all built-ins when omitted.
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long, default_value_t = 1.2)]
        rho: f64,
        /// Constants for final-bounds.
        #[arg(long, default_value_t = 0.9226)]
        a: f64,
        #[arg(long, default_value_t = 1.0765)]
        b: f64,
        /// Exponent for psi-pi.
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
    },
    /// Built-in schemes.
    ListSchemes,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Lower,
    Upper,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Lower => Side::Lower,
            SideArg::Upper => Side::Upper,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Convolution,
    Lcm,
    VIdentities,
    SelectionBounds,
    AsymptoticA,
    FinalBounds,
    PsiPi,
}

fn parse_pair(text: &str) -> Result<Pair, String> {
    let (m, n) = text.split_once(',').ok_or_else(|| format!("expected m,n, got {text:?}"))?;
    let m = m.trim().parse::<u64>().map_err(|e| format!("{m:?}: {e}"))?;
    let n = n.trim().parse::<u64>().map_err(|e| format!("{n:?}: {e}"))?;
    Ok(Pair::new(m, n))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| format!("cannot create {}: {e}", path.display()).into())
}

#[derive(Serialize)]
struct SchemeInfo {
    scheme: String,
    bracket: String,
    explicit: String,
}

impl SchemeInfo {
    fn new(s: &Scheme) -> Self {
        Self { scheme: s.label(), bracket: s.render_bracket(), explicit: s.render_explicit() }
    }
}

#[derive(Serialize)]
struct Analysis {
    #[serde(flatten)]
    info: SchemeInfo,
    cancellation_sum: String,
    a: f64,
    period: u64,
    #[serde(flatten)]
    metrics: ProfileMetrics,
    base_bounds: BaseBounds,
}

fn analyze(text: &str) -> CliResult {
    let s = resolve(text)?;
    let sum = cancellation_check(&s);
    let profile = e_profile(&s)?;
    let base = base_bounds(&s, &profile)?;
    json::print(&Analysis {
        info: SchemeInfo::new(&s),
        cancellation_sum: rational::render(&sum.value),
        a: s.constant_a(),
        period: profile.period(),
        metrics: profile.metrics().clone(),
        base_bounds: base,
    })?;
    Ok(())
}

#[derive(Serialize)]
struct ProfileOutput<'a> {
    #[serde(flatten)]
    info: SchemeInfo,
    #[serde(flatten)]
    profile: &'a EProfile,
    #[serde(skip_serializing_if = "Option::is_none")]
    csv: Option<&'a Path>,
}

fn eprofile(text: &str, csv: Option<&Path>) -> CliResult {
    let s = resolve(text)?;
    let profile = e_profile(&s)?;
    if let Some(path) = csv {
        profile.write_csv(create(path)?)?;
    }
    json::print(&ProfileOutput { info: SchemeInfo::new(&s), profile: &profile, csv })?;
    Ok(())
}

#[derive(Serialize)]
struct BaseOutput {
    #[serde(flatten)]
    info: SchemeInfo,
    n: u64,
    m: Option<u64>,
    #[serde(flatten)]
    bounds: BaseBounds,
}

fn base(text: &str) -> CliResult {
    let s = resolve(text)?;
    let profile = e_profile(&s)?;
    let bounds = base_bounds(&s, &profile)?;
    let metrics = profile.metrics();
    json::print(&BaseOutput { info: SchemeInfo::new(&s), n: metrics.n, m: metrics.m, bounds })?;
    Ok(())
}

fn selection(profile: &EProfile, side: Side, rho: f64, max_index: Option<u64>, exclude: &[Pair]) -> CliResult<TermSelection> {
    Ok(Matching::scan(profile, side, rho, max_index)?.select(rho, exclude)?)
}

#[derive(Serialize)]
struct SelectOutput<'a> {
    #[serde(flatten)]
    info: SchemeInfo,
    #[serde(flatten)]
    selection: &'a TermSelection,
    term_count: usize,
    coefficients: SelectionCoefficients,
    domination: StepCheck,
}

fn select(text: &str, rho: f64, side: Side, max_index: Option<u64>, exclude: &[Pair], csv: Option<&Path>) -> CliResult {
    let s = resolve(text)?;
    let profile = e_profile(&s)?;
    let sel = selection(&profile, side, rho, max_index, exclude)?;
    let domination = selection_step_function(&sel, &profile)?;
    if let Some(path) = csv {
        sel.write_csv(create(path)?)?;
    }
    json::print(&SelectOutput {
        info: SchemeInfo::new(&s),
        term_count: sel.term_count(),
        coefficients: selection_coefficients(&sel),
        selection: &sel,
        domination,
    })?;
    Ok(())
}

#[derive(Serialize)]
struct IterateOutput {
    #[serde(flatten)]
    info: SchemeInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    hybrid_lower: Option<SchemeInfo>,
    rho: f64,
    lower: TermSelection,
    upper: TermSelection,
    recurrence: AffineRecurrence,
    #[serde(flatten)]
    result: IterationResult,
}

struct IterateArgs<'a> {
    rho: f64,
    a0: Option<f64>,
    b0: Option<f64>,
    steps: Option<usize>,
    hybrid_lower: Option<&'a str>,
    hybrid_max_index: Option<u64>,
    exclude: &'a [Pair],
    csv: Option<&'a Path>,
}

fn run_iterate(text: &str, args: IterateArgs<'_>) -> CliResult {
    let s = resolve(text)?;
    let profile = e_profile(&s)?;
    let upper = selection(&profile, Side::Upper, args.rho, None, args.exclude)?;
    let (rec, lower, lower_scheme, lower_base) = match args.hybrid_lower {
        None => {
            let lower = selection(&profile, Side::Lower, args.rho, None, args.exclude)?;
            let rec = build_recurrence(&lower, &upper, s.constant_a(), profile.metrics().n)?;
            (rec, lower, None, base_bounds(&s, &profile)?)
        }
        Some(other) => {
            let t = resolve(other)?;
            let tp = e_profile(&t)?;
            let lower = selection(&tp, Side::Lower, args.rho, args.hybrid_max_index, args.exclude)?;
            let rec = hybrid_recurrence(&upper, s.constant_a(), &lower, t.constant_a(), tp.metrics().n)?;
            (rec, lower, Some(SchemeInfo::new(&t)), base_bounds(&t, &tp)?)
        }
    };
    let mut result = fixed_point(&rec)?;
    if let Some(steps) = args.steps {
        let a0 = args.a0.or(lower_base.a_prime).unwrap_or(0.0);
        let b0 = args.b0.unwrap_or(lower_base.b);
        let trace: Vec<TraceRow> = iterate(&rec, a0, b0, steps);
        if let Some(path) = args.csv {
            write_trace_csv(&trace, create(path)?)?;
        }
        result.trace = Some(trace);
    }
    let fractions = result.alpha.as_ref().zip(result.beta.as_ref()).map(|(a, b)| rational::render_common(&[a, b]));
    let mut value = json::to_value(&IterateOutput {
        info: SchemeInfo::new(&s),
        hybrid_lower: lower_scheme,
        rho: args.rho,
        lower,
        upper,
        recurrence: rec,
        result,
    })?;
    // The fixed point reads best over one common denominator.
    if let (Some([alpha, beta]), Some(map)) = (fractions.as_deref(), value.as_object_mut()) {
        map.insert("alpha".into(), alpha.clone().into());
        map.insert("beta".into(), beta.clone().into());
    }
    json::print_value(&value)?;
    Ok(())
}

#[derive(Serialize)]
struct SweepOutput {
    #[serde(flatten)]
    info: SchemeInfo,
    rho_min: f64,
    rho_max: f64,
    step: f64,
    optimum: RhoOptimum,
    rows: Vec<SweepRow>,
}

fn sweep(text: &str, rho_min: f64, rho_max: f64, step: f64, refine: u32, csv: Option<&Path>) -> CliResult {
    let s = resolve(text)?;
    let rows = sweep_rho(&s, rho_min, rho_max, step)?;
    let optimum = optimize_rho(&s, rho_min, rho_max, step, refine)?;
    if let Some(path) = csv {
        write_sweep_csv(&rows, create(path)?)?;
    }
    json::print(&SweepOutput { info: SchemeInfo::new(&s), rho_min, rho_max, step, optimum, rows })?;
    Ok(())
}

fn schemes_for(text: Option<&str>) -> CliResult<Vec<Scheme>> {
    match text {
        Some(t) => Ok(vec![resolve(t)?]),
        None => Ok(builtins().into_iter().map(|b| b.scheme).collect()),
    }
}

#[derive(Serialize)]
struct Report<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    scheme: Option<String>,
    #[serde(flatten)]
    report: &'a VerificationReport,
}

struct VerifyArgs<'a> {
    check: Check,
    limit: Option<u64>,
    scheme: Option<&'a str>,
    rho: f64,
    a: f64,
    b: f64,
    alpha: f64,
}

/// Returns whether every report passed.
fn verify(args: VerifyArgs<'_>) -> CliResult<bool> {
    let mut reports: Vec<(Option<String>, VerificationReport)> = Vec::new();
    match args.check {
        Check::Lcm => {
            let limit = args.limit.unwrap_or(50);
            let failed = lcm_identity_first_failure(limit);
            reports.push((
                None,
                VerificationReport {
                    name: "lcm_identity".into(),
                    x_min: 1,
                    x_max: limit,
                    max_violation: if failed.is_some() { 1.0 } else { 0.0 },
                    witness_x: failed,
                    tolerance: 0.0,
                    passed: failed.is_none(),
                    constants: Vec::new(),
                },
            ));
        }
        Check::Convolution => {
            let limit = args.limit.unwrap_or(10_000);
            let tables = build_sieve(limit)?;
            let c = check_convolution_identities(&tables, limit)?;
            reports.push((
                None,
                VerificationReport {
                    name: "convolution_identities".into(),
                    x_min: 1,
                    x_max: limit,
                    max_violation: c.t_identity_deviation.max(c.psi_identity_deviation),
                    witness_x: None,
                    tolerance: SUMMATION_TOLERANCE,
                    passed: c.within(SUMMATION_TOLERANCE),
                    constants: vec![
                        ("t_identity_deviation".into(), c.t_identity_deviation),
                        ("psi_identity_deviation".into(), c.psi_identity_deviation),
                    ],
                },
            ));
        }
        Check::VIdentities => {
            let limit = args.limit.unwrap_or(10_000);
            let tables = build_sieve(limit)?;
            for s in schemes_for(args.scheme)? {
                let r = verify_v_identities(&s, &e_profile(&s)?, limit, &tables)?;
                reports.push((Some(s.label()), r));
            }
        }
        Check::SelectionBounds => {
            let limit = args.limit.unwrap_or(100_000);
            let tables = build_sieve(limit)?;
            for s in schemes_for(args.scheme)? {
                let p = e_profile(&s)?;
                let opts = SelectOptions::default();
                let lo = sylvester_core::select_terms(&p, Side::Lower, args.rho, &opts)?;
                let up = sylvester_core::select_terms(&p, Side::Upper, args.rho, &opts)?;
                let mut r = verify_selection_bounds(&s, &lo, &up, limit, &tables)?;
                r.constants.push(("rho".into(), args.rho));
                reports.push((Some(s.label()), r));
            }
        }
        Check::AsymptoticA => {
            let limit = args.limit.unwrap_or(1_000_000);
            let tables = build_sieve(limit)?;
            let ladder = geometric_ladder(1000.min(limit / 10).max(2), limit, 4);
            for s in schemes_for(args.scheme)? {
                reports.push((Some(s.label()), verify_asymptotic_a(&s, &ladder, &tables)?));
            }
        }
        Check::FinalBounds => {
            let limit = args.limit.unwrap_or(1_000_000);
            let tables = build_sieve(limit)?;
            reports.push((None, verify_final_bounds(args.a, args.b, limit, &tables)?));
        }
        Check::PsiPi => {
            let limit = args.limit.unwrap_or(1_000_000);
            let tables = build_sieve(limit)?;
            let xs = geometric_ladder(10, limit, 1);
            reports.push((None, verify_psi_pi(args.alpha, &xs, &tables)?));
        }
    }
    for (scheme, report) in &reports {
        json::print_line(&Report { scheme: scheme.clone(), report })?;
    }
    Ok(reports.iter().all(|(_, r)| r.passed))
}

#[derive(Serialize)]
struct SchemeEntry {
    name: &'static str,
    bracket: String,
    explicit: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    caveat: Option<&'static str>,
}

fn list_schemes() -> CliResult {
    let entries: Vec<SchemeEntry> = builtins()
        .into_iter()
        .map(|b| SchemeEntry {
            name: b.name,
            bracket: b.scheme.render_bracket(),
            explicit: b.scheme.render_explicit(),
            caveat: b.caveat,
        })
        .collect();
    let by_name: BTreeMap<&str, &SchemeEntry> = entries.iter().map(|e| (e.name, e)).collect();
    json::print(&by_name)?;
    Ok(())
}

fn run(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Analyze { scheme } => analyze(&scheme)?,
        Command::Eprofile { scheme, csv } => eprofile(&scheme, csv.as_deref())?,
        Command::BaseBounds { scheme } => base(&scheme)?,
        Command::Select { scheme, rho, side, max_index, exclude, csv } => {
            select(&scheme, rho, side.into(), max_index, &exclude, csv.as_deref())?
        }
        Command::Iterate { scheme, rho, a0, b0, steps, hybrid_lower, hybrid_max_index, exclude, csv } => run_iterate(
            &scheme,
            IterateArgs {
                rho,
                a0,
                b0,
                steps,
                hybrid_lower: hybrid_lower.as_deref(),
                hybrid_max_index,
                exclude: &exclude,
                csv: csv.as_deref(),
            },
        )?,
        Command::Sweep { scheme, rho_min, rho_max, step, refine, csv } => {
            sweep(&scheme, rho_min, rho_max, step, refine, csv.as_deref())?
        }
        Command::Verify { check, limit, scheme, rho, a, b, alpha } => {
            return verify(VerifyArgs { check, limit, scheme: scheme.as_deref(), rho, a, b, alpha })
        }
        Command::ListSchemes => list_schemes()?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) if e.downcast_ref::<std::io::Error>().is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
