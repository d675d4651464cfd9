//! Command-line front end: argument parsing and subcommand dispatch.
//!
//! Machine-readable JSON goes to `out`, human-readable summaries to `err`.

use clap::{Args, Parser, Subcommand, ValueEnum};
use grabit::algorithms::{
    build_bv, build_cost_hamiltonian, build_dj_bv, build_qft, fourier_basis_state, optimize_qaoa,
    portfolio_statistics, read_prices_csv, synthetic_prices, QaoaEngine,
};
use grabit::circuit::{
    builtin_oracle, parse_circuit, print_circuit, run_exact_stochastic, run_sampled, Circuit, InitState,
    RefreshPolicy, RunOptions, RunResult, DEFAULT_EXACT_LIMIT,
};
use grabit::experiments::{run_scan, ScanConfig};
use grabit::unitary::{compare_up_to_scale, realified_reference};
use grabit::{rf1, rf2, rf3, GrabitError, RealizationEnsemble, RefreshVariant};
use num_rational::BigRational;
use serde_json::json;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

pub const SEED_ENV: &str = "GRABIT_SEED";

#[derive(Debug, Parser)]
#[command(name = "grabit", version, about = "Stochastic emulation of quantum circuits with grabits")]
pub struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Print the resolved plan and exit without executing.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Seed; falls back to $GRABIT_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sampled execution of a circuit file.
    Run(RunArgs),
    /// Exact stochastic propagation, optionally compared with the unitary.
    Exact(ExactArgs),
    /// Build and execute a named algorithm.
    #[command(subcommand)]
    Algo(AlgoCommand),
    /// Run an experiment scan from a JSON config.
    Scan(ScanArgs),
    /// Apply one refresh to a histogram and report the steps.
    RefreshDemo(RefreshDemoArgs),
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    #[arg(long, default_value_t = 10_000)]
    pub nball: usize,
    /// Refresh variant; inserted after every interference gate unless the
    /// circuit or `--policy` already schedules refreshes.
    #[arg(long)]
    pub refresh: Option<RefreshVariant>,
    /// `none`, `after_interference`, `end_only` or `every K`.
    #[arg(long)]
    pub policy: Option<RefreshPolicy>,
    #[arg(long)]
    pub rf2_target: Option<usize>,
    #[arg(long)]
    pub rf3_capacity: Option<usize>,
    /// Monte-Carlo instead of deterministic ROAR.
    #[arg(long)]
    pub mc_roar: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Also write the state estimate as CSV.
    #[arg(long)]
    pub state_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    /// Compare with the realified unitary output.
    #[arg(long)]
    pub compare_unitary: bool,
    /// Propagate in exact rational arithmetic.
    #[arg(long)]
    pub rational: bool,
    #[arg(long, default_value_t = DEFAULT_EXACT_LIMIT)]
    pub limit: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EngineChoice {
    Exact,
    Sampled,
}

#[derive(Debug, Args)]
pub struct AlgoRun {
    #[arg(long, value_enum, default_value_t = EngineChoice::Sampled)]
    pub engine: EngineChoice,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Print the circuit in text form instead of running it.
    #[arg(long)]
    pub emit: bool,
}

#[derive(Debug, Subcommand)]
pub enum AlgoCommand {
    /// Deutsch-Jozsa with a named oracle (const0, const1, parity, balanced, ttBITS).
    Dj {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "balanced")]
        oracle: String,
        #[command(flatten)]
        run: AlgoRun,
    },
    /// Bernstein-Vazirani for a hidden bit string.
    Bv {
        #[arg(long)]
        n: usize,
        /// Hidden string as binary digits, most significant first.
        #[arg(long)]
        a: String,
        #[command(flatten)]
        run: AlgoRun,
    },
    /// (Inverse) QFT, optionally on a Fourier basis state.
    Qft {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        inverse: bool,
        #[arg(long)]
        swaps: bool,
        /// Prepare the Fourier state of this wavenumber.
        #[arg(long)]
        fourier: Option<u64>,
        /// Initial uniform superposition with this period.
        #[arg(long)]
        periodic: Option<u64>,
        #[command(flatten)]
        run: AlgoRun,
    },
    /// QAOA for the portfolio cost Hamiltonian.
    Qaoa(QaoaArgs),
}

#[derive(Debug, Args)]
pub struct QaoaArgs {
    /// Price CSV (`asset,day,price`); synthetic prices when absent.
    #[arg(long)]
    pub prices: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub assets: usize,
    #[arg(long, default_value_t = 120)]
    pub days: usize,
    /// Risk weight q.
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub depth: usize,
    #[arg(long, default_value_t = 12)]
    pub grid: usize,
    #[arg(long, value_enum, default_value_t = EngineChoice::Exact)]
    pub engine: EngineChoice,
    #[arg(long, default_value_t = 100_000)]
    pub nball: usize,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Write the result table as CSV to this path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RefreshDemoArgs {
    /// Counts per joint b4v, comma separated (4^grabits entries).
    #[arg(long, default_value = "4,0,4,3")]
    pub histogram: String,
    #[arg(long, default_value_t = 1)]
    pub grabits: usize,
    #[arg(long, default_value = "rf1")]
    pub variant: RefreshVariant,
    /// Rf2 target / Rf3 capacity; defaults to the input N_ball (twice it for Rf3).
    #[arg(long)]
    pub size: Option<usize>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(GrabitError),
}

impl From<GrabitError> for CliError {
    fn from(e: GrabitError) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

struct Ctx<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    seed: u64,
    workers: Option<usize>,
    dry_run: bool,
}

/// Parses `argv` (program name first) and runs the command.
pub fn dispatch(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let (seed, source) = match cli.seed {
        Some(s) => (s, "--seed".to_string()),
        None => match std::env::var(SEED_ENV) {
            Ok(v) => match v.trim().parse::<u64>() {
                Ok(s) => (s, format!("${SEED_ENV}")),
                Err(_) => {
                    let _ = writeln!(err, "error: {SEED_ENV}={v:?} is not an unsigned integer");
                    return EXIT_USAGE;
                }
            },
            Err(_) => (0, "default".to_string()),
        },
    };
    let _ = writeln!(err, "seed: {seed} ({source})");
    if cli.workers == Some(0) {
        let _ = writeln!(err, "error: --workers must be at least 1");
        return EXIT_USAGE;
    }
    let mut ctx = Ctx { out, err, seed, workers: cli.workers, dry_run: cli.dry_run };
    let res = match cli.command {
        Command::Run(a) => cmd_run(&mut ctx, &a),
        Command::Exact(a) => cmd_exact(&mut ctx, &a),
        Command::Algo(a) => cmd_algo(&mut ctx, a),
        Command::Scan(a) => cmd_scan(&mut ctx, &a),
        Command::RefreshDemo(a) => cmd_refresh_demo(&mut ctx, &a),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(m)) => {
            let _ = writeln!(ctx.err, "error: {m}");
            EXIT_USAGE
        }
        Err(CliError::Runtime(e)) => {
            let _ = writeln!(ctx.err, "error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn read_circuit(path: &Path) -> CliResult<Circuit> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(GrabitError::InvalidInput(format!("{}: {e}", path.display()))))?;
    Ok(parse_circuit(&text)?)
}

fn emit_json(ctx: &mut Ctx, v: &impl serde::Serialize) -> CliResult<()> {
    writeln!(ctx.out, "{}", serde_json::to_string_pretty(v)?)?;
    Ok(())
}

fn run_options(ctx: &Ctx, c: &Circuit, s: &SamplingArgs) -> RunOptions {
    let mut o = RunOptions::new(s.nball, ctx.seed);
    o.workers = ctx.workers;
    o.rf2_target = s.rf2_target;
    o.rf3_capacity = s.rf3_capacity;
    o.monte_carlo_roar = s.mc_roar;
    let has_explicit = c.instructions.iter().any(|i| matches!(i, grabit::circuit::Instruction::Refresh(_)));
    match (s.policy, s.refresh) {
        (Some(p), v) => o.policy_override = Some((p, v.unwrap_or(c.policy_variant))),
        (None, Some(v)) if c.refresh_policy == RefreshPolicy::None && !has_explicit => {
            o.policy_override = Some((RefreshPolicy::AfterInterference, v));
        }
        (None, Some(v)) => {
            o.refresh_override = Some(v);
            o.policy_override = Some((c.refresh_policy, v));
        }
        (None, None) => {}
    }
    o
}

fn plan_of(c: &Circuit, o: &RunOptions) -> serde_json::Value {
    let (policy, variant) = o.policy_override.unwrap_or((c.refresh_policy, c.policy_variant));
    json!({
        "engine": "sampled",
        "n_logical": c.n_logical,
        "n_grabits": c.n_grabits(),
        "gates": c.gate_count(),
        "n_ball": o.n_ball,
        "seed": o.seed,
        "policy": policy.to_string(),
        "policy_variant": variant.to_string(),
        "refresh_override": o.refresh_override.map(|v| v.to_string()),
        "workers": o.workers,
        "circuit": print_circuit(c),
    })
}

fn summarize(ctx: &mut Ctx, r: &RunResult) -> CliResult<()> {
    writeln!(
        ctx.err,
        "{} run: {} gates on {} grabits, N_ball {} -> {}, peak blv {:?}, {} refresh(es), {:.3}s",
        r.engine,
        r.gates_applied,
        r.n_grabits,
        r.n_ball_initial.map(|n| n.to_string()).unwrap_or("-".into()),
        r.n_ball_final.map(|n| n.to_string()).unwrap_or("-".into()),
        r.peak_physical,
        r.refresh_reports.len(),
        r.wall_time.as_secs_f64()
    )?;
    if r.annihilated {
        writeln!(ctx.err, "warning: state estimate annihilated")?;
    }
    Ok(())
}

fn execute_sampled(ctx: &mut Ctx, c: &Circuit, s: &SamplingArgs) -> CliResult<Option<RunResult>> {
    let o = run_options(ctx, c, s);
    if ctx.dry_run {
        emit_json(ctx, &plan_of(c, &o))?;
        return Ok(None);
    }
    let r = run_sampled(c, &o)?;
    writeln!(ctx.out, "{}", r.to_json())?;
    summarize(ctx, &r)?;
    Ok(Some(r))
}

fn cmd_run(ctx: &mut Ctx, a: &RunArgs) -> CliResult<()> {
    let c = read_circuit(&a.circuit)?;
    if let Some(r) = execute_sampled(ctx, &c, &a.sampling)? {
        if let Some(p) = &a.state_csv {
            r.state.write_csv(std::fs::File::create(p)?)?;
        }
    }
    Ok(())
}

fn exact_report(ctx: &mut Ctx, c: &Circuit, compare: bool, rational: bool, limit: usize) -> CliResult<()> {
    if ctx.dry_run {
        return emit_json(
            ctx,
            &json!({
                "engine": if rational { "exact_rational" } else { "exact" },
                "n_logical": c.n_logical,
                "n_grabits": c.n_grabits(),
                "gates": c.gate_count(),
                "compare_unitary": compare,
                "limit": limit,
                "circuit": print_circuit(c),
            }),
        );
    }
    let start = Instant::now();
    let run = run_exact_stochastic::<f64>(c, limit)?;
    let result = run.to_result(start.elapsed());
    let mut doc = serde_json::to_value(&result)?;
    if rational {
        let exact = run_exact_stochastic::<BigRational>(c, limit)?;
        let amps: BTreeMap<String, String> =
            exact.state().amplitudes.iter().filter(|(_, v)| !num_traits::Zero::is_zero(*v)).map(|(k, v)| (k.to_string(), v.to_string())).collect();
        doc["rational_estimate"] = serde_json::to_value(amps)?;
    }
    if compare {
        let reference = realified_reference(c)?;
        let cmp = compare_up_to_scale(&result.state.dense(), &reference)?;
        doc["comparison"] = json!({
            "cosine": cmp.cosine,
            "sign": cmp.sign,
            "l2_after_normalization": cmp.l2_after_normalization,
        });
        writeln!(ctx.err, "cosine with realified unitary output: {:.15}", cmp.cosine)?;
    }
    if run.skipped_refreshes > 0 {
        writeln!(ctx.err, "note: {} refresh instruction(s) have no exact counterpart and were skipped", run.skipped_refreshes)?;
    }
    emit_json(ctx, &doc)?;
    summarize(ctx, &result)
}

fn cmd_exact(ctx: &mut Ctx, a: &ExactArgs) -> CliResult<()> {
    let c = read_circuit(&a.circuit)?;
    exact_report(ctx, &c, a.compare_unitary, a.rational, a.limit)
}

fn run_algo(ctx: &mut Ctx, c: &Circuit, r: &AlgoRun) -> CliResult<()> {
    if r.emit {
        write!(ctx.out, "{}", print_circuit(c))?;
        return Ok(());
    }
    match r.engine {
        EngineChoice::Exact => exact_report(ctx, c, true, false, DEFAULT_EXACT_LIMIT),
        EngineChoice::Sampled => execute_sampled(ctx, c, &r.sampling).map(|_| ()),
    }
}

fn parse_bits(s: &str) -> CliResult<(u64, usize)> {
    if s.is_empty() || s.len() > 63 || !s.chars().all(|c| c == '0' || c == '1') {
        return Err(CliError::Usage(format!("expected a binary string, got `{s}`")));
    }
    Ok((u64::from_str_radix(s, 2).expect("binary digits"), s.len()))
}

fn cmd_algo(ctx: &mut Ctx, a: AlgoCommand) -> CliResult<()> {
    match a {
        AlgoCommand::Dj { n, oracle, run } => {
            let f = builtin_oracle(&oracle, n)?;
            let c = build_dj_bv(n, f, false)?;
            run_algo(ctx, &c, &run)
        }
        AlgoCommand::Bv { n, a, run } => {
            let (bits, len) = parse_bits(&a)?;
            if len != n {
                return Err(CliError::Usage(format!("--a has {len} digits but --n is {n}")));
            }
            let c = build_bv(n, bits)?;
            run_algo(ctx, &c, &run)
        }
        AlgoCommand::Qft { n, inverse, swaps, fourier, periodic, run } => {
            let mut c = build_qft(n, inverse, swaps)?;
            match (fourier, periodic) {
                (Some(_), Some(_)) => return Err(CliError::Usage("--fourier and --periodic are exclusive".into())),
                (Some(k), None) => c = c.with_init(fourier_basis_state(n, k, inverse && !swaps)?),
                (None, Some(p)) => c = c.with_init(InitState::Periodic(p)),
                (None, None) => {}
            }
            run_algo(ctx, &c, &run)
        }
        AlgoCommand::Qaoa(q) => cmd_qaoa(ctx, &q),
    }
}

fn cmd_qaoa(ctx: &mut Ctx, q: &QaoaArgs) -> CliResult<()> {
    let (assets, prices) = match &q.prices {
        Some(p) => read_prices_csv(std::fs::File::open(p)?)?,
        None => synthetic_prices(q.assets, q.days, ctx.seed),
    };
    let data = portfolio_statistics(assets, prices)?;
    let h = build_cost_hamiltonian::<f64>(&data, q.q, q.budget, q.lambda)?;
    let engine = match q.engine {
        EngineChoice::Exact => QaoaEngine::Exact,
        EngineChoice::Sampled => QaoaEngine::Sampled { n_ball: q.nball, seed: ctx.seed },
    };
    if ctx.dry_run {
        return emit_json(
            ctx,
            &json!({
                "assets": data.assets,
                "depth": q.depth,
                "grid": q.grid,
                "engine": format!("{engine:?}"),
                "hamiltonian": serde_json::from_str::<serde_json::Value>(&h.to_json())?,
            }),
        );
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Runtime(GrabitError::InvalidInput(format!("thread pool: {e}"))))?;
    let report = pool.install(|| optimize_qaoa(&h, q.depth, &engine, q.grid))?;
    let doc = json!({
        "assets": data.assets,
        "hamiltonian": serde_json::from_str::<serde_json::Value>(&h.to_json())?,
        "report": report,
    });
    emit_json(ctx, &doc)?;
    writeln!(
        ctx.err,
        "QAOA p={}: ground state {:0width$b} (E={:.6}), P_gs={:.4}, <H>={:.6}, {} evaluations",
        report.depth,
        report.ground_state,
        report.ground_energy,
        report.p_gs,
        report.cost,
        report.evaluations,
        width = h.n
    )?;
    Ok(())
}

fn cmd_scan(ctx: &mut Ctx, a: &ScanArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| CliError::Runtime(GrabitError::InvalidInput(format!("{}: {e}", a.config.display()))))?;
    let cfg = ScanConfig::from_json(&text).map_err(|e| CliError::Usage(format!("bad scan config: {e}")))?;
    if ctx.dry_run {
        return emit_json(ctx, &json!({ "scan": cfg.name(), "config": cfg }));
    }
    let start = Instant::now();
    let output = match ctx.workers {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Runtime(GrabitError::InvalidInput(format!("thread pool: {e}"))))?
            .install(|| run_scan(&cfg))?,
        None => run_scan(&cfg)?,
    };
    emit_json(ctx, &output)?;
    if let Some(p) = &a.csv {
        std::fs::write(p, &output.csv)?;
    }
    write!(ctx.err, "{}", output.csv)?;
    writeln!(ctx.err, "{} scan finished in {:.1}s", output.scan, start.elapsed().as_secs_f64())?;
    Ok(())
}

fn cmd_refresh_demo(ctx: &mut Ctx, a: &RefreshDemoArgs) -> CliResult<()> {
    let counts: Vec<u64> = a
        .histogram
        .split(',')
        .map(|t| t.trim().parse::<u64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("bad histogram: {e}")))?;
    if a.grabits == 0 || a.grabits > 8 || counts.len() != 1usize << (2 * a.grabits) {
        return Err(CliError::Usage(format!(
            "histogram needs 4^grabits entries (1 <= grabits <= 8), got {} for {} grabit(s)",
            counts.len(),
            a.grabits
        )));
    }
    let hist: BTreeMap<u64, u64> = counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| (i as u64, c)).collect();
    if ctx.dry_run {
        return emit_json(ctx, &json!({ "variant": a.variant.to_string(), "grabits": a.grabits, "histogram": counts }));
    }
    let e = RealizationEnsemble::from_histogram(a.grabits, &hist)?;
    let n = e.n_ball();
    let (after, report) = match a.variant {
        RefreshVariant::Rf1 => rf1(&e)?,
        RefreshVariant::Rf2 => rf2(&e, a.size.unwrap_or(n))?,
        RefreshVariant::Rf3 => rf3(&e, a.size.unwrap_or(2 * n))?,
    };
    let dense = |e: &RealizationEnsemble| {
        let h = e.histogram();
        (0..counts.len() as u64).map(|i| h.get(&i).copied().unwrap_or(0)).collect::<Vec<_>>()
    };
    let doc = json!({
        "before": dense(&e),
        "after": dense(&after),
        "estimate_before": grabit::extract_state(&e)?.dense(),
        "estimate_after": grabit::extract_state(&after)?.dense(),
        "report": report,
    });
    emit_json(ctx, &doc)?;
    writeln!(ctx.err, "{}: {:?} -> {:?}", a.variant, dense(&e), dense(&after))?;
    Ok(())
}
