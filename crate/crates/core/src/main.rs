use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use privedge::assignment::{
    build_is, build_iw, build_plan, verify_coverage, AssignmentPlan, Coverage, CyclicGenerator,
};
use privedge::baseline::{simulate_nonprivate, BaselineConfig};
use privedge::config::{parse_list, ExperimentConfig};
use privedge::latency::{
    overall_latency, sample_setup_times, segments, simulate, write_segments, SetupTimes, StopRule,
};
use privedge::matrix::FieldMatrix;
use privedge::optimizer::{
    enumerate_space, optimize, optimize_baseline, optimize_plans, Scheme, SetupBank,
};
use privedge::protocol::{eavesdropper_view, privacy_audit, run_functional, PublicMatrix};
use privedge::sharing::{UserData, LEAKAGE_ENUMERATION_LIMIT};
use privedge::PrimeField;

#[derive(Debug, Parser)]
#[command(
    name = "privedge",
    version,
    about = "Private distributed linear inference: verification, latency sweeps and schedules"
)]
struct Cli {
    #[command(flatten)]
    opts: Options,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Options {
    /// Flat key=value configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trials per estimate.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Comma-separated γ values; an empty string gives an empty sweep.
    #[arg(long, global = true, value_name = "LIST", allow_hyphen_values = true)]
    gamma: Option<String>,
    /// Comma-separated privacy levels.
    #[arg(long, global = true, value_name = "LIST")]
    z: Option<String>,
    /// Do not charge the upload phase.
    #[arg(long, global = true)]
    no_upload: bool,
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Number of edge nodes for single-plan commands.
    #[arg(long, global = true)]
    e: Option<usize>,
    /// Number of shares for single-plan commands.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Partitions stored per node for single-plan commands.
    #[arg(long, global = true)]
    p: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check Example 1, coverage, privacy and decoding of the configured plan.
    Verify {
        /// Break the share assignment before checking (exercises failure paths).
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Optimized latency per (scheme, z, γ) as CSV.
    Sweep,
    /// Full search table for the first z and γ.
    Optimize {
        #[arg(long)]
        baseline: bool,
    },
    /// Per-node upload/setup/compute/idle segments for one run.
    ScheduleDump {
        /// Wait count; defaults to k.
        #[arg(long)]
        t: Option<usize>,
        /// Use λ = 0 instead of sampling setup times.
        #[arg(long)]
        zero_setup: bool,
        #[arg(long)]
        baseline: bool,
    },
}

/// Error carrying the process exit status.
#[derive(Debug)]
enum Failure {
    /// A check did not hold.
    Verification(Vec<String>),
    /// Bad configuration, infeasible parameters or I/O.
    Usage(String),
}

impl Failure {
    fn usage(e: impl ToString) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn load_config(opts: &Options) -> CliResult<ExperimentConfig> {
    let mut cfg = match &opts.config {
        Some(path) => ExperimentConfig::load(path).map_err(Failure::usage)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = opts.trials {
        cfg.trials = trials;
    }
    if let Some(g) = &opts.gamma {
        cfg.gamma = parse_list(g).map_err(|m| Failure::Usage(format!("--gamma: {m}")))?;
    }
    if let Some(z) = &opts.z {
        cfg.z = parse_list(z).map_err(|m| Failure::Usage(format!("--z: {m}")))?;
    }
    if opts.no_upload {
        cfg.upload = false;
    }
    if opts.out.is_some() {
        cfg.out.clone_from(&opts.out);
    }
    cfg.e = opts.e.or(cfg.e);
    cfg.n = opts.n.or(cfg.n);
    cfg.p = opts.p.or(cfg.p);
    cfg.validate().map_err(Failure::usage)?;
    Ok(cfg)
}

/// Writes to `path`, or stdout when absent.
fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult {
    let result = match path {
        Some(p) => File::create(p).and_then(|file| {
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush()
        }),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock).and_then(|_| lock.flush())
        }
    };
    result.map_err(|e| {
        let target = path.map_or("<stdout>".to_string(), |p| p.display().to_string());
        Failure::Usage(format!("cannot write {target}: {e}"))
    })
}

/// The single plan described by `e`, `n`, `p` and the first `z`.
fn configured_plan(cfg: &ExperimentConfig) -> CliResult<AssignmentPlan> {
    let e = cfg.e.unwrap_or(cfg.e_max);
    let p = cfg.p.unwrap_or_else(|| cfg.params(0.0, 0).max_storage(e).clamp(1, e.max(1)));
    let n = cfg.n.unwrap_or(e);
    let z = cfg.z.first().copied().unwrap_or(0);
    build_plan(e, n, p, z, &CyclicGenerator::reverse_shift(e)).map_err(Failure::usage)
}

fn first_gamma(cfg: &ExperimentConfig) -> CliResult<f64> {
    cfg.gamma
        .first()
        .copied()
        .ok_or_else(|| Failure::Usage("gamma list is empty; this command needs one value".into()))
}

const EXAMPLE_IW: [[usize; 5]; 3] = [[0, 1, 2, 3, 4], [3, 4, 0, 1, 2], [1, 2, 3, 4, 0]];
const EXAMPLE_IS: [[usize; 5]; 2] = [[0, 1, 2, 3, 4], [1, 2, 3, 4, 0]];

fn print_matrix(name: &str, rows: &[Vec<usize>]) {
    println!("{name} =");
    for row in rows {
        println!("  {}", row.iter().join(" "));
    }
}

fn check_example(failures: &mut Vec<String>) -> CliResult {
    let pi = CyclicGenerator::from_cycle(&[0, 3, 1, 4, 2]).map_err(Failure::usage)?;
    let iw = build_iw(5, 3, &pi).map_err(Failure::usage)?;
    let is = build_is(5, 3, 5, &pi).map_err(Failure::usage)?;
    println!("Example: e = n = 5, p = 3, pi = {pi}");
    print_matrix("I_w", &iw);
    print_matrix("I_s", &is.rows);
    let ok_w = iw.iter().map(Vec::as_slice).eq(EXAMPLE_IW.iter().map(|r| &r[..]));
    let ok_s = is.rows.iter().map(Vec::as_slice).eq(EXAMPLE_IS.iter().map(|r| &r[..]));
    if !(ok_w && ok_s) {
        failures.push("example I_w/I_s differ from the published matrices".into());
    }
    let q7 = PrimeField::new(7).map_err(Failure::usage)?;
    for z in 1..=2 {
        let plan = build_plan(5, 5, 3, z, &pi).map_err(Failure::usage)?;
        let report = privacy_audit(&plan, q7).map_err(Failure::usage)?;
        println!(
            "example privacy (z = {z}, k = {}, q = 7): {} subsets, {} histograms, {}",
            plan.k,
            report.subsets_checked,
            report.histograms_checked,
            if report.passed() { "uniform" } else { "LEAKS" }
        );
        if !report.passed() {
            failures.push(format!("example plan leaks at z = {z}"));
        }
    }
    Ok(())
}

/// Smallest small prime that supports `n` distinct nonzero points.
fn audit_field(n: usize) -> Option<PrimeField> {
    [7u64, 11, 13, 17, 19, 23]
        .into_iter()
        .find(|&q| q > n as u64)
        .and_then(|q| PrimeField::new(q).ok())
}

fn check_privacy(plan: &AssignmentPlan, failures: &mut Vec<String>) -> CliResult {
    if plan.z == 0 {
        println!("privacy: vacuous (z = 0)");
        return Ok(());
    }
    // Structural part: no z nodes see k shares.
    for nodes in (0..plan.e).combinations(plan.z.min(plan.e)) {
        let view = eavesdropper_view(plan, &nodes).map_err(Failure::usage)?;
        if view.len() >= plan.k {
            failures.push(format!(
                "privacy: nodes {nodes:?} jointly hold {} >= k = {} shares",
                view.len(),
                plan.k
            ));
            return Ok(());
        }
    }
    let field = audit_field(plan.n)
        .filter(|f| f.modulus().checked_pow(plan.k as u32).is_some_and(|w| w <= LEAKAGE_ENUMERATION_LIMIT / 50));
    match field {
        Some(field) => {
            let report = privacy_audit(plan, field).map_err(Failure::usage)?;
            println!(
                "privacy: {} subsets, {} histograms at q = {}: {}",
                report.subsets_checked,
                report.histograms_checked,
                field.modulus(),
                if report.passed() { "uniform" } else { "LEAKS" }
            );
            if !report.passed() {
                failures.push(format!("privacy audit failed for {:?}", report.failures[0].0));
            }
        }
        None => println!(
            "privacy: every {}-subset sees at most k - 1 = {} shares (leakage enumeration skipped, q^k too large)",
            plan.z,
            plan.k - 1
        ),
    }
    Ok(())
}

fn check_functional(
    plan: &AssignmentPlan,
    cfg: &ExperimentConfig,
    failures: &mut Vec<String>,
) -> CliResult {
    let field = PrimeField::new(cfg.q).map_err(Failure::usage)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (rows, r, users) = (2 * plan.e + 1, 4, 3);
    let w = FieldMatrix::random(field, rows, r, &mut rng);
    let data: Vec<UserData> = (0..users)
        .map(|_| UserData::new((0..r).map(|_| field.random(&mut rng)).collect()))
        .collect();
    let x = FieldMatrix::from_fn(field, r, users, |row, col| data[col].x[row]);
    let expected = w.mul(&x).map_err(Failure::usage)?;
    let public = PublicMatrix::new(w, plan.e).map_err(Failure::usage)?;
    match run_functional(&data, &public, plan, field, cfg.seed) {
        Ok(run) if run.recovered == expected => {
            println!("functional: W x_i recovered for {users} users over GF({})", cfg.q)
        }
        Ok(_) => failures.push("functional: decoded products differ from W x_i".into()),
        Err(e) => failures.push(format!("functional: {e}")),
    }
    Ok(())
}

fn cmd_verify(cfg: &ExperimentConfig, inject_fault: bool) -> CliResult {
    let mut failures = Vec::new();
    check_example(&mut failures)?;
    println!();

    let mut plan = configured_plan(cfg)?;
    if inject_fault {
        // Node 0 receives every share, everyone else none.
        let mut cols = vec![Vec::new(); plan.e];
        cols[0] = (0..plan.n).collect();
        plan = plan.with_share_columns(cols);
    }
    println!("Configured plan: {plan}");
    match verify_coverage(&plan) {
        Coverage::Complete => println!("coverage: complete"),
        Coverage::Missing { share, partitions } => failures.push(format!(
            "coverage: share {share} never meets partitions {partitions:?}"
        )),
    }
    check_privacy(&plan, &mut failures)?;
    check_functional(&plan, cfg, &mut failures)?;

    if failures.is_empty() {
        println!("verification passed");
        Ok(())
    } else {
        Err(Failure::Verification(failures))
    }
}

fn cmd_sweep(cfg: &ExperimentConfig) -> CliResult {
    let mut rows = Vec::new();
    let mut push = |scheme: Scheme, z: usize, gamma: f64, res: privedge::optimizer::OptimizationResult| {
        let b = res.best;
        rows.push(format!(
            "{},{z},{gamma},{:.6},{:.6},{},{},{},{}",
            scheme.label(cfg.upload),
            b.mean,
            b.se,
            b.e,
            b.n,
            b.p,
            b.t
        ));
    };
    for &z in &cfg.z {
        for &gamma in &cfg.gamma {
            let res = optimize(&cfg.params(gamma, z), cfg.trials, cfg.seed).map_err(Failure::usage)?;
            push(Scheme::Private, z, gamma, res);
        }
    }
    for &gamma in &cfg.gamma {
        let res =
            optimize_baseline(&cfg.params(gamma, 0), cfg.trials, cfg.seed).map_err(Failure::usage)?;
        push(Scheme::Baseline, 0, gamma, res);
    }
    with_output(cfg.out.as_deref(), |w| {
        writeln!(w, "scheme,z,gamma,cost,se,e,n,p,t")?;
        rows.iter().try_for_each(|r| writeln!(w, "{r}"))
    })
}

fn cmd_optimize(cfg: &ExperimentConfig, baseline: bool) -> CliResult {
    let gamma = first_gamma(cfg)?;
    let z = if baseline { 0 } else { cfg.z.first().copied().unwrap_or(0) };
    let params = cfg.params(gamma, z);
    let res = if baseline {
        optimize_baseline(&params, cfg.trials, cfg.seed)
    } else if cfg.e.is_some() || cfg.n.is_some() || cfg.p.is_some() {
        let plans: Vec<_> = enumerate_space(&params)
            .map_err(Failure::usage)?
            .into_iter()
            .filter(|pl| {
                cfg.e.is_none_or(|e| e == pl.e)
                    && cfg.n.is_none_or(|n| n == pl.n)
                    && cfg.p.is_none_or(|p| p == pl.p)
            })
            .collect();
        if plans.is_empty() {
            return Err(Failure::Usage(format!(
                "no feasible plan with the requested e/n/p at z = {z} (k ≤ n ≤ e, p ≤ mu e)"
            )));
        }
        SetupBank::new(&params, params.e_max, cfg.trials, cfg.seed)
            .and_then(|bank| optimize_plans(&plans, Scheme::Private, &params, &bank, cfg.seed))
    } else {
        optimize(&params, cfg.trials, cfg.seed)
    }
    .map_err(Failure::usage)?;
    println!("z={z} gamma={gamma} {res}");
    if let Some(path) = &cfg.out {
        with_output(Some(path), |w| res.write_csv(w))?;
    }
    Ok(())
}

fn cmd_schedule_dump(
    cfg: &ExperimentConfig,
    t: Option<usize>,
    zero_setup: bool,
    baseline: bool,
) -> CliResult {
    let gamma = first_gamma(cfg)?;
    let e = cfg.e.unwrap_or(cfg.e_max);
    let setup = if zero_setup {
        SetupTimes::zeros(e)
    } else {
        sample_setup_times(cfg.eta, cfg.tau, e, cfg.seed).map_err(Failure::usage)?
    };
    let trace = if baseline {
        let params = cfg.params(gamma, 0);
        let p = cfg.p.unwrap_or_else(|| params.max_storage(e).clamp(1, e));
        let config = BaselineConfig {
            e,
            p,
            wait: t.unwrap_or(1),
            broadcast_upload: cfg.upload,
        };
        simulate_nonprivate(&params, &config, &setup)
    } else {
        let plan = configured_plan(cfg)?;
        let params = cfg.params(gamma, plan.z);
        simulate(&plan, &params, &setup, StopRule { t: t.unwrap_or(plan.k) })
    }
    .map_err(Failure::usage)?;
    let segs = segments(&trace);
    with_output(cfg.out.as_deref(), |w| {
        writeln!(w, "# comp={:.6} comm={:.6} total={:.6}", trace.comp, trace.comm, overall_latency(&trace))?;
        writeln!(
            w,
            "# stop node={} slot={} position={}",
            trace.stop.node, trace.stop.slot, trace.stop.position
        )?;
        write_segments(&segs, &mut *w)
    })
}

fn run(cli: Cli) -> CliResult {
    let cfg = load_config(&cli.opts)?;
    match cli.command {
        Command::Verify { inject_fault } => cmd_verify(&cfg, inject_fault),
        Command::Sweep => cmd_sweep(&cfg),
        Command::Optimize { baseline } => cmd_optimize(&cfg, baseline),
        Command::ScheduleDump {
            t,
            zero_setup,
            baseline,
        } => cmd_schedule_dump(&cfg, t, zero_setup, baseline),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msgs)) => {
            for m in msgs {
                eprintln!("verification failed: {m}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
