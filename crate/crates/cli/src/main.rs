mod spec;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use robustify::checks::{run_suite, Suite};
use robustify::metrics::{
    hv_mc, r2_utility, rts_hv, rts_r2, str_hv, str_r2, HvConfig, MetricReport, Mode, R2Config,
};
use robustify::problems::{self, AcquisitionConfig, SyntheticSpec};
use robustify::solve::{
    greedy_subset, run_acquisition, solve_rts, solve_str, union_robust_front, AcquisitionProblem,
    AcquisitionSettings, CardinalityBudget, Strategy,
};
use robustify::surface::{surface_export, write_surface_csv};
use robustify::{
    direction_grid, pf_statistic, polar_of_points, rts_front, str_front, DirectionGrid, GridMode, ObjectiveTable,
    Relation, Scalariser,
};

const RISK_HELP: &str = "Risk spec. Univariate: worst, best, exp, var:0.9, cvar:0.9, dr:family.json. \
Multivariate: id, cw:exp,exp,var:0.9, mvexp, mvworst, mvbest, mvar:0.9, mvdr, pfstat:cvar:0.9. \
Univariate specs are lifted where a multivariate one is needed (exp -> mvexp, var:A -> mvar:A).";

#[derive(Parser)]
#[command(name = "robustify", version, about = "Robust multi-objective fronts, metrics and solvers")]
struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, global = true, env = "RTSSTR_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic objective table.
    Gen(GenArgs),
    /// Compute a front as a polar surface CSV.
    Front(FrontArgs),
    /// Evaluate a robust metric and print a JSON report.
    Metric(MetricArgs),
    /// Solve a scalarised robust problem or select a subset.
    Solve(SolveArgs),
    /// Run seeded acquisition experiments and write a regret trace.
    Acquire(AcquireArgs),
    /// Run randomised property suites.
    Check(CheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// The rocket-style three-objective stand-in.
    Rocket,
    /// The two-objective target regression instance.
    Toy,
}

#[derive(Args)]
struct GenArgs {
    /// JSON generator spec.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    seed: u64,
    /// Table CSV path; the JSON sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FrontKind {
    Empirical,
    Ps,
    Rts,
    Str,
}

#[derive(Args)]
struct GridArgs {
    /// Reference vector, comma separated. Defaults to the box minimum
    /// minus a tenth of the range.
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    /// Number of directions.
    #[arg(long = "grid", default_value_t = 128)]
    grid: usize,
    /// Sample directions uniformly instead of the deterministic grid.
    #[arg(long)]
    uniform: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FrontArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long, value_enum)]
    kind: FrontKind,
    #[arg(long, help = RISK_HELP)]
    risk: Option<String>,
    /// Input indices, comma separated. Defaults to all inputs.
    #[arg(long)]
    subset: Option<String>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricKind {
    R2,
    Igd,
    Igdplus,
    Hv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Plain,
    Rts,
    Str,
}

#[derive(Args)]
struct MetricArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long, value_enum)]
    metric: MetricKind,
    #[arg(long, value_enum, default_value = "plain")]
    mode: ModeArg,
    #[arg(long, help = RISK_HELP)]
    risk: Option<String>,
    #[arg(long)]
    subset: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    /// JSON array of target points for igd and igdplus.
    #[arg(long)]
    targets: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    /// Monte-Carlo directions for hv and r2.
    #[arg(long = "J", default_value_t = 10_000)]
    j: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolveMode {
    Rts,
    Str,
    Union,
    Greedy,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RelationArg {
    Weak,
    Strict,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long, value_enum)]
    mode: SolveMode,
    /// len:ETA:LAMBDA, linear:W, lp:TARGET:W:P, igd:TARGET:P:Q, igdplus:TARGET:P:Q or wigd:TARGET:W.
    #[arg(long, allow_hyphen_values = true)]
    scalariser: Option<String>,
    #[arg(long, help = RISK_HELP)]
    risk: String,
    #[arg(long, value_enum, default_value = "weak")]
    relation: RelationArg,
    /// Subset size for greedy selection.
    #[arg(long)]
    budget: Option<usize>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Hvi,
    Random,
}

#[derive(Args)]
struct AcquireArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    table: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// JSON acquisition config; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    strategy: StrategyArg,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    initial: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Observation noise as a fraction of each objective's range.
    #[arg(long)]
    noise_fraction: Option<f64>,
    /// Directions used to score candidates.
    #[arg(long)]
    directions: Option<usize>,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Run r uses seed + r.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    All,
    Coherency,
    Bounds,
    Commutation,
    Front,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: SuiteArg,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long)]
    seed: u64,
}

enum Failure {
    Usage(String),
    Check,
}

impl From<robustify::Error> for Failure {
    fn from(e: robustify::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<String> for Failure {
    fn from(e: String) -> Self {
        Failure::Usage(e)
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn output(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| format!("{}: {e}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, path: &Option<PathBuf>) -> CliResult {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| e.to_string())?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn load(path: &Path) -> CliResult<ObjectiveTable> {
    problems::load_table(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn default_reference(table: &ObjectiveTable) -> Vec<f64> {
    let (lo, hi) = table.bounds();
    lo.iter()
        .zip(&hi)
        .map(|(l, h)| {
            let span = if h > l { h - l } else { l.abs().max(1.0) };
            l - 0.1 * span
        })
        .collect()
}

fn reference(eta: &Option<String>, table: &ObjectiveTable) -> CliResult<Vec<f64>> {
    let eta = match eta {
        Some(s) => spec::vector(s)?,
        None => {
            let eta = default_reference(table);
            eprintln!("using reference {eta:?}");
            eta
        }
    };
    if eta.len() != table.dim() {
        return Err(Failure::Usage(format!("reference has {} entries, table has {} objectives", eta.len(), table.dim())));
    }
    Ok(eta)
}

fn subset(s: &Option<String>, table: &ObjectiveTable) -> CliResult<Vec<usize>> {
    match s {
        None => Ok(table.all_inputs()),
        Some(s) => {
            let v = s
                .split(',')
                .map(|i| i.trim().parse::<usize>().map_err(|_| format!("bad input index {i:?}")))
                .collect::<Result<Vec<_>, _>>()?;
            table.check_subset(&v)?;
            Ok(v)
        }
    }
}

fn grid(args: &GridArgs, m: usize) -> CliResult<DirectionGrid> {
    let mode = if args.uniform {
        let seed = args.seed.ok_or_else(|| Failure::Usage("--uniform requires --seed".into()))?;
        GridMode::UniformSample { seed }
    } else {
        GridMode::Deterministic
    };
    Ok(direction_grid(m, args.grid, mode)?)
}

fn usage_text(f: Failure) -> String {
    match f {
        Failure::Usage(s) => s,
        Failure::Check => "check failed".into(),
    }
}

/// Reference and grid for `pfstat` from the command's grid flags.
fn grid_context(args: &GridArgs, table: &ObjectiveTable) -> Result<(Vec<f64>, DirectionGrid), String> {
    let eta = reference(&args.eta, table).map_err(usage_text)?;
    Ok((eta, grid(args, table.dim()).map_err(usage_text)?))
}

/// Reference and a 128-direction deterministic grid for `pfstat`.
fn pfstat_context(eta: &Option<String>, table: &ObjectiveTable) -> Result<(Vec<f64>, DirectionGrid), String> {
    let eta = reference(eta, table).map_err(usage_text)?;
    let g = direction_grid(table.dim(), 128, GridMode::Deterministic).map_err(|e| e.to_string())?;
    Ok((eta, g))
}

fn all_outcomes(table: &ObjectiveTable, subset: &[usize]) -> Vec<Vec<f64>> {
    subset.iter().flat_map(|&i| table.outcomes(i).iter().map(<[f64]>::to_vec).collect::<Vec<_>>()).collect()
}

fn cmd_gen(a: GenArgs) -> CliResult {
    let mut spec: SyntheticSpec = match (&a.spec, a.preset) {
        (Some(p), _) => problems::read_json(p).map_err(|e| format!("{}: {e}", p.display()))?,
        (None, Some(Preset::Rocket)) => problems::rocket_spec(),
        (None, Some(Preset::Toy)) => problems::toy_target_instance().0,
        (None, None) => return Err(Failure::Usage("--spec or --preset is required".into())),
    };
    spec.seed = a.seed;
    let table = problems::generate(&spec)?;
    problems::save_table(&table, &a.out)?;
    eprintln!(
        "wrote {} inputs x {} scenarios x {} objectives to {}",
        table.n_inputs(),
        table.n_scenarios(),
        table.dim(),
        a.out.display()
    );
    Ok(())
}

fn cmd_front(a: FrontArgs) -> CliResult {
    let table = load(&a.table)?;
    let m = table.dim();
    let eta = reference(&a.grid.eta, &table)?;
    let g = grid(&a.grid, m)?;
    let sub = subset(&a.subset, &table)?;
    let need_risk = || a.risk.as_deref().ok_or_else(|| Failure::Usage("--risk is required for this front".into()));
    let surface = match a.kind {
        FrontKind::Empirical => polar_of_points(&all_outcomes(&table, &sub), &eta, &g)?,
        FrontKind::Ps => {
            let rho = spec::uni(need_risk()?)?;
            let t = if sub.len() == table.n_inputs() { table.clone() } else { table.select_inputs(&sub)? };
            pf_statistic(&t, &rho, &eta, &g)?
        }
        FrontKind::Rts => {
            let mrho = spec::multi(need_risk()?, m, || Ok((eta.clone(), g.clone())))?;
            rts_front(&table, &sub, &mrho, &eta, &g)?
        }
        FrontKind::Str => str_front(&table, &sub, &spec::uni(need_risk()?)?, &eta, &g)?,
    };
    if surface.is_degenerate() {
        eprintln!("warning: degenerate surface (every length is zero); the reference is not dominated");
    }
    let mut w = output(&a.out)?;
    write_surface_csv(&surface_export(&surface), m, &mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_metric(a: MetricArgs) -> CliResult {
    let table = load(&a.table)?;
    let m = table.dim();
    let sub = subset(&a.subset, &table)?;
    let mode = match a.mode {
        ModeArg::Plain => Mode::Plain,
        ModeArg::Rts => Mode::Rts,
        ModeArg::Str => Mode::Str,
    };
    let risk_text = match (mode, &a.risk) {
        (Mode::Plain, _) => None,
        (_, Some(r)) => Some(r.clone()),
        (_, None) => return Err(Failure::Usage("--risk is required in rts and str modes".into())),
    };
    let mut params = json!({ "risk": risk_text });
    let (value, se, seed, j) = match a.metric {
        MetricKind::Hv | MetricKind::R2 => {
            let seed = a.seed.ok_or_else(|| Failure::Usage("Monte-Carlo metrics require --seed".into()))?;
            let eta = reference(&a.eta, &table)?;
            params["eta"] = json!(eta);
            let cfg = HvConfig { eta: eta.clone(), j: a.j, seed };
            let g = cfg.grid()?;
            if a.metric == MetricKind::Hv {
                let est = match mode {
                    Mode::Plain => hv_mc(&all_outcomes(&table, &sub), &cfg)?,
                    Mode::Rts => {
                        let mrho = spec::multi(risk_text.as_deref().unwrap(), m, || Ok((eta.clone(), g.clone())))?;
                        rts_hv(&table, &sub, &mrho, &cfg)?
                    }
                    Mode::Str => str_hv(&table, &sub, &spec::uni(risk_text.as_deref().unwrap())?, &cfg)?,
                };
                params["variance_bound"] = json!(est.variance_bound);
                (est.value, Some(est.se), Some(seed), Some(a.j))
            } else {
                let scalarisers = g.iter().map(|l| Scalariser::length(eta.clone(), l.clone())).collect();
                let r2 = R2Config::uniform(scalarisers)?;
                let v = match mode {
                    Mode::Plain => r2_utility(&all_outcomes(&table, &sub), &r2)?,
                    Mode::Rts => {
                        let mrho = spec::multi(risk_text.as_deref().unwrap(), m, || Ok((eta.clone(), g.clone())))?;
                        rts_r2(&table, &sub, &mrho, &r2)?
                    }
                    Mode::Str => str_r2(&table, &sub, &spec::uni(risk_text.as_deref().unwrap())?, &r2)?,
                };
                (v, None, Some(seed), Some(a.j))
            }
        }
        MetricKind::Igd | MetricKind::Igdplus => {
            let path = a.targets.as_ref().ok_or_else(|| Failure::Usage("--targets is required".into()))?;
            let targets: Vec<Vec<f64>> =
                problems::read_json(path).map_err(|e| format!("{}: {e}", path.display()))?;
            if targets.is_empty() || targets.iter().any(|t| t.len() != m) {
                return Err(Failure::Usage(format!("targets must be non-empty {m}-vectors")));
            }
            params["p"] = json!(a.p);
            params["q"] = json!(a.q);
            let scalarisers = targets
                .iter()
                .map(|t| {
                    let (target, p, q) = (t.clone(), a.p, a.q);
                    if a.metric == MetricKind::Igd {
                        Scalariser::Igd { target, p, q }
                    } else {
                        Scalariser::IgdPlus { target, p, q }
                    }
                })
                .collect();
            let cfg = R2Config::uniform(scalarisers)?;
            let v = match mode {
                Mode::Plain => r2_utility(&all_outcomes(&table, &sub), &cfg)?,
                Mode::Rts => {
                    let mrho = spec::multi(risk_text.as_deref().unwrap(), m, || pfstat_context(&a.eta, &table))?;
                    rts_r2(&table, &sub, &mrho, &cfg)?
                }
                Mode::Str => str_r2(&table, &sub, &spec::uni(risk_text.as_deref().unwrap())?, &cfg)?,
            };
            (v, None, None, None)
        }
    };
    let metric = match a.metric {
        MetricKind::R2 => "r2",
        MetricKind::Igd => "igd",
        MetricKind::Igdplus => "igdplus",
        MetricKind::Hv => "hv",
    };
    let report = MetricReport { metric: metric.into(), mode, value, se, seed, j, params };
    write_json(&report, &a.out)
}

fn cmd_solve(a: SolveArgs) -> CliResult {
    let table = load(&a.table)?;
    let m = table.dim();
    let scalariser = || -> CliResult<Scalariser> {
        let s = a.scalariser.as_deref().ok_or_else(|| Failure::Usage("--scalariser is required".into()))?;
        let s = spec::scalariser(s)?;
        if s.dim() != m {
            return Err(Failure::Usage(format!("scalariser has dimension {}, table has {m} objectives", s.dim())));
        }
        Ok(s)
    };
    match a.mode {
        SolveMode::Rts => {
            let s = scalariser()?;
            let mrho = spec::multi(&a.risk, m, || grid_context(&a.grid, &table))?;
            let r = solve_rts(&table, &s, &mrho)?;
            write_json(&r, &a.out)
        }
        SolveMode::Str => {
            let r = solve_str(&table, &scalariser()?, &spec::uni(&a.risk)?)?;
            write_json(&r, &a.out)
        }
        SolveMode::Union => {
            let mrho = spec::multi(&a.risk, m, || grid_context(&a.grid, &table))?;
            let rel = match a.relation {
                RelationArg::Weak => Relation::Weak,
                RelationArg::Strict => Relation::Strict,
            };
            let r = union_robust_front(&table, &mrho, rel)?;
            write_json(&r, &a.out)
        }
        SolveMode::Greedy => {
            let p = a.budget.ok_or_else(|| Failure::Usage("--budget is required for greedy".into()))?;
            let eta = reference(&a.grid.eta, &table)?;
            let g = grid(&a.grid, m)?;
            let r = greedy_subset(&table, &spec::uni(&a.risk)?, &eta, &g, CardinalityBudget::new(p)?)?;
            write_json(&r, &a.out)
        }
    }
}

fn cmd_acquire(a: AcquireArgs) -> CliResult {
    let (table, preset_cfg) = match (&a.table, a.preset) {
        (Some(p), _) => (load(p)?, None),
        (None, Some(Preset::Rocket)) => (problems::generate(&problems::rocket_spec())?, Some(AcquisitionConfig::rocket())),
        (None, Some(Preset::Toy)) => (problems::generate(&problems::toy_target_instance().0)?, None),
        (None, None) => return Err(Failure::Usage("--table or --preset is required".into())),
    };
    let file_cfg: Option<AcquisitionConfig> = match &a.config {
        Some(p) => Some(problems::read_json(p).map_err(|e| format!("{}: {e}", p.display()))?),
        None => None,
    };
    let cfg = file_cfg.or(preset_cfg);
    let base = AcquisitionSettings::default();
    let settings = AcquisitionSettings {
        budget: a.budget.or(cfg.as_ref().map(|c| c.budget)).unwrap_or(base.budget),
        initial: a.initial.or(cfg.as_ref().map(|c| c.initial)).unwrap_or(base.initial),
        kappa: a.kappa.or(cfg.as_ref().map(|c| c.kappa)).unwrap_or(base.kappa),
        beta: a.beta.or(cfg.as_ref().map(|c| c.beta)).unwrap_or(base.beta),
        alpha: a.alpha.or(cfg.as_ref().map(|c| c.alpha)).unwrap_or(base.alpha),
        acquisition_directions: a.directions.unwrap_or(base.acquisition_directions),
    };
    let eta = match (&a.eta, &cfg) {
        (Some(_), _) | (None, None) => reference(&a.eta, &table)?,
        (None, Some(c)) => c.eta.clone(),
    };
    let noise_fraction = a.noise_fraction.or(cfg.as_ref().map(|c| c.noise_fraction));
    let mut problem = AcquisitionProblem::new(table, eta)?;
    if let Some(f) = noise_fraction {
        if !(f >= 0.0) {
            return Err(Failure::Usage(format!("noise fraction {f} must be >= 0")));
        }
        let (lo, hi) = problem.table.bounds();
        problem.noise_sd = lo.iter().zip(&hi).map(|(l, h)| f * (h - l)).collect();
    }
    let strategy = match a.strategy {
        StrategyArg::Hvi => Strategy::StrHviUcb,
        StrategyArg::Random => Strategy::RandomSearch,
    };
    let seeds: Vec<u64> = (0..a.runs as u64).map(|r| a.seed.wrapping_add(r)).collect();
    let trace = run_acquisition(&problem, strategy, &settings, &seeds)?;
    let mut w = output(&a.out)?;
    for rec in &trace {
        serde_json::to_writer(&mut w, rec).map_err(|e| e.to_string())?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_check(a: CheckArgs) -> CliResult {
    let suites: Vec<Suite> = match a.suite {
        SuiteArg::All => Suite::ALL.to_vec(),
        SuiteArg::Coherency => vec![Suite::Coherency],
        SuiteArg::Bounds => vec![Suite::Bounds],
        SuiteArg::Commutation => vec![Suite::Commutation],
        SuiteArg::Front => vec![Suite::Front],
    };
    let mut failed = false;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for s in suites {
        let r = run_suite(s, a.trials, a.seed)?;
        writeln!(out, "{}: {} passed, {} failed", r.suite, r.passed, r.failed)?;
        if let Some(f) = &r.first_failure {
            writeln!(out, "{}", json!({ "suite": r.suite, "first_failure": f }))?;
        }
        failed |= !r.ok();
    }
    if failed {
        Err(Failure::Check)
    } else {
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Front(a) => cmd_front(a),
        Command::Metric(a) => cmd_metric(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Acquire(a) => cmd_acquire(a),
        Command::Check(a) => cmd_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
