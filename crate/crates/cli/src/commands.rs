//! Subcommand definitions and their implementations.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fairhorizon::closedform::{reverse_lex_plan, simplicial_bounds, sparse_bounds, sparse_plan, spfa_simplex};
use fairhorizon::instgen::{generate, DemandMode, GeneratorConfig, DEFAULT_BASE_FRACTION, DEFAULT_DENSITY};
use fairhorizon::oracle::{instance_oracle, DEFAULT_ORACLE_BUDGET};
use fairhorizon::transition::{hybrid_solve, HybridOptions, HybridResult, DEFAULT_CP_NODE_BUDGET};
use fairhorizon::{validate_plan, Instance, Q};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::files::{read_json, to_json, write_text, InstanceFile, PlanFile};
use crate::metrics::{average, write_rows, Measures, MetricsRow};

pub const TIME_LIMIT_ENV: &str = "FAIRHORIZON_TIME_LIMIT";
pub const DEFAULT_HORIZON: usize = 30;

#[derive(Debug, Parser)]
#[command(name = "fairhorizon", version, about = "Fair ambulance allocation over time")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic instance.
    Generate(GenerateArgs),
    /// Solve with transition limits.
    Solve(SolveArgs),
    /// Solve without transition limits.
    SolveAwt(SolveAwtArgs),
    /// Closed-form quantities for simplex-shaped allocation sets.
    ClosedForm(ClosedFormArgs),
    /// Exhaustive optimum of a tiny instance.
    Oracle(OracleArgs),
    /// Solve a grid of instances, transition ratios and coverage floors.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DemandChoice {
    Quartile,
    Cluster,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 50)]
    pub zones: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_BASE_FRACTION)]
    pub base_fraction: f64,
    #[arg(long, default_value_t = DEFAULT_DENSITY)]
    pub density: f64,
    #[arg(long, default_value_t = 0.95)]
    pub coverage_floor: f64,
    #[arg(long, default_value_t = 10.0)]
    pub window: f64,
    #[arg(long)]
    pub parent_intensity: Option<f64>,
    #[arg(long, default_value_t = 8.0)]
    pub mean_children: f64,
    #[arg(long, default_value_t = 1.0)]
    pub cluster_radius: f64,
    #[arg(long, value_enum, default_value_t = DemandChoice::Quartile)]
    pub demand: DemandChoice,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    pub horizon: usize,
    /// Seconds; overridden by the FAIRHORIZON_TIME_LIMIT variable.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Node budget of each walk search.
    #[arg(long, default_value_t = DEFAULT_CP_NODE_BUDGET)]
    pub budget_nodes: u64,
    /// Leave time_s empty so repeated runs give identical files.
    #[arg(long)]
    pub stable: bool,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Plan output file.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Append the metrics row to this CSV, writing the header if new.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Per-iteration bounds as CSV.
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Instance label in the metrics row; the file stem by default.
    #[arg(long)]
    pub id: Option<String>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    /// Maximum transition as a fraction of the fleet, r = round(mt * m).
    #[arg(long, conflicts_with = "r")]
    pub mt: Option<f64>,
    /// Ambulances allowed to relocate per period; the file's default_r when
    /// neither this nor --mt is given.
    #[arg(long)]
    pub r: Option<u32>,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SolveAwtArgs {
    pub instance: PathBuf,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ClosedFormArgs {
    /// Benefit rates, comma separated; integers for the integer simplex,
    /// rationals allowed with --continuous.
    #[arg(long, value_delimiter = ',', required = true)]
    pub rates: Vec<String>,
    /// Capacity of the integer simplex.
    #[arg(long, default_value_t = 1)]
    pub cap: u64,
    /// Use the sparse simplex with this many nonzero entries per period.
    #[arg(long)]
    pub sparsity: Option<usize>,
    /// Also build the constructive plan under this inefficiency cap.
    #[arg(long)]
    pub eta_bar: Option<String>,
    /// Single-period allocation on the continuous simplex.
    #[arg(long)]
    pub continuous: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub instance: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub horizon: usize,
    /// Transition limit; unlimited when absent.
    #[arg(long)]
    pub r: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_ORACLE_BUDGET)]
    pub budget: u64,
    #[arg(long)]
    pub plan: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(required = true)]
    pub instances: Vec<PathBuf>,
    /// `start:end:step` or a comma separated list.
    #[arg(long, default_value = "0.1:1.0:0.1")]
    pub mt_grid: String,
    /// Coverage floors, comma separated; the files' own floors when absent.
    #[arg(long, value_delimiter = ',')]
    pub coverage_floor: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// CSV output; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::SolveAwt(a) => cmd_solve_awt(&a),
        Command::ClosedForm(a) => cmd_closed_form(&a),
        Command::Oracle(a) => cmd_oracle(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    }
}

fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_generate(a: &GenerateArgs) -> CliResult<()> {
    let cfg = GeneratorConfig {
        zones: a.zones,
        window: a.window,
        parent_intensity: a.parent_intensity,
        mean_children: a.mean_children,
        cluster_radius: a.cluster_radius,
        base_fraction: a.base_fraction,
        density: a.density,
        coverage_floor: a.coverage_floor,
        horizon: DEFAULT_HORIZON,
        demand_mode: match a.demand {
            DemandChoice::Quartile => DemandMode::DensityQuartile,
            DemandChoice::Cluster => DemandMode::Cluster,
        },
        seed: a.seed,
    };
    let g = generate(&cfg)?;
    let positions = g.positions.iter().map(|&(x, y)| [x, y]).collect();
    let file = InstanceFile::from_instance(&g.instance, Some(positions));
    emit(a.output.as_deref(), &to_json(&file))
}

fn time_limit(flag: Option<f64>) -> CliResult<Option<Duration>> {
    let seconds = match std::env::var(TIME_LIMIT_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{TIME_LIMIT_ENV} must be a number of seconds")))?,
        ),
        Err(_) => flag,
    };
    match seconds {
        Some(s) if !(s.is_finite() && s > 0.0) => Err(CliError::Usage("time limit must be positive".into())),
        Some(s) => Ok(Some(Duration::from_secs_f64(s))),
        None => Ok(None),
    }
}

fn load_instance(path: &Path, horizon: usize) -> CliResult<Instance> {
    if horizon == 0 {
        return Err(CliError::Usage("--horizon must be at least 1".into()));
    }
    read_json::<InstanceFile>(path)?.to_instance(horizon)
}

fn transitions_for(mt: f64, fleet: u32) -> CliResult<u32> {
    if !(0.0..=1.0).contains(&mt) {
        return Err(CliError::Usage("--mt must lie in [0, 1]".into()));
    }
    Ok((mt * fleet as f64).round() as u32)
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "instance".into(), |s| s.to_string_lossy().into_owned())
}

fn solve_cell(inst: &Instance, r: u32, b: &BudgetArgs) -> CliResult<HybridResult> {
    let options = HybridOptions {
        time_limit: time_limit(b.time_limit)?,
        cp_node_budget: b.budget_nodes,
        max_iterations: None,
    };
    let res = hybrid_solve(inst, b.horizon, r, &options)?;
    validate_plan(inst, res.plan(), b.horizon, Some(r))?;
    Ok(res)
}

fn append_metrics(path: &Path, row: &MetricsRow) -> CliResult<()> {
    let fresh = !path.exists();
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| CliError::io(path, e))?;
    write_rows(file, std::slice::from_ref(row), fresh)
}

fn events_csv(res: &HybridResult, stable: bool) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iteration", "lb", "ub", "support", "cp_nodes", "elapsed_s"])?;
    for e in &res.stats.events {
        w.write_record([
            e.iteration.to_string(),
            format!("{:.6}", e.lower),
            e.upper.to_string(),
            e.support_size.to_string(),
            e.cp_nodes.to_string(),
            if stable { String::new() } else { format!("{:.3}", e.elapsed.as_secs_f64()) },
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn finish_solve(path: &Path, inst: &Instance, r: u32, mt: f64, b: &BudgetArgs, out: &OutputArgs) -> CliResult<()> {
    let res = solve_cell(inst, r, b)?;
    let row = MetricsRow {
        instance: out.id.clone().unwrap_or_else(|| stem(path)),
        mt,
        f: inst.coverage_floor,
        measures: Some(Measures::from_result(&res, !b.stable)),
    };
    if let Some(p) = &out.plan {
        write_text(p, &to_json(&PlanFile::from_plan(res.plan())))?;
    }
    if let Some(p) = &out.events {
        write_text(p, &events_csv(&res, b.stable)?)?;
    }
    match &out.metrics {
        Some(p) => append_metrics(p, &row)?,
        None => write_rows(std::io::stdout().lock(), &[row], true)?,
    }
    if !res.stats.solved {
        return Err(CliError::Budget(format!(
            "stopped with lower bound {} and objective {}",
            res.stats.final_lower, res.stats.final_upper
        )));
    }
    Ok(())
}

pub fn cmd_solve(a: &SolveArgs) -> CliResult<()> {
    let inst = load_instance(&a.instance, a.budget.horizon)?;
    let (r, mt) = match (a.mt, a.r) {
        (Some(mt), _) => (transitions_for(mt, inst.fleet)?, mt),
        (None, Some(r)) => (r, r as f64 / inst.fleet as f64),
        (None, None) => (inst.transition_limit, inst.transition_limit as f64 / inst.fleet as f64),
    };
    finish_solve(&a.instance, &inst, r, mt, &a.budget, &a.output)
}

/// With `r = m` any two placements are within reach of each other.
pub fn cmd_solve_awt(a: &SolveAwtArgs) -> CliResult<()> {
    let inst = load_instance(&a.instance, a.budget.horizon)?;
    finish_solve(&a.instance, &inst, inst.fleet, 1.0, &a.budget, &a.output)
}

fn parse_q(text: &str) -> CliResult<Q> {
    text.trim()
        .parse::<Q>()
        .map_err(|_| CliError::Usage(format!("cannot parse {text:?} as a rational")))
}

fn strings(v: &[Q]) -> Vec<String> {
    v.iter().map(|q| q.to_string()).collect()
}

#[derive(Serialize)]
struct ContinuousReport {
    allocation: Vec<String>,
    benefit: String,
    inefficiency: String,
}

#[derive(Serialize)]
struct PlanReport {
    periods: Vec<Vec<String>>,
    inefficiency: Vec<String>,
}

#[derive(Serialize)]
struct IntegerReport {
    rates: Vec<u64>,
    cap: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sparsity: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lcm: Option<u64>,
    bar_t: u64,
    min_eta: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    plan: Option<PlanReport>,
}

pub fn cmd_closed_form(a: &ClosedFormArgs) -> CliResult<()> {
    if a.continuous {
        let rates = a.rates.iter().map(|s| parse_q(s)).collect::<CliResult<Vec<_>>>()?;
        let s = spfa_simplex(&rates)?;
        let report = ContinuousReport {
            allocation: strings(&s.allocation),
            benefit: s.benefit.to_string(),
            inefficiency: s.inefficiency.to_string(),
        };
        print!("{}", to_json(&report));
        return Ok(());
    }
    let rates = a
        .rates
        .iter()
        .map(|s| s.trim().parse::<u64>().map_err(|_| CliError::Usage(format!("rate {s:?} must be a positive integer"))))
        .collect::<CliResult<Vec<_>>>()?;
    let eta = a.eta_bar.as_deref().map(parse_q).transpose()?;
    let to_report = |p: fairhorizon::closedform::ClosedFormPlan| PlanReport {
        periods: p.periods.iter().map(|x| strings(x)).collect(),
        inefficiency: strings(&p.inefficiency),
    };
    let report = match a.sparsity {
        Some(k) => {
            let spec = sparse_bounds(&rates, a.cap, k)?;
            let plan = eta.map(|e| sparse_plan(&spec, e)).transpose()?.map(to_report);
            IntegerReport {
                rates,
                cap: a.cap,
                sparsity: Some(k),
                lcm: None,
                bar_t: spec.bar_t as u64,
                min_eta: spec.min_eta.to_string(),
                plan,
            }
        }
        None => {
            let spec = simplicial_bounds(&rates, a.cap)?;
            let plan = eta.map(|e| reverse_lex_plan(&spec, e)).transpose()?.map(to_report);
            IntegerReport {
                rates,
                cap: a.cap,
                sparsity: None,
                lcm: Some(spec.lcm),
                bar_t: spec.bar_t,
                min_eta: spec.min_eta.to_string(),
                plan,
            }
        }
    };
    print!("{}", to_json(&report));
    Ok(())
}

#[derive(Serialize)]
struct OracleReport {
    horizon: usize,
    r: Option<u32>,
    objective: u64,
    range: String,
}

pub fn cmd_oracle(a: &OracleArgs) -> CliResult<()> {
    let inst = load_instance(&a.instance, a.horizon)?;
    let (plan, objective) = instance_oracle(&inst, a.horizon, a.r, a.budget)?;
    validate_plan(&inst, &plan, a.horizon, a.r)?;
    if let Some(p) = &a.plan {
        write_text(p, &to_json(&PlanFile::from_plan(&plan)))?;
    }
    let report = OracleReport {
        horizon: a.horizon,
        r: a.r,
        objective,
        range: Q::new(objective as i128, a.horizon as i128).to_string(),
    };
    print!("{}", to_json(&report));
    Ok(())
}

/// Parses `start:end:step` (inclusive) or a comma separated list.
pub fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("cannot parse grid {text:?}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = text.split(':').collect();
    let grid = match parts.as_slice() {
        [start, end, step] => {
            let (start, end, step) = (num(start)?, num(end)?, num(step)?);
            if !(step > 0.0) || end < start {
                return Err(bad());
            }
            let count = ((end - start) / step + 1e-9).floor() as usize;
            (0..=count).map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9).collect()
        }
        [_] => text.split(',').map(num).collect::<CliResult<Vec<_>>>()?,
        _ => return Err(bad()),
    };
    if grid.is_empty() || grid.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(CliError::Usage("grid values must lie in [0, 1]".into()));
    }
    Ok(grid)
}

pub fn cmd_sweep(a: &SweepArgs) -> CliResult<()> {
    let grid = parse_grid(&a.mt_grid)?;
    if a.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let mut instances = Vec::new();
    for path in &a.instances {
        instances.push((stem(path), load_instance(path, a.budget.horizon)?));
    }
    let floors: Vec<Option<f64>> = if a.coverage_floor.is_empty() {
        vec![None]
    } else {
        a.coverage_floor.iter().map(|&f| Some(f)).collect()
    };
    let mut cells = Vec::new();
    for &floor in &floors {
        for (k, (_, inst)) in instances.iter().enumerate() {
            for &mt in &grid {
                cells.push((k, floor.unwrap_or(inst.coverage_floor), mt));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.workers)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let rows: Vec<MetricsRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(k, f, mt)| {
                let (name, base) = &instances[k];
                let inst = base.with_coverage_floor(f);
                let measures = transitions_for(mt, inst.fleet)
                    .and_then(|r| solve_cell(&inst, r, &a.budget))
                    .map(|res| Measures::from_result(&res, !a.budget.stable));
                if let Err(e) = &measures {
                    eprintln!("{name} mt={mt:.1} f={f:.2}: {e}");
                }
                MetricsRow {
                    instance: name.clone(),
                    mt,
                    f,
                    measures: measures.ok(),
                }
            })
            .collect()
    });

    // Per-instance rows grouped by floor, then one averaged row per
    // (floor, mt) cell.
    let mut table = rows.clone();
    let per_floor = instances.len() * grid.len();
    for chunk in rows.chunks(per_floor) {
        for (g, &mt) in grid.iter().enumerate() {
            let group: Vec<&MetricsRow> = chunk.iter().skip(g).step_by(grid.len()).collect();
            table.extend(average(&group, "avg").map(|row| MetricsRow { mt, ..row }));
        }
    }
    let mut buf = Vec::new();
    write_rows(&mut buf, &table, true)?;
    let text = String::from_utf8(buf).expect("csv output is utf-8");
    match &a.output {
        Some(p) => write_text(p, &text)?,
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::io(Path::new("stdout"), e))?,
    }
    Ok(())
}
