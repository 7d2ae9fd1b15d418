//! `dualmem` command line: closed-form analysis, synthetic traces, grid
//! simulations and SVG reports.

pub mod config;
pub mod error;
pub mod svg;

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dualmem::analysis::{
    self, check_constraints, m_bound, trace_synthetic, BoundReport, Scenario, ScenarioKind, ScenarioSpec, SweepGrid,
};
use dualmem::gridsim::{run_experiment, ExperimentRecord, GridNetwork};
use dualmem::num::rational_to_f64;
use dualmem::sample::{self, SeriesFile};
use dualmem::{DualMemoryAgentF64, Kappa, Rational, SarsaAgentF64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use config::{AgentKind, RunConfig};
pub use error::{CliError, Result};

/// Environment variable that overrides `--seed`.
pub const SEED_ENV: &str = "DUALMEM_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "dualmem",
    version,
    about = "Dual-memory tabular RL: size analysis, traces and grid simulations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the closed-form size ratios over a parameter grid.
    Analyze(AnalyzeArgs),
    /// Step the memory recurrences on a synthetic or replayed state stream.
    Trace(TraceArgs),
    /// Run the grid traffic simulation and record memory growth.
    Simulate(SimulateArgs),
    /// Render size series CSVs as an SVG line chart.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Worst,
    Best,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TraceScenarioArg {
    Worst,
    Best,
    Replay,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioArg,
    /// Action-space sizes, comma separated.
    #[arg(long = "action-size", value_delimiter = ',')]
    pub action_size: Vec<usize>,
    /// Staging ratios, e.g. `1/2,1`.
    #[arg(long, value_delimiter = ',')]
    pub kappa: Vec<String>,
    #[arg(long = "t-stage", value_delimiter = ',')]
    pub t_stage: Vec<u64>,
    /// Worst case: evaluate n = 1..=n-max.
    #[arg(long = "n-max")]
    pub n_max: Option<u64>,
    /// Best case: unique-state counts M, comma separated.
    #[arg(long = "m", value_delimiter = ',')]
    pub m: Vec<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV destination, `-` for stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[arg(long, value_enum)]
    pub scenario: TraceScenarioArg,
    #[arg(long = "action-size")]
    pub action_size: Option<usize>,
    #[arg(long)]
    pub kappa: Option<String>,
    #[arg(long = "t-stage")]
    pub t_stage: Option<u64>,
    /// Best case: number of unique states M.
    #[arg(long = "m")]
    pub m: Option<u64>,
    /// Replay: file with one state token per line.
    #[arg(long)]
    pub states: Option<PathBuf>,
    /// Last step traced; the series has horizon + 1 rows.
    #[arg(long, allow_negative_numbers = true)]
    pub horizon: Option<i64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub agent: Option<AgentKind>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run this many consecutive seeds in parallel, one sub-directory each.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
    /// Also render the mean series as `memory_growth.svg`.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long = "input", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "Memory table growth")]
    pub title: String,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Trace(a) => cmd_trace(&a),
        Command::Simulate(a) => cmd_simulate(&a).map(|_| ()),
        Command::Report(a) => cmd_report(&a),
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

fn parse_kappa(s: &str) -> Result<Kappa> {
    s.parse().map_err(|e| CliError::Usage(format!("--kappa {s}: {e}")))
}

/// Writes to `path`, or stdout for `-`.
fn with_output<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> dualmem::Result<()>,
{
    if path == Path::new("-") {
        let stdout = io::stdout();
        let mut lock = stdout.lock();
        return f(&mut lock).map_err(|e| CliError::data("stdout", e));
    }
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).map_err(|e| match e {
        dualmem::Error::Io(io) => CliError::io(path, io),
        other => CliError::data(path.display().to_string(), other),
    })?;
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn build_sweep(args: &AnalyzeArgs) -> Result<SweepGrid> {
    let cfg = load_config(args.config.as_deref())?;
    let action_counts = if args.action_size.is_empty() {
        vec![cfg.grid.phases.len()]
    } else {
        args.action_size.clone()
    };
    let kappas = if args.kappa.is_empty() {
        vec![parse_kappa(&cfg.memory.kappa)?]
    } else {
        args.kappa.iter().map(|k| parse_kappa(k)).collect::<Result<_>>()?
    };
    let t_stages = if args.t_stage.is_empty() {
        vec![cfg.memory.t_stage]
    } else {
        args.t_stage.clone()
    };
    let (scenario, points) = match args.scenario {
        ScenarioArg::Worst => {
            if !args.m.is_empty() {
                return Err(CliError::Usage("--m applies to --scenario best".into()));
            }
            let n_max = args.n_max.unwrap_or(cfg.analysis.n_max);
            if n_max == 0 {
                return Err(CliError::Usage("--n-max must be at least 1".into()));
            }
            (Scenario::Worst, (1..=n_max).collect())
        }
        ScenarioArg::Best => {
            if args.m.is_empty() {
                return Err(CliError::Usage("--scenario best needs --m".into()));
            }
            if args.n_max.is_some() {
                return Err(CliError::Usage("--n-max applies to --scenario worst".into()));
            }
            (Scenario::Best, args.m.clone())
        }
    };
    Ok(SweepGrid {
        scenario,
        action_counts,
        kappas,
        t_stages,
        points,
    })
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let grid = build_sweep(args)?;
    let rows = analysis::sweep(&grid).map_err(|e| match e {
        dualmem::Error::InvalidParameter { .. } => CliError::Usage(e.to_string()),
        other => CliError::data("sweep", other),
    })?;
    for (a, k, t) in parameter_sets(&grid) {
        let m = (grid.scenario == Scenario::Best).then(|| grid.points.iter().copied().min().unwrap_or(1));
        let report = check_constraints(a, k, t, m);
        if !report.all_satisfied() {
            eprintln!("constraints for |A|={a} kappa={k} T_stage={t}:\n{report}");
        }
    }
    with_output(&args.out, |w| analysis::write_sweep_csv(w, &rows))?;
    if let Some(svg) = &args.svg {
        write_text(svg, &sweep_chart(&grid, &rows).render())?;
    }
    Ok(())
}

fn parameter_sets(grid: &SweepGrid) -> Vec<(usize, Kappa, u64)> {
    let mut out = Vec::new();
    for a in &grid.action_counts {
        for k in &grid.kappas {
            for t in &grid.t_stages {
                out.push((*a, *k, *t));
            }
        }
    }
    out
}

/// zeta1 solid and zeta2 dashed against `n`/`M`, or against `|A|` when only
/// one point is given.
pub fn sweep_chart(grid: &SweepGrid, rows: &[BoundReport]) -> svg::Chart {
    let by_action = grid.points.len() == 1 && grid.action_counts.len() > 1;
    let point_name = match grid.scenario {
        Scenario::Worst => "n",
        Scenario::Best => "M",
    };
    let mut chart = svg::Chart {
        title: format!("Memory size ratio, {} case", grid.scenario.name()),
        x_label: if by_action { "|A|".into() } else { point_name.into() },
        y_label: "zeta = msize_Q / msize_Dual".into(),
        reference_y: Some(1.0),
        ..svg::Chart::default()
    };
    let mut groups: Vec<(String, Vec<&BoundReport>)> = Vec::new();
    for r in rows {
        let key = if by_action {
            format!("k={} T={} {point_name}={}", r.kappa, r.t_stage, r.n_or_m)
        } else {
            match grid.scenario {
                Scenario::Worst => format!("|A|={} k={} T={}", r.action_count, r.kappa, r.t_stage),
                Scenario::Best => format!("|A|={} T={}", r.action_count, r.t_stage),
            }
        };
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    for (color, (key, members)) in groups.iter().enumerate() {
        let x = |r: &BoundReport| {
            if by_action {
                r.action_count as f64
            } else {
                r.n_or_m as f64
            }
        };
        let pts =
            |f: &dyn Fn(&BoundReport) -> Rational| members.iter().map(|r| (x(r), rational_to_f64(f(r)))).collect();
        chart.lines.push(svg::Line {
            label: format!("{key} zeta1"),
            points: pts(&|r| r.zeta1),
            stroke: svg::Stroke::Solid,
            steps: false,
            color,
        });
        chart.lines.push(svg::Line {
            label: format!("{key} zeta2"),
            points: pts(&|r| r.zeta2),
            stroke: svg::Stroke::Dashed,
            steps: false,
            color,
        });
        let mut run: Option<(f64, f64)> = None;
        for r in members {
            if r.shaded() {
                run = Some(run.map_or((x(r), x(r)), |(a, _)| (a, x(r))));
            } else if let Some(band) = run.take() {
                chart.bands.push(band);
            }
        }
        chart.bands.extend(run);
    }
    chart
}

pub fn build_scenario(args: &TraceArgs) -> Result<ScenarioSpec> {
    let cfg = load_config(args.config.as_deref())?;
    let action_count = args.action_size.unwrap_or(cfg.grid.phases.len());
    if action_count == 0 {
        return Err(CliError::Usage("--action-size must be positive".into()));
    }
    let kappa = parse_kappa(args.kappa.as_deref().unwrap_or(&cfg.memory.kappa))?;
    let t_stage = args.t_stage.unwrap_or(cfg.memory.t_stage);
    if t_stage == 0 {
        return Err(CliError::Usage("--t-stage must be positive".into()));
    }
    if let Some(h) = args.horizon {
        if h < 0 {
            return Err(CliError::Usage(format!("--horizon {h} is negative")));
        }
    }
    let horizon = args.horizon.map(|h| h as u64);
    let (kind, horizon) = match args.scenario {
        TraceScenarioArg::Worst => (ScenarioKind::Worst, horizon.unwrap_or(cfg.analysis.horizon)),
        TraceScenarioArg::Best => {
            let m = args
                .m
                .ok_or_else(|| CliError::Usage("--scenario best needs --m".into()))?;
            if m == 0 {
                return Err(CliError::Usage("--m must be positive".into()));
            }
            (
                ScenarioKind::Best { m_unique: m },
                horizon.unwrap_or(cfg.analysis.horizon),
            )
        }
        TraceScenarioArg::Replay => {
            let path = args
                .states
                .as_ref()
                .ok_or_else(|| CliError::Usage("--scenario replay needs --states".into()))?;
            let states = read_states(path)?;
            if states.is_empty() {
                return Err(CliError::data(
                    path.display().to_string(),
                    dualmem::Error::Structural("state file is empty".into()),
                ));
            }
            let h = horizon.unwrap_or(states.len() as u64 - 1);
            (ScenarioKind::Replay { states }, h)
        }
    };
    Ok(ScenarioSpec {
        kind,
        action_count,
        t_stage,
        kappa,
        horizon,
    })
}

/// One state token per line; blank lines and `#` comments are skipped.
pub fn read_states(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

pub fn cmd_trace(args: &TraceArgs) -> Result<()> {
    let spec = build_scenario(args)?;
    let series = trace_synthetic(&spec).map_err(|e| CliError::data("trace", e))?;
    let id = spec.kind.name();
    with_output(&args.out, |w| sample::write_csv(w, id, &series))
}

/// Result of one seeded simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationRun {
    pub seed: u64,
    pub agent: AgentKind,
    pub record: ExperimentRecord,
    /// Distinct canonical states observed per intersection.
    pub unique_canonical: Vec<usize>,
}

pub fn simulate(cfg: &RunConfig, agent: AgentKind, steps: u64, seed: u64) -> Result<SimulationRun> {
    let grid = cfg.grid_config()?;
    let hp = cfg.hyper_params()?;
    let group = cfg.group()?;
    let mut net = GridNetwork::new(grid).map_err(|e| CliError::data("[grid]", e))?;
    let n = net.len();
    let mut env_rng = ChaCha8Rng::seed_from_u64(seed);
    let agent_rng = |i: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64 + 1);
        rng
    };
    let record = match agent {
        AgentKind::Dual => {
            let mut agents = (0..n)
                .map(|i| DualMemoryAgentF64::with_rng(hp, group.clone(), agent_rng(i)))
                .collect::<dualmem::Result<Vec<_>>>()
                .map_err(|e| CliError::data("agent", e))?;
            run_experiment(&mut net, &mut agents, steps, &mut env_rng)
        }
        AgentKind::Sarsa => {
            let mut agents = (0..n)
                .map(|i| SarsaAgentF64::with_rng(hp, agent_rng(i)))
                .collect::<dualmem::Result<Vec<_>>>()
                .map_err(|e| CliError::data("agent", e))?;
            run_experiment(&mut net, &mut agents, steps, &mut env_rng)
        }
    }
    .map_err(|e| CliError::data("simulation", e))?;
    let unique_canonical = record
        .visited
        .iter()
        .map(|v| v.iter().map(|s| group.canonicalize(s)).collect::<BTreeSet<_>>().len())
        .collect();
    Ok(SimulationRun {
        seed,
        agent,
        record,
        unique_canonical,
    })
}

/// `intersection_<i>.csv` per cell plus `mean.csv`.
pub fn write_simulation(dir: &Path, run: &SimulationRun, svg: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    for (i, series) in run.record.per_intersection.iter().enumerate() {
        let path = dir.join(format!("intersection_{i}.csv"));
        with_output(&path, |w| sample::write_csv(w, &i.to_string(), series))?;
        written.push(path);
    }
    let mean = dir.join("mean.csv");
    with_output(&mean, |w| sample::write_csv(w, "mean", &run.record.mean))?;
    written.push(mean.clone());
    if svg {
        let path = dir.join("memory_growth.svg");
        let chart = series_chart(
            &format!("Memory table growth, {} agents (mean)", run.agent),
            &[(format!("{} mean", run.agent), run.record.mean.clone())],
        );
        write_text(&path, &chart.render())?;
        written.push(path);
    }
    Ok(written)
}

fn resolve_seed(flag: Option<u64>, cfg: &RunConfig) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v} is not an unsigned integer"))),
        Err(_) => Ok(flag.unwrap_or(cfg.grid.seed)),
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Vec<SimulationRun>> {
    let cfg = load_config(args.config.as_deref())?;
    let agent = args.agent.unwrap_or(cfg.agent.kind);
    let steps = args.steps.unwrap_or(cfg.grid.steps);
    let seed = resolve_seed(args.seed, &cfg)?;
    let hp = cfg.hyper_params()?;
    let grid = cfg.grid_config()?;
    println!(
        "constraints for |A|={} kappa={} T_stage={}:",
        hp.action_count, hp.kappa, hp.t_stage
    );
    print!("{}", check_constraints(hp.action_count, hp.kappa, hp.t_stage, None));
    let bound = m_bound(hp.action_count, hp.t_stage);
    println!(
        "grid {}x{}, {} agents, {steps} steps, M bound {}",
        grid.rows,
        grid.cols,
        agent,
        bound.map_or_else(|| "undefined".into(), |b| b.to_string())
    );

    let seeds: Vec<u64> = match args.seeds {
        None => vec![seed],
        Some(0) => return Err(CliError::Usage("--seeds must be at least 1".into())),
        Some(k) => (0..k as u64).map(|i| seed + i).collect(),
    };
    let runs: Vec<Result<SimulationRun>> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|s| {
                let cfg = &cfg;
                scope.spawn(move || simulate(cfg, agent, steps, *s))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    for run in &runs {
        let dir = if args.seeds.is_some() {
            args.out_dir.join(format!("seed_{}", run.seed))
        } else {
            args.out_dir.clone()
        };
        write_simulation(&dir, run, args.svg)?;
        let min_m = run.unique_canonical.iter().min().copied().unwrap_or(0);
        let met = match bound {
            Some(b) if Rational::from_integer(min_m as i64) >= b => "met",
            Some(_) => "not met",
            None => "undefined",
        };
        let last = run.record.mean.last();
        println!(
            "seed {}: unique canonical states per intersection {:?} (min {min_m}, bound {met}); final mean msize_dual {} msize_q {}",
            run.seed,
            run.unique_canonical,
            last.map_or_else(String::new, |s| s.msize_dual.to_string()),
            last.map_or_else(String::new, |s| s.msize_q.to_string()),
        );
    }
    Ok(runs)
}

/// One line per series of the memory size plotted against `t`: the dual
/// footprint (drawn as a staircase) when the series has dual-memory content,
/// otherwise the replay-table footprint.
pub fn series_chart(title: &str, series: &[(String, Vec<dualmem::SizeSample<Rational>>)]) -> svg::Chart {
    let mut chart = svg::Chart {
        title: title.into(),
        x_label: "t".into(),
        y_label: "entries".into(),
        ..svg::Chart::default()
    };
    for (i, (label, samples)) in series.iter().enumerate() {
        let dual = samples.iter().any(|s| s.m_s != Rational::from_integer(0));
        let value = |s: &dualmem::SizeSample<Rational>| if dual { s.msize_dual } else { s.msize_q };
        chart.lines.push(svg::Line {
            label: format!("{} ({label})", if dual { "dual" } else { "sarsa" }),
            points: samples
                .iter()
                .map(|s| (s.t as f64, rational_to_f64(value(s))))
                .collect(),
            stroke: svg::Stroke::Solid,
            steps: dual,
            color: i,
        });
    }
    chart
}

pub fn cmd_report(args: &ReportArgs) -> Result<()> {
    let mut series = Vec::new();
    for path in &args.inputs {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        let parsed: SeriesFile<Rational> =
            sample::read_csv(file).map_err(|e| CliError::data(path.display().to_string(), e))?;
        let stem = path
            .file_stem()
            .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        series.push((stem, parsed.samples));
    }
    write_text(&args.out, &series_chart(&args.title, &series).render())
}
