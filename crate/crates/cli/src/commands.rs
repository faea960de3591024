use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use silly_rules::information::observation_rounds;
use silly_rules::seeds::group_seed;
use silly_rules::sweep::{aggregate, PRESETS};
use silly_rules::{
    prop1_residual, run_group, run_sweep, solve, vpi, AgentType, Belief, Error, Grid, ObservationScope, Params,
    PayoffConvention, PolicyKind, Table, TypeAssignment, VpiOptions,
};

use crate::config::{self, Manifest, RunConfig, SEED_DERIVATION};
use crate::output;

pub const OUT_ENV: &str = "SILLY_RULES_OUT";

/// Process exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    Validation,
    Numerical,
    Io,
}

impl Failure {
    pub fn code(self) -> u8 {
        match self {
            Failure::Validation => 1,
            Failure::Numerical => 2,
            Failure::Io => 3,
        }
    }

    pub fn classify(err: &anyhow::Error) -> Failure {
        for cause in err.chain() {
            if cause.downcast_ref::<CheckFailed>().is_some() {
                return Failure::Numerical;
            }
            if let Some(e) = cause.downcast_ref::<Error>() {
                return classify_core(e);
            }
            if cause.downcast_ref::<io::Error>().is_some() {
                return Failure::Io;
            }
            if let Some(e) = cause.downcast_ref::<csv::Error>() {
                if e.is_io_error() {
                    return Failure::Io;
                }
            }
        }
        Failure::Validation
    }
}

fn classify_core(e: &Error) -> Failure {
    match e {
        Error::HorizonCapExceeded { .. }
        | Error::NonMonotoneBoundary { .. }
        | Error::QuadratureDiverged { .. }
        | Error::QuadratureMismatch { .. } => Failure::Numerical,
        Error::Cache(_) => Failure::Io,
        Error::Cell { source, .. } => classify_core(source),
        _ => Failure::Validation,
    }
}

/// A verifier found a violated property.
#[derive(Debug)]
pub struct CheckFailed(pub String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

#[derive(Debug, Parser)]
#[command(name = "silly-rules", version, about = "Bayesian exit decisions in rule-governed groups")]
pub struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the discount identity and the vanishing value of information.
    VerifyProps(VerifyArgs),
    /// Solve the stopping policy for one environment and print its boundary.
    #[command(alias = "solve")]
    SolvePolicy(SolveArgs),
    /// Simulate groups in a single (d, c) environment.
    Simulate(SimulateArgs),
    /// Run a replicated density × cost sweep.
    Sweep(SweepArgs),
    /// Value of perfect information across densities and costs.
    VpiScan(VpiArgs),
    /// List the built-in presets, or print one as a config file.
    Presets(PresetsArgs),
}

/// Model and run settings shared by the simulation commands.
#[derive(Debug, Args, Default)]
pub struct Common {
    /// TOML or JSON config (a sweep's manifest.json also works).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
    /// Base discount per important interaction.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub reward: Option<f64>,
    /// True punisher share.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub prior_alpha: Option<f64>,
    #[arg(long)]
    pub prior_beta: Option<f64>,
    #[arg(long)]
    pub group_size: Option<u32>,
    /// Groups per cell.
    #[arg(long)]
    pub groups: Option<u32>,
    #[arg(long)]
    pub max_timesteps: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// prose | equation
    #[arg(long, value_parser = parse_enum::<PayoffConvention>)]
    pub payoff_convention: Option<PayoffConvention>,
    /// per_pair | global
    #[arg(long, value_parser = parse_enum::<ObservationScope>)]
    pub observation: Option<ObservationScope>,
    /// exact | iid
    #[arg(long, value_parser = parse_enum::<TypeAssignment>)]
    pub type_assignment: Option<TypeAssignment>,
    /// optimal | myopic
    #[arg(long, value_parser = parse_enum::<PolicyKind>)]
    pub policy: Option<PolicyKind>,
    /// Truncation tolerance of the policy solver.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub horizon_cap: Option<u32>,
    /// Fail instead of warning when the horizon cap is hit.
    #[arg(long)]
    pub strict: bool,
}

impl Common {
    fn flags(&self) -> RunConfig {
        RunConfig {
            preset: self.preset.clone(),
            gamma: self.gamma,
            reward: self.reward,
            punisher_share: self.theta,
            prior_alpha: self.prior_alpha,
            prior_beta: self.prior_beta,
            group_size: self.group_size,
            groups: self.groups,
            max_timesteps: self.max_timesteps,
            seed: self.seed,
            workers: self.workers,
            payoff_convention: self.payoff_convention,
            observation: self.observation,
            type_assignment: self.type_assignment,
            policy: self.policy,
            tolerance: self.tolerance,
            horizon_cap: self.horizon_cap,
            strict: self.strict.then_some(true),
            ..RunConfig::default()
        }
    }

    /// Preset < config file < flags.
    fn resolve(&self, extra: RunConfig) -> Result<RunConfig> {
        let file = match &self.config {
            Some(path) => config::load(path)?,
            None => RunConfig::default(),
        };
        Ok(file.merged(&self.flags()).merged(&extra))
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_parser = parse_grid, default_value = "0.9,0.95,0.98,0.99")]
    pub gammas: Grid,
    #[arg(long, value_parser = parse_grid, default_value = "0:0.95:20")]
    pub densities: Grid,
    /// Expected per-interaction utilities fed to the identity check.
    #[arg(long, value_parser = parse_grid, default_value = "0.2,1,5")]
    pub eus: Grid,
    #[arg(long, default_value_t = 1e-12)]
    pub identity_tolerance: f64,
    /// Densities of the value-of-information scan.
    #[arg(long, value_parser = parse_grid, default_value = "0,0.5,0.9,0.99")]
    pub vpi_densities: Grid,
    #[arg(long, default_value_t = 0.98)]
    pub vpi_gamma: f64,
    /// Skip the value-of-information scan.
    #[arg(long)]
    pub skip_vpi: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long = "d")]
    pub density: f64,
    #[arg(long = "c")]
    pub cost: f64,
    #[arg(long = "type", default_value = "punisher")]
    pub self_type: AgentType,
    /// Only list depths up to this one.
    #[arg(long)]
    pub max_depth: Option<u32>,
    /// Reuse solved tables from this directory.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Output CSV (default: stdout).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long = "d")]
    pub density: Option<f64>,
    #[arg(long = "c")]
    pub cost: Option<f64>,
    /// Per-group trajectories instead of aggregates.
    #[arg(long)]
    pub trace: bool,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Values `a,b,c` or a linear range `start:end:count`
    /// (prefix `log:` for geometric spacing).
    #[arg(long, value_parser = parse_grid)]
    pub densities: Option<Grid>,
    #[arg(long, value_parser = parse_grid)]
    pub costs: Option<Grid>,
    /// Output directory.
    #[arg(long, short, env = OUT_ENV)]
    pub out: Option<PathBuf>,
    /// Also write every group's trajectory.
    #[arg(long)]
    pub trajectories: bool,
}

#[derive(Debug, Args)]
pub struct VpiArgs {
    #[arg(long = "d", value_parser = parse_grid, default_value = "0,0.5,0.9,0.99")]
    pub densities: Grid,
    #[arg(long = "c", value_parser = parse_grid, default_value = "0")]
    pub costs: Grid,
    #[arg(long, default_value_t = 0.98)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub reward: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta0: f64,
    #[arg(long, default_value_t = 0)]
    pub k: u32,
    #[arg(long, default_value_t = 0)]
    pub m: u32,
    #[arg(long = "type", default_value = "punisher")]
    pub self_type: AgentType,
    #[arg(long, value_parser = parse_enum::<PayoffConvention>, default_value = "prose")]
    pub payoff_convention: PayoffConvention,
    #[arg(long, default_value_t = silly_rules::information::DEFAULT_QUAD_TOL)]
    pub quad_tol: f64,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PresetsArgs {
    /// Print this preset as a TOML config.
    pub name: Option<String>,
}

fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|e| e.to_string())
}

/// `a,b,c`, `start:end:count` or `log:start:end:count`.
pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("`{x}` is not a number"));
    let (geometric, body) = match s.strip_prefix("log:") {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    if body.contains(':') {
        let parts: Vec<&str> = body.split(':').collect();
        let [start, end, count] = parts[..] else {
            return Err(format!("range `{s}` must be start:end:count"));
        };
        let count = count.trim().parse::<usize>().map_err(|_| format!("`{count}` is not a count"))?;
        if count == 0 {
            return Err("grid count must be positive".into());
        }
        let (start, end) = (num(start)?, num(end)?);
        return Ok(if geometric { Grid::Geometric { start, end, count } } else { Grid::Linear { start, end, count } });
    }
    if geometric {
        return Err(format!("`{s}`: log: needs start:end:count"));
    }
    let values = body.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(format!("grid `{s}` has no usable values"));
    }
    Ok(Grid::Values { values })
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::VerifyProps(a) => verify_props(&a),
        Command::SolvePolicy(a) => solve_policy(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Sweep(a) => sweep(&a),
        Command::VpiScan(a) => vpi_scan(&a),
        Command::Presets(a) => presets(&a),
    }
}

fn verify_props(a: &VerifyArgs) -> Result<()> {
    let gammas = a.gammas.resolve()?;
    let densities = a.densities.resolve()?;
    let eus = a.eus.resolve()?;
    let start = Instant::now();
    let mut worst = 0.0f64;
    for &g in &gammas {
        for &d in &densities {
            for &eu in &eus {
                worst = worst.max(prop1_residual(g, d, eu)?.abs());
            }
        }
    }
    let identity_ok = worst <= a.identity_tolerance;
    println!(
        "{}  discount identity: max |residual| = {worst:e} over {} points (tolerance {:e}, {:.3}s)",
        verdict(identity_ok),
        gammas.len() * densities.len() * eus.len(),
        a.identity_tolerance,
        start.elapsed().as_secs_f64()
    );

    let mut vpi_ok = true;
    if !a.skip_vpi {
        let densities = a.vpi_densities.resolve()?;
        let start = Instant::now();
        let mut values = Vec::with_capacity(densities.len());
        for &d in &densities {
            let params = vpi_params(a.vpi_gamma, d, 0.0, 1.0, 1.0, 1.0, PayoffConvention::Prose);
            let r = vpi(&params.prior(), &params, AgentType::Punisher, &VpiOptions::default())?;
            println!("      d = {d:<6} VPI = {:.6}", r.vpi);
            values.push(r.vpi);
        }
        let monotone = values.windows(2).all(|w| w[1] <= w[0]);
        let vanishing = match (values.first(), values.last()) {
            (Some(&first), Some(&last)) if values.len() > 1 => last <= 0.1 * first,
            _ => true,
        };
        vpi_ok = monotone && vanishing;
        println!(
            "{}  value of information: non-increasing = {monotone}, last ≤ 0.1·first = {vanishing} ({:.1}s)",
            verdict(vpi_ok),
            start.elapsed().as_secs_f64()
        );
    }
    match (identity_ok, vpi_ok) {
        (true, true) => Ok(()),
        (false, true) => Err(CheckFailed("discount identity check failed".into()).into()),
        (true, false) => Err(CheckFailed("value-of-information scan failed".into()).into()),
        (false, false) => Err(CheckFailed("both checks failed".into()).into()),
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn vpi_params(gamma: f64, d: f64, c: f64, reward: f64, alpha: f64, beta: f64, conv: PayoffConvention) -> Params {
    Params {
        density: d,
        signaling_cost: c,
        discount: gamma,
        reward,
        punisher_share: 0.5,
        prior_alpha: alpha,
        prior_beta: beta,
        group_size: 2,
        payoff_convention: conv,
    }
}

/// Base params of the resolved config with one (d, c) cell applied.
fn cell_params(cfg: &RunConfig, density: Option<f64>, cost: Option<f64>) -> Result<(silly_rules::Spec, Params)> {
    let spec = cfg.to_spec()?;
    let density = density.unwrap_or(spec.density_grid[0]);
    let cost = cost.unwrap_or(spec.cost_grid[0]);
    let params = Params { density, signaling_cost: cost, ..spec.base_params };
    params.validate()?;
    Ok((spec, params))
}

fn solve_policy(a: &SolveArgs) -> Result<()> {
    let cfg = a.common.resolve(RunConfig::default())?;
    let (spec, params) = cell_params(&cfg, Some(a.density), Some(a.cost))?;
    let start = Instant::now();
    let table = match &a.cache {
        Some(dir) => Table::solve_cached(dir, &params, a.self_type, &spec.solver)?,
        None => solve(&params, a.self_type, &spec.solver)?,
    };
    eprintln!(
        "type={} d={} c={} gamma_d={} horizon={} truncation_bound={:e} cap_hit={} root_value={} fingerprint={} ({:.2}s)",
        a.self_type,
        params.density,
        params.signaling_cost,
        params.adjusted_discount(),
        table.horizon(),
        table.truncation_bound(),
        table.cap_hit(),
        table.root_value(),
        table.fingerprint(),
        start.elapsed().as_secs_f64()
    );
    output::write_policy(sink(a.out.as_deref())?, &table, a.max_depth)
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let extra = RunConfig { groups: Some(a.common.groups.unwrap_or(1)), ..RunConfig::default() };
    let cfg = a.common.resolve(extra)?;
    let (spec, params) = cell_params(&cfg, a.density, a.cost)?;
    let policies = spec.cell_policies(&params)?;
    let trajectories = (0..spec.replications)
        .map(|g| {
            let seed = group_seed(spec.master_seed, 0, u64::from(g));
            run_group(&params, spec.engine, &policies, seed, spec.max_timesteps)
        })
        .collect::<silly_rules::Result<Vec<_>>>()?;
    let out = sink(a.out.as_deref())?;
    if a.trace {
        let groups = trajectories.iter().enumerate().map(|(g, t)| (Vec::new(), g as u32, t));
        output::write_trajectories(out, &[], groups)
    } else {
        let rows = aggregate(&params, &trajectories, spec.max_timesteps);
        output::write_aggregate(out, cfg.preset_name(), &rows)
    }
}

fn sweep(a: &SweepArgs) -> Result<()> {
    let extra = RunConfig {
        densities: a.densities.clone(),
        costs: a.costs.clone(),
        output_dir: a.out.clone(),
        ..RunConfig::default()
    };
    let cfg = a.common.resolve(extra)?;
    let mut spec = cfg.to_spec()?;
    spec.keep_trajectories = a.trajectories;
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let workers = cfg.workers.unwrap_or_else(default_workers);
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    log::info!(
        "sweep {}: {} cells × {} groups on {workers} workers",
        cfg.preset_name(),
        spec.density_grid.len() * spec.cost_grid.len(),
        spec.replications
    );
    let result = run_sweep(&spec, workers)?;
    let elapsed = clock.elapsed().as_secs_f64();

    let csv_path = dir.join("aggregate.csv");
    output::write_aggregate(
        BufWriter::new(File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?),
        cfg.preset_name(),
        result.rows(),
    )?;
    if a.trajectories {
        let path = dir.join("trajectories.csv");
        let groups = result.cells.iter().flat_map(|cell| {
            let prefix = vec![cell.density().to_string(), cell.cost().to_string()];
            cell.trajectories.iter().flatten().enumerate().map(move |(g, t)| (prefix.clone(), g as u32, t))
        });
        output::write_trajectories(
            BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?),
            &["d", "c"],
            groups,
        )?;
    }
    let manifest = Manifest {
        config: cfg.resolved(&spec),
        software_version: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
        seed_derivation: SEED_DERIVATION.to_string(),
        cells: result.cells.len(),
        started_unix_seconds: started,
        elapsed_seconds: elapsed,
    };
    let manifest_path = dir.join("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", manifest_path.display()))?;
    for cell in &result.cells {
        let s = cell.collapse_stats();
        log::info!(
            "d={} c={}: survival {} at t={}, median collapse {}",
            cell.density(),
            cell.cost(),
            cell.rows.last().map_or(0.0, |r| r.surviving_fraction),
            spec.max_timesteps,
            s.median
        );
    }
    eprintln!("wrote {} and {} ({elapsed:.1}s)", csv_path.display(), manifest_path.display());
    Ok(())
}

fn vpi_scan(a: &VpiArgs) -> Result<()> {
    let densities = a.densities.resolve()?;
    let costs = a.costs.resolve()?;
    let opts = VpiOptions { quad_tol: a.quad_tol, ..VpiOptions::default() };
    let mut rows = Vec::new();
    for &d in &densities {
        for &c in &costs {
            let params = vpi_params(a.gamma, d, c, a.reward, a.alpha0, a.beta0, a.payoff_convention);
            let belief = Belief::with_counts(a.alpha0, a.beta0, a.k, a.m);
            let report = vpi(&belief, &params, a.self_type, &opts).with_context(|| format!("d={d} c={c}"))?;
            if report.cap_hit {
                log::warn!("d={d} c={c}: horizon cap hit, truncation bound {:e}", report.truncation_bound);
            }
            log::debug!("d={d}: observation phase would last {} rounds", observation_rounds(d));
            rows.push((params, report));
        }
    }
    output::write_vpi(sink(a.out.as_deref())?, rows.iter().map(|(p, r)| (p, a.self_type, r)))
}

fn presets(a: &PresetsArgs) -> Result<()> {
    match &a.name {
        None => {
            for name in PRESETS {
                let spec = silly_rules::preset(name)?;
                let p = &spec.base_params;
                println!(
                    "{name:<13} theta={} prior={}:{} {}×{} cells, {} groups, {} timesteps",
                    p.punisher_share,
                    p.prior_alpha,
                    p.prior_beta,
                    spec.density_grid.len(),
                    spec.cost_grid.len(),
                    spec.replications,
                    spec.max_timesteps
                );
            }
            Ok(())
        }
        Some(name) => {
            let cfg = RunConfig { preset: Some(name.clone()), ..RunConfig::default() };
            let spec = cfg.to_spec()?;
            let text = toml::to_string(&cfg.resolved(&spec)).map_err(|e| anyhow!(e))?;
            print!("{text}");
            Ok(())
        }
    }
}
