//! Replicated groups over density × cost grids, aggregated per timestep.
//!
//! Cells are numbered density-major (`cell = density_index · |costs| +
//! cost_index`); group `g` of cell `i` runs on the stream seeded by
//! [`group_seed`]`(master_seed, i, g)`. Results are reduced in (cell, group)
//! order, so the output does not depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_group, EngineConfig, ObservationScope, Policies, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::model::{AgentType, ModelParams, PayoffConvention};
use crate::policy::{solve, SolverOptions};
use crate::scalar::Scalar;
use crate::seeds::group_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    #[default]
    Optimal,
    Myopic,
}

/// Declarative grid of parameter values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Grid {
    Values { values: Vec<f64> },
    Linear { start: f64, end: f64, count: usize },
    Geometric { start: f64, end: f64, count: usize },
}

impl Grid {
    pub fn resolve(&self) -> Result<Vec<f64>> {
        match *self {
            Grid::Values { ref values } => Ok(values.clone()),
            Grid::Linear { start, end, count } => Ok(linear_grid(start, end, count)),
            Grid::Geometric { start, end, count } => {
                if !(start > 0.0 && end > 0.0) {
                    return Err(invalid("grid", "geometric grid endpoints must be > 0"));
                }
                Ok(geometric_grid(start, end, count))
            }
        }
    }
}

/// `count` evenly spaced values from `start` to `end` inclusive.
pub fn linear_grid(start: f64, end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end - start) / (count - 1) as f64;
            (0..count).map(|i| if i == count - 1 { end } else { start + step * i as f64 }).collect()
        }
    }
}

/// `count` log-evenly spaced values from `start` to `end` inclusive.
pub fn geometric_grid(start: f64, end: f64, count: usize) -> Vec<f64> {
    linear_grid(start.ln(), end.ln(), count)
        .into_iter()
        .enumerate()
        .map(|(i, x)| match i {
            0 => start,
            _ if i == count - 1 => end,
            _ => x.exp(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize", deserialize = "S: Deserialize<'de>"))]
pub struct SweepSpec<S = f64> {
    pub preset_name: Option<String>,
    /// Density and cost are overridden per cell.
    pub base_params: ModelParams<S>,
    pub density_grid: Vec<S>,
    pub cost_grid: Vec<S>,
    pub replications: u32,
    pub max_timesteps: u32,
    pub master_seed: u64,
    pub engine: EngineConfig,
    pub policy: PolicyKind,
    pub solver: SolverOptions<S>,
    /// Keep every group's trajectory in the result.
    #[serde(default)]
    pub keep_trajectories: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell<S> {
    pub index: usize,
    pub params: ModelParams<S>,
}

impl<S: Scalar> SweepSpec<S> {
    pub fn cells(&self) -> Vec<Cell<S>> {
        let mut cells = Vec::with_capacity(self.density_grid.len() * self.cost_grid.len());
        for &density in &self.density_grid {
            for &cost in &self.cost_grid {
                cells.push(Cell {
                    index: cells.len(),
                    params: ModelParams { density, signaling_cost: cost, ..self.base_params },
                });
            }
        }
        cells
    }

    pub fn validate(&self) -> Result<()> {
        if self.density_grid.is_empty() {
            return Err(invalid("density_grid", "is empty"));
        }
        if self.cost_grid.is_empty() {
            return Err(invalid("cost_grid", "is empty"));
        }
        if self.replications < 1 {
            return Err(invalid("replications", "must be at least 1"));
        }
        if self.max_timesteps < 1 {
            return Err(invalid("max_timesteps", "must be at least 1"));
        }
        for cell in self.cells() {
            cell.params.validate()?;
        }
        Ok(())
    }

    /// Deepest belief a group of this cell can reach.
    pub fn reachable_depth(&self, params: &ModelParams<S>) -> u64 {
        let periods = params.periods_per_timestep() * u64::from(self.max_timesteps);
        match self.engine.observation {
            ObservationScope::PerPair => periods,
            ObservationScope::Global => periods * u64::from(params.group_size - 1),
        }
    }

    /// Solves (or selects) the per-type policies for one cell.
    pub fn cell_policies(&self, params: &ModelParams<S>) -> Result<Policies<S>> {
        match self.policy {
            PolicyKind::Myopic => Ok(Policies::myopic()),
            PolicyKind::Optimal => {
                let depth = self.reachable_depth(params).min(u64::from(u32::MAX)) as u32;
                let opts =
                    SolverOptions { min_horizon: self.solver.min_horizon.max(depth), value_depth: 0, ..self.solver };
                Ok(Policies::optimal(
                    solve(params, AgentType::Punisher, &opts)?,
                    solve(params, AgentType::NonPunisher, &opts)?,
                ))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AggregateRow<S = f64> {
    pub density: S,
    pub cost: S,
    /// Timestep number within the run.
    pub index: u32,
    /// Expected important interactions per agent.
    pub timestep: S,
    /// Share of groups with at least two active members.
    pub surviving_fraction: S,
    /// Mean active count over all groups, collapsed ones included.
    pub mean_active_size: S,
    pub n_groups: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult<S = f64> {
    pub index: usize,
    pub params: ModelParams<S>,
    pub rows: Vec<AggregateRow<S>>,
    /// Per group, the timestep of collapse if it happened.
    pub collapse: Vec<Option<u32>>,
    pub trajectories: Option<Vec<Trajectory<S>>>,
}

impl<S: Scalar> CellResult<S> {
    pub fn density(&self) -> S {
        self.params.density
    }

    pub fn cost(&self) -> S {
        self.params.signaling_cost
    }

    pub fn row_at(&self, index: u32) -> Option<&AggregateRow<S>> {
        self.rows.get(index as usize)
    }

    pub fn collapse_stats(&self) -> CollapseStats {
        collapse_time_stats(&self.collapse)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<S = f64> {
    pub cells: Vec<CellResult<S>>,
}

impl<S: Scalar> SweepResult<S> {
    pub fn rows(&self) -> impl Iterator<Item = &AggregateRow<S>> {
        self.cells.iter().flat_map(|c| c.rows.iter())
    }

    pub fn cell(&self, density: S, cost: S) -> Option<&CellResult<S>> {
        self.cells.iter().find(|c| c.density() == density && c.cost() == cost)
    }
}

pub fn aggregate<S: Scalar>(
    params: &ModelParams<S>,
    trajectories: &[Trajectory<S>],
    max_timesteps: u32,
) -> Vec<AggregateRow<S>> {
    let n = trajectories.len() as u32;
    let per = params.periods_per_timestep();
    (0..=max_timesteps)
        .map(|index| {
            let mut surviving = 0u32;
            let mut active = 0u64;
            for t in trajectories {
                let s = t.sample_at(index).expect("sample within run length");
                surviving += u32::from(!s.collapsed);
                active += u64::from(s.active_count);
            }
            let groups = S::from_count(n.into());
            AggregateRow {
                density: params.density,
                cost: params.signaling_cost,
                index,
                timestep: S::from_count(u64::from(index) * per) * (S::one() - params.density),
                surviving_fraction: S::from_count(surviving.into()) / groups,
                mean_active_size: S::from_count(active) / groups,
                n_groups: n,
            }
        })
        .collect()
}

fn run_cell<S: Scalar>(spec: &SweepSpec<S>, cell: &Cell<S>) -> Result<CellResult<S>> {
    let wrap = |e: Error| Error::Cell {
        d: cell.params.density.to_f64_lossy(),
        c: cell.params.signaling_cost.to_f64_lossy(),
        source: Box::new(e),
    };
    let policies = spec.cell_policies(&cell.params).map_err(wrap)?;
    let trajectories = (0..spec.replications)
        .into_par_iter()
        .map(|g| {
            let seed = group_seed(spec.master_seed, cell.index as u64, u64::from(g));
            run_group(&cell.params, spec.engine, &policies, seed, spec.max_timesteps)
        })
        .collect::<Result<Vec<_>>>()
        .map_err(wrap)?;
    let rows = aggregate(&cell.params, &trajectories, spec.max_timesteps);
    let collapse = trajectories.iter().map(Trajectory::collapse_index).collect();
    Ok(CellResult {
        index: cell.index,
        params: cell.params,
        rows,
        collapse,
        trajectories: spec.keep_trajectories.then_some(trajectories),
    })
}

pub fn run_sweep<S: Scalar>(spec: &SweepSpec<S>, workers: usize) -> Result<SweepResult<S>> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| invalid("workers", e.to_string()))?;
    let cells = spec.cells();
    let cells = pool.install(|| cells.par_iter().map(|c| run_cell(spec, c)).collect::<Result<Vec<_>>>())?;
    Ok(SweepResult { cells })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CensoredTime {
    At(u32),
    /// Fewer than the required share of groups collapsed within the run.
    NotReached,
}

impl CensoredTime {
    pub fn value(self) -> Option<u32> {
        match self {
            CensoredTime::At(t) => Some(t),
            CensoredTime::NotReached => None,
        }
    }
}

impl PartialOrd for CensoredTime {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CensoredTime {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use CensoredTime::*;
        match (self, other) {
            (At(a), At(b)) => a.cmp(b),
            (At(_), NotReached) => std::cmp::Ordering::Less,
            (NotReached, At(_)) => std::cmp::Ordering::Greater,
            (NotReached, NotReached) => std::cmp::Ordering::Equal,
        }
    }
}

impl std::fmt::Display for CensoredTime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CensoredTime::At(t) => write!(f, "{t}"),
            CensoredTime::NotReached => f.write_str("not_reached"),
        }
    }
}

/// Collapse-time distribution of a cell. Quantiles use the nearest-rank
/// rule over all groups, with never-collapsed groups ranked last.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollapseStats {
    pub n_groups: u32,
    pub collapsed: u32,
    pub fraction_collapsed: f64,
    pub fraction_never_collapsed: f64,
    pub q1: CensoredTime,
    pub median: CensoredTime,
    pub q3: CensoredTime,
}

fn nearest_rank(n: u32, q: f64) -> u32 {
    ((q * f64::from(n)).ceil() as u32).max(1)
}

/// Collapse-time statistics from per-group collapse timesteps.
pub fn collapse_time_stats(collapse: &[Option<u32>]) -> CollapseStats {
    let n = collapse.len() as u32;
    let mut times: Vec<u32> = collapse.iter().flatten().copied().collect();
    times.sort_unstable();
    let quantile = |q: f64| {
        if n == 0 {
            return CensoredTime::NotReached;
        }
        let rank = nearest_rank(n, q) as usize;
        times.get(rank - 1).map_or(CensoredTime::NotReached, |&t| CensoredTime::At(t))
    };
    let collapsed = times.len() as u32;
    let frac = |x: u32| if n == 0 { 0.0 } else { f64::from(x) / f64::from(n) };
    CollapseStats {
        n_groups: n,
        collapsed,
        fraction_collapsed: frac(collapsed),
        fraction_never_collapsed: frac(n - collapsed),
        q1: quantile(0.25),
        median: quantile(0.5),
        q3: quantile(0.75),
    }
}

/// Same statistics recovered from one cell's survival curve.
pub fn collapse_stats_from_rows<S: Scalar>(rows: &[AggregateRow<S>]) -> CollapseStats {
    let n = rows.first().map_or(0, |r| r.n_groups);
    let collapsed_by = |r: &AggregateRow<S>| {
        let surviving = (r.surviving_fraction * S::from_count(n.into())).round();
        n - surviving.to_u32().unwrap_or(n).min(n)
    };
    let quantile = |q: f64| {
        if n == 0 {
            return CensoredTime::NotReached;
        }
        let rank = nearest_rank(n, q);
        rows.iter().find(|r| collapsed_by(r) >= rank).map_or(CensoredTime::NotReached, |r| CensoredTime::At(r.index))
    };
    let collapsed = rows.last().map_or(0, collapsed_by);
    let frac = |x: u32| if n == 0 { 0.0 } else { f64::from(x) / f64::from(n) };
    CollapseStats {
        n_groups: n,
        collapsed,
        fraction_collapsed: frac(collapsed),
        fraction_never_collapsed: frac(n - collapsed),
        q1: quantile(0.25),
        median: quantile(0.5),
        q3: quantile(0.75),
    }
}

pub const PRESETS: [&str; 3] = ["baseline", "robustness", "adaptability"];

pub const DEFAULT_DISCOUNT: f64 = 0.98;
pub const DEFAULT_LOW_COST: f64 = 0.002;
pub const DEFAULT_MASTER_SEED: u64 = 2019;

fn base_params(theta: f64, alpha: f64, beta: f64) -> ModelParams {
    ModelParams {
        density: 0.0,
        signaling_cost: 0.0,
        discount: DEFAULT_DISCOUNT,
        reward: 1.0,
        punisher_share: theta,
        prior_alpha: alpha,
        prior_beta: beta,
        group_size: 100,
        payoff_convention: PayoffConvention::Prose,
    }
}

/// The three named experiments.
///
/// * `baseline`: confident prior 30:20 and θ = 0.6 over 20 densities in
///   `[0, 0.95]` × 20 geometrically spaced costs in `[0.001, 0.1]`.
/// * `robustness`: the same ground truth with beliefs shocked to 1.2:0.8.
/// * `adaptability`: beliefs shocked to 1.2:0.8 and θ dropped to 0.4.
///
/// The shock presets run densities {0, 0.5, 0.9} at cost 0.002.
pub fn preset(name: &str) -> Result<SweepSpec> {
    let (base, density_grid, cost_grid, max_timesteps) = match name {
        "baseline" => (base_params(0.6, 30.0, 20.0), linear_grid(0.0, 0.95, 20), geometric_grid(0.001, 0.1, 20), 100),
        "robustness" => (base_params(0.6, 1.2, 0.8), vec![0.0, 0.5, 0.9], vec![DEFAULT_LOW_COST], 250),
        "adaptability" => (base_params(0.4, 1.2, 0.8), vec![0.0, 0.5, 0.9], vec![DEFAULT_LOW_COST], 250),
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(SweepSpec {
        preset_name: Some(name.to_string()),
        base_params: base,
        density_grid,
        cost_grid,
        replications: 1000,
        max_timesteps,
        master_seed: DEFAULT_MASTER_SEED,
        engine: EngineConfig::default(),
        policy: PolicyKind::Optimal,
        solver: SolverOptions::default(),
        keep_trajectories: false,
    })
}
