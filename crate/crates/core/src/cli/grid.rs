use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{gamma_factor, BoundInputs, Bounds};
use crate::circuit::{qmg1_run, CapMode, Engine, QueueParams, Schedule, ServiceMode, SimulationResult};
use crate::des::{run_des, DesConfig, DesResult};
use crate::dist::ServiceDistribution;
use crate::error::{Error, Result};
use crate::metrics::MetricReport;
use crate::seed;

use super::config::ScenarioGrid;
use super::output::{opt, Csv};

/// Confidence parameter of the reported statistical bounds.
pub const BOUND_DELTA: f64 = 0.05;

/// Pipeline knobs shared by every cell of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(rename = "T", default = "default_slices")]
    pub t_slices: usize,
    /// `1/T` when omitted.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub engine: Option<Engine>,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub rejection: bool,
    #[serde(default)]
    pub service_mode: ServiceMode,
    #[serde(default)]
    pub cap_mode: CapMode,
}

fn default_shots() -> u64 {
    10_000
}

fn default_slices() -> usize {
    100
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            shots: default_shots(),
            t_slices: default_slices(),
            dt: None,
            engine: None,
            schedule: Schedule::default(),
            rejection: false,
            service_mode: ServiceMode::default(),
            cap_mode: CapMode::default(),
        }
    }
}

impl RunSettings {
    pub fn from_params(p: &QueueParams) -> Self {
        Self {
            shots: p.shots,
            t_slices: p.t_slices,
            dt: p.dt,
            engine: p.engine,
            schedule: p.schedule,
            rejection: p.rejection,
            service_mode: p.service_mode,
            cap_mode: p.cap_mode,
        }
    }

    pub fn write_to(&self, p: &mut QueueParams) {
        p.shots = self.shots;
        p.t_slices = self.t_slices;
        p.dt = self.dt;
        p.engine = self.engine;
        p.schedule = self.schedule;
        p.rejection = self.rejection;
        p.service_mode = self.service_mode;
        p.cap_mode = self.cap_mode;
    }

    pub fn params(&self, lambda: f64, service: ServiceDistribution, k: usize, seed: u64) -> QueueParams {
        let mut p = QueueParams::new(lambda, service, k);
        self.write_to(&mut p);
        p.seed = seed;
        p
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::Config("shots must be >= 1".into()));
        }
        if self.t_slices == 0 {
            return Err(Error::Config("T must be >= 1".into()));
        }
        Ok(())
    }
}

/// One `(K, λ, law)` combination of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub scenario_id: usize,
    pub k: usize,
    pub lambda: f64,
    pub dist_label: &'static str,
    pub service: ServiceDistribution,
}

/// Cells in scenario order: `K` outermost, then `λ`, then the law.
pub fn grid_cells(grid: &ScenarioGrid) -> Result<Vec<GridCell>> {
    let mut cells = Vec::new();
    for &k in &grid.k_list {
        for &lambda in &grid.lambda_list {
            for spec in &grid.dists {
                cells.push(GridCell {
                    scenario_id: cells.len(),
                    k,
                    lambda,
                    dist_label: spec.label(),
                    service: spec.resolve(lambda)?,
                });
            }
        }
    }
    Ok(cells)
}

pub fn row_seed(base: u64, scenario_id: usize, trial: usize) -> u64 {
    seed::derive(base, &[scenario_id as u64, trial as u64])
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub scenario_id: usize,
    pub k: usize,
    pub q: usize,
    pub lambda: f64,
    pub dist: &'static str,
    pub trial: usize,
    pub engine: Engine,
    pub metrics: MetricReport,
    pub quantum: SimulationResult,
    pub des: DesResult,
    pub bounds: Bounds,
    pub seed: u64,
}

pub const GRID_HEADER: [&str; 32] = [
    "scenario_id",
    "K",
    "Q",
    "lambda",
    "dist",
    "trial",
    "engine",
    "F",
    "JSD",
    "tv_halved",
    "l1_gap",
    "L_quantum",
    "L_des",
    "W_quantum",
    "W_des",
    "rel_err_L",
    "rel_err_W",
    "p_block_quantum",
    "p_block_des",
    "R_used",
    "p_succ",
    "acceptance_rate",
    "bound_tv_dkw",
    "bound_tv_main",
    "bound_tv_deviation",
    "bound_expected_tv",
    "bound_discretization",
    "bound_discretization_alt",
    "bound_rejection_decay",
    "bound_acceptance_lower",
    "shots",
    "seed",
];

impl GridRow {
    pub fn fields(&self) -> Vec<String> {
        let m = &self.metrics;
        let b = &self.bounds;
        let engine = match self.engine {
            Engine::Exact => "exact",
            Engine::Traced => "traced",
        };
        vec![
            self.scenario_id.to_string(),
            self.k.to_string(),
            self.q.to_string(),
            self.lambda.to_string(),
            self.dist.to_string(),
            self.trial.to_string(),
            engine.to_string(),
            m.fidelity.to_string(),
            m.jsd.to_string(),
            m.tv_halved.to_string(),
            m.l1_gap.to_string(),
            self.quantum.l_hat.to_string(),
            self.des.l.to_string(),
            self.quantum.w_hat.to_string(),
            self.des.w.to_string(),
            m.rel_err_l.to_string(),
            m.rel_err_w.to_string(),
            self.quantum.p_block_hat.to_string(),
            self.des.p_block.to_string(),
            self.quantum.r_used.to_string(),
            self.quantum.p_succ_measured.to_string(),
            self.quantum.acceptance_rate.to_string(),
            b.statistical_tv_dkw.to_string(),
            b.statistical_tv_main.to_string(),
            b.statistical_tv_deviation.to_string(),
            b.expected_tv.to_string(),
            b.discretization.to_string(),
            b.discretization_alt.to_string(),
            b.rejection_decay.to_string(),
            opt(b.acceptance_lower),
            self.quantum.raw_histogram.iter().sum::<u64>().to_string(),
            self.seed.to_string(),
        ]
    }
}

/// Runs one trial of `cell`: the quantum pipeline and the event-driven
/// reference share `seed` on separate streams.
pub fn grid_row(cell: &GridCell, trial: usize, seed: u64, settings: &RunSettings, des_events: u64) -> Result<GridRow> {
    let params = settings.params(cell.lambda, cell.service.clone(), cell.k, seed);
    let quantum = qmg1_run(&params)?;
    let des = run_des(&DesConfig::new(cell.lambda, cell.service.clone(), cell.k, seed).with_events(des_events))?;
    let metrics = MetricReport::compare(&quantum.p_q, &des.p_c, (quantum.l_hat, quantum.w_hat), (des.l, des.w))?;
    let mut bounds = Bounds::compute(&BoundInputs {
        shots: params.shots,
        delta: BOUND_DELTA,
        k: cell.k,
        lambda: cell.lambda,
        service: &cell.service,
        dt: params.dt(),
        m_size: quantum.marked.len(),
        r: quantum.r_used,
    });
    if params.rejection {
        bounds.acceptance_lower = Some(gamma_factor(&des.p_c, &quantum.pi_hat, &quantum.marked, quantum.r_used)?.1);
    }
    Ok(GridRow {
        scenario_id: cell.scenario_id,
        k: cell.k,
        q: params.q(),
        lambda: cell.lambda,
        dist: cell.dist_label,
        trial,
        engine: params.engine(),
        metrics,
        quantum,
        des,
        bounds,
        seed,
    })
}

/// Every `(cell, trial)` row, run in parallel and written in scenario order.
pub fn grid_rows(grid: &ScenarioGrid) -> Result<Vec<GridRow>> {
    let base = grid.seed.ok_or_else(|| Error::Config("grid runs need a seed".into()))?;
    let cells = grid_cells(grid)?;
    let jobs: Vec<(&GridCell, usize)> = cells.iter().flat_map(|c| (0..grid.trials).map(move |t| (c, t))).collect();
    jobs.par_iter()
        .map(|&(c, t)| grid_row(c, t, row_seed(base, c.scenario_id, t), &grid.settings, grid.des_events))
        .collect()
}

pub fn grid_csv(grid: &ScenarioGrid) -> Result<String> {
    let mut csv = Csv::new(&GRID_HEADER);
    for row in grid_rows(grid)? {
        csv.row(row.fields());
    }
    Ok(csv.finish())
}
