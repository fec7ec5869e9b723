//! Continuation in the lower bound `eps` with alternating minimization: at
//! each level, the `u`-step and the set step are repeated until one full
//! sweep lowers the energy by less than `tol_outer` relative.
//!
//! Both steps are exact block minimizations, so the energy never increases;
//! the result is a partial optimum, not a certified global minimizer.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cut::solve_set;
use crate::energy::{total_energy, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::grid::{CellSet, ScalarField};
use crate::problems::Problem;
use crate::state::{boundary_minimum, harmonic_majorant, solve_state, CgOptions, StateProblem};

/// Relative slack allowed on monotone-descent assertions.
pub const DESCENT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub beta: f64,
    pub eps0: f64,
    pub eps_min: f64,
    pub rho: f64,
    pub tol_outer: f64,
    pub max_outer: usize,
    pub tol_cg: f64,
    /// `None`: `50 sqrt(unknowns)`.
    pub max_iter: Option<usize>,
    /// Restart every level from the initial pair instead of the previous
    /// level's output (testing only).
    pub cold_start: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            eps0: 0.5,
            eps_min: 1e-3,
            rho: 0.5,
            tol_outer: 1e-9,
            max_outer: 50,
            tol_cg: 1e-10,
            max_iter: None,
            cold_start: false,
        }
    }
}

impl SolveConfig {
    pub fn cg(&self) -> CgOptions {
        CgOptions { tol: self.tol_cg, max_iter: self.max_iter }
    }

    /// Checks everything except `eps0 < min v`, which needs the problem.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be finite and >= 0, got {}", self.beta));
        }
        if !(self.eps_min > 0.0 && self.eps_min <= self.eps0) {
            return bad(format!("need 0 < eps_min <= eps0, got eps_min = {}, eps0 = {}", self.eps_min, self.eps0));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad(format!("rho must lie in (0, 1), got {}", self.rho));
        }
        if !(self.tol_outer > 0.0) {
            return bad(format!("tol_outer must be > 0, got {}", self.tol_outer));
        }
        if self.max_outer == 0 {
            return bad("max_outer must be >= 1".into());
        }
        if !(self.tol_cg > 0.0 && self.tol_cg < 1.0) {
            return bad(format!("tol_cg must lie in (0, 1), got {}", self.tol_cg));
        }
        if self.max_iter == Some(0) {
            return bad("max_iter must be >= 1".into());
        }
        Ok(())
    }
}

/// Geometric levels `eps0, rho eps0, ...` with the last one clamped to `eps_min`.
pub fn continuation_schedule(eps0: f64, eps_min: f64, rho: f64) -> Result<Vec<f64>> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidConfig(format!("rho must lie in (0, 1), got {rho}")));
    }
    if !(eps_min > 0.0 && eps_min <= eps0) {
        return Err(Error::InvalidConfig(format!("need 0 < eps_min <= eps0, got {eps_min}, {eps0}")));
    }
    let mut levels = vec![eps0];
    let mut eps = eps0;
    while eps > eps_min {
        eps *= rho;
        levels.push(eps.max(eps_min));
    }
    Ok(levels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Initial,
    State,
    Set,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub level: usize,
    pub sweep: usize,
    pub step: Step,
    pub energy: EnergyBreakdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    /// At least one level hit `max_outer` sweeps.
    MaxOuter,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub energy_trace: Vec<TraceEntry>,
    pub final_energy: EnergyBreakdown,
    pub eps_levels: Vec<f64>,
    /// Sweeps per level.
    pub iters: Vec<usize>,
    /// Total conjugate-gradient iterations per level.
    pub cg_iters: Vec<usize>,
    pub level_energies: Vec<f64>,
    pub set_step_degenerate: bool,
    pub termination: Termination,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub u: ScalarField,
    #[serde(skip)]
    pub omega: CellSet,
}

fn breakdown(problem: &Problem, u: &ScalarField, omega: &CellSet, beta: f64, eps: f64) -> Result<EnergyBreakdown> {
    let mut e = total_energy(u, omega, beta, &problem.grid, &problem.mask)?;
    e.epsilon = eps;
    Ok(e)
}

fn check_descent(step: &str, before: f64, after: f64) -> Result<()> {
    if after > before + DESCENT_SLACK * before.abs().max(after.abs()) {
        return Err(Error::Monotonicity { step: step.into(), before, after });
    }
    Ok(())
}

/// Runs the continuation from `E` extended into `D` and the harmonic
/// extension of the boundary data.
pub fn minimize(problem: &Problem, config: &SolveConfig) -> Result<SolveReport> {
    let u0 = harmonic_majorant(&problem.grid, &problem.mask, &problem.v, &config.cg())
        .map_err(|e| e.context("harmonic majorant"))?;
    minimize_from(problem, config, &u0, &CellSet::exterior_extension(&problem.mask))
}

/// Runs the continuation from a given feasible pair.
pub fn minimize_from(problem: &Problem, config: &SolveConfig, u_init: &ScalarField, omega_init: &CellSet) -> Result<SolveReport> {
    let start = Instant::now();
    config.validate()?;
    let (grid, mask) = (&problem.grid, &problem.mask);
    omega_init.check_admissible(grid, mask)?;
    let m = boundary_minimum(grid, mask, &problem.v);
    if !(config.eps0 < m) {
        return Err(Error::InvalidConfig(format!("eps0 = {} must be below min v = {m}", config.eps0)));
    }
    let levels = continuation_schedule(config.eps0, config.eps_min, config.rho)?;
    let beta = config.beta;
    let cg = config.cg();

    grid.check_nodes(u_init.values.len())?;
    u_init.check_finite()?;
    let mut u = u_init.clone();
    for j in 0..=grid.n2 {
        for i in 0..=grid.n1 {
            let n = grid.node_index(i, j);
            u.values[n] = if mask.node_is_free(grid, i, j) { u.values[n].max(config.eps0) } else { problem.v.values[n] };
        }
    }
    u.sync_periodic(grid);
    let mut omega = omega_init.clone();
    let mut trace = Vec::new();
    let mut iters = Vec::with_capacity(levels.len());
    let mut cg_iters = Vec::with_capacity(levels.len());
    let mut level_energies: Vec<f64> = Vec::with_capacity(levels.len());
    let mut degenerate = false;
    let mut termination = Termination::Converged;

    let initial_u = u.clone();
    let initial_omega = omega.clone();
    let mut energy = breakdown(problem, &u, &omega, beta, config.eps0)?;
    trace.push(TraceEntry { level: 0, sweep: 0, step: Step::Initial, energy });

    for (level, &eps) in levels.iter().enumerate() {
        let ctx = |e: Error, sweep: usize, what: &str| e.context(format!("level {level} (eps = {eps:e}), sweep {sweep}, {what}"));
        if config.cold_start && level > 0 {
            u = initial_u.clone();
            omega = initial_omega.clone();
            energy = breakdown(problem, &u, &omega, beta, eps)?;
        }
        let mut sweeps = 0;
        let mut cg_total = 0;
        let mut converged = false;
        while sweeps < config.max_outer {
            sweeps += 1;
            let sweep_start = energy.total;

            let p = StateProblem { omega: &omega, v: &problem.v, beta, epsilon: eps, cg };
            let sol = solve_state(&p, grid, mask, &u).map_err(|e| ctx(e, sweeps, "state step"))?;
            cg_total += sol.iterations;
            u = sol.u;
            let after = breakdown(problem, &u, &omega, beta, eps)?;
            check_descent("state step", energy.total, after.total).map_err(|e| ctx(e, sweeps, "state step"))?;
            energy = after;
            trace.push(TraceEntry { level, sweep: sweeps, step: Step::State, energy });

            let cut = solve_set(&u, beta, grid, mask).map_err(|e| ctx(e, sweeps, "set step"))?;
            degenerate |= cut.degenerate;
            if !cut.degenerate {
                let after = breakdown(problem, &u, &cut.omega, beta, eps)?;
                check_descent("set step", energy.total, after.total).map_err(|e| ctx(e, sweeps, "set step"))?;
                omega = cut.omega;
                energy = after;
            }
            trace.push(TraceEntry { level, sweep: sweeps, step: Step::Set, energy });

            if sweep_start - energy.total <= config.tol_outer * energy.total.abs() {
                converged = true;
                break;
            }
        }
        if !converged {
            termination = Termination::MaxOuter;
        }
        if let Some(&prev) = level_energies.last() {
            if !config.cold_start {
                check_descent("continuation", prev, energy.total).map_err(|e| e.context(format!("level {level}")))?;
            }
        }
        level_energies.push(energy.total);
        iters.push(sweeps);
        cg_iters.push(cg_total);
    }

    let final_energy = breakdown(problem, &u, &omega, beta, config.eps_min)?;
    Ok(SolveReport {
        energy_trace: trace,
        final_energy,
        eps_levels: levels,
        iters,
        cg_iters,
        level_energies,
        set_step_degenerate: degenerate,
        termination,
        wall_time_s: start.elapsed().as_secs_f64(),
        u,
        omega,
    })
}
