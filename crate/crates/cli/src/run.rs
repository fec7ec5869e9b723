//! Run orchestration: problem construction, certificates and output files.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use robinfb::certificates::{
    almost_minimality_constant, check_optimality_condition, curvature_residual, holder_seminorm,
    nondegeneracy_diagnostic, robin_residual, symmetrization_test, uniform_levels, CertificateReport, CheckRecord,
};
use robinfb::cut::{brute_force_set, solve_set};
use robinfb::io::{read_cells, read_field, read_text, write_cells, write_field, write_text, RunReport};
use robinfb::outer::{minimize, SolveReport};
use robinfb::problems::{custom, slab, square_symmetric, Problem, SlabOracle};
use robinfb::state::boundary_minimum;
use robinfb::{CellSet, DomainMask, Error, GridSpec, LateralBc, ScalarField};

use crate::config::{Certificate, Preset, RunConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_SOLVER: u8 = 1;
pub const EXIT_CERTIFICATE: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;

/// Number of levels sampled by the optimality and non-degeneracy checks.
pub const LEVELS: usize = 20;

/// Failure of a run, mapped to an exit code.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Solver(Error),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Solver(_) => EXIT_SOLVER,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Solver(e) => write!(f, "solver error: {e}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e.root() {
            Error::InvalidConfig(_) | Error::InvalidGrid(_) | Error::InvalidProblem(_) => RunError::Config(e.to_string()),
            _ => RunError::Solver(e),
        }
    }
}

pub fn build_problem(config: &RunConfig) -> Result<Problem, RunError> {
    let p = match config.preset {
        Preset::Slab => slab(config.slab_a, config.slab_width, config.h, config.v),
        Preset::SquareSymmetric => square_symmetric(config.square_side, config.h, config.v),
        Preset::Custom => custom(
            config.custom_width,
            config.custom_height,
            config.h,
            config.effective_lateral_bc(),
            config.custom_exterior,
            config.custom_disk_radius,
            config.v,
        ),
    };
    p.map_err(|e| RunError::Config(e.to_string()))
}

fn skipped(name: &str, reason: &Error) -> CertificateReport {
    eprintln!("note: {name} skipped: {reason}");
    CertificateReport::nothing_to_check(name, 0.0)
}

/// Runs the selected certificates on `(u, omega)`. Checks whose
/// preconditions do not hold on this geometry are reported as having nothing
/// to check.
pub fn run_certificates(
    config: &RunConfig,
    problem: &Problem,
    u: &ScalarField,
    omega: &CellSet,
) -> Result<Vec<CertificateReport>, RunError> {
    let (g, m) = (&problem.grid, &problem.mask);
    let beta = config.solve.beta;
    let levels = uniform_levels(boundary_minimum(g, m, &problem.v), LEVELS);
    let mut out = Vec::new();
    for &c in &config.certificates {
        let name = c.name();
        let result = match c {
            Certificate::Optimality => check_optimality_condition(u, beta, &levels, g, m, config.tol_cert),
            Certificate::Nondegeneracy => nondegeneracy_diagnostic(u, beta, &levels, g, m, config.tol_cert).map(|n| n.report),
            Certificate::Holder => holder_seminorm(u, config.holder_delta, g, m, config.seed).map(|est| {
                let margin = if est.value.is_finite() { 0.0 } else { f64::NEG_INFINITY };
                let record = CheckRecord::new(&[("delta", config.holder_delta)], est.value, est.value, margin, 0.0);
                CertificateReport::new("holder", 0.0, vec![record])
                    .with("value", est.value)
                    .with("pairs", est.pairs as f64)
                    .with("nodes", est.nodes as f64)
            }),
            Certificate::Robin => robin_residual(u, omega, beta, g, m, config.residual_envelope).map(|r| r.report),
            Certificate::Curvature => {
                curvature_residual(u, omega, beta, g, m, config.curvature_window, config.residual_envelope).map(|r| r.report)
            }
            Certificate::AlmostMinimality => {
                let radii = [4.0 * g.h, 8.0 * g.h];
                almost_minimality_constant(omega, g, m, &radii, config.almost_min_c_max).map(|a| a.report)
            }
            Certificate::Symmetrization => symmetrization_test(u, omega, beta, g, m, config.tol_cert).map(|s| s.report),
        };
        match result {
            Ok(report) => out.push(report),
            Err(e) => match e.root() {
                Error::UnsupportedGeometry(_) | Error::InvalidField(_) | Error::InvalidRegion(_) => {
                    out.push(skipped(name, &e))
                }
                _ => return Err(RunError::Solver(e)),
            },
        }
    }
    Ok(out)
}

pub fn certificates_pass(reports: &[CertificateReport]) -> bool {
    reports.iter().all(CertificateReport::acceptable)
}

fn write_outputs(
    dir: &Path,
    grid: &GridSpec,
    solve: Option<&SolveReport>,
    fields: Option<(&ScalarField, &CellSet)>,
    certificates: &[CertificateReport],
) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|e| RunError::Solver(Error::Io(format!("{}: {e}", dir.display()))))?;
    let text = RunReport { solve, certificates }.to_text()?;
    write_text(&dir.join("report.txt"), &text)?;
    if let Some((u, omega)) = fields {
        write_text(&dir.join("u.csv"), &write_field(u, grid)?)?;
        write_text(&dir.join("omega.csv"), &write_cells(omega, grid)?)?;
    }
    Ok(())
}

/// Outcome of a solve: the report, the certificate reports and the exit code.
pub struct Outcome {
    pub solve: Option<SolveReport>,
    pub certificates: Vec<CertificateReport>,
    pub exit_code: u8,
}

pub fn solve(config: &RunConfig) -> Result<Outcome, RunError> {
    let problem = build_problem(config)?;
    let report = minimize(&problem, &config.solve)?;
    let certificates = run_certificates(config, &problem, &report.u, &report.omega)?;
    write_outputs(&config.output_dir, &problem.grid, Some(&report), Some((&report.u, &report.omega)), &certificates)?;
    let exit_code = if certificates_pass(&certificates) { EXIT_OK } else { EXIT_CERTIFICATE };
    Ok(Outcome { solve: Some(report), certificates, exit_code })
}

pub fn certify(config: &RunConfig, u_path: &Path, omega_path: &Path) -> Result<Outcome, RunError> {
    let problem = build_problem(config)?;
    let u = read_field(&read_text(u_path)?, &problem.grid).map_err(|e| RunError::Config(format!("{}: {e}", u_path.display())))?;
    let omega = read_cells(&read_text(omega_path)?, &problem.grid)
        .map_err(|e| RunError::Config(format!("{}: {e}", omega_path.display())))?;
    omega
        .check_admissible(&problem.grid, &problem.mask)
        .map_err(|e| RunError::Config(format!("{}: {e}", omega_path.display())))?;
    let certificates = run_certificates(config, &problem, &u, &omega)?;
    write_outputs(&config.output_dir, &problem.grid, None, None, &certificates)?;
    let exit_code = if certificates_pass(&certificates) { EXIT_OK } else { EXIT_CERTIFICATE };
    Ok(Outcome { solve: None, certificates, exit_code })
}

/// Closed-form slab solution as text: a header with `c`, the slope and the
/// energy per unit width, then `x2,g` rows at node spacing `h`.
pub fn oracle_table(beta: f64, a: f64, h: f64) -> Result<String, RunError> {
    if !(beta >= 0.0 && beta.is_finite()) || !(a > 0.0) || !(h > 0.0) {
        return Err(RunError::Config(format!("need beta >= 0, a > 0, h > 0; got beta = {beta}, a = {a}, h = {h}")));
    }
    let rows = (2.0 * a / h).round();
    if (rows * h - 2.0 * a).abs() > 1e-9 * a {
        return Err(RunError::Config(format!("2a = {} is not a multiple of h = {h}", 2.0 * a)));
    }
    let o = SlabOracle::new(beta, a);
    let mut out = format!(
        "# slab beta = {beta} a = {a} h = {h}\n# c = {:.17e}\n# slope = {:.17e}\n# energy_per_width = {:.17e}\nx2,g\n",
        o.c, o.slope, o.energy
    );
    for j in 0..=rows as usize {
        let x2 = -a + j as f64 * h;
        out.push_str(&format!("{x2:.17e},{:.17e}\n", o.value(x2)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutCheck {
    pub trials: usize,
    pub mismatches: usize,
    pub max_gap: f64,
}

/// Compares the min-cut set step with exhaustive enumeration on random
/// instances over 3 x 4 cell grids.
pub fn cutcheck(trials: usize, seed: u64) -> Result<CutCheck, RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n1, n2) = (3, 4);
    let mut check = CutCheck { trials, mismatches: 0, max_gap: 0.0 };
    for _ in 0..trials {
        let bc = if rng.gen_bool(0.5) { LateralBc::Periodic } else { LateralBc::Dirichlet };
        let g = GridSpec::new(n1, n2, 0.25, [0.0, 0.0], bc)?;
        let in_e: Vec<bool> = (0..g.cell_count()).map(|_| rng.gen_bool(0.5)).collect();
        let in_d: Vec<bool> = (0..g.cell_count()).map(|_| rng.gen_bool(0.7)).collect();
        let mask = DomainMask::new(&g, in_d, in_e.clone())
            .or_else(|_| DomainMask::new(&g, vec![true; g.cell_count()], in_e))?;
        let mut u = ScalarField::new(&g, (0..g.node_count()).map(|_| rng.gen_range(0.0..2.0)).collect())?;
        u.sync_periodic(&g);
        let beta = rng.gen_range(0.0..4.0);
        let cut = solve_set(&u, beta, &g, &mask)?;
        let (_, best) = brute_force_set(&u, beta, &g, &mask)?;
        let gap = (cut.cut_value - best).abs();
        check.max_gap = check.max_gap.max(gap);
        if gap > 1e-12 {
            check.mismatches += 1;
        }
    }
    Ok(check)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub beta: f64,
    pub h: f64,
    pub total: f64,
    pub dirichlet: f64,
    pub surface: f64,
    pub sweeps: usize,
    pub certificates_pass: bool,
    pub output_dir: PathBuf,
}

pub const SWEEP_HEADER: &str = "beta,h,total,dirichlet,surface,sweeps,certificates_pass,output_dir";

impl SweepRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{:.17e},{:.17e},{:.17e},{},{},{}",
            self.beta,
            self.h,
            self.total,
            self.dirichlet,
            self.surface,
            self.sweeps,
            self.certificates_pass,
            self.output_dir.display()
        )
    }
}

/// Solves every `(beta, h)` combination concurrently, each in its own
/// subdirectory of the configured output directory.
pub fn sweep(config: &RunConfig, betas: &[f64], hs: &[f64]) -> Result<Vec<SweepRow>, RunError> {
    let jobs: Vec<(f64, f64)> = betas.iter().flat_map(|&b| hs.iter().map(move |&h| (b, h))).collect();
    let rows: Result<Vec<SweepRow>, RunError> = jobs
        .par_iter()
        .enumerate()
        .map(|(k, &(beta, h))| {
            let mut c = config.clone();
            c.solve.beta = beta;
            c.h = h;
            c.output_dir = config.output_dir.join(format!("run_{k:03}"));
            let outcome = solve(&c)?;
            let report = outcome.solve.expect("solve always reports");
            Ok(SweepRow {
                beta,
                h,
                total: report.final_energy.total,
                dirichlet: report.final_energy.dirichlet,
                surface: report.final_energy.surface,
                sweeps: report.iters.iter().sum(),
                certificates_pass: outcome.exit_code == EXIT_OK,
                output_dir: c.output_dir,
            })
        })
        .collect();
    let rows = rows?;
    let mut table = String::from(SWEEP_HEADER);
    table.push('\n');
    for r in &rows {
        table.push_str(&r.to_csv());
        table.push('\n');
    }
    std::fs::create_dir_all(&config.output_dir).map_err(|e| RunError::Solver(e.into()))?;
    write_text(&config.output_dir.join("sweep.csv"), &table)?;
    Ok(rows)
}
