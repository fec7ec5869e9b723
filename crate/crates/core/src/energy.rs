//! The functional `J(u, Omega) = int_D |grad u|^2 + beta int_{cut faces} u^2`
//! and the divergence-theorem cross-check of its surface term.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{extract_interface, InterfaceMesh};
use crate::grid::{CellSet, DomainMask, GridSpec, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub dirichlet: f64,
    /// `int u^2` over the interface, before the factor `beta`.
    pub surface: f64,
    pub beta: f64,
    pub total: f64,
    /// Active lower bound on `u` (0 when unconstrained).
    pub epsilon: f64,
}

impl EnergyBreakdown {
    pub fn new(dirichlet: f64, surface: f64, beta: f64, epsilon: f64) -> Self {
        Self { dirichlet, surface, beta, total: dirichlet + beta * surface, epsilon }
    }

    /// Flat `key: value` block.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut vals: [Option<f64>; 5] = [None; 5];
        const KEYS: [&str; 5] = ["dirichlet", "surface", "beta", "total", "epsilon"];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key: value`", lineno + 1)))?;
            let slot = KEYS
                .iter()
                .position(|&key| key == k.trim())
                .ok_or_else(|| Error::Parse(format!("line {}: unknown key `{}`", lineno + 1, k.trim())))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad number `{}`", lineno + 1, v.trim())))?;
            vals[slot] = Some(v);
        }
        let get = |k: usize| vals[k].ok_or_else(|| Error::Parse(format!("missing key `{}`", KEYS[k])));
        Ok(Self {
            dirichlet: get(0)?,
            surface: get(1)?,
            beta: get(2)?,
            total: get(3)?,
            epsilon: get(4)?,
        })
    }
}

impl fmt::Display for EnergyBreakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dirichlet: {}", self.dirichlet)?;
        writeln!(f, "surface: {}", self.surface)?;
        writeln!(f, "beta: {}", self.beta)?;
        writeln!(f, "total: {}", self.total)?;
        writeln!(f, "epsilon: {}", self.epsilon)
    }
}

/// Squared gradient on cell `(i, j)`: the mean of the squared one-sided
/// differences along the four cell edges, `sum_edges (du)^2 / (2 h^2)`.
///
/// Summed over cells this is the 5-point Dirichlet form, so the energy, the
/// state solver and the harmonic majorant all share one discretization.
pub fn cell_gradient_sq(u: &ScalarField, grid: &GridSpec, i: usize, j: usize) -> f64 {
    let u00 = u.at(grid, i, j);
    let u10 = u.at(grid, i + 1, j);
    let u01 = u.at(grid, i, j + 1);
    let u11 = u.at(grid, i + 1, j + 1);
    let s = (u10 - u00).powi(2) + (u11 - u01).powi(2) + (u01 - u00).powi(2) + (u11 - u10).powi(2);
    s / (2.0 * grid.h * grid.h)
}

/// Cell-centered gradient (bilinear element gradient at the cell center).
pub fn cell_gradient(u: &ScalarField, grid: &GridSpec, i: usize, j: usize) -> [f64; 2] {
    let u00 = u.at(grid, i, j);
    let u10 = u.at(grid, i + 1, j);
    let u01 = u.at(grid, i, j + 1);
    let u11 = u.at(grid, i + 1, j + 1);
    let inv = 0.5 / grid.h;
    [((u10 - u00) + (u11 - u01)) * inv, ((u01 - u00) + (u11 - u10)) * inv]
}

pub fn dirichlet_energy(u: &ScalarField, grid: &GridSpec, mask: &DomainMask) -> Result<f64> {
    grid.check_nodes(u.values.len())?;
    grid.check_cells(mask.in_d.len())?;
    u.check_finite()?;
    let area = grid.h * grid.h;
    let mut total = 0.0;
    for j in 0..grid.n2 {
        for i in 0..grid.n1 {
            if mask.in_d[grid.cell_index(i, j)] {
                total += area * cell_gradient_sq(u, grid, i, j);
            }
        }
    }
    Ok(total)
}

/// `sum_faces weight * (u_a^2 + u_b^2) / 2` over the endpoint nodes of each face.
pub fn surface_integral(u: &ScalarField, interface: &InterfaceMesh) -> f64 {
    interface
        .faces
        .iter()
        .map(|f| f.weight * 0.5 * (u.values[f.nodes[0]].powi(2) + u.values[f.nodes[1]].powi(2)))
        .sum()
}

pub fn total_energy(
    u: &ScalarField,
    omega: &CellSet,
    beta: f64,
    grid: &GridSpec,
    mask: &DomainMask,
) -> Result<EnergyBreakdown> {
    let dirichlet = dirichlet_energy(u, grid, mask)?;
    let mesh = extract_interface(omega, grid, mask)?;
    Ok(EnergyBreakdown::new(dirichlet, surface_integral(u, &mesh), beta, 0.0))
}

/// A smooth vector field known in closed form.
pub trait VectorField {
    fn value(&self, x: [f64; 2]) -> [f64; 2];
    fn divergence(&self, x: [f64; 2]) -> f64;
}

/// `xi(x) = psi(x) * direction` with the tensor bump
/// `psi(x) = phi((x1 - c1) / r1) * phi((x2 - c2) / r2)`,
/// `phi(s) = exp(1 - 1 / (1 - s^2))` on `|s| < 1`, zero outside, `phi(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpField {
    pub center: [f64; 2],
    pub radii: [f64; 2],
    pub direction: [f64; 2],
}

impl BumpField {
    fn profile(s: f64) -> (f64, f64) {
        if s.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let q = 1.0 - s * s;
        let p = (1.0 - 1.0 / q).exp();
        // d/ds exp(1 - 1/q) = p * (-2 s / q^2)
        (p, -2.0 * s / (q * q) * p)
    }

    pub fn psi_and_gradient(&self, x: [f64; 2]) -> (f64, [f64; 2]) {
        let s1 = (x[0] - self.center[0]) / self.radii[0];
        let s2 = (x[1] - self.center[1]) / self.radii[1];
        let (p1, d1) = Self::profile(s1);
        let (p2, d2) = Self::profile(s2);
        (p1 * p2, [d1 / self.radii[0] * p2, p1 * d2 / self.radii[1]])
    }
}

impl VectorField for BumpField {
    fn value(&self, x: [f64; 2]) -> [f64; 2] {
        let (p, _) = self.psi_and_gradient(x);
        [p * self.direction[0], p * self.direction[1]]
    }

    fn divergence(&self, x: [f64; 2]) -> f64 {
        let (_, g) = self.psi_and_gradient(x);
        g[0] * self.direction[0] + g[1] * self.direction[1]
    }
}

/// The zero field.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroField;

impl VectorField for ZeroField {
    fn value(&self, _: [f64; 2]) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn divergence(&self, _: [f64; 2]) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceCheck {
    pub boundary_value: f64,
    pub volume_value: f64,
    pub abs_diff: f64,
}

/// Compares `sum_faces w (xi . nu) u^2` with `sum_{Omega cells} h^2 div(u^2 xi)`,
/// the divergence being expanded as `2 u grad u . xi + u^2 div xi` with the
/// discrete cell gradient and the analytic `div xi`.
pub fn divergence_crosscheck(
    u: &ScalarField,
    omega: &CellSet,
    xi: &dyn VectorField,
    grid: &GridSpec,
    mask: &DomainMask,
) -> Result<DivergenceCheck> {
    grid.check_nodes(u.values.len())?;
    u.check_finite()?;
    check_support(xi, grid, mask)?;

    let mesh = extract_interface(omega, grid, mask)?;
    let mut boundary_value = 0.0;
    for f in &mesh.faces {
        let x = xi.value(f.midpoint);
        let u2 = 0.5 * (u.values[f.nodes[0]].powi(2) + u.values[f.nodes[1]].powi(2));
        boundary_value += f.weight * (x[0] * f.normal[0] + x[1] * f.normal[1]) * u2;
    }

    let area = grid.h * grid.h;
    let mut volume_value = 0.0;
    for j in 0..grid.n2 {
        for i in 0..grid.n1 {
            let c = grid.cell_index(i, j);
            if !(mask.in_d[c] && omega.member[c]) {
                continue;
            }
            let p = grid.cell_center(i, j);
            let uc = u.cell_average(grid, i, j);
            let g = cell_gradient(u, grid, i, j);
            let x = xi.value(p);
            volume_value += area * (2.0 * uc * (g[0] * x[0] + g[1] * x[1]) + uc * uc * xi.divergence(p));
        }
    }
    Ok(DivergenceCheck { boundary_value, volume_value, abs_diff: (boundary_value - volume_value).abs() })
}

/// `xi` must vanish on every cell outside `D` and on every `D` cell touching
/// the boundary of `D` (centers and face midpoints).
fn check_support(xi: &dyn VectorField, grid: &GridSpec, mask: &DomainMask) -> Result<()> {
    let h = grid.h;
    for j in 0..grid.n2 {
        for i in 0..grid.n1 {
            let c = grid.cell_index(i, j);
            let near_boundary = !mask.in_d[c]
                || [(-1, 0), (1, 0), (0, -1), (0, 1)].iter().any(|&(di, dj)| {
                    grid.cell_offset(i, j, di, dj)
                        .map_or(true, |(a, b)| !mask.in_d[grid.cell_index(a, b)])
                });
            if !near_boundary {
                continue;
            }
            let p = grid.cell_center(i, j);
            let probes = [
                p,
                [p[0] - 0.5 * h, p[1]],
                [p[0] + 0.5 * h, p[1]],
                [p[0], p[1] - 0.5 * h],
                [p[0], p[1] + 0.5 * h],
            ];
            for q in probes {
                let v = xi.value(q);
                let m = v[0].hypot(v[1]);
                if m > 0.0 {
                    return Err(Error::SupportViolation { magnitude: m, at: q });
                }
            }
        }
    }
    Ok(())
}
