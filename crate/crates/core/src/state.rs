//! The `u`-step: for a fixed set, minimize the Dirichlet energy plus the
//! interface term subject to `u = v` on the Dirichlet layer and `u >= eps`.
//!
//! The energy is the quadratic `u' L u + u' M u`, with `L` the 5-point form
//! (edge weights `1/2` per adjacent `D` cell) and `M` the lumped interface
//! mass (`beta h / 2` on both endpoint nodes of every cut face). Free nodes
//! solve `(L + M)_ff u_f = -L_fd v_d` under the bound, by Jacobi-preconditioned
//! conjugate gradients with clip-and-restart projection.

use crate::energy::total_energy;
use crate::error::{Error, Result};
use crate::geometry::extract_interface;
use crate::grid::{CellSet, DomainMask, GridSpec, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Relative projected-gradient tolerance.
    pub tol: f64,
    /// Iteration cap; `None` means `50 sqrt(unknowns)`.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: None }
    }
}

impl CgOptions {
    fn cap(&self, unknowns: usize) -> usize {
        self.max_iter
            .unwrap_or_else(|| (50.0 * (unknowns as f64).sqrt()).ceil() as usize)
            .max(1)
    }
}

#[derive(Debug, Clone)]
pub struct StateProblem<'a> {
    pub omega: &'a CellSet,
    /// Boundary data; only its values on the Dirichlet layer are used.
    pub v: &'a ScalarField,
    pub beta: f64,
    pub epsilon: f64,
    pub cg: CgOptions,
}

#[derive(Debug, Clone)]
pub struct StateSolution {
    pub u: ScalarField,
    pub iterations: usize,
}

/// Sparse SPD system over the free nodes.
struct System {
    /// Node index (canonical) of each unknown.
    nodes: Vec<usize>,
    diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    rhs: Vec<f64>,
}

impl System {
    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for r in 0..self.len() {
            let mut s = self.diag[r] * x[r];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            out[r] = s;
        }
    }

    /// `x' A x / 2 - b' x`
    fn quadratic(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.len()];
        self.apply(x, &mut ax);
        x.iter().zip(&ax).zip(&self.rhs).map(|((xi, ai), bi)| 0.5 * xi * ai - bi * xi).sum()
    }
}

/// Node-to-node edges of the 5-point form with their weights (1/2 per
/// adjacent `D` cell), using canonical node indices.
fn edges(grid: &GridSpec, mask: &DomainMask) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::with_capacity(2 * grid.node_count());
    let in_d = |ci: isize, cj: isize| -> bool {
        if cj < 0 || cj >= grid.n2 as isize {
            return false;
        }
        let ci = if grid.periodic() {
            ci.rem_euclid(grid.n1 as isize)
        } else if ci < 0 || ci >= grid.n1 as isize {
            return false;
        } else {
            ci
        };
        mask.in_d[grid.cell_index(ci as usize, cj as usize)]
    };
    let canon = |i: usize, j: usize| grid.canonical_node(grid.node_index(i, j));
    // x-directed edges (i, j) - (i + 1, j)
    for j in 0..=grid.n2 {
        for i in 0..grid.n1 {
            let n = in_d(i as isize, j as isize - 1) as u8 + in_d(i as isize, j as isize) as u8;
            if n > 0 {
                out.push((canon(i, j), canon(i + 1, j), 0.5 * n as f64));
            }
        }
    }
    // y-directed edges (i, j) - (i, j + 1)
    let ncols = if grid.periodic() { grid.n1 } else { grid.n1 + 1 };
    for j in 0..grid.n2 {
        for i in 0..ncols {
            let n = in_d(i as isize - 1, j as isize) as u8 + in_d(i as isize, j as isize) as u8;
            if n > 0 {
                out.push((canon(i, j), canon(i, j + 1), 0.5 * n as f64));
            }
        }
    }
    out
}

fn assemble(grid: &GridSpec, mask: &DomainMask, omega: Option<&CellSet>, beta: f64, v: &ScalarField) -> Result<System> {
    let mut unknown = vec![usize::MAX; grid.node_count()];
    let mut nodes = Vec::new();
    for j in 0..=grid.n2 {
        for i in 0..=grid.n1 {
            if mask.node_is_free(grid, i, j) {
                let n = grid.node_index(i, j);
                unknown[n] = nodes.len();
                nodes.push(n);
            }
        }
    }
    let m = nodes.len();
    let mut diag = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for (a, b, w) in edges(grid, mask) {
        match (unknown[a], unknown[b]) {
            (usize::MAX, usize::MAX) => {}
            (ra, usize::MAX) => {
                diag[ra] += w;
                rhs[ra] += w * v.values[b];
            }
            (usize::MAX, rb) => {
                diag[rb] += w;
                rhs[rb] += w * v.values[a];
            }
            (ra, rb) => {
                diag[ra] += w;
                diag[rb] += w;
                adj[ra].push((rb, -w));
                adj[rb].push((ra, -w));
            }
        }
    }
    if let Some(omega) = omega {
        if beta > 0.0 {
            let mesh = extract_interface(omega, grid, mask)?;
            let lump = 0.5 * beta * grid.h;
            for f in &mesh.faces {
                for &n in &f.nodes {
                    let r = unknown[grid.canonical_node(n)];
                    if r != usize::MAX {
                        diag[r] += lump;
                    }
                }
            }
        }
    }
    let mut row_ptr = Vec::with_capacity(m + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for row in adj {
        for (c, w) in row {
            cols.push(c);
            vals.push(w);
        }
        row_ptr.push(cols.len());
    }
    Ok(System { nodes, diag, row_ptr, cols, vals, rhs })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn projected_gradient_norm(x: &[f64], g: &[f64], lower: f64) -> f64 {
    x.iter()
        .zip(g)
        .map(|(&xi, &gi)| if xi <= lower && gi > 0.0 { 0.0 } else { gi * gi })
        .sum::<f64>()
        .sqrt()
}

/// Minimizes `x' A x / 2 - b' x` over `x >= lower`. The stopping test is
/// relative to the larger of the initial projected gradient and `|b|`, so a
/// warm start at the solution terminates immediately.
fn solve_bounded(sys: &System, x: &mut [f64], lower: f64, opts: &CgOptions) -> Result<usize> {
    let n = sys.len();
    if n == 0 {
        return Ok(0);
    }
    let max_iter = opts.cap(n);
    for xi in x.iter_mut() {
        *xi = xi.max(lower);
    }
    let mut g = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let gradient = |x: &[f64], g: &mut [f64]| {
        sys.apply(x, g);
        for (gi, bi) in g.iter_mut().zip(&sys.rhs) {
            *gi -= bi;
        }
    };
    gradient(x, &mut g);
    let reference = projected_gradient_norm(x, &g, lower).max(dot(&sys.rhs, &sys.rhs).sqrt());
    if reference == 0.0 {
        return Ok(0);
    }
    let target = opts.tol * reference;
    let mut iters = 0;
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    loop {
        gradient(x, &mut g);
        let pg = projected_gradient_norm(x, &g, lower);
        if pg <= target {
            return Ok(iters);
        }
        let active: Vec<bool> = x.iter().zip(&g).map(|(&xi, &gi)| xi <= lower && gi > 0.0).collect();
        for k in 0..n {
            r[k] = if active[k] { 0.0 } else { -g[k] };
            z[k] = r[k] / sys.diag[k];
            p[k] = z[k];
        }
        let mut rz = dot(&r, &z);
        loop {
            if iters >= max_iter {
                return Err(Error::SolverFailure {
                    iterations: iters,
                    residual: projected_gradient_norm(x, &g, lower) / reference,
                });
            }
            iters += 1;
            sys.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 || rz <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            let mut alpha_max = f64::INFINITY;
            for k in 0..n {
                if p[k] < 0.0 {
                    alpha_max = alpha_max.min((lower - x[k]) / p[k]);
                }
            }
            if alpha <= alpha_max {
                for k in 0..n {
                    x[k] += alpha * p[k];
                    g[k] += alpha * ap[k];
                    r[k] = if active[k] { 0.0 } else { -g[k] };
                }
                if projected_gradient_norm(x, &g, lower) <= target {
                    break;
                }
                if dot(&r, &r).sqrt() <= 0.1 * target {
                    // Only bound-released nodes remain: restart with a new active set.
                    break;
                }
                for k in 0..n {
                    z[k] = r[k] / sys.diag[k];
                }
                let rz_new = dot(&r, &z);
                let beta = rz_new / rz;
                rz = rz_new;
                for k in 0..n {
                    p[k] = if active[k] { 0.0 } else { z[k] + beta * p[k] };
                }
            } else {
                // The step leaves the feasible box. Take whichever is lower of
                // the truncated step and the projected full step, then restart.
                let truncated: Vec<f64> = (0..n).map(|k| (x[k] + alpha_max * p[k]).max(lower)).collect();
                let projected: Vec<f64> = (0..n).map(|k| (x[k] + alpha * p[k]).max(lower)).collect();
                let next = if sys.quadratic(&projected) <= sys.quadratic(&truncated) { projected } else { truncated };
                x.copy_from_slice(&next);
                break;
            }
        }
    }
}

/// Minimum of `v` over the Dirichlet layer (nodes that are not unknowns).
pub fn boundary_minimum(grid: &GridSpec, mask: &DomainMask, v: &ScalarField) -> f64 {
    let mut m = f64::INFINITY;
    for j in 0..=grid.n2 {
        for i in 0..=grid.n1 {
            if !mask.node_is_free(grid, i, j) {
                m = m.min(v.at(grid, i, j));
            }
        }
    }
    m
}

fn scatter(grid: &GridSpec, sys: &System, x: &[f64], base: &ScalarField) -> ScalarField {
    let mut u = base.clone();
    for (&n, &xi) in sys.nodes.iter().zip(x) {
        u.values[n] = xi;
    }
    u.sync_periodic(grid);
    u
}

/// Discrete harmonic extension of the boundary data (5-point stencil).
pub fn harmonic_majorant(grid: &GridSpec, mask: &DomainMask, v: &ScalarField, cg: &CgOptions) -> Result<ScalarField> {
    grid.check_nodes(v.values.len())?;
    v.check_finite()?;
    let sys = assemble(grid, mask, None, 0.0, v)?;
    let start = v.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut x = vec![start; sys.len()];
    solve_bounded(&sys, &mut x, f64::NEG_INFINITY, cg)?;
    Ok(scatter(grid, &sys, &x, v))
}

/// Solves the bound-constrained `u`-step from `u_init` (clipped to `eps` and
/// overwritten by `v` on the Dirichlet layer). The returned field never has
/// higher energy than the feasible starting point.
pub fn solve_state(p: &StateProblem<'_>, grid: &GridSpec, mask: &DomainMask, u_init: &ScalarField) -> Result<StateSolution> {
    grid.check_nodes(p.v.values.len())?;
    grid.check_nodes(u_init.values.len())?;
    p.v.check_finite()?;
    u_init.check_finite()?;
    p.omega.check_admissible(grid, mask)?;
    if !(p.beta >= 0.0) {
        return Err(Error::InvalidProblem(format!("beta must be >= 0, got {}", p.beta)));
    }
    let m = boundary_minimum(grid, mask, p.v);
    if !(p.epsilon >= 0.0 && p.epsilon < m) {
        return Err(Error::InvalidProblem(format!(
            "lower bound eps = {} must lie in [0, m) with m = {m}",
            p.epsilon
        )));
    }

    let sys = assemble(grid, mask, Some(p.omega), p.beta, p.v)?;
    let mut x: Vec<f64> = sys.nodes.iter().map(|&n| u_init.values[n].max(p.epsilon)).collect();
    let start = scatter(grid, &sys, &x, p.v);
    let before = total_energy(&start, p.omega, p.beta, grid, mask)?.total;

    let iterations = solve_bounded(&sys, &mut x, p.epsilon, &p.cg)?;
    let u = scatter(grid, &sys, &x, p.v);

    let after = total_energy(&u, p.omega, p.beta, grid, mask)?.total;
    if after > before + 1e-12 * before.abs() {
        return Err(Error::Monotonicity { step: "state solve".into(), before, after });
    }
    Ok(StateSolution { u, iterations })
}

/// 5-point Laplacian `(sum of neighbors - 4 u) / h^2` at every free node
/// (`None` elsewhere).
pub fn laplacian_residual(u: &ScalarField, grid: &GridSpec, mask: &DomainMask) -> Vec<Option<f64>> {
    let mut out = vec![None; grid.node_count()];
    for j in 0..=grid.n2 {
        for i in 0..=grid.n1 {
            if !mask.node_is_free(grid, i, j) {
                continue;
            }
            let mut s = -4.0 * u.at(grid, i, j);
            for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                let (a, b) = grid.node_offset(i, j, di, dj).expect("free nodes have four neighbors");
                s += u.at(grid, a, b);
            }
            out[grid.node_index(i, j)] = Some(s / (grid.h * grid.h));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::LateralBc;

    fn unit(n: usize) -> (GridSpec, DomainMask) {
        let g = GridSpec::new(n, n, 1.0 / n as f64, [0.0, 0.0], LateralBc::Dirichlet).unwrap();
        let m = DomainMask::full(&g, |_| false).unwrap();
        (g, m)
    }

    #[test]
    fn majorant_of_constant_data() {
        let (g, m) = unit(10);
        let v = ScalarField::constant(&g, 1.0);
        let h = harmonic_majorant(&g, &m, &v, &CgOptions::default()).unwrap();
        assert!(h.values.iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn majorant_reproduces_linear_data() {
        let (g, m) = unit(12);
        let v = ScalarField::from_fn(&g, |x| x[0]);
        let h = harmonic_majorant(&g, &m, &v, &CgOptions::default()).unwrap();
        for (a, b) in h.values.iter().zip(&v.values) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn majorant_on_periodic_slab() {
        let g = GridSpec::new(8, 8, 0.125, [0.0, -0.5], LateralBc::Periodic).unwrap();
        let m = DomainMask::full(&g, |x| x[1] > 0.0).unwrap();
        let v = ScalarField::constant(&g, 1.0);
        let h = harmonic_majorant(&g, &m, &v, &CgOptions::default()).unwrap();
        assert!(h.values.iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn infeasible_epsilon_is_rejected() {
        let (g, m) = unit(4);
        let v = ScalarField::constant(&g, 1.0);
        let omega = CellSet::exterior_extension(&m);
        let p = StateProblem { omega: &omega, v: &v, beta: 1.0, epsilon: 1.0, cg: CgOptions::default() };
        assert!(matches!(solve_state(&p, &g, &m, &v), Err(Error::InvalidProblem(_))));
    }

    #[test]
    fn iteration_cap_reports_failure() {
        let (g, m) = unit(16);
        let v = ScalarField::from_fn(&g, |x| 1.0 + x[0] * x[1]);
        let cg = CgOptions { tol: 1e-14, max_iter: Some(2) };
        assert!(matches!(harmonic_majorant(&g, &m, &v, &cg), Err(Error::SolverFailure { .. })));
    }

    #[test]
    fn active_bound_is_respected() {
        // A large Robin weight drags u toward zero along the interface; a
        // high floor then binds.
        let g = GridSpec::new(16, 16, 1.0 / 16.0, [0.0, -0.5], LateralBc::Dirichlet).unwrap();
        let m = DomainMask::full(&g, |x| x[1] > 0.0).unwrap();
        let v = ScalarField::constant(&g, 1.0);
        let omega = CellSet::exterior_extension(&m);
        let free = StateProblem { omega: &omega, v: &v, beta: 50.0, epsilon: 0.0, cg: CgOptions::default() };
        let u0 = solve_state(&free, &g, &m, &v).unwrap().u;
        let floor = 0.6;
        assert!(u0.min_on_domain(&g, &m) < floor);
        let bound = StateProblem { epsilon: floor, ..free };
        let u1 = solve_state(&bound, &g, &m, &v).unwrap().u;
        assert!(u1.values.iter().all(|&x| x >= floor));
        // the constrained optimum costs more than the free one
        let e0 = total_energy(&u0, &omega, 50.0, &g, &m).unwrap().total;
        let e1 = total_energy(&u1, &omega, 50.0, &g, &m).unwrap().total;
        assert!(e1 >= e0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        const N: usize = 6;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn state_step_invariants(
                v in prop::collection::vec(0.5..1.5f64, (N + 1) * (N + 1)),
                bits in prop::collection::vec(any::<bool>(), N * N),
                beta in 0.0..10.0f64,
                eps_frac in 0.0..0.9f64,
                kicks in prop::collection::vec(prop::collection::vec(-0.2..0.2f64, (N + 1) * (N + 1)), 4),
            ) {
                let (g, m) = unit(N);
                let v = ScalarField::new(&g, v).unwrap();
                let omega = CellSet::new(&g, bits).unwrap();
                let epsilon = eps_frac * boundary_minimum(&g, &m, &v);
                let cg = CgOptions::default();
                let major = harmonic_majorant(&g, &m, &v, &cg).unwrap();
                let p = StateProblem { omega: &omega, v: &v, beta, epsilon, cg };
                let u = solve_state(&p, &g, &m, &major).unwrap().u;
                let vmax = v.values.iter().cloned().fold(f64::MIN, f64::max);
                let free = |n: usize| {
                    let (i, j) = g.node_coords(n);
                    m.node_is_free(&g, i, j)
                };
                for (n, &x) in u.values.iter().enumerate() {
                    if free(n) {
                        prop_assert!(x >= epsilon && x <= vmax + 1e-9);
                        prop_assert!(x <= major.values[n] + 1e-8);
                    } else {
                        prop_assert_eq!(x, v.values[n]);
                    }
                }
                let j = total_energy(&u, &omega, beta, &g, &m).unwrap().total;
                for kick in &kicks {
                    let values = u
                        .values
                        .iter()
                        .zip(kick)
                        .enumerate()
                        .map(|(n, (&x, &k))| if free(n) { (x + k).max(epsilon) } else { x })
                        .collect();
                    let w = ScalarField::new(&g, values).unwrap();
                    let jw = total_energy(&w, &omega, beta, &g, &m).unwrap().total;
                    prop_assert!(j <= jw + 1e-9 * j.abs(), "{j} > {jw}");
                }
            }
        }
    }
}
