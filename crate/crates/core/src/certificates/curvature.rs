//! Residual of the prescribed-curvature equation satisfied by a graph-like
//! interface `x2 = eta(x1)`:
//!
//! ```text
//! -(eta' / sqrt(1 + eta'^2))' = f,
//! f = [(|grad u+|^2 - |grad u-|^2) - 2 (1 + eta'^2) ((d2 u+)^2 - (d2 u-)^2)] / (beta u^2)
//! ```
//!
//! with `u+` the restriction to `Omega`. The left side is written for
//! `Omega` below the graph; for `Omega` above it the sign flips, so that a
//! convex `Omega` always has positive curvature.

use serde::Serialize;

use crate::error::Result;
use crate::grid::{CellSet, DomainMask, GridSpec, ScalarField};

use super::{CertificateReport, CheckRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchResidual {
    pub x1: f64,
    pub eta: f64,
    pub slope: f64,
    pub lhs: f64,
    pub f: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureResidual {
    pub patches: Vec<PatchResidual>,
    pub max_abs: f64,
    pub mean: f64,
    pub median: f64,
    /// Interface columns where no graph-like window or clean stencil was found.
    pub skipped: usize,
    pub report: CertificateReport,
}

#[derive(Debug, Clone, Copy)]
struct Transition {
    col: usize,
    /// Lower of the two cells.
    row: usize,
    below_inside: bool,
    eta: Option<f64>,
}

/// Membership fraction over the 3x3 block of cells around `(i, j)`.
fn smoothed(omega: &CellSet, grid: &GridSpec, i: usize, j: usize) -> f64 {
    let (mut n, mut k) = (0usize, 0usize);
    for dj in -1..=1 {
        for di in -1..=1 {
            if let Some((a, b)) = grid.cell_offset(i, j, di, dj) {
                n += 1;
                k += omega.member[grid.cell_index(a, b)] as usize;
            }
        }
    }
    k as f64 / n as f64
}

/// Height where the smoothed fraction crosses `1/2` near the transition.
fn crossing(omega: &CellSet, grid: &GridSpec, col: usize, row: usize) -> Option<f64> {
    for r in [row as isize, row as isize - 1, row as isize + 1] {
        if r < 0 || r + 1 >= grid.n2 as isize {
            continue;
        }
        let r = r as usize;
        let (p, q) = (smoothed(omega, grid, col, r) - 0.5, smoothed(omega, grid, col, r + 1) - 0.5);
        if p * q <= 0.0 && p != q {
            return Some(grid.cell_center(col, r)[1] + grid.h * p / (p - q));
        }
    }
    None
}

fn transitions(omega: &CellSet, grid: &GridSpec, mask: &DomainMask) -> Vec<Vec<Transition>> {
    (0..grid.n1)
        .map(|i| {
            (0..grid.n2 - 1)
                .filter_map(|j| {
                    let (a, b) = (grid.cell_index(i, j), grid.cell_index(i, j + 1));
                    (mask.in_d[a] && mask.in_d[b] && omega.member[a] != omega.member[b]).then(|| Transition {
                        col: i,
                        row: j,
                        below_inside: omega.member[a],
                        eta: crossing(omega, grid, i, j),
                    })
                })
                .collect()
        })
        .collect()
}

/// Mutual-nearest links between transitions of neighboring columns with the
/// same orientation and a height jump of at most two cells.
fn link(cols: &[Vec<Transition>], grid: &GridSpec) -> (Vec<Vec<Option<usize>>>, Vec<Vec<Option<usize>>>) {
    let n = cols.len();
    let mut right: Vec<Vec<Option<usize>>> = cols.iter().map(|c| vec![None; c.len()]).collect();
    let mut left = right.clone();
    let nearest = |from: &Transition, to: &[Transition]| -> Option<usize> {
        to.iter()
            .enumerate()
            .filter(|(_, t)| t.below_inside == from.below_inside && t.row.abs_diff(from.row) <= 2)
            .min_by_key(|(k, t)| (t.row.abs_diff(from.row), *k))
            .map(|(k, _)| k)
    };
    for i in 0..n {
        let next = if i + 1 < n {
            i + 1
        } else if grid.periodic() {
            0
        } else {
            continue;
        };
        for (k, t) in cols[i].iter().enumerate() {
            if let Some(m) = nearest(t, &cols[next]) {
                if nearest(&cols[next][m], &cols[i]) == Some(k) {
                    right[i][k] = Some(m);
                    left[next][m] = Some(k);
                }
            }
        }
    }
    (left, right)
}

/// Value and derivative at `y` of the quadratic through `(ys[k], ps[k])`.
fn lagrange(ys: [f64; 3], ps: [f64; 3], y: f64) -> (f64, f64) {
    let mut val = 0.0;
    let mut der = 0.0;
    for k in 0..3 {
        let (a, b) = ((k + 1) % 3, (k + 2) % 3);
        let den = (ys[k] - ys[a]) * (ys[k] - ys[b]);
        val += ps[k] * (y - ys[a]) * (y - ys[b]) / den;
        der += ps[k] * ((y - ys[a]) + (y - ys[b])) / den;
    }
    (val, der)
}

/// Least-squares `a + b x + c x^2` through points symmetric about `x = 0`.
fn quadratic_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let (mut s0, mut s2, mut s4, mut sy, mut sxy, mut sxxy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let x2 = x * x;
        s0 += 1.0;
        s2 += x2;
        s4 += x2 * x2;
        sy += y;
        sxy += x * y;
        sxxy += x2 * y;
    }
    let det = s0 * s4 - s2 * s2;
    let a = (sy * s4 - s2 * sxxy) / det;
    let c = (s0 * sxxy - s2 * sy) / det;
    (a, sxy / s2, c)
}

/// One-sided gradient and trace of `u` at `(x1 of column i, eta)` from the
/// three node rows nearest the graph on one side, all strictly on that side.
fn one_side(
    u: &ScalarField,
    grid: &GridSpec,
    col: usize,
    fit: (f64, f64, f64),
    above: bool,
) -> Option<([f64; 2], f64)> {
    let h = grid.h;
    let eta = |x: f64| fit.0 + fit.1 * x + fit.2 * x * x;
    let (el, er) = (eta(-0.5 * h), eta(0.5 * h));
    let y0 = grid.origin[1];
    let y = |r: isize| y0 + r as f64 * h;
    let rows: [isize; 3] = if above {
        let top = el.max(er);
        let mut first = ((top - y0) / h).floor() as isize + 1;
        while y(first) <= top {
            first += 1;
        }
        while y(first - 1) > top {
            first -= 1;
        }
        [first, first + 1, first + 2]
    } else {
        let bottom = el.min(er);
        let mut last = ((bottom - y0) / h).ceil() as isize - 1;
        while y(last) >= bottom {
            last -= 1;
        }
        while y(last + 1) < bottom {
            last += 1;
        }
        [last, last - 1, last - 2]
    };
    if rows.iter().any(|&r| r < 0 || r > grid.n2 as isize) {
        return None;
    }
    let ys = rows.map(y);
    let column = |i: usize| rows.map(|r| u.at(grid, i, r as usize));
    let (pl, pr) = (column(col), column(col + 1));
    let (vl, dl) = lagrange(ys, pl, el);
    let (vr, dr) = lagrange(ys, pr, er);
    let tangential = [0, 1, 2].map(|k| (pr[k] - pl[k]) / h);
    let (d1, _) = lagrange(ys, tangential, fit.0);
    Some(([d1, 0.5 * (dl + dr)], 0.5 * (vl + vr)))
}

/// Curvature residual at every interface column that is the center of a
/// chain of `2 window + 1` linked transitions.
///
/// Each record passes when `|residual| <= envelope h`.
pub fn curvature_residual(
    u: &ScalarField,
    omega: &CellSet,
    beta: f64,
    grid: &GridSpec,
    mask: &DomainMask,
    window: usize,
    envelope: f64,
) -> Result<CurvatureResidual> {
    grid.check_nodes(u.values.len())?;
    grid.check_cells(omega.len())?;
    u.check_finite()?;
    let window = window.max(2);
    let cols = transitions(omega, grid, mask);
    let (left, right) = link(&cols, grid);
    let next = |i: usize| if i + 1 < grid.n1 { i + 1 } else { 0 };
    let prev = |i: usize| if i > 0 { i - 1 } else { grid.n1 - 1 };

    let mut patches = Vec::new();
    let mut skipped = 0;
    for (i, col) in cols.iter().enumerate() {
        'patch: for (k, t) in col.iter().enumerate() {
            let mut xs = vec![0.0];
            let mut etas = vec![match t.eta {
                Some(e) => e,
                None => {
                    skipped += 1;
                    continue 'patch;
                }
            }];
            for (dir, links) in [(1.0, &right), (-1.0, &left)] {
                let (mut ci, mut ck) = (i, k);
                for step in 1..=window {
                    let Some(nk) = links[ci][ck] else {
                        skipped += 1;
                        continue 'patch;
                    };
                    ci = if dir > 0.0 { next(ci) } else { prev(ci) };
                    ck = nk;
                    let other = &cols[ci][ck];
                    if ci == i && ck == k {
                        skipped += 1;
                        continue 'patch;
                    }
                    let Some(e) = other.eta else {
                        skipped += 1;
                        continue 'patch;
                    };
                    xs.push(dir * step as f64 * grid.h);
                    etas.push(e);
                }
            }
            let fit = quadratic_fit(&xs, &etas);
            let (_, b, c) = fit;
            let sigma = if t.below_inside { 1.0 } else { -1.0 };
            let lhs = sigma * (-2.0 * c / (1.0 + b * b).powf(1.5));

            let above = one_side(u, grid, t.col, fit, true);
            let below = one_side(u, grid, t.col, fit, false);
            let (Some((ga, ua)), Some((gb, ub))) = (above, below) else {
                skipped += 1;
                continue;
            };
            let (gp, gm) = if t.below_inside { (gb, ga) } else { (ga, gb) };
            let uval = 0.5 * (ua + ub);
            let denom = beta * uval * uval;
            if !(denom > 0.0) {
                skipped += 1;
                continue;
            }
            let n2 = |g: [f64; 2]| g[0] * g[0] + g[1] * g[1];
            let f = ((n2(gp) - n2(gm)) - 2.0 * (1.0 + b * b) * (gp[1] * gp[1] - gm[1] * gm[1])) / denom;
            patches.push(PatchResidual {
                x1: grid.cell_center(t.col, t.row)[0],
                eta: fit.0,
                slope: b,
                lhs,
                f,
                residual: lhs - f,
            });
        }
    }

    let max_abs = patches.iter().map(|p| p.residual.abs()).fold(0.0, f64::max);
    let mean = if patches.is_empty() { 0.0 } else { patches.iter().map(|p| p.residual).sum::<f64>() / patches.len() as f64 };
    let median = {
        let mut r: Vec<f64> = patches.iter().map(|p| p.residual).collect();
        r.sort_by(f64::total_cmp);
        match r.len() {
            0 => 0.0,
            n if n % 2 == 1 => r[n / 2],
            n => 0.5 * (r[n / 2 - 1] + r[n / 2]),
        }
    };
    let bound = envelope * grid.h;
    let records = patches
        .iter()
        .map(|p| CheckRecord::upper_bound(&[("x1", p.x1), ("eta", p.eta)], p.residual.abs(), bound, 0.0))
        .collect();
    let report = CertificateReport::new("curvature_residual", 0.0, records)
        .with("max_abs", max_abs)
        .with("mean", mean)
        .with("median", median)
        .with("envelope", bound)
        .with("skipped", skipped as f64);
    Ok(CurvatureResidual { patches, max_abs, mean, median, skipped, report })
}
