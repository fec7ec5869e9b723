use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{DomainMask, GridSpec, ScalarField};

use super::{boundary_segments, distance_to_segments};

/// Long-range pairs drawn in addition to the local ones.
pub const RANDOM_PAIRS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderEstimate {
    pub value: f64,
    pub pairs: usize,
    /// Nodes in `D_delta`.
    pub nodes: usize,
    pub argmax: ([f64; 2], [f64; 2]),
}

/// Largest `|u(x) - u(y)| / |x - y|^(1/3)` over sampled node pairs in
/// `D_delta = {dist(x, boundary of D) > delta}`: every pair within `8h` plus
/// [`RANDOM_PAIRS`] pairs drawn with `seed`.
pub fn holder_seminorm(u: &ScalarField, delta: f64, grid: &GridSpec, mask: &DomainMask, seed: u64) -> Result<HolderEstimate> {
    grid.check_nodes(u.values.len())?;
    u.check_finite()?;
    if !(delta > 2.0 * grid.h) {
        return Err(Error::InvalidRegion(format!("delta = {delta} must exceed 2h = {}", 2.0 * grid.h)));
    }
    let segs = boundary_segments(grid, mask);
    let cols = if grid.periodic() { grid.n1 } else { grid.n1 + 1 };
    let mut inside = vec![false; grid.node_count()];
    let mut nodes = Vec::new();
    for j in 0..=grid.n2 {
        for i in 0..cols {
            let in_closure = grid.node_cells(i, j).iter().any(|&c| mask.in_d[c]);
            if in_closure && distance_to_segments(grid, &segs, grid.node_pos(i, j)) > delta {
                inside[grid.node_index(i, j)] = true;
                nodes.push((i, j));
            }
        }
    }
    if nodes.is_empty() {
        return Err(Error::InvalidRegion(format!("D_delta is empty for delta = {delta}")));
    }

    let mut best = HolderEstimate { value: 0.0, pairs: 0, nodes: nodes.len(), argmax: ([0.0; 2], [0.0; 2]) };
    let visit = |a: (usize, usize), b: (usize, usize), best: &mut HolderEstimate| {
        let (xa, xb) = (grid.node_pos(a.0, a.1), grid.node_pos(b.0, b.1));
        let d = grid.distance(xa, xb);
        if d == 0.0 {
            return;
        }
        best.pairs += 1;
        let q = (u.at(grid, a.0, a.1) - u.at(grid, b.0, b.1)).abs() / d.cbrt();
        if q > best.value {
            best.value = q;
            best.argmax = (xa, xb);
        }
    };

    const R: isize = 8;
    for &(i, j) in &nodes {
        for dj in 0..=R {
            for di in -R..=R {
                if (dj == 0 && di <= 0) || di * di + dj * dj > R * R {
                    continue;
                }
                let Some((a, b)) = grid.node_offset(i, j, di, dj) else {
                    continue;
                };
                let n = grid.canonical_node(grid.node_index(a, b));
                if inside[n] {
                    visit((i, j), grid.node_coords(n), &mut best);
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_PAIRS {
        let a = nodes[rng.gen_range(0..nodes.len())];
        let b = nodes[rng.gen_range(0..nodes.len())];
        visit(a, b, &mut best);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::LateralBc;

    fn square(n: usize) -> (GridSpec, DomainMask) {
        let h = 1.0 / n as f64;
        let g = GridSpec::new(n + 2, n + 2, h, [-h, -h], LateralBc::Dirichlet).unwrap();
        let m = DomainMask::from_fn(&g, |x| (x[0] > 0.0 && x[0] < 1.0 && x[1] > 0.0 && x[1] < 1.0, false)).unwrap();
        (g, m)
    }

    #[test]
    fn constant_is_zero() {
        let (g, m) = square(16);
        let u = ScalarField::constant(&g, 3.0);
        assert_eq!(holder_seminorm(&u, 0.25, &g, &m, 0).unwrap().value, 0.0);
    }

    #[test]
    fn delta_constraints() {
        let (g, m) = square(16);
        let u = ScalarField::constant(&g, 1.0);
        assert!(matches!(holder_seminorm(&u, 0.1, &g, &m, 0), Err(Error::InvalidRegion(_))));
        assert!(matches!(holder_seminorm(&u, 0.6, &g, &m, 0), Err(Error::InvalidRegion(_))));
    }

    #[test]
    fn linear_field_is_bounded_by_the_long_axis_pair() {
        let (g, m) = square(16);
        let u = ScalarField::from_fn(&g, |x| x[0]);
        let est = holder_seminorm(&u, 0.25, &g, &m, 7).unwrap();
        // D_delta = (0.25, 0.75)^2 open: the longest axis pair spans 0.375
        let sup = 0.375f64.powf(2.0 / 3.0);
        assert!(est.value <= sup + 1e-12 && est.value > 0.9 * sup, "{}", est.value);
    }
}
