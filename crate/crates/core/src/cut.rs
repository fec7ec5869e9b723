//! The set step: for fixed `u`, the interface cost of a set is a sum of
//! nonnegative face weights `w = beta h (u_a^2 + u_b^2) / 2`, so minimizing
//! it over admissible sets is a minimum s-t cut on the cell graph of `D`.
//! Exterior cells collapse into the terminals: cells of `E` into the source,
//! the rest into the sink.

use crate::error::{Error, Result};
use crate::grid::{CellSet, DomainMask, GridSpec, ScalarField};
use crate::maxflow::FlowNetwork;

/// Largest number of free cells `brute_force_set` accepts.
pub const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct CutSolution {
    pub omega: CellSet,
    /// `beta` times the surface integral of the returned set.
    pub cut_value: f64,
    pub flow_value: f64,
    /// `beta = 0`: every set is optimal and `E` extended into `D` is returned.
    pub degenerate: bool,
}

/// A face weight attached to graph endpoints (`None` for a terminal side).
#[derive(Debug, Clone, Copy)]
struct WeightedFace {
    a: Terminal,
    b: Terminal,
    w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Terminal {
    Cell(usize),
    Source,
    Sink,
}

fn check_input(u: &ScalarField, beta: f64, grid: &GridSpec, mask: &DomainMask) -> Result<()> {
    grid.check_nodes(u.values.len())?;
    grid.check_cells(mask.in_d.len())?;
    u.check_finite()?;
    if let Some(x) = u.values.iter().find(|&&x| x < 0.0) {
        return Err(Error::InvalidField(format!("u must be nonnegative, found {x}")));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidProblem(format!("beta must be finite and >= 0, got {beta}")));
    }
    Ok(())
}

fn weighted_faces(u: &ScalarField, beta: f64, grid: &GridSpec, mask: &DomainMask) -> Vec<WeightedFace> {
    let side = |c: usize| {
        if mask.in_d[c] {
            Terminal::Cell(c)
        } else if mask.in_e[c] {
            Terminal::Source
        } else {
            Terminal::Sink
        }
    };
    grid.faces()
        .into_iter()
        .filter(|f| mask.face_touches_domain(f))
        .map(|f| {
            let [p, q] = f.nodes;
            let w = 0.5 * beta * grid.h * (u.values[p].powi(2) + u.values[q].powi(2));
            WeightedFace { a: side(f.lo), b: side(f.hi), w }
        })
        .collect()
}

/// Globally minimizes `beta * surface_integral(u, .)` over sets that agree
/// with `E` outside `D`, returning the minimal minimizer.
pub fn solve_set(u: &ScalarField, beta: f64, grid: &GridSpec, mask: &DomainMask) -> Result<CutSolution> {
    check_input(u, beta, grid, mask)?;
    if beta == 0.0 {
        return Ok(CutSolution {
            omega: CellSet::exterior_extension(mask),
            cut_value: 0.0,
            flow_value: 0.0,
            degenerate: true,
        });
    }
    let cells: Vec<usize> = (0..grid.cell_count()).filter(|&c| mask.in_d[c]).collect();
    let mut node_of = vec![usize::MAX; grid.cell_count()];
    for (k, &c) in cells.iter().enumerate() {
        node_of[c] = k;
    }
    let s = cells.len();
    let t = s + 1;
    let mut net = FlowNetwork::new(cells.len() + 2);
    let mut from_source = vec![0.0; cells.len()];
    let mut to_sink = vec![0.0; cells.len()];
    for f in weighted_faces(u, beta, grid, mask) {
        match (f.a, f.b) {
            (Terminal::Cell(a), Terminal::Cell(b)) => net.add_edge(node_of[a], node_of[b], f.w),
            (Terminal::Cell(c), Terminal::Source) | (Terminal::Source, Terminal::Cell(c)) => from_source[node_of[c]] += f.w,
            (Terminal::Cell(c), Terminal::Sink) | (Terminal::Sink, Terminal::Cell(c)) => to_sink[node_of[c]] += f.w,
            _ => {}
        }
    }
    for k in 0..cells.len() {
        if from_source[k] > 0.0 {
            net.add_arc(s, k, from_source[k]);
        }
        if to_sink[k] > 0.0 {
            net.add_arc(k, t, to_sink[k]);
        }
    }
    let flow = net.max_flow(s, t)?;
    let mut omega = CellSet::exterior_extension(mask);
    for (k, &c) in cells.iter().enumerate() {
        omega.member[c] = flow.source_side[k];
    }
    Ok(CutSolution { omega, cut_value: flow.cut, flow_value: flow.value, degenerate: false })
}

/// Exhaustive minimization over all subsets of the `D` cells (at most
/// [`BRUTE_FORCE_LIMIT`]). Near-ties go to the set with fewest members, then
/// to the lexicographically smallest membership vector.
pub fn brute_force_set(u: &ScalarField, beta: f64, grid: &GridSpec, mask: &DomainMask) -> Result<(CellSet, f64)> {
    check_input(u, beta, grid, mask)?;
    let cells: Vec<usize> = (0..grid.cell_count()).filter(|&c| mask.in_d[c]).collect();
    let k = cells.len();
    if k > BRUTE_FORCE_LIMIT {
        return Err(Error::CapacityExceeded { cells: k, limit: BRUTE_FORCE_LIMIT });
    }
    let mut bit = vec![usize::MAX; grid.cell_count()];
    for (b, &c) in cells.iter().enumerate() {
        bit[c] = b;
    }
    let faces = weighted_faces(u, beta, grid, mask);
    let total: f64 = faces.iter().map(|f| f.w).sum();
    let tie = 1e-12 * total.max(f64::MIN_POSITIVE);
    let inside = |t: Terminal, bits: u32| match t {
        Terminal::Cell(c) => bits >> bit[c] & 1 == 1,
        Terminal::Source => true,
        Terminal::Sink => false,
    };
    // Lexicographic order on membership vectors in cell order: cell `b` is
    // more significant the smaller `b` is.
    let lex_key = |bits: u32| bits.reverse_bits() >> (32 - k.max(1)) as u32;

    let mut best: Option<(f64, u32)> = None;
    for bits in 0..(1u32 << k) {
        let value: f64 = faces.iter().filter(|f| inside(f.a, bits) != inside(f.b, bits)).map(|f| f.w).sum();
        let better = match best {
            None => true,
            Some((bv, bb)) => {
                if value < bv - tie {
                    true
                } else if value <= bv + tie {
                    (bits.count_ones(), lex_key(bits)) < (bb.count_ones(), lex_key(bb))
                } else {
                    false
                }
            }
        };
        if better {
            best = Some((value, bits));
        }
    }
    let (value, bits) = best.expect("at least the empty subset");
    let mut omega = CellSet::exterior_extension(mask);
    for (b, &c) in cells.iter().enumerate() {
        omega.member[c] = bits >> b & 1 == 1;
    }
    Ok((omega, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::surface_integral;
    use crate::geometry::extract_interface;
    use crate::grid::LateralBc;

    fn strip() -> (GridSpec, DomainMask) {
        // 1 x 6 column: bottom cell outside D and not in E, top cell in E.
        let g = GridSpec::new(2, 6, 1.0, [0.0, 0.0], LateralBc::Periodic).unwrap();
        let m = DomainMask::from_fn(&g, |x| (x[1] > 1.0 && x[1] < 5.0, x[1] > 5.0)).unwrap();
        (g, m)
    }

    #[test]
    fn cut_sits_where_u_is_smallest() {
        let (g, m) = strip();
        let u = ScalarField::from_fn(&g, |x| 0.2 + (x[1] - 2.0).abs());
        let sol = solve_set(&u, 1.0, &g, &m).unwrap();
        let expect = CellSet::from_fn(&g, &m, |x| x[1] > 2.0);
        assert_eq!(sol.omega, expect);
        let mesh = extract_interface(&sol.omega, &g, &m).unwrap();
        assert!((surface_integral(&u, &mesh) - sol.cut_value).abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force() {
        let (g, m) = strip();
        let u = ScalarField::from_fn(&g, |x| 1.0 + 0.3 * (3.0 * x[0] + x[1]).sin());
        let sol = solve_set(&u, 2.0, &g, &m).unwrap();
        let (bf, value) = brute_force_set(&u, 2.0, &g, &m).unwrap();
        assert_eq!(sol.omega, bf);
        assert!((sol.cut_value - value).abs() < 1e-12);
    }

    #[test]
    fn zero_beta_is_degenerate() {
        let (g, m) = strip();
        let u = ScalarField::constant(&g, 1.0);
        let sol = solve_set(&u, 0.0, &g, &m).unwrap();
        assert!(sol.degenerate);
        assert_eq!(sol.omega, CellSet::exterior_extension(&m));
    }

    #[test]
    fn negative_field_is_rejected() {
        let (g, m) = strip();
        let u = ScalarField::constant(&g, -1.0);
        assert!(matches!(solve_set(&u, 1.0, &g, &m), Err(Error::InvalidField(_))));
    }

    #[test]
    fn brute_force_capacity() {
        let g = GridSpec::new(5, 5, 1.0, [0.0, 0.0], LateralBc::Dirichlet).unwrap();
        let m = DomainMask::full(&g, |_| false).unwrap();
        let u = ScalarField::constant(&g, 1.0);
        assert!(matches!(brute_force_set(&u, 1.0, &g, &m), Err(Error::CapacityExceeded { cells: 25, .. })));
    }

    mod props {
        use super::*;
        use crate::energy::total_energy;
        use proptest::prelude::*;

        #[derive(Debug, Clone)]
        struct Instance {
            in_d: Vec<bool>,
            holed: Vec<bool>,
            in_e: Vec<bool>,
            u: Vec<f64>,
            beta: f64,
            periodic: bool,
        }

        fn instance() -> impl Strategy<Value = Instance> {
            (
                (0usize..4, 0usize..4, 1usize..4, 1usize..4),
                prop::collection::vec(any::<bool>(), 16),
                prop::collection::vec(any::<bool>(), 16),
                prop::collection::vec(0.0..2.0f64, 25),
                0.0..3.0f64,
                any::<bool>(),
            )
                .prop_map(|((a, b, c, d), holes, in_e, u, beta, periodic)| {
                    // a rectangle in rows 1..4, so at most 12 free cells
                    let (i0, i1, j0, j1) = (a.min(b), a.max(b), c.min(d), c.max(d));
                    let rect: Vec<bool> = (0..16).map(|k| (i0..=i1).contains(&(k % 4)) && (j0..=j1).contains(&(k / 4))).collect();
                    let holed = rect.iter().zip(&holes).map(|(&r, &h)| r && !h).collect();
                    Instance { in_d: rect, holed, in_e, u, beta, periodic }
                })
        }

        fn build(inst: &Instance) -> (GridSpec, DomainMask, ScalarField) {
            let bc = if inst.periodic { LateralBc::Periodic } else { LateralBc::Dirichlet };
            let g = GridSpec::new(4, 4, 0.5, [0.0, 0.0], bc).unwrap();
            let m = DomainMask::new(&g, inst.holed.clone(), inst.in_e.clone())
                .or_else(|_| DomainMask::new(&g, inst.in_d.clone(), inst.in_e.clone()))
                .unwrap();
            let mut u = ScalarField::new(&g, inst.u.clone()).unwrap();
            u.sync_periodic(&g);
            (g, m, u)
        }

        proptest! {
            #[test]
            fn min_cut_equals_brute_force(inst in instance()) {
                let (g, m, u) = build(&inst);
                let sol = solve_set(&u, inst.beta, &g, &m).unwrap();
                let (_, best) = brute_force_set(&u, inst.beta, &g, &m).unwrap();
                prop_assert!((sol.cut_value - best).abs() <= 1e-12, "{} vs {best}", sol.cut_value);
                let surface = inst.beta * surface_integral(&u, &extract_interface(&sol.omega, &g, &m).unwrap());
                prop_assert!((surface - best).abs() <= 1e-12);
            }

            #[test]
            fn set_step_never_increases_energy(inst in instance(), prev in prop::collection::vec(any::<bool>(), 16)) {
                let (g, m, u) = build(&inst);
                let sol = solve_set(&u, inst.beta, &g, &m).unwrap();
                let member = prev.iter().enumerate().map(|(c, &b)| if m.in_d[c] { b } else { m.in_e[c] }).collect();
                let prev = CellSet::new(&g, member).unwrap();
                let after = total_energy(&u, &sol.omega, inst.beta, &g, &m).unwrap().total;
                let before = total_energy(&u, &prev, inst.beta, &g, &m).unwrap().total;
                prop_assert!(after <= before + 1e-12 * before.abs());
            }
        }
    }
}
