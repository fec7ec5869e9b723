use robinfb::certificates::holder_seminorm;
use robinfb::energy::total_energy;
use robinfb::geometry::{sublevel_set, steiner_symmetrize};
use robinfb::outer::{minimize, SolveConfig};
use robinfb::problems::{slab, BoundaryData, SlabOracle};
use robinfb::{CellSet, DomainMask, GridSpec, LateralBc, ScalarField};

fn symmetric_grid(n1: usize, n2: usize, h: f64) -> (GridSpec, DomainMask) {
    let g = GridSpec::new(n1, n2, h, [0.0, -0.5 * n2 as f64 * h], LateralBc::Dirichlet).unwrap();
    let m = DomainMask::full(&g, |x| x[1] > 0.0).unwrap();
    (g, m)
}

/// Places the values of `phi` largest first at node rows ordered by distance
/// to `x2 = 0`, the upper row winning ties.
fn sort_oracle(phi: &[f64], x2: &[f64]) -> Vec<f64> {
    let mut rows: Vec<usize> = (0..phi.len()).collect();
    rows.sort_by(|&a, &b| {
        x2[a].abs().partial_cmp(&x2[b].abs()).unwrap().then(x2[b].partial_cmp(&x2[a]).unwrap())
    });
    let mut values = phi.to_vec();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut out = vec![0.0; phi.len()];
    for (r, v) in rows.into_iter().zip(values) {
        out[r] = v;
    }
    out
}

#[test]
fn steiner_four_node_column() {
    let (g, m) = symmetric_grid(2, 3, 1.0);
    let phi = [0.0, 0.5, 0.2, 0.0];
    let u = ScalarField::from_fn(&g, |x| 1.0 - phi[(x[1] + 1.5).round() as usize]);
    let s = steiner_symmetrize(&u, &g, &m).unwrap();
    for i in 0..=g.n1 {
        let col: Vec<f64> = (0..=g.n2).map(|j| s.at(&g, i, j)).collect();
        assert_eq!(col, vec![1.0, 1.0 - 0.2, 1.0 - 0.5, 1.0]);
    }
}

#[test]
fn steiner_matches_sort_oracle() {
    let (g, m) = symmetric_grid(5, 8, 0.125);
    let u = ScalarField::from_fn(&g, |x| 0.5 + 0.5 * (7.0 * x[0] + 11.0 * x[1] * x[1] + 3.0 * x[1]).sin());
    let s = steiner_symmetrize(&u, &g, &m).unwrap();
    for i in 0..=g.n1 {
        let phi: Vec<f64> = (0..=g.n2).map(|j| 1.0 - u.at(&g, i, j)).collect();
        let x2: Vec<f64> = (0..=g.n2).map(|j| g.node_pos(i, j)[1]).collect();
        let expect = sort_oracle(&phi, &x2);
        for j in 0..=g.n2 {
            assert!((1.0 - s.at(&g, i, j) - expect[j]).abs() < 1e-15);
        }
    }
}

#[test]
fn holder_equals_exhaustive_scan_on_small_domain() {
    let n = 16;
    let h = 1.0 / n as f64;
    let g = GridSpec::new(n, n, h, [0.0, 0.0], LateralBc::Dirichlet).unwrap();
    let m = DomainMask::full(&g, |_| false).unwrap();
    let u = ScalarField::from_fn(&g, |x| (5.0 * x[0]).sin() * (3.0 * x[1]).cos() + (x[0] - 0.4).abs().cbrt());
    let delta = 0.3;
    // every pair of D_delta lies within 8h, so local sampling is exhaustive
    let inside: Vec<[f64; 2]> = (0..=n)
        .flat_map(|j| (0..=n).map(move |i| (i, j)))
        .map(|(i, j)| g.node_pos(i, j))
        .filter(|x| x[0].min(1.0 - x[0]).min(x[1]).min(1.0 - x[1]) > delta)
        .collect();
    let value = |x: [f64; 2]| u.at(&g, (x[0] / h).round() as usize, (x[1] / h).round() as usize);
    let mut best = 0.0f64;
    for a in &inside {
        for b in &inside {
            let d = (a[0] - b[0]).hypot(a[1] - b[1]);
            if d > 0.0 {
                best = best.max((value(*a) - value(*b)).abs() / d.cbrt());
            }
        }
    }
    let est = holder_seminorm(&u, delta, &g, &m, 11).unwrap();
    assert_eq!(est.nodes, inside.len());
    assert!((est.value - best).abs() <= 1e-14 * best, "{} vs {best}", est.value);
}

#[test]
fn slab_closed_form() {
    // u = c (1 + beta |x2| / 2), c = 1 / (1 + beta a / 2), J = beta c
    for &(beta, a) in &[(1.0, 0.5), (2.0, 0.25), (0.5, 1.0)] {
        let o = SlabOracle::new(beta, a);
        let c = 1.0 / (1.0 + 0.5 * beta * a);
        assert!((o.value(a) - 1.0).abs() < 1e-15);
        assert!((o.value(0.0) - c).abs() < 1e-15);
        let dirichlet = 2.0 * a * (0.5 * beta * c).powi(2);
        let surface = beta * c * c;
        assert!((dirichlet + surface - o.energy).abs() < 1e-14);
        assert!((o.energy - beta * c).abs() < 1e-14);
    }
    let o = SlabOracle::new(1.0, 0.5);
    assert!((o.energy - 0.8).abs() < 1e-15);
}

#[test]
fn slab_profile_energy_on_grid() {
    let p = slab(0.5, 1.0, 1.0 / 32.0, BoundaryData::constant(1.0)).unwrap();
    let o = SlabOracle::new(1.0, 0.5);
    let u = ScalarField::from_fn(&p.grid, |x| o.value(x[1]));
    let upper = CellSet::from_fn(&p.grid, &p.mask, |x| x[1] > 0.0);
    let e = total_energy(&u, &upper, 1.0, &p.grid, &p.mask).unwrap();
    assert!((e.dirichlet - 0.16).abs() < 1e-12);
    assert!((e.surface - 0.64).abs() < 1e-12);
    assert!((e.total - 0.8).abs() < 1e-12);
}

#[test]
fn slab_sublevel_band() {
    // g(x2) = 0.8 + 0.4 |x2| = 0.9 at |x2| = 0.25
    let p = slab(0.5, 1.0, 1.0 / 32.0, BoundaryData::constant(1.0)).unwrap();
    let o = SlabOracle::new(1.0, 0.5);
    let u = ScalarField::from_fn(&p.grid, |x| o.value(x[1]));
    let band = sublevel_set(&u, 0.9, &p.grid, &p.mask).unwrap();
    for j in 0..p.grid.n2 {
        for i in 0..p.grid.n1 {
            let c = p.grid.cell_index(i, j);
            let x = p.grid.cell_center(i, j);
            if p.mask.in_d[c] {
                assert_eq!(band.member[c], x[1].abs() < 0.25, "cell at {x:?}");
            }
        }
    }
}

#[test]
fn warm_restart_is_a_fixed_point() {
    let p = slab(0.5, 0.5, 1.0 / 16.0, BoundaryData::constant(1.0)).unwrap();
    let config = SolveConfig::default();
    let first = minimize(&p, &config).unwrap();
    let again = robinfb::outer::minimize_from(&p, &config, &first.u, &first.omega).unwrap();
    let (a, b) = (first.final_energy.total, again.final_energy.total);
    assert!((a - b).abs() < config.tol_outer * a.abs());
}
