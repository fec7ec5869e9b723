//! Discrete geometry of cell sets: cut-metric perimeter, interface faces,
//! sublevel sets, volume and Steiner rearrangement of node fields.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{CellSet, DomainMask, Face, FaceAxis, GridSpec, ScalarField};

/// Where a perimeter is measured. Faces are selected by their midpoint (or by
/// the cells they separate, for [`Region::Domain`]).
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    /// Every face between two grid cells.
    All,
    /// Faces with at least one side in `D`.
    Domain(&'a DomainMask),
    /// Open ball (periodic distance in x1 when the grid is periodic).
    Ball { center: [f64; 2], radius: f64 },
    /// Open axis-aligned rectangle.
    Rect { lo: [f64; 2], hi: [f64; 2] },
}

impl Region<'_> {
    fn contains_point(&self, grid: &GridSpec, p: [f64; 2]) -> bool {
        match *self {
            Region::All | Region::Domain(_) => true,
            Region::Ball { center, radius } => grid.distance(center, p) < radius,
            Region::Rect { lo, hi } => p[0] > lo[0] && p[0] < hi[0] && p[1] > lo[1] && p[1] < hi[1],
        }
    }

    fn contains_face(&self, grid: &GridSpec, face: &Face) -> bool {
        match self {
            Region::Domain(mask) => mask.face_touches_domain(face),
            _ => self.contains_point(grid, face.midpoint),
        }
    }
}

/// Neighborhood used by the cut metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    /// Face counting: each cut face weighs `h`. Exact for axis-aligned
    /// interfaces, overestimates diagonal ones by up to `sqrt(2)`.
    #[default]
    Four,
    /// 8-neighborhood with Cauchy-Crofton weights.
    Eight,
    /// 16-neighborhood with Cauchy-Crofton weights.
    Sixteen,
}

impl Stencil {
    /// Half-plane neighborhood offsets (one per undirected line family).
    fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Stencil::Four => &[(1, 0), (0, 1)],
            Stencil::Eight => &[(1, 0), (1, 1), (0, 1), (-1, 1)],
            Stencil::Sixteen => &[
                (1, 0),
                (2, 1),
                (1, 1),
                (1, 2),
                (0, 1),
                (-1, 2),
                (-1, 1),
                (-2, 1),
            ],
        }
    }

    /// Cauchy-Crofton edge weights `h * dphi_k / (2 |e_k|)`, where `dphi_k`
    /// is the angular extent of the Voronoi cell of direction `k` on `[0, pi)`.
    fn crofton_weights(self, h: f64) -> Vec<f64> {
        let offs = self.offsets();
        let angles: Vec<f64> = offs.iter().map(|&(a, b)| (b as f64).atan2(a as f64)).collect();
        let n = angles.len();
        (0..n)
            .map(|k| {
                let next = if k + 1 < n { angles[k + 1] } else { angles[0] + PI };
                let prev = if k > 0 { angles[k - 1] } else { angles[n - 1] - PI };
                let dphi = 0.5 * (next - prev);
                let (a, b) = offs[k];
                let len = ((a * a + b * b) as f64).sqrt();
                h * dphi / (2.0 * len)
            })
            .collect()
    }
}

/// Face-counting perimeter of `set` restricted to `region`.
pub fn perimeter(set: &CellSet, grid: &GridSpec, region: Region<'_>) -> Result<f64> {
    perimeter_with_stencil(set, grid, region, Stencil::Four)
}

pub fn perimeter_with_stencil(set: &CellSet, grid: &GridSpec, region: Region<'_>, stencil: Stencil) -> Result<f64> {
    grid.check_cells(set.len())?;
    if let Region::Domain(mask) = region {
        grid.check_cells(mask.in_d.len())?;
    }
    if stencil == Stencil::Four {
        let mut total = 0.0;
        for face in grid.faces() {
            if set.member[face.lo] != set.member[face.hi] && region.contains_face(grid, &face) {
                total += grid.h;
            }
        }
        return Ok(total);
    }

    let weights = stencil.crofton_weights(grid.h);
    let mut total = 0.0;
    for j in 0..grid.n2 {
        for i in 0..grid.n1 {
            let p = grid.cell_index(i, j);
            for (&(di, dj), &w) in stencil.offsets().iter().zip(&weights) {
                let Some((a, b)) = grid.cell_offset(i, j, di, dj) else {
                    continue;
                };
                let q = grid.cell_index(a, b);
                if set.member[p] == set.member[q] {
                    continue;
                }
                let include = match region {
                    Region::Domain(mask) => mask.in_d[p] || mask.in_d[q],
                    _ => {
                        let c = grid.cell_center(i, j);
                        let mid = [
                            c[0] + 0.5 * di as f64 * grid.h,
                            c[1] + 0.5 * dj as f64 * grid.h,
                        ];
                        region.contains_point(grid, mid)
                    }
                };
                if include {
                    total += w;
                }
            }
        }
    }
    Ok(total)
}

/// One cut face of a set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceFace {
    pub midpoint: [f64; 2],
    /// Unit normal pointing out of the set.
    pub normal: [f64; 2],
    pub weight: f64,
    pub inside_cell: usize,
    pub outside_cell: usize,
    pub axis: FaceAxis,
    pub nodes: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct InterfaceMesh {
    pub faces: Vec<InterfaceFace>,
}

impl InterfaceMesh {
    pub fn total_weight(&self) -> f64 {
        self.faces.iter().map(|f| f.weight).sum()
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }
}

/// Cut faces of `set` that touch `D`, in the grid's fixed face order.
pub fn extract_interface(set: &CellSet, grid: &GridSpec, mask: &DomainMask) -> Result<InterfaceMesh> {
    grid.check_cells(set.len())?;
    grid.check_cells(mask.in_d.len())?;
    let mut faces = Vec::new();
    for face in grid.faces() {
        if set.member[face.lo] == set.member[face.hi] || !mask.face_touches_domain(&face) {
            continue;
        }
        let axis_vec = match face.axis {
            FaceAxis::X => [1.0, 0.0],
            FaceAxis::Y => [0.0, 1.0],
        };
        let (inside, outside, normal) = if set.member[face.lo] {
            (face.lo, face.hi, axis_vec)
        } else {
            (face.hi, face.lo, [-axis_vec[0], -axis_vec[1]])
        };
        faces.push(InterfaceFace {
            midpoint: face.midpoint,
            normal,
            weight: grid.h,
            inside_cell: inside,
            outside_cell: outside,
            axis: face.axis,
            nodes: face.nodes,
        });
    }
    Ok(InterfaceMesh { faces })
}

/// `{u <= t}` on cells: a `D` cell is a member when the mean of its corner
/// values is `<= t`; cells outside `D` follow `E`.
pub fn sublevel_set(u: &ScalarField, t: f64, grid: &GridSpec, mask: &DomainMask) -> Result<CellSet> {
    let mut set = sublevel_in_domain(u, t, grid, mask, false)?;
    for (c, m) in set.member.iter_mut().enumerate() {
        if !mask.in_d[c] {
            *m = mask.in_e[c];
        }
    }
    Ok(set)
}

/// Sublevel set as a subset of `D` (every exterior cell is a non-member), so
/// its perimeter includes the part lying on the boundary of `D`. With
/// `strict` the test is `< t` instead of `<= t`.
pub fn sublevel_in_domain(u: &ScalarField, t: f64, grid: &GridSpec, mask: &DomainMask, strict: bool) -> Result<CellSet> {
    grid.check_nodes(u.values.len())?;
    grid.check_cells(mask.in_d.len())?;
    let mut member = vec![false; grid.cell_count()];
    for j in 0..grid.n2 {
        for i in 0..grid.n1 {
            let c = grid.cell_index(i, j);
            if mask.in_d[c] {
                let avg = u.cell_average(grid, i, j);
                member[c] = if strict { avg < t } else { avg <= t };
            }
        }
    }
    Ok(CellSet { member })
}

/// Area of the part of `set` inside `D`.
pub fn volume(set: &CellSet, grid: &GridSpec, mask: &DomainMask) -> Result<f64> {
    grid.check_cells(set.len())?;
    Ok(set.domain_members(mask) as f64 * grid.h * grid.h)
}

/// Checks that the grid and `D` are symmetric under `x2 -> -x2`.
pub fn check_x2_symmetric(grid: &GridSpec, mask: &DomainMask) -> Result<()> {
    let center = grid.origin[1] + 0.5 * grid.n2 as f64 * grid.h;
    if center.abs() > 1e-9 * grid.h {
        return Err(Error::UnsupportedGeometry(format!(
            "grid is not centered on x2 = 0 (center {center})"
        )));
    }
    for j in 0..grid.n2 {
        for i in 0..grid.n1 {
            if mask.in_d[grid.cell_index(i, j)] != mask.in_d[grid.cell_index(i, grid.n2 - 1 - j)] {
                return Err(Error::UnsupportedGeometry(format!(
                    "domain is not symmetric in x2 at cell ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Row order used by the discrete Steiner rearrangement: increasing `|x2|`,
/// the `+x2` node first when two rows are equidistant.
pub fn steiner_row_order(n2: usize) -> Vec<usize> {
    let mut rows: Vec<usize> = (0..=n2).collect();
    rows.sort_by_key(|&j| {
        let off = 2 * j as isize - n2 as isize;
        (off.unsigned_abs(), off < 0)
    });
    rows
}

/// Returns `1 - phi_*` where `phi = 1 - u` and `phi_*` is, column by column,
/// the symmetric decreasing rearrangement of `phi` in x2.
///
/// Expects `0 <= u <= 1` with `u = 1` on the boundary of `D`.
pub fn steiner_symmetrize(u: &ScalarField, grid: &GridSpec, mask: &DomainMask) -> Result<ScalarField> {
    grid.check_nodes(u.values.len())?;
    check_x2_symmetric(grid, mask)?;
    let order = steiner_row_order(grid.n2);
    let mut out = u.clone();
    let mut column = Vec::with_capacity(grid.n2 + 1);
    for i in 0..=grid.n1 {
        column.clear();
        // phi descending is u ascending
        column.extend((0..=grid.n2).map(|j| u.at(grid, i, j)));
        column.sort_by(f64::total_cmp);
        for (&j, &x) in order.iter().zip(&column) {
            out.values[grid.node_index(i, j)] = x;
        }
    }
    out.sync_periodic(grid);
    Ok(out)
}
