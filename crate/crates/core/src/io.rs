//! Text formats for cell sets, node fields and run reports.
//!
//! Cell sets are written one grid row per line as comma-separated `0`/`1`
//! after a `# cells n1 n2 h` header; node fields likewise after
//! `# nodes n1+1 n2+1 h`, with 17 significant digits so that doubles
//! round-trip exactly.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::certificates::CertificateReport;
use crate::error::{Error, Result};
use crate::grid::{CellSet, GridSpec, ScalarField};
use crate::outer::SolveReport;

pub fn write_cells(set: &CellSet, grid: &GridSpec) -> Result<String> {
    grid.check_cells(set.len())?;
    let mut out = format!("# cells {} {} {}\n", grid.n1, grid.n2, grid.h);
    for row in set.member.chunks(grid.n1) {
        let line: Vec<&str> = row.iter().map(|&m| if m { "1" } else { "0" }).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_field(u: &ScalarField, grid: &GridSpec) -> Result<String> {
    grid.check_nodes(u.values.len())?;
    let mut out = format!("# nodes {} {} {}\n", grid.n1 + 1, grid.n2 + 1, grid.h);
    for row in u.values.chunks(grid.n1 + 1) {
        for (k, x) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{x:.16e}");
        }
        out.push('\n');
    }
    Ok(out)
}

fn parse_header(text: &str, kind: &str, cols: usize, rows: usize, h: f64) -> Result<Vec<String>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty file".into()))?;
    let fields: Vec<&str> = header.trim_start_matches('#').split_whitespace().collect();
    let ok = match fields.as_slice() {
        [k, a, b, hh] if *k == kind => {
            let dims = a.parse::<usize>().ok() == Some(cols) && b.parse::<usize>().ok() == Some(rows);
            let step = hh.parse::<f64>().map(|x| (x - h).abs() <= 1e-12 * h).unwrap_or(false);
            dims && step
        }
        _ => false,
    };
    if !ok {
        return Err(Error::Parse(format!(
            "header {header:?} does not match \"# {kind} {cols} {rows} {h}\""
        )));
    }
    let body: Vec<String> = lines.map(String::from).collect();
    if body.len() != rows {
        return Err(Error::DimensionMismatch { expected: rows, got: body.len() });
    }
    Ok(body)
}

fn split_row<'a>(line: &'a str, cols: usize, row: usize) -> Result<Vec<&'a str>> {
    let items: Vec<&str> = line.split(',').map(str::trim).collect();
    if items.len() != cols {
        return Err(Error::Parse(format!("row {row}: expected {cols} values, got {}", items.len())));
    }
    Ok(items)
}

pub fn read_cells(text: &str, grid: &GridSpec) -> Result<CellSet> {
    let body = parse_header(text, "cells", grid.n1, grid.n2, grid.h)?;
    let mut member = Vec::with_capacity(grid.cell_count());
    for (j, line) in body.iter().enumerate() {
        for s in split_row(line, grid.n1, j)? {
            member.push(match s {
                "0" => false,
                "1" => true,
                _ => return Err(Error::Parse(format!("row {j}: {s:?} is not 0 or 1"))),
            });
        }
    }
    CellSet::new(grid, member)
}

pub fn read_field(text: &str, grid: &GridSpec) -> Result<ScalarField> {
    let body = parse_header(text, "nodes", grid.n1 + 1, grid.n2 + 1, grid.h)?;
    let mut values = Vec::with_capacity(grid.node_count());
    for (j, line) in body.iter().enumerate() {
        for s in split_row(line, grid.n1 + 1, j)? {
            values.push(s.parse::<f64>().map_err(|e| Error::Parse(format!("row {j}: {s:?}: {e}")))?);
        }
    }
    ScalarField::new(grid, values)
}

/// Report written by a run: the solve report, when a solve took place, and
/// the certificate reports.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport<'a> {
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    pub solve: Option<&'a SolveReport>,
    pub certificates: &'a [CertificateReport],
}

impl RunReport<'_> {
    pub fn to_text(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::LateralBc;

    fn grid() -> GridSpec {
        GridSpec::new(3, 2, 0.1, [0.0, 0.0], LateralBc::Dirichlet).unwrap()
    }

    #[test]
    fn cells_layout() {
        let g = grid();
        let set = CellSet::new(&g, vec![true, false, false, false, true, true]).unwrap();
        let text = write_cells(&set, &g).unwrap();
        assert_eq!(text, "# cells 3 2 0.1\n1,0,0\n0,1,1\n");
        assert_eq!(read_cells(&text, &g).unwrap(), set);
    }

    #[test]
    fn field_round_trip_is_bit_exact() {
        let g = grid();
        let u = ScalarField::from_fn(&g, |x| (x[0] * 7.1).sin() / 3.0 + x[1].exp());
        let back = read_field(&write_field(&u, &g).unwrap(), &g).unwrap();
        for (a, b) in u.values.iter().zip(&back.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn mismatched_header_is_rejected() {
        let g = grid();
        let other = GridSpec::new(3, 2, 0.2, [0.0, 0.0], LateralBc::Dirichlet).unwrap();
        let text = write_cells(&CellSet::empty(&other), &other).unwrap();
        assert!(matches!(read_cells(&text, &g), Err(Error::Parse(_))));
        assert!(matches!(read_cells("# cells 3 2 0.1\n1,0\n0,0,0\n", &g), Err(Error::Parse(_))));
        assert!(matches!(read_cells("# cells 3 2 0.1\n1,0,0\n", &g), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(read_cells("# cells 3 2 0.1\n1,0,2\n0,0,0\n", &g), Err(Error::Parse(_))));
    }

    #[test]
    fn report_has_certificate_key() {
        let certs = vec![CertificateReport::nothing_to_check("robin_residual", 0.0)];
        let text = RunReport { solve: None, certificates: &certs }.to_text().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["certificates"][0]["name"], "robin_residual");
    }
}
