//! File and terminal output of the adaptive driver.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use crate::fem::{Component, MixedSpace};
use crate::mesh::Mesh;

use super::{LoopRecord, Summary};

/// Column header of `dwr_results.txt`.
pub const RESULTS_HEADER: &str = "Dofs    True err     Est err      Est ind      Eff          Ind";

/// C-style scientific notation with a two digit signed exponent, e.g.
/// `2.58e-01`.
pub fn sci(x: f64, precision: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.precision$e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| sci(v, 2))
}

/// One row of the results table as written.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableRow {
    pub dofs: usize,
    pub true_error: Option<f64>,
    pub est_err: f64,
    pub est_ind: f64,
    pub eff: Option<f64>,
    pub ind: Option<f64>,
}

impl From<&LoopRecord> for TableRow {
    fn from(r: &LoopRecord) -> Self {
        TableRow {
            dofs: r.dofs,
            true_error: r.true_error.map(f64::abs),
            est_err: r.est_err,
            est_ind: r.est_ind,
            eff: r.eff,
            ind: r.ind,
        }
    }
}

pub fn format_results_table(rows: &[TableRow]) -> String {
    let mut out = format!("{RESULTS_HEADER}\n");
    for r in rows {
        let line = format!(
            "{:<8}{:<13}{:<13}{:<13}{:<13}{}",
            r.dofs,
            cell(r.true_error),
            sci(r.est_err, 2),
            sci(r.est_ind, 2),
            cell(r.eff),
            cell(r.ind)
        );
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

pub fn write_results_table(records: &[LoopRecord], path: &Path) -> io::Result<()> {
    let rows: Vec<TableRow> = records.iter().map(TableRow::from).collect();
    std::fs::write(path, format_results_table(&rows))
}

/// Reads a table written by [`format_results_table`].
pub fn parse_results_table(text: &str) -> Result<Vec<TableRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.split_whitespace().eq(RESULTS_HEADER.split_whitespace()) => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    let opt = |s: &str| -> Result<Option<f64>, String> {
        if s == "-" {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|e| format!("{s}: {e}"))
        }
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return Err(format!("row {}: expected 6 columns, found {}", i + 1, f.len()));
        }
        let req = |s: &str| opt(s)?.ok_or_else(|| format!("row {}: missing value", i + 1));
        rows.push(TableRow {
            dofs: f[0].parse().map_err(|e| format!("{}: {e}", f[0]))?,
            true_error: opt(f[1])?,
            est_err: req(f[2])?,
            est_ind: req(f[3])?,
            eff: opt(f[4])?,
            ind: opt(f[5])?,
        });
    }
    Ok(rows)
}

/// The terminal block with point values and forces.
pub fn format_summary(s: &Summary) -> String {
    let mut out = String::new();
    if let Some([dx, dy]) = s.displacement {
        let _ = writeln!(out, "DisX  :     {}", sci(dx, 16));
        let _ = writeln!(out, "DisY  :     {}", sci(dy, 16));
    }
    let _ = writeln!(out, "P-Diff:     {}", sci(s.p_diff, 16));
    let _ = writeln!(out, "P-front:    {}", sci(s.p_front, 16));
    let _ = writeln!(out, "P-back:     {}", sci(s.p_back, 16));
    out.push_str("------------------\n");
    let _ = writeln!(out, "Face drag:      {}", sci(s.drag, 16));
    let _ = writeln!(out, "Face lift:      {}", sci(s.lift, 16));
    out
}

/// A mixed-space field sampled at the mesh vertices.
pub struct VertexField<'a> {
    pub space: &'a MixedSpace,
    pub values: &'a [f64],
}

impl VertexField<'_> {
    fn at(&self, v: usize, comp: Component) -> f64 {
        self.space
            .scalar(comp)
            .vertex_dof(v)
            .map_or(0.0, |d| self.values[self.space.offset(comp) + d])
    }
}

/// Legacy ASCII VTK unstructured grid of the active cells. Point data holds
/// the primal fields and, when given, the adjoint; cell data holds the
/// per-cell indicator magnitudes and the material id.
pub fn write_vtk(
    mesh: &Mesh,
    primal: &VertexField,
    adjoint: Option<&VertexField>,
    cell_indicators: Option<&[f64]>,
    path: &Path,
) -> io::Result<()> {
    let mut w = io::BufWriter::new(std::fs::File::create(path)?);
    let cells = mesh.active_cells();
    let n = mesh.n_vertices();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "stationary FSI solution")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {n} double")?;
    for p in mesh.vertices() {
        writeln!(w, "{:e} {:e} 0", p[0], p[1])?;
    }
    writeln!(w, "CELLS {} {}", cells.len(), 5 * cells.len())?;
    for &c in cells {
        let v = mesh.cell(c).vertices;
        writeln!(w, "4 {} {} {} {}", v[0], v[1], v[2], v[3])?;
    }
    writeln!(w, "CELL_TYPES {}", cells.len())?;
    for _ in cells {
        writeln!(w, "9")?;
    }

    writeln!(w, "POINT_DATA {n}")?;
    let mut fields = vec![("v", Some(primal), [Component::Vx, Component::Vy]), ("u", Some(primal), [Component::Ux, Component::Uy])];
    if adjoint.is_some() {
        fields.push(("z_v", adjoint, [Component::Vx, Component::Vy]));
        fields.push(("z_u", adjoint, [Component::Ux, Component::Uy]));
    }
    for (name, field, [cx, cy]) in fields {
        let f = field.expect("present");
        writeln!(w, "VECTORS {name} double")?;
        for v in 0..n {
            writeln!(w, "{:e} {:e} 0", f.at(v, cx), f.at(v, cy))?;
        }
    }
    let scalars = std::iter::once(("p", primal)).chain(adjoint.map(|a| ("z_p", a)));
    for (name, f) in scalars {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in 0..n {
            writeln!(w, "{:e}", f.at(v, Component::P))?;
        }
    }

    writeln!(w, "CELL_DATA {}", cells.len())?;
    if let Some(eta) = cell_indicators {
        assert_eq!(eta.len(), cells.len(), "one indicator per active cell");
        writeln!(w, "SCALARS eta double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for e in eta {
            writeln!(w, "{:e}", e.abs())?;
        }
    }
    writeln!(w, "SCALARS material int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for &c in cells {
        writeln!(w, "{}", mesh.cell(c).material.0)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sci_matches_printf() {
        assert_eq!(sci(0.258, 2), "2.58e-01");
        assert_eq!(sci(68754.0, 2), "6.88e+04");
        assert_eq!(sci(148.19455817646477, 16), "1.4819455817646477e+02");
        assert_eq!(sci(0.0, 2), "0.00e+00");
        assert_eq!(sci(-1.5e-300, 1), "-1.5e-300");
    }

    #[test]
    fn table_layout_matches_header_columns() {
        let rows = [TableRow {
            dofs: 13310,
            true_error: Some(0.258),
            est_err: 0.143,
            est_ind: 0.437,
            eff: Some(0.554),
            ind: Some(1.69),
        }];
        let text = format_results_table(&rows);
        let line = text.lines().nth(1).unwrap();
        assert_eq!(line, "13310   2.58e-01     1.43e-01     4.37e-01     5.54e-01     1.69e+00");
        assert_eq!(parse_results_table(&text).unwrap(), rows);
    }

    #[test]
    fn missing_reference_prints_dashes() {
        let rows = [TableRow {
            dofs: 7,
            true_error: None,
            est_err: 1.0,
            est_ind: 2.0,
            eff: None,
            ind: None,
        }];
        let text = format_results_table(&rows);
        assert!(text.ends_with("7       -            1.00e+00     2.00e+00     -            -\n"));
        assert_eq!(parse_results_table(&text).unwrap(), rows);
        assert_eq!(format_results_table(&[]), format!("{RESULTS_HEADER}\n"));
    }
}
