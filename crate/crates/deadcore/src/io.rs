//! Deterministic exporters: legacy VTK ASCII for field inspection, CSV
//! tables (comma-separated, header row, `.` decimal, LF endings), and JSON
//! summaries. All formatting is byte-reproducible for identical inputs.

use std::collections::BTreeSet;
use std::path::Path;

use crate::dead_core::PsiRow;
use crate::error::Result;
use crate::field::ScalarField;
use crate::geometry::Mesh;
use crate::shape::ConvergenceReport;

/// Shortest round-trip decimal form of an `f64`, always with a `.` decimal
/// separator (Rust's `Display` guarantees both).
pub fn fmt_float(x: f64) -> String {
    format!("{x}")
}

/// Legacy VTK ASCII export of a mesh with any number of named nodal scalar
/// fields. 1D meshes export line cells, 2D meshes triangle cells.
pub fn vtk_string(mesh: &Mesh, title: &str, fields: &[(&str, &[f64])]) -> String {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str(title);
    s.push('\n');
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    s.push_str(&format!("POINTS {} double\n", mesh.nodes.len()));
    for p in &mesh.nodes {
        s.push_str(&format!("{} {} 0\n", fmt_float(p[0]), fmt_float(p[1])));
    }
    let k = mesh.dim + 1;
    let ne = mesh.elements.len();
    s.push_str(&format!("CELLS {} {}\n", ne, ne * (k + 1)));
    for e in 0..ne {
        s.push_str(&format!("{k}"));
        for &i in mesh.element_nodes(e) {
            s.push_str(&format!(" {i}"));
        }
        s.push('\n');
    }
    s.push_str(&format!("CELL_TYPES {ne}\n"));
    let cell_type = if mesh.dim == 1 { 3 } else { 5 };
    for _ in 0..ne {
        s.push_str(&format!("{cell_type}\n"));
    }
    if !fields.is_empty() {
        s.push_str(&format!("POINT_DATA {}\n", mesh.nodes.len()));
        for (name, values) in fields {
            s.push_str(&format!("SCALARS {name} double 1\nLOOKUP_TABLE default\n"));
            for &v in *values {
                s.push_str(&fmt_float(v));
                s.push('\n');
            }
        }
    }
    s
}

pub fn write_vtk(
    path: &Path,
    mesh: &Mesh,
    title: &str,
    fields: &[(&str, &[f64])],
) -> Result<()> {
    std::fs::write(path, vtk_string(mesh, title, fields))?;
    Ok(())
}

/// Simple deterministic CSV builder. Cells are pre-formatted strings; use
/// [`fmt_float`] for numeric cells.
pub struct Csv {
    buf: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { buf: format!("{}\n", header.join(",")), columns: header.len() }
    }

    pub fn push_row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns);
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
    }

    pub fn into_string(self) -> String {
        self.buf
    }

    pub fn write(self, path: &Path) -> Result<()> {
        std::fs::write(path, self.buf)?;
        Ok(())
    }
}

/// Nodal field table: node_id, x, y, value.
pub fn field_csv(field: &ScalarField) -> String {
    let mut csv = Csv::new(&["node_id", "x", "y", "value"]);
    for (i, (&p, &v)) in field.mesh.nodes.iter().zip(&field.values).enumerate() {
        csv.push_row(&[
            i.to_string(),
            fmt_float(p[0]),
            fmt_float(p[1]),
            fmt_float(v),
        ]);
    }
    csv.into_string()
}

/// Node-id listing of a region (one id per row).
pub fn region_csv(nodes: &BTreeSet<usize>) -> String {
    let mut csv = Csv::new(&["node_id"]);
    for &i in nodes {
        csv.push_row(&[i.to_string()]);
    }
    csv.into_string()
}

/// Near-boundary pointwise bound check table.
pub fn psi_table_csv(rows: &[PsiRow]) -> String {
    let mut csv = Csv::new(&["node", "x", "y", "d", "w", "psi_inv_d", "violation"]);
    for r in rows {
        csv.push_row(&[
            r.node.to_string(),
            fmt_float(r.x),
            fmt_float(r.y),
            fmt_float(r.distance),
            fmt_float(r.w),
            fmt_float(r.psi_inv),
            fmt_float(r.violation),
        ]);
    }
    csv.into_string()
}

/// Parameter-study table: one row per parameter value, error columns in
/// alphabetical order after the parameter column.
pub fn report_csv(report: &ConvergenceReport) -> String {
    let names: Vec<&str> = report.errors.keys().map(|s| s.as_str()).collect();
    let mut header = vec!["parameter"];
    header.extend(&names);
    let mut csv = Csv::new(&header);
    for (i, &p) in report.parameters.iter().enumerate() {
        let mut row = vec![fmt_float(p)];
        for n in &names {
            row.push(fmt_float(report.errors[*n][i]));
        }
        csv.push_row(&row);
    }
    csv.into_string()
}

/// Radial profile table: r, w.
pub fn profile_csv(radii: &[f64], values: &[f64]) -> String {
    let mut csv = Csv::new(&["r", "w"]);
    for (&r, &w) in radii.iter().zip(values) {
        csv.push_row(&[fmt_float(r), fmt_float(w)]);
    }
    csv.into_string()
}

/// Mesh summary as JSON: node/element counts, edge-length range, measure.
pub fn mesh_summary(mesh: &Mesh) -> serde_json::Value {
    let (h_min, h_max) = mesh.h_min_max();
    serde_json::json!({
        "dim": mesh.dim,
        "nodes": mesh.nodes.len(),
        "elements": mesh.elements.len(),
        "boundary_nodes": mesh.boundary_nodes.len(),
        "h_min": h_min,
        "h_max": h_max,
        "measure": mesh.total_measure(),
    })
}

/// Pretty-printed JSON with sorted keys and a trailing newline.
pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldKind;
    use crate::geometry::{build_disk_mesh, build_slab_mesh};
    use std::sync::Arc;

    #[test]
    fn vtk_slab_structure() {
        let mesh = build_slab_mesh(1.0, 0.5).unwrap();
        let vals: Vec<f64> = (0..mesh.nodes.len()).map(|i| i as f64).collect();
        let s = vtk_string(&mesh, "slab", &[("w", &vals)]);
        assert!(s.starts_with("# vtk DataFile Version 3.0\nslab\nASCII\n"));
        assert!(s.contains("DATASET UNSTRUCTURED_GRID"));
        assert!(s.contains(&format!("POINTS {} double", mesh.nodes.len())));
        assert!(s.contains("CELL_TYPES"));
        assert!(s.contains("\n3\n")); // line cells
        assert!(s.contains("SCALARS w double 1"));
        assert!(!s.contains('\r'));
    }

    #[test]
    fn vtk_disk_uses_triangles() {
        let mesh = build_disk_mesh(1.0, 0.2).unwrap();
        let s = vtk_string(&mesh, "disk", &[]);
        assert!(s.contains("\n5\n"));
        assert!(!s.contains("POINT_DATA"));
        // every cell line lists 3 vertex ids
        let cells_at = s.find("CELLS").unwrap();
        let first_cell = s[cells_at..].lines().nth(1).unwrap();
        assert_eq!(first_cell.split(' ').count(), 4);
        assert!(first_cell.starts_with('3'));
    }

    #[test]
    fn csv_formatting_rules() {
        let mesh = Arc::new(build_slab_mesh(1.0, 0.5).unwrap());
        let f = ScalarField::from_fn(&mesh, FieldKind::Derived, &|p: [f64; 2]| 0.1 * p[0]);
        let s = field_csv(&f);
        let mut lines = s.lines();
        assert_eq!(lines.next().unwrap(), "node_id,x,y,value");
        assert!(s.ends_with('\n'));
        assert!(!s.contains('\r'));
        // shortest round-trip decimals with '.' separator
        assert!(s.contains("-0.05"));
        for line in s.lines().skip(1) {
            assert_eq!(line.split(',').count(), 4);
        }
    }

    #[test]
    fn csv_is_byte_deterministic() {
        let mesh = Arc::new(build_disk_mesh(1.0, 0.2).unwrap());
        let f = ScalarField::from_fn(&mesh, FieldKind::Derived, &|p: [f64; 2]| (p[0] + p[1]).sin());
        assert_eq!(field_csv(&f), field_csv(&f));
    }

    #[test]
    fn region_and_summary() {
        let nodes: BTreeSet<usize> = [3, 1, 2].into_iter().collect();
        assert_eq!(region_csv(&nodes), "node_id\n1\n2\n3\n");
        let mesh = build_slab_mesh(1.0, 0.25).unwrap();
        let v = mesh_summary(&mesh);
        assert_eq!(v["nodes"], 9);
        assert_eq!(v["elements"], 8);
        assert!((v["measure"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    }
}
