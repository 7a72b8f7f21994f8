//! Field CSV: header `x,y,u`, one row per node, line-major, every number
//! with 17 significant digits so values round-trip exactly.

use std::io::{Read, Write};

use crate::error::{GmlError, Result};
use crate::problem::{FieldSolution, LineGrid};

fn csv_err(e: impl std::fmt::Display) -> GmlError {
    GmlError::Csv(e.to_string())
}

pub fn write_field_csv<W: Write>(out: W, grid: &LineGrid, u: &FieldSolution) -> Result<()> {
    u.check_grid(grid, "field")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "u"]).map_err(csv_err)?;
    for n in 0..=grid.n_lines {
        let x = grid.abscissae[n];
        for j in 0..=grid.m_nodes {
            w.write_record([
                format!("{x:.16e}"),
                format!("{:.16e}", grid.y(n, j)),
                format!("{:.16e}", u.values[n][j]),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(csv_err)?;
    Ok(())
}

/// Reads the `u` column back into the layout of `grid`.
pub fn read_field_csv<R: Read>(input: R, grid: &LineGrid) -> Result<FieldSolution> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "y", "u"] {
        return Err(GmlError::Csv(format!("unexpected header {headers:?}")));
    }
    let width = grid.m_nodes + 1;
    let mut field = grid.zero_field();
    let mut count = 0;
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let (n, j) = (count / width, count % width);
        if n > grid.n_lines {
            return Err(GmlError::Csv("more rows than grid nodes".into()));
        }
        let u: f64 = rec
            .get(2)
            .ok_or_else(|| GmlError::Csv(format!("row {count} has no u column")))?
            .parse()
            .map_err(csv_err)?;
        field.values[n][j] = u;
        count += 1;
    }
    if count != (grid.n_lines + 1) * width {
        return Err(GmlError::DimensionMismatch {
            expected: (grid.n_lines + 1) * width,
            found: count,
            context: "field csv rows",
        });
    }
    Ok(field)
}
