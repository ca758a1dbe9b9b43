//! File formats: trajectory CSV and system description files.
//!
//! A trajectory file is CSV with header `t,u1..um` (input only) or
//! `t,u1..um,y1..yp`; the `t` column must equal the row index, counting
//! from 0. Cells are decimal or scientific notation. A system file is
//! line-oriented `key = value` text with integer fields `n`, `m`, `p` and
//! whitespace-separated row-major arrays `A`, `B`, `C`, `D`; everything
//! after `#` on a line is a comment.

use std::fmt::Write as _;
use std::path::Path;

use hankelcast::nalgebra::{DMatrix, DVector};
use hankelcast::{StateSpace64, Trajectory64};

/// Parsed trajectory file: inputs always, outputs when the file has them.
pub struct SignalFile {
    pub u: DMatrix<f64>,
    pub y: Option<DMatrix<f64>>,
}

impl SignalFile {
    /// The file as a full input/output trajectory; input-only files are
    /// rejected with a message naming what is missing.
    pub fn into_trajectory(self, role: &str) -> Result<Trajectory64, String> {
        let y = self
            .y
            .ok_or_else(|| format!("{role} must have y columns, found an input-only file"))?;
        Trajectory64::new(self.u, y).map_err(|e| e.to_string())
    }

    /// Sample vector per time step: u entries, then y entries when present.
    pub fn stacked_signal(&self) -> DMatrix<f64> {
        match &self.y {
            None => self.u.clone(),
            Some(y) => {
                let mut w = DMatrix::zeros(self.u.nrows() + y.nrows(), self.u.ncols());
                w.rows_mut(0, self.u.nrows()).copy_from(&self.u);
                w.rows_mut(self.u.nrows(), y.nrows()).copy_from(y);
                w
            }
        }
    }
}

pub fn read_signal_file(path: &Path) -> Result<SignalFile, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_signal(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_signal(text: &str) -> Result<SignalFile, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or("missing header row")?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let (m, p) = parse_header(&names)?;

    let mut u_cells = Vec::new();
    let mut y_cells = Vec::new();
    let mut steps = 0usize;
    for line in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 1 + m + p {
            return Err(format!(
                "row {steps} has {} cells, the header names {}",
                cells.len(),
                1 + m + p
            ));
        }
        let t: f64 = parse_cell(cells[0], steps, "t")?;
        if t != steps as f64 {
            return Err(format!("row {steps}: t column is {t}, expected {steps}"));
        }
        for (k, cell) in cells[1..=m].iter().enumerate() {
            u_cells.push(parse_cell(cell, steps, names[1 + k])?);
        }
        for (k, cell) in cells[1 + m..].iter().enumerate() {
            y_cells.push(parse_cell(cell, steps, names[1 + m + k])?);
        }
        steps += 1;
    }

    // Cells were gathered row by row, so the matrices fill row-major per
    // step; transpose of the (steps x width) layout gives width x steps.
    let u = DMatrix::from_row_slice(steps, m, &u_cells).transpose();
    let y = (p > 0).then(|| DMatrix::from_row_slice(steps, p, &y_cells).transpose());
    Ok(SignalFile { u, y })
}

/// Validates `t, u1..um[, y1..yp]` and returns `(m, p)`.
fn parse_header(names: &[&str]) -> Result<(usize, usize), String> {
    if names.first() != Some(&"t") {
        return Err("header must start with column t".into());
    }
    let mut m = 0;
    while 1 + m < names.len() && names[1 + m] == format!("u{}", m + 1) {
        m += 1;
    }
    let mut p = 0;
    while 1 + m + p < names.len() && names[1 + m + p] == format!("y{}", p + 1) {
        p += 1;
    }
    if 1 + m + p != names.len() {
        return Err(format!(
            "unexpected column {:?}; the header must read t,u1..um,y1..yp",
            names[1 + m + p]
        ));
    }
    Ok((m, p))
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64, String> {
    cell.parse()
        .map_err(|_| format!("row {row}, column {column}: {cell:?} is not a number"))
}

/// Trajectory CSV text; `y` may be omitted for an input-only file. Values
/// print in shortest round-trip form, so reading the text back recovers the
/// exact trajectory.
pub fn write_trajectory(u: &DMatrix<f64>, y: Option<&DMatrix<f64>>) -> String {
    let mut out = String::from("t");
    for k in 1..=u.nrows() {
        let _ = write!(out, ",u{k}");
    }
    for k in 1..=y.map_or(0, DMatrix::nrows) {
        let _ = write!(out, ",y{k}");
    }
    out.push('\n');
    for t in 0..u.ncols() {
        let _ = write!(out, "{t}");
        for r in 0..u.nrows() {
            let _ = write!(out, ",{}", u[(r, t)]);
        }
        if let Some(y) = y {
            for r in 0..y.nrows() {
                let _ = write!(out, ",{}", y[(r, t)]);
            }
        }
        out.push('\n');
    }
    out
}

/// Output-only CSV (`t,y1..yp`), used for prediction results.
pub fn write_outputs(y: &DMatrix<f64>) -> String {
    let mut out = String::from("t");
    for k in 1..=y.nrows() {
        let _ = write!(out, ",y{k}");
    }
    out.push('\n');
    for t in 0..y.ncols() {
        let _ = write!(out, "{t}");
        for r in 0..y.nrows() {
            let _ = write!(out, ",{}", y[(r, t)]);
        }
        out.push('\n');
    }
    out
}

pub fn read_system_file(path: &Path) -> Result<StateSpace64, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_system(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_system(text: &str) -> Result<StateSpace64, String> {
    let mut dims: [Option<usize>; 3] = [None; 3];
    let mut arrays: [Option<Vec<f64>>; 4] = [None, None, None, None];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        let dim_slot = match key {
            "n" => Some(0),
            "m" => Some(1),
            "p" => Some(2),
            _ => None,
        };
        if let Some(slot) = dim_slot {
            let parsed = value
                .parse()
                .map_err(|_| format!("line {}: {key} must be an integer", lineno + 1))?;
            if dims[slot].replace(parsed).is_some() {
                return Err(format!("line {}: duplicate field {key}", lineno + 1));
            }
            continue;
        }
        let arr_slot = match key {
            "A" => 0,
            "B" => 1,
            "C" => 2,
            "D" => 3,
            _ => return Err(format!("line {}: unknown field {key:?}", lineno + 1)),
        };
        let mut parsed = Vec::new();
        for cell in value.split_whitespace() {
            parsed.push(
                cell.parse()
                    .map_err(|_| format!("line {}: {cell:?} is not a number", lineno + 1))?,
            );
        }
        if arrays[arr_slot].replace(parsed).is_some() {
            return Err(format!("line {}: duplicate field {key}", lineno + 1));
        }
    }

    let [n, m, p] = dims;
    let n = n.ok_or("missing field n")?;
    let m = m.ok_or("missing field m")?;
    let p = p.ok_or("missing field p")?;
    let names = ["A", "B", "C", "D"];
    let expected = [n * n, n * m, p * n, p * m];
    let mut taken = arrays.into_iter();
    let mut checked = Vec::with_capacity(4);
    for k in 0..4 {
        let arr = taken
            .next()
            .flatten()
            .ok_or_else(|| format!("missing field {}", names[k]))?;
        if arr.len() != expected[k] {
            return Err(format!(
                "{} has {} entries, expected {}",
                names[k],
                arr.len(),
                expected[k]
            ));
        }
        checked.push(arr);
    }
    StateSpace64::from_row_slices(n, m, p, &checked[0], &checked[1], &checked[2], &checked[3])
        .map_err(|e| e.to_string())
}

/// Comma-separated initial state; the error names the width the system
/// expects.
pub fn parse_state(text: &str, n: usize) -> Result<DVector<f64>, String> {
    let cells: Vec<&str> = if text.trim().is_empty() {
        Vec::new()
    } else {
        text.split(',').map(str::trim).collect()
    };
    if cells.len() != n {
        return Err(format!(
            "initial state has {} entries, the system expects n = {n}",
            cells.len()
        ));
    }
    let mut x0 = DVector::zeros(n);
    for (k, cell) in cells.iter().enumerate() {
        x0[k] = cell
            .parse()
            .map_err(|_| format!("initial state entry {k}: {cell:?} is not a number"))?;
    }
    Ok(x0)
}
