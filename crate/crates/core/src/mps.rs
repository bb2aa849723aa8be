//! Free-format MPS export and import.
//!
//! The writer emits `ROWS` / `COLUMNS` / `RHS` / `BOUNDS` with every variable boxed to
//! `[0, 1]`. Numbers use Rust's shortest round-trip formatting, so reading an exported
//! file back reproduces the LP bit for bit.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lp::StandardLp;
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

/// An LP as read from MPS: `min c·x + offset` over rows of mixed sense and general bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct MpsModel {
    pub name: String,
    pub row_names: Vec<String>,
    pub senses: Vec<RowSense>,
    pub col_names: Vec<String>,
    pub matrix: SparseMatrix,
    pub objective: Vec<f64>,
    pub objective_offset: f64,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

pub fn write_mps(lp: &StandardLp, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME {name}");
    out.push_str("ROWS\n N OBJ\n");
    for r in 0..lp.n_rows() {
        let _ = writeln!(out, " L R{r}");
    }
    out.push_str("COLUMNS\n");
    let mut by_column: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.n_cols()];
    for (r, c, v) in lp.constraints.triplets() {
        by_column[c].push((r, v));
    }
    for (c, entries) in by_column.iter().enumerate() {
        let cost = lp.objective[c];
        if cost != 0.0 {
            let _ = writeln!(out, " C{c} OBJ {cost}");
        }
        for (r, v) in entries {
            let _ = writeln!(out, " C{c} R{r} {v}");
        }
        if cost == 0.0 && entries.is_empty() {
            // Keep empty columns visible to readers.
            let _ = writeln!(out, " C{c} OBJ 0");
        }
    }
    out.push_str("RHS\n");
    for (r, h) in lp.rhs.iter().enumerate() {
        if *h != 0.0 {
            let _ = writeln!(out, " RHS R{r} {h}");
        }
    }
    out.push_str("BOUNDS\n");
    for c in 0..lp.n_cols() {
        let _ = writeln!(out, " UP BND C{c} 1.0");
        let _ = writeln!(out, " LO BND C{c} 0.0");
    }
    out.push_str("ENDATA\n");
    out
}

#[derive(PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Bounds,
    Done,
}

fn parse_number(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token.parse().map_err(|_| Error::Mps {
        line,
        message: format!("'{token}' is not a number"),
    })?;
    if v.is_nan() {
        return Err(Error::Mps {
            line,
            message: "NaN is not allowed".into(),
        });
    }
    Ok(v)
}

/// Parses free MPS. The first `N` row is the objective; later `N` rows are ignored.
pub fn parse_mps(text: &str) -> Result<MpsModel> {
    let err = |line: usize, message: String| Error::Mps { line, message };
    let mut name = String::new();
    let mut section = Section::None;
    let mut objective_row: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut ignored_rows: Vec<String> = Vec::new();
    let mut row_names = Vec::new();
    let mut senses = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut col_names: Vec<String> = Vec::new();
    let mut objective: Vec<f64> = Vec::new();
    let mut triplets = Vec::new();
    let mut rhs_by_row: Vec<(usize, f64)> = Vec::new();
    let mut offset = 0.0;
    let mut bounds: Vec<(usize, &str, f64, usize)> = Vec::new();

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(char::is_whitespace) {
            section = match tokens[0] {
                "NAME" => {
                    name = tokens[1..].join(" ");
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::Done,
                "RANGES" => return Err(err(line, "RANGES are not supported".into())),
                other => return Err(err(line, format!("unknown section {other}"))),
            };
            continue;
        }
        match section {
            Section::Rows => {
                let [sense, row] = tokens[..] else {
                    return Err(err(line, "expected '<sense> <row>'".into()));
                };
                let sense = match sense {
                    "N" => {
                        if objective_row.is_none() {
                            objective_row = Some(row.to_string());
                        } else {
                            ignored_rows.push(row.to_string());
                        }
                        continue;
                    }
                    "L" => RowSense::Le,
                    "G" => RowSense::Ge,
                    "E" => RowSense::Eq,
                    other => return Err(err(line, format!("unknown row sense {other}"))),
                };
                if row_index.insert(row.to_string(), row_names.len()).is_some() {
                    return Err(err(line, format!("duplicate row {row}")));
                }
                row_names.push(row.to_string());
                senses.push(sense);
            }
            Section::Columns => {
                if tokens.contains(&"'MARKER'") {
                    return Err(err(line, "integer markers are not supported".into()));
                }
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(err(line, "expected '<col> <row> <value> [<row> <value>]'".into()));
                }
                let col = *col_index.entry(tokens[0].to_string()).or_insert_with(|| {
                    col_names.push(tokens[0].to_string());
                    objective.push(0.0);
                    col_names.len() - 1
                });
                for pair in tokens[1..].chunks(2) {
                    let value = parse_number(pair[1], line)?;
                    if Some(pair[0]) == objective_row.as_deref() {
                        objective[col] += value;
                    } else if let Some(&r) = row_index.get(pair[0]) {
                        triplets.push((r, col, value));
                    } else if !ignored_rows.iter().any(|x| x == pair[0]) {
                        return Err(err(line, format!("unknown row {}", pair[0])));
                    }
                }
            }
            Section::Rhs => {
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(err(line, "expected '<set> <row> <value> [<row> <value>]'".into()));
                }
                for pair in tokens[1..].chunks(2) {
                    let value = parse_number(pair[1], line)?;
                    if Some(pair[0]) == objective_row.as_deref() {
                        // The objective RHS is the negated constant term.
                        offset = -value;
                    } else if let Some(&r) = row_index.get(pair[0]) {
                        rhs_by_row.push((r, value));
                    } else {
                        return Err(err(line, format!("unknown row {}", pair[0])));
                    }
                }
            }
            Section::Bounds => {
                let (kind, col, value) = match tokens[..] {
                    [kind, _, col, value] => (kind, col, Some(parse_number(value, line)?)),
                    [kind, _, col] => (kind, col, None),
                    _ => return Err(err(line, "expected '<type> <set> <col> [<value>]'".into())),
                };
                let Some(&c) = col_index.get(col) else {
                    return Err(err(line, format!("unknown column {col}")));
                };
                let needs_value = matches!(kind, "UP" | "LO" | "FX");
                if needs_value && value.is_none() {
                    return Err(err(line, format!("{kind} bound needs a value")));
                }
                let kind = match kind {
                    "UP" | "LO" | "FX" | "FR" | "MI" | "PL" | "BV" => kind,
                    other => return Err(err(line, format!("unsupported bound type {other}"))),
                };
                bounds.push((c, kind, value.unwrap_or(0.0), line));
            }
            Section::None => return Err(err(line, "data outside a section".into())),
            Section::Done => return Err(err(line, "data after ENDATA".into())),
        }
    }
    if section != Section::Done {
        return Err(err(text.lines().count(), "missing ENDATA".into()));
    }

    let n_cols = col_names.len();
    let mut rhs = vec![0.0; row_names.len()];
    for (r, v) in rhs_by_row {
        rhs[r] = v;
    }
    let mut lower = vec![0.0; n_cols];
    let mut upper = vec![f64::INFINITY; n_cols];
    for (c, kind, v, _) in bounds {
        match kind {
            "UP" => upper[c] = v,
            "LO" => lower[c] = v,
            "FX" => {
                lower[c] = v;
                upper[c] = v;
            }
            "FR" => {
                lower[c] = f64::NEG_INFINITY;
                upper[c] = f64::INFINITY;
            }
            "MI" => lower[c] = f64::NEG_INFINITY,
            "PL" => upper[c] = f64::INFINITY,
            _ => {
                lower[c] = 0.0;
                upper[c] = 1.0;
            }
        }
    }
    let matrix = SparseMatrix::from_triplets(row_names.len(), n_cols, &triplets)?;
    Ok(MpsModel {
        name,
        row_names,
        senses,
        col_names,
        matrix,
        objective,
        objective_offset: offset,
        rhs,
        lower,
        upper,
    })
}

impl MpsModel {
    /// Converts to `≤` rows over `[0, 1]` boxes: `≥` rows are negated and equalities split.
    /// Any other variable bound is rejected.
    pub fn to_standard_lp(&self) -> Result<StandardLp> {
        if let Some(c) = (0..self.col_names.len()).find(|&c| self.lower[c] != 0.0 || self.upper[c] != 1.0) {
            return Err(Error::InvalidArgument(format!(
                "column {} has bounds [{}, {}]; only [0, 1] is supported",
                self.col_names[c], self.lower[c], self.upper[c]
            )));
        }
        let mut triplets = Vec::new();
        let mut rhs = Vec::new();
        let mut push_row = |r: usize, sign: f64, triplets: &mut Vec<(usize, usize, f64)>| {
            let out = rhs.len();
            let (cols, values) = self.matrix.row(r);
            for (&c, v) in cols.iter().zip(values) {
                triplets.push((out, c, sign * v));
            }
            rhs.push(sign * self.rhs[r]);
        };
        for (r, sense) in self.senses.iter().enumerate() {
            match sense {
                RowSense::Le => push_row(r, 1.0, &mut triplets),
                RowSense::Ge => push_row(r, -1.0, &mut triplets),
                RowSense::Eq => {
                    push_row(r, 1.0, &mut triplets);
                    push_row(r, -1.0, &mut triplets);
                }
            }
        }
        let matrix = SparseMatrix::from_triplets(rhs.len(), self.col_names.len(), &triplets)?;
        StandardLp::unlabeled(self.objective.clone(), matrix, rhs)
    }
}
