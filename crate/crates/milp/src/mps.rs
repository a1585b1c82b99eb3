//! MPS reading and writing.
//!
//! The writer emits the classic section layout (NAME, ROWS, COLUMNS, RHS,
//! BOUNDS, ENDATA) with integer columns inside `MARKER INTORG/INTEND` pairs.
//! Fields are separated by whitespace and aligned to the fixed-format columns
//! where names fit; longer names simply widen the field, so names must not
//! contain spaces. Every integer column gets explicit bounds because some
//! readers default unbounded integer columns to `[0, 1]`.

use crate::branch_bound::MipProblem;
use crate::error::MpsError;
use crate::problem::{LpBuilder, Sense};
use std::collections::HashMap;
use std::io::{BufRead, Write};

/// A parsed MPS model with its column and row names.
#[derive(Debug, Clone)]
pub struct MpsModel {
    pub name: String,
    pub mip: MipProblem,
    pub col_names: Vec<String>,
    pub row_names: Vec<String>,
}

const OBJ_ROW: &str = "COST";

fn field(name: &str) -> String {
    format!("{name:<8}")
}

/// Writes `mip` in MPS form. `col_names` and `row_names` must match the
/// problem dimensions and contain no whitespace.
pub fn write_mps<W: Write>(
    w: &mut W,
    name: &str,
    mip: &MipProblem,
    col_names: &[String],
    row_names: &[String],
) -> Result<(), MpsError> {
    let p = &mip.lp;
    if col_names.len() != p.num_cols() {
        return Err(crate::LpError::DimensionMismatch {
            what: "column names",
            expected: p.num_cols(),
            found: col_names.len(),
        }
        .into());
    }
    if row_names.len() != p.num_rows() {
        return Err(crate::LpError::DimensionMismatch {
            what: "row names",
            expected: p.num_rows(),
            found: row_names.len(),
        }
        .into());
    }
    writeln!(w, "NAME          {name}")?;
    writeln!(w, "ROWS")?;
    writeln!(w, " N  {OBJ_ROW}")?;
    for (r, s) in row_names.iter().zip(p.senses()) {
        let t = match s {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        writeln!(w, " {t}  {r}")?;
    }
    writeln!(w, "COLUMNS")?;
    let mut in_int = false;
    let mut marker = 0usize;
    for j in 0..p.num_cols() {
        if mip.integer[j] != in_int {
            let kind = if mip.integer[j] { "INTORG" } else { "INTEND" };
            writeln!(
                w,
                "    {}  'MARKER'                 '{kind}'",
                field(&format!("MARKER{marker:04}"))
            )?;
            marker += 1;
            in_int = mip.integer[j];
        }
        let cname = field(&col_names[j]);
        let c = p.objective()[j];
        let (rows, vals) = p.column(j);
        if c == 0.0 && rows.is_empty() {
            // Keep the column declared even when it has no entries.
            writeln!(w, "    {cname}  {}  0", field(OBJ_ROW))?;
        }
        if c != 0.0 {
            writeln!(w, "    {cname}  {}  {c}", field(OBJ_ROW))?;
        }
        for (&i, &a) in rows.iter().zip(vals) {
            writeln!(w, "    {cname}  {}  {a}", field(&row_names[i]))?;
        }
    }
    if in_int {
        writeln!(
            w,
            "    {}  'MARKER'                 'INTEND'",
            field(&format!("MARKER{marker:04}"))
        )?;
    }
    writeln!(w, "RHS")?;
    for (i, &b) in p.rhs().iter().enumerate() {
        if b != 0.0 {
            writeln!(w, "    RHS       {}  {b}", field(&row_names[i]))?;
        }
    }
    writeln!(w, "BOUNDS")?;
    for j in 0..p.num_cols() {
        let (l, u) = (p.lower()[j], p.upper()[j]);
        let cname = field(&col_names[j]);
        if l == u {
            writeln!(w, " FX BND       {cname}  {l}")?;
            continue;
        }
        if l != 0.0 {
            writeln!(w, " LO BND       {cname}  {l}")?;
        }
        if u.is_finite() {
            writeln!(w, " UP BND       {cname}  {u}")?;
        } else if mip.integer[j] {
            writeln!(w, " PL BND       {cname}")?;
        }
    }
    writeln!(w, "ENDATA")?;
    Ok(())
}

#[derive(PartialEq, Clone, Copy)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Bounds,
    End,
}

/// Reads an MPS model written by [`write_mps`] or any whitespace-separated
/// MPS without RANGES. The first `N` row is the objective; other `N` rows
/// are dropped.
pub fn read_mps<R: BufRead>(r: R) -> Result<MpsModel, MpsError> {
    let mut name = String::new();
    let mut section = Section::None;
    let mut obj_row: Option<String> = None;
    let mut free_rows: Vec<String> = Vec::new();
    let mut row_names: Vec<String> = Vec::new();
    let mut senses: Vec<Sense> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_names: Vec<String> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut cost: Vec<f64> = Vec::new();
    let mut integer: Vec<bool> = Vec::new();
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut lower: Vec<f64> = Vec::new();
    let mut upper: Vec<f64> = Vec::new();
    let mut upper_set: Vec<bool> = Vec::new();
    let mut in_int = false;

    let parse_num = |s: &str, line: usize| -> Result<f64, MpsError> {
        s.parse::<f64>().map_err(|_| MpsError::Parse {
            line,
            msg: format!("invalid number '{s}'"),
        })
    };

    for (ln, line) in r.lines().enumerate() {
        let line = line?;
        let ln = ln + 1;
        if line.trim().is_empty() || line.starts_with('*') {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        if !line.starts_with(' ') && !line.starts_with('\t') {
            section = match tok[0] {
                "NAME" => {
                    name = tok.get(1).unwrap_or(&"").to_string();
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                other => {
                    return Err(MpsError::Parse {
                        line: ln,
                        msg: format!("unsupported section '{other}'"),
                    })
                }
            };
            continue;
        }
        let bad = |msg: &str| MpsError::Parse {
            line: ln,
            msg: msg.to_string(),
        };
        match section {
            Section::Rows => {
                if tok.len() != 2 {
                    return Err(bad("expected row type and name"));
                }
                let sense = match tok[0] {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(tok[1].to_string());
                        } else {
                            free_rows.push(tok[1].to_string());
                        }
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    _ => return Err(bad("unknown row type")),
                };
                if row_index.contains_key(tok[1]) {
                    return Err(bad("duplicate row name"));
                }
                row_index.insert(tok[1].to_string(), row_names.len());
                row_names.push(tok[1].to_string());
                senses.push(sense);
                rhs.push(0.0);
            }
            Section::Columns => {
                if tok.len() >= 3 && tok[1] == "'MARKER'" {
                    in_int = match tok[2] {
                        "'INTORG'" => true,
                        "'INTEND'" => false,
                        _ => return Err(bad("unknown marker")),
                    };
                    continue;
                }
                if tok.len() != 3 && tok.len() != 5 {
                    return Err(bad("expected column, row, value [, row, value]"));
                }
                let j = match col_index.get(tok[0]) {
                    Some(&j) => j,
                    None => {
                        let j = col_names.len();
                        col_index.insert(tok[0].to_string(), j);
                        col_names.push(tok[0].to_string());
                        cost.push(0.0);
                        integer.push(in_int);
                        entries.push(Vec::new());
                        lower.push(0.0);
                        upper.push(if in_int { 1.0 } else { f64::INFINITY });
                        upper_set.push(false);
                        j
                    }
                };
                for pair in tok[1..].chunks(2) {
                    let v = parse_num(pair[1], ln)?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        cost[j] += v;
                    } else if let Some(&i) = row_index.get(pair[0]) {
                        entries[j].push((i, v));
                    } else if !free_rows.iter().any(|f| f == pair[0]) {
                        return Err(bad(&format!("unknown row '{}'", pair[0])));
                    }
                }
            }
            Section::Rhs => {
                if tok.len() != 3 && tok.len() != 5 {
                    return Err(bad("expected set, row, value [, row, value]"));
                }
                for pair in tok[1..].chunks(2) {
                    let v = parse_num(pair[1], ln)?;
                    if let Some(&i) = row_index.get(pair[0]) {
                        rhs[i] = v;
                    } else if Some(pair[0]) != obj_row.as_deref()
                        && !free_rows.iter().any(|f| f == pair[0])
                    {
                        return Err(bad(&format!("unknown row '{}'", pair[0])));
                    }
                }
            }
            Section::Bounds => {
                if tok.len() < 3 {
                    return Err(bad("expected bound type, set, column [, value]"));
                }
                let j = *col_index
                    .get(tok[2])
                    .ok_or_else(|| bad(&format!("unknown column '{}'", tok[2])))?;
                let val = || -> Result<f64, MpsError> {
                    let s = tok.get(3).ok_or_else(|| bad("missing bound value"))?;
                    parse_num(s, ln)
                };
                match tok[0] {
                    "UP" => {
                        upper[j] = val()?;
                        upper_set[j] = true;
                    }
                    "LO" => lower[j] = val()?,
                    "FX" => {
                        let v = val()?;
                        lower[j] = v;
                        upper[j] = v;
                        upper_set[j] = true;
                    }
                    "PL" => {
                        upper[j] = f64::INFINITY;
                        upper_set[j] = true;
                    }
                    "BV" => {
                        lower[j] = 0.0;
                        upper[j] = 1.0;
                        upper_set[j] = true;
                        integer[j] = true;
                    }
                    "LI" => {
                        lower[j] = val()?;
                        integer[j] = true;
                    }
                    "UI" => {
                        upper[j] = val()?;
                        upper_set[j] = true;
                        integer[j] = true;
                    }
                    "MI" => return Err(bad("free lower bounds are not supported")),
                    _ => return Err(bad("unknown bound type")),
                }
            }
            Section::None | Section::End => return Err(bad("data outside a section")),
        }
    }

    let mut b = LpBuilder::new();
    for j in 0..col_names.len() {
        b.add_col(cost[j], lower[j], upper[j]);
    }
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); row_names.len()];
    for (j, col) in entries.iter().enumerate() {
        for &(i, v) in col {
            rows[i].push((j, v));
        }
    }
    for (i, coefs) in rows.iter().enumerate() {
        b.add_row(coefs, senses[i], rhs[i]);
    }
    let lp = b.build()?;
    let mip = MipProblem::new(lp, integer)?;
    Ok(MpsModel {
        name,
        mip,
        col_names,
        row_names,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_problem() {
        let mut b = LpBuilder::new();
        let x = b.add_col(1.5, 0.0, 1.0);
        let y = b.add_col(-2.0, 0.0, f64::INFINITY);
        let z = b.add_col(0.0, 2.0, 2.0);
        let w = b.add_col(0.0, -1.0, 4.0);
        b.add_row(&[(x, 1.0), (y, 2.5)], Sense::Le, 4.0);
        b.add_row(&[(y, 1.0), (z, -1.0)], Sense::Ge, -3.0);
        b.add_row(&[(x, 1.0), (z, 1.0), (w, 0.125)], Sense::Eq, 0.0);
        let mip = MipProblem::new(b.build().unwrap(), vec![true, false, false, true]).unwrap();
        let cols: Vec<String> = ["yOp_TF1_t001", "xQ_a", "z", "w"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let rows: Vec<String> = ["r0", "r1", "balance_long_name"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut buf = Vec::new();
        write_mps(&mut buf, "toy", &mip, &cols, &rows).unwrap();
        let back = read_mps(&buf[..]).unwrap();
        assert_eq!(back.name, "toy");
        assert_eq!(back.col_names, cols);
        assert_eq!(back.row_names, rows);
        assert_eq!(back.mip, mip);
    }

    #[test]
    fn reports_line_of_bad_number() {
        let text = "NAME x\nROWS\n N  COST\n L  r\nCOLUMNS\n    a  r  abc\nENDATA\n";
        match read_mps(text.as_bytes()) {
            Err(MpsError::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
    }
}
