//! Plan files: CSV tables, the text Gantt chart and solution vectors.

use super::{
    cost_breakdown, trip_stats, Dispatch, PlanReport, ReportError, ScenarioComparison,
    COST_COMPONENTS,
};
use crate::model::MilpModel;
use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Fixed six-decimal rendering with negative zero and sub-precision noise
/// printed as zero.
fn num(v: f64) -> String {
    if v.abs() < 5e-7 {
        "0.000000".to_string()
    } else {
        format!("{v:.6}")
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.display().to_string(),
        source,
    }
}

struct Table {
    path: PathBuf,
    w: csv::Writer<fs::File>,
}

impl Table {
    fn create(path: PathBuf, header: &[&str]) -> Result<Table, ReportError> {
        let w = csv::Writer::from_path(&path).map_err(|source| ReportError::Csv {
            path: path.display().to_string(),
            source,
        })?;
        let mut t = Table { path, w };
        t.row(header.iter().map(|s| s.to_string()).collect())?;
        Ok(t)
    }

    fn row(&mut self, fields: Vec<String>) -> Result<(), ReportError> {
        self.w
            .write_record(&fields)
            .map_err(|source| ReportError::Csv {
                path: self.path.display().to_string(),
                source,
            })
    }

    fn finish(mut self) -> Result<PathBuf, ReportError> {
        let path = self.path.clone();
        self.w.flush().map_err(io_err(&path))?;
        Ok(self.path)
    }
}

/// Writes `dispatches.csv`, `inventory.csv`, `plant_ops.csv`, `trips.csv`,
/// `costs.csv`, `shares.csv` and `gantt.txt` into `dir`, creating it if
/// needed. Returns the written paths.
pub fn write_outputs(report: &PlanReport, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = Vec::new();

    let mut t = Table::create(
        dir.join("dispatches.csv"),
        &[
            "period", "kind", "from", "to", "region", "product", "vehicle", "kl", "trips",
            "arrival",
        ],
    )?;
    for d in &report.dispatches {
        t.row(vec![
            d.period.to_string(),
            d.kind.as_str().to_string(),
            d.from.clone(),
            d.to.clone(),
            d.region.clone(),
            d.product.clone(),
            d.vehicle.clone(),
            num(d.kl),
            d.trips().to_string(),
            d.arrival.to_string(),
        ])?;
    }
    files.push(t.finish()?);

    let mut t = Table::create(
        dir.join("inventory.csv"),
        &[
            "facility",
            "kind",
            "product",
            "period",
            "level_kl",
            "cap_min_kl",
            "cap_max_kl",
            "buffer_kl",
            "target_kl",
            "level_fraction_of_max",
        ],
    )?;
    for inv in &report.inventories {
        for (k, &q) in inv.levels.iter().enumerate() {
            let frac = if inv.cap_max > 0.0 {
                q / inv.cap_max
            } else {
                0.0
            };
            t.row(vec![
                inv.facility.clone(),
                inv.kind.to_string(),
                inv.product.clone(),
                (k + 1).to_string(),
                num(q),
                num(inv.cap_min),
                num(inv.cap_max),
                num(inv.buffer.unwrap_or(0.0)),
                num(inv.targets[k]),
                num(frac),
            ])?;
        }
    }
    files.push(t.finish()?);

    let mut t = Table::create(
        dir.join("plant_ops.csv"),
        &[
            "facility",
            "period",
            "on",
            "forced_off",
            "product",
            "output_kl",
        ],
    )?;
    for p in &report.plants {
        for k in 0..report.nt {
            let flags = [
                p.facility.clone(),
                (k + 1).to_string(),
                (p.on[k] as u8).to_string(),
                (p.forced_off[k] as u8).to_string(),
            ];
            if p.output.is_empty() {
                let mut row = flags.to_vec();
                row.extend([String::new(), num(0.0)]);
                t.row(row)?;
            }
            for o in &p.output {
                let mut row = flags.to_vec();
                row.extend([o.product.clone(), num(o.kl[k])]);
                t.row(row)?;
            }
        }
    }
    files.push(t.finish()?);

    let mut t = Table::create(
        dir.join("trips.csv"),
        &[
            "vehicle",
            "product",
            "available",
            "hired",
            "total_trips",
            "mean_trips",
            "vehicles_high",
            "trips_high",
            "vehicles_low",
            "trips_low",
        ],
    )?;
    for s in trip_stats(report)? {
        t.row(vec![
            s.vehicle,
            s.product,
            s.available.to_string(),
            s.hired.to_string(),
            s.total_trips.to_string(),
            num(s.mean_trips),
            s.split.high_vehicles.to_string(),
            s.split.high_trips.to_string(),
            s.split.low_vehicles.to_string(),
            s.split.low_trips.to_string(),
        ])?;
    }
    files.push(t.finish()?);

    let mut t = Table::create(dir.join("costs.csv"), &["component", "label", "cost"])?;
    let costs = cost_breakdown(report);
    for (k, &(key, label)) in COST_COMPONENTS.iter().enumerate() {
        t.row(vec![
            key.to_string(),
            label.to_string(),
            num(costs.components[k]),
        ])?;
    }
    t.row(vec![
        "total".into(),
        "Total operating cost".into(),
        num(costs.total()),
    ])?;
    files.push(t.finish()?);

    let mut t = Table::create(
        dir.join("shares.csv"),
        &["day", "product", "source", "kl", "share"],
    )?;
    for s in &report.shares {
        t.row(vec![
            s.day.to_string(),
            s.product.clone(),
            s.source.clone(),
            num(s.kl),
            num(s.share),
        ])?;
    }
    files.push(t.finish()?);

    let path = dir.join("gantt.txt");
    fs::write(&path, render_gantt(report)).map_err(io_err(&path))?;
    files.push(path);
    Ok(files)
}

/// Glyph for hour `k` (0-based) of a trip.
fn leg_glyph(d: &Dispatch, k: usize) -> char {
    let mid = k as f64 + 0.5;
    let l = &d.legs;
    if mid < l.filling {
        'F'
    } else if mid < l.filling + l.outbound {
        '>'
    } else if mid < l.filling + l.outbound + l.service {
        'D'
    } else {
        '<'
    }
}

fn glyph_rank(c: char) -> u8 {
    match c {
        'D' => 4,
        'F' => 3,
        '>' => 2,
        '<' => 1,
        _ => 0,
    }
}

/// Per-day text chart of tanker movements: one line per (vehicle class,
/// region) with one column per hour. `F` filling, `>` outbound, `D`
/// distributing, `<` returning, `.` idle; where trips overlap the busiest
/// leg is shown. Empty when nothing is dispatched.
pub fn render_gantt(report: &PlanReport) -> String {
    if report.dispatches.is_empty() {
        return String::new();
    }
    let nt = report.nt;
    let mut lanes: BTreeMap<(&str, &str), Vec<char>> = BTreeMap::new();
    for d in &report.dispatches {
        let lane = lanes
            .entry((d.vehicle.as_str(), d.region.as_str()))
            .or_insert_with(|| vec!['.'; nt]);
        for k in 0..d.rtt_periods {
            let t = d.period + k;
            if t > nt {
                break;
            }
            let g = leg_glyph(d, k);
            if glyph_rank(g) > glyph_rank(lane[t - 1]) {
                lane[t - 1] = g;
            }
        }
    }
    let labels: Vec<String> = lanes.keys().map(|(v, r)| format!("{v}@{r}")).collect();
    let width = labels.iter().map(|l| l.len()).max().unwrap_or(0);
    let mut out = String::new();
    let days = nt.div_ceil(24);
    for day in 1..=days {
        let from = (day - 1) * 24;
        let to = (day * 24).min(nt);
        let _ = writeln!(out, "day {day} (hours {}-{})", from + 1, to);
        for (label, lane) in labels.iter().zip(lanes.values()) {
            let cells: String = lane[from..to].iter().collect();
            let _ = writeln!(out, "{label:<width$} |{cells}|");
        }
    }
    out
}

/// Writes one `name value` line per column.
pub fn write_solution(path: &Path, model: &MilpModel, x: &[f64]) -> Result<(), ReportError> {
    let mut s = String::with_capacity(model.num_cols() * 24);
    for (name, &v) in model.col_names.iter().zip(x) {
        let v = if v == 0.0 { 0.0 } else { v };
        let _ = writeln!(s, "{name} {v}");
    }
    fs::write(path, s).map_err(io_err(path))
}

/// Reads a `name value` file against `model`'s column names. Columns not
/// listed are zero; blank lines and `#` comments are skipped.
pub fn read_solution(path: &Path, model: &MilpModel) -> Result<Vec<f64>, ReportError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let index = model.name_index();
    let mut x = vec![0.0; model.num_cols()];
    let mut seen = HashSet::new();
    let bad = |line: usize, message: String| ReportError::Parse {
        path: path.display().to_string(),
        message: format!("line {line}: {message}"),
    };
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(bad(k + 1, "expected 'name value'".into()));
        };
        let &j = index
            .get(name)
            .ok_or_else(|| bad(k + 1, format!("unknown variable {name}")))?;
        if !seen.insert(j) {
            return Err(bad(k + 1, format!("{name} listed twice")));
        }
        x[j] = value
            .parse()
            .map_err(|_| bad(k + 1, format!("bad value '{value}'")))?;
    }
    Ok(x)
}

/// Writes `base/` and `override/` plan directories plus `deltas.csv`,
/// `timeline_diff.csv` and `share_deltas.csv`.
pub fn write_comparison(cmp: &ScenarioComparison, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let mut files = write_outputs(&cmp.base, &dir.join("base"))?;
    files.extend(write_outputs(&cmp.variant, &dir.join("override"))?);

    let mut t = Table::create(
        dir.join("deltas.csv"),
        &["component", "base", "override", "delta"],
    )?;
    for d in &cmp.costs {
        t.row(vec![
            d.key.to_string(),
            num(d.base),
            num(d.variant),
            num(d.delta),
        ])?;
    }
    files.push(t.finish()?);

    let mut t = Table::create(
        dir.join("timeline_diff.csv"),
        &["facility", "period", "base_on", "override_on", "forced_off"],
    )?;
    for (diff, (b, v)) in cmp
        .timelines
        .iter()
        .zip(cmp.base.plants.iter().zip(&cmp.variant.plants))
    {
        let mut periods: Vec<usize> = diff
            .changed
            .iter()
            .chain(&diff.newly_forced_off)
            .copied()
            .collect();
        periods.sort_unstable();
        periods.dedup();
        for t_ in periods {
            t.row(vec![
                diff.facility.clone(),
                t_.to_string(),
                (b.on[t_ - 1] as u8).to_string(),
                (v.on[t_ - 1] as u8).to_string(),
                (v.forced_off[t_ - 1] as u8).to_string(),
            ])?;
        }
    }
    files.push(t.finish()?);

    let mut t = Table::create(
        dir.join("share_deltas.csv"),
        &["day", "product", "source", "delta"],
    )?;
    for s in &cmp.shares {
        t.row(vec![
            s.day.to_string(),
            s.product.clone(),
            s.source.clone(),
            num(s.delta),
        ])?;
    }
    files.push(t.finish()?);
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_render_without_negative_zero() {
        assert_eq!(num(-0.0), "0.000000");
        assert_eq!(num(-1e-9), "0.000000");
        assert_eq!(num(2.5), "2.500000");
    }

    #[test]
    fn empty_report_has_headers_only_and_an_empty_chart() {
        let r = PlanReport {
            nt: 24,
            objective: 0.0,
            dispatches: Vec::new(),
            inventories: Vec::new(),
            plants: Vec::new(),
            shares: Vec::new(),
            fleets: Vec::new(),
        };
        let dir = tempfile::tempdir().unwrap();
        let files = write_outputs(&r, dir.path()).unwrap();
        assert_eq!(files.len(), 7);
        let d = fs::read_to_string(dir.path().join("dispatches.csv")).unwrap();
        assert_eq!(d.lines().count(), 1);
        assert_eq!(
            fs::read_to_string(dir.path().join("gantt.txt")).unwrap(),
            ""
        );
    }
}
