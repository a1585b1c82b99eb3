mod common;

use common::{exact_options, fixture, spike_toml, transition_toml};
use hydroplan::model::{build, solve, BuildOptions, MilpModel, ModelBuilder, VarId};
use hydroplan::scenario::{parse_scenario, parse_str, InventoryKind, Scenario, SourceType};
use hydroplan_milp::{check_feasibility, solve_lp, LpStatus, MilpStatus};

fn minimal_text() -> String {
    std::fs::read_to_string(fixture("minimal.toml")).unwrap()
}

fn without_demands(text: &str) -> String {
    let cut = text.find("[[demands]]").unwrap();
    text[..cut].to_string()
}

/// Coefficients of row `name` as (column, value) pairs.
fn row(model: &MilpModel, name: &str) -> Vec<(usize, f64)> {
    let i = model
        .row_names
        .iter()
        .position(|n| n == name)
        .unwrap_or_else(|| panic!("no row {name}"));
    let (start, cols, vals) = model.lp().to_row_major();
    (start[i]..start[i + 1])
        .map(|k| (cols[k], vals[k]))
        .collect()
}

fn coef(model: &MilpModel, name: &str, v: &VarId) -> Option<f64> {
    let j = model.col(v)?;
    row(model, name)
        .into_iter()
        .find(|&(c, _)| c == j)
        .map(|(_, a)| a)
}

fn row_rhs(model: &MilpModel, name: &str) -> f64 {
    let i = model.row_names.iter().position(|n| n == name).unwrap();
    model.lp().rhs()[i]
}

#[test]
fn product_selection_has_one_row_per_facility_period() {
    let sc = parse_scenario(&fixture("case_study.toml")).unwrap();
    let model = build(&sc, BuildOptions::default()).unwrap();
    let tfs: Vec<usize> = sc.treatment_facilities().collect();
    assert_eq!(model.rows_in("product_selection"), tfs.len() * 192);
    let mut two_product_tfs = 0;
    for &s in &tfs {
        let finals = sc.sources[s]
            .products
            .iter()
            .filter(|&&p| sc.is_final(p))
            .count();
        if finals == 2 {
            two_product_tfs += 1;
        }
        for t in 1..=192 {
            let name = format!("select_{}_t{t:03}", sc.sources[s].id);
            assert_eq!(row(&model, &name).len(), finals + 1, "{name}");
        }
    }
    assert!(two_product_tfs > 0);
}

fn selection_only(sc: &Scenario) -> MilpModel {
    let mut b = ModelBuilder::new(sc, BuildOptions::default());
    b.add_product_selection();
    b.finish().unwrap()
}

#[test]
fn relaxed_selection_admits_a_split_and_idle_forces_zero() {
    let sc = parse_scenario(&fixture("case_study.toml")).unwrap();
    let model = selection_only(&sc);
    let s = sc.source_index("TF1").unwrap();
    let dpw = sc.product_index("DPW").unwrap();
    let updw = sc.product_index("UPDW").unwrap();
    let t = 10;
    let lp = model.lp();
    let yop = model.col(&VarId::YOp { s, t }).unwrap();
    let a = model.col(&VarId::YPSl { s, p: dpw, t }).unwrap();
    let b = model.col(&VarId::YPSl { s, p: updw, t }).unwrap();

    let mut lower = lp.lower().to_vec();
    let mut upper = lp.upper().to_vec();
    for (j, v) in [(yop, 1.0), (a, 0.5), (b, 0.5)] {
        lower[j] = v;
        upper[j] = v;
    }
    let sol = solve_lp(&lp.with_bounds(lower, upper).unwrap(), None).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);

    let mut lower = lp.lower().to_vec();
    let mut upper = lp.upper().to_vec();
    lower[yop] = 0.0;
    upper[yop] = 0.0;
    let mut cost = vec![0.0; lp.num_cols()];
    cost[a] = -1.0;
    cost[b] = -1.0;
    let p = lp
        .with_bounds(lower, upper)
        .unwrap()
        .with_objective(cost)
        .unwrap();
    let sol = solve_lp(&p, None).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!(sol.x[a].abs() < 1e-12 && sol.x[b].abs() < 1e-12);
}

#[test]
fn no_demand_means_no_cost_and_idle_plants() {
    let sc = parse_str(&without_demands(&minimal_text())).unwrap();
    let model = build(&sc, BuildOptions::default()).unwrap();
    let res = solve(&sc, &model, &exact_options(), &mut |_| {});
    assert_eq!(res.status, MilpStatus::OptimalWithinGap);
    assert!(res.objective.unwrap().abs() < 1e-9);
    let x = res.x.unwrap();
    let s = sc.source_index("TF1").unwrap();
    for t in 1..=sc.nt() {
        assert_eq!(model.value(&x, &VarId::YOp { s, t }), 0.0);
    }
    for (i, inv) in sc.inventories.iter().enumerate() {
        for t in 1..=sc.nt() {
            let q = model.value(&x, &VarId::XQ { i, t });
            assert!(
                (q - inv.initial_qty).abs() < 1e-9,
                "{} at {t}: {q}",
                inv.kind
            );
        }
    }
}

#[test]
fn raw_draw_is_output_over_recovery() {
    let text = minimal_text().replace("throughput = 15.0", "throughput = 10.0");
    let sc = parse_str(&text).unwrap();
    let model = build(&sc, BuildOptions::default()).unwrap();
    let s = sc.source_index("TF1").unwrap();
    let p = sc.product_index("DPW").unwrap();
    let y = VarId::YPSl { s, p, t: 5 };
    // Rows read q_t - q_{t-1} + draw - inflow = 0 and q_t - q_{t-1} - output + shipped = 0.
    assert_eq!(coef(&model, "bal_TF1_RWI_RW_t005", &y), Some(12.5));
    assert_eq!(coef(&model, "bal_TF1_TWI_DPW_t005", &y), Some(-10.0));
}

#[test]
fn raw_dispatch_arrives_after_transit() {
    let sc = parse_str(&transition_toml(1, 1, 3, false)).unwrap();
    let gw = sc.source_index("GW1").unwrap();
    let tf = sc.source_index("TF1").unwrap();
    let rw = sc.product_index("RW").unwrap();
    assert_eq!(sc.raw_transit(gw, tf, rw), Some(1));
    let model = build(&sc, BuildOptions::default()).unwrap();
    let sent = |t| VarId::XSSupl {
        s: gw,
        s2: tf,
        p: rw,
        t,
    };
    assert_eq!(row(&model, "bal_TF1_RWI_RW_t001").len(), 1);
    assert_eq!(row_rhs(&model, "bal_TF1_RWI_RW_t001"), 50.0);
    assert_eq!(coef(&model, "bal_TF1_RWI_RW_t002", &sent(1)), Some(-1.0));
    assert_eq!(coef(&model, "bal_TF1_RWI_RW_t003", &sent(2)), Some(-1.0));
    assert_eq!(coef(&model, "bal_TF1_RWI_RW_t003", &sent(1)), None);
}

#[test]
fn target_rows_exist_only_where_a_target_is_set() {
    let sc = parse_str(&transition_toml(1, 1, 6, false)).unwrap();
    let model = build(&sc, BuildOptions::default()).unwrap();
    assert_eq!(
        model
            .row_names
            .iter()
            .filter(|n| n.starts_with("target_"))
            .count(),
        0
    );

    let sc = parse_str(&minimal_text()).unwrap();
    let model = build(&sc, BuildOptions::default()).unwrap();
    let targets: Vec<&String> = model
        .row_names
        .iter()
        .filter(|n| n.starts_with("target_"))
        .collect();
    assert_eq!(targets.len(), 13);
    assert_eq!(targets[0], "target_TF1_TWI_DPW_t012");
    assert_eq!(row_rhs(&model, "target_TF1_TWI_DPW_t012"), 30.0);
}

#[test]
fn target_shortfall_is_the_gap_to_the_target() {
    // A lone plant that cannot produce keeps its initial stock of 25 kL
    // against a target of 30 kL.
    let text = minimal_text()
        .replace("initial_qty = 40.0", "initial_qty = 25.0")
        .replace(
            "consumers = [\"C1\", \"C2\"]\n\n[[sources]]\nid = \"FW1\"",
            "\n[[sources]]\nid = \"FW1\"",
        );
    let sc = parse_str(&text).unwrap();
    let s = sc.source_index("TF1").unwrap();
    let sc = sc
        .apply_override(hydroplan::scenario::MaintenanceOverride {
            source: s,
            from: 1,
            to: 24,
        })
        .unwrap();
    let model = build(&sc, BuildOptions::default()).unwrap();
    let res = solve(&sc, &model, &exact_options(), &mut |_| {});
    let x = res.x.expect("plan");
    let i = sc
        .inventory(s, InventoryKind::TWI, sc.product_index("DPW").unwrap())
        .unwrap();
    for t in 12..=24 {
        assert!((model.value(&x, &VarId::XTVMinus { i, t }) - 5.0).abs() < 1e-9);
        assert!(model.value(&x, &VarId::XTVPlus { i, t }).abs() < 1e-9);
    }
}

#[test]
fn extraction_rows_follow_the_limit() {
    let sc = parse_scenario(&fixture("case_study.toml")).unwrap();
    let model = build(&sc, BuildOptions::default()).unwrap();
    let rw = sc.product_index("RW").unwrap();
    let mut limited = 0;
    for (s, src) in sc.sources.iter().enumerate() {
        if src.source_type != SourceType::GW {
            continue;
        }
        let fed = sc
            .treatment_facilities()
            .filter(|&tf| sc.ssp(s, tf, rw))
            .count();
        let rows = model
            .row_names
            .iter()
            .filter(|n| n.starts_with(&format!("extract_{}_", src.id)))
            .count();
        if src.extraction_limit > 0.0 {
            limited += 1;
            assert_eq!(rows, fed * 192, "{}", src.id);
        } else {
            assert_eq!(rows, 0, "{}", src.id);
        }
    }
    assert!(limited > 0);

    let sc = parse_str(&transition_toml(1, 1, 6, false)).unwrap();
    let model = build(&sc, BuildOptions::default()).unwrap();
    assert_eq!(model.rows_in("extraction_limit"), 0);
}

const DEMAND_SHIFT: &str = r#"
[horizon]
nt = 8

[products]
final = ["DPW"]

[regions]
ids = ["R1"]

[[sources]]
id = "FW1"
source_type = "FW"
region = "R1"
products = ["DPW"]
consumers = ["C1"]

[[consumers]]
id = "C1"
region = "R1"
vehicles = ["10T"]

[[vehicles]]
id = "10T"
capacity = 10.0
availability = [{ region = "R1", product = "DPW", count = 3 }]

[times]
travel = [{ from = "FW1", to = "C1", hours = 1.5 }]
prep = [{ source = "FW1", hours = 0.5 }]

[[demands]]
consumer = "C1"
product = "DPW"
period = 5
min = 30.0
max = 30.0

[[demands]]
consumer = "C1"
product = "DPW"
period = 1
min = 5.0
max = 5.0
"#;

#[test]
fn demand_is_met_by_dispatches_one_transit_earlier() {
    let sc = parse_str(DEMAND_SHIFT).unwrap();
    let s = sc.source_index("FW1").unwrap();
    let c = sc.consumer_index("C1").unwrap();
    let p = sc.product_index("DPW").unwrap();
    assert_eq!(sc.transit(s, c, p), Some(2));
    let model = build(&sc, BuildOptions::default()).unwrap();
    let r = row(&model, "demmin_C1_DPW_t005");
    assert_eq!(
        r,
        vec![(model.col(&VarId::XDeCon { s, c, p, t: 3 }).unwrap(), 1.0)]
    );
    assert_eq!(row_rhs(&model, "demmin_C1_DPW_t005"), 30.0);
    assert_eq!(model.unservable.len(), 1);
    assert_eq!(model.unservable[0].t, 1);
}

#[test]
fn two_sources_share_one_demand_row() {
    let text = DEMAND_SHIFT
        .replace(
            "[[consumers]]",
            "[[sources]]\nid = \"FW2\"\nsource_type = \"FW\"\nregion = \"R1\"\nproducts = [\"DPW\"]\nconsumers = [\"C1\"]\n\n[[consumers]]",
        )
        .replace(
            "travel = [",
            "travel = [{ from = \"FW2\", to = \"C1\", hours = 1.5 }, ",
        )
        .replace("prep = [", "prep = [{ source = \"FW2\", hours = 0.5 }, ");
    let sc = parse_str(&text).unwrap();
    let model = build(&sc, BuildOptions::default()).unwrap();
    assert_eq!(row(&model, "demmin_C1_DPW_t005").len(), 2);
}

#[test]
fn fleet_starts_full_and_trips_return_after_the_round_trip() {
    let sc = parse_str(&spike_toml().replace("count = 1", "count = 2")).unwrap();
    let s = sc.source_index("FW1").unwrap();
    let c = sc.consumer_index("C1").unwrap();
    let p = sc.product_index("DPW").unwrap();
    let v = sc.vehicle_index("10T").unwrap();
    assert_eq!(sc.round_trip(s, c, p, v), Some(3));
    let model = build(&sc, BuildOptions::default()).unwrap();
    assert_eq!(row_rhs(&model, "fleet0_R1_10T_DPW"), 20.0);
    let out = VarId::XPDl { s, c, p, v, t: 9 };
    assert_eq!(coef(&model, "fleet_R1_10T_DPW_t009", &out), Some(1.0));
    assert_eq!(coef(&model, "fleet_R1_10T_DPW_t012", &out), Some(-1.0));
    assert_eq!(coef(&model, "fleet_R1_10T_DPW_t011", &out), None);
}

#[test]
fn two_hired_tankers_cost_their_hire_price() {
    let text = spike_toml().replace(
        "count = 1 }]",
        "count = 1 }]\nhire_cost = { DPW = 50000.0 }",
    );
    let sc = parse_str(&text).unwrap();
    let model = build(&sc, BuildOptions::default()).unwrap();
    let r = sc.region_index("R1").unwrap();
    let v = sc.vehicle_index("10T").unwrap();
    let p = sc.product_index("DPW").unwrap();
    let mut x = vec![0.0; model.num_cols()];
    assert_eq!(model.lp().objective_value(&x), 0.0);
    x[model.col(&VarId::XVExQ { r, v, p }).unwrap()] = 20.0;
    assert_eq!(model.lp().objective_value(&x), 100000.0);
}

#[test]
fn spike_needs_the_hourly_recurrence_to_show_up() {
    let sc = parse_str(&spike_toml()).unwrap();
    let aggregate = BuildOptions {
        hourly_fleet_balance: false,
        ..BuildOptions::default()
    };
    let m = build(&sc, aggregate).unwrap();
    let res = solve(&sc, &m, &exact_options(), &mut |_| {});
    assert_eq!(res.status, MilpStatus::OptimalWithinGap);
    let m = build(&sc, BuildOptions::default()).unwrap();
    let res = solve(&sc, &m, &exact_options(), &mut |_| {});
    assert_eq!(res.status, MilpStatus::Infeasible);
}

#[test]
fn fully_forced_off_plant_needs_no_branching() {
    let sc = parse_str(&minimal_text()).unwrap();
    let s = sc.source_index("TF1").unwrap();
    let sc = sc
        .apply_override(sc.parse_override("TF1:1-24").unwrap())
        .unwrap();
    let model = build(&sc, BuildOptions::default()).unwrap();
    for t in 1..=24 {
        let j = model.col(&VarId::YOp { s, t }).unwrap();
        assert_eq!(model.lp().upper()[j], 0.0);
    }
    let res = solve(&sc, &model, &exact_options(), &mut |_| {});
    assert_eq!(res.status, MilpStatus::OptimalWithinGap);
    assert_eq!(res.nodes, 0);
}

#[test]
fn case_study_model_has_the_published_size() {
    let sc = parse_scenario(&fixture("case_study.toml")).unwrap();
    let model = build(&sc, BuildOptions::default()).unwrap();
    assert_eq!(model.num_binaries(), 384);
    let rows = model.num_rows() as f64;
    let cont = model.num_continuous() as f64;
    assert!((rows / 22493.0 - 1.0).abs() <= 0.15, "{rows} rows");
    assert!((cont / 42771.0 - 1.0).abs() <= 0.15, "{cont} continuous");
    let recorded: usize = model.row_families.iter().map(|f| f.rows).sum();
    assert_eq!(recorded, model.num_rows());

    let integral = BuildOptions {
        relax_psl: false,
        ..BuildOptions::default()
    };
    let model = build(&sc, integral).unwrap();
    assert!(model.num_binaries() > 384);
}

/// Checks the suitability predicates behind every column and that each
/// column appears in at least one row.
fn assert_guarded(sc: &Scenario, model: &MilpModel) {
    let nt = sc.nt();
    let region = |s: usize| sc.sources[s].region;
    let demanded = |c: usize, p: usize| (1..=nt).any(|t| sc.demand(c, p, t).max > 0.0);
    let tf = |s: usize| sc.sources[s].source_type == SourceType::TF;
    for (j, v) in model.vars.iter().enumerate() {
        if let Some(t) = v.period() {
            let lo = if matches!(v, VarId::XVQ { .. }) { 0 } else { 1 };
            assert!(t >= lo && t <= nt, "{v:?}");
        }
        let ok = match *v {
            VarId::YOp { s, .. } | VarId::XSUp { s, .. } | VarId::XSDn { s, .. } => tf(s),
            VarId::YPSl { s, p, .. } => tf(s) && sc.sp(s, p) && sc.is_final(p),
            VarId::XQ { i, .. } => tf(sc.inventories[i].owner),
            VarId::XBCV { i, .. } => {
                let inv = &sc.inventories[i];
                inv.kind == InventoryKind::RWI && inv.cap_buffer.is_some()
            }
            VarId::XTVPlus { i, t } | VarId::XTVMinus { i, t } => {
                let inv = &sc.inventories[i];
                inv.kind == InventoryKind::TWI && inv.target_at(t) > 0.0
            }
            VarId::XSSupl { s, s2, p, .. } => sc.ssp(s, s2, p),
            VarId::XDeCon { s, c, p, .. } => {
                sc.sc(s, c) && sc.sp(s, p) && sc.is_final(p) && demanded(c, p)
            }
            VarId::XCDistb { s, c, p, v } | VarId::XPDl { s, c, p, v, .. } => {
                sc.sc(s, c) && sc.sp(s, p) && sc.cpv(c, p, v) && sc.rvp(region(s), v, p)
            }
            VarId::XVSSupl { s, s2, p, v } | VarId::XRw { s, s2, p, v, .. } => {
                sc.sspv(s, s2, p, v) && sc.rvp(region(s), v, p)
            }
            VarId::XVQ { r, v, p, .. } | VarId::XVExQ { r, v, p } => sc.rvp(r, v, p),
        };
        assert!(ok, "unguarded column {}", model.col_names[j]);
        assert!(
            !model.lp().column(j).0.is_empty(),
            "orphan column {}",
            model.col_names[j]
        );
        assert_eq!(model.col(v), Some(j));
    }
}

#[test]
fn every_column_passes_its_suitability_guard() {
    for name in ["minimal.toml", "case_study.toml"] {
        let sc = parse_scenario(&fixture(name)).unwrap();
        assert_guarded(&sc, &build(&sc, BuildOptions::default()).unwrap());
    }
    let sc = parse_str(&spike_toml()).unwrap();
    assert_guarded(&sc, &build(&sc, BuildOptions::default()).unwrap());
}

/// The do-nothing plan: plants off, stock held at its initial level, the
/// whole fleet idle and soft-limit slacks covering any gap.
fn idle_point(sc: &Scenario, model: &MilpModel) -> Vec<f64> {
    model
        .vars
        .iter()
        .map(|v| match *v {
            VarId::XSDn { s, t: 1 } => sc.sources[s].initial_on as u8 as f64,
            VarId::XQ { i, .. } => sc.inventories[i].initial_qty,
            VarId::XBCV { i, .. } => {
                let inv = &sc.inventories[i];
                (inv.cap_buffer.unwrap_or(0.0) - inv.initial_qty).max(0.0)
            }
            VarId::XTVMinus { i, t } => {
                let inv = &sc.inventories[i];
                (inv.target_at(t) - inv.initial_qty).max(0.0)
            }
            VarId::XTVPlus { i, t } => {
                let inv = &sc.inventories[i];
                (inv.initial_qty - inv.target_at(t)).max(0.0)
            }
            VarId::XVQ { r, v, p, .. } => sc.vehicles[v].capacity * sc.va(r, v, p) as f64,
            _ => 0.0,
        })
        .collect()
}

#[test]
fn idle_plan_is_feasible_exactly_when_initial_stock_is_in_range() {
    let text = std::fs::read_to_string(fixture("case_study.toml")).unwrap();
    let sc = parse_str(&without_demands(&text)).unwrap();
    let model = build(&sc, BuildOptions::default()).unwrap();
    let rep = check_feasibility(model.lp(), &idle_point(&sc, &model), 1e-7).unwrap();
    assert!(rep.is_feasible(), "{rep:?}");

    let mut bad = sc.clone();
    let i = 0;
    bad.inventories[i].initial_qty = bad.inventories[i].cap_max + 10.0;
    let model = build(&bad, BuildOptions::default()).unwrap();
    let rep = check_feasibility(model.lp(), &idle_point(&bad, &model), 1e-7).unwrap();
    assert!(!rep.is_feasible());
    let names: Vec<&str> = rep
        .violated_rows
        .iter()
        .map(|&r| model.row_names[r].as_str())
        .collect();
    assert!(names.iter().all(|n| n.starts_with("max_")), "{names:?}");
}
