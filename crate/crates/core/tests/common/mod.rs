//! Shared builders and independent checkers for the integration tests.

#![allow(dead_code)]

use hydroplan::model::{build, solve, BuildOptions, MilpModel, ModelBuilder, VarId};
use hydroplan::report;
use hydroplan::scenario::{parse_str, InventoryKind, Scenario, SourceType};
use hydroplan_milp::{solve_lp, LpStatus, MilpOptions, Sense};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::PathBuf;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn exact_options() -> MilpOptions {
    MilpOptions {
        gap_target: 0.0,
        ..MilpOptions::default()
    }
}

/// One treatment facility with the given run-length limits, fed by a well
/// and serving one consumer. Only the transition rows matter to the
/// callers, so the network is the smallest one that validates.
pub fn transition_toml(min_up: usize, min_down: usize, nt: usize, initial_on: bool) -> String {
    format!(
        r#"
[horizon]
nt = {nt}

[products]
raw = ["RW"]
final = ["DPW"]

[regions]
ids = ["R1"]

[[sources]]
id = "GW1"
source_type = "GW"
region = "R1"
products = ["RW"]
supplies = [{{ to = "TF1", vehicles = ["5T"] }}]

[[sources]]
id = "TF1"
source_type = "TF"
region = "R1"
throughput = 5.0
min_uptime = {min_up}
min_downtime = {min_down}
initial_op_state = {init}
products = ["DPW"]
consumers = ["C1"]

[[inventories]]
owner = "TF1"
kind = "RWI"
product = "RW"
cap_max = 100.0
initial_qty = 50.0

[[inventories]]
owner = "TF1"
kind = "TWI"
product = "DPW"
cap_max = 100.0
initial_qty = 50.0

[[consumers]]
id = "C1"
region = "R1"
vehicles = ["5T"]

[[vehicles]]
id = "5T"
capacity = 5.0
availability = [{{ region = "R1", product = "DPW", count = 1 }}, {{ region = "R1", product = "RW", count = 1 }}]

[times]
travel = [{{ from = "GW1", to = "TF1", hours = 1.0 }}, {{ from = "TF1", to = "C1", hours = 1.0 }}]

[[demands]]
consumer = "C1"
product = "DPW"
period = {nt}
min = 1.0
max = 1.0
"#,
        init = initial_on as u8
    )
}

/// A random instance with one treatment facility, one other source (a
/// feeding well or a freshwater source), one or two consumers and one or
/// two final products. The number of integer columns with integral product
/// selection stays at or below 16.
pub fn random_tiny_toml<R: Rng>(rng: &mut R) -> String {
    let two_products = rng.gen_bool(0.4);
    let nt = if two_products {
        rng.gen_range(4..=5)
    } else {
        rng.gen_range(4..=8)
    };
    let finals: Vec<&str> = if two_products {
        vec!["DPW", "UPDW"]
    } else {
        vec!["DPW"]
    };
    let well = rng.gen_bool(0.5);
    let consumers: Vec<&str> = if rng.gen_bool(0.5) {
        vec!["C1", "C2"]
    } else {
        vec!["C1"]
    };
    let quoted = |v: &[&str]| {
        v.iter()
            .map(|s| format!("\"{s}\""))
            .collect::<Vec<_>>()
            .join(", ")
    };

    let mut t = String::new();
    writeln!(t, "[horizon]\nnt = {nt}\n").unwrap();
    writeln!(
        t,
        "[products]\nraw = [\"RW\"]\nfinal = [{}]\n",
        quoted(&finals)
    )
    .unwrap();
    writeln!(t, "[regions]\nids = [\"R1\"]\n").unwrap();

    let recovery: Vec<String> = finals
        .iter()
        .map(|p| format!("{p} = {:.2}", rng.gen_range(0.7..=1.0)))
        .collect();
    writeln!(
        t,
        "[[sources]]\nid = \"TF1\"\nsource_type = \"TF\"\nregion = \"R1\"\nthroughput = {:.1}\n\
         min_uptime = {}\nmin_downtime = {}\ninitial_op_state = {}\n\
         recovery_fraction = {{ {} }}\nproducts = [{}]\nconsumers = [{}]\n",
        rng.gen_range(4.0..12.0),
        rng.gen_range(1..=3),
        rng.gen_range(1..=3),
        rng.gen_range(0..=1),
        recovery.join(", "),
        quoted(&finals),
        quoted(&consumers)
    )
    .unwrap();
    if well {
        writeln!(
            t,
            "[[sources]]\nid = \"GW1\"\nsource_type = \"GW\"\nregion = \"R1\"\n\
             extraction_limit = {:.1}\nproducts = [\"RW\"]\n\
             supplies = [{{ to = \"TF1\", vehicles = [\"5T\"] }}]\n",
            rng.gen_range(5.0..20.0)
        )
        .unwrap();
    } else {
        writeln!(
            t,
            "[[sources]]\nid = \"FW1\"\nsource_type = \"FW\"\nregion = \"R1\"\n\
             products = [\"DPW\"]\nconsumers = [{}]\n",
            quoted(&consumers)
        )
        .unwrap();
    }

    let buffer = if well && rng.gen_bool(0.5) {
        format!(
            "cap_buffer = 40.0\nbuffer_penalty = {:.1}\n",
            rng.gen_range(0.5..3.0)
        )
    } else {
        String::new()
    };
    writeln!(
        t,
        "[[inventories]]\nowner = \"TF1\"\nkind = \"RWI\"\nproduct = \"RW\"\ncap_max = 300.0\n\
         initial_qty = {:.1}\n{buffer}",
        if well {
            rng.gen_range(20.0..80.0)
        } else {
            rng.gen_range(40.0..150.0)
        }
    )
    .unwrap();
    for p in &finals {
        let target = if rng.gen_bool(0.5) {
            format!(
                "target = [{{ from = {}, to = {nt}, kl = {:.1} }}]\ntarget_penalty = {:.1}\n",
                nt / 2,
                rng.gen_range(5.0..20.0),
                rng.gen_range(0.5..3.0)
            )
        } else {
            String::new()
        };
        writeln!(
            t,
            "[[inventories]]\nowner = \"TF1\"\nkind = \"TWI\"\nproduct = \"{p}\"\n\
             cap_min = {:.1}\ncap_max = 150.0\ninitial_qty = {:.1}\n{target}",
            rng.gen_range(0.0..3.0),
            rng.gen_range(3.0..20.0)
        )
        .unwrap();
    }

    for c in &consumers {
        writeln!(
            t,
            "[[consumers]]\nid = \"{c}\"\nregion = \"R1\"\ndistribution_time = {:.1}\nvehicles = [\"5T\"]\n",
            rng.gen_range(0..=2) as f64 * 0.5
        )
        .unwrap();
    }

    let mut avail = vec!["{ region = \"R1\", product = \"RW\", count = 1 }".to_string()];
    let mut hire = vec![format!("RW = {:.0}", rng.gen_range(100.0..400.0))];
    for p in &finals {
        avail.push(format!(
            "{{ region = \"R1\", product = \"{p}\", count = {} }}",
            rng.gen_range(1..=3)
        ));
        hire.push(format!("{p} = {:.0}", rng.gen_range(100.0..400.0)));
    }
    writeln!(
        t,
        "[[vehicles]]\nid = \"5T\"\ncapacity = 5.0\navailability = [{}]\nhire_cost = {{ {} }}\n",
        avail.join(", "),
        hire.join(", ")
    )
    .unwrap();

    let other = if well { "GW1" } else { "FW1" };
    let mut travel = Vec::new();
    let mut dist = Vec::new();
    for c in &consumers {
        travel.push(format!(
            "{{ from = \"TF1\", to = \"{c}\", hours = {:.1} }}",
            rng.gen_range(1..=3) as f64 * 0.5
        ));
        dist.push(format!(
            "{{ from = \"TF1\", to = \"{c}\", per_kl = {:.1} }}",
            rng.gen_range(5.0..20.0)
        ));
        if !well {
            travel.push(format!(
                "{{ from = \"FW1\", to = \"{c}\", hours = {:.1} }}",
                rng.gen_range(1..=3) as f64 * 0.5
            ));
            dist.push(format!(
                "{{ from = \"FW1\", to = \"{c}\", per_kl = {:.1} }}",
                rng.gen_range(10.0..40.0)
            ));
        }
    }
    if well {
        travel.push("{ from = \"GW1\", to = \"TF1\", hours = 0.5 }".to_string());
    }
    writeln!(
        t,
        "[times]\ntravel = [{}]\nprep = [{{ source = \"TF1\", hours = 0.5 }}, {{ source = \"{other}\", hours = 0.5 }}]\n",
        travel.join(", ")
    )
    .unwrap();
    writeln!(t, "[costs]\ndistribution = [{}]", dist.join(", ")).unwrap();
    if well {
        writeln!(
            t,
            "raw_supply = [{{ from = \"GW1\", to = \"TF1\", per_kl = {:.1} }}]",
            rng.gen_range(1.0..6.0)
        )
        .unwrap();
    }
    writeln!(t).unwrap();

    for c in &consumers {
        for p in &finals {
            for _ in 0..rng.gen_range(1..=2) {
                let period = rng.gen_range(3..=nt);
                let min = rng.gen_range(2.0..12.0);
                let max = min + rng.gen_range(0.0..5.0);
                writeln!(
                    t,
                    "[[demands]]\nconsumer = \"{c}\"\nproduct = \"{p}\"\nperiod = {period}\n\
                     min = {min:.1}\nmax = {max:.1}\n"
                )
                .unwrap();
            }
        }
    }
    t
}

/// Minimum objective over every assignment of the integer columns, each
/// solved as an LP with those columns fixed. Assignments that violate a row
/// made only of integer columns are skipped before any LP is solved.
pub fn enumerate_integer_patterns(model: &MilpModel) -> Option<f64> {
    let lp = model.lp();
    let ints: Vec<usize> = (0..lp.num_cols())
        .filter(|&j| model.mip.integer[j])
        .collect();
    assert!(
        ints.len() <= 20,
        "{} integer columns is too many to enumerate",
        ints.len()
    );
    let is_int: Vec<bool> = model.mip.integer.clone();
    let (start, cols, vals) = lp.to_row_major();
    let int_rows: Vec<usize> = (0..lp.num_rows())
        .filter(|&i| cols[start[i]..start[i + 1]].iter().all(|&j| is_int[j]))
        .collect();

    let mut best: Option<f64> = None;
    let mut x = vec![0.0; lp.num_cols()];
    'patterns: for mask in 0u64..(1u64 << ints.len()) {
        for (k, &j) in ints.iter().enumerate() {
            let v = ((mask >> k) & 1) as f64;
            if v < lp.lower()[j] || v > lp.upper()[j] {
                continue 'patterns;
            }
            x[j] = v;
        }
        for &i in &int_rows {
            let act: f64 = (start[i]..start[i + 1]).map(|k| vals[k] * x[cols[k]]).sum();
            let rhs = lp.rhs()[i];
            let ok = match lp.senses()[i] {
                Sense::Le => act <= rhs + 1e-9,
                Sense::Ge => act >= rhs - 1e-9,
                Sense::Eq => (act - rhs).abs() <= 1e-9,
            };
            if !ok {
                continue 'patterns;
            }
        }
        let mut lower = lp.lower().to_vec();
        let mut upper = lp.upper().to_vec();
        for &j in &ints {
            lower[j] = x[j];
            upper[j] = x[j];
        }
        let fixed = lp.with_bounds(lower, upper).expect("bounds");
        let sol = solve_lp(&fixed, None).expect("lp");
        if sol.status == LpStatus::Optimal && best.is_none_or(|b| sol.objective < b) {
            best = Some(sol.objective);
        }
    }
    best
}

/// Largest absolute error of the telescoped treated- and raw-water
/// balances, computed straight from the solution vector. Production and
/// flows are counted from period 2, since period 1 holds the initial level.
pub fn conservation_error(sc: &Scenario, model: &MilpModel, x: &[f64]) -> f64 {
    let nt = sc.nt();
    let mut worst: f64 = 0.0;
    for (i, inv) in sc.inventories.iter().enumerate() {
        let s = inv.owner;
        let src = &sc.sources[s];
        if src.source_type != SourceType::TF {
            continue;
        }
        let end = model.value(x, &VarId::XQ { i, t: nt });
        let change = end - inv.initial_qty;
        let err = match inv.kind {
            InventoryKind::TWI => {
                let p = inv.product;
                let produced: f64 = (2..=nt)
                    .map(|t| model.value(x, &VarId::YPSl { s, p, t }) * src.throughput)
                    .sum();
                let mut shipped = 0.0;
                for c in 0..sc.consumers.len() {
                    for t in 2..=nt {
                        shipped += model.value(x, &VarId::XDeCon { s, c, p, t });
                    }
                }
                produced - shipped - change
            }
            InventoryKind::RWI => {
                let mut inflow = 0.0;
                for s0 in 0..sc.sources.len() {
                    let Some(transit) = sc.raw_transit(s0, s, inv.product) else {
                        continue;
                    };
                    for t in 2..=nt {
                        if t > transit {
                            inflow += model.value(
                                x,
                                &VarId::XSSupl {
                                    s: s0,
                                    s2: s,
                                    p: inv.product,
                                    t: t - transit,
                                },
                            );
                        }
                    }
                }
                let mut drawn = 0.0;
                for p in 0..sc.products.len() {
                    if !sc.is_final(p) {
                        continue;
                    }
                    for t in 2..=nt {
                        drawn += model.value(x, &VarId::YPSl { s, p, t }) * src.throughput
                            / sc.recovery(s, p);
                    }
                }
                inflow - drawn - change
            }
        };
        worst = worst.max(err.abs());
    }
    worst
}

/// Outcome of the per-solution checks shared by the suites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionChecks {
    pub balance_error: f64,
    pub cost_error: f64,
    pub demand_violations: usize,
    pub resimulation_error: f64,
}

impl SolutionChecks {
    pub fn pass(&self) -> bool {
        self.balance_error <= 1e-6
            && self.cost_error <= 1e-6
            && self.demand_violations == 0
            && self.resimulation_error <= 1e-6
    }
}

/// Conservation, cost reconciliation against `objective`, demand windows
/// and inventory re-simulation for one solution.
pub fn check_solution(
    sc: &Scenario,
    model: &MilpModel,
    x: &[f64],
    objective: f64,
) -> SolutionChecks {
    let rep = report::extract_values(sc, model, x).expect("extract");
    let total = report::cost_breakdown(&rep).total();
    let resim = report::resimulate_inventories(&rep);
    let mut resimulation_error: f64 = 0.0;
    for (series, levels) in rep.inventories.iter().zip(&resim) {
        for (a, b) in series.levels.iter().zip(levels) {
            resimulation_error = resimulation_error.max((a - b).abs());
        }
    }
    SolutionChecks {
        balance_error: conservation_error(sc, model, x),
        cost_error: (total - objective).abs() / objective.abs().max(1.0),
        demand_violations: report::demand_violations(sc, &rep, 1e-6).len(),
        resimulation_error,
    }
}

/// Independent run-length rule: after every switch the new state must hold
/// for the minimum up or down time, or until the horizon ends. The state
/// before period 1 carries no history.
pub fn rule_admits(bits: &[bool], min_up: usize, min_down: usize, initial_on: bool) -> bool {
    let mut prev = initial_on;
    for (t, &on) in bits.iter().enumerate() {
        if on != prev {
            let hold = if on { min_up } else { min_down };
            let end = (t + hold).min(bits.len());
            if bits[t..end].iter().any(|&b| b != on) {
                return false;
            }
        }
        prev = on;
    }
    true
}

/// Model containing only the transition rows.
pub fn transition_model(sc: &Scenario) -> MilpModel {
    let mut b = ModelBuilder::new(sc, BuildOptions::default());
    b.add_transition_constraints();
    b.finish().expect("model")
}

/// Whether the operating pattern `bits` of the only facility is feasible
/// for the model's rows.
pub fn model_admits(sc: &Scenario, model: &MilpModel, bits: &[bool]) -> bool {
    let s = sc.source_index("TF1").expect("TF1");
    let lp = model.lp();
    let mut lower = lp.lower().to_vec();
    let mut upper = lp.upper().to_vec();
    for (k, &on) in bits.iter().enumerate() {
        let j = model.col(&VarId::YOp { s, t: k + 1 }).expect("yOp");
        lower[j] = on as u8 as f64;
        upper[j] = on as u8 as f64;
    }
    let fixed = lp.with_bounds(lower, upper).expect("bounds");
    solve_lp(&fixed, None).expect("lp").status == LpStatus::Optimal
}

/// Every operating pattern for every run-length pair in 1..=3, horizon 4
/// and 6, and both initial states. Returns the number of patterns checked
/// and a description of each disagreement with [`rule_admits`].
pub fn transition_oracle() -> (usize, Vec<String>) {
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for min_up in 1..=3 {
        for min_down in 1..=3 {
            for nt in [4, 6] {
                for initial_on in [false, true] {
                    let sc = parse_str(&transition_toml(min_up, min_down, nt, initial_on))
                        .expect("scenario");
                    let model = transition_model(&sc);
                    for mask in 0u32..(1 << nt) {
                        let bits: Vec<bool> = (0..nt).map(|k| (mask >> k) & 1 == 1).collect();
                        let want = rule_admits(&bits, min_up, min_down, initial_on);
                        let got = model_admits(&sc, &model, &bits);
                        checked += 1;
                        if want != got {
                            mismatches.push(format!(
                                "up={min_up} down={min_down} init={} pattern={:?}: rule {want}, model {got}",
                                initial_on as u8,
                                bits.iter().map(|&b| b as u8).collect::<Vec<_>>()
                            ));
                        }
                    }
                }
            }
        }
    }
    (checked, mismatches)
}

/// One random instance solved by branch and bound and by enumeration.
#[derive(Debug, Clone)]
pub struct TinyComparison {
    pub seed: u64,
    pub integers: usize,
    pub milp: Option<f64>,
    pub enumerated: Option<f64>,
    pub checks: Option<SolutionChecks>,
}

impl TinyComparison {
    pub fn agrees(&self) -> bool {
        match (self.milp, self.enumerated) {
            (None, None) => true,
            (Some(a), Some(b)) => (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1.0),
            _ => false,
        }
    }
}

/// Solves `count` random instances with integral product selection at a
/// zero gap and by enumeration. Instances come from consecutive seeds.
pub fn tiny_milp_oracle(first_seed: u64, count: usize) -> Vec<TinyComparison> {
    (first_seed..first_seed + count as u64)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sc = parse_str(&random_tiny_toml(&mut rng)).expect("scenario");
            let opts = BuildOptions {
                relax_psl: false,
                ..BuildOptions::default()
            };
            let model = build(&sc, opts).expect("model");
            let res = solve(&sc, &model, &exact_options(), &mut |_| {});
            let enumerated = enumerate_integer_patterns(&model);
            let checks = match (&res.x, res.objective) {
                (Some(x), Some(obj)) => Some(check_solution(&sc, &model, x, obj)),
                _ => None,
            };
            TinyComparison {
                seed,
                integers: model.num_binaries(),
                milp: res.objective,
                enumerated,
                checks,
            }
        })
        .collect()
}

/// One freshwater source and one tanker of 10 kL with a three-period round
/// trip. Demand is 10 kL in each of periods 12 to 15: over the day the
/// tanker has time for it, but the spike needs three loads on the road at
/// once.
pub fn spike_toml() -> String {
    let mut t = String::from(
        r#"
[horizon]
nt = 24

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
distribution_time = 0.5
vehicles = ["10T"]

[[vehicles]]
id = "10T"
capacity = 10.0
availability = [{ region = "R1", product = "DPW", count = 1 }]

[times]
travel = [{ from = "FW1", to = "C1", hours = 1.0 }]
prep = [{ source = "FW1", hours = 0.5 }]

[costs]
distribution = [{ from = "FW1", to = "C1", per_kl = 20.0 }]
"#,
    );
    for period in 12..=15 {
        writeln!(
            t,
            "\n[[demands]]\nconsumer = \"C1\"\nproduct = \"DPW\"\nperiod = {period}\nmin = 10.0\nmax = 10.0"
        )
        .unwrap();
    }
    t
}
