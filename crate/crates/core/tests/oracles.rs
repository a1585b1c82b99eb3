mod common;

use common::{
    model_admits, rule_admits, tiny_milp_oracle, transition_model, transition_oracle,
    transition_toml,
};
use hydroplan::model::VarId;
use hydroplan::scenario::parse_str;
use hydroplan_milp::{solve_lp, LpStatus};

#[test]
fn four_period_transition_rows_come_in_three_families() {
    let sc = parse_str(&transition_toml(2, 2, 4, false)).unwrap();
    let model = transition_model(&sc);
    let count = |prefix: &str| {
        model
            .row_names
            .iter()
            .filter(|n| n.starts_with(prefix))
            .count()
    };
    assert_eq!(count("trans_"), 4);
    assert_eq!(count("uptime_"), 4);
    assert_eq!(count("downtime_"), 4);
    assert_eq!(model.rows_in("transition"), 12);
}

#[test]
fn short_run_breaks_the_minimum_uptime() {
    let sc = parse_str(&transition_toml(2, 2, 4, false)).unwrap();
    let model = transition_model(&sc);
    let bits = [true, false, true, false];
    assert!(!rule_admits(&bits, 2, 2, false));
    assert!(!model_admits(&sc, &model, &bits));
}

#[test]
fn running_plant_may_stop_after_two_periods() {
    let sc = parse_str(&transition_toml(2, 2, 4, true)).unwrap();
    let model = transition_model(&sc);
    let s = sc.source_index("TF1").unwrap();
    let lp = model.lp();
    let mut lower = lp.lower().to_vec();
    let mut upper = lp.upper().to_vec();
    for (t, on) in [(1, 1.0), (2, 1.0), (3, 0.0), (4, 0.0)] {
        let j = model.col(&VarId::YOp { s, t }).unwrap();
        lower[j] = on;
        upper[j] = on;
    }
    // Minimising start-ups and shut-downs gives their exact values.
    let mut cost = vec![0.0; lp.num_cols()];
    for t in 1..=4 {
        cost[model.col(&VarId::XSUp { s, t }).unwrap()] = 1.0;
        cost[model.col(&VarId::XSDn { s, t }).unwrap()] = 1.0;
    }
    let p = lp
        .with_bounds(lower, upper)
        .unwrap()
        .with_objective(cost)
        .unwrap();
    let sol = solve_lp(&p, None).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    for t in 1..=4 {
        let up = sol.x[model.col(&VarId::XSUp { s, t }).unwrap()];
        let down = sol.x[model.col(&VarId::XSDn { s, t }).unwrap()];
        assert!(up.abs() < 1e-9, "start-up at {t}");
        let want = if t == 3 { 1.0 } else { 0.0 };
        assert!((down - want).abs() < 1e-9, "shut-down at {t}: {down}");
    }
}

#[test]
fn rule_checker_agrees_with_hand_cases() {
    assert!(rule_admits(&[true, true, true, false], 3, 1, false));
    assert!(!rule_admits(&[true, true, false, false], 3, 1, false));
    // A run cut short by the horizon end is allowed.
    assert!(rule_admits(&[false, false, false, true], 3, 1, false));
    // The state carried in from before period 1 has no minimum.
    assert!(rule_admits(&[false, false, false, false], 1, 1, true));
    assert!(!rule_admits(&[false, true, false, false], 1, 3, true));
}

#[test]
fn transition_rows_admit_exactly_the_rule_patterns() {
    let (checked, mismatches) = transition_oracle();
    assert_eq!(checked, 9 * 2 * (16 + 64));
    assert!(mismatches.is_empty(), "{mismatches:#?}");
}

#[test]
fn branch_and_bound_matches_enumeration_on_further_instances() {
    for cmp in tiny_milp_oracle(1000, 8) {
        assert!(cmp.agrees(), "{cmp:?}");
        if let Some(checks) = cmp.checks {
            assert!(checks.pass(), "{cmp:?}");
        }
    }
}
