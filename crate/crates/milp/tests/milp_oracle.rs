#![allow(clippy::needless_range_loop)]

use hydroplan_milp::{
    check_feasibility, solve_lp, solve_milp, solve_milp_with, LpBuilder, LpStatus, MilpOptions,
    MilpStatus, MipProblem, NearestRounding, Sense,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random problem with `k` binaries that switch capacity for `k` continuous
/// flows, plus coverage rows that force some capacity to be switched on.
fn random_mip(rng: &mut ChaCha8Rng, k: usize) -> MipProblem {
    let mut b = LpBuilder::new();
    let ys: Vec<usize> = (0..k)
        .map(|_| b.add_col(rng.gen_range(1.0..10.0), 0.0, 1.0))
        .collect();
    let xs: Vec<usize> = (0..k)
        .map(|_| b.add_col(rng.gen_range(0.1..2.0), 0.0, f64::INFINITY))
        .collect();
    for (&y, &x) in ys.iter().zip(&xs) {
        let cap = rng.gen_range(2.0..8.0);
        b.add_row(&[(x, 1.0), (y, -cap)], Sense::Le, 0.0);
    }
    for _ in 0..rng.gen_range(2..5) {
        let coefs: Vec<(usize, f64)> = xs
            .iter()
            .filter(|_| rng.gen_bool(0.5))
            .map(|&x| (x, 1.0))
            .collect();
        b.add_row(&coefs, Sense::Ge, rng.gen_range(1.0..10.0));
    }
    // Adjacent-pair exclusions make the integer structure non-trivial.
    for w in ys.windows(2) {
        if rng.gen_bool(0.3) {
            b.add_row(&[(w[0], 1.0), (w[1], 1.0)], Sense::Le, 1.0);
        }
    }
    let lp = b.build().unwrap();
    let mut integer = vec![false; lp.num_cols()];
    for &y in &ys {
        integer[y] = true;
    }
    MipProblem::new(lp, integer).unwrap()
}

/// Exhaustive enumeration of binary patterns with one LP per pattern.
fn brute_force(mip: &MipProblem) -> Option<f64> {
    let ints: Vec<usize> = (0..mip.lp.num_cols()).filter(|&j| mip.integer[j]).collect();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << ints.len()) {
        let mut lo = mip.lp.lower().to_vec();
        let mut hi = mip.lp.upper().to_vec();
        for (bit, &j) in ints.iter().enumerate() {
            let v = ((mask >> bit) & 1) as f64;
            lo[j] = v;
            hi[j] = v;
        }
        let fixed = mip.lp.with_bounds(lo, hi).unwrap();
        let sol = solve_lp(&fixed, None).unwrap();
        if sol.status == LpStatus::Optimal {
            best = Some(best.map_or(sol.objective, |b: f64| b.min(sol.objective)));
        }
    }
    best
}

#[test]
fn matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let exact = MilpOptions {
        gap_target: 0.0,
        progress_interval: 1,
        ..MilpOptions::default()
    };
    let mut feasible = 0;
    for case in 0..30 {
        let k = rng.gen_range(4..=12);
        let mip = random_mip(&mut rng, k);
        let oracle = brute_force(&mip);

        let mut bounds = Vec::new();
        let r = solve_milp_with(&mip, &exact, &mut NearestRounding, &mut |p| {
            bounds.push(p.bound)
        });
        match oracle {
            None => assert_eq!(r.status, MilpStatus::Infeasible, "case {case}"),
            Some(opt) => {
                feasible += 1;
                assert_eq!(r.status, MilpStatus::OptimalWithinGap, "case {case}");
                let obj = r.objective.unwrap();
                assert!(
                    (obj - opt).abs() <= 1e-6 * opt.abs().max(1.0),
                    "case {case}: {obj} vs {opt}"
                );
                for w in bounds.windows(2) {
                    assert!(w[1] >= w[0] - 1e-9, "case {case}: bound decreased {w:?}");
                }
                for &b in &bounds {
                    assert!(
                        b <= opt + 1e-6 * opt.abs().max(1.0),
                        "case {case}: bound {b} > {opt}"
                    );
                }
                let x = r.x.as_ref().unwrap();
                assert!(check_feasibility(&mip.lp, x, 1e-6).unwrap().is_feasible());
                for j in 0..x.len() {
                    if mip.integer[j] {
                        assert!((x[j] - x[j].round()).abs() <= 1e-6);
                    }
                }
                let unpruned = solve_milp(
                    &mip,
                    &MilpOptions {
                        prune: false,
                        ..exact.clone()
                    },
                );
                let u = unpruned.objective.unwrap();
                assert!(
                    (u - opt).abs() <= 1e-6 * opt.abs().max(1.0),
                    "case {case}: unpruned {u}"
                );
                assert!(unpruned.nodes >= r.nodes);
            }
        }
    }
    assert!(feasible >= 20, "only {feasible} feasible cases");
}

#[test]
fn fixed_integers_need_no_branching() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mip, x) = loop {
        let mip = random_mip(&mut rng, 6);
        if let Some(x) = solve_milp(&mip, &MilpOptions::default()).x {
            break (mip, x);
        }
    };
    let mut lo = mip.lp.lower().to_vec();
    let mut hi = mip.lp.upper().to_vec();
    for j in 0..mip.lp.num_cols() {
        if mip.integer[j] {
            lo[j] = x[j].round();
            hi[j] = x[j].round();
        }
    }
    let fixed = MipProblem::new(mip.lp.with_bounds(lo, hi).unwrap(), mip.integer.clone()).unwrap();
    let r = solve_milp(&fixed, &MilpOptions::default());
    assert_eq!(r.status, MilpStatus::OptimalWithinGap);
    assert_eq!(r.nodes, 0);
}

#[test]
fn node_limit_reports_gap_not_reached_with_valid_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut seen = false;
    for _ in 0..20 {
        let mip = random_mip(&mut rng, 12);
        let Some(opt) = brute_force(&mip) else {
            continue;
        };
        let r = solve_milp(
            &mip,
            &MilpOptions {
                gap_target: 0.0,
                node_limit: Some(1),
                heuristic_interval: 0,
                ..MilpOptions::default()
            },
        );
        assert!(r.best_bound <= opt + 1e-6 * opt.abs().max(1.0));
        if r.status == MilpStatus::GapNotReached {
            seen = true;
            assert!(r.gap > 0.0);
            if let Some(obj) = r.objective {
                assert!(obj >= opt - 1e-6 * opt.abs().max(1.0));
            }
        }
    }
    assert!(seen, "no instance needed more than one node");
}
