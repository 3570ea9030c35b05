//! Acceptance suite: every release-gating criterion, one test per criterion,
//! each printing a single PASS line with its observed margin. The shared
//! ratio suite (56 seeded instances, n in 4..=10, both generator families)
//! is evaluated once and reused across criteria.

use num_rational::BigRational;
use pathtsp::audit::{Audit, AuditLevel, CheckId, Violation};
use pathtsp::cuts::CutChain;
use pathtsp::dp::{lambda_schedule, Solver};
use pathtsp::lp::DpCall;
use pathtsp::num::Weight;
use pathtsp::oracle::{
    self, brute_force_matching, enumerate_tjoin_cuts, held_karp_path, mirror_dp, permutation_opt,
    TjoinCheck, HELD_KARP_CAP, TJOIN_ENUM_CAP,
};
use pathtsp::parity::{min_cost_perfect_matching, odd_parity_set, ParitySet};
use pathtsp::{christofides_hoogeveen, gen_random, solve_rdp, GenFamily, RdpOptions, TourResult};
use std::sync::OnceLock;
use std::time::Instant;

const EPSILON: f64 = 0.25;
const LAMBDA_1: f64 = 0.6;

struct SuiteEntry {
    n: usize,
    family: GenFamily,
    seed: u64,
    opt: f64,
    rdp: pathtsp::RdpOutcome,
    christofides: TourResult,
}

fn label(e: &SuiteEntry) -> String {
    format!("n={} family={} seed={}", e.n, e.family, e.seed)
}

static SUITE: OnceLock<Vec<SuiteEntry>> = OnceLock::new();

/// 56 fixed instances: n in 4..=10, both families, four seeds each,
/// solved with epsilon = 1/4 (k = 2, lambda_1 = 3/5) under the cheap
/// per-node audit.
fn suite() -> &'static [SuiteEntry] {
    SUITE.get_or_init(|| {
        let mut entries = Vec::new();
        for n in 4..=10 {
            for family in [
                GenFamily::EuclideanUnitSquare,
                GenFamily::RandomMetricClosure,
            ] {
                for seed in [11u64, 22, 33, 44] {
                    let inst = gen_random(n, family, seed).unwrap();
                    let opts = RdpOptions {
                        audit_level: AuditLevel::Invariants,
                        ..RdpOptions::default()
                    };
                    let rdp = solve_rdp(&inst, EPSILON, &opts).unwrap();
                    let christofides = christofides_hoogeveen(&inst).unwrap();
                    let opt = held_karp_path(&inst, HELD_KARP_CAP).unwrap().opt_cost;
                    entries.push(SuiteEntry {
                        n,
                        family,
                        seed,
                        opt,
                        rdp,
                        christofides,
                    });
                }
            }
        }
        entries
    })
}

fn assert_no_violations(violations: &[Violation], check: CheckId, context: &str) {
    let hits: Vec<&Violation> = violations.iter().filter(|v| v.check == check).collect();
    assert!(
        hits.is_empty(),
        "{context}: {check} violated: {}",
        hits[0].detail
    );
}

#[test]
fn criterion_01_rdp_ratio_guarantee() {
    let entries = suite();
    assert!(entries.len() >= 50);
    let mut worst = 0.0f64;
    for e in entries {
        let ratio = e.rdp.tour.cost / e.opt;
        assert!(
            e.rdp.tour.cost <= (1.0 + LAMBDA_1) * e.opt * (1.0 + 1e-6),
            "{}: ratio {ratio} exceeds 1.6",
            label(e)
        );
        assert_eq!(e.rdp.k, 2);
        worst = worst.max(ratio);
    }
    println!(
        "criterion 01 (rdp ratio <= 1.6 on {} instances): PASS (worst {worst:.4})",
        entries.len()
    );
}

#[test]
fn criterion_02_christofides_baseline() {
    let mut worst = 0.0f64;
    for e in suite() {
        let ratio = e.christofides.cost / e.opt;
        assert!(
            e.christofides.cost <= 5.0 / 3.0 * e.opt * (1.0 + 1e-6),
            "{}: baseline ratio {ratio} exceeds 5/3",
            label(e)
        );
        worst = worst.max(ratio);
    }
    println!("criterion 02 (baseline ratio <= 5/3): PASS (worst {worst:.4})");
}

#[test]
fn criterion_03_lambda_schedule_exact() {
    let sched = lambda_schedule::<BigRational>(0.1).unwrap();
    assert_eq!(sched.k(), 4);
    assert_eq!(*sched.big_lambda(), BigRational::from_int(29));
    let lambdas: Vec<BigRational> = (1..=4).map(|l| sched.lambda(l).clone()).collect();
    let expect: Vec<BigRational> = [15, 7, 3, 1]
        .iter()
        .map(|&v| BigRational::ratio(v, 29))
        .collect();
    assert_eq!(lambdas, expect);
    let mixing: Vec<BigRational> = [8, 4, 2, 1]
        .iter()
        .map(|&v| BigRational::ratio(v, 29))
        .collect();
    assert_eq!(sched.mixing_fractions(), mixing);
    println!("criterion 03 (lambda schedule for eps=0.1, exact rationals): PASS");
}

#[test]
fn criterion_04_tree_unit_crossings_every_node() {
    for e in suite() {
        assert_no_violations(&e.rdp.violations, CheckId::TreeUnitCrossing, &label(e));
        assert_no_violations(&e.rdp.violations, CheckId::ChainShape, &label(e));
    }
    println!("criterion 04 (spanning tree with unit crossings at every node): PASS");
}

#[test]
fn criterion_05_path_cost_identity_every_node() {
    for e in suite() {
        assert_no_violations(&e.rdp.violations, CheckId::PathCostIdentity, &label(e));
    }
    println!("criterion 05 (path cost identity at every node): PASS");
}

#[test]
fn suite_audit_fully_clean() {
    for e in suite() {
        assert!(
            e.rdp.violations.is_empty(),
            "{}: {:?}",
            label(e),
            e.rdp.violations[0]
        );
    }
    println!("ratio suite carries no audit violations of any kind: PASS");
}

#[test]
fn criterion_06_exhaustive_cut_checks_small() {
    // n <= 8, k = 2, exhaustive cut enumeration at every recursion node,
    // 28 seeded runs across both families.
    let mut runs = 0;
    for n in 5..=8usize {
        for seed in 0..7u64 {
            let family = if seed % 2 == 0 {
                GenFamily::EuclideanUnitSquare
            } else {
                GenFamily::RandomMetricClosure
            };
            let inst = gen_random(n, family, seed).unwrap();
            let opts = RdpOptions {
                audit_level: AuditLevel::Exhaustive,
                audit_cap: 10,
                ..RdpOptions::default()
            };
            let out = solve_rdp(&inst, EPSILON, &opts).unwrap();
            let context = format!("n={n} family={family} seed={seed}");
            for check in [
                CheckId::SupportUnit,
                CheckId::LpFeasibility,
                CheckId::BusyLowerBound,
                CheckId::LowCutsChosen,
            ] {
                assert_no_violations(&out.violations, check, &context);
            }
            assert!(
                out.violations.is_empty(),
                "{context}: {:?}",
                out.violations[0]
            );
            runs += 1;
        }
    }
    assert!(runs >= 25);
    println!("criterion 06 (exhaustive unit/feasibility/busy/light-cut checks, {runs} runs): PASS");
}

#[test]
fn criterion_07_tjoin_membership_enumeration() {
    for n in [4usize, 6, 8, 10, 11, 12] {
        for seed in [3u64, 7] {
            let family = if n % 2 == 0 {
                GenFamily::EuclideanUnitSquare
            } else {
                GenFamily::RandomMetricClosure
            };
            let inst = gen_random(n, family, seed).unwrap();
            let out = solve_rdp(&inst, EPSILON, &RdpOptions::default()).unwrap();
            let t_set = odd_parity_set(&out.tree, inst.s(), inst.t(), n);
            match enumerate_tjoin_cuts(&out.y_star, &t_set, out.lambda1, n, TJOIN_ENUM_CAP).unwrap()
            {
                TjoinCheck::Ok => {}
                TjoinCheck::Violated { side, value } => {
                    panic!("n={n} seed={seed}: cut {side} has scaled value {value} below 1")
                }
            }
        }
    }
    println!("criterion 07 (scaled parity vector in T-join polyhedron up to n=12): PASS");
}

#[test]
fn criterion_08_oracle_self_consistency() {
    // Exact path DP against permutation enumeration.
    for n in 4..=8usize {
        for seed in [0u64, 1, 2] {
            let family = if seed == 1 {
                GenFamily::RandomMetricClosure
            } else {
                GenFamily::EuclideanUnitSquare
            };
            let inst = gen_random(n, family, seed).unwrap();
            let hk = held_karp_path(&inst, HELD_KARP_CAP).unwrap();
            let pm = permutation_opt(&inst, 9).unwrap();
            assert!(
                (hk.opt_cost - pm.opt_cost).abs() <= 1e-9 * (1.0 + pm.opt_cost),
                "n={n} seed={seed}: {} vs {}",
                hk.opt_cost,
                pm.opt_cost
            );
        }
    }

    // Blossom matching against brute-force pairing, both directions.
    for seed in 0..10u64 {
        let inst = gen_random(12, GenFamily::EuclideanUnitSquare, 100 + seed).unwrap();
        let size = 2 * (1 + (seed as usize % 4)); // |T| in {2,4,6,8}
        let members: Vec<usize> = (0..size)
            .map(|i| (i * 12 / size + seed as usize) % 12)
            .collect();
        let mut members = members;
        members.sort_unstable();
        members.dedup();
        if members.len() % 2 == 1 {
            members.pop();
        }
        let t_set = ParitySet { members };
        let blossom = min_cost_perfect_matching(&t_set, &inst);
        let brute = brute_force_matching(&t_set, &inst, 12).unwrap();
        assert!(
            (blossom.cost - brute.cost).abs() <= 1e-9 * (1.0 + brute.cost),
            "seed={seed}: blossom {} vs brute {}",
            blossom.cost,
            brute.cost
        );
        assert!(blossom.cost <= brute.cost + 1e-9 && brute.cost <= blossom.cost + 1e-9);
    }

    // Full solver against the naive mirror on 25+ seeds.
    let mut mirror_runs = 0;
    for n in [3usize, 4, 5] {
        for seed in 0..9u64 {
            let family = if seed % 2 == 0 {
                GenFamily::EuclideanUnitSquare
            } else {
                GenFamily::RandomMetricClosure
            };
            let inst = gen_random(n, family, 50 + seed).unwrap();
            let sched = lambda_schedule::<f64>(EPSILON).unwrap();
            let solver = Solver::new(&inst, sched.clone(), Audit::off());
            let top = DpCall::top(inst.s(), inst.t());
            let fast = solver.run_dp(&top).unwrap();
            let naive = mirror_dp(&top, &inst, &sched, oracle::MIRROR_WINDOW_CAP).unwrap();
            let context = format!("n={n} seed={seed}");
            assert!(
                (fast.tree_cost - naive.tree_cost).abs() <= 1e-7,
                "{context}: c(S) {} vs {}",
                fast.tree_cost,
                naive.tree_cost
            );
            assert!(
                (fast.y_cost - naive.y_cost).abs() <= 1e-7,
                "{context}: c(y) {} vs {}",
                fast.y_cost,
                naive.y_cost
            );
            assert!(
                (fast.lp_value - naive.lp_value).abs() <= 1e-7,
                "{context}: lp {} vs {}",
                fast.lp_value,
                naive.lp_value
            );
            assert_eq!(fast.chain, naive.chain, "{context}: chains differ");
            for (key, val) in fast.y.entries() {
                assert!(
                    (val - naive.y.get(key.0, key.1)).abs() <= 1e-7,
                    "{context}: y{key:?} {} vs {}",
                    val,
                    naive.y.get(key.0, key.1)
                );
            }
            for (key, val) in naive.y.entries() {
                assert!(
                    (val - fast.y.get(key.0, key.1)).abs() <= 1e-7,
                    "{context}: y{key:?}"
                );
            }
            mirror_runs += 1;
        }
    }
    assert!(mirror_runs >= 25);
    println!(
        "criterion 08 (exact-DP/permutation, blossom/brute, solver/mirror x{mirror_runs}): PASS"
    );
}

#[test]
fn criterion_09_narrow_cut_chains_complete() {
    // Chain well-formedness is enforced in-line by the solver (a crossing
    // pair aborts the solve), so surviving runs certify nesting. On top,
    // exhaustive enumeration up to n = 10 confirms no narrow cut is missed.
    for n in [9usize, 10] {
        for seed in [5u64, 6] {
            for family in [
                GenFamily::EuclideanUnitSquare,
                GenFamily::RandomMetricClosure,
            ] {
                let inst = gen_random(n, family, seed).unwrap();
                let opts = RdpOptions {
                    audit_level: AuditLevel::Exhaustive,
                    audit_cap: 10,
                    ..RdpOptions::default()
                };
                let out = solve_rdp(&inst, EPSILON, &opts).unwrap();
                let context = format!("n={n} family={family} seed={seed}");
                assert_no_violations(&out.violations, CheckId::NarrowComplete, &context);
                assert_no_violations(&out.violations, CheckId::ChainShape, &context);
            }
        }
    }
    println!("criterion 09 (narrow cuts nested and complete, exhaustive to n=10): PASS");
}

#[test]
fn criterion_10_top_level_lp_lower_bound() {
    let mut worst = 0.0f64;
    for e in suite() {
        assert!(
            e.rdp.lp_value_top <= e.opt * (1.0 + 1e-9),
            "{}: LP value {} exceeds OPT {}",
            label(e),
            e.rdp.lp_value_top,
            e.opt
        );
        worst = worst.max(e.rdp.lp_value_top / e.opt);
    }
    println!("criterion 10 (top-level LP value <= OPT): PASS (max LP/OPT {worst:.6})");
}

#[test]
fn criterion_11_runtime_trend() {
    // Sanity trend, not a reproduction: k=2 stays inside a generous
    // per-size budget on n in {6, 8, 10}, and k=3 completes for n <= 7
    // far below its 30-minute allowance.
    let mut timings = Vec::new();
    for n in [6usize, 8, 10] {
        let inst = gen_random(n, GenFamily::EuclideanUnitSquare, 77).unwrap();
        let started = Instant::now();
        let out = solve_rdp(&inst, EPSILON, &RdpOptions::default()).unwrap();
        let wall = started.elapsed();
        assert!(out.tour.order.len() == n);
        assert!(
            wall.as_secs_f64() < 120.0,
            "n={n} took {wall:.2?}, beyond the per-instance budget"
        );
        timings.push((n, wall));
    }
    let inst = gen_random(7, GenFamily::EuclideanUnitSquare, 78).unwrap();
    let started = Instant::now();
    let out = solve_rdp(&inst, 0.2, &RdpOptions::default()).unwrap();
    let wall_k3 = started.elapsed();
    assert_eq!(out.k, 3);
    assert!(
        wall_k3.as_secs_f64() < 1800.0,
        "k=3 n=7 took {wall_k3:.2?}, beyond 30 minutes"
    );
    let fmt: Vec<String> = timings
        .iter()
        .map(|(n, w)| format!("n={n}:{:.0}ms", w.as_secs_f64() * 1e3))
        .collect();
    println!(
        "criterion 11 (runtime trend, k=2 {} | k=3 n=7 {:.0}ms): PASS",
        fmt.join(" "),
        wall_k3.as_secs_f64() * 1e3
    );
}

#[test]
fn mirror_matches_on_worked_example() {
    // The 3-vertex path instance, end to end: LP value 2, narrow chain
    // {s} then {s,a}, tree {sa, at}, y = x*, all reproduced by the mirror.
    let inst = pathtsp::MetricInstance::new(
        vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ],
        0,
        2,
    )
    .unwrap();
    let sched = lambda_schedule::<f64>(EPSILON).unwrap();
    let solver = Solver::new(&inst, sched.clone(), Audit::exhaustive(10));
    let top = DpCall::top(0, 2);
    let fast = solver.run_dp(&top).unwrap();
    assert_eq!(fast.tree, vec![(0, 1), (1, 2)]);
    assert!((fast.lp_value - 2.0).abs() < 1e-9);
    assert!((fast.y_cost - 2.0).abs() < 1e-9);
    let expected_chain = CutChain::from_cuts([
        pathtsp::cuts::CutSide::from_verts([0]),
        pathtsp::cuts::CutSide::from_verts([0, 1]),
    ]);
    assert_eq!(fast.chain, expected_chain);
    assert!(solver.audit.is_clean());

    let naive = mirror_dp(&top, &inst, &sched, 6).unwrap();
    assert_eq!(naive.tree, fast.tree);
    assert_eq!(naive.chain, fast.chain);
    assert!((naive.y_cost - fast.y_cost).abs() < 1e-9);
}
