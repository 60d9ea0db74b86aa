mod common;

use paklo::bench::{generate, generate_column_degree, GenSpec};
use paklo::init::{make_start_cover, two_approx_cover};
use paklo::instance::{Mode, ProblemInstance};
use paklo::matrix::{parse_matrix_market, write_matrix_market, SparseNonnegMatrix};
use paklo::reduction::ReducedInstance;
use paklo::reference::lp::exact_opt;
use paklo::smoothing::SmoothedObjective;
use paklo::solver::{run_accelerated, solve, SolverConfig};
use proptest::prelude::*;

use common::*;

/// Nonnegative matrix with every row and column nonempty.
fn matrix(max_dim: usize, lo: f64, hi: f64) -> impl Strategy<Value = SparseNonnegMatrix> {
    (1..=max_dim, 1..=max_dim)
        .prop_flat_map(move |(m, n)| {
            (
                Just((m, n)),
                proptest::collection::vec((proptest::bool::weighted(0.5), lo..hi), m * n),
            )
        })
        .prop_map(|((m, n), cells)| {
            let mut dense = vec![vec![0.0; n]; m];
            for (k, (on, v)) in cells.into_iter().enumerate() {
                let (j, i) = (k / n, k % n);
                if on || i == j % n || j == i % m {
                    dense[j][i] = v;
                }
            }
            SparseNonnegMatrix::from_dense(&dense).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduction_copy_counts_and_caps(a in matrix(6, 0.01, 100.0)) {
        let red = ReducedInstance::reduce(&a);
        let mut total = 0;
        for i in 0..a.ncols() {
            let (lo, hi) = (a.col_min(i), a.col_inf_norm(i));
            let c = red.ratios()[i].copies;
            total += c;
            prop_assert!(2f64.powi(c as i32) * lo >= hi);
            if c > 1 {
                prop_assert!(2f64.powi(c as i32 - 1) * lo < hi);
            }
            prop_assert!(c as f64 <= 1.0 + (hi / lo).log2().ceil());
        }
        prop_assert_eq!(red.reduced_n(), total);
        for k in 0..red.reduced_n() {
            let (i, l) = red.col_map()[k];
            let scaled = red.caps()[k] * red.matrix().col_inf_norm(k);
            let floor = if (l as usize) < red.ratios()[i].copies { 2.0 } else { 1.0 };
            prop_assert!(scaled >= floor * (1.0 - 1e-15) && scaled <= 2.0 * (1.0 + 1e-15));
            let (rows, vals) = red.matrix().col(k);
            let (orows, ovals) = a.col(i);
            prop_assert_eq!(rows, orows);
            prop_assert!(vals.iter().zip(ovals).all(|(v, o)| v <= o));
        }
    }

    #[test]
    fn projection_preserves_coverage(
        a in matrix(6, 0.01, 100.0),
        xs in proptest::collection::vec(0.0f64..3.0, 6),
    ) {
        let red = ReducedInstance::reduce(&a);
        let x: Vec<f64> = (0..a.ncols()).map(|i| xs[i] / a.col_inf_norm(i)).collect();
        let xbar = red.project_solution(&x);
        let truncated: Vec<f64> = x.iter().zip(red.col_min()).map(|(v, c)| v.min(1.0 / c)).collect();
        prop_assert_eq!(red.lift_solution(&xbar), truncated);
        prop_assert!(xbar.iter().zip(red.caps()).all(|(v, c)| v <= c));
        let before = a.mul_vec(&x);
        let after = red.matrix().mul_vec(&xbar);
        for (b, f) in before.iter().zip(&after) {
            prop_assert!(*f >= b.min(1.0) * (1.0 - 1e-12), "row coverage {} dropped to {}", b, f);
        }
    }

    #[test]
    fn reduced_optimum_is_exact(a in matrix(4, 0.1, 10.0)) {
        let red = ReducedInstance::reduce(&a);
        let orig = exact_opt(&a, Mode::Cover, None).unwrap();
        let reduced = exact_opt(red.matrix(), Mode::Cover, Some(red.caps())).unwrap();
        prop_assert_eq!(&orig.opt, &reduced.opt);
        reduced.verify(red.matrix(), Some(red.caps())).unwrap();
    }

    #[test]
    fn exact_duality_cover_pack_transpose(a in matrix(5, 0.1, 10.0)) {
        let cover = exact_opt(&a, Mode::Cover, None).unwrap();
        let pack = exact_opt(&a.transpose(), Mode::Pack, None).unwrap();
        prop_assert_eq!(cover.opt, pack.opt);
    }

    #[test]
    fn matrix_market_round_trip(a in matrix(8, 1e-6, 1e6)) {
        prop_assert_eq!(parse_matrix_market(&write_matrix_market(&a)).unwrap(), a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn smoothing_inequalities_hold(a in matrix(5, 0.1, 10.0), seed in any::<u64>()) {
        let inst = ProblemInstance::new(a, Mode::Cover).unwrap();
        let case = reduced_case(&inst, 0.1);
        let mut tally = InequalityTally::default();
        smoothing_suite(&case, 40, seed, &mut tally);
        undercovered_suite(&case, 20, seed, &mut tally);
        prop_assert!(tally.failures.is_empty(), "{:?}", tally.failures);
    }

    #[test]
    fn two_approximation_and_start_bounds(a in matrix(6, 0.1, 10.0)) {
        let eps = 0.1;
        let inst = ProblemInstance::new(a, Mode::Cover).unwrap();
        let case = reduced_case(&inst, eps);
        let two = two_approx_cover(&case.red).unwrap();
        let covered = case.red.matrix().mul_vec(&two.x);
        prop_assert!(covered.iter().all(|&v| v >= 1.0 - 1e-12));
        let cost: f64 = two.x.iter().sum();
        prop_assert!(cost <= 2.0 * case.opt * (1.0 + 1e-9), "2-approx {} vs opt {}", cost, case.opt);
        prop_assert!(two.lower <= case.opt * (1.0 + 1e-9));

        let obj = SmoothedObjective::with_eps(case.red.matrix(), Mode::Cover, eps).unwrap();
        let start = make_start_cover(&obj, &two.x, eps);
        prop_assert!(obj.in_box(&start.x_start, 0.0));
        prop_assert!(obj.f_mu(&start.x_start, None) <= 4.0 * case.opt);
        prop_assert!(obj.bregman(&start.x_start, &case.x_star) <= 6.0 * case.opt);
    }

    #[test]
    fn solve_outputs_are_feasible(a in matrix(6, 0.1, 10.0), seed in 0u64..1000) {
        for mode in [Mode::Cover, Mode::Pack] {
            let inst = ProblemInstance::new(a.clone(), mode).unwrap();
            let rep = solve(&inst, &SolverConfig::new(0.2, seed)).unwrap();
            let ax = a.mul_vec(&rep.solution);
            match mode {
                Mode::Cover => prop_assert!(ax.iter().all(|&v| v >= 1.0 - 1e-9)),
                Mode::Pack => prop_assert!(ax.iter().all(|&v| v <= 1.0 + 1e-12)),
            }
            prop_assert!(rep.solution.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn generators_are_deterministic(seed in any::<u64>(), d in 1usize..5) {
        let spec = GenSpec { m: 7, n: 5, density: 0.6, value_range: (0.5, 2.0), seed };
        prop_assert_eq!(generate(&spec, Mode::Cover).unwrap(), generate(&spec, Mode::Cover).unwrap());
        let g = generate_column_degree(8, 6, d + 1, (0.5, 1.0), seed, Mode::Pack).unwrap();
        prop_assert_eq!(&g, &generate_column_degree(8, 6, d + 1, (0.5, 1.0), seed, Mode::Pack).unwrap());
        prop_assert!((0..6).all(|i| g.matrix().col_nnz(i) == d + 1));
        prop_assert!(g.matrix().row_nnz().iter().all(|&r| r > 0));
    }
}

/// Mean of `f_μ(y_T)` over independent seeds against `(1 + 6ε)·opt`, with
/// three standard errors of slack.
#[test]
fn expected_objective_after_full_schedule() {
    let eps = 0.1;
    let inst = generate(
        &GenSpec {
            m: 4,
            n: 4,
            density: 0.6,
            value_range: (0.2, 5.0),
            seed: 77,
        },
        Mode::Cover,
    )
    .unwrap();
    let case = reduced_case(&inst, eps);
    let obj = SmoothedObjective::with_eps(case.red.matrix(), Mode::Cover, eps).unwrap();
    let two = two_approx_cover(&case.red).unwrap();
    let start = make_start_cover(&obj, &two.x, eps);
    let values: Vec<f64> = (0..30u64)
        .map(|seed| {
            let out = run_accelerated(&obj, &start.x_start, &solver_config(eps, seed)).unwrap();
            assert!(obj.in_box(&out.y, 1e-9));
            obj.f_mu(&out.y, None)
        })
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    let se = (var / values.len() as f64).sqrt();
    let bound = (1.0 + 6.0 * eps) * case.opt + 3.0 * se;
    assert!(mean <= bound, "mean f_mu {mean} exceeds {bound} (opt {}, se {se})", case.opt);
}
