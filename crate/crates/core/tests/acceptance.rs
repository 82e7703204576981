//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;

use misdc_core::analysis::{self, Method, MISDC_THETA_LIMIT};
use misdc_core::harness::{run_order_study, ConvergenceReport, StudyConfig};
use misdc_core::linalg;
use misdc_core::quadrature::{NodeSet, Rational};
use misdc_core::stencils::{
    avg_to_center, avg_to_face, cell_gradient, center_to_avg, center_to_face, face_gradient, CellAverages, CellCenters,
    Ghosts, Grid1D,
};
use misdc_core::testpde::NEWTON_TOLERANCE;
use misdc_core::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn fmt_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", parts.join(", "))
}

fn order_reports() -> Vec<ConvergenceReport> {
    (1..=4)
        .map(|sweeps| {
            let config = StudyConfig {
                a: -0.1,
                d: 1.0,
                r: -10.0,
                n_ladder: vec![200, 400, 800, 1600, 3200],
                cfl: 0.5,
                sweeps,
                nodes: 3,
                t_final: 0.5,
                record_wall_time: false,
                ..StudyConfig::default()
            };
            run_order_study(&config, Execution::Parallel).expect("order study configuration")
        })
        .collect()
}

fn criterion_1(reports: &[ConvergenceReport]) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for report in reports {
        let expected = report.sweeps.min(4) as f64;
        let rates = report.rates();
        let ok = report.failure.is_none() && rates.len() >= 3 && rates.iter().all(|r| (r - expected).abs() <= 0.3);
        pass &= ok;
        detail.push(format!("K={} rates {}", report.sweeps, fmt_list(&rates)));
    }
    outcome(pass, detail.join("; "))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut draws = 0;
    let mut agreeing = 0;
    while draws < 100 {
        let (a, d, r, dt) = (
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(0.05..1.0),
        );
        let Ok(map) = analysis::extract_iteration_map(a, d, r, dt) else {
            continue;
        };
        draws += 1;
        let (c1, c2) = analysis::closed_form_node2_coefficients(a, d, r, dt);
        let mut draw_worst: f64 = 0.0;
        for (got, want) in [(map.gamma(), c1.abs()), (map.delta(), c2.abs())] {
            draw_worst = draw_worst.max((got - want).abs() / want.max(f64::MIN_POSITIVE));
        }
        agreeing += usize::from(draw_worst <= 1e-12);
        worst = worst.max(draw_worst);
    }
    outcome(
        worst <= 1e-12,
        format!("{agreeing}/{draws} draws agree to 1e-12; worst relative mismatch {worst:.3e}"),
    )
}

fn near(x: f64, target: f64) -> bool {
    (x - target).abs() <= 1e-2
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut pass = true;
    let mut thetas = Vec::new();
    for _ in 0..5 {
        let (at, dtil, r, lambda) = (
            rng.gen_range(0.1..2.0),
            rng.gen_range(0.25..2.0),
            rng.gen_range(-20.0..5.0),
            rng.gen_range(0.25..1.0),
        );
        let report = analysis::limit_check(at, dtil, r, lambda, &[1e-2, 1e-3, 1e-4]).expect("limit check");
        let row = report.rows.last().expect("rows");
        // The node-1 row pairs {1/12, 1/3}; compare it as a set.
        let node1 = (near(row.alpha, 1.0 / 12.0) && near(row.beta, 1.0 / 3.0))
            || (near(row.alpha, 1.0 / 3.0) && near(row.beta, 1.0 / 12.0));
        pass &=
            node1 && near(row.gamma, 2.0 / 3.0) && near(row.delta, 7.0 / 12.0) && near(row.theta, MISDC_THETA_LIMIT);
        thetas.push(row.theta);
    }
    outcome(pass, format!("theta at dx=1e-4: {}", fmt_list(&thetas)))
}

fn criterion_4() -> Outcome {
    let (at, dtil, r, lambda) = (1.0, 1.0, -10.0, 0.5);
    let legacy = analysis::legacy_limit_check(at, dtil, r, lambda, &[1e-2, 1e-3, 1e-4]).expect("legacy limits");
    let &(_, alpha, beta) = legacy.rows.last().expect("rows");
    let limits_ok = near(alpha, legacy.alpha_limit) && near(beta, legacy.beta_limit);

    let scan = |method| {
        analysis::scan_region(method, 0.0, (-40.0, 4.0), (-40.0, 4.0), (89, 89), Execution::Parallel)
            .expect("region scan")
    };
    let (misdc, old) = (scan(Method::Misdc), scan(Method::Legacy));
    let (n_new, n_old) = (misdc.converged_count(), old.converged_count());
    outcome(
        limits_ok && n_old < n_new,
        format!(
            "alpha {alpha:.4} (limit {:.4}), beta {beta:.4}; converged cells legacy {n_old} < misdc {n_new}",
            legacy.alpha_limit
        ),
    )
}

fn gauss_avg(f: &dyn Fn(f64) -> f64, center: f64, dx: f64) -> f64 {
    let off = dx / (2.0 * 3f64.sqrt());
    0.5 * (f(center - off) + f(center + off))
}

/// Errors of the five conversions for `f` with exact ghosts. `avg_of`
/// returns the exact cell average given the centre.
fn conversion_errors(
    grid: &Grid1D,
    f: &dyn Fn(f64) -> f64,
    df: &dyn Fn(f64) -> f64,
    avg_of: &dyn Fn(f64) -> f64,
    relative: bool,
) -> [f64; 5] {
    let n = grid.n() as isize;
    let c = |i: isize| grid.center(i);
    let avg = CellAverages((0..n).map(|i| avg_of(c(i))).collect());
    let avg_g = Ghosts::new([avg_of(c(-1)), avg_of(c(-2))], [avg_of(c(n)), avg_of(c(n + 1))]);
    let cen = CellCenters((0..n).map(|i| f(c(i))).collect());
    let cen_g = Ghosts::new([f(c(-1)), f(c(-2))], [f(c(n)), f(c(n + 1))]);
    let faces: Vec<f64> = (0..=n).map(|j| f(grid.face(j))).collect();
    let dfaces: Vec<f64> = (0..=n).map(|j| df(grid.face(j))).collect();

    let err = |got: &[f64], want: &[f64]| {
        let diff: Vec<f64> = got.iter().zip(want).map(|(g, w)| (g - w).abs()).collect();
        if relative {
            let scale = want.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            diff.iter().fold(0.0f64, |m, v| m.max(*v)) / scale
        } else {
            diff.iter().sum::<f64>() / diff.len() as f64
        }
    };
    [
        err(avg_to_center(grid, &avg, &avg_g).unwrap().values(), cen.values()),
        err(center_to_avg(grid, &cen, &cen_g).unwrap().values(), avg.values()),
        err(avg_to_face(grid, &avg, &avg_g).unwrap().values(), &faces),
        err(center_to_face(grid, &cen, &cen_g).unwrap().values(), &faces),
        err(face_gradient(grid, &avg, &avg_g).unwrap().values(), &dfaces) * if relative { grid.dx() } else { 1.0 },
    ]
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let k: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let n = rng.gen_range(5..30);
        let lo = rng.gen_range(-3.0..3.0);
        let grid = Grid1D::new(n, lo, lo + rng.gen_range(0.5..4.0), 0.0).unwrap();
        let f = move |x: f64| ((k[3] * x + k[2]) * x + k[1]) * x + k[0];
        let df = move |x: f64| (3.0 * k[3] * x + 2.0 * k[2]) * x + k[1];
        let errs = conversion_errors(&grid, &f, &df, &|x| gauss_avg(&f, x, grid.dx()), true);
        worst = errs.iter().fold(worst, |m, e| m.max(*e));

        // Cell gradient: exact slope of quadratics.
        let q = move |x: f64| (k[2] * x + k[1]) * x + k[0];
        let dq = move |x: f64| 2.0 * k[2] * x + k[1];
        let ni = n as isize;
        let avg = CellAverages((0..ni).map(|i| gauss_avg(&q, grid.center(i), grid.dx())).collect());
        let ga = |i: isize| gauss_avg(&q, grid.center(i), grid.dx());
        let ghosts = Ghosts::new([ga(-1), ga(-2)], [ga(ni), ga(ni + 1)]);
        let got = cell_gradient(&grid, &avg, &ghosts).unwrap();
        let scale = (0..ni).fold(1.0f64, |m, i| m.max(dq(grid.center(i)).abs()));
        for (i, g) in got.values().iter().enumerate() {
            worst = worst.max((g - dq(grid.center(i as isize))).abs() / scale * grid.dx());
        }
    }
    let exact_ok = worst <= 100.0 * f64::EPSILON;

    let ladder = [64usize, 128, 256, 512];
    let per_n: Vec<[f64; 5]> = ladder
        .iter()
        .map(|&n| {
            let grid = Grid1D::new(n, 0.3, 3.3, 0.0).unwrap();
            let h = grid.dx() / 2.0;
            let avg_of = |x: f64| ((x - h).cos() - (x + h).cos()) / grid.dx();
            conversion_errors(&grid, &f64::sin, &f64::cos, &avg_of, false)
        })
        .collect();
    let mut rates = Vec::new();
    for op in 0..5 {
        let errs: Vec<f64> = per_n.iter().map(|e| e[op]).collect();
        rates.extend(common::orders(&errs));
    }
    let order_ok = rates.iter().all(|r| (r - 4.0).abs() <= 0.2);
    let (lo, hi) = rates
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(*r), b.max(*r)));
    outcome(
        exact_ok && order_ok,
        format!(
            "cubic worst {:.1} eps; sin orders in [{lo:.3}, {hi:.3}]",
            worst / f64::EPSILON
        ),
    )
}

fn criterion_6() -> Outcome {
    let r = |n, d| Rational::new(n, d);
    let three = NodeSet::lobatto(3).unwrap();
    let two = NodeSet::lobatto(2).unwrap();
    let ok3 = three.exact().map(|e| e.weights.clone())
        == Some(vec![
            vec![r(5, 24), r(8, 24), r(-1, 24)],
            vec![r(-1, 24), r(8, 24), r(5, 24)],
        ]);
    let ok2 = two.exact().map(|e| e.weights.clone()) == Some(vec![vec![r(1, 2), r(1, 2)]]);
    outcome(ok3 && ok2, format!("3-node exact {ok3}, 2-node exact {ok2}"))
}

fn criterion_7(reports: &[ConvergenceReport]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let n = [8, 64, 512][i % 3];
        let a = common::random_dominant(&mut rng, n);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = linalg::solve_banded(&a, &b).expect("nonsingular");
        worst = worst.max(linalg::relative_residual(&a, &x, &b));
    }
    let iters = reports
        .iter()
        .map(ConvergenceReport::newton_max_iterations)
        .max()
        .unwrap_or(0);
    let resid = reports
        .iter()
        .map(ConvergenceReport::newton_max_residual)
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-12 && iters <= 10 && resid <= NEWTON_TOLERANCE,
        format!("banded residual {worst:.2e}; Newton max {iters} iterations, residual {resid:.2e}"),
    )
}

fn main() -> ExitCode {
    let reports = order_reports();
    let results = [
        ("1 test-PDE order reproduction", criterion_1(&reports)),
        ("2 iteration-map closed forms", criterion_2()),
        ("3 asymptotic MISDC limits", criterion_3()),
        ("4 legacy limits and region size", criterion_4()),
        ("5 stencil exactness and order", criterion_5()),
        ("6 quadrature golden weights", criterion_6()),
        ("7 solver contracts", criterion_7(&reports)),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!(
            "criterion {name}: {} ({})",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "criterion 8 flame benchmarks: NOT REPRODUCIBLE (needs external chemistry inputs; substituted by criteria 1-7)"
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
