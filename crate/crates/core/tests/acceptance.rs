//! Acceptance suite: every release criterion, one test each, with its
//! tolerance pinned in the assertion. Run with
//! `cargo test --test acceptance -- --nocapture` to see one summary line
//! per criterion.
//!
//! Reference constants come from two sources: hand-derived closed forms
//! (coefficients, three-term law) and the benchmark sizing study this
//! artifact reproduces (capacity percentiles, convergence ladder, runtime
//! ordering). Monte Carlo checks run on fixed seeds and carry explicit
//! noise bands.

use ramplaw::distributions::{shifted_kernel, IncrementLaw};
use ramplaw::integrate::simpson_steps;
use ramplaw::metrics::{l1_distance, l1_distance_conditional, terms_for_tolerance, EvaluationGrid};
use ramplaw::neumann::{closed_form_m2, support_bound, CoefficientTable, NeumannSolution};
use ramplaw::nystrom::{solve_picard, solve_resolvent, QuadratureGrid, ToeplitzOperator};
use ramplaw::simulate::{
    grid_power, run_dispatch, simulate_law, synthesize_power, SimulationConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

/// Benchmark operating point: a = 1.503 MW, beta = 0.6 1/MW.
const A_MW: f64 = 1.503;
const BETA: f64 = 0.6;
const A_TILDE: f64 = A_MW * BETA; // 0.9018

fn sim_config(
    a_tilde: f64,
    n_steps: usize,
    p_max_norm: Option<f64>,
    seed: u64,
) -> SimulationConfig {
    let law = IncrementLaw::simple_laplace(1.0).unwrap();
    let mut cfg = SimulationConfig::new(law, a_tilde, n_steps, seed);
    cfg.p_max = p_max_norm;
    cfg
}

#[test]
fn criterion_1_exact_coefficients() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    for _ in 0..10 {
        let a: f64 = rng.gen_range(0.05..4.0);
        let table = CoefficientTable::build(a, 2).unwrap();
        assert_eq!(table.coefficient(0, 0), 0.5);
        assert_eq!(table.coefficient(1, 0), 0.125);
        assert_eq!(table.coefficient(1, 1), 0.25);
        let row2 = [
            (table.coefficient(2, 0), 1.0 / 16.0 + a / 16.0),
            (table.coefficient(2, 1), 1.0 / 8.0 + a / 8.0),
            (table.coefficient(2, 2), 1.0 / 16.0),
        ];
        for (got, want) in row2 {
            assert!((got - want).abs() < 1e-14, "a={a}: {got} vs {want}");
        }
    }
    println!(
        "criterion 1 PASS: rows 0-1 bit-exact, row 2 within 1e-14 for 10 random slopes ({:?})",
        t0.elapsed()
    );
}

#[test]
fn criterion_2_closed_form_oracle() {
    let t0 = Instant::now();
    for a in [0.3, 0.9, 2.0] {
        let table = CoefficientTable::build(a, 2).unwrap();
        let p0_series = 1.0 / (1.0 + table.omega());
        let (_, p0_closed) = closed_form_m2(a, 0.0);
        assert!((p0_series - p0_closed).abs() < 1e-12, "p0 at a={a}");
        for i in 0..=400 {
            let b = i as f64 * 0.05;
            let (u_closed, _) = closed_form_m2(a, b);
            let u_series = table.rescaled_density(b).unwrap();
            assert!(
                (u_series - u_closed).abs() <= 1e-12 * u_series.max(1.0),
                "a={a} b={b}: {u_series} vs {u_closed}"
            );
        }
    }
    assert!(t0.elapsed().as_secs_f64() < 1.0);
    println!(
        "criterion 2 PASS: M=2 series equals closed form within 1e-12 on [0,20] ({:?})",
        t0.elapsed()
    );
}

#[test]
fn criterion_3_sizing_table_percentiles() {
    let t0 = Instant::now();
    let qs = [0.90, 0.95, 0.99];

    let m2 = NeumannSolution::solve(A_TILDE, 2).unwrap();
    let got_m2: Vec<f64> = qs
        .iter()
        .map(|&q| m2.percentile(q).unwrap() / BETA)
        .collect();
    for (got, want) in got_m2.iter().zip([2.01, 3.42, 6.61]) {
        assert!((got - want).abs() <= 0.02, "M=2: {got} vs {want}");
    }

    let m100 = NeumannSolution::solve(A_TILDE, 100).unwrap();
    let got_m100: Vec<f64> = qs
        .iter()
        .map(|&q| m100.percentile(q).unwrap() / BETA)
        .collect();
    for (got, want) in got_m100.iter().zip([2.91, 4.62, 8.60]) {
        assert!((got - want).abs() <= 0.05, "M=100: {got} vs {want}");
    }

    // algorithmic column: finite plant capacity 150 MW (normalized 90)
    let law = IncrementLaw::simple_laplace(BETA).unwrap();
    let mut cfg = SimulationConfig::new(law, A_MW, 5_000_000, 15029);
    cfg.p_max = Some(150.0);
    let empirical = simulate_law(&cfg).unwrap();
    let got_sim: Vec<f64> = qs
        .iter()
        .map(|&q| empirical.percentile(q).unwrap() / BETA)
        .collect();
    for (got, want) in got_sim.iter().zip([2.79, 4.46, 8.31]) {
        assert!((got - want).abs() <= 0.15, "simulated: {got} vs {want}");
    }

    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "criterion 3 PASS: capacities [MW] M=2 {got_m2:.3?}, M=100 {got_m100:.3?}, simulated {got_sim:.3?} ({elapsed:?})"
    );
}

#[test]
fn criterion_4_p99_agreement_and_capacity_effect() {
    let analytic = NeumannSolution::solve(A_TILDE, 100).unwrap();
    let b99 = analytic.percentile(0.99).unwrap();
    assert!((b99 - 5.15).abs() <= 0.02, "analytic b99 {b99}");

    let unbounded = simulate_law(&sim_config(A_TILDE, 5_000_000, None, 51)).unwrap();
    let b99_sim = unbounded.percentile(0.99).unwrap();
    assert!(
        (b99_sim - 5.14).abs() <= 0.10,
        "unbounded sim b99 {b99_sim}"
    );

    let capped = simulate_law(&sim_config(A_TILDE, 5_000_000, Some(90.0), 52)).unwrap();
    let b99_cap = capped.percentile(0.99).unwrap();
    let reduction = 1.0 - b99_cap / b99_sim;
    assert!(
        (0.01..=0.05).contains(&reduction),
        "capacity-induced P99 reduction {reduction}"
    );
    println!(
        "criterion 4 PASS: b99 analytic {b99:.4}, simulated {b99_sim:.4}, finite-capacity {b99_cap:.4} (reduction {:.1}%)",
        100.0 * reduction
    );
}

#[test]
fn criterion_5_convergence_ladder() {
    // ladder values are stated for unit-normalized conditional densities
    // against the finite-capacity reference run
    let reference = simulate_law(&sim_config(A_TILDE, 5_000_000, Some(90.0), 53)).unwrap();
    let grid = EvaluationGrid::from_empirical(&reference);
    let mut got = Vec::new();
    for (order, want) in [(3, 0.077), (6, 0.022), (100, 0.020)] {
        let truncated = NeumannSolution::solve(A_TILDE, order).unwrap();
        let d = l1_distance_conditional(&truncated, &reference, &grid).unwrap();
        assert!(
            (d - want).abs() <= 0.01,
            "D(M={order}) = {d} vs {want} +- 0.01"
        );
        got.push(d);
    }

    let easy_ref = simulate_law(&sim_config(1.5, 5_000_000, Some(90.0), 54)).unwrap();
    let easy_grid = EvaluationGrid::from_empirical(&easy_ref);
    let m_easy = terms_for_tolerance(1.5, &easy_ref, &easy_grid, 0.05, 20).unwrap();
    assert!(m_easy <= 2, "a~=1.5 needs M={m_easy}");

    let hard_ref = simulate_law(&sim_config(0.1, 5_000_000, Some(90.0), 55)).unwrap();
    let hard_grid = EvaluationGrid::from_empirical(&hard_ref);
    let m_hard = terms_for_tolerance(0.1, &hard_ref, &hard_grid, 0.05, 300).unwrap();
    assert!(
        (120..=250).contains(&m_hard),
        "a~=0.1 needs M={m_hard}, expected near 200"
    );
    println!(
        "criterion 5 PASS: D(M=3/6/100) = {:.4}/{:.4}/{:.4}; terms(a~=1.5)={m_easy}, terms(a~=0.1)={m_hard}",
        got[0], got[1], got[2]
    );
}

#[test]
fn criterion_6_solver_cross_validation() {
    let mut lines = Vec::new();
    for a in [0.3, 0.9, 2.0] {
        let t_analytic = Instant::now();
        let analytic = NeumannSolution::solve(a, 100).unwrap();
        let analytic_time = t_analytic.elapsed();

        let t_nystrom = Instant::now();
        let grid = QuadratureGrid::with_default_truncation(1001, a).unwrap();
        let quad = solve_resolvent(&ToeplitzOperator::build(grid, a).unwrap()).unwrap();
        let nystrom_time = t_nystrom.elapsed();

        let eval = EvaluationGrid::spanning(0.05, quad.grid().b_max()).unwrap();
        let d = l1_distance(&quad, &analytic, &eval).unwrap();
        assert!(d <= 0.01, "a={a}: D_L1 = {d}");
        assert!(
            nystrom_time.as_secs_f64() < 0.5,
            "Nystrom took {nystrom_time:?}"
        );

        // the paper's runtime comparison uses 18 series terms; we assert the
        // ordering only
        let t_m18 = Instant::now();
        let _ = NeumannSolution::solve(a, 18).unwrap();
        let m18_time = t_m18.elapsed();
        assert!(
            m18_time < nystrom_time,
            "M=18 analytic ({m18_time:?}) not faster than Nystrom ({nystrom_time:?})"
        );
        lines.push(format!(
            "a~={a}: D={d:.5}, nystrom {nystrom_time:?}, analytic M=100 {analytic_time:?}, M=18 {m18_time:?}"
        ));
    }
    println!("criterion 6 PASS: {}", lines.join("; "));
}

#[test]
fn criterion_7_property_suite() {
    // normalization p0 + integral(g) = 1 for random slopes and orders
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let a: f64 = rng.gen_range(0.15..3.5);
        let order = rng.gen_range(0..=80usize);
        let sol = NeumannSolution::solve(a, order).unwrap();
        let upper = support_bound(a, order);
        let mass = sol.p0() + simpson_steps(|b| sol.density(b).unwrap(), 0.0, upper, 0.01);
        assert!(
            (mass - 1.0).abs() < 1e-8,
            "a={a} M={order}: total mass {mass}"
        );
    }

    // CDF monotone, survival identity at zero
    let sol = NeumannSolution::solve(A_TILDE, 100).unwrap();
    assert!((sol.survival(0.0).unwrap() - (1.0 - sol.p0())).abs() < 1e-12);
    let mut prev = 0.0;
    for i in 0..=600 {
        let c = sol.cdf(i as f64 * 0.05).unwrap();
        assert!(c >= prev - 1e-15);
        prev = c;
    }

    // grid-power compliance on every simulated trace
    for (p_max, c) in [(None, 0.0), (Some(150.0), 0.0), (Some(150.0), 0.25)] {
        let law = if c > 0.0 {
            IncrementLaw::generalized(BETA, c, 10.0).unwrap()
        } else {
            IncrementLaw::simple_laplace(BETA).unwrap()
        };
        let mut cfg = SimulationConfig::new(law, A_MW, 200_000, 77);
        cfg.p_max = p_max;
        let p = synthesize_power(&cfg).unwrap();
        let b = run_dispatch(&p, cfg.a);
        let r = grid_power(&p, &b);
        let worst = r
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        assert!(worst >= -cfg.a - 1e-9, "grid ramp {worst} below -a");
    }

    // scale invariance: equal products give identical analytic laws ...
    let pairs = [(0.9, 1.0), (1.8, 0.5), (0.45, 2.0)];
    let laws: Vec<NeumannSolution> = pairs
        .iter()
        .map(|&(a, beta)| NeumannSolution::solve(a * beta, 40).unwrap())
        .collect();
    assert_eq!(laws[0], laws[1]);
    assert_eq!(laws[0], laws[2]);
    // ... and simulated P99s agree within Monte Carlo tolerance
    let mut p99s = Vec::new();
    for (i, &(a, beta)) in pairs.iter().enumerate() {
        let law = IncrementLaw::simple_laplace(beta).unwrap();
        let cfg = SimulationConfig::new(law, a, 2_000_000, 90 + i as u64);
        p99s.push(simulate_law(&cfg).unwrap().percentile(0.99).unwrap());
    }
    for w in p99s.windows(2) {
        assert!((w[0] - w[1]).abs() < 0.15, "scale-equivalent P99s {p99s:?}");
    }

    // fixed-point residual of the stationary equation at M = 100
    for a in [0.5, A_TILDE, 2.0] {
        let sol = NeumannSolution::solve(a, 100).unwrap();
        let upper = ramplaw::default_truncation(a) + 20.0;
        let mut worst: f64 = 0.0;
        for i in 0..=10 {
            let b = i as f64;
            let kink = b + a;
            let integrand = |s: f64| shifted_kernel(a, b - s) * sol.density(s).unwrap();
            let applied = simpson_steps(integrand, 0.0, kink, 0.02)
                + simpson_steps(integrand, kink, upper, 0.02);
            let residual =
                (sol.density(b).unwrap() - sol.p0() * shifted_kernel(a, b) - applied).abs();
            worst = worst.max(residual);
        }
        assert!(worst < 1e-6, "a={a}: residual {worst}");
    }

    // Picard matches the direct resolvent
    let grid = QuadratureGrid::with_default_truncation(1001, 0.9).unwrap();
    let op = ToeplitzOperator::build(grid, 0.9).unwrap();
    let direct = solve_resolvent(&op).unwrap();
    let (picard, _) = solve_picard(&op, 100).unwrap();
    let gap = direct
        .rescaled_values()
        .iter()
        .zip(picard.rescaled_values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(gap < 1e-8, "Picard vs resolvent {gap}");

    println!("criterion 7 PASS: normalization, monotonicity, compliance, scale invariance, fixed-point residual, Picard agreement");
}

#[test]
fn criterion_8_generalized_laplace_ordering() {
    let slopes = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
    let p99 = |c: f64, a_tilde: f64, seed: u64| -> f64 {
        let law = if c > 0.0 {
            IncrementLaw::generalized(1.0, c, 10.0).unwrap()
        } else {
            IncrementLaw::simple_laplace(1.0).unwrap()
        };
        let mut cfg = SimulationConfig::new(law, a_tilde, 5_000_000, seed);
        cfg.p_max = Some(90.0);
        simulate_law(&cfg).unwrap().percentile(0.99).unwrap()
    };

    let mut ratios = Vec::new();
    for (i, &a) in slopes.iter().enumerate() {
        let sl = p99(0.0, a, 800 + i as u64);
        let gl = p99(0.25, a, 900 + i as u64);
        ratios.push(gl / sl);
    }
    // heavier tail always costs more capacity from a~ = 1.5 on
    for (a, r) in slopes.iter().zip(&ratios) {
        if *a >= 1.5 {
            assert!(*r >= 1.0, "a~={a}: GL/SL ratio {r}");
        }
        if *a <= 1.0 {
            assert!(
                *r <= 1.12,
                "a~={a}: gap {:.1}% exceeds ~10%",
                100.0 * (r - 1.0)
            );
        }
    }
    // and the relative gap grows with the slope
    for w in ratios.windows(2) {
        assert!(w[1] > w[0] - 0.01, "ratios not increasing: {ratios:?}");
    }

    // at a~ = 3 the half-weight mixture roughly doubles the SL requirement
    let analytic = NeumannSolution::solve(3.0, 60).unwrap();
    let heavy = p99(0.5, 3.0, 1000);
    let ratio = heavy / analytic.percentile(0.99).unwrap();
    assert!(
        (1.4..=2.6).contains(&ratio),
        "P99(GL c=0.5)/P99(SL) = {ratio} at a~=3"
    );
    println!(
        "criterion 8 PASS: GL(c=0.25)/SL P99 ratios {:?}, GL(c=0.5)/analytic at a~=3: {ratio:.2}",
        ratios
            .iter()
            .map(|r| (r * 1000.0).round() / 1000.0)
            .collect::<Vec<_>>()
    );
}
