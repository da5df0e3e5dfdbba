//! Randomized sweep of the full solve across parameter space: every sampled
//! model must dispatch to the regime its penalties imply and produce a
//! solution satisfying the free-boundary and dynamic-programming conditions.

use matchq_core::hjb::{hjb_branches, solve, SolverConfig};
use matchq_core::params::{ModelParams, Regime};
use matchq_core::rng::CounterRng;

fn sample_params(rng: &CounterRng, k: u64, regime: Regime) -> ModelParams {
    let u = |j: u64| rng.uniform_at(k * 16 + j);
    let sigma2 = 0.25 + 3.75 * u(0);
    let beta = 6.0 * u(1) - 3.0;
    let alpha = 0.5 + 1.5 * u(2);
    let delta_b = 0.5 + 4.5 * u(3);
    let delta_s = 0.5 + 4.5 * u(4);
    let theta_b = 0.5 + 5.5 * u(5);
    let theta_s = 0.5 + 5.5 * u(6);
    let t_s = theta_s / (alpha + delta_s);
    let t_b = theta_b / (alpha + delta_b);
    // A penalty strictly below its threshold blocks that side; at or above
    // it never blocks.
    let below = |t: f64, j: u64| t * (0.15 + 0.7 * u(j));
    let above = |t: f64, j: u64| t * (1.0 + u(j));
    let (p_s, p_b) = match regime {
        Regime::ZeroControl => (above(t_s, 7), above(t_b, 8)),
        Regime::TwoSided => (below(t_s, 7), below(t_b, 8)),
        Regime::LeftReflect => (above(t_s, 7), below(t_b, 8)),
        Regime::RightReflect => (below(t_s, 7), above(t_b, 8)),
    };
    ModelParams::new(sigma2, beta, alpha, delta_b, delta_s, theta_b, theta_s, p_b, p_s).unwrap()
}

fn check_solution(p: &ModelParams, tag: &str) {
    let cfg = SolverConfig::for_params(p);
    let sol = solve(p, &cfg).unwrap_or_else(|e| panic!("{tag}: solve failed: {e}"));
    assert_eq!(sol.regime, p.classify_regime(), "{tag}");

    // Barrier geometry per regime.
    match sol.regime {
        Regime::ZeroControl => {
            assert!(sol.a_star.is_none() && sol.b_star.is_none(), "{tag}");
            assert!(sol.k_s.unwrap() < 0.0 && sol.k_b.unwrap() > 0.0, "{tag}");
        }
        Regime::TwoSided => {
            let (a, b) = (sol.a_star.unwrap(), sol.b_star.unwrap());
            assert!(sol.c.unwrap() < a && a < 0.0 && 0.0 < b, "{tag}: c<a*<0<b*");
            assert!((sol.w_at(a) + p.p_b).abs() < 1e-6, "{tag}: W(a*)");
            assert!((sol.w_at(b) - p.p_s).abs() < 1e-6, "{tag}: W(b*)");
        }
        Regime::LeftReflect => {
            let a = sol.a_star.unwrap();
            assert!(a < 0.0 && sol.b_star.is_none(), "{tag}");
            assert!((sol.w_at(a) + p.p_b).abs() < 1e-6, "{tag}: W(a~*)");
        }
        Regime::RightReflect => {
            let b = sol.b_star.unwrap();
            assert!(b > 0.0 && sol.a_star.is_none(), "{tag}");
            assert!((sol.w_at(b) - p.p_s).abs() < 1e-6, "{tag}: W(b~*)");
        }
    }

    // Dynamic-programming branches on the whole grid.
    for (x, gen, low, up, q) in hjb_branches(p, &sol) {
        let scale = 1.0_f64.max(q.abs());
        let min = gen.min(low).min(up);
        assert!(
            min >= -1e-6 * scale && min <= 1e-6 * scale && low >= -1e-6 && up >= -1e-6,
            "{tag}: branch violation at x={x}: ({gen}, {low}, {up})"
        );
        assert!(q.is_finite(), "{tag}: Q not finite at {x}");
    }
}

#[test]
fn random_models_solve_cleanly_in_every_regime() {
    let rng = CounterRng::new(20_260_809, 0);
    let regimes =
        [Regime::ZeroControl, Regime::TwoSided, Regime::LeftReflect, Regime::RightReflect];
    for k in 0..20u64 {
        for (j, &regime) in regimes.iter().enumerate() {
            let p = sample_params(&rng, k * 4 + j as u64, regime);
            check_solution(&p, &format!("sample {k}/{regime:?}: {p:?}"));
        }
    }
}
