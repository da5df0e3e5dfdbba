//! Diffusion-side optimality probe and the zero-control cross-check: the
//! solved barriers should not be beaten by nearby barrier pairs (common
//! random numbers), and the smooth-fit value must agree with a Monte Carlo
//! estimate of the uncontrolled cost.

use matchq_core::diffusion::{estimate_cost_with_barriers, estimate_dcp_cost, Barriers, McConfig};
use matchq_core::hjb::{solve, SolverConfig};
use matchq_core::params::ModelParams;

fn paper_params() -> ModelParams {
    ModelParams::new(1.0, 2.0, 1.0, 2.0, 4.0, 4.0, 5.0, 0.4, 0.1).unwrap()
}

#[test]
fn solved_barriers_beat_their_perturbations() {
    let p = paper_params();
    let sol = solve(&p, &SolverConfig::for_params(&p)).unwrap();
    let base = Barriers::from(&sol);
    let cfg = McConfig { reps: 4000, t_max: 12.0, dt: 2e-3, seed: 1234 };
    let at_star = estimate_cost_with_barriers(&p, &base, 0.0, &cfg).unwrap();
    for dl in [-0.1, 0.1] {
        for du in [-0.1, 0.1] {
            let shifted = base.shifted(dl, du);
            let probe = estimate_cost_with_barriers(&p, &shifted, 0.0, &cfg).unwrap();
            let slack =
                3.0 * (at_star.stderr * at_star.stderr + probe.stderr * probe.stderr).sqrt();
            assert!(
                probe.mean >= at_star.mean - slack,
                "({dl:+},{du:+}): perturbed {} undercuts optimal {} beyond {slack}",
                probe.mean,
                at_star.mean
            );
        }
    }
}

#[test]
fn zero_control_value_matches_monte_carlo() {
    // No blocking is optimal once both penalties clear their thresholds; the
    // pasted smooth-fit value at the origin must match the plain discounted
    // holding cost of the free diffusion.
    let p = ModelParams::new(1.0, 2.0, 1.0, 2.0, 4.0, 4.0, 5.0, 10.0, 10.0).unwrap();
    let sol = solve(&p, &SolverConfig::for_params(&p)).unwrap();
    assert!(sol.a_star.is_none() && sol.b_star.is_none());
    let cfg = McConfig { reps: 10_000, t_max: 12.0, dt: 1e-3, seed: 777 };
    let est = estimate_dcp_cost(&p, &sol, 0.0, &cfg).unwrap();
    let q0 = sol.q0();
    let z = (est.mean - q0) / est.stderr;
    assert!(z.abs() < 3.0, "MC {} +- {} vs Q(0) {q0}: z = {z}", est.mean, est.stderr);
}
