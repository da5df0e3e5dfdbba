//! Acceptance suite: the project's exit criteria, one test per criterion,
//! each printing a `ACCEPTANCE <k> <name>: PASS|FAIL` line (run with
//! `--nocapture` to see them on success).
//!
//! Criterion 1 compares the solver against the published four-decimal
//! reference table. Its `c` and `a*` columns reproduce; the `b*` column is
//! known not to: the reference values sit where the shot curve crosses the
//! seller penalty on the way up, which coincides with the free-boundary
//! point only when `M(a*) = p_s` holds exactly, and the residual their
//! printed `a*` carries (5e-4 .. 3e-3 in `M`) shifts the crossing by
//! 0.01-0.04 while the true tangency point stays put. The solver reports the
//! tangency point (where `W' = 0`, required by the smoothness conditions and
//! by criterion 3); the comparison is asserted as stated and fails honestly.

mod common;

use std::time::Instant;

use common::*;
use matchq_core::diffusion::{estimate_dcp_cost, McConfig};
use matchq_core::hjb::{find_barriers, find_c, hjb_branches, solve, SolverConfig};
use matchq_core::params::ModelParams;
use matchq_core::queuesim::{
    convergence_study_with_solution, diagnostics, estimate_qcp_cost, simulate_queue_rep,
    BufferPolicy, CostRates, InterarrivalSpec, PatienceSpec, PolicyLabel, QueueConfig,
};
use matchq_core::rng::CounterRng;
use matchq_core::skorokhod::{modulus, reflect_one_sided, reflect_two_sided, Path};

fn paper_params() -> ModelParams {
    ModelParams::new(1.0, 2.0, 1.0, 2.0, 4.0, 4.0, 5.0, 0.4, 0.1).unwrap()
}

fn markov_bridge(n: u32) -> QueueConfig {
    QueueConfig {
        n,
        lambda0: 0.5,
        beta_b: 0.0,
        beta_s: 2.0,
        interarrival_b: InterarrivalSpec::Exponential,
        interarrival_s: InterarrivalSpec::Exponential,
        patience_b: PatienceSpec::Exponential { hazard: 2.0 },
        patience_s: PatienceSpec::Exponential { hazard: 4.0 },
        costs: CostRates { c_s: 1.0, c_b: 2.0, r_s: 1.0, r_b: 1.0, p_s: 0.1, p_b: 0.4, alpha: 1.0 },
        x0_hat: 0.0,
    }
}

fn report(k: u32, name: &str, pass: bool, started: Instant, detail: &str) {
    println!(
        "ACCEPTANCE {k} {name}: {} [{:.2?}] {detail}",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed()
    );
}

#[test]
fn criterion_1_reference_table_reproduction() {
    let t0 = Instant::now();
    let tol = 5e-3;
    let reference: [(f64, f64, f64); 5] = [
        (0.1, -0.5248, 0.1104),
        (0.3, -0.6568, 0.1333),
        (0.5, -0.7707, 0.1935),
        (0.7, -0.8671, 0.2876),
        (0.9, -0.9345, 0.5501),
    ];
    let c_ref = -0.9440;
    let base = paper_params();
    let cfg = SolverConfig::for_params(&base);

    let mut failures: Vec<String> = Vec::new();
    let c = find_c(&base, &cfg).unwrap();
    println!("  c = {c:.6} (reference {c_ref}, tol {tol})");
    if (c - c_ref).abs() > tol {
        failures.push(format!("c: {c:.6} vs {c_ref}"));
    }
    for (ps, a_ref, b_ref) in reference {
        let p = ModelParams { p_s: ps, ..base };
        let (a, b) = find_barriers(&p, &cfg).unwrap();
        println!("  p_s={ps}: a* = {a:.6} (ref {a_ref}), b* = {b:.6} (ref {b_ref})");
        if (a - a_ref).abs() > tol {
            failures.push(format!("p_s={ps}: a* {a:.6} vs {a_ref}"));
        }
        if (b - b_ref).abs() > tol {
            failures.push(format!("p_s={ps}: b* {b:.6} vs {b_ref}"));
        }
    }
    let pass = failures.is_empty();
    report(1, "reference-table reproduction", pass, t0, &format!("{} mismatches", failures.len()));
    if !pass {
        println!(
            "  note: b* deviations are expected; the reference column reports the\n  \
             upcrossing of p_s under a small residual in a*, not the tangency point\n  \
             that the smoothness conditions (criterion 3) require. See the solver's\n  \
             derivative check: W'(b*) = 0 here versus +0.04..+0.22 at the reference b*."
        );
    }
    assert!(pass, "reference-table mismatches: {failures:?}");
}

#[test]
fn criterion_2_thresholds_exact() {
    let t0 = Instant::now();
    let p = paper_params();
    let (t_s, t_b) = p.thresholds();
    let pass = t_s == 1.0 && t_b == 4.0 / 3.0;
    report(2, "thresholds", pass, t0, &format!("T_s = {t_s}, T_b = {t_b}"));
    assert!(pass);
}

#[test]
fn criterion_3_hjb_residual_suite() {
    let t0 = Instant::now();
    let base = paper_params();
    let cfg = SolverConfig::for_params(&base);
    let variants: [(&str, ModelParams); 4] = [
        ("two-sided", base),
        ("left-reflect", ModelParams { p_s: 2.0, ..base }),
        ("right-reflect", ModelParams { p_b: 2.0, ..base }),
        ("zero-control", ModelParams { p_b: 2.0, p_s: 2.0, ..base }),
    ];
    let mut worst_min = 0.0_f64;
    let mut worst_branch = 0.0_f64;
    let mut pass = true;
    for (name, p) in variants {
        let sol = solve(&p, &cfg).unwrap();
        for (x, gen, low, up, q) in hjb_branches(&p, &sol) {
            let scale = 1.0_f64.max(q.abs());
            let min = gen.min(low).min(up);
            worst_min = worst_min.max(min.abs() / scale);
            worst_branch = worst_branch.min(gen / scale).min(low).min(up);
            if !(min >= -1e-6 * scale && min <= 1e-6 * scale)
                || gen < -1e-6 * scale
                || low < -1e-6
                || up < -1e-6
            {
                pass = false;
                println!("  {name}: residual breach at x = {x}: ({gen}, {low}, {up})");
            }
        }
        if let (Some(a), Some(b)) = (sol.a_star, sol.b_star) {
            let wa = &sol.w_curve;
            let ia = wa.grid.iter().position(|&g| g == a).unwrap();
            let ib = wa.grid.iter().position(|&g| g == b).unwrap();
            if (wa.w[ia] + p.p_b).abs() > 1e-6
                || (wa.w[ib] - p.p_s).abs() > 1e-6
                || wa.wp[ia].abs() > 1e-6
                || wa.wp[ib].abs() > 1e-4
            {
                pass = false;
                println!("  {name}: free-boundary conditions violated");
            }
        }
    }
    report(
        3,
        "dynamic-programming residuals",
        pass,
        t0,
        &format!("worst |min-branch|/scale = {worst_min:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_4_reflection_oracle_equivalence() {
    let t0 = Instant::now();
    let walks = 1000;
    let steps = 1000;
    let mut worst_gap = 0.0_f64;
    let mut pass = true;
    let meta = CounterRng::new(777, 0);
    for seed in 0..walks as u64 {
        let rng = CounterRng::new(seed, 300);
        let x0 = 2.0 * rng.uniform_at(1 << 20) - 1.0;
        let vals = random_walk(&rng, steps, x0, 0.05);
        let psi = Path::new(0.0, 0.01, vals.clone()).unwrap();

        let one = reflect_one_sided(&psi, -0.5);
        let gap1 = sup_diff(&one.phi.values, &clamp_one_sided(&vals, -0.5));
        let two = reflect_two_sided(&psi, -1.0, 1.0).unwrap();
        let gap2 = sup_diff(&two.phi.values, &clamp_two_sided(&vals, -1.0, 1.0));
        worst_gap = worst_gap.max(gap1).max(gap2);
        if gap1 > 1e-12 || gap2 > 1e-12 {
            pass = false;
        }

        // Lipschitz barrier-perturbation bound on nested random barriers.
        let a = -1.0 + 0.5 * meta.uniform_at(4 * seed);
        let b = 1.0 - 0.5 * meta.uniform_at(4 * seed + 1);
        let c = a - 0.5 * meta.uniform_at(4 * seed + 2);
        let d = b + 0.5 * meta.uniform_at(4 * seed + 3);
        let inner = reflect_two_sided(&psi, a, b).unwrap();
        let outer = reflect_two_sided(&psi, c, d).unwrap();
        let lhs = sup_diff(&inner.phi.values, &outer.phi.values);
        if lhs > 3.0 * ((a - c).abs() + (b - d).abs()) + 1e-12 {
            pass = false;
            println!("  perturbation bound fails on walk {seed}");
        }

        // Oscillation bound with constant barriers.
        for delta in [0.1, 0.7] {
            let lhs = modulus(&inner.phi, delta, psi.end_time()).unwrap();
            let rhs = modulus(&psi, delta, psi.end_time()).unwrap();
            if lhs > 4.0 * rhs + 1e-12 {
                pass = false;
                println!("  oscillation bound fails on walk {seed}");
            }
        }
    }
    report(4, "reflection-map oracles", pass, t0, &format!("worst sup-gap = {worst_gap:.2e}"));
    assert!(pass);
}

#[test]
fn criterion_5_diffusion_cost_cross_oracle() {
    let t0 = Instant::now();
    let p = paper_params();
    let sol = solve(&p, &SolverConfig::for_params(&p)).unwrap();
    let q0 = sol.q0();
    let cfg = McConfig { reps: 10_000, t_max: 12.0, dt: 1e-3, seed: 90210 };
    let est = estimate_dcp_cost(&p, &sol, 0.0, &cfg).unwrap();
    let z = (est.mean - q0) / est.stderr;
    let rel = est.stderr / q0;
    let pass = z.abs() <= 3.0 && rel <= 0.01;
    report(
        5,
        "diffusion-cost cross-oracle",
        pass,
        t0,
        &format!(
            "MC {:.5} +- {:.5} vs Q(0) {q0:.5}; z = {z:.2}, stderr/Q0 = {:.3}%",
            est.mean,
            est.stderr,
            100.0 * rel
        ),
    );
    assert!(pass, "z = {z}, rel stderr = {rel}");
}

#[test]
fn criterion_6_markov_chain_oracle() {
    let t0 = Instant::now();

    // Transient law at n = 1, buffers +-3, horizon 5, 1e5 replications.
    let cfg1 = markov_bridge(1);
    let policy1 = BufferPolicy::new(Some(-3), Some(3)).unwrap();
    let chain1 = ImbalanceChain {
        m_b: -3,
        m_s: 3,
        lambda_s: cfg1.lambda_s(),
        lambda_b: cfg1.lambda_b(),
        delta_s: 4.0,
        delta_b: 2.0,
    };
    let reps = 100_000u64;
    let mut counts = vec![0u64; chain1.size()];
    for rep in 0..reps {
        let traj = simulate_queue_rep(&cfg1, policy1, 5.0, 1618, rep).unwrap();
        counts[chain1.index(traj.x_end())] += 1;
    }
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / reps as f64).collect();
    let law = chain1.transient_law(0, 5.0);
    let tv = total_variation(&empirical, &law);

    // Discounted cost at n = 100 under the translated reference policy.
    let cfg100 = markov_bridge(100);
    let policy100 = BufferPolicy::new(Some(-5), Some(1)).unwrap();
    let chain100 = ImbalanceChain {
        m_b: -5,
        m_s: 1,
        lambda_s: cfg100.lambda_s(),
        lambda_b: cfg100.lambda_b(),
        delta_s: 4.0,
        delta_b: 2.0,
    };
    let c = &cfg100.costs;
    let rho: Vec<f64> = (0..chain100.size())
        .map(|i| {
            qcp_cost_rate(
                &chain100,
                chain100.state(i),
                100,
                c.c_s,
                c.c_b,
                c.r_s,
                c.r_b,
                c.p_s,
                c.p_b,
            )
        })
        .collect();
    let exact = chain100.discounted_cost(0, c.alpha, &rho);
    let est = estimate_qcp_cost(&cfg100, policy100, 10_000, 141421, 12.0).unwrap();
    let z = (est.mean - exact) / est.stderr;

    let pass = tv <= 0.01 && z.abs() <= 3.0;
    report(
        6,
        "Markov-chain oracle",
        pass,
        t0,
        &format!(
            "TV(n=1, T=5) = {tv:.4}; cost n=100: {:.5} +- {:.5} vs chain {exact:.5} (z = {z:.2})",
            est.mean, est.stderr
        ),
    );
    assert!(pass, "tv = {tv}, z = {z}");
}

#[test]
fn criterion_7_asymptotic_optimality_trend() {
    let t0 = Instant::now();
    let p = paper_params();
    let sol = solve(&p, &SolverConfig::for_params(&p)).unwrap();
    let template = markov_bridge(25);
    let n_list = [25u32, 100, 400];
    let reps = 200u32;
    let seed = 31415;
    let study = convergence_study_with_solution(&sol, &template, &n_list, reps, seed).unwrap();

    let row = |n: u32, label: PolicyLabel| {
        study
            .rows
            .iter()
            .find(|r| r.n == n && r.label == label)
            .unwrap_or_else(|| panic!("missing study row {n} {label:?}"))
    };

    // (a) The value gap narrows from n = 25 to n = 400.
    let g25 = row(25, PolicyLabel::Threshold);
    let g400 = row(400, PolicyLabel::Threshold);
    let slack_a = 3.0 * (g25.stderr * g25.stderr + g400.stderr * g400.stderr).sqrt();
    let pass_a = g400.gap <= g25.gap + slack_a;
    println!(
        "  (a) gap(400) = {:.4} vs gap(25) = {:.4} + 3se = {:.4}  [V(0) = {:.4}]",
        g400.gap,
        g25.gap,
        g25.gap + slack_a,
        study.v_ref
    );

    // (b) The translated policy beats its four perturbations at n = 400.
    let thr = row(400, PolicyLabel::Threshold);
    let mut pass_b = true;
    for dl in [-0.1, 0.1] {
        for du in [-0.1, 0.1] {
            let pert = row(400, PolicyLabel::Perturbed { d_lower: dl, d_upper: du });
            let slack = 3.0 * (thr.stderr * thr.stderr + pert.stderr * pert.stderr).sqrt();
            let ok = thr.mean <= pert.mean + slack;
            println!(
                "  (b) threshold {:.4} vs perturbed({dl:+},{du:+}) {:.4} + {slack:.4}: {}",
                thr.mean,
                pert.mean,
                if ok { "ok" } else { "VIOLATED" }
            );
            pass_b &= ok;
        }
    }
    // Blocking must genuinely help in this regime.
    let zero400 = row(400, PolicyLabel::ZeroControl);
    let slack_z = 3.0 * (thr.stderr * thr.stderr + zero400.stderr * zero400.stderr).sqrt();
    let pass_z = zero400.mean > thr.mean + slack_z;
    println!(
        "  (b') zero-control {:.4} should exceed threshold {:.4} + {slack_z:.4}",
        zero400.mean, thr.mean
    );

    // (c) Replication-averaged diagnostics residuals shrink from 25 to 400.
    let avg = |n: u32| -> (f64, f64, f64) {
        let cfg = QueueConfig { n, ..template };
        let policy = BufferPolicy::translated(sol.a_star, sol.b_star, n);
        let (mut ab, mut li, mut fl) = (0.0, 0.0, 0.0);
        for rep in 0..reps as u64 {
            let traj = simulate_queue_rep(&cfg, policy, 12.0, seed, rep).unwrap();
            let d = diagnostics(&cfg, &traj, 0.05);
            ab += d.abandonment_residual_s + d.abandonment_residual_b;
            li += d.littles_residual_s + d.littles_residual_b;
            fl += d.fluid_blocking;
        }
        let r = reps as f64;
        (ab / r, li / r, fl / r)
    };
    let (ab25, li25, fl25) = avg(25);
    let (ab400, li400, fl400) = avg(400);
    let pass_c = ab400 < ab25 && li400 < li25 && fl400 < fl25;
    println!(
        "  (c) residuals 25 -> 400: abandonment {ab25:.4} -> {ab400:.4}, \
         little {li25:.4} -> {li400:.4}, fluid-blocking {fl25:.5} -> {fl400:.5}"
    );

    let pass = pass_a && pass_b && pass_z && pass_c;
    report(7, "asymptotic-optimality trend", pass, t0, "");
    assert!(pass, "a={pass_a} b={pass_b} z={pass_z} c={pass_c}");
}
