//! The Markovian queue against its birth-death-chain oracle: transient law
//! by uniformization and discounted cost by the resolvent. Medium-sized
//! versions live here; the acceptance suite runs the full-size ones.

mod common;

use common::*;
use matchq_core::queuesim::{
    estimate_qcp_cost, simulate_queue_rep, BufferPolicy, CostRates, InterarrivalSpec, PatienceSpec,
    QueueConfig,
};

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

fn chain_for(cfg: &QueueConfig, policy: &BufferPolicy) -> ImbalanceChain {
    ImbalanceChain {
        m_b: policy.m_b.unwrap(),
        m_s: policy.m_s.unwrap(),
        lambda_s: cfg.lambda_s(),
        lambda_b: cfg.lambda_b(),
        delta_s: cfg.patience_s.delta(),
        delta_b: cfg.patience_b.delta(),
    }
}

#[test]
fn transient_law_matches_uniformization() {
    // Smaller replication count than the acceptance run; looser TV budget.
    let cfg = markov_bridge(1);
    let policy = BufferPolicy::new(Some(-3), Some(3)).unwrap();
    let chain = chain_for(&cfg, &policy);
    let t = 5.0;
    let reps = 20_000u64;
    let mut counts = vec![0u64; chain.size()];
    for rep in 0..reps {
        let traj = simulate_queue_rep(&cfg, policy, t, 314, rep).unwrap();
        counts[chain.index(traj.x_end())] += 1;
    }
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / reps as f64).collect();
    let law = chain.transient_law(0, t);
    let tv = total_variation(&empirical, &law);
    assert!(tv < 0.025, "TV distance {tv}");
}

#[test]
fn chain_occupancy_is_mixed_across_interior_states() {
    let cfg = markov_bridge(1);
    let policy = BufferPolicy::new(Some(-3), Some(3)).unwrap();
    let chain = chain_for(&cfg, &policy);
    let law = chain.transient_law(0, 5.0);
    let sum: f64 = law.iter().sum();
    assert!((sum - 1.0).abs() < 1e-10);
    // The drift pushes up but abandonment pulls back: every state is charged.
    for (i, &p) in law.iter().enumerate() {
        assert!(p > 1e-4, "state {} starved: {p}", chain.state(i));
    }
}

#[test]
fn qcp_cost_matches_resolvent_oracle() {
    // n = 100 Markovian system under the translated reference policy; the
    // chain oracle integrates the same cost functional exactly.
    let cfg = markov_bridge(100);
    let policy = BufferPolicy::new(Some(-5), Some(1)).unwrap();
    let chain = chain_for(&cfg, &policy);
    let c = &cfg.costs;
    let rho: Vec<f64> = (0..chain.size())
        .map(|i| {
            qcp_cost_rate(&chain, chain.state(i), cfg.n, c.c_s, c.c_b, c.r_s, c.r_b, c.p_s, c.p_b)
        })
        .collect();
    let exact = chain.discounted_cost(0, c.alpha, &rho);

    let est = estimate_qcp_cost(&cfg, policy, 3000, 2718, 12.0).unwrap();
    let z = (est.mean - exact) / est.stderr;
    assert!(z.abs() < 4.0, "estimate {} vs chain {exact}, z = {z}", est.mean);
}

#[test]
fn blocking_happens_at_buffers_only() {
    let cfg = markov_bridge(4);
    let policy = BufferPolicy::new(Some(-2), Some(1)).unwrap();
    let traj = simulate_queue_rep(&cfg, policy, 30.0, 99, 0).unwrap();
    let mut prev_x = traj.x0;
    for e in &traj.events {
        match e.kind {
            matchq_core::queuesim::EventKind::ArrivalBlocked(
                matchq_core::queuesim::Class::Seller,
            ) => {
                assert_eq!(prev_x, 1, "seller blocked away from the buffer");
            }
            matchq_core::queuesim::EventKind::ArrivalBlocked(
                matchq_core::queuesim::Class::Buyer,
            ) => {
                assert_eq!(prev_x, -2, "buyer blocked away from the buffer");
            }
            _ => {}
        }
        prev_x = e.x;
    }
}
