//! Event-driven core of the pre-limit queue.
//!
//! One binary heap of pending events, keyed by `(time, rank, insertion seq)`
//! with rank ordering seller-arrival < buyer-arrival < abandonment, so ties
//! (possible with deterministic interarrival times) resolve deterministically
//! and FIFO within a class. Patience clocks are sampled lazily from the
//! customer's arrival index, so the same `(seed, replication)` produces the
//! same primitives under every buffer policy — blocking never consumes
//! randomness. Clocks of already-matched customers are tombstoned: the heap
//! entry stays, popping it has no effect.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{BufferSchedule, Class, EventKind, QueueConfig};
use crate::rng::CounterRng;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Payload {
    Arrival { class: Class, idx: u64 },
    Abandon { class: Class, cust: u32 },
}

#[derive(Clone, Copy, Debug)]
struct Ev {
    t: f64,
    rank: u8,
    seq: u64,
    payload: Payload,
}

impl PartialEq for Ev {
    fn eq(&self, other: &Self) -> bool {
        self.t == other.t && self.rank == other.rank && self.seq == other.seq
    }
}
impl Eq for Ev {}

impl PartialOrd for Ev {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed so the std max-heap pops the earliest event first.
impl Ord for Ev {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .t
            .partial_cmp(&self.t)
            .unwrap()
            .then(other.rank.cmp(&self.rank))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Waiting record of one admitted customer: arrival instant and departure
/// instant (`f64::INFINITY` while still in the queue at the horizon).
#[derive(Clone, Copy, Debug)]
pub struct Stay {
    pub arrived: f64,
    pub departed: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum CustState {
    Waiting,
    Gone,
}

/// An effective event, already applied to the engine state.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Applied {
    pub t: f64,
    pub kind: EventKind,
}

pub(crate) struct Engine<'a, S: BufferSchedule> {
    cfg: &'a QueueConfig,
    schedule: S,
    t_end: f64,
    arr_s_rng: CounterRng,
    arr_b_rng: CounterRng,
    pat_s_rng: CounterRng,
    pat_b_rng: CounterRng,
    heap: BinaryHeap<Ev>,
    seq: u64,
    epoch_s: f64,
    epoch_b: f64,
    // State: imbalance plus FIFO queues of customer handles per class.
    pub x: i64,
    sellers: VecDeque<u32>,
    buyers: VecDeque<u32>,
    state_s: Vec<CustState>,
    state_b: Vec<CustState>,
    pub stays_s: Vec<Stay>,
    pub stays_b: Vec<Stay>,
    // Counters.
    pub a_s: u64,
    pub a_b: u64,
    pub g_s: u64,
    pub g_b: u64,
    pub u_s: u64,
    pub u_b: u64,
    pub x0_pre: i64,
    pub x0: i64,
    pub initial_removed: u64,
}

impl<'a, S: BufferSchedule> Engine<'a, S> {
    pub fn new(cfg: &'a QueueConfig, schedule: S, t_end: f64, seed: u64, rep: u64) -> Self {
        let root = CounterRng::new(seed, rep);
        let mut eng = Engine {
            cfg,
            schedule,
            t_end,
            arr_s_rng: root.substream(0),
            arr_b_rng: root.substream(1),
            pat_s_rng: root.substream(2),
            pat_b_rng: root.substream(3),
            heap: BinaryHeap::new(),
            seq: 0,
            epoch_s: 0.0,
            epoch_b: 0.0,
            x: 0,
            sellers: VecDeque::new(),
            buyers: VecDeque::new(),
            state_s: Vec::new(),
            state_b: Vec::new(),
            stays_s: Vec::new(),
            stays_b: Vec::new(),
            a_s: 0,
            a_b: 0,
            g_s: 0,
            g_b: 0,
            u_s: 0,
            u_b: 0,
            x0_pre: 0,
            x0: 0,
            initial_removed: 0,
        };

        // Initial population: deterministic, nonnegative, non-abandoning
        // sellers; anything above the seller buffer is removed at time 0 and
        // charged to the blocking counter.
        let x0_pre = cfg.initial_count();
        eng.x0_pre = x0_pre;
        let mut admit = x0_pre;
        if let Some(m_s) = eng.schedule.policy_at(0.0).m_s {
            if x0_pre > m_s {
                eng.initial_removed = (x0_pre - m_s) as u64;
                eng.u_s = eng.initial_removed;
                admit = m_s;
            }
        }
        eng.x0 = admit;
        eng.x = admit;
        for _ in 0..admit {
            let id = eng.state_s.len() as u32;
            eng.state_s.push(CustState::Waiting);
            eng.stays_s.push(Stay { arrived: 0.0, departed: f64::INFINITY });
            eng.sellers.push_back(id);
        }

        // First renewal arrivals.
        eng.schedule_arrival(Class::Seller, 0);
        eng.schedule_arrival(Class::Buyer, 0);
        eng
    }

    fn push(&mut self, t: f64, rank: u8, payload: Payload) {
        let seq = self.seq;
        self.seq += 1;
        self.heap.push(Ev { t, rank, seq, payload });
    }

    fn schedule_arrival(&mut self, class: Class, idx: u64) {
        let (gap, rank) = match class {
            Class::Seller => {
                (self.cfg.interarrival_s.sample(&self.arr_s_rng, idx, 1.0 / self.cfg.lambda_s()), 0)
            }
            Class::Buyer => {
                (self.cfg.interarrival_b.sample(&self.arr_b_rng, idx, 1.0 / self.cfg.lambda_b()), 1)
            }
        };
        let t = match class {
            Class::Seller => {
                self.epoch_s += gap;
                self.epoch_s
            }
            Class::Buyer => {
                self.epoch_b += gap;
                self.epoch_b
            }
        };
        self.push(t, rank, Payload::Arrival { class, idx });
    }

    /// Pops the head of `queue`, skipping customers that already left.
    fn pop_waiting(queue: &mut VecDeque<u32>, states: &mut [CustState]) -> u32 {
        loop {
            let id = queue.pop_front().expect("queue claimed nonempty by imbalance sign");
            if states[id as usize] == CustState::Waiting {
                states[id as usize] = CustState::Gone;
                return id;
            }
        }
    }

    /// Advances to the next effective event at or before the horizon.
    /// Tombstoned abandonment clocks are consumed silently.
    pub fn next(&mut self) -> Option<Applied> {
        loop {
            let ev = *self.heap.peek()?;
            if ev.t > self.t_end {
                return None;
            }
            self.heap.pop();
            match ev.payload {
                Payload::Arrival { class, idx } => {
                    self.schedule_arrival(class, idx + 1);
                    let kind = self.apply_arrival(class, idx, ev.t);
                    self.debug_check(ev.t);
                    return Some(Applied { t: ev.t, kind });
                }
                Payload::Abandon { class, cust } => {
                    let states = match class {
                        Class::Seller => &mut self.state_s,
                        Class::Buyer => &mut self.state_b,
                    };
                    if states[cust as usize] != CustState::Waiting {
                        continue; // tombstone
                    }
                    states[cust as usize] = CustState::Gone;
                    match class {
                        Class::Seller => {
                            self.stays_s[cust as usize].departed = ev.t;
                            self.g_s += 1;
                            self.x -= 1;
                        }
                        Class::Buyer => {
                            self.stays_b[cust as usize].departed = ev.t;
                            self.g_b += 1;
                            self.x += 1;
                        }
                    }
                    self.debug_check(ev.t);
                    return Some(Applied { t: ev.t, kind: EventKind::Abandoned(class) });
                }
            }
        }
    }

    fn apply_arrival(&mut self, class: Class, idx: u64, t: f64) -> EventKind {
        let policy = self.schedule.policy_at(t);
        match class {
            Class::Seller => {
                self.a_s += 1;
                if self.x < 0 {
                    // Match with the longest-waiting buyer.
                    let id = Self::pop_waiting(&mut self.buyers, &mut self.state_b);
                    self.stays_b[id as usize].departed = t;
                    self.x += 1;
                    EventKind::ArrivalMatched(Class::Seller)
                } else if policy.m_s.is_none_or(|m| self.x < m) {
                    let id = self.state_s.len() as u32;
                    self.state_s.push(CustState::Waiting);
                    self.stays_s.push(Stay { arrived: t, departed: f64::INFINITY });
                    self.sellers.push_back(id);
                    self.x += 1;
                    if let Some(d) = self.cfg.patience_s.sample(&self.pat_s_rng, idx) {
                        self.push(t + d, 2, Payload::Abandon { class: Class::Seller, cust: id });
                    }
                    EventKind::ArrivalAdmitted(Class::Seller)
                } else {
                    self.u_s += 1;
                    EventKind::ArrivalBlocked(Class::Seller)
                }
            }
            Class::Buyer => {
                self.a_b += 1;
                if self.x > 0 {
                    let id = Self::pop_waiting(&mut self.sellers, &mut self.state_s);
                    self.stays_s[id as usize].departed = t;
                    self.x -= 1;
                    EventKind::ArrivalMatched(Class::Buyer)
                } else if policy.m_b.is_none_or(|m| self.x > m) {
                    let id = self.state_b.len() as u32;
                    self.state_b.push(CustState::Waiting);
                    self.stays_b.push(Stay { arrived: t, departed: f64::INFINITY });
                    self.buyers.push_back(id);
                    self.x -= 1;
                    if let Some(d) = self.cfg.patience_b.sample(&self.pat_b_rng, idx) {
                        self.push(t + d, 2, Payload::Abandon { class: Class::Buyer, cust: id });
                    }
                    EventKind::ArrivalAdmitted(Class::Buyer)
                } else {
                    self.u_b += 1;
                    EventKind::ArrivalBlocked(Class::Buyer)
                }
            }
        }
    }

    /// Pathwise balance and buffer containment, checked in debug builds.
    /// Containment can break transiently under a shrinking schedule
    /// (admission control never evicts), so it is only asserted for
    /// constant policies.
    fn debug_check(&self, t: f64) {
        debug_assert_eq!(
            self.x,
            self.x0_pre + self.a_s as i64 - self.a_b as i64 - self.g_s as i64 + self.g_b as i64
                - self.u_s as i64
                + self.u_b as i64,
        );
        if self.schedule.is_constant() {
            let policy = self.schedule.policy_at(t);
            if let Some(m_b) = policy.m_b {
                debug_assert!(self.x >= m_b);
            }
            if let Some(m_s) = policy.m_s {
                debug_assert!(self.x <= m_s);
            }
        }
        #[cfg(not(debug_assertions))]
        let _ = t;
    }
}
