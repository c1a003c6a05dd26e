//! Uncontrolled servers: FIFO message queues, SIP INVITE retransmissions,
//! costly rejections once saturated, and oldest-first drops when memory runs
//! out. Load is a fluid of call counts advanced in ticks of `T1`.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::metrics::{MetricsLog, MetricsRow};
use super::{arrivals, SimConfig};
use crate::network::Topology;

const EPS: f64 = 1e-9;

/// Transactions of one call batch at one hop.
#[derive(Debug, Clone)]
struct Cohort {
    origin: usize,
    dest: usize,
    server: usize,
    born: f64,
    /// Transactions this server has not answered yet.
    pending: f64,
    /// Whether the caller is still waiting.
    alive: bool,
    /// All timers have fired; reusable once no queued copy remains.
    expired: bool,
}

#[derive(Debug, Clone, Copy)]
struct Message {
    cohort: usize,
    count: f64,
}

#[derive(Debug, Clone, Copy)]
enum Event {
    Retransmit(usize),
    GiveUp(usize),
}

#[derive(Debug, Default, Clone)]
struct SlotTotals {
    offered: f64,
    admitted: f64,
    carried: f64,
    rejected: f64,
    retx: f64,
    delay_sum: f64,
    cpu: Vec<f64>,
    mem: Vec<f64>,
}

struct Model<'a> {
    config: &'a SimConfig,
    n: usize,
    dt: f64,
    /// Per-call costs in capacity-unit seconds.
    alpha: (f64, f64),
    beta: (f64, f64),
    cap: Vec<(f64, f64)>,
    cohorts: Vec<Cohort>,
    free: Vec<usize>,
    /// Queued messages that still reference each cohort.
    refs: Vec<usize>,
    queues: Vec<VecDeque<Message>>,
    queued: Vec<f64>,
    saturated: Vec<bool>,
    wheel: Vec<Vec<Event>>,
    /// Hop distance to each destination on the live topology.
    dist: Vec<Vec<usize>>,
    live: Topology,
    totals: SlotTotals,
}

impl<'a> Model<'a> {
    fn new(config: &'a SimConfig, dt: f64) -> Self {
        let n = config.n();
        let w = config.rate_window;
        let horizon = (config.timer_b / dt).ceil() as usize + 2;
        let mut m = Self {
            config,
            n,
            dt,
            alpha: (config.coeffs.alpha1 * w, config.coeffs.alpha2 * w),
            beta: (config.coeffs.beta1 * w, config.coeffs.beta2 * w),
            cap: config
                .initial_flavors
                .iter()
                .map(|&f| config.catalog.get(f).capacity_units())
                .collect(),
            cohorts: Vec::new(),
            free: Vec::new(),
            refs: Vec::new(),
            queues: vec![VecDeque::new(); n],
            queued: vec![0.0; n],
            saturated: vec![false; n],
            wheel: vec![Vec::new(); horizon],
            dist: Vec::new(),
            live: config.topology.clone(),
            totals: SlotTotals::default(),
        };
        m.set_down(&vec![false; n]);
        m.reset_totals();
        m
    }

    fn reset_totals(&mut self) {
        self.totals = SlotTotals {
            cpu: vec![0.0; self.n],
            mem: vec![0.0; self.n],
            ..SlotTotals::default()
        };
    }

    fn set_down(&mut self, down: &[bool]) {
        self.live = self.config.topology.without(down);
        self.dist = (0..self.n).map(|j| self.live.hops_from(j)).collect();
    }

    fn schedule(&mut self, tick: usize, event: Event) {
        let len = self.wheel.len();
        self.wheel[tick % len].push(event);
    }

    /// A new transaction batch reaches `server`; its first copy is queued
    /// and the sender's retransmission timers start.
    fn send(
        &mut self,
        tick: usize,
        server: usize,
        origin: usize,
        dest: usize,
        born: f64,
        count: f64,
    ) {
        if count <= EPS {
            return;
        }
        let cohort = Cohort {
            origin,
            dest,
            server,
            born,
            pending: count,
            alive: true,
            expired: false,
        };
        let id = match self.free.pop() {
            Some(id) => {
                self.cohorts[id] = cohort;
                id
            }
            None => {
                self.cohorts.push(cohort);
                self.refs.push(0);
                self.cohorts.len() - 1
            }
        };
        self.enqueue(server, Message { cohort: id, count });
        let t1 = self.config.t1;
        let mut offset = t1;
        let mut wait = t1;
        while offset < self.config.timer_b {
            self.schedule(
                tick + (offset / self.dt).round().max(1.0) as usize,
                Event::Retransmit(id),
            );
            wait *= 2.0;
            offset += wait;
        }
        self.schedule(
            tick + (self.config.timer_b / self.dt).round() as usize,
            Event::GiveUp(id),
        );
    }

    fn enqueue(&mut self, server: usize, msg: Message) {
        self.refs[msg.cohort] += 1;
        self.queued[server] += msg.count;
        self.queues[server].push_back(msg);
    }

    fn release(&mut self, id: usize) {
        self.refs[id] -= 1;
    }

    fn fire(&mut self, tick: usize, down: &[bool]) {
        let len = self.wheel.len();
        let events = std::mem::take(&mut self.wheel[tick % len]);
        for e in events {
            match e {
                Event::Retransmit(id) => {
                    let c = &self.cohorts[id];
                    if c.alive && c.pending > EPS && !down[c.server] {
                        let (server, count) = (c.server, c.pending);
                        self.totals.retx += count;
                        self.enqueue(server, Message { cohort: id, count });
                    }
                }
                Event::GiveUp(id) => {
                    let c = &mut self.cohorts[id];
                    if c.alive && c.pending > EPS {
                        self.totals.rejected += c.pending;
                    }
                    c.alive = false;
                    c.expired = true;
                    self.maybe_free(id);
                }
            }
        }
    }

    /// Cost of serving one transaction of `c` at its current server.
    fn role_cost(&self, c: &Cohort) -> (f64, f64) {
        let (a1, a2) = self.alpha;
        let (b1, b2) = self.beta;
        if c.origin == c.dest {
            (a1, b1)
        } else if c.server == c.origin || c.server == c.dest {
            (a2, b2)
        } else {
            (2.0 * a2, 2.0 * b2)
        }
    }

    fn serve(&mut self, tick: usize, l: usize) {
        let now = tick as f64 * self.dt;
        let mut budget = self.cap[l].0 * self.dt;
        let dup = self.config.baseline.duplicate_cost * self.alpha.0;
        let reject = self.config.baseline.reject_cost * self.alpha.0;
        let saturated = self.saturated[l];
        while budget > EPS {
            let Some(mut msg) = self.queues[l].pop_front() else {
                break;
            };
            let c = self.cohorts[msg.cohort].clone();
            let fresh = msg.count.min(c.pending.max(0.0));
            let (serve_cpu, serve_mem) = self.role_cost(&c);
            let fresh_cost = if saturated { reject } else { serve_cpu };
            let cost = fresh * fresh_cost + (msg.count - fresh) * dup;
            let fraction = if cost > budget { budget / cost } else { 1.0 };
            let done = msg.count * fraction;
            let done_fresh = fresh * fraction;
            budget -= cost * fraction;
            self.totals.cpu[l] += cost * fraction;
            self.queued[l] -= done;
            if fraction < 1.0 {
                msg.count -= done;
                self.queues[l].push_front(msg);
            } else {
                self.release(msg.cohort);
            }
            if done_fresh > EPS {
                self.cohorts[msg.cohort].pending -= done_fresh;
                if c.alive {
                    if saturated {
                        self.totals.rejected += done_fresh;
                    } else {
                        self.totals.mem[l] += done_fresh * serve_mem;
                        self.advance(tick, now, &c, done_fresh);
                    }
                }
            }
            if fraction >= 1.0 {
                self.maybe_free(msg.cohort);
            }
        }
        self.saturated[l] = !self.queues[l].is_empty();
    }

    fn maybe_free(&mut self, id: usize) {
        if self.refs[id] == 0 && self.cohorts[id].expired {
            self.free.push(id);
        }
    }

    /// Forward served transactions to the next hop or complete them.
    fn advance(&mut self, tick: usize, now: f64, c: &Cohort, count: f64) {
        if c.server == c.origin {
            self.totals.admitted += count;
        }
        if c.server == c.dest {
            self.totals.carried += count;
            self.totals.delay_sum += count * (now + self.dt - c.born);
            return;
        }
        let dist = &self.dist[c.dest];
        let here = dist[c.server];
        let next: Vec<usize> = self
            .live
            .neighbors(c.server)
            .filter(|&m| here != usize::MAX && dist[m] + 1 == here)
            .collect();
        if next.is_empty() {
            self.totals.rejected += count;
            return;
        }
        let share = count / next.len() as f64;
        for m in next {
            self.send(tick, m, c.origin, c.dest, c.born, share);
        }
    }

    /// Drop the oldest queued messages while memory is over capacity.
    fn enforce_memory(&mut self, l: usize) {
        let per_msg = self.config.baseline.queue_memory * self.beta.0;
        let working = self.totals.mem[l] / self.config.duty.tau;
        let allowed = ((self.cap[l].1 - working).max(0.0) / per_msg.max(EPS)).max(0.0);
        while self.queued[l] > allowed + EPS {
            let excess = self.queued[l] - allowed;
            let Some(mut msg) = self.queues[l].pop_front() else {
                break;
            };
            if msg.count > excess {
                msg.count -= excess;
                self.queued[l] -= excess;
                self.queues[l].push_front(msg);
            } else {
                self.queued[l] -= msg.count;
                self.release(msg.cohort);
                self.maybe_free(msg.cohort);
            }
        }
    }

    fn fail_server(&mut self, l: usize) {
        while let Some(msg) = self.queues[l].pop_front() {
            self.release(msg.cohort);
            let c = &mut self.cohorts[msg.cohort];
            if c.alive && c.pending > EPS {
                self.totals.rejected += c.pending;
                c.pending = 0.0;
            }
            c.alive = false;
            self.maybe_free(msg.cohort);
        }
        self.queued[l] = 0.0;
        self.saturated[l] = false;
    }
}

pub(super) fn run(config: &SimConfig) -> MetricsLog {
    let n = config.n();
    let tau = config.duty.tau;
    let ticks_per_slot = ((tau / config.t1).round() as usize).max(1);
    let dt = tau / ticks_per_slot as f64;
    let mut model = Model::new(config, dt);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut down = vec![false; n];
    let mut log = MetricsLog::default();
    let names: Vec<String> = config
        .initial_flavors
        .iter()
        .map(|&f| config.catalog.get(f).name.clone())
        .collect();
    let mem_per_msg = config.baseline.queue_memory * model.beta.0;

    for slot in 0..config.slots() {
        let t0 = slot as f64 * tau;
        let offered = arrivals(config, t0, &mut rng);
        model.reset_totals();
        let mut queue_mem = vec![0.0; n];
        for k in 0..ticks_per_slot {
            let tick = slot * ticks_per_slot + k;
            let now = tick as f64 * dt;
            let now_down: Vec<bool> = (0..n).map(|l| config.is_down(l, now)).collect();
            if now_down != down {
                for l in (0..n).filter(|&l| now_down[l] && !down[l]) {
                    model.fail_server(l);
                }
                model.set_down(&now_down);
                down = now_down;
            }
            for i in 0..n {
                for j in 0..n {
                    let count = offered[i * n + j] as f64 / ticks_per_slot as f64;
                    if count <= 0.0 {
                        continue;
                    }
                    model.totals.offered += count;
                    if down[i] {
                        model.totals.rejected += count;
                    } else {
                        model.send(tick, i, i, j, now, count);
                    }
                }
            }
            for l in (0..n).filter(|&l| !down[l]) {
                model.serve(tick, l);
                model.enforce_memory(l);
                queue_mem[l] += model.queued[l] * mem_per_msg / ticks_per_slot as f64;
            }
            // Timers fire after service: a copy answered within the tick it
            // was due is never retransmitted.
            model.fire(tick, &down);
        }
        let totals = &model.totals;
        let pct = |v: f64, cap: f64| {
            if cap > 0.0 {
                (100.0 * v / cap).min(100.0)
            } else {
                0.0
            }
        };
        let cpu: Vec<f64> = (0..n)
            .map(|l| pct(totals.cpu[l] / tau, model.cap[l].0))
            .collect();
        let mem: Vec<f64> = (0..n)
            .map(|l| pct(totals.mem[l] / tau + queue_mem[l], model.cap[l].1))
            .collect();
        let up = down.iter().filter(|&&d| !d).count().max(1) as f64;
        let mut row = MetricsRow::zero(t0, n, names.clone());
        row.offered = totals.offered;
        row.admitted = totals.admitted;
        row.carried = totals.carried;
        row.rejected = totals.rejected;
        row.retx = totals.retx;
        row.cpu_avg = (0..n).filter(|&l| !down[l]).map(|l| cpu[l]).sum::<f64>() / up;
        row.mem_avg = (0..n).filter(|&l| !down[l]).map(|l| mem[l]).sum::<f64>() / up;
        row.setup_delay_ms = if totals.carried > EPS {
            1000.0 * totals.delay_sum / totals.carried
        } else {
            0.0
        };
        row.cpu = cpu;
        row.mem = mem;
        log.rows.push(row);
    }
    log
}
