//! Packet-level discrete-event simulation of a placement: Poisson arrivals,
//! exponential service, finite FIFO queues. The measured latency, loss, and
//! energy cross-validate the analytical model.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::encoding::Phenotype;
use crate::qos::{queue_views, QueueView};
use crate::rng::{derive_seed, rng_from_seed};
use crate::topology::ComponentId;
use crate::workload::ProblemInstance;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Transient period discarded from every statistic.
    pub warmup_ms: f64,
    /// Measurement window; packets generated inside it form the cohort all
    /// packet statistics are computed over.
    pub measure_ms: f64,
    pub replications: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { warmup_ms: 1_000.0, measure_ms: 10_000.0, replications: 10, seed: 0 }
    }
}

/// Sample mean with a 95% confidence half-width over replications (Student t
/// on the replication means; 0 when there is a single replication).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Estimate {
        let n = samples.len();
        assert!(n >= 1, "need at least one sample");
        let mean = samples.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Estimate { mean, half_width: 0.0 };
        }
        let var =
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let half_width = t_quantile_975(n - 1) * (var / n as f64).sqrt();
        Estimate { mean, half_width }
    }

    pub fn low(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn high(&self) -> f64 {
        self.mean + self.half_width
    }
}

/// Two-sided 97.5% Student-t quantile by degrees of freedom (normal beyond
/// the table).
fn t_quantile_975(df: usize) -> f64 {
    const TABLE: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179,
        2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
        2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
    ];
    if df == 0 {
        f64::INFINITY
    } else if df <= TABLE.len() {
        TABLE[df - 1]
    } else {
        1.96
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceStats {
    pub latency_ms: Estimate,
    pub packet_loss: Estimate,
    /// Cohort totals across all replications.
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
}

/// Measured load of one component, averaged over replications.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComponentLoad {
    /// Offered packets per millisecond inside the window.
    pub arrival_rate: f64,
    /// Drops over offered arrivals.
    pub loss_probability: f64,
    /// Fraction of the window the queue was nonempty.
    pub busy_fraction: f64,
    /// Time-averaged queue length.
    pub mean_queue_len: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub services: Vec<ServiceStats>,
    /// Mean over services of per-service mean latency.
    pub latency_ms: Estimate,
    /// Mean over services of per-service loss.
    pub packet_loss: Estimate,
    pub energy_w: Estimate,
    /// Indexed by component id.
    pub component_loads: Vec<ComponentLoad>,
    pub replications: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    /// External packet generation for a service.
    Arrival { service: usize },
    /// Service completion at the head of a component's queue.
    Departure { component: ComponentId },
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // Simulation times are finite; ties resolve in schedule order.
        self.time
            .partial_cmp(&other.time)
            .expect("event times are never NaN")
            .then(self.seq.cmp(&other.seq))
    }
}

struct Packet {
    path: usize,
    hop: usize,
    generated: f64,
    cohort: bool,
    service: usize,
}

/// Per-service alias table over its routed paths.
struct PathTable {
    /// (first path index, cumulative probabilities) per service.
    per_service: Vec<(usize, Vec<f64>)>,
    paths: Vec<Vec<ComponentId>>,
}

impl PathTable {
    fn build(phenotype: &Phenotype) -> PathTable {
        let mut per_service = Vec::with_capacity(phenotype.services.len());
        let mut paths = Vec::new();
        for routing in &phenotype.services {
            let start = paths.len();
            let mut cumulative = Vec::with_capacity(routing.paths.len());
            let mut running = 0.0;
            for path in &routing.paths {
                running += path.probability;
                cumulative.push(running);
                paths.push(path.components.clone());
            }
            per_service.push((start, cumulative));
        }
        PathTable { per_service, paths }
    }

    fn sample(&self, service: usize, rng: &mut ChaCha8Rng) -> usize {
        let (start, cumulative) = &self.per_service[service];
        let u: f64 = rng.gen();
        let offset = cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1);
        start + offset
    }
}

/// Windowed time accumulator for one queue (or one server's union of
/// queues): integrates length and busy time over the measurement window.
#[derive(Debug, Clone, Copy, Default)]
struct Track {
    last: f64,
    len_integral: f64,
    busy_time: f64,
    arrivals: u64,
    drops: u64,
    seen: bool,
}

impl Track {
    /// Account the interval from the last update to `t` at occupancy `len`.
    fn advance(&mut self, t: f64, len: usize, window: (f64, f64)) {
        let lo = self.last.max(window.0);
        let hi = t.min(window.1);
        if hi > lo {
            self.len_integral += len as f64 * (hi - lo);
            if len > 0 {
                self.busy_time += hi - lo;
            }
        }
        self.last = t;
    }
}

struct Replication {
    service_latency: Vec<f64>,
    service_loss: Vec<f64>,
    generated: Vec<u64>,
    delivered: Vec<u64>,
    dropped: Vec<u64>,
    latency: f64,
    loss: f64,
    energy: f64,
    loads: Vec<ComponentLoad>,
}

fn run_replication(
    instance: &ProblemInstance,
    table: &PathTable,
    views: &[QueueView],
    config: &SimConfig,
    seed: u64,
) -> Replication {
    let topo = &instance.topology;
    let window = (config.warmup_ms, config.warmup_ms + config.measure_ms);
    let mut rng = rng_from_seed(seed);
    let mut heap: BinaryHeap<Reverse<Event>> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut schedule = |heap: &mut BinaryHeap<Reverse<Event>>, time: f64, kind: EventKind| {
        heap.push(Reverse(Event { time, seq, kind }));
        seq += 1;
    };

    let interarrival: Vec<Option<Exp<f64>>> = instance
        .services
        .iter()
        .map(|s| (s.arrival_rate > 0.0).then(|| Exp::new(s.arrival_rate).unwrap()))
        .collect();
    let service_time: Vec<Exp<f64>> = views
        .iter()
        .map(|v| Exp::new(v.service_rate.max(f64::MIN_POSITIVE)).unwrap())
        .collect();

    for (s, dist) in interarrival.iter().enumerate() {
        if let Some(d) = dist {
            let first = d.sample(&mut rng);
            if first < window.1 {
                schedule(&mut heap, first, EventKind::Arrival { service: s });
            }
        }
    }

    let mut packets: Vec<Packet> = Vec::new();
    let mut queues: Vec<VecDeque<usize>> = vec![VecDeque::new(); topo.components.len()];
    let mut comp_track: Vec<Track> = vec![Track::default(); topo.components.len()];
    let mut server_track: Vec<Track> = vec![Track::default(); topo.num_servers()];
    let mut server_active: Vec<usize> = vec![0; topo.num_servers()];
    let mut generated = vec![0u64; instance.services.len()];
    let mut delivered = vec![0u64; instance.services.len()];
    let mut dropped = vec![0u64; instance.services.len()];
    let mut latency_sum = vec![0.0f64; instance.services.len()];

    // Enqueue a packet at `component`; returns false when the full buffer
    // drops it.
    macro_rules! enqueue {
        ($component:expr, $packet:expr, $t:expr) => {{
            let c = $component;
            let len = queues[c].len();
            comp_track[c].advance($t, len, window);
            comp_track[c].seen = true;
            if ($t >= window.0) && ($t < window.1) {
                comp_track[c].arrivals += 1;
            }
            if len == views[c].buffer_len {
                comp_track[c].drops += ($t >= window.0 && $t < window.1) as u64;
                let p: &Packet = &packets[$packet];
                if p.cohort {
                    dropped[p.service] += 1;
                }
            } else {
                if len == 0 {
                    if let Some(s) = topo.server_of(c) {
                        server_track[s].advance($t, server_active[s], window);
                        server_track[s].seen = true;
                        server_active[s] += 1;
                    }
                    let hold = service_time[c].sample(&mut rng);
                    schedule(&mut heap, $t + hold, EventKind::Departure { component: c });
                }
                queues[c].push_back($packet);
            }
        }};
    }

    while let Some(Reverse(event)) = heap.pop() {
        let t = event.time;
        match event.kind {
            EventKind::Arrival { service } => {
                let next = t + interarrival[service].expect("scheduled => positive rate").sample(&mut rng);
                if next < window.1 {
                    schedule(&mut heap, next, EventKind::Arrival { service });
                }
                let cohort = t >= window.0 && t < window.1;
                if cohort {
                    generated[service] += 1;
                }
                let path = table.sample(service, &mut rng);
                packets.push(Packet { path, hop: 0, generated: t, cohort, service });
                let id = packets.len() - 1;
                let first = table.paths[path][0];
                enqueue!(first, id, t);
            }
            EventKind::Departure { component } => {
                let len = queues[component].len();
                comp_track[component].advance(t, len, window);
                let id = queues[component].pop_front().expect("departure from nonempty queue");
                if queues[component].is_empty() {
                    if let Some(s) = topo.server_of(component) {
                        server_track[s].advance(t, server_active[s], window);
                        server_active[s] -= 1;
                    }
                } else {
                    let hold = service_time[component].sample(&mut rng);
                    schedule(&mut heap, t + hold, EventKind::Departure { component });
                }
                packets[id].hop += 1;
                let path = &table.paths[packets[id].path];
                if packets[id].hop == path.len() {
                    if packets[id].cohort {
                        delivered[packets[id].service] += 1;
                        latency_sum[packets[id].service] += t - packets[id].generated;
                    }
                } else {
                    let next_component = path[packets[id].hop];
                    enqueue!(next_component, id, t);
                }
            }
        }
    }

    // Close every accumulator at the window end.
    for (c, track) in comp_track.iter_mut().enumerate() {
        let t = track.last.max(window.1);
        track.advance(t, queues[c].len(), window);
    }
    for (s, track) in server_track.iter_mut().enumerate() {
        let t = track.last.max(window.1);
        track.advance(t, server_active[s], window);
    }

    let measure = config.measure_ms;
    let loads: Vec<ComponentLoad> = comp_track
        .iter()
        .map(|track| ComponentLoad {
            arrival_rate: track.arrivals as f64 / measure,
            loss_probability: if track.arrivals > 0 {
                track.drops as f64 / track.arrivals as f64
            } else {
                0.0
            },
            busy_fraction: track.busy_time / measure,
            mean_queue_len: track.len_integral / measure,
        })
        .collect();

    let mut energy = 0.0;
    for ids in [topo.edge_switches(), topo.agg_switches(), topo.core_switches()] {
        for &c in ids {
            if !comp_track[c].seen {
                continue; // off
            }
            let u = loads[c].busy_fraction;
            let comp = &topo.components[c];
            energy += u * comp.energy_active + (1.0 - u) * comp.energy_idle;
        }
    }
    for (s, server) in topo.servers.iter().enumerate() {
        let touched = comp_track[server.vswitch].seen
            || server.vms.iter().any(|&vm| comp_track[vm].seen);
        if !touched {
            continue; // off
        }
        let u = server_track[s].busy_time / measure;
        energy += u * topo.params.server_energy_active
            + (1.0 - u) * topo.params.server_energy_idle;
    }

    let service_latency: Vec<f64> = (0..instance.services.len())
        .map(|s| {
            if delivered[s] > 0 {
                latency_sum[s] / delivered[s] as f64
            } else {
                0.0
            }
        })
        .collect();
    let service_loss: Vec<f64> = (0..instance.services.len())
        .map(|s| {
            if generated[s] > 0 {
                dropped[s] as f64 / generated[s] as f64
            } else {
                0.0
            }
        })
        .collect();
    let n = instance.services.len() as f64;
    Replication {
        latency: service_latency.iter().sum::<f64>() / n,
        loss: service_loss.iter().sum::<f64>() / n,
        energy,
        service_latency,
        service_loss,
        generated,
        delivered,
        dropped,
        loads,
    }
}

/// Simulate a placement. Each replication draws from an independent
/// substream; the result is deterministic for a given seed, and within each
/// replication every cohort packet is either delivered or dropped by the
/// time the queues drain, so the counts balance exactly.
pub fn simulate(
    instance: &ProblemInstance,
    phenotype: &Phenotype,
    config: &SimConfig,
) -> SimResult {
    assert!(config.measure_ms > 0.0, "measurement window must be positive");
    assert!(config.warmup_ms >= 0.0, "warmup cannot be negative");
    assert!(config.replications >= 1, "need at least one replication");
    let views = queue_views(instance, phenotype);
    let table = PathTable::build(phenotype);
    let reps: Vec<Replication> = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            run_replication(instance, &table, &views, config, derive_seed(config.seed, r as u64))
        })
        .collect();

    let services = (0..instance.services.len())
        .map(|s| ServiceStats {
            latency_ms: Estimate::from_samples(
                &reps.iter().map(|r| r.service_latency[s]).collect::<Vec<_>>(),
            ),
            packet_loss: Estimate::from_samples(
                &reps.iter().map(|r| r.service_loss[s]).collect::<Vec<_>>(),
            ),
            generated: reps.iter().map(|r| r.generated[s]).sum(),
            delivered: reps.iter().map(|r| r.delivered[s]).sum(),
            dropped: reps.iter().map(|r| r.dropped[s]).sum(),
        })
        .collect();

    let n_components = instance.topology.components.len();
    let n_reps = reps.len() as f64;
    let component_loads = (0..n_components)
        .map(|c| ComponentLoad {
            arrival_rate: reps.iter().map(|r| r.loads[c].arrival_rate).sum::<f64>() / n_reps,
            loss_probability: reps.iter().map(|r| r.loads[c].loss_probability).sum::<f64>()
                / n_reps,
            busy_fraction: reps.iter().map(|r| r.loads[c].busy_fraction).sum::<f64>() / n_reps,
            mean_queue_len: reps.iter().map(|r| r.loads[c].mean_queue_len).sum::<f64>()
                / n_reps,
        })
        .collect();

    SimResult {
        services,
        latency_ms: Estimate::from_samples(
            &reps.iter().map(|r| r.latency).collect::<Vec<_>>(),
        ),
        packet_loss: Estimate::from_samples(&reps.iter().map(|r| r.loss).collect::<Vec<_>>()),
        energy_w: Estimate::from_samples(&reps.iter().map(|r| r.energy).collect::<Vec<_>>()),
        component_loads,
        replications: config.replications,
    }
}
