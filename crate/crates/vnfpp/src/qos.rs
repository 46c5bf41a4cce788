//! Analytical QoS model: a network of finite-buffer M/M/1/B queues.
//!
//! Every component (VM, virtual switch, physical switch) is one queue with
//! Poisson arrivals and exponential service. Closed forms give per-queue
//! loss, expected length, and busy probability. Because routes can revisit a
//! component (a chain co-located behind one switch sends it traffic whose
//! loss feeds back into that same traffic), per-component arrival rates are
//! found by fixed-point iteration whose successive iterates bracket the
//! answer from above and below; the reported rate is the mean of the last
//! two iterates, which lands exactly on the fixed point for feedback-free
//! placements.

use crate::encoding::Phenotype;
use crate::eval::{EvalError, Evaluator, ObjectiveVector};
use crate::topology::ComponentId;
use crate::workload::{ProblemInstance, ServiceId};
use thiserror::Error;

/// Loads this close to rho = 1 evaluate the geometric stationary
/// distribution by direct summation: the closed forms divide two quantities
/// that each vanish at rho = 1 and lose too many digits to cancellation.
const CRITICAL_BAND: f64 = 1e-3;

/// (p0, p_B, expected length) of the B+1-state geometric stationary
/// distribution p_k proportional to rho^k, by direct summation.
fn stationary_moments(rho: f64, buffer: usize) -> (f64, f64, f64) {
    let mut term = 1.0; // rho^k
    let mut total = 0.0;
    let mut weighted = 0.0;
    for k in 0..=buffer {
        total += term;
        weighted += k as f64 * term;
        if k < buffer {
            term *= rho;
        }
    }
    (1.0 / total, term / total, weighted / total)
}

/// Drop probability of an M/M/1/B queue (B counts the packet in service).
pub fn queue_loss_probability(lambda: f64, mu: f64, buffer: usize) -> f64 {
    debug_assert!(mu > 0.0 && buffer >= 1 && lambda >= 0.0);
    if lambda == 0.0 {
        return 0.0;
    }
    let rho = lambda / mu;
    let b = buffer as i32;
    if rho == 1.0 {
        1.0 / (buffer as f64 + 1.0)
    } else if (rho - 1.0).abs() < CRITICAL_BAND {
        stationary_moments(rho, buffer).1
    } else if rho < 1.0 {
        (1.0 - rho) * rho.powi(b) / (1.0 - rho.powi(b + 1))
    } else {
        // Equivalent form in q = 1/rho, immune to rho^B overflow.
        let q = mu / lambda;
        (1.0 - q) / (1.0 - q.powi(b + 1))
    }
}

/// Expected number of packets in an M/M/1/B queue (waiting + in service).
pub fn queue_expected_length(lambda: f64, mu: f64, buffer: usize) -> f64 {
    debug_assert!(mu > 0.0 && buffer >= 1 && lambda >= 0.0);
    if lambda == 0.0 {
        return 0.0;
    }
    let rho = lambda / mu;
    let b = buffer as f64;
    if rho == 1.0 {
        b / 2.0
    } else if (rho - 1.0).abs() < CRITICAL_BAND {
        stationary_moments(rho, buffer).2
    } else if rho < 1.0 {
        let rb = rho.powi(buffer as i32);
        rho * (1.0 - (b + 1.0) * rb + b * rb * rho)
            / ((1.0 - rho) * (1.0 - rb * rho))
    } else {
        // Scale numerator and denominator by rho^-(B+1) to avoid overflow.
        let q = mu / lambda;
        let qb1 = q.powi(buffer as i32 + 1);
        rho * (qb1 - (b + 1.0) * q + b) / ((1.0 - rho) * (qb1 - 1.0))
    }
}

/// Probability the queue is serving at least one packet; 0 for an idle
/// component. This is 1 - p0 of the stationary distribution, so energy can
/// weight active power by it.
pub fn queue_busy_probability(lambda: f64, mu: f64, buffer: usize) -> f64 {
    debug_assert!(mu > 0.0 && buffer >= 1 && lambda >= 0.0);
    if lambda == 0.0 {
        return 0.0;
    }
    let rho = lambda / mu;
    let b = buffer as i32;
    let p0 = if rho == 1.0 {
        1.0 / (buffer as f64 + 1.0)
    } else if (rho - 1.0).abs() < CRITICAL_BAND {
        stationary_moments(rho, buffer).0
    } else if rho < 1.0 {
        (1.0 - rho) / (1.0 - rho.powi(b + 1))
    } else {
        let q = mu / lambda;
        let qb1 = q.powi(b + 1);
        (1.0 - rho) * qb1 / (qb1 - 1.0)
    };
    1.0 - p0
}

/// Mean sojourn time at one queue: expected length over the effective
/// (accepted) arrival rate. Zero for an idle component.
pub fn component_waiting_time(lambda: f64, mu: f64, buffer: usize) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let loss = queue_loss_probability(lambda, mu, buffer);
    queue_expected_length(lambda, mu, buffer) / (lambda * (1.0 - loss))
}

/// Effective queue parameters of one component under a placement: VM slots
/// take their hosted VNF's service rate, everything else keeps the rate the
/// topology assigned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueView {
    pub service_rate: f64,
    pub buffer_len: usize,
}

/// Per-component queue parameters for a placement, indexed by component id.
pub fn queue_views(instance: &ProblemInstance, phenotype: &Phenotype) -> Vec<QueueView> {
    instance
        .topology
        .components
        .iter()
        .map(|c| QueueView {
            service_rate: phenotype
                .vm_service_rate(c.id, instance)
                .unwrap_or(c.service_rate),
            buffer_len: c.buffer_len,
        })
        .collect()
}

/// Visit every (flow, component sequence) pair of a placement: one entry per
/// routed path, with flow = service arrival rate x path probability.
pub(crate) fn for_each_path_flow(
    instance: &ProblemInstance,
    phenotype: &Phenotype,
    mut visit: impl FnMut(f64, &[ComponentId]),
) {
    for (service, routing) in instance.services.iter().zip(&phenotype.services) {
        for path in &routing.paths {
            visit(service.arrival_rate * path.probability, &path.components);
        }
    }
}

/// Converged per-component traffic under a placement.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalState {
    /// Fixed-point arrival rate per component (pkts/ms).
    pub arrival_rates: Vec<f64>,
    /// Drop probability per component at the converged rate.
    pub loss_probabilities: Vec<f64>,
    /// Iterations actually run.
    pub iterations: u32,
    /// Largest per-component shift of the tracked mean in the last iteration.
    pub last_divergence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceConfig {
    /// Absolute rate tolerance (pkts/ms) the tracked mean must stay under.
    pub delta: f64,
    /// Consecutive quiet iterations required before accepting convergence.
    pub patience: u32,
    pub max_iterations: u32,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            delta: 5.0,
            patience: 10,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum QosError {
    #[error(
        "arrival rates did not converge in {iterations} iterations \
         (divergence {last_divergence}, tolerance {delta})"
    )]
    NonConvergence {
        iterations: u32,
        last_divergence: f64,
        delta: f64,
        /// Best estimate at the cap, for diagnostics.
        state: Box<ArrivalState>,
    },
}

/// Fixed-point iteration for per-component arrival rates.
///
/// Starting from zero loss everywhere, each iteration re-propagates every
/// path's flow attenuated by the previous iteration's losses, then refreshes
/// the losses. The iterates alternate as upper/lower bounds around the fixed
/// point, so the tracked output is the mean of the last two iterates; the
/// iteration stops once that mean moves less than `delta` on every component
/// for `patience` consecutive iterations.
pub fn converge_arrival_rates(
    instance: &ProblemInstance,
    phenotype: &Phenotype,
    config: &ConvergenceConfig,
) -> Result<ArrivalState, QosError> {
    converge_arrival_rates_observed(instance, phenotype, config, |_, _, _| {})
}

/// [`converge_arrival_rates`] with a per-iteration observer receiving
/// `(iteration, raw iterate, tracked mean)`, for convergence diagnostics.
pub fn converge_arrival_rates_observed(
    instance: &ProblemInstance,
    phenotype: &Phenotype,
    config: &ConvergenceConfig,
    mut observer: impl FnMut(u32, &[f64], &[f64]),
) -> Result<ArrivalState, QosError> {
    assert!(config.delta > 0.0, "delta must be positive");
    assert!(config.patience >= 1, "patience must be at least 1");
    assert!(config.max_iterations >= 1);
    let views = queue_views(instance, phenotype);
    let n = views.len();

    let mut loss = vec![0.0; n];
    let mut previous = vec![0.0; n];
    let mut current = vec![0.0; n];
    let mut mean = vec![0.0; n];
    let mut quiet_streak = 0u32;
    let mut divergence = f64::INFINITY;

    for iteration in 1..=config.max_iterations {
        current.iter_mut().for_each(|x| *x = 0.0);
        for_each_path_flow(instance, phenotype, |flow, components| {
            let mut surviving = flow;
            for &c in components {
                current[c] += surviving;
                surviving *= 1.0 - loss[c];
            }
        });

        divergence = 0.0;
        for c in 0..n {
            let next_mean = if iteration == 1 {
                current[c]
            } else {
                0.5 * (current[c] + previous[c])
            };
            divergence = divergence.max((next_mean - mean[c]).abs());
            mean[c] = next_mean;
        }
        for c in 0..n {
            loss[c] = queue_loss_probability(current[c], views[c].service_rate, views[c].buffer_len);
        }
        std::mem::swap(&mut previous, &mut current);
        observer(iteration, &previous, &mean);

        if divergence < config.delta {
            quiet_streak += 1;
            if quiet_streak >= config.patience {
                let loss_probabilities: Vec<f64> = (0..n)
                    .map(|c| {
                        queue_loss_probability(mean[c], views[c].service_rate, views[c].buffer_len)
                    })
                    .collect();
                return Ok(ArrivalState {
                    arrival_rates: mean,
                    loss_probabilities,
                    iterations: iteration,
                    last_divergence: divergence,
                });
            }
        } else {
            quiet_streak = 0;
        }
    }

    let loss_probabilities: Vec<f64> = (0..n)
        .map(|c| queue_loss_probability(mean[c], views[c].service_rate, views[c].buffer_len))
        .collect();
    Err(QosError::NonConvergence {
        iterations: config.max_iterations,
        last_divergence: divergence,
        delta: config.delta,
        state: Box::new(ArrivalState {
            arrival_rates: mean,
            loss_probabilities,
            iterations: config.max_iterations,
            last_divergence: divergence,
        }),
    })
}

/// Probability a packet of the service is dropped anywhere along its route.
pub fn service_packet_loss(
    state: &ArrivalState,
    phenotype: &Phenotype,
    service: ServiceId,
) -> f64 {
    phenotype.services[service]
        .paths
        .iter()
        .map(|path| {
            let survive: f64 = path
                .components
                .iter()
                .map(|&c| 1.0 - state.loss_probabilities[c])
                .product();
            path.probability * (1.0 - survive)
        })
        .sum()
}

/// Expected end-to-end sojourn time (ms) of the service over its paths. A
/// component revisited by one path is waited at once per visit.
pub fn service_latency(
    state: &ArrivalState,
    instance: &ProblemInstance,
    phenotype: &Phenotype,
    service: ServiceId,
) -> f64 {
    let views = queue_views(instance, phenotype);
    service_latency_with_views(state, &views, phenotype, service)
}

fn service_latency_with_views(
    state: &ArrivalState,
    views: &[QueueView],
    phenotype: &Phenotype,
    service: ServiceId,
) -> f64 {
    phenotype.services[service]
        .paths
        .iter()
        .map(|path| {
            let wait: f64 = path
                .components
                .iter()
                .map(|&c| {
                    component_waiting_time(
                        state.arrival_rates[c],
                        views[c].service_rate,
                        views[c].buffer_len,
                    )
                })
                .sum();
            path.probability * wait
        })
        .sum()
}

/// Total power draw (W) of switches and servers under the three-state model:
/// idle components draw idle power, busy ones scale toward active power, and
/// components with no traffic at all are off and draw nothing. VMs are not
/// billed separately — their activity rolls up into their server.
pub fn total_energy(
    state: &ArrivalState,
    instance: &ProblemInstance,
    phenotype: &Phenotype,
) -> f64 {
    let topo = &instance.topology;
    let views = queue_views(instance, phenotype);
    let busy = |c: ComponentId| {
        queue_busy_probability(
            state.arrival_rates[c],
            views[c].service_rate,
            views[c].buffer_len,
        )
    };

    let mut energy = 0.0;
    for ids in [topo.edge_switches(), topo.agg_switches(), topo.core_switches()] {
        for &c in ids {
            if state.arrival_rates[c] == 0.0 {
                continue; // off
            }
            let u = busy(c);
            let comp = &topo.components[c];
            energy += u * comp.energy_active + (1.0 - u) * comp.energy_idle;
        }
    }
    for server in &topo.servers {
        let touched = state.arrival_rates[server.vswitch] > 0.0
            || server.vms.iter().any(|&vm| state.arrival_rates[vm] > 0.0);
        if !touched {
            continue; // off
        }
        let mut all_idle = 1.0 - busy(server.vswitch);
        for &vm in &server.vms {
            all_idle *= 1.0 - busy(vm);
        }
        let u = 1.0 - all_idle;
        energy += u * topo.params.server_energy_active + (1.0 - u) * topo.params.server_energy_idle;
    }
    energy
}

/// Score a placement on the three objectives: mean service latency, mean
/// service packet loss, and total energy, all from one converged state.
pub fn evaluate_objectives(
    instance: &ProblemInstance,
    phenotype: &Phenotype,
    config: &ConvergenceConfig,
) -> Result<ObjectiveVector, QosError> {
    let state = converge_arrival_rates(instance, phenotype, config)?;
    let views = queue_views(instance, phenotype);
    let count = instance.services.len() as f64;
    let latency = instance
        .services
        .iter()
        .map(|s| service_latency_with_views(&state, &views, phenotype, s.id))
        .sum::<f64>()
        / count;
    let loss = instance
        .services
        .iter()
        .map(|s| service_packet_loss(&state, phenotype, s.id))
        .sum::<f64>()
        / count;
    let energy = total_energy(&state, instance, phenotype);
    Ok(ObjectiveVector {
        latency,
        loss,
        energy,
    })
}

/// The feedback-aware queueing model as a pluggable evaluator.
#[derive(Debug, Clone, Default)]
pub struct ProposedModel {
    pub config: ConvergenceConfig,
}

impl Evaluator for ProposedModel {
    fn name(&self) -> &'static str {
        "proposed"
    }

    fn objective_count(&self) -> usize {
        3
    }

    fn objective_names(&self) -> Vec<&'static str> {
        vec!["latency_ms", "packet_loss", "energy_w"]
    }

    fn evaluate(
        &self,
        instance: &ProblemInstance,
        phenotype: &Phenotype,
    ) -> Result<Vec<f64>, EvalError> {
        Ok(evaluate_objectives(instance, phenotype, &self.config)?.to_vec())
    }
}
