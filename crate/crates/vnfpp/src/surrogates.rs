//! Baseline QoS models the full queueing model is compared against.
//!
//! - `mm1`: infinite buffers — waiting 1/(mu-lambda), zero loss everywhere,
//!   infinite latency once any used queue saturates.
//! - `mm1b-instant`: the finite-buffer model evaluated in a single
//!   propagation pass (losses recomputed while walking each path, no
//!   convergence loop). Exact on feedback-free placements, pessimistic on
//!   loops.
//! - `cwtpl`: constant waiting time and constant loss per visited component.
//! - `ru`: pure CPU-demand model — per-VM demand ratio drives both a unit
//!   wait and server utilization; switches are invisible to it.
//! - `plus`: structural proxy — mean physical-switch hops and used-server
//!   fraction.

use crate::encoding::Phenotype;
use crate::eval::{EvalError, Evaluator, ObjectiveVector};
use crate::qos::{
    self, queue_loss_probability, queue_views, ArrivalState,
};
use crate::workload::ProblemInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurrogateKind {
    Mm1,
    Mm1bInstant,
    Cwtpl,
    Ru,
    Plus,
}

impl SurrogateKind {
    pub fn from_name(name: &str) -> Option<SurrogateKind> {
        match name {
            "mm1" => Some(SurrogateKind::Mm1),
            "mm1b-instant" => Some(SurrogateKind::Mm1bInstant),
            "cwtpl" => Some(SurrogateKind::Cwtpl),
            "ru" => Some(SurrogateKind::Ru),
            "plus" => Some(SurrogateKind::Plus),
            _ => None,
        }
    }
}

/// Raw per-component arrival rates: every path deposits its full flow on
/// every component it visits (no loss, no attenuation).
fn raw_arrival_rates(instance: &ProblemInstance, phenotype: &Phenotype) -> Vec<f64> {
    let mut rates = vec![0.0; instance.topology.components.len()];
    qos::for_each_path_flow(instance, phenotype, |flow, components| {
        for &c in components {
            rates[c] += flow;
        }
    });
    rates
}

/// Infinite-buffer M/M/1 model: zero loss by construction; latency explodes
/// to +inf as soon as any used queue runs at or beyond its service rate.
pub fn evaluate_mm1(instance: &ProblemInstance, phenotype: &Phenotype) -> ObjectiveVector {
    let views = queue_views(instance, phenotype);
    let rates = raw_arrival_rates(instance, phenotype);
    let wait = |c: usize| -> f64 {
        if rates[c] == 0.0 {
            0.0
        } else if rates[c] >= views[c].service_rate {
            f64::INFINITY
        } else {
            1.0 / (views[c].service_rate - rates[c])
        }
    };

    let mut latency_sum = 0.0;
    for routing in &phenotype.services {
        let mut service_wait = 0.0;
        for path in &routing.paths {
            let w: f64 = path.components.iter().map(|&c| wait(c)).sum();
            service_wait += path.probability * w;
        }
        latency_sum += service_wait;
    }
    let latency = latency_sum / instance.services.len().max(1) as f64;

    // Utilization is the load ratio, clamped: a saturated queue is pinned busy.
    let topo = &instance.topology;
    let util = |c: usize| (rates[c] / views[c].service_rate).min(1.0);
    let mut energy = 0.0;
    for ids in [topo.edge_switches(), topo.agg_switches(), topo.core_switches()] {
        for &c in ids {
            if rates[c] == 0.0 {
                continue;
            }
            let u = util(c);
            let comp = &topo.components[c];
            energy += u * comp.energy_active + (1.0 - u) * comp.energy_idle;
        }
    }
    for server in &topo.servers {
        let touched =
            rates[server.vswitch] > 0.0 || server.vms.iter().any(|&vm| rates[vm] > 0.0);
        if !touched {
            continue;
        }
        let mut all_idle = 1.0 - util(server.vswitch);
        for &vm in &server.vms {
            all_idle *= 1.0 - util(vm);
        }
        let u = 1.0 - all_idle;
        energy += u * topo.params.server_energy_active + (1.0 - u) * topo.params.server_energy_idle;
    }

    ObjectiveVector {
        latency,
        loss: 0.0,
        energy,
    }
}

/// One-pass finite-buffer state: walk every path once, accumulating arrivals
/// and refreshing each component's loss as it is visited, so downstream flow
/// is attenuated by the losses seen so far.
fn instant_state(instance: &ProblemInstance, phenotype: &Phenotype) -> ArrivalState {
    let views = queue_views(instance, phenotype);
    let n = views.len();
    let mut rates = vec![0.0; n];
    let mut loss = vec![0.0; n];
    qos::for_each_path_flow(instance, phenotype, |flow, components| {
        let mut surviving = flow;
        for &c in components {
            rates[c] += surviving;
            loss[c] =
                queue_loss_probability(rates[c], views[c].service_rate, views[c].buffer_len);
            surviving *= 1.0 - loss[c];
        }
    });
    ArrivalState {
        arrival_rates: rates,
        loss_probabilities: loss,
        iterations: 1,
        last_divergence: 0.0,
    }
}

/// Finite-buffer model without the convergence loop: instantaneous rates and
/// losses from a single propagation pass, then the same latency/loss/energy
/// derivations as the converged model.
pub fn evaluate_mm1b_instant(
    instance: &ProblemInstance,
    phenotype: &Phenotype,
) -> ObjectiveVector {
    let state = instant_state(instance, phenotype);
    let count = instance.services.len().max(1) as f64;
    let latency = instance
        .services
        .iter()
        .map(|s| qos::service_latency(&state, instance, phenotype, s.id))
        .sum::<f64>()
        / count;
    let loss = instance
        .services
        .iter()
        .map(|s| qos::service_packet_loss(&state, phenotype, s.id))
        .sum::<f64>()
        / count;
    let energy = qos::total_energy(&state, instance, phenotype);
    ObjectiveVector {
        latency,
        loss,
        energy,
    }
}

/// Constant-wait/constant-loss model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CwtplParams {
    /// Waiting time charged per visited component (ms).
    pub wait_ms: f64,
    /// Drop probability charged per visited component.
    pub loss_per_hop: f64,
}

impl Default for CwtplParams {
    fn default() -> Self {
        CwtplParams {
            wait_ms: 0.1,
            loss_per_hop: 0.001,
        }
    }
}

/// Constant waiting time and loss per visited component; energy from busy
/// probabilities at rates propagated under the constant loss.
pub fn evaluate_cwtpl(
    instance: &ProblemInstance,
    phenotype: &Phenotype,
    params: &CwtplParams,
) -> ObjectiveVector {
    let count = instance.services.len().max(1) as f64;
    let mut latency_sum = 0.0;
    let mut loss_sum = 0.0;
    for routing in &phenotype.services {
        for path in &routing.paths {
            let hops = path.components.len() as f64;
            latency_sum += path.probability * hops * params.wait_ms;
            loss_sum +=
                path.probability * (1.0 - (1.0 - params.loss_per_hop).powf(hops));
        }
    }

    // Rates attenuated by the constant loss at every visited component.
    let mut rates = vec![0.0; instance.topology.components.len()];
    qos::for_each_path_flow(instance, phenotype, |flow, components| {
        let mut surviving = flow;
        for &c in components {
            rates[c] += surviving;
            surviving *= 1.0 - params.loss_per_hop;
        }
    });
    let state = ArrivalState {
        loss_probabilities: vec![params.loss_per_hop; rates.len()],
        arrival_rates: rates,
        iterations: 1,
        last_divergence: 0.0,
    };
    let energy = qos::total_energy(&state, instance, phenotype);

    ObjectiveVector {
        latency: latency_sum / count,
        loss: loss_sum / count,
        energy,
    }
}

/// Unit wait of the demand-ratio model: r/(1-r), capped at r = 0.99.
fn ru_unit_wait(ratio: f64) -> f64 {
    let r = ratio.min(0.99);
    r / (1.0 - r)
}

/// CPU-demand model: each VM's demand ratio is its hosted VNF's share of
/// arrivals over its service rate. Two objectives: latency from ratio-scaled
/// unit waits along each chain, and server energy with the demand ratio as
/// utilization. Switches carry no demand and are excluded.
pub fn evaluate_ru(instance: &ProblemInstance, phenotype: &Phenotype) -> Vec<f64> {
    let topo = &instance.topology;
    let mut demand = vec![0.0; topo.components.len()];
    for (service, routing) in instance.services.iter().zip(&phenotype.services) {
        let share = service.arrival_rate / routing.instances.len().max(1) as f64;
        for placed in &routing.instances {
            for (position, &vm) in placed.vms.iter().enumerate() {
                let rate = instance.vnfs[service.chain[position]].service_rate;
                demand[vm] += share / rate;
            }
        }
    }

    let mut latency_sum = 0.0;
    for routing in &phenotype.services {
        let instances = routing.instances.len().max(1) as f64;
        let mut per_service = 0.0;
        for placed in &routing.instances {
            per_service += placed.vms.iter().map(|&vm| ru_unit_wait(demand[vm])).sum::<f64>();
        }
        latency_sum += per_service / instances;
    }
    let latency = latency_sum / instance.services.len().max(1) as f64;

    let mut energy = 0.0;
    for server in &topo.servers {
        let hosted: Vec<f64> = server
            .vms
            .iter()
            .map(|&vm| demand[vm])
            .filter(|&d| d > 0.0)
            .collect();
        if hosted.is_empty() {
            continue; // off
        }
        let all_idle: f64 = hosted.iter().map(|&d| 1.0 - d.min(1.0)).product();
        let u = 1.0 - all_idle;
        energy += u * topo.params.server_energy_active + (1.0 - u) * topo.params.server_energy_idle;
    }

    vec![latency, energy]
}

/// Structural proxy: mean number of physical switches a packet traverses,
/// and the fraction of servers hosting at least one VNF. Ignores rates
/// entirely.
pub fn evaluate_plus(instance: &ProblemInstance, phenotype: &Phenotype) -> Vec<f64> {
    let topo = &instance.topology;
    let mut hop_sum = 0.0;
    for routing in &phenotype.services {
        for path in &routing.paths {
            let switches = path
                .components
                .iter()
                .filter(|&&c| topo.components[c].kind.is_physical_switch())
                .count() as f64;
            hop_sum += path.probability * switches;
        }
    }
    let mean_hops = hop_sum / instance.services.len().max(1) as f64;

    let used = topo
        .servers
        .iter()
        .filter(|s| s.vms.iter().any(|&vm| phenotype.assignments[vm].is_some()))
        .count() as f64;
    vec![mean_hops, used / topo.num_servers() as f64]
}

/// Dispatch by kind; parameterized kinds take their defaults.
pub fn evaluate_surrogate(
    kind: SurrogateKind,
    instance: &ProblemInstance,
    phenotype: &Phenotype,
) -> Vec<f64> {
    match kind {
        SurrogateKind::Mm1 => evaluate_mm1(instance, phenotype).to_vec(),
        SurrogateKind::Mm1bInstant => evaluate_mm1b_instant(instance, phenotype).to_vec(),
        SurrogateKind::Cwtpl => {
            evaluate_cwtpl(instance, phenotype, &CwtplParams::default()).to_vec()
        }
        SurrogateKind::Ru => evaluate_ru(instance, phenotype),
        SurrogateKind::Plus => evaluate_plus(instance, phenotype),
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Mm1Model;

impl Evaluator for Mm1Model {
    fn name(&self) -> &'static str {
        "mm1"
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
        Ok(evaluate_mm1(instance, phenotype).to_vec())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Mm1bInstantModel;

impl Evaluator for Mm1bInstantModel {
    fn name(&self) -> &'static str {
        "mm1b-instant"
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
        Ok(evaluate_mm1b_instant(instance, phenotype).to_vec())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CwtplModel {
    pub params: CwtplParams,
}

impl Evaluator for CwtplModel {
    fn name(&self) -> &'static str {
        "cwtpl"
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
        Ok(evaluate_cwtpl(instance, phenotype, &self.params).to_vec())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RuModel;

impl Evaluator for RuModel {
    fn name(&self) -> &'static str {
        "ru"
    }
    fn objective_count(&self) -> usize {
        2
    }
    fn objective_names(&self) -> Vec<&'static str> {
        vec!["latency_ms", "energy_w"]
    }
    fn evaluate(
        &self,
        instance: &ProblemInstance,
        phenotype: &Phenotype,
    ) -> Result<Vec<f64>, EvalError> {
        Ok(evaluate_ru(instance, phenotype))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PlusModel;

impl Evaluator for PlusModel {
    fn name(&self) -> &'static str {
        "plus"
    }
    fn objective_count(&self) -> usize {
        2
    }
    fn objective_names(&self) -> Vec<&'static str> {
        vec!["mean_switch_hops", "used_server_fraction"]
    }
    fn evaluate(
        &self,
        instance: &ProblemInstance,
        phenotype: &Phenotype,
    ) -> Result<Vec<f64>, EvalError> {
        Ok(evaluate_plus(instance, phenotype))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{decode, Genotype, PlacedInstance, ServicePath, ServiceRouting, VnfAssignment};
    use crate::qos::{converge_arrival_rates, evaluate_objectives, ConvergenceConfig};
    use crate::rng::rng_from_seed;
    use crate::topology::{build_fat_tree, TopologyParams};
    use crate::workload::{generate_instance, GenerationConfig, Service, Vnf};
    use proptest::prelude::*;
    use rand::Rng;

    fn chain_instance(len: usize, arrival: f64, rate: f64) -> ProblemInstance {
        let topology = build_fat_tree(4, 3, TopologyParams::default()).unwrap();
        let vnfs: Vec<Vnf> = (0..len)
            .map(|id| Vnf {
                id,
                service_rate: rate,
                max_instances: None,
            })
            .collect();
        let services = vec![Service {
            id: 0,
            arrival_rate: arrival,
            chain: (0..len).collect(),
            anti_affinity: false,
        }];
        ProblemInstance {
            topology,
            vnfs,
            services,
            seed: 0,
        }
    }

    fn single_path_phenotype(
        instance: &ProblemInstance,
        vms: Vec<usize>,
        path: Vec<usize>,
    ) -> Phenotype {
        let mut assignments = vec![None; instance.topology.components.len()];
        for (position, &vm) in vms.iter().enumerate() {
            assignments[vm] = Some(VnfAssignment {
                service: 0,
                instance: 0,
                position,
                vnf: instance.services[0].chain[position],
            });
        }
        Phenotype {
            services: vec![ServiceRouting {
                instances: vec![PlacedInstance { vms }],
                paths: vec![ServicePath {
                    probability: 1.0,
                    instance: 0,
                    components: path,
                }],
            }],
            assignments,
        }
    }

    /// Two-VNF chain across two servers under one edge switch: acyclic, no
    /// component shared between flows.
    fn cascade_pair(arrival: f64, rate: f64) -> (ProblemInstance, Phenotype) {
        let instance = chain_instance(2, arrival, rate);
        let topo = &instance.topology;
        let (a, b) = (topo.vms[0], topo.vms[3]);
        let path = vec![
            a,
            topo.servers[0].vswitch,
            topo.servers[0].edge,
            topo.servers[1].vswitch,
            b,
        ];
        let phenotype = single_path_phenotype(&instance, vec![a, b], path);
        (instance, phenotype)
    }

    /// Co-located 3-chain: the virtual switch is visited twice per packet.
    fn loop_pair() -> (ProblemInstance, Phenotype) {
        let instance = chain_instance(3, 18.0, 12.0);
        let topo = &instance.topology;
        let (a, b, c) = (topo.vms[0], topo.vms[1], topo.vms[2]);
        let vsw = topo.servers[0].vswitch;
        let phenotype =
            single_path_phenotype(&instance, vec![a, b, c], vec![a, vsw, b, vsw, c]);
        (instance, phenotype)
    }

    #[test]
    fn mm1_frozen_examples() {
        // Single queue at lambda=1, mu=2: waiting 1/(2-1) = 1 ms.
        let instance = chain_instance(1, 1.0, 2.0);
        let vm = instance.topology.vms[0];
        let phenotype = single_path_phenotype(&instance, vec![vm], vec![vm]);
        let objectives = evaluate_mm1(&instance, &phenotype);
        assert!((objectives.latency - 1.0).abs() < 1e-12);
        assert_eq!(objectives.loss, 0.0);
        assert!(objectives.energy > 0.0);

        // Saturated queue: infinite latency, still zero loss.
        let hot = chain_instance(1, 5.0, 2.0);
        let objectives = evaluate_mm1(&hot, &phenotype);
        assert!(objectives.latency.is_infinite());
        assert_eq!(objectives.loss, 0.0);
        assert!(objectives.energy.is_finite());

        // Zero traffic: everything off.
        let idle = chain_instance(1, 0.0, 2.0);
        let objectives = evaluate_mm1(&idle, &phenotype);
        assert_eq!(objectives.latency, 0.0);
        assert_eq!(objectives.loss, 0.0);
        assert_eq!(objectives.energy, 0.0);
    }

    #[test]
    fn instant_equals_converged_on_cascade() {
        let (instance, phenotype) = cascade_pair(30.0, 10.0);
        let instant = evaluate_mm1b_instant(&instance, &phenotype);
        let converged =
            evaluate_objectives(&instance, &phenotype, &ConvergenceConfig::default()).unwrap();
        assert!((instant.latency - converged.latency).abs() < 1e-9);
        assert!((instant.loss - converged.loss).abs() < 1e-9);
        assert!((instant.energy - converged.energy).abs() < 1e-9);
    }

    #[test]
    fn instant_is_pessimistic_on_loops() {
        let (instance, phenotype) = loop_pair();
        let instant = evaluate_mm1b_instant(&instance, &phenotype);
        let converged =
            evaluate_objectives(&instance, &phenotype, &ConvergenceConfig::default()).unwrap();
        assert!(
            instant.loss > converged.loss,
            "one-pass loss {} must exceed converged {}",
            instant.loss,
            converged.loss
        );
    }

    #[test]
    fn instant_zero_traffic_is_all_zero() {
        let instance = chain_instance(2, 0.0, 10.0);
        let topo = &instance.topology;
        let (a, b) = (topo.vms[0], topo.vms[1]);
        let vsw = topo.servers[0].vswitch;
        let phenotype = single_path_phenotype(&instance, vec![a, b], vec![a, vsw, b]);
        let objectives = evaluate_mm1b_instant(&instance, &phenotype);
        assert_eq!(objectives.latency, 0.0);
        assert_eq!(objectives.loss, 0.0);
        assert_eq!(objectives.energy, 0.0);
    }

    #[test]
    fn model_ordering_on_loops() {
        // Loss ordering: mm1 (zero) <= converged <= one-pass finite-buffer.
        let (instance, phenotype) = loop_pair();
        let converged =
            evaluate_objectives(&instance, &phenotype, &ConvergenceConfig::default()).unwrap();
        let instant = evaluate_mm1b_instant(&instance, &phenotype);
        let mm1 = evaluate_mm1(&instance, &phenotype);
        assert_eq!(mm1.loss, 0.0);
        assert!(converged.loss > 0.0);
        assert!(instant.loss >= converged.loss);
    }

    #[test]
    fn cwtpl_five_hop_example() {
        let (instance, phenotype) = cascade_pair(2.0, 10.0);
        let params = CwtplParams {
            wait_ms: 1.0,
            loss_per_hop: 0.001,
        };
        let objectives = evaluate_cwtpl(&instance, &phenotype, &params);
        assert!((objectives.latency - 5.0).abs() < 1e-12);
        let expected_loss = 1.0 - (1.0 - 0.001f64).powi(5);
        assert!((objectives.loss - expected_loss).abs() < 1e-12);
        assert!(objectives.energy > 0.0);
    }

    #[test]
    fn ru_demand_ratio_example() {
        // One VNF at lambda=1, mu=2: ratio 0.5, unit wait 1.0; server
        // utilization 0.5 with defaults 30/10 W -> 20 W.
        let instance = chain_instance(1, 1.0, 2.0);
        let vm = instance.topology.vms[0];
        let phenotype = single_path_phenotype(&instance, vec![vm], vec![vm]);
        let values = evaluate_ru(&instance, &phenotype);
        assert_eq!(values.len(), 2);
        assert!((values[0] - 1.0).abs() < 1e-12);
        assert!((values[1] - 20.0).abs() < 1e-12);
    }

    #[test]
    fn ru_splits_demand_over_instances() {
        let instance = chain_instance(1, 1.0, 2.0);
        let topo = &instance.topology;
        let (a, b) = (topo.vms[0], topo.vms[3]);
        let mut assignments = vec![None; topo.components.len()];
        for (i, vm) in [a, b].into_iter().enumerate() {
            assignments[vm] = Some(VnfAssignment {
                service: 0,
                instance: i,
                position: 0,
                vnf: 0,
            });
        }
        let phenotype = Phenotype {
            services: vec![ServiceRouting {
                instances: vec![PlacedInstance { vms: vec![a] }, PlacedInstance { vms: vec![b] }],
                paths: vec![
                    ServicePath {
                        probability: 0.5,
                        instance: 0,
                        components: vec![a],
                    },
                    ServicePath {
                        probability: 0.5,
                        instance: 1,
                        components: vec![b],
                    },
                ],
            }],
            assignments,
        };
        let values = evaluate_ru(&instance, &phenotype);
        // Each VM at ratio 0.25: unit wait 1/3; mean over instances 1/3.
        assert!((values[0] - 0.25f64 / 0.75).abs() < 1e-12);
    }

    #[test]
    fn plus_colocated_chain_example() {
        let instance = chain_instance(3, 2.0, 10.0);
        let topo = &instance.topology;
        let (a, b, c) = (topo.vms[0], topo.vms[1], topo.vms[2]);
        let vsw = topo.servers[0].vswitch;
        let phenotype =
            single_path_phenotype(&instance, vec![a, b, c], vec![a, vsw, b, vsw, c]);
        let values = evaluate_plus(&instance, &phenotype);
        assert_eq!(values[0], 0.0, "no physical switch on a co-located chain");
        assert!((values[1] - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn plus_counts_physical_switches() {
        let (instance, phenotype) = cascade_pair(2.0, 10.0);
        let values = evaluate_plus(&instance, &phenotype);
        assert_eq!(values[0], 1.0, "one edge switch on the path");
        assert!((values[1] - 2.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn kind_lookup_round_trips() {
        for (name, kind) in [
            ("mm1", SurrogateKind::Mm1),
            ("mm1b-instant", SurrogateKind::Mm1bInstant),
            ("cwtpl", SurrogateKind::Cwtpl),
            ("ru", SurrogateKind::Ru),
            ("plus", SurrogateKind::Plus),
        ] {
            assert_eq!(SurrogateKind::from_name(name), Some(kind));
        }
        assert_eq!(SurrogateKind::from_name("mm2"), None);
    }

    #[test]
    fn evaluator_objective_counts() {
        let models: Vec<(Box<dyn Evaluator>, usize)> = vec![
            (Box::new(Mm1Model), 3),
            (Box::new(Mm1bInstantModel), 3),
            (Box::new(CwtplModel::default()), 3),
            (Box::new(RuModel), 2),
            (Box::new(PlusModel), 2),
        ];
        let (instance, phenotype) = cascade_pair(2.0, 10.0);
        for (model, count) in models {
            assert_eq!(model.objective_count(), count);
            assert_eq!(model.objective_names().len(), count);
            let values = model.evaluate(&instance, &phenotype).unwrap();
            assert_eq!(values.len(), count);
        }
    }

    #[test]
    fn mm1_never_reports_loss_on_random_placements() {
        let topology = build_fat_tree(4, 3, TopologyParams::default()).unwrap();
        let instance = generate_instance(topology, &GenerationConfig::default(), 31).unwrap();
        let mut rng = rng_from_seed(9);
        for _ in 0..30 {
            let g = Genotype {
                slots: (0..48)
                    .map(|_| {
                        let x: usize = rng.gen_range(0..=instance.services.len());
                        (x < instance.services.len()).then_some(x)
                    })
                    .collect(),
            };
            let phenotype = decode(&g, &instance).unwrap();
            let objectives = evaluate_mm1(&instance, &phenotype);
            assert_eq!(objectives.loss, 0.0);
        }
    }

    #[test]
    fn plus_ignores_arrival_scale() {
        let topology = build_fat_tree(4, 3, TopologyParams::default()).unwrap();
        let instance = generate_instance(topology, &GenerationConfig::default(), 13).unwrap();
        let mut g = Genotype::empty(48);
        g.slots[5] = Some(0);
        let phenotype = decode(&g, &instance).unwrap();
        let base = evaluate_plus(&instance, &phenotype);
        let mut scaled = instance.clone();
        for s in &mut scaled.services {
            s.arrival_rate *= 7.5;
        }
        assert_eq!(base, evaluate_plus(&scaled, &phenotype));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// One pass equals the converged fixed point on feedback-free,
        /// share-free paths across a wide load range.
        #[test]
        fn instant_matches_converged_on_acyclic(arrival in 0.5f64..60.0, rate in 4.0f64..40.0) {
            let (instance, phenotype) = cascade_pair(arrival, rate);
            let instant = evaluate_mm1b_instant(&instance, &phenotype);
            let converged =
                evaluate_objectives(&instance, &phenotype, &ConvergenceConfig::default()).unwrap();
            prop_assert!((instant.latency - converged.latency).abs() < 1e-9);
            prop_assert!((instant.loss - converged.loss).abs() < 1e-9);
            prop_assert!((instant.energy - converged.energy).abs() < 1e-9);
        }
    }

    #[test]
    fn converged_state_is_reused_consistently() {
        // The instant state and a tight-delta converged state agree on the
        // cascade even componentwise.
        let (instance, phenotype) = cascade_pair(30.0, 10.0);
        let instant = instant_state(&instance, &phenotype);
        let converged = converge_arrival_rates(
            &instance,
            &phenotype,
            &ConvergenceConfig {
                delta: 1e-9,
                patience: 5,
                max_iterations: 100_000,
            },
        )
        .unwrap();
        for c in 0..instant.arrival_rates.len() {
            assert!((instant.arrival_rates[c] - converged.arrival_rates[c]).abs() < 1e-9);
        }
    }
}
