//! Single-solution placement heuristics (BFDSU, Stringer, ESP-VDCE), the
//! subproblem batches they solve, and the repair-free direct/binary
//! encodings used as representation baselines.

use std::collections::{BTreeSet, VecDeque};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::encoding::{
    instance_contribution, route, Phenotype, PlacedInstance, Placement, VnfAssignment,
};
use crate::evo::{initial_instance_count, Representation};
use crate::topology::ComponentId;
use crate::workload::{ProblemInstance, ServiceId, VnfId};

#[derive(Debug, Error)]
pub enum HeuristicError {
    #[error("reference population holds {have} solutions but {need} subproblems were requested")]
    ReferenceTooSmall { have: usize, need: usize },
    #[error("subproblem does not fit the topology: {0}")]
    Infeasible(String),
}

/// A fixed per-service instance-count target the single-solution heuristics
/// place on the topology.
#[derive(Debug, Clone)]
pub struct Subproblem<'a> {
    pub instance: &'a ProblemInstance,
    /// Instances to place, indexed by service id.
    pub counts: Vec<usize>,
}

/// Where subproblem instance counts come from.
#[derive(Debug, Clone, Copy)]
pub enum SubproblemSource<'p> {
    /// The population-seeding count gradient, lifted to at least one
    /// instance per service (a heuristic cannot repair a zero count).
    Initializer,
    /// Counts copied verbatim from already-decoded solutions.
    ReferencePopulation(&'p [Phenotype]),
}

/// Build `count` subproblems from the chosen source. Initializer-sourced
/// counts are trimmed (largest-count, lowest-value services first) until the
/// implied slot demand fits the topology, mirroring the decoder's balance
/// step.
pub fn generate_subproblems<'a>(
    instance: &'a ProblemInstance,
    count: usize,
    source: SubproblemSource<'_>,
) -> Result<Vec<Subproblem<'a>>, HeuristicError> {
    match source {
        SubproblemSource::Initializer => (1..=count)
            .map(|rank| {
                let per_service = initial_instance_count(rank, count, instance).max(1);
                let counts = fit_counts(instance, vec![per_service; instance.services.len()])?;
                Ok(Subproblem { instance, counts })
            })
            .collect(),
        SubproblemSource::ReferencePopulation(population) => {
            if population.len() < count {
                return Err(HeuristicError::ReferenceTooSmall {
                    have: population.len(),
                    need: count,
                });
            }
            Ok(population[..count]
                .iter()
                .map(|p| Subproblem { instance, counts: p.instance_counts() })
                .collect())
        }
    }
}

/// Drop the lowest-contribution instances until the slot demand (with
/// whole-server rounding for anti-affinity services) fits, never going below
/// one instance per service.
fn fit_counts(
    instance: &ProblemInstance,
    mut counts: Vec<usize>,
) -> Result<Vec<usize>, HeuristicError> {
    let capacity = instance.topology.num_vms();
    let demand = |counts: &[usize]| -> usize {
        instance
            .services
            .iter()
            .map(|s| instance.instance_slot_cost(s) * counts[s.id])
            .sum()
    };
    while demand(&counts) > capacity {
        let victim = instance
            .services
            .iter()
            .filter(|s| counts[s.id] > 1)
            .min_by(|a, b| {
                let ca = instance_contribution(
                    a.arrival_rate,
                    instance.vnfs[a.chain[0]].service_rate,
                    counts[a.id],
                );
                let cb = instance_contribution(
                    b.arrival_rate,
                    instance.vnfs[b.chain[0]].service_rate,
                    counts[b.id],
                );
                ca.partial_cmp(&cb).unwrap().then(a.id.cmp(&b.id))
            });
        match victim {
            Some(service) => counts[service.id] -= 1,
            None => {
                return Err(HeuristicError::Infeasible(
                    "one instance per service already exceeds the VM slots".into(),
                ))
            }
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeuristicKind {
    Bfdsu,
    Stringer,
    EspVdce,
}

impl HeuristicKind {
    pub const ALL: [HeuristicKind; 3] =
        [HeuristicKind::Bfdsu, HeuristicKind::Stringer, HeuristicKind::EspVdce];

    pub fn name(self) -> &'static str {
        match self {
            HeuristicKind::Bfdsu => "bfdsu",
            HeuristicKind::Stringer => "stringer",
            HeuristicKind::EspVdce => "esp-vdce",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// Place every requested instance with the chosen heuristic and route the
/// result. Outputs satisfy connectivity, capacity, and order constraints;
/// anti-affinity and licensing are outside what these heuristics manage.
pub fn solve_heuristic(
    kind: HeuristicKind,
    subproblem: &Subproblem<'_>,
    seed: u64,
) -> Result<Phenotype, HeuristicError> {
    let instance = subproblem.instance;
    assert_eq!(subproblem.counts.len(), instance.services.len());
    if subproblem.counts.iter().any(|&c| c == 0) {
        return Err(HeuristicError::Infeasible(
            "a service requests zero instances".into(),
        ));
    }
    match kind {
        HeuristicKind::Bfdsu => bfdsu(subproblem, seed),
        HeuristicKind::Stringer => stringer(subproblem),
        HeuristicKind::EspVdce => esp_vdce(subproblem),
    }
}

/// One VNF to place: a (service, instance, chain position) triple.
#[derive(Debug, Clone, Copy)]
struct PlacementJob {
    service: ServiceId,
    instance: usize,
    position: usize,
    vnf: VnfId,
}

fn jobs_in_chain_order(subproblem: &Subproblem<'_>) -> Vec<PlacementJob> {
    let mut jobs = Vec::new();
    for service in &subproblem.instance.services {
        for inst in 0..subproblem.counts[service.id] {
            for (position, &vnf) in service.chain.iter().enumerate() {
                jobs.push(PlacementJob { service: service.id, instance: inst, position, vnf });
            }
        }
    }
    jobs
}

/// Incrementally fills VM slots server by server and assembles the routed
/// phenotype at the end.
struct SlotFiller<'a> {
    instance: &'a ProblemInstance,
    assignments: Vec<Option<VnfAssignment>>,
    used: Vec<usize>,
}

impl<'a> SlotFiller<'a> {
    fn new(instance: &'a ProblemInstance) -> Self {
        SlotFiller {
            instance,
            assignments: vec![None; instance.topology.components.len()],
            used: vec![0; instance.topology.num_servers()],
        }
    }

    fn free(&self, server: usize) -> usize {
        self.instance.topology.vms_per_server - self.used[server]
    }

    /// Assign the job to the lowest free VM slot on `server`.
    fn place(&mut self, server: usize, job: PlacementJob) {
        let topo = &self.instance.topology;
        let vm = topo.servers[server]
            .vms
            .iter()
            .copied()
            .find(|&vm| self.assignments[vm].is_none())
            .expect("placing on a server with a free slot");
        self.assignments[vm] = Some(VnfAssignment {
            service: job.service,
            instance: job.instance,
            position: job.position,
            vnf: job.vnf,
        });
        self.used[server] += 1;
    }

    fn finish(self, counts: &[usize]) -> Phenotype {
        let instance = self.instance;
        let mut instances: Vec<Vec<PlacedInstance>> = instance
            .services
            .iter()
            .map(|s| {
                (0..counts[s.id])
                    .map(|_| PlacedInstance { vms: vec![usize::MAX; s.chain.len()] })
                    .collect()
            })
            .collect();
        for (vm, assignment) in self.assignments.iter().enumerate() {
            if let Some(a) = assignment {
                instances[a.service][a.instance].vms[a.position] = vm;
            }
        }
        debug_assert!(instances
            .iter()
            .flatten()
            .all(|i| i.vms.iter().all(|&vm| vm != usize::MAX)));
        let placement = Placement { instances, assignments: self.assignments };
        route(instance, &placement)
    }
}

/// Best-fit decreasing with stochastic server choice: VNFs sorted by
/// decreasing per-instance utilization, each placed on a server drawn with
/// softmax weights over negative free-slot counts (fuller servers more
/// likely). Consecutive chain VNFs are placed independently, so chains
/// scatter.
fn bfdsu(subproblem: &Subproblem<'_>, seed: u64) -> Result<Phenotype, HeuristicError> {
    let instance = subproblem.instance;
    let mut rng = crate::rng::rng_from_seed(seed);
    let mut jobs = jobs_in_chain_order(subproblem);
    let utilization = |job: &PlacementJob| {
        let service = &instance.services[job.service];
        (service.arrival_rate / subproblem.counts[job.service] as f64)
            / instance.vnfs[job.vnf].service_rate
    };
    jobs.sort_by(|a, b| {
        utilization(b)
            .partial_cmp(&utilization(a))
            .unwrap()
            .then((a.service, a.instance, a.position).cmp(&(b.service, b.instance, b.position)))
    });

    let mut filler = SlotFiller::new(instance);
    for job in jobs {
        let candidates: Vec<usize> =
            (0..instance.topology.num_servers()).filter(|&s| filler.free(s) > 0).collect();
        if candidates.is_empty() {
            return Err(HeuristicError::Infeasible(format!(
                "no free VM slot left for service {} position {}",
                job.service, job.position
            )));
        }
        let weights: Vec<f64> =
            candidates.iter().map(|&s| (-(filler.free(s) as f64)).exp()).collect();
        let pick = WeightedIndex::new(&weights).expect("softmax weights are positive");
        let server = candidates[pick.sample(&mut rng)];
        filler.place(server, job);
    }
    Ok(filler.finish(&subproblem.counts))
}

/// Round-robin under a per-server cap: each VNF goes to the next server (from
/// a rotating pointer) holding fewer than `cap` VNFs. When a VNF cannot be
/// placed, the cap rises by one and placement restarts from scratch.
fn stringer(subproblem: &Subproblem<'_>) -> Result<Phenotype, HeuristicError> {
    let instance = subproblem.instance;
    let num_servers = instance.topology.num_servers();
    let jobs = jobs_in_chain_order(subproblem);
    'cap: for cap in 1..=instance.topology.vms_per_server {
        let mut filler = SlotFiller::new(instance);
        let mut pointer = 0usize;
        for &job in &jobs {
            let found = (0..num_servers)
                .map(|offset| (pointer + offset) % num_servers)
                .find(|&s| filler.used[s] < cap);
            match found {
                Some(server) => {
                    filler.place(server, job);
                    pointer = (server + 1) % num_servers;
                }
                None => continue 'cap,
            }
        }
        return Ok(filler.finish(&subproblem.counts));
    }
    Err(HeuristicError::Infeasible(
        "per-server cap reached the slot count without fitting every VNF".into(),
    ))
}

/// Best fit restricted to the servers nearest (in switch hops) to the
/// service's already-placed VNFs; a service's first VNF goes to the tightest
/// server overall. Ties break to the lowest server id.
fn esp_vdce(subproblem: &Subproblem<'_>) -> Result<Phenotype, HeuristicError> {
    let instance = subproblem.instance;
    let topo = &instance.topology;
    let mut filler = SlotFiller::new(instance);
    let mut service_servers: Vec<BTreeSet<usize>> =
        vec![BTreeSet::new(); instance.services.len()];
    for job in jobs_in_chain_order(subproblem) {
        let candidates: Vec<usize> =
            (0..topo.num_servers()).filter(|&s| filler.free(s) > 0).collect();
        if candidates.is_empty() {
            return Err(HeuristicError::Infeasible(format!(
                "no free VM slot left for service {} position {}",
                job.service, job.position
            )));
        }
        let anchors = &service_servers[job.service];
        let pool: Vec<usize> = if anchors.is_empty() {
            candidates
        } else {
            let hop = |s: usize| anchors.iter().map(|&t| topo.server_distance(s, t)).min();
            let best = candidates.iter().filter_map(|&s| hop(s)).min().unwrap();
            candidates.into_iter().filter(|&s| hop(s) == Some(best)).collect()
        };
        let server = pool
            .into_iter()
            .min_by_key(|&s| (filler.free(s), s))
            .expect("pool is nonempty");
        filler.place(server, job);
        service_servers[job.service].insert(server);
    }
    Ok(filler.finish(&subproblem.counts))
}

/// Mean switch-hop distance between the servers hosting consecutive chain
/// positions, over all placed instances. 0 when every chain is single-VNF.
pub fn mean_adjacent_hop_distance(instance: &ProblemInstance, phenotype: &Phenotype) -> f64 {
    let topo = &instance.topology;
    let mut total = 0usize;
    let mut pairs = 0usize;
    for routing in &phenotype.services {
        for placed in &routing.instances {
            for w in placed.vms.windows(2) {
                let a = topo.server_of(w[0]).expect("chain VMs live on servers");
                let b = topo.server_of(w[1]).expect("chain VMs live on servers");
                total += topo.server_distance(a, b);
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        0.0
    } else {
        total as f64 / pairs as f64
    }
}

/// Decode a string holding one VNF id (or nothing) per VM slot, verbatim:
/// instances are assembled greedily in service order from the placed copies
/// (slots scanned in VM order), and any incomplete chain, leftover copy,
/// license overrun, or anti-affinity mix makes the whole string infeasible.
/// No repair.
pub fn decode_direct(slots: &[Option<VnfId>], instance: &ProblemInstance) -> Option<Phenotype> {
    let topo = &instance.topology;
    assert_eq!(slots.len(), topo.num_vms(), "one slot per VM");
    let mut queues: Vec<VecDeque<ComponentId>> = vec![VecDeque::new(); instance.vnfs.len()];
    for (i, slot) in slots.iter().enumerate() {
        if let Some(vnf) = slot {
            if *vnf >= instance.vnfs.len() {
                return None;
            }
            queues[*vnf].push_back(topo.vms[i]);
        }
    }
    assemble_verbatim(instance, queues)
}

/// Decode a server-by-VNF bit matrix (row-major: `server * |V| + vnf`),
/// verbatim: a set bit places one copy of the VNF on that server. Servers
/// with more set bits than VM slots are infeasible; otherwise assembly works
/// exactly like the direct string.
pub fn decode_binary(bits: &[bool], instance: &ProblemInstance) -> Option<Phenotype> {
    let topo = &instance.topology;
    let num_vnfs = instance.vnfs.len();
    assert_eq!(bits.len(), topo.num_servers() * num_vnfs, "one bit per (server, VNF)");
    let mut queues: Vec<VecDeque<ComponentId>> = vec![VecDeque::new(); num_vnfs];
    for (server_idx, server) in topo.servers.iter().enumerate() {
        let row = &bits[server_idx * num_vnfs..(server_idx + 1) * num_vnfs];
        let placed: Vec<VnfId> = (0..num_vnfs).filter(|&v| row[v]).collect();
        if placed.len() > topo.vms_per_server {
            return None;
        }
        for (slot, vnf) in placed.into_iter().enumerate() {
            queues[vnf].push_back(server.vms[slot]);
        }
    }
    assemble_verbatim(instance, queues)
}

/// Shared verbatim assembly: claim occurrences per chain position in service
/// order, reject leftovers and constraint violations, route the rest.
fn assemble_verbatim(
    instance: &ProblemInstance,
    mut queues: Vec<VecDeque<ComponentId>>,
) -> Option<Phenotype> {
    let topo = &instance.topology;
    for (vnf, queue) in queues.iter().enumerate() {
        if let Some(cap) = instance.vnfs[vnf].max_instances {
            if queue.len() > cap {
                return None;
            }
        }
    }
    let mut available: Vec<usize> = queues.iter().map(VecDeque::len).collect();
    let mut counts = vec![0usize; instance.services.len()];
    for service in &instance.services {
        let mut n = usize::MAX;
        for &vnf in &service.chain {
            n = n.min(available[vnf] / instance.chain_multiplicity(service, vnf));
        }
        if n == 0 {
            return None;
        }
        counts[service.id] = n;
        for &vnf in &service.chain {
            available[vnf] -= n;
        }
    }
    if available.iter().any(|&left| left > 0) {
        return None; // orphan copies not part of any complete chain
    }

    let mut assignments: Vec<Option<VnfAssignment>> = vec![None; topo.components.len()];
    let mut instances: Vec<Vec<PlacedInstance>> = vec![Vec::new(); instance.services.len()];
    for service in &instance.services {
        for inst in 0..counts[service.id] {
            let mut vms = Vec::with_capacity(service.chain.len());
            for (position, &vnf) in service.chain.iter().enumerate() {
                let vm = queues[vnf].pop_front().expect("counted above");
                assignments[vm] =
                    Some(VnfAssignment { service: service.id, instance: inst, position, vnf });
                vms.push(vm);
            }
            instances[service.id].push(PlacedInstance { vms });
        }
    }

    // Anti-affinity: servers hosting such a service must host nothing else.
    let mut server_services: Vec<BTreeSet<ServiceId>> =
        vec![BTreeSet::new(); topo.num_servers()];
    for (component, assignment) in assignments.iter().enumerate() {
        if let Some(a) = assignment {
            server_services[topo.server_of(component).expect("VMs live on servers")]
                .insert(a.service);
        }
    }
    for hosted in &server_services {
        if hosted.len() > 1
            && hosted.iter().any(|&s| instance.services[s].anti_affinity)
        {
            return None;
        }
    }

    let placement = Placement { instances, assignments };
    Some(route(instance, &placement))
}

/// Repair-free string of VNF ids over VM slots.
#[derive(Debug, Clone, Copy, Default)]
pub struct DirectRepresentation;

/// Repair-free server-by-VNF assignment bits.
#[derive(Debug, Clone, Copy, Default)]
pub struct BinaryRepresentation;

/// Uniform crossover over arbitrary slot types: with probability `rate` the
/// pair recombines, swapping each position with probability 1/2.
fn uniform_swap<T: Clone>(
    a: &[T],
    b: &[T],
    rate: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<T>, Vec<T>) {
    assert_eq!(a.len(), b.len());
    let mut left = a.to_vec();
    let mut right = b.to_vec();
    if rng.gen::<f64>() < rate {
        for i in 0..left.len() {
            if rng.gen::<bool>() {
                std::mem::swap(&mut left[i], &mut right[i]);
            }
        }
    }
    (left, right)
}

impl Representation for DirectRepresentation {
    type Genome = Vec<Option<VnfId>>;

    fn name(&self) -> &'static str {
        "direct"
    }

    fn genome_length(&self, instance: &ProblemInstance) -> usize {
        instance.topology.num_vms()
    }

    fn initialize(
        &self,
        instance: &ProblemInstance,
        population_size: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Self::Genome> {
        let num_vnfs = instance.vnfs.len();
        let len = self.genome_length(instance);
        (0..population_size)
            .map(|_| {
                (0..len)
                    .map(|_| {
                        let symbol = rng.gen_range(0..=num_vnfs);
                        if symbol == num_vnfs {
                            None
                        } else {
                            Some(symbol)
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn vary(
        &self,
        instance: &ProblemInstance,
        a: &Self::Genome,
        b: &Self::Genome,
        crossover_rate: f64,
        mutation_rate: f64,
        rng: &mut ChaCha8Rng,
    ) -> (Self::Genome, Self::Genome) {
        let num_vnfs = instance.vnfs.len();
        let (mut left, mut right) = uniform_swap(a, b, crossover_rate, rng);
        for child in [&mut left, &mut right] {
            for slot in child.iter_mut() {
                if rng.gen::<f64>() < mutation_rate {
                    let symbol = rng.gen_range(0..=num_vnfs);
                    *slot = if symbol == num_vnfs { None } else { Some(symbol) };
                }
            }
        }
        (left, right)
    }

    fn decode(&self, genome: &Self::Genome, instance: &ProblemInstance) -> Option<Phenotype> {
        decode_direct(genome, instance)
    }
}

impl Representation for BinaryRepresentation {
    type Genome = Vec<bool>;

    fn name(&self) -> &'static str {
        "binary"
    }

    fn genome_length(&self, instance: &ProblemInstance) -> usize {
        instance.topology.num_servers() * instance.vnfs.len()
    }

    fn initialize(
        &self,
        instance: &ProblemInstance,
        population_size: usize,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Self::Genome> {
        // Seed near one copy of every chain position so initial members at
        // least have a chance of assembling complete chains.
        let len = self.genome_length(instance);
        let density =
            (instance.total_chain_len() as f64 / len as f64).clamp(1e-6, 0.5);
        (0..population_size)
            .map(|_| (0..len).map(|_| rng.gen_bool(density)).collect())
            .collect()
    }

    fn vary(
        &self,
        _instance: &ProblemInstance,
        a: &Self::Genome,
        b: &Self::Genome,
        crossover_rate: f64,
        mutation_rate: f64,
        rng: &mut ChaCha8Rng,
    ) -> (Self::Genome, Self::Genome) {
        let (mut left, mut right) = uniform_swap(a, b, crossover_rate, rng);
        for child in [&mut left, &mut right] {
            for bit in child.iter_mut() {
                if rng.gen::<f64>() < mutation_rate {
                    *bit = !*bit;
                }
            }
        }
        (left, right)
    }

    fn decode(&self, genome: &Self::Genome, instance: &ProblemInstance) -> Option<Phenotype> {
        decode_binary(genome, instance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_seed, rng_from_seed};
    use crate::topology::{build_fat_tree, TopologyParams};
    use crate::verify::{check_phenotype, ConstraintFamily, ALL_FAMILIES, CORE_FAMILIES};
    use crate::workload::{
        feasible_fraction_upper_bound, generate_instance, GenerationConfig, Service, Vnf,
    };

    fn chain_services(chains: &[usize], arrival: f64, rate: f64) -> (Vec<Vnf>, Vec<Service>) {
        let mut vnfs = Vec::new();
        let mut services = Vec::new();
        let mut next = 0;
        for (id, &len) in chains.iter().enumerate() {
            let chain: Vec<usize> = (next..next + len).collect();
            next += len;
            services.push(Service { id, arrival_rate: arrival, chain, anti_affinity: false });
        }
        for id in 0..next {
            vnfs.push(Vnf { id, service_rate: rate, max_instances: None });
        }
        (vnfs, services)
    }

    /// 48 VM slots, 12 chain positions: the count gradient is exact.
    fn gradient_instance() -> ProblemInstance {
        let topology = build_fat_tree(4, 3, TopologyParams::default()).unwrap();
        let (vnfs, services) = chain_services(&[3, 3, 3, 3], 1.5, 10.0);
        ProblemInstance { topology, vnfs, services, seed: 0 }
    }

    #[test]
    fn initializer_subproblems_follow_the_count_gradient() {
        let instance = gradient_instance();
        let subs =
            generate_subproblems(&instance, 100, SubproblemSource::Initializer).unwrap();
        assert_eq!(subs.len(), 100);
        assert!(subs[49].counts.iter().all(|&c| c == 2));
        assert!(subs[99].counts.iter().all(|&c| c == 4));
        for s in 0..instance.services.len() {
            assert_eq!(subs[99].counts[s], 2 * subs[49].counts[s]);
        }
        // Early ranks floor to zero and get lifted to one.
        assert!(subs[0].counts.iter().all(|&c| c == 1));
        for pair in subs.windows(2) {
            for s in 0..instance.services.len() {
                assert!(pair[0].counts[s] <= pair[1].counts[s]);
            }
        }
    }

    #[test]
    fn single_subproblem_requests_at_least_one_instance_each() {
        // 16 slots over 12 chain positions: the full-rank count is
        // floor(16/12) = 1, the minimal load.
        let topology = build_fat_tree(2, 8, TopologyParams::default()).unwrap();
        let (vnfs, services) = chain_services(&[3, 3, 3, 3], 1.5, 10.0);
        let instance = ProblemInstance { topology, vnfs, services, seed: 0 };
        let subs = generate_subproblems(&instance, 1, SubproblemSource::Initializer).unwrap();
        assert_eq!(subs.len(), 1);
        assert_eq!(subs[0].counts, vec![1, 1, 1, 1]);
    }

    #[test]
    fn reference_source_copies_counts_or_errors() {
        let instance = gradient_instance();
        let sub = generate_subproblems(&instance, 3, SubproblemSource::Initializer).unwrap();
        let phenotypes: Vec<Phenotype> = sub
            .iter()
            .map(|s| solve_heuristic(HeuristicKind::EspVdce, s, 0).unwrap())
            .collect();
        let copied = generate_subproblems(
            &instance,
            3,
            SubproblemSource::ReferencePopulation(&phenotypes),
        )
        .unwrap();
        for (sub, ph) in copied.iter().zip(&phenotypes) {
            assert_eq!(sub.counts, ph.instance_counts());
        }
        let err = generate_subproblems(
            &instance,
            4,
            SubproblemSource::ReferencePopulation(&phenotypes),
        )
        .unwrap_err();
        assert!(matches!(err, HeuristicError::ReferenceTooSmall { have: 3, need: 4 }));
    }

    #[test]
    fn initializer_counts_are_trimmed_to_fit_anti_affinity_rounding() {
        // Anti-affinity rounds each instance of service 0 up to a whole
        // 3-slot server, so the raw gradient overshoots the 6 slots.
        let topology = build_fat_tree(2, 3, TopologyParams::default()).unwrap();
        let (vnfs, mut services) = chain_services(&[1, 1], 2.0, 10.0);
        services[0].anti_affinity = true;
        let instance = ProblemInstance { topology, vnfs, services, seed: 0 };
        let subs = generate_subproblems(&instance, 4, SubproblemSource::Initializer).unwrap();
        for sub in &subs {
            let demand: usize = instance
                .services
                .iter()
                .map(|s| instance.instance_slot_cost(s) * sub.counts[s.id])
                .sum();
            assert!(demand <= instance.topology.num_vms(), "counts {:?}", sub.counts);
            assert!(sub.counts.iter().all(|&c| c >= 1));
        }
    }

    #[test]
    fn all_heuristics_place_a_single_vnf_service() {
        let topology = build_fat_tree(2, 2, TopologyParams::default()).unwrap();
        let (vnfs, services) = chain_services(&[1], 3.0, 10.0);
        let instance = ProblemInstance { topology, vnfs, services, seed: 0 };
        let sub = Subproblem { instance: &instance, counts: vec![1] };
        for kind in HeuristicKind::ALL {
            let phenotype = solve_heuristic(kind, &sub, 7).unwrap();
            assert_eq!(phenotype.instance_counts(), vec![1]);
            let routing = &phenotype.services[0];
            assert_eq!(routing.paths.len(), 1);
            assert_eq!(routing.paths[0].components.len(), 1, "single-VNF path is just the VM");
            assert!((routing.paths[0].probability - 1.0).abs() < 1e-12);
            assert!(check_phenotype(&instance, &phenotype, &CORE_FAMILIES).is_empty());
        }
    }

    #[test]
    fn esp_vdce_colocates_a_chain_when_a_slot_is_free() {
        let topology = build_fat_tree(4, 3, TopologyParams::default()).unwrap();
        let (vnfs, services) = chain_services(&[2], 3.0, 10.0);
        let instance = ProblemInstance { topology, vnfs, services, seed: 0 };
        let sub = Subproblem { instance: &instance, counts: vec![1] };
        let phenotype = solve_heuristic(HeuristicKind::EspVdce, &sub, 0).unwrap();
        assert!((mean_adjacent_hop_distance(&instance, &phenotype) - 0.0).abs() < 1e-12);
        let vms = &phenotype.services[0].instances[0].vms;
        let topo = &instance.topology;
        assert_eq!(topo.server_of(vms[0]), topo.server_of(vms[1]));
    }

    #[test]
    fn stringer_spreads_round_robin_and_raises_its_cap() {
        // 4 VNFs on 2 servers x 2 slots: cap 1 fails after two placements,
        // cap 2 alternates servers.
        let topology = build_fat_tree(2, 2, TopologyParams::default()).unwrap();
        let (vnfs, services) = chain_services(&[4], 2.0, 10.0);
        let instance = ProblemInstance { topology, vnfs, services, seed: 0 };
        let sub = Subproblem { instance: &instance, counts: vec![1] };
        let phenotype = solve_heuristic(HeuristicKind::Stringer, &sub, 0).unwrap();
        let topo = &instance.topology;
        let servers: Vec<usize> = phenotype.services[0].instances[0]
            .vms
            .iter()
            .map(|&vm| topo.server_of(vm).unwrap())
            .collect();
        assert_eq!(servers, vec![0, 1, 0, 1]);
        assert!(check_phenotype(&instance, &phenotype, &CORE_FAMILIES).is_empty());
    }

    #[test]
    fn bfdsu_is_reproducible_and_spreads_chains_more_than_esp_vdce() {
        let instance = gradient_instance();
        let sub = Subproblem { instance: &instance, counts: vec![2, 2, 2, 2] };
        let a = solve_heuristic(HeuristicKind::Bfdsu, &sub, 11).unwrap();
        let b = solve_heuristic(HeuristicKind::Bfdsu, &sub, 11).unwrap();
        assert_eq!(a, b, "same seed must reproduce the placement");

        let esp = solve_heuristic(HeuristicKind::EspVdce, &sub, 0).unwrap();
        let esp_distance = mean_adjacent_hop_distance(&instance, &esp);
        let mut total = 0.0;
        for seed in 0..100 {
            let ph = solve_heuristic(HeuristicKind::Bfdsu, &sub, derive_seed(5, seed)).unwrap();
            total += mean_adjacent_hop_distance(&instance, &ph);
        }
        let bfdsu_distance = total / 100.0;
        assert!(
            bfdsu_distance >= esp_distance,
            "bfdsu {bfdsu_distance} should scatter at least as much as esp-vdce {esp_distance}"
        );
    }

    #[test]
    fn heuristic_outputs_satisfy_core_constraints() {
        let topology = build_fat_tree(4, 3, TopologyParams::default()).unwrap();
        let instance = generate_instance(topology, &GenerationConfig::default(), 61).unwrap();
        let subs = generate_subproblems(&instance, 8, SubproblemSource::Initializer).unwrap();
        for (i, sub) in subs.iter().enumerate() {
            for kind in HeuristicKind::ALL {
                let phenotype = solve_heuristic(kind, sub, derive_seed(9, i as u64)).unwrap();
                let violations = check_phenotype(&instance, &phenotype, &CORE_FAMILIES);
                assert!(violations.is_empty(), "{}: {:?}", kind.name(), violations);
            }
        }
    }

    #[test]
    fn overfull_subproblem_reports_infeasible_for_every_kind() {
        let topology = build_fat_tree(2, 1, TopologyParams::default()).unwrap();
        let (vnfs, services) = chain_services(&[1], 2.0, 10.0);
        let instance = ProblemInstance { topology, vnfs, services, seed: 0 };
        let sub = Subproblem { instance: &instance, counts: vec![3] };
        for kind in HeuristicKind::ALL {
            let err = solve_heuristic(kind, &sub, 0).unwrap_err();
            assert!(matches!(err, HeuristicError::Infeasible(_)), "{}", kind.name());
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in HeuristicKind::ALL {
            assert_eq!(HeuristicKind::from_name(kind.name()), Some(kind));
        }
        assert_eq!(HeuristicKind::from_name("nope"), None);
    }

    fn direct_string_for(instance: &ProblemInstance) -> Vec<Option<VnfId>> {
        // One complete chain per service on consecutive VMs.
        let mut slots = vec![None; instance.topology.num_vms()];
        let mut next = 0;
        for service in &instance.services {
            for &vnf in &service.chain {
                slots[next] = Some(vnf);
                next += 1;
            }
        }
        slots
    }

    #[test]
    fn direct_complete_chains_decode_feasibly() {
        let instance = gradient_instance();
        let slots = direct_string_for(&instance);
        let phenotype = decode_direct(&slots, &instance).expect("complete chains are feasible");
        assert_eq!(phenotype.instance_counts(), vec![1, 1, 1, 1]);
        assert!(check_phenotype(&instance, &phenotype, &ALL_FAMILIES).is_empty());
    }

    #[test]
    fn direct_missing_vnf_is_infeasible() {
        let instance = gradient_instance();
        let mut slots = direct_string_for(&instance);
        let drop_at = slots.iter().position(|s| *s == Some(5)).unwrap();
        slots[drop_at] = None;
        assert!(decode_direct(&slots, &instance).is_none());
    }

    #[test]
    fn direct_orphan_copy_is_infeasible() {
        let instance = gradient_instance();
        let mut slots = direct_string_for(&instance);
        // A lone extra copy of service 0's first VNF cannot join a complete
        // second chain.
        let free = slots.iter().position(Option::is_none).unwrap();
        slots[free] = Some(instance.services[0].chain[0]);
        assert!(decode_direct(&slots, &instance).is_none());
    }

    #[test]
    fn direct_two_complete_chains_make_two_instances() {
        let instance = gradient_instance();
        let mut slots = direct_string_for(&instance);
        // Append a full extra chain of service 0 on the free slots.
        let mut free: Vec<usize> =
            slots.iter().enumerate().filter(|(_, s)| s.is_none()).map(|(i, _)| i).collect();
        for &vnf in &instance.services[0].chain {
            slots[free.remove(0)] = Some(vnf);
        }
        let phenotype = decode_direct(&slots, &instance).expect("two complete chains");
        assert_eq!(phenotype.instance_counts(), vec![2, 1, 1, 1]);
        assert!(check_phenotype(&instance, &phenotype, &ALL_FAMILIES).is_empty());
    }

    #[test]
    fn direct_respects_licenses_and_anti_affinity() {
        let topology = build_fat_tree(2, 3, TopologyParams::default()).unwrap();
        let (mut vnfs, mut services) = chain_services(&[1, 1], 2.0, 10.0);
        vnfs[1].max_instances = Some(1);
        services[0].anti_affinity = true;
        let instance = ProblemInstance { topology, vnfs, services, seed: 0 };
        // Server 0 holds both services: anti-affinity mix.
        let mixed = vec![Some(0), Some(1), None, None, None, None];
        assert!(decode_direct(&mixed, &instance).is_none());
        // Separated servers: feasible.
        let split = vec![Some(0), None, None, Some(1), None, None];
        let ok = decode_direct(&split, &instance).expect("separated servers");
        assert!(check_phenotype(&instance, &ok, &ALL_FAMILIES).is_empty());
        // Two copies of the license-capped VNF: infeasible.
        let over = vec![Some(0), None, None, Some(1), Some(1), None];
        assert!(decode_direct(&over, &instance).is_none());
    }

    #[test]
    fn random_direct_strings_stay_below_the_feasibility_bound() {
        let topology = build_fat_tree(4, 3, TopologyParams::default()).unwrap();
        let instance = generate_instance(topology, &GenerationConfig::default(), 17).unwrap();
        let bound = feasible_fraction_upper_bound(
            instance.vnfs.len(),
            instance.topology.num_vms(),
        );
        let upper = 1.0 - bound.not_placeable_probability;
        let mut rng = rng_from_seed(33);
        let trials = 2_000;
        let mut feasible = 0usize;
        for _ in 0..trials {
            let slots: Vec<Option<VnfId>> = (0..instance.topology.num_vms())
                .map(|_| Some(rng.gen_range(0..instance.vnfs.len())))
                .collect();
            if decode_direct(&slots, &instance).is_some() {
                feasible += 1;
            }
        }
        let rate = feasible as f64 / trials as f64;
        assert!(
            rate <= upper + 3.0 * (upper * (1.0 - upper) / trials as f64).sqrt().max(1e-3),
            "rate {rate} exceeds bound {upper}"
        );
    }

    #[test]
    fn binary_all_zero_is_infeasible() {
        let instance = gradient_instance();
        let bits = vec![false; instance.topology.num_servers() * instance.vnfs.len()];
        assert!(decode_binary(&bits, &instance).is_none());
    }

    #[test]
    fn binary_exact_assignment_is_feasible() {
        let instance = gradient_instance();
        let num_vnfs = instance.vnfs.len();
        let mut bits = vec![false; instance.topology.num_servers() * num_vnfs];
        // Service chains on consecutive servers, one full 3-chain per server.
        for (server, service) in instance.services.iter().enumerate() {
            for &vnf in &service.chain {
                bits[server * num_vnfs + vnf] = true;
            }
        }
        let phenotype = decode_binary(&bits, &instance).expect("fits within slots");
        assert_eq!(phenotype.instance_counts(), vec![1, 1, 1, 1]);
        assert!(check_phenotype(&instance, &phenotype, &ALL_FAMILIES).is_empty());
    }

    #[test]
    fn binary_overloaded_server_is_infeasible() {
        // 4 VNFs forced onto one 3-slot server.
        let instance = gradient_instance();
        let num_vnfs = instance.vnfs.len();
        let mut bits = vec![false; instance.topology.num_servers() * num_vnfs];
        for vnf in 0..4 {
            bits[vnf] = true;
        }
        assert!(decode_binary(&bits, &instance).is_none());
    }

    #[test]
    fn binary_violates_capacity_far_more_often_than_direct() {
        // At matched expected occupancy, the direct string can never
        // overfill a server (one VNF per slot by construction) while random
        // bit matrices regularly do.
        let instance = gradient_instance();
        let topo = &instance.topology;
        let num_vnfs = instance.vnfs.len();
        let bits_len = topo.num_servers() * num_vnfs;
        let density = 0.5;
        let mut rng = rng_from_seed(8);
        let trials = 500;
        let mut binary_violations = 0usize;
        for _ in 0..trials {
            let bits: Vec<bool> = (0..bits_len).map(|_| rng.gen_bool(density)).collect();
            let overloaded = (0..topo.num_servers()).any(|s| {
                bits[s * num_vnfs..(s + 1) * num_vnfs].iter().filter(|&&b| b).count()
                    > topo.vms_per_server
            });
            if overloaded {
                binary_violations += 1;
            }
        }
        assert!(
            binary_violations as f64 / trials as f64 > 0.9,
            "dense random matrices should almost always overfill a server"
        );
        // The direct encoding structurally cannot produce that violation;
        // its decoder never rejects for capacity.
        let direct_violation_rate = 0.0;
        assert!(binary_violations as f64 / trials as f64 > direct_violation_rate);
    }

    #[test]
    fn representations_expose_consistent_metadata() {
        let instance = gradient_instance();
        let direct = DirectRepresentation;
        let binary = BinaryRepresentation;
        assert_eq!(direct.name(), "direct");
        assert_eq!(binary.name(), "binary");
        assert_eq!(direct.genome_length(&instance), 48);
        assert_eq!(binary.genome_length(&instance), 16 * 12);
        let mut rng = rng_from_seed(3);
        let pop = direct.initialize(&instance, 5, &mut rng);
        assert!(pop.iter().all(|g| g.len() == 48));
        let (l, r) = direct.vary(&instance, &pop[0], &pop[1], 0.9, 0.05, &mut rng);
        assert_eq!(l.len(), 48);
        assert_eq!(r.len(), 48);
        let bpop = binary.initialize(&instance, 5, &mut rng);
        assert!(bpop.iter().all(|g| g.len() == 192));
        let (bl, _br) = binary.vary(&instance, &bpop[0], &bpop[1], 0.9, 0.05, &mut rng);
        assert_eq!(bl.len(), 192);
    }

    #[test]
    fn verbatim_decoders_agree_with_the_constraint_checker() {
        // Any Some(phenotype) from the verbatim decoders must pass the full
        // independent checker; None is the only rejection channel.
        let topology = build_fat_tree(4, 3, TopologyParams::default()).unwrap();
        let config = GenerationConfig {
            anti_affinity_services: Some(crate::workload::CountOrFraction::Count(1)),
            license_limited_vnfs: Some(crate::workload::CountOrFraction::Count(2)),
            ..GenerationConfig::default()
        };
        let instance = generate_instance(topology, &config, 23).unwrap();
        let mut rng = rng_from_seed(14);
        let direct = DirectRepresentation;
        let mut decoded = 0usize;
        for genome in direct.initialize(&instance, 400, &mut rng) {
            if let Some(ph) = direct.decode(&genome, &instance) {
                decoded += 1;
                assert!(check_phenotype(&instance, &ph, &ALL_FAMILIES).is_empty());
            }
        }
        // Feasible strings are rare; the point is that the ones accepted
        // are genuinely clean.
        let _ = decoded;
        let binary = BinaryRepresentation;
        for genome in binary.initialize(&instance, 400, &mut rng) {
            if let Some(ph) = binary.decode(&genome, &instance) {
                assert!(check_phenotype(&instance, &ph, &ALL_FAMILIES).is_empty());
            }
        }
        let _ = ConstraintFamily::Capacity; // keep the import obviously used
    }
}
