//! Genotype-phenotype placement encoding.
//!
//! A genotype holds one slot per VM (in server-major order); each slot either
//! carries a service marker or is empty. Decoding repairs the marker multiset
//! (`balance`), turns each marker into a concrete chain placement (`place`),
//! and derives equal-cost routes with selection probabilities (`route`). The
//! three steps guarantee that *any* genotype decodes into a placement that
//! satisfies connectivity, capacity, chain order, anti-affinity, and license
//! constraints, so search never has to reason about feasibility.

use crate::topology::ComponentId;
use crate::workload::{ProblemInstance, ServiceId, VnfId};
use thiserror::Error;

/// One candidate solution: a service marker (or nothing) per VM slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Genotype {
    pub slots: Vec<Option<ServiceId>>,
}

impl Genotype {
    pub fn empty(num_slots: usize) -> Self {
        Genotype {
            slots: vec![None; num_slots],
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    fn marker_counts(&self, num_services: usize) -> Vec<usize> {
        let mut counts = vec![0usize; num_services];
        for slot in self.slots.iter().flatten() {
            counts[*slot] += 1;
        }
        counts
    }
}

/// A VNF instance pinned to a VM slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VnfAssignment {
    pub service: ServiceId,
    /// Index of the service instance this VNF belongs to.
    pub instance: usize,
    /// Chain position within the service.
    pub position: usize,
    pub vnf: VnfId,
}

/// One placed instance of a service: the VM hosting each chain position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacedInstance {
    pub vms: Vec<ComponentId>,
}

/// One equal-cost route through an instance, with its selection probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ServicePath {
    pub probability: f64,
    /// Instance this path serves (index into the service's instance list).
    pub instance: usize,
    /// Component sequence from the first VNF's VM to the last VNF's VM. A
    /// component revisited by the route appears once per visit.
    pub components: Vec<ComponentId>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ServiceRouting {
    pub instances: Vec<PlacedInstance>,
    pub paths: Vec<ServicePath>,
}

/// A decoded placement: concrete instances, routes, and the VM assignment map.
#[derive(Debug, Clone, PartialEq)]
pub struct Phenotype {
    /// Indexed by service id.
    pub services: Vec<ServiceRouting>,
    /// Indexed by component id; `Some` only on VM slots hosting a VNF.
    pub assignments: Vec<Option<VnfAssignment>>,
}

impl Phenotype {
    pub fn assignment(&self, vm: ComponentId) -> Option<&VnfAssignment> {
        self.assignments[vm].as_ref()
    }

    /// Service rate of the queue running on `vm` (the hosted VNF's rate).
    pub fn vm_service_rate(&self, vm: ComponentId, instance: &ProblemInstance) -> Option<f64> {
        self.assignments[vm]
            .as_ref()
            .map(|a| instance.vnfs[a.vnf].service_rate)
    }

    /// Per-service placed instance counts (used to seed heuristics).
    pub fn instance_counts(&self) -> Vec<usize> {
        self.services.iter().map(|s| s.instances.len()).collect()
    }
}

#[derive(Debug, Error)]
pub enum DecodeError {
    /// The instance itself cannot host one instance of every service; decode
    /// is total for instances that pass [`ProblemInstance::validate`].
    #[error("instance is infeasible for decoding: {0}")]
    Infeasible(String),
}

/// Marginal utilization gain of the `count`-th instance of a service whose
/// first VNF processes at `first_vnf_rate`: splitting the same arrivals over
/// `count` instances instead of `count - 1` relieves the first VNF by
/// `lambda/(mu*(count-1)) - lambda/(mu*count)`. A sole instance has infinite
/// contribution and is never removed.
pub fn instance_contribution(arrival_rate: f64, first_vnf_rate: f64, count: usize) -> f64 {
    if count <= 1 {
        return f64::INFINITY;
    }
    let n = count as f64;
    arrival_rate / (first_vnf_rate * (n - 1.0)) - arrival_rate / (first_vnf_rate * n)
}

/// Repair a genotype's marker multiset so that every service has at least
/// one marker and the implied VM demand (anti-affinity instances rounded up
/// to whole servers) fits the data center. Removal picks the instance with
/// the lowest marginal contribution, recomputing candidates after each
/// removal; missing services go to the lowest free slot. Idempotent.
pub fn balance(genotype: &Genotype, instance: &ProblemInstance) -> Result<Genotype, DecodeError> {
    assert_eq!(
        genotype.len(),
        instance.topology.num_vms(),
        "genotype length must match the VM slot count"
    );
    let capacity = instance.topology.num_vms();
    let costs: Vec<usize> = instance
        .services
        .iter()
        .map(|s| instance.instance_slot_cost(s))
        .collect();

    let mut slots = genotype.slots.clone();
    let mut counts = genotype.marker_counts(instance.services.len());
    let mut demand: usize = counts.iter().zip(&costs).map(|(c, k)| c * k).sum();

    // Removing one marker of the cheapest-to-lose service. Only services
    // with at least two markers qualify; the last marker never goes.
    let remove_lowest_contribution = |slots: &mut Vec<Option<ServiceId>>,
                                      counts: &mut Vec<usize>,
                                      demand: &mut usize|
     -> bool {
        let victim = instance
            .services
            .iter()
            .filter(|s| counts[s.id] >= 2)
            .map(|s| {
                let first_rate = instance.vnfs[s.chain[0]].service_rate;
                (
                    instance_contribution(s.arrival_rate, first_rate, counts[s.id]),
                    s.id,
                )
            })
            .min_by(|a, b| a.partial_cmp(b).expect("finite contributions"));
        let Some((_, victim)) = victim else {
            return false;
        };
        // Clear the victim's last marker so earlier markers keep their slots.
        let slot = slots
            .iter()
            .rposition(|s| *s == Some(victim))
            .expect("marker count said there is one");
        slots[slot] = None;
        counts[victim] -= 1;
        *demand -= costs[victim];
        true
    };

    // Give every missing service one marker, clearing room if needed.
    for service in &instance.services {
        if counts[service.id] > 0 {
            continue;
        }
        loop {
            let free = slots.iter().position(|s| s.is_none());
            if let Some(slot) = free {
                if demand + costs[service.id] <= capacity {
                    slots[slot] = Some(service.id);
                    counts[service.id] += 1;
                    demand += costs[service.id];
                    break;
                }
            }
            if !remove_lowest_contribution(&mut slots, &mut counts, &mut demand) {
                return Err(DecodeError::Infeasible(format!(
                    "cannot free room for one instance of service {}",
                    service.id
                )));
            }
        }
    }

    // Trim whatever still exceeds the expansion budget.
    while demand > capacity {
        if !remove_lowest_contribution(&mut slots, &mut counts, &mut demand) {
            return Err(DecodeError::Infeasible(
                "single instances of all services exceed capacity".into(),
            ));
        }
    }

    Ok(Genotype { slots })
}

/// Output of [`place`]: concrete chain placements plus the assignment map.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    /// Placed instances per service id, in marker order.
    pub instances: Vec<Vec<PlacedInstance>>,
    pub assignments: Vec<Option<VnfAssignment>>,
}

struct ServerState {
    used: usize,
    /// Anti-affinity reservation: (service, instance marker ordinal).
    reserved_by: Option<(ServiceId, usize)>,
}

/// Place every marker of a balanced genotype. Anti-affinity instances go
/// first, each confined to whole servers reserved for it; every chain VNF
/// lands on the nearest allowed free VM (hop distance, ties to the lower VM
/// id) starting from the marker's VM and then from the previous VNF's VM.
/// Instances of a service whose license budget is exhausted are dropped, as
/// long as one full instance remains.
pub fn place(balanced: &Genotype, instance: &ProblemInstance) -> Result<Placement, DecodeError> {
    let topo = &instance.topology;
    let mut assignments: Vec<Option<VnfAssignment>> = vec![None; topo.components.len()];
    let mut servers: Vec<ServerState> = (0..topo.num_servers())
        .map(|_| ServerState {
            used: 0,
            reserved_by: None,
        })
        .collect();
    let mut license_used = vec![0usize; instance.vnfs.len()];
    let mut placed: Vec<Vec<PlacedInstance>> = vec![Vec::new(); instance.services.len()];

    // Marker list in slot order, anti-affinity services first. The ordinal
    // tags reservations so one anti-affinity instance never leaks into
    // another's servers.
    let mut markers: Vec<(ServiceId, ComponentId, usize)> = Vec::new();
    for anti in [true, false] {
        for (slot, s) in balanced.slots.iter().enumerate() {
            if let Some(sid) = *s {
                if instance.services[sid].anti_affinity == anti {
                    markers.push((sid, topo.vms[slot], markers.len()));
                }
            }
        }
    }

    for (sid, marker_vm, ordinal) in markers {
        let service = &instance.services[sid];

        // License pre-check for the whole chain, so an instance never fails
        // half placed.
        let budget_ok = service.chain.iter().all(|&v| {
            instance.vnfs[v]
                .max_instances
                .map(|cap| license_used[v] + instance.chain_multiplicity(service, v) <= cap)
                .unwrap_or(true)
        });
        if !budget_ok {
            if !placed[sid].is_empty() {
                continue; // drop this instance, keep the earlier ones
            }
            return Err(DecodeError::Infeasible(format!(
                "license budget cannot host one instance of service {sid}"
            )));
        }

        let mut vms = Vec::with_capacity(service.len());
        let mut start = marker_vm;
        for (position, &vnf) in service.chain.iter().enumerate() {
            let candidate = nearest_allowed_vm(instance, start, |vm| {
                if assignments[vm].is_some() {
                    return false;
                }
                let server = topo.server_of(vm).expect("vm id");
                let state = &servers[server];
                if service.anti_affinity {
                    match state.reserved_by {
                        Some(owner) => owner == (sid, ordinal),
                        // A fresh server must be entirely unused.
                        None => state.used == 0,
                    }
                } else {
                    state.reserved_by.is_none()
                }
            });
            let Some(vm) = candidate else {
                return Err(DecodeError::Infeasible(format!(
                    "no feasible VM for position {position} of service {sid}"
                )));
            };
            let server = topo.server_of(vm).expect("vm id");
            if service.anti_affinity {
                servers[server].reserved_by = Some((sid, ordinal));
            }
            servers[server].used += 1;
            assignments[vm] = Some(VnfAssignment {
                service: sid,
                instance: placed[sid].len(),
                position,
                vnf,
            });
            license_used[vnf] += 1;
            vms.push(vm);
            start = vm;
        }
        placed[sid].push(PlacedInstance { vms });
    }

    Ok(Placement {
        instances: placed,
        assignments,
    })
}

/// Nearest VM to `start` (by hop distance, ties to the lower VM id) passing
/// the `allowed` filter. Includes `start` itself at distance zero.
fn nearest_allowed_vm(
    instance: &ProblemInstance,
    start: ComponentId,
    allowed: impl Fn(ComponentId) -> bool,
) -> Option<ComponentId> {
    let topo = &instance.topology;
    let mut best: Option<(usize, ComponentId)> = None;
    for &vm in &topo.vms {
        if !allowed(vm) {
            continue;
        }
        let key = (topo.vm_distance(start, vm), vm);
        if best.map(|b| key < b).unwrap_or(true) {
            best = Some(key);
        }
    }
    best.map(|(_, vm)| vm)
}

/// Build equal-cost routes for every placed instance. Each chain segment
/// splits uniformly over its shortest paths and instances split the service's
/// traffic uniformly, so a full path's probability is the product of its
/// segment shares divided by the instance count.
pub fn route(instance: &ProblemInstance, placement: &Placement) -> Phenotype {
    let topo = &instance.topology;
    let mut services = Vec::with_capacity(instance.services.len());
    for service in &instance.services {
        let instances = &placement.instances[service.id];
        let share = 1.0 / instances.len() as f64;
        let mut paths = Vec::new();
        for (idx, placed) in instances.iter().enumerate() {
            // Partial routes through the chain so far.
            let mut partial: Vec<(f64, Vec<ComponentId>)> =
                vec![(share, vec![placed.vms[0]])];
            for window in placed.vms.windows(2) {
                let options = topo.shortest_paths(window[0], window[1]);
                let split = 1.0 / options.len() as f64;
                let mut next = Vec::with_capacity(partial.len() * options.len());
                for (prob, comps) in &partial {
                    for option in &options {
                        let mut extended = comps.clone();
                        extended.extend_from_slice(&option[1..]);
                        next.push((prob * split, extended));
                    }
                }
                partial = next;
            }
            for (probability, components) in partial {
                paths.push(ServicePath {
                    probability,
                    instance: idx,
                    components,
                });
            }
        }
        debug_assert!(
            (paths.iter().map(|p| p.probability).sum::<f64>() - 1.0).abs() < 1e-12,
            "service {} path probabilities must sum to 1",
            service.id
        );
        services.push(ServiceRouting {
            instances: instances.clone(),
            paths,
        });
    }
    Phenotype {
        services,
        assignments: placement.assignments.clone(),
    }
}

/// Full decode: balance, place, route. Total and deterministic for any
/// genotype on a validated instance.
pub fn decode(genotype: &Genotype, instance: &ProblemInstance) -> Result<Phenotype, DecodeError> {
    let balanced = balance(genotype, instance)?;
    let placement = place(&balanced, instance)?;
    Ok(route(instance, &placement))
}

/// Human-readable placement report: per-service instance table (which VM
/// hosts each chain position) and path table with selection probabilities.
pub fn placement_report(instance: &ProblemInstance, phenotype: &Phenotype) -> String {
    use std::fmt::Write;
    let topo = &instance.topology;
    let mut out = String::new();
    for (sid, routing) in phenotype.services.iter().enumerate() {
        let service = &instance.services[sid];
        let chain: Vec<String> = service.chain.iter().map(|v| format!("vnf{v}")).collect();
        writeln!(
            out,
            "service {sid}: rate {} pkts/ms, chain [{}]{}",
            service.arrival_rate,
            chain.join(" -> "),
            if service.anti_affinity { ", anti-affinity" } else { "" }
        )
        .unwrap();
        for (i, placed) in routing.instances.iter().enumerate() {
            let vms: Vec<String> =
                placed.vms.iter().map(|&vm| topo.component_label(vm)).collect();
            writeln!(out, "  instance {i}: {}", vms.join(" -> ")).unwrap();
        }
        for path in &routing.paths {
            let hops: Vec<String> =
                path.components.iter().map(|&c| topo.component_label(c)).collect();
            writeln!(
                out,
                "  path (instance {}, p={:.6}): {}",
                path.instance,
                path.probability,
                hops.join(" -> ")
            )
            .unwrap();
        }
    }
    out
}
