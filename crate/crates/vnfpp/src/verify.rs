//! Independent placement-constraint checker.
//!
//! `check_phenotype` re-derives every constraint directly from the topology
//! and instance definition, sharing no logic with the decoder, so decoder
//! bugs cannot hide behind their own bookkeeping. Families can be checked
//! selectively: heuristic baselines only guarantee the core ones.

use crate::encoding::Phenotype;
use crate::topology::ComponentKind;
use crate::workload::ProblemInstance;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintFamily {
    /// Paths exist, traverse only linked components, and probabilities are a
    /// distribution per service.
    Connectivity,
    /// At most one VNF per VM; assignments consistent with instances.
    Capacity,
    /// Every path visits exactly one instance's VMs in chain order.
    Order,
    /// Servers of an anti-affinity service host nothing else.
    AntiAffinity,
    /// Per-VNF instance counts stay within license budgets.
    License,
}

/// Everything; the constraint set placements must satisfy end to end.
pub const ALL_FAMILIES: &[ConstraintFamily] = &[
    ConstraintFamily::Connectivity,
    ConstraintFamily::Capacity,
    ConstraintFamily::Order,
    ConstraintFamily::AntiAffinity,
    ConstraintFamily::License,
];

/// What heuristic baselines guarantee (no anti-affinity or license support).
pub const CORE_FAMILIES: &[ConstraintFamily] = &[
    ConstraintFamily::Connectivity,
    ConstraintFamily::Capacity,
    ConstraintFamily::Order,
];

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub family: ConstraintFamily,
    pub detail: String,
}

impl Violation {
    fn new(family: ConstraintFamily, detail: String) -> Self {
        Violation { family, detail }
    }
}

pub fn check_phenotype(
    instance: &ProblemInstance,
    phenotype: &Phenotype,
    families: &[ConstraintFamily],
) -> Vec<Violation> {
    let mut out = Vec::new();
    for family in families {
        match family {
            ConstraintFamily::Connectivity => check_connectivity(instance, phenotype, &mut out),
            ConstraintFamily::Capacity => check_capacity(instance, phenotype, &mut out),
            ConstraintFamily::Order => check_order(instance, phenotype, &mut out),
            ConstraintFamily::AntiAffinity => check_anti_affinity(instance, phenotype, &mut out),
            ConstraintFamily::License => check_license(instance, phenotype, &mut out),
        }
    }
    out
}

fn check_connectivity(
    instance: &ProblemInstance,
    phenotype: &Phenotype,
    out: &mut Vec<Violation>,
) {
    let topo = &instance.topology;
    let adjacency: Vec<BTreeSet<usize>> = topo
        .links
        .iter()
        .map(|n| n.iter().copied().collect())
        .collect();
    if phenotype.services.len() != instance.services.len() {
        out.push(Violation::new(
            ConstraintFamily::Connectivity,
            format!(
                "phenotype covers {} services, instance defines {}",
                phenotype.services.len(),
                instance.services.len()
            ),
        ));
        return;
    }
    for (sid, routing) in phenotype.services.iter().enumerate() {
        if routing.instances.is_empty() {
            out.push(Violation::new(
                ConstraintFamily::Connectivity,
                format!("service {sid} has no placed instance"),
            ));
        }
        if routing.paths.is_empty() {
            out.push(Violation::new(
                ConstraintFamily::Connectivity,
                format!("service {sid} has no path"),
            ));
        }
        let total: f64 = routing.paths.iter().map(|p| p.probability).sum();
        if (total - 1.0).abs() > 1e-12 {
            out.push(Violation::new(
                ConstraintFamily::Connectivity,
                format!("service {sid} path probabilities sum to {total}"),
            ));
        }
        for (pid, path) in routing.paths.iter().enumerate() {
            if path.probability <= 0.0 {
                out.push(Violation::new(
                    ConstraintFamily::Connectivity,
                    format!("service {sid} path {pid} has probability {}", path.probability),
                ));
            }
            if path.components.is_empty() {
                out.push(Violation::new(
                    ConstraintFamily::Connectivity,
                    format!("service {sid} path {pid} is empty"),
                ));
                continue;
            }
            for pair in path.components.windows(2) {
                if !adjacency[pair[0]].contains(&pair[1]) {
                    out.push(Violation::new(
                        ConstraintFamily::Connectivity,
                        format!(
                            "service {sid} path {pid} hops over missing link {} -> {}",
                            pair[0], pair[1]
                        ),
                    ));
                }
            }
        }
    }
}

fn check_capacity(instance: &ProblemInstance, phenotype: &Phenotype, out: &mut Vec<Violation>) {
    let topo = &instance.topology;
    // Assignment map sanity: only VM components, each at most once, and in
    // exact correspondence with the placed instances.
    let mut from_instances: BTreeMap<usize, (usize, usize, usize)> = BTreeMap::new();
    for (sid, routing) in phenotype.services.iter().enumerate() {
        for (iid, placed) in routing.instances.iter().enumerate() {
            if placed.vms.len() != instance.services[sid].chain.len() {
                out.push(Violation::new(
                    ConstraintFamily::Capacity,
                    format!(
                        "service {sid} instance {iid} places {} VNFs for a chain of {}",
                        placed.vms.len(),
                        instance.services[sid].chain.len()
                    ),
                ));
            }
            for (pos, &vm) in placed.vms.iter().enumerate() {
                if topo.components[vm].kind != ComponentKind::Vm {
                    out.push(Violation::new(
                        ConstraintFamily::Capacity,
                        format!("service {sid} instance {iid} uses non-VM component {vm}"),
                    ));
                }
                if let Some(prev) = from_instances.insert(vm, (sid, iid, pos)) {
                    out.push(Violation::new(
                        ConstraintFamily::Capacity,
                        format!("VM {vm} hosts two VNFs: {prev:?} and {:?}", (sid, iid, pos)),
                    ));
                }
            }
        }
    }
    for (vm, &(sid, iid, pos)) in &from_instances {
        match phenotype.assignments.get(*vm).and_then(|a| a.as_ref()) {
            Some(a) if a.service == sid && a.instance == iid && a.position == pos => {}
            other => out.push(Violation::new(
                ConstraintFamily::Capacity,
                format!("assignment map for VM {vm} is {other:?}, instances say {:?}", (sid, iid, pos)),
            )),
        }
    }
    let assigned = phenotype
        .assignments
        .iter()
        .filter(|a| a.is_some())
        .count();
    if assigned != from_instances.len() {
        out.push(Violation::new(
            ConstraintFamily::Capacity,
            format!(
                "{assigned} assignments recorded but {} VMs used by instances",
                from_instances.len()
            ),
        ));
    }
}

fn check_order(instance: &ProblemInstance, phenotype: &Phenotype, out: &mut Vec<Violation>) {
    let topo = &instance.topology;
    for (sid, routing) in phenotype.services.iter().enumerate() {
        for (pid, path) in routing.paths.iter().enumerate() {
            let visited_vms: Vec<usize> = path
                .components
                .iter()
                .copied()
                .filter(|&c| topo.components[c].kind == ComponentKind::Vm)
                .collect();
            let Some(placed) = routing.instances.get(path.instance) else {
                out.push(Violation::new(
                    ConstraintFamily::Order,
                    format!("service {sid} path {pid} names missing instance {}", path.instance),
                ));
                continue;
            };
            if visited_vms != placed.vms {
                out.push(Violation::new(
                    ConstraintFamily::Order,
                    format!(
                        "service {sid} path {pid} visits VMs {visited_vms:?}, chain order requires {:?}",
                        placed.vms
                    ),
                ));
            }
        }
    }
}

fn check_anti_affinity(
    instance: &ProblemInstance,
    phenotype: &Phenotype,
    out: &mut Vec<Violation>,
) {
    let topo = &instance.topology;
    // Owner service per server, from the assignment map alone.
    let mut server_services: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (component, assignment) in phenotype.assignments.iter().enumerate() {
        if let Some(a) = assignment {
            if let Some(server) = topo.server_of(component) {
                server_services.entry(server).or_default().insert(a.service);
            }
        }
    }
    for (server, services) in &server_services {
        for &sid in services {
            if instance.services[sid].anti_affinity && services.len() > 1 {
                out.push(Violation::new(
                    ConstraintFamily::AntiAffinity,
                    format!(
                        "server {server} mixes anti-affinity service {sid} with {:?}",
                        services
                    ),
                ));
            }
        }
    }
}

fn check_license(instance: &ProblemInstance, phenotype: &Phenotype, out: &mut Vec<Violation>) {
    let mut used = vec![0usize; instance.vnfs.len()];
    for assignment in phenotype.assignments.iter().flatten() {
        used[assignment.vnf] += 1;
    }
    for vnf in &instance.vnfs {
        if let Some(cap) = vnf.max_instances {
            if used[vnf.id] > cap {
                out.push(Violation::new(
                    ConstraintFamily::License,
                    format!("VNF {} runs {} times, licensed for {cap}", vnf.id, used[vnf.id]),
                ));
            }
        }
    }
}
