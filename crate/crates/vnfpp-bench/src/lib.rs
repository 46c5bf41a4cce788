//! Shared fixtures for the benchmarks: deterministic instances and
//! placements at a few topology sizes.

use rand::Rng;
use vnfpp::encoding::{decode, Genotype, Phenotype};
use vnfpp::rng::rng_from_seed;
use vnfpp::topology::{build_fat_tree, TopologyParams};
use vnfpp::workload::{generate_instance, GenerationConfig, ProblemInstance};

/// A generated instance on a `k`-port fat tree with 3 VMs per server.
pub fn instance_k(k: usize, seed: u64) -> ProblemInstance {
    let topology = build_fat_tree(k, 3, TopologyParams::default()).expect("even k");
    generate_instance(topology, &GenerationConfig::default(), seed).expect("valid instance")
}

/// A uniformly random genotype (every slot draws from services + empty).
pub fn random_genotype(instance: &ProblemInstance, seed: u64) -> Genotype {
    let mut rng = rng_from_seed(seed);
    let num_services = instance.services.len();
    let slots = (0..instance.topology.num_vms())
        .map(|_| {
            let marker = rng.gen_range(0..=num_services);
            (marker < num_services).then_some(marker)
        })
        .collect();
    Genotype { slots }
}

/// A decoded random placement.
pub fn random_phenotype(instance: &ProblemInstance, seed: u64) -> Phenotype {
    decode(&random_genotype(instance, seed), instance).expect("decode is total")
}

/// A deterministic 3-objective point cloud for hypervolume benchmarks.
pub fn objective_cloud(points: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    (0..points).map(|_| (0..3).map(|_| rng.gen_range(0.0..1.0)).collect()).collect()
}
