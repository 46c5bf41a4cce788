//! `vnfpp generate`: build a fat tree, draw a random workload onto it, and
//! write the instance file.

use std::path::PathBuf;

use clap::Args;
use vnfpp::topology::{build_fat_tree, TopologyParams};
use vnfpp::workload::{generate_instance, CountOrFraction, GaussianParam, GenerationConfig};

use crate::common::{self, Failure};

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Fat-tree port count (even, at least 2); hosts k^3/4 servers
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// VM slots per server
    #[arg(long, default_value_t = 3)]
    pub vms_per_server: usize,
    /// Target fraction of VM slots used by one instance of every service
    #[arg(long, default_value_t = 0.5)]
    pub util: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (default: <out-dir>/instance-k<k>-s<seed>.toml)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,

    /// Mean service chain length
    #[arg(long, default_value_t = 5.0)]
    pub service_len_mean: f64,
    #[arg(long, default_value_t = 1.0)]
    pub service_len_sd: f64,
    /// Mean per-service arrival rate (pkts/ms)
    #[arg(long, default_value_t = 2.0)]
    pub arrival_mean: f64,
    #[arg(long, default_value_t = 0.5)]
    pub arrival_sd: f64,
    /// Mean VNF service rate (pkts/ms)
    #[arg(long, default_value_t = 10.0)]
    pub vnf_rate_mean: f64,
    #[arg(long, default_value_t = 2.0)]
    pub vnf_rate_sd: f64,
    /// Number of services flagged anti-affinity
    #[arg(long)]
    pub anti_affinity: Option<usize>,
    /// Number of VNFs given a license cap
    #[arg(long)]
    pub license_limited: Option<usize>,
    /// License cap as a fraction of the largest accommodatable instance count
    #[arg(long, default_value_t = 0.2)]
    pub license_fraction: f64,

    /// VM queue capacity in packets (default from the topology model)
    #[arg(long)]
    pub vm_buffer: Option<usize>,
    /// Physical switch rate per port, pkts/ms (applied to all three tiers)
    #[arg(long)]
    pub port_rate: Option<f64>,
    /// Physical switch buffer per port, packets (applied to all three tiers)
    #[arg(long)]
    pub port_buffer: Option<usize>,
}

pub fn run(args: GenerateArgs) -> Result<(), Failure> {
    let mut params = TopologyParams::default();
    if let Some(b) = args.vm_buffer {
        params.vm_buffer_len = b;
    }
    if let Some(r) = args.port_rate {
        params.edge.rate_per_port = r;
        params.agg.rate_per_port = r;
        params.core.rate_per_port = r;
    }
    if let Some(b) = args.port_buffer {
        params.edge.buffer_per_port = b;
        params.agg.buffer_per_port = b;
        params.core.buffer_per_port = b;
    }
    let topology = build_fat_tree(args.k, args.vms_per_server, params)
        .map_err(|e| Failure::Usage(e.to_string()))?;

    let config = GenerationConfig {
        target_utilization: args.util,
        service_length: GaussianParam::new(args.service_len_mean, args.service_len_sd),
        arrival_rate: GaussianParam::new(args.arrival_mean, args.arrival_sd),
        vnf_service_rate: GaussianParam::new(args.vnf_rate_mean, args.vnf_rate_sd),
        anti_affinity_services: args.anti_affinity.map(CountOrFraction::Count),
        license_limited_vnfs: args.license_limited.map(CountOrFraction::Count),
        license_fraction: args.license_fraction,
        ..GenerationConfig::default()
    };
    let instance = generate_instance(topology, &config, args.seed)
        .map_err(common::generation_failure)?;

    let path = match args.out {
        Some(p) => p,
        None => {
            let dir = common::resolve_out_dir(args.out_dir)?;
            dir.join(format!("instance-k{}-s{}.toml", args.k, args.seed))
        }
    };
    instance.save(&path).map_err(common::internal)?;

    println!(
        "instance: k={}, {} servers, {} VM slots, {} services, {} VNFs -> {}",
        instance.topology.k,
        instance.topology.num_servers(),
        instance.topology.num_vms(),
        instance.services.len(),
        instance.vnfs.len(),
        path.display()
    );
    Ok(())
}
