//! Problem instances: the VNF catalog, service chains, and their parameters,
//! plus seeded random instance generation and a versioned on-disk format.
//!
//! An instance file is a single TOML document (sections may appear in any
//! order) carrying the topology parameters, the VNF catalog, the services,
//! and any placement constraints. `version` guards against reading files
//! written by an incompatible tool.

use crate::rng::rng_from_seed;
use crate::topology::{build_fat_tree, Topology, TopologyError, TopologyParams};
use rand::seq::index::sample as index_sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub type ServiceId = usize;
pub type VnfId = usize;

/// Current instance file version.
pub const FILE_VERSION: u32 = 1;

/// One VNF type in the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vnf {
    pub id: VnfId,
    /// Packets per millisecond an instance of this VNF can process.
    pub service_rate: f64,
    /// License cap: maximum number of placed instances, if limited.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_instances: Option<usize>,
}

/// A service: a chain of VNFs traversed in order by its traffic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Service {
    pub id: ServiceId,
    /// Packets per millisecond offered to the service.
    pub arrival_rate: f64,
    /// VNF ids in traversal order.
    pub chain: Vec<VnfId>,
    /// If set, servers hosting this service's VNFs must host nothing else.
    #[serde(default)]
    pub anti_affinity: bool,
}

impl Service {
    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }
}

/// A full problem: where to place which services in which data center.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub topology: Topology,
    pub vnfs: Vec<Vnf>,
    pub services: Vec<Service>,
    /// Seed the instance was generated from (provenance only).
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("unsupported instance file version {0} (this tool reads version {FILE_VERSION})")]
    UnsupportedVersion(u32),
    #[error("instance file parse error: {0}")]
    Parse(String),
    #[error("invalid instance: {0}")]
    Validation(String),
    #[error("invalid generation parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl ProblemInstance {
    /// VM slots an instance of `service` consumes. Anti-affinity instances
    /// claim whole servers, so their chain length rounds up to full servers.
    pub fn instance_slot_cost(&self, service: &Service) -> usize {
        let per_server = self.topology.vms_per_server;
        if service.anti_affinity {
            service.len().div_ceil(per_server) * per_server
        } else {
            service.len()
        }
    }

    /// Slots needed to place one instance of every service.
    pub fn single_instance_demand(&self) -> usize {
        self.services.iter().map(|s| self.instance_slot_cost(s)).sum()
    }

    /// Sum of all chain lengths (the `sum |s|` term in instance sizing).
    pub fn total_chain_len(&self) -> usize {
        self.services.iter().map(Service::len).sum()
    }

    /// How many times `vnf` appears in `service`'s chain.
    pub fn chain_multiplicity(&self, service: &Service, vnf: VnfId) -> usize {
        service.chain.iter().filter(|&&v| v == vnf).count()
    }

    /// Referential integrity and basic feasibility. An instance that fails
    /// here cannot be placed by any strategy and is rejected at load time.
    pub fn validate(&self) -> Result<(), InstanceError> {
        for (i, v) in self.vnfs.iter().enumerate() {
            if v.id != i {
                return Err(InstanceError::Validation(format!(
                    "vnf ids must be dense and ordered; found id {} at position {i}",
                    v.id
                )));
            }
            if !(v.service_rate > 0.0) || !v.service_rate.is_finite() {
                return Err(InstanceError::Validation(format!(
                    "vnf {} needs a positive finite service rate, got {}",
                    v.id, v.service_rate
                )));
            }
            if v.max_instances == Some(0) {
                return Err(InstanceError::Validation(format!(
                    "vnf {} has a zero license cap; it could never be placed",
                    v.id
                )));
            }
        }
        if self.services.is_empty() {
            return Err(InstanceError::Validation("instance has no services".into()));
        }
        for (i, s) in self.services.iter().enumerate() {
            if s.id != i {
                return Err(InstanceError::Validation(format!(
                    "service ids must be dense and ordered; found id {} at position {i}",
                    s.id
                )));
            }
            if s.chain.is_empty() {
                return Err(InstanceError::Validation(format!("service {} has an empty chain", s.id)));
            }
            if !(s.arrival_rate >= 0.0) || !s.arrival_rate.is_finite() {
                return Err(InstanceError::Validation(format!(
                    "service {} needs a non-negative finite arrival rate, got {}",
                    s.id, s.arrival_rate
                )));
            }
            for &v in &s.chain {
                if v >= self.vnfs.len() {
                    return Err(InstanceError::Validation(format!(
                        "service {} references unknown vnf {v}",
                        s.id
                    )));
                }
            }
            // One instance of the service must fit under each license cap.
            for &v in &s.chain {
                if let Some(cap) = self.vnfs[v].max_instances {
                    let need = self.chain_multiplicity(s, v);
                    if need > cap {
                        return Err(InstanceError::Validation(format!(
                            "service {} needs {need} instances of vnf {v} per chain but its license cap is {cap}",
                            s.id
                        )));
                    }
                }
            }
        }
        let demand = self.single_instance_demand();
        let capacity = self.topology.num_vms();
        if demand > capacity {
            return Err(InstanceError::Validation(format!(
                "one instance of every service needs {demand} VM slots but the data center has {capacity}"
            )));
        }
        Ok(())
    }

    pub fn to_toml_string(&self) -> String {
        let file = InstanceFile {
            version: FILE_VERSION,
            seed: self.seed,
            topology: TopologySection {
                k: self.topology.k,
                vms_per_server: self.topology.vms_per_server,
                params: self.topology.params,
            },
            vnfs: self.vnfs.clone(),
            services: self.services.clone(),
        };
        toml::to_string_pretty(&file).expect("instance serialization cannot fail")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, InstanceError> {
        // Check the version tag first so a future format fails with a clear
        // error rather than a missing-field parse error.
        let probe: VersionProbe =
            toml::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;
        if probe.version != FILE_VERSION {
            return Err(InstanceError::UnsupportedVersion(probe.version));
        }
        let file: InstanceFile =
            toml::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;
        let topology = build_fat_tree(
            file.topology.k,
            file.topology.vms_per_server,
            file.topology.params,
        )?;
        let instance = ProblemInstance {
            topology,
            vnfs: file.vnfs,
            services: file.services,
            seed: file.seed,
        };
        instance.validate()?;
        Ok(instance)
    }

    pub fn save(&self, path: &Path) -> Result<(), InstanceError> {
        std::fs::write(path, self.to_toml_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, InstanceError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }
}

#[derive(Deserialize)]
struct VersionProbe {
    #[serde(default)]
    version: u32,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    version: u32,
    seed: u64,
    topology: TopologySection,
    vnfs: Vec<Vnf>,
    services: Vec<Service>,
}

#[derive(Serialize, Deserialize)]
struct TopologySection {
    k: usize,
    vms_per_server: usize,
    params: TopologyParams,
}

/// Per-VNF placement probability and its complement for the whole catalog
/// under the independence assumption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacementBound {
    /// Probability that one given VNF lands somewhere when every VM slot
    /// picks uniformly among the catalog.
    pub placement_probability: f64,
    /// Probability that at least one VNF is missing, treating VNFs as
    /// independent. The complement upper-bounds the true feasible fraction.
    pub not_placeable_probability: f64,
}

/// Upper bound on the fraction of random direct assignments that are
/// feasible: `P^p = 1 - (1 - 1/|V|)^N` per VNF and `P^not = 1 - (P^p)^|V|`
/// overall. The independence assumption makes this an upper bound on the
/// true feasible fraction.
pub fn feasible_fraction_upper_bound(num_vnfs: usize, num_vms: usize) -> PlacementBound {
    assert!(num_vnfs >= 1 && num_vms >= 1, "need at least one VNF and one VM");
    let v = num_vnfs as f64;
    let placement = 1.0 - (1.0 - 1.0 / v).powi(num_vms as i32);
    PlacementBound {
        placement_probability: placement,
        not_placeable_probability: 1.0 - placement.powi(num_vnfs as i32),
    }
}

/// Mean/standard deviation of a truncated Gaussian parameter. Samples below
/// `mean * floor_fraction` are clamped up to that floor, so rates and
/// lengths stay positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParam {
    pub mean: f64,
    pub sd: f64,
}

impl GaussianParam {
    pub fn new(mean: f64, sd: f64) -> Self {
        GaussianParam { mean, sd }
    }

    fn sample<R: Rng>(&self, floor_fraction: f64, rng: &mut R) -> f64 {
        let dist = Normal::new(self.mean, self.sd).expect("finite gaussian parameters");
        let floor = self.mean * floor_fraction;
        dist.sample(rng).max(floor)
    }
}

/// Absolute count or fraction of a population, for constraint options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CountOrFraction {
    Count(usize),
    Fraction(f64),
}

impl CountOrFraction {
    pub fn resolve(&self, total: usize) -> usize {
        match *self {
            CountOrFraction::Count(c) => c.min(total),
            CountOrFraction::Fraction(f) => ((f * total as f64).round() as usize).min(total),
        }
    }
}

/// Generation profile. The distribution defaults (chain length N(5,1),
/// arrival rate N(2,0.5) packets/ms, VNF rate N(10,2) packets/ms) are
/// configuration defaults for desk-scale experiments; override them to match
/// a measured workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    /// Target fraction of VM slots occupied by one instance of each service.
    pub target_utilization: f64,
    pub service_length: GaussianParam,
    pub arrival_rate: GaussianParam,
    pub vnf_service_rate: GaussianParam,
    /// Fraction of the mean below which Gaussian samples are clamped.
    pub truncation_floor: f64,
    /// How many services get the anti-affinity flag.
    pub anti_affinity_services: Option<CountOrFraction>,
    /// How many VNFs get a license cap.
    pub license_limited_vnfs: Option<CountOrFraction>,
    /// License cap as a fraction of the most instances of any service that
    /// could be accommodated at once.
    pub license_fraction: f64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            target_utilization: 0.5,
            service_length: GaussianParam::new(5.0, 1.0),
            arrival_rate: GaussianParam::new(2.0, 0.5),
            vnf_service_rate: GaussianParam::new(10.0, 2.0),
            truncation_floor: 0.1,
            anti_affinity_services: None,
            license_limited_vnfs: None,
            license_fraction: 0.2,
        }
    }
}

/// Generate a random problem instance on `topology`. The service count is
/// `ceil(target_utilization * num_vms / mean_chain_len)`; chains, arrival
/// rates, and VNF rates are drawn from the configured truncated Gaussians.
/// Deterministic for a given seed.
pub fn generate_instance(
    topology: Topology,
    config: &GenerationConfig,
    seed: u64,
) -> Result<ProblemInstance, InstanceError> {
    if !(config.target_utilization > 0.0 && config.target_utilization <= 1.0) {
        return Err(InstanceError::InvalidParameter(format!(
            "target_utilization must be in (0, 1], got {}",
            config.target_utilization
        )));
    }
    if config.service_length.mean < 1.0 {
        return Err(InstanceError::InvalidParameter(
            "mean service length must be at least 1".into(),
        ));
    }
    let num_vms = topology.num_vms();
    let num_services = ((config.target_utilization * num_vms as f64)
        / config.service_length.mean)
        .ceil() as usize;
    let num_services = num_services.max(1);

    let mut rng = rng_from_seed(seed);
    let min_len = (config.service_length.mean * config.truncation_floor).round().max(1.0) as usize;

    // Chain lengths are resampled as a whole if one instance of every
    // service cannot fit; with utilization <= 1 this converges quickly.
    const MAX_ATTEMPTS: usize = 1000;
    let mut lengths = Vec::new();
    let mut fits = false;
    for _ in 0..MAX_ATTEMPTS {
        lengths = (0..num_services)
            .map(|_| {
                (config
                    .service_length
                    .sample(config.truncation_floor, &mut rng)
                    .round() as usize)
                    .max(min_len)
            })
            .collect();
        if lengths.iter().sum::<usize>() <= num_vms {
            fits = true;
            break;
        }
    }
    if !fits {
        return Err(InstanceError::InvalidParameter(format!(
            "cannot fit {num_services} services into {num_vms} VM slots; lower target_utilization or shorten chains"
        )));
    }

    let mut vnfs = Vec::new();
    let mut services = Vec::new();
    for (sid, &len) in lengths.iter().enumerate() {
        let mut chain = Vec::with_capacity(len);
        for _ in 0..len {
            let id = vnfs.len();
            vnfs.push(Vnf {
                id,
                service_rate: config.vnf_service_rate.sample(config.truncation_floor, &mut rng),
                max_instances: None,
            });
            chain.push(id);
        }
        services.push(Service {
            id: sid,
            arrival_rate: config.arrival_rate.sample(config.truncation_floor, &mut rng),
            chain,
            anti_affinity: false,
        });
    }

    if let Some(opt) = config.anti_affinity_services {
        let n = opt.resolve(services.len());
        for idx in index_sample(&mut rng, services.len(), n) {
            services[idx].anti_affinity = true;
        }
    }
    if let Some(opt) = config.license_limited_vnfs {
        if !(config.license_fraction > 0.0 && config.license_fraction <= 1.0) {
            return Err(InstanceError::InvalidParameter(format!(
                "license_fraction must be in (0, 1], got {}",
                config.license_fraction
            )));
        }
        let total_len: usize = lengths.iter().sum();
        // Most instances of any single service that could run at once.
        let max_accommodatable = (num_vms / total_len).max(1);
        let cap = ((config.license_fraction * max_accommodatable as f64).floor() as usize).max(1);
        let n = opt.resolve(vnfs.len());
        for idx in index_sample(&mut rng, vnfs.len(), n) {
            vnfs[idx].max_instances = Some(cap);
        }
    }

    let instance = ProblemInstance {
        topology,
        vnfs,
        services,
        seed,
    };
    // Anti-affinity rounding can push demand past capacity even when raw
    // chain lengths fit; surface that as a generation error.
    instance.validate().map_err(|e| match e {
        InstanceError::Validation(msg) => InstanceError::InvalidParameter(msg),
        other => other,
    })?;
    Ok(instance)
}
