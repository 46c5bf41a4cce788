//! Fat-tree data center model.
//!
//! A `k`-port fat tree (k even) has `k` pods. Each pod holds `k/2` edge and
//! `k/2` aggregation switches, each edge switch connects `k/2` servers, and
//! `(k/2)^2` core switches join the pods, giving `k^3/4` servers in total.
//! Every server hosts one virtual switch and a fixed number of VM slots; VMs
//! reach the network only through their server's virtual switch.
//!
//! Each component is a single finite-buffer queue. Physical switches
//! aggregate their ports: a `k`-port switch gets `k x` the configured
//! per-port service rate and buffer. Virtual switches are a single queue
//! with their own rate and buffer. VM slots carry a placeholder rate; the
//! queue that actually runs on a VM takes the service rate of whichever VNF
//! is placed there.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index into [`Topology::components`].
pub type ComponentId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComponentKind {
    Vm,
    VirtualSwitch,
    EdgeSwitch,
    AggSwitch,
    CoreSwitch,
}

impl ComponentKind {
    /// Physical network switches (edge/aggregation/core), the components that
    /// draw their own power. Virtual switches and VMs are part of a server.
    pub fn is_physical_switch(self) -> bool {
        matches!(
            self,
            ComponentKind::EdgeSwitch | ComponentKind::AggSwitch | ComponentKind::CoreSwitch
        )
    }
}

/// One queueing station in the data center.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub id: ComponentId,
    pub kind: ComponentKind,
    /// Packets per millisecond. For physical switches this is already the
    /// port-aggregated rate. For VM slots it is a placeholder; evaluation
    /// uses the hosted VNF's rate instead.
    pub service_rate: f64,
    /// Queue capacity in packets, including the one in service.
    pub buffer_len: usize,
    /// Power draw (watts) when busy / idle. Zero for VM slots, whose power is
    /// accounted at server level.
    pub energy_active: f64,
    pub energy_idle: f64,
}

/// Where a component sits in the tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Vm { server: usize, slot: usize },
    VirtualSwitch { server: usize },
    EdgeSwitch { pod: usize, index: usize },
    AggSwitch { pod: usize, index: usize },
    /// Core `(group, member)`: group `g` cores connect to aggregation switch
    /// `g` of every pod.
    CoreSwitch { group: usize, member: usize },
}

/// A physical server: one virtual switch plus its VM slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Server {
    pub index: usize,
    pub pod: usize,
    /// Edge switch position within the pod.
    pub edge_index: usize,
    pub edge: ComponentId,
    pub vswitch: ComponentId,
    pub vms: Vec<ComponentId>,
}

/// Per-port parameters for a physical switch tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortParams {
    pub rate_per_port: f64,
    pub buffer_per_port: usize,
    pub energy_active: f64,
    pub energy_idle: f64,
}

/// Parameters for a single-queue component (virtual switch).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueParams {
    pub service_rate: f64,
    pub buffer_len: usize,
}

/// All tunables needed to build a topology. The defaults mirror a commodity
/// setup: 20 packets/ms and a 20-packet buffer per port, a virtual switch
/// equivalent to one physical port, and a uniform 30 W active / 10 W idle
/// power draw for every powered component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologyParams {
    pub edge: PortParams,
    pub agg: PortParams,
    pub core: PortParams,
    pub vswitch: QueueParams,
    /// Buffer for the queue of any VNF hosted on a VM slot.
    pub vm_buffer_len: usize,
    pub server_energy_active: f64,
    pub server_energy_idle: f64,
}

impl Default for TopologyParams {
    fn default() -> Self {
        let port = PortParams {
            rate_per_port: 20.0,
            buffer_per_port: 20,
            energy_active: 30.0,
            energy_idle: 10.0,
        };
        TopologyParams {
            edge: port,
            agg: port,
            core: port,
            vswitch: QueueParams {
                service_rate: 20.0,
                buffer_len: 20,
            },
            vm_buffer_len: 20,
            server_energy_active: 30.0,
            server_energy_idle: 10.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("invalid topology parameter: {0}")]
    InvalidParameter(String),
}

/// A built fat tree. Component ids are assigned in construction order and
/// are stable for a given `(k, vms_per_server, params)`: all edge switches
/// (pod-major), all aggregation switches (pod-major), all core switches
/// (group-major), then per server a virtual switch followed by its VMs.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub k: usize,
    pub vms_per_server: usize,
    pub params: TopologyParams,
    pub components: Vec<Component>,
    /// Undirected adjacency, indexed by component id.
    pub links: Vec<Vec<ComponentId>>,
    pub servers: Vec<Server>,
    /// All VM slots in server-major order. Genotype slot `i` refers to
    /// `vms[i]`.
    pub vms: Vec<ComponentId>,
    locations: Vec<Location>,
    edge_ids: Vec<ComponentId>,
    agg_ids: Vec<ComponentId>,
    core_ids: Vec<ComponentId>,
}

/// Build a `k`-port fat tree with `vms_per_server` VM slots per server.
pub fn build_fat_tree(
    k: usize,
    vms_per_server: usize,
    params: TopologyParams,
) -> Result<Topology, TopologyError> {
    if k < 2 || k % 2 != 0 {
        return Err(TopologyError::InvalidParameter(format!(
            "fat tree needs an even port count of at least 2, got k={k}"
        )));
    }
    if vms_per_server == 0 {
        return Err(TopologyError::InvalidParameter(
            "vms_per_server must be at least 1".into(),
        ));
    }
    for (name, p) in [("edge", &params.edge), ("agg", &params.agg), ("core", &params.core)] {
        if p.rate_per_port <= 0.0 || p.buffer_per_port == 0 {
            return Err(TopologyError::InvalidParameter(format!(
                "{name} switch needs a positive per-port rate and buffer"
            )));
        }
    }
    if params.vswitch.service_rate <= 0.0 || params.vswitch.buffer_len == 0 {
        return Err(TopologyError::InvalidParameter(
            "virtual switch needs a positive rate and buffer".into(),
        ));
    }
    if params.vm_buffer_len == 0 {
        return Err(TopologyError::InvalidParameter(
            "vm_buffer_len must be at least 1".into(),
        ));
    }

    let half = k / 2;
    let mut components = Vec::new();
    let mut locations = Vec::new();
    let push = |kind, service_rate, buffer_len, ea, ei, loc, components: &mut Vec<Component>, locations: &mut Vec<Location>| {
        let id = components.len();
        components.push(Component {
            id,
            kind,
            service_rate,
            buffer_len,
            energy_active: ea,
            energy_idle: ei,
        });
        locations.push(loc);
        id
    };

    let switch = |p: &PortParams| (p.rate_per_port * k as f64, p.buffer_per_port * k);

    let mut edge_ids = Vec::with_capacity(k * half);
    for pod in 0..k {
        for index in 0..half {
            let (rate, buf) = switch(&params.edge);
            edge_ids.push(push(
                ComponentKind::EdgeSwitch,
                rate,
                buf,
                params.edge.energy_active,
                params.edge.energy_idle,
                Location::EdgeSwitch { pod, index },
                &mut components,
                &mut locations,
            ));
        }
    }
    let mut agg_ids = Vec::with_capacity(k * half);
    for pod in 0..k {
        for index in 0..half {
            let (rate, buf) = switch(&params.agg);
            agg_ids.push(push(
                ComponentKind::AggSwitch,
                rate,
                buf,
                params.agg.energy_active,
                params.agg.energy_idle,
                Location::AggSwitch { pod, index },
                &mut components,
                &mut locations,
            ));
        }
    }
    let mut core_ids = Vec::with_capacity(half * half);
    for group in 0..half {
        for member in 0..half {
            let (rate, buf) = switch(&params.core);
            core_ids.push(push(
                ComponentKind::CoreSwitch,
                rate,
                buf,
                params.core.energy_active,
                params.core.energy_idle,
                Location::CoreSwitch { group, member },
                &mut components,
                &mut locations,
            ));
        }
    }

    let mut servers = Vec::with_capacity(k * half * half);
    let mut vms = Vec::new();
    for pod in 0..k {
        for edge_index in 0..half {
            for _ in 0..half {
                let server = servers.len();
                let vswitch = push(
                    ComponentKind::VirtualSwitch,
                    params.vswitch.service_rate,
                    params.vswitch.buffer_len,
                    // Virtual switches run on the server; power is accounted
                    // at server level.
                    0.0,
                    0.0,
                    Location::VirtualSwitch { server },
                    &mut components,
                    &mut locations,
                );
                let mut server_vms = Vec::with_capacity(vms_per_server);
                for slot in 0..vms_per_server {
                    let vm = push(
                        ComponentKind::Vm,
                        // Placeholder; the hosted VNF's rate applies instead.
                        1.0,
                        params.vm_buffer_len,
                        0.0,
                        0.0,
                        Location::Vm { server, slot },
                        &mut components,
                        &mut locations,
                    );
                    server_vms.push(vm);
                    vms.push(vm);
                }
                servers.push(Server {
                    index: server,
                    pod,
                    edge_index,
                    edge: edge_ids[pod * half + edge_index],
                    vswitch,
                    vms: server_vms,
                });
            }
        }
    }

    let mut links = vec![Vec::new(); components.len()];
    let connect = |a: ComponentId, b: ComponentId, links: &mut Vec<Vec<ComponentId>>| {
        links[a].push(b);
        links[b].push(a);
    };
    // Pod fabric: every edge switch to every aggregation switch in its pod.
    for pod in 0..k {
        for e in 0..half {
            for a in 0..half {
                connect(edge_ids[pod * half + e], agg_ids[pod * half + a], &mut links);
            }
        }
    }
    // Core: aggregation switch `a` of every pod to all cores of group `a`.
    for pod in 0..k {
        for a in 0..half {
            for m in 0..half {
                connect(agg_ids[pod * half + a], core_ids[a * half + m], &mut links);
            }
        }
    }
    // Servers: virtual switch to edge switch, VMs to their virtual switch.
    for server in &servers {
        connect(server.vswitch, server.edge, &mut links);
        for &vm in &server.vms {
            connect(vm, server.vswitch, &mut links);
        }
    }

    Ok(Topology {
        k,
        vms_per_server,
        params,
        components,
        links,
        servers,
        vms,
        locations,
        edge_ids,
        agg_ids,
        core_ids,
    })
}

impl Topology {
    pub fn num_servers(&self) -> usize {
        self.servers.len()
    }

    pub fn num_vms(&self) -> usize {
        self.vms.len()
    }

    pub fn location(&self, id: ComponentId) -> Location {
        self.locations[id]
    }

    /// Short human-readable name for a component, e.g. `vm3.1` (server 3,
    /// slot 1) or `agg0.1` (pod 0, switch 1).
    pub fn component_label(&self, id: ComponentId) -> String {
        match self.locations[id] {
            Location::Vm { server, slot } => format!("vm{server}.{slot}"),
            Location::VirtualSwitch { server } => format!("vsw{server}"),
            Location::EdgeSwitch { pod, index } => format!("edge{pod}.{index}"),
            Location::AggSwitch { pod, index } => format!("agg{pod}.{index}"),
            Location::CoreSwitch { group, member } => format!("core{group}.{member}"),
        }
    }

    /// Server index hosting this VM or virtual switch.
    pub fn server_of(&self, id: ComponentId) -> Option<usize> {
        match self.locations[id] {
            Location::Vm { server, .. } | Location::VirtualSwitch { server } => Some(server),
            _ => None,
        }
    }

    pub fn edge_switches(&self) -> &[ComponentId] {
        &self.edge_ids
    }

    pub fn agg_switches(&self) -> &[ComponentId] {
        &self.agg_ids
    }

    pub fn core_switches(&self) -> &[ComponentId] {
        &self.core_ids
    }

    /// Hop distance between two VM slots. Traffic between VMs always runs
    /// VM -> virtual switch -> (fabric) -> virtual switch -> VM, so the
    /// distance is fully determined by where the two servers sit: 0 on the
    /// same VM, 2 within a server, 4 within an edge switch, 6 within a pod,
    /// 8 across pods.
    pub fn vm_distance(&self, a: ComponentId, b: ComponentId) -> usize {
        if a == b {
            return 0;
        }
        let sa = &self.servers[self.server_of(a).expect("vm id")];
        let sb = &self.servers[self.server_of(b).expect("vm id")];
        if sa.index == sb.index {
            2
        } else if sa.edge == sb.edge {
            4
        } else if sa.pod == sb.pod {
            6
        } else {
            8
        }
    }

    /// Hop distance between two servers' virtual switches (0 / 2 / 4 / 6).
    pub fn server_distance(&self, a: usize, b: usize) -> usize {
        let sa = &self.servers[a];
        let sb = &self.servers[b];
        if a == b {
            0
        } else if sa.edge == sb.edge {
            2
        } else if sa.pod == sb.pod {
            4
        } else {
            6
        }
    }

    /// All equal-cost shortest paths between two VM slots, as component
    /// sequences including both endpoints. The set is exhaustive: one path
    /// within a server or edge switch, `k/2` paths across edge switches of a
    /// pod (one per aggregation switch), and `(k/2)^2` paths across pods
    /// (aggregation switch x core member; the aggregation tier index must
    /// match on both sides because a core group only reaches that index).
    pub fn shortest_paths(&self, a: ComponentId, b: ComponentId) -> Vec<Vec<ComponentId>> {
        if a == b {
            return vec![vec![a]];
        }
        let sa = &self.servers[self.server_of(a).expect("vm id")];
        let sb = &self.servers[self.server_of(b).expect("vm id")];
        if sa.index == sb.index {
            return vec![vec![a, sa.vswitch, b]];
        }
        if sa.edge == sb.edge {
            return vec![vec![a, sa.vswitch, sa.edge, sb.vswitch, b]];
        }
        let half = self.k / 2;
        if sa.pod == sb.pod {
            return (0..half)
                .map(|agg| {
                    vec![
                        a,
                        sa.vswitch,
                        sa.edge,
                        self.agg_ids[sa.pod * half + agg],
                        sb.edge,
                        sb.vswitch,
                        b,
                    ]
                })
                .collect();
        }
        let mut paths = Vec::with_capacity(half * half);
        for agg in 0..half {
            for member in 0..half {
                paths.push(vec![
                    a,
                    sa.vswitch,
                    sa.edge,
                    self.agg_ids[sa.pod * half + agg],
                    self.core_ids[agg * half + member],
                    self.agg_ids[sb.pod * half + agg],
                    sb.edge,
                    sb.vswitch,
                    b,
                ]);
            }
        }
        paths
    }
}
