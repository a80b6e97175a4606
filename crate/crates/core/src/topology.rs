// Copyright 2026 The qdc-emu Contributors
// SPDX-License-Identifier: Apache-2.0

//! Virtual QPUs carved out of one physical coupling map.
//!
//! A [`CouplingMap`] is partitioned into named groups, each of which must be
//! connected on its own. Physical edges that cross groups become candidate
//! interconnects. Roles then mark every qubit as processing, communication,
//! or environment; environment qubits sit next to the communication qubit
//! they emulate noise for.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::LinkQubits;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("self-loop on qubit {0}")]
    SelfLoop(usize),
    #[error("qubit {index} outside a {size}-qubit coupling map")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("QPU `{0}` is not connected in the coupling map")]
    DisconnectedPartition(String),
    #[error("qubit {0} has a role but belongs to no QPU")]
    UnassignedQubit(usize),
    #[error("role adjacency violation: {0}")]
    RoleAdjacencyViolation(String),
    #[error("communication qubit rule broken: {0}")]
    CommQubitNotOnBoundary(String),
    #[error("invalid interconnect {0:?}: {1}")]
    InvalidLink([usize; 2], String),
    #[error("topology JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Processing,
    Communication,
    Environment,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingMap {
    num_qubits: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl CouplingMap {
    pub fn new(num_qubits: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, TopologyError> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(TopologyError::SelfLoop(a));
            }
            for q in [a, b] {
                if q >= num_qubits {
                    return Err(TopologyError::IndexOutOfRange { index: q, size: num_qubits });
                }
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self { num_qubits, edges: set })
    }

    /// 0 – 1 – … – (n−1)
    pub fn line(num_qubits: usize) -> Self {
        Self::new(num_qubits, (1..num_qubits).map(|q| (q - 1, q))).expect("line edges are valid")
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    fn neighbours(&self, q: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter_map(move |&(a, b)| match (a == q, b == q) {
            (true, _) => Some(b),
            (_, true) => Some(a),
            _ => None,
        })
    }

    fn induced_connected(&self, nodes: &BTreeSet<usize>) -> bool {
        let Some(&start) = nodes.iter().next() else { return true };
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(q) = queue.pop_front() {
            for n in self.neighbours(q) {
                if nodes.contains(&n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        seen.len() == nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Qpu {
    pub name: String,
    pub qubits: BTreeSet<usize>,
}

/// Roles and interconnects declared on top of a partition.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleAssignment {
    pub roles: BTreeMap<usize, Role>,
    /// Interconnects as (communication qubit, communication qubit).
    pub links: Vec<[usize; 2]>,
    /// environment qubit → the communication qubit it serves
    pub env_serves: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualTopology {
    map: CouplingMap,
    qpus: Vec<Qpu>,
    candidate_links: Vec<[usize; 2]>,
    roles: BTreeMap<usize, Role>,
    links: Vec<[usize; 2]>,
    env_serves: BTreeMap<usize, usize>,
}

/// Groups qubits into named QPUs and records every cross-group edge.
pub fn partition(map: &CouplingMap, assignment: &BTreeMap<usize, String>) -> Result<VirtualTopology, TopologyError> {
    let mut groups: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for (&q, name) in assignment {
        if q >= map.num_qubits {
            return Err(TopologyError::IndexOutOfRange { index: q, size: map.num_qubits });
        }
        groups.entry(name.as_str()).or_default().insert(q);
    }
    for (name, qubits) in &groups {
        if !map.induced_connected(qubits) {
            return Err(TopologyError::DisconnectedPartition(name.to_string()));
        }
    }
    let candidate_links = map
        .edges()
        .filter(|(a, b)| matches!((assignment.get(a), assignment.get(b)), (Some(x), Some(y)) if x != y))
        .map(|(a, b)| [a, b])
        .collect();
    let qpus = groups.into_iter().map(|(name, qubits)| Qpu { name: name.to_string(), qubits }).collect();
    Ok(VirtualTopology {
        map: map.clone(),
        qpus,
        candidate_links,
        roles: BTreeMap::new(),
        links: Vec::new(),
        env_serves: BTreeMap::new(),
    })
}

/// Validates roles, interconnects, and environment placement.
pub fn assign_roles(topology: &VirtualTopology, roles: &RoleAssignment) -> Result<VirtualTopology, TopologyError> {
    let role_of = |q: usize| roles.roles.get(&q).copied();
    for &q in roles.roles.keys() {
        if topology.qpu_of(q).is_none() {
            return Err(TopologyError::UnassignedQubit(q));
        }
    }
    let mut links: Vec<[usize; 2]> = Vec::new();
    for &[a, b] in &roles.links {
        for q in [a, b] {
            if role_of(q) != Some(Role::Communication) {
                return Err(TopologyError::CommQubitNotOnBoundary(format!(
                    "link endpoint {q} has role {:?}, expected communication",
                    role_of(q)
                )));
            }
        }
        if topology.qpu_of(a) == topology.qpu_of(b) {
            return Err(TopologyError::InvalidLink([a, b], "both ends in the same QPU".into()));
        }
        if !topology.map.has_edge(a, b) {
            return Err(TopologyError::InvalidLink([a, b], "no physical coupling".into()));
        }
        links.push([a.min(b), a.max(b)]);
    }
    links.sort_unstable();
    links.dedup();
    for (&q, &role) in &roles.roles {
        if role == Role::Communication && !links.iter().any(|l| l.contains(&q)) {
            return Err(TopologyError::CommQubitNotOnBoundary(format!("communication qubit {q} is on no interconnect")));
        }
    }
    for (&env, &comm) in &roles.env_serves {
        if role_of(env) != Some(Role::Environment) {
            return Err(TopologyError::RoleAdjacencyViolation(format!("qubit {env} serves {comm} but is not an environment qubit")));
        }
        if role_of(comm) != Some(Role::Communication) {
            return Err(TopologyError::RoleAdjacencyViolation(format!("environment {env} serves non-communication qubit {comm}")));
        }
        if !topology.map.has_edge(env, comm) || topology.qpu_of(env) != topology.qpu_of(comm) {
            return Err(TopologyError::RoleAdjacencyViolation(format!("environment {env} is not adjacent to communication qubit {comm}")));
        }
    }
    for (&q, &role) in &roles.roles {
        if role == Role::Environment && !roles.env_serves.contains_key(&q) {
            return Err(TopologyError::RoleAdjacencyViolation(format!("environment qubit {q} serves no communication qubit")));
        }
    }
    Ok(VirtualTopology { roles: roles.roles.clone(), links, env_serves: roles.env_serves.clone(), ..topology.clone() })
}

impl VirtualTopology {
    pub fn coupling_map(&self) -> &CouplingMap {
        &self.map
    }

    pub fn qpus(&self) -> &[Qpu] {
        &self.qpus
    }

    pub fn num_qubits(&self) -> usize {
        self.map.num_qubits
    }

    pub fn candidate_links(&self) -> &[[usize; 2]] {
        &self.candidate_links
    }

    pub fn links(&self) -> &[[usize; 2]] {
        &self.links
    }

    pub fn qpu_of(&self, q: usize) -> Option<&str> {
        self.qpus.iter().find(|p| p.qubits.contains(&q)).map(|p| p.name.as_str())
    }

    pub fn role(&self, q: usize) -> Option<Role> {
        self.roles.get(&q).copied()
    }

    pub fn qubits_with_role(&self, role: Role) -> Vec<usize> {
        self.roles.iter().filter(|(_, r)| **r == role).map(|(q, _)| *q).collect()
    }

    pub fn env_for(&self, comm: usize) -> Option<usize> {
        self.env_serves.iter().find(|(_, c)| **c == comm).map(|(e, _)| *e)
    }

    /// Comm and environment qubits of the interconnect between the QPUs of `a_side` and `b_side`.
    pub fn link_between(&self, a_side: usize, b_side: usize) -> Result<LinkQubits, TopologyError> {
        let (qa, qb) = (self.qpu_of(a_side), self.qpu_of(b_side));
        for &[x, y] in &self.links {
            for (ca, cb) in [(x, y), (y, x)] {
                if self.qpu_of(ca) == qa && self.qpu_of(cb) == qb {
                    let env = |c: usize| {
                        self.env_for(c).ok_or_else(|| {
                            TopologyError::RoleAdjacencyViolation(format!("communication qubit {c} has no environment qubit"))
                        })
                    };
                    return Ok(LinkQubits { comm_a: ca, env_a: env(ca)?, comm_b: cb, env_b: env(cb)? });
                }
            }
        }
        Err(TopologyError::InvalidLink([a_side, b_side], "no interconnect joins these QPUs".into()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TopologyFile::from(self)).expect("topology serialisation is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, TopologyError> {
        let file: TopologyFile = serde_json::from_str(text)?;
        let map = CouplingMap::new(file.num_qubits, file.edges.iter().map(|e| (e[0], e[1])))?;
        let assignment = file
            .qpus
            .iter()
            .flat_map(|(name, qs)| qs.iter().map(move |&q| (q, name.clone())))
            .collect();
        let base = partition(&map, &assignment)?;
        assign_roles(&base, &RoleAssignment { roles: file.roles, links: file.links, env_serves: file.env_serves })
    }
}

#[derive(Serialize, Deserialize)]
struct TopologyFile {
    num_qubits: usize,
    edges: Vec<[usize; 2]>,
    qpus: BTreeMap<String, Vec<usize>>,
    #[serde(default)]
    roles: BTreeMap<usize, Role>,
    #[serde(default)]
    links: Vec<[usize; 2]>,
    #[serde(default)]
    env_serves: BTreeMap<usize, usize>,
}

impl From<&VirtualTopology> for TopologyFile {
    fn from(t: &VirtualTopology) -> Self {
        Self {
            num_qubits: t.map.num_qubits,
            edges: t.map.edges().map(|(a, b)| [a, b]).collect(),
            qpus: t.qpus.iter().map(|p| (p.name.clone(), p.qubits.iter().copied().collect())).collect(),
            roles: t.roles.clone(),
            links: t.links.clone(),
            env_serves: t.env_serves.clone(),
        }
    }
}

/// Lays QPUs side by side on a line of qubits.
///
/// Qubits are numbered left to right; each environment qubit serves the
/// communication qubit next to it, and the qubits on either side of a QPU
/// boundary form an interconnect.
pub fn line_layout(qpus: &[(&str, &[Role])]) -> Result<VirtualTopology, TopologyError> {
    let n: usize = qpus.iter().map(|(_, r)| r.len()).sum();
    let map = CouplingMap::line(n);
    let mut assignment = BTreeMap::new();
    let mut roles = RoleAssignment::default();
    let mut next = 0;
    let mut boundaries = Vec::new();
    for (name, qpu_roles) in qpus {
        if next > 0 {
            boundaries.push([next - 1, next]);
        }
        for &role in *qpu_roles {
            assignment.insert(next, name.to_string());
            roles.roles.insert(next, role);
            next += 1;
        }
    }
    for (&q, &role) in &roles.roles {
        if role == Role::Environment {
            let served = [q.wrapping_sub(1), q + 1]
                .into_iter()
                .find(|&c| roles.roles.get(&c) == Some(&Role::Communication) && assignment.get(&c) == assignment.get(&q));
            if let Some(c) = served {
                roles.env_serves.insert(q, c);
            }
        }
    }
    roles.links = boundaries;
    assign_roles(&partition(&map, &assignment)?, &roles)
}
