//! Bipartite side-observation structure and activation sets.
//!
//! Actions observe base-arms (`C_j`), earn reward from a subset of them
//! (`F_j ⊆ C_j`), and every base-arm knows its observers (`P_i`, the
//! transpose relation). Builders cover explicit edge lists, Barabási–Albert
//! social graphs, SNAP-style edge-list files, random-walk subgraphs, and
//! source→sink routing networks.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GraphError {
    #[error("index out of range: {kind} {index} (limit {limit})")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        limit: usize,
    },
    #[error("reward edge ({action},{base_arm}) is not in the observe set")]
    RewardEdgeNotObserved { action: usize, base_arm: usize },
    #[error("base-arm {0} appears in no reward set")]
    UncoveredBaseArm(usize),
    #[error("action {0} observes no base-arms")]
    EmptyObserveSet(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("edge list contains no edges")]
    EmptyGraph,
    #[error("random walk could not visit {target} nodes within {cap} steps")]
    Unreachable { target: usize, cap: usize },
    #[error("path {path} breaks at position {position}: link {link} does not chain")]
    BrokenPath {
        path: usize,
        position: usize,
        link: usize,
    },
    #[error("io error: {0}")]
    Io(String),
}

/// Bipartite action/base-arm structure with observe sets `C_j`, reward sets
/// `F_j ⊆ C_j`, and derived observer sets `P_i = {j : i ∈ C_j}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideObsGraph {
    num_actions: usize,
    num_base_arms: usize,
    observe_sets: Vec<Vec<usize>>,
    reward_sets: Vec<Vec<usize>>,
    observer_sets: Vec<Vec<usize>>,
}

impl SideObsGraph {
    /// Validates and assembles the bipartite structure from edge lists.
    pub fn build(
        num_actions: usize,
        num_base_arms: usize,
        observe_edges: &[(usize, usize)],
        reward_edges: &[(usize, usize)],
    ) -> Result<Self, GraphError> {
        if num_actions == 0 || num_base_arms == 0 {
            return Err(GraphError::InvalidParams(
                "need at least one action and one base-arm".into(),
            ));
        }
        let mut observe: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); num_actions];
        for &(j, i) in observe_edges {
            if j >= num_actions {
                return Err(GraphError::IndexOutOfRange {
                    kind: "action",
                    index: j,
                    limit: num_actions,
                });
            }
            if i >= num_base_arms {
                return Err(GraphError::IndexOutOfRange {
                    kind: "base-arm",
                    index: i,
                    limit: num_base_arms,
                });
            }
            observe[j].insert(i);
        }
        let mut reward: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); num_actions];
        for &(j, i) in reward_edges {
            if j >= num_actions {
                return Err(GraphError::IndexOutOfRange {
                    kind: "action",
                    index: j,
                    limit: num_actions,
                });
            }
            if i >= num_base_arms {
                return Err(GraphError::IndexOutOfRange {
                    kind: "base-arm",
                    index: i,
                    limit: num_base_arms,
                });
            }
            if !observe[j].contains(&i) {
                return Err(GraphError::RewardEdgeNotObserved { action: j, base_arm: i });
            }
            reward[j].insert(i);
        }
        for (j, c) in observe.iter().enumerate() {
            if c.is_empty() {
                return Err(GraphError::EmptyObserveSet(j));
            }
        }
        let mut covered = vec![false; num_base_arms];
        for f in &reward {
            for &i in f {
                covered[i] = true;
            }
        }
        if let Some(i) = covered.iter().position(|&c| !c) {
            return Err(GraphError::UncoveredBaseArm(i));
        }
        let mut observers: Vec<Vec<usize>> = vec![Vec::new(); num_base_arms];
        for (j, c) in observe.iter().enumerate() {
            for &i in c {
                observers[i].push(j);
            }
        }
        Ok(Self {
            num_actions,
            num_base_arms,
            observe_sets: observe.into_iter().map(|s| s.into_iter().collect()).collect(),
            reward_sets: reward.into_iter().map(|s| s.into_iter().collect()).collect(),
            observer_sets: observers,
        })
    }

    /// Social-network mapping: `K = N = n`, `C_j = {j} ∪ neighbors(j)`,
    /// `F_j = {j}`. `neighbors[j]` need not include `j` itself.
    fn from_social_adjacency(neighbors: &[BTreeSet<usize>]) -> Result<Self, GraphError> {
        let n = neighbors.len();
        let mut observe_edges = Vec::new();
        let mut reward_edges = Vec::with_capacity(n);
        for (j, nb) in neighbors.iter().enumerate() {
            observe_edges.push((j, j));
            for &i in nb {
                observe_edges.push((j, i));
            }
            reward_edges.push((j, j));
        }
        Self::build(n, n, &observe_edges, &reward_edges)
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_base_arms(&self) -> usize {
        self.num_base_arms
    }

    /// `C_j`, ascending.
    pub fn observe_set(&self, action: usize) -> &[usize] {
        &self.observe_sets[action]
    }

    /// `F_j`, ascending.
    pub fn reward_set(&self, action: usize) -> &[usize] {
        &self.reward_sets[action]
    }

    /// `P_i = {j : i ∈ C_j}`, ascending.
    pub fn observer_set(&self, base_arm: usize) -> &[usize] {
        &self.observer_sets[base_arm]
    }

    /// Does pulling `action` reveal `base_arm`?
    pub fn observes(&self, action: usize, base_arm: usize) -> bool {
        self.observe_sets[action].binary_search(&base_arm).is_ok()
    }

    /// Does pulling `observer` yield a full reward tuple for `target`,
    /// i.e. `F_target ⊆ C_observer`?
    pub fn covers(&self, observer: usize, target: usize) -> bool {
        self.reward_sets[target]
            .iter()
            .all(|&i| self.observes(observer, i))
    }

    /// Undirected neighbor view for social graphs: `C_j` without `j`.
    fn social_neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.observe_sets[node].iter().copied().filter(move |&i| i != node)
    }

    /// Number of undirected edges under the social interpretation.
    pub fn social_edge_count(&self) -> usize {
        (0..self.num_actions)
            .map(|j| self.social_neighbors(j).count())
            .sum::<usize>()
            / 2
    }

    /// Degrees under the social interpretation (`|C_j| - 1`).
    pub fn social_degrees(&self) -> Vec<usize> {
        (0..self.num_actions)
            .map(|j| self.social_neighbors(j).count())
            .collect()
    }
}

/// JSON document form: `{"K":…, "N":…, "observe":[[j,i],…], "reward":[[j,i],…]}`.
#[derive(Debug, Serialize, Deserialize)]
struct GraphDoc {
    #[serde(rename = "K")]
    num_actions: usize,
    #[serde(rename = "N")]
    num_base_arms: usize,
    observe: Vec<(usize, usize)>,
    reward: Vec<(usize, usize)>,
}

impl Serialize for SideObsGraph {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut observe = Vec::new();
        let mut reward = Vec::new();
        for j in 0..self.num_actions {
            observe.extend(self.observe_sets[j].iter().map(|&i| (j, i)));
            reward.extend(self.reward_sets[j].iter().map(|&i| (j, i)));
        }
        GraphDoc {
            num_actions: self.num_actions,
            num_base_arms: self.num_base_arms,
            observe,
            reward,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SideObsGraph {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = GraphDoc::deserialize(deserializer)?;
        SideObsGraph::build(doc.num_actions, doc.num_base_arms, &doc.observe, &doc.reward)
            .map_err(serde::de::Error::custom)
    }
}

/// Barabási–Albert preferential attachment graph mapped to bandit form
/// (`K = N = n_nodes`, closed-neighborhood observation, self reward).
///
/// Seeded with a complete graph on `attach_m + 1` nodes; every later node
/// attaches to `attach_m` distinct existing nodes picked with probability
/// proportional to degree. Deterministic for a fixed seed.
pub fn generate_ba(n_nodes: usize, attach_m: usize, seed: u64) -> Result<SideObsGraph, GraphError> {
    if attach_m < 1 || n_nodes <= attach_m {
        return Err(GraphError::InvalidParams(format!(
            "need n_nodes > attach_m >= 1, got n_nodes={n_nodes}, attach_m={attach_m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n_nodes];
    // One entry per unit of degree; uniform choice = preferential attachment.
    let mut degree_urn: Vec<usize> = Vec::with_capacity(2 * attach_m * n_nodes);
    let clique = (attach_m + 1).min(n_nodes);
    for u in 0..clique {
        for v in (u + 1)..clique {
            neighbors[u].insert(v);
            neighbors[v].insert(u);
            degree_urn.push(u);
            degree_urn.push(v);
        }
    }
    for new in clique..n_nodes {
        let mut targets = BTreeSet::new();
        while targets.len() < attach_m {
            targets.insert(*degree_urn.choose(&mut rng).expect("urn is nonempty"));
        }
        for &t in &targets {
            neighbors[new].insert(t);
            neighbors[t].insert(new);
            degree_urn.push(new);
            degree_urn.push(t);
        }
    }
    SideObsGraph::from_social_adjacency(&neighbors)
}

/// Parses whitespace-separated integer pairs, one edge per line, `#`
/// comment lines skipped. Node ids are compacted to `0..K-1` in
/// first-appearance order.
pub fn parse_edge_list(text: &str, directed: bool) -> Result<SideObsGraph, GraphError> {
    let mut id_of = std::collections::HashMap::new();
    let mut order = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = Vec::new();
        let mut col = 0;
        let mut chars = line.char_indices().peekable();
        while let Some(&(pos, c)) = chars.peek() {
            if c.is_whitespace() {
                chars.next();
            } else {
                let start = pos;
                let mut token = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_whitespace() {
                        break;
                    }
                    token.push(c);
                    chars.next();
                }
                fields.push((start + 1, token));
                col = start + 1;
            }
        }
        if fields.len() != 2 {
            return Err(GraphError::ParseError {
                line: lineno + 1,
                column: col,
                message: format!("expected two node ids, found {}", fields.len()),
            });
        }
        let mut pair = [0usize; 2];
        for (slot, (column, token)) in fields.into_iter().enumerate() {
            match token.parse::<usize>() {
                Ok(v) => pair[slot] = v,
                Err(_) => {
                    return Err(GraphError::ParseError {
                        line: lineno + 1,
                        column,
                        message: format!("not a node id: {token:?}"),
                    })
                }
            }
        }
        let mut intern = |raw: usize| -> usize {
            *id_of.entry(raw).or_insert_with(|| {
                order.push(raw);
                order.len() - 1
            })
        };
        let u = intern(pair[0]);
        let v = intern(pair[1]);
        edges.push((u, v));
    }
    if edges.is_empty() {
        return Err(GraphError::EmptyGraph);
    }
    let n = order.len();
    let mut neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (u, v) in edges {
        if u != v {
            neighbors[u].insert(v);
            if !directed {
                neighbors[v].insert(u);
            }
        }
    }
    SideObsGraph::from_social_adjacency(&neighbors)
}

/// Reads an edge-list file (SNAP format) and maps it to bandit form.
pub fn load_edge_list(path: &Path, directed: bool) -> Result<SideObsGraph, GraphError> {
    let text = std::fs::read_to_string(path).map_err(|e| GraphError::Io(e.to_string()))?;
    parse_edge_list(&text, directed)
}

/// Induced subgraph on the first `target_nodes` distinct nodes visited by a
/// simple random walk, restarting from a uniformly random visited node at
/// dead ends. Node ids are recompacted in visit order.
pub fn random_walk_subgraph(
    g: &SideObsGraph,
    target_nodes: usize,
    seed: u64,
) -> Result<SideObsGraph, GraphError> {
    let n = g.num_actions();
    if target_nodes == 0 || target_nodes > n {
        return Err(GraphError::InvalidParams(format!(
            "target_nodes must be in 1..={n}, got {target_nodes}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = 100 * target_nodes;
    let mut visited: Vec<usize> = Vec::with_capacity(target_nodes);
    let mut new_id = vec![usize::MAX; n];
    let visit = |node: usize, visited: &mut Vec<usize>, new_id: &mut Vec<usize>| {
        if new_id[node] == usize::MAX {
            new_id[node] = visited.len();
            visited.push(node);
        }
    };
    let mut current = rng.random_range(0..n);
    visit(current, &mut visited, &mut new_id);
    let mut steps = 0;
    while visited.len() < target_nodes {
        if steps >= cap {
            return Err(GraphError::Unreachable {
                target: target_nodes,
                cap,
            });
        }
        steps += 1;
        let nbrs: Vec<usize> = g.social_neighbors(current).collect();
        match nbrs.choose(&mut rng) {
            Some(&next) => {
                visit(next, &mut visited, &mut new_id);
                current = next;
            }
            None => {
                // Dead end: restart from a uniformly random visited node.
                current = *visited.choose(&mut rng).expect("at least the start is visited");
            }
        }
    }
    let mut neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); target_nodes];
    for &old_u in &visited {
        for old_v in g.social_neighbors(old_u) {
            if new_id[old_v] != usize::MAX {
                neighbors[new_id[old_u]].insert(new_id[old_v]);
                neighbors[new_id[old_v]].insert(new_id[old_u]);
            }
        }
    }
    SideObsGraph::from_social_adjacency(&neighbors)
}

/// A routing problem: links are base-arms, paths are actions, and the
/// delay budget `B` scales the path-delay reward.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingNetwork {
    pub graph: SideObsGraph,
    pub delay_budget: f64,
}

/// Builds a routing network: each path must chain (consecutive links share
/// an endpoint) and every link must be used by some path.
pub fn build_routing(
    links: &[(usize, usize)],
    paths: &[Vec<usize>],
    delay_budget: f64,
) -> Result<RoutingNetwork, GraphError> {
    if !(delay_budget > 0.0) {
        return Err(GraphError::InvalidParams(format!(
            "delay budget must be positive, got {delay_budget}"
        )));
    }
    if links.is_empty() || paths.is_empty() {
        return Err(GraphError::InvalidParams(
            "need at least one link and one path".into(),
        ));
    }
    for (p, path) in paths.iter().enumerate() {
        if path.is_empty() {
            return Err(GraphError::InvalidParams(format!("path {p} is empty")));
        }
        for (pos, &l) in path.iter().enumerate() {
            if l >= links.len() {
                return Err(GraphError::IndexOutOfRange {
                    kind: "link",
                    index: l,
                    limit: links.len(),
                });
            }
            if pos > 0 && links[path[pos - 1]].1 != links[l].0 {
                return Err(GraphError::BrokenPath {
                    path: p,
                    position: pos,
                    link: l,
                });
            }
        }
    }
    let edges: Vec<(usize, usize)> = paths
        .iter()
        .enumerate()
        .flat_map(|(p, path)| path.iter().map(move |&l| (p, l)))
        .collect();
    let graph = SideObsGraph::build(paths.len(), links.len(), &edges, &edges)?;
    Ok(RoutingNetwork {
        graph,
        delay_budget,
    })
}

/// The default 6-node routing network: 12 directed links and 8 paths from
/// node 1 to node 6 (four two-hop routes plus four routes detouring over
/// the inner cycle).
pub fn default_routing_links() -> Vec<(usize, usize)> {
    vec![
        // source edges 0..4
        (1, 2),
        (1, 3),
        (1, 4),
        (1, 5),
        // inner cycle 4..8
        (2, 3),
        (3, 4),
        (4, 5),
        (5, 2),
        // sink edges 8..12
        (2, 6),
        (3, 6),
        (4, 6),
        (5, 6),
    ]
}

/// Paths for [`default_routing_links`]: indices 0-3 are the direct routes,
/// 4-7 the cycle detours.
pub fn default_routing_paths() -> Vec<Vec<usize>> {
    vec![
        vec![0, 8],
        vec![1, 9],
        vec![2, 10],
        vec![3, 11],
        vec![0, 4, 9],
        vec![1, 5, 10],
        vec![2, 6, 11],
        vec![3, 7, 8],
    ]
}

/// The default routing network with delay budget `B = 5`.
pub fn default_routing() -> RoutingNetwork {
    build_routing(&default_routing_links(), &default_routing_paths(), 5.0)
        .expect("default routing network is well formed")
}

/// Activation sets for the default routing network: the direct routes are
/// available when the inner cycle fails, the detours when the direct
/// routes fail. Both scenarios are equiprobable.
pub fn default_routing_activation() -> ActivationStructure {
    ActivationStructure::new(vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]], vec![0.5, 0.5])
        .expect("default routing activation is well formed")
}

/// The collection of activation sets `{K_1..K_A}` with draw distribution `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationStructure {
    sets: Vec<Vec<usize>>,
    probs: Vec<f64>,
}

impl ActivationStructure {
    pub fn new(sets: Vec<Vec<usize>>, probs: Vec<f64>) -> Result<Self, GraphError> {
        if sets.is_empty() || sets.len() != probs.len() {
            return Err(GraphError::InvalidParams(format!(
                "need matching nonempty sets and probs, got {} sets and {} probs",
                sets.len(),
                probs.len()
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(GraphError::InvalidParams(format!(
                "activation probabilities sum to {total}, expected 1"
            )));
        }
        if let Some(p) = probs.iter().find(|&&p| !(p > 0.0)) {
            return Err(GraphError::InvalidParams(format!(
                "every activation probability must be positive, got {p}"
            )));
        }
        let sets: Vec<Vec<usize>> = sets
            .into_iter()
            .map(|s| {
                let set: BTreeSet<usize> = s.into_iter().collect();
                set.into_iter().collect()
            })
            .collect();
        if let Some(a) = sets.iter().position(|s| s.is_empty()) {
            return Err(GraphError::InvalidParams(format!(
                "activation set {a} is empty"
            )));
        }
        Ok(Self { sets, probs })
    }

    /// Checks action indices are within `0..num_actions`.
    pub fn validate_indices(&self, num_actions: usize) -> Result<(), GraphError> {
        for set in &self.sets {
            for &j in set {
                if j >= num_actions {
                    return Err(GraphError::IndexOutOfRange {
                        kind: "action",
                        index: j,
                        limit: num_actions,
                    });
                }
            }
        }
        Ok(())
    }

    /// Checks action indices against a graph and that every action appears
    /// in at least one set.
    pub fn validate_for(&self, num_actions: usize) -> Result<(), GraphError> {
        self.validate_indices(num_actions)?;
        let mut seen = vec![false; num_actions];
        for set in &self.sets {
            for &j in set {
                seen[j] = true;
            }
        }
        if let Some(j) = seen.iter().position(|&s| !s) {
            return Err(GraphError::InvalidParams(format!(
                "action {j} appears in no activation set"
            )));
        }
        Ok(())
    }

    /// Splits actions `0..num_actions` into `num_sets` equiprobable
    /// contiguous blocks; `overlap` duplicates that fraction of each block
    /// into the next one (cyclically).
    pub fn uniform_partition(
        num_actions: usize,
        num_sets: usize,
        overlap: f64,
    ) -> Result<Self, GraphError> {
        if num_sets == 0 || num_sets > num_actions {
            return Err(GraphError::InvalidParams(format!(
                "need 1 <= num_sets <= num_actions, got {num_sets} sets for {num_actions} actions"
            )));
        }
        if !(0.0..=1.0).contains(&overlap) {
            return Err(GraphError::InvalidParams(format!(
                "overlap must be in [0,1], got {overlap}"
            )));
        }
        let mut sets: Vec<Vec<usize>> = Vec::with_capacity(num_sets);
        let base = num_actions / num_sets;
        let extra = num_actions % num_sets;
        let mut start = 0;
        for a in 0..num_sets {
            let len = base + usize::from(a < extra);
            sets.push((start..start + len).collect());
            start += len;
        }
        if overlap > 0.0 && num_sets > 1 {
            let blocks = sets.clone();
            for (a, block) in blocks.iter().enumerate() {
                let dup = (overlap * block.len() as f64).floor() as usize;
                let next = (a + 1) % num_sets;
                sets[next].extend(block.iter().take(dup));
            }
        }
        Self::new(sets, vec![1.0 / num_sets as f64; num_sets])
    }

    pub fn num_sets(&self) -> usize {
        self.sets.len()
    }

    /// `K_a`, ascending.
    pub fn set(&self, a: usize) -> &[usize] {
        &self.sets[a]
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn prob(&self, a: usize) -> f64 {
        self.probs[a]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn contains(&self, a: usize, action: usize) -> bool {
        self.sets[a].binary_search(&action).is_ok()
    }
}
