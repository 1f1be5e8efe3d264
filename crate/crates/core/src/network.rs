//! Tensor networks of *-tensors: validation, causal structure, contraction
//! planning and evaluation.

use std::collections::{BTreeMap, HashMap};

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::star_tensor::{
    check_normalized_with, emulate_via_matrix, star_contract, star_tensordot, Direction, StarTensor, StarTensorError,
};
use crate::tensor::{Tensor, TensorError, Tolerance};

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Endpoint {
    pub node: NodeId,
    pub label: String,
}

impl Endpoint {
    pub fn new(node: NodeId, label: &str) -> Endpoint {
        Endpoint { node, label: label.to_string() }
    }
}

#[derive(Debug, Error, Clone)]
pub enum NetworkError {
    #[error("network failed validation: {0:?}")]
    ValidationFailed(ValidationReport),
    #[error("total mass {0:e} is not positive")]
    ZeroMass(f64),
    #[error("entry {value:e} at {index:?} is below the negativity tolerance")]
    NegativeMass { index: Vec<usize>, value: f64 },
    #[error("index `{0}` is not classical")]
    NotClassical(String),
    #[error("exhaustive planning supports at most {limit} nodes, network has {nodes}")]
    PlannerLimit { nodes: usize, limit: usize },
    #[error(transparent)]
    Star(#[from] StarTensorError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

pub type NetworkResult<T> = Result<T, NetworkError>;

#[derive(Clone, Debug, Default)]
pub struct TensorNetwork {
    nodes: Vec<(String, StarTensor)>,
    edges: Vec<(Endpoint, Endpoint)>,
    open: BTreeMap<String, Endpoint>,
    model_output: bool,
}

impl TensorNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, name: &str, t: StarTensor) -> NodeId {
        self.nodes.push((name.to_string(), t));
        self.nodes.len() - 1
    }

    pub fn connect(&mut self, a: NodeId, la: &str, b: NodeId, lb: &str) -> &mut Self {
        self.edges.push((Endpoint::new(a, la), Endpoint::new(b, lb)));
        self
    }

    /// Name an open index. Indices referenced by neither an edge nor an
    /// explicit open name are open under `"<node>.<label>"`.
    pub fn open(&mut self, name: &str, node: NodeId, label: &str) -> &mut Self {
        self.open.insert(name.to_string(), Endpoint::new(node, label));
        self
    }

    /// Mark the network as a model whose open indices are measurement outcomes.
    pub fn set_model_output(&mut self, flag: bool) -> &mut Self {
        self.model_output = flag;
        self
    }

    pub fn is_model_output(&self) -> bool {
        self.model_output
    }

    pub fn nodes(&self) -> &[(String, StarTensor)] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &StarTensor {
        &self.nodes[id].1
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|(n, _)| n == name)
    }

    pub fn edges(&self) -> &[(Endpoint, Endpoint)] {
        &self.edges
    }

    pub fn explicit_open(&self) -> &BTreeMap<String, Endpoint> {
        &self.open
    }

    /// Replace every node by `f(node)`, keeping the wiring.
    pub fn map_nodes<F: FnMut(&StarTensor) -> NetworkResult<StarTensor>>(
        &self,
        mut f: F,
    ) -> NetworkResult<TensorNetwork> {
        let mut out = self.clone();
        for (_, t) in out.nodes.iter_mut() {
            *t = f(t)?;
        }
        Ok(out)
    }

    /// All open indices, explicit and implicit, by name (sorted).
    pub fn open_indices(&self) -> BTreeMap<String, Endpoint> {
        let mut used: std::collections::HashSet<Endpoint> =
            self.edges.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
        used.extend(self.open.values().cloned());
        let mut all = self.open.clone();
        for (k, (name, t)) in self.nodes.iter().enumerate() {
            for l in t.labels() {
                let ep = Endpoint::new(k, l);
                if !used.contains(&ep) {
                    let mut auto = format!("{name}.{l}");
                    while all.contains_key(&auto) {
                        auto.push('_');
                    }
                    all.insert(auto, ep);
                }
            }
        }
        all
    }

    fn endpoint_tensor(&self, ep: &Endpoint) -> Option<&StarTensor> {
        self.nodes.get(ep.node).map(|(_, t)| t).filter(|t| t.tensor().has_label(&ep.label))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationIssue {
    UnknownEndpoint { node: NodeId, label: String },
    IndexReused { node: NodeId, label: String },
    BasisMismatch { a: Endpoint, b: Endpoint },
    AlgebraMismatch { a: Endpoint, b: Endpoint },
    OpenIndexNotClassical { name: String },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }
}

pub fn validate(net: &TensorNetwork) -> ValidationReport {
    let mut issues = Vec::new();
    let mut seen: HashMap<Endpoint, usize> = HashMap::new();
    let refs = net.edges.iter().flat_map(|(a, b)| [a, b]).chain(net.open.values());
    for ep in refs {
        if net.endpoint_tensor(ep).is_none() {
            issues.push(ValidationIssue::UnknownEndpoint { node: ep.node, label: ep.label.clone() });
            continue;
        }
        let count = seen.entry(ep.clone()).or_insert(0);
        *count += 1;
        if *count == 2 {
            issues.push(ValidationIssue::IndexReused { node: ep.node, label: ep.label.clone() });
        }
    }
    for (a, b) in &net.edges {
        let (Some(ta), Some(tb)) = (net.endpoint_tensor(a), net.endpoint_tensor(b)) else {
            continue;
        };
        let (ia, ib) = (ta.tensor().index(&a.label).unwrap(), tb.tensor().index(&b.label).unwrap());
        let (aa, ab) = (ta.algebra(&a.label).unwrap(), tb.algebra(&b.label).unwrap());
        if aa.is_classical() != ab.is_classical() {
            issues.push(ValidationIssue::AlgebraMismatch { a: a.clone(), b: b.clone() });
        } else if ia.basis != ib.basis {
            issues.push(ValidationIssue::BasisMismatch { a: a.clone(), b: b.clone() });
        } else if aa != ab {
            issues.push(ValidationIssue::AlgebraMismatch { a: a.clone(), b: b.clone() });
        }
    }
    if net.model_output && issues.is_empty() {
        for (name, ep) in net.open_indices() {
            if !net.node(ep.node).algebra(&ep.label).unwrap().is_classical() {
                issues.push(ValidationIssue::OpenIndexNotClassical { name });
            }
        }
    }
    ValidationReport { issues }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CausalIssue {
    MissingDirections { node: NodeId },
    EdgeNotOutToIn { a: Endpoint, b: Endpoint },
    CyclicNormalization { nodes: Vec<NodeId> },
    NotNormalized { node: NodeId, residual: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CausalReport {
    pub causal: bool,
    pub issues: Vec<CausalIssue>,
}

pub fn check_causal(net: &TensorNetwork) -> CausalReport {
    check_causal_with(net, Tolerance::default())
}

/// Every node directed and normalized, every edge from an out index to an
/// in index, and no directed cycles.
pub fn check_causal_with(net: &TensorNetwork, tol: Tolerance) -> CausalReport {
    let mut issues = Vec::new();
    for (k, (_, t)) in net.nodes.iter().enumerate() {
        if t.directions().is_none() {
            issues.push(CausalIssue::MissingDirections { node: k });
        }
    }
    if !issues.is_empty() {
        return CausalReport { causal: false, issues };
    }
    let n = net.nodes.len();
    let mut succ = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for (a, b) in &net.edges {
        let (Some(ta), Some(tb)) = (net.endpoint_tensor(a), net.endpoint_tensor(b)) else {
            issues.push(CausalIssue::EdgeNotOutToIn { a: a.clone(), b: b.clone() });
            continue;
        };
        let (da, db) = (ta.direction(&a.label).unwrap().unwrap(), tb.direction(&b.label).unwrap().unwrap());
        let (from, to) = match (da, db) {
            (Direction::Out, Direction::In) => (a.node, b.node),
            (Direction::In, Direction::Out) => (b.node, a.node),
            _ => {
                issues.push(CausalIssue::EdgeNotOutToIn { a: a.clone(), b: b.clone() });
                continue;
            }
        };
        succ[from].push(to);
        indeg[to] += 1;
    }
    let mut queue: Vec<usize> = (0..n).filter(|&k| indeg[k] == 0).collect();
    let mut done = vec![false; n];
    while let Some(k) = queue.pop() {
        done[k] = true;
        for &s in &succ[k] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                queue.push(s);
            }
        }
    }
    let cyclic: Vec<NodeId> = (0..n).filter(|&k| !done[k]).collect();
    if !cyclic.is_empty() {
        issues.push(CausalIssue::CyclicNormalization { nodes: cyclic });
    }
    for (k, (_, t)) in net.nodes.iter().enumerate() {
        match check_normalized_with(t, tol) {
            Ok(r) if r.passed => {}
            Ok(r) => issues.push(CausalIssue::NotNormalized { node: k, residual: r.residual }),
            Err(_) => issues.push(CausalIssue::MissingDirections { node: k }),
        }
    }
    CausalReport { causal: issues.is_empty(), issues }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanStrategy {
    /// Smallest intermediate first; ties broken by node ids.
    Greedy,
    /// Minimal total cost by dynamic programming over subsets.
    Exhaustive,
    /// Uniformly random connected merges; for testing plan independence.
    Random(u64),
}

pub const EXHAUSTIVE_LIMIT: usize = 12;

/// One pairwise merge. Ids below the node count are nodes; merge `k`
/// produces cluster `nodes + k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionPlan {
    pub nodes: usize,
    pub steps: Vec<Merge>,
    pub total_cost: f64,
}

/// Leg bookkeeping for planning: per node, (leg id, dim); legs paired by edges.
struct Legs {
    node_legs: Vec<Vec<(usize, f64)>>,
    partner: HashMap<usize, usize>,
    owner: Vec<usize>,
}

impl Legs {
    fn new(net: &TensorNetwork) -> Legs {
        let mut ids: HashMap<Endpoint, usize> = HashMap::new();
        let mut node_legs = Vec::new();
        let mut owner = Vec::new();
        for (k, (_, t)) in net.nodes.iter().enumerate() {
            let mut legs = Vec::new();
            for idx in t.tensor().indices() {
                let id = owner.len();
                owner.push(k);
                ids.insert(Endpoint::new(k, &idx.label), id);
                legs.push((id, idx.dim() as f64));
            }
            node_legs.push(legs);
        }
        let mut partner = HashMap::new();
        for (a, b) in &net.edges {
            if let (Some(&x), Some(&y)) = (ids.get(a), ids.get(b)) {
                partner.insert(x, y);
                partner.insert(y, x);
            }
        }
        Legs { node_legs, partner, owner }
    }

    /// Size of the tensor held by a set of nodes (bitmask over nodes).
    fn size(&self, members: &[bool]) -> f64 {
        let mut s = 1.0;
        for (k, legs) in self.node_legs.iter().enumerate() {
            if !members[k] {
                continue;
            }
            for (id, d) in legs {
                match self.partner.get(id) {
                    Some(p) if members[self.owner[*p]] => {}
                    _ => s *= d,
                }
            }
        }
        s
    }

    fn connected(&self, a: &[bool], b: &[bool]) -> bool {
        self.partner.iter().any(|(x, y)| a[self.owner[*x]] && b[self.owner[*y]])
    }
}

fn merge_cost(sa: f64, sb: f64, sab: f64) -> f64 {
    (sa * sb * sab).sqrt()
}

pub fn plan(net: &TensorNetwork, strategy: PlanStrategy) -> NetworkResult<ContractionPlan> {
    let n = net.nodes.len();
    let legs = Legs::new(net);
    let mask = |ids: &[usize]| {
        let mut m = vec![false; n];
        for &i in ids {
            m[i] = true;
        }
        m
    };
    match strategy {
        PlanStrategy::Exhaustive => exhaustive(n, &legs),
        PlanStrategy::Greedy | PlanStrategy::Random(_) => {
            let mut rng = match strategy {
                PlanStrategy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
                _ => None,
            };
            // cluster id -> member nodes
            let mut clusters: BTreeMap<usize, Vec<usize>> = (0..n).map(|k| (k, vec![k])).collect();
            let mut steps = Vec::new();
            let mut total = 0.0;
            while clusters.len() > 1 {
                let keys: Vec<usize> = clusters.keys().copied().collect();
                let mut candidates = Vec::new();
                for (i, &a) in keys.iter().enumerate() {
                    for &b in &keys[i + 1..] {
                        let (ma, mb) = (mask(&clusters[&a]), mask(&clusters[&b]));
                        if legs.connected(&ma, &mb) {
                            let mut both = clusters[&a].clone();
                            both.extend(&clusters[&b]);
                            let (sa, sb, sab) = (legs.size(&ma), legs.size(&mb), legs.size(&mask(&both)));
                            candidates.push((sab, a, b, merge_cost(sa, sb, sab)));
                        }
                    }
                }
                let (a, b, cost) = if candidates.is_empty() {
                    // disconnected components: outer products in id order
                    let (a, b) = (keys[0], keys[1]);
                    let (ma, mb) = (mask(&clusters[&a]), mask(&clusters[&b]));
                    let (sa, sb) = (legs.size(&ma), legs.size(&mb));
                    (a, b, sa * sb)
                } else if let Some(r) = rng.as_mut() {
                    let c = candidates.choose(r).unwrap();
                    (c.1, c.2, c.3)
                } else {
                    let c = candidates
                        .iter()
                        .min_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)))
                        .unwrap();
                    (c.1, c.2, c.3)
                };
                let mut members = clusters.remove(&a).unwrap();
                members.extend(clusters.remove(&b).unwrap());
                clusters.insert(n + steps.len(), members);
                steps.push(Merge { left: a, right: b, cost });
                total += cost;
            }
            Ok(ContractionPlan { nodes: n, steps, total_cost: total })
        }
    }
}

fn exhaustive(n: usize, legs: &Legs) -> NetworkResult<ContractionPlan> {
    if n > EXHAUSTIVE_LIMIT {
        return Err(NetworkError::PlannerLimit { nodes: n, limit: EXHAUSTIVE_LIMIT });
    }
    if n == 0 {
        return Ok(ContractionPlan { nodes: 0, steps: Vec::new(), total_cost: 0.0 });
    }
    let full = (1usize << n) - 1;
    let size: Vec<f64> = (0..=full)
        .map(|s| {
            let m: Vec<bool> = (0..n).map(|k| s >> k & 1 == 1).collect();
            legs.size(&m)
        })
        .collect();
    let mut best = vec![f64::INFINITY; full + 1];
    let mut split = vec![0usize; full + 1];
    for k in 0..n {
        best[1 << k] = 0.0;
    }
    for s in 1..=full {
        if s.count_ones() < 2 {
            continue;
        }
        let low = s & s.wrapping_neg();
        // enumerate subsets a of s containing the lowest bit
        let rest = s ^ low;
        let mut sub = rest;
        loop {
            let a = sub | low;
            if a != s {
                let b = s ^ a;
                let c = best[a] + best[b] + merge_cost(size[a], size[b], size[s]);
                if c < best[s] {
                    best[s] = c;
                    split[s] = a;
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    let mut steps = Vec::new();
    fn emit(s: usize, n: usize, split: &[usize], size: &[f64], steps: &mut Vec<Merge>) -> usize {
        if s.count_ones() == 1 {
            return s.trailing_zeros() as usize;
        }
        let a = split[s];
        let b = s ^ a;
        let ia = emit(a, n, split, size, steps);
        let ib = emit(b, n, split, size, steps);
        steps.push(Merge { left: ia, right: ib, cost: merge_cost(size[a], size[b], size[s]) });
        n + steps.len() - 1
    }
    emit(full, n, &split, &size, &mut steps);
    Ok(ContractionPlan { nodes: n, steps, total_cost: best[full] })
}

pub fn evaluate(net: &TensorNetwork) -> NetworkResult<StarTensor> {
    evaluate_with(net, PlanStrategy::Greedy)
}

/// Evaluate the network. Open indices appear in lexicographic order of
/// their names.
pub fn evaluate_with(net: &TensorNetwork, strategy: PlanStrategy) -> NetworkResult<StarTensor> {
    let report = validate(net);
    if !report.is_ok() {
        return Err(NetworkError::ValidationFailed(report));
    }
    let p = plan(net, strategy)?;
    execute(net, &p)
}

fn global(node: usize, label: &str) -> String {
    format!("n{node}:{label}")
}

pub fn execute(net: &TensorNetwork, p: &ContractionPlan) -> NetworkResult<StarTensor> {
    let n = net.nodes.len();
    if n == 0 {
        return Ok(StarTensor::scalar(1.0));
    }
    let mut clusters: HashMap<usize, (StarTensor, Vec<usize>)> = HashMap::new();
    for (k, (_, t)) in net.nodes.iter().enumerate() {
        let renames: Vec<(String, String)> = t.labels().iter().map(|l| (l.to_string(), global(k, l))).collect();
        let refs: Vec<(&str, &str)> = renames.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let mut g = t.relabel_many(&refs)?;
        for (a, b) in &net.edges {
            if a.node == k && b.node == k {
                g = star_contract(&g, &global(k, &a.label), &global(k, &b.label))?;
            }
        }
        clusters.insert(k, (g, vec![k]));
    }
    for (step, m) in p.steps.iter().enumerate() {
        let (ta, ma) = clusters.remove(&m.left).expect("plan references a live cluster");
        let (tb, mb) = clusters.remove(&m.right).expect("plan references a live cluster");
        let mut pairs = Vec::new();
        for (a, b) in &net.edges {
            if ma.contains(&a.node) && mb.contains(&b.node) {
                pairs.push((global(a.node, &a.label), global(b.node, &b.label)));
            } else if mb.contains(&a.node) && ma.contains(&b.node) {
                pairs.push((global(b.node, &b.label), global(a.node, &a.label)));
            }
        }
        let refs: Vec<(&str, &str)> = pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let merged = star_tensordot(&ta, &tb, &refs)?;
        let mut members = ma;
        members.extend(mb);
        clusters.insert(n + step, (merged, members));
    }
    assert_eq!(clusters.len(), 1, "plan must merge every cluster");
    let (result, _) = clusters.into_values().next().unwrap();
    let open = net.open_indices();
    let renames: Vec<(String, String)> =
        open.iter().map(|(name, ep)| (global(ep.node, &ep.label), name.clone())).collect();
    let refs: Vec<(&str, &str)> = renames.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let result = result.relabel_many(&refs)?;
    let order: Vec<&str> = open.keys().map(String::as_str).collect();
    Ok(result.permute(&order)?)
}

/// Emulate every node with matrix and classical algebras only.
pub fn emulate_network(net: &TensorNetwork) -> NetworkResult<TensorNetwork> {
    net.map_nodes(|t| Ok(emulate_via_matrix(t)?))
}

pub const NEGATIVITY_TOLERANCE: f64 = 1e-10;

/// Normalize a classical evaluation into a probability distribution.
pub fn to_probability(t: &StarTensor) -> NetworkResult<Tensor> {
    for (idx, alg) in t.tensor().indices().iter().zip(t.algebras()) {
        if !alg.is_classical() {
            return Err(NetworkError::NotClassical(idx.label.clone()));
        }
    }
    let tensor = t.tensor();
    let shape = tensor.shape();
    for (k, &v) in tensor.data().iter().enumerate() {
        if v < -NEGATIVITY_TOLERANCE {
            let mut index = vec![0; shape.len()];
            let mut r = k;
            for i in (0..shape.len()).rev() {
                index[i] = r % shape[i];
                r /= shape[i];
            }
            return Err(NetworkError::NegativeMass { index, value: v });
        }
    }
    let clipped = tensor.map(|v| v.max(0.0));
    let sum: f64 = clipped.data().iter().sum();
    if sum <= NEGATIVITY_TOLERANCE {
        return Err(NetworkError::ZeroMass(sum));
    }
    let once = clipped.scale(1.0 / sum);
    let again: f64 = once.data().iter().sum();
    Ok(once.scale(1.0 / again))
}
