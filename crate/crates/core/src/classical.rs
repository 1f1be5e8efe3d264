//! Classical statistical models: distributions, stochastic maps, Boltzmann
//! weights, Markov chains and lattice partition functions.

use serde::Serialize;
use thiserror::Error;

use crate::algebra::delta_algebra;
use crate::network::{NetworkError, NodeId, TensorNetwork};
use crate::star_tensor::{Direction, StarTensor, StarTensorError};
use crate::tensor::{Basis, Index, Tensor, TensorError, Tolerance};

#[derive(Debug, Error, Clone)]
pub enum ClassicalError {
    #[error("entries sum to {sum}, expected 1 over each input configuration")]
    NotNormalized { sum: f64 },
    #[error("negative entry {value} at flat position {position}")]
    NegativeEntry { position: usize, value: f64 },
    #[error("non-finite energy at flat position {0}")]
    NonFinite(usize),
    #[error("arity mismatch: {0}")]
    ArityMismatch(String),
    #[error("site ({0}, {1}) is outside the lattice")]
    SiteOutOfRange(usize, usize),
    #[error(transparent)]
    Star(#[from] StarTensorError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

pub type ClassicalResult<T> = Result<T, ClassicalError>;

/// A normalized positive *-tensor over delta algebras.
pub type StochasticMap = StarTensor;

const NORM_TOL: f64 = 1e-10;

fn delta_star(tensor: Tensor, directions: Option<Vec<Direction>>) -> ClassicalResult<StarTensor> {
    let algebras = tensor.indices().iter().map(|i| delta_algebra(&i.basis)).collect();
    Ok(StarTensor::new(tensor, algebras, directions)?)
}

fn check_entries(data: &[f64]) -> ClassicalResult<()> {
    for (position, &value) in data.iter().enumerate() {
        if !value.is_finite() || value < -NORM_TOL {
            return Err(ClassicalError::NegativeEntry { position, value });
        }
    }
    Ok(())
}

/// Probability distribution over `0..p.len()` with output label `"out"`.
pub fn prob_dist(p: &[f64]) -> ClassicalResult<StochasticMap> {
    if p.is_empty() {
        return Err(ClassicalError::ArityMismatch("empty distribution".into()));
    }
    prob_dist_on(&Basis::range(format!("S{}", p.len()), p.len()), p)
}

pub fn prob_dist_on(basis: &Basis, p: &[f64]) -> ClassicalResult<StochasticMap> {
    let t = Tensor::new(vec![Index::new("out", basis)], p.to_vec())?;
    stochastic_map(t, &["out"])
}

/// Wrap a nonnegative tensor as a stochastic map. Indices named in
/// `outputs` are outputs, the rest inputs; every input configuration must
/// carry total mass one.
pub fn stochastic_map(t: Tensor, outputs: &[&str]) -> ClassicalResult<StochasticMap> {
    for l in outputs {
        t.position(l)?;
    }
    check_entries(t.data())?;
    let directions: Vec<Direction> =
        t.labels().iter().map(|l| if outputs.contains(l) { Direction::Out } else { Direction::In }).collect();
    let out_pos: Vec<usize> = (0..t.rank()).filter(|&k| directions[k] == Direction::Out).collect();
    let mut order: Vec<&str> = t.labels().into_iter().filter(|l| !outputs.contains(l)).collect();
    order.extend(out_pos.iter().map(|&k| t.indices()[k].label.as_str()));
    let aligned = t.permute(&order)?;
    let out_size: usize = out_pos.iter().map(|&k| t.indices()[k].dim()).product();
    for chunk in aligned.data().chunks(out_size) {
        let sum: f64 = chunk.iter().sum();
        if (sum - 1.0).abs() > NORM_TOL.max(1e-12 * out_size as f64) {
            return Err(ClassicalError::NotNormalized { sum });
        }
    }
    delta_star(t, Some(directions))
}

/// `matrix[out][in]`: column-stochastic transition matrix on `basis`, labels
/// `"in"` and `"out"`.
pub fn stochastic_matrix(basis: &Basis, matrix: &[Vec<f64>]) -> ClassicalResult<StochasticMap> {
    let d = basis.len();
    if matrix.len() != d || matrix.iter().any(|r| r.len() != d) {
        return Err(ClassicalError::ArityMismatch(format!("expected a {d}x{d} matrix")));
    }
    let t = Tensor::from_fn(vec![Index::new("in", basis), Index::new("out", basis)], |ix| matrix[ix[1]][ix[0]])?;
    stochastic_map(t, &["out"])
}

/// Delta tensor with labels `c0..c{n-1}`. With `in_index = Some(k)` index
/// `ck` is the input and the rest outputs; with `None` it is undirected.
pub fn copy_tensor(basis: &Basis, n: usize, in_index: Option<usize>) -> ClassicalResult<StarTensor> {
    if n == 0 || in_index.is_some_and(|k| k >= n) {
        return Err(ClassicalError::ArityMismatch(format!("copy tensor with {n} indices, input {in_index:?}")));
    }
    let indices = (0..n).map(|k| Index::new(format!("c{k}"), basis)).collect();
    let t = Tensor::from_fn(indices, |ix| if ix.iter().all(|&v| v == ix[0]) { 1.0 } else { 0.0 })?;
    let dirs = in_index.map(|k| (0..n).map(|j| if j == k { Direction::In } else { Direction::Out }).collect());
    delta_star(t, dirs)
}

/// Entrywise `exp(-beta * H)` for an energy table `H`.
#[derive(Clone, Debug)]
pub struct BoltzmannWeight {
    pub tensor: StarTensor,
    pub energies: Tensor,
    pub beta: f64,
}

pub fn boltzmann(energies: &Tensor, beta: f64) -> ClassicalResult<BoltzmannWeight> {
    if !beta.is_finite() {
        return Err(ClassicalError::NonFinite(0));
    }
    if let Some(k) = energies.data().iter().position(|e| !e.is_finite()) {
        return Err(ClassicalError::NonFinite(k));
    }
    let w = energies.map(|e| (-beta * e).exp());
    Ok(BoltzmannWeight { tensor: delta_star(w, None)?, energies: energies.clone(), beta })
}

/// Ising bond energy `-J s s'` with spins `±1` on basis elements `0, 1`.
pub fn ising_bond(basis: &Basis, coupling: f64) -> ClassicalResult<Tensor> {
    if basis.len() != 2 {
        return Err(ClassicalError::ArityMismatch("Ising spins need a two-element basis".into()));
    }
    let spin = |v: usize| if v == 0 { 1.0 } else { -1.0 };
    Ok(Tensor::from_fn(vec![Index::new("a", basis), Index::new("b", basis)], |ix| {
        -coupling * spin(ix[0]) * spin(ix[1])
    })?)
}

fn unit_cap(basis: &Basis) -> ClassicalResult<StarTensor> {
    copy_tensor(basis, 1, Some(0))
}

fn single(t: &StarTensor, dir: Direction) -> ClassicalResult<String> {
    let ls = t.labels_with(dir);
    if ls.len() != 1 {
        return Err(ClassicalError::ArityMismatch(format!("expected one {dir} index, found {}", ls.len())));
    }
    Ok(ls[0].to_string())
}

/// Chain `p0 -> S -> S -> ...` observed after the listed numbers of steps.
/// Observations are open indices `t{k}`; the final state is marginalized.
pub fn markov_network(
    p0: &StochasticMap,
    s: &StochasticMap,
    total_steps: usize,
    observe_at: &[usize],
) -> ClassicalResult<TensorNetwork> {
    if !p0.labels_with(Direction::In).is_empty() {
        return Err(ClassicalError::ArityMismatch("initial distribution has inputs".into()));
    }
    let p_out = single(p0, Direction::Out)?;
    let (s_in, s_out) = (single(s, Direction::In)?, single(s, Direction::Out)?);
    if let Some(&k) = observe_at.iter().find(|&&k| k == 0 || k > total_steps) {
        return Err(ClassicalError::ArityMismatch(format!("observation step {k} outside 1..={total_steps}")));
    }
    let basis = p0.tensor().index(&p_out)?.basis.clone();
    let mut net = TensorNetwork::new();
    net.set_model_output(true);
    let mut cur: (NodeId, String) = (net.add_node("p0", p0.clone()), p_out);
    for k in 1..=total_steps {
        let node = net.add_node(&format!("s{k}"), s.clone());
        net.connect(cur.0, &cur.1, node, &s_in);
        cur = (node, s_out.clone());
        if observe_at.contains(&k) {
            let c = net.add_node(&format!("copy{k}"), copy_tensor(&basis, 3, Some(0))?);
            net.connect(cur.0, &cur.1, c, "c0");
            net.open(&format!("t{k}"), c, "c1");
            cur = (c, "c2".into());
        }
    }
    let end = net.add_node("end", unit_cap(&basis)?);
    net.connect(cur.0, &cur.1, end, "c0");
    Ok(net)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeGeometry {
    /// Degrees of freedom on vertices, two-index weights on edges.
    VertexEdge,
    /// Degrees of freedom on vertices, four-index weights on square faces,
    /// corners ordered `(r,c), (r,c+1), (r+1,c), (r+1,c+1)`.
    VertexPlaquette,
}

/// A stochastic map reading the listed sites; its inputs match the sites
/// in order and its outputs become open indices.
#[derive(Clone, Debug)]
pub struct Observation {
    pub sites: Vec<(usize, usize)>,
    pub map: StochasticMap,
}

/// Identity readout of one site, labels `"in"` and `"out"`.
pub fn readout(basis: &Basis) -> ClassicalResult<StochasticMap> {
    let d = basis.len();
    let m: Vec<Vec<f64>> = (0..d).map(|a| (0..d).map(|b| if a == b { 1.0 } else { 0.0 }).collect()).collect();
    stochastic_matrix(basis, &m)
}

/// Partition function network on an `rows x cols` vertex lattice with open
/// boundaries. Observation `k` exposes open index `o{k}` (or `o{k}.<label>`
/// when its map has several outputs).
pub fn lattice_partition_network(
    geometry: LatticeGeometry,
    rows: usize,
    cols: usize,
    weight: &BoltzmannWeight,
    observations: &[Observation],
) -> ClassicalResult<TensorNetwork> {
    let w = &weight.tensor;
    let arity = match geometry {
        LatticeGeometry::VertexEdge => 2,
        LatticeGeometry::VertexPlaquette => 4,
    };
    if w.rank() != arity {
        return Err(ClassicalError::ArityMismatch(format!("weight has {} indices, geometry needs {arity}", w.rank())));
    }
    let basis = w.tensor().indices()[0].basis.clone();
    if w.tensor().indices().iter().any(|i| i.basis != basis) {
        return Err(ClassicalError::ArityMismatch("weight indices must share one basis".into()));
    }
    let mut factors: Vec<Vec<(usize, usize)>> = Vec::new();
    match geometry {
        LatticeGeometry::VertexEdge => {
            for r in 0..rows {
                for c in 0..cols {
                    if c + 1 < cols {
                        factors.push(vec![(r, c), (r, c + 1)]);
                    }
                    if r + 1 < rows {
                        factors.push(vec![(r, c), (r + 1, c)]);
                    }
                }
            }
        }
        LatticeGeometry::VertexPlaquette => {
            for r in 0..rows.saturating_sub(1) {
                for c in 0..cols.saturating_sub(1) {
                    factors.push(vec![(r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)]);
                }
            }
        }
    }
    for ob in observations {
        if let Some(&(r, c)) = ob.sites.iter().find(|&&(r, c)| r >= rows || c >= cols) {
            return Err(ClassicalError::SiteOutOfRange(r, c));
        }
        if ob.map.labels_with(Direction::In).len() != ob.sites.len() {
            return Err(ClassicalError::ArityMismatch("observation inputs must match its sites".into()));
        }
    }
    // legs attached to each site: (node, label)
    let mut site_legs: Vec<Vec<(NodeId, String)>> = vec![Vec::new(); rows * cols];
    let mut net = TensorNetwork::new();
    net.set_model_output(true);
    let labels: Vec<String> = w.labels().iter().map(|s| s.to_string()).collect();
    for (k, sites) in factors.iter().enumerate() {
        let node = net.add_node(&format!("w{k}"), w.clone());
        for (&(r, c), l) in sites.iter().zip(&labels) {
            site_legs[r * cols + c].push((node, l.clone()));
        }
    }
    for (k, ob) in observations.iter().enumerate() {
        let node = net.add_node(&format!("obs{k}"), ob.map.clone());
        for (&(r, c), l) in ob.sites.iter().zip(ob.map.labels_with(Direction::In)) {
            site_legs[r * cols + c].push((node, l.to_string()));
        }
        let outs = ob.map.labels_with(Direction::Out);
        for l in &outs {
            let name = if outs.len() == 1 { format!("o{k}") } else { format!("o{k}.{l}") };
            net.open(&name, node, l);
        }
    }
    for r in 0..rows {
        for c in 0..cols {
            let legs = &site_legs[r * cols + c];
            if legs.is_empty() {
                net.add_node(&format!("v{r}_{c}"), StarTensor::scalar(basis.len() as f64));
                continue;
            }
            let node = net.add_node(&format!("v{r}_{c}"), copy_tensor(&basis, legs.len(), None)?);
            for (j, (other, l)) in legs.iter().enumerate() {
                net.connect(node, &format!("c{j}"), *other, l);
            }
        }
    }
    Ok(net)
}

/// Whether entries of a classical tensor sum to one over each input.
pub fn is_stochastic(t: &StarTensor, tol: Tolerance) -> bool {
    crate::star_tensor::check_normalized_with(t, tol).map(|r| r.passed).unwrap_or(false)
        && t.tensor().data().iter().all(|&v| v >= -tol.atol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::evaluate;

    #[test]
    fn prob_dist_examples() {
        assert!(prob_dist(&[1.0]).is_ok());
        assert!(prob_dist(&[0.5, 0.5]).is_ok());
        assert!(matches!(prob_dist(&[0.5, 0.6]), Err(ClassicalError::NotNormalized { .. })));
        assert!(matches!(prob_dist(&[1.5, -0.5]), Err(ClassicalError::NegativeEntry { .. })));
    }

    #[test]
    fn copy_three() {
        let b = Basis::range("B", 2);
        let c = copy_tensor(&b, 3, Some(0)).unwrap();
        let nz: Vec<usize> = c.tensor().data().iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(k, _)| k).collect();
        assert_eq!(nz, vec![0, 7]);
    }

    #[test]
    fn markov_identity_returns_initial() {
        let p0 = prob_dist(&[0.3, 0.7]).unwrap();
        let b = p0.tensor().indices()[0].basis.clone();
        let s = readout(&b).unwrap();
        let net = markov_network(&p0, &s, 1, &[1]).unwrap();
        let r = evaluate(&net).unwrap();
        assert_eq!(r.labels(), vec!["t1"]);
        assert!((r.tensor().data()[0] - 0.3).abs() < 1e-15);
    }
}
