//! Quantum models over the quantum algebra `M_d(R) ⊗ C`.
//!
//! A quantum index of dimension `d` is the realification of a complex index
//! over `(ket, bra)` pairs: the element `(k, b)` of a density matrix is
//! `rho[k][b]`. Maps act as `C((k', b'), (k, b))` so that contracting the
//! input with `rho` gives the output matrix.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{delta_algebra, hilbert_basis, matrix_algebra, quantum_algebra, StarAlgebra};
use crate::classical::{copy_tensor, ClassicalError};
use crate::complex::{derealify, realify_partial, ComplexError, ComplexTensor};
use crate::network::{check_causal, NetworkError, NodeId, TensorNetwork};
use crate::star_tensor::{Direction, StarTensor, StarTensorError};
use crate::tensor::{Basis, Index, Tensor, TensorError};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Tolerance for unitarity, hermiticity and resolution checks on inputs.
pub const INPUT_TOL: f64 = 1e-9;
/// Relative spectral gap below which eigenvalues count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone)]
pub enum QuantumError {
    #[error("state has norm {0}, expected 1")]
    NotNormalizedState(f64),
    #[error("matrix is not unitary (residual {0:e})")]
    NotUnitary(f64),
    #[error("matrix is not Hermitian (residual {0:e})")]
    NotHermitian(f64),
    #[error("element {0} is not positive semidefinite")]
    NotPSD(usize),
    #[error("operators do not sum to the identity (residual {0:e})")]
    NotResolution(f64),
    #[error("Kraus operators are not trace preserving (residual {0:e})")]
    SumNotTracePreserving(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("network is not causal: {0}")]
    CausalityViolation(String),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Star(#[from] StarTensorError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Classical(#[from] ClassicalError),
}

pub type QuantumResult<T> = Result<T, QuantumError>;

/// Basis of `(ket, bra)` pairs, shared with the matrix algebra.
pub fn pair_basis(d: usize) -> Basis {
    matrix_algebra(&hilbert_basis(d)).basis().clone()
}

/// Classical basis `{0..n-1}` used for settings and outcomes.
pub fn outcome_basis(n: usize) -> Basis {
    Basis::range(format!("S{n}"), n)
}

#[derive(Clone, Debug)]
pub(crate) enum Leg {
    Quantum { label: String, d: usize, realify: Direction, dir: Option<Direction> },
    Classical { label: String, basis: Basis, dir: Option<Direction> },
}

impl Leg {
    pub(crate) fn q(label: &str, d: usize, realify: Direction, dir: Option<Direction>) -> Leg {
        Leg::Quantum { label: label.into(), d, realify, dir }
    }

    pub(crate) fn c(label: &str, basis: &Basis, dir: Option<Direction>) -> Leg {
        Leg::Classical { label: label.into(), basis: basis.clone(), dir }
    }

    fn index(&self) -> Index {
        match self {
            Leg::Quantum { label, d, .. } => Index::new(label.as_str(), &pair_basis(*d)),
            Leg::Classical { label, basis, .. } => Index::new(label.as_str(), basis),
        }
    }

    fn algebra(&self) -> StarAlgebra {
        match self {
            Leg::Quantum { d, .. } => quantum_algebra(*d),
            Leg::Classical { basis, .. } => delta_algebra(basis),
        }
    }

    fn dir(&self) -> Option<Direction> {
        match self {
            Leg::Quantum { dir, .. } | Leg::Classical { dir, .. } => *dir,
        }
    }
}

/// Realify a complex function of the legs into a *-tensor. Quantum legs
/// are indexed by `k * d + b`.
pub(crate) fn assemble<F: FnMut(&[usize]) -> Complex64>(legs: &[Leg], f: F) -> QuantumResult<StarTensor> {
    let ct = ComplexTensor::from_fn(legs.iter().map(Leg::index).collect(), f)?;
    let dirs: Vec<(&str, Direction)> = legs
        .iter()
        .filter_map(|l| match l {
            Leg::Quantum { label, realify, .. } => Some((label.as_str(), *realify)),
            Leg::Classical { .. } => None,
        })
        .collect();
    let t = realify_partial(&ct, &dirs)?;
    let algebras = legs.iter().map(Leg::algebra).collect();
    let directions: Option<Vec<Direction>> = legs.iter().map(Leg::dir).collect();
    Ok(StarTensor::new(t, algebras, directions)?)
}

fn frob(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn square(m: &CMatrix) -> QuantumResult<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(QuantumError::DimensionMismatch(format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    Ok(m.nrows())
}

fn same_dim(ms: &[CMatrix]) -> QuantumResult<usize> {
    let first = ms.first().ok_or_else(|| QuantumError::DimensionMismatch("empty operator list".into()))?;
    let d = square(first)?;
    for m in ms {
        if square(m)? != d {
            return Err(QuantumError::DimensionMismatch("operators of different sizes".into()));
        }
    }
    Ok(d)
}

fn check_hermitian(m: &CMatrix) -> QuantumResult<()> {
    square(m)?;
    let r = frob(&(m - m.adjoint()));
    if r > INPUT_TOL * frob(m).max(1.0) {
        return Err(QuantumError::NotHermitian(r));
    }
    Ok(())
}

fn is_psd(m: &CMatrix) -> bool {
    let h = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(h);
    let scale = eig.eigenvalues.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    eig.eigenvalues.iter().all(|&v| v >= -INPUT_TOL * scale)
}

fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let h = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(h);
    let v = &eig.eigenvectors;
    let fd = CMatrix::from_diagonal(&eig.eigenvalues.map(|x| Complex64::new(f(x), 0.0)));
    v * fd * v.adjoint()
}

/// Density matrix as a *-tensor with one quantum output `"out"`.
pub fn density_matrix(rho: &CMatrix) -> QuantumResult<StarTensor> {
    let d = square(rho)?;
    check_hermitian(rho)?;
    if !is_psd(rho) {
        return Err(QuantumError::NotPSD(0));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > INPUT_TOL || tr.im.abs() > INPUT_TOL {
        return Err(QuantumError::NotNormalizedState(tr.norm()));
    }
    assemble(&[Leg::q("out", d, Direction::Out, Some(Direction::Out))], |ix| rho[(ix[0] / d, ix[0] % d)])
}

pub fn density_from_pure(psi: &CVector) -> QuantumResult<StarTensor> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > INPUT_TOL {
        return Err(QuantumError::NotNormalizedState(norm));
    }
    density_matrix(&(psi * psi.adjoint()))
}

/// State of several parties, one quantum output `q0, q1, ..` per factor of
/// `dims`; the matrix uses the Kronecker ordering of the factors.
pub fn multipartite_state(rho: &CMatrix, dims: &[usize]) -> QuantumResult<StarTensor> {
    let total: usize = dims.iter().product();
    if square(rho)? != total {
        return Err(QuantumError::DimensionMismatch(format!(
            "state has dimension {}, parties give {total}",
            rho.nrows()
        )));
    }
    density_matrix(rho)?;
    let legs: Vec<Leg> = dims
        .iter()
        .enumerate()
        .map(|(p, &d)| Leg::q(&format!("q{p}"), d, Direction::Out, Some(Direction::Out)))
        .collect();
    assemble(&legs, |ix| {
        let (mut k, mut b) = (0, 0);
        for (p, &d) in dims.iter().enumerate() {
            k = k * d + ix[p] / d;
            b = b * d + ix[p] % d;
        }
        rho[(k, b)]
    })
}

/// The unit of the quantum algebra as a normalized tensor with input `"in"`.
pub fn trace_tensor(d: usize) -> QuantumResult<StarTensor> {
    assemble(&[Leg::q("in", d, Direction::In, Some(Direction::In))], |ix| {
        if ix[0] / d == ix[0] % d {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn kraus_value(kraus: &[CMatrix], d: usize, out: usize, inp: usize) -> Complex64 {
    let (k1, b1, k, b) = (out / d, out % d, inp / d, inp % d);
    kraus.iter().map(|m| m[(k1, k)] * m[(b1, b)].conj()).sum()
}

fn kraus_defect(kraus: &[CMatrix], d: usize) -> f64 {
    let mut s = CMatrix::zeros(d, d);
    for m in kraus {
        s += m.adjoint() * m;
    }
    frob(&(s - CMatrix::identity(d, d)))
}

/// Channel `rho -> sum_j K_j rho K_j^†` with labels `"in"` and `"out"`.
pub fn channel_from_kraus(kraus: &[CMatrix]) -> QuantumResult<StarTensor> {
    let d = same_dim(kraus)?;
    let r = kraus_defect(kraus, d);
    if r > INPUT_TOL {
        return Err(QuantumError::SumNotTracePreserving(r));
    }
    cp_map(kraus, d)
}

fn cp_map(kraus: &[CMatrix], d: usize) -> QuantumResult<StarTensor> {
    assemble(
        &[Leg::q("in", d, Direction::In, Some(Direction::In)), Leg::q("out", d, Direction::Out, Some(Direction::Out))],
        |ix| kraus_value(kraus, d, ix[1], ix[0]),
    )
}

fn check_unitary(u: &CMatrix) -> QuantumResult<usize> {
    let d = square(u)?;
    let r = frob(&(u.adjoint() * u - CMatrix::identity(d, d)));
    if r > INPUT_TOL {
        return Err(QuantumError::NotUnitary(r));
    }
    Ok(d)
}

pub fn channel_from_unitary(u: &CMatrix) -> QuantumResult<StarTensor> {
    check_unitary(u)?;
    channel_from_kraus(std::slice::from_ref(u))
}

/// POVM with quantum input `"in"` and classical output `"out"` over
/// `outcome_basis(n)`.
pub fn povm(elements: &[CMatrix]) -> QuantumResult<StarTensor> {
    let d = same_dim(elements)?;
    check_resolution(elements, d)?;
    let ob = outcome_basis(elements.len());
    assemble(&[Leg::q("in", d, Direction::In, Some(Direction::In)), Leg::c("out", &ob, Some(Direction::Out))], |ix| {
        elements[ix[1]][(ix[0] % d, ix[0] / d)]
    })
}

fn check_resolution(elements: &[CMatrix], d: usize) -> QuantumResult<()> {
    for (i, p) in elements.iter().enumerate() {
        check_hermitian(p)?;
        if !is_psd(p) {
            return Err(QuantumError::NotPSD(i));
        }
    }
    let sum = elements.iter().fold(CMatrix::zeros(d, d), |a, p| a + p);
    let r = frob(&(sum - CMatrix::identity(d, d)));
    if r > INPUT_TOL {
        return Err(QuantumError::NotResolution(r));
    }
    Ok(())
}

/// Projective measurement of an observable: outcomes are its distinct
/// eigenvalues in ascending order.
#[derive(Clone, Debug)]
pub struct ProjectiveMeasurement {
    pub tensor: StarTensor,
    pub values: Vec<f64>,
    pub projectors: Vec<CMatrix>,
}

pub fn projective_from_observable(o: &CMatrix) -> QuantumResult<ProjectiveMeasurement> {
    let d = square(o)?;
    check_hermitian(o)?;
    let eig = SymmetricEigen::new((o + o.adjoint()).scale(0.5));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let radius = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &k in &order {
        match groups.last_mut() {
            Some(g) if (eig.eigenvalues[k] - eig.eigenvalues[*g.last().unwrap()]).abs() <= DEGENERACY_TOL * radius => {
                g.push(k)
            }
            _ => groups.push(vec![k]),
        }
    }
    let mut values = Vec::new();
    let mut projectors = Vec::new();
    for g in &groups {
        values.push(g.iter().map(|&k| eig.eigenvalues[k]).sum::<f64>() / g.len() as f64);
        let mut p = CMatrix::zeros(d, d);
        for &k in g {
            let v = eig.eigenvectors.column(k);
            p += v * v.adjoint();
        }
        projectors.push(p);
    }
    let names: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
    let ob = Basis::new(format!("spec({})", names.join(",")), names)?;
    let tensor = assemble(
        &[Leg::q("in", d, Direction::In, Some(Direction::In)), Leg::c("out", &ob, Some(Direction::Out))],
        |ix| projectors[ix[1]][(ix[0] % d, ix[0] / d)],
    )?;
    Ok(ProjectiveMeasurement { tensor, values, projectors })
}

/// Ensemble: classical input `"in"` selects the density matrix emitted on
/// quantum output `"out"`.
pub fn ensemble(states: &[CMatrix]) -> QuantumResult<StarTensor> {
    let d = same_dim(states)?;
    for (i, s) in states.iter().enumerate() {
        check_hermitian(s)?;
        if !is_psd(s) {
            return Err(QuantumError::NotPSD(i));
        }
        let tr = s.trace();
        if (tr.re - 1.0).abs() > INPUT_TOL || tr.im.abs() > INPUT_TOL {
            return Err(QuantumError::NotNormalizedState(tr.norm()));
        }
    }
    let ib = outcome_basis(states.len());
    assemble(&[Leg::c("in", &ib, Some(Direction::In)), Leg::q("out", d, Direction::Out, Some(Direction::Out))], |ix| {
        states[ix[0]][(ix[1] / d, ix[1] % d)]
    })
}

/// Instrument from CP maps given by Kraus sets; labels `"in"`, `"out"`
/// (quantum) and `"outcome"` (classical).
pub fn instrument(maps: &[Vec<CMatrix>]) -> QuantumResult<StarTensor> {
    let all: Vec<CMatrix> = maps.iter().flatten().cloned().collect();
    let d = same_dim(&all)?;
    if maps.iter().any(Vec::is_empty) {
        return Err(QuantumError::DimensionMismatch("instrument element without Kraus operators".into()));
    }
    let r = kraus_defect(&all, d);
    if r > INPUT_TOL {
        return Err(QuantumError::SumNotTracePreserving(r));
    }
    let ob = outcome_basis(maps.len());
    assemble(
        &[
            Leg::q("in", d, Direction::In, Some(Direction::In)),
            Leg::q("out", d, Direction::Out, Some(Direction::Out)),
            Leg::c("outcome", &ob, Some(Direction::Out)),
        ],
        |ix| kraus_value(&maps[ix[2]], d, ix[1], ix[0]),
    )
}

/// Instrument `rho -> P_i rho P_i` of a projective measurement.
pub fn projective_instrument(projectors: &[CMatrix]) -> QuantumResult<StarTensor> {
    instrument(&projectors.iter().map(|p| vec![p.clone()]).collect::<Vec<_>>())
}

/// Controlled operation: classical `"setting"` selects the channel acting
/// from `"in"` to `"out"`.
pub fn controlled_op(channels: &[Vec<CMatrix>]) -> QuantumResult<StarTensor> {
    let all: Vec<CMatrix> = channels.iter().flatten().cloned().collect();
    let d = same_dim(&all)?;
    for ch in channels {
        let r = kraus_defect(ch, d);
        if r > INPUT_TOL {
            return Err(QuantumError::SumNotTracePreserving(r));
        }
    }
    let sb = outcome_basis(channels.len());
    assemble(
        &[
            Leg::c("setting", &sb, Some(Direction::In)),
            Leg::q("in", d, Direction::In, Some(Direction::In)),
            Leg::q("out", d, Direction::Out, Some(Direction::Out)),
        ],
        |ix| kraus_value(&channels[ix[0]], d, ix[2], ix[1]),
    )
}

/// Controlled measurement: classical `"setting"` selects the POVM applied
/// to `"in"`, with classical `"outcome"`. All POVMs need the same number
/// of outcomes.
pub fn controlled_measurement(povms: &[Vec<CMatrix>]) -> QuantumResult<StarTensor> {
    let n = povms.first().map(Vec::len).unwrap_or(0);
    if n == 0 || povms.iter().any(|p| p.len() != n) {
        return Err(QuantumError::DimensionMismatch("settings need equally many outcomes".into()));
    }
    let all: Vec<CMatrix> = povms.iter().flatten().cloned().collect();
    let d = same_dim(&all)?;
    for p in povms {
        check_resolution(p, d)?;
    }
    let (sb, ob) = (outcome_basis(povms.len()), outcome_basis(n));
    assemble(
        &[
            Leg::c("setting", &sb, Some(Direction::In)),
            Leg::q("in", d, Direction::In, Some(Direction::In)),
            Leg::c("outcome", &ob, Some(Direction::Out)),
        ],
        |ix| povms[ix[0]][ix[2]][(ix[1] % d, ix[1] / d)],
    )
}

/// Anti-unitary `A = κ Ā` acting as `rho -> Ā conj(rho) Ā^†`, labels
/// `"in"` and `"out"`. The input is realified like an output, which is what
/// makes the map antilinear.
pub fn anti_unitary(abar: &CMatrix) -> QuantumResult<StarTensor> {
    let d = check_unitary(abar)?;
    let k = std::slice::from_ref(abar);
    assemble(
        &[Leg::q("in", d, Direction::Out, Some(Direction::In)), Leg::q("out", d, Direction::Out, Some(Direction::Out))],
        |ix| kraus_value(k, d, ix[1], ix[0]),
    )
}

/// `exp(-beta H)` on one undirected quantum index `"q"`. Positive but not
/// normalized.
pub fn quantum_boltzmann(h: &CMatrix, beta: f64) -> QuantumResult<StarTensor> {
    let d = square(h)?;
    check_hermitian(h)?;
    let w = hermitian_function(h, |x| (-beta * x).exp());
    assemble(&[Leg::q("q", d, Direction::Out, None)], |ix| w[(ix[0] / d, ix[0] % d)])
}

/// Read back the complex matrix carried by a quantum index of a
/// one-index tensor, e.g. an evaluated state.
pub fn to_density_matrix(t: &StarTensor) -> QuantumResult<CMatrix> {
    if t.rank() != 1 {
        return Err(QuantumError::DimensionMismatch(format!("expected one index, found {}", t.rank())));
    }
    let label = t.labels()[0].to_string();
    let ct = derealify(t.tensor(), &[(label.as_str(), Direction::Out)])?;
    let n = ct.len();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return Err(QuantumError::DimensionMismatch(format!("{n} is not a square")));
    }
    let vals = ct.values();
    Ok(CMatrix::from_fn(d, d, |k, b| vals[k * d + b]))
}

/// Bell test: `state` has quantum outputs `q0, q1`; each measurement is a
/// [`controlled_measurement`]. Open indices are outcomes `a`, `b` and
/// settings `i`, `j`.
pub fn bell_network(state: &StarTensor, m1: &StarTensor, m2: &StarTensor) -> QuantumResult<TensorNetwork> {
    for m in [m1, m2] {
        for l in ["setting", "in", "outcome"] {
            m.tensor().position(l)?;
        }
    }
    state.tensor().position("q0")?;
    state.tensor().position("q1")?;
    let mut net = TensorNetwork::new();
    net.set_model_output(true);
    let s = net.add_node("state", state.clone());
    let a = net.add_node("alice", m1.clone());
    let b = net.add_node("bob", m2.clone());
    net.connect(s, "q0", a, "in").connect(s, "q1", b, "in");
    net.open("a", a, "outcome").open("i", a, "setting").open("b", b, "outcome").open("j", b, "setting");
    Ok(net)
}

/// CHSH value of `P(a, b | i, j)` with index order `a, b, i, j` and two
/// outcomes and settings per party: the largest `|E00 + E01 + E10 + E11|`
/// with exactly one correlator negated.
pub fn chsh(p: &Tensor) -> QuantumResult<f64> {
    if p.shape() != vec![2, 2, 2, 2] {
        return Err(QuantumError::DimensionMismatch(format!("CHSH needs shape [2,2,2,2], got {:?}", p.shape())));
    }
    let e = |i: usize, j: usize| -> f64 {
        let mut s = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let sign = if a == b { 1.0 } else { -1.0 };
                s += sign * p.get(&[a, b, i, j]);
            }
        }
        s
    };
    let es = [e(0, 0), e(0, 1), e(1, 0), e(1, 1)];
    let total: f64 = es.iter().sum();
    Ok((0..4).map(|k| (total - 2.0 * es[k]).abs()).fold(0.0, f64::max))
}

#[derive(Clone, Debug, Serialize)]
pub struct ChshReport {
    pub value: f64,
    pub classical_bound: f64,
    pub tsirelson_bound: f64,
}

/// Builder for circuits on named wires. Every step must keep the network
/// causal; wires left open at the end are traced out.
#[derive(Clone, Debug, Default)]
pub struct Circuit {
    net: TensorNetwork,
    wires: BTreeMap<String, (NodeId, String, usize)>,
}

impl Circuit {
    pub fn new() -> Circuit {
        let mut net = TensorNetwork::new();
        net.set_model_output(true);
        Circuit { net, wires: BTreeMap::new() }
    }

    fn quantum_dim(t: &StarTensor, label: &str) -> QuantumResult<usize> {
        let n = t.tensor().index(label)?.dim();
        let d = ((n / 2) as f64).sqrt().round() as usize;
        if t.algebra(label)? != &quantum_algebra(d) {
            return Err(QuantumError::DimensionMismatch(format!("index `{label}` is not quantum")));
        }
        Ok(d)
    }

    /// Add `op`, feeding wires into its inputs (`(wire, label)`) and
    /// continuing wires from its outputs. Other indices stay open under
    /// the names given in `open`.
    pub fn apply(
        &mut self,
        name: &str,
        op: &StarTensor,
        inputs: &[(&str, &str)],
        outputs: &[(&str, &str)],
        open: &[(&str, &str)],
    ) -> QuantumResult<NodeId> {
        for (w, _) in inputs {
            if !self.wires.contains_key(*w) {
                return Err(QuantumError::DimensionMismatch(format!("no open wire `{w}`")));
            }
        }
        let node = self.net.add_node(name, op.clone());
        for (w, l) in inputs {
            let (src, sl, d) = self.wires.remove(*w).unwrap();
            if Self::quantum_dim(op, l)? != d {
                return Err(QuantumError::DimensionMismatch(format!("wire `{w}` has dimension {d}")));
            }
            self.net.connect(src, &sl, node, l);
        }
        for (w, l) in outputs {
            let d = Self::quantum_dim(op, l)?;
            self.wires.insert(w.to_string(), (node, l.to_string(), d));
        }
        for (n, l) in open {
            self.net.open(n, node, l);
        }
        Ok(node)
    }

    pub fn prepare(&mut self, wire: &str, state: &StarTensor) -> QuantumResult<NodeId> {
        let label = state.labels_with(Direction::Out)[0].to_string();
        self.apply(&format!("prep_{wire}"), state, &[], &[(wire, &label)], &[])
    }

    pub fn channel(&mut self, wire: &str, channel: &StarTensor) -> QuantumResult<NodeId> {
        let name = format!("op{}", self.net.nodes().len());
        self.apply(&name, channel, &[(wire, "in")], &[(wire, "out")], &[])
    }

    /// POVM (`in`/`out`) ends the wire; an instrument (`in`/`out`/`outcome`)
    /// continues it. The outcome is exposed as `outcome`.
    pub fn measure(&mut self, wire: &str, m: &StarTensor, outcome: &str) -> QuantumResult<NodeId> {
        let name = format!("m{}", self.net.nodes().len());
        if m.tensor().has_label("outcome") {
            self.apply(&name, m, &[(wire, "in")], &[(wire, "out")], &[(outcome, "outcome")])
        } else {
            self.apply(&name, m, &[(wire, "in")], &[], &[(outcome, "out")])
        }
    }

    /// Trace out remaining wires and check causality.
    pub fn finish(mut self) -> QuantumResult<TensorNetwork> {
        for (w, (node, label, d)) in std::mem::take(&mut self.wires) {
            let tr = self.net.add_node(&format!("trace_{w}"), trace_tensor(d)?);
            self.net.connect(node, &label, tr, "in");
        }
        let report = check_causal(&self.net);
        if !report.causal {
            return Err(QuantumError::CausalityViolation(format!("{:?}", report.issues)));
        }
        Ok(self.net)
    }
}

/// Prepare, apply channels in order, then measure (POVMs or instruments),
/// on a single wire. Outcomes are open as `m0, m1, ..`.
pub fn circuit_network(
    prepare: &StarTensor,
    channels: &[StarTensor],
    measurements: &[StarTensor],
) -> QuantumResult<TensorNetwork> {
    let mut c = Circuit::new();
    c.prepare("w", prepare)?;
    for ch in channels {
        c.channel("w", ch)?;
    }
    for (k, m) in measurements.iter().enumerate() {
        c.measure("w", m, &format!("m{k}"))?;
    }
    c.finish()
}

/// Classical stand-in for a Bell setup: a correlated distribution over
/// hidden values `lambda`, and deterministic responses per party.
/// `responses[p][i][lambda]` is party `p`'s outcome on setting `i`.
pub fn classical_bell_network(hidden: &[f64], responses: [&[Vec<usize>]; 2]) -> QuantumResult<TensorNetwork> {
    let n = hidden.len();
    let hb = outcome_basis(n);
    let p = crate::classical::prob_dist_on(&hb, hidden)?;
    let mut net = TensorNetwork::new();
    net.set_model_output(true);
    let src = net.add_node("hidden", p);
    let cp = net.add_node("copy", copy_tensor(&hb, 3, Some(0))?);
    net.connect(src, "out", cp, "c0");
    for (party, resp) in responses.iter().enumerate() {
        let (sb, ob) = (outcome_basis(resp.len()), outcome_basis(2));
        let t = Tensor::from_fn(
            vec![Index::new("setting", &sb), Index::new("in", &hb), Index::new("outcome", &ob)],
            |ix| if resp[ix[0]][ix[1]] == ix[2] { 1.0 } else { 0.0 },
        )?;
        let st = crate::classical::stochastic_map(t, &["outcome"])?;
        let node = net.add_node(if party == 0 { "alice" } else { "bob" }, st);
        net.connect(cp, &format!("c{}", party + 1), node, "in");
        let (o, s) = if party == 0 { ("a", "i") } else { ("b", "j") };
        net.open(o, node, "outcome").open(s, node, "setting");
    }
    Ok(net)
}
