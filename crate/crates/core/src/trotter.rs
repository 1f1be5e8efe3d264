//! Trotterized evolution of 1D nearest-neighbour Hamiltonians: gates,
//! layered networks, space-time patches, truncation and thermal networks.
//!
//! Sites `0..L` with open boundary; bond `(j, j+1)` carries `H2`. The odd
//! layer acts on bonds `(0,1), (2,3), ..` and the even layer on
//! `(1,2), (3,4), ..`. A patch covers the two-site cell `(2c, 2c+1)` for
//! `n` substeps, including the even gate to the next cell.

use nalgebra::{SymmetricEigen, SVD};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{delta_algebra, hilbert_basis};
use crate::complex::{complex_product_contract, derealify, realified_algebra, realify, ComplexError, ComplexTensor};
use crate::network::{evaluate, NetworkError, TensorNetwork};
use crate::quantum::{assemble, outcome_basis, povm, trace_tensor, CMatrix, Leg, QuantumError};
use crate::star_tensor::{Direction, StarTensor, StarTensorError};
use crate::tensor::{block, unblock, Basis, Index, TensorError};

#[derive(Debug, Error, Clone)]
pub enum TrotterError {
    #[error("chain length {0} is not even")]
    OddLength(usize),
    #[error("site {site} is outside a chain of {len}")]
    SiteOutOfRange { site: usize, len: usize },
    #[error("measurement on sites {0:?} does not lie within one two-site cell")]
    MeasurementSpansCells(Vec<usize>),
    #[error("Hamiltonian is not Hermitian (residual {0:e})")]
    NotHermitian(f64),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Star(#[from] StarTensorError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

pub type TrotterResult<T> = Result<T, TrotterError>;

/// Nearest-neighbour term `H2` on `C^d ⊗ C^d`.
#[derive(Clone, Debug)]
pub struct TwoSiteHamiltonian {
    h: CMatrix,
    d: usize,
}

impl TwoSiteHamiltonian {
    pub fn new(h: CMatrix, d: usize) -> TrotterResult<Self> {
        if d == 0 || h.nrows() != d * d || h.ncols() != d * d {
            return Err(TrotterError::Invalid(format!("H2 must be {0}x{0}", d * d)));
        }
        let r = (&h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if r > 1e-12 * h.iter().map(|z| z.norm()).fold(1.0, f64::max) {
            return Err(TrotterError::NotHermitian(r));
        }
        Ok(TwoSiteHamiltonian { h, d })
    }

    /// `-J Z⊗Z - g (X⊗1 + 1⊗X) / 2`: transverse-field Ising with the field
    /// split evenly between the two bonds touching a bulk site.
    pub fn transverse_ising(j: f64, g: f64) -> Self {
        let c = |x: f64| Complex64::new(x, 0.0);
        let x = CMatrix::from_row_slice(2, 2, &[c(0.), c(1.), c(1.), c(0.)]);
        let z = CMatrix::from_row_slice(2, 2, &[c(1.), c(0.), c(0.), c(-1.)]);
        let id = CMatrix::identity(2, 2);
        let h = z.kronecker(&z) * c(-j) - (x.kronecker(&id) + id.kronecker(&x)) * c(g / 2.0);
        TwoSiteHamiltonian { h, d: 2 }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.h
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    /// `exp(i t H2)` through the eigendecomposition of `H2`.
    pub fn gate_matrix(&self, t: Complex64) -> CMatrix {
        let eig = SymmetricEigen::new(self.h.clone());
        let i = Complex64::new(0.0, 1.0);
        let diag = eig.eigenvalues.map(|l| (i * t * l).exp());
        &eig.eigenvectors * CMatrix::from_diagonal(&diag) * eig.eigenvectors.adjoint()
    }
}

/// `exp(i t H2)` as a complex tensor with indices `o0, o1, i0, i1`.
pub fn gate(h: &TwoSiteHamiltonian, t: Complex64) -> TrotterResult<ComplexTensor> {
    let g = h.gate_matrix(t);
    let (d, hb) = (h.d, hilbert_basis(h.d));
    let idx = ["o0", "o1", "i0", "i1"].iter().map(|l| Index::new(*l, &hb)).collect();
    Ok(ComplexTensor::from_fn(idx, |ix| g[(ix[0] * d + ix[1], ix[2] * d + ix[3])])?)
}

/// Pure-state Trotter network of `n` substeps of `exp(i (t/n) H2)` gates on
/// `sites` sites. Open indices are `in{s}` and `out{s}`; gates are realified
/// with outputs `Out` and inputs `In`, so contraction is complex.
pub fn trotter_step_network(
    h: &TwoSiteHamiltonian,
    t: Complex64,
    n: usize,
    sites: usize,
) -> TrotterResult<TensorNetwork> {
    if !sites.is_multiple_of(2) || sites == 0 {
        return Err(TrotterError::OddLength(sites));
    }
    if n == 0 {
        return Err(TrotterError::Invalid("need at least one substep".into()));
    }
    let g = gate(h, t / n as f64)?;
    let realified =
        realify(&g, &[("o0", Direction::Out), ("o1", Direction::Out), ("i0", Direction::In), ("i1", Direction::In)])?;
    let alg = realified_algebra(&delta_algebra(&hilbert_basis(h.d)));
    let node = StarTensor::undirected(realified, vec![alg; 4])?;
    let mut net = TensorNetwork::new();
    let mut ends: Vec<Option<(usize, String)>> = vec![None; sites];
    let mut k = 0;
    for _ in 0..n {
        for first in [0usize, 1] {
            let mut j = first;
            while j + 1 < sites {
                let id = net.add_node(&format!("g{k}"), node.clone());
                k += 1;
                for (w, (i, o)) in [(j, ("i0", "o0")), (j + 1, ("i1", "o1"))] {
                    match ends[w].take() {
                        Some((src, l)) => {
                            net.connect(src, &l, id, i);
                        }
                        None => {
                            net.open(&format!("in{w}"), id, i);
                        }
                    }
                    ends[w] = Some((id, o.to_string()));
                }
                j += 2;
            }
        }
    }
    for (w, end) in ends.into_iter().enumerate() {
        let (src, l) = end.expect("every site is covered by the odd layer");
        net.open(&format!("out{w}"), src, &l);
    }
    Ok(net)
}

/// Evaluate [`trotter_step_network`] into the `d^L x d^L` operator.
///
/// Realified contraction reproduces complex contraction along a spanning
/// tree; every further edge closes a cycle and contributes the complex
/// loop factor 2, which is divided out here.
pub fn trotter_operator(h: &TwoSiteHamiltonian, t: Complex64, n: usize, sites: usize) -> TrotterResult<CMatrix> {
    let net = trotter_step_network(h, t, n, sites)?;
    let cycles = net.edges().len() + 1 - net.nodes().len();
    let v = evaluate(&net)?.scale(0.5f64.powi(cycles as i32));
    let outs: Vec<String> = (0..sites).map(|s| format!("out{s}")).collect();
    let ins: Vec<String> = (0..sites).map(|s| format!("in{s}")).collect();
    let order: Vec<&str> = outs.iter().chain(&ins).map(String::as_str).collect();
    let v = v.permute(&order)?;
    let dirs: Vec<(&str, Direction)> = outs
        .iter()
        .map(|l| (l.as_str(), Direction::Out))
        .chain(ins.iter().map(|l| (l.as_str(), Direction::In)))
        .collect();
    let ct = derealify(v.tensor(), &dirs)?;
    let dim = h.d.pow(sites as u32);
    let vals = ct.values();
    Ok(CMatrix::from_fn(dim, dim, |r, c| vals[r * dim + c]))
}

/// Space-time patch of one two-site cell. Index order: `left` (if present),
/// `right` (if present), `bottom`, `top`. Horizontal legs are blocked per
/// substep as `(out, in)` pairs on the left and `(in, out)` on the right,
/// so a patch's `right` contracts with its neighbour's `left`.
#[derive(Clone, Debug)]
pub struct TrotterPatch {
    pub tensor: ComplexTensor,
    pub d: usize,
    pub n: usize,
    pub dt: Complex64,
    pub has_left: bool,
    pub has_right: bool,
}

enum End {
    Bound(String),
    Free(String),
}

/// Bulk patch with both horizontal legs.
pub fn build_patch(h: &TwoSiteHamiltonian, dt: Complex64, n: usize) -> TrotterResult<TrotterPatch> {
    build_patch_with(h, dt, n, true, true)
}

/// Patch with optional horizontal legs: without a left leg the cell is at
/// the left edge, without a right leg the even gate is dropped.
pub fn build_patch_with(
    h: &TwoSiteHamiltonian,
    dt: Complex64,
    n: usize,
    has_left: bool,
    has_right: bool,
) -> TrotterResult<TrotterPatch> {
    if n == 0 {
        return Err(TrotterError::Invalid("need at least one substep".into()));
    }
    let g = gate(h, dt / n as f64)?;
    let hb = hilbert_basis(h.d);
    let mut cur = ComplexTensor::scalar(Complex64::new(1.0, 0.0));
    let mut fresh = 0;
    let mut ends = [End::Free("b0".into()), End::Free("b1".into())];
    let mut apply =
        |cur: &ComplexTensor, a: End, b: End, outs: [&str; 2]| -> TrotterResult<(ComplexTensor, [End; 2])> {
            let mut gt = g.clone();
            let mut pairs: Vec<(String, String)> = Vec::new();
            for (e, i) in [(a, "i0"), (b, "i1")] {
                match e {
                    End::Bound(l) => {
                        let tmp = format!("__in{fresh}");
                        fresh += 1;
                        gt = gt.relabel(i, &tmp)?;
                        pairs.push((l, tmp));
                    }
                    End::Free(name) => gt = gt.relabel(i, &name)?,
                }
            }
            let mut new = Vec::new();
            for (o, name) in [("o0", outs[0]), ("o1", outs[1])] {
                let l = if name.is_empty() {
                    fresh += 1;
                    format!("__w{fresh}")
                } else {
                    name.to_string()
                };
                gt = gt.relabel(o, &l)?;
                new.push(l);
            }
            let refs: Vec<(&str, &str)> = pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
            let next = complex_product_contract(cur, &gt, &refs)?;
            Ok((next, [End::Bound(new[0].clone()), End::Bound(new[1].clone())]))
        };
    let mut left_labels = Vec::new();
    let mut right_labels = Vec::new();
    for k in 0..n {
        let [a, b] = ends;
        let (next, [e0, e1]) = apply(&cur, a, b, ["", ""])?;
        cur = next;
        ends = [e0, e1];
        if has_left {
            let End::Bound(l) = &ends[0] else { unreachable!() };
            let lout = format!("lout{k}");
            cur = relabel_c(&cur, l, &lout)?;
            left_labels.push(lout);
            left_labels.push(format!("lin{k}"));
            ends[0] = End::Free(format!("lin{k}"));
        }
        if has_right {
            let [a, b] = ends;
            let rout = format!("rout{k}");
            let (next, [e1, _]) = apply(&cur, b, End::Free(format!("rin{k}")), ["", &rout])?;
            cur = next;
            right_labels.push(format!("rin{k}"));
            right_labels.push(rout);
            ends = [a, e1];
        }
    }
    for (e, top) in ends.into_iter().zip(["t0", "t1"]) {
        match e {
            End::Bound(l) => cur = relabel_c(&cur, &l, top)?,
            End::Free(name) => {
                let delta = ComplexTensor::from_fn(vec![Index::new(name.as_str(), &hb), Index::new(top, &hb)], |ix| {
                    Complex64::new(if ix[0] == ix[1] { 1.0 } else { 0.0 }, 0.0)
                })?;
                cur = complex_product_contract(&cur, &delta, &[])?;
            }
        }
    }
    let mut order: Vec<&str> = Vec::new();
    if has_left {
        cur = block_c(&cur, &left_labels, "left")?;
        order.push("left");
    }
    if has_right {
        cur = block_c(&cur, &right_labels, "right")?;
        order.push("right");
    }
    cur = block_c(&cur, &["b0".into(), "b1".into()], "bottom")?;
    cur = block_c(&cur, &["t0".into(), "t1".into()], "top")?;
    order.extend(["bottom", "top"]);
    Ok(TrotterPatch { tensor: cur.permute(&order)?, d: h.d, n, dt, has_left, has_right })
}

fn relabel_c(t: &ComplexTensor, old: &str, new: &str) -> TrotterResult<ComplexTensor> {
    Ok(t.relabel(old, new)?)
}

fn block_c(t: &ComplexTensor, labels: &[String], new: &str) -> TrotterResult<ComplexTensor> {
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    Ok(ComplexTensor::from_real_rep(block(t.real_rep(), &refs, new)?)?)
}

/// Contract the bottom legs into the operator `top <- bottom` for a patch
/// without horizontal legs.
pub fn patch_operator(p: &TrotterPatch) -> TrotterResult<CMatrix> {
    if p.has_left || p.has_right {
        return Err(TrotterError::Invalid("patch has horizontal legs".into()));
    }
    let m = p.tensor.shape()[0];
    let vals = p.tensor.values();
    // index order bottom, top
    Ok(CMatrix::from_fn(m, m, |t, b| vals[b * m + t]))
}

/// Apply `m` (`dim x new`) to index `j` of a complex tensor:
/// `out[.., a, ..] = sum_r t[.., r, ..] m[r, a]`.
fn mode_product(t: &ComplexTensor, label: &str, m: &CMatrix, new_basis: &Basis) -> TrotterResult<ComplexTensor> {
    let labels: Vec<String> = t.logical_labels().iter().map(|s| s.to_string()).collect();
    let j = labels.iter().position(|l| l == label).ok_or_else(|| TensorError::UnknownLabel(label.into()))?;
    let shape = t.shape();
    let vals = t.values();
    let (outer, dim, inner) =
        (shape[..j].iter().product::<usize>(), shape[j], shape[j + 1..].iter().product::<usize>());
    let new = m.ncols();
    let mut out = vec![Complex64::new(0.0, 0.0); outer * new * inner];
    for o in 0..outer {
        for r in 0..dim {
            for a in 0..new {
                let f = m[(r, a)];
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for i in 0..inner {
                    out[(o * new + a) * inner + i] += vals[(o * dim + r) * inner + i] * f;
                }
            }
        }
    }
    let mut idx: Vec<Index> = t.logical_indices().to_vec();
    idx[j] = Index::new(label, new_basis);
    let mut k = 0;
    Ok(ComplexTensor::from_fn(idx, |_| {
        k += 1;
        out[k - 1]
    })?)
}

/// Unfold with `label` as rows.
fn unfold(t: &ComplexTensor, label: &str) -> TrotterResult<CMatrix> {
    let mut order: Vec<&str> = vec![label];
    let labels = t.logical_labels();
    order.extend(labels.iter().filter(|l| **l != label));
    let p = t.permute(&order)?;
    let rows = p.shape()[0];
    let cols = p.len() / rows;
    let vals = p.values();
    Ok(CMatrix::from_fn(rows, cols, |r, c| vals[r * cols + c]))
}

/// Top-`chi` left singular vectors of the unfolding along `label`.
pub fn leading_isometry(t: &ComplexTensor, label: &str, chi: usize) -> TrotterResult<CMatrix> {
    if chi == 0 {
        return Err(TrotterError::Invalid("chi must be at least 1".into()));
    }
    let m = unfold(t, label)?;
    let svd = SVD::new(m, true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let keep = chi.min(order.len());
    let cols: Vec<_> = order[..keep].iter().map(|&k| u.column(k).into_owned()).collect();
    Ok(CMatrix::from_columns(&cols))
}

#[derive(Clone, Debug)]
pub struct Truncation {
    /// Reduced patch: `right` by `i1`, `left` by `conj(i1)`, `top` by `i2`,
    /// `bottom` by `conj(i2)`.
    pub patch: TrotterPatch,
    pub i1: CMatrix,
    pub i2: CMatrix,
    /// `|| P - (Π1 on right)(Π2 on top) P ||_F` with `Π = I I^†`.
    pub error: f64,
}

pub fn truncate_patch(p: &TrotterPatch, chi: usize) -> TrotterResult<Truncation> {
    if !(p.has_left && p.has_right) {
        return Err(TrotterError::Invalid("truncation needs a bulk patch".into()));
    }
    let i1 = leading_isometry(&p.tensor, "right", chi)?;
    let i2 = leading_isometry(&p.tensor, "top", chi)?;
    let proj = |m: &CMatrix| -> CMatrix { (m * m.adjoint()).transpose() };
    let (rb, tb) = (p.tensor.logical_indices()[1].basis.clone(), p.tensor.logical_indices()[3].basis.clone());
    let projected = mode_product(&mode_product(&p.tensor, "right", &proj(&i1), &rb)?, "top", &proj(&i2), &tb)?;
    let diff: f64 =
        p.tensor.values().iter().zip(projected.values()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let b1 = Basis::range(format!("X{}", i1.ncols()), i1.ncols());
    let b2 = Basis::range(format!("X{}", i2.ncols()), i2.ncols());
    let conj = |m: &CMatrix| m.map(|z| z.conj());
    let mut t = mode_product(&p.tensor, "right", &i1, &b1)?;
    t = mode_product(&t, "left", &conj(&i1), &b1)?;
    t = mode_product(&t, "top", &i2, &b2)?;
    t = mode_product(&t, "bottom", &conj(&i2), &b2)?;
    Ok(Truncation { patch: TrotterPatch { tensor: t, ..p.clone() }, i1, i2, error: diff })
}

/// `P ⊗ conj(P)` with every index paired into a quantum index. Realified
/// as `left`, `bottom` in and `right`, `top` out; undirected.
pub fn doubled_tensor(p: &TrotterPatch) -> TrotterResult<StarTensor> {
    let labels: Vec<String> = p.tensor.logical_labels().iter().map(|s| s.to_string()).collect();
    let shape = p.tensor.shape();
    let legs: Vec<Leg> = labels
        .iter()
        .zip(&shape)
        .map(|(l, &m)| {
            let dir = if l == "left" || l == "bottom" { Direction::In } else { Direction::Out };
            Leg::q(l, m, dir, None)
        })
        .collect();
    let vals = p.tensor.values();
    let strides: Vec<usize> = (0..shape.len()).map(|k| shape[k + 1..].iter().product()).collect();
    Ok(assemble(&legs, |ix| {
        let (mut ket, mut bra) = (0, 0);
        for (k, &v) in ix.iter().enumerate() {
            ket += (v / shape[k]) * strides[k];
            bra += (v % shape[k]) * strides[k];
        }
        vals[ket] * vals[bra].conj()
    })?)
}

/// Measurement of the listed sites (within one cell, in order) by a POVM on
/// `d^{sites}`. Outcome `k` is open as `m{k}`.
#[derive(Clone, Debug)]
pub struct SiteMeasurement {
    pub sites: Vec<usize>,
    pub elements: Vec<CMatrix>,
}

/// Thermal network at inverse temperature `beta`: each cell is the doubled
/// patch of `exp(-beta H / 2)` with `n` substeps, traced at the bottom and
/// measured or traced at the top. `chi` truncates horizontal bonds.
pub fn thermal_network(
    h: &TwoSiteHamiltonian,
    beta: f64,
    sites: usize,
    n: usize,
    chi: Option<usize>,
    measurements: &[SiteMeasurement],
) -> TrotterResult<TensorNetwork> {
    if !sites.is_multiple_of(2) || sites == 0 {
        return Err(TrotterError::OddLength(sites));
    }
    let d = h.d;
    let cells = sites / 2;
    let mut per_cell: Vec<Vec<(usize, &SiteMeasurement)>> = vec![Vec::new(); cells];
    for (k, m) in measurements.iter().enumerate() {
        if let Some(&s) = m.sites.iter().find(|&&s| s >= sites) {
            return Err(TrotterError::SiteOutOfRange { site: s, len: sites });
        }
        let c =
            m.sites.first().map(|s| s / 2).ok_or_else(|| TrotterError::Invalid("measurement without sites".into()))?;
        let mut sorted = m.sites.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != m.sites.len() || m.sites.iter().any(|s| s / 2 != c) {
            return Err(TrotterError::MeasurementSpansCells(m.sites.clone()));
        }
        let dim = d.pow(m.sites.len() as u32);
        if m.elements.iter().any(|e| e.nrows() != dim || e.ncols() != dim) {
            return Err(TrotterError::Invalid(format!("measurement {k} needs {dim}x{dim} elements")));
        }
        per_cell[c].push((k, m));
    }
    let dt = Complex64::new(0.0, beta / 2.0);
    let mut patches: Vec<TrotterPatch> =
        (0..cells).map(|c| build_patch_with(h, dt, n, c > 0, c + 1 < cells)).collect::<TrotterResult<_>>()?;
    if let Some(chi) = chi {
        for c in 0..cells.saturating_sub(1) {
            let u = leading_isometry(&patches[c].tensor, "right", chi)?;
            let b = Basis::range(format!("X{}", u.ncols()), u.ncols());
            patches[c].tensor = mode_product(&patches[c].tensor, "right", &u, &b)?;
            patches[c + 1].tensor = mode_product(&patches[c + 1].tensor, "left", &u.map(|z| z.conj()), &b)?;
        }
    }
    let mut net = TensorNetwork::new();
    net.set_model_output(true);
    let mut ids = Vec::new();
    for (c, p) in patches.iter().enumerate() {
        let id = net.add_node(&format!("cell{c}"), doubled_tensor(p)?);
        let tr = net.add_node(&format!("bottom{c}"), trace_tensor(d * d)?);
        net.connect(id, "bottom", tr, "in");
        if c > 0 {
            net.connect(ids[c - 1], "right", id, "left");
        }
        ids.push(id);
        if per_cell[c].is_empty() {
            let top = net.add_node(&format!("top{c}"), trace_tensor(d * d)?);
            net.connect(id, "top", top, "in");
        } else {
            let (node, opens) = cell_measurement(d, c, &per_cell[c])?;
            let m = net.add_node(&format!("measure{c}"), node);
            net.connect(id, "top", m, "in");
            for (label, k) in opens {
                net.open(&format!("m{k}"), m, &label);
            }
        }
    }
    Ok(net)
}

/// Joint POVM on a cell from its site measurements, with one classical
/// output `o{j}` per measurement.
fn cell_measurement(
    d: usize,
    cell: usize,
    ms: &[(usize, &SiteMeasurement)],
) -> TrotterResult<(StarTensor, Vec<(String, usize)>)> {
    // lift each measurement to the full cell, then take products
    let lifted: Vec<Vec<CMatrix>> =
        ms.iter().map(|(_, m)| m.elements.iter().map(|e| lift(e, &m.sites, cell, d)).collect()).collect();
    if ms.len() > 2 {
        return Err(TrotterError::Invalid("at most two measurements per cell".into()));
    }
    if let [(_, a), (_, b)] = ms {
        if a.sites.iter().any(|s| b.sites.contains(s)) {
            return Err(TrotterError::Invalid("overlapping measurements on one cell".into()));
        }
    }
    let sizes: Vec<usize> = lifted.iter().map(Vec::len).collect();
    let mut joint = Vec::new();
    let total: usize = sizes.iter().product();
    for flat in 0..total {
        let mut r = flat;
        let mut e = CMatrix::identity(d * d, d * d);
        for (k, &s) in sizes.iter().enumerate().rev() {
            e = &lifted[k][r % s] * e;
            r /= s;
        }
        joint.push(e);
    }
    let p = povm(&joint)?;
    let outs: Vec<Index> =
        sizes.iter().enumerate().map(|(j, &s)| Index::new(format!("o{j}"), &outcome_basis(s))).collect();
    let t = unblock(p.tensor(), "out", &outs)?;
    let mut algebras = vec![p.algebras()[0].clone()];
    algebras.extend(outs.iter().map(|i| delta_algebra(&i.basis)));
    let mut dirs = vec![Direction::In];
    dirs.extend(outs.iter().map(|_| Direction::Out));
    let st = StarTensor::directed(t, algebras, dirs)?;
    Ok((st, ms.iter().enumerate().map(|(j, (k, _))| (format!("o{j}"), *k)).collect()))
}

/// Extend an operator on `sites` (within `cell`) to the two-site cell.
fn lift(e: &CMatrix, sites: &[usize], cell: usize, d: usize) -> CMatrix {
    let id = CMatrix::identity(d, d);
    match sites {
        [s] if *s == 2 * cell => e.kronecker(&id),
        [_] => id.kronecker(e),
        [a, _] if *a == 2 * cell => e.clone(),
        _ => {
            // reversed site order: conjugate by the swap
            let swap = CMatrix::from_fn(d * d, d * d, |r, c| {
                let (r0, r1, c0, c1) = (r / d, r % d, c / d, c % d);
                Complex64::new(if r0 == c1 && r1 == c0 { 1.0 } else { 0.0 }, 0.0)
            });
            &swap * e * &swap
        }
    }
}

/// Sum of `H2` over the bonds of an open chain, as a dense matrix.
pub fn chain_hamiltonian(h: &TwoSiteHamiltonian, sites: usize) -> CMatrix {
    let d = h.d;
    let dim = d.pow(sites as u32);
    let mut total = CMatrix::zeros(dim, dim);
    for j in 0..sites.saturating_sub(1) {
        let left = CMatrix::identity(d.pow(j as u32), d.pow(j as u32));
        let right = CMatrix::identity(d.pow((sites - j - 2) as u32), d.pow((sites - j - 2) as u32));
        total += left.kronecker(&h.h).kronecker(&right);
    }
    total
}

/// Error and isometry defect of a truncation, per `chi`.
#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub chi: usize,
    pub error: f64,
    pub isometry_defect: f64,
}

pub fn truncation_sweep(p: &TrotterPatch, chis: &[usize]) -> TrotterResult<Vec<SweepPoint>> {
    chis.iter()
        .map(|&chi| {
            let t = truncate_patch(p, chi)?;
            let defect = |m: &CMatrix| {
                (m.adjoint() * m - CMatrix::identity(m.ncols(), m.ncols())).iter().map(|z| z.norm()).fold(0.0, f64::max)
            };
            Ok(SweepPoint { chi, error: t.error, isometry_defect: defect(&t.i1).max(defect(&t.i2)) })
        })
        .collect()
}
