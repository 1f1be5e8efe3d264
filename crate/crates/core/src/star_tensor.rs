//! *-tensors: tensors whose indices carry *-algebras, with positivity and
//! normalization certificates.
//!
//! Positivity is decided blockwise. Classical (delta) indices are enumerated;
//! every other index is mapped through a faithful *-representation of its
//! algebra (the identity reshape for matrix algebras), and the resulting
//! real symmetric matrix is tested for PSD. The root is the symmetric square
//! root pulled back into the algebra.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{emulation_isometry, trivial_algebra, AlgebraError, Orientation, StarAlgebra};
use crate::tensor::{next_multi_index, strides_of, tensor_product, tensordot, Index, Tensor, TensorError, Tolerance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    In,
    Out,
}

impl Direction {
    pub fn flip(self) -> Direction {
        match self {
            Direction::In => Direction::Out,
            Direction::Out => Direction::In,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::In => "in",
            Direction::Out => "out",
        })
    }
}

#[derive(Debug, Error, Clone)]
pub enum StarTensorError {
    #[error("index `{label}` has basis `{basis}` but its algebra uses `{algebra}`")]
    AlgebraBasisMismatch { label: String, basis: String, algebra: String },
    #[error("expected {expected} entries, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("tensor has no directions")]
    MissingDirections,
    #[error("contracted indices `{0}` and `{1}` carry different algebras")]
    AlgebraMismatch(String, String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

pub type StarResult<T> = Result<T, StarTensorError>;

/// A tensor with a *-algebra (and optionally a direction) on every index.
#[derive(Clone, Debug)]
pub struct StarTensor {
    tensor: Tensor,
    algebras: Vec<StarAlgebra>,
    directions: Option<Vec<Direction>>,
}

impl StarTensor {
    pub fn new(
        tensor: Tensor,
        algebras: Vec<StarAlgebra>,
        directions: Option<Vec<Direction>>,
    ) -> StarResult<StarTensor> {
        if algebras.len() != tensor.rank() {
            return Err(StarTensorError::ArityMismatch { expected: tensor.rank(), got: algebras.len() });
        }
        if let Some(d) = &directions {
            if d.len() != tensor.rank() {
                return Err(StarTensorError::ArityMismatch { expected: tensor.rank(), got: d.len() });
            }
        }
        for (idx, alg) in tensor.indices().iter().zip(&algebras) {
            if &idx.basis != alg.basis() {
                return Err(StarTensorError::AlgebraBasisMismatch {
                    label: idx.label.clone(),
                    basis: idx.basis.name().into(),
                    algebra: alg.basis().name().into(),
                });
            }
        }
        Ok(StarTensor { tensor, algebras, directions })
    }

    pub fn undirected(tensor: Tensor, algebras: Vec<StarAlgebra>) -> StarResult<StarTensor> {
        Self::new(tensor, algebras, None)
    }

    pub fn directed(tensor: Tensor, algebras: Vec<StarAlgebra>, directions: Vec<Direction>) -> StarResult<StarTensor> {
        Self::new(tensor, algebras, Some(directions))
    }

    pub fn scalar(value: f64) -> StarTensor {
        StarTensor { tensor: Tensor::scalar(value), algebras: Vec::new(), directions: Some(Vec::new()) }
    }

    pub fn tensor(&self) -> &Tensor {
        &self.tensor
    }

    pub fn into_tensor(self) -> Tensor {
        self.tensor
    }

    pub fn algebras(&self) -> &[StarAlgebra] {
        &self.algebras
    }

    pub fn directions(&self) -> Option<&[Direction]> {
        self.directions.as_deref()
    }

    pub fn rank(&self) -> usize {
        self.tensor.rank()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.tensor.labels()
    }

    pub fn algebra(&self, label: &str) -> StarResult<&StarAlgebra> {
        Ok(&self.algebras[self.tensor.position(label)?])
    }

    pub fn direction(&self, label: &str) -> StarResult<Option<Direction>> {
        let p = self.tensor.position(label)?;
        Ok(self.directions.as_ref().map(|d| d[p]))
    }

    pub fn without_directions(&self) -> StarTensor {
        StarTensor { directions: None, ..self.clone() }
    }

    pub fn with_directions(&self, directions: Vec<Direction>) -> StarResult<StarTensor> {
        Self::new(self.tensor.clone(), self.algebras.clone(), Some(directions))
    }

    pub fn relabel(&self, old: &str, new: &str) -> StarResult<StarTensor> {
        Ok(StarTensor { tensor: self.tensor.relabel(old, new)?, ..self.clone() })
    }

    pub fn relabel_many(&self, pairs: &[(&str, &str)]) -> StarResult<StarTensor> {
        Ok(StarTensor { tensor: self.tensor.relabel_many(pairs)?, ..self.clone() })
    }

    pub fn permute(&self, order: &[&str]) -> StarResult<StarTensor> {
        let pos = order.iter().map(|l| self.tensor.position(l)).collect::<Result<Vec<_>, _>>()?;
        Ok(StarTensor {
            tensor: self.tensor.permute(order)?,
            algebras: pos.iter().map(|&p| self.algebras[p].clone()).collect(),
            directions: self.directions.as_ref().map(|d| pos.iter().map(|&p| d[p]).collect()),
        })
    }

    pub fn scale(&self, factor: f64) -> StarTensor {
        StarTensor { tensor: self.tensor.scale(factor), ..self.clone() }
    }

    /// Labels carrying the given direction, in index order.
    pub fn labels_with(&self, dir: Direction) -> Vec<&str> {
        match &self.directions {
            Some(d) => {
                self.tensor.indices().iter().zip(d).filter(|(_, x)| **x == dir).map(|(i, _)| i.label.as_str()).collect()
            }
            None => Vec::new(),
        }
    }
}

/// Tensor product of *-tensors; directions survive only if both have them.
pub fn star_product(a: &StarTensor, b: &StarTensor) -> StarResult<StarTensor> {
    let tensor = tensor_product(&a.tensor, &b.tensor)?;
    let mut algebras = a.algebras.clone();
    algebras.extend(b.algebras.iter().cloned());
    let directions = match (&a.directions, &b.directions) {
        (Some(x), Some(y)) => Some(x.iter().chain(y).copied().collect()),
        _ => None,
    };
    Ok(StarTensor { tensor, algebras, directions })
}

/// Contract index pairs between two *-tensors (free indices of `a` first).
pub fn star_tensordot(a: &StarTensor, b: &StarTensor, pairs: &[(&str, &str)]) -> StarResult<StarTensor> {
    for (x, y) in pairs {
        if a.algebra(x)? != b.algebra(y)? {
            return Err(StarTensorError::AlgebraMismatch(x.to_string(), y.to_string()));
        }
    }
    let tensor = tensordot(&a.tensor, &b.tensor, pairs)?;
    let keep_a: Vec<usize> =
        (0..a.rank()).filter(|&k| !pairs.iter().any(|(x, _)| a.tensor.indices()[k].label == *x)).collect();
    let keep_b: Vec<usize> =
        (0..b.rank()).filter(|&k| !pairs.iter().any(|(_, y)| b.tensor.indices()[k].label == *y)).collect();
    let algebras =
        keep_a.iter().map(|&k| a.algebras[k].clone()).chain(keep_b.iter().map(|&k| b.algebras[k].clone())).collect();
    let directions = match (&a.directions, &b.directions) {
        (Some(x), Some(y)) => Some(keep_a.iter().map(|&k| x[k]).chain(keep_b.iter().map(|&k| y[k])).collect()),
        _ => None,
    };
    Ok(StarTensor { tensor, algebras, directions })
}

/// Contract two indices of one *-tensor.
pub fn star_contract(t: &StarTensor, x: &str, y: &str) -> StarResult<StarTensor> {
    if t.algebra(x)? != t.algebra(y)? {
        return Err(StarTensorError::AlgebraMismatch(x.to_string(), y.to_string()));
    }
    let (px, py) = (t.tensor.position(x)?, t.tensor.position(y)?);
    let tensor = crate::tensor::contract(&t.tensor, x, y)?;
    let keep: Vec<usize> = (0..t.rank()).filter(|&k| k != px && k != py).collect();
    Ok(StarTensor {
        tensor,
        algebras: keep.iter().map(|&k| t.algebras[k].clone()).collect(),
        directions: t.directions.as_ref().map(|d| keep.iter().map(|&k| d[k]).collect()),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PositivityCertificate {
    /// Original indices followed by a trivial internal index.
    #[serde(skip)]
    pub root: Tensor,
    pub internal_label: String,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    NegativeEntry { index: Vec<usize>, value: f64 },
    NegativeEigenvalue { eigenvalue: f64, eigenvector: Vec<f64>, block: Vec<usize> },
    Asymmetric { residual: f64, block: Vec<usize> },
}

#[derive(Clone, Debug)]
pub enum Positivity {
    Positive(PositivityCertificate),
    NotPositive(Witness),
}

impl Positivity {
    pub fn is_positive(&self) -> bool {
        matches!(self, Positivity::Positive(_))
    }

    pub fn certificate(&self) -> Option<&PositivityCertificate> {
        match self {
            Positivity::Positive(c) => Some(c),
            Positivity::NotPositive(_) => None,
        }
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Positivity::Positive(_) => None,
            Positivity::NotPositive(w) => Some(w),
        }
    }
}

pub const PSD_TOLERANCE: f64 = 1e-10;

pub fn check_positive(st: &StarTensor) -> Positivity {
    check_positive_with(st, PSD_TOLERANCE)
}

/// Decide positivity. Entries of classical blocks must be `≥ -tol`;
/// eigenvalues must be `≥ -tol·max(|λ|max, 1)`.
pub fn check_positive_with(st: &StarTensor, tol: f64) -> Positivity {
    let t = &st.tensor;
    let shape = t.shape();
    let strides = strides_of(&shape);
    let classical: Vec<usize> = (0..t.rank()).filter(|&k| st.algebras[k].is_classical()).collect();
    let quantum: Vec<usize> = (0..t.rank()).filter(|&k| !st.algebras[k].is_classical()).collect();
    let internal = internal_label(t);
    let mut root_indices: Vec<Index> = t.indices().to_vec();
    root_indices.push(Index::new(internal.clone(), trivial_algebra().basis()));

    if quantum.is_empty() {
        let (mut worst, mut at) = (f64::INFINITY, 0);
        for (k, &v) in t.data().iter().enumerate() {
            if v < worst {
                worst = v;
                at = k;
            }
        }
        if worst < -tol {
            return Positivity::NotPositive(Witness::NegativeEntry { index: unflatten(at, &shape), value: worst });
        }
        let root = Tensor::new(root_indices, t.data().iter().map(|v| v.max(0.0).sqrt()).collect()).unwrap();
        let residual = t.data().iter().fold(0.0f64, |m, v| m.max((v - v.max(0.0)).abs()));
        return Positivity::Positive(PositivityCertificate { root, internal_label: internal, residual });
    }

    let reps: Vec<_> = quantum.iter().map(|&k| st.algebras[k].representation()).collect();
    let gram_inv: Vec<DMatrix<f64>> = reps
        .iter()
        .map(|r| {
            let g = r.gram();
            g.clone().try_inverse().unwrap_or_else(|| g.pseudo_inverse(1e-12).unwrap())
        })
        .collect();
    let n: usize = reps.iter().map(|r| r.n).product();
    let rep_strides = strides_of(&reps.iter().map(|r| r.n).collect::<Vec<_>>());
    let qshape: Vec<usize> = quantum.iter().map(|&k| shape[k]).collect();
    let cshape: Vec<usize> = classical.iter().map(|&k| shape[k]).collect();
    let nq: usize = qshape.iter().product();
    let nc: usize = cshape.iter().product();

    let mut root_data = vec![0.0; t.len()];
    let mut residual: f64 = 0.0;
    let mut cidx = vec![0usize; classical.len()];
    for _ in 0..nc {
        let cbase: usize = classical.iter().zip(&cidx).map(|(&k, &i)| strides[k] * i).sum();
        let offset_of = |q: &[usize]| cbase + quantum.iter().zip(q).map(|(&k, &i)| strides[k] * i).sum::<usize>();
        let mut m = DMatrix::<f64>::zeros(n, n);
        let mut qidx = vec![0usize; quantum.len()];
        for _ in 0..nq {
            let v = t.data()[offset_of(&qidx)];
            if v != 0.0 {
                for_each_rep_entry(&reps, &qidx, &rep_strides, |r, c, w| m[(r, c)] += v * w);
            }
            next_multi_index(&mut qidx, &qshape);
        }
        let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let asym = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .fold(0.0f64, |a, (i, j)| a.max((m[(i, j)] - m[(j, i)]).abs()));
        if asym > tol * scale.max(1.0) {
            return Positivity::NotPositive(Witness::Asymmetric { residual: asym, block: cidx.clone() });
        }
        let sym = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let (kmin, lmin) =
            eig.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |a, (k, &v)| if v < a.1 { (k, v) } else { a });
        if lmin < -tol * lmax.max(1.0) {
            return Positivity::NotPositive(Witness::NegativeEigenvalue {
                eigenvalue: lmin,
                eigenvector: eig.eigenvectors.column(kmin).iter().copied().collect(),
                block: cidx.clone(),
            });
        }
        let sqrt_l = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
        let s = &eig.eigenvectors * sqrt_l * eig.eigenvectors.transpose();
        let s2 = &s * &s;

        // pull S and S² back to coefficients
        let mut h = vec![0.0; nq];
        let mut h2 = vec![0.0; nq];
        let mut qidx = vec![0usize; quantum.len()];
        for k in 0..nq {
            for_each_rep_entry(&reps, &qidx, &rep_strides, |r, c, w| {
                h[k] += w * s[(r, c)];
                h2[k] += w * s2[(r, c)];
            });
            next_multi_index(&mut qidx, &qshape);
        }
        for (axis, gi) in gram_inv.iter().enumerate() {
            h = apply_matrix_on_axis(&h, &qshape, axis, gi);
            h2 = apply_matrix_on_axis(&h2, &qshape, axis, gi);
        }
        let mut qidx = vec![0usize; quantum.len()];
        for k in 0..nq {
            let off = offset_of(&qidx);
            root_data[off] = h[k];
            residual = residual.max((h2[k] - t.data()[off]).abs());
            next_multi_index(&mut qidx, &qshape);
        }
        next_multi_index(&mut cidx, &cshape);
    }
    let root = Tensor::new(root_indices, root_data).unwrap();
    Positivity::Positive(PositivityCertificate { root, internal_label: internal, residual })
}

fn internal_label(t: &Tensor) -> String {
    let mut label = "internal".to_string();
    while t.has_label(&label) {
        label.insert(0, '_');
    }
    label
}

fn unflatten(mut k: usize, shape: &[usize]) -> Vec<usize> {
    let mut out = vec![0; shape.len()];
    for i in (0..shape.len()).rev() {
        out[i] = k % shape[i];
        k /= shape[i];
    }
    out
}

fn for_each_rep_entry<F: FnMut(usize, usize, f64)>(
    reps: &[crate::algebra::Representation],
    q: &[usize],
    strides: &[usize],
    mut f: F,
) {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: FnMut(usize, usize, f64)>(
        reps: &[crate::algebra::Representation],
        q: &[usize],
        strides: &[usize],
        k: usize,
        row: usize,
        col: usize,
        w: f64,
        f: &mut F,
    ) {
        if k == reps.len() {
            f(row, col, w);
            return;
        }
        for &(a, b, v) in &reps[k].mats[q[k]] {
            rec(reps, q, strides, k + 1, row + a * strides[k], col + b * strides[k], w * v, f);
        }
    }
    rec(reps, q, strides, 0, 0, 0, 1.0, &mut f);
}

fn apply_matrix_on_axis(data: &[f64], shape: &[usize], axis: usize, m: &DMatrix<f64>) -> Vec<f64> {
    let d = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out = vec![0.0; data.len()];
    for o in 0..outer {
        for x in 0..d {
            for y in 0..d {
                let w = m[(y, x)];
                if w == 0.0 {
                    continue;
                }
                for i in 0..inner {
                    out[(o * d + y) * inner + i] += w * data[(o * d + x) * inner + i];
                }
            }
        }
    }
    out
}

/// Rebuild a *-tensor from a root: two copies of the root joined over the
/// internal index, each index pair fused by the algebra's (right, left, left)
/// 3-index tensor.
pub fn assemble_from_root(root: &Tensor, internal: &str, algebras: &[StarAlgebra]) -> StarResult<StarTensor> {
    root.position(internal)?;
    if algebras.len() + 1 != root.rank() {
        return Err(StarTensorError::ArityMismatch { expected: root.rank() - 1, got: algebras.len() });
    }
    let labels: Vec<String> = root.labels().into_iter().filter(|l| *l != internal).map(String::from).collect();
    let primed: Vec<String> = labels.iter().map(|l| format!("{l}'")).collect();
    let renames: Vec<(&str, &str)> = labels.iter().map(String::as_str).zip(primed.iter().map(String::as_str)).collect();
    let copy = root.relabel_many(&renames)?;
    let mut y = tensordot(root, &copy, &[(internal, internal)])?;
    use Orientation::{Left as L, Right as R};
    for ((l, lp), alg) in labels.iter().zip(&primed).zip(algebras) {
        if &root.index(l)?.basis != alg.basis() {
            return Err(StarTensorError::AlgebraBasisMismatch {
                label: l.clone(),
                basis: root.index(l)?.basis.name().into(),
                algebra: alg.basis().name().into(),
            });
        }
        let a3 = alg.algebra_tensor_labeled(&[R, L, L], &["__x", "__y", l]);
        y = tensordot(&y, &a3, &[(l.as_str(), "__x"), (lp.as_str(), "__y")])?;
    }
    let order: Vec<&str> = labels.iter().map(String::as_str).collect();
    StarTensor::undirected(y.permute(&order)?, algebras.to_vec())
}

#[derive(Clone, Debug, Serialize)]
pub struct NormReport {
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn check_normalized(st: &StarTensor) -> StarResult<NormReport> {
    check_normalized_with(st, Tolerance::default())
}

/// Contract every out index with its algebra's unit and compare with the
/// product of the units of the in indices.
pub fn check_normalized_with(st: &StarTensor, tol: Tolerance) -> StarResult<NormReport> {
    let dirs = st.directions.as_ref().ok_or(StarTensorError::MissingDirections)?;
    let mut lhs = st.tensor.clone();
    let mut rhs = Tensor::scalar(1.0);
    for ((idx, alg), dir) in st.tensor.indices().iter().zip(&st.algebras).zip(dirs) {
        let unit = alg.unit().relabel("a", &idx.label)?;
        match dir {
            Direction::Out => lhs = tensordot(&lhs, &unit, &[(idx.label.as_str(), idx.label.as_str())])?,
            Direction::In => rhs = tensor_product(&rhs, &unit)?,
        }
    }
    let residual = lhs.max_abs_diff(&rhs)?;
    let bound = tol.bound(rhs.max_abs());
    Ok(NormReport { residual, tolerance: bound, passed: residual <= bound })
}

/// Replace every index whose algebra is neither classical nor a matrix
/// algebra by its image in a matrix algebra under an isometric embedding.
pub fn emulate_via_matrix(st: &StarTensor) -> StarResult<StarTensor> {
    let mut out = st.clone();
    let order: Vec<String> = st.labels().into_iter().map(String::from).collect();
    let order_ref: Vec<&str> = order.iter().map(String::as_str).collect();
    for (k, label) in order.iter().enumerate() {
        let alg = &st.algebras[k];
        if alg.is_classical() || alg.kind() == crate::algebra::AlgebraKind::Matrix {
            continue;
        }
        let (iso, target) = emulation_isometry(alg)?;
        let iso = iso.relabel_many(&[("src", "__emu_src"), ("tgt", "__emu_tgt")])?;
        let moved = tensordot(&out.tensor, &iso, &[(label.as_str(), "__emu_src")])?.relabel("__emu_tgt", label)?;
        out.tensor = moved.permute(&order_ref)?;
        out.algebras[k] = target;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{complex_algebra, delta_algebra, matrix_algebra, quantum_algebra, quaternion_algebra};
    use crate::tensor::Basis;

    fn delta2(data: Vec<f64>) -> StarTensor {
        let b = Basis::range("B", 2);
        let a = delta_algebra(&b);
        let t = Tensor::new(vec![Index::new("x", &b), Index::new("y", &b)], data).unwrap();
        StarTensor::undirected(t, vec![a.clone(), a]).unwrap()
    }

    #[test]
    fn entrywise_positive_root() {
        let st = delta2(vec![0.5, 0.2, 0.1, 0.2]);
        let p = check_positive(&st);
        let c = p.certificate().unwrap();
        assert!((c.root.data()[0] - 0.5f64.sqrt()).abs() < 1e-15);
        let back = assemble_from_root(&c.root, &c.internal_label, st.algebras()).unwrap();
        assert!(back.tensor().approx_eq(st.tensor(), Tolerance::default()));
    }

    #[test]
    fn negative_entry_witness() {
        match check_positive(&delta2(vec![0.5, -0.2, 0.1, 0.2])) {
            Positivity::NotPositive(Witness::NegativeEntry { index, value }) => {
                assert_eq!(index, vec![0, 1]);
                assert_eq!(value, -0.2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_psd_density_candidate() {
        let q = quantum_algebra(2);
        // rows (ket, bra, c) of diag(1, -0.1)
        let mut data = vec![0.0; 8];
        data[0] = 1.0;
        data[6] = -0.1;
        let t = Tensor::new(vec![Index::new("q", q.basis())], data).unwrap();
        let st = StarTensor::undirected(t, vec![q]).unwrap();
        match check_positive(&st) {
            Positivity::NotPositive(Witness::NegativeEigenvalue { eigenvalue, .. }) => {
                assert!((eigenvalue + 0.1).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn matrix_root_roundtrip() {
        let b = Basis::range("B", 2);
        let m = matrix_algebra(&b);
        let t = Tensor::new(vec![Index::new("x", m.basis())], vec![2.0, 1.0, 1.0, 1.0]).unwrap();
        let st = StarTensor::undirected(t, vec![m]).unwrap();
        let c = check_positive(&st).certificate().unwrap().clone();
        assert!(c.residual < 1e-12);
        let back = assemble_from_root(&c.root, &c.internal_label, st.algebras()).unwrap();
        assert!(back.tensor().max_abs_diff(st.tensor()).unwrap() < 1e-12);
    }

    #[test]
    fn complex_and_quaternion_roots_roundtrip() {
        for alg in [complex_algebra(), quaternion_algebra()] {
            let d = alg.dim();
            let x: Vec<f64> = (0..d).map(|k| 0.3 + k as f64 * 0.7).collect();
            let xx = alg.multiply(&x, &alg.star(&x));
            let t = Tensor::new(vec![Index::new("a", alg.basis())], xx).unwrap();
            let st = StarTensor::undirected(t, vec![alg.clone()]).unwrap();
            let c = check_positive(&st).certificate().unwrap().clone();
            let back = assemble_from_root(&c.root, &c.internal_label, st.algebras()).unwrap();
            assert!(back.tensor().max_abs_diff(st.tensor()).unwrap() < 1e-12);
            let neg = StarTensor::undirected(st.tensor().scale(-1.0), vec![alg]).unwrap();
            assert!(!check_positive(&neg).is_positive());
        }
    }

    #[test]
    fn stochastic_matrix_normalization() {
        let b = Basis::range("B", 2);
        let a = delta_algebra(&b);
        let t = Tensor::new(vec![Index::new("in", &b), Index::new("out", &b)], vec![0.9, 0.1, 0.2, 0.8]).unwrap();
        let st = StarTensor::directed(t, vec![a.clone(), a.clone()], vec![Direction::In, Direction::Out]).unwrap();
        assert!(check_normalized(&st).unwrap().passed);
        let bad = Tensor::new(vec![Index::new("in", &b), Index::new("out", &b)], vec![1.0, 0.1, 0.2, 0.8]).unwrap();
        let st = StarTensor::directed(bad, vec![a.clone(), a], vec![Direction::In, Direction::Out]).unwrap();
        let r = check_normalized(&st).unwrap();
        assert!(!r.passed);
        assert!((r.residual - 0.1).abs() < 1e-12);
        assert!(matches!(check_normalized(&st.without_directions()), Err(StarTensorError::MissingDirections)));
    }

    #[test]
    fn complex_emulation_preserves_pairing() {
        let c = complex_algebra();
        let a = StarTensor::undirected(
            Tensor::new(vec![Index::new("x", c.basis())], vec![0.3, -1.2]).unwrap(),
            vec![c.clone()],
        )
        .unwrap();
        let b = StarTensor::undirected(Tensor::new(vec![Index::new("x", c.basis())], vec![2.0, 0.5]).unwrap(), vec![c])
            .unwrap();
        let before = star_tensordot(&a, &b, &[("x", "x")]).unwrap().tensor().data()[0];
        let (ea, eb) = (emulate_via_matrix(&a).unwrap(), emulate_via_matrix(&b).unwrap());
        assert_eq!(ea.tensor().len(), 4);
        let after = star_tensordot(&ea, &eb, &[("x", "x")]).unwrap().tensor().data()[0];
        assert!((before - after).abs() < 1e-14);
        let d = delta2(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(emulate_via_matrix(&d).unwrap().tensor().data(), d.tensor().data());
    }
}
