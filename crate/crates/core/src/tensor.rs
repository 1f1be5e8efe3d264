//! Dense real tensors with labeled indices over named finite bases.
//!
//! Data is stored row-major in index order. Every operation returns a new
//! tensor; nothing is mutated in place once constructed.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("duplicate index label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown index label `{0}`")]
    UnknownLabel(String),
    #[error("basis mismatch: `{0}` vs `{1}`")]
    BasisMismatch(String, String),
    #[error("index label sets differ")]
    LabelSetMismatch,
    #[error("gauge map has no entry for basis `{0}`")]
    MissingGaugeEntry(String),
    #[error("data length {got} does not match shape (expected {expected})")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("basis `{0}` has no elements")]
    EmptyBasis(String),
    #[error("basis element `{0}` appears twice")]
    DuplicateElement(String),
    #[error("gauge matrix for `{0}` is not an isometry (residual {1:e})")]
    NotIsometric(String, f64),
}

pub type TensorResult<T> = Result<T, TensorError>;

/// Absolute/relative tolerance pair used for all approximate comparisons.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerance {
    pub atol: f64,
    pub rtol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { atol: 1e-10, rtol: 1e-9 }
    }
}

impl Tolerance {
    pub fn new(atol: f64, rtol: f64) -> Self {
        Tolerance { atol, rtol }
    }

    pub fn absolute(atol: f64) -> Self {
        Tolerance { atol, rtol: 0.0 }
    }

    /// Allowed deviation for values of magnitude `scale`.
    pub fn bound(&self, scale: f64) -> f64 {
        self.atol + self.rtol * scale
    }
}

#[derive(Debug, PartialEq, Eq, Hash)]
struct BasisInner {
    name: String,
    elements: Vec<String>,
}

/// A named, ordered, finite set of basis elements. Equality is nominal:
/// two bases are interchangeable iff they have the same name and elements.
#[derive(Clone, Eq)]
pub struct Basis(Arc<BasisInner>);

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl std::hash::Hash for Basis {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Basis({}; {})", self.0.name, self.0.elements.len())
    }
}

impl Basis {
    pub fn new<S: Into<String>>(name: S, elements: Vec<String>) -> TensorResult<Basis> {
        let name = name.into();
        if elements.is_empty() {
            return Err(TensorError::EmptyBasis(name));
        }
        let mut seen = std::collections::HashSet::new();
        for e in &elements {
            if !seen.insert(e.as_str()) {
                return Err(TensorError::DuplicateElement(e.clone()));
            }
        }
        Ok(Basis(Arc::new(BasisInner { name, elements })))
    }

    /// Basis with elements `"0"`, `"1"`, ... `"n-1"`.
    pub fn range<S: Into<String>>(name: S, n: usize) -> Basis {
        assert!(n > 0, "range basis needs at least one element");
        Basis::new(name, (0..n).map(|i| i.to_string()).collect()).unwrap()
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn elements(&self) -> &[String] {
        &self.0.elements
    }

    pub fn len(&self) -> usize {
        self.0.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn position(&self, element: &str) -> Option<usize> {
        self.0.elements.iter().position(|e| e == element)
    }

    /// Cartesian product, row-major over `parts`.
    pub fn product(parts: &[&Basis]) -> Basis {
        let name = format!("({})", parts.iter().map(|b| b.name()).collect::<Vec<_>>().join("*"));
        let mut elements = vec![String::new()];
        for (k, part) in parts.iter().enumerate() {
            let mut next = Vec::with_capacity(elements.len() * part.len());
            for prefix in &elements {
                for e in part.elements() {
                    if k == 0 {
                        next.push(e.clone());
                    } else {
                        next.push(format!("{prefix},{e}"));
                    }
                }
            }
            elements = next;
        }
        if parts.is_empty() {
            elements = vec!["()".to_string()];
        }
        Basis(Arc::new(BasisInner { name, elements }))
    }

    /// Disjoint union; elements are qualified by the name of their part.
    pub fn disjoint_union(a: &Basis, b: &Basis) -> TensorResult<Basis> {
        let elements = a
            .elements()
            .iter()
            .map(|e| format!("{}:{e}", a.name()))
            .chain(b.elements().iter().map(|e| format!("{}:{e}", b.name())))
            .collect();
        Basis::new(format!("({}+{})", a.name(), b.name()), elements)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Index {
    pub label: String,
    pub basis: Basis,
}

impl Index {
    pub fn new<S: Into<String>>(label: S, basis: &Basis) -> Index {
        Index { label: label.into(), basis: basis.clone() }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

#[derive(Clone, Debug)]
pub struct Tensor {
    indices: Vec<Index>,
    data: Vec<f64>,
}

fn check_unique(indices: &[Index]) -> TensorResult<()> {
    for (i, a) in indices.iter().enumerate() {
        if indices[..i].iter().any(|b| b.label == a.label) {
            return Err(TensorError::DuplicateLabel(a.label.clone()));
        }
    }
    Ok(())
}

pub(crate) fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * shape[k + 1];
    }
    strides
}

/// Advance a row-major multi-index; returns false after the last element.
pub(crate) fn next_multi_index(idx: &mut [usize], shape: &[usize]) -> bool {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return true;
        }
        idx[k] = 0;
    }
    false
}

impl Tensor {
    pub fn new(indices: Vec<Index>, data: Vec<f64>) -> TensorResult<Tensor> {
        check_unique(&indices)?;
        let expected: usize = indices.iter().map(Index::dim).product();
        if expected != data.len() {
            return Err(TensorError::ShapeMismatch { expected, got: data.len() });
        }
        Ok(Tensor { indices, data })
    }

    pub fn scalar(value: f64) -> Tensor {
        Tensor { indices: Vec::new(), data: vec![value] }
    }

    pub fn zeros(indices: Vec<Index>) -> TensorResult<Tensor> {
        let n = indices.iter().map(Index::dim).product();
        Tensor::new(indices, vec![0.0; n])
    }

    /// Build a tensor by evaluating `f` at every multi-index (row-major).
    pub fn from_fn<F: FnMut(&[usize]) -> f64>(indices: Vec<Index>, mut f: F) -> TensorResult<Tensor> {
        check_unique(&indices)?;
        let shape: Vec<usize> = indices.iter().map(Index::dim).collect();
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![0; shape.len()];
        for _ in 0..n {
            data.push(f(&idx));
            next_multi_index(&mut idx, &shape);
        }
        Ok(Tensor { indices, data })
    }

    pub fn indices(&self) -> &[Index] {
        &self.indices
    }

    pub fn labels(&self) -> Vec<&str> {
        self.indices.iter().map(|i| i.label.as_str()).collect()
    }

    pub fn rank(&self) -> usize {
        self.indices.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.indices.iter().map(Index::dim).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn position(&self, label: &str) -> TensorResult<usize> {
        self.indices.iter().position(|i| i.label == label).ok_or_else(|| TensorError::UnknownLabel(label.to_string()))
    }

    pub fn index(&self, label: &str) -> TensorResult<&Index> {
        Ok(&self.indices[self.position(label)?])
    }

    pub fn has_label(&self, label: &str) -> bool {
        self.indices.iter().any(|i| i.label == label)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        let shape = self.shape();
        let strides = strides_of(&shape);
        let offset: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        self.data[offset]
    }

    /// Value of a 0-index tensor.
    pub fn scalar_value(&self) -> Option<f64> {
        if self.indices.is_empty() {
            Some(self.data[0])
        } else {
            None
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Tensor {
        Tensor { indices: self.indices.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, factor: f64) -> Tensor {
        self.map(|v| v * factor)
    }

    /// Entrywise sum with `other` after aligning `other` to this index order.
    pub fn add(&self, other: &Tensor) -> TensorResult<Tensor> {
        let other = other.aligned_to(self)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Tensor { indices: self.indices.clone(), data })
    }

    pub fn relabel(&self, old: &str, new: &str) -> TensorResult<Tensor> {
        let pos = self.position(old)?;
        if old != new && self.has_label(new) {
            return Err(TensorError::DuplicateLabel(new.to_string()));
        }
        let mut out = self.clone();
        out.indices[pos].label = new.to_string();
        Ok(out)
    }

    /// Rename several indices at once; `pairs` maps old labels to new ones.
    pub fn relabel_many(&self, pairs: &[(&str, &str)]) -> TensorResult<Tensor> {
        let mut indices = self.indices.clone();
        for (old, new) in pairs {
            let pos = self.position(old)?;
            indices[pos].label = new.to_string();
        }
        check_unique(&indices)?;
        Ok(Tensor { indices, data: self.data.clone() })
    }

    /// Reorder indices to `order`, which must be a permutation of the labels.
    pub fn permute(&self, order: &[&str]) -> TensorResult<Tensor> {
        if order.len() != self.rank() {
            return Err(TensorError::LabelSetMismatch);
        }
        let perm = order.iter().map(|l| self.position(l)).collect::<TensorResult<Vec<_>>>()?;
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if std::mem::replace(&mut seen[p], true) {
                return Err(TensorError::LabelSetMismatch);
            }
        }
        Ok(self.permute_positions(&perm))
    }

    pub(crate) fn permute_positions(&self, perm: &[usize]) -> Tensor {
        let indices: Vec<Index> = perm.iter().map(|&p| self.indices[p].clone()).collect();
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return Tensor { indices, data: self.data.clone() };
        }
        let old_strides = strides_of(&self.shape());
        let shape: Vec<usize> = indices.iter().map(Index::dim).collect();
        let src_strides: Vec<usize> = perm.iter().map(|&p| old_strides[p]).collect();
        let data = gather(&self.data, &shape, &src_strides);
        Tensor { indices, data }
    }

    /// This tensor's data reordered to match `reference`'s index order.
    pub fn aligned_to(&self, reference: &Tensor) -> TensorResult<Tensor> {
        if self.rank() != reference.rank() {
            return Err(TensorError::LabelSetMismatch);
        }
        let order: Vec<&str> = reference.labels();
        let out = self.permute(&order).map_err(|_| TensorError::LabelSetMismatch)?;
        for (a, b) in out.indices.iter().zip(&reference.indices) {
            if a.basis != b.basis {
                return Err(TensorError::BasisMismatch(a.basis.name().into(), b.basis.name().into()));
            }
        }
        Ok(out)
    }

    /// Max absolute entry difference after aligning index orders.
    pub fn max_abs_diff(&self, other: &Tensor) -> TensorResult<f64> {
        let other = other.aligned_to(self)?;
        Ok(self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn approx_eq(&self, other: &Tensor, tol: Tolerance) -> bool {
        match self.max_abs_diff(other) {
            Ok(d) => d <= tol.bound(self.max_abs().max(other.max_abs())),
            Err(_) => false,
        }
    }
}

/// Copy `src` into a fresh row-major buffer of `shape`, reading with `src_strides`.
fn gather(src: &[f64], shape: &[usize], src_strides: &[usize]) -> Vec<f64> {
    let n: usize = shape.iter().product();
    let mut out = Vec::with_capacity(n);
    if shape.is_empty() {
        out.push(src[0]);
        return out;
    }
    let last = shape.len() - 1;
    let (inner, inner_stride) = (shape[last], src_strides[last]);
    let mut idx = vec![0usize; last];
    let outer_shape = &shape[..last];
    let outer: usize = outer_shape.iter().product();
    for _ in 0..outer {
        let base: usize = idx.iter().zip(src_strides).map(|(i, s)| i * s).sum();
        for j in 0..inner {
            out.push(src[base + j * inner_stride]);
        }
        next_multi_index(&mut idx, outer_shape);
    }
    out
}

impl fmt::Display for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor[")?;
        for (k, i) in self.indices.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:{}", i.label, i.basis.name())?;
        }
        write!(f, "] {:?}", self.data)
    }
}

/// Outer product; `a`'s indices come first.
pub fn tensor_product(a: &Tensor, b: &Tensor) -> TensorResult<Tensor> {
    let mut indices = a.indices.clone();
    indices.extend(b.indices.iter().cloned());
    check_unique(&indices)?;
    let mut data = Vec::with_capacity(a.data.len() * b.data.len());
    for &x in &a.data {
        data.extend(b.data.iter().map(|&y| x * y));
    }
    Ok(Tensor { indices, data })
}

/// Sum over the diagonal of indices `x` and `y`.
pub fn contract(t: &Tensor, x: &str, y: &str) -> TensorResult<Tensor> {
    if x == y {
        return Err(TensorError::DuplicateLabel(x.to_string()));
    }
    let px = t.position(x)?;
    let py = t.position(y)?;
    let (bx, by) = (&t.indices[px].basis, &t.indices[py].basis);
    if bx != by {
        return Err(TensorError::BasisMismatch(bx.name().into(), by.name().into()));
    }
    let d = bx.len();
    let strides = strides_of(&t.shape());
    let keep: Vec<usize> = (0..t.rank()).filter(|&k| k != px && k != py).collect();
    let indices: Vec<Index> = keep.iter().map(|&k| t.indices[k].clone()).collect();
    let shape: Vec<usize> = indices.iter().map(Index::dim).collect();
    let keep_strides: Vec<usize> = keep.iter().map(|&k| strides[k]).collect();
    let diag = strides[px] + strides[py];
    let n: usize = shape.iter().product();
    let mut data = Vec::with_capacity(n);
    let mut idx = vec![0usize; shape.len()];
    for _ in 0..n {
        let base: usize = idx.iter().zip(&keep_strides).map(|(i, s)| i * s).sum();
        data.push((0..d).map(|j| t.data[base + j * diag]).sum());
        next_multi_index(&mut idx, &shape);
    }
    Ok(Tensor { indices, data })
}

/// Contract indices of `a` with indices of `b` pairwise. The result carries
/// the free indices of `a` followed by those of `b`.
pub fn tensordot(a: &Tensor, b: &Tensor, pairs: &[(&str, &str)]) -> TensorResult<Tensor> {
    let mut pa = Vec::with_capacity(pairs.len());
    let mut pb = Vec::with_capacity(pairs.len());
    for (x, y) in pairs {
        let i = a.position(x)?;
        let j = b.position(y)?;
        if a.indices[i].basis != b.indices[j].basis {
            return Err(TensorError::BasisMismatch(a.indices[i].basis.name().into(), b.indices[j].basis.name().into()));
        }
        if pa.contains(&i) {
            return Err(TensorError::DuplicateLabel(x.to_string()));
        }
        if pb.contains(&j) {
            return Err(TensorError::DuplicateLabel(y.to_string()));
        }
        pa.push(i);
        pb.push(j);
    }
    let free_a: Vec<usize> = (0..a.rank()).filter(|k| !pa.contains(k)).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|k| !pb.contains(k)).collect();
    let mut indices: Vec<Index> = free_a.iter().map(|&k| a.indices[k].clone()).collect();
    indices.extend(free_b.iter().map(|&k| b.indices[k].clone()));
    check_unique(&indices)?;

    let perm_a: Vec<usize> = free_a.iter().chain(&pa).copied().collect();
    let perm_b: Vec<usize> = pb.iter().chain(&free_b).copied().collect();
    let am = a.permute_positions(&perm_a);
    let bm = b.permute_positions(&perm_b);
    let m: usize = free_a.iter().map(|&k| a.indices[k].dim()).product();
    let k: usize = pa.iter().map(|&i| a.indices[i].dim()).product();
    let n: usize = free_b.iter().map(|&j| b.indices[j].dim()).product();
    let mut data = vec![0.0; m * n];
    // SAFETY: buffers are sized m*k, k*n and m*n with row-major strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            am.data.as_ptr(),
            k as isize,
            1,
            bm.data.as_ptr(),
            n as isize,
            1,
            0.0,
            data.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    Ok(Tensor { indices, data })
}

/// Replace `labels` by a single index over their product basis, placed where
/// the first listed label was.
pub fn block(t: &Tensor, labels: &[&str], new_label: &str) -> TensorResult<Tensor> {
    if labels.is_empty() {
        return Err(TensorError::UnknownLabel(String::new()));
    }
    let pos = labels.iter().map(|l| t.position(l)).collect::<TensorResult<Vec<_>>>()?;
    let first = *pos.iter().min().unwrap();
    let rest: Vec<usize> = (0..t.rank()).filter(|k| !pos.contains(k)).collect();
    let before: Vec<usize> = rest.iter().copied().filter(|&k| k < first).collect();
    let after: Vec<usize> = rest.iter().copied().filter(|&k| k > first).collect();
    let perm: Vec<usize> = before.iter().chain(&pos).chain(&after).copied().collect();
    let p = t.permute_positions(&perm);
    let bases: Vec<&Basis> = pos.iter().map(|&k| &t.indices[k].basis).collect();
    let blocked = Index::new(new_label, &Basis::product(&bases));
    let mut indices: Vec<Index> = before.iter().map(|&k| t.indices[k].clone()).collect();
    indices.push(blocked);
    indices.extend(after.iter().map(|&k| t.indices[k].clone()));
    check_unique(&indices)?;
    Ok(Tensor { indices, data: p.data })
}

/// Inverse of [`block`]: split `label` into `parts` (row-major).
pub fn unblock(t: &Tensor, label: &str, parts: &[Index]) -> TensorResult<Tensor> {
    let pos = t.position(label)?;
    let bases: Vec<&Basis> = parts.iter().map(|i| &i.basis).collect();
    let expected = Basis::product(&bases);
    let have = &t.indices[pos].basis;
    if have.len() != expected.len() {
        return Err(TensorError::BasisMismatch(have.name().into(), expected.name().into()));
    }
    let mut indices = t.indices[..pos].to_vec();
    indices.extend(parts.iter().cloned());
    indices.extend(t.indices[pos + 1..].iter().cloned());
    check_unique(&indices)?;
    Ok(Tensor { indices, data: t.data.clone() })
}

pub fn identity(basis: &Basis, l1: &str, l2: &str) -> TensorResult<Tensor> {
    Tensor::from_fn(vec![Index::new(l1, basis), Index::new(l2, basis)], |i| if i[0] == i[1] { 1.0 } else { 0.0 })
}

/// Block-diagonal combination. Every index basis becomes the disjoint union
/// of the two parts; entries with mixed parts vanish. On 0-index tensors this
/// is the sum, which is what closed networks of direct sums evaluate to.
pub fn direct_sum(a: &Tensor, b: &Tensor) -> TensorResult<Tensor> {
    let mut la: Vec<&str> = a.labels();
    let mut lb: Vec<&str> = b.labels();
    la.sort_unstable();
    lb.sort_unstable();
    if la != lb {
        return Err(TensorError::LabelSetMismatch);
    }
    if a.rank() == 0 {
        return Ok(Tensor::scalar(a.data[0] + b.data[0]));
    }
    let b = b.permute(&a.labels())?;
    let mut indices = Vec::with_capacity(a.rank());
    for (ia, ib) in a.indices.iter().zip(&b.indices) {
        indices.push(Index::new(ia.label.clone(), &Basis::disjoint_union(&ia.basis, &ib.basis)?));
    }
    let (sa, sb) = (a.shape(), b.shape());
    let (sta, stb) = (strides_of(&sa), strides_of(&sb));
    Tensor::from_fn(indices, |idx| {
        if idx.iter().zip(&sa).all(|(i, d)| i < d) {
            a.data[idx.iter().zip(&sta).map(|(i, s)| i * s).sum::<usize>()]
        } else if idx.iter().zip(&sa).all(|(i, d)| i >= d) {
            b.data[idx.iter().zip(&sa).zip(&stb).map(|((i, d), s)| (i - d) * s).sum::<usize>()]
        } else {
            0.0
        }
    })
}

/// Per-basis orthogonal change of basis.
#[derive(Clone, Debug, Default)]
pub struct GaugeMap {
    entries: HashMap<Basis, Tensor>,
}

const GAUGE_SRC: &str = "__gauge_src";
const GAUGE_TGT: &str = "__gauge_tgt";

impl GaugeMap {
    pub fn new() -> Self {
        GaugeMap::default()
    }

    /// Register `matrix` (row-major, |source| × |target|) for `source`.
    pub fn insert(&mut self, source: &Basis, target: &Basis, matrix: Vec<f64>, tol: Tolerance) -> TensorResult<()> {
        let g = Tensor::new(vec![Index::new(GAUGE_SRC, source), Index::new(GAUGE_TGT, target)], matrix)?;
        let (n, m) = (source.len(), target.len());
        let mut residual: f64 = 0.0;
        for (rows, cols, stride_r, stride_c) in [(n, m, m, 1), (m, n, 1, m)] {
            for i in 0..rows {
                for j in 0..rows {
                    let dot: f64 = (0..cols)
                        .map(|k| g.data[i * stride_r + k * stride_c] * g.data[j * stride_r + k * stride_c])
                        .sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    residual = residual.max((dot - want).abs());
                }
            }
        }
        if residual > tol.bound(1.0) {
            return Err(TensorError::NotIsometric(source.name().into(), residual));
        }
        self.entries.insert(source.clone(), g);
        Ok(())
    }

    pub fn identity(bases: &[&Basis]) -> Self {
        let mut g = GaugeMap::new();
        for b in bases {
            let n = b.len();
            let data = (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect();
            g.insert(b, b, data, Tolerance::default()).unwrap();
        }
        g
    }

    pub fn target(&self, source: &Basis) -> Option<&Basis> {
        self.entries.get(source).map(|g| &g.indices[1].basis)
    }
}

/// Transform every index by its basis' gauge matrix.
pub fn apply_gauge(t: &Tensor, g: &GaugeMap) -> TensorResult<Tensor> {
    let mut out = t.clone();
    for k in 0..t.rank() {
        let idx = &t.indices[k];
        let gm = g.entries.get(&idx.basis).ok_or_else(|| TensorError::MissingGaugeEntry(idx.basis.name().into()))?;
        let moved = tensordot(&out, gm, &[(idx.label.as_str(), GAUGE_SRC)])?;
        let moved = moved.relabel(GAUGE_TGT, &idx.label)?;
        let order: Vec<&str> = t.labels();
        out = moved.permute(&order)?;
    }
    Ok(out)
}
