//! Complex tensors through their real representation.
//!
//! A [`ComplexTensor`] is a real tensor with one extra index over the basis
//! `{1, i}` holding real and imaginary parts. Realification blocks each
//! logical index with a private copy of that flag; an `out` index carries the
//! real representation of the complex numbers, an `in` index its conjugate.

use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::{algebra_tensor_product, complex_algebra, complex_basis, Orientation, StarAlgebra};
use crate::star_tensor::Direction;
use crate::tensor::{block, tensordot, unblock, Basis, Index, Tensor, TensorError};

#[derive(Debug, Error, Clone)]
pub enum ComplexError {
    #[error("no realification direction for index `{0}`")]
    MissingDirection(String),
    #[error("expected {expected} logical indices, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

pub type ComplexResult<T> = Result<T, ComplexError>;

/// Label of the real/imaginary flag index.
pub const FLAG: &str = "__c";

#[derive(Clone, Debug)]
pub struct ComplexTensor {
    real_rep: Tensor,
}

impl ComplexTensor {
    /// `real_rep` must carry an index labeled [`FLAG`] over `{1, i}`.
    pub fn from_real_rep(real_rep: Tensor) -> ComplexResult<ComplexTensor> {
        let flag = real_rep.index(FLAG)?;
        if flag.basis != complex_basis() {
            return Err(TensorError::BasisMismatch(flag.basis.name().into(), "C".into()).into());
        }
        let mut order: Vec<&str> = real_rep.labels().into_iter().filter(|l| *l != FLAG).collect();
        order.push(FLAG);
        Ok(ComplexTensor { real_rep: real_rep.permute(&order)? })
    }

    pub fn from_fn<F: FnMut(&[usize]) -> Complex64>(indices: Vec<Index>, mut f: F) -> ComplexResult<ComplexTensor> {
        let values = Tensor::from_fn(indices.clone(), |_| 0.0)?;
        let shape = values.shape();
        let n = values.len();
        let mut data = Vec::with_capacity(2 * n);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..n {
            let z = f(&idx);
            data.push(z.re);
            data.push(z.im);
            crate::tensor::next_multi_index(&mut idx, &shape);
        }
        let mut all = indices;
        all.push(Index::new(FLAG, &complex_basis()));
        Ok(ComplexTensor { real_rep: Tensor::new(all, data)? })
    }

    pub fn from_parts(indices: Vec<Index>, re: &[f64], im: &[f64]) -> ComplexResult<ComplexTensor> {
        let n: usize = indices.iter().map(Index::dim).product();
        if re.len() != n || im.len() != n {
            return Err(TensorError::ShapeMismatch { expected: n, got: re.len().max(im.len()) }.into());
        }
        let mut k = 0;
        Self::from_fn(indices, |_| {
            k += 1;
            Complex64::new(re[k - 1], im[k - 1])
        })
    }

    pub fn scalar(z: Complex64) -> ComplexTensor {
        Self::from_fn(Vec::new(), |_| z).unwrap()
    }

    pub fn real_rep(&self) -> &Tensor {
        &self.real_rep
    }

    pub fn logical_indices(&self) -> &[Index] {
        let idx = self.real_rep.indices();
        &idx[..idx.len() - 1]
    }

    pub fn logical_labels(&self) -> Vec<&str> {
        self.logical_indices().iter().map(|i| i.label.as_str()).collect()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.logical_indices().iter().map(Index::dim).collect()
    }

    pub fn len(&self) -> usize {
        self.real_rep.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Entries in row-major order of the logical indices.
    pub fn values(&self) -> Vec<Complex64> {
        self.real_rep.data().chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()
    }

    pub fn get(&self, idx: &[usize]) -> Complex64 {
        let mut full = idx.to_vec();
        full.push(0);
        let re = self.real_rep.get(&full);
        *full.last_mut().unwrap() = 1;
        Complex64::new(re, self.real_rep.get(&full))
    }

    pub fn re(&self) -> Tensor {
        self.slice(0)
    }

    pub fn im(&self) -> Tensor {
        self.slice(1)
    }

    fn slice(&self, k: usize) -> Tensor {
        let data = self.real_rep.data().iter().skip(k).step_by(2).copied().collect();
        Tensor::new(self.logical_indices().to_vec(), data).unwrap()
    }

    pub fn conj(&self) -> ComplexTensor {
        let data = self.real_rep.data().iter().enumerate().map(|(k, v)| if k % 2 == 1 { -v } else { *v }).collect();
        ComplexTensor { real_rep: Tensor::new(self.real_rep.indices().to_vec(), data).unwrap() }
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> ComplexTensor {
        let values = self.values();
        let mut k = 0;
        Self::from_fn(self.logical_indices().to_vec(), |_| {
            k += 1;
            f(values[k - 1])
        })
        .unwrap()
    }

    pub fn relabel(&self, old: &str, new: &str) -> ComplexResult<ComplexTensor> {
        Ok(ComplexTensor { real_rep: self.real_rep.relabel(old, new)? })
    }

    pub fn permute(&self, order: &[&str]) -> ComplexResult<ComplexTensor> {
        let mut full = order.to_vec();
        full.push(FLAG);
        Ok(ComplexTensor { real_rep: self.real_rep.permute(&full)? })
    }

    pub fn max_abs_diff(&self, other: &ComplexTensor) -> ComplexResult<f64> {
        Ok(self.real_rep.max_abs_diff(&other.real_rep)?)
    }
}

/// Tensor product of `a` and `b` with `pairs` contracted, using complex
/// multiplication on the flag indices.
pub fn complex_product_contract(
    a: &ComplexTensor,
    b: &ComplexTensor,
    pairs: &[(&str, &str)],
) -> ComplexResult<ComplexTensor> {
    use Orientation::{Left as L, Right as R};
    let ra = a.real_rep.relabel(FLAG, "__ca")?;
    let rb = b.real_rep.relabel(FLAG, "__cb")?;
    let joined = tensordot(&ra, &rb, pairs)?;
    let mu = complex_algebra().algebra_tensor_labeled(&[R, R, L], &["__ca", "__cb", FLAG]);
    let fused = tensordot(&joined, &mu, &[("__ca", "__ca"), ("__cb", "__cb")])?;
    ComplexTensor::from_real_rep(fused)
}

/// Realify the listed indices; logical indices not listed are an error.
pub fn realify(a: &ComplexTensor, dirs: &[(&str, Direction)]) -> ComplexResult<Tensor> {
    for l in a.logical_labels() {
        if !dirs.iter().any(|(x, _)| *x == l) {
            return Err(ComplexError::MissingDirection(l.to_string()));
        }
    }
    realify_partial(a, dirs)
}

/// Realify only the listed indices. Unlisted indices stay plain real
/// indices (classical legs), and the flag is reduced to the real part.
pub fn realify_partial(a: &ComplexTensor, dirs: &[(&str, Direction)]) -> ComplexResult<Tensor> {
    let mut orientations = Vec::with_capacity(dirs.len() + 1);
    let mut labels: Vec<String> = Vec::with_capacity(dirs.len() + 1);
    for (k, (l, d)) in dirs.iter().enumerate() {
        a.real_rep.position(l)?;
        orientations.push(match d {
            Direction::In => Orientation::Right,
            Direction::Out => Orientation::Left,
        });
        labels.push(format!("__cf{k}"));
    }
    orientations.push(Orientation::Right);
    labels.push(FLAG.to_string());
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let c = complex_algebra().algebra_tensor_labeled(&orientations, &refs);
    let mut t = tensordot(&a.real_rep, &c, &[(FLAG, FLAG)])?;
    for (k, (l, _)) in dirs.iter().enumerate() {
        t = block(&t, &[l, &labels[k]], l)?;
    }
    Ok(t)
}

/// Inverse of [`realify`] for the listed (blocked) indices.
pub fn derealify(t: &Tensor, dirs: &[(&str, Direction)]) -> ComplexResult<ComplexTensor> {
    let cb = complex_basis();
    let mut u = t.clone();
    for (k, (l, _)) in dirs.iter().enumerate() {
        let idx = u.index(l)?.clone();
        let logical = logical_basis_of(&idx.basis, &cb)
            .ok_or_else(|| TensorError::BasisMismatch(idx.basis.name().into(), "C".into()))?;
        u = unblock(&u, l, &[Index::new(*l, &logical), Index::new(format!("__cf{k}"), &cb)])?;
    }
    let logical: Vec<Index> = u.indices().iter().filter(|i| !i.label.starts_with("__cf")).cloned().collect();
    let flags: Vec<String> = (0..dirs.len()).map(|k| format!("__cf{k}")).collect();
    let mut order: Vec<&str> = logical.iter().map(|i| i.label.as_str()).collect();
    order.extend(flags.iter().map(String::as_str));
    let u = u.permute(&order)?;
    let m = 1usize << dirs.len();
    let data = u.data();
    let mut k = 0;
    ComplexTensor::from_fn(logical, |_| {
        let base = k * m;
        k += 1;
        let re = data[base];
        let im = match dirs.first() {
            None => 0.0,
            // only the first flag is set to i: offset m/2
            Some((_, Direction::Out)) => data[base + m / 2],
            Some((_, Direction::In)) => -data[base + m / 2],
        };
        Complex64::new(re, im)
    })
}

/// Recover `L` from a basis named `(L*C)` built by [`Basis::product`].
fn logical_basis_of(b: &Basis, cb: &Basis) -> Option<Basis> {
    if !b.len().is_multiple_of(2) {
        return None;
    }
    let name = b.name().strip_prefix('(')?.strip_suffix(&format!("*{})", cb.name()))?;
    let elements: Vec<String> =
        b.elements().iter().step_by(2).map(|e| e.strip_suffix(",1").unwrap_or(e).to_string()).collect();
    Basis::new(name, elements).ok()
}

/// Algebra of a realified index whose logical index carries `logical`.
pub fn realified_algebra(logical: &StarAlgebra) -> StarAlgebra {
    algebra_tensor_product(logical, &complex_algebra())
}

/// A realified linear map with one `in` and one `out` logical index.
#[derive(Clone, Debug)]
pub struct RealifiedMap {
    pub tensor: Tensor,
    pub input: String,
    pub output: String,
}

impl RealifiedMap {
    pub fn from_complex(m: &ComplexTensor, input: &str, output: &str) -> ComplexResult<RealifiedMap> {
        if m.logical_indices().len() != 2 {
            return Err(ComplexError::ArityMismatch { expected: 2, got: m.logical_indices().len() });
        }
        let tensor = realify(m, &[(input, Direction::In), (output, Direction::Out)])?;
        Ok(RealifiedMap { tensor, input: input.into(), output: output.into() })
    }

    pub fn to_complex(&self) -> ComplexResult<ComplexTensor> {
        derealify(&self.tensor, &[(self.output.as_str(), Direction::Out), (self.input.as_str(), Direction::In)])
    }
}

/// Hermitian conjugate: exchange the roles of the two indices.
pub fn hermitian_conjugate(m: &RealifiedMap) -> ComplexResult<RealifiedMap> {
    if m.tensor.rank() != 2 {
        return Err(ComplexError::ArityMismatch { expected: 2, got: m.tensor.rank() });
    }
    let order: Vec<&str> = m.tensor.labels();
    let swapped = m.tensor.relabel_many(&[(&m.input, &m.output), (&m.output, &m.input)])?;
    Ok(RealifiedMap { tensor: swapped.permute(&order)?, input: m.input.clone(), output: m.output.clone() })
}

/// Complex tensor product (no contraction).
pub fn complex_tensor_product(a: &ComplexTensor, b: &ComplexTensor) -> ComplexResult<ComplexTensor> {
    complex_product_contract(a, b, &[])
}
