//! *-algebras given by their generating structure tensors.
//!
//! An algebra is stored as three arrays over its basis `B`:
//! `unit[z]` (the 1-index tensor, which doubles as the trace functional),
//! `involution[a][b]` (the 2-index tensor with equal orientations) and
//! `product[a][b][c]` (coefficient of `c` in `a·b`, i.e. the 3-index tensor
//! with orientations right, right, left). Every other algebra tensor is
//! synthesized from these by fusion.
//!
//! Built-in algebras keep the textbook scale (matrix unit = identity matrix,
//! complex `i·i = -1`, quaternion table with unit entries). The loop
//! convention is available through [`StarAlgebra::loop_normalized`].

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::tensor::{tensordot, Basis, Index, Tensor, TensorError};

#[derive(Debug, Error, Clone)]
pub enum AlgebraError {
    #[error("basis `{0}` has no elements")]
    EmptyBasis(String),
    #[error("structure tensor `{name}` has length {got}, expected {expected}")]
    ArityMismatch { name: &'static str, expected: usize, got: usize },
    #[error("axioms violated: {}", .0.failure_summary())]
    AxiomViolation(Box<AxiomReport>),
    #[error("algebra `{algebra}` cannot be loop-normalized for embedding (residual {residual:e})")]
    NormalizationIncompatible { algebra: String, residual: f64 },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

pub type AlgebraResult<T> = Result<T, AlgebraError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Orientation {
    Left,
    Right,
}

impl Orientation {
    pub fn flip(self) -> Orientation {
        match self {
            Orientation::Left => Orientation::Right,
            Orientation::Right => Orientation::Left,
        }
    }

    /// Parse a string such as `"RRL"`.
    pub fn parse_all(s: &str) -> Option<Vec<Orientation>> {
        s.chars()
            .map(|c| match c {
                'R' | 'r' => Some(Orientation::Right),
                'L' | 'l' => Some(Orientation::Left),
                _ => None,
            })
            .collect()
    }

    /// All orientation strings of length `n`, right-first lexicographic.
    pub fn all(n: usize) -> Vec<Vec<Orientation>> {
        (0..1usize << n)
            .map(|mask| {
                (0..n)
                    .map(|k| if mask >> (n - 1 - k) & 1 == 0 { Orientation::Right } else { Orientation::Left })
                    .collect()
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgebraKind {
    Trivial,
    Delta,
    Matrix,
    Complex,
    Quaternion,
    DirectSum,
    TensorProduct,
    Custom,
}

static NEXT_ID: AtomicU64 = AtomicU64::new(0);

struct AlgebraInner {
    id: u64,
    name: String,
    kind: AlgebraKind,
    basis: Basis,
    unit: Vec<f64>,
    involution: Vec<f64>,
    product: Vec<f64>,
    /// Overall rescaling relative to the structure this algebra was built from.
    alpha: f64,
    components: Vec<StarAlgebra>,
    matrix_set: Option<Basis>,
    cache: RwLock<HashMap<Vec<Orientation>, Arc<Vec<f64>>>>,
}

/// A finite-dimensional *-algebra. Cheap to clone; immutable.
#[derive(Clone)]
pub struct StarAlgebra(Arc<AlgebraInner>);

impl fmt::Debug for StarAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StarAlgebra({}, {:?}, dim {})", self.0.name, self.0.kind, self.dim())
    }
}

impl PartialEq for StarAlgebra {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.kind == other.0.kind
                && self.0.basis == other.0.basis
                && self.0.unit == other.0.unit
                && self.0.involution == other.0.involution
                && self.0.product == other.0.product)
    }
}

struct Parts {
    name: String,
    kind: AlgebraKind,
    basis: Basis,
    unit: Vec<f64>,
    involution: Vec<f64>,
    product: Vec<f64>,
    alpha: f64,
    components: Vec<StarAlgebra>,
    matrix_set: Option<Basis>,
}

impl StarAlgebra {
    fn build(p: Parts) -> StarAlgebra {
        StarAlgebra(Arc::new(AlgebraInner {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            name: p.name,
            kind: p.kind,
            basis: p.basis,
            unit: p.unit,
            involution: p.involution,
            product: p.product,
            alpha: p.alpha,
            components: p.components,
            matrix_set: p.matrix_set,
            cache: RwLock::new(HashMap::new()),
        }))
    }

    pub fn id(&self) -> u64 {
        self.0.id
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn kind(&self) -> AlgebraKind {
        self.0.kind
    }

    pub fn basis(&self) -> &Basis {
        &self.0.basis
    }

    pub fn dim(&self) -> usize {
        self.0.basis.len()
    }

    /// Scale factor relative to the input structure (1 unless renormalized).
    pub fn alpha(&self) -> f64 {
        self.0.alpha
    }

    /// Summands or factors of a direct sum / tensor product.
    pub fn components(&self) -> &[StarAlgebra] {
        &self.0.components
    }

    /// For matrix algebras, the set `B` with basis `B×B`.
    pub fn matrix_set(&self) -> Option<&Basis> {
        self.0.matrix_set.as_ref()
    }

    pub fn is_classical(&self) -> bool {
        matches!(self.0.kind, AlgebraKind::Delta | AlgebraKind::Trivial)
    }

    pub fn unit_data(&self) -> &[f64] {
        &self.0.unit
    }

    pub fn involution_data(&self) -> &[f64] {
        &self.0.involution
    }

    pub fn product_data(&self) -> &[f64] {
        &self.0.product
    }

    pub fn unit(&self) -> Tensor {
        Tensor::new(vec![Index::new("a", &self.0.basis)], self.0.unit.clone()).unwrap()
    }

    pub fn involution(&self) -> Tensor {
        let b = &self.0.basis;
        Tensor::new(vec![Index::new("a", b), Index::new("b", b)], self.0.involution.clone()).unwrap()
    }

    pub fn product(&self) -> Tensor {
        let b = &self.0.basis;
        Tensor::new(vec![Index::new("a", b), Index::new("b", b), Index::new("c", b)], self.0.product.clone()).unwrap()
    }

    /// Coefficient vector of `x·y`.
    pub fn multiply(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for (a, &xa) in x.iter().enumerate().take(d) {
            if xa == 0.0 {
                continue;
            }
            for (b, &yb) in y.iter().enumerate().take(d) {
                if yb == 0.0 {
                    continue;
                }
                let w = xa * yb;
                let row = &self.0.product[(a * d + b) * d..(a * d + b + 1) * d];
                for (o, m) in out.iter_mut().zip(row) {
                    *o += w * m;
                }
            }
        }
        out
    }

    /// Coefficient vector of `x*`.
    pub fn star(&self, x: &[f64]) -> Vec<f64> {
        mat_vec_t(&self.0.involution, x, self.dim())
    }

    /// The element `Σ_x x·x*`, which is `λ·1` for simple algebras; returns
    /// `λ` and the residual of that fit.
    pub fn loop_factor(&self) -> (f64, f64) {
        let d = self.dim();
        let mut s = vec![0.0; d];
        for x in 0..d {
            let mut e = vec![0.0; d];
            e[x] = 1.0;
            let p = self.multiply(&e, &self.star(&e));
            for (si, pi) in s.iter_mut().zip(p) {
                *si += pi;
            }
        }
        let u = &self.0.unit;
        let uu: f64 = u.iter().map(|v| v * v).sum();
        let lambda = s.iter().zip(u).map(|(a, b)| a * b).sum::<f64>() / uu;
        let residual = s.iter().zip(u).fold(0.0f64, |m, (a, b)| m.max((a - lambda * b).abs()));
        (lambda, residual)
    }

    /// Rescaled member of the same family for which contracting an adjacent
    /// pair of opposite-oriented indices just removes them.
    pub fn loop_normalized(&self) -> AlgebraResult<StarAlgebra> {
        let (lambda, residual) = self.loop_factor();
        if residual > 1e-9 * lambda.abs().max(1.0) || lambda <= 0.0 {
            return Err(AlgebraError::NormalizationIncompatible { algebra: self.0.name.clone(), residual });
        }
        if (lambda - 1.0).abs() < 1e-15 {
            return Ok(self.clone());
        }
        Ok(self.rescaled(lambda.sqrt()))
    }

    /// Multiply each n-index tensor by `alpha^(2-n)`.
    fn rescaled(&self, alpha: f64) -> StarAlgebra {
        StarAlgebra::build(Parts {
            name: self.0.name.clone(),
            kind: self.0.kind,
            basis: self.0.basis.clone(),
            unit: self.0.unit.iter().map(|v| v * alpha).collect(),
            involution: self.0.involution.clone(),
            product: self.0.product.iter().map(|v| v / alpha).collect(),
            alpha: self.0.alpha * alpha,
            components: self.0.components.clone(),
            matrix_set: self.0.matrix_set.clone(),
        })
    }

    /// The n-index algebra tensor for `orientations`, labeled `i0, i1, ...`.
    pub fn algebra_tensor(&self, orientations: &[Orientation]) -> Tensor {
        let labels: Vec<String> = (0..orientations.len()).map(|k| format!("i{k}")).collect();
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        self.algebra_tensor_labeled(orientations, &refs)
    }

    pub fn algebra_tensor_labeled(&self, orientations: &[Orientation], labels: &[&str]) -> Tensor {
        assert_eq!(orientations.len(), labels.len(), "one label per orientation");
        let data = self.algebra_data(orientations);
        let indices = labels.iter().map(|l| Index::new(*l, &self.0.basis)).collect();
        Tensor::new(indices, data.as_ref().clone()).expect("labels must be distinct")
    }

    /// Cached raw data of an algebra tensor.
    pub fn algebra_data(&self, orientations: &[Orientation]) -> Arc<Vec<f64>> {
        if let Some(hit) = self.0.cache.read().unwrap_or_else(|e| e.into_inner()).get(orientations) {
            return hit.clone();
        }
        let data = Arc::new(self.synthesize(orientations));
        self.0.cache.write().unwrap_or_else(|e| e.into_inner()).entry(orientations.to_vec()).or_insert(data).clone()
    }

    fn synthesize(&self, o: &[Orientation]) -> Vec<f64> {
        let d = self.dim();
        let n = o.len();
        let (eta, t, mu) = (&self.0.unit, &self.0.involution, &self.0.product);
        let mut data = match n {
            0 => {
                let left = mat_vec_t(t, eta, d);
                return vec![eta.iter().zip(&left).map(|(a, b)| a * b).sum()];
            }
            1 => eta.clone(),
            2 => t.clone(),
            _ => {
                // p[(x0..xk), z]: coefficient of z in x0·x1·…·xk
                let mut p = vec![0.0; d * d];
                for x in 0..d {
                    p[x * d + x] = 1.0;
                }
                let mut rows = d;
                for _ in 1..n {
                    let mut next = vec![0.0; rows * d * d];
                    for r in 0..rows {
                        for w in 0..d {
                            let pw = p[r * d + w];
                            if pw == 0.0 {
                                continue;
                            }
                            for x in 0..d {
                                let src = &mu[(w * d + x) * d..(w * d + x + 1) * d];
                                let dst = &mut next[(r * d + x) * d..(r * d + x + 1) * d];
                                for (o, m) in dst.iter_mut().zip(src) {
                                    *o += pw * m;
                                }
                            }
                        }
                    }
                    p = next;
                    rows *= d;
                }
                (0..rows).map(|r| p[r * d..(r + 1) * d].iter().zip(eta).map(|(a, b)| a * b).sum()).collect()
            }
        };
        for (pos, or) in o.iter().enumerate() {
            if *or == Orientation::Left {
                data = apply_on_axis(&data, n, d, pos, t);
            }
        }
        data
    }

    /// Check the axioms numerically. Failures are report entries.
    pub fn verify_axioms(&self, max_n: usize) -> AxiomReport {
        self.verify_axioms_with(max_n, 1e-10)
    }

    pub fn verify_axioms_with(&self, max_n: usize, tol: f64) -> AxiomReport {
        let max_n = max_n.max(3);
        let d = self.dim();
        let (eta, t, mu) = (&self.0.unit, &self.0.involution, &self.0.product);
        let scale = eta.iter().chain(t).chain(mu).fold(1.0f64, |m, v| m.max(v.abs()));
        let mut checks = Vec::new();
        let mut push = |name: &'static str, residual: f64| {
            checks.push(AxiomCheck { name, residual, passed: residual <= tol * scale });
        };

        push("unit_fixed_by_involution", max_diff(&mat_vec_t(t, eta, d), eta));
        let tt = mat_mul(t, t, d);
        push("involution_squared", max_diff(&tt, &identity_data(d)));
        let mut unit_res: f64 = 0.0;
        for x in 0..d {
            let e = basis_vector(d, x);
            unit_res = unit_res.max(max_diff(&self.multiply(eta, &e), &e)).max(max_diff(&self.multiply(&e, eta), &e));
        }
        push("unit_law", unit_res);
        let (mut star_res, mut assoc_res) = (0.0f64, 0.0f64);
        for a in 0..d {
            let ea = basis_vector(d, a);
            for b in 0..d {
                let eb = basis_vector(d, b);
                let ab = self.multiply(&ea, &eb);
                let lhs = self.star(&ab);
                let rhs = self.multiply(&self.star(&eb), &self.star(&ea));
                star_res = star_res.max(max_diff(&lhs, &rhs));
                for c in 0..d {
                    let ec = basis_vector(d, c);
                    let l = self.multiply(&ab, &ec);
                    let r = self.multiply(&ea, &self.multiply(&eb, &ec));
                    assoc_res = assoc_res.max(max_diff(&l, &r));
                }
            }
        }
        push("star_reverses_products", star_res);
        push("associativity", assoc_res);
        let sym: f64 = (0..d)
            .flat_map(|a| (0..d).map(move |b| (a, b)))
            .fold(0.0, |m, (a, b)| m.max((t[a * d + b] - t[b * d + a]).abs()));
        push("involution_symmetric", sym);
        use Orientation::{Left as L, Right as R};
        let mixed = self.algebra_data(&[R, L]);
        push("support_convention", max_diff(&mixed, &identity_data(d)));

        let mut cyc: f64 = 0.0;
        let mut rev: f64 = 0.0;
        for n in 1..=max_n {
            for o in Orientation::all(n) {
                let base = self.algebra_tensor(&o);
                let mut rot = o[1..].to_vec();
                rot.push(o[0]);
                let rot_labels: Vec<String> = (0..n).map(|k| format!("i{}", (k + 1) % n)).collect();
                let rl: Vec<&str> = rot_labels.iter().map(String::as_str).collect();
                cyc = cyc.max(base.max_abs_diff(&self.algebra_tensor_labeled(&rot, &rl)).unwrap());

                let flipped: Vec<Orientation> = o.iter().map(|x| x.flip()).collect();
                let reversed: Vec<Orientation> = o.iter().rev().copied().collect();
                let rev_labels: Vec<String> = (0..n).map(|k| format!("i{}", n - 1 - k)).collect();
                let vl: Vec<&str> = rev_labels.iter().map(String::as_str).collect();
                let lhs = self.algebra_tensor(&flipped);
                rev = rev.max(lhs.max_abs_diff(&self.algebra_tensor_labeled(&reversed, &vl)).unwrap());
            }
        }
        push("cyclic_permutation", cyc);
        push("orientation_reversal", rev);

        let mut fus: f64 = 0.0;
        for m in 1..=max_n + 1 {
            for n in 1..=(max_n + 2 - m) {
                let la: Vec<String> = (0..m).map(|k| format!("a{k}")).collect();
                let lb: Vec<String> = (0..n).map(|k| format!("b{k}")).collect();
                let la_ref: Vec<&str> = la.iter().map(String::as_str).collect();
                let lb_ref: Vec<&str> = lb.iter().map(String::as_str).collect();
                for o1 in Orientation::all(m) {
                    let a = self.algebra_tensor_labeled(&o1, &la_ref);
                    for o2 in Orientation::all(n) {
                        if o2[0] == o1[m - 1] {
                            continue;
                        }
                        let b = self.algebra_tensor_labeled(&o2, &lb_ref);
                        let fused = tensordot(&a, &b, &[(la_ref[m - 1], lb_ref[0])]).unwrap();
                        let mut o = o1[..m - 1].to_vec();
                        o.extend_from_slice(&o2[1..]);
                        let labels: Vec<&str> = la_ref[..m - 1].iter().chain(&lb_ref[1..]).copied().collect();
                        let want = self.algebra_tensor_labeled(&o, &labels);
                        fus = fus.max(fused.max_abs_diff(&want).unwrap());
                    }
                }
            }
        }
        push("fusion", fus);

        let mut comm: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    comm = comm.max((mu[(a * d + b) * d + c] - mu[(b * d + a) * d + c]).abs());
                }
            }
        }
        let (lambda, loop_res) = self.loop_factor();
        AxiomReport {
            algebra: self.0.name.clone(),
            max_n,
            tolerance: tol * scale,
            checks,
            commutative: comm <= tol * scale,
            commutativity_residual: comm,
            loop_factor: (loop_res <= 1e-9 * lambda.abs().max(1.0)).then_some(lambda),
        }
    }

    /// Build a custom algebra from raw structure data (row-major over the
    /// basis; product indexed `(a, b, c)` for `a·b → c`). The axioms are
    /// verified up to 3 indices; the result is loop-normalized when the
    /// algebra admits it.
    pub fn from_structure(
        unit: Vec<f64>,
        involution: Vec<f64>,
        product: Vec<f64>,
        basis: &Basis,
    ) -> AlgebraResult<StarAlgebra> {
        Self::from_structure_checked(unit, involution, product, basis, 3, 1e-10)
    }

    pub fn from_structure_checked(
        unit: Vec<f64>,
        involution: Vec<f64>,
        product: Vec<f64>,
        basis: &Basis,
        max_n: usize,
        tol: f64,
    ) -> AlgebraResult<StarAlgebra> {
        let d = basis.len();
        for (name, v, want) in
            [("unit", &unit, d), ("involution", &involution, d * d), ("product", &product, d * d * d)]
        {
            if v.len() != want {
                return Err(AlgebraError::ArityMismatch { name, expected: want, got: v.len() });
            }
        }
        let raw = StarAlgebra::build(Parts {
            name: format!("custom({})", basis.name()),
            kind: AlgebraKind::Custom,
            basis: basis.clone(),
            unit,
            involution,
            product,
            alpha: 1.0,
            components: Vec::new(),
            matrix_set: None,
        });
        let report = raw.verify_axioms_with(max_n, tol);
        if !report.passed() {
            return Err(AlgebraError::AxiomViolation(Box::new(report)));
        }
        Ok(raw.loop_normalized().unwrap_or(raw))
    }

    /// Left-regular representation matrices `L_x[a][b] = product[x][b][a]`,
    /// with compact forms for matrix, delta, sum and product algebras.
    pub(crate) fn representation(&self) -> Representation {
        let d = self.dim();
        match self.0.kind {
            AlgebraKind::Matrix => {
                let m = self.0.matrix_set.as_ref().map(Basis::len).unwrap();
                Representation { n: m, mats: (0..d).map(|k| vec![(k / m, k % m, 1.0)]).collect() }
            }
            AlgebraKind::Delta => Representation { n: d, mats: (0..d).map(|k| vec![(k, k, 1.0)]).collect() },
            AlgebraKind::TensorProduct => {
                let (r1, r2) = (self.0.components[0].representation(), self.0.components[1].representation());
                let mut mats = Vec::with_capacity(d);
                for m1 in &r1.mats {
                    for m2 in &r2.mats {
                        let mut e = Vec::with_capacity(m1.len() * m2.len());
                        for &(a1, b1, v1) in m1 {
                            for &(a2, b2, v2) in m2 {
                                e.push((a1 * r2.n + a2, b1 * r2.n + b2, v1 * v2));
                            }
                        }
                        mats.push(e);
                    }
                }
                Representation { n: r1.n * r2.n, mats }
            }
            AlgebraKind::DirectSum => {
                let (r1, r2) = (self.0.components[0].representation(), self.0.components[1].representation());
                let mut mats = r1.mats.clone();
                mats.extend(r2.mats.iter().map(|m| m.iter().map(|&(a, b, v)| (a + r1.n, b + r1.n, v)).collect()));
                Representation { n: r1.n + r2.n, mats }
            }
            _ => {
                let mu = &self.0.product;
                let mats = (0..d)
                    .map(|x| {
                        let mut e = Vec::new();
                        for b in 0..d {
                            for a in 0..d {
                                let v = mu[(x * d + b) * d + a];
                                if v != 0.0 {
                                    e.push((a, b, v));
                                }
                            }
                        }
                        e
                    })
                    .collect();
                Representation { n: d, mats }
            }
        }
    }
}

/// Sparse matrices `L_x` (entries `(row, col, value)`) of a faithful
/// *-representation on `R^n`.
#[derive(Clone, Debug)]
pub(crate) struct Representation {
    pub n: usize,
    pub mats: Vec<Vec<(usize, usize, f64)>>,
}

impl Representation {
    /// Gram matrix `Tr(L_xᵀ L_y)`.
    pub fn gram(&self) -> DMatrix<f64> {
        let d = self.mats.len();
        let mut dense = vec![HashMap::new(); d];
        for (x, m) in self.mats.iter().enumerate() {
            for &(a, b, v) in m {
                *dense[x].entry((a, b)).or_insert(0.0) += v;
            }
        }
        DMatrix::from_fn(d, d, |x, y| dense[x].iter().map(|(k, v)| v * dense[y].get(k).copied().unwrap_or(0.0)).sum())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomCheck {
    pub name: &'static str,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub algebra: String,
    pub max_n: usize,
    pub tolerance: f64,
    pub checks: Vec<AxiomCheck>,
    /// Informational: invariance under arbitrary index permutations.
    pub commutative: bool,
    pub commutativity_residual: f64,
    /// `λ` with `Σ_x x·x* = λ·1`, when such a scalar exists.
    pub loop_factor: Option<f64>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&AxiomCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn failure_summary(&self) -> String {
        self.failures().iter().map(|c| format!("{} ({:e})", c.name, c.residual)).collect::<Vec<_>>().join(", ")
    }
}

pub fn trivial_algebra() -> StarAlgebra {
    StarAlgebra::build(Parts {
        name: "trivial".into(),
        kind: AlgebraKind::Trivial,
        basis: Basis::new("1", vec!["1".into()]).unwrap(),
        unit: vec![1.0],
        involution: vec![1.0],
        product: vec![1.0],
        alpha: 1.0,
        components: Vec::new(),
        matrix_set: None,
    })
}

/// Pointwise functions on `basis`.
pub fn delta_algebra(basis: &Basis) -> StarAlgebra {
    let d = basis.len();
    let mut product = vec![0.0; d * d * d];
    for a in 0..d {
        product[(a * d + a) * d + a] = 1.0;
    }
    StarAlgebra::build(Parts {
        name: format!("delta({})", basis.name()),
        kind: AlgebraKind::Delta,
        basis: basis.clone(),
        unit: vec![1.0; d],
        involution: identity_data(d),
        product,
        alpha: 1.0,
        components: Vec::new(),
        matrix_set: None,
    })
}

/// Real matrices indexed by `set × set`; basis element `(a, b)` is `E_ab`.
pub fn matrix_algebra(set: &Basis) -> StarAlgebra {
    let m = set.len();
    let d = m * m;
    let unit = (0..d).map(|k| if k / m == k % m { 1.0 } else { 0.0 }).collect();
    let mut involution = vec![0.0; d * d];
    let mut product = vec![0.0; d * d * d];
    for a in 0..m {
        for b in 0..m {
            involution[(a * m + b) * d + b * m + a] = 1.0;
            for c in 0..m {
                product[((a * m + b) * d + b * m + c) * d + a * m + c] = 1.0;
            }
        }
    }
    StarAlgebra::build(Parts {
        name: format!("matrix({})", set.name()),
        kind: AlgebraKind::Matrix,
        basis: Basis::product(&[set, set]),
        unit,
        involution,
        product,
        alpha: 1.0,
        components: Vec::new(),
        matrix_set: Some(set.clone()),
    })
}

pub fn complex_basis() -> Basis {
    Basis::new("C", vec!["1".into(), "i".into()]).unwrap()
}

pub fn complex_algebra() -> StarAlgebra {
    let mut product = vec![0.0; 8];
    let mut set = |a: usize, b: usize, c: usize, v: f64| product[(a * 2 + b) * 2 + c] = v;
    set(0, 0, 0, 1.0);
    set(0, 1, 1, 1.0);
    set(1, 0, 1, 1.0);
    set(1, 1, 0, -1.0);
    StarAlgebra::build(Parts {
        name: "complex".into(),
        kind: AlgebraKind::Complex,
        basis: complex_basis(),
        unit: vec![1.0, 0.0],
        involution: vec![1.0, 0.0, 0.0, -1.0],
        product,
        alpha: 1.0,
        components: Vec::new(),
        matrix_set: None,
    })
}

/// Hamilton's quaternions over the basis `1, i, j, k`.
pub fn quaternion_algebra() -> StarAlgebra {
    // (a, b) -> (c, sign) for a·b = sign·c
    const TABLE: [[(usize, f64); 4]; 4] = [
        [(0, 1.0), (1, 1.0), (2, 1.0), (3, 1.0)],
        [(1, 1.0), (0, -1.0), (3, 1.0), (2, -1.0)],
        [(2, 1.0), (3, -1.0), (0, -1.0), (1, 1.0)],
        [(3, 1.0), (2, 1.0), (1, -1.0), (0, -1.0)],
    ];
    let mut product = vec![0.0; 64];
    for (a, row) in TABLE.iter().enumerate() {
        for (b, &(c, s)) in row.iter().enumerate() {
            product[(a * 4 + b) * 4 + c] = s;
        }
    }
    let mut involution = vec![0.0; 16];
    for (k, s) in [1.0, -1.0, -1.0, -1.0].into_iter().enumerate() {
        involution[k * 4 + k] = s;
    }
    StarAlgebra::build(Parts {
        name: "quaternion".into(),
        kind: AlgebraKind::Quaternion,
        basis: Basis::new("H", ["1", "i", "j", "k"].map(String::from).to_vec()).unwrap(),
        unit: vec![1.0, 0.0, 0.0, 0.0],
        involution,
        product,
        alpha: 1.0,
        components: Vec::new(),
        matrix_set: None,
    })
}

pub fn algebra_direct_sum(a: &StarAlgebra, b: &StarAlgebra) -> AlgebraResult<StarAlgebra> {
    let (da, db) = (a.dim(), b.dim());
    let d = da + db;
    let basis = Basis::disjoint_union(a.basis(), b.basis())?;
    let mut unit = a.0.unit.clone();
    unit.extend_from_slice(&b.0.unit);
    let mut involution = vec![0.0; d * d];
    let mut product = vec![0.0; d * d * d];
    for (alg, off, n) in [(a, 0, da), (b, da, db)] {
        for x in 0..n {
            for y in 0..n {
                involution[(x + off) * d + y + off] = alg.0.involution[x * n + y];
                for z in 0..n {
                    product[((x + off) * d + y + off) * d + z + off] = alg.0.product[(x * n + y) * n + z];
                }
            }
        }
    }
    Ok(StarAlgebra::build(Parts {
        name: format!("({}+{})", a.name(), b.name()),
        kind: AlgebraKind::DirectSum,
        basis,
        unit,
        involution,
        product,
        alpha: 1.0,
        components: vec![a.clone(), b.clone()],
        matrix_set: None,
    }))
}

pub fn algebra_tensor_product(a: &StarAlgebra, b: &StarAlgebra) -> StarAlgebra {
    let (da, db) = (a.dim(), b.dim());
    let d = da * db;
    let basis = Basis::product(&[a.basis(), b.basis()]);
    let unit = a.0.unit.iter().flat_map(|x| b.0.unit.iter().map(move |y| x * y)).collect();
    let involution = kron(&a.0.involution, da, da, &b.0.involution, db, db);
    let mut product = vec![0.0; d * d * d];
    for x1 in 0..da {
        for y1 in 0..da {
            for z1 in 0..da {
                let v1 = a.0.product[(x1 * da + y1) * da + z1];
                if v1 == 0.0 {
                    continue;
                }
                for x2 in 0..db {
                    for y2 in 0..db {
                        for z2 in 0..db {
                            let v2 = b.0.product[(x2 * db + y2) * db + z2];
                            if v2 != 0.0 {
                                product[((x1 * db + x2) * d + y1 * db + y2) * d + z1 * db + z2] = v1 * v2;
                            }
                        }
                    }
                }
            }
        }
    }
    StarAlgebra::build(Parts {
        name: format!("({}*{})", a.name(), b.name()),
        kind: AlgebraKind::TensorProduct,
        basis,
        unit,
        involution,
        product,
        alpha: 1.0,
        components: vec![a.clone(), b.clone()],
        matrix_set: None,
    })
}

/// Hilbert-space basis `{0, .., d-1}` shared by all quantum constructors.
pub fn hilbert_basis(d: usize) -> Basis {
    Basis::range(format!("H{d}"), d)
}

/// Matrix algebra on `C^d` tensored with the complex numbers.
pub fn quantum_algebra(d: usize) -> StarAlgebra {
    algebra_tensor_product(&matrix_algebra(&hilbert_basis(d)), &complex_algebra())
}

/// Isometric *-homomorphism of a (loop-normalized) algebra into a matrix algebra.
#[derive(Clone, Debug)]
pub struct SubAlgebraEmbedding {
    pub source: StarAlgebra,
    pub target: StarAlgebra,
    /// Indices `src` (source basis) and `tgt` (target basis).
    pub iso: Tensor,
}

#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingReport {
    pub isometry_residual: f64,
    pub product_residual: f64,
    pub unit_residual: f64,
    pub source_scalar: f64,
    pub target_scalar: f64,
}

impl SubAlgebraEmbedding {
    pub fn check(&self) -> EmbeddingReport {
        let (s, t) = (&self.source, &self.target);
        let (ds, dt) = (s.dim(), t.dim());
        let r = self.iso.data();
        let img = |v: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; dt];
            for (x, vx) in v.iter().enumerate() {
                for (o, rv) in out.iter_mut().zip(&r[x * dt..(x + 1) * dt]) {
                    *o += vx * rv;
                }
            }
            out
        };
        let mut iso_res: f64 = 0.0;
        for x in 0..ds {
            for y in 0..ds {
                let dot: f64 = (0..dt).map(|k| r[x * dt + k] * r[y * dt + k]).sum();
                iso_res = iso_res.max((dot - if x == y { 1.0 } else { 0.0 }).abs());
            }
        }
        let mut prod_res: f64 = 0.0;
        for x in 0..ds {
            for y in 0..ds {
                let (ex, ey) = (basis_vector(ds, x), basis_vector(ds, y));
                let lhs = t.multiply(&img(&ex), &img(&ey));
                let rhs = img(&s.multiply(&ex, &ey));
                prod_res = prod_res.max(max_diff(&lhs, &rhs));
            }
        }
        let unit_res = max_diff(&img(s.unit_data()), t.unit_data());
        EmbeddingReport {
            isometry_residual: iso_res,
            product_residual: prod_res,
            unit_residual: unit_res,
            source_scalar: s.algebra_data(&[])[0],
            target_scalar: t.algebra_data(&[])[0],
        }
    }
}

/// Embed `a` into the matrix algebra over its own basis via the left-regular
/// representation of its loop-normalized member.
pub fn matrix_embedding(a: &StarAlgebra) -> AlgebraResult<SubAlgebraEmbedding> {
    let source = a.loop_normalized()?;
    let d = source.dim();
    let target = matrix_algebra(source.basis());
    let mu = source.product_data();
    let mut iso = vec![0.0; d * d * d];
    for x in 0..d {
        for p in 0..d {
            for q in 0..d {
                iso[x * d * d + p * d + q] = mu[(x * d + q) * d + p];
            }
        }
    }
    let iso = Tensor::new(vec![Index::new("src", source.basis()), Index::new("tgt", target.basis())], iso)?;
    let emb = SubAlgebraEmbedding { source, target, iso };
    let res = emb.check().isometry_residual;
    if res > 1e-10 {
        return Err(AlgebraError::NormalizationIncompatible { algebra: a.name().into(), residual: res });
    }
    Ok(emb)
}

/// Isometry (`src`, `tgt`) from `a` into a matrix algebra used for emulation.
/// Matrix algebras map to themselves; sums and products are embedded
/// componentwise so that mixed loop factors are allowed.
pub(crate) fn emulation_isometry(a: &StarAlgebra) -> AlgebraResult<(Tensor, StarAlgebra)> {
    match a.kind() {
        AlgebraKind::Matrix => {
            let iso = crate::tensor::identity(a.basis(), "src", "tgt")?;
            Ok((iso, a.clone()))
        }
        AlgebraKind::TensorProduct | AlgebraKind::DirectSum => {
            let (i1, t1) = emulation_isometry(&a.components()[0])?;
            let (i2, t2) = emulation_isometry(&a.components()[1])?;
            let (s1, s2) = (t1.matrix_set().unwrap().clone(), t2.matrix_set().unwrap().clone());
            let (m1, m2) = (s1.len(), s2.len());
            let (d1, d2) = (a.components()[0].dim(), a.components()[1].dim());
            let (r1, r2) = (i1.data(), i2.data());
            let product = a.kind() == AlgebraKind::TensorProduct;
            let set = if product { Basis::product(&[&s1, &s2]) } else { Basis::disjoint_union(&s1, &s2)? };
            let m = set.len();
            let target = matrix_algebra(&set);
            let mut iso = vec![0.0; a.dim() * m * m];
            if product {
                for x1 in 0..d1 {
                    for x2 in 0..d2 {
                        let row = (x1 * d2 + x2) * m * m;
                        for (p1, q1) in (0..m1).flat_map(|p| (0..m1).map(move |q| (p, q))) {
                            let v1 = r1[x1 * m1 * m1 + p1 * m1 + q1];
                            if v1 == 0.0 {
                                continue;
                            }
                            for (p2, q2) in (0..m2).flat_map(|p| (0..m2).map(move |q| (p, q))) {
                                let v2 = r2[x2 * m2 * m2 + p2 * m2 + q2];
                                iso[row + (p1 * m2 + p2) * m + q1 * m2 + q2] = v1 * v2;
                            }
                        }
                    }
                }
            } else {
                for x in 0..d1 {
                    for (p, q) in (0..m1).flat_map(|p| (0..m1).map(move |q| (p, q))) {
                        iso[x * m * m + p * m + q] = r1[x * m1 * m1 + p * m1 + q];
                    }
                }
                for x in 0..d2 {
                    for (p, q) in (0..m2).flat_map(|p| (0..m2).map(move |q| (p, q))) {
                        iso[(d1 + x) * m * m + (m1 + p) * m + m1 + q] = r2[x * m2 * m2 + p * m2 + q];
                    }
                }
            }
            let iso = Tensor::new(vec![Index::new("src", a.basis()), Index::new("tgt", target.basis())], iso)?;
            Ok((iso, target))
        }
        _ => {
            let e = matrix_embedding(a)?;
            let iso = Tensor::new(
                vec![Index::new("src", a.basis()), Index::new("tgt", e.target.basis())],
                e.iso.data().to_vec(),
            )?;
            Ok((iso, e.target))
        }
    }
}

pub(crate) fn identity_data(d: usize) -> Vec<f64> {
    (0..d * d).map(|k| if k / d == k % d { 1.0 } else { 0.0 }).collect()
}

fn basis_vector(d: usize, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[k] = 1.0;
    e
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// `out[y] = Σ_x v[x] m[x][y]`.
fn mat_vec_t(m: &[f64], v: &[f64], d: usize) -> Vec<f64> {
    (0..d).map(|y| (0..d).map(|x| v[x] * m[x * d + y]).sum()).collect()
}

fn mat_mul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            if aik != 0.0 {
                for j in 0..d {
                    out[i * d + j] += aik * b[k * d + j];
                }
            }
        }
    }
    out
}

fn kron(a: &[f64], ra: usize, ca: usize, b: &[f64], rb: usize, cb: usize) -> Vec<f64> {
    let (r, c) = (ra * rb, ca * cb);
    let mut out = vec![0.0; r * c];
    for i1 in 0..ra {
        for j1 in 0..ca {
            let v = a[i1 * ca + j1];
            if v == 0.0 {
                continue;
            }
            for i2 in 0..rb {
                for j2 in 0..cb {
                    out[(i1 * rb + i2) * c + j1 * cb + j2] = v * b[i2 * cb + j2];
                }
            }
        }
    }
    out
}

/// `out[.., y, ..] = Σ_x data[.., x, ..] m[x][y]` on axis `pos` of an
/// `n`-index array with all dimensions `d`.
fn apply_on_axis(data: &[f64], n: usize, d: usize, pos: usize, m: &[f64]) -> Vec<f64> {
    let inner = d.pow((n - pos - 1) as u32);
    let outer = d.pow(pos as u32);
    let mut out = vec![0.0; data.len()];
    for o in 0..outer {
        for x in 0..d {
            let src = &data[(o * d + x) * inner..(o * d + x + 1) * inner];
            for y in 0..d {
                let w = m[x * d + y];
                if w == 0.0 {
                    continue;
                }
                let dst = &mut out[(o * d + y) * inner..(o * d + y + 1) * inner];
                for (a, b) in dst.iter_mut().zip(src) {
                    *a += w * b;
                }
            }
        }
    }
    out
}
