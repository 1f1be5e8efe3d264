//! The `startensor/1` model file: schema and construction.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use startensor::algebra::{AlgebraError, AxiomReport};
use startensor::classical::{boltzmann, copy_tensor, ising_bond, prob_dist, prob_dist_on, stochastic_matrix};
use startensor::network::TensorNetwork;
use startensor::quantum::{
    channel_from_kraus, channel_from_unitary, controlled_measurement, density_matrix, ensemble, instrument,
    multipartite_state, outcome_basis, povm, trace_tensor,
};
use startensor::{
    assemble_from_root, complex_algebra, delta_algebra, matrix_algebra, quantum_algebra, quaternion_algebra,
    trivial_algebra, Basis, Direction, Index, StarAlgebra, StarTensor, Tensor,
};

pub const FORMAT: &str = "startensor/1";

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bases: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub algebras: BTreeMap<String, AlgebraDecl>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tensors: BTreeMap<String, TensorDecl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkDecl>,
    #[serde(default)]
    pub output: OutputMode,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub normalize: bool,
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, Default, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum OutputMode {
    #[default]
    Distribution,
    StochasticMap,
    Scalar,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgebraDecl {
    Builtin(BuiltinDecl),
    Structure(StructureDecl),
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BuiltinDecl {
    pub kind: BuiltinKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BuiltinKind {
    Trivial,
    Delta,
    Matrix,
    Complex,
    Quaternion,
    Quantum,
}

/// Flat row-major structure data: `unit[a]`, `involution[a][b]` (row `a`
/// is the image of `e_a`), `product[a][b][c]` for `e_a e_b -> e_c`.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StructureDecl {
    pub basis: Vec<String>,
    pub unit: Vec<f64>,
    pub involution: Vec<f64>,
    pub product: Vec<f64>,
}

/// Complex matrix as paired real arrays.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CMatrixDecl {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AlgebraIndex {
    pub label: String,
    pub algebra: String,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BasisIndex {
    pub label: String,
    pub basis: String,
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Dir {
    In,
    Out,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TensorDecl {
    Dense {
        indices: Vec<AlgebraIndex>,
        data: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        directions: Option<Vec<Dir>>,
    },
    /// Positive tensor doubled from a root with an extra internal index of
    /// dimension `rank` (last in `data`).
    FromRoot {
        indices: Vec<AlgebraIndex>,
        rank: usize,
        data: Vec<f64>,
    },
    ProbDist {
        p: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        basis: Option<String>,
    },
    /// `matrix[out][in]`.
    StochasticMatrix {
        basis: String,
        matrix: Vec<Vec<f64>>,
    },
    Copy {
        basis: String,
        n: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        input: Option<usize>,
    },
    Boltzmann {
        indices: Vec<BasisIndex>,
        energies: Vec<f64>,
        beta: f64,
    },
    IsingBond {
        basis: String,
        coupling: f64,
        beta: f64,
    },
    DensityMatrix {
        matrix: CMatrixDecl,
    },
    MultipartiteState {
        matrix: CMatrixDecl,
        dims: Vec<usize>,
    },
    ChannelFromUnitary {
        matrix: CMatrixDecl,
    },
    ChannelFromKraus {
        kraus: Vec<CMatrixDecl>,
    },
    Povm {
        elements: Vec<CMatrixDecl>,
    },
    Instrument {
        maps: Vec<Vec<CMatrixDecl>>,
    },
    ControlledMeasurement {
        povms: Vec<Vec<CMatrixDecl>>,
    },
    Ensemble {
        states: Vec<CMatrixDecl>,
    },
    Trace {
        d: usize,
    },
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NodeDecl {
    pub name: String,
    pub tensor: String,
}

/// Endpoints are written `node.label`.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NetworkDecl {
    pub nodes: Vec<NodeDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub opens: BTreeMap<String, String>,
}

/// A reference or schema problem: the file cannot be interpreted.
#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("cannot read `{0}`: {1}")]
    Io(String, std::io::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format `{0}`, expected `{FORMAT}`")]
    Format(String),
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("{0}")]
    Invalid(String),
}

pub fn parse(text: &str) -> Result<ModelFile, ParseError> {
    let file: ModelFile = serde_json::from_str(text)?;
    if file.format != FORMAT {
        return Err(ParseError::Format(file.format));
    }
    Ok(file)
}

pub fn read(path: &std::path::Path) -> Result<ModelFile, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|e| ParseError::Io(path.display().to_string(), e))?;
    parse(&text)
}

/// Why a declared object could not be built from well-formed input.
#[derive(Debug, Clone, Serialize)]
pub struct BuildFailure {
    pub name: String,
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axioms: Option<AxiomReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<EigenWitness>,
}

/// Smallest eigenvalue of a matrix that should be positive semidefinite.
#[derive(Debug, Clone, Serialize)]
pub struct EigenWitness {
    pub element: usize,
    pub eigenvalue: f64,
    /// `(re, im)` pairs.
    pub eigenvector: Vec<[f64; 2]>,
}

pub struct Model {
    pub file: ModelFile,
    pub algebras: BTreeMap<String, StarAlgebra>,
    pub tensors: BTreeMap<String, StarTensor>,
    pub network: Option<TensorNetwork>,
    pub algebra_failures: Vec<BuildFailure>,
    pub tensor_failures: Vec<BuildFailure>,
}

pub struct BuildOptions {
    pub max_n: usize,
    pub tol: f64,
}

impl Model {
    pub fn build(file: ModelFile, opts: &BuildOptions) -> Result<Model, ParseError> {
        let mut m = Model {
            file,
            algebras: BTreeMap::new(),
            tensors: BTreeMap::new(),
            network: None,
            algebra_failures: Vec::new(),
            tensor_failures: Vec::new(),
        };
        let file = m.file.clone();
        for (name, decl) in &file.algebras {
            match m.algebra(name, decl, opts)? {
                Ok(a) => {
                    m.algebras.insert(name.clone(), a);
                }
                Err(f) => m.algebra_failures.push(f),
            }
        }
        for (name, decl) in &file.tensors {
            match m.tensor(decl)? {
                Ok(t) => {
                    m.tensors.insert(name.clone(), t);
                }
                Err((error, witness)) => {
                    m.tensor_failures.push(BuildFailure { name: name.clone(), error, axioms: None, witness })
                }
            }
        }
        if let Some(net) = &file.network {
            if m.tensor_failures.is_empty() && m.algebra_failures.is_empty() {
                m.network = Some(m.network(net)?);
            } else {
                for n in &net.nodes {
                    if !file.tensors.contains_key(&n.tensor) {
                        return Err(ParseError::Unknown { kind: "tensor", name: n.tensor.clone() });
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn failed(&self) -> bool {
        !self.algebra_failures.is_empty() || !self.tensor_failures.is_empty()
    }

    fn basis(&self, name: &str) -> Result<Basis, ParseError> {
        if let Some(elements) = self.file.bases.get(name) {
            return Basis::new(name, elements.clone()).map_err(|e| ParseError::Invalid(format!("basis `{name}`: {e}")));
        }
        match name.strip_prefix('S').and_then(|n| n.parse::<usize>().ok()) {
            Some(n) if n > 0 => Ok(outcome_basis(n)),
            _ => Err(ParseError::Unknown { kind: "basis", name: name.into() }),
        }
    }

    fn algebra(
        &self,
        name: &str,
        decl: &AlgebraDecl,
        opts: &BuildOptions,
    ) -> Result<Result<StarAlgebra, BuildFailure>, ParseError> {
        Ok(match decl {
            AlgebraDecl::Builtin(b) => Ok(match b.kind {
                BuiltinKind::Trivial => trivial_algebra(),
                BuiltinKind::Delta => delta_algebra(&self.basis(need_basis(name, b)?)?),
                BuiltinKind::Matrix => matrix_algebra(&self.basis(need_basis(name, b)?)?),
                BuiltinKind::Complex => complex_algebra(),
                BuiltinKind::Quaternion => quaternion_algebra(),
                BuiltinKind::Quantum => {
                    quantum_algebra(b.d.ok_or_else(|| ParseError::Invalid(format!("algebra `{name}` needs `d`")))?)
                }
            }),
            AlgebraDecl::Structure(s) => {
                let basis = Basis::new(name, s.basis.clone())
                    .map_err(|e| ParseError::Invalid(format!("algebra `{name}`: {e}")))?;
                match StarAlgebra::from_structure_checked(
                    s.unit.clone(),
                    s.involution.clone(),
                    s.product.clone(),
                    &basis,
                    opts.max_n,
                    opts.tol,
                ) {
                    Ok(a) => Ok(a),
                    Err(AlgebraError::AxiomViolation(r)) => Err(BuildFailure {
                        name: name.into(),
                        error: format!("axioms violated: {}", r.failure_summary()),
                        axioms: Some(*r),
                        witness: None,
                    }),
                    Err(e) => return Err(ParseError::Invalid(format!("algebra `{name}`: {e}"))),
                }
            }
        })
    }

    fn lookup_algebra(&self, name: &str) -> Result<Result<StarAlgebra, String>, ParseError> {
        if let Some(a) = self.algebras.get(name) {
            return Ok(Ok(a.clone()));
        }
        if self.file.algebras.contains_key(name) {
            return Ok(Err(format!("algebra `{name}` is unavailable")));
        }
        Err(ParseError::Unknown { kind: "algebra", name: name.into() })
    }

    #[allow(clippy::type_complexity)]
    fn tensor(&self, decl: &TensorDecl) -> Result<Result<StarTensor, (String, Option<EigenWitness>)>, ParseError> {
        let lib = |r: Result<StarTensor, String>| r.map_err(|e| (e, None));
        let s = |e: &dyn std::fmt::Display| e.to_string();
        Ok(match decl {
            TensorDecl::Dense { indices, data, directions } => {
                let (idx, algebras) = match self.algebra_indices(indices)? {
                    Ok(v) => v,
                    Err(e) => return Ok(Err((e, None))),
                };
                let dirs = directions.as_ref().map(|d| d.iter().map(|x| dir(*x)).collect());
                lib(Tensor::new(idx, data.clone())
                    .map_err(|e| s(&e))
                    .and_then(|t| StarTensor::new(t, algebras, dirs).map_err(|e| s(&e))))
            }
            TensorDecl::FromRoot { indices, rank, data } => {
                let (mut idx, algebras) = match self.algebra_indices(indices)? {
                    Ok(v) => v,
                    Err(e) => return Ok(Err((e, None))),
                };
                if *rank == 0 {
                    return Err(ParseError::Invalid("root rank must be positive".into()));
                }
                idx.push(Index::new("__root", &Basis::range("R", *rank)));
                lib(Tensor::new(idx, data.clone())
                    .map_err(|e| s(&e))
                    .and_then(|t| assemble_from_root(&t, "__root", &algebras).map_err(|e| s(&e))))
            }
            TensorDecl::ProbDist { p, basis } => lib(match basis {
                Some(b) => prob_dist_on(&self.basis(b)?, p),
                None => prob_dist(p),
            }
            .map_err(|e| s(&e))),
            TensorDecl::StochasticMatrix { basis, matrix } => {
                lib(stochastic_matrix(&self.basis(basis)?, matrix).map_err(|e| s(&e)))
            }
            TensorDecl::Copy { basis, n, input } => {
                lib(copy_tensor(&self.basis(basis)?, *n, *input).map_err(|e| s(&e)))
            }
            TensorDecl::Boltzmann { indices, energies, beta } => {
                let idx = indices.iter().map(|i| Ok(Index::new(&i.label, &self.basis(&i.basis)?))).collect::<Result<
                    Vec<_>,
                    ParseError,
                >>(
                )?;
                lib(Tensor::new(idx, energies.clone())
                    .map_err(|e| s(&e))
                    .and_then(|t| boltzmann(&t, *beta).map(|w| w.tensor).map_err(|e| s(&e))))
            }
            TensorDecl::IsingBond { basis, coupling, beta } => lib(ising_bond(&self.basis(basis)?, *coupling)
                .and_then(|e| boltzmann(&e, *beta))
                .map(|w| w.tensor)
                .map_err(|e| s(&e))),
            TensorDecl::DensityMatrix { matrix } => {
                let m = cmatrix(matrix)?;
                checked(std::slice::from_ref(&m), || density_matrix(&m))
            }
            TensorDecl::MultipartiteState { matrix, dims } => {
                let m = cmatrix(matrix)?;
                checked(std::slice::from_ref(&m), || multipartite_state(&m, dims))
            }
            TensorDecl::ChannelFromUnitary { matrix } => {
                lib(channel_from_unitary(&cmatrix(matrix)?).map_err(|e| s(&e)))
            }
            TensorDecl::ChannelFromKraus { kraus } => lib(channel_from_kraus(&cmatrices(kraus)?).map_err(|e| s(&e))),
            TensorDecl::Povm { elements } => {
                let ms = cmatrices(elements)?;
                checked(&ms, || povm(&ms))
            }
            TensorDecl::Instrument { maps } => {
                let ms = maps.iter().map(|k| cmatrices(k)).collect::<Result<Vec<_>, _>>()?;
                lib(instrument(&ms).map_err(|e| s(&e)))
            }
            TensorDecl::ControlledMeasurement { povms } => {
                let ms = povms.iter().map(|k| cmatrices(k)).collect::<Result<Vec<_>, _>>()?;
                let flat: Vec<DMatrix<Complex64>> = ms.iter().flatten().cloned().collect();
                checked(&flat, || controlled_measurement(&ms))
            }
            TensorDecl::Ensemble { states } => {
                let ms = cmatrices(states)?;
                checked(&ms, || ensemble(&ms))
            }
            TensorDecl::Trace { d } => lib(trace_tensor(*d).map_err(|e| s(&e))),
        })
    }

    #[allow(clippy::type_complexity)]
    fn algebra_indices(
        &self,
        indices: &[AlgebraIndex],
    ) -> Result<Result<(Vec<Index>, Vec<StarAlgebra>), String>, ParseError> {
        let mut idx = Vec::new();
        let mut algebras = Vec::new();
        for i in indices {
            match self.lookup_algebra(&i.algebra)? {
                Ok(a) => {
                    idx.push(Index::new(&i.label, a.basis()));
                    algebras.push(a);
                }
                Err(e) => return Ok(Err(e)),
            }
        }
        Ok(Ok((idx, algebras)))
    }

    fn network(&self, decl: &NetworkDecl) -> Result<TensorNetwork, ParseError> {
        let mut net = TensorNetwork::new();
        let mut ids = BTreeMap::new();
        for n in &decl.nodes {
            let t = self
                .tensors
                .get(&n.tensor)
                .ok_or_else(|| ParseError::Unknown { kind: "tensor", name: n.tensor.clone() })?;
            if ids.insert(n.name.clone(), net.add_node(&n.name, t.clone())).is_some() {
                return Err(ParseError::Invalid(format!("node `{}` is declared twice", n.name)));
            }
        }
        let endpoint = |s: &str| -> Result<(usize, String), ParseError> {
            let (node, label) =
                s.split_once('.').ok_or_else(|| ParseError::Invalid(format!("endpoint `{s}` is not `node.label`")))?;
            let id = ids.get(node).ok_or_else(|| ParseError::Unknown { kind: "node", name: node.into() })?;
            Ok((*id, label.to_string()))
        };
        for [a, b] in &decl.edges {
            let ((na, la), (nb, lb)) = (endpoint(a)?, endpoint(b)?);
            net.connect(na, &la, nb, &lb);
        }
        for (name, ep) in &decl.opens {
            let (n, l) = endpoint(ep)?;
            net.open(name, n, &l);
        }
        net.set_model_output(self.file.output != OutputMode::Scalar);
        Ok(net)
    }
}

fn need_basis<'a>(name: &str, b: &'a BuiltinDecl) -> Result<&'a str, ParseError> {
    b.basis.as_deref().ok_or_else(|| ParseError::Invalid(format!("algebra `{name}` needs a basis")))
}

fn dir(d: Dir) -> Direction {
    match d {
        Dir::In => Direction::In,
        Dir::Out => Direction::Out,
    }
}

fn cmatrix(decl: &CMatrixDecl) -> Result<DMatrix<Complex64>, ParseError> {
    let rows = decl.re.len();
    let cols = decl.re.first().map(Vec::len).unwrap_or(0);
    let shape_ok = |m: &Vec<Vec<f64>>| m.len() == rows && m.iter().all(|r| r.len() == cols);
    if rows == 0 || !shape_ok(&decl.re) || decl.im.as_ref().is_some_and(|im| !shape_ok(im)) {
        return Err(ParseError::Invalid(
            "complex matrix rows must have equal lengths and match between re and im".into(),
        ));
    }
    Ok(DMatrix::from_fn(rows, cols, |r, c| {
        Complex64::new(decl.re[r][c], decl.im.as_ref().map(|im| im[r][c]).unwrap_or(0.0))
    }))
}

fn cmatrices(decls: &[CMatrixDecl]) -> Result<Vec<DMatrix<Complex64>>, ParseError> {
    decls.iter().map(cmatrix).collect()
}

/// Same rule as the library: eigenvalues down to `-1e-10` times the largest
/// magnitude (at least 1) count as nonnegative.
pub fn psd_witness(elements: &[DMatrix<Complex64>]) -> Option<EigenWitness> {
    for (k, m) in elements.iter().enumerate() {
        if !m.is_square() {
            continue;
        }
        let h = (m + m.adjoint()).scale(0.5);
        let eig = h.symmetric_eigen();
        let scale = eig.eigenvalues.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let (j, &min) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))?;
        if min < -1e-10 * scale {
            let v = eig.eigenvectors.column(j);
            return Some(EigenWitness {
                element: k,
                eigenvalue: min,
                eigenvector: v.iter().map(|z| [z.re, z.im]).collect(),
            });
        }
    }
    None
}

fn checked<E: std::fmt::Display>(
    elements: &[DMatrix<Complex64>],
    build: impl FnOnce() -> Result<StarTensor, E>,
) -> Result<StarTensor, (String, Option<EigenWitness>)> {
    build().map_err(|e| (e.to_string(), psd_witness(elements)))
}
