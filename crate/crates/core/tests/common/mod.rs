//! Dense reference simulators used only by the tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

pub type CM = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_x() -> CM {
    CM::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> CM {
    CM::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> CM {
    CM::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

pub fn kron(a: &CM, b: &CM) -> CM {
    a.kronecker(b)
}

pub fn trace_distance_free(a: &CM, b: &CM) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a Taylor series;
/// deliberately independent of any eigendecomposition.
pub fn expm(a: &CM) -> CM {
    let n = a.nrows();
    let norm: f64 = a.iter().map(|z| z.norm()).sum();
    let mut s = 0;
    while norm / f64::powi(2.0, s) > 0.25 {
        s += 1;
    }
    let scaled = a.scale(1.0 / f64::powi(2.0, s));
    let mut term = CM::identity(n, n);
    let mut sum = CM::identity(n, n);
    for k in 1..30 {
        term = &term * &scaled / c(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

pub fn random_complex(rng: &mut impl Rng, r: usize, k: usize) -> CM {
    CM::from_fn(r, k, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn random_density(rng: &mut impl Rng, d: usize) -> CM {
    let g = random_complex(rng, d, d);
    let m = &g * g.adjoint();
    let t = m.trace();
    m / t
}

/// Gram-Schmidt on a random complex matrix.
pub fn random_unitary(rng: &mut impl Rng, d: usize) -> CM {
    let g = random_complex(rng, d, d);
    let mut cols: Vec<DVector<Complex64>> = Vec::new();
    for j in 0..d {
        let mut v = g.column(j).into_owned();
        for u in &cols {
            let p = u.dotc(&v);
            v -= u * p;
        }
        let n = v.norm();
        cols.push(v / c(n, 0.0));
    }
    CM::from_columns(&cols)
}

/// Random POVM `{A_i^† A_i}` normalized by `S^{-1/2}` on both sides.
pub fn random_povm(rng: &mut impl Rng, d: usize, n: usize) -> Vec<CM> {
    let raw: Vec<CM> = (0..n)
        .map(|_| {
            let a = random_complex(rng, d, d);
            a.adjoint() * a
        })
        .collect();
    let s = raw.iter().fold(CM::zeros(d, d), |acc, m| acc + m);
    let eig = nalgebra::SymmetricEigen::new(s);
    let inv_sqrt = &eig.eigenvectors
        * CM::from_diagonal(&eig.eigenvalues.map(|x| c(1.0 / x.sqrt(), 0.0)))
        * eig.eigenvectors.adjoint();
    raw.iter().map(|m| &inv_sqrt * m * &inv_sqrt).collect()
}

pub fn born(p: &CM, rho: &CM) -> f64 {
    (p * rho).trace().re
}

pub fn apply_kraus(kraus: &[CM], rho: &CM) -> CM {
    kraus.iter().fold(CM::zeros(rho.nrows(), rho.ncols()), |acc, k| acc + k * rho * k.adjoint())
}

/// Brute-force partition sum over all configurations of `n` variables with
/// `q` values each.
pub fn enumerate<F: FnMut(&[usize]) -> f64>(n: usize, q: usize, mut weight: F) -> f64 {
    let mut conf = vec![0usize; n];
    let mut total = 0.0;
    loop {
        total += weight(&conf);
        let mut k = 0;
        loop {
            if k == n {
                return total;
            }
            conf[k] += 1;
            if conf[k] < q {
                break;
            }
            conf[k] = 0;
            k += 1;
        }
    }
}

/// Projector onto the `+1` eigenspace of `cos(2t) Z + sin(2t) X` and its
/// complement, in ascending eigenvalue order.
pub fn polarizer(theta: f64) -> Vec<CM> {
    let (cs, sn) = ((2.0 * theta).cos(), (2.0 * theta).sin());
    let plus =
        CM::from_row_slice(2, 2, &[c((1.0 + cs) / 2.0, 0.), c(sn / 2.0, 0.), c(sn / 2.0, 0.), c((1.0 - cs) / 2.0, 0.)]);
    let minus = CM::identity(2, 2) - &plus;
    vec![minus, plus]
}

pub fn singlet() -> CM {
    let s = 0.5f64.sqrt();
    let psi = DVector::from_vec(vec![c(0., 0.), c(s, 0.), c(-s, 0.), c(0., 0.)]);
    &psi * psi.adjoint()
}

/// CHSH value of the dense joint distribution `p[i][j][a][b]`.
pub fn chsh_oracle(rho: &CM, alice: &[Vec<CM>], bob: &[Vec<CM>]) -> f64 {
    let e = |i: usize, j: usize| {
        let mut s = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let sign = if a == b { 1.0 } else { -1.0 };
                s += sign * born(&kron(&alice[i][a], &bob[j][b]), rho);
            }
        }
        s
    };
    (e(0, 0) + e(1, 0) + e(1, 1) - e(0, 1)).abs()
}

/// Kraus operators `A_j S^{-1/2}` with `S = Σ A_j^† A_j`.
pub fn random_kraus(rng: &mut impl Rng, d: usize, n: usize) -> Vec<CM> {
    let raw: Vec<CM> = (0..n).map(|_| random_complex(rng, d, d)).collect();
    let s = raw.iter().fold(CM::zeros(d, d), |acc, a| acc + a.adjoint() * a);
    let eig = nalgebra::SymmetricEigen::new(s);
    let inv_sqrt = &eig.eigenvectors
        * CM::from_diagonal(&eig.eigenvalues.map(|x| c(1.0 / x.sqrt(), 0.0)))
        * eig.eigenvectors.adjoint();
    raw.iter().map(|a| a * &inv_sqrt).collect()
}

pub mod nets {
    use rand::seq::IndexedRandom;
    use rand::Rng;
    use startensor::classical::{copy_tensor, prob_dist, stochastic_map};
    use startensor::network::TensorNetwork;
    use startensor::quantum::{channel_from_kraus, density_matrix, ensemble, outcome_basis, povm};
    use startensor::{
        assemble_from_root, delta_algebra, quantum_algebra, Basis, Index, StarAlgebra, StarTensor, Tensor,
    };

    /// Leg types used by the random generators.
    #[derive(Clone, Copy, Debug, PartialEq)]
    pub enum Wire {
        C2,
        C3,
        Q2,
    }

    impl Wire {
        pub fn basis(self) -> Basis {
            match self {
                Wire::C2 => outcome_basis(2),
                Wire::C3 => outcome_basis(3),
                Wire::Q2 => quantum_algebra(2).basis().clone(),
            }
        }

        pub fn algebra(self) -> StarAlgebra {
            match self {
                Wire::Q2 => quantum_algebra(2),
                w => delta_algebra(&w.basis()),
            }
        }
    }

    pub fn random_positive_node(rng: &mut impl Rng, legs: &[(String, Wire)]) -> StarTensor {
        let rank = rng.random_range(1..=3);
        let mut indices: Vec<Index> = legs.iter().map(|(l, w)| Index::new(l.as_str(), &w.basis())).collect();
        indices.push(Index::new("__root", &Basis::range("R", rank)));
        let root = Tensor::from_fn(indices, |_| rng.random_range(-1.0..1.0)).unwrap();
        let algebras: Vec<StarAlgebra> = legs.iter().map(|(_, w)| w.algebra()).collect();
        assemble_from_root(&root, "__root", &algebras).unwrap()
    }

    /// Random connected network of positive nodes over delta and quantum
    /// legs. Every node has at most four legs and at most three open legs
    /// remain overall.
    pub fn random_positive_network(rng: &mut impl Rng) -> TensorNetwork {
        let wires = [Wire::C2, Wire::C3, Wire::Q2];
        let k = rng.random_range(2..=5);
        let mut legs: Vec<Vec<(String, Wire)>> = vec![Vec::new(); k];
        let mut edges = Vec::new();
        let mut add_edge = |legs: &mut Vec<Vec<(String, Wire)>>, a: usize, b: usize, w: Wire| {
            let (la, lb) = (format!("e{}", legs[a].len()), format!("e{}", legs[b].len()));
            legs[a].push((la.clone(), w));
            legs[b].push((lb.clone(), w));
            edges.push((a, la, b, lb));
        };
        for b in 1..k {
            let a = rng.random_range(0..b);
            let w = *wires.choose(rng).unwrap();
            add_edge(&mut legs, a, b, w);
        }
        for _ in 0..rng.random_range(0..=2) {
            let (a, b) = (rng.random_range(0..k), rng.random_range(0..k));
            let w = *wires.choose(rng).unwrap();
            if a != b && legs[a].len() < 4 && legs[b].len() < 4 {
                add_edge(&mut legs, a, b, w);
            }
        }
        let mut open = 0;
        for node in legs.iter_mut() {
            if open < 3 && node.len() < 4 && rng.random_bool(0.5) {
                node.push((format!("o{}", node.len()), *wires.choose(rng).unwrap()));
                open += 1;
            }
        }
        let mut net = TensorNetwork::new();
        for (i, l) in legs.iter().enumerate() {
            let t = random_positive_node(rng, l);
            net.add_node(&format!("p{i}"), t);
        }
        for (a, la, b, lb) in &edges {
            net.connect(*a, la, *b, lb);
        }
        net
    }

    fn random_dist(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let s: f64 = raw.iter().sum();
        raw.iter().map(|v| v / s).collect()
    }

    fn classical_map(rng: &mut impl Rng, ins: &[Wire], outs: &[Wire]) -> StarTensor {
        let mut indices: Vec<Index> =
            ins.iter().enumerate().map(|(k, w)| Index::new(format!("in{k}"), &w.basis())).collect();
        indices.extend(outs.iter().enumerate().map(|(k, w)| Index::new(format!("out{k}"), &w.basis())));
        let out_size: usize = outs.iter().map(|w| w.basis().len()).product();
        let in_size: usize = ins.iter().map(|w| w.basis().len()).product();
        let cols: Vec<Vec<f64>> = (0..in_size).map(|_| random_dist(rng, out_size)).collect();
        let mut flat = 0;
        let t = Tensor::from_fn(indices, |_| {
            let v = cols[flat / out_size][flat % out_size];
            flat += 1;
            v
        })
        .unwrap();
        let out_labels: Vec<String> = (0..outs.len()).map(|k| format!("out{k}")).collect();
        let refs: Vec<&str> = out_labels.iter().map(String::as_str).collect();
        stochastic_map(t, &refs).unwrap()
    }

    fn classical_wire(rng: &mut impl Rng) -> Wire {
        *[Wire::C2, Wire::C3].choose(rng).unwrap()
    }

    fn dim(w: Wire) -> usize {
        w.basis().len()
    }

    /// Random normalized node with its (label, wire) inputs and outputs.
    fn random_normalized_node(rng: &mut impl Rng) -> (StarTensor, Vec<(String, Wire)>, Vec<(String, Wire)>) {
        let io = |l: &str, w: Wire| vec![(l.to_string(), w)];
        match rng.random_range(0..7) {
            0 => {
                let w = classical_wire(rng);
                (prob_dist(&random_dist(rng, dim(w))).unwrap(), vec![], io("out", w))
            }
            1 => (density_matrix(&super::random_density(rng, 2)).unwrap(), vec![], io("out", Wire::Q2)),
            2 => {
                let ins: Vec<Wire> = (0..rng.random_range(1..=2)).map(|_| classical_wire(rng)).collect();
                let outs: Vec<Wire> = (0..rng.random_range(1..=2)).map(|_| classical_wire(rng)).collect();
                let t = classical_map(rng, &ins, &outs);
                let i = ins.iter().enumerate().map(|(k, w)| (format!("in{k}"), *w)).collect();
                let o = outs.iter().enumerate().map(|(k, w)| (format!("out{k}"), *w)).collect();
                (t, i, o)
            }
            3 => {
                let n = rng.random_range(1..=3);
                (channel_from_kraus(&super::random_kraus(rng, 2, n)).unwrap(), io("in", Wire::Q2), io("out", Wire::Q2))
            }
            4 => {
                let w = classical_wire(rng);
                (povm(&super::random_povm(rng, 2, dim(w))).unwrap(), io("in", Wire::Q2), io("out", w))
            }
            5 => {
                let w = classical_wire(rng);
                let states: Vec<_> = (0..dim(w)).map(|_| super::random_density(rng, 2)).collect();
                (ensemble(&states).unwrap(), io("in", w), io("out", Wire::Q2))
            }
            _ => {
                let w = classical_wire(rng);
                let t = copy_tensor(&w.basis(), 3, Some(0)).unwrap();
                (t, io("c0", w), vec![("c1".into(), w), ("c2".into(), w)])
            }
        }
    }

    /// Random acyclic network of normalized nodes: each input is wired to a
    /// dangling output of an earlier node when one of the right type exists.
    pub fn random_causal_network(rng: &mut impl Rng) -> TensorNetwork {
        let mut net = TensorNetwork::new();
        let mut dangling: Vec<(usize, String, Wire)> = Vec::new();
        let k = rng.random_range(2..=6);
        for i in 0..k {
            let (t, ins, outs) = random_normalized_node(rng);
            let id = net.add_node(&format!("n{i}"), t);
            for (l, w) in ins {
                let candidates: Vec<usize> = (0..dangling.len()).filter(|&j| dangling[j].2 == w).collect();
                if let Some(&j) = candidates.choose(rng) {
                    let (src, sl, _) = dangling.remove(j);
                    net.connect(src, &sl, id, &l);
                }
            }
            dangling.extend(outs.into_iter().map(|(l, w)| (id, l, w)));
        }
        net
    }
}

pub mod positivity {
    use nalgebra::{DMatrix, SymmetricEigen};
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;
    use startensor::*;

    pub fn delta_tensor(rng: &mut ChaCha8Rng, negative: bool) -> StarTensor {
        let (b2, b3) = (Basis::range("B2", 2), Basis::range("B3", 3));
        let mut t = Tensor::from_fn(vec![Index::new("x", &b2), Index::new("y", &b3), Index::new("z", &b2)], |_| {
            rng.random_range(0.0..1.0)
        })
        .unwrap()
        .into_data();
        if negative {
            let k = rng.random_range(0..t.len());
            t[k] = -rng.random_range(1e-6..1.0);
        }
        let tensor = Tensor::new(vec![Index::new("x", &b2), Index::new("y", &b3), Index::new("z", &b2)], t).unwrap();
        StarTensor::undirected(tensor, vec![delta_algebra(&b2), delta_algebra(&b3), delta_algebra(&b2)]).unwrap()
    }

    /// Runs `n` delta cases (every other one with a negative entry) and
    /// counts agreement between `check_positive` and the entrywise test.
    pub fn delta_positivity_agreement(rng: &mut ChaCha8Rng, n: usize) -> usize {
        (0..n)
            .filter(|k| {
                let st = delta_tensor(rng, k % 2 == 1);
                let entrywise = st.tensor().data().iter().all(|&v| v >= -1e-10);
                let p = check_positive(&st);
                if let Some(Witness::NegativeEntry { value, .. }) = p.witness() {
                    assert!(*value < 0.0);
                }
                p.is_positive() == entrywise
            })
            .count()
    }

    /// Matrix-algebra tensor whose reshape pairs the first matrix label of
    /// every index into the row and the second into the column.
    pub fn from_reshape(m: &DMatrix<f64>, d: usize, n: usize) -> StarTensor {
        let alg = matrix_algebra(&Basis::range("B", d));
        let indices: Vec<Index> = (0..n).map(|k| Index::new(format!("x{k}"), alg.basis())).collect();
        let t = Tensor::from_fn(indices, |ix| {
            let (mut r, mut c) = (0, 0);
            for &x in ix {
                r = r * d + x / d;
                c = c * d + x % d;
            }
            m[(r, c)]
        })
        .unwrap();
        StarTensor::undirected(t, vec![alg; n]).unwrap()
    }

    /// Gram matrices (PSD) and symmetric matrices (mostly indefinite)
    /// reshaped onto one or two matrix-algebra indices.
    pub fn matrix_positivity_agreement(rng: &mut ChaCha8Rng, n: usize) -> usize {
        (0..n)
            .filter(|&k| {
                let (d, n): (usize, usize) = [(2, 1), (3, 1), (2, 2)][k % 3];
                let size = d.pow(n as u32);
                let g = DMatrix::from_fn(size, size, |_, _| rng.random_range(-1.0..1.0));
                let m = if k % 2 == 0 {
                    let r = rng.random_range(1..=size);
                    let g = g.columns(0, r).into_owned();
                    &g * g.transpose()
                } else {
                    (&g + g.transpose()) * 0.5
                };
                let eig = SymmetricEigen::new(m.clone());
                let scale = eig.eigenvalues.iter().fold(1.0f64, |a: f64, v: &f64| a.max(v.abs()));
                let psd = eig.eigenvalues.iter().all(|&v| v >= -1e-10 * scale);
                check_positive(&from_reshape(&m, d, n)).is_positive() == psd
            })
            .count()
    }
}

pub mod realification {
    use super::c;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;
    use startensor::*;

    pub fn random_ct(rng: &mut ChaCha8Rng, legs: &[(String, Basis)]) -> ComplexTensor {
        let indices = legs.iter().map(|(l, b)| Index::new(l.as_str(), b)).collect();
        ComplexTensor::from_fn(indices, |_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).unwrap()
    }

    pub fn random_dir(rng: &mut ChaCha8Rng) -> Direction {
        if rng.random_bool(0.5) {
            Direction::In
        } else {
            Direction::Out
        }
    }

    /// One random pair sharing a bond `a.x ~ b.y`; returns the largest
    /// discrepancy between the two orders of realify and contract.
    pub fn commutation_gap(rng: &mut ChaCha8Rng) -> f64 {
        let bases: Vec<Basis> = (1..=3).map(|d| Basis::range(format!("D{d}"), d)).collect();
        let bond = bases[rng.random_range(0..3)].clone();
        let (na, nb) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let mut la = vec![("x".to_string(), bond.clone())];
        la.extend((1..na).map(|k| (format!("a{k}"), bases[rng.random_range(0..3)].clone())));
        let mut lb = vec![("y".to_string(), bond)];
        lb.extend((1..nb).map(|k| (format!("b{k}"), bases[rng.random_range(0..3)].clone())));
        let (a, b) = (random_ct(rng, &la), random_ct(rng, &lb));

        let dx = random_dir(rng);
        let dy = match dx {
            Direction::In => Direction::Out,
            Direction::Out => Direction::In,
        };
        let rest_a: Vec<(&str, Direction)> = la[1..].iter().map(|(l, _)| (l.as_str(), random_dir(rng))).collect();
        let rest_b: Vec<(&str, Direction)> = lb[1..].iter().map(|(l, _)| (l.as_str(), random_dir(rng))).collect();

        let mut da = vec![("x", dx)];
        da.extend(rest_a.iter().copied());
        let mut db = vec![("y", dy)];
        db.extend(rest_b.iter().copied());
        let separate = tensordot(&realify(&a, &da).unwrap(), &realify(&b, &db).unwrap(), &[("x", "y")]).unwrap();

        let joined = complex_product_contract(&a, &b, &[("x", "y")]).unwrap();
        let mut dj = rest_a.clone();
        dj.extend(rest_b.iter().copied());
        let together = realify(&joined, &dj).unwrap().aligned_to(&separate).unwrap();
        separate.max_abs_diff(&together).unwrap()
    }
}
