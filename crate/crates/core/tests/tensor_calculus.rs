use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use startensor::*;

fn random_tensor(rng: &mut ChaCha8Rng, legs: &[(&str, &Basis)]) -> Tensor {
    let indices = legs.iter().map(|(l, b)| Index::new(*l, b)).collect();
    Tensor::from_fn(indices, |_| rng.random_range(-1.0..1.0)).unwrap()
}

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let q = g.qr().q();
    (0..n * n).map(|k| q[(k / n, k % n)]).collect()
}

fn close(a: &Tensor, b: &Tensor, rel: f64) -> bool {
    let b = b.aligned_to(a).unwrap();
    a.max_abs_diff(&b).unwrap() <= rel * a.max_abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn contraction_order_is_irrelevant(seed in any::<u64>(), p in 1usize..4, q in 1usize..4, r in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (bp, bq, br) = (Basis::range("P", p), Basis::range("Q", q), Basis::range("R", r));
        let t = random_tensor(&mut rng, &[("x", &bp), ("u", &bq), ("a", &br), ("y", &bp), ("b", &br), ("v", &bq)]);
        let first = contract(&contract(&t, "x", "y").unwrap(), "u", "v").unwrap();
        let second = contract(&contract(&t, "u", "v").unwrap(), "x", "y").unwrap();
        prop_assert!(close(&first, &second, 1e-12));
    }

    #[test]
    fn tensor_product_is_associative_and_commutative(seed in any::<u64>(), p in 1usize..4, q in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (bp, bq) = (Basis::range("P", p), Basis::range("Q", q));
        let a = random_tensor(&mut rng, &[("a", &bp)]);
        let b = random_tensor(&mut rng, &[("b", &bq), ("c", &bp)]);
        let c = random_tensor(&mut rng, &[("d", &bq)]);
        let left = tensor_product(&tensor_product(&a, &b).unwrap(), &c).unwrap();
        let right = tensor_product(&a, &tensor_product(&b, &c).unwrap()).unwrap();
        prop_assert!(close(&left, &right, 1e-15));
        let swapped = tensor_product(&b, &a).unwrap();
        prop_assert!(close(&tensor_product(&a, &b).unwrap(), &swapped, 0.0));
    }

    #[test]
    fn gauge_commutes_with_contraction_and_product(seed in any::<u64>(), p in 1usize..5, q in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (bp, bq) = (Basis::range("P", p), Basis::range("Q", q));
        let mut g = GaugeMap::new();
        g.insert(&bp, &bp, random_orthogonal(&mut rng, p), Tolerance::default()).unwrap();
        g.insert(&bq, &bq, random_orthogonal(&mut rng, q), Tolerance::default()).unwrap();
        let t = random_tensor(&mut rng, &[("x", &bp), ("z", &bq), ("y", &bp)]);
        let lhs = contract(&apply_gauge(&t, &g).unwrap(), "x", "y").unwrap();
        let rhs = apply_gauge(&contract(&t, "x", "y").unwrap(), &g).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-12));

        let s = random_tensor(&mut rng, &[("w", &bq)]);
        let lhs = tensor_product(&apply_gauge(&t, &g).unwrap(), &apply_gauge(&s, &g).unwrap()).unwrap();
        let rhs = apply_gauge(&tensor_product(&t, &s).unwrap(), &g).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn direct_sum_commutes_with_two_node_evaluation(seed in any::<u64>(), p in 1usize..4, q in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (bp, bq) = (Basis::range("P", p), Basis::range("Q", q));
        let a1 = random_tensor(&mut rng, &[("x", &bp), ("y", &bp)]);
        let b1 = random_tensor(&mut rng, &[("y", &bp), ("z", &bp)]);
        let a2 = random_tensor(&mut rng, &[("x", &bq), ("y", &bq)]);
        let b2 = random_tensor(&mut rng, &[("y", &bq), ("z", &bq)]);
        let summed = tensordot(&direct_sum(&a1, &a2).unwrap(), &direct_sum(&b1, &b2).unwrap(), &[("y", "y")]).unwrap();
        let separate = direct_sum(
            &tensordot(&a1, &b1, &[("y", "y")]).unwrap(),
            &tensordot(&a2, &b2, &[("y", "y")]).unwrap(),
        ).unwrap();
        prop_assert!(close(&summed, &separate, 1e-12));

        // closed networks: the evaluation of the direct sum is the sum
        let closed = |a: &Tensor, b: &Tensor| {
            let t = tensordot(a, b, &[("y", "y")]).unwrap();
            contract(&t, "x", "z").unwrap().scalar_value().unwrap()
        };
        let whole = closed(&direct_sum(&a1, &a2).unwrap(), &direct_sum(&b1, &b2).unwrap());
        prop_assert!((whole - closed(&a1, &b1) - closed(&a2, &b2)).abs() < 1e-12);
    }

    #[test]
    fn block_then_unblock_roundtrips(seed in any::<u64>(), p in 1usize..4, q in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (bp, bq) = (Basis::range("P", p), Basis::range("Q", q));
        let t = random_tensor(&mut rng, &[("x", &bp), ("y", &bq), ("z", &bp)]);
        let b = block(&t, &["x", "y"], "xy").unwrap();
        prop_assert_eq!(b.rank(), 2);
        let back = unblock(&b, "xy", &[Index::new("x", &bp), Index::new("y", &bq)]).unwrap();
        prop_assert!(close(&t, &back, 0.0));
    }
}

#[test]
fn identity_contracts_to_dimension() {
    for d in 1..6 {
        let b = Basis::range("B", d);
        let id = identity(&b, "a", "b").unwrap();
        assert_eq!(contract(&id, "a", "b").unwrap().scalar_value(), Some(d as f64));
    }
}

#[test]
fn contraction_errors() {
    let b = Basis::range("B", 2);
    let t = Tensor::zeros(vec![Index::new("a", &b), Index::new("b", &Basis::range("C", 2))]).unwrap();
    assert!(contract(&t, "a", "a").is_err());
    assert!(matches!(contract(&t, "a", "b"), Err(TensorError::BasisMismatch(..))));
    let u = Tensor::zeros(vec![Index::new("c", &b)]).unwrap();
    assert!(matches!(tensordot(&t, &u, &[("a", "q")]), Err(TensorError::UnknownLabel(_))));
}
