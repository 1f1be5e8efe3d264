mod common;

use common::nets::{random_positive_node, Wire};
use common::positivity::*;
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use startensor::quantum::{channel_from_kraus, ensemble, povm};
use startensor::*;

#[test]
fn delta_positivity_is_entrywise() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert_eq!(delta_positivity_agreement(&mut rng, 1000), 1000);
}

#[test]
fn matrix_positivity_is_psd_of_reshape() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    assert_eq!(matrix_positivity_agreement(&mut rng, 500), 500);
}

#[test]
fn roots_reassemble_positive_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for legs in [vec![Wire::C2, Wire::C3], vec![Wire::Q2], vec![Wire::Q2, Wire::C2], vec![Wire::Q2, Wire::Q2]] {
        for _ in 0..10 {
            let named: Vec<(String, Wire)> = legs.iter().enumerate().map(|(k, w)| (format!("l{k}"), *w)).collect();
            let st = random_positive_node(&mut rng, &named);
            let cert = check_positive(&st).certificate().unwrap().clone();
            let back = assemble_from_root(&cert.root, &cert.internal_label, st.algebras()).unwrap();
            assert!(back.tensor().max_abs_diff(st.tensor()).unwrap() <= 1e-9);
        }
    }
}

fn random_legs(rng: &mut ChaCha8Rng, n: usize) -> Vec<(String, Wire)> {
    let wires = [Wire::C2, Wire::C3, Wire::Q2];
    (0..n).map(|k| (format!("l{k}"), wires[rng.random_range(0..3)])).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn products_and_contractions_stay_positive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let la = random_legs(&mut rng, 2);
        let mut lb = random_legs(&mut rng, 2);
        lb[0].1 = la[0].1;
        let a = random_positive_node(&mut rng, &la);
        let b = random_positive_node(&mut rng, &lb).relabel_many(&[("l0", "m0"), ("l1", "m1")]).unwrap();
        let prod = star_product(&a, &b).unwrap();
        prop_assert!(check_positive(&prod).is_positive());
        let contracted = star_contract(&prod, "l0", "m0").unwrap();
        prop_assert!(check_positive(&contracted).is_positive());
    }

    #[test]
    fn normalized_maps_compose(seed in any::<u64>(), d in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = channel_from_kraus(&random_kraus(&mut rng, d, 2)).unwrap();
        let m = povm(&random_povm(&mut rng, d, 3)).unwrap();
        let states: Vec<_> = (0..3).map(|_| random_density(&mut rng, d)).collect();
        let e = ensemble(&states).unwrap();
        for t in [&ch, &m, &e] {
            prop_assert!(check_normalized(t).unwrap().passed);
            prop_assert!(check_positive(t).is_positive());
        }
        let a = star_tensordot(&e, &ch, &[("out", "in")]).unwrap();
        let b = star_tensordot(&a, &m, &[("out", "in")]).unwrap();
        prop_assert!(check_normalized(&b).unwrap().passed);
        prop_assert!(check_positive(&b).is_positive());
    }
}

#[test]
fn non_psd_povm_element_is_rejected() {
    let bad = vec![
        CM::from_row_slice(2, 2, &[c(1.2, 0.), c(0., 0.), c(0., 0.), c(0.5, 0.)]),
        CM::from_row_slice(2, 2, &[c(-0.2, 0.), c(0., 0.), c(0., 0.), c(0.5, 0.)]),
    ];
    assert!(matches!(povm(&bad), Err(startensor::quantum::QuantumError::NotPSD(1))));
}
