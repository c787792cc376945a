use khbord::arcalg::ArcAlgebra;
use khbord::bordered::{box_tensor, type_a_roberts, type_d_from_complex, type_d_roberts, verify_type_a, Algebras, HnTypeA, Method};
use khbord::hncomplex::{random_complex, Side};
use khbord::planar::{enumerate_partitions, matching_to_partition, partition_to_matching};
use khbord::tangles::{direct_ckh, direct_ckh_with_order, reorder_sign, random_link};
use khbord::zlinalg::{complexes_equal_under_identification, is_unimodular, smith_normal_form, ZMatrix};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::OnceLock;

fn h(n: usize) -> &'static ArcAlgebra {
    static H: OnceLock<Vec<ArcAlgebra>> = OnceLock::new();
    &H.get_or_init(|| (1..=3).map(|n| ArcAlgebra::new(n).unwrap()).collect())[n - 1]
}

thread_local! {
    static ALGS2: &'static Algebras = Box::leak(Box::new(Algebras::new(2, false).unwrap()));
}

fn algs2() -> &'static Algebras {
    ALGS2.with(|a| *a)
}

fn mul_vec(alg: &ArcAlgebra, x: &BTreeMap<usize, i64>, y: &BTreeMap<usize, i64>) -> BTreeMap<usize, i64> {
    let mut out = BTreeMap::new();
    for (&a, &c) in x {
        for (&b, &d) in y {
            for (t, e) in alg.multiply(a, b).unwrap() {
                *out.entry(t).or_insert(0) += c * d * e;
            }
        }
    }
    out.retain(|_, v| *v != 0);
    out
}

fn unit(x: usize) -> BTreeMap<usize, i64> {
    BTreeMap::from([(x, 1)])
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hn_multiplication_is_associative(n in 1usize..=3, a in any::<usize>(), b in any::<usize>(), c in any::<usize>()) {
        let alg = h(n);
        let r = alg.rank();
        let (x, y, z) = (unit(a % r), unit(b % r), unit(c % r));
        prop_assert_eq!(mul_vec(alg, &mul_vec(alg, &x, &y), &z), mul_vec(alg, &x, &mul_vec(alg, &y, &z)));
    }

    #[test]
    fn surgery_order_is_irrelevant_at_n3(a in any::<usize>(), b in any::<usize>(), seed in any::<u64>()) {
        let alg = h(3);
        let r = alg.rank();
        let mut order: Vec<usize> = (0..3).collect();
        order.shuffle(&mut rng(seed));
        prop_assert_eq!(alg.multiply_with_order(a % r, b % r, &order).unwrap(), alg.multiply(a % r, b % r).unwrap());
    }

    #[test]
    fn snf_certifies_itself(rows in 1usize..6, cols in 1usize..6, entries in prop::collection::vec(-6i64..=6, 36)) {
        let m = ZMatrix::from_rows(&(0..rows).map(|i| entries[i * cols..(i + 1) * cols].to_vec()).collect::<Vec<_>>());
        let snf = smith_normal_form(&m, true);
        let (u, v) = (snf.u.clone().unwrap(), snf.v.clone().unwrap());
        prop_assert!(is_unimodular(&u) && is_unimodular(&v));
        let d = u.mul(&m).mul(&v);
        for i in 0..rows {
            for j in 0..cols {
                let want = if i == j && i < snf.rank() { snf.factors[i].clone() } else { BigInt::zero() };
                prop_assert_eq!(d.get(i, j), &want);
            }
        }
        for w in snf.factors.windows(2) {
            prop_assert!((&w[1] % &w[0]).is_zero());
        }
        prop_assert!(snf.factors.iter().all(|f| f.is_positive()));
    }

    #[test]
    fn random_complexes_square_to_zero(n in 1usize..=3, seed in any::<u64>(), size in 1usize..=4) {
        let mut r = rng(seed);
        for side in [Side::Left, Side::Right] {
            let m = random_complex(h(n), side, &mut r, size);
            prop_assert!(m.check_d_squared(h(n)).is_ok());
            prop_assert!(m.check_d_squared_families(h(n)).is_ok());
        }
    }

    #[test]
    fn hn_box_squares_to_zero(n in 1usize..=3, seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_complex(h(n), Side::Right, &mut r, 2);
        let d = random_complex(h(n), Side::Left, &mut r, 2);
        let a = HnTypeA::new(h(n), &m).unwrap();
        verify_type_a(&a).unwrap();
        let dd = type_d_from_complex(h(n), &d).unwrap();
        dd.verify().unwrap();
        let (c, _) = box_tensor(&a, &dd).unwrap();
        prop_assert!(c.check().is_ok());
    }

    #[test]
    fn partitions_and_matchings_correspond(n in 1usize..=5, k in any::<usize>()) {
        let ps = enumerate_partitions(n).unwrap();
        let p = &ps[k % ps.len()];
        prop_assert_eq!(&matching_to_partition(&partition_to_matching(p)), p);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn roberts_structures_on_random_complexes(seed in any::<u64>()) {
        let algs = algs2();
        let mut r = rng(seed);
        let m = random_complex(&algs.h, Side::Right, &mut r, 2);
        let nn = random_complex(&algs.h, Side::Left, &mut r, 2);
        for gamma in [false, true] {
            let p = algs.product(gamma).unwrap();
            let a = type_a_roberts(p, &m).unwrap();
            a.verify().unwrap();
            let d = type_d_roberts(p, &nn).unwrap();
            d.verify().unwrap();
            let (c, _) = box_tensor(&a, &d).unwrap();
            prop_assert!(c.check().is_ok());
        }
    }

    #[test]
    fn random_links_agree_across_pipelines(seed in any::<u64>(), n in 1usize..=2) {
        let algs = algs2();
        let l = random_link(&mut rng(seed), n, 2);
        let local;
        let algs = if n == 2 { algs } else { local = Algebras::new(n, false).unwrap(); &local };
        for method in Method::ALL {
            let p = khbord::bordered::pairing(&l, method, algs).unwrap();
            prop_assert!(p.complex.check().is_ok());
            prop_assert!(khbord::bordered::agrees_with_direct(&l, &p).unwrap(), "{} on\n{}", method.name(), l.to_text());
        }
    }

    #[test]
    fn crossing_order_changes_only_signs(seed in any::<u64>(), n in 1usize..=2) {
        let mut r = rng(seed);
        let l = random_link(&mut r, n, 2);
        let base = direct_ckh(&l).unwrap();
        let nc = l.left.crossing_count() + l.right.crossing_count();
        let mut order: Vec<usize> = (0..nc).collect();
        order.shuffle(&mut r);
        let other = direct_ckh_with_order(&l, &order).unwrap();
        let map: Vec<(usize, i64)> = base.gens.iter().enumerate().map(|(i, &(rho, _))| (i, reorder_sign(rho, &order))).collect();
        prop_assert!(complexes_equal_under_identification(&other.complex, &base.complex, &map).unwrap());
        prop_assert_eq!(other.complex.homology(), base.complex.homology());
    }
}
