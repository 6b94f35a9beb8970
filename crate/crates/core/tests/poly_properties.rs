use std::cmp::Ordering;

use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};
use proptest::prelude::*;
use qafem::poly::{
    annihilator, eval_multipoly, frac_degree, monomial_order, verify_annihilation, Degree, Exponent, FracPoly, MultiPoly,
};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn exp_strategy() -> impl Strategy<Value = Exponent> {
    let r = (0i64..6, 1i64..4).prop_map(|(n, d)| Ratio::new(n, d));
    [r.clone(), r.clone(), r]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn monomial_order_is_strict_total(a in exp_strategy(), b in exp_strategy(), c in exp_strategy()) {
        let ab = monomial_order(&a, &b);
        prop_assert_eq!(ab, monomial_order(&b, &a).reverse());
        prop_assert_eq!(ab == Ordering::Equal, a == b);
        if ab == Ordering::Greater && monomial_order(&b, &c) == Ordering::Greater {
            prop_assert_eq!(monomial_order(&a, &c), Ordering::Greater);
        }
    }

    #[test]
    fn squaring_doubles_degree(terms in prop::collection::vec((exp_strategy(), 0.5f64..2.0), 0..5)) {
        let p = FracPoly::from_terms(terms).unwrap();
        let d = frac_degree(&p);
        prop_assert_eq!(frac_degree(&p.pow(2)), d.pow(Ratio::from_integer(2)));
        if p.is_zero() {
            prop_assert_eq!(d, Degree::NegInfinity);
        }
    }
}

#[test]
fn annihilators_are_homogeneous_monic_and_balanced() {
    let cases = [(1, 2), (1, 3), (2, 2), (2, 3), (3, 2), (3, 3), (2, 4)];
    let lambdas = [rat(3, 7), rat(-5, 2), rat(11, 13)];
    let point = [rat(2, 3), rat(-1, 5), rat(7, 4), rat(9, 2)];
    for (n, k) in cases {
        let p = annihilator(n, k).unwrap();
        let deg = (k as u32).pow(n as u32 - 1);
        assert_eq!(p.total_degree(), Some(deg));
        for v in 0..=n {
            assert_eq!(p.degree_in(v), Some(deg), "n={n} k={k} variable {v}");
        }
        let mut s_max = vec![0u32; n + 1];
        s_max[n] = deg;
        assert_eq!(p.coefficient(&s_max), BigRational::one());
        let x: Vec<BigRational> = point[..=n].to_vec();
        let base = eval_multipoly(&p, &x).unwrap();
        for l in &lambdas {
            let scaled: Vec<BigRational> = x.iter().map(|c| c * l).collect();
            let lhs = eval_multipoly(&p, &scaled).unwrap();
            assert_eq!(lhs, num_traits::pow(l.clone(), deg as usize) * &base);
        }
    }
}

#[test]
fn exact_annihilation_including_composite_k() {
    for n in 1..=3 {
        let r = verify_annihilation(n, 4, 50, 40 + n as u64).unwrap();
        assert!(r.pass && r.max_abs_exact.is_zero(), "n = {n}");
    }
    let r = verify_annihilation(2, 3, 100, 9).unwrap();
    assert!(r.pass);
    assert!(verify_annihilation(3, 2, 25, 10).unwrap().pass);
}

#[test]
fn multipoly_evaluation_examples() {
    let z = MultiPoly::<BigRational>::zero(2);
    assert!(eval_multipoly(&z, &[rat(3, 1), rat(4, 1)]).unwrap().is_zero());
    let p = annihilator(1, 5).unwrap();
    assert!(eval_multipoly(&p, &[rat(5, 1), rat(5, 1)]).unwrap().is_zero());
    assert!(eval_multipoly(&p, &[rat(5, 1)]).is_err());
    let q = annihilator(2, 2).unwrap();
    assert!(eval_multipoly(&q, &[rat(1, 1), rat(4, 1), rat(9, 1)]).unwrap().is_zero());
}
