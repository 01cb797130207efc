use privlp::lp::{dehomogenize, homogenize, parse_lp, write_lp};
use privlp::oracle::{feasible_exact_lp, FeasibilityCertificate};
use privlp::rational::{self, Q};
use privlp::LpInstance;
use proptest::prelude::*;

fn small_lp() -> impl Strategy<Value = LpInstance> {
    (1usize..=3, 1usize..=6).prop_flat_map(|(d, n)| {
        (prop::collection::vec(prop::collection::vec(-3i64..=3, d), n), prop::collection::vec(-3i64..=3, n))
            .prop_filter_map("zero row", |(a, b)| LpInstance::new(a, b, 3).ok())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn feasible_points_lift_to_the_homogeneous_cone(lp in small_lp()) {
        let slack = rational::q_frac(1, 1000);
        let cert = feasible_exact_lp(&lp, &Q::from_integer(0.into()), None).unwrap();
        if let FeasibilityCertificate::Feasible(x) = cert {
            let h = homogenize(&lp, &slack).unwrap();
            let mut y: Vec<f64> = x.iter().map(rational::to_f64).collect();
            y.push(1.0);
            // every constraint row gains the slack, so it is strictly positive
            for row in &h.rows()[..h.n() - lp.d() - 1] {
                let v: f64 = row.iter().zip(&y).map(|(a, b)| a * b).sum();
                prop_assert!(v > 0.0);
            }
            let back = dehomogenize(&y).unwrap();
            for (b, xi) in back.iter().zip(&x) {
                prop_assert!((b - rational::to_f64(xi)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn text_format_roundtrips(lp in small_lp()) {
        let text = write_lp(&lp, &["generated".to_string()]);
        let back = parse_lp(&text).unwrap();
        prop_assert_eq!(&back, &lp);
        prop_assert_eq!(write_lp(&back, &["generated".to_string()]), text);
    }
}

#[test]
fn nonpositive_scaling_coordinate_has_no_preimage() {
    assert_eq!(dehomogenize(&[1.0, 0.0]), None);
    assert_eq!(dehomogenize(&[1.0, -2.0]), None);
    assert_eq!(dehomogenize(&[1.0, 2.0]), Some(vec![0.5]));
}
