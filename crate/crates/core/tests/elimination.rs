use num_bigint::BigInt;
use privlp::elimination::{eliminate, entry_growth_bound, EqualitySystem};
use privlp::oracle::{feasible_exact, feasible_exact_lp, satisfies};
use privlp::rational::{self, Q};
use privlp::{LpInstance, SeededRng};
use rand::Rng;

fn zero() -> Q {
    Q::from_integer(0.into())
}

fn random_case(rng: &mut SeededRng) -> Option<(LpInstance, EqualitySystem)> {
    let d = rng.random_range(1..=3);
    let k = rng.random_range(1..=d);
    let u = rng.random_range(1..=3i64);
    let n = rng.random_range(1..=4);
    let ints = |len: usize, rng: &mut SeededRng| (0..len).map(|_| rng.random_range(-u..=u)).collect::<Vec<i64>>();
    let a: Vec<Vec<i64>> = (0..n).map(|_| ints(d, rng)).collect();
    let b = ints(n, rng);
    let lp = LpInstance::new(a, b, u).ok()?;
    let rows: Vec<Vec<Q>> = (0..k).map(|_| ints(d + 1, rng).into_iter().map(rational::q).collect()).collect();
    let eq = EqualitySystem::canonical(&rows, d)?;
    (eq.rank() == k).then_some((lp, eq))
}

#[test]
fn reduced_system_matches_oracle_and_back_maps() {
    let mut rng = SeededRng::new(11, 0);
    let mut checked = 0;
    while checked < 300 {
        let Some((lp, eq)) = random_case(&mut rng) else { continue };
        checked += 1;
        let red = eliminate(&lp, &eq, &zero()).unwrap();
        let original = feasible_exact_lp(&lp, &zero(), Some(&eq)).unwrap();
        let a: Vec<Vec<Q>> =
            red.a_tilde.iter().map(|r| r.iter().map(|v| Q::from_integer(v.clone())).collect()).collect();
        let b: Vec<Q> = red.b_tilde.iter().map(|v| Q::from_integer(v.clone())).collect();
        let reduced = if red.dim() == 0 {
            // nothing left to choose: feasible iff every row holds at the empty point
            b.iter().all(|v| !num_traits::Signed::is_negative(v))
        } else {
            let cert = feasible_exact(&a, &b, None).unwrap();
            if let Some(w) = cert.witness() {
                let x = red.back_map(w).unwrap();
                let aq: Vec<Vec<Q>> = lp.a().iter().map(|r| r.iter().map(|&v| rational::q(v)).collect()).collect();
                let bq: Vec<Q> = lp.b().iter().map(|&v| rational::q(v)).collect();
                assert!(satisfies(&aq, &bq, Some(&eq), &x));
            }
            cert.is_feasible()
        };
        assert_eq!(reduced, original.is_feasible(), "{lp:?} {eq:?}");
    }
}

#[test]
fn growth_bound_fails_on_a_small_system() {
    // Eliminating x1 with x1 + x2 = 0 turns x1 - x2 <= 0 into -2 x2 <= 0,
    // while k²(k-1)!U^{k+1} = 1 for k = U = 1.
    let lp = LpInstance::new(vec![vec![1, -1]], vec![0], 1).unwrap();
    let eq = EqualitySystem::canonical(&[vec![rational::q(1), rational::q(1), rational::q(0)]], 2).unwrap();
    let red = eliminate(&lp, &eq, &zero()).unwrap();
    assert_eq!(red.a_tilde[0], vec![BigInt::from(-2)]);
    assert!(red.max_constraint_entry() > entry_growth_bound(1, 1));
}
