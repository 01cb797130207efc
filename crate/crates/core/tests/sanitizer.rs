use privlp::elimination::EqualitySystem;
use privlp::rational;
use privlp::sanitizer::{Private, Reference, SanitizeRequest, Sanitizer};
use privlp::{PrivacyBudget, SeededRng};
use rand::Rng;

/// Every solution of `input` solves `output`: the output rows lie in the
/// affine span of the consistent input.
fn contains(input: &EqualitySystem, output: &EqualitySystem) -> bool {
    input.union(output).is_some_and(|u| u.rank() == input.rank())
}

fn random_request(rng: &mut SeededRng) -> SanitizeRequest {
    let d = rng.random_range(1..=4);
    let planted: Vec<i64> = (0..d).map(|_| rng.random_range(-2..=2)).collect();
    let m = rng.random_range(1..=60);
    let patterns: Vec<Vec<i64>> = (0..rng.random_range(1..=d))
        .map(|_| {
            let mut r: Vec<i64> = (0..d).map(|_| rng.random_range(-3..=3)).collect();
            if r.iter().all(|&v| v == 0) {
                r[0] = 1;
            }
            r
        })
        .collect();
    let a: Vec<Vec<i64>> = (0..m).map(|_| patterns[rng.random_range(0..patterns.len())].clone()).collect();
    let b: Vec<i64> = a.iter().map(|r| r.iter().zip(&planted).map(|(x, y)| x * y).sum()).collect();
    SanitizeRequest::from_ints(&a, &b, PrivacyBudget::new(1.0, 1e-6, 0.1).unwrap()).unwrap()
}

#[test]
fn outputs_contain_the_input_solutions() {
    let mut rng = SeededRng::new(5, 0);
    let sanitizers: [(&str, Box<dyn Sanitizer>); 3] = [
        ("reference", Box::new(Reference)),
        ("private-noiseless", Box::new(Private { noise: false, max_rounds: None })),
        ("private", Box::new(Private::default())),
    ];
    for i in 0..500 {
        let req = random_request(&mut rng);
        let input = EqualitySystem::canonical(&req.equations, req.dim).expect("planted systems are consistent");
        for (name, s) in &sanitizers {
            let out = s.sanitize(&req, &mut rng.substream(&[i])).unwrap();
            assert!(contains(&input, &out.system), "{name} on case {i}");
        }
        let reference = Reference.sanitize(&req, &mut rng.substream(&[i])).unwrap();
        assert_eq!(reference.system, input);
        assert_eq!(reference.dropped_bound, 0);
    }
}

#[test]
fn frequent_equations_survive_noise() {
    let budget = PrivacyBudget::new(1.0, 1e-6, 0.1).unwrap();
    let mut a = vec![vec![1, 1, 0]; 200];
    a.extend(vec![vec![0, 1, -1]; 200]);
    let b = vec![2; 400];
    let req = SanitizeRequest::from_ints(&a, &b, budget).unwrap();
    for seed in 0..20 {
        let out = Private::default().sanitize(&req, &mut SeededRng::new(seed, 0)).unwrap();
        assert_eq!(out.system.rank(), 2);
        assert!(out.system.is_satisfied_by(&[rational::q(1), rational::q(1), rational::q(-1)]));
    }
}
