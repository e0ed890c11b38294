//! Solver behaviour against the independent brute-force dual oracle.

mod common;

use moodcast::svm::{train_binary_svm, SvmParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tight_params() -> SvmParams {
    SvmParams {
        epsilon: 1e-10,
        scale: false,
        ..SvmParams::default()
    }
}

#[test]
fn duplicated_points_keep_the_decision_sign_pattern() {
    // Each point twice; the oracle certifies the solver's objective and the
    // decision function classifies the training points identically.
    let points = vec![vec![-1.5], vec![-1.5], vec![0.5], vec![0.5]];
    let labels = vec![-1.0, -1.0, 1.0, 1.0];
    let machine = train_binary_svm(&points, &labels, &tight_params()).unwrap();

    let (_, oracle_objective) = common::brute_force_qp(&points, &labels, 1.0);
    assert!(
        (machine.dual_objective - oracle_objective).abs() < 1e-6,
        "solver {} vs oracle {}",
        machine.dual_objective,
        oracle_objective
    );
    for (point, label) in points.iter().zip(&labels) {
        assert_eq!(machine.decision(point).signum(), *label);
    }
}

#[test]
fn random_small_instances_match_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut checked = 0;
    while checked < 12 {
        let n = rng.random_range(2..=4usize);
        let d = rng.random_range(1..=2usize);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let labels: Vec<f64> = (0..n)
            .map(|i| if i == 0 { 1.0 } else if i == 1 { -1.0 } else if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();

        let machine = train_binary_svm(&points, &labels, &tight_params()).unwrap();
        let (oracle_alpha, oracle_objective) = common::brute_force_qp(&points, &labels, 1.0);
        assert!(
            (machine.dual_objective - oracle_objective).abs() < 1e-6,
            "objective {} vs {}",
            machine.dual_objective,
            oracle_objective
        );
        for (a, b) in machine.alpha.iter().zip(&oracle_alpha) {
            assert!((a - b).abs() < 1e-6, "alpha {a} vs {b}");
        }
        checked += 1;
    }
}

#[test]
fn kkt_residual_is_certified_independently() {
    let points = vec![
        vec![0.2, 1.1],
        vec![-0.7, 0.3],
        vec![1.9, -0.4],
        vec![0.4, -1.2],
    ];
    let labels = vec![1.0, -1.0, 1.0, -1.0];
    let params = tight_params();
    let machine = train_binary_svm(&points, &labels, &params).unwrap();
    let violation = common::kkt_violation(&points, &labels, &machine.alpha, params.cost);
    assert!(violation < params.epsilon + 1e-12, "violation {violation}");
    let balance: f64 = machine
        .alpha
        .iter()
        .zip(&labels)
        .map(|(a, y)| a * y)
        .sum();
    assert!(balance.abs() < 1e-8);
}

#[test]
fn argmax_is_invariant_under_positive_decision_rescaling() {
    // Scaling all decision values by a positive constant cannot change the
    // vote winner when votes are untied.
    use chrono::NaiveDate;
    use moodcast::features::ClassificationExample;
    use moodcast::svm::train_multiclass;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut examples = Vec::new();
    for (class, center) in [(6, (0.0, 0.0)), (7, (6.0, 0.0)), (8, (0.0, 6.0))] {
        for _ in 0..20 {
            examples.push(ClassificationExample {
                user_id: "u".into(),
                target_date: NaiveDate::from_ymd_opt(2014, 3, 1).unwrap(),
                features: vec![
                    center.0 + rng.random_range(-1.0..1.0),
                    center.1 + rng.random_range(-1.0..1.0),
                ],
                target_class: class,
            });
        }
    }
    let model = train_multiclass(&examples, &SvmParams::default()).unwrap();
    let mut scaled = model.clone();
    for machine in &mut scaled.machines {
        for w in &mut machine.weights {
            *w *= 4.0;
        }
        machine.bias *= 4.0;
    }
    for example in &examples {
        assert_eq!(
            model.predict(&example.features).unwrap(),
            scaled.predict(&example.features).unwrap()
        );
    }
}
