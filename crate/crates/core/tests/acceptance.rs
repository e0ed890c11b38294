//! Acceptance suite: one test per criterion, each printing a PASS line.
//!
//! Run with `cargo test -p moodcast --test acceptance -- --nocapture`.

mod common;

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use moodcast::baseline::{naive_class_accuracy, predict_naive};
use moodcast::eval::{accuracy, rmse, ConfusionMatrix};
use moodcast::features::{
    build_sequence_examples, holdout_size, split_holdout, ClassificationExample, SequenceExample,
    SplitMode, SplitSpec,
};
use moodcast::ingest::{pivot_daily, ObservationRecord, MOOD};
use moodcast::matrix::Matrix;
use moodcast::preprocess::{fit_scaling, forward_fill, prune_days, prune_variables, PruneConfig};
use moodcast::rnn::{init_rnn, train_all_users, Gradients, RnnConfig, RnnModel};
use moodcast::svm::{train_binary_svm, train_multiclass, SvmParams};
use moodcast::synth::{generate_dataset, MoodDynamics, SynthConfig};

fn date(day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2014, 3, 1).unwrap() + chrono::Days::new(u64::from(day))
}

/// Criterion 1: accuracy() reproduces the published metric arithmetic
/// exactly: the test table gives (81, 100, 0.810); the training table gives
/// 467 correct of 565 printed entries (the source text states 568).
#[test]
fn criterion_01_metric_arithmetic_matches_published_tables() {
    let test_table = ConfusionMatrix::from_rows(
        vec![6, 7, 8],
        vec![3, 5, 6, 7, 8],
        vec![
            vec![1, 2, 10, 2, 0],
            vec![0, 1, 5, 55, 3],
            vec![0, 0, 0, 5, 16],
        ],
    )
    .unwrap();
    let test_accuracy = accuracy(&test_table).unwrap();
    assert_eq!(test_accuracy.correct, 81);
    assert_eq!(test_accuracy.total, 100);
    assert_eq!(test_accuracy.fraction, 81.0 / 100.0);
    assert!((test_accuracy.fraction - 0.810).abs() < 1e-15);

    let train_table = ConfusionMatrix::from_rows(
        vec![5, 6, 7, 8],
        vec![3, 4, 5, 6, 7, 8, 9],
        vec![
            vec![0, 1, 4, 1, 0, 0, 0],
            vec![1, 2, 9, 71, 11, 4, 0],
            vec![0, 0, 0, 23, 313, 31, 2],
            vec![0, 0, 0, 0, 13, 79, 0],
        ],
    )
    .unwrap();
    let train_accuracy = accuracy(&train_table).unwrap();
    assert_eq!(train_accuracy.correct, 467);
    assert_eq!(train_accuracy.total, 565);
    assert_eq!(train_accuracy.fraction, 467.0 / 565.0);

    println!("[PASS] criterion 1: metric arithmetic (81/100 = 0.810; 467 of 565)");
}

fn tight_params() -> SvmParams {
    SvmParams {
        epsilon: 1e-10,
        scale: false,
        ..SvmParams::default()
    }
}

fn check_against_oracle(points: &[Vec<f64>], labels: &[f64], c: f64) {
    let params = SvmParams { cost: c, ..tight_params() };
    let machine = train_binary_svm(points, labels, &params).unwrap();
    let (oracle_alpha, oracle_objective) = common::brute_force_qp(points, labels, c);

    assert!(
        (machine.dual_objective - oracle_objective).abs() < 1e-6,
        "objective {} vs oracle {} on {points:?} {labels:?} c={c}",
        machine.dual_objective,
        oracle_objective
    );
    for (a, b) in machine.alpha.iter().zip(&oracle_alpha) {
        assert!(
            (a - b).abs() < 1e-6,
            "alpha {:?} vs oracle {:?} on {points:?} {labels:?} c={c}",
            machine.alpha,
            oracle_alpha
        );
    }
    let violation = common::kkt_violation(points, labels, &machine.alpha, c);
    assert!(violation < params.epsilon, "kkt violation {violation}");
    let balance: f64 = machine.alpha.iter().zip(labels).map(|(a, y)| a * y).sum();
    assert!(balance.abs() < 1e-8, "sum alpha_i y_i = {balance}");
}

/// Criterion 2: the SMO solver matches the brute-force dual oracle on a
/// 2-point 1-D grid family and on random instances with <= 4 points in
/// <= 2 dimensions.
#[test]
fn criterion_02_smo_matches_brute_force_qp_oracle() {
    let grid = [-2.0, -1.0, -0.3, 0.5, 1.0, 2.5];
    let mut two_point = 0;
    for (a, x1) in grid.iter().enumerate() {
        for x2 in &grid[a + 1..] {
            for labels in [[-1.0, 1.0], [1.0, -1.0]] {
                for c in [0.5, 1.0, 10.0] {
                    check_against_oracle(&[vec![*x1], vec![*x2]], &labels, c);
                    two_point += 1;
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut random = 0;
    while random < 24 {
        let n = rng.random_range(2..=4usize);
        let d = rng.random_range(1..=2usize);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let labels: Vec<f64> = (0..n)
            .map(|i| match i {
                0 => 1.0,
                1 => -1.0,
                _ => {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
            })
            .collect();
        check_against_oracle(&points, &labels, 1.0);
        random += 1;
    }

    println!(
        "[PASS] criterion 2: smo vs brute-force qp oracle ({two_point} two-point + {random} random instances)"
    );
}

/// Criterion 3: the analytic two-point problem solves exactly.
#[test]
fn criterion_03_analytic_two_point_solution() {
    let machine = train_binary_svm(
        &[vec![-1.0], vec![1.0]],
        &[-1.0, 1.0],
        &SvmParams::default(), // cost 1, Table-2 settings
    )
    .unwrap();
    assert!((machine.alpha[0] - 0.5).abs() < 1e-9);
    assert!((machine.alpha[1] - 0.5).abs() < 1e-9);
    assert!((machine.weights[0] - 1.0).abs() < 1e-9);
    assert!(machine.bias.abs() < 1e-9);
    println!("[PASS] criterion 3: analytic case alpha=(0.5, 0.5), w=1, b=0 within 1e-9");
}

/// Criterion 4: three well-separated clusters (300 points, margin >= 1)
/// reach >= 0.98 training accuracy.
#[test]
fn criterion_04_separable_multiclass_training_accuracy() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut examples = Vec::new();
    for (class, center) in [(6, (0.0, 0.0)), (7, (8.0, 0.0)), (8, (0.0, 8.0))] {
        for i in 0..100 {
            examples.push(ClassificationExample {
                user_id: "synthetic".into(),
                target_date: date(i % 28),
                features: vec![
                    center.0 + rng.random_range(-1.0..1.0),
                    center.1 + rng.random_range(-1.0..1.0),
                ],
                target_class: class,
            });
        }
    }
    let model = train_multiclass(&examples, &SvmParams::default()).unwrap();
    let correct = examples
        .iter()
        .filter(|e| model.predict(&e.features).unwrap() == e.target_class)
        .count();
    let fraction = correct as f64 / examples.len() as f64;
    assert!(fraction >= 0.98, "training accuracy {fraction}");
    println!("[PASS] criterion 4: separable multiclass accuracy {fraction:.3} >= 0.98");
}

fn flat_param_count(model: &RnnModel) -> usize {
    model.w_in.data().len() + model.w_rec.data().len() + model.b_h.len() + model.w_out.len() + 1
}

fn get_param(model: &RnnModel, index: usize) -> f64 {
    let a = model.w_in.data().len();
    let b = a + model.w_rec.data().len();
    let c = b + model.b_h.len();
    let d = c + model.w_out.len();
    match index {
        i if i < a => model.w_in.data()[i],
        i if i < b => model.w_rec.data()[i - a],
        i if i < c => model.b_h[i - b],
        i if i < d => model.w_out[i - c],
        _ => model.b_out,
    }
}

fn set_param(model: &mut RnnModel, index: usize, value: f64) {
    let a = model.w_in.data().len();
    let b = a + model.w_rec.data().len();
    let c = b + model.b_h.len();
    let d = c + model.w_out.len();
    match index {
        i if i < a => model.w_in.data_mut()[i] = value,
        i if i < b => model.w_rec.data_mut()[i - a] = value,
        i if i < c => model.b_h[i - b] = value,
        i if i < d => model.w_out[i - c] = value,
        _ => model.b_out = value,
    }
}

fn analytic_grad(grads: &Gradients, index: usize) -> f64 {
    let a = grads.w_in.data().len();
    let b = a + grads.w_rec.data().len();
    let c = b + grads.b_h.len();
    let d = c + grads.w_out.len();
    match index {
        i if i < a => grads.w_in.data()[i],
        i if i < b => grads.w_rec.data()[i - a],
        i if i < c => grads.b_h[i - b],
        i if i < d => grads.w_out[i - c],
        _ => grads.b_out,
    }
}

/// Criterion 5: BPTT gradients match central finite differences (step 1e-5)
/// with relative error < 1e-4 on every parameter of 10 random small models.
#[test]
fn criterion_05_rnn_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let step = 1e-5;
    for case in 0..10u64 {
        let input_dim = rng.random_range(1..=3usize);
        let hidden = rng.random_range(1..=4usize);
        let steps = rng.random_range(1..=5usize);
        let config = RnnConfig {
            hidden_dim: hidden,
            seed: 1000 + case,
            ..RnnConfig::default()
        };
        let model = init_rnn(input_dim, &config);
        let rows: Vec<Vec<f64>> = (0..steps)
            .map(|_| (0..input_dim).map(|_| rng.random::<f64>()).collect())
            .collect();
        let inputs = Matrix::from_rows(&rows);
        let target: f64 = rng.random();

        let (_, grads) = model.loss_and_gradients(&inputs, target).unwrap();
        for index in 0..flat_param_count(&model) {
            let original = get_param(&model, index);
            let mut plus = model.clone();
            set_param(&mut plus, index, original + step);
            let mut minus = model.clone();
            set_param(&mut minus, index, original - step);
            let (loss_plus, _) = plus.loss_and_gradients(&inputs, target).unwrap();
            let (loss_minus, _) = minus.loss_and_gradients(&inputs, target).unwrap();
            let numeric = (loss_plus - loss_minus) / (2.0 * step);
            let analytic = analytic_grad(&grads, index);
            let denom = analytic.abs().max(numeric.abs()).max(1e-6);
            let relative = (analytic - numeric).abs() / denom;
            assert!(
                relative < 1e-4,
                "case {case} param {index}: analytic {analytic} vs numeric {numeric} (rel {relative})"
            );
        }
    }
    println!("[PASS] criterion 5: bptt gradients match finite differences on 10 random models");
}

/// Criterion 6: with learnable dynamics (feature-driven mood, sigma = 0.1)
/// the per-user RNNs beat the persistence baseline on test RMSE for at
/// least 90% of 20 users at 1000 epochs.
#[test]
fn criterion_06_rnn_beats_naive_baseline() {
    let mut synth = SynthConfig {
        n_users: 20,
        min_days: 26,
        max_days: 34,
        mood_missing_rate: 0.02,
        mood_jitter: 0.15,
        dynamics: MoodDynamics {
            persistence: 0.25,
            feature_weight: 0.75,
            noise_sd: 0.1,
        },
        seed: 2204,
        ..SynthConfig::default()
    };
    for variable in &mut synth.variables {
        variable.missing_rate = 0.05;
    }

    let (records, _) = generate_dataset(&synth).unwrap();
    let prune = PruneConfig::default();
    let table = prune_variables(&pivot_daily(&records), &prune).unwrap();
    let table = prune_days(&table, &prune).table;
    let table = forward_fill(&table).unwrap();
    let scaling = fit_scaling(&table, table.variables());
    let (by_user, _) = build_sequence_examples(&table, &scaling, 5).unwrap();
    assert_eq!(by_user.len(), 20, "every user must survive preprocessing");

    let split = SplitSpec {
        test_fraction: 0.3,
        mode: SplitMode::PerUserChronological,
        seed: 0,
    };
    let flat: Vec<SequenceExample> = by_user.values().flatten().cloned().collect();
    let (train, test) = split_holdout(flat, &split).unwrap();
    let mut train_by_user: BTreeMap<String, Vec<SequenceExample>> = BTreeMap::new();
    for example in train {
        train_by_user.entry(example.user_id.clone()).or_default().push(example);
    }
    let mut test_by_user: BTreeMap<String, Vec<SequenceExample>> = BTreeMap::new();
    for example in test {
        test_by_user.entry(example.user_id.clone()).or_default().push(example);
    }

    let config = RnnConfig {
        epochs: 1000,
        ..RnnConfig::default()
    };
    let models = train_all_users(&train_by_user, &config, &scaling).unwrap();

    let mut wins = 0usize;
    for unit in &models {
        let user = &unit.user_id;
        let mut actuals = Vec::new();
        let mut predictions = Vec::new();
        for example in &test_by_user[user] {
            predictions.push(unit.model.predict_mood(&example.inputs).unwrap());
            actuals.push(table.cell(user, example.target_date, MOOD).unwrap().mean);
        }
        let rnn_rmse = rmse(&actuals, &predictions).unwrap();

        let naive = predict_naive(user, &table.mood_series(user));
        let naive_rmse = rmse(
            &naive.iter().map(|p| p.actual).collect::<Vec<_>>(),
            &naive.iter().map(|p| p.predicted).collect::<Vec<_>>(),
        )
        .unwrap();
        if rnn_rmse < naive_rmse {
            wins += 1;
        }
    }
    let fraction = wins as f64 / models.len() as f64;
    assert!(
        fraction >= 0.9,
        "rnn beat naive for only {wins}/{} users",
        models.len()
    );
    println!(
        "[PASS] criterion 6: rnn test rmse below naive for {wins}/{} users",
        models.len()
    );
}

/// Criterion 7: two full `all` runs with the same seed produce byte-identical
/// reports, models, and manifests.
#[test]
fn criterion_07_full_runs_are_byte_identical() {
    use moodcast::pipeline::{run, Command, InputSpec, PipelineConfig};

    let dir = tempfile::tempdir().unwrap();
    let mut config = PipelineConfig::default();
    config.input = InputSpec::Synth {
        config: SynthConfig {
            n_users: 6,
            min_days: 12,
            max_days: 16,
            ..SynthConfig::default()
        },
    };
    config.rnn.config.epochs = 150;
    config.output_dir = dir.path().to_path_buf();

    fn snapshot(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
        fn walk(dir: &std::path::Path, base: &std::path::Path, into: &mut BTreeMap<String, Vec<u8>>) {
            for entry in std::fs::read_dir(dir).unwrap() {
                let path = entry.unwrap().path();
                if path.is_dir() {
                    walk(&path, base, into);
                } else {
                    let rel = path.strip_prefix(base).unwrap().to_string_lossy().into_owned();
                    into.insert(rel, std::fs::read(&path).unwrap());
                }
            }
        }
        let mut map = BTreeMap::new();
        walk(dir, dir, &mut map);
        map
    }

    run(Command::All, &config).unwrap();
    let first = snapshot(dir.path());
    run(Command::All, &config).unwrap();
    let second = snapshot(dir.path());

    assert_eq!(
        first.keys().collect::<Vec<_>>(),
        second.keys().collect::<Vec<_>>()
    );
    for (name, bytes) in &first {
        assert_eq!(bytes, &second[name], "{name} differs between runs");
    }
    assert!(first.contains_key("manifest.json"));
    assert!(first.contains_key("reports/report.json"));
    assert!(first.keys().any(|k| k.starts_with("models/rnn_")));
    println!(
        "[PASS] criterion 7: two `all` runs byte-identical across {} files",
        first.len()
    );
}

/// Seeded random observation logs where every (user, variable) pair has at
/// least one present value, so the fill precondition holds.
fn random_fillable_records(seed: u64) -> Vec<ObservationRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_users = rng.random_range(1..=3usize);
    let n_vars = rng.random_range(1..=3usize);
    let n_days = rng.random_range(3..=8u32);
    let mut records = Vec::new();
    for user in 0..n_users {
        for day in 0..n_days {
            for var in 0..=n_vars {
                let name = if var == 0 { MOOD.to_string() } else { format!("v{var}") };
                let present = day == 0 || rng.random::<f64>() > 0.35;
                let value = present.then(|| rng.random_range(1.0..10.0));
                let n_obs = if present { rng.random_range(1..=3) } else { 1 };
                for obs in 0..n_obs {
                    records.push(ObservationRecord {
                        user_id: format!("U{user}"),
                        timestamp: date(day).and_hms_opt(8 + obs, 0, 0).unwrap(),
                        variable: name.clone(),
                        value: value.map(|v| v + 0.1 * f64::from(obs)),
                    });
                }
            }
        }
    }
    records
}

/// Criterion 8: preprocessing contracts over 100 random tables —
/// forward-fill idempotence and completeness, scaling round-trip at 1e-12,
/// pruning monotonicity and per-user independence.
#[test]
fn criterion_08_preprocessing_contracts() {
    let config = PruneConfig::default();
    for seed in 0..100u64 {
        let records = random_fillable_records(seed);
        let table = pivot_daily(&records);

        // Fill idempotence and the zero-missing postcondition.
        let filled = forward_fill(&table).unwrap();
        assert_eq!(forward_fill(&filled).unwrap(), filled, "seed {seed}");
        for (user, days) in filled.iter_users() {
            for (day, cells) in days {
                for variable in filled.variables() {
                    assert!(
                        cells.contains_key(variable),
                        "seed {seed}: {variable} missing for {user} on {day}"
                    );
                }
            }
        }

        // Scaling round-trip within 1e-12 for non-degenerate variables.
        let scaling = fit_scaling(&filled, filled.variables());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xdead);
        for variable in filled.variables() {
            let (min, max) = scaling.range(variable).unwrap();
            if max > min {
                let x = min + rng.random::<f64>() * (max - min);
                let y = scaling.apply(variable, x).unwrap();
                let back = scaling.invert(variable, y).unwrap();
                assert!((back - x).abs() < 1e-12, "seed {seed}: {back} vs {x}");
            }
        }

        // Pruning never grows anything.
        let vars_pruned = prune_variables(&table, &config).unwrap();
        assert!(vars_pruned.variables().len() <= table.variables().len());
        let pruned = prune_days(&vars_pruned, &config);
        for (user, _) in pruned.table.iter_users() {
            assert!(pruned.table.day_count(user) <= table.day_count(user));
        }

        // Per-user independence of day pruning at a fixed registry.
        let full = prune_days(&table, &config);
        let users: Vec<String> = table.user_ids().map(str::to_string).collect();
        if users.len() > 1 {
            let removed = &users[seed as usize % users.len()];
            let remaining: Vec<ObservationRecord> = records
                .iter()
                .filter(|r| &r.user_id != removed)
                .cloned()
                .collect();
            let partial = prune_days(&pivot_daily(&remaining), &config);
            for (user, days) in partial.table.iter_users() {
                assert_eq!(Some(days), full.table.days(user), "seed {seed} user {user}");
            }
        }
    }
    println!("[PASS] criterion 8: preprocessing contracts on 100 random tables");
}

/// Criterion 9: the split arithmetic reproduces the published counts
/// exactly (18 -> 5 test per user at 30%; 1000 -> 100 test at 10%).
#[test]
fn criterion_09_split_arithmetic() {
    assert_eq!(holdout_size(18, 0.3), 5);
    assert_eq!(holdout_size(1000, 0.1), 100);

    let per_user: Vec<ClassificationExample> = (0..18)
        .map(|i| ClassificationExample {
            user_id: "AS14.01".into(),
            target_date: date(i),
            features: vec![f64::from(i)],
            target_class: 6,
        })
        .collect();
    let (train, test) = split_holdout(
        per_user,
        &SplitSpec {
            test_fraction: 0.3,
            mode: SplitMode::PerUserChronological,
            seed: 0,
        },
    )
    .unwrap();
    assert_eq!((train.len(), test.len()), (13, 5));

    let pool: Vec<ClassificationExample> = (0..1000)
        .map(|i| ClassificationExample {
            user_id: format!("U{}", i % 30),
            target_date: date(i % 28),
            features: vec![f64::from(i)],
            target_class: 6,
        })
        .collect();
    let (train, test) = split_holdout(
        pool,
        &SplitSpec {
            test_fraction: 0.1,
            mode: SplitMode::GlobalRandom,
            seed: 2204,
        },
    )
    .unwrap();
    assert_eq!((train.len(), test.len()), (900, 100));

    println!("[PASS] criterion 9: split arithmetic (18 -> 13/5, 1000 -> 900/100)");
}

/// Criterion 10: persistence RMSE equals the independent
/// successive-difference recomputation within 1e-12 on 100 random series;
/// constant series give RMSE 0 and class accuracy 1 exactly.
#[test]
fn criterion_10_baseline_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let n = rng.random_range(2..=40usize);
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..10.0)).collect();
        let series: Vec<(NaiveDate, f64)> = values
            .iter()
            .enumerate()
            .map(|(i, v)| (date(i as u32 % 28), *v))
            .collect();
        let predictions = predict_naive("u", &series);
        let via_rmse = rmse(
            &predictions.iter().map(|p| p.actual).collect::<Vec<_>>(),
            &predictions.iter().map(|p| p.predicted).collect::<Vec<_>>(),
        )
        .unwrap();
        let successive = (values
            .windows(2)
            .map(|w| (w[1] - w[0]).powi(2))
            .sum::<f64>()
            / (values.len() - 1) as f64)
            .sqrt();
        assert!((via_rmse - successive).abs() < 1e-12);
    }

    let constant: Vec<(NaiveDate, f64)> = (0..10).map(|i| (date(i), 7.0)).collect();
    let predictions = predict_naive("u", &constant);
    let zero = rmse(
        &predictions.iter().map(|p| p.actual).collect::<Vec<_>>(),
        &predictions.iter().map(|p| p.predicted).collect::<Vec<_>>(),
    )
    .unwrap();
    assert_eq!(zero, 0.0);
    assert_eq!(naive_class_accuracy(&[constant]).unwrap(), 1.0);

    println!("[PASS] criterion 10: persistence rmse oracle on 100 random series");
}
