use cubescore_core::dataset::Dataset;
use cubescore_core::eval::{evaluate, stratified_folds, train_model, ConfusionMatrix, Example, Metrics};
use cubescore_core::features::{build_feature_rows, resample_linear, segment_count};
use cubescore_core::nn::model::{forward_batch, loss_and_grads, SeqBatch};
use cubescore_core::nn::{init_params, ModelParams, Precision, TrainConfig};
use cubescore_core::stats::{correlation_strength, p_value_two_tailed, pearson_r, Strength};
use cubescore_core::{
    parse_trajectory_json, serialize_trajectory, split_dataset, FeatureMatrix, FeatureSet, ScoreLabel, Split,
    SubjectMeta, TrajectoryPoint, TrajectorySample,
};
use ndarray::Array2;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn points() -> impl Strategy<Value = Vec<TrajectoryPoint>> {
    prop::collection::vec((-1e4f64..1e4, -1e4f64..1e4, 0.0f64..50.0, prop::option::of(0u32..5)), 2..80).prop_map(
        |steps| {
            let mut t = 0.0;
            steps
                .into_iter()
                .map(|(x, y, dt, stroke)| {
                    t += dt;
                    TrajectoryPoint { x, y, t, stroke_id: stroke }
                })
                .collect()
        },
    )
}

fn meta() -> impl Strategy<Value = SubjectMeta> {
    (prop::option::of(18u32..95), prop::option::of(0u32..22), prop::option::of(prop::bool::ANY)).prop_map(
        |(age, education_years, female)| SubjectMeta {
            age,
            education_years,
            sex: female.map(|f| if f { "F".to_string() } else { "M".to_string() }),
            ..SubjectMeta::default()
        },
    )
}

fn labeled(counts: &[usize]) -> Dataset {
    let mut samples = Vec::new();
    for (class, &n) in counts.iter().enumerate() {
        for k in 0..n {
            let pts = vec![TrajectoryPoint::new(0.0, 0.0, 0.0), TrajectoryPoint::new(1.0, 1.0, 8.0)];
            samples.push(
                TrajectorySample::new(format!("c{class}-{k}"), pts, ScoreLabel::new(class as u8), SubjectMeta::default())
                    .unwrap(),
            );
        }
    }
    Dataset::new(samples).unwrap()
}

fn tiny_config(dropout_rate: f64) -> TrainConfig {
    TrainConfig {
        num_layers: 2,
        hidden_dim: 3,
        attention_dim: 4,
        dropout_rate,
        precision: Precision::F64,
        ..TrainConfig::default()
    }
}

fn sequences(seed: u64, n: usize, steps: usize, dim: usize) -> Vec<Array2<f64>> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Array2::from_shape_simple_fn((steps, dim), || rng.random_range(-2.0..2.0)))
        .collect()
}

fn label_vec(raw: &[u8]) -> Vec<ScoreLabel> {
    raw.iter().map(|&l| ScoreLabel::new(l).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(48) })]

    #[test]
    fn json_round_trip_is_identity(pts in points(), label in prop::option::of(0u8..4), meta in meta()) {
        let sample = TrajectorySample::new("p", pts, label.and_then(ScoreLabel::new), meta).unwrap();
        let text = serialize_trajectory(&sample);
        prop_assert_eq!(&parse_trajectory_json(&text).unwrap(), &sample);
        prop_assert_eq!(serialize_trajectory(&parse_trajectory_json(&text).unwrap()), text);
    }

    #[test]
    fn accepted_samples_are_ordered_and_finite(raw in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3, -5.0f64..100.0), 0..30)) {
        let pts: Vec<TrajectoryPoint> = raw.iter().map(|&(x, y, t)| TrajectoryPoint::new(x, y, t)).collect();
        if let Ok(s) = TrajectorySample::new("v", pts, None, SubjectMeta::default()) {
            prop_assert!(s.points.windows(2).all(|w| w[0].t <= w[1].t));
            prop_assert!(s.points.iter().all(|p| p.x.is_finite() && p.y.is_finite() && p.t >= 0.0));
        }
    }

    #[test]
    fn split_is_deterministic_and_stratified(counts in prop::collection::vec(3usize..60, 4), seed in 0u64..1000) {
        let a = split_dataset(labeled(&counts), (0.8, 0.1, 0.1), seed).unwrap();
        let b = split_dataset(labeled(&counts), (0.8, 0.1, 0.1), seed).unwrap();
        prop_assert_eq!(a.splits(), b.splits());
        let train = a.split_class_counts(Split::Train);
        for (c, &n) in counts.iter().enumerate() {
            prop_assert!((train[c] as f64 - 0.8 * n as f64).abs() <= 1.0, "class {} of {}: {}", c, n, train[c]);
        }
    }

    #[test]
    fn segment_count_is_floor_of_fifths(n in 10usize..400) {
        let pts = (0..n).map(|i| TrajectoryPoint::new(i as f64, (i * i % 7) as f64, i as f64 * 8.0)).collect();
        let s = TrajectorySample::new("s", pts, None, SubjectMeta::default()).unwrap();
        prop_assert_eq!(segment_count(&s), n / 5);
        let rows = build_feature_rows(&s).unwrap();
        prop_assert_eq!(rows.len(), n / 5);
        prop_assert!(rows.iter().all(|r| r.to_array().iter().all(|v| v.is_finite())));
    }

    #[test]
    fn resampling_constants_stays_constant(c in -1e3f64..1e3, from in 1usize..50, to in 1usize..90) {
        prop_assume!(from >= 2 || to == 1);
        let out = resample_linear(&vec![c; from], to);
        prop_assert!(out.iter().all(|&v| v == c));
    }

    #[test]
    fn pearson_is_symmetric_and_affine_invariant(
        xy in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40),
        a in 0.1f64..10.0,
        b in -50.0f64..50.0,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        let Ok(r) = pearson_r(&x, &y) else { return Ok(()); };
        prop_assert!((-1.0..=1.0).contains(&r));
        prop_assert!((pearson_r(&y, &x).unwrap() - r).abs() < 1e-12);
        let scaled: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        prop_assert!((pearson_r(&scaled, &y).unwrap() - r).abs() < 1e-9);
        let flipped: Vec<f64> = x.iter().map(|v| -a * v + b).collect();
        prop_assert!((pearson_r(&flipped, &y).unwrap() + r).abs() < 1e-9);
    }

    #[test]
    fn p_value_is_monotone(r1 in 0.0f64..0.99, r2 in 0.0f64..0.99, n in 3usize..300) {
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let p_lo = p_value_two_tailed(lo, n).unwrap();
        let p_hi = p_value_two_tailed(hi, n).unwrap();
        prop_assert!(p_hi <= p_lo + 1e-12);
        prop_assert!((0.0..=1.0).contains(&p_hi));
        prop_assert!((p_value_two_tailed(-hi, n).unwrap() - p_hi).abs() < 1e-12);
        if hi > 0.0 {
            prop_assert!(p_value_two_tailed(hi, n + 1).unwrap() <= p_hi + 1e-12);
        }
    }

    #[test]
    fn strength_thresholds(r in -1.0f64..=1.0) {
        let expected = if r.abs() >= 0.7 {
            Strength::Strong
        } else if r.abs() >= 0.3 {
            Strength::Moderate
        } else {
            Strength::Weak
        };
        prop_assert_eq!(correlation_strength(r), expected);
    }

    #[test]
    fn metrics_are_bounded(pairs in prop::collection::vec((0u8..4, 0u8..4), 1..200)) {
        let truth: Vec<u8> = pairs.iter().map(|p| p.0).collect();
        let pred: Vec<u8> = pairs.iter().map(|p| p.1).collect();
        let m = Metrics::from_predictions(&label_vec(&truth), &label_vec(&pred));
        for v in [m.accuracy, m.precision_macro, m.f1_macro] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert_eq!(m.confusion.total(), pairs.len() as u64);
        let perfect = Metrics::from_predictions(&label_vec(&truth), &label_vec(&truth));
        prop_assert_eq!(perfect.accuracy, 1.0);
    }

    #[test]
    fn folds_partition_the_pool(counts in prop::collection::vec(5usize..30, 4), k in 2usize..6, seed in 0u64..100) {
        let mut raw = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            raw.extend(std::iter::repeat_n(c as u8, n));
        }
        let labels = label_vec(&raw);
        let folds = stratified_folds(&labels, k, seed).unwrap();
        let mut seen = vec![0; labels.len()];
        for f in &folds {
            for &i in &f.validate {
                seen[i] += 1;
            }
            prop_assert_eq!(f.train.len() + f.validate.len(), labels.len());
            for c in 0..4u8 {
                let in_fold = f.validate.iter().filter(|&&i| raw[i] == c).count() as f64;
                prop_assert!((in_fold - counts[c as usize] as f64 / k as f64).abs() <= 1.0);
            }
        }
        prop_assert!(seen.iter().all(|&s| s == 1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(12) })]

    #[test]
    fn batch_permutation_leaves_loss_and_gradients(seed in 0u64..1000, rot in 1usize..5) {
        let params: ModelParams<f64> = init_params(&tiny_config(0.0), 3, seed);
        let seqs = sequences(seed, 5, 4, 3);
        let labels = label_vec(&[0, 1, 2, 3, 1]);
        let views: Vec<_> = seqs.iter().map(|x| x.view()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (loss, grads, cache) =
            loss_and_grads(&params, &SeqBatch::from_sequences(&views).unwrap(), &labels, false, &mut rng).unwrap();
        prop_assert!(loss >= 0.0);
        for row in cache.probs.rows() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-6);
        }

        let mut order: Vec<usize> = (0..5).collect();
        order.rotate_left(rot);
        let pviews: Vec<_> = order.iter().map(|&i| views[i]).collect();
        let plabels: Vec<ScoreLabel> = order.iter().map(|&i| labels[i]).collect();
        let (ploss, pgrads, _) =
            loss_and_grads(&params, &SeqBatch::from_sequences(&pviews).unwrap(), &plabels, false, &mut rng).unwrap();
        prop_assert!((loss - ploss).abs() < 1e-12);
        for ((name, a), (_, b)) in grads.blocks().iter().zip(pgrads.blocks().iter()) {
            let diff = (a - b).mapv(f64::abs).fold(0.0f64, |m, &v| m.max(v));
            prop_assert!(diff < 1e-12, "{}: {:e}", name, diff);
        }
    }

    #[test]
    fn logit_shift_keeps_predictions(seed in 0u64..1000, shift in -20.0f64..20.0) {
        let params: ModelParams<f64> = init_params(&tiny_config(0.3), 3, seed);
        let mut shifted = params.clone();
        shifted.head.b.mapv_inplace(|b| b + shift);
        let seqs = sequences(seed + 1, 4, 5, 3);
        let views: Vec<_> = seqs.iter().map(|x| x.view()).collect();
        let batch = SeqBatch::from_sequences(&views).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = forward_batch(&params, &batch, false, &mut rng).unwrap();
        let b = forward_batch(&shifted, &batch, false, &mut rng).unwrap();
        for (pa, pb) in a.probs.rows().into_iter().zip(b.probs.rows()) {
            prop_assert_eq!(
                cubescore_core::nn::model::argmax(pa),
                cubescore_core::nn::model::argmax(pb)
            );
            prop_assert!((&pa - &pb).mapv(f64::abs).sum() < 1e-9);
        }
    }

    #[test]
    fn without_dropout_training_mode_is_inference(seed in 0u64..1000) {
        let params: ModelParams<f64> = init_params(&tiny_config(0.0), 3, seed);
        let seqs = sequences(seed + 2, 3, 6, 3);
        let views: Vec<_> = seqs.iter().map(|x| x.view()).collect();
        let batch = SeqBatch::from_sequences(&views).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train = forward_batch(&params, &batch, true, &mut rng).unwrap();
        let infer = forward_batch(&params, &batch, false, &mut rng).unwrap();
        prop_assert!(train.mask.is_none());
        prop_assert_eq!(train.probs, infer.probs);
    }
}

#[test]
fn evaluation_ignores_sample_order() {
    let data: Vec<Example> = (0..24)
        .map(|i| Example {
            matrix: FeatureMatrix {
                values: Array2::from_shape_fn((2, 5), |(f, t)| ((i * 7 + f * 3 + t) as f64 * 0.31).sin() + (i % 4) as f64),
                feature_set: FeatureSet::M,
            },
            label: ScoreLabel::new((i % 4) as u8).unwrap(),
        })
        .collect();
    let config = TrainConfig {
        hidden_dim: 4,
        attention_dim: 4,
        epochs: 3,
        batch_size: 8,
        ..TrainConfig::with_seed(5)
    };
    let (model, _) = train_model(&data, &[], &config).unwrap();
    let forward = evaluate(&model, &data).unwrap();
    let mut reversed = data.clone();
    reversed.reverse();
    reversed.rotate_left(5);
    assert_eq!(evaluate(&model, &reversed).unwrap(), forward);
}

#[test]
fn constant_predictor_on_balanced_set_scores_a_quarter() {
    let truth = label_vec(&[0, 1, 2, 3, 0, 1, 2, 3]);
    let m = Metrics::from_confusion(ConfusionMatrix::from_pairs(truth.iter().map(|&t| (t, ScoreLabel::new(2).unwrap()))));
    assert_eq!(m.accuracy, 0.25);
}
