use cubescore_core::eval::{knn_baseline, PreparedSplit};
use cubescore_core::synth::{generate_dataset, generate_sample, SynthConfig};
use cubescore_core::{split_dataset, FeatureSet, ScoreLabel, TrajectorySample};

#[test]
fn benchmark_beats_chance_with_nearest_neighbours() {
    let data = split_dataset(generate_dataset(&SynthConfig::new(42, 100)), (0.8, 0.1, 0.1), 42).unwrap();
    assert_eq!(data.len(), 400);
    let prepared = PreparedSplit::from_dataset(&data, false).unwrap();
    for set in FeatureSet::ALL {
        let (train, val, test) = prepared.select(set);
        let held: Vec<_> = val.into_iter().chain(test).collect();
        assert_eq!(held.len(), 80);
        let m = knn_baseline(&train, &held, 5).unwrap();
        assert!(m.accuracy > 0.4, "{set:?}: {}", m.accuracy);
    }
}

fn mean_over(category: u8, f: impl Fn(&TrajectorySample) -> f64) -> f64 {
    let config = SynthConfig::new(3, 1);
    let label = ScoreLabel::new(category).unwrap();
    (0..40).map(|i| f(&generate_sample(label, &config, i))).sum::<f64>() / 40.0
}

#[test]
fn hesitant_categories_rest_more_often() {
    // Rests inside a stroke leave no samples, only a long time step.
    let rests = |s: &TrajectorySample| {
        s.points
            .windows(2)
            .filter(|w| w[0].stroke_id == w[1].stroke_id && w[1].t - w[0].t > 15.0)
            .count() as f64
    };
    let (r1, r3) = (mean_over(1, rests), mean_over(3, rests));
    assert!(r1 > r3, "{r1} vs {r3}");
}

#[test]
fn cubes_have_more_strokes_than_rectangles() {
    let strokes = |s: &TrajectorySample| {
        let mut ids: Vec<_> = s.points.iter().map(|p| p.stroke_id).collect();
        ids.dedup();
        ids.len() as f64
    };
    assert!(mean_over(3, strokes) > mean_over(1, strokes) + 2.0);
    assert!(mean_over(2, strokes) > mean_over(1, strokes) + 2.0);
}
