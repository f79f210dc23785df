#[path = "common/t_oracle.rs"]
mod t_oracle;

use cubescore_core::stats::{
    correlate, distribution_table, p_value_two_tailed, pearson_r, significance_stars, t_statistic, Grouping,
    Significance,
};
use cubescore_core::synth::{generate_dataset, SynthConfig};

#[test]
fn oracle_matches_closed_forms() {
    // df = 1 is Cauchy: p = 1 - 2 atan(t) / pi.
    let cauchy = 1.0 - 2.0 * 1.5f64.atan() / std::f64::consts::PI;
    assert!((t_oracle::p_two_tailed(1.5, 1) - cauchy).abs() < 1e-10);
    // df = 2: p = 1 - t / sqrt(2 + t^2).
    assert!((t_oracle::p_two_tailed(0.7, 2) - (1.0 - 0.7 / (2.0f64 + 0.49).sqrt())).abs() < 1e-10);
}

#[test]
fn worked_example_matches_numeric_integration() {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0];
    let y = [2.0, 1.0, 4.0, 3.0, 5.0];
    let r = pearson_r(&x, &y).unwrap();
    assert!((r - 0.8).abs() < 1e-12);
    let t = t_statistic(r, 5);
    assert!((t - 3f64.sqrt() * 0.8 / 0.6).abs() < 1e-12);
    let p = p_value_two_tailed(0.8, 5).unwrap();
    assert!((p - t_oracle::p_two_tailed(t, 3)).abs() < 1e-6, "p = {p}");
    assert!((p - 0.1041).abs() < 5e-4);
}

#[test]
fn p_values_track_the_oracle_across_sizes() {
    for n in [4usize, 7, 12, 30, 120] {
        for r in [0.05, 0.2, 0.45, 0.7, 0.93] {
            let oracle = t_oracle::p_two_tailed(t_statistic(r, n), n as u32 - 2);
            let p = p_value_two_tailed(r, n).unwrap();
            assert!((p - oracle).abs() < 1e-6, "r {r} n {n}: {p} vs {oracle}");
        }
    }
}

#[test]
fn table_rows_get_their_stars() {
    assert_eq!(significance_stars(0.0122), Significance::OneStar);
    assert_eq!(significance_stars(0.1031), Significance::NotSignificant);
    assert_eq!(correlate(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap().stars, Significance::NotSignificant);
}

#[test]
fn impaired_group_scores_lower() {
    let data = generate_dataset(&SynthConfig::new(9, 120));
    let table = distribution_table(data.samples(), Grouping::ClinicalGroup).unwrap();
    let mci = table.row("MCI").unwrap();
    let hc = table.row("HC").unwrap();
    assert!(mci.low_share() > hc.low_share(), "{} vs {}", mci.low_share(), hc.low_share());
    assert_eq!(mci.total() + hc.total(), 480);
    for row in &table.rows {
        assert!((row.percentages.iter().sum::<f64>() - 100.0).abs() < 1e-9);
    }
}
