//! Cohort statistics: score distributions per group and Pearson correlation
//! with a two-tailed t-test.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::StatsError;
use crate::trajectory::{ClinicalGroup, ScoreLabel, TrajectorySample};

pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFewObservations(n));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    // Exact linear relations can land a few ulps short of ±1.
    Ok(if 1.0 - r.abs() < 1e-14 { r.signum() } else { r })
}

/// Lanczos approximation (g = 7, 9 terms).
fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Continued fraction for the incomplete beta, modified Lentz method.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-12;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

pub fn t_statistic(r: f64, n: usize) -> f64 {
    r * ((n as f64 - 2.0) / (1.0 - r * r)).sqrt()
}

/// Two-tailed p-value of the t-test for a Pearson coefficient,
/// `df = n - 2`.
pub fn p_value_two_tailed(r: f64, n: usize) -> Result<f64, StatsError> {
    if n < 3 {
        return Err(StatsError::TooFewObservations(n));
    }
    if !(r.abs() < 1.0) {
        return Err(StatsError::DomainError(r));
    }
    let df = (n - 2) as f64;
    let t = t_statistic(r, n);
    let p = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
    Ok(p.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Significance {
    #[serde(rename = "***")]
    ThreeStars,
    #[serde(rename = "**")]
    TwoStars,
    #[serde(rename = "*")]
    OneStar,
    #[serde(rename = "")]
    NotSignificant,
}

impl Significance {
    pub fn as_str(self) -> &'static str {
        match self {
            Significance::ThreeStars => "***",
            Significance::TwoStars => "**",
            Significance::OneStar => "*",
            Significance::NotSignificant => "",
        }
    }
}

impl fmt::Display for Significance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn significance_stars(p: f64) -> Significance {
    if p < 0.001 {
        Significance::ThreeStars
    } else if p < 0.01 {
        Significance::TwoStars
    } else if p < 0.05 {
        Significance::OneStar
    } else {
        Significance::NotSignificant
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strength {
    Strong,
    Moderate,
    Weak,
}

pub fn correlation_strength(r: f64) -> Strength {
    let a = r.abs();
    if a >= 0.7 {
        Strength::Strong
    } else if a >= 0.3 {
        Strength::Moderate
    } else {
        Strength::Weak
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub n: usize,
    pub t_stat: f64,
    pub p_two_tailed: f64,
    pub stars: Significance,
    pub strength: Strength,
    /// Set when `|r| = 1`, where the p-value is reported as 0 by convention.
    pub perfect: bool,
}

pub fn correlate(x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    let r = pearson_r(x, y)?;
    let n = x.len();
    let (t_stat, p, perfect) = if r.abs() >= 1.0 {
        (r.signum() * f64::INFINITY, 0.0, true)
    } else {
        (t_statistic(r, n), p_value_two_tailed(r, n)?, false)
    };
    Ok(CorrelationResult {
        r,
        n,
        t_stat,
        p_two_tailed: p,
        stars: significance_stars(p),
        strength: correlation_strength(r),
        perfect,
    })
}

/// Education level labels and the years of schooling they stand for.
pub const EDUCATION_LEVELS: [(&str, u32); 6] = [
    ("illiterate", 0),
    ("primary", 6),
    ("middle", 9),
    ("high", 12),
    ("university", 16),
    ("postgraduate", 19),
];

pub fn education_years_from_label(label: &str) -> Option<u32> {
    let key = label.trim().to_ascii_lowercase();
    EDUCATION_LEVELS
        .iter()
        .find(|(name, _)| *name == key)
        .map(|&(_, years)| years)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    ClinicalGroup,
    AgeBand,
    EducationLevel,
}

impl Grouping {
    pub const ALL: [Grouping; 3] = [Grouping::ClinicalGroup, Grouping::AgeBand, Grouping::EducationLevel];

    pub fn name(self) -> &'static str {
        match self {
            Grouping::ClinicalGroup => "group",
            Grouping::AgeBand => "age",
            Grouping::EducationLevel => "education",
        }
    }

    /// Group names in display order.
    pub fn groups(self) -> &'static [&'static str] {
        match self {
            Grouping::ClinicalGroup => &["MCI", "HC"],
            Grouping::AgeBand => &["<=40", "41-60", "61-70", ">70"],
            Grouping::EducationLevel => &["0-6", "7-9", "10-12", ">=13"],
        }
    }

    fn group_of(self, sample: &TrajectorySample) -> Option<usize> {
        match self {
            Grouping::ClinicalGroup => sample.meta.group.map(|g| match g {
                ClinicalGroup::Mci => 0,
                ClinicalGroup::HealthyControl => 1,
            }),
            Grouping::AgeBand => sample.meta.age.map(|a| match a {
                0..=40 => 0,
                41..=60 => 1,
                61..=70 => 2,
                _ => 3,
            }),
            Grouping::EducationLevel => sample.meta.education_years.map(|e| match e {
                0..=6 => 0,
                7..=9 => 1,
                10..=12 => 2,
                _ => 3,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub group: String,
    pub counts: [u64; 4],
    pub percentages: [f64; 4],
}

impl DistributionRow {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Percentage of the row scoring 0 or 1.
    pub fn low_share(&self) -> f64 {
        self.percentages[0] + self.percentages[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub grouping: Grouping,
    pub rows: Vec<DistributionRow>,
}

impl DistributionTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group,n,score_0,score_1,score_2,score_3,pct_0,pct_1,pct_2,pct_3\n");
        for r in &self.rows {
            let c = r.counts;
            let p = r.percentages;
            out.push_str(&format!(
                "{},{},{},{},{},{},{:.2},{:.2},{:.2},{:.2}\n",
                r.group,
                r.total(),
                c[0],
                c[1],
                c[2],
                c[3],
                p[0],
                p[1],
                p[2],
                p[3]
            ));
        }
        out
    }

    pub fn row(&self, group: &str) -> Option<&DistributionRow> {
        self.rows.iter().find(|r| r.group == group)
    }
}

/// Counts and row percentages of each score per group. Groups without
/// samples are left out.
pub fn distribution_table(samples: &[TrajectorySample], grouping: Grouping) -> Result<DistributionTable, StatsError> {
    let names = grouping.groups();
    let mut counts = vec![[0u64; 4]; names.len()];
    for s in samples {
        let label = s.label.ok_or_else(|| StatsError::MissingMetadata(s.id.clone()))?;
        let g = grouping
            .group_of(s)
            .ok_or_else(|| StatsError::MissingMetadata(s.id.clone()))?;
        counts[g][label.index()] += 1;
    }
    let rows = names
        .iter()
        .zip(counts)
        .filter(|(_, c)| c.iter().sum::<u64>() > 0)
        .map(|(name, c)| {
            let total = c.iter().sum::<u64>() as f64;
            DistributionRow {
                group: name.to_string(),
                counts: c,
                percentages: c.map(|k| 100.0 * k as f64 / total),
            }
        })
        .collect();
    Ok(DistributionTable { grouping, rows })
}

/// Correlations of the score with age and with years of education.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub task: String,
    pub result: CorrelationResult,
}

pub fn score_correlations(samples: &[TrajectorySample]) -> Result<Vec<CorrelationRow>, StatsError> {
    type Pick = fn(&TrajectorySample) -> Option<u32>;
    let pairs: [(&str, Pick); 2] = [
        ("cct_vs_age", |s| s.meta.age),
        ("cct_vs_education", |s| s.meta.education_years),
    ];
    pairs
        .iter()
        .map(|(task, pick)| {
            let mut x = Vec::with_capacity(samples.len());
            let mut y = Vec::with_capacity(samples.len());
            for s in samples {
                let score: ScoreLabel = s.label.ok_or_else(|| StatsError::MissingMetadata(s.id.clone()))?;
                let v = pick(s).ok_or_else(|| StatsError::MissingMetadata(s.id.clone()))?;
                x.push(score.value() as f64);
                y.push(v as f64);
            }
            Ok(CorrelationRow {
                task: task.to_string(),
                result: correlate(&x, &y)?,
            })
        })
        .collect()
}

pub fn correlations_csv(rows: &[CorrelationRow]) -> String {
    let mut out = String::from("task,r,p,stars\n");
    for row in rows {
        out.push_str(&format!(
            "{},{:.4},{:.4},{}\n",
            row.task, row.result.r, row.result.p_two_tailed, row.result.stars
        ));
    }
    out
}
