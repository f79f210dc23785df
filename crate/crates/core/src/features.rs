//! Segment-based spatial and motion features (SCSM) and length normalization.
//!
//! A trajectory is cut into disjoint blocks of five consecutive points; the
//! trailing `L mod 5` points are dropped. Each block yields 14 numbers:
//!
//! | rows   | feature |
//! |--------|---------|
//! | 0..10  | interleaved coordinates `x1, y1, ..., x5, y5` |
//! | 10     | path length inside the block |
//! | 11     | cosine similarity of the coordinate vector with the next block's |
//! | 12     | mean speed, path length over block duration (px/ms) |
//! | 13     | mean of the three central-difference accelerations (px/ms²) |
//!
//! Per-sample rows are stacked into a `14 × n_segments` signal and linearly
//! resampled to a shared length `l_std`.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use ndarray::{s, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::FeatureError;
use crate::trajectory::{ScoreLabel, TrajectoryPoint, TrajectorySample};

pub const SEGMENT_POINTS: usize = 5;
pub const MIN_POINTS: usize = 2 * SEGMENT_POINTS;
pub const NUM_FEATURES: usize = 14;

/// Value used for `sim` when it is undefined (last block, zero vectors).
pub const NEUTRAL_SIMILARITY: f64 = 1.0;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "x1", "y1", "x2", "y2", "x3", "y3", "x4", "y4", "x5", "y5", "dis", "sim", "v", "a",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum FeatureSet {
    /// Coordinates, distance and cosine similarity.
    #[serde(rename = "SCS")]
    Scs,
    /// Velocity and acceleration.
    #[serde(rename = "M")]
    M,
    #[default]
    #[serde(rename = "SCSM")]
    Scsm,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 3] = [FeatureSet::Scs, FeatureSet::M, FeatureSet::Scsm];

    pub fn rows(self) -> Range<usize> {
        match self {
            FeatureSet::Scs => 0..12,
            FeatureSet::M => 12..14,
            FeatureSet::Scsm => 0..14,
        }
    }

    pub fn dim(self) -> usize {
        self.rows().len()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::Scs => "SCS",
            FeatureSet::M => "M",
            FeatureSet::Scsm => "SCSM",
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "SCS" => Ok(FeatureSet::Scs),
            "M" => Ok(FeatureSet::M),
            "SCSM" => Ok(FeatureSet::Scsm),
            other => Err(format!("unknown feature set `{other}` (expected SCS, M or SCSM)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationSpec {
    pub l_std: usize,
    pub feature_set: FeatureSet,
    /// Per-sample min-max scaling of x and y to [0, 1] before extraction.
    #[serde(default)]
    pub normalize_xy: bool,
}

impl NormalizationSpec {
    pub fn new(l_std: usize, feature_set: FeatureSet) -> Self {
        assert!(l_std >= 2, "l_std must be at least 2");
        Self {
            l_std,
            feature_set,
            normalize_xy: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub index: usize,
    pub points: [TrajectoryPoint; SEGMENT_POINTS],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentFeatureRow {
    pub seg: [f64; 10],
    pub dis: f64,
    pub sim: f64,
    pub v: f64,
    pub a: f64,
}

impl SegmentFeatureRow {
    pub fn to_array(&self) -> [f64; NUM_FEATURES] {
        let mut out = [0.0; NUM_FEATURES];
        out[..10].copy_from_slice(&self.seg);
        out[10] = self.dis;
        out[11] = self.sim;
        out[12] = self.v;
        out[13] = self.a;
        out
    }
}

/// Feature rows × time steps.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Array2<f64>,
    pub feature_set: FeatureSet,
}

impl FeatureMatrix {
    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn l_std(&self) -> usize {
        self.values.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    /// Row-major nested vectors, one inner vector per feature.
    pub fn to_nested(&self) -> Vec<Vec<f64>> {
        self.values.rows().into_iter().map(|r| r.to_vec()).collect()
    }
}

pub fn segment_trajectory(sample: &TrajectorySample) -> Result<Vec<Segment>, FeatureError> {
    segment_points(&sample.points)
}

fn segment_points(points: &[TrajectoryPoint]) -> Result<Vec<Segment>, FeatureError> {
    if points.len() < MIN_POINTS {
        return Err(FeatureError::TooShort {
            points: points.len(),
        });
    }
    Ok(points
        .chunks_exact(SEGMENT_POINTS)
        .enumerate()
        .map(|(index, chunk)| Segment {
            index,
            points: chunk.try_into().expect("chunk has five points"),
        })
        .collect())
}

pub fn seg_vector(segment: &Segment) -> [f64; 10] {
    let mut out = [0.0; 10];
    for (j, p) in segment.points.iter().enumerate() {
        out[2 * j] = p.x;
        out[2 * j + 1] = p.y;
    }
    out
}

fn step_length(a: &TrajectoryPoint, b: &TrajectoryPoint) -> f64 {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    (dx * dx + dy * dy).sqrt()
}

/// Sum of the four step lengths inside the block.
pub fn intra_segment_distance(segment: &Segment) -> f64 {
    segment
        .points
        .windows(2)
        .map(|w| step_length(&w[0], &w[1]))
        .sum()
}

pub fn cosine_similarity(a: &[f64; 10], b: &[f64; 10]) -> Result<f64, FeatureError> {
    let dot: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(FeatureError::DegenerateVector);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

fn safe_div(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn segment_velocity(segment: &Segment) -> f64 {
    let span = segment.points[SEGMENT_POINTS - 1].t - segment.points[0].t;
    safe_div(intra_segment_distance(segment), span)
}

/// Mean of the central-difference accelerations at the three inner points.
///
/// Point speeds are backward differences (`|p_j - p_{j-1}| / (t_j - t_{j-1})`)
/// with the first point's speed fixed at 0. Zero time spans contribute 0.
pub fn segment_acceleration(segment: &Segment) -> f64 {
    let p = &segment.points;
    let mut speed = [0.0; SEGMENT_POINTS];
    for j in 1..SEGMENT_POINTS {
        speed[j] = safe_div(step_length(&p[j - 1], &p[j]), p[j].t - p[j - 1].t);
    }
    let total: f64 = (1..SEGMENT_POINTS - 1)
        .map(|j| safe_div(speed[j + 1] - speed[j - 1], p[j + 1].t - p[j - 1].t))
        .sum();
    total / 3.0
}

pub fn build_feature_rows(sample: &TrajectorySample) -> Result<Vec<SegmentFeatureRow>, FeatureError> {
    rows_from_points(&sample.points)
}

fn rows_from_points(points: &[TrajectoryPoint]) -> Result<Vec<SegmentFeatureRow>, FeatureError> {
    let segments = segment_points(points)?;
    let vectors: Vec<[f64; 10]> = segments.iter().map(seg_vector).collect();
    Ok(segments
        .iter()
        .enumerate()
        .map(|(i, segment)| {
            let sim = vectors
                .get(i + 1)
                .and_then(|next| cosine_similarity(&vectors[i], next).ok())
                .unwrap_or(NEUTRAL_SIMILARITY);
            SegmentFeatureRow {
                seg: vectors[i],
                dis: intra_segment_distance(segment),
                sim,
                v: segment_velocity(segment),
                a: segment_acceleration(segment),
            }
        })
        .collect())
}

pub fn segment_count(sample: &TrajectorySample) -> usize {
    sample.points.len() / SEGMENT_POINTS
}

/// Mean segment count over the training samples, rounded half away from zero
/// and floored at 2.
pub fn compute_std_length<'a>(
    training_samples: impl IntoIterator<Item = &'a TrajectorySample>,
) -> Result<usize, FeatureError> {
    let mut total = 0usize;
    let mut n = 0usize;
    for s in training_samples {
        if s.points.len() < MIN_POINTS {
            return Err(FeatureError::Sample {
                id: s.id.clone(),
                source: Box::new(FeatureError::TooShort {
                    points: s.points.len(),
                }),
            });
        }
        total += segment_count(s);
        n += 1;
    }
    if n == 0 {
        return Err(FeatureError::EmptyInput);
    }
    Ok(((total as f64 / n as f64).round() as usize).max(2))
}

/// Linear interpolation of `values` onto `len` evenly spaced positions
/// spanning `[0, values.len() - 1]`. Endpoints are reproduced exactly and
/// output never leaves the range of its two neighbours.
pub fn resample_linear(values: &[f64], len: usize) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 1 && len >= 1);
    if n == len {
        return values.to_vec();
    }
    if n == 1 || len == 1 {
        return vec![values[0]; len];
    }
    let last = (n - 1) as f64;
    let denom = (len - 1) as f64;
    (0..len)
        .map(|k| {
            let pos = k as f64 * last / denom;
            let i = (pos.floor() as usize).min(n - 1);
            if i == n - 1 {
                return values[n - 1];
            }
            let frac = pos - i as f64;
            let (a, b) = (values[i], values[i + 1]);
            let v = a + (b - a) * frac;
            v.clamp(a.min(b), a.max(b))
        })
        .collect()
}

/// Stacks rows into a 14 × `l_std` matrix, resampling each feature along the
/// segment axis. The result always carries all 14 features.
pub fn resample_to_std_length(
    rows: &[SegmentFeatureRow],
    spec: &NormalizationSpec,
) -> Result<FeatureMatrix, FeatureError> {
    if rows.len() < 2 {
        return Err(FeatureError::TooFewSegments(rows.len()));
    }
    let arrays: Vec<[f64; NUM_FEATURES]> = rows.iter().map(|r| r.to_array()).collect();
    let mut values = Array2::zeros((NUM_FEATURES, spec.l_std));
    let mut signal = vec![0.0; arrays.len()];
    for f in 0..NUM_FEATURES {
        for (slot, row) in signal.iter_mut().zip(&arrays) {
            *slot = row[f];
        }
        let resampled = resample_linear(&signal, spec.l_std);
        values
            .row_mut(f)
            .iter_mut()
            .zip(resampled)
            .for_each(|(dst, v)| *dst = v);
    }
    Ok(FeatureMatrix {
        values,
        feature_set: FeatureSet::Scsm,
    })
}

/// Keeps the rows of `set` from a full 14-row matrix.
pub fn select_feature_set(matrix: &FeatureMatrix, set: FeatureSet) -> FeatureMatrix {
    assert_eq!(
        matrix.feature_set,
        FeatureSet::Scsm,
        "feature selection needs the full 14-row matrix"
    );
    FeatureMatrix {
        values: matrix.values.slice(s![set.rows(), ..]).to_owned(),
        feature_set: set,
    }
}

fn normalized_points(points: &[TrajectoryPoint]) -> Vec<TrajectoryPoint> {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in points {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let scale = |v: f64, lo: f64, hi: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
    points
        .iter()
        .map(|p| TrajectoryPoint {
            x: scale(p.x, x0, x1),
            y: scale(p.y, y0, y1),
            ..*p
        })
        .collect()
}

/// Full per-sample pipeline: optional xy scaling, rows, resampling, selection.
pub fn extract_matrix(
    sample: &TrajectorySample,
    spec: &NormalizationSpec,
) -> Result<FeatureMatrix, FeatureError> {
    let rows = if spec.normalize_xy {
        rows_from_points(&normalized_points(&sample.points))?
    } else {
        build_feature_rows(sample)?
    };
    let full = resample_to_std_length(&rows, spec)?;
    Ok(if spec.feature_set == FeatureSet::Scsm {
        full
    } else {
        select_feature_set(&full, spec.feature_set)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedSample {
    pub id: String,
    pub matrix: FeatureMatrix,
    pub label: Option<ScoreLabel>,
}

/// Extracts every sample in order; the first failure is reported with its id.
pub fn batch_extract<'a>(
    samples: impl IntoIterator<Item = &'a TrajectorySample>,
    spec: &NormalizationSpec,
) -> Result<Vec<ExtractedSample>, FeatureError> {
    samples
        .into_iter()
        .map(|s| {
            extract_matrix(s, spec)
                .map(|matrix| ExtractedSample {
                    id: s.id.clone(),
                    matrix,
                    label: s.label,
                })
                .map_err(|e| FeatureError::Sample {
                    id: s.id.clone(),
                    source: Box::new(e),
                })
        })
        .collect()
}

/// One line of the `extract` output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub id: String,
    pub label: Option<ScoreLabel>,
    pub matrix: Vec<Vec<f64>>,
    pub l_std: usize,
    pub feature_set: FeatureSet,
}

impl From<&ExtractedSample> for FeatureRecord {
    fn from(e: &ExtractedSample) -> Self {
        Self {
            id: e.id.clone(),
            label: e.label,
            matrix: e.matrix.to_nested(),
            l_std: e.matrix.l_std(),
            feature_set: e.matrix.feature_set,
        }
    }
}
