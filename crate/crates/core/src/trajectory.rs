//! Pen trajectories: points, labels, subject metadata and the canonical JSON
//! document format.
//!
//! A document looks like
//!
//! ```json
//! {"id": "s1", "label": 3,
//!  "meta": {"age": 25, "education_years": 16, "group": "HC", "sex": "F"},
//!  "points": [{"x": 0.0, "y": 0.0, "t": 0.0, "stroke_id": 0}, ...]}
//! ```
//!
//! `label`, `meta` and `stroke_id` may be omitted or `null`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::TrajectoryError;

pub const MAX_AGE: u32 = 130;
pub const MAX_EDUCATION_YEARS: u32 = 30;

/// One sampled pen position. `t` is milliseconds since the start of drawing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    #[serde(default)]
    pub stroke_id: Option<u32>,
}

impl TrajectoryPoint {
    pub fn new(x: f64, y: f64, t: f64) -> Self {
        Self {
            x,
            y,
            t,
            stroke_id: None,
        }
    }

    pub fn with_stroke(mut self, stroke_id: u32) -> Self {
        self.stroke_id = Some(stroke_id);
        self
    }
}

/// Fine-grained cube copying score, 0 (no 2D structure) to 3 (complete cube).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ScoreLabel(u8);

impl ScoreLabel {
    pub const NUM_CLASSES: usize = 4;
    pub const ALL: [ScoreLabel; 4] = [ScoreLabel(0), ScoreLabel(1), ScoreLabel(2), ScoreLabel(3)];

    pub fn new(value: u8) -> Option<Self> {
        (value < Self::NUM_CLASSES as u8).then_some(ScoreLabel(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TryFrom<u8> for ScoreLabel {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        ScoreLabel::new(value).ok_or_else(|| format!("score label must be 0..=3, got {value}"))
    }
}

impl From<ScoreLabel> for u8 {
    fn from(label: ScoreLabel) -> u8 {
        label.0
    }
}

impl fmt::Display for ScoreLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClinicalGroup {
    #[serde(rename = "MCI")]
    Mci,
    #[serde(rename = "HC")]
    HealthyControl,
}

impl fmt::Display for ClinicalGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClinicalGroup::Mci => "MCI",
            ClinicalGroup::HealthyControl => "HC",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectMeta {
    #[serde(default)]
    pub age: Option<u32>,
    #[serde(default)]
    pub education_years: Option<u32>,
    #[serde(default)]
    pub group: Option<ClinicalGroup>,
    #[serde(default)]
    pub sex: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub id: String,
    #[serde(default)]
    pub label: Option<ScoreLabel>,
    #[serde(default)]
    pub meta: SubjectMeta,
    pub points: Vec<TrajectoryPoint>,
}

impl TrajectorySample {
    /// Builds a sample and checks every invariant.
    pub fn new(
        id: impl Into<String>,
        points: Vec<TrajectoryPoint>,
        label: Option<ScoreLabel>,
        meta: SubjectMeta,
    ) -> Result<Self, TrajectoryError> {
        let sample = Self {
            id: id.into(),
            label,
            meta,
            points,
        };
        sample.validate()?;
        Ok(sample)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self) -> Result<(), TrajectoryError> {
        use TrajectoryError::InvariantViolation as Bad;

        if self.points.len() < 2 {
            return Err(Bad(format!(
                "trajectory needs at least 2 points, got {}",
                self.points.len()
            )));
        }
        for (i, p) in self.points.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.t.is_finite()) {
                return Err(Bad(format!("point {i} has a non-finite value")));
            }
            if p.t < 0.0 {
                return Err(Bad(format!("point {i} has negative timestamp {}", p.t)));
            }
        }
        if let Some(i) = self.points.windows(2).position(|w| w[1].t < w[0].t) {
            return Err(Bad(format!(
                "timestamps decrease between points {i} and {}",
                i + 1
            )));
        }
        if let Some(age) = self.meta.age {
            if age > MAX_AGE {
                return Err(Bad(format!("age {age} outside [0, {MAX_AGE}]")));
            }
        }
        if let Some(edu) = self.meta.education_years {
            if edu > MAX_EDUCATION_YEARS {
                return Err(Bad(format!(
                    "education_years {edu} outside [0, {MAX_EDUCATION_YEARS}]"
                )));
            }
        }
        Ok(())
    }
}

/// Parses and validates one trajectory document.
pub fn parse_trajectory_json(text: &str) -> Result<TrajectorySample, TrajectoryError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| TrajectoryError::MalformedJson(e.to_string()))?;
    let sample: TrajectorySample = serde_json::from_value(value)
        .map_err(|e| TrajectoryError::SchemaViolation(e.to_string()))?;
    sample.validate()?;
    Ok(sample)
}

/// Renders a sample as a single-line canonical JSON document.
pub fn serialize_trajectory(sample: &TrajectorySample) -> String {
    serde_json::to_string(sample).expect("trajectory samples always serialize")
}
