//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each operation is a plain function from strings and numbers to a JSON
//! string so it can be tested natively; the `#[wasm_bindgen]` wrappers only
//! convert errors.

use cubescore_core::features::{
    build_feature_rows, extract_matrix, resample_linear, segment_trajectory, FEATURE_NAMES,
};
use cubescore_core::synth::{generate_sample, SynthConfig};
use cubescore_core::{parse_trajectory_json, serialize_trajectory, FeatureSet, NormalizationSpec, ScoreLabel};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// One synthetic drawing of score `category` as trajectory JSON.
pub fn synth_trajectory_json(category: u8, seed: u32, index: u32, noiseless: bool) -> Result<String, String> {
    let label = ScoreLabel::new(category).ok_or_else(|| format!("category {category} is not a score 0-3"))?;
    let config = if noiseless {
        SynthConfig::noiseless(seed.into(), 1)
    } else {
        SynthConfig::new(seed.into(), 1)
    };
    Ok(serialize_trajectory(&generate_sample(label, &config, index as usize)))
}

#[derive(Serialize)]
struct SegmentView {
    /// First point of each segment, for drawing boundaries on the canvas.
    start: [f64; 2],
    end: [f64; 2],
    features: [f64; 14],
}

#[derive(Serialize)]
struct Extraction {
    points: usize,
    feature_names: Vec<&'static str>,
    segments: Vec<SegmentView>,
    l_std: usize,
    feature_set: FeatureSet,
    matrix: Vec<Vec<f64>>,
}

/// Per-segment features and the resampled matrix for one trajectory.
pub fn extract_features_json(trajectory_json: &str, l_std: u32, feature_set: &str) -> Result<String, String> {
    let sample = parse_trajectory_json(trajectory_json).map_err(|e| e.to_string())?;
    let feature_set: FeatureSet = feature_set.parse()?;
    if l_std < 2 {
        return Err("l_std must be at least 2".into());
    }
    let segments = segment_trajectory(&sample).map_err(|e| e.to_string())?;
    let rows = build_feature_rows(&sample).map_err(|e| e.to_string())?;
    let spec = NormalizationSpec::new(l_std as usize, feature_set);
    let matrix = extract_matrix(&sample, &spec).map_err(|e| e.to_string())?;
    let out = Extraction {
        points: sample.len(),
        feature_names: feature_set.rows().map(|i| FEATURE_NAMES[i]).collect(),
        segments: segments
            .iter()
            .zip(&rows)
            .map(|(s, r)| SegmentView {
                start: [s.points[0].x, s.points[0].y],
                end: [s.points[4].x, s.points[4].y],
                features: r.to_array(),
            })
            .collect(),
        l_std: spec.l_std,
        feature_set,
        matrix: matrix.to_nested(),
    };
    Ok(serde_json::to_string(&out).expect("extractions serialize"))
}

/// Linear resampling of a JSON number array to `len` values.
pub fn resample_json(values_json: &str, len: u32) -> Result<String, String> {
    let values: Vec<f64> = serde_json::from_str(values_json).map_err(|e| e.to_string())?;
    if values.is_empty() {
        return Err("need at least one value".into());
    }
    if len == 0 {
        return Err("target length must be positive".into());
    }
    if values.len() < 2 && len > 1 {
        return Err("need at least two values to stretch".into());
    }
    Ok(serde_json::to_string(&resample_linear(&values, len as usize)).expect("numbers serialize"))
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen(js_name = synthTrajectory)]
pub fn synth_trajectory(category: u8, seed: u32, index: u32, noiseless: bool) -> Result<String, JsError> {
    synth_trajectory_json(category, seed, index, noiseless).map_err(js)
}

#[wasm_bindgen(js_name = extractFeatures)]
pub fn extract_features(trajectory_json: &str, l_std: u32, feature_set: &str) -> Result<String, JsError> {
    extract_features_json(trajectory_json, l_std, feature_set).map_err(js)
}

#[wasm_bindgen(js_name = resample)]
pub fn resample(values_json: &str, len: u32) -> Result<String, JsError> {
    resample_json(values_json, len).map_err(js)
}
