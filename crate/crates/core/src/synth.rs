//! Procedural cube-copying drawings for all four score levels.
//!
//! Score 3 traces a complete cabinet-projection cube; score 2 drops one or
//! two edges and distorts the proportions; score 1 draws one or two
//! unconnected rectangles; score 0 draws scattered curved strokes, a circle
//! or a scribble. Pen motion follows a minimum-jerk profile per straight
//! piece, sampled every `base_dt_ms` with jitter, with pen-up pauses between
//! strokes.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::trajectory::{ClinicalGroup, ScoreLabel, SubjectMeta, TrajectoryPoint, TrajectorySample};

pub const MIN_SAMPLE_POINTS: usize = 50;
pub const MAX_SAMPLE_POINTS: usize = 600;

/// Class sizes used by [`proportional_counts`].
pub const REFERENCE_CLASS_COUNTS: [usize; 4] = [48, 67, 67, 42];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryParams {
    /// Mean pen speed in px/ms.
    pub mean_speed: f64,
    /// Per-sample speed variation as a fraction of the mean.
    pub speed_spread: f64,
    /// Maximum horizontal shear applied to the figure.
    pub skew: f64,
    /// Probability of dropping a second edge (score 2 always drops one).
    pub edge_dropout: f64,
    /// Zig-zag turns per scribble, relative to the default.
    pub scribble_density: f64,
    /// Relative error of the depth edge length on score-2 cubes.
    #[serde(default)]
    pub depth_distortion: f64,
    /// Multiplier on the chance of resting at a corner.
    #[serde(default = "one")]
    pub hesitation: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub samples_per_class: usize,
    /// Explicit per-class sizes; overrides `samples_per_class`.
    pub class_counts: Option<[usize; 4]>,
    pub canvas: (f64, f64),
    pub base_dt_ms: f64,
    pub dt_jitter: f64,
    pub coord_noise_px: f64,
    pub tremor_amp_px: f64,
    /// Pen-up pause range between strokes, in ms.
    pub pen_up_ms: (f64, f64),
    /// Random scale, rotation, position and pen lifts, and a personal stroke
    /// order for imperfect cubes. Complete cubes keep the canonical order.
    pub layout_jitter: bool,
    /// Largest offset of the figure center from the canvas center.
    pub position_jitter_px: f64,
    /// Upper bound of the per-subject chance of lifting the pen at a corner.
    pub max_lift_probability: f64,
    /// Log-normal spread of the speed of each single movement.
    pub movement_speed_sigma: f64,
    /// Chance of resting at a corner inside a stroke, and the rest length.
    pub corner_pause_prob: f64,
    pub corner_pause_ms: (f64, f64),
    /// Whether the digitizer keeps reporting while the pen rests on the
    /// surface. When off, a rest shows up only as a longer time step.
    pub sample_while_resting: bool,
    pub with_meta: bool,
    pub categories: [CategoryParams; 4],
}

impl Default for SynthConfig {
    fn default() -> Self {
        let cat = |mean_speed, skew, edge_dropout, hesitation| CategoryParams {
            mean_speed,
            speed_spread: 0.25,
            skew,
            edge_dropout,
            scribble_density: 1.0,
            depth_distortion: 0.0,
            hesitation,
        };
        Self {
            seed: 42,
            samples_per_class: 100,
            class_counts: None,
            canvas: (800.0, 800.0),
            base_dt_ms: 8.0,
            dt_jitter: 0.1,
            coord_noise_px: 0.4,
            tremor_amp_px: 0.6,
            pen_up_ms: (80.0, 400.0),
            layout_jitter: true,
            position_jitter_px: 60.0,
            max_lift_probability: 0.5,
            movement_speed_sigma: 0.25,
            corner_pause_prob: 0.3,
            corner_pause_ms: (20.0, 120.0),
            sample_while_resting: false,
            with_meta: true,
            categories: [
                cat(0.6, 0.0, 0.0, 2.0),
                cat(0.65, 0.05, 0.0, 1.6),
                cat(0.8, 0.1, 0.2, 0.6),
                cat(0.8, 0.03, 0.0, 0.6),
            ],
        }
    }
}

impl SynthConfig {
    pub fn new(seed: u64, samples_per_class: usize) -> Self {
        Self {
            seed,
            samples_per_class,
            ..Self::default()
        }
    }

    /// Every jitter, noise and distortion switched off.
    pub fn noiseless(seed: u64, samples_per_class: usize) -> Self {
        let mut c = Self::new(seed, samples_per_class);
        c.dt_jitter = 0.0;
        c.coord_noise_px = 0.0;
        c.tremor_amp_px = 0.0;
        c.pen_up_ms = (200.0, 200.0);
        c.layout_jitter = false;
        c.movement_speed_sigma = 0.0;
        c.corner_pause_prob = 0.0;
        for p in &mut c.categories {
            p.speed_spread = 0.0;
            p.skew = 0.0;
        }
        c
    }

    /// Class sizes proportional to the reference counts, summing to `total`.
    pub fn proportional(seed: u64, total: usize) -> Self {
        Self {
            class_counts: Some(proportional_counts(total)),
            ..Self::new(seed, 1)
        }
    }

    pub fn counts(&self) -> [usize; 4] {
        self.class_counts.unwrap_or([self.samples_per_class; 4])
    }

    pub fn validate(&self) -> Result<(), String> {
        let nonneg = [
            ("base_dt_ms", self.base_dt_ms),
            ("dt_jitter", self.dt_jitter),
            ("coord_noise_px", self.coord_noise_px),
            ("tremor_amp_px", self.tremor_amp_px),
            ("pen_up_ms", self.pen_up_ms.0),
            ("movement_speed_sigma", self.movement_speed_sigma),
            ("corner_pause_ms", self.corner_pause_ms.0),
            ("position_jitter_px", self.position_jitter_px),
        ];
        if let Some((name, v)) = nonneg.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return Err(format!("{name} must be a finite non-negative number, got {v}"));
        }
        if self.base_dt_ms <= 0.0 {
            return Err("base_dt_ms must be positive".into());
        }
        if self.dt_jitter >= 1.0 {
            return Err("dt_jitter must be below 1".into());
        }
        if self.pen_up_ms.1 < self.pen_up_ms.0 || self.corner_pause_ms.1 < self.corner_pause_ms.0 {
            return Err("pause range is reversed".into());
        }
        if !(0.0..=1.0).contains(&self.corner_pause_prob) {
            return Err("corner_pause_prob must be in [0, 1]".into());
        }
        if self.counts().contains(&0) {
            return Err("every class needs at least one sample".into());
        }
        if !(self.canvas.0 >= 400.0 && self.canvas.1 >= 400.0) {
            return Err("canvas must be at least 400 x 400".into());
        }
        for p in &self.categories {
            if !(p.mean_speed > 0.0 && p.speed_spread >= 0.0 && p.speed_spread < 1.0) {
                return Err("category speeds must be positive with spread below 1".into());
            }
            if !(0.0..1.0).contains(&self.max_lift_probability) {
                return Err("max_lift_probability must be in [0, 1)".into());
            }
            if !(p.skew >= 0.0
                && (0.0..=1.0).contains(&p.edge_dropout)
                && p.scribble_density > 0.0
                && (0.0..1.0).contains(&p.depth_distortion)
                && p.hesitation >= 0.0)
            {
                return Err("invalid category parameters".into());
            }
        }
        Ok(())
    }
}

/// Largest-remainder apportionment of `total` over the reference class sizes.
pub fn proportional_counts(total: usize) -> [usize; 4] {
    let weight: usize = REFERENCE_CLASS_COUNTS.iter().sum();
    let mut counts = [0usize; 4];
    let mut remainders = [(0usize, 0usize); 4];
    for (c, &w) in REFERENCE_CLASS_COUNTS.iter().enumerate() {
        counts[c] = total * w / weight;
        remainders[c] = (total * w % weight, c);
    }
    let short = total - counts.iter().sum::<usize>();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, c) in remainders.iter().take(short) {
        counts[c] += 1;
    }
    counts
}

type P = (f64, f64);

#[derive(Debug, Clone, PartialEq)]
struct Stroke {
    points: Vec<P>,
    /// Drawn as one continuous curve rather than corner to corner.
    smooth: bool,
}

impl Stroke {
    fn straight(points: Vec<P>) -> Self {
        Self { points, smooth: false }
    }

    fn curve(points: Vec<P>) -> Self {
        Self { points, smooth: true }
    }
}

/// Lifts the pen at interior corners of straight strokes with probability
/// `p`, so stroke counts vary between subjects.
fn split_at_corners(strokes: Vec<Stroke>, p: f64, rng: &mut impl Rng) -> Vec<Stroke> {
    let mut out = Vec::new();
    for stroke in strokes {
        if stroke.smooth || p <= 0.0 {
            out.push(stroke);
            continue;
        }
        let mut current = vec![stroke.points[0]];
        for (i, &q) in stroke.points.iter().enumerate().skip(1) {
            current.push(q);
            if i + 1 < stroke.points.len() && rng.random_bool(p) {
                out.push(Stroke::straight(std::mem::replace(&mut current, vec![q])));
            }
        }
        out.push(Stroke::straight(current));
    }
    out
}

/// Cabinet-projection cube: front square plus a back square offset up and to
/// the right at 45° by half the side length.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeTemplate {
    pub vertices: [P; 8],
    pub edges: [(usize, usize); 12],
    /// Canonical drawing order: each stroke is a path of vertex indices.
    pub strokes: Vec<Vec<usize>>,
}

impl CubeTemplate {
    pub fn cabinet(center: P, side: f64) -> Self {
        Self::with_depth(center, side, 1.0)
    }

    /// Cabinet cube whose depth edges are `depth_scale` times the usual
    /// half side.
    pub fn with_depth(center: P, side: f64, depth_scale: f64) -> Self {
        let h = side / 2.0;
        let d = side / 2.0 * FRAC_1_SQRT_2 * depth_scale;
        let (cx, cy) = (center.0 - d / 2.0, center.1 + d / 2.0);
        let front = [(cx - h, cy - h), (cx + h, cy - h), (cx + h, cy + h), (cx - h, cy + h)];
        let mut vertices = [(0.0, 0.0); 8];
        for i in 0..4 {
            vertices[i] = front[i];
            vertices[i + 4] = (front[i].0 + d, front[i].1 - d);
        }
        let edges = [
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 0),
            (4, 5),
            (5, 6),
            (6, 7),
            (7, 4),
            (0, 4),
            (1, 5),
            (2, 6),
            (3, 7),
        ];
        Self {
            vertices,
            edges,
            strokes: vec![
                vec![0, 1, 2, 3, 0],
                vec![4, 5, 6, 7, 4],
                vec![0, 4],
                vec![1, 5],
                vec![2, 6],
                vec![3, 7],
            ],
        }
    }

    fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edges
            .iter()
            .position(|&(p, q)| (p, q) == (a, b) || (q, p) == (a, b))
    }

    /// A plausible personal drawing order: squares start at any corner and
    /// run either way, depth edges come in any order and direction, and the
    /// back square may be drawn last.
    pub fn shuffled_strokes(&self, rng: &mut impl Rng) -> Vec<Vec<usize>> {
        let front = shuffled_loop(&self.strokes[0], rng);
        let back = shuffled_loop(&self.strokes[1], rng);
        let mut depth: Vec<Vec<usize>> = self.strokes[2..]
            .iter()
            .map(|p| {
                let mut p = p.clone();
                if rng.random_bool(0.5) {
                    p.reverse();
                }
                p
            })
            .collect();
        depth.shuffle(rng);
        let mut out = vec![front];
        if rng.random_bool(0.3) {
            out.extend(depth);
            out.push(back);
        } else {
            out.push(back);
            out.extend(depth);
        }
        out
    }

    /// Polylines for `strokes`, skipping `removed` edges. A path broken by a
    /// removed edge continues as a new stroke.
    pub fn polylines(&self, strokes: &[Vec<usize>], removed: &[usize]) -> Vec<Vec<P>> {
        let mut out = Vec::new();
        for path in strokes {
            let mut current: Vec<P> = vec![self.vertices[path[0]]];
            for w in path.windows(2) {
                let e = self.edge_index(w[0], w[1]).expect("stroke follows template edges");
                if removed.contains(&e) {
                    if current.len() >= 2 {
                        out.push(std::mem::take(&mut current));
                    }
                    current = vec![self.vertices[w[1]]];
                    continue;
                }
                current.push(self.vertices[w[1]]);
            }
            if current.len() >= 2 {
                out.push(current);
            }
        }
        out
    }
}

/// A closed path started at a random vertex, in either direction.
fn shuffled_loop<T: Copy>(closed: &[T], rng: &mut impl Rng) -> Vec<T> {
    let mut open = closed[..closed.len() - 1].to_vec();
    let start = rng.random_range(0..open.len());
    open.rotate_left(start);
    if rng.random_bool(0.5) {
        open.reverse();
    }
    open.push(open[0]);
    open
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn sample_rng(seed: u64, category: ScoreLabel, index: usize) -> ChaCha8Rng {
    let key = splitmix(splitmix(splitmix(seed) ^ category.value() as u64) ^ index as u64);
    ChaCha8Rng::seed_from_u64(key)
}

fn transform(points: &[P], center: P, angle: f64, shear: f64, squash: f64) -> Vec<P> {
    let (s, c) = angle.sin_cos();
    points
        .iter()
        .map(|&(x, y)| {
            let (dx, dy) = (x - center.0, (y - center.1) * squash);
            let dx = dx + shear * dy;
            (center.0 + c * dx - s * dy, center.1 + s * dx + c * dy)
        })
        .collect()
}

fn polyline_length(poly: &[P]) -> f64 {
    poly.windows(2).map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1)).sum()
}

/// Geometry for one drawing, before timing and noise.
fn figure(category: ScoreLabel, config: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<Stroke> {
    let params = config.categories[category.index()];
    let jitter = config.layout_jitter;
    let (w, h) = config.canvas;
    let center = if jitter {
        let j = config.position_jitter_px;
        if j > 0.0 {
            (w / 2.0 + rng.random_range(-j..=j), h / 2.0 + rng.random_range(-j..=j))
        } else {
            (w / 2.0, h / 2.0)
        }
    } else {
        (w / 2.0, h / 2.0)
    };
    let angle = if jitter { rng.random_range(-0.05..=0.05) } else { 0.0 };
    let side = if jitter { rng.random_range(100.0..=180.0) } else { 140.0 };
    let shear = if params.skew > 0.0 {
        rng.random_range(-params.skew..=params.skew)
    } else {
        0.0
    };
    match category.value() {
        3 => {
            let cube = CubeTemplate::cabinet(center, side);
            cube.polylines(&cube.strokes, &[])
                .iter()
                .map(|p| Stroke::straight(transform(p, center, angle, shear, 1.0)))
                .collect()
        }
        2 => {
            let depth = if params.depth_distortion > 0.0 {
                let err = params.depth_distortion * rng.random_range(0.5..=1.0);
                if rng.random_bool(0.5) { 1.0 + err } else { 1.0 - err }
            } else {
                1.0
            };
            let cube = CubeTemplate::with_depth(center, side, depth);
            let mut removed = vec![rng.random_range(0..12)];
            if rng.random_bool(params.edge_dropout) {
                let mut second = rng.random_range(0..11);
                if second >= removed[0] {
                    second += 1;
                }
                removed.push(second);
            }
            let squash = if jitter { rng.random_range(0.8..=1.2) } else { 1.0 };
            let order = if jitter { cube.shuffled_strokes(rng) } else { cube.strokes.clone() };
            cube.polylines(&order, &removed)
                .iter()
                .map(|p| Stroke::straight(transform(p, center, angle, shear, squash)))
                .collect()
        }
        1 => rectangles(center, angle, shear, jitter, rng),
        _ => scattered_or_round(center, params, jitter, rng),
    }
}

fn rect(x0: f64, y0: f64, w: f64, h: f64) -> Vec<P> {
    vec![(x0, y0), (x0 + w, y0), (x0 + w, y0 + h), (x0, y0 + h), (x0, y0)]
}

fn rectangles(center: P, angle: f64, shear: f64, jitter: bool, rng: &mut ChaCha8Rng) -> Vec<Stroke> {
    let dims = |rng: &mut ChaCha8Rng| {
        if jitter {
            (rng.random_range(80.0..=170.0), rng.random_range(60.0..=150.0))
        } else {
            (140.0, 100.0)
        }
    };
    let two = rng.random_bool(0.5);
    let (w1, h1) = dims(rng);
    let polys = if two {
        let (w2, h2) = dims(rng);
        let gap = if jitter { rng.random_range(20.0..=60.0) } else { 40.0 };
        let total = w1 + gap + w2;
        let x0 = center.0 - total / 2.0;
        let dy = if jitter { rng.random_range(-30.0..=30.0) } else { 0.0 };
        vec![
            rect(x0, center.1 - h1 / 2.0, w1, h1),
            rect(x0 + w1 + gap, center.1 - h2 / 2.0 + dy, w2, h2),
        ]
    } else {
        vec![rect(center.0 - w1 / 2.0, center.1 - h1 / 2.0, w1, h1)]
    };
    polys
        .iter()
        .map(|p| {
            let p = if jitter { shuffled_loop(p, rng) } else { p.clone() };
            Stroke::straight(transform(&p, center, angle, shear, 1.0))
        })
        .collect()
}

fn arc(c: P, r: f64, start: f64, sweep: f64, ellipticity: f64, pieces: usize) -> Vec<P> {
    (0..=pieces)
        .map(|k| {
            let a = start + sweep * k as f64 / pieces as f64;
            (c.0 + r * a.cos(), c.1 + r * ellipticity * a.sin())
        })
        .collect()
}

fn scattered_or_round(center: P, params: CategoryParams, jitter: bool, rng: &mut ChaCha8Rng) -> Vec<Stroke> {
    match rng.random_range(0..3) {
        0 => {
            let n = rng.random_range(4..=9);
            (0..n)
                .map(|_| {
                    let c = (
                        center.0 + rng.random_range(-150.0..=150.0),
                        center.1 + rng.random_range(-150.0..=150.0),
                    );
                    let r = rng.random_range(25.0..=70.0);
                    let sweep = rng.random_range(0.6..=1.6) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    Stroke::curve(arc(c, r, rng.random_range(0.0..2.0 * PI), sweep, 1.0, 12))
                })
                .collect()
        }
        1 => {
            let r = if jitter { rng.random_range(40.0..=70.0) } else { 55.0 };
            let turns = rng.random_range(1.0..=1.1);
            let ell = rng.random_range(0.85..=1.15);
            vec![Stroke::curve(arc(center, r, rng.random_range(0.0..2.0 * PI), 2.0 * PI * turns, ell, 48))]
        }
        _ => {
            let turns = ((rng.random_range(14.0..=26.0) * params.scribble_density).round() as usize).max(4);
            let radius = rng.random_range(35.0..=60.0);
            let poly = (0..=turns)
                .map(|_| {
                    let a = rng.random_range(0.0..2.0 * PI);
                    let r = radius * rng.random::<f64>().sqrt();
                    (center.0 + r * a.cos(), center.1 + r * a.sin())
                })
                .collect();
            vec![Stroke::straight(poly)]
        }
    }
}

fn min_jerk(tau: f64) -> f64 {
    let t3 = tau * tau * tau;
    t3 * (10.0 - 15.0 * tau + 6.0 * tau * tau)
}

struct Timing {
    speed: f64,
    gaps: Vec<f64>,
    tremor_freq_hz: f64,
    tremor_phase: f64,
    pause_prob: f64,
}

fn next_dt(config: &SynthConfig, rng: &mut ChaCha8Rng) -> f64 {
    if config.dt_jitter > 0.0 {
        config.base_dt_ms * (1.0 + rng.random_range(-config.dt_jitter..=config.dt_jitter))
    } else {
        config.base_dt_ms
    }
}

/// Point and unit normal at arc length `dist` along `poly`.
fn along(poly: &[P], cum: &[f64], dist: f64) -> (P, P) {
    let i = cum.partition_point(|&c| c <= dist).clamp(1, poly.len() - 1);
    let (a, b) = (poly[i - 1], poly[i]);
    let len = cum[i] - cum[i - 1];
    let f = if len > 0.0 { ((dist - cum[i - 1]) / len).clamp(0.0, 1.0) } else { 0.0 };
    let normal = if len > 0.0 {
        (-(b.1 - a.1) / len, (b.0 - a.0) / len)
    } else {
        (0.0, 0.0)
    };
    ((a.0 + (b.0 - a.0) * f, a.1 + (b.1 - a.1) * f), normal)
}

/// Samples the strokes in time. A smooth stroke is one minimum-jerk movement
/// along its whole length; otherwise each straight piece is its own
/// movement. The pen pauses between strokes.
fn render(strokes: &[Stroke], timing: &Timing, config: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<TrajectoryPoint> {
    let noise = Normal::new(0.0, config.coord_noise_px.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let noise_unit = Normal::new(0.0, 1.0).expect("valid sigma");
    let mut out = Vec::new();
    let mut clock = 0.0;
    for (id, stroke) in strokes.iter().enumerate() {
        if id > 0 {
            clock += timing.gaps[id - 1];
        }
        let movements: Vec<&[P]> = if stroke.smooth {
            vec![&stroke.points[..]]
        } else {
            stroke.points.windows(2).collect()
        };
        for (k, poly) in movements.into_iter().enumerate() {
            let mut cum = vec![0.0];
            for w in poly.windows(2) {
                cum.push(cum.last().unwrap() + (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1));
            }
            let total = *cum.last().unwrap();
            let factor = if config.movement_speed_sigma > 0.0 {
                (config.movement_speed_sigma * noise_unit.sample(rng)).exp()
            } else {
                1.0
            };
            let duration = (total / (timing.speed * factor)).max(config.base_dt_ms);
            let pause = if k > 0 && timing.pause_prob > 0.0 && rng.random_bool(timing.pause_prob) {
                let (lo, hi) = config.corner_pause_ms;
                if hi > lo { rng.random_range(lo..=hi) } else { lo }
            } else {
                0.0
            };
            let mut emit = |time: f64, tau: f64, rng: &mut ChaCha8Rng| {
                let ((mut x, mut y), (nx, ny)) = along(poly, &cum, total * min_jerk(tau));
                if config.tremor_amp_px > 0.0 {
                    let wobble = config.tremor_amp_px
                        * (2.0 * PI * timing.tremor_freq_hz * time / 1000.0 + timing.tremor_phase).sin();
                    x += nx * wobble;
                    y += ny * wobble;
                }
                if config.coord_noise_px > 0.0 {
                    x += noise.sample(rng);
                    y += noise.sample(rng);
                }
                out.push(TrajectoryPoint::new(x, y, time).with_stroke(id as u32));
            };
            if k == 0 {
                emit(clock, 0.0, rng);
            }
            let resume = clock + pause;
            while config.sample_while_resting {
                let next = clock + next_dt(config, rng);
                if next >= resume {
                    break;
                }
                clock = next;
                emit(clock, 0.0, rng);
            }
            let start = clock.max(resume);
            clock = start;
            let end = start + duration;
            loop {
                let next = clock + next_dt(config, rng);
                if next >= end {
                    break;
                }
                clock = next;
                emit(clock, (clock - start) / duration, rng);
            }
            clock = end;
            emit(clock, 1.0, rng);
        }
    }
    out
}

fn subject_meta(category: ScoreLabel, rng: &mut ChaCha8Rng) -> SubjectMeta {
    const AGE_MEAN: [f64; 4] = [72.0, 64.0, 52.0, 35.0];
    const EDU_MEAN: [f64; 4] = [5.0, 8.0, 11.0, 14.0];
    const P_MCI: [f64; 4] = [0.8, 0.65, 0.35, 0.15];
    let c = category.index();
    let age = Normal::new(AGE_MEAN[c], 10.0).unwrap().sample(rng).round().clamp(18.0, 95.0);
    let edu = Normal::new(EDU_MEAN[c], 3.0).unwrap().sample(rng).round().clamp(0.0, 22.0);
    let group = if rng.random_bool(P_MCI[c]) {
        ClinicalGroup::Mci
    } else {
        ClinicalGroup::HealthyControl
    };
    let sex = if rng.random_bool(0.5) { "F" } else { "M" };
    SubjectMeta {
        age: Some(age as u32),
        education_years: Some(edu as u32),
        group: Some(group),
        sex: Some(sex.to_string()),
    }
}

pub fn sample_id(seed: u64, category: ScoreLabel, index: usize) -> String {
    format!("synth-{seed}-c{}-{index:04}", category.value())
}

/// One labeled drawing, fully determined by `(config, category, index)`.
pub fn generate_sample(category: ScoreLabel, config: &SynthConfig, sample_index: usize) -> TrajectorySample {
    let mut rng = sample_rng(config.seed, category, sample_index);
    let params = config.categories[category.index()];
    let mut polys = figure(category, config, &mut rng);
    if config.layout_jitter {
        let lift = rng.random_range(0.0..=config.max_lift_probability);
        polys = split_at_corners(polys, lift, &mut rng);
    }
    let spread = params.speed_spread;
    let mut speed = params.mean_speed
        * if spread > 0.0 {
            1.0 + rng.random_range(-spread..=spread)
        } else {
            1.0
        };
    let gaps: Vec<f64> = (1..polys.len())
        .map(|_| {
            let (lo, hi) = config.pen_up_ms;
            if hi > lo {
                rng.random_range(lo..=hi)
            } else {
                lo
            }
        })
        .collect();
    let tremor_freq_hz = rng.random_range(6.0..=10.0);
    let tremor_phase = rng.random_range(0.0..2.0 * PI);
    let meta = if config.with_meta {
        subject_meta(category, &mut rng)
    } else {
        SubjectMeta::default()
    };

    // Keep the point count in range by adjusting the pen speed; the render
    // stream is re-seeded so each attempt sees the same noise.
    let render_seed: u64 = rng.random();
    let pieces: usize = polys
        .iter()
        .map(|p| if p.smooth { 1 } else { p.points.len() - 1 })
        .sum();
    let path: f64 = polys.iter().map(|p| polyline_length(&p.points)).sum();
    let lo = (MIN_SAMPLE_POINTS + 10) as f64;
    let hi = (MAX_SAMPLE_POINTS - 20) as f64;
    let estimate = |speed: f64| path / speed / config.base_dt_ms + 2.0 * pieces as f64;
    if estimate(speed) > hi {
        speed = path / (config.base_dt_ms * (hi - 2.0 * pieces as f64).max(1.0));
    } else if estimate(speed) < lo {
        speed = path / (config.base_dt_ms * (lo - 2.0 * pieces as f64).max(1.0));
    }
    let mut points;
    let mut attempts = 0;
    loop {
        let timing = Timing {
            speed,
            gaps: gaps.clone(),
            tremor_freq_hz,
            tremor_phase,
            pause_prob: (config.corner_pause_prob * params.hesitation).min(1.0),
        };
        points = render(&polys, &timing, config, &mut ChaCha8Rng::seed_from_u64(render_seed));
        attempts += 1;
        let n = points.len();
        if (MIN_SAMPLE_POINTS..=MAX_SAMPLE_POINTS).contains(&n) || attempts >= 8 {
            break;
        }
        speed *= if n > MAX_SAMPLE_POINTS { 1.25 } else { 0.8 };
    }
    TrajectorySample::new(
        sample_id(config.seed, category, sample_index),
        points,
        Some(category),
        meta,
    )
    .expect("generator emits valid samples")
}

/// All classes, class 0 first, indices ascending within a class.
pub fn generate_dataset(config: &SynthConfig) -> Dataset {
    let counts = config.counts();
    let samples = ScoreLabel::ALL
        .iter()
        .flat_map(|&c| (0..counts[c.index()]).map(move |i| generate_sample(c, config, i)))
        .collect();
    Dataset::new(samples).expect("generated ids are unique")
}

/// Share of 8-point windows that are straight: maximum distance from the
/// chord below 3% of the chord length. Windows shorter than 5 px and
/// windows crossing strokes are skipped.
pub fn straight_window_fraction(sample: &TrajectorySample) -> f64 {
    const WINDOW: usize = 8;
    let mut straight = 0usize;
    let mut total = 0usize;
    for w in sample.points.windows(WINDOW) {
        if w.iter().any(|p| p.stroke_id != w[0].stroke_id) {
            continue;
        }
        let (a, b) = (w[0], w[WINDOW - 1]);
        let chord = (b.x - a.x).hypot(b.y - a.y);
        if chord < 5.0 {
            continue;
        }
        let dev = w
            .iter()
            .map(|p| ((b.x - a.x) * (a.y - p.y) - (a.x - p.x) * (b.y - a.y)).abs() / chord)
            .fold(0.0, f64::max);
        total += 1;
        if dev < 0.03 * chord {
            straight += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        straight as f64 / total as f64
    }
}
