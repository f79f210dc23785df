//! Labeled sample collections, JSON-lines files and stratified splitting.

use std::collections::HashSet;
use std::io::{self, BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::DatasetError;
use crate::trajectory::{parse_trajectory_json, serialize_trajectory, ScoreLabel, TrajectorySample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Validate,
    Test,
    Unassigned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<TrajectorySample>,
    splits: Vec<Split>,
}

impl Dataset {
    pub fn new(samples: Vec<TrajectorySample>) -> Result<Self, DatasetError> {
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if !seen.insert(s.id.as_str()) {
                return Err(DatasetError::DuplicateId(s.id.clone()));
            }
        }
        let splits = vec![Split::Unassigned; samples.len()];
        Ok(Self { samples, splits })
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<TrajectorySample> {
        self.samples
    }

    /// Samples assigned to `split`, in dataset order.
    pub fn subset(&self, split: Split) -> Vec<&TrajectorySample> {
        self.samples
            .iter()
            .zip(&self.splits)
            .filter(|(_, s)| **s == split)
            .map(|(x, _)| x)
            .collect()
    }

    /// Per-class counts over the whole dataset; unlabeled samples are skipped.
    pub fn class_counts(&self) -> [usize; ScoreLabel::NUM_CLASSES] {
        class_counts(self.samples.iter())
    }

    pub fn split_class_counts(&self, split: Split) -> [usize; ScoreLabel::NUM_CLASSES] {
        class_counts(self.subset(split).into_iter())
    }
}

fn class_counts<'a>(
    samples: impl Iterator<Item = &'a TrajectorySample>,
) -> [usize; ScoreLabel::NUM_CLASSES] {
    let mut counts = [0; ScoreLabel::NUM_CLASSES];
    for s in samples {
        if let Some(label) = s.label {
            counts[label.index()] += 1;
        }
    }
    counts
}

/// Stratified train/validate/test assignment.
///
/// Within each class the member indices are shuffled with a seeded ChaCha
/// generator and cut into consecutive blocks. Validation and test block sizes
/// are `round(n * ratio)`; training takes the rest, so a class of 48 at
/// 8:1:1 becomes 38/5/5.
pub fn split_dataset(
    data: Dataset,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<Dataset, DatasetError> {
    let (tr, va, te) = ratios;
    if tr < 0.0 || va < 0.0 || te < 0.0 || ((tr + va + te) - 1.0).abs() > 1e-9 {
        return Err(DatasetError::BadRatios(ratios));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ScoreLabel::NUM_CLASSES];
    for (i, s) in data.samples.iter().enumerate() {
        let label = s
            .label
            .ok_or_else(|| DatasetError::UnlabeledSample(s.id.clone()))?;
        by_class[label.index()].push(i);
    }
    for (class, members) in by_class.iter().enumerate() {
        if !members.is_empty() && members.len() < 3 {
            return Err(DatasetError::ClassTooSmall {
                class: class as u8,
                count: members.len(),
                min: 3,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut splits = vec![Split::Unassigned; data.samples.len()];
    for members in &mut by_class {
        members.shuffle(&mut rng);
        let n = members.len();
        let n_val = (n as f64 * va).round() as usize;
        let n_test = ((n as f64 * te).round() as usize).min(n - n_val);
        let n_train = n - n_val - n_test;
        for (k, &idx) in members.iter().enumerate() {
            splits[idx] = if k < n_train {
                Split::Train
            } else if k < n_train + n_val {
                Split::Validate
            } else {
                Split::Test
            };
        }
    }
    Ok(Dataset {
        samples: data.samples,
        splits,
    })
}

/// Reads a JSON-lines file of trajectory documents. Blank lines are ignored.
pub fn read_jsonl<R: BufRead>(reader: R) -> io::Result<Result<Vec<TrajectorySample>, DatasetError>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_trajectory_json(&line) {
            Ok(s) => out.push(s),
            Err(source) => return Ok(Err(DatasetError::Line { line: i + 1, source })),
        }
    }
    Ok(Ok(out))
}

/// Writes one document per line, LF-terminated.
pub fn write_jsonl<'a, W: Write>(
    mut writer: W,
    samples: impl IntoIterator<Item = &'a TrajectorySample>,
) -> io::Result<()> {
    for s in samples {
        writer.write_all(serialize_trajectory(s).as_bytes())?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{SubjectMeta, TrajectoryPoint};

    fn labeled(counts: &[usize]) -> Dataset {
        let mut samples = Vec::new();
        for (class, &n) in counts.iter().enumerate() {
            for k in 0..n {
                let pts = vec![
                    TrajectoryPoint::new(0.0, 0.0, 0.0),
                    TrajectoryPoint::new(1.0, 1.0, 8.0),
                ];
                samples.push(
                    TrajectorySample::new(
                        format!("c{class}-{k}"),
                        pts,
                        ScoreLabel::new(class as u8),
                        SubjectMeta::default(),
                    )
                    .unwrap(),
                );
            }
        }
        Dataset::new(samples).unwrap()
    }

    #[test]
    fn table_two_totals() {
        let d = split_dataset(labeled(&[48, 67, 67, 42]), (0.8, 0.1, 0.1), 1).unwrap();
        assert_eq!(d.subset(Split::Train).len(), 178);
        assert_eq!(d.subset(Split::Validate).len(), 23);
        assert_eq!(d.subset(Split::Test).len(), 23);
        assert_eq!(d.split_class_counts(Split::Train), [38, 53, 53, 34]);
        assert_eq!(d.split_class_counts(Split::Validate), [5, 7, 7, 4]);
        assert_eq!(d.split_class_counts(Split::Test), [5, 7, 7, 4]);
    }

    #[test]
    fn exact_division() {
        let d = split_dataset(labeled(&[10, 10, 10, 10]), (0.8, 0.1, 0.1), 9).unwrap();
        for split in [Split::Train, Split::Validate, Split::Test] {
            let want = if split == Split::Train { 8 } else { 1 };
            assert_eq!(d.split_class_counts(split), [want; 4]);
        }
        assert!(d.subset(Split::Unassigned).is_empty());
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = split_dataset(labeled(&[20, 20, 20, 20]), (0.8, 0.1, 0.1), 5).unwrap();
        let b = split_dataset(labeled(&[20, 20, 20, 20]), (0.8, 0.1, 0.1), 5).unwrap();
        let c = split_dataset(labeled(&[20, 20, 20, 20]), (0.8, 0.1, 0.1), 6).unwrap();
        assert_eq!(a.splits(), b.splits());
        assert_ne!(a.splits(), c.splits());
    }

    #[test]
    fn errors() {
        let mut d = labeled(&[5, 5, 5, 5]);
        d.samples[3].label = None;
        assert!(matches!(
            split_dataset(d, (0.8, 0.1, 0.1), 0),
            Err(DatasetError::UnlabeledSample(_))
        ));
        assert!(matches!(
            split_dataset(labeled(&[5, 2, 5, 5]), (0.8, 0.1, 0.1), 0),
            Err(DatasetError::ClassTooSmall { class: 1, count: 2, .. })
        ));
        assert!(matches!(
            split_dataset(labeled(&[5, 5, 5, 5]), (0.8, 0.1, 0.2), 0),
            Err(DatasetError::BadRatios(_))
        ));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let d = labeled(&[2]);
        let mut samples = d.into_samples();
        samples[1].id = samples[0].id.clone();
        assert!(matches!(Dataset::new(samples), Err(DatasetError::DuplicateId(_))));
    }

    #[test]
    fn jsonl_round_trip() {
        let d = labeled(&[2, 1]);
        let mut buf = Vec::new();
        write_jsonl(&mut buf, d.samples()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.ends_with('\n') && !text.contains('\r'));
        let back = read_jsonl(&buf[..]).unwrap().unwrap();
        assert_eq!(back, d.samples());
    }

    #[test]
    fn jsonl_reports_line() {
        let text = "{\"id\":\"a\",\"points\":[{\"x\":0,\"y\":0,\"t\":0},{\"x\":0,\"y\":0,\"t\":1}]}\n\nnot json\n";
        let err = read_jsonl(text.as_bytes()).unwrap().unwrap_err();
        assert!(matches!(err, DatasetError::Line { line: 3, .. }));
    }
}
