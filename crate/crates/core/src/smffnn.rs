//! One-epoch feed-forward classifier with a binary step output.
//!
//! The network has an input node per attribute, a hidden layer formed by the
//! strong attributes that survived reduction, and a single output node. The
//! output node sums `weight * normalized value` over the hidden layer and
//! applies a step at threshold `theta`. Weights come from the potential-weight
//! analysis; training only chooses `theta` and which side of it is class 1.
//!
//! Training scores each instance exactly once, sorts the scores, and sweeps
//! every midpoint between consecutive distinct scores (plus one candidate on
//! either side of the range). The candidate with the highest training
//! accuracy wins; ties prefer the larger margin to the nearest score, then
//! [`Orientation::Class1Above`], then the smaller threshold.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Class, Dataset};
use crate::pwla::{self, NormalizedMatrix, PotentialWeights, ReductionPolicy};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmffnnError {
    #[error("DimensionMismatch: expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("SingleClassTraining")]
    SingleClassTraining,
    #[error("EmptyTestSet")]
    EmptyTestSet,
    #[error("Unlabeled")]
    Unlabeled,
    #[error("NotReduced: weights must be reduced and match the projected matrix")]
    NotReduced,
    #[error("MissingAttribute: {0}")]
    MissingAttribute(String),
    #[error("NonFiniteInput")]
    NonFiniteInput,
    #[error("MalformedSnapshot: {0}")]
    MalformedSnapshot(String),
    #[error(transparent)]
    Pwla(#[from] pwla::PwlaError),
}

impl SmffnnError {
    pub fn kind(&self) -> &'static str {
        match self {
            SmffnnError::DimensionMismatch { .. } => "DimensionMismatch",
            SmffnnError::SingleClassTraining => "SingleClassTraining",
            SmffnnError::EmptyTestSet => "EmptyTestSet",
            SmffnnError::Unlabeled => "Unlabeled",
            SmffnnError::NotReduced => "NotReduced",
            SmffnnError::MissingAttribute(_) => "MissingAttribute",
            SmffnnError::NonFiniteInput => "NonFiniteInput",
            SmffnnError::MalformedSnapshot(_) => "MalformedSnapshot",
            SmffnnError::Pwla(e) => e.kind(),
        }
    }
}

/// Which side of the threshold class 1 sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// Class 1 iff `score >= theta`.
    Class1Above,
    /// Class 1 iff `score < theta`.
    Class1Below,
}

impl Orientation {
    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::Class1Above => "class1_above",
            Orientation::Class1Below => "class1_below",
        }
    }

    pub fn parse(s: &str) -> Option<Orientation> {
        match s {
            "class1_above" => Some(Orientation::Class1Above),
            "class1_below" => Some(Orientation::Class1Below),
            _ => None,
        }
    }

    /// Binary step. A score equal to `theta` falls on the "above" side.
    pub fn classify(self, score: f64, theta: f64) -> Class {
        let above = score >= theta;
        match (self, above) {
            (Orientation::Class1Above, true) | (Orientation::Class1Below, false) => Class::One,
            _ => Class::Two,
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A trained classifier. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmffnnModel {
    pub attribute_names: Vec<String>,
    pub weights: Vec<f64>,
    pub col_min: Vec<f64>,
    pub col_max: Vec<f64>,
    pub threshold: f64,
    pub orientation: Orientation,
    pub train_accuracy: f64,
}

/// Counters gathered while training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrainStats {
    pub score_evaluations: usize,
    pub candidates: usize,
}

/// Accuracy, confusion counts and raw scores for a labeled set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[true - 1][predicted - 1]`
    pub confusion: [[usize; 2]; 2],
    pub scores: Vec<f64>,
    pub predictions: Vec<Class>,
}

impl Evaluation {
    pub fn n(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        self.confusion[0][0] + self.confusion[1][1]
    }
}

impl SmffnnModel {
    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    /// Output-node activation before the step: `sum_j w[j] * x[j]`.
    pub fn score(&self, normalized: &[f64]) -> Result<f64, SmffnnError> {
        if normalized.len() != self.weights.len() {
            return Err(SmffnnError::DimensionMismatch {
                expected: self.weights.len(),
                got: normalized.len(),
            });
        }
        Ok(weighted_sum(&self.weights, normalized))
    }

    pub fn classify_score(&self, score: f64) -> Class {
        self.orientation.classify(score, self.threshold)
    }

    /// Scales a raw instance with the stored training statistics (clamped to
    /// `[0, 1]`).
    pub fn normalize(&self, raw: &[f64]) -> Result<Vec<f64>, SmffnnError> {
        if raw.len() != self.weights.len() {
            return Err(SmffnnError::DimensionMismatch {
                expected: self.weights.len(),
                got: raw.len(),
            });
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(SmffnnError::NonFiniteInput);
        }
        Ok(raw
            .iter()
            .enumerate()
            .map(|(j, &x)| pwla::scale_value(x, self.col_min[j], self.col_max[j]))
            .collect())
    }

    /// Predicts the class of a raw instance over the retained attributes.
    pub fn predict(&self, raw: &[f64]) -> Result<Class, SmffnnError> {
        Ok(self.predict_scored(raw)?.1)
    }

    pub fn predict_scored(&self, raw: &[f64]) -> Result<(f64, Class), SmffnnError> {
        let x = self.normalize(raw)?;
        let s = weighted_sum(&self.weights, &x);
        Ok((s, self.classify_score(s)))
    }

    /// Pulls the retained attribute columns out of `ds` by name.
    pub fn retained_rows(&self, ds: &Dataset) -> Result<Vec<Vec<f64>>, SmffnnError> {
        let idx = self
            .attribute_names
            .iter()
            .map(|n| {
                ds.attribute_index(n)
                    .ok_or_else(|| SmffnnError::MissingAttribute(n.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ds
            .rows()
            .map(|r| idx.iter().map(|&j| r[j]).collect())
            .collect())
    }

    /// Scores and classifies every instance of `ds`, in row order.
    pub fn assign(&self, ds: &Dataset) -> Result<Vec<(f64, Class)>, SmffnnError> {
        self.retained_rows(ds)?
            .iter()
            .map(|r| self.predict_scored(r))
            .collect()
    }
}

fn weighted_sum(weights: &[f64], x: &[f64]) -> f64 {
    let mut s = 0.0;
    for (w, v) in weights.iter().zip(x) {
        s += w * v;
    }
    s
}

/// Trains on a projected matrix using the strong weights of `pw`.
pub fn train(
    nm: &NormalizedMatrix,
    pw: &PotentialWeights,
    labels: &[Class],
) -> Result<SmffnnModel, SmffnnError> {
    train_with_stats(nm, pw, labels).map(|(m, _)| m)
}

/// [`train`] that also reports how many scores were computed.
pub fn train_with_stats(
    nm: &NormalizedMatrix,
    pw: &PotentialWeights,
    labels: &[Class],
) -> Result<(SmffnnModel, TrainStats), SmffnnError> {
    if !pw.is_reduced() || pw.strong_names() != nm.names() {
        return Err(SmffnnError::NotReduced);
    }
    if labels.len() != nm.n_rows() {
        return Err(SmffnnError::DimensionMismatch {
            expected: nm.n_rows(),
            got: labels.len(),
        });
    }
    let n1 = labels.iter().filter(|&&c| c == Class::One).count();
    if n1 == 0 || n1 == labels.len() {
        return Err(SmffnnError::SingleClassTraining);
    }

    let weights = pw.strong_weights();
    let mut stats = TrainStats::default();
    let mut model = SmffnnModel {
        attribute_names: nm.names().to_vec(),
        weights,
        col_min: nm.col_min().to_vec(),
        col_max: nm.col_max().to_vec(),
        threshold: 0.0,
        orientation: Orientation::Class1Above,
        train_accuracy: 0.0,
    };

    // the single epoch
    let mut scored: Vec<(f64, Class)> = Vec::with_capacity(nm.n_rows());
    for (row, &c) in nm.rows().zip(labels) {
        scored.push((model.score(row)?, c));
        stats.score_evaluations += 1;
    }

    let choice = best_threshold(&mut scored, &mut stats);
    model.threshold = choice.theta;
    model.orientation = choice.orientation;
    model.train_accuracy = choice.correct as f64 / labels.len() as f64;
    Ok((model, stats))
}

#[derive(Debug, Clone, Copy)]
struct Choice {
    theta: f64,
    orientation: Orientation,
    correct: usize,
    margin: f64,
}

impl Choice {
    fn beats(&self, other: &Choice) -> bool {
        if self.correct != other.correct {
            return self.correct > other.correct;
        }
        if self.margin != other.margin {
            return self.margin > other.margin;
        }
        // candidates arrive in ascending theta, so equal keys keep the smaller one
        self.orientation == Orientation::Class1Above && other.orientation == Orientation::Class1Below
    }
}

/// A threshold strictly above `lo` and at most `hi`.
fn split_point(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) * 0.5;
    if mid > lo && mid <= hi {
        mid
    } else {
        hi
    }
}

fn best_threshold(scored: &mut [(f64, Class)], stats: &mut TrainStats) -> Choice {
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));

    // distinct score values with per-value class counts
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    for &(s, c) in scored.iter() {
        match groups.last_mut() {
            Some(g) if g.0 == s => bump(g, c),
            _ => {
                let mut g = (s, 0, 0);
                bump(&mut g, c);
                groups.push(g);
            }
        }
    }
    let total1: usize = groups.iter().map(|g| g.1).sum();
    let total2: usize = groups.iter().map(|g| g.2).sum();

    let min_gap = groups
        .windows(2)
        .map(|w| w[1].0 - w[0].0)
        .fold(f64::INFINITY, f64::min);
    let edge = if min_gap.is_finite() { min_gap / 2.0 } else { 0.5 };

    let mut best: Option<Choice> = None;
    let (mut below1, mut below2) = (0usize, 0usize);
    for k in 0..=groups.len() {
        let (theta, margin) = if k == 0 {
            let lo = groups[0].0;
            let t = (lo - edge).min(lo.next_down());
            (t, lo - t)
        } else if k == groups.len() {
            let hi = groups[k - 1].0;
            let t = (hi + edge).max(hi.next_up());
            (t, t - hi)
        } else {
            let (lo, hi) = (groups[k - 1].0, groups[k].0);
            let t = split_point(lo, hi);
            (t, (t - lo).min(hi - t))
        };
        let above_correct = below2 + (total1 - below1);
        let below_correct = below1 + (total2 - below2);
        for (orientation, correct) in [
            (Orientation::Class1Above, above_correct),
            (Orientation::Class1Below, below_correct),
        ] {
            stats.candidates += 1;
            let c = Choice {
                theta,
                orientation,
                correct,
                margin,
            };
            if best.as_ref().is_none_or(|b| c.beats(b)) {
                best = Some(c);
            }
        }
        if k < groups.len() {
            below1 += groups[k].1;
            below2 += groups[k].2;
        }
    }
    best.expect("at least two candidates")
}

fn bump(g: &mut (f64, usize, usize), c: Class) {
    match c {
        Class::One => g.1 += 1,
        Class::Two => g.2 += 1,
    }
}

/// Full path from a labeled dataset: pre-train with `policy`, then train.
pub fn fit(ds: &Dataset, policy: ReductionPolicy) -> Result<SmffnnModel, SmffnnError> {
    let labels = ds.labels().ok_or(SmffnnError::Unlabeled)?;
    let pre = pwla::pretrain(ds, policy)?;
    train(&pre.projected, &pre.weights, labels)
}

/// Scores pre-extracted raw rows against known labels.
pub fn evaluate_rows(
    model: &SmffnnModel,
    rows: &[Vec<f64>],
    labels: &[Class],
) -> Result<Evaluation, SmffnnError> {
    if rows.is_empty() {
        return Err(SmffnnError::EmptyTestSet);
    }
    if rows.len() != labels.len() {
        return Err(SmffnnError::DimensionMismatch {
            expected: rows.len(),
            got: labels.len(),
        });
    }
    let mut confusion = [[0usize; 2]; 2];
    let mut scores = Vec::with_capacity(rows.len());
    let mut predictions = Vec::with_capacity(rows.len());
    for (row, &truth) in rows.iter().zip(labels) {
        let (s, predicted) = model.predict_scored(row)?;
        confusion[truth.as_u8() as usize - 1][predicted.as_u8() as usize - 1] += 1;
        scores.push(s);
        predictions.push(predicted);
    }
    let correct = confusion[0][0] + confusion[1][1];
    Ok(Evaluation {
        accuracy: correct as f64 / rows.len() as f64,
        confusion,
        scores,
        predictions,
    })
}

/// Evaluates on a labeled dataset that contains (at least) the retained attributes.
pub fn evaluate(model: &SmffnnModel, test: &Dataset) -> Result<Evaluation, SmffnnError> {
    let labels = test.labels().ok_or(SmffnnError::Unlabeled)?;
    evaluate_rows(model, &model.retained_rows(test)?, labels)
}

const MODEL_MAGIC: &str = "SMFFNN-MODEL v1";

/// Versioned plain-text model snapshot.
///
/// ```text
/// SMFFNN-MODEL v1
/// threshold <theta>
/// orientation class1_above|class1_below
/// train_accuracy <acc>
/// attributes <k>
/// <name>\t<min>\t<max>\t<weight>     (k lines)
/// ```
pub fn model_snapshot(model: &SmffnnModel) -> String {
    let mut out = format!("{MODEL_MAGIC}\n");
    out.push_str(&format!("threshold {}\n", model.threshold));
    out.push_str(&format!("orientation {}\n", model.orientation));
    out.push_str(&format!("train_accuracy {}\n", model.train_accuracy));
    out.push_str(&format!("attributes {}\n", model.attribute_names.len()));
    for j in 0..model.attribute_names.len() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            model.attribute_names[j], model.col_min[j], model.col_max[j], model.weights[j]
        ));
    }
    out
}

pub fn parse_model_snapshot(text: &str) -> Result<SmffnnModel, SmffnnError> {
    let bad = |m: &str| SmffnnError::MalformedSnapshot(m.to_string());
    let mut lines = text.lines();
    if lines.next() != Some(MODEL_MAGIC) {
        return Err(bad("missing magic line"));
    }
    let mut field = |key: &str| -> Result<String, SmffnnError> {
        let line = lines.next().ok_or_else(|| bad(key))?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.to_string()),
            _ => Err(bad(key)),
        }
    };
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(s));
    let threshold = num(&field("threshold")?)?;
    let orientation = Orientation::parse(&field("orientation")?).ok_or_else(|| bad("orientation"))?;
    let train_accuracy = num(&field("train_accuracy")?)?;
    let k: usize = field("attributes")?.parse().map_err(|_| bad("attributes"))?;

    let mut model = SmffnnModel {
        attribute_names: Vec::with_capacity(k),
        weights: Vec::with_capacity(k),
        col_min: Vec::with_capacity(k),
        col_max: Vec::with_capacity(k),
        threshold,
        orientation,
        train_accuracy,
    };
    for _ in 0..k {
        let line = lines.next().ok_or_else(|| bad("attribute line"))?;
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != 4 {
            return Err(bad(line));
        }
        model.attribute_names.push(cells[0].to_string());
        model.col_min.push(num(cells[1])?);
        model.col_max.push(num(cells[2])?);
        model.weights.push(num(cells[3])?);
    }
    if lines.any(|l| !l.trim().is_empty()) || k == 0 || !threshold.is_finite() {
        return Err(bad("trailing content or empty model"));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pwla::{potential_weights, reduce};

    fn model(weights: &[f64], threshold: f64, orientation: Orientation) -> SmffnnModel {
        SmffnnModel {
            attribute_names: (0..weights.len()).map(|j| format!("a{j}")).collect(),
            weights: weights.to_vec(),
            col_min: vec![0.0; weights.len()],
            col_max: vec![1.0; weights.len()],
            threshold,
            orientation,
            train_accuracy: 1.0,
        }
    }

    /// Single-column matrix whose scores equal `scores / max` with weight 1
    /// after reduction, so the threshold scan runs over known values.
    fn fixture(scores: &[f64]) -> (NormalizedMatrix, PotentialWeights) {
        let nm = NormalizedMatrix::from_parts(
            vec!["s".into()],
            scores.iter().map(|&s| vec![s]).collect(),
            vec![0.0],
            vec![1.0],
        )
        .unwrap();
        let pw = reduce(&potential_weights(&nm), ReductionPolicy::TopK(1)).unwrap();
        (nm, pw)
    }

    use Class::{One, Two};

    #[test]
    fn score_examples() {
        let m = model(&[1.0, 1.0], 0.9, Orientation::Class1Above);
        assert_eq!(m.score(&[0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(m.score(&[0.0, 0.0]).unwrap(), 0.0);
        let m = model(&[1.0, 0.5], 0.9, Orientation::Class1Above);
        assert_eq!(m.score(&[1.0, 1.0]).unwrap(), 1.5);
        assert_eq!(
            m.score(&[1.0]).unwrap_err(),
            SmffnnError::DimensionMismatch { expected: 2, got: 1 }
        );
    }

    #[test]
    fn predict_examples() {
        let m = model(&[1.0, 1.0], 0.9, Orientation::Class1Above);
        assert_eq!(m.predict(&[0.5, 0.5]).unwrap(), One);
        assert_eq!(m.predict(&[0.1, 0.1]).unwrap(), Two);
        let m = model(&[1.0, 1.0], 1.0, Orientation::Class1Above);
        assert_eq!(m.predict(&[0.5, 0.5]).unwrap(), One);
        let m = model(&[1.0, 1.0], 1.0, Orientation::Class1Below);
        assert_eq!(m.predict(&[0.5, 0.5]).unwrap(), Two);
        assert_eq!(m.predict(&[0.4, 0.5]).unwrap(), One);
        assert!(m.predict(&[1.0]).is_err());
    }

    #[test]
    fn out_of_range_input_is_clamped() {
        let m = model(&[1.0], 0.5, Orientation::Class1Above);
        assert_eq!(m.predict_scored(&[7.0]).unwrap(), (1.0, One));
        assert_eq!(m.predict_scored(&[-7.0]).unwrap(), (0.0, Two));
    }

    #[test]
    fn extreme_candidates_stay_outside_tight_clusters() {
        let top: f64 = 5.169753086419753;
        let mut scored = vec![(2.0, Class::Two), (top.next_down(), Class::Two), (top, Class::Two), (top + 1.0, Class::One)];
        let mut stats = TrainStats::default();
        let c = best_threshold(&mut scored, &mut stats);
        assert_eq!(c.correct, 4);
        let mut all_two = vec![(top.next_down(), Class::Two), (top, Class::Two), (top, Class::One)];
        let c = best_threshold(&mut all_two, &mut stats);
        assert_eq!(c.correct, 2);
        let above = c.orientation == Orientation::Class1Above;
        assert!(if above { c.theta > top } else { c.theta <= top.next_down() });
    }

    #[test]
    fn separable_scores_put_theta_in_the_gap() {
        // scaled by 1/11 so values sit in [0, 1]
        let (nm, pw) = fixture(&[1.0 / 11.0, 2.0 / 11.0, 10.0 / 11.0, 1.0]);
        let m = train(&nm, &pw, &[Two, Two, One, One]).unwrap();
        let w = m.weights[0];
        assert_eq!(m.orientation, Orientation::Class1Above);
        assert_eq!(m.train_accuracy, 1.0);
        assert!((m.threshold / w - 6.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn raw_scores_one_two_ten_eleven() {
        let scores = [1.0, 2.0, 10.0, 11.0];
        let mut scored: Vec<(f64, Class)> = scores.iter().copied().zip([Two, Two, One, One]).collect();
        let mut stats = TrainStats::default();
        let c = best_threshold(&mut scored, &mut stats);
        assert_eq!(c.theta, 6.0);
        assert_eq!(c.orientation, Orientation::Class1Above);
        assert_eq!(c.correct, 4);
        assert_eq!(stats.candidates, 10);
    }

    #[test]
    fn interleaved_scores_reach_three_quarters() {
        let mut scored = vec![(1.0, One), (2.0, Two), (3.0, One), (4.0, Two)];
        let c = best_threshold(&mut scored, &mut TrainStats::default());
        assert_eq!(c.correct, 3);
        let (nm, pw) = fixture(&[0.25, 0.5, 0.75, 1.0]);
        let m = train(&nm, &pw, &[One, Two, One, Two]).unwrap();
        assert_eq!(m.train_accuracy, 0.75);
    }

    #[test]
    fn single_class_rejected() {
        let (nm, pw) = fixture(&[0.0, 0.5, 1.0]);
        assert_eq!(train(&nm, &pw, &[One, One, One]).unwrap_err(), SmffnnError::SingleClassTraining);
    }

    #[test]
    fn unreduced_weights_rejected() {
        let (nm, _) = fixture(&[0.0, 1.0]);
        let pw = potential_weights(&nm);
        assert_eq!(train(&nm, &pw, &[One, Two]).unwrap_err(), SmffnnError::NotReduced);
    }

    #[test]
    fn one_score_per_instance() {
        let (nm, pw) = fixture(&[0.0, 0.1, 0.4, 0.4, 0.9, 1.0]);
        let (_, stats) = train_with_stats(&nm, &pw, &[Two, Two, One, Two, One, One]).unwrap();
        assert_eq!(stats.score_evaluations, 6);
    }

    #[test]
    fn tie_break_prefers_wider_margin() {
        let mut scored = vec![(1.0, Two), (2.0, One), (9.0, One)];
        let c = best_threshold(&mut scored, &mut TrainStats::default());
        assert_eq!(c.correct, 3);
        assert_eq!(c.theta, 1.5);
        // 1.5 and 11 both leave one error; 11 sits two units from its neighbours
        let mut scored = vec![(1.0, Two), (2.0, One), (9.0, Two), (13.0, One)];
        let c = best_threshold(&mut scored, &mut TrainStats::default());
        assert_eq!(c.correct, 3);
        assert_eq!(c.theta, 11.0);
        assert_eq!(c.margin, 2.0);
    }

    #[test]
    fn adjacent_floats_still_split() {
        let lo = 0.5f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let t = split_point(lo, hi);
        assert!(t > lo && t <= hi);
        let mut scored = vec![(lo, Two), (hi, One)];
        let c = best_threshold(&mut scored, &mut TrainStats::default());
        assert_eq!(c.correct, 2);
    }

    #[test]
    fn evaluation_counts() {
        let m = model(&[1.0], 0.5, Orientation::Class1Above);
        let rows = vec![vec![0.9], vec![0.1], vec![0.8], vec![0.7]];
        let e = evaluate_rows(&m, &rows, &[One, Two, Two, One]).unwrap();
        assert_eq!(e.accuracy, 0.75);
        assert_eq!(e.correct(), 3);
        assert_eq!(e.n(), 4);
        assert_eq!(e.confusion, [[2, 0], [1, 1]]);
        assert_eq!(evaluate_rows(&m, &[], &[]).unwrap_err(), SmffnnError::EmptyTestSet);
    }

    #[test]
    fn constant_predictor_on_balanced_set() {
        let m = model(&[1.0], -1.0, Orientation::Class1Above);
        let rows = vec![vec![0.0], vec![0.3], vec![0.6], vec![1.0]];
        let e = evaluate_rows(&m, &rows, &[One, Two, One, Two]).unwrap();
        assert_eq!(e.accuracy, 0.5);
    }

    #[test]
    fn snapshot_round_trip() {
        let mut m = model(&[0.125, 3.0e-9], 1.0 / 3.0, Orientation::Class1Below);
        m.col_min = vec![-2.5, 10.0];
        m.col_max = vec![7.0, 1e12];
        m.train_accuracy = 0.9;
        let back = parse_model_snapshot(&model_snapshot(&m)).unwrap();
        assert_eq!(back, m);
        assert!(parse_model_snapshot("SMFFNN-MODEL v2\n").is_err());
    }
}
