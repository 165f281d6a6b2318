//! Accuracy, macro precision/recall/F1, one-vs-rest ROC-AUC, KS and ROC curve export.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub f1_macro: f64,
}

pub fn classification_metrics(
    truth: &[usize],
    predicted: &[usize],
    k: usize,
) -> Result<ClassificationMetrics> {
    if truth.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} predictions", truth.len()),
            found: format!("{}", predicted.len()),
        });
    }
    if truth.is_empty() {
        return Err(Error::NothingToEvaluate);
    }
    if let Some(&c) = truth.iter().chain(predicted).find(|&&c| c >= k) {
        return Err(Error::invalid(format!(
            "class id {c} out of range for {k} classes"
        )));
    }
    let mut tp = vec![0usize; k];
    let mut pred_count = vec![0usize; k];
    let mut true_count = vec![0usize; k];
    for (&t, &p) in truth.iter().zip(predicted) {
        true_count[t] += 1;
        pred_count[p] += 1;
        if t == p {
            tp[t] += 1;
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let mut precision = 0.0;
    let mut recall = 0.0;
    let mut f1 = 0.0;
    for c in 0..k {
        let p = ratio(tp[c], pred_count[c]);
        let r = ratio(tp[c], true_count[c]);
        precision += p;
        recall += r;
        if p + r > 0.0 {
            f1 += 2.0 * p * r / (p + r);
        }
    }
    let kf = k as f64;
    Ok(ClassificationMetrics {
        accuracy: ratio(tp.iter().sum(), truth.len()),
        precision_macro: precision / kf,
        recall_macro: recall / kf,
        f1_macro: f1 / kf,
    })
}

fn check_binary(scores: &[f64], positives: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != positives.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} labels", scores.len()),
            found: format!("{}", positives.len()),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("scores must be finite"));
    }
    let pos = positives.iter().filter(|&&p| p).count();
    let neg = positives.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::invalid(
            "need at least one positive and one negative sample",
        ));
    }
    Ok((pos, neg))
}

/// Sorted (ascending) score order, with positives counted per run of tied scores.
/// Each entry is `(score, positives, negatives)`.
fn tied_runs(scores: &[f64], positives: &[bool]) -> Vec<(f64, usize, usize)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut runs: Vec<(f64, usize, usize)> = Vec::new();
    for i in order {
        let (p, n) = if positives[i] { (1, 0) } else { (0, 1) };
        match runs.last_mut() {
            Some(last) if last.0.total_cmp(&scores[i]) == Ordering::Equal => {
                last.1 += p;
                last.2 += n;
            }
            _ => runs.push((scores[i], p, n)),
        }
    }
    runs
}

/// Mann–Whitney AUC with midranks (ties count one half).
pub fn binary_auc(scores: &[f64], positives: &[bool]) -> Result<f64> {
    let (pos, neg) = check_binary(scores, positives)?;
    // Twice the U statistic keeps everything integral.
    let mut twice_u: u128 = 0;
    let mut neg_below: u128 = 0;
    for (_, p, n) in tied_runs(scores, positives) {
        twice_u += (p as u128) * (2 * neg_below + n as u128);
        neg_below += n as u128;
    }
    Ok(twice_u as f64 / 2.0 / (pos as f64 * neg as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucReport {
    /// `None` when the class has no positive or no negative among the evaluated rows.
    pub per_class: Vec<Option<f64>>,
    /// Unweighted mean over the defined classes.
    pub overall: f64,
}

pub fn roc_auc_ovr(scores: &DMatrix<f64>, truth: &[usize]) -> Result<AucReport> {
    if scores.nrows() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} score rows", truth.len()),
            found: format!("{}", scores.nrows()),
        });
    }
    let mut per_class = Vec::with_capacity(scores.ncols());
    for c in 0..scores.ncols() {
        let positives: Vec<bool> = truth.iter().map(|&t| t == c).collect();
        let column: Vec<f64> = scores.column(c).iter().copied().collect();
        let n_pos = positives.iter().filter(|&&p| p).count();
        if n_pos == 0 || n_pos == positives.len() {
            log::warn!("AUC undefined for class {c}; excluded from the overall mean");
            per_class.push(None);
        } else {
            per_class.push(Some(binary_auc(&column, &positives)?));
        }
    }
    let defined: Vec<f64> = per_class.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::invalid("AUC undefined for every class"));
    }
    let overall = defined.iter().sum::<f64>() / defined.len() as f64;
    Ok(AucReport { per_class, overall })
}

/// Largest gap between the positive and negative empirical CDFs.
pub fn ks_statistic(scores: &[f64], positives: &[bool]) -> Result<f64> {
    let (pos, neg) = check_binary(scores, positives)?;
    // |cp/pos - cn/neg| scaled by pos·neg stays integral; divide once at the end.
    let (mut cp, mut cn) = (0u128, 0u128);
    let mut best: u128 = 0;
    for (_, p, n) in tied_runs(scores, positives) {
        cp += p as u128;
        cn += n as u128;
        best = best.max((cp * neg as u128).abs_diff(cn * pos as u128));
    }
    Ok(best as f64 / (pos as f64 * neg as f64))
}

/// `(fpr, tpr)` points for thresholds at every distinct score, highest first.
pub fn roc_curve_points(scores: &[f64], positives: &[bool]) -> Result<Vec<(f64, f64)>> {
    let (pos, neg) = check_binary(scores, positives)?;
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    for (_, p, n) in tied_runs(scores, positives).into_iter().rev() {
        tp += p;
        fp += n;
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    if points.last() != Some(&(1.0, 1.0)) {
        points.push((1.0, 1.0));
    }
    Ok(points)
}

pub fn trapezoid_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreNormalization {
    RowSum,
    Softmax,
}

/// Turns raw label scores into per-row distributions.
///
/// Row-sum scaling is used when every entry is nonnegative, otherwise a row softmax; one rule is
/// applied to the whole matrix so scores stay comparable across rows. All-zero rows become uniform.
pub fn normalize_scores(u: &DMatrix<f64>) -> (DMatrix<f64>, ScoreNormalization) {
    let k = u.ncols().max(1) as f64;
    let mut out = u.clone();
    if u.iter().all(|&v| v >= 0.0) {
        for mut row in out.row_iter_mut() {
            let s: f64 = row.sum();
            if s > 0.0 {
                row /= s;
            } else {
                row.fill(1.0 / k);
            }
        }
        (out, ScoreNormalization::RowSum)
    } else {
        for mut row in out.row_iter_mut() {
            let max = row.max();
            row.apply(|v| *v = (*v - max).exp());
            let s: f64 = row.sum();
            row /= s;
        }
        (out, ScoreNormalization::Softmax)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub f1_macro: f64,
    pub auc_per_class: Vec<Option<f64>>,
    pub auc_overall: f64,
    pub ks_per_class: Vec<Option<f64>>,
    pub roc_curves: Vec<Vec<(f64, f64)>>,
    pub normalization: ScoreNormalization,
}

/// Full report for the evaluated rows. `scores` holds raw (unnormalized) class scores.
pub fn metrics_report(
    truth: &[usize],
    predicted: &[usize],
    scores: &DMatrix<f64>,
) -> Result<MetricsReport> {
    let k = scores.ncols();
    let cls = classification_metrics(truth, predicted, k)?;
    let (probs, normalization) = normalize_scores(scores);
    let auc = roc_auc_ovr(&probs, truth)?;
    let mut ks_per_class = Vec::with_capacity(k);
    let mut roc_curves = Vec::with_capacity(k);
    for c in 0..k {
        let positives: Vec<bool> = truth.iter().map(|&t| t == c).collect();
        let column: Vec<f64> = probs.column(c).iter().copied().collect();
        if auc.per_class[c].is_some() {
            ks_per_class.push(Some(ks_statistic(&column, &positives)?));
            roc_curves.push(roc_curve_points(&column, &positives)?);
        } else {
            ks_per_class.push(None);
            roc_curves.push(Vec::new());
        }
    }
    Ok(MetricsReport {
        accuracy: cls.accuracy,
        precision_macro: cls.precision_macro,
        recall_macro: cls.recall_macro,
        f1_macro: cls.f1_macro,
        auc_per_class: auc.per_class,
        auc_overall: auc.overall,
        ks_per_class,
        roc_curves,
        normalization,
    })
}
