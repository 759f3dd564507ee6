//! Imbalance-aware evaluation.
//!
//! Average precision is the step-wise sum `sum_n (R_n - R_{n-1}) P_n` over
//! the curve, without interpolation. "Precision at recall r" is the precision
//! of the first curve point, in descending-threshold order, whose recall is at
//! least `r`.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
    pub threshold: f64,
}

/// Precision-recall curve, one point per distinct score, highest threshold
/// first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
}

/// Recall levels reported by [`MetricReport`].
pub const REPORTED_RECALLS: [f64; 3] = [0.75, 0.5, 0.25];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMetrics {
    pub f1: f64,
    pub mcc: f64,
    pub kappa: f64,
    pub accuracy: f64,
    pub counts: Confusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub auc_pr: f64,
    /// Precision at recall 0.75, 0.5 and 0.25.
    pub precision_at: [f64; 3],
    pub f1: f64,
    pub mcc: f64,
    pub kappa: f64,
    pub accuracy: f64,
    pub counts: Confusion,
}

fn validate(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite score {s}")));
    }
    Ok(())
}

pub fn pr_curve(scores: &[f64], labels: &[u8]) -> Result<PrCurve> {
    validate(scores, labels)?;
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 {
        return Err(Error::InvalidArgument(
            "precision-recall curve needs at least one positive".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));

    let mut points = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(PrPoint {
            recall: tp as f64 / positives as f64,
            precision: tp as f64 / (tp + fp) as f64,
            threshold,
        });
    }
    Ok(PrCurve { points })
}

pub fn average_precision(curve: &PrCurve) -> f64 {
    let mut prev = 0.0;
    let mut ap = 0.0;
    for p in &curve.points {
        ap += (p.recall - prev) * p.precision;
        prev = p.recall;
    }
    ap
}

pub fn precision_at_recall(curve: &PrCurve, recall: f64) -> f64 {
    curve
        .points
        .iter()
        .find(|p| p.recall >= recall)
        .or(curve.points.last())
        .map_or(0.0, |p| p.precision)
}

/// Counts and scalar metrics with `score >= threshold` predicted positive.
/// MCC and kappa are 0 when their denominator vanishes.
pub fn threshold_metrics(
    scores: &[f64],
    labels: &[u8],
    threshold: f64,
) -> Result<ThresholdMetrics> {
    validate(scores, labels)?;
    let mut c = Confusion::default();
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(metrics_from_counts(c))
}

pub fn metrics_from_counts(c: Confusion) -> ThresholdMetrics {
    let (tp, fp, tn, fnc) = (c.tp as f64, c.fp as f64, c.tn as f64, c.fn_ as f64);
    let n = tp + fp + tn + fnc;
    let f1 = if 2.0 * tp + fp + fnc > 0.0 {
        2.0 * tp / (2.0 * tp + fp + fnc)
    } else {
        0.0
    };
    let mcc_den = ((tp + fp) * (tp + fnc) * (tn + fp) * (tn + fnc)).sqrt();
    let mcc = if mcc_den > 0.0 {
        (tp * tn - fp * fnc) / mcc_den
    } else {
        0.0
    };
    let accuracy = if n > 0.0 { (tp + tn) / n } else { 0.0 };
    let expected = if n > 0.0 {
        ((tp + fp) * (tp + fnc) + (tn + fnc) * (tn + fp)) / (n * n)
    } else {
        0.0
    };
    let kappa = if 1.0 - expected > 0.0 {
        (accuracy - expected) / (1.0 - expected)
    } else {
        0.0
    };
    ThresholdMetrics {
        f1,
        mcc,
        kappa,
        accuracy,
        counts: c,
    }
}

pub fn evaluate(scores: &[f64], labels: &[u8], threshold: f64) -> Result<MetricReport> {
    let curve = pr_curve(scores, labels)?;
    let t = threshold_metrics(scores, labels, threshold)?;
    Ok(MetricReport {
        auc_pr: average_precision(&curve),
        precision_at: REPORTED_RECALLS.map(|r| precision_at_recall(&curve, r)),
        f1: t.f1,
        mcc: t.mcc,
        kappa: t.kappa,
        accuracy: t.accuracy,
        counts: t.counts,
    })
}

impl PrCurve {
    /// CSV with header `threshold,recall,precision`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "threshold,recall,precision")?;
        for p in &self.points {
            writeln!(out, "{},{},{}", p.threshold, p.recall, p.precision)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng as _;

    /// Enumerate every distinct threshold independently of the sorted sweep.
    fn brute_force(scores: &[f64], labels: &[u8]) -> (Vec<PrPoint>, f64) {
        let mut thresholds: Vec<f64> = scores.to_vec();
        thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
        thresholds.dedup();
        let positives = labels.iter().filter(|&&l| l == 1).count() as f64;
        let mut points = Vec::new();
        for &t in &thresholds {
            let tp = scores
                .iter()
                .zip(labels)
                .filter(|(s, l)| **s >= t && **l == 1)
                .count();
            let pp = scores.iter().filter(|s| **s >= t).count();
            points.push(PrPoint {
                recall: tp as f64 / positives,
                precision: tp as f64 / pp as f64,
                threshold: t,
            });
        }
        let mut ap = 0.0;
        let mut prev = 0.0;
        for p in &points {
            ap += (p.recall - prev) * p.precision;
            prev = p.recall;
        }
        (points, ap)
    }

    #[test]
    fn perfect_ranking() {
        let scores = [0.9, 0.8, 0.3, 0.1];
        let labels = [1, 1, 0, 0];
        let curve = pr_curve(&scores, &labels).unwrap();
        // Precision 1 until the last positive is reached.
        assert_eq!(curve.points[0].precision, 1.0);
        assert_eq!(curve.points[1].precision, 1.0);
        assert_eq!(curve.points[1].recall, 1.0);
        assert_eq!(average_precision(&curve), 1.0);
        for r in [0.1, 0.5, 1.0] {
            assert_eq!(precision_at_recall(&curve, r), 1.0);
        }
    }

    #[test]
    fn constant_scores_collapse_to_one_point() {
        let labels = [1, 0, 0, 1, 0];
        let curve = pr_curve(&[0.4; 5], &labels).unwrap();
        assert_eq!(curve.points.len(), 1);
        assert_eq!(curve.points[0].recall, 1.0);
        assert_eq!(curve.points[0].precision, 0.4);
        assert_eq!(average_precision(&curve), 0.4);
        assert_eq!(precision_at_recall(&curve, 0.5), 0.4);
    }

    #[test]
    fn six_sample_hand_case() {
        let scores = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4];
        let labels = [1, 0, 1, 0, 0, 0];
        let curve = pr_curve(&scores, &labels).unwrap();
        let ap = average_precision(&curve);
        assert!((ap - (0.5 + 2.0 / 3.0 * 0.5)).abs() < 1e-15);
        assert!((precision_at_recall(&curve, 0.75) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn no_positives_is_an_error() {
        assert!(pr_curve(&[0.2, 0.3], &[0, 0]).is_err());
    }

    #[test]
    fn confusion_hand_case() {
        let m = metrics_from_counts(Confusion {
            tp: 3,
            fp: 1,
            tn: 5,
            fn_: 1,
        });
        assert!((m.f1 - 0.75).abs() < 1e-15);
        let mcc = (15.0 - 1.0) / (4.0f64 * 4.0 * 6.0 * 6.0).sqrt();
        assert!((m.mcc - mcc).abs() < 1e-15);
        assert!((m.accuracy - 0.8).abs() < 1e-15);
        let pe = (4.0 * 4.0 + 6.0 * 6.0) / 100.0;
        assert!((m.kappa - (0.8 - pe) / (1.0 - pe)).abs() < 1e-15);
    }

    #[test]
    fn all_correct_and_always_majority() {
        let labels = [1, 0, 0, 1, 0];
        let m = threshold_metrics(&[0.9, 0.1, 0.2, 0.8, 0.3], &labels, 0.5).unwrap();
        assert_eq!((m.f1, m.mcc, m.kappa, m.accuracy), (1.0, 1.0, 1.0, 1.0));

        let labels: Vec<u8> = (0..100).map(|i| u8::from(i < 5)).collect();
        let m = threshold_metrics(&[0.0; 100], &labels, 0.5).unwrap();
        assert!((m.accuracy - 0.95).abs() < 1e-15);
        assert_eq!(m.f1, 0.0);
        assert_eq!(m.mcc, 0.0);
        assert_eq!(m.kappa, 0.0);
    }

    #[test]
    fn matches_brute_force_enumeration_exactly() {
        let mut rng = seed::rng(2024);
        for case in 0..200 {
            let n = rng.gen_range(1..=20);
            let mut labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.4))).collect();
            labels[rng.gen_range(0..n)] = 1;
            // Coarse scores so ties are common.
            let scores: Vec<f64> = (0..n)
                .map(|_| f64::from(rng.gen_range(0..6u8)) / 5.0)
                .collect();
            let curve = pr_curve(&scores, &labels).unwrap();
            let (points, ap) = brute_force(&scores, &labels);
            assert_eq!(curve.points, points, "case {case}");
            assert_eq!(
                average_precision(&curve).to_bits(),
                ap.to_bits(),
                "case {case}"
            );
        }
    }

    #[test]
    fn ap_invariant_under_monotone_transform() {
        let mut rng = seed::rng(7);
        for _ in 0..50 {
            let n = 30;
            let mut labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.3))).collect();
            labels[0] = 1;
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let squashed: Vec<f64> = scores.iter().map(|&s| (2.0 * s).exp() + 1.0).collect();
            let a = average_precision(&pr_curve(&scores, &labels).unwrap());
            let b = average_precision(&pr_curve(&squashed, &labels).unwrap());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn random_scores_concentrate_near_positive_rate() {
        // The finite-sample upward bias of random AP is about (1 - pi) ln(n) / P,
        // so use enough positives for it to sit well inside the tolerance.
        let mut rng = seed::rng(99);
        let n = 1000;
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 5 == 0)).collect();
        let mut total = 0.0;
        for _ in 0..1000 {
            let scores: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            total += average_precision(&pr_curve(&scores, &labels).unwrap());
        }
        assert!((total / 1000.0 - 0.2).abs() < 0.02);
    }

    #[test]
    fn precision_at_recall_is_a_step_function_of_attained_recall() {
        let mut rng = seed::rng(5);
        for _ in 0..50 {
            let n = 25;
            let mut labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.3))).collect();
            labels[3] = 1;
            let scores: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
            let curve = pr_curve(&scores, &labels).unwrap();
            let recalls: Vec<f64> = curve.points.iter().map(|p| p.recall).collect();
            assert!(recalls.windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(recalls.last(), Some(&1.0));
            // Constant on each interval (R_{j-1}, R_j], equal to the precision
            // where level R_j is first reached.
            let mut prev_level = 0.0;
            for (i, p) in curve.points.iter().enumerate() {
                if p.recall == prev_level {
                    continue;
                }
                let first = curve.points[..=i]
                    .iter()
                    .find(|q| q.recall == p.recall)
                    .unwrap();
                for r in [prev_level + 1e-9, 0.5 * (prev_level + p.recall), p.recall] {
                    assert_eq!(precision_at_recall(&curve, r), first.precision);
                }
                prev_level = p.recall;
            }
        }
    }

    #[test]
    fn precision_at_recall_can_rise_with_recall() {
        // neg, pos, pos: reaching recall 0.5 costs one false positive,
        // reaching recall 1 costs no more.
        let curve = pr_curve(&[0.9, 0.8, 0.7], &[0, 1, 1]).unwrap();
        assert_eq!(precision_at_recall(&curve, 0.5), 0.5);
        assert!((precision_at_recall(&curve, 1.0) - 2.0 / 3.0).abs() < 1e-15);
    }
}
