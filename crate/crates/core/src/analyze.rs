//! Deconvolution-free differential expression ranking and the evaluation
//! criteria: E1, Pearson, Spearman, marker overlap and ROC AUC.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::deconvolve::invert_mixing;
use crate::error::{Error, Result};
use crate::model::{ExpressionMatrix, MixingMatrix};

/// Default fold change defining the gold-standard DE genes.
pub const DEFAULT_FOLD_CHANGE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Ascending,
    #[default]
    Descending,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankedGene {
    pub index: usize,
    /// `x1/x2`; `+inf` (flagged) when `x2 = 0`.
    pub score: f64,
    pub infinite: bool,
}

/// Genes ordered by `x1/x2`. Under any mixing with `a11/a21 > a12/a22`
/// this is the order of the pure ratios `s1/s2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeRanking {
    pub genes: Vec<RankedGene>,
    pub direction: Direction,
}

impl DeRanking {
    pub fn order(&self) -> Vec<usize> {
        self.genes.iter().map(|g| g.index).collect()
    }
}

/// Ratio `x1/x2`, with `+inf` for a zero denominator.
pub fn de_score(row: [f64; 2]) -> (f64, bool) {
    if row[1] > 0.0 {
        (row[0] / row[1], false)
    } else {
        (f64::INFINITY, true)
    }
}

/// Ranks genes by `x1/x2`; ties break by ascending gene index.
pub fn de_rank(x: &ExpressionMatrix, direction: Direction) -> DeRanking {
    let mut genes: Vec<RankedGene> = x
        .values()
        .iter()
        .enumerate()
        .map(|(index, &row)| {
            let (score, infinite) = de_score(row);
            RankedGene {
                index,
                score,
                infinite,
            }
        })
        .collect();
    genes.sort_by(|a, b| {
        let by_score = match direction {
            Direction::Ascending => a.score.total_cmp(&b.score),
            Direction::Descending => b.score.total_cmp(&a.score),
        };
        by_score.then(a.index.cmp(&b.index))
    });
    DeRanking { genes, direction }
}

/// Two-sided DE strength `|ln(x1/x2)|`. In proportion form a gene with
/// equal pure expression maps to `x1 = x2`, so the score is centred on
/// "no change". Genes with one zero sample score `+inf`; all-zero genes 0.
pub fn de_strength(row: [f64; 2]) -> f64 {
    match (row[0] > 0.0, row[1] > 0.0) {
        (true, true) => (row[0] / row[1]).ln().abs(),
        (false, false) => 0.0,
        _ => f64::INFINITY,
    }
}

/// Gold-standard DE labels from pure profiles: `s1/s2 >= fold` or
/// `s1/s2 <= 1/fold`.
pub fn fold_change_labels(sources: &[[f64; 2]], fold: f64) -> Vec<bool> {
    sources
        .iter()
        .map(|&[s1, s2]| {
            if s1 == 0.0 && s2 == 0.0 {
                false
            } else {
                s1 >= fold * s2 || s2 >= fold * s1
            }
        })
        .collect()
}

/// E1 for a matrix `P`: row-wise and column-wise sums of `|p|` over the
/// row/column maximum, each minus one. Zero iff `P` is a scaled permutation.
pub fn e1_from_p(p: [[f64; 2]; 2]) -> f64 {
    let abs = p.map(|r| r.map(f64::abs));
    let mut e = 0.0;
    for row in &abs {
        let m = row[0].max(row[1]);
        e += (row[0] + row[1]) / m - 1.0;
    }
    for j in 0..2 {
        let m = abs[0][j].max(abs[1][j]);
        e += (abs[0][j] + abs[1][j]) / m - 1.0;
    }
    e
}

/// `P = A_hat^-1 A_true`, formed as `adj(A_hat) A_true / det(A_hat)` so the
/// off-diagonal terms cancel exactly when the estimate is the truth.
pub fn performance_matrix(a_hat: &MixingMatrix, a_true: &MixingMatrix) -> Result<[[f64; 2]; 2]> {
    invert_mixing(a_true)?;
    let det = invert_mixing(a_hat)?.det;
    let [[a, b], [c, d]] = a_hat.entries();
    let adj = [[d, -b], [-c, a]];
    let t = a_true.entries();
    let mut p = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            p[i][j] = (adj[i][0] * t[0][j] + adj[i][1] * t[1][j]) / det;
        }
    }
    Ok(p)
}

/// Permutation- and scale-invariant error between estimated and true
/// mixing matrices.
pub fn e1_error(a_hat: &MixingMatrix, a_true: &MixingMatrix) -> Result<f64> {
    Ok(e1_from_p(performance_matrix(a_hat, a_true)?))
}

/// Whether the estimated columns are best matched to the true ones in
/// swapped order (the anti-diagonal of `P` dominates).
pub fn columns_swapped(a_hat: &MixingMatrix, a_true: &MixingMatrix) -> Result<bool> {
    let p = performance_matrix(a_hat, a_true)?;
    Ok((p[0][1] * p[1][0]).abs() > (p[0][0] * p[1][1]).abs())
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::ZeroVariance);
    }
    Ok(())
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// One-based ranks with ties sharing their average rank. Ordering follows
/// `f64::total_cmp`, so infinities rank at the ends.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len()
            && values[order[end]].total_cmp(&values[order[start]]) == Ordering::Equal
        {
            end += 1;
        }
        // positions start..end hold ranks start+1 ..= end
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of the average-rank vectors.
pub fn spearman_rank(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Venn counts `(only_a, both, only_b)`.
pub fn marker_overlap<T: Ord>(set_a: &[T], set_b: &[T]) -> (usize, usize, usize) {
    let a: BTreeSet<&T> = set_a.iter().collect();
    let b: BTreeSet<&T> = set_b.iter().collect();
    let both = a.intersection(&b).count();
    (a.len() - both, both, b.len() - both)
}

/// Area under the ROC curve as the fraction of (positive, negative) pairs
/// ranked correctly, ties counting one half. Computed from the rank sum of
/// the positives.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l)
        .map(|(r, _)| r)
        .sum();
    let n_pos_f = n_pos as f64;
    let u = rank_sum - n_pos_f * (n_pos_f + 1.0) / 2.0;
    Ok(u / (n_pos_f * n_neg as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Venn {
    pub only_a: usize,
    pub both: usize,
    pub only_b: usize,
}

impl From<(usize, usize, usize)> for Venn {
    fn from((only_a, both, only_b): (usize, usize, usize)) -> Self {
        Self {
            only_a,
            both,
            only_b,
        }
    }
}

/// Comparison of a deconvolution against known truth. Metrics that cannot
/// be computed from the available inputs are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub e1: f64,
    /// Estimated columns were matched to the truth in swapped order.
    pub columns_swapped: bool,
    pub pearson_markers: Option<f64>,
    pub pearson_all: Option<f64>,
    pub spearman_rank: Option<f64>,
    /// Detected (`a`) vs true (`b`) markers, as (source, gene) pairs.
    pub venn: Venn,
    pub auc: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AxisKind, MixingForm};

    fn matrix(rows: &[[f64; 2]]) -> ExpressionMatrix {
        let ids = (0..rows.len()).map(|i| format!("g{}", i + 1)).collect();
        ExpressionMatrix::new(ids, rows.to_vec(), AxisKind::Samples).unwrap()
    }

    #[test]
    fn de_rank_orders_by_ratio() {
        let x = matrix(&[[4.0, 1.0], [2.0, 2.0], [1.0, 4.0]]);
        let r = de_rank(&x, Direction::Descending);
        assert_eq!(r.order(), vec![0, 1, 2]);
        let scores: Vec<f64> = r.genes.iter().map(|g| g.score).collect();
        assert_eq!(scores, vec![4.0, 1.0, 0.25]);
        assert_eq!(de_rank(&x, Direction::Ascending).order(), vec![2, 1, 0]);
    }

    #[test]
    fn de_rank_ties_by_index() {
        let x = matrix(&[[2.0, 1.0], [4.0, 2.0], [1.0, 0.5]]);
        assert_eq!(de_rank(&x, Direction::Descending).order(), vec![0, 1, 2]);
        assert_eq!(de_rank(&x, Direction::Ascending).order(), vec![0, 1, 2]);
    }

    #[test]
    fn de_rank_infinite_on_top() {
        let x = matrix(&[[1.0, 1.0], [3.0, 0.0], [9.0, 1.0]]);
        let r = de_rank(&x, Direction::Descending);
        assert_eq!(r.order(), vec![1, 2, 0]);
        assert!(r.genes[0].infinite);
    }

    #[test]
    fn e1_zero_for_perfect_and_permuted() {
        let a = MixingMatrix::new([[0.6, 0.4], [0.1, 0.9]], MixingForm::Proportion).unwrap();
        assert_eq!(e1_error(&a, &a).unwrap(), 0.0);
        assert_eq!(e1_error(&a.swap_columns(), &a).unwrap(), 0.0);
        assert!(columns_swapped(&a.swap_columns(), &a).unwrap());
        assert!(!columns_swapped(&a, &a).unwrap());
    }

    #[test]
    fn e1_hand_example() {
        // rows: 0.1 + 0.1, columns: 0.1 + 0.1
        assert!((e1_from_p([[1.0, 0.1], [0.1, 1.0]]) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn pearson_basics() {
        let a = [1.0, 2.0, 3.0];
        assert!((pearson(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&a, &[-1.0, -2.0, -3.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!((pearson(&a, &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(
            pearson(&a, &[1.0, 1.0, 1.0]).unwrap_err(),
            Error::ZeroVariance
        );
        assert_eq!(
            pearson(&a, &[1.0]).unwrap_err(),
            Error::LengthMismatch { left: 3, right: 1 }
        );
    }

    #[test]
    fn spearman_basics() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman_rank(&a, &[10.0, 20.0, 30.0, 40.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman_rank(&a, &[4.0, 3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        // 1 - 6 * 2 / (4 * 15) = 0.8
        assert!((spearman_rank(&a, &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(
            spearman_rank(&a, &[5.0; 4]).unwrap_err(),
            Error::ZeroVariance
        );
    }

    #[test]
    fn average_ranks_with_ties() {
        assert_eq!(
            average_ranks(&[3.0, 1.0, 3.0, 2.0]),
            vec![3.5, 1.0, 3.5, 2.0]
        );
        assert_eq!(
            average_ranks(&[f64::INFINITY, 0.0, f64::INFINITY]),
            vec![2.5, 1.0, 2.5]
        );
    }

    #[test]
    fn overlap_counts() {
        assert_eq!(
            marker_overlap(&["a", "b", "c"], &["b", "c", "d"]),
            (1, 2, 1)
        );
        assert_eq!(marker_overlap(&[1, 2, 3], &[4, 5]), (3, 0, 2));
        assert_eq!(marker_overlap(&[1, 2, 3, 4], &[4, 3, 2, 1]), (0, 4, 0));
    }

    /// Pairwise-count oracle, ties counting one half.
    fn auc_by_pairs(scores: &[f64], labels: &[bool]) -> f64 {
        let (mut good, mut pairs) = (0.0, 0.0);
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if labels[i] && !labels[j] {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        good += 1.0;
                    } else if scores[i] == scores[j] {
                        good += 0.5;
                    }
                }
            }
        }
        good / pairs
    }

    #[test]
    fn auc_examples() {
        let labels = [true, true, false, false];
        assert_eq!(roc_auc(&[0.9, 0.8, 0.3, 0.1], &labels).unwrap(), 1.0);
        assert_eq!(auc_by_pairs(&[0.9, 0.1, 0.8, 0.2], &labels), 0.5);
        assert_eq!(roc_auc(&[0.9, 0.1, 0.8, 0.2], &labels).unwrap(), 0.5);
        assert_eq!(roc_auc(&[0.5; 4], &labels).unwrap(), 0.5);
        assert_eq!(
            roc_auc(&[0.1, 0.2], &[true, true]).unwrap_err(),
            Error::SingleClass
        );
    }

    #[test]
    fn auc_matches_pair_count_with_ties() {
        let scores = [0.3, 0.3, 0.7, 0.1, 0.7, 0.9, 0.3, f64::INFINITY];
        let labels = [true, false, true, false, false, true, true, false];
        assert!(
            (roc_auc(&scores, &labels).unwrap() - auc_by_pairs(&scores, &labels)).abs() < 1e-15
        );
    }

    #[test]
    fn fold_change_rule() {
        let labels = fold_change_labels(
            &[[4.0, 2.0], [1.0, 1.9], [0.0, 3.0], [0.0, 0.0], [1.0, 1.0]],
            2.0,
        );
        assert_eq!(labels, vec![true, false, true, false, false]);
    }

    #[test]
    fn de_strength_two_sided() {
        assert_eq!(de_strength([2.0, 2.0]), 0.0);
        assert!((de_strength([4.0, 1.0]) - de_strength([1.0, 4.0])).abs() < 1e-15);
        assert_eq!(de_strength([0.0, 1.0]), f64::INFINITY);
        assert_eq!(de_strength([0.0, 0.0]), 0.0);
    }
}
