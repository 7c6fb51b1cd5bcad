//! Per-sample normalization and removal of minimally-expressed and outlier
//! genes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ExpressionMatrix, NormKind};

/// Quantile of gene norms used as the lower cut when `delta` is not given.
pub const DEFAULT_DELTA_QUANTILE: f64 = 0.02;
/// Quantile of gene norms used as the upper cut when `gamma` is not given.
pub const DEFAULT_GAMMA_QUANTILE: f64 = 0.998;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMethod {
    #[default]
    Mean,
    Mode,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreprocessConfig {
    pub norm_method: NormMethod,
    /// Minimum gene norm; data-driven quantile when `None`.
    pub delta: Option<f64>,
    /// Maximum gene norm; data-driven quantile when `None`.
    pub gamma: Option<f64>,
    pub norm_kind: NormKind,
    pub mode_bins: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            norm_method: NormMethod::Mean,
            delta: None,
            gamma: None,
            norm_kind: NormKind::L2,
            mode_bins: 64,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mode_bins < 8 {
            return Err(Error::InvalidConfig(format!(
                "mode_bins must be at least 8, got {}",
                self.mode_bins
            )));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "delta must be positive, got {d}"
                )));
            }
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "gamma must be positive, got {g}"
                )));
            }
        }
        if let (Some(d), Some(g)) = (self.delta, self.gamma) {
            if d >= g {
                return Err(Error::InvalidConfig(format!(
                    "delta ({d}) must be below gamma ({g})"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreprocessReport {
    pub scale_factors: [f64; 2],
    /// Effective thresholds after resolving data-driven defaults.
    pub delta: f64,
    pub gamma: f64,
    pub removed_low: Vec<usize>,
    pub removed_outlier: Vec<usize>,
    /// Input row of every retained gene, in output order.
    pub retained: Vec<usize>,
    pub retained_count: usize,
}

/// Rescales the two sample columns so they become comparable.
///
/// `Mean` brings both column sums to the mean of the original sums. `Mode`
/// matches the histogram modes of the positive values (`mode_bins`
/// equal-width bins over the positive range, bin centre taken).
pub fn normalize_samples(
    x: &ExpressionMatrix,
    method: NormMethod,
    mode_bins: usize,
) -> Result<(ExpressionMatrix, [f64; 2])> {
    let reference = match method {
        NormMethod::None => return Ok((x.clone(), [1.0, 1.0])),
        NormMethod::Mean => {
            let sums = x.column_sums();
            for (col, &s) in sums.iter().enumerate() {
                if !(s > 0.0) {
                    return Err(Error::AllZeroColumn(col));
                }
            }
            sums
        }
        NormMethod::Mode => {
            if mode_bins < 8 {
                return Err(Error::InvalidConfig(format!(
                    "mode_bins must be at least 8, got {mode_bins}"
                )));
            }
            [
                histogram_mode(&x.column(0), mode_bins).ok_or(Error::AllZeroColumn(0))?,
                histogram_mode(&x.column(1), mode_bins).ok_or(Error::AllZeroColumn(1))?,
            ]
        }
    };
    let target = 0.5 * (reference[0] + reference[1]);
    let factors = [target / reference[0], target / reference[1]];
    Ok((x.scaled(factors), factors))
}

/// Centre of the most populated bin among the positive values, or `None`
/// when there are no positive values. Ties go to the lowest bin.
fn histogram_mode(values: &[f64], bins: usize) -> Option<f64> {
    let positive: Vec<f64> = values.iter().copied().filter(|&v| v > 0.0).collect();
    let lo = positive.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = positive.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if positive.is_empty() {
        return None;
    }
    if hi == lo {
        return Some(lo);
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for v in positive {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let best = counts
        .iter()
        .enumerate()
        .fold(0, |best, (i, &c)| if c > counts[best] { i } else { best });
    Some(lo + (best as f64 + 0.5) * width)
}

/// Keeps exactly the genes with `delta <= ||x(i)|| <= gamma`, preserving
/// order. The returned report carries unit scale factors.
pub fn filter_genes(
    x: &ExpressionMatrix,
    delta: f64,
    gamma: f64,
    norm_kind: NormKind,
) -> Result<(ExpressionMatrix, PreprocessReport)> {
    if !(delta < gamma) {
        return Err(Error::InvalidConfig(format!(
            "delta ({delta}) must be below gamma ({gamma})"
        )));
    }
    filter_by_norm(x, delta, gamma, norm_kind)
}

fn filter_by_norm(
    x: &ExpressionMatrix,
    delta: f64,
    gamma: f64,
    norm_kind: NormKind,
) -> Result<(ExpressionMatrix, PreprocessReport)> {
    let mut removed_low = Vec::new();
    let mut removed_outlier = Vec::new();
    let mut retained = Vec::new();
    for (i, &row) in x.values().iter().enumerate() {
        let n = norm_kind.norm(row);
        if n < delta {
            removed_low.push(i);
        } else if n > gamma {
            removed_outlier.push(i);
        } else {
            retained.push(i);
        }
    }
    if retained.len() < 2 {
        return Err(Error::EmptyAfterFilter {
            retained: retained.len(),
        });
    }
    let filtered = x.select(&retained)?;
    let report = PreprocessReport {
        scale_factors: [1.0, 1.0],
        delta,
        gamma,
        removed_low,
        removed_outlier,
        retained_count: retained.len(),
        retained,
    };
    Ok((filtered, report))
}

/// Linear-interpolation quantile of an ascending slice.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Data-driven thresholds: `delta` at the 2nd percentile of gene norms (or
/// the smallest positive norm, if that percentile is zero) and `gamma` at
/// the 99.8th percentile.
pub fn default_thresholds(x: &ExpressionMatrix, norm_kind: NormKind) -> (f64, f64) {
    let mut norms: Vec<f64> = x.values().iter().map(|&r| norm_kind.norm(r)).collect();
    norms.sort_by(f64::total_cmp);
    let mut delta = quantile_sorted(&norms, DEFAULT_DELTA_QUANTILE);
    if delta <= 0.0 {
        delta = norms
            .iter()
            .copied()
            .find(|&n| n > 0.0)
            .unwrap_or(f64::MIN_POSITIVE);
    }
    let gamma = quantile_sorted(&norms, DEFAULT_GAMMA_QUANTILE).max(delta);
    (delta, gamma)
}

/// Normalization followed by norm filtering.
pub fn preprocess(
    x: &ExpressionMatrix,
    config: &PreprocessConfig,
) -> Result<(ExpressionMatrix, PreprocessReport)> {
    config.validate()?;
    let (normalized, factors) = normalize_samples(x, config.norm_method, config.mode_bins)?;
    let (auto_delta, auto_gamma) = match (config.delta, config.gamma) {
        (Some(d), Some(g)) => (d, g),
        _ => default_thresholds(&normalized, config.norm_kind),
    };
    let delta = config.delta.unwrap_or(auto_delta);
    let gamma = config.gamma.unwrap_or(auto_gamma);
    if delta > gamma {
        return Err(Error::InvalidConfig(format!(
            "delta ({delta}) exceeds gamma ({gamma})"
        )));
    }
    let (filtered, mut report) = filter_by_norm(&normalized, delta, gamma, config.norm_kind)?;
    report.scale_factors = factors;
    Ok((filtered, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AxisKind;

    fn matrix(rows: &[[f64; 2]]) -> ExpressionMatrix {
        let ids = (0..rows.len()).map(|i| format!("g{i}")).collect();
        ExpressionMatrix::new(ids, rows.to_vec(), AxisKind::Samples).unwrap()
    }

    #[test]
    fn mean_normalization_equalizes_sums() {
        let x = matrix(&[[60.0, 150.0], [40.0, 50.0]]);
        let (y, f) = normalize_samples(&x, NormMethod::Mean, 64).unwrap();
        assert_eq!(f, [1.5, 0.75]);
        assert_eq!(y.column_sums(), [150.0, 150.0]);
    }

    #[test]
    fn none_is_identity() {
        let x = matrix(&[[1.0, 7.0], [2.0, 3.0]]);
        let (y, f) = normalize_samples(&x, NormMethod::None, 64).unwrap();
        assert_eq!(f, [1.0, 1.0]);
        assert_eq!(y, x);
    }

    #[test]
    fn identical_columns_keep_unit_factors() {
        let x = matrix(&[[1.3, 1.3], [2.7, 2.7], [0.1, 0.1]]);
        assert_eq!(
            normalize_samples(&x, NormMethod::Mean, 64).unwrap().1,
            [1.0, 1.0]
        );
        assert_eq!(
            normalize_samples(&x, NormMethod::Mode, 16).unwrap().1,
            [1.0, 1.0]
        );
    }

    #[test]
    fn zero_column_is_an_error() {
        let x = matrix(&[[0.0, 1.0], [0.0, 2.0]]);
        assert_eq!(
            normalize_samples(&x, NormMethod::Mean, 64).unwrap_err(),
            Error::AllZeroColumn(0)
        );
        assert_eq!(
            normalize_samples(&x, NormMethod::Mode, 64).unwrap_err(),
            Error::AllZeroColumn(0)
        );
    }

    #[test]
    fn mode_normalization_matches_modes() {
        // column 2 is column 1 doubled, so the mode factor pair is (4/3, 2/3)
        let col: Vec<f64> = (1..=40)
            .map(|i| if i < 30 { 1.0 } else { i as f64 })
            .collect();
        let rows: Vec<[f64; 2]> = col.iter().map(|&v| [v, 2.0 * v]).collect();
        let x = matrix(&rows);
        let (y, f) = normalize_samples(&x, NormMethod::Mode, 8).unwrap();
        assert!((f[0] / f[1] - 2.0).abs() < 1e-12);
        let m0 = histogram_mode(&y.column(0), 8).unwrap();
        let m1 = histogram_mode(&y.column(1), 8).unwrap();
        assert!((m0 - m1).abs() < 1e-12 * m0);
    }

    fn rows_with_l2_norms(norms: &[f64]) -> ExpressionMatrix {
        // (0.6, 0.8) has unit L2 norm
        matrix(
            &norms
                .iter()
                .map(|&n| [0.6 * n, 0.8 * n])
                .collect::<Vec<_>>(),
        )
    }

    #[test]
    fn filter_cascade_to_empty() {
        let x = rows_with_l2_norms(&[0.1, 5.0, 150.0]);
        assert_eq!(
            filter_genes(&x, 0.5, 100.0, NormKind::L2).unwrap_err(),
            Error::EmptyAfterFilter { retained: 1 }
        );
    }

    #[test]
    fn filter_drops_low_norm_gene() {
        let x = rows_with_l2_norms(&[0.1, 5.0, 50.0]);
        let (y, report) = filter_genes(&x, 0.5, 100.0, NormKind::L2).unwrap();
        assert_eq!(report.retained, vec![1, 2]);
        assert_eq!(report.removed_low, vec![0]);
        assert!(report.removed_outlier.is_empty());
        assert_eq!(y.gene_ids(), &["g1".to_string(), "g2".to_string()]);
    }

    #[test]
    fn filter_noop_when_all_inside() {
        let x = rows_with_l2_norms(&[1.0, 5.0, 50.0]);
        let (y, report) = filter_genes(&x, 0.5, 100.0, NormKind::L2).unwrap();
        assert_eq!(y, x);
        assert!(report.removed_low.is_empty() && report.removed_outlier.is_empty());
        assert_eq!(report.retained_count, 3);
    }

    #[test]
    fn filter_rejects_inverted_thresholds() {
        let x = rows_with_l2_norms(&[1.0, 5.0]);
        assert!(matches!(
            filter_genes(&x, 10.0, 1.0, NormKind::L2),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn default_thresholds_skip_zero_quantile() {
        let mut norms = vec![0.0; 5];
        norms.extend((1..=95).map(|i| i as f64));
        let x = rows_with_l2_norms(&norms);
        let (d, g) = default_thresholds(&x, NormKind::L2);
        assert!((d - 1.0).abs() < 1e-12);
        assert!(g > 94.0 && g <= 95.0);
    }

    #[test]
    fn preprocess_report_accounts_for_every_gene() {
        let norms: Vec<f64> = (0..1000).map(|i| 1.0 + i as f64).collect();
        let x = rows_with_l2_norms(&norms);
        let (y, r) = preprocess(&x, &PreprocessConfig::default()).unwrap();
        assert_eq!(
            r.retained_count + r.removed_low.len() + r.removed_outlier.len(),
            1000
        );
        assert_eq!(y.len(), r.retained_count);
        assert!(!r.removed_low.is_empty() && !r.removed_outlier.is_empty());
    }

    #[test]
    fn config_bounds() {
        let c = PreprocessConfig {
            mode_bins: 4,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = PreprocessConfig {
            delta: Some(2.0),
            gamma: Some(1.0),
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
