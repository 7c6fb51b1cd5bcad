//! Marker gene detection and mixing matrix estimation.
//!
//! Every gene of a two-source linear mixture with non-negative sources lies
//! inside the cone spanned by the two columns of the mixing matrix. Genes
//! expressed in only one source sit exactly on a bounding radius, so the
//! genes with the extreme `x2/x1` ratios identify the radii, and the
//! normalized average of those genes estimates the column directions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ExpressionMatrix, MarkerSets, MixingForm, MixingMatrix, NormKind};

/// Minimum width `k_max - k_min` of a usable scatter sector.
pub const MIN_SECTOR_WIDTH: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsilonMode {
    Absolute,
    #[default]
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkerConfig {
    pub epsilon: f64,
    pub epsilon_mode: EpsilonMode,
    pub min_markers_per_source: usize,
}

impl Default for MarkerConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            epsilon_mode: EpsilonMode::Relative,
            min_markers_per_source: 1,
        }
    }
}

impl MarkerConfig {
    /// Relative band wide enough to hold markers blurred by multiplicative
    /// lognormal noise of scale `sigma` on each sample: a gene ratio then
    /// carries log-noise of scale `sqrt(2) sigma`, and the band spans two of
    /// those, `exp(2 sqrt(2) sigma) - 1`, capped below 1.
    pub fn noise_matched(sigma: f64) -> Self {
        let eps = ((2.0 * std::f64::consts::SQRT_2 * sigma).exp() - 1.0).min(0.9);
        Self {
            epsilon: eps,
            epsilon_mode: EpsilonMode::Relative,
            min_markers_per_source: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if self.epsilon_mode == EpsilonMode::Relative && self.epsilon >= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "relative epsilon must be below 1, got {}",
                self.epsilon
            )));
        }
        if self.min_markers_per_source == 0 {
            return Err(Error::InvalidConfig(
                "min_markers_per_source must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Ratio `x2/x1` of one gene. A zero denominator yields `+inf` with
/// `infinite` set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneRatio {
    pub index: usize,
    pub ratio: f64,
    pub infinite: bool,
}

pub fn ratio_of(row: [f64; 2]) -> (f64, bool) {
    if row[0] > 0.0 {
        (row[1] / row[0], false)
    } else {
        (f64::INFINITY, true)
    }
}

pub fn gene_ratios(x: &ExpressionMatrix) -> Vec<GeneRatio> {
    x.values()
        .iter()
        .enumerate()
        .map(|(index, &row)| {
            let (ratio, infinite) = ratio_of(row);
            GeneRatio {
                index,
                ratio,
                infinite,
            }
        })
        .collect()
}

/// Detects the genes on the two radii of the scatter sector.
///
/// With `k_min`/`k_max` the extreme finite `x2/x1` ratios:
/// - `mg2` is every gene with `k_max - e <= x2/x1 <= k_max`;
/// - `mg1` is every gene with `1/k_min - e <= x1/x2 <= 1/k_min`,
///
/// where `e` is `epsilon` (absolute mode) or `epsilon` times the band's
/// extreme (relative mode). Genes with `x1 = 0` never enter either band.
pub fn detect_markers(x: &ExpressionMatrix, config: &MarkerConfig) -> Result<MarkerSets> {
    config.validate()?;
    let ratios = gene_ratios(x);
    let finite: Vec<&GeneRatio> = ratios.iter().filter(|r| !r.infinite).collect();
    if finite.len() < 2 {
        return Err(Error::InsufficientRatios {
            found: finite.len(),
        });
    }
    let k_min = finite.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let k_max = finite
        .iter()
        .map(|r| r.ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    let width = k_max - k_min;
    if width < MIN_SECTOR_WIDTH {
        return Err(Error::DegenerateSector { width });
    }

    // x1/x2 for the same genes; its maximum is 1/k_min, taken directly so
    // the extreme gene always falls inside its own band even when epsilon = 0
    let inverse: Vec<f64> = finite
        .iter()
        .map(|r| {
            let row = x.row(r.index);
            if row[1] > 0.0 {
                row[0] / row[1]
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let inv_max = inverse.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (upper_cut, inv_cut) = match config.epsilon_mode {
        EpsilonMode::Absolute => (k_max - config.epsilon, inv_max - config.epsilon),
        EpsilonMode::Relative => (
            k_max * (1.0 - config.epsilon),
            inv_max * (1.0 - config.epsilon),
        ),
    };

    let mut mg1 = Vec::new();
    let mut mg2 = Vec::new();
    for (r, &inv) in finite.iter().zip(&inverse) {
        let in_upper = r.ratio >= upper_cut;
        let in_lower = inv >= inv_cut;
        match (in_lower, in_upper) {
            (true, true) => return Err(Error::OverlappingMarkers(r.index)),
            (true, false) => mg1.push(r.index),
            (false, true) => mg2.push(r.index),
            (false, false) => {}
        }
    }

    for (source_id, set) in [(1, &mg1), (2, &mg2)] {
        if set.len() < config.min_markers_per_source {
            return Err(Error::TooFewMarkers {
                source_id,
                found: set.len(),
                required: config.min_markers_per_source,
            });
        }
    }
    MarkerSets::new(mg1, mg2, k_min, k_max, config.epsilon, x.len())
}

/// Average of the standardized marker vectors `x(i)/||x(i)||` per source;
/// the two averages become the columns of a raw-form mixing matrix.
pub fn estimate_mixing(
    x: &ExpressionMatrix,
    markers: &MarkerSets,
    norm_kind: NormKind,
) -> Result<MixingMatrix> {
    let mut columns = [[0.0; 2]; 2];
    for (j, column) in columns.iter_mut().enumerate() {
        let set = markers.source(j);
        if set.is_empty() {
            return Err(Error::EmptyMarkerSet(j + 1));
        }
        let mut acc = [0.0, 0.0];
        for &i in set {
            let v = x.row(i);
            let n = norm_kind.norm(v);
            if !(n > 0.0) {
                return Err(Error::ZeroNormMarker(i));
            }
            acc[0] += v[0] / n;
            acc[1] += v[1] / n;
        }
        let count = set.len() as f64;
        *column = [acc[0] / count, acc[1] / count];
    }
    MixingMatrix::new(
        [
            [columns[0][0], columns[1][0]],
            [columns[0][1], columns[1][1]],
        ],
        MixingForm::Raw,
    )
}

/// Rescales the columns by positive `(c1, c2)` so that each row sums to 1.
///
/// Solves `[a1 a2] (c1, c2)^T = (1, 1)^T`; column directions are unchanged.
pub fn scale_to_proportions(raw: &MixingMatrix) -> Result<MixingMatrix> {
    let [[a, b], [c, d]] = raw.entries();
    let det = raw.det();
    if det == 0.0 {
        return Err(Error::SingularMixing { det });
    }
    let c1 = (d - b) / det;
    let c2 = (a - c) / det;
    if !(c1 > 0.0 && c2 > 0.0) {
        return Err(Error::NegativeScale { c1, c2 });
    }
    let mut entries = [[a * c1, b * c2], [c * c1, d * c2]];
    // absorb rounding so each row sums to 1 as closely as f64 allows
    for row in entries.iter_mut() {
        let s = row[0] + row[1];
        row[0] /= s;
        row[1] /= s;
    }
    MixingMatrix::new(entries, MixingForm::Proportion)
}

/// Whether `x` lies in the cone spanned by the columns of `a`, with
/// `rel_slack` relative tolerance on the ratio bounds.
///
/// Uses cross products so radii with a zero component (infinite ratios)
/// need no special casing.
pub fn in_sector(a: &MixingMatrix, x: [f64; 2], rel_slack: f64) -> bool {
    let (u, v) = if a.det() >= 0.0 {
        (a.column(0), a.column(1))
    } else {
        (a.column(1), a.column(0))
    };
    // u is the ray with the larger x1/x2; x1/x2 <= u1/u2 <=> x1 u2 <= u1 x2
    let below_u = x[0] * u[1] <= u[0] * x[1] * (1.0 + rel_slack) + f64::MIN_POSITIVE;
    let above_v = v[0] * x[1] <= x[0] * v[1] * (1.0 + rel_slack) + f64::MIN_POSITIVE;
    below_u && above_v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AxisKind;

    fn matrix(rows: &[[f64; 2]]) -> ExpressionMatrix {
        let ids = (0..rows.len()).map(|i| format!("g{}", i + 1)).collect();
        ExpressionMatrix::new(ids, rows.to_vec(), AxisKind::Samples).unwrap()
    }

    fn absolute(eps: f64) -> MarkerConfig {
        MarkerConfig {
            epsilon: eps,
            epsilon_mode: EpsilonMode::Absolute,
            min_markers_per_source: 1,
        }
    }

    #[test]
    fn ratios_are_direct_quotients() {
        let r = gene_ratios(&matrix(&[[10.0, 1.0], [1.0, 10.0]]));
        assert_eq!(r[0].ratio, 0.1);
        assert_eq!(r[1].ratio, 10.0);
        assert_eq!(ratio_of([5.0, 5.0]), (1.0, false));
        assert_eq!(ratio_of([0.0, 3.0]), (f64::INFINITY, true));
    }

    #[test]
    fn unique_extremes_become_markers() {
        let x = matrix(&[[10.0, 1.0], [1.0, 10.0], [5.0, 5.0]]);
        let m = detect_markers(&x, &absolute(0.5)).unwrap();
        assert_eq!(m.mg1(), &[0]);
        assert_eq!(m.mg2(), &[1]);
        assert_eq!((m.k_min(), m.k_max()), (0.1, 10.0));
    }

    /// Brute-force band scan over the inverse ratios x1/x2.
    fn band_scan(rows: &[[f64; 2]], eps: f64) -> Vec<usize> {
        let inv: Vec<f64> = rows.iter().map(|r| r[0] / r[1]).collect();
        let top = inv.iter().copied().fold(f64::MIN, f64::max);
        (0..rows.len())
            .filter(|&i| inv[i] >= top - eps && inv[i] <= top)
            .collect()
    }

    #[test]
    fn inverse_side_band_width() {
        let rows = [[10.0, 1.0], [9.8, 1.0], [1.0, 10.0]];
        let x = matrix(&rows);
        assert_eq!(band_scan(&rows, 0.01), vec![0]);
        assert_eq!(band_scan(&rows, 0.25), vec![0, 1]);
        assert_eq!(detect_markers(&x, &absolute(0.01)).unwrap().mg1(), &[0]);
        let m = detect_markers(&x, &absolute(0.25)).unwrap();
        assert_eq!(m.mg1(), &[0, 1]);
        assert_eq!(m.mg2(), &[2]);
    }

    #[test]
    fn proportional_rows_are_degenerate() {
        let x = matrix(&[[1.0, 1.0], [2.0, 2.0], [3.5, 3.5]]);
        assert!(matches!(
            detect_markers(&x, &MarkerConfig::default()),
            Err(Error::DegenerateSector { .. })
        ));
    }

    #[test]
    fn min_marker_requirement() {
        let x = matrix(&[[10.0, 1.0], [1.0, 10.0], [5.0, 5.0]]);
        let cfg = MarkerConfig {
            min_markers_per_source: 2,
            ..absolute(0.0)
        };
        assert_eq!(
            detect_markers(&x, &cfg).unwrap_err(),
            Error::TooFewMarkers {
                source_id: 1,
                found: 1,
                required: 2
            }
        );
    }

    #[test]
    fn too_few_finite_ratios() {
        let x = matrix(&[[0.0, 1.0], [0.0, 2.0], [1.0, 1.0]]);
        assert_eq!(
            detect_markers(&x, &MarkerConfig::default()).unwrap_err(),
            Error::InsufficientRatios { found: 1 }
        );
    }

    #[test]
    fn overlapping_bands_are_rejected() {
        let x = matrix(&[[10.0, 1.0], [1.0, 10.0], [5.0, 5.0]]);
        assert!(matches!(
            detect_markers(&x, &absolute(9.95)),
            Err(Error::OverlappingMarkers(_))
        ));
    }

    #[test]
    fn zero_sample_two_counts_as_lower_extreme() {
        // gene 0 has ratio 0 -> k_min = 0 and inverse ratio +inf
        let x = matrix(&[[4.0, 0.0], [1.0, 1.0], [1.0, 6.0]]);
        let m = detect_markers(&x, &MarkerConfig::default()).unwrap();
        assert_eq!(m.mg1(), &[0]);
        assert_eq!(m.mg2(), &[2]);
    }

    #[test]
    fn axis_markers_give_identity() {
        let x = matrix(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        let m = MarkerSets::new(vec![0], vec![1], 0.0, f64::INFINITY, 0.0, 3).unwrap();
        let a = estimate_mixing(&x, &m, NormKind::L2).unwrap();
        assert_eq!(a.entries(), [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn collinear_markers_average_to_unit_direction() {
        let x = matrix(&[[3.0, 4.0], [6.0, 8.0], [1.0, 0.0]]);
        let m = MarkerSets::new(vec![0, 1], vec![2], 0.0, 1.0, 0.0, 3).unwrap();
        let a = estimate_mixing(&x, &m, NormKind::L2).unwrap();
        assert!((a.get(0, 0) - 0.6).abs() < 1e-15);
        assert!((a.get(1, 0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn collapsed_sector_is_singular() {
        let x = matrix(&[[1.0, 0.0], [2.0, 0.0], [1.0, 1.0]]);
        let m = MarkerSets::new(vec![0], vec![1], 0.0, 1.0, 0.0, 3).unwrap();
        assert!(matches!(
            estimate_mixing(&x, &m, NormKind::L2),
            Err(Error::SingularMixing { .. })
        ));
    }

    #[test]
    fn zero_norm_marker() {
        let x = matrix(&[[0.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        let m = MarkerSets::new(vec![0], vec![1], 0.0, 1.0, 0.0, 3).unwrap();
        assert_eq!(
            estimate_mixing(&x, &m, NormKind::L1).unwrap_err(),
            Error::ZeroNormMarker(0)
        );
    }

    #[test]
    fn proportions_from_identity_directions() {
        let p = scale_to_proportions(
            &MixingMatrix::new([[1.0, 0.0], [0.0, 1.0]], MixingForm::Raw).unwrap(),
        )
        .unwrap();
        assert_eq!(p.entries(), [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn proportions_recover_table_two_matrix() {
        // columns proportional to (0.75, 0.25) and (0.25, 0.75), arbitrary scales
        let raw = MixingMatrix::new(
            [[3.0 * 0.75, 0.4 * 0.25], [3.0 * 0.25, 0.4 * 0.75]],
            MixingForm::Raw,
        )
        .unwrap();
        let p = scale_to_proportions(&raw).unwrap();
        let e = p.entries();
        for (got, want) in e.iter().flatten().zip([0.75, 0.25, 0.25, 0.75]) {
            assert!((got - want).abs() < 1e-15, "{e:?}");
        }
        assert_eq!(p.form(), MixingForm::Proportion);
    }

    #[test]
    fn radii_not_bracketing_diagonal_give_negative_scale() {
        // both radii below the diagonal: (1,1) is outside the cone
        let raw = MixingMatrix::new([[1.0, 1.0], [0.1, 0.5]], MixingForm::Raw).unwrap();
        assert!(matches!(
            scale_to_proportions(&raw),
            Err(Error::NegativeScale { .. })
        ));
    }

    #[test]
    fn sector_membership() {
        let a = MixingMatrix::new([[0.75, 0.25], [0.25, 0.75]], MixingForm::Proportion).unwrap();
        assert!(in_sector(&a, [1.0, 1.0], 0.0));
        assert!(in_sector(&a, [0.75, 0.25], 0.0));
        assert!(!in_sector(&a, [1.0, 0.0], 0.0));
        assert!(in_sector(&a.swap_columns(), [2.0, 1.0], 0.0));
        assert!(!in_sector(&a.swap_columns(), [0.1, 1.0], 0.0));
        assert!(in_sector(&MixingMatrix::identity(), [3.0, 0.0], 0.0));
    }

    #[test]
    fn noise_matched_band() {
        let c = MarkerConfig::noise_matched(0.1);
        assert!((c.epsilon - 0.3269).abs() < 1e-4);
        assert_eq!(MarkerConfig::noise_matched(0.0).epsilon, 0.0);
    }
}
