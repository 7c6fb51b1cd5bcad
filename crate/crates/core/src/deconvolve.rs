//! Source recovery by 2x2 inversion, and per-sample marker profiles.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AxisKind, ExpressionMatrix, MarkerSets, MixingMatrix};

/// Condition number above which an inversion is flagged as ill-conditioned.
pub const ILL_CONDITIONED: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Inverse {
    pub entries: [[f64; 2]; 2],
    pub det: f64,
    /// Ratio of the largest to the smallest singular value.
    pub condition_number: f64,
    pub ill_conditioned: bool,
}

impl Inverse {
    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        let [[a, b], [c, d]] = self.entries;
        [a * x[0] + b * x[1], c * x[0] + d * x[1]]
    }
}

/// Spectral condition number of a 2x2 matrix from its Frobenius norm and
/// determinant: `(T + sqrt(T^2 - 4 D^2)) / (2 |D|)` with `T = ||A||_F^2`.
pub fn condition_number(entries: [[f64; 2]; 2], det: f64) -> f64 {
    let t: f64 = entries.iter().flatten().map(|v| v * v).sum();
    let disc = (t * t - 4.0 * det * det).max(0.0).sqrt();
    ((t + disc) / (2.0 * det.abs())).max(1.0)
}

/// Closed-form (cofactor) inverse of `a`.
pub fn invert_mixing(a: &MixingMatrix) -> Result<Inverse> {
    let [[p, q], [r, s]] = a.entries();
    let det = a.det();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::SingularMixing { det });
    }
    let cond = condition_number(a.entries(), det);
    let ill_conditioned = cond > ILL_CONDITIONED;
    if ill_conditioned {
        log::warn!("mixing matrix is ill-conditioned (condition number {cond:e})");
    }
    Ok(Inverse {
        entries: [[s / det, -q / det], [-r / det, p / det]],
        det,
        condition_number: cond,
        ill_conditioned,
    })
}

/// Estimated source profiles `s(i) = A^-1 x(i)` with diagnostics.
///
/// Without clamping, noise can leave negative entries, so the profiles are
/// kept as raw rows; [`DeconvolutionResult::to_matrix`] validates them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeconvolutionResult {
    pub mixing: MixingMatrix,
    pub gene_ids: Vec<String>,
    pub sources: Vec<[f64; 2]>,
    pub condition_number: f64,
    pub ill_conditioned: bool,
    /// Entries that were strictly negative before clamping.
    pub negative_count: usize,
    pub clamped: bool,
}

impl DeconvolutionResult {
    pub fn source_column(&self, j: usize) -> Vec<f64> {
        self.sources.iter().map(|r| r[j]).collect()
    }

    pub fn to_matrix(&self) -> Result<ExpressionMatrix> {
        ExpressionMatrix::new(
            self.gene_ids.clone(),
            self.sources.clone(),
            AxisKind::Tissues,
        )
    }
}

pub fn recover_sources(
    x: &ExpressionMatrix,
    a: &MixingMatrix,
    clamp: bool,
) -> Result<DeconvolutionResult> {
    let inv = invert_mixing(a)?;
    let mut negative_count = 0;
    let sources = x
        .values()
        .iter()
        .map(|&row| {
            let mut s = inv.apply(row);
            for v in s.iter_mut() {
                if *v < 0.0 {
                    negative_count += 1;
                    if clamp {
                        *v = 0.0;
                    }
                }
            }
            s
        })
        .collect();
    Ok(DeconvolutionResult {
        mixing: *a,
        gene_ids: x.gene_ids().to_vec(),
        sources,
        condition_number: inv.condition_number,
        ill_conditioned: inv.ill_conditioned,
        negative_count,
        clamped: clamp,
    })
}

/// One marker gene's pure-source value as seen in each sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkerProfile {
    pub gene: usize,
    /// `x_k(i) / a_kj` for samples k = 1, 2.
    pub values: [f64; 2],
}

impl MarkerProfile {
    /// Per-sample deviation from the cross-sample mean.
    pub fn deviations(&self) -> [f64; 2] {
        let mean = 0.5 * (self.values[0] + self.values[1]);
        [self.values[0] - mean, self.values[1] - mean]
    }
}

/// Sample-specific pure expression of the marker genes, by source.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSpecificProfiles {
    pub source1: Vec<MarkerProfile>,
    pub source2: Vec<MarkerProfile>,
}

impl SampleSpecificProfiles {
    pub fn source(&self, j: usize) -> &[MarkerProfile] {
        if j == 0 {
            &self.source1
        } else {
            &self.source2
        }
    }
}

/// For every marker `i` of source `j` and sample `k`, the pure-source value
/// `x_k(i) / a_kj`.
///
/// A marker of source `j` carries signal only from that source, so
/// `x_k(i) = a_kj (s_j(i) + ds_jk(i))`, where `ds_jk` is the sample-specific
/// deviation. Averaged over the marker set these deviations are assumed to
/// vanish, which is what lets the marker-based estimate of `a_kj` stand in
/// for the true proportion.
pub fn sample_specific_markers(
    x: &ExpressionMatrix,
    a: &MixingMatrix,
    markers: &MarkerSets,
) -> Result<SampleSpecificProfiles> {
    let mut out = [Vec::new(), Vec::new()];
    for (j, profiles) in out.iter_mut().enumerate() {
        let set = markers.source(j);
        if set.is_empty() {
            return Err(Error::EmptyMarkerSet(j + 1));
        }
        let col = a.column(j);
        for (k, &v) in col.iter().enumerate() {
            if !(v > 0.0) {
                return Err(Error::ZeroProportion {
                    sample: k + 1,
                    source_id: j + 1,
                });
            }
        }
        *profiles = set
            .iter()
            .map(|&i| {
                let row = x.row(i);
                MarkerProfile {
                    gene: i,
                    values: [row[0] / col[0], row[1] / col[1]],
                }
            })
            .collect();
    }
    let [source1, source2] = out;
    Ok(SampleSpecificProfiles { source1, source2 })
}
