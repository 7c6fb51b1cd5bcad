//! Shared data model: two-column expression matrices, 2x2 mixing matrices
//! and detected marker sets.
//!
//! Everything here is validated on construction and immutable afterwards.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative singularity tolerance for `|det(A)|`, measured against
/// the product of the column norms.
pub const SINGULARITY_TOLERANCE: f64 = 1e-8;

/// Allowed deviation of a proportion-form row sum from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Whether the two columns hold observed mixtures or latent sources.
///
/// Metadata only: it labels reports and never changes numerics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisKind {
    Samples,
    Tissues,
}

/// Vector norm used for gene norms and marker standardization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L1,
    #[default]
    L2,
}

impl NormKind {
    pub fn norm(self, v: [f64; 2]) -> f64 {
        match self {
            NormKind::L1 => v[0].abs() + v[1].abs(),
            NormKind::L2 => v[0].hypot(v[1]),
        }
    }
}

/// Non-negative n x 2 matrix of gene values with unique gene identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionMatrix {
    gene_ids: Vec<String>,
    values: Vec<[f64; 2]>,
    axis_kind: AxisKind,
}

impl ExpressionMatrix {
    pub fn new(gene_ids: Vec<String>, values: Vec<[f64; 2]>, axis_kind: AxisKind) -> Result<Self> {
        if gene_ids.len() != values.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} gene ids for {} rows",
                gene_ids.len(),
                values.len()
            )));
        }
        if values.len() < 2 {
            return Err(Error::ShapeMismatch(format!(
                "need at least 2 genes, got {}",
                values.len()
            )));
        }
        for (row, pair) in values.iter().enumerate() {
            for (col, &v) in pair.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteValue { row, col });
                }
                if v < 0.0 {
                    return Err(Error::NegativeValue { row, col });
                }
            }
        }
        let mut seen = HashSet::with_capacity(gene_ids.len());
        for id in &gene_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateGeneId(id.clone()));
            }
        }
        Ok(Self {
            gene_ids,
            values,
            axis_kind,
        })
    }

    /// Validates ragged row input; every row must have exactly two values.
    pub fn from_rows(
        gene_ids: Vec<String>,
        rows: &[Vec<f64>],
        axis_kind: AxisKind,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            match row.as_slice() {
                &[a, b] => values.push([a, b]),
                other => {
                    return Err(Error::ShapeMismatch(format!(
                        "row {i} has {} columns, expected 2",
                        other.len()
                    )))
                }
            }
        }
        Self::new(gene_ids, values, axis_kind)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn gene_ids(&self) -> &[String] {
        &self.gene_ids
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn row(&self, i: usize) -> [f64; 2] {
        self.values[i]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[col]).collect()
    }

    pub fn axis_kind(&self) -> AxisKind {
        self.axis_kind
    }

    pub fn column_sums(&self) -> [f64; 2] {
        self.values
            .iter()
            .fold([0.0, 0.0], |acc, r| [acc[0] + r[0], acc[1] + r[1]])
    }

    /// Rows at `indices`, in the given order. Fails if fewer than two rows
    /// are selected.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let gene_ids = indices.iter().map(|&i| self.gene_ids[i].clone()).collect();
        let values = indices.iter().map(|&i| self.values[i]).collect();
        Self::new(gene_ids, values, self.axis_kind)
    }

    /// Same genes, columns multiplied by `factors`. Factors must be positive
    /// and finite, which keeps every invariant intact.
    pub(crate) fn scaled(&self, factors: [f64; 2]) -> Self {
        debug_assert!(factors.iter().all(|f| f.is_finite() && *f > 0.0));
        Self {
            gene_ids: self.gene_ids.clone(),
            values: self
                .values
                .iter()
                .map(|r| [r[0] * factors[0], r[1] * factors[1]])
                .collect(),
            axis_kind: self.axis_kind,
        }
    }
}

/// Whether a mixing matrix carries raw column vectors or proportions
/// (each row sums to 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixingForm {
    Raw,
    Proportion,
}

/// 2x2 non-negative mixing matrix `[[a11, a12], [a21, a22]]`.
///
/// Column `j` is the radius `a_j` of the scatter sector; row `k` is the
/// composition of sample `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingMatrix {
    entries: [[f64; 2]; 2],
    form: MixingForm,
}

impl MixingMatrix {
    pub fn new(entries: [[f64; 2]; 2], form: MixingForm) -> Result<Self> {
        Self::with_tolerance(entries, form, SINGULARITY_TOLERANCE)
    }

    pub fn with_tolerance(
        entries: [[f64; 2]; 2],
        form: MixingForm,
        tolerance: f64,
    ) -> Result<Self> {
        for (row, r) in entries.iter().enumerate() {
            for (col, &v) in r.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteValue { row, col });
                }
                if v < 0.0 {
                    return Err(Error::NegativeEntry { row, col });
                }
            }
        }
        let m = Self { entries, form };
        let det = m.det();
        let scale = NormKind::L2.norm(m.column(0)) * NormKind::L2.norm(m.column(1));
        if !(det.abs() > tolerance * scale) {
            return Err(Error::SingularMixing { det });
        }
        if form == MixingForm::Proportion {
            for (row, r) in entries.iter().enumerate() {
                let sum = r[0] + r[1];
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(Error::RowSumViolation { row, sum });
                }
            }
        }
        Ok(m)
    }

    pub fn identity() -> Self {
        Self {
            entries: [[1.0, 0.0], [0.0, 1.0]],
            form: MixingForm::Proportion,
        }
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row][col]
    }

    pub fn form(&self) -> MixingForm {
        self.form
    }

    /// Column `j` as the vector `(a_1j, a_2j)`.
    pub fn column(&self, j: usize) -> [f64; 2] {
        [self.entries[0][j], self.entries[1][j]]
    }

    pub fn det(&self) -> f64 {
        let [[a, b], [c, d]] = self.entries;
        a * d - b * c
    }

    /// `A s` for one gene.
    pub fn apply(&self, s: [f64; 2]) -> [f64; 2] {
        let [[a, b], [c, d]] = self.entries;
        [a * s[0] + b * s[1], c * s[0] + d * s[1]]
    }

    /// Same matrix with the two columns exchanged.
    pub fn swap_columns(&self) -> Self {
        let [[a, b], [c, d]] = self.entries;
        Self {
            entries: [[b, a], [d, c]],
            form: self.form,
        }
    }
}

/// Marker gene index sets detected from (or planted in) a matrix.
///
/// `mg1` holds the genes on the low `x2/x1` radius, `mg2` those on the high
/// one. `k_min`/`k_max` are the extreme `x2/x1` ratios that produced them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkerSets {
    mg1: Vec<usize>,
    mg2: Vec<usize>,
    k_min: f64,
    k_max: f64,
    epsilon: f64,
}

impl MarkerSets {
    /// `n_rows` is the row count of the matrix the indices refer to.
    pub fn new(
        mut mg1: Vec<usize>,
        mut mg2: Vec<usize>,
        k_min: f64,
        k_max: f64,
        epsilon: f64,
        n_rows: usize,
    ) -> Result<Self> {
        mg1.sort_unstable();
        mg1.dedup();
        mg2.sort_unstable();
        mg2.dedup();
        if let Some(&bad) = mg1.iter().chain(&mg2).find(|&&i| i >= n_rows) {
            return Err(Error::InvalidMarkerSets(format!(
                "index {bad} out of range for {n_rows} rows"
            )));
        }
        if let Some(&shared) = mg1.iter().find(|i| mg2.binary_search(i).is_ok()) {
            return Err(Error::InvalidMarkerSets(format!(
                "gene {shared} assigned to both sources"
            )));
        }
        if k_min.is_nan() || k_max.is_nan() || k_min > k_max {
            return Err(Error::InvalidMarkerSets(format!(
                "ratio bounds out of order: k_min={k_min}, k_max={k_max}"
            )));
        }
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidMarkerSets(format!("epsilon {epsilon} < 0")));
        }
        Ok(Self {
            mg1,
            mg2,
            k_min,
            k_max,
            epsilon,
        })
    }

    pub fn mg1(&self) -> &[usize] {
        &self.mg1
    }

    pub fn mg2(&self) -> &[usize] {
        &self.mg2
    }

    /// Marker set for source `j` (0 or 1).
    pub fn source(&self, j: usize) -> &[usize] {
        if j == 0 {
            &self.mg1
        } else {
            &self.mg2
        }
    }

    pub fn k_min(&self) -> f64 {
        self.k_min
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}
