//! Seeded synthetic two-source datasets with planted marker genes.
//!
//! Sources are drawn from an expression law, marker genes get (almost) no
//! expression in the other source, and the mixtures follow `x = A s` with
//! optional multiplicative lognormal noise. All randomness comes from
//! ChaCha8 streams derived from `seed`, so a config reproduces bit-identical
//! data.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal, Uniform};
use serde::Serialize;

use crate::analyze::{fold_change_labels, DEFAULT_FOLD_CHANGE};
use crate::error::{Error, Result};
use crate::model::{AxisKind, ExpressionMatrix, MarkerSets, MixingForm, MixingMatrix};

const NOISE_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum ExpressionLaw {
    LogNormal { mu: f64, sigma: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Default for ExpressionLaw {
    fn default() -> Self {
        ExpressionLaw::LogNormal {
            mu: 2.0,
            sigma: 1.0,
        }
    }
}

enum Sampler {
    LogNormal(LogNormal<f64>),
    Uniform(Uniform<f64>),
}

impl Sampler {
    fn new(law: ExpressionLaw) -> Result<Self> {
        match law {
            ExpressionLaw::LogNormal { mu, sigma } => LogNormal::new(mu, sigma)
                .map(Sampler::LogNormal)
                .map_err(|e| Error::InvalidConfig(format!("lognormal({mu}, {sigma}): {e}"))),
            ExpressionLaw::Uniform { lo, hi } => {
                if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
                    return Err(Error::InvalidConfig(format!(
                        "uniform law needs 0 <= lo < hi, got ({lo}, {hi})"
                    )));
                }
                Uniform::new(lo, hi)
                    .map(Sampler::Uniform)
                    .map_err(|e| Error::InvalidConfig(format!("uniform({lo}, {hi}): {e}")))
            }
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::LogNormal(d) => d.sample(rng),
            Sampler::Uniform(d) => d.sample(rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthConfig {
    pub n_genes: usize,
    pub n_mg1: usize,
    pub n_mg2: usize,
    /// Proportion-form mixing matrix.
    pub mixing: MixingMatrix,
    pub expression_law: ExpressionLaw,
    /// Off-source marker value as a fraction of the on-source value.
    pub marker_leak: f64,
    /// Scale of the multiplicative lognormal noise on mixed values.
    pub noise_sigma: f64,
    /// Half-width of the relative per-sample marker deviations; must stay
    /// below 0.5 so deviated values remain non-negative.
    pub sample_dev_sigma: f64,
    pub fold_change: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_genes: 2000,
            n_mg1: 5,
            n_mg2: 5,
            mixing: MixingMatrix::new([[0.75, 0.25], [0.25, 0.75]], MixingForm::Proportion)
                .expect("valid default mixing"),
            expression_law: ExpressionLaw::default(),
            marker_leak: 0.0,
            noise_sigma: 0.0,
            sample_dev_sigma: 0.0,
            fold_change: DEFAULT_FOLD_CHANGE,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_genes < 2 {
            return bad(format!("n_genes must be at least 2, got {}", self.n_genes));
        }
        if self.n_mg1 == 0 || self.n_mg2 == 0 {
            return bad("each source needs at least one marker gene".into());
        }
        if self.n_mg1 + self.n_mg2 > self.n_genes {
            return bad(format!(
                "{} + {} markers exceed {} genes",
                self.n_mg1, self.n_mg2, self.n_genes
            ));
        }
        if self.mixing.form() != MixingForm::Proportion {
            return bad("mixing matrix must be in proportion form".into());
        }
        for (name, v) in [
            ("marker_leak", self.marker_leak),
            ("noise_sigma", self.noise_sigma),
            ("sample_dev_sigma", self.sample_dev_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a non-negative number, got {v}"));
            }
        }
        if self.sample_dev_sigma >= 0.5 {
            return bad(format!(
                "sample_dev_sigma must be below 0.5, got {}",
                self.sample_dev_sigma
            ));
        }
        if !(self.fold_change > 1.0) {
            return bad(format!(
                "fold_change must exceed 1, got {}",
                self.fold_change
            ));
        }
        Sampler::new(self.expression_law).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub sources: ExpressionMatrix,
    pub mixed: ExpressionMatrix,
    /// Planted markers; here `mg1` belongs to tissue 1 and `mg2` to tissue 2.
    pub true_markers: MarkerSets,
    pub true_mixing: MixingMatrix,
    pub true_de_labels: Vec<bool>,
    /// Per-sample deviation of each marker from its own-source value
    /// (zero for non-markers and when deviations are disabled).
    pub deviations: Vec<[f64; 2]>,
}

fn gene_ids(n: usize) -> Vec<String> {
    let width = n.to_string().len();
    (1..=n).map(|i| format!("g{i:0width$}")).collect()
}

fn noise_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(NOISE_STREAM);
    rng
}

fn apply_noise(values: &mut [[f64; 2]], sigma: f64, rng: &mut ChaCha8Rng) {
    if sigma == 0.0 {
        return;
    }
    for row in values.iter_mut() {
        for v in row.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v *= (sigma * z).exp();
        }
    }
}

/// `x(i) = A s(i)` per gene, then independent median-one lognormal noise
/// `exp(noise_sigma z)` on every value. `noise_sigma = 0` is exact.
pub fn mix(
    s: &ExpressionMatrix,
    a: &MixingMatrix,
    noise_sigma: f64,
    seed: u64,
) -> Result<ExpressionMatrix> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "noise_sigma must be non-negative, got {noise_sigma}"
        )));
    }
    let mut values: Vec<[f64; 2]> = s.values().iter().map(|&row| a.apply(row)).collect();
    apply_noise(&mut values, noise_sigma, &mut noise_rng(seed));
    ExpressionMatrix::new(s.gene_ids().to_vec(), values, AxisKind::Samples)
}

/// Random proportion matrix `[[p, 1-p], [q, 1-q]]` with `|det| = |p - q|`
/// at least `min_abs_det`.
pub fn random_proportion_matrix<R: Rng>(rng: &mut R, min_abs_det: f64) -> MixingMatrix {
    assert!(min_abs_det < 1.0, "min_abs_det must be below 1");
    loop {
        let p: f64 = rng.random();
        let q: f64 = rng.random();
        if (p - q).abs() >= min_abs_det {
            if let Ok(m) = MixingMatrix::new([[p, 1.0 - p], [q, 1.0 - q]], MixingForm::Proportion) {
                return m;
            }
        }
    }
}

/// Builds a ground-truthed dataset.
///
/// Non-marker source totals are rescaled so both tissues carry the same
/// total expression; with a proportion-form `A` the two noise-free sample
/// columns then have equal sums, so mean normalization leaves them intact.
pub fn generate(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let n = config.n_genes;
    let a = config.mixing;
    let sampler = Sampler::new(config.expression_law)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut mg1 = order[..config.n_mg1].to_vec();
    let mut mg2 = order[config.n_mg1..config.n_mg1 + config.n_mg2].to_vec();
    mg1.sort_unstable();
    mg2.sort_unstable();
    // 0: non-marker, 1/2: marker of that tissue
    let mut owner = vec![0u8; n];
    mg1.iter().for_each(|&i| owner[i] = 1);
    mg2.iter().for_each(|&i| owner[i] = 2);

    let mut sources: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let d1 = sampler.sample(&mut rng);
            let d2 = sampler.sample(&mut rng);
            match owner[i] {
                1 => [d1, config.marker_leak * d1],
                2 => [config.marker_leak * d2, d2],
                _ => [d1, d2],
            }
        })
        .collect();

    equalize_totals(&mut sources, &owner);

    let mut deviations = vec![[0.0; 2]; n];
    if config.sample_dev_sigma > 0.0 {
        for (j, set) in [&mg1, &mg2].into_iter().enumerate() {
            for k in 0..2 {
                let raw: Vec<f64> = set
                    .iter()
                    .map(|&i| {
                        sources[i][j] * config.sample_dev_sigma * rng.random_range(-1.0..=1.0)
                    })
                    .collect();
                let count = set.len() as f64;
                let mean_dev = raw.iter().sum::<f64>() / count;
                let mean_level = set.iter().map(|&i| sources[i][j]).sum::<f64>() / count;
                for (&i, d) in set.iter().zip(&raw) {
                    // proportional centring keeps s + ds >= s (1 - 2 sigma) >= 0
                    deviations[i][k] = if mean_level > 0.0 {
                        d - mean_dev * sources[i][j] / mean_level
                    } else {
                        0.0
                    };
                }
            }
        }
    }

    let entries = a.entries();
    let mut mixed: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let mut x = [0.0; 2];
            for (k, xk) in x.iter_mut().enumerate() {
                let mut s = sources[i];
                if owner[i] > 0 {
                    s[owner[i] as usize - 1] += deviations[i][k];
                }
                *xk = entries[k][0] * s[0] + entries[k][1] * s[1];
            }
            x
        })
        .collect();
    apply_noise(&mut mixed, config.noise_sigma, &mut noise_rng(config.seed));

    let ids = gene_ids(n);
    let true_de_labels = fold_change_labels(&sources, config.fold_change);
    let ray = |j: usize| {
        let c = a.column(j);
        if c[0] > 0.0 {
            c[1] / c[0]
        } else {
            f64::INFINITY
        }
    };
    let (r1, r2) = (ray(0), ray(1));
    let true_markers = MarkerSets::new(mg1, mg2, r1.min(r2), r1.max(r2), 0.0, n)?;
    Ok(SynthDataset {
        sources: ExpressionMatrix::new(ids.clone(), sources, AxisKind::Tissues)?,
        mixed: ExpressionMatrix::new(ids, mixed, AxisKind::Samples)?,
        true_markers,
        true_mixing: a,
        true_de_labels,
        deviations,
    })
}

/// Scales the non-marker part of the lighter tissue column so both tissue
/// totals match. Marker rows are untouched, which keeps the leak ratio exact.
fn equalize_totals(sources: &mut [[f64; 2]], owner: &[u8]) {
    let mut marker_sum = [0.0; 2];
    let mut other_sum = [0.0; 2];
    for (row, &o) in sources.iter().zip(owner) {
        let acc = if o > 0 {
            &mut marker_sum
        } else {
            &mut other_sum
        };
        acc[0] += row[0];
        acc[1] += row[1];
    }
    if !(other_sum[0] > 0.0 && other_sum[1] > 0.0) {
        return;
    }
    let totals = [marker_sum[0] + other_sum[0], marker_sum[1] + other_sum[1]];
    let target = totals[0].max(totals[1]);
    let factors = [
        (target - marker_sum[0]) / other_sum[0],
        (target - marker_sum[1]) / other_sum[1],
    ];
    for (row, &o) in sources.iter_mut().zip(owner) {
        if o == 0 {
            row[0] *= factors[0];
            row[1] *= factors[1];
        }
    }
}
