//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain numbers and returns a JSON string, so the page
//! needs no generated type glue beyond the function imports.

use serde_json::{json, Value};
use unmix::analyze::{
    columns_swapped, de_rank, e1_error, fold_change_labels, pearson, roc_auc, spearman_rank,
    Direction,
};
use unmix::markers::{EpsilonMode, MarkerConfig};
use unmix::pipeline::{self, PipelineConfig};
use unmix::plot::ScatterPlot;
use unmix::synth::{generate, SynthConfig, SynthDataset};
use unmix::{MixingForm, MixingMatrix};
use wasm_bindgen::prelude::*;

/// Shared knobs of a synthetic two-sample experiment.
#[derive(Debug, Clone, Copy)]
pub struct Scenario {
    pub n_genes: usize,
    pub markers: usize,
    /// Share of tissue 1 in sample 1 and sample 2.
    pub p1: f64,
    pub p2: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Scenario {
    fn dataset(&self) -> unmix::Result<SynthDataset> {
        let mixing = MixingMatrix::new(
            [[self.p1, 1.0 - self.p1], [self.p2, 1.0 - self.p2]],
            MixingForm::Proportion,
        )?;
        generate(&SynthConfig {
            n_genes: self.n_genes,
            n_mg1: self.markers,
            n_mg2: self.markers,
            mixing,
            noise_sigma: self.noise,
            seed: self.seed,
            ..Default::default()
        })
    }
}

fn rounded(m: [[f64; 2]; 2]) -> Value {
    json!(m.map(|r| r.map(|v| (v * 1e4).round() / 1e4)))
}

/// Simulates, deconvolves and draws the scatter sector.
pub fn unmix_scenario(s: Scenario, epsilon: f64) -> unmix::Result<Value> {
    let data = s.dataset()?;
    let config = PipelineConfig {
        markers: MarkerConfig {
            epsilon,
            epsilon_mode: EpsilonMode::Relative,
            min_markers_per_source: 1,
        },
        clamp: true,
        ..Default::default()
    };
    let out = pipeline::run(&data.mixed, &config)?;
    let truth = data.sources.select(&out.preprocess.retained)?;
    let swapped = columns_swapped(&out.mixing, &data.true_mixing)?;
    let correlation = |j: usize| {
        let col = if swapped { 1 - j } else { j };
        pearson(&out.deconvolution.source_column(col), &truth.column(j)).ok()
    };

    let mut plot = ScatterPlot::new(out.data.values().to_vec());
    plot.radii = Some([out.mixing.column(0), out.mixing.column(1)]);
    plot.markers = [out.markers.mg1().to_vec(), out.markers.mg2().to_vec()];
    plot.title = format!("{} genes, noise {}", out.data.len(), s.noise);

    Ok(json!({
        "svg": plot.to_svg(),
        "true_mixing": rounded(data.true_mixing.entries()),
        "estimated_mixing": rounded(out.mixing.entries()),
        "e1": e1_error(&out.mixing, &data.true_mixing)?,
        "pearson": [correlation(0), correlation(1)],
        "markers": [out.markers.mg1().len(), out.markers.mg2().len()],
        "retained": out.data.len(),
    }))
}

/// Ranks genes by their mixed ratio and scores the ranking against the
/// pure-source truth.
pub fn rank_scenario(s: Scenario, fold_change: f64, top: usize) -> unmix::Result<Value> {
    let data = s.dataset()?;
    let labels = fold_change_labels(data.sources.values(), fold_change);
    let strength: Vec<f64> = data
        .mixed
        .values()
        .iter()
        .map(|x| (x[0] / x[1]).ln().abs())
        .collect();
    let sign = if data.true_mixing.det() > 0.0 {
        1.0
    } else {
        -1.0
    };
    let mixed: Vec<f64> = data.mixed.values().iter().map(|x| x[0] / x[1]).collect();
    let pure: Vec<f64> = data
        .sources
        .values()
        .iter()
        .map(|x| sign * x[0] / x[1])
        .collect();
    let ranking = de_rank(&data.mixed, Direction::Descending);
    let ids = data.mixed.gene_ids();
    let head: Vec<Value> = ranking
        .genes
        .iter()
        .take(top)
        .map(|g| {
            json!({
                "gene": ids[g.index],
                "score": g.score,
                "de": labels[g.index],
            })
        })
        .collect();
    Ok(json!({
        "auc": roc_auc(&strength, &labels).ok(),
        "spearman": spearman_rank(&mixed, &pure).ok(),
        "de_genes": labels.iter().filter(|l| **l).count(),
        "top": head,
    }))
}

fn to_js(result: unmix::Result<Value>) -> Result<String, JsError> {
    result
        .map(|v| v.to_string())
        .map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn deconvolve(
    n_genes: usize,
    markers: usize,
    p1: f64,
    p2: f64,
    noise: f64,
    epsilon: f64,
    seed: u32,
) -> Result<String, JsError> {
    let s = Scenario {
        n_genes,
        markers,
        p1,
        p2,
        noise,
        seed: seed.into(),
    };
    to_js(unmix_scenario(s, epsilon))
}

#[wasm_bindgen]
pub fn rank_genes(
    n_genes: usize,
    p1: f64,
    p2: f64,
    noise: f64,
    fold_change: f64,
    seed: u32,
) -> Result<String, JsError> {
    let s = Scenario {
        n_genes,
        markers: 5,
        p1,
        p2,
        noise,
        seed: seed.into(),
    };
    to_js(rank_scenario(s, fold_change, 15))
}
