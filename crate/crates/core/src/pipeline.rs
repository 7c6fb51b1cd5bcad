//! End-to-end unsupervised deconvolution: normalize, filter, detect
//! markers, estimate the mixing matrix, invert.

use serde::Serialize;

use crate::deconvolve::{
    recover_sources, sample_specific_markers, DeconvolutionResult, SampleSpecificProfiles,
};
use crate::error::Result;
use crate::markers::{detect_markers, estimate_mixing, scale_to_proportions, MarkerConfig};
use crate::model::{ExpressionMatrix, MarkerSets, MixingMatrix};
use crate::preprocess::{preprocess, PreprocessConfig, PreprocessReport};

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub markers: MarkerConfig,
    /// Clamp negative source estimates to zero.
    pub clamp: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub preprocess: PreprocessReport,
    /// Normalized, filtered input; every index below refers to its rows.
    pub data: ExpressionMatrix,
    pub markers: MarkerSets,
    pub raw_mixing: MixingMatrix,
    pub mixing: MixingMatrix,
    pub deconvolution: DeconvolutionResult,
    pub sample_specific: SampleSpecificProfiles,
}

pub fn run(x: &ExpressionMatrix, config: &PipelineConfig) -> Result<PipelineOutput> {
    let (data, report) = preprocess(x, &config.preprocess)?;
    let markers = detect_markers(&data, &config.markers)?;
    let raw_mixing = estimate_mixing(&data, &markers, config.preprocess.norm_kind)?;
    let mixing = scale_to_proportions(&raw_mixing)?;
    let deconvolution = recover_sources(&data, &mixing, config.clamp)?;
    let sample_specific = sample_specific_markers(&data, &mixing, &markers)?;
    Ok(PipelineOutput {
        preprocess: report,
        data,
        markers,
        raw_mixing,
        mixing,
        deconvolution,
        sample_specific,
    })
}
