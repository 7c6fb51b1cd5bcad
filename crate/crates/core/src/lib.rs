//! Unsupervised deconvolution of two-source mixed expression profiles.
//!
//! Given two mixed samples `x(i) = a1 s1(i) + a2 s2(i)` over many genes,
//! with non-negative sources and at least one gene expressed only in each
//! source, the mixed scatter plot is a sector whose radii are the columns
//! of the mixing matrix. This crate finds those radii from the extreme
//! ratio genes, rescales them to proportions and inverts the mixture,
//! without any prior signatures or proportions.
//!
//! ```
//! use unmix::{pipeline, synth};
//!
//! let data = synth::generate(&synth::SynthConfig { n_genes: 300, ..Default::default() }).unwrap();
//! let mut config = pipeline::PipelineConfig::default();
//! config.markers.epsilon = 0.0;
//! let out = pipeline::run(&data.mixed, &config).unwrap();
//! let e1 = unmix::analyze::e1_error(&out.mixing, &data.true_mixing).unwrap();
//! assert!(e1 < 1e-9);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analyze;
pub mod deconvolve;
pub mod error;
pub mod markers;
pub mod model;
pub mod pipeline;
pub mod plot;
pub mod preprocess;
pub mod synth;

pub use error::{Error, Result};
pub use model::{AxisKind, ExpressionMatrix, MarkerSets, MixingForm, MixingMatrix, NormKind};
