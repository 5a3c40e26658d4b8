//! Detect and diagnose distribution shift between a reference (training)
//! dataset and a current (deployment) dataset.
//!
//! A model trained on one distribution quietly degrades when the data it
//! sees changes. This crate covers the three standard flavors of that
//! problem — covariate shift (p(X) moved), label shift (p(y) moved), and
//! concept shift (p(y|X) moved) — in both static train/test comparisons and
//! streaming settings, and goes one step past detection: it decomposes a
//! model's performance gap into covariate, concept, and out-of-support
//! components.
//!
//! # Modules
//!
//! - [`dataset`]: validated numeric tables, reference/current pairing, and
//!   reference-statistics standardization.
//! - [`density`]: shared-bin histograms, Gaussian kernels, and the median
//!   heuristic bandwidth.
//! - [`divergence`]: KL divergence, MMD (Gretton et al. 2012), and the
//!   least-squares density difference (Sugiyama et al. 2013).
//! - [`stattests`]: Kolmogorov-Smirnov and classifier two-sample tests, a
//!   seeded permutation harness, and the per-feature battery.
//! - [`streamdrift`]: DDM error-rate monitoring (Gama et al. 2004),
//!   windowed divergence monitoring, and multi-metric change tests.
//! - [`decompose`]: conditional risks, shared-support construction, and
//!   the three-term performance-gap decomposition.
//! - [`projections`]: PCA and ECDF plot data for visual inspection.
//! - [`commands`]: the pipelines behind the `shiftscope` CLI.
//!
//! # Example
//!
//! ```
//! use shiftscope::stattests::ks_two_sample;
//!
//! let reference = [0.1, 0.4, 0.2, 0.9, 0.6];
//! let current = [1.1, 1.4, 1.2, 1.9, 1.6];
//! let test = ks_two_sample(&reference, &current, 0.05).unwrap();
//! assert!(test.statistic > 0.9);
//! ```
//!
//! Runnable walkthroughs for each capability live in `examples/`; the
//! `shiftscope` binary wraps the same pipelines for CSV-in, JSON-out use.
//! Every randomized routine takes an explicit seed and is reproducible bit
//! for bit.

pub mod commands;
pub mod dataset;
pub mod decompose;
pub mod density;
pub mod divergence;
pub mod error;
pub mod logistic;
pub mod projections;
pub mod report;
pub mod stattests;
pub mod streamdrift;

mod mat;
mod rng;

pub use dataset::{Dataset, SourceTag, SplitPair};
pub use error::{Error, Result};
pub use report::ShiftReport;
pub use stattests::{TestMethod, TestResult};
pub use streamdrift::{DdmState, DdmStatus, DriftEvent, EventKind};
