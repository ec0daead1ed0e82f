//! Two-sample testing with classifier logits.
//!
//! The toolkit in this crate revolves around one idea: train a binary
//! classifier to tell two samples apart, then use the mean difference of its
//! logit over held-out test points as the two-sample statistic. Everything
//! else supports that pipeline or probes it:
//!
//! - [`densities`] — analytic density models (Gaussian mixtures, a noisy
//!   sigmoid curve in the plane, a sphere patch) with exact pdfs and seeded
//!   samplers.
//! - [`quadrature`] / [`functionals`] — Gauss–Legendre grids and the
//!   population functionals `L[f]`, `T[f]`, JSD, symmetric KL, and
//!   witness-function mean/spread summaries.
//! - [`nn`] — a small dense ReLU classifier with softmax loss, Adam training,
//!   and analytic gradients (checked against finite differences).
//! - [`testing`] — the net-logit / net-acc / Gaussian-MMD statistics,
//!   bandwidth selection, and threshold calibration by permutation or
//!   asymptotic normality.
//! - [`power`] — the experiment harness: repeated seeded test runs, power
//!   estimation, replica tables, and the loss-versus-width sweep.
//! - [`manifold`] — a constructive four-layer ReLU approximator for smooth
//!   functions on low-dimensional manifolds, built from a trapezoid wavelet
//!   dictionary, chart atlases, and a tube-indicator gadget.
//!
//! All randomness flows through [`rng::CounterRng`], a counter-based
//! generator with documented stream splitting, so every experiment is
//! reproducible bit-for-bit from its base seed.

pub mod densities;
pub mod functionals;
pub mod linalg;
pub mod manifold;
pub mod nn;
pub mod num;
pub mod power;
pub mod quadrature;
pub mod rng;
pub mod testing;

pub use densities::AnalyticDensity;
pub use functionals::WitnessSummary;
pub use manifold::ConstructedNet;
pub use nn::{MlpParams, MlpSpec, TrainConfig};
pub use power::{ExperimentConfig, Method, PowerTable};
pub use quadrature::QuadratureGrid;
pub use rng::CounterRng;
pub use testing::{ScoredSamples, TestOutcome};
