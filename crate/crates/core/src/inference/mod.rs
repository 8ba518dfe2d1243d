//! Posterior sampling for the sum-of-trees model.

pub mod conjugate;
pub mod csmc;
pub mod gibbs;
pub mod proposal;
pub mod rng;

pub use conjugate::{leaf_log_evidence, leaf_posterior, sample_leaf_mean, sample_sigma2, sigma2_posterior, LeafStats};
pub use csmc::{csmc_sweep, CsmcConfig, Resampling, SweepInput, SweepResult};
pub use gibbs::{gibbs_run, GibbsOutput, GibbsState, PosteriorSamples, Sampler, SamplerConfig, SamplerDiagnostics, TraceRow};
pub use proposal::propose_cut_on_hulls;
pub use rng::{substream, StreamKey};
