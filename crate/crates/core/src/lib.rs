//! Implicit neural representations for time series.
//!
//! The crate fits sine-activated MLPs (SIRENs) to individual series, uses
//! them to impute missing values with an optional total-variation prior,
//! and trains a hypernetwork that maps whole series to INR weights. The
//! hypernetwork's latent space is interpolated to synthesize new series,
//! which are scored with train-on-synthetic/test-on-real and per-timestep
//! precision/recall.
//!
//! Everything trains on the small reverse-mode engine in [`autodiff`].

pub mod autodiff;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod hypertime;
pub mod imputation;
pub mod inr;
pub mod pca;
pub mod rng;
pub mod series;
pub mod spectral;

pub use error::{Error, Result};
pub use series::{ChannelScale, TimeSeries};
