//! Two-particle entanglement correlations from local probability amplitudes.
//!
//! Modules:
//! - [`amplitude`]: the local complex-amplitude model and its closed forms.
//! - [`oracle`]: independent Born-rule predictions and the Hardy search.
//! - [`events`]: seeded Monte Carlo pair generation, per-station streams and
//!   coincidence matching, plus a deterministic local-hidden-variable model.
//! - [`analysis`]: CHSH, setting scans and fringe visibility.
//! - [`continuum`]: position-momentum double-slit coincidence fringes.
//! - [`hardy_fit`]: fitting local amplitudes to Hardy joint probabilities.
//! - [`config`], [`cli`]: key-value experiment configs and the `qcorr` commands.
//! - [`selftest`]: acceptance checks that emit reproducible artifacts.

pub mod amplitude;
pub mod analysis;
pub mod cli;
pub mod config;
pub mod continuum;
pub mod error;
pub mod events;
pub mod hardy_fit;
pub mod oracle;
pub mod output;
pub mod selftest;

pub use error::{QcorrError, Result};
