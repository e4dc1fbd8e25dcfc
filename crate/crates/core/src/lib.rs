//! Link-level simulator for an RIS-assisted mmWave downlink.
//!
//! The crate models a base station talking to a single-antenna user through a
//! reconfigurable intelligent surface, with no direct link. It covers the full
//! closed loop studied in limited-feedback FDD systems: angle-domain path
//! selection, downlink sounding of the selected paths, quantized gain feedback
//! through a random vector quantization codebook, and alternating active /
//! passive beamformer design — plus the classical estimation and beamforming
//! baselines the proposed pipeline is measured against.
//!
//! Modules:
//! - [`rng`], [`numerics`]: seeded randomness and dense complex linear algebra
//! - [`channel`]: geometric channel synthesis (steering vectors, cascaded paths)
//! - [`rvq`]: random vector quantization codebooks
//! - [`manifold`]: Riemannian conjugate gradient on the unit-modulus manifold
//! - [`selection`]: statistical (angle-only) beamforming and greedy path selection
//! - [`sounding`]: pilot design, gain estimation, and feedback for selected paths
//! - [`beamforming`]: gain-aware alternating beamformer update
//! - [`baselines`]: LS/MMSE estimators, prior-work alternating optimization,
//!   random/exhaustive selection
//! - [`sim`]: experiment orchestration, sweeps, CSV output, validation checks

pub mod baselines;
pub mod beamforming;
pub mod channel;
pub mod manifold;
pub mod numerics;
pub mod rng;
pub mod rvq;
pub mod selection;
pub mod sim;
pub mod sounding;
