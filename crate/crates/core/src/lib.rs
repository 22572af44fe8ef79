//! Simulation and analysis toolkit for arrays of birefringence phase-matched
//! spontaneous four-wave mixing (SFWM) photon-pair sources.
//!
//! The crate is organised bottom-up:
//!
//! - [`dispersion`]: Sellmeier refractive index of the substrate.
//! - [`phasematch`]: birefringent phase-matching solver and perturbation scans.
//! - [`tmsv`]: two-mode squeezed vacuum photon statistics and pump calibration.
//! - [`spectrum`]: joint spectral amplitudes, filters, marginals and Schmidt analysis.
//! - [`montecarlo`]: pulse-by-pulse detection simulation (pairs, HBT, power scans).
//! - [`hom`]: heralded two-source Hong-Ou-Mandel interference.
//! - [`array`]: the many-source chip model and its uniformity statistics.
//! - [`report`]: CSV/text serialisation shared by the command-line front end.
//!
//! All internal quantities are SI (meters, seconds, rad/s) unless a name says
//! otherwise (`_nm`, `_um`, `_mw`).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod dispersion;
pub mod error;
pub mod hom;
pub mod montecarlo;
pub mod phasematch;
pub mod report;
pub mod spectrum;
pub mod tmsv;
pub mod units;

pub use error::{Error, Result};
