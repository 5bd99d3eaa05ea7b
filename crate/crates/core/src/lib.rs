//! Link-level models for uplink pilot-based channel estimation in
//! user-centric cell-free MIMO networks with asynchronous reception.
//!
//! The crate is `no_std` (with `alloc`). Everything here is a pure function
//! of its inputs and an explicit random stream; file formats, configuration
//! parsing and parallel orchestration live in the `cellfree-sim` crate.
//!
//! Module map:
//!
//! - [`geometry`]: network layout, user-centric clusters, sample delays.
//! - [`channel`]: path loss, shadowing and Rayleigh fading.
//! - [`pilot`]: random, DFT and cyclically extended DFT pilot books and
//!   matched-filter sequences.
//! - [`airframe`]: augmented transmit rows and received pilot frames.
//! - [`estimator`]: matched filtering and LMMSE estimation.
//! - [`analytics`]: closed-form interference powers, NMSE aggregation and
//!   the conjugate-beamforming rate bound.
//! - [`experiment`]: the per-trial Monte-Carlo pipeline.
#![no_std]
// Float methods come from `num_traits::Float` (libm). Whenever std ends up
// linked (tests, or a dependent enabling `num-traits/std`), its inherent
// methods shadow the trait and the import looks unused.
#![allow(unused_imports)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod airframe;
pub mod analytics;
pub mod channel;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod geometry;
pub mod linalg;
pub mod pilot;
pub mod rng;

pub use error::{Error, Result};

/// Complex baseband sample.
pub type C64 = num_complex::Complex64;
