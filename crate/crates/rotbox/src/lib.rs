//! Spin-bounded rotation boxes.
//!
//! A rotation box answers an angle `theta` with an outcome `a`; when the
//! device is built from a spin-`J` system its outcome probabilities are real
//! trigonometric polynomials of degree at most `2J`. This crate computes,
//! certifies and compares the general set `R_J` of such boxes and the subset
//! `Q_J` realizable by the Born rule.
//!
//! Module map:
//! - [`trigpoly`]: the trigonometric-polynomial data model.
//! - [`sdp`]: a dense primal-dual interior-point SDP solver.
//! - [`fejer`]: Fejer-Riesz factorization and Gram certificates.
//! - [`rset`]: membership, optimization and boundary sweeps over `R_J`.
//! - [`qset`]: Born-rule realizations, see-saw and the analytic quantum bound.
//! - [`gpt`]: the GPT system whose effects are exactly `R_J`.
//! - [`games`]: the metrological game and the two-setting sets.
//! - [`bell`]: two-party wirings and the Nagata evaluator.
//! - [`fixtures`]: bundled certificates, counterexamples and galleries.

pub mod bell;
pub mod fejer;
pub mod fixtures;
pub mod games;
pub mod gpt;
pub mod json;
pub mod linalg;
pub mod qset;
pub mod rset;
pub mod sdp;
pub mod trigpoly;

mod par;

pub use trigpoly::{SpinLabel, TrigPoly};
