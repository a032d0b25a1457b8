//! Free-boundary solver and verification stack for the perpetual optimal
//! stopping of a geometric Brownian motion on its running maximum.
//!
//! A position pays `(F(S)/X - 1)^+` when exercised, where `X` is a GBM,
//! `S` its running maximum and `F(s) = 1 - exp(-s)` a saturating cap.
//! The crate computes the family of smooth-fit exercise boundaries, picks
//! the optimal one by its asymptote, assembles the associated value
//! functions, and cross-checks the construction three independent ways:
//!
//! * [`model`] — closed-form constants and scalar curves;
//! * [`boundary`] — the free-boundary ODE family in the ratio coordinate
//!   `Q = H/F`, with asymptote-anchored construction of the optimal
//!   boundary;
//! * [`value`] — candidate value functions, smooth-fit coefficients and
//!   variational-inequality checks;
//! * [`lcp`] — a finite-difference obstacle-problem solver on the wedge,
//!   used as a ground-truth oracle;
//! * [`mc`] — reproducible Monte-Carlo estimation of boundary-stopping
//!   rules and transversality diagnostics;
//! * [`config`]/[`output`] — run configuration and CSV emission for the
//!   CLI.

pub mod boundary;
pub mod config;
pub mod error;
pub mod interp;
pub mod lcp;
pub mod mc;
pub mod model;
pub mod ode;
pub mod output;
pub mod value;

pub use error::{Error, Result};
