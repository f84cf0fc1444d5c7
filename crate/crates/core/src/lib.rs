//! Stochastic relaxation of a heavy test particle in a Gaussian bath.
//!
//! The crate provides:
//!
//! * the discrete collision chain `V_n = c V_{n-1} + X_n` ([`chain`]);
//! * its Poisson-clocked continuous-time version and exact mixture law
//!   ([`time_process`]);
//! * a deterministic solver for the linear Boltzmann equation
//!   ([`boltzmann`]);
//! * the Ornstein-Uhlenbeck limit under collision-rate renormalization, with
//!   coupled-path convergence experiments ([`ou`]);
//! * F/D state crossing statistics, first hitting times, ensemble dephasing
//!   and the Kubo oscillator ([`crossing`]);
//! * a TOML-configured experiment runner ([`config`], [`runner`]).
//!
//! All Monte Carlo paths draw from counter-based streams ([`rng`]), so
//! results depend only on the seed, never on the worker count.

pub mod boltzmann;
pub mod chain;
pub mod config;
pub mod crossing;
pub mod error;
pub mod ou;
pub mod params;
pub mod rng;
pub mod runner;
pub mod stats;
pub mod time_process;

pub use error::{Error, Result};
pub use params::{chain_variance, equilibrium_spec, restitution_coefficient, time_variance, GasParams};
pub use rng::StreamFamily;
