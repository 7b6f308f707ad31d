//! Monte Carlo optimization by simulating annealed Boltzmann distributions.
//!
//! The crate is layered bottom-up:
//!
//! * [`samplers1d`] — exact one-dimensional truncated samplers;
//! * [`polytope`], [`lp`] — constraint sets, conditional bounds and a small vertex oracle;
//! * [`truncexp_mv`], [`truncnorm_mv`], [`slice`] — Gibbs and slice kernels on polytopes;
//! * [`anneal`] — Boltzmann targets, κ schedules, mode and value estimators, the LP dual solver;
//! * [`waterfill`] — unbiased particle economization;
//! * [`stochprog`] — one- and two-stage stochastic programs (portfolio, farmer).
//!
//! Every sampler takes an explicit generator; [`rng::RngStream`] gives reproducible,
//! splittable streams.

pub mod anneal;
pub mod diagnostics;
pub mod error;
pub mod lp;
pub mod polytope;
pub mod rng;
pub mod samplers1d;
pub mod slice;
pub mod stochprog;
pub mod truncexp_mv;
pub mod truncnorm_mv;
pub mod waterfill;

pub use error::{Error, Result};
pub use polytope::Polytope;
pub use rng::RngStream;
pub use samplers1d::Interval;
