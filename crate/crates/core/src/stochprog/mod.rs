//! Stochastic programs by MCMC over J-copy product targets.
//!
//! A one-stage problem `max_x E_ω G(ω, x)` with `G > 0` is turned into the joint
//! `π_J(ω₁…ω_J, x) ∝ ∏_j G(ω_j, x) p(ω_j)`, whose x-marginal `(E_ω G(ω, x))^J` piles up on
//! the maximizer as `J` grows. Two-stage problems replace `G` by a payoff built from an
//! annealed draw of the recourse dual.

pub mod farmer;
pub mod one_stage;
pub mod piecewise;
pub mod population;
pub mod portfolio;
pub mod saa;
pub mod two_stage;

pub use farmer::{farmer_inner_gibbs, farmer_outer_mcmc, within_one_bin, FarmerInner, FarmerInstance, FarmerOuterConfig, FarmerOuterRun, OmegaLaw};
pub use one_stage::{one_stage_mcmc, run_j_ladder, OneStageModel, OneStageRun};
pub use piecewise::PiecewiseExp;
pub use portfolio::{portfolio_mcmc, PortfolioInstance, PortfolioRun};
pub use saa::{saa_baseline, saa_maximize, SaaResult};
pub use two_stage::{ch_metropolis_ratio, two_stage_mcmc, RecourseData, TwoStageProblem, TwoStageRun, TwoStageVariant};
