//! Solvers for finite zero-sum repeated games with public signals.
//!
//! The crate is organised bottom-up:
//!
//! * [`rational`] and [`model`] hold the exact game description,
//! * [`catalog`] builds the standard counterexample games,
//! * [`belief`] turns a game with hidden state into a game on public beliefs,
//! * [`matrix`] and [`dp`] solve those belief games,
//! * [`analytics`] evaluates the closed-form threshold games,
//! * [`simulator`] plays games by Monte Carlo,
//! * [`verify`] bundles the numerical acceptance checks.

pub mod analytics;
pub mod belief;
pub mod catalog;
pub mod dp;
pub mod matrix;
pub mod model;
pub mod rational;
pub mod simulator;
pub mod verify;

pub use belief::{Belief, BeliefChain};
pub use matrix::{MatrixGame, MatrixSolution};
pub use model::{Distribution, GameSpec};
pub use rational::Rational;
