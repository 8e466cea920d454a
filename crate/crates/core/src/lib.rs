//! Sparse mediation pathway selection.
//!
//! Estimates how much of a treatment's effect on an outcome travels through
//! each of `K` candidate mediators. The structural model is
//!
//! ```text
//! M = Z A + E1          (mediator equations)
//! R = Z C + M B + E2    (outcome equation)
//! ```
//!
//! where `Z` is the treatment (n×1), `M` the mediators (n×K), `R` the outcome
//! (n×1). The effect along pathway `j` is the product `A_j * B_j`; the direct
//! effect is `C`.
//!
//! The estimator minimizes a penalized least-squares objective whose penalty
//! shrinks pathway products `|A_j B_j|` directly (plus a quadratic guard that
//! keeps the per-pathway penalty convex, and an optional plain ℓ1 term):
//!
//! ```text
//! f = ℓ/2 + λ Σ_j (|A_j B_j| + φ (A_j² + B_j²)) + λ|C| + ω Σ_j (|A_j| + |B_j|)
//! ```
//!
//! Minimization is by ADMM: the coupled bilinear terms separate into
//! per-pathway two-variable subproblems with closed-form solutions
//! ([`prox::prox_pair`]), and the smooth blocks are linear solves with cached
//! factorizations ([`admm`]).
//!
//! The crate also ships the comparison baselines (per-mediator normal-theory
//! product tests with BH correction, and a two-stage lasso), synthetic data
//! generators with known truth, evaluation metrics (ROC/AUC, F1, MSE,
//! stability), K-fold cross-validation, and a post-selection refit with
//! bootstrap confidence intervals. The `pathlasso` binary exposes all of it
//! as a CLI.
//!
//! Inputs are standardized (mean 0, unit variance) before fitting; all
//! estimates and metrics live on the standardized scale unless explicitly
//! back-transformed via [`dataset::StandardizedDataset::coefficients_to_raw`].

pub mod admm;
pub mod baselines;
pub mod dataset;
mod error;
pub mod eval;
mod linalg;
pub mod model;
pub mod prox;
pub mod refit;
pub mod seed;
pub mod simgen;

pub use error::{Error, Result};
