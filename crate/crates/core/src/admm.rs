//! ADMM solver for the penalized pathway objective.
//!
//! The problem is rewritten over stacked blocks: `X = (Z  M)` (n×(K+1)),
//! coefficient row `Θ = (1, A)` for the mediator equations and column
//! `D = (C, B)ᵀ` for the outcome equation. Copies `α = Θ` and `β = D` carry
//! the penalties, and `Θ·e1 = 1` pins the first coordinate. Each sweep:
//!
//! 1. `Θ`-update — a diagonal linear solve (the mediator-equation normal
//!    matrix is diagonal once `W1` is),
//! 2. `D`-update — an SPD solve against the cached Cholesky factor of
//!    `w2 XᵀX + 2ρI`,
//! 3. `(α, β)`-update — one closed-form two-variable prox per coordinate
//!    pair ([`crate::prox::prox_pair`]),
//! 4. dual ascent on the three constraint multipliers.
//!
//! Iteration stops when the worst constraint violation and the largest
//! primal-block change both fall under their tolerances.

use std::io::Write;

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::dataset::{format_float, StandardizedDataset};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{self, AugmentedDesign, PathwayCoefficients, PenaltySpec};
use crate::prox::{prox_pair, ProxParams};

/// Iteration controls for the solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Maximum number of full sweeps.
    pub max_iter: usize,
    /// Stop when the largest constraint violation (infinity norm over
    /// `Θ - α`, `D - β`, `Θ_1 - 1`) is at most this.
    pub tol_primal: f64,
    /// ... and the largest change of any primal block in the last sweep is
    /// at most this.
    pub tol_change: f64,
    /// Augmented-Lagrangian curvature (fixed across iterations).
    pub rho: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol_primal: 1e-6,
            tol_change: 1e-8,
            rho: 1.0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        if !(self.tol_primal > 0.0) || !(self.tol_change > 0.0) {
            return Err(Error::InvalidParameter(
                "solver tolerances must be positive".into(),
            ));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "rho must be positive and finite, got {}",
                self.rho
            )));
        }
        Ok(())
    }
}

/// Full solver state: primal blocks, penalty copies, and dual multipliers.
/// All vectors have length K+1 (first coordinate is the pinned intercept row
/// / direct effect).
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub theta: Array1<f64>,
    pub d: Array1<f64>,
    pub alpha: Array1<f64>,
    pub beta: Array1<f64>,
    pub nu1: Array1<f64>,
    pub nu2: Array1<f64>,
    pub nu3: f64,
    pub rho: f64,
    /// Sweeps taken so far on this state.
    pub iteration: usize,
}

impl AdmmState {
    /// The cold start: `Θ = α = (1, 0, ..., 0)`, `D = β = 0`, zero duals.
    pub fn cold_start(k: usize, rho: f64) -> Self {
        let mut theta = Array1::zeros(k + 1);
        theta[0] = 1.0;
        Self {
            alpha: theta.clone(),
            theta,
            d: Array1::zeros(k + 1),
            beta: Array1::zeros(k + 1),
            nu1: Array1::zeros(k + 1),
            nu2: Array1::zeros(k + 1),
            nu3: 0.0,
            rho,
            iteration: 0,
        }
    }

    /// Infinity norm of all constraint violations:
    /// `max(|Θ - α|, |D - β|, |Θ_1 - 1|)`.
    pub fn primal_residual(&self) -> f64 {
        let mut worst = (self.theta[0] - 1.0).abs();
        for i in 0..self.theta.len() {
            worst = worst
                .max((self.theta[i] - self.alpha[i]).abs())
                .max((self.d[i] - self.beta[i]).abs());
        }
        worst
    }

    fn k(&self) -> usize {
        self.theta.len() - 1
    }
}

/// Cached per-dataset quantities shared by every sweep (and reusable across a
/// whole tuning path, since none of them depend on `lambda`, `phi`, `omega`).
pub struct Precomputed {
    /// Diagonal of the `Θ`-update system: `(4ρ, ZᵀZ w1_j + 2ρ, ...)`.
    theta_diag: Array1<f64>,
    /// `Θ`-update data term: `(0, w1_j ZᵀM_j, ...)`.
    theta_rhs: Array1<f64>,
    /// Lower Cholesky factor of the `D`-update system `w2 XᵀX + 2ρI`.
    d_factor: Array2<f64>,
    /// `D`-update data term `w2 XᵀR`.
    d_rhs: Array1<f64>,
    rho: f64,
    k: usize,
}

/// Builds the cached solve systems for one dataset / weight configuration.
pub fn precompute(
    std: &StandardizedDataset,
    spec: &PenaltySpec,
    rho: f64,
) -> Result<Precomputed> {
    spec.validate(std.k())?;
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "rho must be positive and finite, got {}",
            rho
        )));
    }
    let design = AugmentedDesign::new(std, spec.phi);
    let x = design.x();
    let k = std.k();
    let z = std.data().z();
    let ztz: f64 = z.iter().map(|v| v * v).sum();

    let mut theta_diag = Array1::zeros(k + 1);
    let mut theta_rhs = Array1::zeros(k + 1);
    // First coordinate is pinned by the extra constraint: its quadratic
    // coefficient is 2ρ from the copy constraint plus 2ρ from the pin.
    theta_diag[0] = 4.0 * rho;
    for j in 0..k {
        theta_diag[j + 1] = ztz * spec.w1[j] + 2.0 * rho;
        let ztm: f64 = z
            .iter()
            .zip(std.data().m().column(j).iter())
            .map(|(zi, mi)| zi * mi)
            .sum();
        theta_rhs[j + 1] = spec.w1[j] * ztm;
    }

    let mut gram = x.t().dot(x);
    gram.mapv_inplace(|v| v * spec.w2);
    for i in 0..=k {
        gram[[i, i]] += 2.0 * rho;
    }
    let d_factor = linalg::cholesky(&gram)?;
    let d_rhs = x.t().dot(std.data().r()).mapv(|v| v * spec.w2);

    Ok(Precomputed {
        theta_diag,
        theta_rhs,
        d_factor,
        d_rhs,
        rho,
        k,
    })
}

/// The `Θ`-update: minimizes the augmented Lagrangian over `Θ` with all other
/// blocks fixed. The system is diagonal.
pub fn update_theta(state: &AdmmState, pre: &Precomputed) -> Array1<f64> {
    let rho = pre.rho;
    let mut theta = Array1::zeros(pre.k + 1);
    for i in 0..=pre.k {
        let mut rhs = pre.theta_rhs[i] - state.nu1[i] + 2.0 * rho * state.alpha[i];
        if i == 0 {
            rhs += 2.0 * rho - state.nu3;
        }
        theta[i] = rhs / pre.theta_diag[i];
    }
    theta
}

/// The `D`-update: SPD solve against the cached factor.
pub fn update_d(state: &AdmmState, pre: &Precomputed) -> Array1<f64> {
    let rho = pre.rho;
    let mut rhs = pre.d_rhs.clone();
    for i in 0..=pre.k {
        rhs[i] += -state.nu2[i] + 2.0 * rho * state.beta[i];
    }
    linalg::cholesky_solve(&pre.d_factor, rhs.view())
}

/// The `(α, β)`-update: one closed-form two-variable prox per coordinate.
///
/// Coordinate 0 (the intercept/direct-effect pair) carries neither the
/// quadratic guard nor the lasso term, only `lambda |α_0 β_0|`; coordinates
/// `1..=K` carry the full penalty.
pub fn update_alpha_beta(
    state: &AdmmState,
    spec: &PenaltySpec,
) -> (Array1<f64>, Array1<f64>) {
    let rho = state.rho;
    let k = state.k();
    let mut alpha = Array1::zeros(k + 1);
    let mut beta = Array1::zeros(k + 1);
    for i in 0..=k {
        let (phi_i, omega_i) = if i == 0 {
            (2.0 * rho, 0.0)
        } else {
            (2.0 * spec.lambda * spec.phi + 2.0 * rho, spec.omega)
        };
        let sol = prox_pair(&ProxParams {
            lambda: spec.lambda,
            omega: omega_i,
            phi1: phi_i,
            phi2: phi_i,
            mu1: 2.0 * rho * state.theta[i] + state.nu1[i],
            mu2: 2.0 * rho * state.d[i] + state.nu2[i],
        });
        alpha[i] = sol.a;
        beta[i] = sol.b;
    }
    (alpha, beta)
}

/// Dual ascent with the fixed step `2ρ` on all three constraints.
pub fn update_duals(state: &mut AdmmState) {
    let rho = state.rho;
    for i in 0..state.theta.len() {
        state.nu1[i] += 2.0 * rho * (state.theta[i] - state.alpha[i]);
        state.nu2[i] += 2.0 * rho * (state.d[i] - state.beta[i]);
    }
    state.nu3 += 2.0 * rho * (state.theta[0] - 1.0);
}

/// One fitted point: coefficients, convergence data, and the final solver
/// state (reusable as a warm start for a neighbouring tuning value).
#[derive(Debug, Clone)]
pub struct FitResult {
    pub spec: PenaltySpec,
    pub coefs: PathwayCoefficients,
    pub converged: bool,
    pub iterations: usize,
    /// Objective value of the extracted coefficients.
    pub objective: f64,
    pub state: AdmmState,
}

impl FitResult {
    /// Pathway products `A_j B_j` of the fitted coefficients.
    pub fn pathway_effects(&self) -> Array1<f64> {
        self.coefs.pathway_effects().0
    }
}

/// Fits one penalty configuration. `init` warm-starts the solver (its `rho`
/// is overridden by `opts.rho`); `None` means the cold start.
pub fn fit(
    std: &StandardizedDataset,
    spec: &PenaltySpec,
    opts: &SolverOptions,
    init: Option<AdmmState>,
) -> Result<FitResult> {
    opts.validate()?;
    let pre = precompute(std, spec, opts.rho)?;
    fit_with_precomputed(std, spec, opts, init, &pre)
}

fn fit_with_precomputed(
    std: &StandardizedDataset,
    spec: &PenaltySpec,
    opts: &SolverOptions,
    init: Option<AdmmState>,
    pre: &Precomputed,
) -> Result<FitResult> {
    let k = std.k();
    let mut state = match init {
        Some(mut s) => {
            if s.theta.len() != k + 1 {
                return Err(Error::DimensionMismatch(format!(
                    "warm-start state for K = {}, dataset has K = {}",
                    s.theta.len() - 1,
                    k
                )));
            }
            s.rho = opts.rho;
            s.iteration = 0;
            s
        }
        None => AdmmState::cold_start(k, opts.rho),
    };

    let mut converged = false;
    for _ in 0..opts.max_iter {
        let theta = update_theta(&state, pre);
        state.theta = theta;
        let d = update_d(&state, pre);
        state.d = d;
        let (alpha, beta) = update_alpha_beta(&state, spec);
        let mut change = 0.0f64;
        for i in 0..=k {
            change = change
                .max((alpha[i] - state.alpha[i]).abs())
                .max((beta[i] - state.beta[i]).abs());
        }
        state.alpha = alpha;
        state.beta = beta;
        update_duals(&mut state);
        state.iteration += 1;

        if !state.theta[0].is_finite() || !state.alpha.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric(
                "solver state became non-finite (data badly scaled?)".into(),
            ));
        }
        if state.primal_residual() <= opts.tol_primal && change <= opts.tol_change {
            converged = true;
            break;
        }
    }

    let coefs = extract_coefficients(&state);
    let objective = model::objective(std.data(), &coefs, spec)?;
    Ok(FitResult {
        spec: spec.clone(),
        coefs,
        converged,
        iterations: state.iteration,
        objective,
        state,
    })
}

/// Reads `(A, B, C)` off the penalty copies: `A = α_{1..K}`, `B = β_{1..K}`,
/// `C = β_0` (the copies, not `Θ`/`D`, carry exact zeros).
fn extract_coefficients(state: &AdmmState) -> PathwayCoefficients {
    let k = state.k();
    let mut a = Array1::zeros(k);
    let mut b = Array1::zeros(k);
    for j in 0..k {
        a[j] = state.alpha[j + 1];
        b[j] = state.beta[j + 1];
    }
    PathwayCoefficients {
        a,
        b,
        c: state.beta[0],
    }
}

/// A fitted tuning path.
#[derive(Debug, Clone)]
pub struct PathResult {
    /// Method tag carried into serialized outputs (e.g. "PathLasso",
    /// "TSLasso").
    pub method: String,
    pub fits: Vec<FitResult>,
}

impl PathResult {
    /// Pathway-effect ℓ1 norm `Σ_j |A_j B_j|` per grid point.
    pub fn ab_l1_norms(&self) -> Vec<f64> {
        self.fits
            .iter()
            .map(|f| f.pathway_effects().iter().map(|v| v.abs()).sum())
            .collect()
    }

    /// Selected-pathway sets per grid point at `cutoff` (|A_j B_j| > cutoff).
    pub fn selected_sets(&self, cutoff: f64) -> Vec<std::collections::BTreeSet<usize>> {
        self.fits
            .iter()
            .map(|f| crate::eval::select_pathways(&f.pathway_effects(), cutoff).selected)
            .collect()
    }

    /// Writes the path as CSV: one row per grid point with the tuning values,
    /// convergence data, objective, `C`, all `A_j`, all `B_j`, all products.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let k = match self.fits.first() {
            Some(f) => f.coefs.k(),
            None => 0,
        };
        let mut csv = csv::Writer::from_writer(writer);
        let mut header = vec![
            "lambda".to_string(),
            "phi".to_string(),
            "omega".to_string(),
            "converged".to_string(),
            "iterations".to_string(),
            "objective".to_string(),
            "C".to_string(),
        ];
        for j in 1..=k {
            header.push(format!("A{}", j));
        }
        for j in 1..=k {
            header.push(format!("B{}", j));
        }
        for j in 1..=k {
            header.push(format!("AB{}", j));
        }
        csv.write_record(&header)?;
        for fit in &self.fits {
            let mut row = vec![
                format_float(fit.spec.lambda),
                format_float(fit.spec.phi),
                format_float(fit.spec.omega),
                (if fit.converged { "true" } else { "false" }).to_string(),
                fit.iterations.to_string(),
                format_float(fit.objective),
                format_float(fit.coefs.c),
            ];
            for v in fit.coefs.a.iter() {
                row.push(format_float(*v));
            }
            for v in fit.coefs.b.iter() {
                row.push(format_float(*v));
            }
            let (ab, _) = fit.coefs.pathway_effects();
            for v in ab.iter() {
                row.push(format_float(*v));
            }
            csv.write_record(&row)?;
        }
        csv.flush()?;
        Ok(())
    }

    /// Compact JSON summary: per grid point, tuning values, convergence,
    /// objective, support size, and the ℓ1 norm of the pathway effects.
    pub fn summary_json(&self, cutoff: f64) -> serde_json::Value {
        let points: Vec<PathPointSummary> = self
            .fits
            .iter()
            .map(|f| {
                let ab = f.pathway_effects();
                PathPointSummary {
                    lambda: f.spec.lambda,
                    phi: f.spec.phi,
                    omega: f.spec.omega,
                    converged: f.converged,
                    iterations: f.iterations,
                    objective: f.objective,
                    support_size: ab.iter().filter(|v| v.abs() > cutoff).count(),
                    ab_l1: ab.iter().map(|v| v.abs()).sum(),
                }
            })
            .collect();
        serde_json::json!({
            "method": self.method,
            "cutoff": cutoff,
            "points": points,
        })
    }
}

#[derive(Serialize)]
struct PathPointSummary {
    lambda: f64,
    phi: f64,
    omega: f64,
    converged: bool,
    iterations: usize,
    objective: f64,
    support_size: usize,
    ab_l1: f64,
}

/// Fits a whole tuning path with warm starts and one shared precomputation.
///
/// All specs must share `phi` and the loss weights; the grid must come sorted
/// strongest-penalty-first (non-increasing `lambda`; for an all-`lambda = 0`
/// grid, non-increasing `omega`), which is the order that makes warm starts
/// effective.
pub fn fit_path(
    std: &StandardizedDataset,
    specs: &[PenaltySpec],
    opts: &SolverOptions,
) -> Result<PathResult> {
    opts.validate()?;
    if specs.is_empty() {
        return Err(Error::InvalidParameter("empty tuning grid".into()));
    }
    let first = &specs[0];
    for spec in specs {
        spec.validate(std.k())?;
        if spec.phi != first.phi || spec.w2 != first.w2 || spec.w1 != first.w1 {
            return Err(Error::InvalidParameter(
                "all specs on a path must share phi and loss weights".into(),
            ));
        }
    }
    let lambda_constant = specs.iter().all(|s| s.lambda == first.lambda);
    let sorted = if lambda_constant {
        specs.windows(2).all(|w| w[0].omega >= w[1].omega)
    } else {
        specs.windows(2).all(|w| w[0].lambda >= w[1].lambda)
    };
    if !sorted {
        return Err(Error::InvalidParameter(
            "tuning grid must be sorted strongest-penalty-first".into(),
        ));
    }

    let pre = precompute(std, first, opts.rho)?;
    let mut fits: Vec<FitResult> = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let init = if i == 0 {
            None
        } else {
            Some(fits[i - 1].state.clone())
        };
        fits.push(fit_with_precomputed(std, spec, opts, init, &pre)?);
    }
    Ok(PathResult {
        method: "PathLasso".to_string(),
        fits,
    })
}

/// Log-spaced tuning grid from `max` down to `min` (inclusive), the order
/// [`fit_path`] expects.
pub fn log_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if !(min > 0.0) || !(max > min) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < min < max for a log grid, got [{}, {}]",
            min, max
        )));
    }
    if points < 2 {
        return Err(Error::InvalidParameter("need at least 2 grid points".into()));
    }
    let (lo, hi) = (min.ln(), max.ln());
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| (hi - step * i as f64).exp())
        .collect())
}
