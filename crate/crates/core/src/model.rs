//! Model types and the penalized objective.
//!
//! The structural model is `M = Z A + E1`, `R = Z C + M B + E2`. The fitted
//! objective is
//!
//! ```text
//! f(A, B, C) = loss/2 + lambda * P1 + omega * P2
//! loss = tr[W1 (M - Z A)ᵀ (M - Z A)] + w2 (R - Z C - M B)ᵀ (R - Z C - M B)
//! P1   = Σ_j (|A_j B_j| + phi (A_j² + B_j²)) + |C|
//! P2   = Σ_j (|A_j| + |B_j|)
//! ```
//!
//! `P1` shrinks pathway products directly; its quadratic part with
//! `phi >= 1/2` keeps each per-pathway term convex. `P2` is a plain lasso on
//! the individual coefficients (the two-stage-lasso baseline is exactly
//! `lambda = 0, omega > 0`).

use ndarray::{Array1, Array2};

use crate::dataset::{MediationDataset, StandardizedDataset};
use crate::error::{Error, Result};
use crate::linalg;

/// Coefficients of the structural model: mediator loadings `a` (K), outcome
/// loadings `b` (K), and the direct effect `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathwayCoefficients {
    pub a: Array1<f64>,
    pub b: Array1<f64>,
    pub c: f64,
}

impl PathwayCoefficients {
    /// All-zero coefficients for `k` mediators.
    pub fn zeros(k: usize) -> Self {
        Self {
            a: Array1::zeros(k),
            b: Array1::zeros(k),
            c: 0.0,
        }
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }

    /// Per-pathway products `A_j * B_j` and the implied total effect
    /// `Σ_j A_j B_j + C`.
    pub fn pathway_effects(&self) -> (Array1<f64>, f64) {
        let ab = &self.a * &self.b;
        let total = ab.sum() + self.c;
        (ab, total)
    }
}

/// Tuning parameters and loss weights for one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpec {
    /// Weight of the pathway-product penalty `P1` (and of `|C|`).
    pub lambda: f64,
    /// Convexity parameter of the quadratic guard inside `P1`; must be >= 1/2.
    pub phi: f64,
    /// Weight of the plain lasso penalty `P2`.
    pub omega: f64,
    /// Per-mediator-equation loss weights (diagonal of `W1`), length K.
    pub w1: Array1<f64>,
    /// Outcome-equation loss weight.
    pub w2: f64,
}

impl PenaltySpec {
    /// A spec with unit loss weights (`W1 = I`, `w2 = 1`).
    pub fn with_unit_weights(k: usize, lambda: f64, phi: f64, omega: f64) -> Self {
        Self {
            lambda,
            phi,
            omega,
            w1: Array1::ones(k),
            w2: 1.0,
        }
    }

    /// Checks ranges: `lambda, omega >= 0`, `phi >= 1/2`, all weights > 0.
    pub fn validate(&self, k: usize) -> Result<()> {
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.omega >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "omega must be >= 0, got {}",
                self.omega
            )));
        }
        if !(self.phi >= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "phi must be >= 1/2 to keep the pathway penalty convex, got {}",
                self.phi
            )));
        }
        if self.w1.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "w1 has {} entries for {} mediators",
                self.w1.len(),
                k
            )));
        }
        if self.w1.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(
                "all W1 weights must be positive and finite".into(),
            ));
        }
        if !(self.w2 > 0.0) || !self.w2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "w2 must be positive and finite, got {}",
                self.w2
            )));
        }
        Ok(())
    }
}

fn check_dims(dataset: &MediationDataset, coefs: &PathwayCoefficients) -> Result<()> {
    if coefs.a.len() != dataset.k() || coefs.b.len() != dataset.k() {
        return Err(Error::DimensionMismatch(format!(
            "coefficients for {} mediators, dataset has {}",
            coefs.a.len(),
            dataset.k()
        )));
    }
    Ok(())
}

/// Weighted squared-error loss of both equations (not halved):
/// `Σ_j w1_j ||M_j - Z A_j||² + w2 ||R - Z C - M B||²`.
pub fn loss(
    dataset: &MediationDataset,
    coefs: &PathwayCoefficients,
    spec: &PenaltySpec,
) -> Result<f64> {
    check_dims(dataset, coefs)?;
    spec.validate(dataset.k())?;
    let z = dataset.z();
    let mut total = 0.0;
    for j in 0..dataset.k() {
        let aj = coefs.a[j];
        let col = dataset.m().column(j);
        let rss: f64 = col
            .iter()
            .zip(z.iter())
            .map(|(mij, zi)| {
                let e = mij - zi * aj;
                e * e
            })
            .sum();
        total += spec.w1[j] * rss;
    }
    let fitted = dataset.m().dot(&coefs.b);
    let rss2: f64 = dataset
        .r()
        .iter()
        .zip(z.iter())
        .zip(fitted.iter())
        .map(|((ri, zi), mi)| {
            let e = ri - zi * coefs.c - mi;
            e * e
        })
        .sum();
    Ok(total + spec.w2 * rss2)
}

/// Pathway-product penalty `P1 = Σ_j (|A_j B_j| + phi (A_j² + B_j²)) + |C|`.
pub fn penalty_p1(coefs: &PathwayCoefficients, phi: f64) -> f64 {
    let mut p = coefs.c.abs();
    for j in 0..coefs.k() {
        let (a, b) = (coefs.a[j], coefs.b[j]);
        p += (a * b).abs() + phi * (a * a + b * b);
    }
    p
}

/// Plain lasso penalty `P2 = Σ_j (|A_j| + |B_j|)`. `C` is not included.
pub fn penalty_p2(coefs: &PathwayCoefficients) -> f64 {
    coefs.a.iter().map(|v| v.abs()).sum::<f64>() + coefs.b.iter().map(|v| v.abs()).sum::<f64>()
}

/// Full objective `loss/2 + lambda * P1 + omega * P2`.
pub fn objective(
    dataset: &MediationDataset,
    coefs: &PathwayCoefficients,
    spec: &PenaltySpec,
) -> Result<f64> {
    let l = loss(dataset, coefs, spec)?;
    Ok(l / 2.0 + spec.lambda * penalty_p1(coefs, spec.phi) + spec.omega * penalty_p2(coefs))
}

/// Marginal total effect of `Z` on `R`: the slope of the centered
/// least-squares regression of `R` on `Z` (equivalently, OLS with an
/// intercept). On standardized data the intercept is zero by construction.
pub fn total_effect(dataset: &MediationDataset) -> Result<f64> {
    let n = dataset.n() as f64;
    let z_mean = dataset.z().sum() / n;
    let r_mean = dataset.r().sum() / n;
    let mut szz = 0.0;
    let mut szr = 0.0;
    for (zi, ri) in dataset.z().iter().zip(dataset.r().iter()) {
        szz += (zi - z_mean) * (zi - z_mean);
        szr += (zi - z_mean) * (ri - r_mean);
    }
    if szz <= 0.0 {
        return Err(Error::ConstantColumn("Z".into()));
    }
    Ok(szr / szz)
}

/// The design for the solver's stacked form: `X = (Z  M)` of shape
/// `n × (K+1)`, with coefficient rows `Θ = (1, A)` and columns `D = (C, B)ᵀ`.
///
/// `e1` selects the pinned first coordinate of `Θ`; `j_mask` marks which
/// coordinates carry the `omega` lasso term (all but the first); `phi_mask`
/// carries the quadratic-guard weight per coordinate (0 for the first, `phi`
/// for the rest).
#[derive(Debug, Clone)]
pub struct AugmentedDesign {
    x: Array2<f64>,
    e1: Array1<f64>,
    j_mask: Array1<f64>,
    phi_mask: Array1<f64>,
}

impl AugmentedDesign {
    pub fn new(std: &StandardizedDataset, phi: f64) -> Self {
        let n = std.n();
        let k = std.k();
        let mut x = Array2::zeros((n, k + 1));
        x.column_mut(0).assign(std.data().z());
        for j in 0..k {
            x.column_mut(j + 1).assign(&std.data().m().column(j));
        }
        let mut e1 = Array1::zeros(k + 1);
        e1[0] = 1.0;
        let mut j_mask = Array1::ones(k + 1);
        j_mask[0] = 0.0;
        let phi_mask = j_mask.mapv(|v| v * phi);
        Self {
            x,
            e1,
            j_mask,
            phi_mask,
        }
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn e1(&self) -> &Array1<f64> {
        &self.e1
    }

    pub fn j_mask(&self) -> &Array1<f64> {
        &self.j_mask
    }

    pub fn phi_mask(&self) -> &Array1<f64> {
        &self.phi_mask
    }
}

/// Restricted least squares used by the refit step: OLS of each selected
/// mediator on `Z`, and of `R` on `(Z, M_selected)`; unselected pathways get
/// zero coefficients.
///
/// The outcome equation tolerates rank deficiency: linearly dependent columns
/// are deterministically pinned to zero (basic solution), so zero-noise data
/// — where selected mediators are exact multiples of `Z` — still refits.
/// Only a treatment column with no variation at all is an error.
pub(crate) fn restricted_ols(
    std: &StandardizedDataset,
    selected: &std::collections::BTreeSet<usize>,
) -> Result<PathwayCoefficients> {
    let data = std.data();
    let k = data.k();
    if let Some(&max) = selected.iter().next_back() {
        if max >= k {
            return Err(Error::InvalidParameter(format!(
                "selected pathway index {} out of range (K = {})",
                max, k
            )));
        }
    }
    let mut coefs = PathwayCoefficients::zeros(k);
    let z = data.z();
    let szz: f64 = z.iter().map(|v| v * v).sum();
    if szz <= 0.0 {
        return Err(Error::ConstantColumn("Z".into()));
    }
    for &j in selected {
        let szm: f64 = z
            .iter()
            .zip(data.m().column(j).iter())
            .map(|(zi, mi)| zi * mi)
            .sum();
        coefs.a[j] = szm / szz;
    }
    // Outcome equation on (Z, selected mediators).
    let p = selected.len() + 1;
    let mut design = Array2::zeros((data.n(), p));
    design.column_mut(0).assign(z);
    for (idx, &j) in selected.iter().enumerate() {
        design.column_mut(idx + 1).assign(&data.m().column(j));
    }
    let gram = design.t().dot(&design);
    let rhs = design.t().dot(data.r());
    let fit = linalg::solve_gram_basic(&gram, rhs.view());
    coefs.c = fit[0];
    for (idx, &j) in selected.iter().enumerate() {
        coefs.b[j] = fit[idx + 1];
    }
    Ok(coefs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::standardize;
    use ndarray::array;

    /// Single-observation fixture: Z=(1), M=(2), R=(3). Too small for the
    /// public constructor, built directly to pin down the loss arithmetic.
    fn tiny() -> MediationDataset {
        MediationDataset::from_parts_unchecked(
            array![1.0],
            array![[2.0]],
            array![3.0],
            None,
        )
    }

    fn unit_coefs() -> PathwayCoefficients {
        PathwayCoefficients {
            a: array![1.0],
            b: array![1.0],
            c: 0.0,
        }
    }

    #[test]
    fn loss_matches_hand_arithmetic() {
        // (2 - 1*1)^2 + (3 - 1*0 - 2*1)^2 = 1 + 1 = 2 with unit weights.
        let spec = PenaltySpec::with_unit_weights(1, 0.0, 0.5, 0.0);
        let l = loss(&tiny(), &unit_coefs(), &spec).unwrap();
        assert!((l - 2.0).abs() < 1e-15);

        // Doubling the mediator-equation weight: 2*1 + 1 = 3.
        let spec_w = PenaltySpec {
            w1: array![2.0],
            ..spec
        };
        let l = loss(&tiny(), &unit_coefs(), &spec_w).unwrap();
        assert!((l - 3.0).abs() < 1e-15);
    }

    #[test]
    fn penalties_match_hand_arithmetic() {
        let coefs = unit_coefs();
        // P1 = |1*1| + 0.5*(1+1) + |0| = 2; P2 = 1 + 1 = 2.
        assert!((penalty_p1(&coefs, 0.5) - 2.0).abs() < 1e-15);
        assert!((penalty_p2(&coefs) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn objective_composes_loss_and_penalties() {
        // loss/2 + lambda*P1 + omega*P2 = 2/2 + 1*2 + 1*2 = 5.
        let spec = PenaltySpec::with_unit_weights(1, 1.0, 0.5, 1.0);
        let f = objective(&tiny(), &unit_coefs(), &spec).unwrap();
        assert!((f - 5.0).abs() < 1e-15);
    }

    #[test]
    fn objective_is_zero_for_zero_everything() {
        let ds = MediationDataset::from_parts_unchecked(
            array![0.0, 0.0],
            array![[0.0], [0.0]],
            array![0.0, 0.0],
            None,
        );
        let spec = PenaltySpec::with_unit_weights(1, 3.0, 2.0, 1.0);
        let f = objective(&ds, &PathwayCoefficients::zeros(1), &spec).unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn pathway_effects_multiply_and_total() {
        let coefs = PathwayCoefficients {
            a: array![2.0, 0.0, -1.0],
            b: array![0.5, 3.0, 2.0],
            c: 0.25,
        };
        let (ab, total) = coefs.pathway_effects();
        assert_eq!(ab, array![1.0, 0.0, -2.0]);
        assert!((total - (1.0 + 0.0 - 2.0 + 0.25)).abs() < 1e-15);
    }

    #[test]
    fn total_effect_recovers_unit_slope() {
        let ds = MediationDataset::new(
            array![1.0, -1.0, 1.0, -1.0],
            array![[0.1], [0.2], [0.3], [0.4]],
            array![1.1, -0.9, 0.9, -1.1],
            None,
        )
        .unwrap();
        assert!((total_effect(&ds).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn total_effect_is_invariant_to_shifts() {
        let ds = MediationDataset::new(
            array![101.0, 99.0, 101.0, 99.0],
            array![[0.1], [0.2], [0.3], [0.4]],
            array![51.1, 49.1, 50.9, 48.9],
            None,
        )
        .unwrap();
        assert!((total_effect(&ds).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spec_validation_rejects_bad_ranges() {
        let ok = PenaltySpec::with_unit_weights(2, 1.0, 0.5, 0.0);
        assert!(ok.validate(2).is_ok());
        assert!(PenaltySpec { lambda: -1.0, ..ok.clone() }.validate(2).is_err());
        assert!(PenaltySpec { phi: 0.49, ..ok.clone() }.validate(2).is_err());
        assert!(PenaltySpec { omega: -0.1, ..ok.clone() }.validate(2).is_err());
        assert!(PenaltySpec { w2: 0.0, ..ok.clone() }.validate(2).is_err());
        assert!(PenaltySpec { w1: array![1.0, 0.0], ..ok.clone() }.validate(2).is_err());
        assert!(ok.validate(3).is_err());
    }

    #[test]
    fn augmented_design_stacks_treatment_and_mediators() {
        let ds = MediationDataset::new(
            array![1.0, 2.0, 4.0],
            array![[0.5, 1.0], [1.5, 0.0], [2.5, -1.0]],
            array![0.1, 0.2, 0.3],
            None,
        )
        .unwrap();
        let std = standardize(&ds).unwrap();
        let design = AugmentedDesign::new(&std, 2.0);
        assert_eq!(design.x().ncols(), 3);
        assert_eq!(design.x().column(0), std.data().z().view());
        assert_eq!(design.x().column(2), std.data().m().column(1));
        assert_eq!(design.e1(), &array![1.0, 0.0, 0.0]);
        assert_eq!(design.j_mask(), &array![0.0, 1.0, 1.0]);
        assert_eq!(design.phi_mask(), &array![0.0, 2.0, 2.0]);
    }

    #[test]
    fn restricted_ols_recovers_noiseless_submodel() {
        // M1 = 2Z + p with p orthogonal to both Z and the constant vector,
        // so the Z-slope of M1 is exactly 2 while (Z, M1) stays full rank.
        // R = Z + 0.5*M1 exactly; mediator 2 is pure noise but unselected.
        let z = array![-3.0, -1.0, 1.0, 3.0];
        let p = array![1.0, -1.0, -1.0, 1.0];
        let m1 = &z.mapv(|v| 2.0 * v) + &p;
        let m2 = array![0.3, -0.7, 0.9, 0.1];
        let r = &z + &m1.mapv(|v| 0.5 * v);
        let mut m = Array2::zeros((4, 2));
        m.column_mut(0).assign(&m1);
        m.column_mut(1).assign(&m2);
        let ds = MediationDataset::new(z, m, r, None).unwrap();
        let std = standardize(&ds).unwrap();
        let selected: std::collections::BTreeSet<usize> = [0].into_iter().collect();
        let coefs = restricted_ols(&std, &selected).unwrap();
        // Back-transformed, the raw-scale structure must reappear exactly.
        let raw = std.coefficients_to_raw(&coefs);
        assert!((raw.a[0] - 2.0).abs() < 1e-10);
        assert!((raw.b[0] - 0.5).abs() < 1e-10);
        assert!((raw.c - 1.0).abs() < 1e-10);
        assert_eq!(coefs.a[1], 0.0);
        assert_eq!(coefs.b[1], 0.0);
    }
}
