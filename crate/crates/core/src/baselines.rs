//! Comparison baselines.
//!
//! * Per-mediator product-of-coefficients testing: for each mediator alone,
//!   OLS of `M_j` on `Z` and of `R` on `(Z, M_j)`, a normal-approximation
//!   test of the product `a_j b_j`, and Benjamini–Hochberg correction across
//!   mediators.
//! * Two-stage lasso: plain ℓ1 penalties on both equations, which is exactly
//!   the main objective at `lambda = 0, omega > 0` and is fitted by the same
//!   solver.

use std::io::Write;

use ndarray::Array2;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::admm::{self, PathResult, SolverOptions};
use crate::dataset::{format_float, StandardizedDataset};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::PenaltySpec;

/// One mediator's single-pathway fit and product test.
#[derive(Debug, Clone)]
pub struct BkPathwayResult {
    /// Mediator index (0-based).
    pub mediator: usize,
    pub a_hat: f64,
    pub se_a: f64,
    pub b_hat: f64,
    pub se_b: f64,
    /// Direct effect from this mediator's outcome regression.
    pub c_hat: f64,
    pub ab_hat: f64,
    pub z_stat: f64,
    pub p_value: f64,
    /// Survived BH selection at the requested rate.
    pub selected: bool,
    /// Outcome regression was rank-deficient; `p_value` forced to 1.
    pub degenerate: bool,
}

/// Product-test statistic and two-sided normal p-value for `a * b` with the
/// first-order variance `se_ab² = a² se_b² + b² se_a²`.
///
/// Degenerate conventions: `se_ab = 0` gives `p = 0` when `ab != 0` (an
/// infinitely precise nonzero product) and `p = 1` when `ab = 0`.
pub fn sobel_test(a: f64, se_a: f64, b: f64, se_b: f64) -> Result<(f64, f64)> {
    if se_a < 0.0 || se_b < 0.0 {
        return Err(Error::InvalidParameter(
            "standard errors must be nonnegative".into(),
        ));
    }
    if !(a.is_finite() && b.is_finite() && se_a.is_finite() && se_b.is_finite()) {
        return Err(Error::InvalidParameter(
            "non-finite input to the product test".into(),
        ));
    }
    let ab = a * b;
    let se_ab = (a * a * se_b * se_b + b * b * se_a * se_a).sqrt();
    if se_ab == 0.0 {
        return Ok(if ab == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY * ab.signum(), 0.0)
        });
    }
    let z = ab / se_ab;
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p = 2.0 * (1.0 - normal.cdf(z.abs()));
    Ok((z, p))
}

/// Benjamini–Hochberg step-up selection at rate `q`: with sorted p-values
/// `p_(1) <= ... <= p_(m)`, find the largest `i` with `p_(i) <= q i / m` and
/// select everything at or below it.
pub fn bh_select(p_values: &[f64], q: f64) -> Result<Vec<bool>> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!(
            "BH rate must be in [0, 1], got {}",
            q
        )));
    }
    for &p in p_values {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "p-value {} outside [0, 1]",
                p
            )));
        }
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p_values[i].total_cmp(&p_values[j]));
    let mut cut = None;
    for (rank, &idx) in order.iter().enumerate() {
        if p_values[idx] <= q * (rank + 1) as f64 / m as f64 {
            cut = Some(rank);
        }
    }
    let mut selected = vec![false; m];
    if let Some(cut) = cut {
        for &idx in &order[..=cut] {
            selected[idx] = true;
        }
    }
    Ok(selected)
}

/// Fits every mediator's single-pathway model and applies BH at rate `q`.
///
/// Regressions run without intercepts (the data is standardized). A
/// rank-deficient outcome regression (mediator collinear with the treatment)
/// marks that mediator degenerate with `p = 1` and zero outcome-side
/// estimates.
pub fn bk_fit(std: &StandardizedDataset, q: f64) -> Result<Vec<BkPathwayResult>> {
    let data = std.data();
    let n = data.n();
    if n < 4 {
        return Err(Error::InvalidData(
            "per-mediator testing needs at least 4 observations".into(),
        ));
    }
    let z = data.z();
    let mut results = Vec::with_capacity(data.k());
    for j in 0..data.k() {
        // Mediator equation: M_j ~ Z.
        let zcol = z.view().insert_axis(ndarray::Axis(1));
        let med_fit = linalg::ols_with_se(zcol, data.m().column(j))?;
        let (a_hat, se_a) = (med_fit.coef[0], med_fit.se[0]);

        // Outcome equation: R ~ Z + M_j.
        let mut design = Array2::zeros((n, 2));
        design.column_mut(0).assign(z);
        design.column_mut(1).assign(&data.m().column(j));
        match linalg::ols_with_se(design.view(), data.r().view()) {
            Ok(out_fit) => {
                let (c_hat, b_hat) = (out_fit.coef[0], out_fit.coef[1]);
                let se_b = out_fit.se[1];
                let (z_stat, p_value) = sobel_test(a_hat, se_a, b_hat, se_b)?;
                results.push(BkPathwayResult {
                    mediator: j,
                    a_hat,
                    se_a,
                    b_hat,
                    se_b,
                    c_hat,
                    ab_hat: a_hat * b_hat,
                    z_stat,
                    p_value,
                    selected: false,
                    degenerate: false,
                });
            }
            Err(_) => {
                results.push(BkPathwayResult {
                    mediator: j,
                    a_hat,
                    se_a,
                    b_hat: 0.0,
                    se_b: 0.0,
                    c_hat: 0.0,
                    ab_hat: 0.0,
                    z_stat: 0.0,
                    p_value: 1.0,
                    selected: false,
                    degenerate: true,
                });
            }
        }
    }
    let p_values: Vec<f64> = results.iter().map(|r| r.p_value).collect();
    let selected = bh_select(&p_values, q)?;
    for (r, s) in results.iter_mut().zip(selected) {
        r.selected = s;
    }
    Ok(results)
}

/// Writes per-mediator results as CSV:
/// `mediator, a, se_a, b, se_b, ab, z, p, selected`.
pub fn write_bk_csv<W: Write>(
    results: &[BkPathwayResult],
    names: &[String],
    writer: W,
) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["mediator", "a", "se_a", "b", "se_b", "ab", "z", "p", "selected"])?;
    for r in results {
        let name = names
            .get(r.mediator)
            .cloned()
            .unwrap_or_else(|| format!("M{}", r.mediator + 1));
        csv.write_record(&[
            name,
            format_float(r.a_hat),
            format_float(r.se_a),
            format_float(r.b_hat),
            format_float(r.se_b),
            format_float(r.ab_hat),
            format_float(r.z_stat),
            format_float(r.p_value),
            (if r.selected { "true" } else { "false" }).to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// Two-stage lasso path: the main solver at `lambda = 0` over a descending
/// `omega` grid. The quadratic guard is inert at `lambda = 0`; `phi` is set
/// to its default only to satisfy validation.
pub fn tslasso_path(
    std: &StandardizedDataset,
    omega_grid: &[f64],
    opts: &SolverOptions,
) -> Result<PathResult> {
    let specs: Vec<PenaltySpec> = omega_grid
        .iter()
        .map(|&w| PenaltySpec::with_unit_weights(std.k(), 0.0, 2.0, w))
        .collect();
    let mut path = admm::fit_path(std, &specs, opts)?;
    path.method = "TSLasso".to_string();
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{standardize, MediationDataset};
    use ndarray::array;

    #[test]
    fn sobel_matches_hand_arithmetic() {
        // a=3, se_a=1, b=4, se_b=1: se_ab = sqrt(9+16) = 5, z = 12/5 = 2.4.
        let (z, p) = sobel_test(3.0, 1.0, 4.0, 1.0).unwrap();
        assert!((z - 2.4).abs() < 1e-12);
        assert!((p - 0.01639507).abs() < 1e-7, "p = {}", p);
    }

    #[test]
    fn sobel_degenerate_conventions() {
        let (_, p) = sobel_test(2.0, 0.0, 3.0, 0.0).unwrap();
        assert_eq!(p, 0.0);
        let (z, p) = sobel_test(0.0, 0.0, 3.0, 0.0).unwrap();
        assert_eq!((z, p), (0.0, 1.0));
        assert!(sobel_test(1.0, -0.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn bh_keeps_everything_when_the_last_pvalue_clears_its_threshold() {
        // Thresholds at q=0.05, m=4: 0.0125, 0.025, 0.0375, 0.05. The third
        // p-value misses its threshold but the fourth clears, so all pass.
        let sel = bh_select(&[0.01, 0.02, 0.04, 0.05], 0.05).unwrap();
        assert_eq!(sel, vec![true, true, true, true]);
    }

    #[test]
    fn bh_handles_empty_and_rejects_bad_pvalues() {
        assert_eq!(bh_select(&[], 0.05).unwrap(), Vec::<bool>::new());
        assert_eq!(bh_select(&[0.9, 0.8], 0.05).unwrap(), vec![false, false]);
        assert!(bh_select(&[1.2], 0.05).is_err());
        assert!(bh_select(&[0.5], -0.1).is_err());
    }

    #[test]
    fn bh_selection_is_monotone_in_q() {
        let ps = [0.001, 0.011, 0.02, 0.2, 0.5, 0.04, 0.09];
        let mut prev = 0;
        for q in [0.0, 0.01, 0.05, 0.1, 0.5, 1.0] {
            let count = bh_select(&ps, q).unwrap().iter().filter(|&&s| s).count();
            assert!(count >= prev, "selection shrank when q grew to {}", q);
            prev = count;
        }
        assert_eq!(prev, ps.len(), "q = 1 must select everything");
    }

    fn noisy_dataset(seed: u64) -> StandardizedDataset {
        use rand::Rng;
        let mut rng = crate::seed::stream_rng(seed, 0);
        let n = 60;
        let mut z = ndarray::Array1::zeros(n);
        let mut m = ndarray::Array2::zeros((n, 3));
        let mut r = ndarray::Array1::zeros(n);
        for i in 0..n {
            z[i] = rng.random_range(-1.0..1.0_f64);
            m[[i, 0]] = 2.0 * z[i] + 0.3 * rng.random_range(-1.0..1.0_f64);
            m[[i, 1]] = rng.random_range(-1.0..1.0_f64);
            m[[i, 2]] = -1.5 * z[i] + 0.3 * rng.random_range(-1.0..1.0_f64);
            r[i] = 0.5 * z[i] + 1.2 * m[[i, 0]] + 0.3 * rng.random_range(-1.0..1.0_f64);
        }
        standardize(&MediationDataset::new(z, m, r, None).unwrap()).unwrap()
    }

    #[test]
    fn bk_flags_the_real_pathway_and_not_the_noise() {
        let std = noisy_dataset(5);
        let results = bk_fit(&std, 0.05).unwrap();
        assert_eq!(results.len(), 3);
        assert!(results[0].selected, "true pathway missed: p = {}", results[0].p_value);
        assert!(!results[1].selected, "noise mediator selected");
        assert!(results.iter().all(|r| !r.degenerate));
        assert!(results[0].ab_hat > 0.5);
    }

    #[test]
    fn bk_marks_collinear_mediator_degenerate() {
        use ndarray::Axis;
        let z = array![1.0, -1.0, 2.0, -2.0, 0.5, -0.5];
        let m = z.clone().insert_axis(Axis(1)); // M1 == Z exactly
        let r = array![0.9, -1.1, 2.1, -1.9, 0.6, -0.4];
        let std =
            standardize(&MediationDataset::new(z, m, r, None).unwrap()).unwrap();
        let results = bk_fit(&std, 0.05).unwrap();
        assert!(results[0].degenerate);
        assert_eq!(results[0].p_value, 1.0);
        assert!(!results[0].selected);
    }

    #[test]
    fn tslasso_is_tagged_and_shrinks_with_omega() {
        let std = noisy_dataset(9);
        let path = tslasso_path(&std, &[5.0, 0.5, 0.05], &SolverOptions::default()).unwrap();
        assert_eq!(path.method, "TSLasso");
        let l1 = path.ab_l1_norms();
        assert!(l1[0] <= l1[2] + 1e-12, "penalty should shrink the path: {:?}", l1);
    }
}
