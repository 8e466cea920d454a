//! Selection rules, accuracy metrics, matched-sparsity comparisons, and
//! K-fold cross-validation.
//!
//! Selection uses a fixed magnitude cutoff on pathway products. ROC curves
//! are traced along a tuning path (penalized methods) or along the p-value
//! threshold (per-mediator testing), monotonized to their upper staircase,
//! and integrated by the trapezoid rule. `mse_ab` is the **sum** of squared
//! pathway-effect errors over all K pathways, not the mean — output headers
//! say so explicitly.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use ndarray::Array1;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::admm::{self, PathResult, SolverOptions};
use crate::dataset::{format_float, StandardizedDataset};
use crate::error::{Error, Result};
use crate::model::{self, PenaltySpec};
use crate::seed;

/// Default magnitude cutoff for calling a pathway selected.
pub const SELECTION_CUTOFF: f64 = 1e-3;

/// A selected set of mediator indices (0-based) with its provenance.
#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub selected: BTreeSet<usize>,
    pub cutoff: f64,
    /// Method tag for reports ("PathLasso", "TSLasso", "BK", ...).
    pub source: String,
}

/// Selects pathways with `|ab_j| > cutoff` (strictly; a product exactly at
/// the cutoff is not selected).
pub fn select_pathways(ab: &Array1<f64>, cutoff: f64) -> SelectionResult {
    assert!(cutoff > 0.0, "selection cutoff must be positive");
    let selected = ab
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > cutoff)
        .map(|(j, _)| j)
        .collect();
    SelectionResult {
        selected,
        cutoff,
        source: String::new(),
    }
}

/// F1 score of a selection against a nonempty truth set. Precision is taken
/// as 0 when nothing is selected; F1 is 0 when precision + recall = 0.
pub fn f1_score(selected: &BTreeSet<usize>, truth: &BTreeSet<usize>) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::InvalidParameter(
            "F1 needs a nonempty truth set".into(),
        ));
    }
    if selected.is_empty() {
        return Ok(0.0);
    }
    let tp = selected.intersection(truth).count() as f64;
    let precision = tp / selected.len() as f64;
    let recall = tp / truth.len() as f64;
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// An ROC curve: staircase points from (0,0) to (1,1) and the trapezoid AUC.
#[derive(Debug, Clone, Serialize)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

fn roc_rates(selected: &BTreeSet<usize>, truth: &BTreeSet<usize>, k: usize) -> (f64, f64) {
    let tp = selected.intersection(truth).count();
    let fp = selected.len() - tp;
    let tpr = tp as f64 / truth.len() as f64;
    let fpr = fp as f64 / (k - truth.len()) as f64;
    (fpr, tpr)
}

fn check_truth(truth: &BTreeSet<usize>, k: usize) -> Result<()> {
    if truth.is_empty() {
        return Err(Error::InvalidParameter(
            "ROC needs a nonempty truth set".into(),
        ));
    }
    if truth.len() >= k {
        return Err(Error::InvalidParameter(
            "ROC needs at least one truly null mediator (fpr undefined)".into(),
        ));
    }
    if truth.iter().any(|&j| j >= k) {
        return Err(Error::InvalidParameter(
            "truth contains an out-of-range mediator index".into(),
        ));
    }
    Ok(())
}

/// Builds the curve from raw (fpr, tpr) points: anchor (0,0) and (1,1), sort
/// by fpr, reduce to the upper staircase (running max of tpr), then integrate.
fn assemble_roc(mut raw: Vec<(f64, f64)>) -> RocCurve {
    raw.push((0.0, 0.0));
    raw.push((1.0, 1.0));
    raw.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
    let mut best_tpr = 0.0f64;
    for (fpr, tpr) in raw {
        let tpr = tpr.max(best_tpr);
        best_tpr = tpr;
        match points.last_mut() {
            // Collapse points at the same fpr to the highest tpr.
            Some(last) if last.0 == fpr => last.1 = tpr,
            _ => points.push((fpr, tpr)),
        }
    }
    let mut auc = 0.0;
    for w in points.windows(2) {
        auc += (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0;
    }
    RocCurve {
        points,
        auc: auc.clamp(0.0, 1.0),
    }
}

/// ROC for a penalized method: one point per grid value of the path, using
/// the pathway-product cutoff.
pub fn roc_from_path(path: &PathResult, truth: &BTreeSet<usize>, cutoff: f64) -> Result<RocCurve> {
    let k = match path.fits.first() {
        Some(f) => f.coefs.k(),
        None => return Err(Error::InvalidParameter("empty path".into())),
    };
    check_truth(truth, k)?;
    let raw = path
        .fits
        .iter()
        .map(|f| {
            let sel = select_pathways(&f.pathway_effects(), cutoff).selected;
            roc_rates(&sel, truth, k)
        })
        .collect();
    Ok(assemble_roc(raw))
}

/// ROC for per-mediator testing: sweep the selection threshold over all
/// distinct p-values (select `p <= t`).
pub fn roc_from_pvalues(p_values: &[f64], truth: &BTreeSet<usize>) -> Result<RocCurve> {
    let k = p_values.len();
    check_truth(truth, k)?;
    let mut thresholds: Vec<f64> = p_values.to_vec();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let raw = thresholds
        .iter()
        .map(|&t| {
            let sel: BTreeSet<usize> = p_values
                .iter()
                .enumerate()
                .filter(|(_, &p)| p <= t)
                .map(|(j, _)| j)
                .collect();
            roc_rates(&sel, truth, k)
        })
        .collect();
    Ok(assemble_roc(raw))
}

/// Total squared error of pathway effects: `Σ_j (ab_hat_j - ab_true_j)²`
/// (a sum over all K pathways, not a mean).
pub fn mse_ab(ab_hat: &Array1<f64>, ab_true: &Array1<f64>) -> Result<f64> {
    if ab_hat.len() != ab_true.len() {
        return Err(Error::DimensionMismatch(format!(
            "ab vectors of length {} and {}",
            ab_hat.len(),
            ab_true.len()
        )));
    }
    Ok(ab_hat
        .iter()
        .zip(ab_true.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum())
}

/// Jaccard index `|s1 ∩ s2| / |s1 ∪ s2|`; two empty sets agree perfectly (1).
pub fn jaccard(s1: &BTreeSet<usize>, s2: &BTreeSet<usize>) -> f64 {
    let union = s1.union(s2).count();
    if union == 0 {
        return 1.0;
    }
    s1.intersection(s2).count() as f64 / union as f64
}

/// Euclidean distance `||ab1 - ab2||_2` (unnormalized).
pub fn l2_difference(ab1: &Array1<f64>, ab2: &Array1<f64>) -> Result<f64> {
    if ab1.len() != ab2.len() {
        return Err(Error::DimensionMismatch(format!(
            "ab vectors of length {} and {}",
            ab1.len(),
            ab2.len()
        )));
    }
    Ok(ab1
        .iter()
        .zip(ab2.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// One row of the matched-F1 table: at a target support size, the grid point
/// of `method` whose selection count comes nearest.
#[derive(Debug, Clone, Serialize)]
pub struct MatchedF1Row {
    pub method: String,
    pub target_support: usize,
    pub grid_value: f64,
    pub support: usize,
    pub f1: f64,
}

/// One row of the matched-MSE table: at a target pathway-effect ℓ1 norm, the
/// grid point of `method` whose ℓ1 norm comes nearest.
#[derive(Debug, Clone, Serialize)]
pub struct MatchedMseRow {
    pub method: String,
    pub target_l1: f64,
    pub grid_value: f64,
    pub l1: f64,
    pub mse: f64,
}

/// Matched-sparsity comparison tables.
#[derive(Debug, Clone, Serialize)]
pub struct MatchedTables {
    pub f1_by_support: Vec<MatchedF1Row>,
    pub mse_by_l1: Vec<MatchedMseRow>,
}

/// The grid value that indexes a path point in reports: `omega` for an
/// all-`lambda = 0` (two-stage lasso) path, `lambda` otherwise.
pub(crate) fn grid_value(path: &PathResult, idx: usize) -> f64 {
    let spec = &path.fits[idx].spec;
    if path.fits.iter().all(|f| f.spec.lambda == 0.0) {
        spec.omega
    } else {
        spec.lambda
    }
}

/// Compares methods at equal sparsity: for every support size observed in any
/// path, each method contributes its nearest-support grid point's F1; for
/// every ℓ1 norm on the common grid (the union of all observed pathway-effect
/// ℓ1 norms), each method contributes its nearest-ℓ1 point's MSE.
///
/// Nearest-point ties resolve to the weaker penalty (the later grid point;
/// grids run strongest-penalty-first).
pub fn matched_curves(
    paths: &BTreeMap<String, &PathResult>,
    truth: &BTreeSet<usize>,
    ab_true: &Array1<f64>,
    cutoff: f64,
) -> Result<MatchedTables> {
    if paths.is_empty() {
        return Err(Error::InvalidParameter("no paths to compare".into()));
    }
    struct PathView<'p> {
        name: &'p str,
        path: &'p PathResult,
        supports: Vec<usize>,
        selections: Vec<BTreeSet<usize>>,
        l1s: Vec<f64>,
    }
    let mut views = Vec::with_capacity(paths.len());
    for (name, path) in paths {
        if path.fits.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "path '{}' needs at least 2 grid points",
                name
            )));
        }
        let selections = path.selected_sets(cutoff);
        let supports: Vec<usize> = selections.iter().map(|s| s.len()).collect();
        let l1s = path.ab_l1_norms();
        views.push(PathView {
            name,
            path,
            supports,
            selections,
            l1s,
        });
    }

    let mut support_targets: BTreeSet<usize> = BTreeSet::new();
    for v in &views {
        support_targets.extend(v.supports.iter().copied());
    }
    let mut f1_by_support = Vec::new();
    for &target in &support_targets {
        for v in &views {
            let mut best_i = 0usize;
            let mut best_d = usize::MAX;
            for (i, &s) in v.supports.iter().enumerate() {
                let d = s.abs_diff(target);
                if d <= best_d {
                    best_d = d;
                    best_i = i;
                }
            }
            f1_by_support.push(MatchedF1Row {
                method: v.name.to_string(),
                target_support: target,
                grid_value: grid_value(v.path, best_i),
                support: v.supports[best_i],
                f1: f1_score(&v.selections[best_i], truth)?,
            });
        }
    }

    let mut l1_targets: Vec<f64> = views.iter().flat_map(|v| v.l1s.iter().copied()).collect();
    l1_targets.sort_by(f64::total_cmp);
    l1_targets.dedup();
    let mut mse_by_l1 = Vec::new();
    for &target in &l1_targets {
        for v in &views {
            let mut best_i = 0usize;
            let mut best_d = f64::INFINITY;
            for (i, &l1) in v.l1s.iter().enumerate() {
                let d = (l1 - target).abs();
                if d <= best_d {
                    best_d = d;
                    best_i = i;
                }
            }
            let ab = v.path.fits[best_i].pathway_effects();
            mse_by_l1.push(MatchedMseRow {
                method: v.name.to_string(),
                target_l1: target,
                grid_value: grid_value(v.path, best_i),
                l1: v.l1s[best_i],
                mse: mse_ab(&ab, ab_true)?,
            });
        }
    }

    Ok(MatchedTables {
        f1_by_support,
        mse_by_l1,
    })
}

/// A cross-validation report: per-spec held-out losses by fold, their means,
/// and the index of the winning spec.
#[derive(Debug, Clone)]
pub struct CvReport {
    pub specs: Vec<PenaltySpec>,
    /// `fold_losses[spec][fold]`.
    pub fold_losses: Vec<Vec<f64>>,
    pub mean_losses: Vec<f64>,
    /// Index into `specs` minimizing the mean held-out loss (first minimum).
    pub chosen: usize,
    pub folds: usize,
    pub seed: u64,
}

/// Seeded near-equal partition of `0..n` into `folds` folds (shuffle, then
/// round-robin); fold sizes differ by at most one.
fn fold_assignment(n: usize, folds: usize, seed_value: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = seed::stream_rng(seed_value, 0x6f6c64_73);
    order.shuffle(&mut rng);
    let mut assignment = vec![Vec::with_capacity(n / folds + 1); folds];
    for (i, idx) in order.into_iter().enumerate() {
        assignment[i % folds].push(idx);
    }
    assignment
}

/// K-fold cross-validation of a tuning grid.
///
/// Each fold fits the whole grid on the fold's complement (warm starts within
/// the fold only) and scores the raw held-out loss with unit weights
/// (`W1 = I`, `w2 = 1`), so both model blocks count comparably. Folds run in
/// parallel; results are assembled in fold order, so the report is
/// deterministic given the seed.
pub fn cross_validate(
    std: &StandardizedDataset,
    specs: &[PenaltySpec],
    folds: usize,
    seed_value: u64,
    opts: &SolverOptions,
) -> Result<CvReport> {
    let n = std.n();
    if folds < 2 || folds > n {
        return Err(Error::InvalidParameter(format!(
            "need 2 <= folds <= n, got folds = {} with n = {}",
            folds, n
        )));
    }
    if specs.is_empty() {
        return Err(Error::InvalidParameter("empty tuning grid".into()));
    }
    let assignment = fold_assignment(n, folds, seed_value);
    let unit_spec = |spec: &PenaltySpec| PenaltySpec {
        w1: Array1::ones(std.k()),
        w2: 1.0,
        ..spec.clone()
    };

    let per_fold: Vec<Result<Vec<f64>>> = assignment
        .par_iter()
        .map(|holdout| {
            let mut mask = vec![true; n];
            for &i in holdout {
                mask[i] = false;
            }
            let train_rows: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
            let train = std.with_rows(&train_rows);
            let test = std.with_rows(holdout);
            let path = admm::fit_path(&train, specs, opts)?;
            path.fits
                .iter()
                .map(|fit| {
                    model::loss(test.data(), &fit.coefs, &unit_spec(&fit.spec))
                })
                .collect()
        })
        .collect();

    let mut fold_losses = vec![vec![0.0; folds]; specs.len()];
    for (fold, result) in per_fold.into_iter().enumerate() {
        let losses = result?;
        for (s, loss) in losses.into_iter().enumerate() {
            fold_losses[s][fold] = loss;
        }
    }
    let mean_losses: Vec<f64> = fold_losses
        .iter()
        .map(|ls| ls.iter().sum::<f64>() / folds as f64)
        .collect();
    let chosen = mean_losses
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.total_cmp(b))
        .map(|(i, _)| i)
        .expect("nonempty grid");
    Ok(CvReport {
        specs: specs.to_vec(),
        fold_losses,
        mean_losses,
        chosen,
        folds,
        seed: seed_value,
    })
}

impl CvReport {
    /// JSON form: per-spec tuning values, mean and per-fold losses, the
    /// chosen index, folds, and seed.
    pub fn to_json(&self) -> serde_json::Value {
        let points: Vec<serde_json::Value> = self
            .specs
            .iter()
            .zip(self.mean_losses.iter())
            .zip(self.fold_losses.iter())
            .map(|((spec, mean), folds)| {
                serde_json::json!({
                    "lambda": spec.lambda,
                    "phi": spec.phi,
                    "omega": spec.omega,
                    "mean_loss": mean,
                    "fold_losses": folds,
                })
            })
            .collect();
        serde_json::json!({
            "folds": self.folds,
            "seed": self.seed,
            "chosen": self.chosen,
            "chosen_lambda": self.specs[self.chosen].lambda,
            "chosen_omega": self.specs[self.chosen].omega,
            "grid": points,
        })
    }
}

/// One row of the plot-ready per-grid-point metrics table.
#[derive(Debug, Clone, Serialize)]
pub struct MetricRow {
    pub method: String,
    pub grid_value: f64,
    pub support_size: usize,
    pub l1_norm: f64,
    pub f1: f64,
    /// Total squared pathway-effect error (sum over all K pathways).
    pub mse: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// Per-grid-point metrics of one path against the truth.
pub fn path_metrics(
    path: &PathResult,
    truth: &BTreeSet<usize>,
    ab_true: &Array1<f64>,
    cutoff: f64,
) -> Result<Vec<MetricRow>> {
    let k = match path.fits.first() {
        Some(f) => f.coefs.k(),
        None => return Err(Error::InvalidParameter("empty path".into())),
    };
    check_truth(truth, k)?;
    let mut rows = Vec::with_capacity(path.fits.len());
    for (i, fit) in path.fits.iter().enumerate() {
        let ab = fit.pathway_effects();
        let sel = select_pathways(&ab, cutoff).selected;
        let (fpr, tpr) = roc_rates(&sel, truth, k);
        rows.push(MetricRow {
            method: path.method.clone(),
            grid_value: grid_value(path, i),
            support_size: sel.len(),
            l1_norm: ab.iter().map(|v| v.abs()).sum(),
            f1: f1_score(&sel, truth)?,
            mse: mse_ab(&ab, ab_true)?,
            fpr,
            tpr,
        });
    }
    Ok(rows)
}

/// Writes metric rows as CSV:
/// `method, grid_value, support_size, l1_norm, f1, mse, fpr, tpr`
/// (mse = sum of squared pathway-effect errors).
pub fn write_metrics_csv<W: Write>(rows: &[MetricRow], writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record([
        "method",
        "grid_value",
        "support_size",
        "l1_norm",
        "f1",
        "mse_sum_squared_ab_error",
        "fpr",
        "tpr",
    ])?;
    for row in rows {
        csv.write_record(&[
            row.method.clone(),
            format_float(row.grid_value),
            row.support_size.to_string(),
            format_float(row.l1_norm),
            format_float(row.f1),
            format_float(row.mse),
            format_float(row.fpr),
            format_float(row.tpr),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admm::FitResult;
    use crate::model::PathwayCoefficients;
    use ndarray::array;

    fn set(items: &[usize]) -> BTreeSet<usize> {
        items.iter().copied().collect()
    }

    #[test]
    fn select_uses_strict_cutoff() {
        let sel = select_pathways(&array![0.5, 1e-4, -0.002], 1e-3);
        assert_eq!(sel.selected, set(&[0, 2]));
        let none = select_pathways(&array![0.0, 0.0], 1e-3);
        assert!(none.selected.is_empty());
        let boundary = select_pathways(&array![1e-3], 1e-3);
        assert!(boundary.selected.is_empty(), "cutoff must be strict");
    }

    #[test]
    fn f1_matches_hand_values() {
        assert_eq!(f1_score(&set(&[1, 2, 3]), &set(&[1, 2, 3])).unwrap(), 1.0);
        let f = f1_score(&set(&[2, 3, 4]), &set(&[1, 2, 3])).unwrap();
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f1_score(&set(&[]), &set(&[1])).unwrap(), 0.0);
        assert!(f1_score(&set(&[1]), &set(&[])).is_err());
    }

    /// Builds a fake path with the given per-point pathway effects.
    fn fake_path(points: Vec<Vec<f64>>) -> PathResult {
        let k = points[0].len();
        let fits = points
            .into_iter()
            .enumerate()
            .map(|(i, ab)| {
                let coefs = PathwayCoefficients {
                    a: Array1::from(ab),
                    b: Array1::ones(k),
                    c: 0.0,
                };
                FitResult {
                    spec: PenaltySpec::with_unit_weights(k, 10.0 / (i + 1) as f64, 2.0, 0.0),
                    coefs,
                    converged: true,
                    iterations: 1,
                    objective: 0.0,
                    state: crate::admm::AdmmState::cold_start(k, 1.0),
                }
            })
            .collect();
        PathResult {
            method: "PathLasso".into(),
            fits,
        }
    }

    #[test]
    fn perfect_path_point_gives_auc_one() {
        // Sparsest point selects exactly the truth -> (0,1) on the curve.
        let path = fake_path(vec![
            vec![1.0, 1.0, 0.0, 0.0],
            vec![1.0, 1.0, 0.5, 0.0],
            vec![1.0, 1.0, 0.5, 0.5],
        ]);
        let roc = roc_from_path(&path, &set(&[0, 1]), 1e-3).unwrap();
        assert!((roc.auc - 1.0).abs() < 1e-15);
        assert!(roc.points.contains(&(0.0, 1.0)));
    }

    #[test]
    fn empty_selection_anchors_to_diagonal() {
        let path = fake_path(vec![vec![0.0, 0.0, 0.0]]);
        let roc = roc_from_path(&path, &set(&[0]), 1e-3).unwrap();
        assert_eq!(roc.points, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert!((roc.auc - 0.5).abs() < 1e-15);
    }

    #[test]
    fn roc_rejects_degenerate_truth() {
        let path = fake_path(vec![vec![1.0, 0.0]]);
        assert!(roc_from_path(&path, &set(&[]), 1e-3).is_err());
        assert!(roc_from_path(&path, &set(&[0, 1]), 1e-3).is_err());
        assert!(roc_from_pvalues(&[0.1, 0.2], &set(&[5])).is_err());
    }

    #[test]
    fn pvalue_roc_orders_by_threshold() {
        // Truth {0}: p-values put the true mediator first, so the curve hits
        // (0, 1) before any false positive.
        let roc = roc_from_pvalues(&[0.001, 0.5, 0.9], &set(&[0])).unwrap();
        assert!((roc.auc - 1.0).abs() < 1e-15);
        // Reversed ordering is maximally wrong before anchoring; the
        // staircase still keeps AUC valid.
        let bad = roc_from_pvalues(&[0.9, 0.5, 0.001], &set(&[0])).unwrap();
        assert!(bad.auc <= 0.5 + 1e-15);
    }

    #[test]
    fn random_pvalues_hover_near_half_auc() {
        use rand::Rng;
        let truth = set(&[0, 1, 2, 3, 4]);
        let mut total = 0.0;
        let reps = 50;
        let mut rng = crate::seed::stream_rng(99, 0);
        for _ in 0..reps {
            let ps: Vec<f64> = (0..50).map(|_| rng.random_range(0.0..1.0)).collect();
            total += roc_from_pvalues(&ps, &truth).unwrap().auc;
        }
        let mean = total / reps as f64;
        assert!((mean - 0.5).abs() < 0.1, "mean AUC = {}", mean);
    }

    #[test]
    fn mse_is_a_sum_and_symmetric() {
        let x = array![0.0, 0.0];
        let y = array![1.0, -2.0];
        assert_eq!(mse_ab(&x, &y).unwrap(), 5.0);
        assert_eq!(mse_ab(&y, &x).unwrap(), 5.0);
        assert_eq!(mse_ab(&y, &y).unwrap(), 0.0);
        // Doubling all errors quadruples the value.
        let y2 = y.mapv(|v| 2.0 * v);
        assert_eq!(mse_ab(&x, &y2).unwrap(), 20.0);
        assert!(mse_ab(&x, &array![1.0]).is_err());
    }

    #[test]
    fn jaccard_handles_all_cases() {
        assert_eq!(jaccard(&set(&[1, 2]), &set(&[1, 2])), 1.0);
        assert!((jaccard(&set(&[1, 2]), &set(&[2, 3])) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(jaccard(&set(&[1]), &set(&[2])), 0.0);
        assert_eq!(jaccard(&set(&[]), &set(&[])), 1.0);
    }

    #[test]
    fn l2_difference_is_a_metric() {
        let a = array![1.0, 0.0];
        let b = array![0.0, 1.0];
        assert!((l2_difference(&a, &b).unwrap() - 2.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(l2_difference(&a, &a).unwrap(), 0.0);
        use rand::Rng;
        let mut rng = crate::seed::stream_rng(3, 0);
        for _ in 0..100 {
            let x = Array1::from_iter((0..4).map(|_| rng.random_range(-2.0..2.0)));
            let y = Array1::from_iter((0..4).map(|_| rng.random_range(-2.0..2.0)));
            let z = Array1::from_iter((0..4).map(|_| rng.random_range(-2.0..2.0)));
            let xy = l2_difference(&x, &y).unwrap();
            let yz = l2_difference(&y, &z).unwrap();
            let xz = l2_difference(&x, &z).unwrap();
            assert!(xz <= xy + yz + 1e-12);
        }
    }

    #[test]
    fn matched_tables_reproduce_single_method_pairs() {
        let path = fake_path(vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![1.0, 0.8, 0.0, 0.0],
            vec![1.0, 0.8, 0.6, 0.0],
        ]);
        let truth = set(&[0, 1]);
        let ab_true = array![1.0, 0.8, 0.0, 0.0];
        let mut paths = BTreeMap::new();
        paths.insert("PathLasso".to_string(), &path);
        let tables = matched_curves(&paths, &truth, &ab_true, 1e-3).unwrap();
        // Support sizes observed: 1, 2, 3 -> one row each for the method.
        assert_eq!(tables.f1_by_support.len(), 3);
        for row in &tables.f1_by_support {
            assert_eq!(row.support, row.target_support);
        }
        let f1_at_2 = tables
            .f1_by_support
            .iter()
            .find(|r| r.target_support == 2)
            .unwrap();
        assert_eq!(f1_at_2.f1, 1.0);
        // Identical second path -> identical table rows per target.
        let path2 = fake_path(vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![1.0, 0.8, 0.0, 0.0],
            vec![1.0, 0.8, 0.6, 0.0],
        ]);
        let mut two = BTreeMap::new();
        two.insert("A".to_string(), &path);
        two.insert("B".to_string(), &path2);
        let tables2 = matched_curves(&two, &truth, &ab_true, 1e-3).unwrap();
        for pair in tables2.f1_by_support.chunks(2) {
            assert_eq!(pair[0].target_support, pair[1].target_support);
            assert_eq!(pair[0].f1, pair[1].f1);
            assert_eq!(pair[0].grid_value, pair[1].grid_value);
        }
        assert!(matched_curves(&BTreeMap::new(), &truth, &ab_true, 1e-3).is_err());
    }

    #[test]
    fn matched_support_tie_takes_weaker_penalty() {
        // Method A contributes target support 2; method B only has supports
        // (1, 3), both one away. The later (weaker-penalty) point must win.
        let path_a = fake_path(vec![
            vec![1.0, 0.8, 0.0, 0.0],
            vec![1.0, 0.6, 0.0, 0.0],
        ]);
        let path_b = fake_path(vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![1.0, 0.8, 0.6, 0.0],
        ]);
        let truth = set(&[0, 1]);
        let ab_true = array![1.0, 0.8, 0.0, 0.0];
        let mut paths = BTreeMap::new();
        paths.insert("A".to_string(), &path_a);
        paths.insert("B".to_string(), &path_b);
        let tables = matched_curves(&paths, &truth, &ab_true, 1e-3).unwrap();
        let at_2 = tables
            .f1_by_support
            .iter()
            .find(|r| r.method == "B" && r.target_support == 2)
            .unwrap();
        assert_eq!(at_2.support, 3, "tie must resolve to the weaker penalty");
    }

    #[test]
    fn fold_assignment_partitions_evenly() {
        let folds = fold_assignment(50, 10, 123);
        assert_eq!(folds.len(), 10);
        assert!(folds.iter().all(|f| f.len() == 5));
        let mut all: Vec<usize> = folds.into_iter().flatten().collect();
        all.sort_unstable();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
        // Uneven n: sizes differ by at most one.
        let folds = fold_assignment(53, 10, 123);
        let sizes: Vec<usize> = folds.iter().map(|f| f.len()).collect();
        assert!(sizes.iter().all(|&s| s == 5 || s == 6));
    }

    fn cv_dataset() -> StandardizedDataset {
        use rand::Rng;
        let mut rng = crate::seed::stream_rng(21, 0);
        let n = 40;
        let mut z = Array1::zeros(n);
        let mut m = ndarray::Array2::zeros((n, 2));
        let mut r = Array1::zeros(n);
        for i in 0..n {
            z[i] = rng.random_range(-1.0..1.0_f64);
            m[[i, 0]] = 1.5 * z[i] + 0.4 * rng.random_range(-1.0..1.0_f64);
            m[[i, 1]] = rng.random_range(-1.0..1.0_f64);
            r[i] = 0.3 * z[i] + 1.1 * m[[i, 0]] + 0.4 * rng.random_range(-1.0..1.0_f64);
        }
        crate::dataset::standardize(
            &crate::dataset::MediationDataset::new(z, m, r, None).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn cv_is_deterministic_and_chooses_the_minimum() {
        let std = cv_dataset();
        let specs: Vec<PenaltySpec> = [1.0, 0.3, 0.1, 0.03]
            .iter()
            .map(|&l| PenaltySpec::with_unit_weights(2, l, 2.0, 0.0))
            .collect();
        let opts = SolverOptions::default();
        let r1 = cross_validate(&std, &specs, 5, 77, &opts).unwrap();
        let r2 = cross_validate(&std, &specs, 5, 77, &opts).unwrap();
        assert_eq!(r1.chosen, r2.chosen);
        assert_eq!(r1.mean_losses, r2.mean_losses);
        let min = r1
            .mean_losses
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert_eq!(r1.mean_losses[r1.chosen], min);
        assert_eq!(r1.fold_losses.len(), specs.len());
        assert_eq!(r1.fold_losses[0].len(), 5);
    }

    #[test]
    fn cv_duplicated_spec_scores_identically() {
        let std = cv_dataset();
        let spec = PenaltySpec::with_unit_weights(2, 0.5, 2.0, 0.0);
        // Duplicates must score identically: the second copy warm-starts at
        // the first copy's fixed point, so it can only drift by one sweep's
        // worth of movement below the stopping tolerances.
        let specs = vec![spec.clone(), spec];
        let report =
            cross_validate(&std, &specs, 5, 13, &SolverOptions::default()).unwrap();
        assert!(
            (report.mean_losses[0] - report.mean_losses[1]).abs() < 1e-7,
            "duplicate specs diverged: {:?}",
            report.mean_losses
        );
    }

    #[test]
    fn cv_rejects_bad_fold_counts() {
        let std = cv_dataset();
        let specs = vec![PenaltySpec::with_unit_weights(2, 0.5, 2.0, 0.0)];
        let opts = SolverOptions::default();
        assert!(cross_validate(&std, &specs, 1, 0, &opts).is_err());
        assert!(cross_validate(&std, &specs, 41, 0, &opts).is_err());
        assert!(cross_validate(&std, &[], 5, 0, &opts).is_err());
    }

    #[test]
    fn metrics_csv_has_documented_header() {
        let rows = vec![MetricRow {
            method: "PathLasso".into(),
            grid_value: 0.5,
            support_size: 2,
            l1_norm: 1.25,
            f1: 0.8,
            mse: 0.125,
            fpr: 0.0,
            tpr: 1.0,
        }];
        let mut buf = Vec::new();
        write_metrics_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "method,grid_value,support_size,l1_norm,f1,mse_sum_squared_ab_error,fpr,tpr\n"
        ));
        assert!(text.contains("PathLasso,0.5,2,1.25,0.8,0.125,0,1"));
    }
}
