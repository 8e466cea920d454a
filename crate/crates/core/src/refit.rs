//! Post-selection refitting and bootstrap inference.
//!
//! After a penalized fit picks a support, the selected pathways are re-
//! estimated without shrinkage: each selected mediator regression `M_j ~ Z`
//! by itself, and one outcome regression `R ~ (Z, M_selected)`. Everything
//! off-support stays at zero. Confidence intervals for the refit pathway
//! products come from a case (row-resampling) bootstrap with percentile
//! endpoints; a pathway is flagged significant when its interval excludes
//! zero.
//!
//! All quantities live on the standardized scale of the input
//! [`StandardizedDataset`](crate::dataset::StandardizedDataset); callers that
//! need raw-scale coefficients convert afterwards.

use std::collections::BTreeSet;

use rand::Rng;
use serde_json::json;

use crate::dataset::StandardizedDataset;
use crate::error::{Error, Result};
use crate::model::{self, PathwayCoefficients};
use crate::seed;

/// Controls for [`bootstrap_ci`].
#[derive(Debug, Clone, Copy)]
pub struct BootstrapOptions {
    /// Number of bootstrap resamples.
    pub resamples: usize,
    /// Two-sided confidence level, e.g. 0.95.
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            resamples: 500,
            level: 0.95,
            seed: 0,
        }
    }
}

impl BootstrapOptions {
    fn validate(&self) -> Result<()> {
        if self.resamples < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 bootstrap resamples, got {}",
                self.resamples
            )));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "confidence level must lie in (0, 1), got {}",
                self.level
            )));
        }
        Ok(())
    }
}

/// One selected pathway's refit estimate and bootstrap interval.
#[derive(Debug, Clone)]
pub struct PathwayInterval {
    /// Mediator index (0-based).
    pub pathway: usize,
    /// Refit product `a_j * b_j` on the full data.
    pub ab_refit: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// True when the interval excludes zero.
    pub significant: bool,
    /// `ab_refit / total_effect`.
    pub proportion_mediated: f64,
}

/// Full output of the refit-and-bootstrap step.
#[derive(Debug, Clone)]
pub struct RefitReport {
    /// Refit coefficients on the full data (zeros off the support).
    pub coefs: PathwayCoefficients,
    pub selected: BTreeSet<usize>,
    pub total_effect: f64,
    pub intervals: Vec<PathwayInterval>,
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
    /// How many degenerate resamples had to be redrawn.
    pub redrawn: usize,
}

fn validate_selection(std: &StandardizedDataset, selected: &BTreeSet<usize>) -> Result<()> {
    let (n, k) = (std.data().n(), std.data().k());
    if let Some(&j) = selected.iter().next_back() {
        if j >= k {
            return Err(Error::InvalidParameter(format!(
                "selected pathway {} out of range for k = {}",
                j, k
            )));
        }
    }
    if selected.len() > n.saturating_sub(2) {
        return Err(Error::InvalidParameter(format!(
            "cannot refit {} pathways with n = {} (need |selected| <= n - 2)",
            selected.len(),
            n
        )));
    }
    Ok(())
}

/// Unpenalized least squares restricted to `selected`: `a_j` from `M_j ~ Z`
/// per selected mediator, `(C, b_selected)` from `R ~ (Z, M_selected)`, all
/// other coefficients zero. With an empty selection, `C` is the total effect.
pub fn refit_selected(
    std: &StandardizedDataset,
    selected: &BTreeSet<usize>,
) -> Result<PathwayCoefficients> {
    validate_selection(std, selected)?;
    model::restricted_ols(std, selected)
}

/// Type-7 (linear interpolation) percentile of a sorted sample.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Fraction of the total effect carried by one pathway. Errors when the
/// total effect is exactly zero.
pub fn proportion_mediated(ab: f64, total_effect: f64) -> Result<f64> {
    if total_effect == 0.0 {
        return Err(Error::InvalidData(
            "proportion mediated is undefined when the total effect is zero".into(),
        ));
    }
    Ok(ab / total_effect)
}

/// Case-resampling bootstrap for the refit pathway products.
///
/// Each resample draws `n` rows with replacement, refits on the resample, and
/// records `a_j b_j` for every selected `j`. Resamples whose design is
/// degenerate (rank-deficient) are redrawn with a fresh derived seed; if more
/// than 20% of the requested resamples need a redraw the data are too
/// unstable and an error is returned. Percentile intervals at
/// `(1 ± level) / 2` give the CI bounds.
pub fn bootstrap_ci(
    std: &StandardizedDataset,
    selected: &BTreeSet<usize>,
    opts: &BootstrapOptions,
) -> Result<RefitReport> {
    opts.validate()?;
    validate_selection(std, selected)?;
    let coefs = model::restricted_ols(std, selected)?;
    let total_effect = model::total_effect(std.data())?;
    let n = std.data().n();

    let max_redraws = opts.resamples / 5; // 20% cap
    let mut redrawn = 0usize;
    // draws[s] collects the bootstrap distribution of ab for the s-th
    // selected pathway (in ascending index order).
    let mut draws: Vec<Vec<f64>> = vec![Vec::with_capacity(opts.resamples); selected.len()];
    let mut rows = Vec::with_capacity(n);
    for b in 0..opts.resamples {
        let mut attempt = 0u64;
        let resampled = loop {
            // Per-resample stream keyed by (index, attempt): deterministic
            // and independent of the order in which redraws happen.
            let mut rng = seed::stream_rng(opts.seed, (b as u64) | (attempt << 32));
            rows.clear();
            rows.extend((0..n).map(|_| rng.random_range(0..n)));
            let sub = std.with_rows(&rows);
            match model::restricted_ols(&sub, selected) {
                Ok(c) => break c,
                Err(_) => {
                    redrawn += 1;
                    if redrawn > max_redraws {
                        return Err(Error::DegenerateBootstrap {
                            redrawn,
                            resamples: opts.resamples,
                        });
                    }
                    attempt += 1;
                }
            }
        };
        for (s, &j) in selected.iter().enumerate() {
            draws[s].push(resampled.a[j] * resampled.b[j]);
        }
    }

    let p_lo = (1.0 - opts.level) / 2.0;
    let mut intervals = Vec::with_capacity(selected.len());
    for (s, &j) in selected.iter().enumerate() {
        draws[s].sort_by(f64::total_cmp);
        let ci_low = percentile(&draws[s], p_lo);
        let ci_high = percentile(&draws[s], 1.0 - p_lo);
        let ab_refit = coefs.a[j] * coefs.b[j];
        intervals.push(PathwayInterval {
            pathway: j,
            ab_refit,
            ci_low,
            ci_high,
            significant: ci_low > 0.0 || ci_high < 0.0,
            proportion_mediated: proportion_mediated(ab_refit, total_effect)?,
        });
    }

    Ok(RefitReport {
        coefs,
        selected: selected.clone(),
        total_effect,
        intervals,
        resamples: opts.resamples,
        level: opts.level,
        seed: opts.seed,
        redrawn,
    })
}

impl RefitReport {
    /// CSV with one row per selected pathway:
    /// `pathway,ab_refit,ci_low,ci_high,significant,proportion_mediated`.
    pub fn write_csv<W: std::io::Write>(&self, names: &[String], mut writer: W) -> Result<()> {
        use crate::dataset::format_float as ff;
        writeln!(
            writer,
            "pathway,ab_refit,ci_low,ci_high,significant,proportion_mediated"
        )?;
        for iv in &self.intervals {
            writeln!(
                writer,
                "{},{},{},{},{},{}",
                names[iv.pathway],
                ff(iv.ab_refit),
                ff(iv.ci_low),
                ff(iv.ci_high),
                iv.significant,
                ff(iv.proportion_mediated)
            )?;
        }
        Ok(())
    }

    /// JSON summary mirroring the CSV plus run-level fields.
    pub fn summary_json(&self, names: &[String]) -> serde_json::Value {
        json!({
            "total_effect": self.total_effect,
            "resamples": self.resamples,
            "level": self.level,
            "seed": self.seed,
            "redrawn": self.redrawn,
            "selected": self.selected.iter().map(|&j| names[j].clone()).collect::<Vec<_>>(),
            "pathways": self.intervals.iter().map(|iv| json!({
                "pathway": names[iv.pathway],
                "ab_refit": iv.ab_refit,
                "ci_low": iv.ci_low,
                "ci_high": iv.ci_high,
                "significant": iv.significant,
                "proportion_mediated": iv.proportion_mediated,
            })).collect::<Vec<_>>(),
        })
    }
}
