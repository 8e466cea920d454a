//! Closed-form solution of the two-variable penalized subproblem
//!
//! ```text
//! min_{a,b}  lambda|ab| + omega|a| + omega|b|
//!            + (phi1/2) a² + (phi2/2) b² - mu1 a - mu2 b
//! ```
//!
//! This is the only non-smooth piece of each ADMM sweep: every pathway
//! coordinate pair reduces to one instance of it. In the convex regime
//! (`min(phi1, phi2) > lambda`) the minimizer is given exactly by a
//! sign-quadrant case analysis; outside it a candidate enumeration picks the
//! best stationary/axis point.

use serde::Serialize;

/// Parameters of one subproblem instance.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProxParams {
    pub lambda: f64,
    pub omega: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl ProxParams {
    /// The subproblem objective at `(a, b)`.
    pub fn objective(&self, a: f64, b: f64) -> f64 {
        self.lambda * (a * b).abs()
            + self.omega * (a.abs() + b.abs())
            + 0.5 * self.phi1 * a * a
            + 0.5 * self.phi2 * b * b
            - self.mu1 * a
            - self.mu2 * b
    }

    /// Whether the closed-form case analysis applies (objective strictly
    /// convex): `min(phi1, phi2) > lambda`.
    pub fn is_convex(&self) -> bool {
        self.phi1.min(self.phi2) > self.lambda
    }

    fn assert_valid(&self) {
        assert!(
            self.lambda.is_finite()
                && self.omega.is_finite()
                && self.phi1.is_finite()
                && self.phi2.is_finite()
                && self.mu1.is_finite()
                && self.mu2.is_finite(),
            "non-finite prox parameter: {:?}",
            self
        );
        assert!(
            self.lambda >= 0.0 && self.omega >= 0.0 && self.phi1 > 0.0 && self.phi2 > 0.0,
            "prox parameters out of range: {:?}",
            self
        );
    }
}

/// A solved subproblem: the minimizer and which branch produced it.
///
/// `condition_id` records the sign pattern of the active branch:
/// `0` = independent soft thresholding (`lambda = 0`);
/// `1..=4` = both coordinates active with signs `(+,+)`, `(+,-)`, `(-,+)`,
/// `(-,-)`; `5` = only `a` active; `6` = only `b` active; `7` = both zero;
/// `-1` = non-convex fallback (candidate enumeration).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProxSolution {
    pub a: f64,
    pub b: f64,
    pub condition_id: i8,
}

/// Scalar soft-thresholding `S_omega(mu) = max(|mu| - omega, 0) * sign(mu)`.
#[inline]
pub fn soft_threshold(mu: f64, omega: f64) -> f64 {
    let mag = mu.abs() - omega;
    if mag <= 0.0 {
        0.0
    } else {
        mag * mu.signum()
    }
}

/// Per-pathway penalty term `v(a, b) = |ab| + phi (a² + b²)`.
///
/// Convex exactly when `phi >= 1/2`; equals
/// `max{(a+b)²/2, (a-b)²/2} + (phi - 1/2)(a² + b²)`.
pub fn penalty_v(a: f64, b: f64, phi: f64) -> f64 {
    (a * b).abs() + phi * (a * a + b * b)
}

/// Solves the two-variable subproblem exactly.
///
/// Routing: `lambda = 0` → independent soft thresholding; convex regime →
/// sign-quadrant case analysis (the `omega = 0` specialization avoids the
/// general conditions' degenerate comparisons); otherwise → candidate
/// enumeration over all stationary-point formulas, both axes, and the origin.
///
/// # Panics
/// On non-finite parameters, negative `lambda`/`omega`, or non-positive
/// `phi1`/`phi2`.
pub fn prox_pair(p: &ProxParams) -> ProxSolution {
    p.assert_valid();
    if p.lambda == 0.0 {
        return ProxSolution {
            a: soft_threshold(p.mu1, p.omega) / p.phi1,
            b: soft_threshold(p.mu2, p.omega) / p.phi2,
            condition_id: 0,
        };
    }
    if p.is_convex() {
        let hit = if p.omega == 0.0 {
            quadrant_solution_no_lasso(p)
        } else {
            quadrant_solution(p)
        };
        match hit {
            Some(sol) => sol,
            None => ProxSolution {
                a: 0.0,
                b: 0.0,
                condition_id: 7,
            },
        }
    } else {
        enumerate_candidates(p)
    }
}

/// Case analysis for `lambda > 0`, `omega > 0`. Conditions are evaluated with
/// strict inequalities exactly as derived; boundary ties (where more than one
/// condition can hold with equality) are resolved by objective value, then by
/// sparsity.
fn quadrant_solution(p: &ProxParams) -> Option<ProxSolution> {
    let (l, w, p1, p2, m1, m2) = (p.lambda, p.omega, p.phi1, p.phi2, p.mu1, p.mu2);
    let den = p1 * p2 - l * l;
    let mut hits: Vec<ProxSolution> = Vec::new();

    // Both active, signs (+,+).
    if p2 * m1 - l * m2 > w * (p2 - l) && p1 * m2 - l * m1 > w * (p1 - l) {
        hits.push(ProxSolution {
            a: (p2 * (m1 - w) - l * (m2 - w)) / den,
            b: (p1 * (m2 - w) - l * (m1 - w)) / den,
            condition_id: 1,
        });
    }
    // Both active, signs (+,-).
    if p2 * m1 + l * m2 > w * (p2 - l) && p1 * m2 + l * m1 < -w * (p1 - l) {
        hits.push(ProxSolution {
            a: (p2 * (m1 - w) + l * (m2 + w)) / den,
            b: (p1 * (m2 + w) + l * (m1 - w)) / den,
            condition_id: 2,
        });
    }
    // Both active, signs (-,+).
    if p2 * m1 + l * m2 < -w * (p2 - l) && p1 * m2 + l * m1 > w * (p1 - l) {
        hits.push(ProxSolution {
            a: (p2 * (m1 + w) + l * (m2 - w)) / den,
            b: (p1 * (m2 - w) + l * (m1 + w)) / den,
            condition_id: 3,
        });
    }
    // Both active, signs (-,-).
    if p2 * m1 - l * m2 < -w * (p2 - l) && p1 * m2 - l * m1 < -w * (p1 - l) {
        hits.push(ProxSolution {
            a: (p2 * (m1 + w) - l * (m2 + w)) / den,
            b: (p1 * (m2 + w) - l * (m1 + w)) / den,
            condition_id: 4,
        });
    }
    // Only `a` active.
    if m1.abs() > w && p1 * m2.abs() - l * m1.abs() <= w * (p1 - l) {
        hits.push(ProxSolution {
            a: (m1.abs() - w) * m1.signum() / p1,
            b: 0.0,
            condition_id: 5,
        });
    }
    // Only `b` active.
    if m2.abs() > w && p2 * m1.abs() - l * m2.abs() <= w * (p2 - l) {
        hits.push(ProxSolution {
            a: 0.0,
            b: (m2.abs() - w) * m2.signum() / p2,
            condition_id: 6,
        });
    }
    pick_best(p, hits)
}

/// Case analysis for `lambda > 0`, `omega = 0`. Same quadrant logic with the
/// lasso terms dropped; `condition_id` is mapped onto the same sign-pattern
/// codes as the general analysis.
fn quadrant_solution_no_lasso(p: &ProxParams) -> Option<ProxSolution> {
    let (l, p1, p2, m1, m2) = (p.lambda, p.phi1, p.phi2, p.mu1, p.mu2);
    let den = p1 * p2 - l * l;
    let mut hits: Vec<ProxSolution> = Vec::new();

    // Both active with ab > 0: interior point of the |ab| = +ab piece.
    let (sa, sb) = (p2 * m1 - l * m2, p1 * m2 - l * m1);
    if sa * sb > 0.0 {
        hits.push(ProxSolution {
            a: sa / den,
            b: sb / den,
            condition_id: if sa > 0.0 { 1 } else { 4 },
        });
    }
    // Both active with ab < 0: interior point of the |ab| = -ab piece.
    let (ta, tb) = (p2 * m1 + l * m2, p1 * m2 + l * m1);
    if ta * tb < 0.0 {
        hits.push(ProxSolution {
            a: ta / den,
            b: tb / den,
            condition_id: if ta > 0.0 { 2 } else { 3 },
        });
    }
    // Only `a` active.
    if m1.abs() > 0.0 && p1 * m2.abs() - l * m1.abs() <= 0.0 {
        hits.push(ProxSolution {
            a: m1 / p1,
            b: 0.0,
            condition_id: 5,
        });
    }
    // Only `b` active.
    if m2.abs() > 0.0 && p2 * m1.abs() - l * m2.abs() <= 0.0 {
        hits.push(ProxSolution {
            a: 0.0,
            b: m2 / p2,
            condition_id: 6,
        });
    }
    pick_best(p, hits)
}

/// Resolves multiple matching branches (possible only on condition
/// boundaries): lowest objective wins; exact ties prefer the sparser point,
/// then the earlier branch.
fn pick_best(p: &ProxParams, hits: Vec<ProxSolution>) -> Option<ProxSolution> {
    let mut best: Option<(f64, u8, ProxSolution)> = None;
    for sol in hits {
        if !sol.a.is_finite() || !sol.b.is_finite() {
            continue;
        }
        let obj = p.objective(sol.a, sol.b);
        let zeros = (sol.a == 0.0) as u8 + (sol.b == 0.0) as u8;
        let better = match &best {
            None => true,
            Some((bo, bz, _)) => obj < *bo || (obj == *bo && zeros > *bz),
        };
        if better {
            best = Some((obj, zeros, sol));
        }
    }
    best.map(|(_, _, sol)| sol)
}

/// Fallback for the non-convex regime (`min(phi1, phi2) <= lambda`, which the
/// solver only produces for the unpaired direct-effect coordinate): evaluate
/// every closed-form stationary candidate, both axis points, and the origin,
/// and keep the best.
///
/// When `lambda > min(phi1, phi2)` the Hessian on the smooth pieces is
/// indefinite, so no interior stationary point can be a minimum and the true
/// minimizer lies on an axis — which the candidate set always contains.
fn enumerate_candidates(p: &ProxParams) -> ProxSolution {
    let (l, w, p1, p2, m1, m2) = (p.lambda, p.omega, p.phi1, p.phi2, p.mu1, p.mu2);
    let den = p1 * p2 - l * l;
    let mut cands: Vec<(f64, f64)> = vec![
        (0.0, 0.0),
        (soft_threshold(m1, w) / p1, 0.0),
        (0.0, soft_threshold(m2, w) / p2),
    ];
    if den != 0.0 {
        cands.push((
            (p2 * (m1 - w) - l * (m2 - w)) / den,
            (p1 * (m2 - w) - l * (m1 - w)) / den,
        ));
        cands.push((
            (p2 * (m1 - w) + l * (m2 + w)) / den,
            (p1 * (m2 + w) + l * (m1 - w)) / den,
        ));
        cands.push((
            (p2 * (m1 + w) + l * (m2 - w)) / den,
            (p1 * (m2 - w) + l * (m1 + w)) / den,
        ));
        cands.push((
            (p2 * (m1 + w) - l * (m2 + w)) / den,
            (p1 * (m2 + w) - l * (m1 + w)) / den,
        ));
    }
    let mut best = (p.objective(0.0, 0.0), 2u8, (0.0f64, 0.0f64));
    for (a, b) in cands {
        if !a.is_finite() || !b.is_finite() {
            continue;
        }
        let obj = p.objective(a, b);
        let zeros = (a == 0.0) as u8 + (b == 0.0) as u8;
        if obj < best.0 || (obj == best.0 && zeros > best.1) {
            best = (obj, zeros, (a, b));
        }
    }
    ProxSolution {
        a: best.2 .0,
        b: best.2 .1,
        condition_id: -1,
    }
}
