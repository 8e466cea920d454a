//! Small dense linear-algebra helpers: Cholesky factorization and ordinary
//! least squares on symmetric positive-definite normal equations.
//!
//! The systems in this crate are tiny (at most (K+1)×(K+1), and usually 1×1 or
//! 2×2 for the baselines), so a plain Cholesky with no blocking is plenty.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Lower Cholesky factor of a symmetric positive-definite matrix.
///
/// Returns `Error::Numeric` if a pivot is not strictly positive (matrix not
/// positive definite to working precision).
pub(crate) fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "cholesky needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(Error::Numeric(format!(
                        "matrix not positive definite (pivot {} at row {})",
                        sum, i
                    )));
                }
                l[[i, i]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ x = b` given the lower factor `L`.
pub(crate) fn cholesky_solve(l: &Array2<f64>, b: ArrayView1<f64>) -> Array1<f64> {
    let n = l.nrows();
    debug_assert_eq!(b.len(), n);
    // Forward substitution: L y = b.
    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[[i, k]] * y[k];
        }
        y[i] = sum / l[[i, i]];
    }
    // Back substitution: Lᵀ x = y.
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[[k, i]] * x[k];
        }
        x[i] = sum / l[[i, i]];
    }
    x
}

/// Solves normal equations `G x = r` by Gaussian elimination with symmetric
/// (largest-diagonal-first) pivoting. A pivot below `1e-12 * max_diag` marks
/// its unknown as linearly dependent and pins it to zero, giving a
/// deterministic basic least-squares solution instead of an error — exactly
/// collinear designs (e.g. a mediator that is a multiple of the treatment)
/// still produce a well-defined fit. Equal diagonals resolve to the higher
/// index, so mediator columns win ties against the treatment column.
pub(crate) fn solve_gram_basic(gram: &Array2<f64>, rhs: ArrayView1<f64>) -> Array1<f64> {
    let p = gram.nrows();
    debug_assert_eq!(gram.ncols(), p);
    debug_assert_eq!(rhs.len(), p);
    let mut g = gram.clone();
    let mut r = rhs.to_owned();
    let max_diag = (0..p).map(|i| g[[i, i]]).fold(0.0f64, f64::max);
    if max_diag <= 0.0 {
        return Array1::zeros(p);
    }
    let tol = max_diag * 1e-12;
    let mut used = vec![false; p];
    let mut order = Vec::with_capacity(p);
    for _ in 0..p {
        let mut piv = None;
        let mut best = tol;
        for i in 0..p {
            if !used[i] && g[[i, i]] >= best {
                best = g[[i, i]];
                piv = Some(i);
            }
        }
        let Some(piv) = piv else { break };
        used[piv] = true;
        order.push(piv);
        for i in 0..p {
            if used[i] {
                continue;
            }
            let f = g[[i, piv]] / g[[piv, piv]];
            for j in 0..p {
                if !used[j] {
                    g[[i, j]] -= f * g[[piv, j]];
                }
            }
            g[[i, piv]] = 0.0;
            r[i] -= f * r[piv];
        }
    }
    // Unknowns that never produced a pivot stay at zero; back-substitute the
    // pivoted ones in reverse elimination order. Each pivot row was frozen at
    // its own step, so it references only later pivots (and zeroed unknowns).
    let mut x = Array1::zeros(p);
    for (step, &piv) in order.iter().enumerate().rev() {
        let mut sum = r[piv];
        for &later in &order[step + 1..] {
            sum -= g[[piv, later]] * x[later];
        }
        x[piv] = sum / g[[piv, piv]];
    }
    x
}

/// Output of an OLS fit with standard errors.
pub(crate) struct OlsFit {
    pub coef: Array1<f64>,
    /// Homoskedastic standard errors, `sqrt(sigma2 * [(XᵀX)⁻¹]_jj)` with
    /// residual variance RSS / (n - p).
    pub se: Array1<f64>,
}

/// OLS with homoskedastic standard errors; residual degrees of freedom n - p.
/// No intercept is added; callers pass already-centered or deliberately
/// uncentered designs.
pub(crate) fn ols_with_se(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<OlsFit> {
    let (n, p) = (x.nrows(), x.ncols());
    if n <= p {
        return Err(Error::Numeric(format!(
            "need more rows ({}) than predictors ({}) for standard errors",
            n, p
        )));
    }
    let xtx = x.t().dot(&x);
    let xty = x.t().dot(&y);
    let l = cholesky(&xtx).map_err(|_| {
        Error::Numeric("singular design in least squares (collinear columns?)".into())
    })?;
    let coef = cholesky_solve(&l, xty.view());
    let fitted = x.dot(&coef);
    let rss: f64 = y
        .iter()
        .zip(fitted.iter())
        .map(|(yi, fi)| (yi - fi) * (yi - fi))
        .sum();
    let sigma2 = rss / (n - p) as f64;
    // Diagonal of (XᵀX)⁻¹ via one solve per unit vector (p is tiny here).
    let mut se = Array1::<f64>::zeros(p);
    for j in 0..p {
        let mut e = Array1::<f64>::zeros(p);
        e[j] = 1.0;
        let col = cholesky_solve(&l, e.view());
        se[j] = (sigma2 * col[j]).max(0.0).sqrt();
    }
    Ok(OlsFit { coef, se })
}
