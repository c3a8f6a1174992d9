//! Dense linear-algebra helpers: power iteration for the operator norm,
//! Cholesky factorization for SPD Newton systems, and a Euclidean projection
//! onto the probability simplex.

use crate::{c, Error, Result, Scalar};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
///
/// The start vector is a fixed deterministic ramp so repeated calls agree
/// bitwise. Fails rather than returning a stale value if the relative change
/// has not dropped below `rel_tol` within `max_iter` sweeps.
pub fn operator_norm_psd<F: Scalar>(a: ArrayView2<F>, rel_tol: F, max_iter: usize) -> Result<F> {
    let d = a.nrows();
    if a.ncols() != d {
        return Err(Error::DimensionMismatch {
            context: "operator_norm_psd",
            expected: d,
            got: a.ncols(),
        });
    }
    if d == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    if d == 1 {
        return Ok(a[[0, 0]].abs());
    }
    // Deterministic start with incommensurate components so it is nearly
    // never orthogonal to the leading eigenvector.
    let mut v: Array1<F> = Array1::from_shape_fn(d, |i| c::<F>(1.0 + (i as f64) * 0.618_033_988_749));
    let norm0 = norm2(v.view());
    v.mapv_inplace(|x| x / norm0);

    let mut lambda = F::zero();
    for _ in 0..max_iter {
        let w = a.dot(&v);
        let wnorm = norm2(w.view());
        if wnorm == F::zero() {
            // a v = 0: v is in the null space, matrix acts as zero there.
            return Ok(F::zero());
        }
        let next = w.mapv(|x| x / wnorm);
        let lambda_next = next.dot(&a.dot(&next));
        let denom = lambda_next.abs().max(F::min_positive_value());
        let rel = (lambda_next - lambda).abs() / denom;
        v = next;
        lambda = lambda_next;
        if rel <= rel_tol {
            return Ok(lambda.max(F::zero()));
        }
    }
    Err(Error::PowerIterationDiverged { iterations: max_iter })
}

pub fn norm2<F: Scalar>(v: ArrayView1<F>) -> F {
    v.iter().map(|&x| x * x).sum::<F>().sqrt()
}

pub fn norm1<F: Scalar>(v: ArrayView1<F>) -> F {
    v.iter().map(|&x| x.abs()).sum()
}

pub fn norm_inf<F: Scalar>(v: ArrayView1<F>) -> F {
    v.iter().fold(F::zero(), |m, &x| m.max(x.abs()))
}

/// Cholesky factor (lower triangular) of a symmetric positive-definite matrix.
pub fn cholesky<F: Scalar>(a: &Array2<F>) -> Result<Array2<F>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "cholesky",
            expected: n,
            got: a.ncols(),
        });
    }
    let mut l = Array2::<F>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for k in 0..j {
                s = s - l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= F::zero() || !s.is_finite() {
                    return Err(Error::invalid("matrix not positive definite"));
                }
                l[[i, i]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solve `a x = b` for symmetric positive-definite `a` via Cholesky.
pub fn solve_spd<F: Scalar>(a: &Array2<F>, b: ArrayView1<F>) -> Result<Array1<F>> {
    let l = cholesky(a)?;
    let n = l.nrows();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_spd",
            expected: n,
            got: b.len(),
        });
    }
    // Forward substitution L y = b.
    let mut y = Array1::<F>::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    // Back substitution L^T x = y.
    let mut x = Array1::<F>::zeros(n);
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s = s - l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    Ok(x)
}

/// Euclidean projection onto the probability simplex, by the sort-based rule.
pub fn project_simplex<F: Scalar>(v: ArrayView1<F>) -> Array1<F> {
    let d = v.len();
    let mut sorted: Vec<F> = v.iter().copied().collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumsum = F::zero();
    let mut rho = 0usize;
    let mut rho_sum = F::zero();
    for (k, &u) in sorted.iter().enumerate() {
        cumsum = cumsum + u;
        let kf = c::<F>((k + 1) as f64);
        if u + (F::one() - cumsum) / kf > F::zero() {
            rho = k + 1;
            rho_sum = cumsum;
        }
    }
    let tau = (rho_sum - F::one()) / c::<F>(rho as f64);
    Array1::from_shape_fn(d, |i| (v[i] - tau).max(F::zero()))
}
