//! Rank-tolerant least squares.
//!
//! `A` is reduced with Householder QR to a square `R`, then `R` is
//! diagonalised with one-sided Jacobi rotations. The minimum-norm solution
//! drops singular values below `max(m, n) * eps * sigma_max`, so exactly
//! collinear columns (full one-hot blocks next to an intercept) are fine.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct LeastSquares<T> {
    pub solution: Vec<T>,
    pub rank: usize,
    pub singular_values: Vec<T>,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// In-place Householder QR on column-major `cols` (each of length `m`),
/// applying the same reflections to `rhs`. Returns the upper `n x n`
/// triangle as columns of length `n`.
fn householder_r<T: Scalar>(mut cols: Vec<Vec<T>>, rhs: &mut [T]) -> Vec<Vec<T>> {
    let m = rhs.len();
    let n = cols.len();
    let two = T::one() + T::one();
    for k in 0..n.min(m) {
        let norm = cols[k][k..].iter().fold(T::zero(), |a, &v| a + v * v).sqrt();
        if norm == T::zero() {
            continue;
        }
        let mut v: Vec<T> = cols[k][k..].to_vec();
        let alpha = if v[0] >= T::zero() { -norm } else { norm };
        v[0] = v[0] - alpha;
        let vnorm2 = dot(&v, &v);
        if vnorm2 == T::zero() {
            continue;
        }
        for col in cols.iter_mut().skip(k) {
            let f = two * dot(&v, &col[k..]) / vnorm2;
            for (c, &vi) in col[k..].iter_mut().zip(&v) {
                *c = *c - f * vi;
            }
        }
        let f = two * dot(&v, &rhs[k..]) / vnorm2;
        for (c, &vi) in rhs[k..].iter_mut().zip(&v) {
            *c = *c - f * vi;
        }
    }
    cols.into_iter()
        .enumerate()
        .map(|(j, c)| {
            let mut r = c[..n.min(m)].to_vec();
            r.resize(n, T::zero());
            for v in r.iter_mut().skip(j + 1) {
                *v = T::zero();
            }
            r
        })
        .collect()
}

/// One-sided Jacobi: orthogonalises the columns of `u` in place and
/// accumulates the rotations in `v` (starts as identity).
fn jacobi_orthogonalise<T: Scalar>(u: &mut [Vec<T>], v: &mut [Vec<T>]) {
    let n = u.len();
    let eps = T::epsilon();
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let alpha = dot(&u[i], &u[i]);
                let beta = dot(&u[j], &u[j]);
                let gamma = dot(&u[i], &u[j]);
                if alpha == T::zero() || beta == T::zero() {
                    continue;
                }
                if gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let two = T::one() + T::one();
                let zeta = (beta - alpha) / (two * gamma);
                let sign = if zeta >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(u, i, j, c, s);
                rotate(v, i, j, c, s);
            }
        }
        if !rotated {
            return;
        }
    }
    log::warn!("jacobi SVD did not fully converge");
}

fn rotate<T: Scalar>(cols: &mut [Vec<T>], i: usize, j: usize, c: T, s: T) {
    let (head, tail) = cols.split_at_mut(j);
    let (a, b) = (&mut head[i], &mut tail[0]);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xi, yj) = (*x, *y);
        *x = c * xi - s * yj;
        *y = s * xi + c * yj;
    }
}

/// Minimum-norm solution of `min ||A x - b||` for column-major `A`.
pub fn least_squares<T: Scalar>(columns: &[Vec<T>], b: &[T]) -> Result<LeastSquares<T>> {
    let n = columns.len();
    let m = b.len();
    if n == 0 {
        return Err(Error::NoFeatures);
    }
    if columns.iter().any(|c| c.len() != m) {
        return Err(Error::Shape("column length differs from right-hand side".into()));
    }

    // Reduce tall systems to an n x n triangle first.
    let (mut u, rhs): (Vec<Vec<T>>, Vec<T>) = if m >= n {
        let mut rhs = b.to_vec();
        let r = householder_r(columns.to_vec(), &mut rhs);
        rhs.truncate(n);
        (r, rhs)
    } else {
        (columns.to_vec(), b.to_vec())
    };

    let mut v: Vec<Vec<T>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    jacobi_orthogonalise(&mut u, &mut v);

    let sigma: Vec<T> = u.iter().map(|c| dot(c, c).sqrt()).collect();
    let sigma_max = sigma.iter().copied().fold(T::zero(), T::max);
    let tol = sigma_max * T::epsilon() * <T as Scalar>::from_usize(m.max(n));

    let mut x = vec![T::zero(); n];
    let mut rank = 0;
    for k in 0..n {
        if sigma[k] <= tol || sigma[k] == T::zero() {
            continue;
        }
        rank += 1;
        // u_k = sigma_k * U_k, so U_k . rhs / sigma_k = u_k . rhs / sigma_k^2
        let coef = dot(&u[k], &rhs) / (sigma[k] * sigma[k]);
        for (xi, &vi) in x.iter_mut().zip(&v[k]) {
            *xi = *xi + coef * vi;
        }
    }
    let mut singular_values = sigma;
    singular_values.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(LeastSquares {
        solution: x,
        rank,
        singular_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_square_system() {
        // [[2, 1], [1, 3]] x = [3, 5] -> x = [0.8, 1.4]
        let cols = vec![vec![2.0_f64, 1.0], vec![1.0, 3.0]];
        let sol = least_squares(&cols, &[3.0, 5.0]).unwrap();
        assert!((sol.solution[0] - 0.8).abs() < 1e-14);
        assert!((sol.solution[1] - 1.4).abs() < 1e-14);
        assert_eq!(sol.rank, 2);
    }

    #[test]
    fn overdetermined_fit() {
        // y = 1 + 2 t on 4 points, with an intercept column
        let t = [0.0, 1.0, 2.0, 3.0];
        let cols = vec![vec![1.0; 4], t.to_vec()];
        let y: Vec<f64> = t.iter().map(|v| 1.0 + 2.0 * v).collect();
        let sol = least_squares(&cols, &y).unwrap();
        assert!((sol.solution[0] - 1.0).abs() < 1e-12);
        assert!((sol.solution[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_columns_give_minimum_norm() {
        // two identical columns: min-norm splits the weight evenly
        let c = vec![1.0_f64, 2.0, 3.0];
        let y = vec![2.0, 4.0, 6.0];
        let sol = least_squares(&[c.clone(), c], &y).unwrap();
        assert_eq!(sol.rank, 1);
        assert!((sol.solution[0] - 1.0).abs() < 1e-12);
        assert!((sol.solution[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn underdetermined_minimum_norm() {
        // x0 + x1 + x2 = 3 -> (1, 1, 1)
        let cols = vec![vec![1.0_f64], vec![1.0], vec![1.0]];
        let sol = least_squares(&cols, &[3.0]).unwrap();
        for v in sol.solution {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_precision() {
        let cols = vec![vec![1.0_f32, 0.0, 0.0], vec![0.0, 2.0, 0.0]];
        let sol = least_squares(&cols, &[1.0, 4.0, 7.0]).unwrap();
        assert!((sol.solution[0] - 1.0).abs() < 1e-6);
        assert!((sol.solution[1] - 2.0).abs() < 1e-6);
    }
}
