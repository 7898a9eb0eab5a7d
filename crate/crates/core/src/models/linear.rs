use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::matrix::DesignMatrix;
use crate::scalar::{stable_sum, Scalar};

/// Ordinary least squares with an intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LinearModel<T> {
    pub coefficients: Vec<T>,
    pub intercept: T,
    pub feature_names: Vec<String>,
    /// Numerical rank of the centred design.
    pub rank: usize,
}

/// Fits by centring the columns and taking the minimum-norm least-squares
/// solution, so collinear indicator blocks are tolerated.
pub fn fit_linear<T: Scalar>(x: &DesignMatrix<T>, y: &[T]) -> Result<LinearModel<T>> {
    if x.n_cols() == 0 {
        return Err(Error::NoFeatures);
    }
    if x.n_rows() != y.len() {
        return Err(Error::Shape(format!("{} rows vs {} targets", x.n_rows(), y.len())));
    }
    if y.is_empty() {
        return Err(Error::Empty("linear fit needs at least one row"));
    }
    let n = <T as Scalar>::from_usize(y.len());
    let y_mean = stable_sum(y.iter().copied()) / n;
    let mut means = Vec::with_capacity(x.n_cols());
    let columns: Vec<Vec<T>> = x
        .columns()
        .into_iter()
        .map(|c| {
            let m = stable_sum(c.iter().copied()) / n;
            means.push(m);
            c.into_iter().map(|v| v - m).collect()
        })
        .collect();
    let centred_y: Vec<T> = y.iter().map(|&v| v - y_mean).collect();
    let sol = least_squares(&columns, &centred_y)?;
    let shift = stable_sum(sol.solution.iter().zip(&means).map(|(&b, &m)| b * m));
    Ok(LinearModel {
        intercept: y_mean - shift,
        coefficients: sol.solution,
        feature_names: x.column_names().to_vec(),
        rank: sol.rank,
    })
}

impl<T: Scalar> LinearModel<T> {
    pub fn predict(&self, x: &DesignMatrix<T>) -> Result<Vec<T>> {
        if x.n_cols() != self.coefficients.len() {
            return Err(Error::Shape(format!(
                "linear model expects {} features, got {}",
                self.coefficients.len(),
                x.n_cols()
            )));
        }
        Ok((0..x.n_rows())
            .map(|i| {
                x.row(i)
                    .iter()
                    .zip(&self.coefficients)
                    .fold(self.intercept, |acc, (&v, &b)| acc + v * b)
            })
            .collect())
    }
}

/// Same as [`LinearModel::predict`].
pub fn predict_linear<T: Scalar>(model: &LinearModel<T>, x: &DesignMatrix<T>) -> Result<Vec<T>> {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_line() {
        let x = DesignMatrix::from_columns(&[vec![1.0_f64, 2.0, 3.0]]).unwrap();
        let m = fit_linear(&x, &[2.0, 4.0, 6.0]).unwrap();
        assert!((m.coefficients[0] - 2.0).abs() < 1e-9);
        assert!(m.intercept.abs() < 1e-9);
        let p = m.predict(&x).unwrap();
        for (a, b) in p.iter().zip([2.0, 4.0, 6.0]) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_target() {
        let x = DesignMatrix::from_columns(&[vec![1.0_f64, 5.0, 3.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let m = fit_linear(&x, &[3.0, 3.0, 3.0]).unwrap();
        assert!((m.intercept - 3.0).abs() < 1e-9);
        assert!(m.coefficients.iter().all(|c| c.abs() < 1e-9));
        assert!(m.predict(&x).unwrap().iter().all(|p| (p - 3.0).abs() < 1e-9));
    }

    #[test]
    fn two_features_known_beta() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<f64> = (0..50).map(|_| rng.random_range(-5.0..5.0)).collect();
        let b: Vec<f64> = (0..50).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y: Vec<f64> = a.iter().zip(&b).map(|(a, b)| 1.0 + 2.0 * a + 3.0 * b).collect();
        let x = DesignMatrix::from_columns(&[a, b]).unwrap();
        let m = fit_linear(&x, &y).unwrap();
        assert!((m.coefficients[0] - 2.0).abs() < 1e-8);
        assert!((m.coefficients[1] - 3.0).abs() < 1e-8);
        assert!((m.intercept - 1.0).abs() < 1e-8);
        let p = predict_linear(&m, &x).unwrap();
        assert!(p.iter().zip(&y).all(|(p, y)| (p - y).abs() < 1e-8));
    }

    #[test]
    fn collinear_one_hot_block() {
        // full indicator block plus intercept is rank-deficient
        let g1 = vec![1.0_f64, 1.0, 0.0, 0.0];
        let g2 = vec![0.0, 0.0, 1.0, 1.0];
        let x = DesignMatrix::from_columns(&[g1, g2]).unwrap();
        let m = fit_linear(&x, &[1.0, 1.0, 5.0, 5.0]).unwrap();
        assert_eq!(m.rank, 1);
        let p = m.predict(&x).unwrap();
        assert!(p.iter().zip([1.0, 1.0, 5.0, 5.0]).all(|(p, y)| (p - y).abs() < 1e-12));
    }

    #[test]
    fn residuals_orthogonal_to_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cols: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..80).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let y: Vec<f64> = (0..80).map(|_| rng.random_range(0.0..10.0)).collect();
        let x = DesignMatrix::from_columns(&cols).unwrap();
        let m = fit_linear(&x, &y).unwrap();
        let r: Vec<f64> = y.iter().zip(m.predict(&x).unwrap()).map(|(a, p)| a - p).collect();
        for c in &cols {
            let d: f64 = c.iter().zip(&r).map(|(a, b)| a * b).sum();
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(d.abs() / norm < 1e-6);
        }
    }

    #[test]
    fn errors() {
        let x = DesignMatrix::<f64>::new(vec![], 3, vec![]).unwrap();
        assert!(matches!(fit_linear(&x, &[1.0, 2.0, 3.0]), Err(Error::NoFeatures)));
        let x = DesignMatrix::from_columns(&[vec![1.0, 2.0]]).unwrap();
        let m = fit_linear(&x, &[1.0, 2.0]).unwrap();
        let wide = DesignMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(m.predict(&wide).is_err());
    }
}
