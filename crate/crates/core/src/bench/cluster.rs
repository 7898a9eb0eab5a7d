use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DesignMatrix;
use crate::metrics::{adjusted_r_squared, r_squared};
use crate::models::{fit_linear, LinearModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterFit {
    pub cluster: u32,
    pub model: LinearModel<f64>,
    pub r_squared: f64,
    pub adjusted_r_squared: f64,
    pub n: usize,
    /// Columns that vary within the cluster; only these enter the fit.
    pub p: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClusterLrResult {
    pub fits: Vec<ClusterFit>,
    /// Clusters left out, with the reason.
    pub skipped: Vec<(u32, String)>,
}

/// In-sample OLS fit per cluster. Columns constant within a cluster (the
/// other clusters' indicators, for instance) are dropped before fitting.
/// Clusters with fewer than `p + 2` rows, or a constant target, are skipped.
pub fn cluster_lr_analysis(x: &DesignMatrix<f64>, y: &[f64], clusters: &[u32]) -> Result<ClusterLrResult> {
    if x.n_rows() != y.len() || clusters.len() != y.len() {
        return Err(Error::Shape("x, y and cluster ids differ in length".into()));
    }
    if y.is_empty() {
        return Err(Error::Empty("no rows for cluster analysis"));
    }
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &c) in clusters.iter().enumerate() {
        groups.entry(c).or_default().push(i);
    }
    let mut out = ClusterLrResult::default();
    for (cluster, rows) in groups {
        let sub = x.select_rows(&rows);
        let ys: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
        let varying: Vec<usize> = (0..sub.n_cols())
            .filter(|&j| {
                let col = sub.column(j);
                col.iter().any(|&v| v != col[0])
            })
            .collect();
        let p = varying.len();
        let n = rows.len();
        if n < p + 2 {
            let why = format!("{n} rows for {p} varying columns");
            log::warn!("cluster {cluster} skipped: {why}");
            out.skipped.push((cluster, why));
            continue;
        }
        if p == 0 {
            out.skipped.push((cluster, "no varying columns".into()));
            continue;
        }
        let xs = sub.select_columns(&varying);
        let model = fit_linear(&xs, &ys)?;
        let pred = model.predict(&xs)?;
        let r2 = match r_squared(&ys, &pred) {
            Ok(v) => v,
            Err(e) => {
                log::warn!("cluster {cluster} skipped: {e}");
                out.skipped.push((cluster, e.to_string()));
                continue;
            }
        };
        out.fits.push(ClusterFit {
            cluster,
            r_squared: r2,
            adjusted_r_squared: adjusted_r_squared(r2, n, p)?,
            model,
            n,
            p,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_cluster_equals_global_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| vec![rng.random_range(0.0..1.0), 1.0, rng.random_range(0.0..1.0)])
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] * r[2] + rng.random_range(0.0..0.1)).collect();
        let x = DesignMatrix::from_rows(&rows).unwrap();
        let res = cluster_lr_analysis(&x, &y, &[7; 40]).unwrap();
        assert_eq!(res.fits.len(), 1);
        let fit = &res.fits[0];
        assert_eq!((fit.n, fit.p), (40, 2));
        let global = fit_linear(&x.select_columns(&[0, 2]), &y).unwrap();
        assert_eq!(fit.model, global);
        let full = fit_linear(&x, &y).unwrap();
        let a = fit.model.predict(&x.select_columns(&[0, 2])).unwrap();
        let b = full.predict(&x).unwrap();
        assert!(a.iter().zip(&b).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn exact_cluster_and_skips() {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        let mut ids = Vec::new();
        for i in 0..20 {
            let v = i as f64;
            rows.push(vec![v, (v * 1.7).sin()]);
            y.push(2.0 * v + 1.0 - 3.0 * (v * 1.7).sin());
            ids.push(1);
        }
        for i in 0..3 {
            rows.push(vec![i as f64, i as f64 * 0.5 + 1.0]);
            y.push(i as f64);
            ids.push(2);
        }
        let x = DesignMatrix::from_rows(&rows).unwrap();
        let res = cluster_lr_analysis(&x, &y, &ids).unwrap();
        assert_eq!(res.fits.len(), 1);
        assert!((res.fits[0].adjusted_r_squared - 1.0).abs() < 1e-12);
        assert_eq!(res.skipped.len(), 1);
        assert_eq!(res.skipped[0].0, 2);
    }
}
