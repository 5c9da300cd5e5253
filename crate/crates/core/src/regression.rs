//! Ordinary least squares through a Householder QR factorization.
//!
//! The normal equations are never formed. Rank is judged on the diagonal of
//! `R`: column `j` is dependent when `|R_jj| < RANK_TOLERANCE * max_i |R_ii|`.

use crate::error::{Result, SieError};

pub const RANK_TOLERANCE: f64 = 1e-10;

/// Residuals smaller than this fraction of the data scale are treated as an
/// exact fit and set to zero.
const EXACT_FIT_TOLERANCE: f64 = 1e-11;

/// Regressor matrix whose first column is the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n: usize,
    k: usize,
    /// Row-major, `n * k`.
    data: Vec<f64>,
    names: Vec<String>,
}

impl DesignMatrix {
    pub fn new(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let k = names.len();
        if k == 0 {
            return Err(SieError::Argument(
                "design needs at least one column".into(),
            ));
        }
        let mut data = Vec::with_capacity(rows.len() * k);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(SieError::Argument(format!(
                    "row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            if row[0] != 1.0 {
                return Err(SieError::Argument(format!(
                    "row {i}: first column must be the intercept (1), found {}",
                    row[0]
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(SieError::Argument(format!("row {i}: non-finite entry {v}")));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            n: rows.len(),
            k,
            data,
            names,
        })
    }

    /// Unnamed columns `x0..x{k-1}`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        Self::new((0..k).map(|j| format!("x{j}")).collect(), rows)
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.k
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    fn mul_vec(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), beta)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Householder factorization `X = QR`, kept so that further right-hand sides
/// can be solved against the same design.
#[derive(Debug, Clone, PartialEq)]
struct Householder {
    n: usize,
    k: usize,
    /// Reflector `j` acts on rows `j..n`; stored unnormalized with its squared norm.
    reflectors: Vec<(Vec<f64>, f64)>,
    /// Upper triangle, row-major `k * k`.
    r: Vec<f64>,
}

impl Householder {
    fn factor(x: &DesignMatrix) -> Self {
        let (n, k) = (x.n, x.k);
        // Column-major working copy.
        let mut cols: Vec<Vec<f64>> = (0..k)
            .map(|j| (0..n).map(|i| x.get(i, j)).collect())
            .collect();
        let mut reflectors = Vec::with_capacity(k);
        let mut r = vec![0.0; k * k];

        for j in 0..k {
            let norm = cols[j][j..].iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut v = cols[j][j..].to_vec();
            let vv = if norm == 0.0 {
                0.0
            } else {
                let alpha = if v[0] >= 0.0 { -norm } else { norm };
                v[0] -= alpha;
                v.iter().map(|a| a * a).sum::<f64>()
            };
            if vv > 0.0 {
                for col in cols.iter_mut().skip(j) {
                    let s = 2.0 * dot(&v, &col[j..]) / vv;
                    for (c, vi) in col[j..].iter_mut().zip(&v) {
                        *c -= s * vi;
                    }
                }
            }
            for (i, col) in cols.iter().enumerate().skip(j) {
                r[j * k + i] = col[j];
            }
            reflectors.push((v, vv));
        }
        Self {
            n,
            k,
            reflectors,
            r,
        }
    }

    fn diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.k).map(|j| self.r[j * self.k + j])
    }

    fn dependent_columns(&self) -> Vec<usize> {
        let largest = self.diagonal().map(f64::abs).fold(0.0, f64::max);
        self.diagonal()
            .enumerate()
            .filter(|(_, d)| largest == 0.0 || d.abs() < RANK_TOLERANCE * largest)
            .map(|(j, _)| j)
            .collect()
    }

    /// Least-squares coefficients for right-hand side `y`.
    fn solve(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.n);
        let mut qty = y.to_vec();
        for (j, (v, vv)) in self.reflectors.iter().enumerate() {
            if *vv > 0.0 {
                let s = 2.0 * dot(v, &qty[j..]) / vv;
                for (q, vi) in qty[j..].iter_mut().zip(v) {
                    *q -= s * vi;
                }
            }
        }
        let k = self.k;
        let mut beta = vec![0.0; k];
        for j in (0..k).rev() {
            let tail: f64 = ((j + 1)..k).map(|i| self.r[j * k + i] * beta[i]).sum();
            beta[j] = (qty[j] - tail) / self.r[j * k + j];
        }
        beta
    }
}

/// Result of an OLS fit.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub beta: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `sqrt(RSS / (n - k))`; zero when the fit is exact.
    pub sigma_hat: f64,
    /// Adjusted R². `NaN` when `n == k`.
    pub r2_adj: f64,
    pub rss: f64,
    pub tss: f64,
    pub n: usize,
    pub k: usize,
    design: DesignMatrix,
    qr: Householder,
}

impl RegressionFit {
    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn fitted(&self) -> Vec<f64> {
        self.design.mul_vec(&self.beta)
    }

    /// Coefficients for a new response on the same design, reusing the factorization.
    pub fn refit_coefficients(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n {
            return Err(SieError::Argument(format!(
                "response has {} values, design has {} rows",
                y.len(),
                self.n
            )));
        }
        Ok(self.qr.solve(y))
    }
}

pub fn ols_fit(x: &DesignMatrix, y: &[f64]) -> Result<RegressionFit> {
    let (n, k) = (x.nrows(), x.ncols());
    if y.len() != n {
        return Err(SieError::Argument(format!(
            "response has {} values, design has {n} rows",
            y.len()
        )));
    }
    if n < k {
        return Err(SieError::InsufficientData(format!(
            "{n} observations for {k} regressors"
        )));
    }
    if let Some(v) = y.iter().find(|v| !v.is_finite()) {
        return Err(SieError::Argument(format!("non-finite response {v}")));
    }

    let qr = Householder::factor(x);
    let dependent = qr.dependent_columns();
    if !dependent.is_empty() {
        return Err(SieError::Collinear {
            columns: dependent.iter().map(|&j| x.names[j].clone()).collect(),
        });
    }

    let beta = qr.solve(y);
    let fitted = x.mul_vec(&beta);
    let mut residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();

    let scale = y
        .iter()
        .chain(&fitted)
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    if residuals
        .iter()
        .all(|r| r.abs() <= EXACT_FIT_TOLERANCE * scale)
    {
        residuals.iter_mut().for_each(|r| *r = 0.0);
    }

    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let dof = (n - k) as f64;
    let (sigma_hat, r2_adj) = if n == k {
        (0.0, f64::NAN)
    } else if tss == 0.0 {
        ((rss / dof).sqrt(), if rss == 0.0 { 1.0 } else { f64::NAN })
    } else {
        let r2 = 1.0 - (rss / dof) / (tss / (n as f64 - 1.0));
        ((rss / dof).sqrt(), r2)
    };

    Ok(RegressionFit {
        beta,
        residuals,
        sigma_hat,
        r2_adj,
        rss,
        tss,
        n,
        k,
        design: x.clone(),
        qr,
    })
}

/// `beta · x` for a regressor vector whose first entry is the intercept 1.
pub fn predict(fit: &RegressionFit, x: &[f64]) -> Result<f64> {
    if x.len() != fit.k {
        return Err(SieError::Argument(format!(
            "regressor vector has {} entries, model has {}",
            x.len(),
            fit.k
        )));
    }
    if x[0] != 1.0 {
        return Err(SieError::Argument(format!(
            "first regressor must be the intercept 1, found {}",
            x[0]
        )));
    }
    Ok(dot(&fit.beta, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(rows: &[&[f64]]) -> DesignMatrix {
        DesignMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn exact_linear_fit() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![1.0, i as f64, ((i * i) % 7) as f64])
            .collect();
        let x = DesignMatrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = rows.iter().map(|r| 2.0 - 0.5 * r[1] + 3.0 * r[2]).collect();
        let fit = ols_fit(&x, &y).unwrap();
        assert!(fit.residuals.iter().all(|r| *r == 0.0));
        assert_eq!(fit.sigma_hat, 0.0);
        assert_eq!(fit.r2_adj, 1.0);
        for (b, e) in fit.beta.iter().zip([2.0, -0.5, 3.0]) {
            assert!((b - e).abs() < 1e-12);
        }
    }

    #[test]
    fn simple_line_matches_closed_form() {
        let x = design(&[&[1.0, 1.0], &[1.0, 2.0], &[1.0, 3.0], &[1.0, 4.0]]);
        let y = [1.0, 3.0, 2.0, 5.0];
        let fit = ols_fit(&x, &y).unwrap();
        // slope = Sxy/Sxx = 5.5/5 = 1.1, intercept = 2.75 - 1.1*2.5 = 0
        assert!((fit.beta[1] - 1.1).abs() < 1e-14);
        assert!(fit.beta[0].abs() < 1e-14);
        assert!((fit.rss - 2.7).abs() < 1e-12);
        assert!((fit.sigma_hat - (2.7f64 / 2.0).sqrt()).abs() < 1e-12);
        // TSS = 8.75; r2_adj = 1 - (2.7/2)/(8.75/3)
        assert!((fit.r2_adj - (1.0 - 1.35 / (8.75 / 3.0))).abs() < 1e-12);
    }

    #[test]
    fn collinear_column_is_named() {
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| vec![1.0, i as f64, 2.0 * i as f64])
            .collect();
        let x = DesignMatrix::new(vec!["c".into(), "a".into(), "twice_a".into()], &rows).unwrap();
        let err = ols_fit(&x, &[1.0, 2.0, 0.0, 4.0, 3.0, 1.0]).unwrap_err();
        assert_eq!(
            err,
            SieError::Collinear {
                columns: vec!["twice_a".into()]
            }
        );
    }

    #[test]
    fn too_few_rows() {
        let x = design(&[&[1.0, 1.0, 2.0], &[1.0, 2.0, 1.0]]);
        assert!(matches!(
            ols_fit(&x, &[1.0, 2.0]),
            Err(SieError::InsufficientData(_))
        ));
    }

    #[test]
    fn intercept_column_is_required() {
        assert!(DesignMatrix::from_rows(&[vec![2.0, 1.0]]).is_err());
    }

    #[test]
    fn predict_checks_and_identities() {
        let x = design(&[&[1.0, 1.0], &[1.0, 2.0], &[1.0, 3.0], &[1.0, 5.0]]);
        let y = [2.0, 2.5, 4.5, 5.0];
        let fit = ols_fit(&x, &y).unwrap();
        assert_eq!(predict(&fit, &[1.0, 0.0]).unwrap(), fit.beta[0]);
        for (i, (yi, e)) in y.iter().zip(&fit.residuals).enumerate() {
            let p = predict(&fit, x.row(i)).unwrap();
            assert!((p - (yi - e)).abs() < 1e-14);
        }
        assert!(predict(&fit, &[1.0]).is_err());
        assert!(predict(&fit, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn refit_reuses_factorization() {
        let x = design(&[&[1.0, 1.0], &[1.0, 2.0], &[1.0, 3.0], &[1.0, 5.0]]);
        let fit = ols_fit(&x, &[2.0, 2.5, 4.5, 5.0]).unwrap();
        let other = [1.0, 0.0, 2.0, 7.0];
        let direct = ols_fit(&x, &other).unwrap();
        assert_eq!(fit.refit_coefficients(&other).unwrap(), direct.beta);
    }
}
