//! Ordinary least squares with an implicit intercept.
//!
//! Solved through a Householder QR of the design rather than the normal
//! equations so that exact algebraic identities between related fits hold
//! to near machine precision even on natural-unit data (means around 80).

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};

use crate::error::{LabError, Result};

pub const INTERCEPT: &str = "intercept";

/// Columns whose QR pivot falls below this fraction of their own norm are
/// treated as linear combinations of earlier columns.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub coefficients: IndexMap<String, f64>,
    pub standard_errors: IndexMap<String, f64>,
    pub residual_variance: f64,
    pub n: usize,
}

impl FitResult {
    pub fn coef(&self, term: &str) -> f64 {
        self.coefficients[term]
    }

    pub fn se(&self, term: &str) -> f64 {
        self.standard_errors[term]
    }

    /// Fitted value for one row given regressor values by term name;
    /// missing terms count as zero.
    pub fn predict(&self, values: &[(&str, f64)]) -> f64 {
        let mut out = self.coefficients.get(INTERCEPT).copied().unwrap_or(0.0);
        for (term, v) in values {
            if let Some(b) = self.coefficients.get(*term) {
                out += b * v;
            }
        }
        out
    }
}

/// Regresses `y` on an intercept plus the named `terms`.
pub fn ols(y: &[f64], terms: &[(&str, &[f64])]) -> Result<FitResult> {
    let n = y.len();
    let p = terms.len() + 1;
    if n <= p {
        return Err(LabError::TooFewObservations { n, terms: p });
    }
    for (name, col) in terms {
        if col.len() != n {
            return Err(LabError::RaggedColumn {
                name: name.to_string(),
                got: col.len(),
                expected: n,
            });
        }
    }
    let names: Vec<&str> = std::iter::once(INTERCEPT)
        .chain(terms.iter().map(|(t, _)| *t))
        .collect();
    let design = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { terms[j - 1].1[i] });
    let col_norms: Vec<f64> = (0..p).map(|j| design.column(j).norm()).collect();

    let qr = design.clone().qr();
    let r = qr.r();
    for j in 0..p {
        if col_norms[j] == 0.0 || r[(j, j)].abs() <= RANK_TOL * col_norms[j] {
            return Err(LabError::SingularDesign {
                term: names[j].to_string(),
            });
        }
    }
    let target = DVector::from_column_slice(y);
    let qty = qr.q().transpose() * &target;
    let beta = r
        .solve_upper_triangular(&qty.rows(0, p).into_owned())
        .ok_or_else(|| LabError::SingularDesign {
            term: names[p - 1].to_string(),
        })?;

    let residuals = target - &design * &beta;
    let rss = residuals.norm_squared();
    let residual_variance = rss / (n - p) as f64;

    // (X'X)^-1 = R^-1 R^-T, so its diagonal is the squared row norms of R^-1.
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| LabError::SingularDesign {
            term: names[p - 1].to_string(),
        })?;
    let mut coefficients = IndexMap::with_capacity(p);
    let mut standard_errors = IndexMap::with_capacity(p);
    for (j, name) in names.iter().enumerate() {
        coefficients.insert(name.to_string(), beta[j]);
        let d = r_inv.row(j).norm_squared();
        standard_errors.insert(name.to_string(), (residual_variance * d).sqrt());
    }
    Ok(FitResult {
        coefficients,
        standard_errors,
        residual_variance,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 + 3.0 * v).collect();
        let fit = ols(&y, &[("x", &x)]).unwrap();
        assert!((fit.coef(INTERCEPT) - 2.0).abs() < 1e-12);
        assert!((fit.coef("x") - 3.0).abs() < 1e-12);
        assert!(fit.residual_variance < 1e-20);
        assert_eq!(fit.n, 20);
    }

    #[test]
    fn independent_regressor_is_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..2000).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<f64> = (0..2000).map(|_| rng.sample(StandardNormal)).collect();
        let fit = ols(&y, &[("x", &x)]).unwrap();
        assert!(fit.coef("x").abs() < 3.0 * fit.se("x"));
    }

    #[test]
    fn standard_errors_match_closed_form() {
        // Simple regression: se(slope) = sqrt(s^2 / Sxx).
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x: Vec<f64> = (0..500).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| 1.0 + 0.5 * v + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let fit = ols(&y, &[("x", &x)]).unwrap();
        let mean = x.iter().sum::<f64>() / 500.0;
        let sxx: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
        let expected = (fit.residual_variance / sxx).sqrt();
        assert!((fit.se("x") - expected).abs() < 1e-12);
    }

    #[test]
    fn collinear_columns_are_singular() {
        let x: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let diet = x.clone();
        let y: Vec<f64> = (0..10).map(f64::from).collect();
        let err = ols(&y, &[("X", &x), ("Diet", &diet)]).unwrap_err();
        assert!(matches!(err, LabError::SingularDesign { term } if term == "Diet"));
        let constant = vec![3.0; 10];
        assert!(matches!(
            ols(&y, &[("c", &constant)]),
            Err(LabError::SingularDesign { .. })
        ));
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(
            ols(&[1.0, 2.0], &[("x", &[0.0, 1.0])]),
            Err(LabError::TooFewObservations { .. })
        ));
    }
}
