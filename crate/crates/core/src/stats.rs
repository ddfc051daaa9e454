//! Goodness-of-fit helpers for the statistical checks on encoder output.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of observed counts against expected
/// probabilities. Cells with zero expected probability must be empty and
/// are left out of the degrees of freedom.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<ChiSquareTest> {
    if observed.len() != expected.len() {
        return Err(Error::param("observed and expected lengths differ"));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::param("no observations"));
    }
    let total = total as f64;
    let mut statistic = 0.0;
    let mut cells = 0usize;
    for (&o, &p) in observed.iter().zip(expected) {
        if p <= 0.0 {
            if o > 0 {
                return Ok(ChiSquareTest { statistic: f64::INFINITY, degrees_of_freedom: 0, p_value: 0.0 });
            }
            continue;
        }
        let e = p * total;
        statistic += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    let degrees_of_freedom = cells.saturating_sub(1).max(1);
    let dist = ChiSquared::new(degrees_of_freedom as f64).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(ChiSquareTest { statistic, degrees_of_freedom, p_value: dist.sf(statistic) })
}

/// Standard deviation of a binomial proportion estimate.
pub fn binomial_sd(p: f64, trials: f64) -> f64 {
    (p * (1.0 - p) / trials).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_fit_has_unit_p_value() {
        let t = chi_square_gof(&[25, 25, 50], &[0.25, 0.25, 0.5]).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.degrees_of_freedom, 2);
        assert!((t.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gross_misfit_is_rejected() {
        let t = chi_square_gof(&[900, 100], &[0.5, 0.5]).unwrap();
        assert!(t.p_value < 1e-10);
    }

    #[test]
    fn impossible_cell_fails() {
        let t = chi_square_gof(&[1, 9], &[0.0, 1.0]).unwrap();
        assert_eq!(t.p_value, 0.0);
        assert!(chi_square_gof(&[0, 0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn known_quantile() {
        // 95th percentile of chi-square with 1 degree of freedom
        let t = chi_square_gof(&[0, 0], &[0.5, 0.5]);
        assert!(t.is_err());
        let stat = 3.841458820694124;
        let dist = ChiSquared::new(1.0).unwrap();
        assert!((dist.sf(stat) - 0.05).abs() < 1e-9);
    }
}
