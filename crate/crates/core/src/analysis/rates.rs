use std::fmt;
use std::fmt::Write as _;

use serde::Serialize;

use super::ErrorBundle;
use crate::error::{Error, Result};

/// Errors at or below this are treated as exact reproduction.
pub const EXACT_THRESHOLD: f64 = 1e-10;

/// Minimum number of levels for a fitted rate; the least-squares slope uses
/// this many of the finest levels.
pub const MIN_LEVELS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Rate {
    /// Every level reproduced the exact solution.
    Exact,
    Fitted {
        /// Least-squares slope of `log e` against `log h` over the finest
        /// [`MIN_LEVELS`] levels.
        slope: f64,
        /// Slopes between consecutive levels, coarse to fine.
        pairwise: Vec<f64>,
    },
}

impl Rate {
    /// `true` when the rate is exact or the fitted slope reaches `min`.
    pub fn meets(&self, min: f64) -> bool {
        match self {
            Rate::Exact => true,
            Rate::Fitted { slope, .. } => *slope >= min,
        }
    }

    pub fn slope(&self) -> Option<f64> {
        match self {
            Rate::Exact => None,
            Rate::Fitted { slope, .. } => Some(*slope),
        }
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Exact => f.write_str("exact"),
            Rate::Fitted { slope, .. } => write!(f, "{slope:.4}"),
        }
    }
}

/// Least-squares slope of `log(errors)` against `log(h)`.
pub fn fit_slope(h: &[f64], errors: &[f64]) -> Result<f64> {
    if h.len() != errors.len() || h.len() < 2 {
        return Err(Error::Config(format!(
            "a slope needs at least two (h, error) pairs of equal length, got {} and {}",
            h.len(),
            errors.len()
        )));
    }
    if let Some(bad) = h.iter().chain(errors).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "cannot take the logarithm of {bad:e} in a rate fit"
        )));
    }
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Numerical("all mesh sizes are equal; the slope is undefined".into()));
    }
    Ok(sxy / sxx)
}

pub fn fit_rates(h: &[f64], errors: &[f64]) -> Result<Rate> {
    if h.len() < MIN_LEVELS {
        return Err(Error::Config(format!(
            "rate fitting needs at least {MIN_LEVELS} levels, got {}",
            h.len()
        )));
    }
    if errors.iter().all(|e| e.abs() <= EXACT_THRESHOLD) {
        return Ok(Rate::Exact);
    }
    let start = h.len() - MIN_LEVELS;
    let slope = fit_slope(&h[start..], &errors[start..])?;
    let pairwise = (1..h.len())
        .map(|i| fit_slope(&h[i - 1..=i], &errors[i - 1..=i]))
        .collect::<Result<Vec<_>>>()?;
    Ok(Rate::Fitted { slope, pairwise })
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelRecord {
    pub level: usize,
    pub h: f64,
    pub cells: usize,
    pub errors: ErrorBundle,
    /// `None` when the pressure space exceeds the dense eigensolve cap.
    pub beta_h: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateSummary {
    pub triple_bar: Rate,
    pub vel_l2_proj: Rate,
    pub vel_l2_true: Rate,
    pub pres_l2: Rate,
    pub pres_l2_true: Rate,
    /// `min beta_h / max beta_h` over the levels where it was computed.
    pub beta_ratio: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRecord {
    pub levels: Vec<LevelRecord>,
    pub rates: RateSummary,
}

impl ConvergenceRecord {
    pub fn new(levels: Vec<LevelRecord>) -> Result<Self> {
        let h: Vec<f64> = levels.iter().map(|l| l.h).collect();
        let column = |f: fn(&ErrorBundle) -> f64| -> Result<Rate> {
            let e: Vec<f64> = levels.iter().map(|l| f(&l.errors)).collect();
            fit_rates(&h, &e)
        };
        let betas: Vec<f64> = levels.iter().filter_map(|l| l.beta_h).collect();
        let beta_ratio = (!betas.is_empty()).then(|| {
            let min = betas.iter().copied().fold(f64::INFINITY, f64::min);
            let max = betas.iter().copied().fold(0.0, f64::max);
            min / max
        });
        let rates = RateSummary {
            triple_bar: column(|b| b.triple_bar)?,
            vel_l2_proj: column(|b| b.vel_l2_proj)?,
            vel_l2_true: column(|b| b.vel_l2_true)?,
            pres_l2: column(|b| b.pres_l2)?,
            pres_l2_true: column(|b| b.pres_l2_true)?,
            beta_ratio,
        };
        Ok(ConvergenceRecord { levels, rates })
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("level,h,cells,triple_bar,vel_l2_proj,vel_l2_true,pres_l2,pres_l2_true,beta_h\n");
        for l in &self.levels {
            let e = &l.errors;
            let beta = l.beta_h.map(|b| format!("{b:.12e}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{:.12e},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
                l.level, l.h, l.cells, e.triple_bar, e.vel_l2_proj, e.vel_l2_true, e.pres_l2, e.pres_l2_true, beta
            );
        }
        let r = &self.rates;
        let beta = r.beta_ratio.map(|b| format!("{b:.4}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "rates,,,{},{},{},{},{},{}",
            r.triple_bar, r.vel_l2_proj, r.vel_l2_true, r.pres_l2, r.pres_l2_true, beta
        );
        out
    }
}
