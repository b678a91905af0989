//! Means are not effective job sizes: `m + 1` equal jobs on `m` machines,
//! where pairing jobs is optimal deterministically but loses in expectation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::poisson::expected_max_grouped;
use crate::transition::{t3_from_log, t3_identity_form};

use super::lemmas::EXACT_TOL;

/// Rate constant of the counterexample: jobs of size `β log(m-1)`.
pub const BETA: f64 = 1.0 / 1024.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub m: u64,
    pub lambda: f64,
    /// `E[max]` with `(m+1)/2` machines holding two jobs each.
    pub balanced: f64,
    /// `E[max]` with one machine holding two jobs and the rest one each.
    pub lopsided: f64,
    /// `balanced - lopsided`.
    pub gap: f64,
}

fn log_in(x: f64, base: f64) -> f64 {
    x.ln() / base.ln()
}

/// Both assignments of `m + 1` jobs of rate `λ = β log_base(m-1)`, evaluated
/// exactly. `m` must be odd and at least 3.
pub fn appendix_counterexample(m: u64, beta: f64, log_base: f64) -> Result<Counterexample> {
    if m < 3 || m % 2 == 0 {
        return Err(Error::InvalidArgument(format!("m must be odd and at least 3, got {m}")));
    }
    if !(beta > 0.0 && beta.is_finite()) || !(log_base > 1.0 && log_base.is_finite()) {
        return Err(Error::InvalidArgument(format!("need beta > 0 and log base > 1, got {beta}, {log_base}")));
    }
    let lambda = beta * log_in((m - 1) as f64, log_base);
    let balanced = expected_max_grouped(&[(2.0 * lambda, m.div_ceil(2))], EXACT_TOL)?;
    let lopsided = expected_max_grouped(&[(2.0 * lambda, 1), (lambda, m - 1)], EXACT_TOL)?;
    Ok(Counterexample { m, lambda, balanced, lopsided, gap: balanced - lopsided })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub m: u64,
    pub lambda: f64,
    pub delta: f64,
    /// `log m / (log(1/λ) + log log m)`.
    pub midpoint: f64,
    /// The same value through `λ log m^{1/λ} / log log m^{1/λ}`.
    pub midpoint_identity: f64,
    pub lower: f64,
    pub upper: f64,
    pub expected_max: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// `(1-δ)⌊T⌋ <= E[max of m i.i.d. Poi(λ)] <= ⌈(1+δ)T⌉` with `T` the midpoint
/// above, natural log. Needs `1/m <= λ <= ln m / 16`.
pub fn proposition_a1_check(m: u64, lambda: f64, delta: f64) -> Result<SandwichReport> {
    let mf = m as f64;
    let hi = mf.ln() / 16.0;
    let rel = 1e-12;
    if m < 2 || lambda < (1.0 / mf) * (1.0 - rel) || lambda > hi * (1.0 + rel) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} outside [1/m, ln m / 16] for m = {m}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    let midpoint = t3_from_log(mf.ln(), lambda)?;
    let midpoint_identity = t3_identity_form(m, lambda)?;
    let e = expected_max_grouped(&[(lambda, m)], EXACT_TOL)?;
    let lower = (1.0 - delta) * midpoint.floor();
    let upper = ((1.0 + delta) * midpoint).ceil();
    Ok(SandwichReport {
        m,
        lambda,
        delta,
        midpoint,
        midpoint_identity,
        lower,
        upper,
        expected_max: e,
        ratio: e / midpoint,
        pass: lower <= e && e <= upper,
    })
}

/// `points` log-spaced rates across `[1/m, ln m / 16]`, endpoints included.
pub fn sandwich_rates(m: u64, points: usize) -> Vec<f64> {
    let (a, b) = ((1.0 / m as f64).ln(), ((m as f64).ln() / 16.0).ln());
    match points {
        0 => Vec::new(),
        1 => vec![a.exp()],
        _ => (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect(),
    }
}

/// Fraction of the rates from [`sandwich_rates`] on which the sandwich holds.
pub fn sandwich_pass_fraction(m: u64, points: usize, delta: f64) -> Result<(f64, Vec<SandwichReport>)> {
    let reports: Vec<SandwichReport> =
        sandwich_rates(m, points).into_iter().map(|l| proposition_a1_check(m, l, delta)).collect::<Result<_>>()?;
    let passed = reports.iter().filter(|r| r.pass).count();
    Ok((passed as f64 / reports.len().max(1) as f64, reports))
}
