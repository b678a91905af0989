//! Poisson distribution numerics and exact expected maxima of independent
//! Poisson collections.
//!
//! Every probability that could underflow is carried in log space. Tails
//! are summed directly from whichever side of the mean they lie on and the
//! opposite side is obtained by complement, so `cdf(λ, k) + survival(λ, k+1)`
//! is one to rounding for every argument.

mod dist;
mod pmf;
mod sample;
mod sum;
mod table;

pub use dist::DiscreteDist;
pub use sample::{sample_max, sample_poisson};
pub use sum::{log_add_exp, NeumaierSum};
pub(crate) use table::{group_loads, LoadTables, TableCache};

use crate::error::{Error, Result};

/// Base of the logarithm used in case thresholds and transition points.
/// Natural log; see `log_thr`.
pub const LOG_BASE: f64 = std::f64::consts::E;

/// Logarithm in [`LOG_BASE`].
#[inline]
pub fn log_thr(x: f64) -> f64 {
    if LOG_BASE == std::f64::consts::E {
        x.ln()
    } else {
        x.ln() / LOG_BASE.ln()
    }
}

/// A Poisson mean (job size or machine load).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize)]
#[serde(transparent)]
pub struct Rate(f64);

impl Rate {
    pub const ZERO: Rate = Rate(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(Rate(value))
        } else {
            Err(Error::InvalidRate(value))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Rate {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Rate::new(value)
    }
}

pub(crate) fn check_loads(loads: &[f64]) -> Result<()> {
    match loads.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        Some(&bad) => Err(Error::InvalidRate(bad)),
        None => Ok(()),
    }
}

/// `ln P[Poi(rate) = k]`.
pub fn log_pmf(rate: Rate, k: u64) -> f64 {
    pmf::ln_pmf_raw(rate.get(), k)
}

pub(crate) const REL_STOP: f64 = 1e-18;

/// `ln P[Poi(rate) <= k]` by downward summation; requires `0 <= k < rate`.
fn ln_lower_direct(rate: f64, k: u64) -> f64 {
    let mut sum = NeumaierSum::new();
    let mut r = 1.0;
    let mut j = k;
    loop {
        sum += r;
        if j == 0 {
            break;
        }
        r *= j as f64 / rate;
        j -= 1;
        if r < REL_STOP * sum.total() {
            break;
        }
    }
    pmf::ln_pmf_raw(rate, k) + sum.total().ln()
}

/// `ln P[Poi(rate) >= k]` by upward summation; requires `k > rate`.
fn ln_upper_direct(rate: f64, k: u64) -> f64 {
    let mut sum = NeumaierSum::new();
    let mut r = 1.0;
    let mut j = k;
    loop {
        sum += r;
        j += 1;
        r *= rate / j as f64;
        if r < REL_STOP * sum.total() {
            break;
        }
    }
    pmf::ln_pmf_raw(rate, k) + sum.total().ln()
}

/// `ln P[Poi(rate) <= k]`; `-inf` for `k < 0`.
pub fn ln_cdf(rate: Rate, k: i64) -> f64 {
    let l = rate.get();
    if k < 0 {
        return f64::NEG_INFINITY;
    }
    if l == 0.0 {
        return 0.0;
    }
    if (k as f64) < l {
        ln_lower_direct(l, k as u64)
    } else {
        (-ln_upper_direct(l, k as u64 + 1).exp()).ln_1p()
    }
}

/// `ln P[Poi(rate) >= k]`; zero for `k <= 0`.
pub fn ln_survival(rate: Rate, k: i64) -> f64 {
    let l = rate.get();
    if k <= 0 {
        return 0.0;
    }
    if l == 0.0 {
        return f64::NEG_INFINITY;
    }
    if (k as f64) > l {
        ln_upper_direct(l, k as u64)
    } else {
        (-(ln_lower_direct(l, k as u64 - 1).exp_m1())).ln()
    }
}

/// `P[Poi(rate) <= k]`.
pub fn cdf(rate: Rate, k: i64) -> f64 {
    let l = rate.get();
    if k < 0 {
        return 0.0;
    }
    if l == 0.0 {
        return 1.0;
    }
    if (k as f64) < l {
        ln_lower_direct(l, k as u64).exp()
    } else {
        1.0 - ln_upper_direct(l, k as u64 + 1).exp()
    }
}

/// `P[Poi(rate) >= k]`.
pub fn survival(rate: Rate, k: i64) -> f64 {
    let l = rate.get();
    if k <= 0 {
        return 1.0;
    }
    if l == 0.0 {
        return 0.0;
    }
    if (k as f64) > l {
        ln_upper_direct(l, k as u64).exp()
    } else {
        1.0 - ln_lower_direct(l, k as u64 - 1).exp()
    }
}

/// Canonne's bound `P[Poi(μ) >= μ + x] <= exp(-x² / (2(μ + x)))`.
pub fn poisson_upper_tail_bound(rate: Rate, x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidArgument(format!("tail offset must be positive, got {x}")));
    }
    Ok(tail_bound_raw(rate.get(), x))
}

#[inline]
pub(crate) fn tail_bound_raw(rate: f64, x: f64) -> f64 {
    (-(x * x) / (2.0 * (rate + x))).exp()
}

/// `P[max_j Poi(loads[j]) <= k]`, evaluated as the exponential of a
/// compensated sum of log-CDFs.
pub fn max_cdf(loads: &[f64], k: i64) -> Result<f64> {
    check_loads(loads)?;
    Ok(ln_max_cdf_unchecked(loads, k).exp())
}

pub(crate) fn ln_max_cdf_unchecked(loads: &[f64], k: i64) -> f64 {
    let mut s = NeumaierSum::new();
    for &l in loads {
        let v = ln_cdf(Rate(l), k);
        if v == f64::NEG_INFINITY {
            return v;
        }
        s += v;
    }
    s.total()
}

/// `E[max_j Poi(loads[j])]` truncated at a point where the neglected tail
/// is certified to be below `tail_tol * (1 + result)`.
pub fn expected_max(loads: &[f64], tail_tol: f64) -> Result<f64> {
    if loads.is_empty() {
        return Err(Error::EmptyLoads);
    }
    check_tol(tail_tol)?;
    check_loads(loads)?;
    Ok(LoadTables::from_loads(loads).expected_max(tail_tol))
}

/// Same as [`expected_max`] for loads given as `(rate, multiplicity)` groups.
pub fn expected_max_grouped(groups: &[(f64, u64)], tail_tol: f64) -> Result<f64> {
    if groups.iter().all(|g| g.1 == 0) {
        return Err(Error::EmptyLoads);
    }
    check_tol(tail_tol)?;
    for g in groups {
        Rate::new(g.0)?;
    }
    Ok(LoadTables::from_groups(groups).expected_max(tail_tol))
}

pub(crate) fn check_tol(tail_tol: f64) -> Result<()> {
    if tail_tol > 0.0 && tail_tol < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("tail tolerance must lie in (0, 1), got {tail_tol}")))
    }
}

/// Truncated form of `E[max(extra, max_j Poi(loads[j]))]`:
///
/// `Σ_{x=0}^{u-1} P[extra = x] (x + Σ_{y=x+1}^{u} P[max_j Poi(loads[j]) >= y])`.
///
/// Mass of `extra` at or above `u` is left to the caller.
pub fn mixed_expected_max(extra: &DiscreteDist, loads: &[f64], u: u64) -> Result<f64> {
    if u < 1 {
        return Err(Error::InvalidArgument("truncation point u must be at least 1".into()));
    }
    if extra.offset() < 0 {
        return Err(Error::InvalidArgument("extra variable must be supported on [0, inf)".into()));
    }
    check_loads(loads)?;
    Ok(LoadTables::from_loads(loads).mixed(extra, u))
}

/// Untruncated `E[max(extra, max_j Poi(loads[j]))]` for independent `extra`.
pub fn expected_max_with(extra: &DiscreteDist, loads: &[f64], tail_tol: f64) -> Result<f64> {
    check_tol(tail_tol)?;
    check_loads(loads)?;
    if extra.offset() < 0 {
        return Err(Error::InvalidArgument("extra variable must be supported on [0, inf)".into()));
    }
    Ok(LoadTables::from_loads(loads).expected_max_with(extra, tail_tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x: f64) -> Rate {
        Rate::new(x).unwrap()
    }

    #[test]
    fn rate_validation() {
        assert!(Rate::new(-1.0).is_err());
        assert!(Rate::new(f64::NAN).is_err());
        assert!(Rate::new(f64::INFINITY).is_err());
        assert!(Rate::new(0.0).is_ok());
    }

    #[test]
    fn log_pmf_examples() {
        assert_eq!(log_pmf(r(0.0), 0), 0.0);
        assert_eq!(log_pmf(r(0.0), 3), f64::NEG_INFINITY);
        assert!((log_pmf(r(1.0), 0) + 1.0).abs() < 1e-15);
        // -2.5 + 3 ln 2.5 - ln 6 at 50 digits
        let v = -1.542_887_273_605_589_805_261_895_723_076_669_058;
        assert!((log_pmf(r(2.5), 3) - v).abs() < 1e-14);
    }

    #[test]
    fn cdf_and_survival_examples() {
        assert_eq!(cdf(r(0.0), 0), 1.0);
        assert_eq!(cdf(r(3.0), -1), 0.0);
        assert_eq!(survival(r(3.0), 0), 1.0);
        assert_eq!(survival(r(3.0), -4), 1.0);
        assert!((survival(r(1.0), 1) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        // Σ_{k=3}^{200} e^{-1}/k!
        let oracle: f64 = (3..=200u64).map(|k| log_pmf(r(1.0), k).exp()).sum();
        assert!((survival(r(1.0), 3) - 0.080_301_397_071_394_196_011).abs() < 1e-15);
        assert!((survival(r(1.0), 3) - oracle).abs() < 1e-15);
    }

    #[test]
    fn tail_bound_examples() {
        assert!((poisson_upper_tail_bound(r(1.0), 1.0).unwrap() - (-0.25f64).exp()).abs() < 1e-15);
        assert!((poisson_upper_tail_bound(r(10.0), 10.0).unwrap() - (-2.5f64).exp()).abs() < 1e-15);
        let b = poisson_upper_tail_bound(r(4.0), 8.0).unwrap();
        assert!((b - (-64.0f64 / 24.0).exp()).abs() < 1e-15);
        assert!(survival(r(4.0), 12) <= b);
        assert!(poisson_upper_tail_bound(r(4.0), 0.0).is_err());
    }

    #[test]
    fn log_space_tails_far_from_mean() {
        // P[Poi(3000) <= 2000] underflows nowhere in log space.
        let v = ln_cdf(r(3000.0), 2000);
        assert!(v.is_finite() && v < -100.0);
        let w = ln_survival(r(5.0), 400);
        assert!(w.is_finite() && w < -1000.0);
        assert!((ln_survival(r(5.0), 400) - log_pmf(r(5.0), 400)).abs() < 0.02);
    }

    #[test]
    fn max_cdf_examples() {
        assert_eq!(max_cdf(&[0.0, 0.0, 0.0], 0).unwrap(), 1.0);
        for k in 0..6 {
            assert!((max_cdf(&[1.0], k).unwrap() - cdf(r(1.0), k)).abs() < 1e-15);
        }
        let direct: f64 = (0..=2u64).map(|k| log_pmf(r(1.0), k).exp()).sum();
        assert!((max_cdf(&[1.0, 1.0], 2).unwrap() - direct * direct).abs() < 1e-15);
        assert!(max_cdf(&[-1.0], 2).is_err());
    }

    #[test]
    fn expected_max_examples() {
        assert_eq!(expected_max(&[0.0], 1e-9).unwrap(), 0.0);
        for &l in &[1.0, 10.0, 100.0] {
            let v = expected_max(&[l], 1e-9).unwrap();
            assert!((v - l).abs() <= 1e-9 * l, "{l}: {v}");
        }
        // Σ_{k>=1} (1 - cdf(1, k-1)^2) at 50 digits
        let v = expected_max(&[1.0, 1.0], 1e-9).unwrap();
        assert!((v - 1.523_777_611_802_608_698_7).abs() < 1e-9);
        assert_eq!(expected_max(&[], 1e-9), Err(Error::EmptyLoads));
        assert!(expected_max(&[1.0], 0.0).is_err());
    }

    #[test]
    fn mixed_expected_max_examples() {
        let zero = DiscreteDist::point_mass(0);
        assert_eq!(mixed_expected_max(&zero, &[0.0], 1).unwrap(), 0.0);
        let five = DiscreteDist::point_mass(5);
        assert!((mixed_expected_max(&five, &[0.0], 10).unwrap() - 5.0).abs() < 1e-15);
        assert!(mixed_expected_max(&five, &[0.0], 0).is_err());

        let x = DiscreteDist::max_of_poissons(&[3.0]).unwrap();
        let a = mixed_expected_max(&x, &[1.0, 1.0], 50).unwrap();
        let b = expected_max(&[3.0, 1.0, 1.0], 1e-12).unwrap();
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}
