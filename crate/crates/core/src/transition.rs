//! Case classification and the transition points near which maxima of many
//! Poissons concentrate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::poisson::{self, log_thr, DiscreteDist, Rate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CaseTag {
    /// Every job was peeled onto its own machine.
    AllPeeled,
    Case1,
    Case2,
    Case3,
    Case4,
    Case5,
    #[serde(rename = "DP")]
    Dp,
}

impl CaseTag {
    pub fn name(self) -> &'static str {
        match self {
            CaseTag::AllPeeled => "all-peeled",
            CaseTag::Case1 => "case1",
            CaseTag::Case2 => "case2",
            CaseTag::Case3 => "case3",
            CaseTag::Case4 => "case4",
            CaseTag::Case5 => "case5",
            CaseTag::Dp => "dp",
        }
    }
}

impl std::fmt::Display for CaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaseLabel {
    pub tag: CaseTag,
    pub mu: f64,
    pub m1: usize,
    pub delta: f64,
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 0.1 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("delta must lie in (0, 1/10], got {delta}")))
    }
}

/// The individual guards, each including its machine-count condition.
/// Doubly exponential thresholds are compared after taking logarithms.
pub mod guards {
    use super::log_thr;
    use std::f64::consts::LN_2;

    /// `ln m1 / 2^{1/δ+1}` without forming the power.
    fn half_power_scaled(lm: f64, delta: f64) -> f64 {
        if lm <= 0.0 {
            return 0.0;
        }
        (lm.ln() - (1.0 / delta + 1.0) * LN_2).exp()
    }

    pub fn case1(mu: f64, m1: usize, delta: f64) -> bool {
        mu > 6.0 / (delta * delta) * log_thr(m1 as f64)
    }

    pub fn case2(mu: f64, m1: usize, delta: f64) -> bool {
        let lm = log_thr(m1 as f64);
        // m1 >= 2^{2^{2/δ}}  <=>  ln ln m1 >= (2/δ) ln 2 + ln ln 2
        let big = (m1 as f64).ln().ln() >= 2.0 / delta * LN_2 + LN_2.ln();
        big && half_power_scaled(lm, delta) < mu && mu <= 6.0 / (delta * delta) * lm
    }

    pub fn case3(mu: f64, m1: usize, delta: f64) -> bool {
        let lm = log_thr(m1 as f64);
        // m1 >= 2^{(2/δ) log(2/δ)}
        let big = (m1 as f64).ln() >= 2.0 / delta * log_thr(2.0 / delta) * LN_2;
        let lower = (-delta * (m1 as f64).ln()).exp();
        big && lower < mu && mu <= half_power_scaled(lm, delta)
    }

    pub fn case4(mu: f64, m1: usize, delta: f64) -> bool {
        let m = m1 as f64;
        let big = m.ln() >= 100.0 / (delta * delta) * LN_2;
        big && 4.0 * log_thr(m) / m < mu && mu <= (-delta * m.ln()).exp()
    }

    pub fn case5(mu: f64, m1: usize, delta: f64) -> bool {
        let m = m1 as f64;
        let l = log_thr(1.0 / delta);
        m >= 1000.0 / delta * l * l && mu <= 4.0 * log_thr(m) / m
    }
}

/// First branch whose guard holds, in the solver's dispatch order: the
/// deterministic branch (Cases 1 and 3 share it), then Cases 2, 4, 5, and
/// the dynamic program when none applies.
pub fn classify(mu: f64, m1: usize, delta: f64) -> Result<CaseLabel> {
    check_delta(delta)?;
    Rate::new(mu)?;
    if m1 == 0 {
        return Err(Error::InvalidArgument("classification needs at least one machine".into()));
    }
    let tag = if guards::case1(mu, m1, delta) {
        CaseTag::Case1
    } else if guards::case3(mu, m1, delta) {
        CaseTag::Case3
    } else if guards::case2(mu, m1, delta) {
        CaseTag::Case2
    } else if guards::case4(mu, m1, delta) {
        CaseTag::Case4
    } else if guards::case5(mu, m1, delta) {
        CaseTag::Case5
    } else {
        CaseTag::Dp
    };
    Ok(CaseLabel { tag, mu, m1, delta })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TransitionKind {
    T2,
    T3,
    T4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionPoint {
    pub kind: TransitionKind,
    pub value: f64,
}

fn survival_sum(groups: &[(f64, u64)], t: i64) -> f64 {
    groups.iter().map(|&(l, c)| c as f64 * poisson::survival(Rate::new(l).unwrap(), t)).sum()
}

/// Largest integer `t` with `Σ_j P[Poi(μ_j) >= t] >= 1/3`.
pub fn t2_of(loads: &[f64]) -> Result<i64> {
    if loads.is_empty() {
        return Err(Error::EmptyLoads);
    }
    poisson::check_loads(loads)?;
    let groups = poisson::group_loads(loads);
    let holds = |t: i64| survival_sum(&groups, t) >= 1.0 / 3.0;
    // holds(0) since every machine contributes P[X >= 0] = 1.
    let mut lo = 0i64;
    let mut hi = 1i64.max(groups.last().unwrap().0.ceil() as i64);
    while holds(hi) {
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    debug_assert!(holds(lo) && !holds(lo + 1));
    Ok(lo)
}

fn check_m(m: u64) -> Result<()> {
    if m < 3 {
        return Err(Error::InvalidArgument(format!("transition points need m >= 3, got {m}")));
    }
    Ok(())
}

/// `log m / (log(1/μ) + log log m)`.
pub fn t3_of(m: u64, mu: f64) -> Result<f64> {
    check_m(m)?;
    t3_from_log(log_thr(m as f64), mu)
}

/// [`t3_of`] written in terms of `log m`, so non-integer `m` can be probed.
pub fn t3_from_log(lm: f64, mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!("t3 needs a positive mean, got {mu}")));
    }
    let denom = log_thr(1.0 / mu) + log_thr(lm);
    if !(denom > 0.0) {
        return Err(Error::InvalidArgument(format!("t3 denominator {denom} is not positive")));
    }
    Ok(lm / denom)
}

/// `μ · log(m^{1/μ}) / log log(m^{1/μ})`, algebraically equal to [`t3_of`].
pub fn t3_identity_form(m: u64, mu: f64) -> Result<f64> {
    t3_of(m, mu)?;
    let inner = log_thr(m as f64) / mu;
    Ok(mu * inner / log_thr(inner))
}

/// `log m / (log(4/μ) + log log m)`.
pub fn gamma4_of(m: u64, mu: f64) -> Result<f64> {
    check_m(m)?;
    gamma4_from_log(log_thr(m as f64), mu)
}

pub fn gamma4_from_log(lm: f64, mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!("gamma4 needs a positive mean, got {mu}")));
    }
    gamma4_from_log_mean(lm, mu.ln())
}

/// [`gamma4_from_log`] with the mean also given by its logarithm, for means
/// too small to represent. `log_mu` is a natural logarithm.
pub fn gamma4_from_log_mean(lm: f64, log_mu: f64) -> Result<f64> {
    let denom = (4f64.ln() - log_mu) / log_thr(std::f64::consts::E) + log_thr(lm);
    if !(denom > 0.0) || log_mu.is_nan() {
        return Err(Error::InvalidArgument(format!("gamma4 denominator {denom} is not positive")));
    }
    Ok(lm / denom)
}

pub fn t4_of(m: u64, mu: f64) -> Result<i64> {
    Ok(gamma4_of(m, mu)?.ceil() as i64)
}

/// `2 <= t4 <= 1/δ + 1`, which holds whenever the Case 4 guard does.
pub fn check_t4_bounds(t4: i64, delta: f64) -> Result<()> {
    if t4 >= 2 && t4 as f64 <= 1.0 / delta + 1.0 {
        Ok(())
    } else {
        Err(Error::HypothesesViolated(format!("t4 = {t4} outside [2, 1/δ + 1] for δ = {delta}")))
    }
}

/// `W` on `{t4 - 1, t4}` with `P[W = t4 - 1] = Π_j P[Poi(μ_j) <= t4 - 1]`.
pub fn bernoulli_w_case4(loads: &[f64], t4: i64) -> Result<DiscreteDist> {
    if t4 < 1 {
        return Err(Error::InvalidArgument(format!("t4 must be at least 1, got {t4}")));
    }
    let p = poisson::max_cdf(loads, t4 - 1)?;
    DiscreteDist::two_point(t4 - 1, p)
}

/// `W` on `{0, 1}` with `P[W = 1] = 1 - e^{-Σ μ_j}`.
pub fn bernoulli_w_case5(loads: &[f64]) -> Result<DiscreteDist> {
    poisson::check_loads(loads)?;
    let total: f64 = loads.iter().sum();
    DiscreteDist::two_point(0, (-total).exp())
}
