//! Precomputed log-CDF tables for repeated evaluation over consecutive `k`.

use std::collections::HashMap;
use std::sync::Arc;

use super::dist::DiscreteDist;
use super::pmf::ln_pmf_raw;
use super::sum::{log_add_exp, NeumaierSum};
use super::{ln_cdf, tail_bound_raw, Rate};

/// Probabilities below `e^{-760}` relative to the mode are dropped; they
/// are far below the smallest subnormal double.
const LN_CUTOFF: f64 = 760.0;

/// `ln P[Poi(rate) <= k]` for `k` in `[lo, hi)`. Above `hi` the CDF is one
/// to double precision; below `lo` queries fall back to direct summation.
#[derive(Debug, Clone)]
pub(crate) struct PoissonTable {
    rate: f64,
    lo: u64,
    ln_cdf: Vec<f64>,
}

impl PoissonTable {
    pub(crate) fn new(rate: f64) -> Self {
        if rate == 0.0 {
            return PoissonTable { rate, lo: 0, ln_cdf: Vec::new() };
        }
        let mode = rate.floor() as u64;
        let peak = ln_pmf_raw(rate, mode);
        let floor = peak - LN_CUTOFF;

        let mut lo = mode;
        while lo > 0 && ln_pmf_raw(rate, lo) > floor {
            lo -= 1;
        }
        let mut hi = mode + 1;
        while ln_pmf_raw(rate, hi) > floor {
            hi += 1;
        }
        let lnp: Vec<f64> = (lo..=hi).map(|k| ln_pmf_raw(rate, k)).collect();
        let idx = |k: u64| (k - lo) as usize;

        let mut table = vec![0.0; (hi - lo) as usize];
        // Lower side: cumulative from lo, seeded with the exact value at lo,
        // valid for k < rate.
        let mut k = lo;
        if (lo as f64) < rate {
            let mut acc = ln_cdf(Rate(rate), lo as i64);
            table[0] = acc;
            k += 1;
            while k < hi && (k as f64) < rate {
                acc = log_add_exp(acc, lnp[idx(k)]);
                table[idx(k)] = acc;
                k += 1;
            }
        }
        let first_upper = k;
        // Upper side: ln P[X >= k] from the top, complemented.
        let mut tail = f64::NEG_INFINITY;
        let mut j = hi;
        loop {
            tail = log_add_exp(tail, lnp[idx(j)]);
            // tail = ln P[X >= j]; cdf(j-1) = 1 - tail
            if j - 1 < first_upper {
                break;
            }
            table[idx(j - 1)] = (-tail.exp()).ln_1p();
            j -= 1;
        }
        PoissonTable { rate, lo, ln_cdf: table }
    }

    #[inline]
    pub(crate) fn ln_cdf(&self, k: i64) -> f64 {
        if k < 0 {
            return f64::NEG_INFINITY;
        }
        let k = k as u64;
        if k < self.lo {
            return ln_cdf(Rate(self.rate), k as i64);
        }
        let i = (k - self.lo) as usize;
        if i >= self.ln_cdf.len() {
            0.0
        } else {
            self.ln_cdf[i]
        }
    }

    /// First `k` at which the CDF is one to double precision.
    pub(crate) fn saturation(&self) -> u64 {
        self.lo + self.ln_cdf.len() as u64
    }
}

/// Tables keyed by rate, shared across many evaluations over the same
/// small set of load values.
#[derive(Debug, Default)]
pub(crate) struct TableCache {
    map: HashMap<u64, Arc<PoissonTable>>,
}

impl TableCache {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn get(&mut self, rate: f64) -> Arc<PoissonTable> {
        self.map.entry(rate.to_bits()).or_insert_with(|| Arc::new(PoissonTable::new(rate))).clone()
    }
}

/// Distinct loads with multiplicities, each backed by a table.
#[derive(Debug, Clone)]
pub(crate) struct LoadTables {
    groups: Vec<(Arc<PoissonTable>, f64)>,
    max_rate: f64,
}

impl LoadTables {
    pub(crate) fn from_loads(loads: &[f64]) -> Self {
        Self::from_groups(&group_loads(loads))
    }

    pub(crate) fn from_groups(groups: &[(f64, u64)]) -> Self {
        Self::build(groups, |rate| Arc::new(PoissonTable::new(rate)))
    }

    pub(crate) fn from_loads_cached(loads: &[f64], cache: &mut TableCache) -> Self {
        Self::build(&group_loads(loads), |rate| cache.get(rate))
    }

    fn build(groups: &[(f64, u64)], mut table: impl FnMut(f64) -> Arc<PoissonTable>) -> Self {
        let mut max_rate: f64 = 0.0;
        let groups = groups
            .iter()
            .filter(|g| g.1 > 0 && g.0 > 0.0)
            .map(|&(rate, count)| {
                max_rate = max_rate.max(rate);
                (table(rate), count as f64)
            })
            .collect();
        LoadTables { groups, max_rate }
    }

    pub(crate) fn max_rate(&self) -> f64 {
        self.max_rate
    }

    /// `ln P[max <= k]`.
    pub(crate) fn ln_max_cdf(&self, k: i64) -> f64 {
        let mut s = NeumaierSum::new();
        for (t, c) in &self.groups {
            let v = t.ln_cdf(k);
            if v == f64::NEG_INFINITY {
                return v;
            }
            s += c * v;
        }
        s.total()
    }

    /// `P[max >= y]`.
    #[inline]
    pub(crate) fn max_ge(&self, y: i64) -> f64 {
        -self.ln_max_cdf(y - 1).exp_m1()
    }

    /// First `y` beyond which `P[max >= y]` vanishes in double precision.
    pub(crate) fn saturation(&self) -> u64 {
        self.groups.iter().map(|g| g.0.saturation()).max().unwrap_or(0) + 1
    }

    /// Union-bound certificate on `Σ_{k > kmax} P[max >= k]`, using the
    /// tail bound at `kmax + 1` and the ratio `μ/(k+1)` between successive
    /// tail probabilities above the mean.
    pub(crate) fn tail_certificate(&self, kmax: u64) -> f64 {
        let k1 = (kmax + 1) as f64;
        self.groups
            .iter()
            .map(|(t, c)| {
                let mu = t.rate;
                let x = k1 - mu;
                if x <= 0.0 || mu / (k1 + 1.0) >= 1.0 {
                    return f64::INFINITY;
                }
                c * tail_bound_raw(mu, x) / (1.0 - mu / (k1 + 1.0))
            })
            .sum()
    }

    fn initial_cut(&self) -> u64 {
        let m = self.max_rate;
        (m + 10.0 * m.sqrt() + 50.0).ceil() as u64
    }

    /// Smallest truncation, found by doubling the margin over the largest
    /// load, whose certified tail lies below `tail_tol`. Certifying against
    /// `tail_tol` alone is at least as strict as `tail_tol * (1 + result)`.
    pub(crate) fn certified_cut(&self, tail_tol: f64) -> u64 {
        let mut kmax = self.initial_cut();
        loop {
            if self.tail_certificate(kmax) < tail_tol {
                return kmax;
            }
            let margin = (kmax as f64 - self.max_rate).max(16.0);
            kmax = (self.max_rate + 2.0 * margin).ceil() as u64;
        }
    }

    pub(crate) fn expected_max(&self, tail_tol: f64) -> f64 {
        if self.groups.is_empty() {
            return 0.0;
        }
        let kmax = self.certified_cut(tail_tol);
        let mut s = NeumaierSum::new();
        for k in 1..=kmax.min(self.saturation()) {
            s += self.max_ge(k as i64);
        }
        s.total()
    }

    /// `Σ_{x=0}^{u-1} P[extra=x] (x + Σ_{y=x+1}^{u} P[max >= y])`.
    pub(crate) fn mixed(&self, extra: &DiscreteDist, u: u64) -> f64 {
        let ylast = u.min(self.saturation());
        // prefix[y] = Σ_{y' = 1}^{y} P[max >= y'] for y <= ylast
        let mut prefix = Vec::with_capacity(ylast as usize + 1);
        prefix.push(0.0);
        let mut acc = NeumaierSum::new();
        for y in 1..=ylast {
            if !self.groups.is_empty() {
                acc += self.max_ge(y as i64);
            }
            prefix.push(acc.total());
        }
        let total = prefix[ylast as usize];
        let mut s = NeumaierSum::new();
        for (x, p) in extra.iter() {
            if x < 0 || x as u64 >= u {
                continue;
            }
            let x = x as u64;
            let below = prefix[x.min(ylast) as usize];
            s += p * (x as f64 + (total - below));
        }
        s.total()
    }

    pub(crate) fn expected_max_with(&self, extra: &DiscreteDist, tail_tol: f64) -> f64 {
        let kmax = if self.groups.is_empty() { 0 } else { self.certified_cut(tail_tol) };
        let u = kmax.max(extra.max_support().max(0) as u64 + 1);
        self.mixed(extra, u)
    }
}

/// Sorted distinct values with multiplicities.
pub(crate) fn group_loads(loads: &[f64]) -> Vec<(f64, u64)> {
    let mut sorted: Vec<f64> = loads.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut groups: Vec<(f64, u64)> = Vec::new();
    for l in sorted {
        match groups.last_mut() {
            Some(g) if g.0 == l => g.1 += 1,
            _ => groups.push((l, 1)),
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_matches_scalar_routine() {
        for &rate in &[0.01, 0.7, 3.0, 12.5, 40.0, 400.0, 3000.0] {
            let t = PoissonTable::new(rate);
            let top = (rate + 12.0 * rate.sqrt() + 40.0) as i64;
            for k in -1..top {
                let a = t.ln_cdf(k);
                let b = ln_cdf(Rate(rate), k);
                if b == f64::NEG_INFINITY {
                    assert_eq!(a, b);
                } else {
                    assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300) + 1e-300, "{rate} {k}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn certificate_decreases_with_cut() {
        let t = LoadTables::from_loads(&[5.0, 9.0, 9.0]);
        assert!(t.tail_certificate(60) > t.tail_certificate(80));
        assert!(t.tail_certificate(5).is_infinite());
    }
}
